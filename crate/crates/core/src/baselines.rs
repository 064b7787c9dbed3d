//! Full-CSIT comparison precoders: MRT, ZF and WMMSE.
//!
//! Each device `k` on subcarrier `m` gets a unit-norm vector `f_k`, and the
//! received signal is `c h_k^H sum_j f_j s_j + z` with `c = (N/K) sqrt(p_t)`
//! (or `sqrt(N/K) sqrt(p_t)` under [`CsitNormalization::Power`]).

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelRealization, NoiseModel};
use crate::{CMatrix, CVector, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsitKind {
    Mrt,
    Zf,
    Wmmse,
}

/// How the `N / K` factor scales the received signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsitNormalization {
    /// Amplitude factor `N / K`.
    #[default]
    Amplitude,
    /// Amplitude factor `sqrt(N / K)`.
    Power,
}

impl CsitNormalization {
    pub fn amplitude(self, n: usize, k: usize) -> f64 {
        let ratio = n as f64 / k as f64;
        match self {
            CsitNormalization::Amplitude => ratio,
            CsitNormalization::Power => ratio.sqrt(),
        }
    }
}

/// Unit-norm precoding vectors of all devices on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct CsitPrecoder {
    pub kind: CsitKind,
    pub vectors: Vec<CVector>,
}

impl CsitPrecoder {
    fn normalized(kind: CsitKind, vectors: Vec<CVector>) -> Result<Self> {
        let vectors = vectors
            .into_iter()
            .map(|v| {
                let norm = v.norm();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(Error::ZeroChannel);
                }
                Ok(v.unscale(norm))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, vectors })
    }
}

fn check_channels(channels: &[CVector]) -> Result<usize> {
    let n = channels.first().ok_or(Error::InvalidArgument("no devices"))?.len();
    for h in channels {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: h.len(),
            });
        }
        if h.norm() == 0.0 {
            return Err(Error::ZeroChannel);
        }
    }
    Ok(n)
}

/// `f_k = h_k / ||h_k||`.
pub fn mrt(channels: &[CVector]) -> Result<CsitPrecoder> {
    check_channels(channels)?;
    CsitPrecoder::normalized(CsitKind::Mrt, channels.to_vec())
}

/// Columns of the pseudo-inverse of the stacked channel `H` (rows `h_k^H`),
/// each scaled to unit norm.
pub fn zf(channels: &[CVector]) -> Result<CsitPrecoder> {
    let n = check_channels(channels)?;
    let k = channels.len();
    if k > n {
        return Err(Error::SingularChannel);
    }
    // H^H has the channels as columns
    let hh = CMatrix::from_columns(channels);
    let svd = hh.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::SingularChannel);
    }
    let gram = hh.adjoint() * &hh;
    let inv = gram.cholesky().ok_or(Error::SingularChannel)?.inverse();
    let f = hh * inv;
    CsitPrecoder::normalized(
        CsitKind::Zf,
        f.column_iter().map(|c| c.into_owned()).collect(),
    )
}

/// SINR of every device under the CSIT received-signal model.
pub fn csit_sinrs(
    precoder: &CsitPrecoder,
    channels: &[CVector],
    noise: &NoiseModel,
    normalization: CsitNormalization,
) -> Result<Vec<f64>> {
    let n = check_channels(channels)?;
    let k = channels.len();
    if precoder.vectors.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: precoder.vectors.len(),
        });
    }
    let c2 = normalization.amplitude(n, k).powi(2) * noise.tx_power;
    Ok(gain_sinrs(&precoder.vectors, channels, c2, noise.variance))
}

// |h_k^H f_j|^2 with amplitude^2 = c2
fn gain_sinrs(vectors: &[CVector], channels: &[CVector], c2: f64, sigma2: f64) -> Vec<f64> {
    channels
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let mut desired = 0.0;
            let mut interference = 0.0;
            for (j, f) in vectors.iter().enumerate() {
                let g = c2 * h.dotc(f).norm_sqr();
                if j == k {
                    desired = g;
                } else {
                    interference += g;
                }
            }
            let denom = interference + sigma2;
            if denom == 0.0 {
                if desired == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                desired / denom
            }
        })
        .collect()
}

fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|s| (1.0 + s).log2()).sum()
}

/// Per-device rates `log2(1 + SINR)` on one subcarrier.
pub fn csit_rates(
    precoder: &CsitPrecoder,
    channels: &[CVector],
    noise: &NoiseModel,
    normalization: CsitNormalization,
) -> Result<Vec<f64>> {
    Ok(csit_sinrs(precoder, channels, noise, normalization)?
        .iter()
        .map(|s| (1.0 + s).log2())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmmseOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseOutcome {
    /// Final precoder after per-device renormalization.
    pub precoder: CsitPrecoder,
    /// Sum rate of every sum-power iterate, starting with the MRT start point.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Weighted MMSE with unit weights, alternating MMSE receivers, MSE weights
/// and precoders under the total power `K`, started from MRT.
///
/// Column `k` of an iterate is `(A + mu I)^-1 h_k` times a scalar that can
/// underflow when the sum-power solution switches a device off, so the
/// returned precoder takes the unscaled directions `(A + mu I)^-1 h_k` of the
/// best iterate and normalizes each to unit norm.
pub fn wmmse(
    channels: &[CVector],
    noise: &NoiseModel,
    normalization: CsitNormalization,
    options: WmmseOptions,
) -> Result<WmmseOutcome> {
    let n = check_channels(channels)?;
    if !(noise.variance > 0.0) {
        return Err(Error::ZeroNoiseVariance);
    }
    let k = channels.len();
    let c = normalization.amplitude(n, k) * noise.tx_power.sqrt();
    let eff: Vec<CVector> = channels.iter().map(|h| h * Complex64::new(c, 0.0)).collect();
    let sigma2 = noise.variance;
    let power = k as f64;

    let mut v = mrt(channels)?.vectors;
    let mut history = vec![sum_rate(&gain_sinrs(&v, &eff, 1.0, sigma2))];
    // directions of the best iterate; MRT for the starting point
    let mut best = (history[0], v.clone());
    let stacked = CMatrix::from_columns(&eff);
    let mut converged = false;

    for _ in 0..options.max_iters {
        // receivers a_j and weights w_j
        let mut a = Vec::with_capacity(k);
        let mut w = Vec::with_capacity(k);
        for (j, h) in eff.iter().enumerate() {
            let total: f64 = v.iter().map(|f| h.dotc(f).norm_sqr()).sum::<f64>() + sigma2;
            let g = h.dotc(&v[j]);
            a.push(g.conj() / total);
            let mse = 1.0 - g.norm_sqr() / total;
            w.push(1.0 / mse.max(f64::MIN_POSITIVE));
        }
        let mut cov = CMatrix::zeros(n, n);
        for (j, h) in eff.iter().enumerate() {
            cov += h * h.adjoint() * Complex64::new(w[j] * a[j].norm_sqr(), 0.0);
        }
        let rhs = CMatrix::from_columns(
            &eff.iter()
                .enumerate()
                .map(|(j, h)| h * (a[j].conj() * w[j]))
                .collect::<Vec<_>>(),
        );
        let (next, directions) = solve_power_constrained(cov, &rhs, &stacked, power);
        v = next;

        let rate = sum_rate(&gain_sinrs(&v, &eff, 1.0, sigma2));
        let prev = *history.last().expect("nonempty");
        history.push(rate);
        if rate > best.0 {
            best = (rate, directions);
        }
        if (rate - prev).abs() < options.tol {
            converged = true;
            break;
        }
    }
    Ok(WmmseOutcome {
        precoder: CsitPrecoder::normalized(CsitKind::Wmmse, best.1)?,
        history,
        converged,
    })
}

/// `V = (A + mu I)^-1 B` with the smallest `mu >= 0` meeting `||V||_F^2 <= power`,
/// plus `(A + mu I)^-1 D` with the same `mu`.
fn solve_power_constrained(a: CMatrix, b: &CMatrix, d: &CMatrix, power: f64) -> (Vec<CVector>, Vec<CVector>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let proj = eig.eigenvectors.adjoint() * b;
    let row_energy: Vec<f64> = (0..n).map(|i| proj.row(i).norm_squared()).collect();
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let energy = |mu: f64| -> f64 {
        row_energy
            .iter()
            .zip(&lambda)
            .map(|(e, l)| e / (l + mu).powi(2))
            .sum()
    };
    let lambda_max = lambda.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * lambda_max.max(1e-300);
    let mu = if lambda.iter().all(|&l| l > floor) && energy(0.0) <= power {
        0.0
    } else {
        let mut lo = 0.0;
        let mut hi = lambda_max.max(1.0);
        while energy(hi) > power {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if energy(mid) > power {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let apply = |p: &CMatrix| -> Vec<CVector> {
        let scaled = CMatrix::from_fn(n, p.ncols(), |i, j| p[(i, j)] / Complex64::new(lambda[i] + mu, 0.0));
        (&eig.eigenvectors * scaled)
            .column_iter()
            .map(|c| c.into_owned())
            .collect()
    };
    (apply(&proj), apply(&(eig.eigenvectors.adjoint() * d)))
}

/// Builds the precoder of one kind for one subcarrier.
pub fn build(
    kind: CsitKind,
    channels: &[CVector],
    noise: &NoiseModel,
    normalization: CsitNormalization,
) -> Result<CsitPrecoder> {
    match kind {
        CsitKind::Mrt => mrt(channels),
        CsitKind::Zf => zf(channels),
        CsitKind::Wmmse => Ok(wmmse(channels, noise, normalization, WmmseOptions::default())?.precoder),
    }
}

/// Per-device SE `(1/(M + L_CP)) sum_m R_(m,k)` with one precoder per subcarrier.
pub fn per_device_csit_se(
    precoders: &[CsitPrecoder],
    channels: &[ChannelRealization],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    normalization: CsitNormalization,
) -> Result<Vec<f64>> {
    if precoders.len() != geometry.n_subcarriers {
        return Err(Error::DimensionMismatch {
            expected: geometry.n_subcarriers,
            actual: precoders.len(),
        });
    }
    let mut totals = vec![0.0; channels.len()];
    for (m, pre) in precoders.iter().enumerate() {
        let hs = channels
            .iter()
            .map(|ch| ch.h(m).cloned())
            .collect::<Result<Vec<_>>>()?;
        for (t, r) in totals.iter_mut().zip(csit_rates(pre, &hs, noise, normalization)?) {
            *t += r;
        }
    }
    let span = geometry.symbol_span();
    Ok(totals.into_iter().map(|t| t / span).collect())
}

pub fn csit_sum_se(
    precoders: &[CsitPrecoder],
    channels: &[ChannelRealization],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    normalization: CsitNormalization,
) -> Result<f64> {
    Ok(per_device_csit_se(precoders, channels, noise, geometry, normalization)?
        .iter()
        .sum())
}
