//! The per-device linear combiner and the SINR / spectral-efficiency metrics.
//!
//! Device `k` forms `d = h~^T F_k^* y` with `h~ = 1 / conj(h)` (entrywise)
//! and `F_k` the `k`-th permuted DFT matrix. With the true channel the
//! desired gain is exactly `N` and every interference gain is zero, for any
//! channel with nonzero entries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelRealization, NoiseModel};
use crate::dft::PermutedDftFamily;
use crate::{CVector, Error, Result};

/// Default cap applied to an infinite SINR before taking `log2(1 + sinr)`.
pub const SINR_CAP: f64 = 1e30;

/// Entries with magnitude below this are treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Entrywise `1 / conj(h)`.
pub fn inverse_channel(h: &CVector) -> Result<CVector> {
    if let Some(p) = h.iter().position(|x| x.norm() < DEGENERATE_TOL) {
        return Err(Error::DegenerateChannel(p));
    }
    Ok(h.map(|x| x.conj().inv()))
}

/// `F_k^* y`, shared by every combine against the same block and combiner.
pub fn apply_conj_combiner(family: &PermutedDftFamily, k: usize, y: &CVector) -> Result<CVector> {
    let f = family.member(k)?;
    if y.len() != f.ncols() {
        return Err(Error::DimensionMismatch {
            expected: f.ncols(),
            actual: y.len(),
        });
    }
    Ok(f.conjugate() * y)
}

/// `d(h_hat, F_k, y) = h~^T F_k^* y`.
pub fn combine(h_hat: &CVector, family: &PermutedDftFamily, k: usize, y: &CVector) -> Result<Complex64> {
    let inv = inverse_channel(h_hat)?;
    let c = apply_conj_combiner(family, k, y)?;
    if inv.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            actual: inv.len(),
        });
    }
    Ok(inv.dot(&c))
}

/// Combiner output split into its desired and interference parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerOutput {
    pub value: Complex64,
    pub desired_gain: Complex64,
    /// `(k2, v(h_hat, F_k, F_k2))` for every `k2 != k`.
    pub interference: Vec<(usize, Complex64)>,
}

/// Combines `y` and, using ground-truth channel access, reports the gains of
/// every symbol slot. In a noiseless block
/// `value = sqrt(p_t / N) (s(k) g + sum_k2 s(k2) v_k2)`.
pub fn combine_diagnostic(
    h_hat: &CVector,
    h_true: &CVector,
    family: &PermutedDftFamily,
    k: usize,
    y: &CVector,
) -> Result<CombinerOutput> {
    let value = combine(h_hat, family, k, y)?;
    let desired_gain = cross_gain(h_hat, h_true, family, k, k)?;
    let interference = (0..family.size())
        .filter(|&k2| k2 != k)
        .map(|k2| cross_gain(h_hat, h_true, family, k, k2).map(|v| (k2, v)))
        .collect::<Result<_>>()?;
    Ok(CombinerOutput {
        value,
        desired_gain,
        interference,
    })
}

/// `h~^T F_k^* F_k2^T conj(h_true)` with `h~` built from `h_hat`.
///
/// Dense route: forms `F_k2^T conj(h)` then applies `F_k^*`.
pub fn cross_gain(
    h_hat: &CVector,
    h_true: &CVector,
    family: &PermutedDftFamily,
    k: usize,
    k2: usize,
) -> Result<Complex64> {
    let inv = inverse_channel(h_hat)?;
    let fk = family.member(k)?;
    let fk2 = family.member(k2)?;
    if h_true.len() != fk.nrows() || inv.len() != fk.nrows() {
        return Err(Error::DimensionMismatch {
            expected: fk.nrows(),
            actual: h_true.len().min(inv.len()),
        });
    }
    let t = fk2.transpose() * h_true.conjugate();
    let t = fk.conjugate() * t;
    Ok(inv.dot(&t))
}

/// Desired-signal gain `g(h, F_k)`; equals `N` for any admissible `h`.
pub fn desired_gain(h: &CVector, family: &PermutedDftFamily, k: usize) -> Result<Complex64> {
    cross_gain(h, h, family, k, k)
}

/// Interference gain `v(h, F_k, F_k2)`; equals zero for any admissible `h`.
pub fn interference_gain(
    h: &CVector,
    family: &PermutedDftFamily,
    k: usize,
    k2: usize,
) -> Result<Complex64> {
    if k == k2 {
        return Err(Error::InvalidArgument("interference gain needs k != k2"));
    }
    cross_gain(h, h, family, k, k2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SinrKind {
    /// Full-CSIR SINR of the combiner, `p_t N / (sigma^2 sum 1/|h_p|^2)`.
    ExactFullCsir,
    /// Pilot-based estimate from a single received block.
    Estimated,
    /// `p_t ||h||^2 / (N sigma^2)`.
    NarrowbandBound,
    /// `p_t ||h||^2 / sigma^2`, as printed for the per-subcarrier maximum.
    WidebandBound,
    /// Expected SINR when combining with an estimate instead of the true channel.
    Achieved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrReport {
    pub sinr: f64,
    pub se_bits: f64,
    pub kind: SinrKind,
}

impl SinrReport {
    pub fn new(sinr: f64, kind: SinrKind) -> Self {
        Self::with_cap(sinr, kind, SINR_CAP)
    }

    pub fn with_cap(sinr: f64, kind: SinrKind, cap: f64) -> Self {
        Self {
            sinr,
            se_bits: se_bits(sinr, cap),
            kind,
        }
    }
}

/// `log2(1 + min(sinr, cap))`.
pub fn se_bits(sinr: f64, cap: f64) -> f64 {
    (1.0 + sinr.min(cap)).log2()
}

fn require_noise(noise: &NoiseModel) -> Result<()> {
    if noise.variance <= 0.0 {
        return Err(Error::ZeroNoiseVariance);
    }
    Ok(())
}

pub fn exact_sinr(h: &CVector, noise: &NoiseModel) -> Result<SinrReport> {
    require_noise(noise)?;
    let inv = inverse_channel(h)?;
    let n = h.len() as f64;
    let sinr = noise.tx_power * n / (noise.variance * inv.norm_squared());
    Ok(SinrReport::new(sinr, SinrKind::ExactFullCsir))
}

pub fn sinr_bound(h: &CVector, noise: &NoiseModel) -> Result<SinrReport> {
    require_noise(noise)?;
    inverse_channel(h)?;
    let n = h.len() as f64;
    let sinr = noise.tx_power * h.norm_squared() / (n * noise.variance);
    Ok(SinrReport::new(sinr, SinrKind::NarrowbandBound))
}

pub fn wideband_bound(h: &CVector, noise: &NoiseModel) -> Result<SinrReport> {
    require_noise(noise)?;
    let sinr = noise.tx_power * h.norm_squared() / noise.variance;
    Ok(SinrReport::new(sinr, SinrKind::WidebandBound))
}

/// Pilot-based SINR estimate from the last symbol slot.
///
/// `P = sqrt(p_t N) pilot`, `I = d(h_hat, F_(N-1), y) - P`, and the estimate
/// is `|P|^2 / |I|^2` from this single observation. A zero residual yields
/// `f64::INFINITY`.
pub fn estimated_sinr(
    h_hat: &CVector,
    family: &PermutedDftFamily,
    y: &CVector,
    pilot: Complex64,
    noise: &NoiseModel,
) -> Result<SinrReport> {
    let n = family.size();
    let desired = pilot * (noise.tx_power * n as f64).sqrt();
    let residual = combine(h_hat, family, n - 1, y)? - desired;
    Ok(SinrReport::new(
        pilot_sinr(desired, residual),
        SinrKind::Estimated,
    ))
}

pub(crate) fn pilot_sinr(desired: Complex64, residual: Complex64) -> f64 {
    let r = residual.norm_sqr();
    if r == 0.0 {
        f64::INFINITY
    } else {
        desired.norm_sqr() / r
    }
}

/// Expected SINR of the combiner built from `h_hat` on a channel `h_true`,
/// averaging over unit-power symbols and noise.
///
/// With `r = conj(h_true) / conj(h_hat)` the desired gain is `sum(r)` and the
/// interference gains are the remaining DFT coefficients of `r`, so the total
/// interference energy is `N ||r||^2 - |sum(r)|^2 = N ||r - mean(r)||^2`.
/// The centered form avoids cancellation when `h_hat` is close to `h_true`.
/// The result does not depend on the device index.
pub fn achieved_sinr(h_hat: &CVector, h_true: &CVector, noise: &NoiseModel) -> Result<SinrReport> {
    let inv = inverse_channel(h_hat)?;
    if inv.len() != h_true.len() {
        return Err(Error::DimensionMismatch {
            expected: h_true.len(),
            actual: inv.len(),
        });
    }
    let n = inv.len() as f64;
    let r = inv.component_mul(&h_true.conjugate());
    let sum = r.sum();
    let g = sum.norm_sqr();
    let mean = sum / n;
    let interference = n * r.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>();
    let per_symbol = noise.tx_power / n;
    let denom = per_symbol * interference + noise.variance * inv.norm_squared();
    let sinr = if denom == 0.0 {
        f64::INFINITY
    } else {
        per_symbol * g / denom
    };
    Ok(SinrReport::new(sinr, SinrKind::Achieved))
}

/// Which SINR expression the maximum sum-SE uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundNormalization {
    /// `p_t ||h||^2 / (N sigma^2)`: the bound of the `1/sqrt(N)`-normalized
    /// frame that is actually transmitted.
    #[default]
    PerSlot,
    /// `p_t ||h||^2 / sigma^2`, taken literally.
    Literal,
}

fn check_layout(channels: &[ChannelRealization], geometry: &ArrayGeometry) -> Result<()> {
    for ch in channels {
        let count = ch.per_subcarrier().len();
        if count != geometry.n_subcarriers {
            return Err(Error::DimensionMismatch {
                expected: geometry.n_subcarriers,
                actual: count,
            });
        }
    }
    Ok(())
}

/// Per-device maximum SE, `(1/(M + L_CP)) sum_m log2(1 + bound_(m,k))`.
pub fn per_device_se_max(
    channels: &[ChannelRealization],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    normalization: BoundNormalization,
) -> Result<Vec<f64>> {
    check_layout(channels, geometry)?;
    require_noise(noise)?;
    let span = geometry.symbol_span();
    channels
        .iter()
        .map(|ch| {
            let mut total = 0.0;
            for h in ch.per_subcarrier() {
                let report = match normalization {
                    BoundNormalization::PerSlot => sinr_bound(h, noise)?,
                    BoundNormalization::Literal => wideband_bound(h, noise)?,
                };
                total += report.se_bits;
            }
            Ok(total / span)
        })
        .collect()
}

pub fn sum_se_max(
    channels: &[ChannelRealization],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    normalization: BoundNormalization,
) -> Result<f64> {
    Ok(per_device_se_max(channels, noise, geometry, normalization)?
        .iter()
        .sum())
}

/// Per-device achieved SE with estimates `h_hat[k][m]`.
pub fn per_device_se_achieved(
    h_hat: &[Vec<CVector>],
    channels: &[ChannelRealization],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    cap: f64,
) -> Result<Vec<f64>> {
    check_layout(channels, geometry)?;
    if h_hat.len() != channels.len() {
        return Err(Error::DimensionMismatch {
            expected: channels.len(),
            actual: h_hat.len(),
        });
    }
    let span = geometry.symbol_span();
    h_hat
        .iter()
        .zip(channels)
        .map(|(est, ch)| {
            if est.len() != geometry.n_subcarriers {
                return Err(Error::DimensionMismatch {
                    expected: geometry.n_subcarriers,
                    actual: est.len(),
                });
            }
            let mut total = 0.0;
            for (e, h) in est.iter().zip(ch.per_subcarrier()) {
                total += se_bits(achieved_sinr(e, h, noise)?.sinr, cap);
            }
            Ok(total / span)
        })
        .collect()
}

pub fn sum_se_achieved(
    h_hat: &[Vec<CVector>],
    channels: &[ChannelRealization],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    cap: f64,
) -> Result<f64> {
    Ok(per_device_se_achieved(h_hat, channels, noise, geometry, cap)?
        .iter()
        .sum())
}
