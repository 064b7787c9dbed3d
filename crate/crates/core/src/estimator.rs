//! Codebook search for the LoS channel of one device.
//!
//! For each candidate angle the gain is estimated from the first pilot, the
//! candidate channel is then scored by the spectral efficiency it predicts
//! for the second pilot. [`algorithm1`] picks the best candidate on one
//! subcarrier; [`algorithm2`] averages the score over all OFDM subcarriers
//! before picking, exploiting that the AoD is frequency independent.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{steering_vector, ArrayGeometry, NoiseModel};
use crate::dft::PermutedDftFamily;
use crate::receiver::{apply_conj_combiner, combine, estimated_sinr, inverse_channel, pilot_sinr, se_bits};
use crate::transceiver::{Pilots, ReceivedBlock};
use crate::{CVector, Error, Result};

/// Quantized angles `start + q span / Q` and their array responses on every
/// subcarrier. All subcarriers share the angle grid.
#[derive(Debug, Clone)]
pub struct Codebook {
    q_levels: usize,
    range_start: f64,
    range_span: f64,
    angles: Vec<f64>,
    // [m][q]
    vectors: Vec<Vec<CVector>>,
    // entrywise 1 / conj(a), [m][q]
    weights: Vec<Vec<CVector>>,
}

impl Codebook {
    pub fn new(
        geometry: &ArrayGeometry,
        q_levels: usize,
        range_start: f64,
        range_span: f64,
    ) -> Result<Self> {
        if q_levels == 0 {
            return Err(Error::InvalidArgument("codebook needs at least one level"));
        }
        if !(range_span.is_finite() && range_span > 0.0 && range_start.is_finite()) {
            return Err(Error::InvalidArgument("codebook range must be finite and nonempty"));
        }
        let angles: Vec<f64> = (0..q_levels)
            .map(|q| range_start + q as f64 / q_levels as f64 * range_span)
            .collect();
        let mut vectors = Vec::with_capacity(geometry.n_subcarriers);
        let mut weights = Vec::with_capacity(geometry.n_subcarriers);
        for m in 0..geometry.n_subcarriers {
            let ratio = geometry.wavelength_ratio(m)?;
            let row: Vec<CVector> = angles
                .iter()
                .map(|&a| steering_vector(geometry.n_antennas, ratio, a))
                .collect();
            weights.push(
                row.iter()
                    .map(inverse_channel)
                    .collect::<Result<Vec<_>>>()?,
            );
            vectors.push(row);
        }
        Ok(Self {
            q_levels,
            range_start,
            range_span,
            angles,
            vectors,
            weights,
        })
    }

    /// `Delta_q = -pi + 2 pi q / Q`.
    pub fn full_range(geometry: &ArrayGeometry, q_levels: usize) -> Result<Self> {
        Self::new(geometry, q_levels, -PI, 2.0 * PI)
    }

    /// Grid over the configured AoD domain `[0, rho pi)`.
    pub fn angular_domain(geometry: &ArrayGeometry, q_levels: usize, rho: f64) -> Result<Self> {
        Self::new(geometry, q_levels, 0.0, rho * PI)
    }

    pub fn q_levels(&self) -> usize {
        self.q_levels
    }

    pub fn range(&self) -> (f64, f64) {
        (self.range_start, self.range_span)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_subcarriers(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, m: usize, q: usize) -> Result<&CVector> {
        self.vectors
            .get(m)
            .ok_or(Error::SubcarrierOutOfRange {
                index: m,
                count: self.vectors.len(),
            })?
            .get(q)
            .ok_or(Error::IndexOutOfRange {
                index: q,
                size: self.q_levels,
            })
    }

    fn weight(&self, m: usize, q: usize) -> &CVector {
        &self.weights[m][q]
    }
}

/// Output of a codebook search for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub device: usize,
    /// Zero-based codebook index.
    pub q_star: usize,
    /// One gain per subcarrier searched.
    pub alpha_hat: Vec<Complex64>,
    /// `alpha_hat[m] a_m(Delta_q_star)`.
    pub h_hat: Vec<CVector>,
    /// Score of `q_star`: SE for a single subcarrier, mean SE for the joint search.
    pub score: f64,
    /// Complex multiplications of the search, from [`complexity_psi`].
    pub multiply_count: u64,
}

fn pilot_scale(noise: &NoiseModel, n: usize) -> Result<f64> {
    if !(noise.tx_power > 0.0) {
        return Err(Error::InvalidArgument("transmit power must be positive"));
    }
    Ok((noise.tx_power * n as f64).sqrt())
}

/// Gain estimate for candidate `q` from the first pilot (slot `N - 2`).
///
/// `conj(alpha_hat) = d(a_m(Delta_q), F_(N-2), y) / (sqrt(p_t N) pilot)`.
pub fn estimate_gain(
    codebook: &Codebook,
    q: usize,
    block: &ReceivedBlock,
    family: &PermutedDftFamily,
    pilot: Complex64,
    noise: &NoiseModel,
) -> Result<Complex64> {
    if pilot == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidPilot);
    }
    let n = family.size();
    let a = codebook.vector(block.subcarrier, q)?;
    let d = combine(a, family, n - 2, &block.y)?;
    Ok((d / (pilot * pilot_scale(noise, n)?)).conj())
}

/// Predicted SE `log2(1 + gamma_hat)` of candidate `alpha_hat a_m(Delta_q)`,
/// scored on the second pilot (slot `N - 1`).
#[allow(clippy::too_many_arguments)]
pub fn score_candidate(
    codebook: &Codebook,
    q: usize,
    block: &ReceivedBlock,
    family: &PermutedDftFamily,
    alpha_hat: Complex64,
    pilot: Complex64,
    noise: &NoiseModel,
    cap: f64,
) -> Result<f64> {
    let h_hat = codebook.vector(block.subcarrier, q)? * alpha_hat;
    let report = estimated_sinr(&h_hat, family, &block.y, pilot, noise)?;
    Ok(se_bits(report.sinr, cap))
}

/// Per-block state shared by every candidate: both pilot combiners applied
/// to `y` once.
struct BlockScorer {
    subcarrier: usize,
    first: CVector,
    second: CVector,
    desired_first: Complex64,
    desired_second: Complex64,
}

impl BlockScorer {
    fn new(
        block: &ReceivedBlock,
        family: &PermutedDftFamily,
        pilots: Pilots,
        noise: &NoiseModel,
    ) -> Result<Self> {
        let n = family.size();
        if n < 3 {
            return Err(Error::FrameTooSmall(n));
        }
        if pilots.first == Complex64::new(0.0, 0.0) || pilots.second == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidPilot);
        }
        let scale = pilot_scale(noise, n)?;
        Ok(Self {
            subcarrier: block.subcarrier,
            first: apply_conj_combiner(family, n - 2, &block.y)?,
            second: apply_conj_combiner(family, n - 1, &block.y)?,
            desired_first: pilots.first * scale,
            desired_second: pilots.second * scale,
        })
    }

    /// `(alpha_hat, se_bits)` of candidate `q`.
    fn score(&self, codebook: &Codebook, q: usize, cap: f64) -> (Complex64, f64) {
        let w = codebook.weight(self.subcarrier, q);
        let alpha_conj = w.dot(&self.first) / self.desired_first;
        if alpha_conj.norm() < f64::MIN_POSITIVE {
            // candidate channel is identically zero
            return (Complex64::new(0.0, 0.0), 0.0);
        }
        let combined = w.dot(&self.second) / alpha_conj;
        let sinr = pilot_sinr(self.desired_second, combined - self.desired_second);
        (alpha_conj.conj(), se_bits(sinr, cap))
    }
}

/// Scores of every `(subcarrier, candidate)` pair for one device.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    device: usize,
    q_levels: usize,
    subcarriers: Vec<usize>,
    // [row][q]
    se: Vec<Vec<f64>>,
    alpha: Vec<Vec<Complex64>>,
}

/// Evaluates every candidate on every block. `pilots[i]` belongs to `blocks[i]`.
pub fn score_table(
    blocks: &[ReceivedBlock],
    family: &PermutedDftFamily,
    codebook: &Codebook,
    pilots: &[Pilots],
    noise: &NoiseModel,
    cap: f64,
) -> Result<ScoreTable> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument("no received blocks"));
    }
    if pilots.len() != blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: blocks.len(),
            actual: pilots.len(),
        });
    }
    let device = blocks[0].device;
    let q_levels = codebook.q_levels();
    let mut se = Vec::with_capacity(blocks.len());
    let mut alpha = Vec::with_capacity(blocks.len());
    for (block, p) in blocks.iter().zip(pilots) {
        if block.device != device {
            return Err(Error::InvalidArgument("blocks belong to different devices"));
        }
        if block.subcarrier >= codebook.n_subcarriers() {
            return Err(Error::SubcarrierOutOfRange {
                index: block.subcarrier,
                count: codebook.n_subcarriers(),
            });
        }
        let scorer = BlockScorer::new(block, family, *p, noise)?;
        let (a, s): (Vec<_>, Vec<_>) = (0..q_levels).map(|q| scorer.score(codebook, q, cap)).unzip();
        alpha.push(a);
        se.push(s);
    }
    Ok(ScoreTable {
        device,
        q_levels,
        subcarriers: blocks.iter().map(|b| b.subcarrier).collect(),
        se,
        alpha,
    })
}

/// Relative gap below which two scores count as tied. Codebooks over a full
/// period contain pairs of angles with equal sines, whose scores then differ
/// only by rounding.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest score. Ties (within [`TIE_TOLERANCE`]) keep the lower
/// index and NaN never wins; an all-NaN input selects index 0.
pub fn select_best(scores: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best: Option<(usize, f64)> = None;
    for (q, s) in scores.into_iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if s <= b + TIE_TOLERANCE * b.abs() => {}
            _ => best = Some((q, s)),
        }
    }
    best.unwrap_or((0, f64::NAN))
}

impl ScoreTable {
    pub fn rows(&self) -> usize {
        self.se.len()
    }

    pub fn se(&self, row: usize, q: usize) -> f64 {
        self.se[row][q]
    }

    pub fn alpha(&self, row: usize, q: usize) -> Complex64 {
        self.alpha[row][q]
    }

    /// Best candidate of one block, as selected by [`algorithm1`].
    pub fn select_row(&self, row: usize, codebook: &Codebook) -> Result<EstimationResult> {
        let (q_star, score) = select_best(self.se[row].iter().copied());
        let alpha = self.alpha[row][q_star];
        let h_hat = codebook.vector(self.subcarriers[row], q_star)? * alpha;
        Ok(EstimationResult {
            device: self.device,
            q_star,
            alpha_hat: vec![alpha],
            h_hat: vec![h_hat],
            score,
            multiply_count: 0,
        })
    }

    /// Best candidate by mean SE over all rows, as selected by [`algorithm2`].
    pub fn select_joint(&self, codebook: &Codebook, symbol_span: f64) -> Result<EstimationResult> {
        let means = (0..self.q_levels).map(|q| {
            // sum in subcarrier order so the result is reproducible
            self.se.iter().map(|row| row[q]).sum::<f64>() / symbol_span
        });
        let (q_star, score) = select_best(means);
        let alpha_hat: Vec<Complex64> = self.alpha.iter().map(|row| row[q_star]).collect();
        let h_hat = alpha_hat
            .iter()
            .zip(&self.subcarriers)
            .map(|(a, &m)| Ok(codebook.vector(m, q_star)? * *a))
            .collect::<Result<_>>()?;
        Ok(EstimationResult {
            device: self.device,
            q_star,
            alpha_hat,
            h_hat,
            score,
            multiply_count: 0,
        })
    }
}

/// Single-block codebook search.
pub fn algorithm1(
    block: &ReceivedBlock,
    family: &PermutedDftFamily,
    codebook: &Codebook,
    pilots: Pilots,
    noise: &NoiseModel,
    cap: f64,
) -> Result<EstimationResult> {
    let table = score_table(std::slice::from_ref(block), family, codebook, &[pilots], noise, cap)?;
    let mut result = table.select_row(0, codebook)?;
    result.multiply_count = complexity_psi(family.size(), 1, codebook.q_levels())?;
    Ok(result)
}

/// Joint search over all subcarriers; `blocks[m]` must be subcarrier `m`.
pub fn algorithm2(
    blocks: &[ReceivedBlock],
    family: &PermutedDftFamily,
    codebook: &Codebook,
    pilots: &[Pilots],
    noise: &NoiseModel,
    geometry: &ArrayGeometry,
    cap: f64,
) -> Result<EstimationResult> {
    if blocks.len() != geometry.n_subcarriers {
        return Err(Error::DimensionMismatch {
            expected: geometry.n_subcarriers,
            actual: blocks.len(),
        });
    }
    if let Some((m, _)) = blocks.iter().enumerate().find(|(m, b)| b.subcarrier != *m) {
        return Err(Error::SubcarrierOutOfRange {
            index: m,
            count: blocks.len(),
        });
    }
    let table = score_table(blocks, family, codebook, pilots, noise, cap)?;
    let mut result = table.select_joint(codebook, geometry.symbol_span())?;
    result.multiply_count =
        complexity_psi(family.size(), geometry.n_subcarriers, codebook.q_levels())?;
    Ok(result)
}

/// `M (2 N^2 + Q N)` complex multiplications.
pub fn complexity_psi(n: usize, m: usize, q_levels: usize) -> Result<u64> {
    if n == 0 || m == 0 || q_levels == 0 {
        return Err(Error::InvalidArgument("complexity inputs must be positive"));
    }
    let n = n as u64;
    let two_n_sq = n.checked_mul(n).and_then(|x| x.checked_mul(2));
    let qn = (q_levels as u64).checked_mul(n);
    two_n_sq
        .zip(qn)
        .and_then(|(a, b)| a.checked_add(b))
        .and_then(|x| x.checked_mul(m as u64))
        .ok_or(Error::Overflow)
}
