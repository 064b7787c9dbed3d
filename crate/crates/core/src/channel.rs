//! Uniform linear array geometry and mmWave LoS/NLoS channel realizations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{db_to_linear, linear_to_db, CVector, Error, Result};

/// Half-wavelength ULA with optional OFDM subcarrier layout.
///
/// Narrowband operation is `n_subcarriers = 1`, `bandwidth_hz = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub n_antennas: usize,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub n_subcarriers: usize,
    pub cp_len: usize,
}

impl ArrayGeometry {
    pub fn new(
        n_antennas: usize,
        carrier_freq_hz: f64,
        bandwidth_hz: f64,
        n_subcarriers: usize,
        cp_len: usize,
    ) -> Result<Self> {
        let geometry = Self {
            n_antennas,
            carrier_freq_hz,
            bandwidth_hz,
            n_subcarriers,
            cp_len,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn narrowband(n_antennas: usize, carrier_freq_hz: f64) -> Result<Self> {
        Self::new(n_antennas, carrier_freq_hz, 0.0, 1, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::Geometry("at least one antenna is required".into()));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::Geometry("at least one subcarrier is required".into()));
        }
        if !(self.carrier_freq_hz.is_finite() && self.carrier_freq_hz > 0.0) {
            return Err(Error::Geometry("carrier frequency must be positive".into()));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz >= 0.0) {
            return Err(Error::Geometry("bandwidth must be nonnegative".into()));
        }
        if self.subcarrier_freq(0)? <= 0.0 {
            return Err(Error::Geometry(
                "lowest subcarrier frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `f_m = f_c + B (2m - 1 - M) / (2M)` for one-based `m`; `m` here is zero-based.
    pub fn subcarrier_freq(&self, m: usize) -> Result<f64> {
        let count = self.n_subcarriers;
        if m >= count {
            return Err(Error::SubcarrierOutOfRange { index: m, count });
        }
        let offset = (2.0 * m as f64 + 1.0 - count as f64) / (2.0 * count as f64);
        Ok(self.carrier_freq_hz + self.bandwidth_hz * offset)
    }

    /// `lambda_c / lambda_m = f_m / f_c`.
    pub fn wavelength_ratio(&self, m: usize) -> Result<f64> {
        Ok(self.subcarrier_freq(m)? / self.carrier_freq_hz)
    }

    /// Rate penalty `M + L_CP` applied to per-subcarrier spectral efficiencies.
    pub fn symbol_span(&self) -> f64 {
        (self.n_subcarriers + self.cp_len) as f64
    }
}

/// Steering vector with entries `exp(i pi ratio p sin(theta))`.
pub fn steering_vector(n: usize, wavelength_ratio: f64, theta: f64) -> CVector {
    let phase = PI * wavelength_ratio * theta.sin();
    CVector::from_fn(n, |p, _| Complex64::from_polar(1.0, phase * p as f64))
}

/// Array response on subcarrier `m` (zero-based).
pub fn array_response(geometry: &ArrayGeometry, theta: f64, m: usize) -> Result<CVector> {
    let ratio = geometry.wavelength_ratio(m)?;
    Ok(steering_vector(geometry.n_antennas, ratio, theta))
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Statistics of the channel draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProfile {
    pub los_var: f64,
    pub nlos_var: f64,
    pub n_nlos: usize,
    /// AoDs are uniform on `[0, angular_range)`; this is `rho * pi`.
    pub angular_range: f64,
}

impl ChannelProfile {
    pub fn los_only(angular_range: f64) -> Self {
        Self {
            los_var: 1.0,
            nlos_var: 0.0,
            n_nlos: 0,
            angular_range,
        }
    }

    /// `E[||h||^2] / N`.
    pub fn mean_gain(&self) -> f64 {
        self.los_var + self.n_nlos as f64 * self.nlos_var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlosPath {
    pub aod: f64,
    /// One gain per subcarrier.
    pub gains: Vec<Complex64>,
}

/// One device's channel on every subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub device: usize,
    pub los_aod: f64,
    /// One gain per subcarrier.
    pub los_gain: Vec<Complex64>,
    pub nlos_paths: Vec<NlosPath>,
    h: Vec<CVector>,
}

impl ChannelRealization {
    /// Materializes `h_m = alpha_m a_m(theta) + sum_l beta_(m,l) a_m(theta_l)`.
    pub fn from_paths(
        geometry: &ArrayGeometry,
        device: usize,
        los_aod: f64,
        los_gain: Vec<Complex64>,
        nlos_paths: Vec<NlosPath>,
    ) -> Result<Self> {
        let count = geometry.n_subcarriers;
        if los_gain.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                actual: los_gain.len(),
            });
        }
        if let Some(bad) = nlos_paths.iter().find(|p| p.gains.len() != count) {
            return Err(Error::DimensionMismatch {
                expected: count,
                actual: bad.gains.len(),
            });
        }
        let n = geometry.n_antennas;
        let mut h = Vec::with_capacity(count);
        for (m, alpha) in los_gain.iter().enumerate() {
            let ratio = geometry.wavelength_ratio(m)?;
            let mut hm = steering_vector(n, ratio, los_aod) * *alpha;
            for path in &nlos_paths {
                hm += steering_vector(n, ratio, path.aod) * path.gains[m];
            }
            h.push(hm);
        }
        Ok(Self {
            device,
            los_aod,
            los_gain,
            nlos_paths,
            h,
        })
    }

    /// Pure LoS channel with the same gain on every subcarrier.
    pub fn los(geometry: &ArrayGeometry, device: usize, gain: Complex64, aod: f64) -> Result<Self> {
        Self::from_paths(
            geometry,
            device,
            aod,
            vec![gain; geometry.n_subcarriers],
            Vec::new(),
        )
    }

    /// Wraps an arbitrary single-subcarrier channel vector (no path structure).
    pub fn from_vector(device: usize, h: CVector) -> Self {
        Self {
            device,
            los_aod: 0.0,
            los_gain: Vec::new(),
            nlos_paths: Vec::new(),
            h: vec![h],
        }
    }

    pub fn h(&self, m: usize) -> Result<&CVector> {
        self.h.get(m).ok_or(Error::SubcarrierOutOfRange {
            index: m,
            count: self.h.len(),
        })
    }

    pub fn per_subcarrier(&self) -> &[CVector] {
        &self.h
    }
}

/// Draws one device's channel.
///
/// AoDs are shared across subcarriers; gains are drawn independently per
/// subcarrier. Draw order: LoS AoD, LoS gains, then for each NLoS path its
/// AoD followed by its gains.
pub fn sample_channel<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    device: usize,
    rng: &mut R,
    profile: &ChannelProfile,
) -> ChannelRealization {
    let count = geometry.n_subcarriers;
    let los_aod = rng.random::<f64>() * profile.angular_range;
    let los_gain = (0..count)
        .map(|_| complex_gaussian(rng, profile.los_var))
        .collect();
    let nlos_paths = (0..profile.n_nlos)
        .map(|_| {
            let aod = rng.random::<f64>() * profile.angular_range;
            let gains = (0..count)
                .map(|_| complex_gaussian(rng, profile.nlos_var))
                .collect();
            NlosPath { aod, gains }
        })
        .collect();
    ChannelRealization::from_paths(geometry, device, los_aod, los_gain, nlos_paths)
        .expect("sampled gains match the subcarrier count")
}

/// Noise variance and transmit power, both linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub variance: f64,
    pub tx_power: f64,
}

impl NoiseModel {
    pub fn new(variance: f64, tx_power: f64) -> Result<Self> {
        if !(variance >= 0.0 && tx_power >= 0.0) {
            return Err(Error::Config(
                "noise variance and transmit power must be nonnegative".into(),
            ));
        }
        Ok(Self { variance, tx_power })
    }

    pub fn from_db(sigma2_db: f64, tx_power_db: f64) -> Result<Self> {
        Self::new(db_to_linear(sigma2_db), db_to_linear(tx_power_db))
    }

    pub fn noiseless(tx_power: f64) -> Self {
        Self {
            variance: 0.0,
            tx_power,
        }
    }
}

/// Received SNR in dB for the CIRCLE transmit vector.
///
/// With a unitary precoder and unit-power symbols `E[|h^H x|^2] = ||h||^2 / N`,
/// so the SNR is `p_t ||h||^2 / (N sigma^2)`.
pub fn snr_db(noise: &NoiseModel, h: &CVector) -> Result<f64> {
    if noise.variance <= 0.0 {
        return Err(Error::ZeroNoiseVariance);
    }
    let n = h.len() as f64;
    Ok(linear_to_db(noise.tx_power * h.norm_squared() / (n * noise.variance)))
}

/// Transmit power that yields `snr_db` on average over the channel profile.
pub fn tx_power_for_snr(snr_db: f64, noise_variance: f64, profile: &ChannelProfile) -> f64 {
    noise_variance * db_to_linear(snr_db) / profile.mean_gain()
}
