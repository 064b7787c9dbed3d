use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{CodebookSpan, CsirMode, ExperimentConfig, Method};
use crate::baselines::{self, CsitKind, CsitPrecoder};
use crate::channel::{sample_channel, ArrayGeometry, ChannelProfile, ChannelRealization, NoiseModel, tx_power_for_snr};
use crate::dft::{build_family, build_precoders, PermutedDftFamily, PrecoderSet};
use crate::estimator::{algorithm1, algorithm2, complexity_psi, Codebook};
use crate::receiver::{per_device_se_achieved, per_device_se_max, SINR_CAP};
use crate::rng::{stream, Stream};
use crate::transceiver::{make_frame, receive, transmit_frame, Pilots, ReceivedBlock};
use crate::{db_to_linear, CVector, Error, Result};

/// Metrics of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub point: usize,
    pub sweep_value: f64,
    pub trial_index: usize,
    pub method: Method,
    pub sum_se: f64,
    pub per_device_se: Vec<f64>,
    /// Selected codebook index per device; empty for methods without a search.
    /// Per-subcarrier searches report subcarrier 0.
    pub q_star: Vec<usize>,
    pub psi: u64,
    pub wall_time_s: f64,
}

/// Everything about a sweep point that does not change across trials.
pub struct Scenario {
    pub config: ExperimentConfig,
    pub geometry: ArrayGeometry,
    pub profile: ChannelProfile,
    pub noise: NoiseModel,
    family: Option<PermutedDftFamily>,
    precoders: Option<PrecoderSet>,
    codebook: Option<Codebook>,
}

impl Scenario {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let geometry = config.geometry()?;
        let profile = ChannelProfile {
            los_var: 1.0,
            nlos_var: db_to_linear(config.delta2_db),
            n_nlos: config.n_nlos,
            angular_range: config.rho * PI,
        };
        let sigma2 = db_to_linear(config.sigma2_db);
        let tx_power = match (config.snr_db, config.p_t_db) {
            (Some(snr), None) => tx_power_for_snr(snr, sigma2, &profile),
            (None, Some(pt)) => db_to_linear(pt),
            _ => return Err(Error::Config("set exactly one of snr_db and p_t_db".into())),
        };
        let noise = NoiseModel::new(sigma2, tx_power)?;
        let estimating = config.csir == CsirMode::Estimated
            && config
                .methods
                .iter()
                .any(|m| matches!(m, Method::Circle | Method::RCircle));
        let (family, precoders, codebook) = if estimating {
            let family = build_family(config.n_antennas)?;
            let precoders = build_precoders(&family);
            let codebook = match config.codebook {
                CodebookSpan::AodRange => Codebook::angular_domain(&geometry, config.q_levels, config.rho)?,
                CodebookSpan::Full => Codebook::full_range(&geometry, config.q_levels)?,
            };
            (Some(family), Some(precoders), Some(codebook))
        } else {
            (None, None, None)
        };
        Ok(Self {
            config: config.clone(),
            geometry,
            profile,
            noise,
            family,
            precoders,
            codebook,
        })
    }

    fn channels(&self, point: usize, trial: usize) -> Vec<ChannelRealization> {
        let seed = self.config.seed;
        (0..self.config.n_devices())
            .map(|k| {
                let mut rng = stream(seed, &[Stream::Channel as u64, point as u64, trial as u64, k as u64]);
                sample_channel(&self.geometry, k, &mut rng, &self.profile)
            })
            .collect()
    }

    /// Received blocks `[k][m]` and the pilots of each subcarrier.
    fn blocks(
        &self,
        point: usize,
        trial: usize,
        channels: &[ChannelRealization],
    ) -> Result<(Vec<Vec<ReceivedBlock>>, Vec<Pilots>)> {
        let seed = self.config.seed;
        let precoders = self.precoders.as_ref().expect("built for estimation");
        let n = self.config.n_antennas;
        let mut per_device = vec![Vec::with_capacity(self.geometry.n_subcarriers); channels.len()];
        let mut pilots = Vec::with_capacity(self.geometry.n_subcarriers);
        for m in 0..self.geometry.n_subcarriers {
            let mut rng = stream(seed, &[Stream::Frame as u64, point as u64, trial as u64, m as u64]);
            let frame = make_frame(n, self.config.symbol_source, &mut rng)?;
            let xs = transmit_frame(precoders, &frame)?;
            pilots.push(frame.pilots());
            for (k, ch) in channels.iter().enumerate() {
                let mut rng = stream(
                    seed,
                    &[Stream::Noise as u64, point as u64, trial as u64, k as u64, m as u64],
                );
                per_device[k].push(receive(ch, m, &xs, &self.noise, &mut rng)?);
            }
        }
        Ok((per_device, pilots))
    }

    fn estimate(
        &self,
        method: Method,
        blocks: &[Vec<ReceivedBlock>],
        pilots: &[Pilots],
    ) -> Result<(Vec<Vec<CVector>>, Vec<usize>)> {
        let family = self.family.as_ref().expect("built for estimation");
        let codebook = self.codebook.as_ref().expect("built for estimation");
        let mut h_hat = Vec::with_capacity(blocks.len());
        let mut q_star = Vec::with_capacity(blocks.len());
        for device_blocks in blocks {
            if method == Method::RCircle {
                let est = algorithm2(device_blocks, family, codebook, pilots, &self.noise, &self.geometry, SINR_CAP)?;
                q_star.push(est.q_star);
                h_hat.push(est.h_hat);
            } else {
                let mut hs = Vec::with_capacity(device_blocks.len());
                for (m, block) in device_blocks.iter().enumerate() {
                    let est = algorithm1(block, family, codebook, pilots[m], &self.noise, SINR_CAP)?;
                    if m == 0 {
                        q_star.push(est.q_star);
                    }
                    hs.extend(est.h_hat);
                }
                h_hat.push(hs);
            }
        }
        Ok((h_hat, q_star))
    }

    fn csit(&self, kind: CsitKind, channels: &[ChannelRealization]) -> Result<Vec<f64>> {
        let norm = self.config.csit_normalization;
        let precoders = (0..self.geometry.n_subcarriers)
            .map(|m| {
                let hs = channels
                    .iter()
                    .map(|c| c.h(m).cloned())
                    .collect::<Result<Vec<_>>>()?;
                baselines::build(kind, &hs, &self.noise, norm)
            })
            .collect::<Result<Vec<CsitPrecoder>>>()?;
        baselines::per_device_csit_se(&precoders, channels, &self.noise, &self.geometry, norm)
    }

    /// Runs every configured method on trial `trial` of sweep point `point`.
    pub fn run_trial(&self, point: usize, sweep_value: f64, trial: usize) -> Result<Vec<TrialResult>> {
        let cfg = &self.config;
        let channels = self.channels(point, trial);
        let blocks = if self.codebook.is_some() {
            Some(self.blocks(point, trial, &channels)?)
        } else {
            None
        };
        let mut out = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let start = Instant::now();
            let mut q_star = Vec::new();
            let mut psi = 0;
            let per_device_se = match method {
                Method::Circle | Method::RCircle => {
                    let h_hat = match &blocks {
                        Some((b, pilots)) => {
                            let (h_hat, q) = self.estimate(method, b, pilots)?;
                            q_star = q;
                            psi = complexity_psi(cfg.n_antennas, cfg.n_subcarriers, cfg.q_levels)?;
                            h_hat
                        }
                        None => channels.iter().map(|c| c.per_subcarrier().to_vec()).collect(),
                    };
                    per_device_se_achieved(&h_hat, &channels, &self.noise, &self.geometry, SINR_CAP)?
                }
                Method::Bound => per_device_se_max(&channels, &self.noise, &self.geometry, cfg.bound_normalization)?,
                Method::Mrt => self.csit(CsitKind::Mrt, &channels)?,
                Method::Zf => self.csit(CsitKind::Zf, &channels)?,
                Method::Wmmse => self.csit(CsitKind::Wmmse, &channels)?,
                Method::WoCsitFeedback => return Err(Error::UnavailableBaseline(method.as_str().into())),
            };
            let wall_time_s = if cfg.record_timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            out.push(TrialResult {
                point,
                sweep_value,
                trial_index: trial,
                method,
                sum_se: per_device_se.iter().sum(),
                per_device_se,
                q_star,
                psi,
                wall_time_s,
            });
        }
        Ok(out)
    }
}

/// Runs all sweep points and trials. Results are ordered by point, trial and
/// configured method regardless of `threads` (0 means rayon's default).
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let points = config.points()?;
    let scenarios = points
        .iter()
        .map(|(_, cfg)| Scenario::new(cfg))
        .collect::<Result<Vec<_>>>()?;
    let work: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, (_, cfg))| (0..cfg.n_trials).map(move |t| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let nested: Vec<Vec<TrialResult>> = pool.install(|| {
        work.par_iter()
            .map(|&(p, t)| scenarios[p].run_trial(p, points[p].0, t))
            .collect::<Result<_>>()
    })?;
    Ok(nested.into_iter().flatten().collect())
}
