use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::CsitNormalization;
use crate::channel::ArrayGeometry;
use crate::receiver::BoundNormalization;
use crate::transceiver::SymbolSource;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Per-subcarrier estimation.
    Circle,
    /// Joint estimation across subcarriers.
    RCircle,
    /// Maximum sum-SE with full CSIR.
    Bound,
    Mrt,
    Zf,
    Wmmse,
    /// Uplink-reconstruction baseline; accepted by the parser but never run.
    WoCsitFeedback,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Circle => "circle",
            Method::RCircle => "r-circle",
            Method::Bound => "bound",
            Method::Mrt => "mrt",
            Method::Zf => "zf",
            Method::Wmmse => "wmmse",
            Method::WoCsitFeedback => "wo-csit-feedback",
        }
    }

    pub fn uses_circle_frame(self) -> bool {
        matches!(self, Method::Circle | Method::RCircle | Method::Bound)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the CIRCLE receivers get their channel from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsirMode {
    /// True channel, no estimation.
    Genie,
    #[default]
    Estimated,
}

/// Angular span covered by the estimation codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookSpan {
    /// `[0, rho pi)`, the configured AoD domain.
    #[default]
    AodRange,
    /// `[-pi, pi)`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    NDevices,
    SnrDb,
    Delta2Db,
    QLevels,
    Rho,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::NDevices => "n_devices",
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::Delta2Db => "delta2_db",
            SweepVariable::QLevels => "q_levels",
            SweepVariable::Rho => "rho",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    /// With `n_devices` sweeps, set `n_antennas = n_devices + 2` at every point.
    #[serde(default)]
    pub antennas_follow_devices: bool,
}

/// Full parameterization of one Monte Carlo scenario.
///
/// Exactly one of `snr_db` and `p_t_db` must be set. With `snr_db` the
/// transmit power is chosen so the mean received SNR over the channel
/// statistics hits the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_antennas: usize,
    /// Defaults to `n_antennas - 2`.
    pub n_devices: Option<usize>,
    pub snr_db: Option<f64>,
    pub p_t_db: Option<f64>,
    pub sigma2_db: f64,
    pub delta2_db: f64,
    pub n_nlos: usize,
    pub rho: f64,
    pub q_levels: usize,
    pub n_subcarriers: usize,
    pub cp_len: usize,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub symbol_source: SymbolSource,
    pub csit_normalization: CsitNormalization,
    pub bound_normalization: BoundNormalization,
    pub csir: CsirMode,
    pub codebook: CodebookSpan,
    /// Measure per-method wall time; off by default so output is reproducible.
    pub record_timing: bool,
    pub sweep: Option<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_antennas: 32,
            n_devices: None,
            snr_db: None,
            p_t_db: None,
            sigma2_db: -10.0,
            delta2_db: -15.0,
            n_nlos: 3,
            rho: 2.0,
            q_levels: 512,
            n_subcarriers: 10,
            cp_len: 4,
            carrier_freq_hz: 100e9,
            bandwidth_hz: 10e9,
            n_trials: 200,
            seed: 0,
            methods: vec![Method::RCircle, Method::Bound],
            symbol_source: SymbolSource::Gaussian,
            csit_normalization: CsitNormalization::Amplitude,
            bound_normalization: BoundNormalization::PerSlot,
            csir: CsirMode::Estimated,
            codebook: CodebookSpan::AodRange,
            record_timing: false,
            sweep: None,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn as_count(value: f64, name: &str) -> Result<usize> {
    if value.is_finite() && value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(config_err(format!("{name} sweep value {value} is not a count")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn n_devices(&self) -> usize {
        self.n_devices
            .unwrap_or_else(|| self.n_antennas.saturating_sub(2))
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(
            self.n_antennas,
            self.carrier_freq_hz,
            self.bandwidth_hz,
            self.n_subcarriers,
            self.cp_len,
        )
    }

    pub fn sweep_variable(&self) -> SweepVariable {
        self.sweep
            .as_ref()
            .map_or(SweepVariable::NDevices, |s| s.variable)
    }

    /// One config per sweep value, sweep removed. Without a sweep the config
    /// itself is the single point, labeled by its device count.
    pub fn points(&self) -> Result<Vec<(f64, ExperimentConfig)>> {
        let mut base = self.clone();
        base.sweep = None;
        let Some(sweep) = &self.sweep else {
            base.validate_point()?;
            return Ok(vec![(base.n_devices() as f64, base)]);
        };
        if sweep.values.is_empty() {
            return Err(config_err("sweep has no values"));
        }
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut cfg = base.clone();
                match sweep.variable {
                    SweepVariable::NDevices => {
                        let k = as_count(v, "n_devices")?;
                        cfg.n_devices = Some(k);
                        if sweep.antennas_follow_devices {
                            cfg.n_antennas = k + 2;
                        }
                    }
                    SweepVariable::SnrDb => {
                        if cfg.p_t_db.is_some() {
                            return Err(config_err("snr_db sweep conflicts with p_t_db"));
                        }
                        cfg.snr_db = Some(v);
                    }
                    SweepVariable::Delta2Db => cfg.delta2_db = v,
                    SweepVariable::QLevels => cfg.q_levels = as_count(v, "q_levels")?,
                    SweepVariable::Rho => cfg.rho = v,
                }
                cfg.validate_point()?;
                Ok((v, cfg))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.sweep {
            if s.antennas_follow_devices && s.variable != SweepVariable::NDevices {
                return Err(config_err("antennas_follow_devices needs an n_devices sweep"));
            }
        }
        self.points().map(|_| ())
    }

    fn validate_point(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(config_err("n_trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("no methods selected"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if *m == Method::WoCsitFeedback {
                return Err(Error::UnavailableBaseline(m.as_str().into()));
            }
            if self.methods[..i].contains(m) {
                return Err(config_err(format!("method {m} listed twice")));
            }
        }
        let db_fields = [
            ("snr_db", self.snr_db),
            ("p_t_db", self.p_t_db),
            ("sigma2_db", Some(self.sigma2_db)),
            ("delta2_db", Some(self.delta2_db)),
        ];
        for (name, value) in db_fields {
            if value.is_some_and(|v| !v.is_finite()) {
                return Err(config_err(format!("{name} must be finite")));
            }
        }
        match (self.snr_db, self.p_t_db) {
            (Some(_), Some(_)) => return Err(config_err("set only one of snr_db and p_t_db")),
            (None, None) => return Err(config_err("one of snr_db and p_t_db is required")),
            _ => {}
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(config_err("rho must be positive"));
        }
        if self.q_levels == 0 {
            return Err(config_err("q_levels must be at least 1"));
        }
        self.geometry()?;
        let n = self.n_antennas;
        let k = self.n_devices();
        if k == 0 {
            return Err(config_err("n_devices must be at least 1"));
        }
        let circle = self.methods.iter().any(|m| m.uses_circle_frame());
        if circle && (n < 3 || k > n - 2) {
            return Err(config_err(format!(
                "CIRCLE methods need n_devices <= n_antennas - 2 (got K = {k}, N = {n})"
            )));
        }
        if k > n {
            return Err(config_err(format!("n_devices {k} exceeds n_antennas {n}")));
        }
        Ok(())
    }
}
