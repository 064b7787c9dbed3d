//! Frame assembly, precoded transmission over `N` slots, and received blocks.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelRealization, NoiseModel};
use crate::dft::PrecoderSet;
use crate::{CVector, Error, Result};

/// Default value of both pilot symbols.
pub const PILOT: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolSource {
    /// Unit-power QPSK, `(+-1 +- i) / sqrt(2)`.
    Qpsk,
    /// Circular complex Gaussian with unit variance.
    #[default]
    Gaussian,
}

impl SymbolSource {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        match self {
            SymbolSource::Qpsk => {
                let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            SymbolSource::Gaussian => complex_gaussian(rng, 1.0),
        }
    }
}

/// The two known pilot symbols of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pilots {
    /// Slot `N - 2`, used for gain estimation.
    pub first: Complex64,
    /// Slot `N - 1`, used for SINR scoring.
    pub second: Complex64,
}

impl Default for Pilots {
    fn default() -> Self {
        Self {
            first: PILOT,
            second: PILOT,
        }
    }
}

/// Symbol vector `s` of length `N`: `N - 2` information symbols followed by
/// the two pilots.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    symbols: CVector,
}

impl Frame {
    pub fn from_symbols(symbols: CVector) -> Result<Self> {
        if symbols.len() < 3 {
            return Err(Error::FrameTooSmall(symbols.len()));
        }
        Ok(Self { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &CVector {
        &self.symbols
    }

    /// Number of information symbols, `K = N - 2`.
    pub fn info_len(&self) -> usize {
        self.len() - 2
    }

    pub fn info(&self) -> &[Complex64] {
        &self.symbols.as_slice()[..self.info_len()]
    }

    pub fn pilots(&self) -> Pilots {
        let n = self.len();
        Pilots {
            first: self.symbols[n - 2],
            second: self.symbols[n - 1],
        }
    }
}

pub fn make_frame<R: Rng + ?Sized>(n: usize, source: SymbolSource, rng: &mut R) -> Result<Frame> {
    make_frame_with_pilots(n, source, Pilots::default(), rng)
}

pub fn make_frame_with_pilots<R: Rng + ?Sized>(
    n: usize,
    source: SymbolSource,
    pilots: Pilots,
    rng: &mut R,
) -> Result<Frame> {
    if n < 3 {
        return Err(Error::FrameTooSmall(n));
    }
    if pilots.first == Complex64::new(0.0, 0.0) || pilots.second == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidPilot);
    }
    let symbols = CVector::from_fn(n, |i, _| match i {
        i if i == n - 2 => pilots.first,
        i if i == n - 1 => pilots.second,
        _ => source.draw(rng),
    });
    Ok(Frame { symbols })
}

/// `x_n = P_n s / sqrt(N)` for every slot.
pub fn transmit(precoders: &PrecoderSet, symbols: &CVector) -> Result<Vec<CVector>> {
    let n = precoders.size();
    if symbols.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: symbols.len(),
        });
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(precoders
        .slots()
        .iter()
        .map(|p| (p * symbols) * Complex64::new(scale, 0.0))
        .collect())
}

pub fn transmit_frame(precoders: &PrecoderSet, frame: &Frame) -> Result<Vec<CVector>> {
    transmit(precoders, frame.symbols())
}

/// Received samples of one device on one subcarrier, concatenated over slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub device: usize,
    pub subcarrier: usize,
    pub y: CVector,
    /// The noise actually added, kept for oracle tests.
    pub noise: CVector,
}

/// `y(n) = sqrt(p_t) h^H x_n + z(n)` for a bare channel vector.
///
/// Noise samples are always drawn so the RNG stream advances identically
/// whether or not `sigma^2` is zero.
pub fn receive_vector<R: Rng + ?Sized>(
    h: &CVector,
    xs: &[CVector],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<(CVector, CVector)> {
    if let Some(bad) = xs.iter().find(|x| x.len() != h.len()) {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            actual: bad.len(),
        });
    }
    let amp = noise.tx_power.sqrt();
    let z = CVector::from_fn(xs.len(), |_, _| complex_gaussian(rng, noise.variance));
    let y = CVector::from_fn(xs.len(), |n, _| h.dotc(&xs[n]) * amp + z[n]);
    Ok((y, z))
}

/// Synthesizes the block of `channel` on subcarrier `m` from that subcarrier's
/// transmit vectors.
pub fn receive<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    m: usize,
    xs: &[CVector],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    let (y, z) = receive_vector(channel.h(m)?, xs, noise, rng)?;
    Ok(ReceivedBlock {
        device: channel.device,
        subcarrier: m,
        y,
        noise: z,
    })
}
