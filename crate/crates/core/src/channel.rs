//! Time-correlated Rayleigh MIMO channel at feedback-interval resolution.
//!
//! The channel is block fading: one `M_R x M_T` matrix per feedback slot,
//! evolving as a first-order Gauss–Markov process
//! `H[n+1] = a H[n] + sqrt(1 - a^2) W[n]` with `a = max(J0(2 pi f_d T), 0)`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, CMatrix};
use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Coherence time constant for the 50%-correlation convention, `T_c = 0.423 / f_d`.
pub const COHERENCE_FACTOR: f64 = 0.423;

/// Maximum Doppler shift in Hz for a speed in km/h and a carrier in Hz.
pub fn doppler_frequency(speed_kmh: f64, carrier_hz: f64) -> f64 {
    (speed_kmh / 3.6) * carrier_hz / SPEED_OF_LIGHT
}

/// Coherence time `0.423 / f_d`; infinite for a static channel.
pub fn coherence_time(doppler_hz: f64) -> f64 {
    if doppler_hz > 0.0 {
        COHERENCE_FACTOR / doppler_hz
    } else {
        f64::INFINITY
    }
}

/// Bessel function of the first kind, order zero.
///
/// Power series up to |x| = 12, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 12.0 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            let kf = k as f64;
            term *= q / (kf * kf);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        // P ~ sum (-1)^k a_{2k}, Q ~ sum (-1)^k a_{2k+1},
        // a_k = prod_{j=1..k} (-(2j-1)^2) / (k! (8x)^k) for order zero.
        let mut p = 0.0;
        let mut q = 0.0;
        let mut a = 1.0_f64;
        let mut last = f64::INFINITY;
        for k in 0..40 {
            if k > 0 {
                let odd = (2 * k - 1) as f64;
                a *= -(odd * odd) / (k as f64 * 8.0 * x);
            }
            if a.abs() > last {
                break;
            }
            last = a.abs();
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * a;
            } else {
                q += sign * a;
            }
        }
        let chi = x - PI / 4.0;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// One-step channel correlation `max(J0(2 pi f_d dt), 0)`.
pub fn step_correlation(doppler_hz: f64, dt: f64) -> f64 {
    bessel_j0(2.0 * PI * doppler_hz * dt).max(0.0)
}

/// Mobility and antenna parameters of a fading link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    /// Feedback interval `T` in seconds.
    pub interval_s: f64,
    pub m_r: usize,
    pub m_t: usize,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_kmh >= 0.0) || !self.speed_kmh.is_finite() {
            return Err(Error::Parameter(format!(
                "speed must be >= 0, got {}",
                self.speed_kmh
            )));
        }
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::Parameter(format!(
                "carrier must be > 0, got {}",
                self.carrier_hz
            )));
        }
        if !(self.interval_s > 0.0) || !self.interval_s.is_finite() {
            return Err(Error::Parameter(format!(
                "feedback interval must be > 0, got {}",
                self.interval_s
            )));
        }
        if self.m_r == 0 || self.m_t == 0 {
            return Err(Error::Dimension("antenna counts must be positive".into()));
        }
        Ok(())
    }

    pub fn doppler_hz(&self) -> f64 {
        doppler_frequency(self.speed_kmh, self.carrier_hz)
    }

    /// Normalized Doppler `f_d T`.
    pub fn normalized_doppler(&self) -> f64 {
        self.doppler_hz() * self.interval_s
    }

    pub fn step_correlation(&self) -> f64 {
        step_correlation(self.doppler_hz(), self.interval_s)
    }
}

/// AR(1) Rayleigh channel state with its own seeded generator.
#[derive(Debug, Clone)]
pub struct ChannelProcess {
    current: CMatrix,
    correlation: f64,
    innovation: f64,
    rng: ChaCha8Rng,
}

impl ChannelProcess {
    pub fn new(params: &FadingParams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self::with_correlation(
            params.m_r,
            params.m_t,
            params.step_correlation(),
            seed,
        ))
    }

    /// Process with an explicit one-step correlation `a` in `[0, 1]`.
    pub fn with_correlation(m_r: usize, m_t: usize, correlation: f64, seed: u64) -> Self {
        let correlation = correlation.clamp(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let current = linalg::complex_gaussian(&mut rng, m_r, m_t);
        Self {
            current,
            correlation,
            innovation: (1.0 - correlation * correlation).sqrt(),
            rng,
        }
    }

    pub fn current(&self) -> &CMatrix {
        &self.current
    }

    pub fn step_correlation(&self) -> f64 {
        self.correlation
    }

    /// Advances one feedback interval and returns the new channel.
    pub fn step(&mut self) -> &CMatrix {
        if self.correlation < 1.0 {
            let (m_r, m_t) = self.current.shape();
            let w = linalg::complex_gaussian(&mut self.rng, m_r, m_t);
            let (a, b) = (self.correlation, self.innovation);
            self.current.zip_apply(&w, |h, w| *h = *h * a + w * b);
        }
        &self.current
    }

    /// The next `len` channel matrices, starting with the current one.
    pub fn trajectory(&mut self, len: usize) -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(len);
        if len > 0 {
            out.push(self.current.clone());
        }
        while out.len() < len {
            out.push(self.step().clone());
        }
        out
    }
}
