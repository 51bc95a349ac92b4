use std::str::FromStr;

use crate::channel::FadingParams;
use crate::codebook::MAX_BITS;
use crate::protocol::Scheme;
use crate::{Error, Result};

/// Everything one sweep needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m_t: usize,
    pub m_r: usize,
    /// Streams per precoder.
    pub m: usize,
    /// Feedback bits `L`.
    pub l: u32,
    /// Rotating codebook count `K`.
    pub k: usize,
    pub snr_db: Vec<f64>,
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    /// Feedback interval `T` in seconds.
    pub interval_s: f64,
    /// Feedback delay `D` in intervals.
    pub delay: usize,
    /// Feedback slots per drop.
    pub horizon: usize,
    pub drops: usize,
    /// Leading slots excluded from averaging.
    pub warmup: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let (l, k) = (3, 8);
        Self {
            m_t: 4,
            m_r: 1,
            m: 1,
            l,
            k,
            snr_db: vec![0.0, 5.0, 10.0],
            speed_kmh: 3.0,
            carrier_hz: 2e9,
            interval_s: 3e-3,
            delay: 1,
            horizon: 200,
            drops: 1000,
            warmup: 2 * k,
            master_seed: 1,
            schemes: default_schemes(l, k),
        }
    }
}

/// Open loop, conventional at `L` and `L + log2 K`, rotating, unquantized.
pub fn default_schemes(l: u32, k: usize) -> Vec<Scheme> {
    let mut schemes = vec![Scheme::OpenLoop { l }, Scheme::Conventional { l }];
    if k > 1 {
        schemes.push(Scheme::Rotating { l, k });
        schemes.push(Scheme::Conventional {
            l: l + k.trailing_zeros(),
        });
    }
    schemes.push(Scheme::Unquantized);
    schemes
}

impl SimConfig {
    pub fn fading_params(&self) -> FadingParams {
        FadingParams {
            speed_kmh: self.speed_kmh,
            carrier_hz: self.carrier_hz,
            interval_s: self.interval_s,
            m_r: self.m_r,
            m_t: self.m_t,
        }
    }

    pub fn normalized_doppler(&self) -> f64 {
        self.fading_params().normalized_doppler()
    }

    /// Bits of the mother codebook every scheme in the run is cut from.
    pub fn mother_bits(&self) -> u32 {
        self.schemes
            .iter()
            .map(Scheme::codebook_bits)
            .max()
            .unwrap_or(0)
    }

    /// Sets the speed so that `f_d T` equals `normalized` at the current
    /// carrier and interval.
    pub fn with_normalized_doppler(mut self, normalized: f64) -> Self {
        let doppler = normalized / self.interval_s;
        self.speed_kmh = doppler * crate::channel::SPEED_OF_LIGHT / self.carrier_hz * 3.6;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m_t == 0 || self.m_r == 0 || self.m == 0 {
            return bad("antenna and stream counts must be positive".into());
        }
        if self.m > self.m_t {
            return bad(format!("m={} exceeds m_t={}", self.m, self.m_t));
        }
        if self.k == 0 || !self.k.is_power_of_two() {
            return bad(format!("K must be a power of two, got {}", self.k));
        }
        if self.drops == 0 || self.horizon == 0 {
            return bad("drops and horizon must be positive".into());
        }
        if self.warmup >= self.horizon {
            return bad(format!(
                "warmup {} must be below horizon {}",
                self.warmup, self.horizon
            ));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("SNR list must be non-empty and finite".into());
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected".into());
        }
        for s in &self.schemes {
            s.validate()?;
        }
        if self.mother_bits() > MAX_BITS {
            return bad(format!(
                "largest codebook needs {} bits, limit is {MAX_BITS}",
                self.mother_bits()
            ));
        }
        self.fading_params()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses a comma list of `openloop`, `conv`, `conv<L>`, `rot`, `unq`.
///
/// `conv` and `rot` take `l` and `k` from the run; `conv6` pins `L = 6`.
pub fn parse_schemes(list: &str, l: u32, k: usize) -> Result<Vec<Scheme>> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|token| match token {
            "openloop" => Ok(Scheme::OpenLoop { l }),
            "conv" => Ok(Scheme::Conventional { l }),
            "rot" => Ok(Scheme::Rotating { l, k }),
            "unq" => Ok(Scheme::Unquantized),
            other => other
                .strip_prefix("conv")
                .and_then(|bits| bits.parse().ok())
                .map(|l| Scheme::Conventional { l })
                .ok_or_else(|| Error::Config(format!("unknown scheme `{other}`"))),
        })
        .collect()
}

/// Comma list of decimal dB values.
pub fn parse_snr_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad SNR value `{t}`")))
        })
        .collect()
}

/// Named scenarios with eight transmit antennas and one receive antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Codebook size sweep: open loop, `L = 4..10`, unquantized.
    Fig2,
    /// `L = 4`, `K = 64` at 3 km/h.
    Fig5,
    /// `L = 4`, `K = 64` at 1 km/h.
    Fig6,
    /// `L = 4`, `K = 64` at 15 km/h.
    Fig7,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig5" => Ok(Preset::Fig5),
            "fig6" => Ok(Preset::Fig6),
            "fig7" => Ok(Preset::Fig7),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

impl Preset {
    /// Scheme list as a CLI-style string, resolved against the final `L`, `K`.
    pub fn schemes(self) -> &'static str {
        match self {
            Preset::Fig2 => "openloop,conv4,conv6,conv8,conv10,unq",
            _ => "conv4,conv6,conv8,conv10,rot,unq",
        }
    }

    pub fn config(self) -> SimConfig {
        let snr_db = (0..11).map(|i| -10.0 + 2.5 * i as f64).collect();
        let base = SimConfig {
            m_t: 8,
            m_r: 1,
            m: 1,
            l: 4,
            k: 64,
            snr_db,
            speed_kmh: 3.0,
            carrier_hz: 2e9,
            interval_s: 3e-3,
            delay: 1,
            horizon: 384,
            drops: 500,
            warmup: 128,
            master_seed: 1,
            schemes: Vec::new(),
        };
        let mut cfg = match self {
            Preset::Fig2 => SimConfig {
                k: 1,
                horizon: 200,
                warmup: 16,
                ..base
            },
            Preset::Fig5 => base,
            Preset::Fig6 => SimConfig {
                speed_kmh: 1.0,
                ..base
            },
            Preset::Fig7 => SimConfig {
                speed_kmh: 15.0,
                ..base
            },
        };
        cfg.schemes = parse_schemes(self.schemes(), cfg.l, cfg.k).expect("preset scheme list");
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_desk_scale() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.warmup, 16);
        assert_eq!(cfg.mother_bits(), 6);
        assert!((cfg.normalized_doppler() - 0.0167).abs() < 1e-4);
    }

    #[test]
    fn presets_are_valid() {
        for p in [Preset::Fig2, Preset::Fig5, Preset::Fig6, Preset::Fig7] {
            p.config().validate().unwrap();
        }
        let fig5 = Preset::Fig5.config();
        assert_eq!((fig5.m_t, fig5.m_r, fig5.l, fig5.k), (8, 1, 4, 64));
        assert_eq!(fig5.mother_bits(), 10);
        assert!(fig5.schemes.contains(&Scheme::Rotating { l: 4, k: 64 }));
    }

    #[test]
    fn scheme_tokens() {
        let s = parse_schemes("openloop, conv,conv6,rot,unq", 3, 8).unwrap();
        assert_eq!(
            s,
            vec![
                Scheme::OpenLoop { l: 3 },
                Scheme::Conventional { l: 3 },
                Scheme::Conventional { l: 6 },
                Scheme::Rotating { l: 3, k: 8 },
                Scheme::Unquantized
            ]
        );
        assert!(parse_schemes("rot,bogus", 3, 8).is_err());
        assert!(parse_schemes("convx", 3, 8).is_err());
    }

    #[test]
    fn snr_list() {
        assert_eq!(parse_snr_list("-5, 0,2.5").unwrap(), vec![-5.0, 0.0, 2.5]);
        assert!(parse_snr_list("1,x").is_err());
    }

    #[test]
    fn validation_failures() {
        let ok = SimConfig::default();
        let cases = [
            SimConfig { m: 5, ..ok.clone() },
            SimConfig { k: 6, ..ok.clone() },
            SimConfig {
                warmup: 200,
                ..ok.clone()
            },
            SimConfig {
                drops: 0,
                ..ok.clone()
            },
            SimConfig {
                snr_db: vec![],
                ..ok.clone()
            },
            SimConfig {
                schemes: vec![],
                ..ok.clone()
            },
            SimConfig {
                carrier_hz: -1.0,
                ..ok.clone()
            },
            SimConfig {
                schemes: vec![Scheme::Conventional { l: 30 }],
                ..ok.clone()
            },
        ];
        for cfg in cases {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn normalized_doppler_round_trip() {
        let cfg = SimConfig::default().with_normalized_doppler(0.333);
        assert!((cfg.normalized_doppler() - 0.333).abs() < 1e-12);
    }
}
