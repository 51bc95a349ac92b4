//! Effective feedback bits and coherence-time bookkeeping.
//!
//! The rotating scheme's effective bits are read off the conventional
//! curves: find the SNR each curve needs to reach a target spectral
//! efficiency, then place the rotating scheme's SNR on the
//! `(SNR, L)` line through the conventional results.

use std::fmt;

use crate::channel::{coherence_time, doppler_frequency};
use crate::protocol::Scheme;
use crate::{Error, Result};

use super::config::SimConfig;
use super::output::ResultTable;

/// SNR in dB at which `curve` reaches `target_se`, by linear interpolation.
///
/// The curve must be sorted by SNR and non-decreasing in SE.
pub fn snr_at_target(label: &str, curve: &[(f64, f64)], target_se: f64) -> Result<f64> {
    if curve
        .windows(2)
        .any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1)
    {
        return Err(Error::Analysis(format!(
            "curve {label} is not monotone increasing in SNR"
        )));
    }
    let (first, last) = match (curve.first(), curve.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Analysis(format!("curve {label} is empty"))),
    };
    if !(target_se >= first.1 && target_se <= last.1) {
        return Err(Error::Analysis(format!(
            "target SE {target_se} outside curve {label} range [{}, {}]",
            first.1, last.1
        )));
    }
    for w in curve.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if target_se <= y1 {
            if y1 == y0 {
                return Ok(x0);
            }
            return Ok(x0 + (target_se - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    Ok(first.0)
}

/// Midpoint of the SE range covered by every curve.
pub fn mid_target(curves: &[&[(f64, f64)]]) -> Result<f64> {
    let lo = curves
        .iter()
        .filter_map(|c| c.first().map(|p| p.1))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = curves
        .iter()
        .filter_map(|c| c.last().map(|p| p.1))
        .fold(f64::INFINITY, f64::min);
    if !(lo <= hi) {
        return Err(Error::Analysis(format!(
            "curves share no SE range (lowest top {hi}, highest bottom {lo})"
        )));
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveBits {
    /// `L + log2 kappa`.
    pub effective_bits: f64,
    /// SNR saving of the rotating scheme over conventional at the base `L`.
    pub snr_gain_db: f64,
    pub target_se: f64,
    pub rotating_snr_db: f64,
}

/// Estimates effective feedback bits of the rotating curve against
/// conventional curves `(L, curve)`; `base_l` is the rotating scheme's `L`.
///
/// Beyond the conventional range the estimate clamps to the nearest `L`.
pub fn estimate_effective_bits(
    rotating: &[(f64, f64)],
    conventional: &[(u32, Vec<(f64, f64)>)],
    base_l: u32,
    target_se: f64,
) -> Result<EffectiveBits> {
    let rot_snr = snr_at_target("rot", rotating, target_se)?;
    let mut points = conventional
        .iter()
        .map(|(l, c)| Ok((*l, snr_at_target(&format!("conv(L={l})"), c, target_se)?)))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by_key(|p| p.0);
    let base_snr = points
        .iter()
        .find(|p| p.0 == base_l)
        .map(|p| p.1)
        .ok_or_else(|| Error::Analysis(format!("no conventional curve for L={base_l}")))?;

    let (lowest, highest) = (points[0], points[points.len() - 1]);
    let effective_bits = if rot_snr >= lowest.1 {
        lowest.0 as f64
    } else if rot_snr <= highest.1 {
        highest.0 as f64
    } else {
        points
            .windows(2)
            .find_map(|w| {
                let ((l0, s0), (l1, s1)) = (w[0], w[1]);
                let inside = (s0 >= rot_snr && rot_snr >= s1) || (s1 >= rot_snr && rot_snr >= s0);
                inside.then(|| {
                    if s0 == s1 {
                        l0 as f64
                    } else {
                        l0 as f64 + (rot_snr - s0) * (l1 as f64 - l0 as f64) / (s1 - s0)
                    }
                })
            })
            .unwrap_or(lowest.0 as f64)
    };
    Ok(EffectiveBits {
        effective_bits,
        snr_gain_db: base_snr - rot_snr,
        target_se,
        rotating_snr_db: rot_snr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    pub doppler_hz: f64,
    pub normalized_doppler: f64,
    /// `0.423 / f_d`, infinite for a static channel.
    pub coherence_time_s: f64,
    /// Mean rotation delay `K T / 2`.
    pub half_rotation_time_s: f64,
}

pub fn coherence_report(config: &SimConfig) -> CoherenceReport {
    let doppler_hz = doppler_frequency(config.speed_kmh, config.carrier_hz);
    CoherenceReport {
        doppler_hz,
        normalized_doppler: doppler_hz * config.interval_s,
        coherence_time_s: coherence_time(doppler_hz),
        half_rotation_time_s: 0.5 * config.k as f64 * config.interval_s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisMetrics {
    pub coherence: CoherenceReport,
    /// Present when the table has a rotating curve and conventional curves
    /// including its base `L`.
    pub effective: Option<EffectiveBits>,
}

/// Coherence figures plus, when the table allows, effective bits at the
/// midpoint of the shared SE range.
pub fn analyze(table: &ResultTable, config: &SimConfig) -> Result<AnalysisMetrics> {
    let coherence = coherence_report(config);
    let schemes = table.schemes();
    let rot = schemes.iter().find_map(|s| match *s {
        Scheme::Rotating { l, .. } => Some((*s, l)),
        _ => None,
    });
    let conventional: Vec<(u32, Vec<(f64, f64)>)> = schemes
        .iter()
        .filter_map(|s| match *s {
            Scheme::Conventional { l } => Some((l, table.curve(*s))),
            _ => None,
        })
        .collect();
    let effective = match rot {
        Some((scheme, l))
            if conventional.iter().any(|c| c.0 == l) && table.curve(scheme).len() > 1 =>
        {
            let rot_curve = table.curve(scheme);
            let mut all: Vec<&[(f64, f64)]> = vec![&rot_curve];
            all.extend(conventional.iter().map(|c| c.1.as_slice()));
            let target = mid_target(&all)?;
            Some(estimate_effective_bits(
                &rot_curve,
                &conventional,
                l,
                target,
            )?)
        }
        _ => None,
    };
    Ok(AnalysisMetrics {
        coherence,
        effective,
    })
}

impl fmt::Display for AnalysisMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.coherence;
        writeln!(f, "doppler_hz={:.4}", c.doppler_hz)?;
        writeln!(f, "normalized_doppler={:.5}", c.normalized_doppler)?;
        writeln!(f, "coherence_time_s={:.5}", c.coherence_time_s)?;
        write!(f, "half_rotation_time_s={:.5}", c.half_rotation_time_s)?;
        if let Some(e) = &self.effective {
            writeln!(f)?;
            writeln!(f, "target_se_bps_hz={:.4}", e.target_se)?;
            writeln!(f, "effective_bits={:.3}", e.effective_bits)?;
            write!(f, "snr_gain_db={:.3}", e.snr_gain_db)?;
        }
        Ok(())
    }
}
