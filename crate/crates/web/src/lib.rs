//! Browser bindings for the rotating-codebook simulator.
//!
//! Three operations are exported to JavaScript:
//!
//! - [`run_sweep`]: spectral efficiency versus SNR for open loop,
//!   conventional `L`, rotating `(L, K)`, conventional `L + log2 K` and
//!   unquantized precoding, returned as CSV with an analysis summary.
//! - [`ConvergenceTrace`]: per-slot capacity of a single drop, showing the
//!   rotating scheme climbing from the conventional level towards the
//!   mother-codebook level.
//! - [`MobilityReport`]: Doppler, channel correlation, coherence time and
//!   mean rotation delay for a speed/carrier/interval triple.
//!
//! Everything runs on the calling thread; the core crate is built without
//! its rayon feature.

use rotcb::channel::{coherence_time, doppler_frequency, step_correlation};
use rotcb::harness::{analyze, default_schemes, drop_seed, sweep, DropContext, SimConfig};
use rotcb::protocol::Scheme;
use wasm_bindgen::prelude::*;

fn demo_config(m_t: usize, l: u32, k: usize, speed_kmh: f64, seed: u32) -> SimConfig {
    let k = k.max(1).next_power_of_two();
    SimConfig {
        m_t,
        m_r: 1,
        m: 1,
        l,
        k,
        speed_kmh,
        snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        horizon: (4 * k).max(120) + 2 * k,
        warmup: 2 * k,
        master_seed: seed as u64,
        schemes: default_schemes(l, k),
        ..SimConfig::default()
    }
}

/// CSV table and text summary of one sweep.
#[wasm_bindgen]
pub struct SweepOutput {
    csv: String,
    summary: String,
}

#[wasm_bindgen]
impl SweepOutput {
    #[wasm_bindgen(getter)]
    pub fn csv(&self) -> String {
        self.csv.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Runs a small paired-seed sweep with one receive antenna and one stream.
#[wasm_bindgen]
pub fn run_sweep(
    m_t: usize,
    l: u32,
    k: usize,
    speed_kmh: f64,
    drops: usize,
    seed: u32,
) -> Result<SweepOutput, String> {
    let config = SimConfig {
        drops: drops.max(2),
        ..demo_config(m_t, l, k, speed_kmh, seed)
    };
    let table = sweep(&config).map_err(|e| e.to_string())?;
    let summary = match analyze(&table, &config) {
        Ok(m) => m.to_string(),
        Err(e) => format!("analysis unavailable: {e}"),
    };
    Ok(SweepOutput {
        csv: table.to_csv_string(),
        summary,
    })
}

/// Per-slot capacity of one drop for four schemes.
#[wasm_bindgen]
pub struct ConvergenceTrace {
    conventional: Vec<f64>,
    rotating: Vec<f64>,
    upper: Vec<f64>,
    unquantized: Vec<f64>,
}

#[wasm_bindgen]
impl ConvergenceTrace {
    #[wasm_bindgen(constructor)]
    pub fn new(
        m_t: usize,
        l: u32,
        k: usize,
        speed_kmh: f64,
        snr_db: f64,
        horizon: usize,
        seed: u32,
    ) -> Result<ConvergenceTrace, String> {
        let base = demo_config(m_t, l, k, speed_kmh, seed);
        let config = SimConfig {
            snr_db: vec![snr_db],
            horizon: horizon.max(2),
            warmup: 0,
            drops: 1,
            ..base
        };
        config.validate().map_err(|e| e.to_string())?;
        let mut ctx = DropContext::new(&config, drop_seed(config.master_seed, 0))
            .map_err(|e| e.to_string())?;
        let k = config.k;
        let mut run = |scheme| -> Result<Vec<f64>, String> {
            let mut series = ctx.simulate(&config, scheme).map_err(|e| e.to_string())?;
            Ok(series.remove(0))
        };
        Ok(Self {
            conventional: run(Scheme::Conventional { l })?,
            rotating: run(Scheme::Rotating { l, k })?,
            upper: run(Scheme::Conventional {
                l: l + k.trailing_zeros(),
            })?,
            unquantized: run(Scheme::Unquantized)?,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn conventional(&self) -> Vec<f64> {
        self.conventional.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rotating(&self) -> Vec<f64> {
        self.rotating.clone()
    }

    /// Conventional precoding with `L + log2 K` bits.
    #[wasm_bindgen(getter)]
    pub fn upper(&self) -> Vec<f64> {
        self.upper.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn unquantized(&self) -> Vec<f64> {
        self.unquantized.clone()
    }
}

#[wasm_bindgen]
pub struct MobilityReport {
    pub doppler_hz: f64,
    pub normalized_doppler: f64,
    pub step_correlation: f64,
    pub coherence_time_s: f64,
    pub half_rotation_time_s: f64,
}

#[wasm_bindgen]
impl MobilityReport {
    #[wasm_bindgen(constructor)]
    pub fn new(speed_kmh: f64, carrier_hz: f64, interval_s: f64, k: usize) -> MobilityReport {
        let doppler_hz = doppler_frequency(speed_kmh, carrier_hz);
        Self {
            doppler_hz,
            normalized_doppler: doppler_hz * interval_s,
            step_correlation: step_correlation(doppler_hz, interval_s),
            coherence_time_s: coherence_time(doppler_hz),
            half_rotation_time_s: 0.5 * k as f64 * interval_s,
        }
    }
}
