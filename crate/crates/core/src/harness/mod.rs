//! Simulation driver: configuration, Monte Carlo sweeps, analysis and output.

pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod output;
pub mod sim;

pub use analysis::{
    analyze, coherence_report, estimate_effective_bits, mid_target, snr_at_target, AnalysisMetrics,
    CoherenceReport, EffectiveBits,
};
pub use config::{default_schemes, parse_schemes, Preset, SimConfig};
pub use output::{ResultRow, ResultTable, CSV_HEADER};
pub use sim::{drop_seed, run_drop, sweep, sweep_with, DropContext, Execution};
