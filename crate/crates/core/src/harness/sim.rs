//! Monte Carlo drops and SNR sweeps.
//!
//! All schemes in a drop see the same channel trajectory and the same
//! mother codebook (paired common random numbers). Every seed is derived
//! from `(master_seed, drop index)` and, for scheme-private randomness, the
//! scheme id, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelProcess;
use crate::codebook::{split_codebook, ChildCodebookSet, Codebook, CodebookView, PrecodingMatrix};
use crate::linalg::CMatrix;
use crate::precoding::{open_loop_pick, optimal_unquantized, CapacityEvaluator, SnrPoint};
use crate::protocol::{LinkState, Scheme};
use crate::seeds;
use crate::Result;

use super::config::SimConfig;
use super::output::{ResultRow, ResultTable};

const TAG_DROP: u64 = 1;
const TAG_CHANNEL: u64 = 2;
const TAG_CODEBOOK: u64 = 3;
const TAG_PUNCTURE: u64 = 4;
const TAG_SCHEME: u64 = 5;

/// Seed of drop `index` under `master_seed`.
pub fn drop_seed(master_seed: u64, index: usize) -> u64 {
    seeds::derive(master_seed, &[TAG_DROP, index as u64])
}

enum Books {
    Open(Codebook),
    Linked(ChildCodebookSet),
    None,
}

/// Per-drop shared state: channel trajectory and codebooks.
pub struct DropContext {
    drop_seed: u64,
    channels: Vec<CMatrix>,
    mother: Codebook,
    puncture_seed: u64,
    unquantized: Option<Vec<PrecodingMatrix>>,
}

impl DropContext {
    pub fn new(config: &SimConfig, drop_seed: u64) -> Result<Self> {
        let mut channel = ChannelProcess::new(
            &config.fading_params(),
            seeds::derive(drop_seed, &[TAG_CHANNEL]),
        )?;
        let mother = Codebook::generate(
            config.mother_bits(),
            config.m_t,
            config.m,
            seeds::derive(drop_seed, &[TAG_CODEBOOK]),
        )?;
        Ok(Self {
            drop_seed,
            channels: channel.trajectory(config.horizon),
            mother,
            puncture_seed: seeds::derive(drop_seed, &[TAG_PUNCTURE]),
            unquantized: None,
        })
    }

    pub fn channels(&self) -> &[CMatrix] {
        &self.channels
    }

    /// The largest codebook of the drop; every scheme uses a prefix of it.
    pub fn mother(&self) -> &Codebook {
        &self.mother
    }

    fn books(&self, scheme: Scheme) -> Result<Books> {
        Ok(match scheme {
            Scheme::OpenLoop { l } => Books::Open(self.mother.prefix(l)?),
            Scheme::Conventional { l } => {
                Books::Linked(ChildCodebookSet::single(self.mother.prefix(l)?))
            }
            Scheme::Rotating { l, k } => {
                let mother = self.mother.prefix(scheme.codebook_bits())?;
                if k == 1 {
                    Books::Linked(ChildCodebookSet::single(mother))
                } else {
                    Books::Linked(split_codebook(&mother, l)?)
                }
            }
            Scheme::Unquantized => Books::None,
        })
    }

    fn unquantized(&mut self, config: &SimConfig) -> Result<&[PrecodingMatrix]> {
        if self.unquantized.is_none() {
            let initial = self.mother.entry(0).clone();
            let precoders = (0..self.channels.len())
                .map(|n| match n.checked_sub(config.delay) {
                    Some(src) => optimal_unquantized(&self.channels[src], config.m),
                    None => Ok(initial.clone()),
                })
                .collect::<Result<Vec<_>>>()?;
            self.unquantized = Some(precoders);
        }
        Ok(self.unquantized.as_deref().expect("filled above"))
    }

    /// Per-slot capacity of `scheme` at every configured SNR.
    pub fn simulate(&mut self, config: &SimConfig, scheme: Scheme) -> Result<Vec<Vec<f64>>> {
        let gammas = config
            .snr_db
            .iter()
            .map(|&db| SnrPoint::from_db(db).map(SnrPoint::gamma))
            .collect::<Result<Vec<_>>>()?;
        let books = self.books(scheme)?;
        if let Scheme::Unquantized = scheme {
            self.unquantized(config)?;
        }
        let mut out = Vec::with_capacity(gammas.len());
        for &gamma in &gammas {
            let mut series = Vec::with_capacity(self.channels.len());
            match &books {
                Books::Linked(set) => {
                    let mut link = LinkState::new(scheme, set, config.delay, self.puncture_seed)?;
                    for (n, h) in self.channels.iter().enumerate() {
                        let mut eval = CapacityEvaluator::new(h, gamma)?;
                        let applied = link.step_with(&mut eval, n as u64)?;
                        series.push(eval.eval(applied));
                    }
                }
                Books::Open(codebook) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                        self.drop_seed,
                        &[TAG_SCHEME, scheme.id()],
                    ));
                    for h in &self.channels {
                        let f = open_loop_pick(codebook, &mut rng);
                        let mut eval = CapacityEvaluator::new(h, gamma)?;
                        eval.check(f)?;
                        series.push(eval.eval(f));
                    }
                }
                Books::None => {
                    let precoders = self.unquantized.as_deref().expect("computed above");
                    for (h, f) in self.channels.iter().zip(precoders) {
                        let mut eval = CapacityEvaluator::new(h, gamma)?;
                        eval.check(f)?;
                        series.push(eval.eval(f));
                    }
                }
            }
            out.push(series);
        }
        Ok(out)
    }
}

/// Per-slot capacity series of one scheme in one drop, indexed `[snr][slot]`.
pub fn run_drop(config: &SimConfig, scheme: Scheme, drop_seed: u64) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    DropContext::new(config, drop_seed)?.simulate(config, scheme)
}

/// How drops are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Mean over post-warmup slots for every `(scheme, snr)` of drop `index`,
/// flattened scheme-major.
fn drop_means(config: &SimConfig, index: usize) -> Result<Vec<f64>> {
    let mut ctx = DropContext::new(config, drop_seed(config.master_seed, index))?;
    let mut means = Vec::with_capacity(config.schemes.len() * config.snr_db.len());
    for &scheme in &config.schemes {
        for series in ctx.simulate(config, scheme)? {
            let tail = &series[config.warmup..];
            means.push(tail.iter().sum::<f64>() / tail.len() as f64);
        }
    }
    Ok(means)
}

fn all_drop_means(config: &SimConfig, execution: Execution) -> Result<Vec<Vec<f64>>> {
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..config.drops)
                .into_par_iter()
                .map(|d| drop_means(config, d))
                .collect()
        }
        _ => (0..config.drops).map(|d| drop_means(config, d)).collect(),
    }
}

/// Runs every scheme at every SNR over all drops.
pub fn sweep(config: &SimConfig) -> Result<ResultTable> {
    sweep_with(config, Execution::default())
}

pub fn sweep_with(config: &SimConfig, execution: Execution) -> Result<ResultTable> {
    config.validate()?;
    let per_drop = all_drop_means(config, execution)?;
    let drops = per_drop.len() as f64;
    let mut rows = Vec::new();
    let mut cell = 0;
    for &scheme in &config.schemes {
        for &snr_db in &config.snr_db {
            // Summed in drop order, so the result is independent of scheduling.
            let mean = per_drop.iter().map(|d| d[cell]).sum::<f64>() / drops;
            let stderr = if per_drop.len() > 1 {
                let ss = per_drop
                    .iter()
                    .map(|d| (d[cell] - mean).powi(2))
                    .sum::<f64>();
                (ss / (drops - 1.0)).sqrt() / drops.sqrt()
            } else {
                0.0
            };
            rows.push(ResultRow {
                scheme,
                snr_db,
                speed_kmh: config.speed_kmh,
                mean_se: mean,
                stderr,
                drops: config.drops,
                horizon: config.horizon,
            });
            cell += 1;
        }
    }
    Ok(ResultTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoding::capacity;

    fn small() -> SimConfig {
        SimConfig {
            drops: 4,
            horizon: 40,
            warmup: 8,
            k: 4,
            schemes: super::super::config::default_schemes(3, 4),
            ..SimConfig::default()
        }
    }

    #[test]
    fn frozen_unquantized_zero_delay_is_constant_optimum() {
        let cfg = SimConfig {
            speed_kmh: 0.0,
            delay: 0,
            ..small()
        };
        let series = run_drop(&cfg, Scheme::Unquantized, 7).unwrap();
        let ctx = DropContext::new(&cfg, 7).unwrap();
        let h = &ctx.channels()[0];
        for (s, &db) in series.iter().zip(&cfg.snr_db) {
            let gamma = SnrPoint::from_db(db).unwrap().gamma();
            let best = (1.0 + gamma * h.iter().map(|z| z.norm_sqr()).sum::<f64>()).log2();
            assert!(s.iter().all(|&c| c == s[0]));
            assert!((s[0] - best).abs() < 1e-10);
        }
    }

    #[test]
    fn frozen_rotating_reaches_mother_optimum() {
        let cfg = SimConfig {
            speed_kmh: 0.0,
            ..small()
        };
        let scheme = Scheme::Rotating { l: 3, k: 4 };
        let series = run_drop(&cfg, scheme, 11).unwrap();
        let ctx = DropContext::new(&cfg, 11).unwrap();
        let mother = ctx.mother().prefix(5).unwrap();
        let h = &ctx.channels()[0];
        for (s, &db) in series.iter().zip(&cfg.snr_db) {
            let gamma = SnrPoint::from_db(db).unwrap().gamma();
            let optimum = mother
                .iter()
                .map(|f| capacity(h, f, gamma).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(s.windows(2).all(|w| w[1] >= w[0]));
            assert!((s.last().unwrap() - optimum).abs() < 1e-12);
        }
    }

    #[test]
    fn run_drop_is_deterministic() {
        let cfg = small();
        for scheme in cfg.schemes.clone() {
            assert_eq!(
                run_drop(&cfg, scheme, 3).unwrap(),
                run_drop(&cfg, scheme, 3).unwrap()
            );
        }
    }

    #[test]
    fn single_recorded_value_is_the_mean() {
        let cfg = SimConfig {
            drops: 1,
            horizon: 9,
            warmup: 8,
            ..small()
        };
        let table = sweep(&cfg).unwrap();
        let ctx_seed = drop_seed(cfg.master_seed, 0);
        for row in &table.rows {
            let series = run_drop(&cfg, row.scheme, ctx_seed).unwrap();
            let i = cfg.snr_db.iter().position(|&s| s == row.snr_db).unwrap();
            assert_eq!(row.mean_se, series[i][8]);
            assert_eq!(row.stderr, 0.0);
        }
    }

    #[test]
    fn execution_mode_does_not_change_results() {
        let cfg = small();
        assert_eq!(
            sweep_with(&cfg, Execution::Sequential).unwrap(),
            sweep_with(&cfg, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn invalid_config_fails_before_simulating() {
        let cfg = SimConfig {
            warmup: 50,
            ..small()
        };
        assert!(sweep(&cfg).is_err());
        assert!(run_drop(&cfg, Scheme::Unquantized, 0).is_err());
    }
}
