//! Command-line front end.
//!
//! Precedence, lowest first: built-in defaults, `--preset`, `--config`
//! file, explicit flags.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Parser;

use super::analysis::analyze;
use super::config::{default_schemes, parse_schemes, parse_snr_list, Preset, SimConfig};
use super::sim::sweep;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Default, Parser)]
#[command(
    name = "rotcb",
    about = "Rotating-codebook MIMO precoding link simulator",
    long_about = "Runs a paired-seed Monte Carlo sweep of limited-feedback precoding schemes \
                  over SNR and writes mean spectral efficiency per (scheme, SNR) as CSV."
)]
pub struct Args {
    /// Transmit antennas
    #[arg(long)]
    pub mt: Option<usize>,
    /// Receive antennas
    #[arg(long)]
    pub mr: Option<usize>,
    /// Streams per precoder
    #[arg(long)]
    pub m: Option<usize>,
    /// Feedback bits
    #[arg(long = "L")]
    pub l: Option<u32>,
    /// Number of rotating codebooks (power of two)
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Comma-separated SNR grid in dB
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    /// Mobile speed in km/h
    #[arg(long)]
    pub speed: Option<f64>,
    /// Carrier frequency in Hz
    #[arg(long)]
    pub carrier: Option<f64>,
    /// Feedback interval in seconds
    #[arg(long)]
    pub interval: Option<f64>,
    /// Feedback delay in intervals
    #[arg(long)]
    pub delay: Option<usize>,
    /// Feedback slots per drop
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Monte Carlo drops
    #[arg(long)]
    pub drops: Option<usize>,
    /// Slots excluded from averaging (default 2K)
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list of openloop, conv, conv<L>, rot, unq
    #[arg(long)]
    pub schemes: Option<String>,
    /// Named scenario: fig2, fig5, fig6 or fig7
    #[arg(long)]
    pub preset: Option<String>,
    /// CSV output path (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value configuration file mirroring the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Reads `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key=value, got `{line}`",
                lineno + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--").to_string();
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl Args {
    /// Fills unset fields from a parsed config file.
    pub fn merge_file(&mut self, file: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in file {
            let v = value.as_str();
            match key.as_str() {
                "mt" => self.mt = self.mt.or(Some(parse_value(key, v)?)),
                "mr" => self.mr = self.mr.or(Some(parse_value(key, v)?)),
                "m" => self.m = self.m.or(Some(parse_value(key, v)?)),
                "L" => self.l = self.l.or(Some(parse_value(key, v)?)),
                "K" => self.k = self.k.or(Some(parse_value(key, v)?)),
                "snr-db" => self.snr_db = self.snr_db.take().or(Some(v.to_string())),
                "speed" => self.speed = self.speed.or(Some(parse_value(key, v)?)),
                "carrier" => self.carrier = self.carrier.or(Some(parse_value(key, v)?)),
                "interval" => self.interval = self.interval.or(Some(parse_value(key, v)?)),
                "delay" => self.delay = self.delay.or(Some(parse_value(key, v)?)),
                "horizon" => self.horizon = self.horizon.or(Some(parse_value(key, v)?)),
                "drops" => self.drops = self.drops.or(Some(parse_value(key, v)?)),
                "warmup" => self.warmup = self.warmup.or(Some(parse_value(key, v)?)),
                "seed" => self.seed = self.seed.or(Some(parse_value(key, v)?)),
                "schemes" => self.schemes = self.schemes.take().or(Some(v.to_string())),
                "preset" => self.preset = self.preset.take().or(Some(v.to_string())),
                "out" => self.out = self.out.take().or(Some(PathBuf::from(v))),
                other => return Err(Error::Config(format!("unknown config key `{other}`"))),
            }
        }
        Ok(())
    }

    /// Resolves the final configuration, reading `--config` if given.
    pub fn resolve(mut self) -> Result<(SimConfig, Option<PathBuf>)> {
        if let Some(path) = self.config.clone() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            self.merge_file(&parse_config_text(&text)?)?;
        }
        let preset = self
            .preset
            .as_deref()
            .map(str::parse::<Preset>)
            .transpose()?;
        let base = preset.map(Preset::config).unwrap_or_default();

        let l = self.l.unwrap_or(base.l);
        let k = self.k.unwrap_or(base.k);
        let warmup = match (self.warmup, self.k) {
            (Some(w), _) => w,
            // Changing K moves the default warmup with it.
            (None, Some(k)) => 2 * k,
            (None, None) => base.warmup,
        };
        let schemes = match (&self.schemes, preset) {
            (Some(list), _) => parse_schemes(list, l, k)?,
            (None, Some(p)) => parse_schemes(p.schemes(), l, k)?,
            (None, None) => default_schemes(l, k),
        };
        let snr_db = match &self.snr_db {
            Some(list) => parse_snr_list(list)?,
            None => base.snr_db.clone(),
        };
        let config = SimConfig {
            m_t: self.mt.unwrap_or(base.m_t),
            m_r: self.mr.unwrap_or(base.m_r),
            m: self.m.unwrap_or(base.m),
            l,
            k,
            snr_db,
            speed_kmh: self.speed.unwrap_or(base.speed_kmh),
            carrier_hz: self.carrier.unwrap_or(base.carrier_hz),
            interval_s: self.interval.unwrap_or(base.interval_s),
            delay: self.delay.unwrap_or(base.delay),
            horizon: self.horizon.unwrap_or(base.horizon),
            drops: self.drops.unwrap_or(base.drops),
            warmup,
            master_seed: self.seed.unwrap_or(base.master_seed),
            schemes,
        };
        config.validate()?;
        Ok((config, self.out))
    }
}

/// Runs the CLI with explicit arguments (first item is the program name)
/// and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (config, out) = match args.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("rotcb: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&config, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rotcb: {e}");
            EXIT_RUNTIME
        }
    }
}

fn execute(config: &SimConfig, out: Option<PathBuf>) -> Result<()> {
    // Open the output first so an unwritable path fails before the sweep.
    let file = out
        .as_ref()
        .map(|path| {
            File::create(path).map_err(|e| {
                Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
            })
        })
        .transpose()?;
    let table = sweep(config)?;
    let metrics = analyze(&table, config)?;
    match file {
        Some(file) => {
            let mut w = BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush()?;
            println!("{metrics}");
        }
        None => {
            let mut w = io::stdout().lock();
            table.write_csv(&mut w)?;
            w.flush()?;
            eprintln!("{metrics}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Scheme;

    fn parse(args: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("rotcb").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_map_onto_config() {
        let (cfg, out) = parse(&[
            "--L",
            "4",
            "--K",
            "64",
            "--mt",
            "8",
            "--mr",
            "1",
            "--speed",
            "3",
            "--carrier",
            "2e9",
            "--interval",
            "3e-3",
            "--snr-db",
            "-5,0,5",
            "--out",
            "x.csv",
        ])
        .resolve()
        .unwrap();
        assert_eq!((cfg.l, cfg.k, cfg.m_t, cfg.m_r), (4, 64, 8, 1));
        assert_eq!(cfg.warmup, 128);
        assert_eq!(cfg.snr_db, vec![-5.0, 0.0, 5.0]);
        assert!(cfg.schemes.contains(&Scheme::Rotating { l: 4, k: 64 }));
        assert!(cfg.schemes.contains(&Scheme::Conventional { l: 10 }));
        assert_eq!(out, Some(PathBuf::from("x.csv")));
    }

    #[test]
    fn preset_then_flags() {
        let (cfg, _) = parse(&["--preset", "fig5", "--drops", "7"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.drops, 7);
        assert_eq!(cfg.k, 64);
        assert_eq!(cfg.schemes.len(), 6);
        let (cfg, _) = parse(&["--preset", "fig7", "--speed", "60"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.speed_kmh, 60.0);
        assert!(parse(&["--preset", "fig9"]).resolve().is_err());
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let text = "# scenario\nmt = 2\nL=2\nK=2\ndrops=5\nsnr-db=1,2\n\nschemes=conv,rot\n";
        let file = parse_config_text(text).unwrap();
        let mut args = parse(&["--drops", "9"]);
        args.merge_file(&file).unwrap();
        let (cfg, _) = args.resolve().unwrap();
        assert_eq!(cfg.m_t, 2);
        assert_eq!(cfg.drops, 9);
        assert_eq!(cfg.snr_db, vec![1.0, 2.0]);
        assert_eq!(
            cfg.schemes,
            vec![
                Scheme::Conventional { l: 2 },
                Scheme::Rotating { l: 2, k: 2 }
            ]
        );
    }

    #[test]
    fn malformed_config() {
        assert!(parse_config_text("novalue").is_err());
        let mut args = Args::default();
        let file = parse_config_text("bogus=1").unwrap();
        assert!(args.merge_file(&file).is_err());
        let file = parse_config_text("mt=eight").unwrap();
        assert!(args.merge_file(&file).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["rotcb", "--help"]), EXIT_OK);
        assert_eq!(run(["rotcb", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["rotcb", "--K", "6"]), EXIT_USAGE);
        let dir = tempfile::tempdir().unwrap();
        let unwritable = dir.path().join("missing").join("out.csv");
        let code = run([
            "rotcb".to_string(),
            "--drops".into(),
            "2".into(),
            "--horizon".into(),
            "20".into(),
            "--out".into(),
            unwritable.display().to_string(),
        ]);
        assert_eq!(code, EXIT_RUNTIME);
    }
}
