use std::io::Write;

use crate::protocol::Scheme;
use crate::Result;

pub const CSV_HEADER: &str = "scheme,snr_db,speed_kmh,L,K,mean_se_bps_hz,stderr,drops,horizon";

/// One `(scheme, snr)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub speed_kmh: f64,
    /// Mean spectral efficiency in bits/s/Hz.
    pub mean_se: f64,
    /// Standard deviation of per-drop means over `sqrt(drops)`.
    pub stderr: f64,
    pub drops: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, scheme: Scheme, snr_db: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.snr_db == snr_db)
    }

    /// `(snr_db, mean_se)` points of one scheme, in table order.
    pub fn curve(&self, scheme: Scheme) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| (r.snr_db, r.mean_se))
            .collect()
    }

    /// Distinct schemes in first-appearance order.
    pub fn schemes(&self) -> Vec<Scheme> {
        let mut out: Vec<Scheme> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.scheme) {
                out.push(r.scheme);
            }
        }
        out
    }

    /// Writes the CSV: fixed header, one row per cell, shortest round-trip
    /// decimal floats. `L` is the feedback bits per message (`0` for open
    /// loop, `inf` for unquantized feedback).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            let l = match r.scheme.feedback_bits() {
                Some(l) => l.to_string(),
                None => "inf".to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.scheme.name(),
                r.snr_db,
                r.speed_kmh,
                l,
                r.scheme.k(),
                r.mean_se,
                r.stderr,
                r.drops,
                r.horizon
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let table = ResultTable {
            rows: vec![
                ResultRow {
                    scheme: Scheme::Rotating { l: 4, k: 64 },
                    snr_db: -2.5,
                    speed_kmh: 3.0,
                    mean_se: 1.25,
                    stderr: 0.1,
                    drops: 10,
                    horizon: 20,
                },
                ResultRow {
                    scheme: Scheme::Unquantized,
                    snr_db: 5.0,
                    speed_kmh: 3.0,
                    mean_se: 2.0,
                    stderr: 0.0,
                    drops: 10,
                    horizon: 20,
                },
                ResultRow {
                    scheme: Scheme::OpenLoop { l: 4 },
                    snr_db: 5.0,
                    speed_kmh: 3.0,
                    mean_se: 0.5,
                    stderr: 0.0,
                    drops: 10,
                    horizon: 20,
                },
            ],
        };
        assert_eq!(
            table.to_csv_string(),
            "scheme,snr_db,speed_kmh,L,K,mean_se_bps_hz,stderr,drops,horizon\n\
             rot,-2.5,3,4,64,1.25,0.1,10,20\n\
             unq,5,3,inf,1,2,0,10,20\n\
             openloop,5,3,0,1,0.5,0,10,20\n"
        );
        assert_eq!(table.curve(Scheme::Unquantized), vec![(5.0, 2.0)]);
        assert_eq!(table.schemes().len(), 3);
    }
}
