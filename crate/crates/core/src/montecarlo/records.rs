//! Per-replication records and their CSV form.
//!
//! Columns are fixed (see [`RECORD_COLUMNS`]). Floats are written with 17
//! significant digits so they parse back to the same `f64`; booleans are
//! `0`/`1`; absent values are empty fields.

use std::io::{Read, Write};

use crate::censoring::CensorScheme;
use crate::error::{Error, Result};
use crate::inference::FitResult;
use crate::netgen::GenParams;
use crate::trait_process::{EvolveParams, ModelSpec};

use super::Scenario;

/// Network statistics realised in one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realized {
    pub omega: f64,
    pub mean_true_outdegree: f64,
    pub mean_censored_outdegree: f64,
    /// Egos with no named alters after censoring.
    pub zero_namers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication_id: u64,
    pub scenario: Scenario,
    pub realized: Option<Realized>,
    pub fit: Option<FitResult>,
    /// Only for fractional naming with an identifiable outdegree effect.
    pub deflated_delta: Option<f64>,
    pub t_stats: [Option<f64>; 4],
    pub covered_95: [Option<bool>; 4],
    /// Error code of a failed replication.
    pub error: Option<String>,
}

impl ReplicationRecord {
    pub fn new(replication_id: u64, scenario: Scenario) -> Self {
        ReplicationRecord {
            replication_id,
            scenario,
            realized: None,
            fit: None,
            deflated_delta: None,
            t_stats: [None; 4],
            covered_95: [None; 4],
            error: None,
        }
    }

    pub fn is_success(&self) -> bool {
        self.error.is_none() && self.fit.is_some()
    }
}

pub const RECORD_COLUMNS: &[&str] = &[
    "replication_id",
    "seed",
    "scheme",
    "model",
    "n",
    "target_mean_outdegree",
    "sigma_h",
    "h",
    "r_in",
    "r_out",
    "mu",
    "gamma",
    "beta",
    "delta",
    "sigma_eps",
    "omega",
    "mean_true_outdegree",
    "mean_censored_outdegree",
    "zero_namers",
    "rank",
    "residual_df",
    "sigma_hat",
    "max_leverage",
    "est_mu",
    "est_gamma",
    "est_beta",
    "est_delta",
    "se_mu",
    "se_gamma",
    "se_beta",
    "se_delta",
    "ident_mu",
    "ident_gamma",
    "ident_beta",
    "ident_delta",
    "t_mu",
    "t_gamma",
    "t_beta",
    "t_delta",
    "cov95_mu",
    "cov95_gamma",
    "cov95_beta",
    "cov95_delta",
    "deflated_delta",
    "error",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn to_row(r: &ReplicationRecord) -> Vec<String> {
    let s = &r.scenario;
    let mut row = vec![
        r.replication_id.to_string(),
        s.seed.to_string(),
        s.scheme.to_string(),
        s.spec.label(),
        s.gen.n.to_string(),
        float(s.gen.target_mean_outdegree),
        float(s.gen.sigma_h),
        float(s.gen.h),
        float(s.gen.r_in),
        float(s.gen.r_out),
        float(s.evolve.mu),
        float(s.evolve.gamma),
        float(s.evolve.beta),
        float(s.evolve.delta),
        float(s.evolve.sigma_eps),
    ];
    match &r.realized {
        Some(z) => row.extend([
            float(z.omega),
            float(z.mean_true_outdegree),
            float(z.mean_censored_outdegree),
            z.zero_namers.to_string(),
        ]),
        None => row.extend(std::iter::repeat_n(String::new(), 4)),
    }
    match &r.fit {
        Some(f) => {
            row.extend([f.rank.to_string(), f.residual_df.to_string(), float(f.sigma_hat), float(f.max_leverage)]);
            row.extend(f.estimates.iter().map(|v| opt_float(*v)));
            row.extend(f.std_errors.iter().map(|v| opt_float(*v)));
            row.extend(f.identifiable.iter().map(|&b| flag(b)));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 16)),
    }
    row.extend(r.t_stats.iter().map(|v| opt_float(*v)));
    row.extend(r.covered_95.iter().map(|v| v.map(flag).unwrap_or_default()));
    row.push(opt_float(r.deflated_delta));
    row.push(r.error.clone().unwrap_or_default());
    debug_assert_eq!(row.len(), RECORD_COLUMNS.len());
    row
}

/// Writes the header and one row per record (UTF-8, LF line endings).
pub fn write_records_csv<W: Write>(out: W, records: &[ReplicationRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record(to_row(r))?;
    }
    w.flush()?;
    Ok(())
}

struct Row<'a> {
    line: u64,
    fields: &'a csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, col: usize) -> &str {
        self.fields.get(col).unwrap_or("")
    }

    fn err(&self, col: usize, what: &str) -> Error {
        Error::Records(format!("line {}, column {}: {what}", self.line, RECORD_COLUMNS[col]))
    }

    fn opt<T: std::str::FromStr>(&self, col: usize) -> Result<Option<T>> {
        let v = self.raw(col);
        if v.is_empty() {
            return Ok(None);
        }
        v.parse().map(Some).map_err(|_| self.err(col, &format!("cannot parse {v:?}")))
    }

    fn req<T: std::str::FromStr>(&self, col: usize) -> Result<T> {
        self.opt(col)?.ok_or_else(|| self.err(col, "missing value"))
    }

    fn opt_flag(&self, col: usize) -> Result<Option<bool>> {
        match self.raw(col) {
            "" => Ok(None),
            "0" => Ok(Some(false)),
            "1" => Ok(Some(true)),
            v => Err(self.err(col, &format!("expected 0 or 1, got {v:?}"))),
        }
    }
}

fn from_row(row: &Row<'_>) -> Result<ReplicationRecord> {
    let scheme: CensorScheme = row.raw(2).parse().map_err(|e| row.err(2, &format!("{e}")))?;
    let spec: ModelSpec = row.raw(3).parse().map_err(|e| row.err(3, &format!("{e}")))?;
    let scenario = Scenario {
        seed: row.req(1)?,
        scheme,
        spec,
        gen: GenParams {
            n: row.req(4)?,
            target_mean_outdegree: row.req(5)?,
            sigma_h: row.req(6)?,
            h: row.req(7)?,
            r_in: row.req(8)?,
            r_out: row.req(9)?,
        },
        evolve: EvolveParams {
            mu: row.req(10)?,
            gamma: row.req(11)?,
            beta: row.req(12)?,
            delta: row.req(13)?,
            sigma_eps: row.req(14)?,
        },
    };
    let mut rec = ReplicationRecord::new(row.req(0)?, scenario);
    if let Some(omega) = row.opt(15)? {
        rec.realized = Some(Realized {
            omega,
            mean_true_outdegree: row.req(16)?,
            mean_censored_outdegree: row.req(17)?,
            zero_namers: row.req(18)?,
        });
    }
    if let Some(rank) = row.opt(19)? {
        let mut fit = FitResult {
            estimates: [None; 4],
            std_errors: [None; 4],
            identifiable: [false; 4],
            rank,
            residual_df: row.req(20)?,
            sigma_hat: row.req(21)?,
            max_leverage: row.req(22)?,
        };
        for k in 0..4 {
            fit.estimates[k] = row.opt(23 + k)?;
            fit.std_errors[k] = row.opt(27 + k)?;
            fit.identifiable[k] = row.opt_flag(31 + k)?.ok_or_else(|| row.err(31 + k, "missing value"))?;
        }
        rec.fit = Some(fit);
    }
    for k in 0..4 {
        rec.t_stats[k] = row.opt(35 + k)?;
        rec.covered_95[k] = row.opt_flag(39 + k)?;
    }
    rec.deflated_delta = row.opt(43)?;
    let err = row.raw(44);
    rec.error = (!err.is_empty()).then(|| err.to_string());
    Ok(rec)
}

/// Parses a records file written by [`write_records_csv`]. An empty input
/// (no header) is an error; a header with no rows yields no records.
pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ReplicationRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers.get(0) == Some("")) {
        return Err(Error::Records("empty records file".into()));
    }
    if headers.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(Error::Records("header does not match the records column layout".into()));
    }
    let mut out = Vec::new();
    for (i, fields) in reader.records().enumerate() {
        let fields = fields?;
        out.push(from_row(&Row { line: i as u64 + 2, fields: &fields })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::montecarlo::{run_experiment, RunOptions};

    #[test]
    fn csv_round_trip_preserves_records() {
        let cfg = ExperimentConfig { replications: 12, ..Default::default() };
        let recs = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 13);
        let back = read_records_csv(&buf[..]).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn failed_rows_keep_their_code() {
        let cfg = ExperimentConfig { replications: 1, ..Default::default() };
        let mut recs = run_experiment(&cfg, &RunOptions::default()).unwrap();
        recs[0].fit = None;
        recs[0].t_stats = [None; 4];
        recs[0].covered_95 = [None; 4];
        recs[0].deflated_delta = None;
        recs[0].error = Some("degenerate-fit".into());
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        assert_eq!(read_records_csv(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn empty_and_foreign_inputs_are_rejected() {
        assert!(read_records_csv(&b""[..]).is_err());
        assert!(read_records_csv(&b"a,b,c\n1,2,3\n"[..]).is_err());
    }
}
