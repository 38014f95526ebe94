//! Experiment configuration.
//!
//! [`ConfigFile`] mirrors the on-disk document (any serde format; the CLI
//! uses TOML). [`ConfigFile::into_config`] turns it into a validated
//! [`ExperimentConfig`], reporting the offending field on failure.

use std::path::PathBuf;

use serde::Deserialize;

use crate::censoring::CensorScheme;
use crate::error::{Error, Result};
use crate::trait_process::ModelSpec;

/// Uniform range for one scenario parameter. With probability
/// `zero_probability` the parameter is set to exactly zero instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    /// Overrides the experiment-wide zero probability when set.
    pub zero_probability: Option<f64>,
}

impl ParamRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        ParamRange { lo, hi, zero_probability: None }
    }

    pub const fn fixed(v: f64) -> Self {
        ParamRange { lo: v, hi: v, zero_probability: Some(0.0) }
    }

    pub fn with_zero_probability(mut self, p: f64) -> Self {
        self.zero_probability = Some(p);
        self
    }

    /// Smallest absolute value a non-zeroed draw can take.
    pub fn min_abs(&self) -> f64 {
        if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub mu: ParamRange,
    pub gamma: ParamRange,
    pub beta: ParamRange,
    pub delta: ParamRange,
    pub sigma_h: ParamRange,
    pub h: ParamRange,
    pub r_in: ParamRange,
    pub r_out: ParamRange,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            mu: ParamRange::fixed(0.0),
            gamma: ParamRange::new(-0.3, 0.3),
            beta: ParamRange::new(-0.3, 0.3),
            delta: ParamRange::new(-0.2, 0.2),
            sigma_h: ParamRange::new(0.0, 2.0),
            h: ParamRange::new(-1.0, 1.0),
            r_in: ParamRange::new(-0.5, 0.5),
            r_out: ParamRange::new(-0.5, 0.5),
        }
    }
}

impl ParamRanges {
    fn named(&self) -> [(&'static str, &ParamRange); 8] {
        [
            ("mu", &self.mu),
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("sigma_h", &self.sigma_h),
            ("h", &self.h),
            ("r_in", &self.r_in),
            ("r_out", &self.r_out),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    pub records: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub replications: usize,
    pub master_seed: u64,
    pub node_counts: Vec<usize>,
    pub target_mean_outdegree: f64,
    /// Probability that a zeroable parameter is set to exactly 0.
    pub zero_probability: f64,
    pub sigma_eps: f64,
    pub model: ModelSpec,
    pub schemes: Vec<CensorScheme>,
    pub ranges: ParamRanges,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            replications: 2000,
            master_seed: 1,
            node_counts: vec![100, 200],
            target_mean_outdegree: 10.0,
            zero_probability: 0.5,
            sigma_eps: 1.0,
            model: ModelSpec::CenteredGeneral,
            schemes: ["none", "hard:1", "flexible:1:poisson", "fractional:0.1"]
                .iter()
                .map(|s| s.parse().expect("built-in scheme label"))
                .collect(),
            ranges: ParamRanges::default(),
            output: OutputPaths::default(),
        }
    }
}

fn nested(e: Error) -> String {
    match e {
        Error::InvalidConfig(m) => m,
        other => other.to_string(),
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(field_err("replications", "must be >= 1"));
        }
        if self.node_counts.is_empty() {
            return Err(field_err("node_counts", "must list at least one network size"));
        }
        if !(self.target_mean_outdegree.is_finite() && self.target_mean_outdegree > 0.0) {
            return Err(field_err("target_mean_outdegree", "must be > 0"));
        }
        for (i, &n) in self.node_counts.iter().enumerate() {
            // Four coefficients need at least five observations.
            if n < 5 {
                return Err(field_err(&format!("node_counts[{i}]"), format!("{n} nodes is too few (minimum 5)")));
            }
            let arcs = (n as f64 * self.target_mean_outdegree).round();
            if arcs < 1.0 || arcs > (n * (n - 1)) as f64 {
                return Err(field_err(
                    "target_mean_outdegree",
                    format!("{} is infeasible for {n} nodes", self.target_mean_outdegree),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.zero_probability) {
            return Err(field_err("zero_probability", "must lie in [0, 1]"));
        }
        if !(self.sigma_eps.is_finite() && self.sigma_eps >= 0.0) {
            return Err(field_err("sigma_eps", "must be >= 0"));
        }
        for (name, r) in self.ranges.named() {
            let field = format!("ranges.{name}");
            if !(r.lo.is_finite() && r.hi.is_finite()) {
                return Err(field_err(&field, "bounds must be finite"));
            }
            if r.lo > r.hi {
                return Err(field_err(&field, format!("empty range [{}, {}]", r.lo, r.hi)));
            }
            if let Some(p) = r.zero_probability {
                if !(0.0..=1.0).contains(&p) {
                    return Err(field_err(&field, "zero_probability must lie in [0, 1]"));
                }
            }
        }
        if self.ranges.sigma_h.lo < 0.0 {
            return Err(field_err("ranges.sigma_h", "heterogeneity sd must be >= 0"));
        }
        let (a, b) = (self.ranges.r_in.min_abs(), self.ranges.r_out.min_abs());
        if a * a + b * b >= 1.0 {
            return Err(field_err(
                "ranges.r_in/ranges.r_out",
                format!("r_in^2 + r_out^2 must be < 1, but the smallest non-zero draws give {}", a * a + b * b),
            ));
        }
        if self.schemes.is_empty() {
            return Err(field_err("schemes", "must list at least one censoring scheme"));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            s.validate().map_err(|e| field_err(&format!("schemes[{i}]"), nested(e)))?;
        }
        Ok(())
    }
}

/// Range as written in a config file: a number (always that value), `[lo, hi]`, or
/// `{ lo, hi, zero_probability }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Fixed(f64),
    Pair([f64; 2]),
    Table {
        lo: f64,
        hi: f64,
        #[serde(default)]
        zero_probability: Option<f64>,
    },
}

impl From<RangeSpec> for ParamRange {
    fn from(r: RangeSpec) -> Self {
        match r {
            RangeSpec::Fixed(v) => ParamRange::fixed(v),
            RangeSpec::Pair([lo, hi]) => ParamRange::new(lo, hi),
            RangeSpec::Table { lo, hi, zero_probability } => ParamRange { lo, hi, zero_probability },
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangesFile {
    pub mu: Option<RangeSpec>,
    pub gamma: Option<RangeSpec>,
    pub beta: Option<RangeSpec>,
    pub delta: Option<RangeSpec>,
    pub sigma_h: Option<RangeSpec>,
    pub h: Option<RangeSpec>,
    pub r_in: Option<RangeSpec>,
    pub r_out: Option<RangeSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub records: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// On-disk configuration document. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub replications: Option<usize>,
    pub master_seed: Option<u64>,
    pub node_counts: Option<Vec<usize>>,
    pub target_mean_outdegree: Option<f64>,
    pub zero_probability: Option<f64>,
    pub sigma_eps: Option<f64>,
    pub model: Option<String>,
    pub schemes: Option<Vec<String>>,
    #[serde(default)]
    pub ranges: RangesFile,
    #[serde(default)]
    pub output: OutputFile,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(v) = self.replications {
            cfg.replications = v;
        }
        if let Some(v) = self.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.node_counts {
            cfg.node_counts = v;
        }
        if let Some(v) = self.target_mean_outdegree {
            cfg.target_mean_outdegree = v;
        }
        if let Some(v) = self.zero_probability {
            cfg.zero_probability = v;
        }
        if let Some(v) = self.sigma_eps {
            cfg.sigma_eps = v;
        }
        if let Some(m) = self.model {
            cfg.model = m.parse().map_err(|e| field_err("model", nested(e)))?;
        }
        if let Some(list) = self.schemes {
            cfg.schemes = list
                .iter()
                .enumerate()
                .map(|(i, s)| s.parse::<CensorScheme>().map_err(|e| field_err(&format!("schemes[{i}]"), nested(e))))
                .collect::<Result<_>>()?;
        }
        let r = self.ranges;
        let slots = [
            (r.mu, &mut cfg.ranges.mu),
            (r.gamma, &mut cfg.ranges.gamma),
            (r.beta, &mut cfg.ranges.beta),
            (r.delta, &mut cfg.ranges.delta),
            (r.sigma_h, &mut cfg.ranges.sigma_h),
            (r.h, &mut cfg.ranges.h),
            (r.r_in, &mut cfg.ranges.r_in),
            (r.r_out, &mut cfg.ranges.r_out),
        ];
        for (spec, slot) in slots {
            if let Some(spec) = spec {
                *slot = spec.into();
            }
        }
        cfg.output = OutputPaths { records: self.output.records, summary: self.output.summary };
        cfg.validate()?;
        Ok(cfg)
    }
}
