//! Stratified summaries of replication records.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::censoring::CensorKind;
use crate::error::{Error, Result};
use crate::inference::{t_critical, Coef};

use super::ReplicationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HetBand {
    Zero,
    Low,
    High,
}

impl HetBand {
    pub const ALL: [HetBand; 3] = [HetBand::Zero, HetBand::Low, HetBand::High];

    pub fn of(sigma_h: f64, high_threshold: f64) -> Self {
        if sigma_h == 0.0 {
            HetBand::Zero
        } else if sigma_h < high_threshold {
            HetBand::Low
        } else {
            HetBand::High
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HetBand::Zero => "zero",
            HetBand::Low => "low",
            HetBand::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HomBand {
    Neg,
    Zero,
    Pos,
}

impl HomBand {
    pub const ALL: [HomBand; 3] = [HomBand::Neg, HomBand::Zero, HomBand::Pos];

    pub fn of(h: f64) -> Self {
        if h < 0.0 {
            HomBand::Neg
        } else if h == 0.0 {
            HomBand::Zero
        } else {
            HomBand::Pos
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HomBand::Neg => "neg",
            HomBand::Zero => "zero",
            HomBand::Pos => "pos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrataConfig {
    /// `sigma_h` at or above this is "high" heterogeneity.
    pub het_high_threshold: f64,
    pub coverage_levels: Vec<f64>,
    pub hist_bins: usize,
    /// Histogram covers `[-hist_limit, hist_limit]`.
    pub hist_limit: f64,
}

impl Default for StrataConfig {
    fn default() -> Self {
        StrataConfig { het_high_threshold: 1.0, coverage_levels: vec![0.5, 0.95, 0.99], hist_bins: 81, hist_limit: 8.0 }
    }
}

pub fn stratum_key(scheme: &str, het: HetBand, hom: HomBand) -> String {
    format!("scheme={scheme}|het={}|hom={}", het.label(), hom.label())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    fn new(bins: usize, limit: f64) -> Self {
        let width = 2.0 * limit / bins as f64;
        let edges = (0..=bins).map(|k| -limit + k as f64 * width).collect();
        Histogram { edges, counts: vec![0; bins], below: 0, above: 0 }
    }

    fn add(&mut self, t: f64) {
        let bins = self.counts.len();
        let lo = self.edges[0];
        let hi = self.edges[bins];
        if t < lo {
            self.below += 1;
        } else if t > hi {
            self.above += 1;
        } else {
            let k = (((t - lo) / (hi - lo)) * bins as f64).floor() as usize;
            self.counts[k.min(bins - 1)] += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefSummary {
    /// Records with an estimate for this coefficient.
    pub estimated: usize,
    pub unidentifiable: usize,
    pub fraction_unidentifiable: Option<f64>,
    pub mean_estimate: Option<f64>,
    /// Mean of `estimate - truth`.
    pub mean_bias: Option<f64>,
    /// Standard deviation of `estimate - truth`.
    pub sd_error: Option<f64>,
    /// Least-squares slope of estimate on truth through the origin.
    pub slope_origin: Option<f64>,
    /// Slope and intercept of estimate on truth.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Empirical coverage keyed by nominal level.
    pub coverage: BTreeMap<String, Option<f64>>,
    pub coverage_count: usize,
    pub t_histogram: Option<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumSummary {
    pub scheme: String,
    pub het: HetBand,
    pub hom: HomBand,
    pub count: usize,
    pub coefficients: BTreeMap<String, CoefSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub successful: usize,
    pub failed: usize,
    pub failures: BTreeMap<String, usize>,
    pub strata: BTreeMap<String, StratumSummary>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is always serialisable")
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn sd(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v)?;
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// `(slope through origin, slope, intercept)` of `y` on `x`.
fn slopes(x: &[f64], y: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let sxx0: f64 = x.iter().map(|a| a * a).sum();
    let sxy0: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let origin = (sxx0 > 0.0).then(|| sxy0 / sxx0);
    let (Some(mx), Some(my)) = (mean(x), mean(y)) else {
        return (origin, None, None);
    };
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx > 0.0 {
        let slope = sxy / sxx;
        (origin, Some(slope), Some(my - slope * mx))
    } else {
        (origin, None, None)
    }
}

struct CriticalValues {
    cache: HashMap<(usize, u64), f64>,
}

impl CriticalValues {
    fn get(&mut self, level: f64, df: usize) -> Result<f64> {
        if let Some(&v) = self.cache.get(&(df, level.to_bits())) {
            return Ok(v);
        }
        let v = t_critical(level, df)?;
        self.cache.insert((df, level.to_bits()), v);
        Ok(v)
    }
}

fn level_key(level: f64) -> String {
    format!("{level}")
}

fn summarize_coef(
    records: &[&ReplicationRecord],
    coef: Option<Coef>,
    cfg: &StrataConfig,
    crit: &mut CriticalValues,
) -> Result<CoefSummary> {
    let mut truths = Vec::new();
    let mut estimates = Vec::new();
    let mut unidentifiable = 0;
    let mut hist = Histogram::new(cfg.hist_bins, cfg.hist_limit);
    let mut hits = vec![0usize; cfg.coverage_levels.len()];
    let mut coverage_count = 0;

    for r in records {
        let fit = r.fit.as_ref().expect("summaries only see successful records");
        let k = coef.map_or(Coef::Outdeg.index(), |c| c.index());
        if !fit.identifiable[k] {
            unidentifiable += 1;
            continue;
        }
        let truth = r.scenario.truth()[k];
        let estimate = match coef {
            Some(_) => fit.estimates[k],
            None => r.deflated_delta,
        };
        let Some(estimate) = estimate else { continue };
        truths.push(truth);
        estimates.push(estimate);

        if let (Some(_), Some(t)) = (coef, r.t_stats[k]) {
            coverage_count += 1;
            hist.add(t);
            for (hit, &level) in hits.iter_mut().zip(&cfg.coverage_levels) {
                if t.abs() <= crit.get(level, fit.residual_df)? {
                    *hit += 1;
                }
            }
        }
    }

    let errors: Vec<f64> = estimates.iter().zip(&truths).map(|(e, t)| e - t).collect();
    let (slope_origin, slope, intercept) = slopes(&truths, &estimates);
    let considered = estimates.len() + unidentifiable;
    let coverage = if coef.is_some() {
        cfg.coverage_levels
            .iter()
            .zip(&hits)
            .map(|(&level, &h)| (level_key(level), (coverage_count > 0).then(|| h as f64 / coverage_count as f64)))
            .collect()
    } else {
        BTreeMap::new()
    };
    Ok(CoefSummary {
        estimated: estimates.len(),
        unidentifiable,
        fraction_unidentifiable: (considered > 0).then(|| unidentifiable as f64 / considered as f64),
        mean_estimate: mean(&estimates),
        mean_bias: mean(&errors),
        sd_error: sd(&errors),
        slope_origin,
        slope,
        intercept,
        coverage,
        coverage_count,
        t_histogram: (coef.is_some() && coverage_count > 0).then_some(hist),
    })
}

/// Summarises records per `(scheme, heterogeneity band, homophily band)`.
///
/// Every combination of a scheme present in `records` with every band is
/// reported, empty ones with `count = 0`. Failed replications are counted
/// separately and excluded from all strata.
pub fn summarize(records: &[ReplicationRecord], cfg: &StrataConfig) -> Result<Summary> {
    let successful: Vec<&ReplicationRecord> = records.iter().filter(|r| r.is_success()).collect();
    if successful.is_empty() {
        return Err(Error::Records("no successful replications to summarise".into()));
    }
    let mut failures = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_success()) {
        *failures.entry(r.error.clone().unwrap_or_else(|| "unknown".into())).or_insert(0) += 1;
    }

    let schemes: BTreeSet<String> = records.iter().map(|r| r.scenario.scheme.to_string()).collect();
    let mut groups: BTreeMap<(String, HetBand, HomBand), Vec<&ReplicationRecord>> = BTreeMap::new();
    for s in &schemes {
        for het in HetBand::ALL {
            for hom in HomBand::ALL {
                groups.insert((s.clone(), het, hom), Vec::new());
            }
        }
    }
    for r in &successful {
        let g = &r.scenario.gen;
        let key = (r.scenario.scheme.to_string(), HetBand::of(g.sigma_h, cfg.het_high_threshold), HomBand::of(g.h));
        groups.get_mut(&key).expect("all keys pre-populated").push(r);
    }

    let mut crit = CriticalValues { cache: HashMap::new() };
    let mut strata = BTreeMap::new();
    for ((scheme, het, hom), members) in groups {
        let mut coefficients = BTreeMap::new();
        if !members.is_empty() {
            for c in Coef::ALL {
                coefficients.insert(c.param_name().to_string(), summarize_coef(&members, Some(c), cfg, &mut crit)?);
            }
            if members.iter().any(|r| matches!(r.scenario.scheme.kind, CensorKind::Fractional { .. })) {
                coefficients.insert("delta_deflated".to_string(), summarize_coef(&members, None, cfg, &mut crit)?);
            }
        }
        strata.insert(
            stratum_key(&scheme, het, hom),
            StratumSummary { scheme, het, hom, count: members.len(), coefficients },
        );
    }

    Ok(Summary {
        total: records.len(),
        successful: successful.len(),
        failed: records.len() - successful.len(),
        failures,
        strata,
    })
}
