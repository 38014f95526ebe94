//! Replicated experiments over randomised scenarios.
//!
//! Replication `r` of an experiment draws its scenario from ChaCha stream `r`
//! under the master seed; the last draw of that stream is the replication's
//! own seed, which alone drives the simulation. Records are therefore a pure
//! function of `(config, master_seed)` and independent of the worker count.

mod records;
mod summary;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::censoring::{censor, CensorKind, CensorScheme};
use crate::config::{ExperimentConfig, ParamRange};
use crate::error::{Error, Result};
use crate::inference::{build_design, deflate_delta, fit_ols, t_critical, Coef};
use crate::netgen::{generate_network, sample_gregariousness, sample_traits, GenParams};
use crate::trait_process::{evolve, EvolveParams, ModelSpec};

pub use records::{read_records_csv, write_records_csv, Realized, ReplicationRecord, RECORD_COLUMNS};
pub use summary::{
    summarize, CoefSummary, HetBand, Histogram, HomBand, StrataConfig, StratumSummary, Summary,
};

const MAX_R_RESAMPLES: usize = 10_000;

/// Everything needed to run one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub gen: GenParams,
    pub evolve: EvolveParams,
    pub spec: ModelSpec,
    pub scheme: CensorScheme,
    pub seed: u64,
}

impl Scenario {
    /// True coefficient values in design column order.
    pub fn truth(&self) -> [f64; 4] {
        [self.evolve.mu, self.evolve.gamma, self.evolve.beta, self.evolve.delta]
    }
}

fn draw<R: Rng + ?Sized>(range: &ParamRange, default_zero: f64, rng: &mut R) -> f64 {
    let p_zero = range.zero_probability.unwrap_or(default_zero);
    if p_zero > 0.0 && rng.random::<f64>() < p_zero {
        return 0.0;
    }
    if range.lo == range.hi {
        range.lo
    } else {
        rng.random_range(range.lo..=range.hi)
    }
}

/// Draws a scenario: a scheme and a network size uniformly from the
/// configured lists, then each parameter from its range (zeroed with the
/// configured probability). `(r_in, r_out)` pairs violating
/// `r_in^2 + r_out^2 < 1` are redrawn. The scenario seed is drawn last.
pub fn sample_scenario<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Scenario> {
    if config.schemes.is_empty() || config.node_counts.is_empty() {
        return Err(Error::InvalidConfig("scheme and node-count lists must be non-empty".into()));
    }
    let ranges = &config.ranges;
    let p0 = config.zero_probability;

    let scheme = config.schemes[rng.random_range(0..config.schemes.len())];
    let n = config.node_counts[rng.random_range(0..config.node_counts.len())];
    let mu = draw(&ranges.mu, p0, rng);
    let gamma = draw(&ranges.gamma, p0, rng);
    let beta = draw(&ranges.beta, p0, rng);
    let delta = draw(&ranges.delta, p0, rng);
    let sigma_h = draw(&ranges.sigma_h, p0, rng);
    let h = draw(&ranges.h, p0, rng);
    let (r_in, r_out) = (0..MAX_R_RESAMPLES)
        .map(|_| (draw(&ranges.r_in, p0, rng), draw(&ranges.r_out, p0, rng)))
        .find(|(a, b)| a * a + b * b < 1.0)
        .ok_or_else(|| Error::InvalidConfig("could not draw r_in, r_out with r_in^2 + r_out^2 < 1".into()))?;

    let gen = GenParams { n, sigma_h, h, r_in, r_out, target_mean_outdegree: config.target_mean_outdegree };
    let evolve = EvolveParams { mu, gamma, beta, delta, sigma_eps: config.sigma_eps };
    gen.validate()?;
    evolve.validate()?;
    Ok(Scenario { gen, evolve, spec: config.model, scheme, seed: rng.next_u64() })
}

/// Runs the full pipeline for one scenario. Failures are recorded on the
/// returned record rather than propagated.
pub fn run_replication(replication_id: u64, s: &Scenario) -> ReplicationRecord {
    let mut record = ReplicationRecord::new(replication_id, *s);
    if let Err(e) = replicate_into(s, &mut record) {
        record.error = Some(e.code().to_string());
    }
    record
}

fn replicate_into(s: &Scenario, record: &mut ReplicationRecord) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let n = s.gen.n;
    let y0 = sample_traits(n, &mut rng)?;
    let alpha = sample_gregariousness(n, s.gen.sigma_h, &mut rng)?;
    let (w, omega) = generate_network(&y0, &alpha, &s.gen, &mut rng)?;
    let y1 = evolve(&y0, &w, &s.evolve, s.spec, &mut rng)?;
    let x = censor(&w, &s.scheme, &y0, &mut rng)?;

    let realized = Realized {
        omega,
        mean_true_outdegree: w.mean_outdegree(),
        mean_censored_outdegree: x.mean_outdegree(),
        zero_namers: (0..n).filter(|&i| x.outdegree(i) == 0).count(),
    };
    record.realized = Some(realized);

    let design = build_design(&y0, &x)?;
    let fit = fit_ols(&design, &y1)?;

    let truth = s.truth();
    let crit = t_critical(0.95, fit.residual_df)?;
    for c in Coef::ALL {
        let k = c.index();
        if let (Some(est), Some(se)) = (fit.estimates[k], fit.std_errors[k]) {
            if se > 0.0 {
                let t = (est - truth[k]) / se;
                record.t_stats[k] = Some(t);
                record.covered_95[k] = Some(t.abs() <= crit);
            }
        }
    }
    if let (CensorKind::Fractional { .. }, Some(delta_hat)) = (s.scheme.kind, fit.estimate(Coef::Outdeg)) {
        record.deflated_delta = Some(deflate_delta(
            delta_hat,
            realized.mean_censored_outdegree,
            realized.mean_true_outdegree,
        )?);
    }
    record.fit = Some(fit);
    Ok(())
}

/// Scenario stream for replication `r`.
pub fn replication_stream(master_seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(r);
    rng
}

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Called with `(completed, total)` after each replication finishes.
    pub progress: Option<&'a (dyn Fn(usize, usize) + Sync)>,
}

/// Runs `config.replications` replications, returned in replication order.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions<'_>) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    let total = config.replications;
    let scenarios = (0..total as u64)
        .map(|r| sample_scenario(config, &mut replication_stream(config.master_seed, r)))
        .collect::<Result<Vec<_>>>()?;

    let done = AtomicUsize::new(0);
    let work = || {
        scenarios
            .par_iter()
            .enumerate()
            .map(|(r, s)| {
                let rec = run_replication(r as u64, s);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(cb) = options.progress {
                    cb(finished, total);
                }
                rec
            })
            .collect::<Vec<_>>()
    };
    let records = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(records)
}
