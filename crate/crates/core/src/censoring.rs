//! Naming mechanisms that turn the true network `W` into the observed `X`.
//!
//! Every mechanism keeps a subset of each ego's true alters, so `X <= W`
//! cellwise. Rows are censored independently: each call draws one base seed
//! from the caller's stream, and row `i` uses its own ChaCha stream `i` under
//! that seed. The result therefore does not depend on the order in which rows
//! are visited.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{Sociomatrix, TraitVector};

/// Trait-dependent naming preference.
///
/// The weight of alter `j` for ego `i` is
/// `exp(lambda_attr * y_j - lambda_sim * |y_i - y_j|)`. This exponential form
/// is a modelling choice of this crate; `(0, 0)` is uniform naming.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NamingPreference {
    pub lambda_attr: f64,
    pub lambda_sim: f64,
}

impl NamingPreference {
    pub const UNIFORM: NamingPreference = NamingPreference { lambda_attr: 0.0, lambda_sim: 0.0 };

    pub fn is_uniform(&self) -> bool {
        self.lambda_attr == 0.0 && self.lambda_sim == 0.0
    }
}

/// Distribution of the per-ego cap under flexible naming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapDistribution {
    Poisson,
    /// `Binomial(m, p)` with `m * p` equal to the mean cap.
    Binomial { m: u64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CensorKind {
    NoCensoring,
    /// Name at most `k` friends.
    Hard { k: usize },
    /// Name at most `K_i` friends, `K_i` random with mean `k`.
    Flexible { k: f64, dist: CapDistribution },
    /// Name `round(f * D_i)` friends.
    Fractional { f: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensorScheme {
    pub kind: CensorKind,
    pub pref: NamingPreference,
}

impl CensorScheme {
    pub fn new(kind: CensorKind) -> Self {
        CensorScheme { kind, pref: NamingPreference::UNIFORM }
    }

    pub fn with_preference(mut self, pref: NamingPreference) -> Self {
        self.pref = pref;
        self
    }

    /// Binomial cap with the default parameters `m = ceil(2k)`, `p = k / m`
    /// (so `m = 2k`, `p = 1/2` whenever `2k` is an integer).
    pub fn default_binomial(k: f64) -> CapDistribution {
        let m = (2.0 * k).ceil().max(1.0) as u64;
        CapDistribution::Binomial { m, p: k / m as f64 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pref.lambda_attr.is_finite() && self.pref.lambda_sim.is_finite()) {
            return Err(Error::InvalidConfig("naming preference weights must be finite".into()));
        }
        match self.kind {
            CensorKind::NoCensoring => Ok(()),
            CensorKind::Hard { k } if k < 1 => {
                Err(Error::InvalidConfig("hard cap k must be >= 1".into()))
            }
            CensorKind::Hard { .. } => Ok(()),
            CensorKind::Flexible { k, dist } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidConfig(format!("flexible mean cap must be > 0, got {k}")));
                }
                if let CapDistribution::Binomial { m, p } = dist {
                    if m == 0 || !(0.0..=1.0).contains(&p) {
                        return Err(Error::InvalidConfig(format!("invalid binomial cap m={m} p={p}")));
                    }
                    if (m as f64 * p - k).abs() > 1e-9 * k.max(1.0) {
                        return Err(Error::InvalidConfig(format!(
                            "binomial cap must satisfy m*p = k, got m={m} p={p} k={k}"
                        )));
                    }
                }
                Ok(())
            }
            CensorKind::Fractional { f } => {
                if f > 0.0 && f <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!("fractional naming needs 0 < f <= 1, got {f}")))
                }
            }
        }
    }
}

impl fmt::Display for CensorScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CensorKind::NoCensoring => write!(f, "none")?,
            CensorKind::Hard { k } => write!(f, "hard:{k}")?,
            CensorKind::Flexible { k, dist: CapDistribution::Poisson } => write!(f, "flexible:{k}:poisson")?,
            CensorKind::Flexible { k, dist: CapDistribution::Binomial { m, p } } => {
                write!(f, "flexible:{k}:binomial:{m}:{p}")?
            }
            CensorKind::Fractional { f: frac } => write!(f, "fractional:{frac}")?,
        }
        if !self.pref.is_uniform() {
            write!(f, ";attr={};sim={}", self.pref.lambda_attr, self.pref.lambda_sim)?;
        }
        Ok(())
    }
}

/// Parses `none`, `hard:<k>`, `flexible:<k>:poisson`,
/// `flexible:<k>:binomial[:<m>:<p>]` or `fractional:<f>`, optionally followed
/// by `;attr=<a>;sim=<s>`. The parsed scheme is validated.
impl FromStr for CensorScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidConfig(format!("censoring scheme {s:?}: {why}"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(&format!("{v:?} is not a number")));

        let mut parts = s.split(';');
        let head = parts.next().unwrap_or_default();
        let mut pref = NamingPreference::UNIFORM;
        for extra in parts {
            match extra.split_once('=') {
                Some(("attr", v)) => pref.lambda_attr = num(v)?,
                Some(("sim", v)) => pref.lambda_sim = num(v)?,
                _ => return Err(bad(&format!("unknown modifier {extra:?}"))),
            }
        }

        let fields: Vec<&str> = head.split(':').collect();
        let kind = match fields.as_slice() {
            ["none"] => CensorKind::NoCensoring,
            ["hard", k] => CensorKind::Hard {
                k: k.parse::<usize>().map_err(|_| bad("hard cap must be a positive integer"))?,
            },
            ["flexible", k, "poisson"] => CensorKind::Flexible { k: num(k)?, dist: CapDistribution::Poisson },
            ["flexible", k, "binomial"] => {
                let k = num(k)?;
                CensorKind::Flexible { k, dist: CensorScheme::default_binomial(k) }
            }
            ["flexible", k, "binomial", m, p] => CensorKind::Flexible {
                k: num(k)?,
                dist: CapDistribution::Binomial {
                    m: m.parse::<u64>().map_err(|_| bad("binomial m must be an integer"))?,
                    p: num(p)?,
                },
            },
            ["fractional", frac] => CensorKind::Fractional { f: num(frac)? },
            _ => return Err(bad("unrecognised form")),
        };
        let scheme = CensorScheme { kind, pref };
        scheme.validate().map_err(|e| match e {
            Error::InvalidConfig(msg) => bad(&msg),
            other => other,
        })?;
        Ok(scheme)
    }
}

impl Serialize for CensorScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CensorScheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Relative naming weights of `alters` for ego `i`, scaled so the largest is 1.
pub fn naming_weights(i: usize, alters: &[usize], y0: &TraitVector, pref: NamingPreference) -> Vec<f64> {
    if pref.is_uniform() {
        return vec![1.0; alters.len()];
    }
    let logw: Vec<f64> = alters
        .iter()
        .map(|&j| pref.lambda_attr * y0[j] - pref.lambda_sim * (y0[i] - y0[j]).abs())
        .collect();
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logw.iter().map(|l| (l - top).exp().max(f64::MIN_POSITIVE)).collect()
}

/// Weighted sampling of `c` items without replacement (successive draws
/// proportional to weight), via exponential keys `ln(u) / w`.
fn sample_without_replacement<R: Rng + ?Sized>(
    items: &[usize],
    weights: &[f64],
    c: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = items
        .iter()
        .zip(weights)
        .map(|(&j, &w)| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (u.ln() / w, j)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(c).map(|(_, j)| j).collect()
}

fn row_stream(base: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(row as u64);
    rng
}

/// Shared row loop: `named(i, D_i, row_rng)` decides how many alters ego `i`
/// keeps; the kept alters are then drawn with the naming weights.
fn censor_rows<R, F>(
    w: &Sociomatrix,
    pref: NamingPreference,
    y0: &TraitVector,
    rng: &mut R,
    mut named: F,
) -> Result<Sociomatrix>
where
    R: Rng + ?Sized,
    F: FnMut(usize, usize, &mut ChaCha8Rng) -> usize,
{
    if y0.len() != w.n() {
        return Err(Error::InvalidInput(format!(
            "trait vector has {} entries but network has {} nodes",
            y0.len(),
            w.n()
        )));
    }
    let base = rng.next_u64();
    let mut x = Sociomatrix::empty(w.n());
    for i in 0..w.n() {
        let mut row_rng = row_stream(base, i);
        let alters: Vec<usize> = w.alters(i).collect();
        let c = named(i, alters.len(), &mut row_rng).min(alters.len());
        let kept = if c == alters.len() {
            alters
        } else {
            let weights = naming_weights(i, &alters, y0, pref);
            sample_without_replacement(&alters, &weights, c, &mut row_rng)
        };
        for j in kept {
            x.set(i, j, true);
        }
    }
    Ok(x)
}

/// Hard cap: egos with more than `k` true alters name exactly `k` of them.
pub fn censor_hard<R: Rng + ?Sized>(
    w: &Sociomatrix,
    k: usize,
    pref: NamingPreference,
    y0: &TraitVector,
    rng: &mut R,
) -> Result<Sociomatrix> {
    if k < 1 {
        return Err(Error::InvalidConfig("hard cap k must be >= 1".into()));
    }
    censor_rows(w, pref, y0, rng, |_, _, _| k)
}

/// Flexible cap: ego `i` names `min(D_i, K_i)` alters with `K_i` drawn from
/// `dist` (mean `k`). Caps are drawn for every ego, before and independently
/// of its alters.
pub fn censor_flexible<R: Rng + ?Sized>(
    w: &Sociomatrix,
    k: f64,
    dist: CapDistribution,
    pref: NamingPreference,
    y0: &TraitVector,
    rng: &mut R,
) -> Result<Sociomatrix> {
    CensorScheme { kind: CensorKind::Flexible { k, dist }, pref }.validate()?;
    match dist {
        CapDistribution::Poisson => {
            let pois = Poisson::new(k).map_err(|e| Error::InvalidConfig(format!("poisson cap: {e}")))?;
            censor_rows(w, pref, y0, rng, |_, _, r| pois.sample(r) as usize)
        }
        CapDistribution::Binomial { m, p } => {
            let bin = Binomial::new(m, p).map_err(|e| Error::InvalidConfig(format!("binomial cap: {e}")))?;
            censor_rows(w, pref, y0, rng, |_, _, r| bin.sample(r) as usize)
        }
    }
}

/// Number of alters named under fractional naming: `round(f * d)` with ties
/// away from zero, clamped to `[0, d]`.
pub fn fractional_count(f: f64, d: usize) -> usize {
    ((f * d as f64).round().max(0.0) as usize).min(d)
}

/// Fractional naming: ego `i` names `round(f * D_i)` of its alters.
pub fn censor_fractional<R: Rng + ?Sized>(
    w: &Sociomatrix,
    f: f64,
    pref: NamingPreference,
    y0: &TraitVector,
    rng: &mut R,
) -> Result<Sociomatrix> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::InvalidConfig(format!("fractional naming needs 0 < f <= 1, got {f}")));
    }
    censor_rows(w, pref, y0, rng, |_, d, _| fractional_count(f, d))
}

/// Applies `scheme` to `w`. `NoCensoring` returns a copy and leaves `rng` untouched.
pub fn censor<R: Rng + ?Sized>(
    w: &Sociomatrix,
    scheme: &CensorScheme,
    y0: &TraitVector,
    rng: &mut R,
) -> Result<Sociomatrix> {
    scheme.validate()?;
    match scheme.kind {
        CensorKind::NoCensoring => Ok(w.clone()),
        CensorKind::Hard { k } => censor_hard(w, k, scheme.pref, y0, rng),
        CensorKind::Flexible { k, dist } => censor_flexible(w, k, dist, scheme.pref, y0, rng),
        CensorKind::Fractional { f } => censor_fractional(w, f, scheme.pref, y0, rng),
    }
}
