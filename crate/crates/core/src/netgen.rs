//! Latent-Gaussian directed network generator.
//!
//! Every ordered pair `(i, j)`, `i != j`, receives a continuous edge value
//!
//! ```text
//! Z_ij ~ N(alpha_i + r_in * y_j + r_out * y_i - h * |y_i - y_j|, 1 - r_in^2 - r_out^2)
//! ```
//!
//! and the binary tie is `W_ij = 1{Z_ij >= omega}`. The threshold `omega` is
//! chosen per network so that exactly `round(n * target_mean_outdegree)` arcs
//! survive. Because `omega` absorbs any location shift, the homophily term
//! also moves the marginal density before thresholding; that effect is not
//! renormalised away.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Per-node trait values (prior trait `Y0` or evolved trait `Y1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraitVector(Vec<f64>);

impl TraitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "trait vector needs at least 2 nodes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("trait value at node {i} is not finite")));
        }
        Ok(TraitVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl std::ops::Index<usize> for TraitVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Latent per-ego gregariousness `alpha_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GregVector(Vec<f64>);

impl GregVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("gregariousness at node {i} is not finite")));
        }
        Ok(GregVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        GregVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for GregVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Generative parameters for the true network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    /// Standard deviation of gregariousness.
    pub sigma_h: f64,
    /// Homophily coefficient; positive is homophilous, negative heterophilous.
    pub h: f64,
    /// Dependence of tie propensity on the alter's trait.
    pub r_in: f64,
    /// Dependence of tie propensity on the ego's own trait.
    pub r_out: f64,
    pub target_mean_outdegree: f64,
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.sigma_h.is_finite() && self.sigma_h >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma_h must be finite and >= 0, got {}",
                self.sigma_h
            )));
        }
        if !(self.h.is_finite() && self.r_in.is_finite() && self.r_out.is_finite()) {
            return Err(Error::InvalidConfig("h, r_in and r_out must be finite".into()));
        }
        if self.r_in * self.r_in + self.r_out * self.r_out >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "r_in^2 + r_out^2 must be < 1, got r_in={} r_out={}",
                self.r_in, self.r_out
            )));
        }
        if !(self.target_mean_outdegree.is_finite() && self.target_mean_outdegree > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "target_mean_outdegree must be > 0, got {}",
                self.target_mean_outdegree
            )));
        }
        Ok(())
    }

    /// Standard deviation of the latent edge value.
    pub fn latent_sd(&self) -> f64 {
        (1.0 - (self.r_in * self.r_in + self.r_out * self.r_out)).sqrt()
    }

    /// Number of arcs `round(n * target_mean_outdegree)` the threshold must retain.
    pub fn target_arc_count(&self) -> Result<usize> {
        let arcs = (self.n as f64 * self.target_mean_outdegree).round();
        let max = (self.n * (self.n - 1)) as f64;
        if arcs < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "n * target_mean_outdegree rounds to zero arcs (n={}, target={})",
                self.n, self.target_mean_outdegree
            )));
        }
        if arcs > max {
            return Err(Error::InvalidConfig(format!(
                "requested {arcs} arcs but only {max} off-diagonal cells exist"
            )));
        }
        Ok(arcs as usize)
    }
}

/// Binary directed adjacency matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sociomatrix {
    n: usize,
    cells: Vec<bool>,
}

impl Sociomatrix {
    pub fn empty(n: usize) -> Self {
        Sociomatrix { n, cells: vec![false; n * n] }
    }

    /// Builds a matrix from `(ego, alter)` arcs. Self-loops and out-of-range
    /// indices are rejected.
    pub fn from_arcs<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = Sociomatrix::empty(n);
        for (i, j) in arcs {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("arc ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self-edge ({i},{i}) not allowed")));
            }
            m.cells[i * n + j] = true;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: bool) {
        debug_assert!(i != j || !value);
        self.cells[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    /// Alters named by ego `i`, in increasing index order.
    pub fn alters(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j)
    }

    pub fn outdegree(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&b| b).count()
    }

    pub fn outdegrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.outdegree(i)).collect()
    }

    pub fn arc_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn mean_outdegree(&self) -> f64 {
        self.arc_count() as f64 / self.n as f64
    }

    /// True when every arc of `self` is also an arc of `other`.
    pub fn is_subgraph_of(&self, other: &Sociomatrix) -> bool {
        self.n == other.n && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// Arcs in `(i, j)` lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(c, _)| (c / n, c % n))
    }

    /// Writes the edge-list export: a `# n=<n> omega=<omega>` header, an
    /// optional `# censored=<scheme>` line, then one `i,j` line per arc.
    pub fn write_edge_list<W: Write>(
        &self,
        mut out: W,
        omega: f64,
        censored: Option<&str>,
    ) -> std::io::Result<()> {
        writeln!(out, "# n={} omega={}", self.n, omega)?;
        if let Some(scheme) = censored {
            writeln!(out, "# censored={scheme}")?;
        }
        for (i, j) in self.arcs() {
            writeln!(out, "{i},{j}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`Sociomatrix::write_edge_list`].
    /// Returns the matrix, `omega`, and the censoring label if present.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<(Sociomatrix, f64, Option<String>)> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::InvalidInput("empty edge list".into()))?;
        let (n, omega) = parse_edge_header(&header)?;
        let mut censored = None;
        let mut arcs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# censored=") {
                censored = Some(rest.to_string());
                continue;
            }
            let bad = || Error::InvalidInput(format!("line {}: expected `i,j`, got {line:?}", lineno + 2));
            let (a, b) = line.split_once(',').ok_or_else(bad)?;
            let i = a.trim().parse::<usize>().map_err(|_| bad())?;
            let j = b.trim().parse::<usize>().map_err(|_| bad())?;
            arcs.push((i, j));
        }
        Ok((Sociomatrix::from_arcs(n, arcs)?, omega, censored))
    }
}

fn parse_edge_header(line: &str) -> Result<(usize, f64)> {
    let bad = || Error::InvalidInput(format!("line 1: malformed edge-list header {line:?}"));
    let rest = line.strip_prefix("# ").ok_or_else(bad)?;
    let mut n = None;
    let mut omega = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("omega", v)) => omega = v.parse::<f64>().ok(),
            _ => return Err(bad()),
        }
    }
    Ok((n.ok_or_else(bad)?, omega.ok_or_else(bad)?))
}

pub fn sample_traits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<TraitVector> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 nodes, got {n}")));
    }
    TraitVector::new((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Draws `n` gregariousness values from `N(0, sigma_h^2)`. The stream
/// advances by `n` normals even when `sigma_h == 0`.
pub fn sample_gregariousness<R: Rng + ?Sized>(
    n: usize,
    sigma_h: f64,
    rng: &mut R,
) -> Result<GregVector> {
    if !(sigma_h.is_finite() && sigma_h >= 0.0) {
        return Err(Error::InvalidConfig(format!("sigma_h must be >= 0, got {sigma_h}")));
    }
    let values = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if sigma_h == 0.0 {
                0.0
            } else {
                sigma_h * z
            }
        })
        .collect();
    Ok(GregVector(values))
}

/// Mean of the latent edge value for ego `i` towards alter `j`.
#[inline]
pub fn latent_edge_mean(alpha_i: f64, y0_i: f64, y0_j: f64, p: &GenParams) -> f64 {
    alpha_i + p.r_in * y0_j + p.r_out * y0_i - p.h * (y0_i - y0_j).abs()
}

/// `P(Z_ij >= omega)` for the latent edge value.
pub fn edge_probability(alpha_i: f64, y0_i: f64, y0_j: f64, p: &GenParams, omega: f64) -> f64 {
    let z = (latent_edge_mean(alpha_i, y0_i, y0_j, p) - omega) / p.latent_sd();
    standard_normal_cdf(z)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn check_lengths(y0: &TraitVector, alpha: &GregVector, p: &GenParams) -> Result<()> {
    if y0.len() != p.n || alpha.len() != p.n {
        return Err(Error::InvalidInput(format!(
            "length mismatch: n={} but y0 has {} and alpha has {} entries",
            p.n,
            y0.len(),
            alpha.len()
        )));
    }
    Ok(())
}

/// Draws the full `n x n` latent edge matrix in row-major order. Diagonal
/// cells hold `-inf` so no finite threshold can select them.
pub fn latent_edge_values<R: Rng + ?Sized>(
    y0: &TraitVector,
    alpha: &GregVector,
    p: &GenParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    p.validate()?;
    check_lengths(y0, alpha, p)?;
    let n = p.n;
    let sd = p.latent_sd();
    let mut z = vec![f64::NEG_INFINITY; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let noise: f64 = rng.sample(StandardNormal);
            z[i * n + j] = latent_edge_mean(alpha[i], y0[i], y0[j], p) + sd * noise;
        }
    }
    Ok(z)
}

/// `W_ij = 1{Z_ij >= omega}` off the diagonal.
pub fn threshold_network(z: &[f64], n: usize, omega: f64) -> Sociomatrix {
    assert_eq!(z.len(), n * n, "latent matrix must be n x n");
    let mut w = Sociomatrix::empty(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && z[i * n + j] >= omega {
                w.set(i, j, true);
            }
        }
    }
    w
}

/// Generates the true network and returns it with its realised threshold.
///
/// The threshold is the `A`-th largest off-diagonal latent value, where
/// `A = round(n * target_mean_outdegree)`; exact ties are broken in favour of
/// the lexicographically smaller `(i, j)`, so the arc count is always `A`.
pub fn generate_network<R: Rng + ?Sized>(
    y0: &TraitVector,
    alpha: &GregVector,
    p: &GenParams,
    rng: &mut R,
) -> Result<(Sociomatrix, f64)> {
    p.validate()?;
    check_lengths(y0, alpha, p)?;
    let arcs = p.target_arc_count()?;
    let n = p.n;
    let z = latent_edge_values(y0, alpha, p, rng)?;

    let mut cells: Vec<usize> = (0..n * n).filter(|c| c / n != c % n).collect();
    let by_value_desc = |a: &usize, b: &usize| z[*b].total_cmp(&z[*a]).then(a.cmp(b));
    let (_, kth, _) = cells.select_nth_unstable_by(arcs - 1, by_value_desc);
    let omega = z[*kth];

    let mut w = Sociomatrix::empty(n);
    for &c in &cells[..arcs] {
        w.set(c / n, c % n, true);
    }
    Ok((w, omega))
}
