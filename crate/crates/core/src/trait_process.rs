//! One-step linear evolution of the node trait over the true network.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{Sociomatrix, TraitVector};

/// Coefficients of the evolution model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveParams {
    /// Intercept.
    pub mu: f64,
    /// Autocorrelation on the ego's own centred prior trait.
    pub gamma: f64,
    /// Contagion through named alters.
    pub beta: f64,
    /// Friend-count (outdegree) effect.
    pub delta: f64,
    /// Noise standard deviation.
    pub sigma_eps: f64,
}

impl EvolveParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mu, self.gamma, self.beta, self.delta, self.sigma_eps];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("evolution parameters must be finite".into()));
        }
        if self.sigma_eps < 0.0 {
            return Err(Error::InvalidConfig(format!("sigma_eps must be >= 0, got {}", self.sigma_eps)));
        }
        Ok(())
    }
}

/// Form of the contagion term in the generative model.
///
/// * `CenteredGeneral`: `beta * sum_j W_ij (y_j - mean(y))` with a centred
///   outdegree term `delta * (D_i - mean(D))`.
/// * `PivotContagion(d)`: `beta * sum_j W_ij (y_j - d)` with an uncentred
///   outdegree term `delta * D_i`. With this pairing the zero-pivot model is
///   an exact reparameterisation (see [`reparameterize_pivot`]).
/// * `HomophilyDrive`: `beta * sum_j W_ij (y_j - y_i)` with a centred
///   outdegree term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    CenteredGeneral,
    PivotContagion(f64),
    HomophilyDrive,
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::CenteredGeneral => "centered".to_string(),
            ModelSpec::PivotContagion(d) => format!("pivot:{d}"),
            ModelSpec::HomophilyDrive => "homophily-drive".to_string(),
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered" => Ok(ModelSpec::CenteredGeneral),
            "homophily-drive" => Ok(ModelSpec::HomophilyDrive),
            _ => {
                let d = s
                    .strip_prefix("pivot:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .filter(|d| d.is_finite())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown model form {s:?}")))?;
                Ok(ModelSpec::PivotContagion(d))
            }
        }
    }
}

fn check_dims(y0: &TraitVector, w: &Sociomatrix) -> Result<()> {
    if y0.len() != w.n() {
        return Err(Error::InvalidInput(format!(
            "trait vector has {} entries but network has {} nodes",
            y0.len(),
            w.n()
        )));
    }
    Ok(())
}

/// Per-node uncentred contagion covariate for the given model form:
/// `sum_j W_ij y_j`, `sum_j W_ij (y_j - d)` or `sum_j W_ij (y_j - y_i)`.
pub fn contagion_covariate(w: &Sociomatrix, y0: &TraitVector, spec: ModelSpec) -> Vec<f64> {
    assert_eq!(y0.len(), w.n(), "dimension mismatch");
    (0..w.n())
        .map(|i| match spec {
            ModelSpec::CenteredGeneral => w.alters(i).map(|j| y0[j]).sum(),
            ModelSpec::PivotContagion(d) => w.alters(i).map(|j| y0[j] - d).sum(),
            ModelSpec::HomophilyDrive => w.alters(i).map(|j| y0[j] - y0[i]).sum(),
        })
        .collect()
}

/// Evolves the trait one step.
///
/// Always consumes exactly `n` standard normals from `rng`, so two calls
/// with the same stream share their noise regardless of `sigma_eps`.
pub fn evolve<R: Rng + ?Sized>(
    y0: &TraitVector,
    w: &Sociomatrix,
    ep: &EvolveParams,
    spec: ModelSpec,
    rng: &mut R,
) -> Result<TraitVector> {
    check_dims(y0, w)?;
    ep.validate()?;
    let n = y0.len();
    let y_bar = y0.mean();
    let degrees = w.outdegrees();
    let d_bar = degrees.iter().sum::<usize>() as f64 / n as f64;

    let mut y1 = Vec::with_capacity(n);
    for i in 0..n {
        let d_i = degrees[i] as f64;
        let (contagion, outdeg) = match spec {
            ModelSpec::CenteredGeneral => {
                (w.alters(i).map(|j| y0[j] - y_bar).sum::<f64>(), d_i - d_bar)
            }
            ModelSpec::PivotContagion(d) => (w.alters(i).map(|j| y0[j] - d).sum::<f64>(), d_i),
            ModelSpec::HomophilyDrive => {
                (w.alters(i).map(|j| y0[j] - y0[i]).sum::<f64>(), d_i - d_bar)
            }
        };
        let eps: f64 = rng.sample(StandardNormal);
        y1.push(
            ep.mu + ep.gamma * (y0[i] - y_bar) + ep.beta * contagion + ep.delta * outdeg + ep.sigma_eps * eps,
        );
    }
    TraitVector::new(y1)
}

/// Maps `(mu, beta, delta)` of `PivotContagion(d)` onto the zero-pivot form.
///
/// Expanding `beta * sum_j W_ij (y_j - d) = beta * sum_j W_ij y_j - beta * d * D_i`
/// moves `-beta * d` onto the outdegree coefficient and leaves the intercept
/// unchanged.
pub fn reparameterize_pivot(mu: f64, beta: f64, delta: f64, d: f64) -> (f64, f64, f64) {
    (mu, beta, delta - beta * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet(mu: f64, gamma: f64, beta: f64, delta: f64) -> EvolveParams {
        EvolveParams { mu, gamma, beta, delta, sigma_eps: 0.0 }
    }

    #[test]
    fn autocorrelation_only() {
        let y0 = TraitVector::new(vec![0.0, 2.0]).unwrap();
        let w = Sociomatrix::from_arcs(2, [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y1 = evolve(&y0, &w, &quiet(1.0, 0.5, 0.0, 0.0), ModelSpec::CenteredGeneral, &mut rng).unwrap();
        assert_eq!(y1.as_slice(), &[0.5, 1.5]);
    }

    #[test]
    fn empty_network_drops_network_terms() {
        let y0 = TraitVector::new(vec![-1.0, 0.5, 2.5]).unwrap();
        let w = Sociomatrix::empty(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y1 = evolve(&y0, &w, &quiet(0.2, 0.8, 3.0, -4.0), ModelSpec::CenteredGeneral, &mut rng).unwrap();
        let y_bar = y0.mean();
        for i in 0..3 {
            assert_eq!(y1[i], 0.2 + 0.8 * (y0[i] - y_bar));
        }
    }

    #[test]
    fn three_node_line_by_hand() {
        // 0 -> 1 -> 2, y0 = (1, 2, 6), mean 3, degrees (1, 1, 0), mean 2/3.
        let y0 = TraitVector::new(vec![1.0, 2.0, 6.0]).unwrap();
        let w = Sociomatrix::from_arcs(3, [(0, 1), (1, 2)]).unwrap();
        let ep = quiet(0.5, 0.25, 2.0, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y1 = evolve(&y0, &w, &ep, ModelSpec::CenteredGeneral, &mut rng).unwrap();
        let d_bar = 2.0 / 3.0;
        let expected = [
            0.5 + 0.25 * (1.0 - 3.0) + 2.0 * (2.0 - 3.0) + 3.0 * (1.0 - d_bar),
            0.5 + 0.25 * (2.0 - 3.0) + 2.0 * (6.0 - 3.0) + 3.0 * (1.0 - d_bar),
            0.5 + 0.25 * (6.0 - 3.0) + 3.0 * (0.0 - d_bar),
        ];
        for i in 0..3 {
            assert!((y1[i] - expected[i]).abs() < 1e-14, "node {i}: {} vs {}", y1[i], expected[i]);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let y0 = TraitVector::new(vec![1.0, 2.0]).unwrap();
        let w = Sociomatrix::empty(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = evolve(&y0, &w, &quiet(0.0, 0.0, 0.0, 0.0), ModelSpec::CenteredGeneral, &mut rng);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn covariate_examples() {
        let y0 = TraitVector::new(vec![5.0, 2.0]).unwrap();
        let none = Sociomatrix::empty(2);
        assert_eq!(contagion_covariate(&none, &y0, ModelSpec::CenteredGeneral), vec![0.0, 0.0]);
        let w = Sociomatrix::from_arcs(2, [(0, 1)]).unwrap();
        assert_eq!(contagion_covariate(&w, &y0, ModelSpec::CenteredGeneral), vec![2.0, 0.0]);
        assert_eq!(contagion_covariate(&w, &y0, ModelSpec::HomophilyDrive), vec![-3.0, 0.0]);
    }

    #[test]
    fn pivot_identities() {
        assert_eq!(reparameterize_pivot(1.0, 2.0, 0.5, 0.0), (1.0, 2.0, 0.5));
        assert_eq!(reparameterize_pivot(1.0, 0.0, 0.5, 7.0), (1.0, 0.0, 0.5));
        assert_eq!(reparameterize_pivot(1.0, 2.0, 0.5, 3.0), (1.0, 2.0, -5.5));
    }

    #[test]
    fn model_labels_round_trip() {
        for spec in [ModelSpec::CenteredGeneral, ModelSpec::HomophilyDrive, ModelSpec::PivotContagion(-1.5)] {
            assert_eq!(spec.label().parse::<ModelSpec>().unwrap(), spec);
        }
        assert!("pivot:x".parse::<ModelSpec>().is_err());
    }
}
