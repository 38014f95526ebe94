//! Student-t distribution function and quantiles via the regularised
//! incomplete beta function (modified Lentz continued fraction).

use statrs::function::gamma::ln_gamma;

const CF_EPS: f64 = 1e-15;
const CF_MAX_ITER: usize = 100_000;
const TINY: f64 = 1e-300;

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for `I_x(a, b)`; converges fast for `x < (a+1)/(a+b+2)`.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `I_x(a, b)` where the caller supplies both `x` and `y = 1 - x` so that
/// neither is formed by cancellation.
fn beta_inc_pair(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

/// Regularised incomplete beta function `I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta_inc needs positive shape parameters");
    assert!((0.0..=1.0).contains(&x), "beta_inc needs x in [0, 1]");
    beta_inc_pair(a, b, x, 1.0 - x)
}

/// `P(T > t)` for `t >= 0`.
fn upper_tail(t: f64, df: f64) -> f64 {
    let t2 = t * t;
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    0.5 * beta_inc_pair(0.5 * df, 0.5, x, y)
}

pub fn student_t_pdf(t: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - 0.5 * (df + 1.0) * (t * t / df).ln_1p()).exp()
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 1.0;
    }
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    if t >= 0.0 {
        1.0 - upper_tail(t, df)
    } else {
        upper_tail(-t, df)
    }
}

/// Inverse CDF of Student's t with `df` degrees of freedom.
///
/// Solves `P(T > t) = min(p, 1 - p)` on `t >= 0` by safeguarded Newton
/// iteration, then applies the sign.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    assert!((0.0..=1.0).contains(&p), "probability must lie in [0, 1]");
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let tail = p.min(1.0 - p);

    let mut lo = 0.0;
    let mut hi = 1.0;
    while upper_tail(hi, df) > tail {
        lo = hi;
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..300 {
        let g = upper_tail(t, df) - tail;
        if g > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let step = g / student_t_pdf(t, df);
        let mut next = t + step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * next.abs().max(1.0) || hi - lo <= 1e-15 * hi.max(1.0) {
            t = next;
            break;
        }
        t = next;
    }
    if p > 0.5 {
        t
    } else {
        -t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_inc_closed_forms() {
        // I_x(1, 1) = x and I_x(a, 1) = x^a.
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            assert_relative_eq!(beta_inc(1.0, 1.0, x), x, epsilon = 1e-14);
            assert_relative_eq!(beta_inc(3.5, 1.0, x), x.powf(3.5), epsilon = 1e-14);
        }
        // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
        assert_relative_eq!(beta_inc(2.5, 7.0, 0.3), 1.0 - beta_inc(7.0, 2.5, 0.7), epsilon = 1e-14);
    }

    #[test]
    fn cauchy_closed_form() {
        // df = 1 is Cauchy: F(t) = 1/2 + atan(t)/pi.
        for &t in &[-30.0, -2.0, -0.3, 0.0, 0.7, 5.0, 100.0] {
            let exact = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert_relative_eq!(student_t_cdf(t, 1.0), exact, epsilon = 1e-13);
        }
        let q = student_t_quantile(0.975, 1.0);
        assert_relative_eq!(q, (std::f64::consts::PI * 0.475).tan(), max_relative = 1e-12);
    }

    #[test]
    fn two_df_closed_form() {
        // df = 2: quantile t = (2p - 1) / sqrt(2 p (1 - p)).
        for &p in &[0.01f64, 0.2, 0.6, 0.95, 0.999] {
            let exact = (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
            assert_relative_eq!(student_t_quantile(p, 2.0), exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn normal_limit() {
        assert_relative_eq!(student_t_quantile(0.975, 1e6), 1.959963984540054, max_relative = 1e-5);
        assert_relative_eq!(student_t_quantile(0.975, 1e6), 1.9599663, epsilon = 2e-7);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &df in &[1.0, 3.0, 9.5, 96.0, 196.0, 5000.0] {
            for &p in &[1e-6, 0.025, 0.25, 0.5, 0.75, 0.975, 0.995] {
                let t = student_t_quantile(p, df);
                assert_relative_eq!(student_t_cdf(t, df), p, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn agrees_with_statrs() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        for &df in &[1.0, 3.0, 10.0, 96.0, 196.0, 1000.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[-6.0, -2.0, -0.3, 0.0, 1.0, 1.96, 4.5] {
                assert_relative_eq!(student_t_cdf(t, df), dist.cdf(t), max_relative = 1e-9);
            }
            for &p in &[0.005, 0.025, 0.25, 0.75, 0.975, 0.995] {
                assert_relative_eq!(student_t_quantile(p, df), dist.inverse_cdf(p), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn cdf_matches_density_quadrature() {
        // Simpson's rule on the density from 0 to t, plus the half mass below 0.
        for &df in &[2.0, 5.0, 30.0] {
            for &t in &[0.5, 1.5, 3.0] {
                let m = 2000;
                let h = t / m as f64;
                let mut acc = student_t_pdf(0.0, df) + student_t_pdf(t, df);
                for k in 1..m {
                    acc += student_t_pdf(k as f64 * h, df) * if k % 2 == 1 { 4.0 } else { 2.0 };
                }
                assert_relative_eq!(student_t_cdf(t, df), 0.5 + acc * h / 3.0, max_relative = 1e-10);
            }
        }
    }
}
