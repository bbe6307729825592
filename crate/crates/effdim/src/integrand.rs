//! Integrands on `[0,1]^d` with optional exact mixed partial derivatives,
//! optional product structure, and known analytic facts used as test oracles.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::subset::SubsetMask;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PartialFn = Arc<dyn Fn(SubsetMask, &[f64]) -> f64 + Send + Sync>;
type Fn1D = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One univariate factor of a product-form integrand.
#[derive(Clone)]
pub struct Factor1D {
    pub f: Fn1D,
    pub df: Option<Fn1D>,
}

/// Analytic facts carried by registry functions.
#[derive(Clone, Default)]
pub struct KnownFacts {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    /// ANOVA variance components, keyed by subset.
    pub components: Option<BTreeMap<SubsetMask, f64>>,
}

/// An evaluator on the unit cube.
#[derive(Clone)]
pub struct Integrand {
    name: String,
    d: usize,
    f: EvalFn,
    partials: Option<PartialFn>,
    factors: Option<Vec<Factor1D>>,
    pub known: KnownFacts,
}

impl Integrand {
    pub fn new(name: &str, d: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        assert!((1..=64).contains(&d), "integrand dimension {d} outside 1..=64");
        Integrand {
            name: name.to_string(),
            d,
            f: Arc::new(f),
            partials: None,
            factors: None,
            known: KnownFacts::default(),
        }
    }

    /// Attach exact mixed partials. The closure is only consulted for
    /// nonempty subsets; the empty derivative is the function itself.
    pub fn with_partials(
        mut self,
        p: impl Fn(SubsetMask, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(p));
        self
    }

    /// Declare product structure `f(x) = prod_j phi_j(x_j)`. When every
    /// factor carries a derivative, exact mixed partials follow for free.
    pub fn with_factors(mut self, factors: Vec<Factor1D>) -> Self {
        assert_eq!(factors.len(), self.d);
        self.factors = Some(factors);
        self
    }

    pub fn with_known(mut self, known: KnownFacts) -> Self {
        self.known = known;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        (self.f)(x)
    }

    pub fn factors(&self) -> Option<&[Factor1D]> {
        self.factors.as_deref()
    }

    pub fn has_exact_partials(&self) -> bool {
        self.partials.is_some()
            || self
                .factors
                .as_ref()
                .is_some_and(|fs| fs.iter().all(|f| f.df.is_some()))
    }

    /// `(d^u f)(x)`, exact. Empty `u` evaluates `f` itself.
    pub fn partial(&self, u: SubsetMask, x: &[f64]) -> Result<f64> {
        if u.is_empty() {
            return Ok(self.eval(x));
        }
        if let Some(p) = &self.partials {
            return Ok(p(u, x));
        }
        if let Some(factors) = &self.factors {
            let mut prod = 1.0;
            for (j, fac) in factors.iter().enumerate() {
                if u.contains(j + 1) {
                    let df = fac.df.as_ref().ok_or(Error::MissingDerivatives)?;
                    prod *= df(x[j]);
                } else {
                    prod *= (fac.f)(x[j]);
                }
            }
            return Ok(prod);
        }
        Err(Error::MissingDerivatives)
    }
}

impl std::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Integrand({}, d={})", self.name, self.d)
    }
}

// --- registry ----------------------------------------------------------------

pub mod registry {
    use super::*;
    use std::f64::consts::PI;

    /// `sum_j (x_j - 1/2)`: additive, mean 0, variance d/12.
    pub fn linear_sum(d: usize) -> Integrand {
        let mut comps = BTreeMap::new();
        for j in 1..=d {
            comps.insert(SubsetMask::singleton(d, j), 1.0 / 12.0);
        }
        Integrand::new("linear_sum", d, |x| x.iter().map(|t| t - 0.5).sum())
            .with_partials(|u, _| if u.cardinality() == 1 { 1.0 } else { 0.0 })
            .with_known(KnownFacts {
                mean: Some(0.0),
                variance: Some(d as f64 / 12.0),
                components: Some(comps),
            })
    }

    /// `prod_j (x_j - 1/2)`: a single interaction of full order; variance
    /// `12^-d` and weighted norm `(d!)^(eta/2)` under `gamma_j = j^-eta`.
    pub fn prod_centered(d: usize) -> Integrand {
        let mut comps = BTreeMap::new();
        comps.insert(SubsetMask::full(d), (1.0f64 / 12.0).powi(d as i32));
        let factors = (0..d)
            .map(|_| Factor1D {
                f: Arc::new(|t| t - 0.5),
                df: Some(Arc::new(|_| 1.0)),
            })
            .collect();
        Integrand::new("prod_centered", d, |x| x.iter().map(|t| t - 0.5).product())
            .with_factors(factors)
            .with_known(KnownFacts {
                mean: Some(if d == 0 { 1.0 } else { 0.0 }),
                variance: Some((1.0f64 / 12.0).powi(d as i32)),
                components: Some(comps),
            })
    }

    /// `sqrt(2) sin(pi (x_1 - 1/2))`: unit variance and the smallest possible
    /// derivative energy, so it sits exactly on the critical ball whenever
    /// `gamma_{1} = 1`.
    pub fn sine_extremal() -> Integrand {
        let mut comps = BTreeMap::new();
        comps.insert(SubsetMask::singleton(1, 1), 1.0);
        let sqrt2 = 2.0f64.sqrt();
        Integrand::new("sine_extremal", 1, move |x| sqrt2 * (PI * (x[0] - 0.5)).sin())
            .with_factors(vec![Factor1D {
                f: Arc::new(move |t| sqrt2 * (PI * (t - 0.5)).sin()),
                df: Some(Arc::new(move |t| sqrt2 * PI * (PI * (t - 0.5)).cos())),
            }])
            .with_known(KnownFacts {
                mean: Some(0.0),
                variance: Some(1.0),
                components: Some(comps),
            })
    }

    /// The Sobol' g-function `prod_j (|4x_j - 2| + a_j)/(1 + a_j)`.
    /// Piecewise linear (not differentiable), with the closed-form components
    /// `sigma2_u = prod_{j in u} 1/(3 (1+a_j)^2)`.
    pub fn gfunction(a: &[f64]) -> Integrand {
        let d = a.len();
        assert!(d >= 1);
        let c: Vec<f64> = a.iter().map(|aj| 1.0 / (3.0 * (1.0 + aj) * (1.0 + aj))).collect();
        let mut comps = BTreeMap::new();
        for u in SubsetMask::all(d).skip(1) {
            let mut v = 1.0;
            for j in u.indices() {
                v *= c[j - 1];
            }
            comps.insert(u, v);
        }
        let variance = c.iter().map(|cj| 1.0 + cj).product::<f64>() - 1.0;
        let factors: Vec<Factor1D> = a
            .iter()
            .map(|&aj| {
                let scale = 1.0 / (1.0 + aj);
                Factor1D {
                    f: Arc::new(move |t: f64| ((4.0 * t - 2.0).abs() + aj) * scale),
                    df: None,
                }
            })
            .collect();
        let av = a.to_vec();
        Integrand::new("gfunction", d, move |x| {
            let mut prod = 1.0;
            for (t, aj) in x.iter().zip(&av) {
                prod *= ((4.0 * t - 2.0).abs() + aj) / (1.0 + aj);
            }
            prod
        })
        .with_factors(factors)
        .with_known(KnownFacts {
            mean: Some(1.0),
            variance: Some(variance),
            components: Some(comps),
        })
    }

    /// `sum_j sqrt(2) sin(pi (x_j - 1/2))`: additive with unit per-coordinate
    /// variance; mean dimension exactly 1.
    pub fn additive_sine(d: usize) -> Integrand {
        let mut comps = BTreeMap::new();
        for j in 1..=d {
            comps.insert(SubsetMask::singleton(d, j), 1.0);
        }
        let sqrt2 = 2.0f64.sqrt();
        Integrand::new("additive_sine", d, move |x| {
            x.iter().map(|t| sqrt2 * (PI * (t - 0.5)).sin()).sum()
        })
        .with_partials(move |u, x| {
            if u.cardinality() == 1 {
                let j = u.ceiling();
                sqrt2 * PI * (PI * (x[j - 1] - 0.5)).cos()
            } else {
                0.0
            }
        })
        .with_known(KnownFacts {
            mean: Some(0.0),
            variance: Some(d as f64),
            components: Some(comps),
        })
    }

    /// Look up by name with optional parameters, as used by the CLI.
    pub fn by_name(name: &str, d: Option<usize>, a: Option<&[f64]>) -> Result<Integrand> {
        match name {
            "linear_sum" => Ok(linear_sum(d.unwrap_or(2))),
            "prod_centered" => Ok(prod_centered(d.unwrap_or(2))),
            "sine_extremal" => Ok(sine_extremal()),
            "additive_sine" => Ok(additive_sine(d.unwrap_or(2))),
            "gfunction" => Ok(gfunction(a.unwrap_or(&[0.0, 0.0, 3.0]))),
            other => Err(Error::InvalidInput(format!(
                "unknown integrand \"{other}\" (known: linear_sum, prod_centered, \
                 sine_extremal, additive_sine, gfunction)"
            ))),
        }
    }

    /// The smooth registry functions at small dimension, used for
    /// cross-module consistency grids.
    pub fn smooth_suite() -> Vec<Integrand> {
        vec![
            linear_sum(2),
            linear_sum(3),
            linear_sum(5),
            prod_centered(1),
            prod_centered(2),
            prod_centered(3),
            prod_centered(4),
            prod_centered(5),
            sine_extremal(),
            additive_sine(2),
            additive_sine(4),
        ]
    }
}

// --- one-dimensional suite ----------------------------------------------------

/// A univariate function with an optional exact derivative.
#[derive(Clone)]
pub struct OneDim {
    pub name: &'static str,
    pub f: Fn1D,
    pub df: Option<Fn1D>,
}

impl OneDim {
    fn new(
        name: &'static str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        OneDim { name, f: Arc::new(f), df: Some(Arc::new(df)) }
    }
}

/// Twenty zero-mean differentiable functions on (0,1), each with its exact
/// derivative. The first entry attains the sharp derivative-to-variance
/// ratio `pi^2`.
pub fn poincare_suite() -> Vec<OneDim> {
    use std::f64::consts::{E, PI};
    let ln2 = 2f64.ln();
    vec![
        OneDim::new("sine_half_period", |x| (PI * (x - 0.5)).sin(), |x| PI * (PI * (x - 0.5)).cos()),
        OneDim::new("centered_linear", |x| x - 0.5, |_| 1.0),
        OneDim::new("square", |x| x * x - 1.0 / 3.0, |x| 2.0 * x),
        OneDim::new("cube", |x| x.powi(3) - 0.25, |x| 3.0 * x * x),
        OneDim::new("quartic", |x| x.powi(4) - 0.2, |x| 4.0 * x.powi(3)),
        OneDim::new("sin_2pi", |x| (2.0 * PI * x).sin(), |x| 2.0 * PI * (2.0 * PI * x).cos()),
        OneDim::new("cos_2pi", |x| (2.0 * PI * x).cos(), |x| -2.0 * PI * (2.0 * PI * x).sin()),
        OneDim::new("cos_pi", |x| (PI * x).cos(), |x| -PI * (PI * x).sin()),
        OneDim::new("cos_3pi", |x| (3.0 * PI * x).cos(), |x| -3.0 * PI * (3.0 * PI * x).sin()),
        OneDim::new("sin_4pi", |x| (4.0 * PI * x).sin(), |x| 4.0 * PI * (4.0 * PI * x).cos()),
        OneDim::new("exp_centered", move |x| x.exp() - (E - 1.0), |x| x.exp()),
        OneDim::new("parabola_arch", |x| x * (1.0 - x) - 1.0 / 6.0, |x| 1.0 - 2.0 * x),
        OneDim::new(
            "bernoulli_3",
            |x| x.powi(3) - 1.5 * x * x + 0.5 * x,
            |x| 3.0 * x * x - 3.0 * x + 0.5,
        ),
        OneDim::new("sinh_centered", |x| (x - 0.5).sinh(), |x| (x - 0.5).cosh()),
        OneDim::new("centered_cubic", |x| (x - 0.5).powi(3), |x| 3.0 * (x - 0.5).powi(2)),
        OneDim::new("centered_quintic", |x| (x - 0.5).powi(5), |x| 5.0 * (x - 0.5).powi(4)),
        OneDim::new(
            "tanh_step",
            |x| (4.0 * (x - 0.5)).tanh(),
            |x| 4.0 * (1.0 - (4.0 * (x - 0.5)).tanh().powi(2)),
        ),
        OneDim::new(
            "x_exp_decay",
            move |x| x * (-x).exp() - (1.0 - 2.0 / E),
            |x| (1.0 - x) * (-x).exp(),
        ),
        OneDim::new(
            "log_shifted",
            move |x| (1.0 + x).ln() - (2.0 * ln2 - 1.0),
            |x| 1.0 / (1.0 + x),
        ),
        OneDim::new(
            "legendre_2",
            |x| 6.0 * x * x - 6.0 * x + 1.0,
            |x| 12.0 * x - 6.0,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::registry::*;

    #[test]
    fn registry_dimensions_and_names() {
        assert_eq!(linear_sum(8).dim(), 8);
        assert_eq!(sine_extremal().dim(), 1);
        assert_eq!(gfunction(&[0.0, 0.0, 3.0]).dim(), 3);
        assert!(by_name("nosuchfn", None, None).is_err());
        assert_eq!(by_name("prod_centered", Some(3), None).unwrap().dim(), 3);
    }

    #[test]
    fn partials_match_structure() {
        let f = prod_centered(3);
        let u = SubsetMask::from_indices(3, &[1, 3]);
        // d/dx1 d/dx3 of (x1-1/2)(x2-1/2)(x3-1/2) = x2 - 1/2
        let v = f.partial(u, &[0.1, 0.7, 0.9]).unwrap();
        assert!((v - 0.2).abs() < 1e-15);

        let g = linear_sum(2);
        assert_eq!(g.partial(SubsetMask::from_indices(2, &[1]), &[0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(g.partial(SubsetMask::full(2), &[0.3, 0.4]).unwrap(), 0.0);

        // empty-set derivative is the function itself
        let x = [0.3, 0.4];
        assert_eq!(g.partial(SubsetMask::empty(2), &x).unwrap(), g.eval(&x));
    }

    #[test]
    fn gfunction_known_components() {
        let g = gfunction(&[0.0, 0.0, 3.0]);
        let comps = g.known.components.as_ref().unwrap();
        let c1 = comps[&SubsetMask::singleton(3, 1)];
        let c3 = comps[&SubsetMask::singleton(3, 3)];
        let c12 = comps[&SubsetMask::from_indices(3, &[1, 2])];
        assert!((c1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((c3 - 1.0 / 48.0).abs() < 1e-15);
        assert!((c12 - 1.0 / 9.0).abs() < 1e-15);
        assert!(g.partial(SubsetMask::singleton(3, 1), &[0.2, 0.2, 0.2]).is_err());
    }

    #[test]
    fn poincare_suite_is_zero_mean_with_derivatives() {
        let suite = poincare_suite();
        assert_eq!(suite.len(), 20);
        // crude trapezoid check that each declared mean really is zero
        let n = 20_000;
        for g in &suite {
            let mut acc = 0.0;
            for i in 0..=n {
                let x = i as f64 / n as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * (g.f)(x);
            }
            acc /= n as f64;
            assert!(acc.abs() < 1e-6, "{} has mean {acc}", g.name);
            // derivative sanity by central difference at an interior point
            let h = 1e-6;
            let fd = ((g.f)(0.37 + h) - (g.f)(0.37 - h)) / (2.0 * h);
            let ex = (g.df.as_ref().unwrap())(0.37);
            assert!((fd - ex).abs() < 1e-5, "{}: fd {fd} vs exact {ex}", g.name);
        }
    }
}
