//! Weight families `gamma_u` over subsets of coordinates and the two
//! monotonicity conditions the dimension-bound theorems require:
//!
//! * cardinality condition: `|u| >= s` implies `gamma_u <= gamma_{1:s}`,
//! * index condition: `ceil(u) >= s` implies `gamma_u <= gamma_{s}`.
//!
//! Weight comparisons run in log space with a relative tolerance of 1e-12;
//! exact-equality boundaries are surfaced to callers rather than resolved
//! silently (module `bounds` reports them via boundary flags).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, log_le, log_violates};
use crate::subset::SubsetMask;

/// Cost guard for exhaustive subset scans (about a million subsets).
pub const ENUMERATION_CAP: usize = 20;

/// The weight of the empty set. `Infinite` encodes the semi-norm that drops
/// the constant term: `1/gamma_empty` contributes zero to norms.
#[derive(Debug, Copy, Clone, PartialEq)]
pub enum EmptyWeight {
    Finite(f64),
    Infinite,
}

impl EmptyWeight {
    pub fn as_f64(self) -> f64 {
        match self {
            EmptyWeight::Finite(v) => v,
            EmptyWeight::Infinite => f64::INFINITY,
        }
    }

    /// `1/gamma_empty`, with the semi-norm convention `1/inf = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            EmptyWeight::Finite(v) => 1.0 / v,
            EmptyWeight::Infinite => 0.0,
        }
    }
}

/// Per-coordinate factors `gamma_j` for product and POD families.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorSeq {
    /// `gamma_j = j^(-eta)`; defined for every `j`, so `d` may be unbounded.
    PowerLaw { eta: f64 },
    /// Finite list `gamma_1, gamma_2, ..`; queries past the end fail.
    Table(Vec<f64>),
}

impl FactorSeq {
    fn log_factor(&self, j: u64) -> Result<f64> {
        match self {
            FactorSeq::PowerLaw { eta } => Ok(-eta * (j as f64).ln()),
            FactorSeq::Table(t) => t
                .get(j as usize - 1)
                .map(|g| g.ln())
                .ok_or_else(|| Error::MissingWeight(SubsetMask::singleton(128, 64.min(j as usize)))),
        }
    }

    fn is_unbounded(&self) -> bool {
        matches!(self, FactorSeq::PowerLaw { .. })
    }
}

/// Cardinality factors `Gamma_r` (`r >= 1`) for order and POD families.
/// The empty-set factor `Gamma_0` is carried separately as the scheme's
/// empty weight.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderSeq {
    /// `Gamma_r = gamma^r` for a fixed base.
    Geometric { gamma: f64 },
    /// `Gamma_r = (r!)^alpha`, the POD cardinality part.
    FactorialPower { alpha: f64 },
    /// Finite list `Gamma_1, Gamma_2, ..`.
    Table(Vec<f64>),
}

impl OrderSeq {
    fn log_factor(&self, r: u64) -> Result<f64> {
        match self {
            OrderSeq::Geometric { gamma } => Ok(r as f64 * gamma.ln()),
            OrderSeq::FactorialPower { alpha } => Ok(alpha * ln_factorial(r)),
            OrderSeq::Table(t) => t
                .get(r as usize - 1)
                .copied()
                .map(f64::ln)
                .ok_or_else(|| Error::MissingWeight(SubsetMask::prefix(128, 128.min(r as usize)))),
        }
    }

    fn is_unbounded(&self) -> bool {
        !matches!(self, OrderSeq::Table(_))
    }
}

/// A rule assigning a positive weight `gamma_u` to every subset of `1:d`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    Product { factors: FactorSeq, empty: EmptyWeight },
    Order { factors: OrderSeq, empty: EmptyWeight },
    Pod { order: OrderSeq, product: FactorSeq, empty: EmptyWeight },
    /// Positive factors up to a cutoff order; weights of larger subsets are
    /// undefined and surface as `MissingWeight`.
    FiniteOrder { factors: Vec<f64>, empty: EmptyWeight },
    Explicit { d: usize, table: BTreeMap<u128, f64>, empty: EmptyWeight },
}

/// Outcome of a condition check.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionVerdict {
    Holds,
    Fails { witness_u: SubsetMask, witness_s: u64 },
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionVerdict::Holds)
    }
}

impl WeightScheme {
    pub fn product_power(eta: f64) -> Self {
        WeightScheme::Product {
            factors: FactorSeq::PowerLaw { eta },
            empty: EmptyWeight::Finite(1.0),
        }
    }

    pub fn product_factors(factors: Vec<f64>) -> Result<Self> {
        check_positive(&factors)?;
        Ok(WeightScheme::Product {
            factors: FactorSeq::Table(factors),
            empty: EmptyWeight::Finite(1.0),
        })
    }

    pub fn order_geometric(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::InvalidInput(format!("order base {gamma} must be positive")));
        }
        Ok(WeightScheme::Order {
            factors: OrderSeq::Geometric { gamma },
            empty: EmptyWeight::Finite(1.0),
        })
    }

    pub fn order_table(factors: Vec<f64>) -> Result<Self> {
        check_positive(&factors)?;
        Ok(WeightScheme::Order {
            factors: OrderSeq::Table(factors),
            empty: EmptyWeight::Finite(1.0),
        })
    }

    /// The parametric POD family `gamma_u = (|u|!)^alpha * prod_{j in u} j^(-beta)`.
    pub fn pod(alpha: f64, beta: f64) -> Self {
        WeightScheme::Pod {
            order: OrderSeq::FactorialPower { alpha },
            product: FactorSeq::PowerLaw { eta: beta },
            empty: EmptyWeight::Finite(1.0),
        }
    }

    pub fn finite_order(factors: Vec<f64>) -> Result<Self> {
        check_positive(&factors)?;
        Ok(WeightScheme::FiniteOrder { factors, empty: EmptyWeight::Finite(1.0) })
    }

    pub fn explicit(d: usize, entries: &[(SubsetMask, f64)]) -> Result<Self> {
        let mut table = BTreeMap::new();
        let mut empty = EmptyWeight::Finite(1.0);
        for (u, w) in entries {
            if *w <= 0.0 {
                return Err(Error::InvalidInput(format!("weight {w} for {u} must be positive")));
            }
            if u.is_empty() {
                empty = EmptyWeight::Finite(*w);
            } else {
                table.insert(u.bits(), *w);
            }
        }
        Ok(WeightScheme::Explicit { d, table, empty })
    }

    pub fn with_empty_weight(mut self, empty: EmptyWeight) -> Self {
        match &mut self {
            WeightScheme::Product { empty: e, .. }
            | WeightScheme::Order { empty: e, .. }
            | WeightScheme::Pod { empty: e, .. }
            | WeightScheme::FiniteOrder { empty: e, .. }
            | WeightScheme::Explicit { empty: e, .. } => *e = empty,
        }
        self
    }

    pub fn empty_weight(&self) -> EmptyWeight {
        match self {
            WeightScheme::Product { empty, .. }
            | WeightScheme::Order { empty, .. }
            | WeightScheme::Pod { empty, .. }
            | WeightScheme::FiniteOrder { empty, .. }
            | WeightScheme::Explicit { empty, .. } => *empty,
        }
    }

    /// True when singleton and prefix weights exist for arbitrarily large
    /// indices, so the scheme makes sense with `d = infinity`.
    pub fn supports_unbounded_dimension(&self) -> bool {
        match self {
            WeightScheme::Product { factors, .. } => factors.is_unbounded(),
            WeightScheme::Order { factors, .. } => factors.is_unbounded(),
            WeightScheme::Pod { order, product, .. } => {
                order.is_unbounded() && product.is_unbounded()
            }
            _ => false,
        }
    }
}

fn check_positive(factors: &[f64]) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("factor list is empty".into()));
    }
    for (i, g) in factors.iter().enumerate() {
        if g.is_nan() || *g <= 0.0 {
            return Err(Error::InvalidInput(format!("factor {} = {g} must be positive", i + 1)));
        }
    }
    Ok(())
}

impl WeightScheme {
    /// `gamma_u`. The empty set returns the scheme's empty weight, which may
    /// be `+inf` in the semi-norm convention.
    pub fn weight_of(&self, u: SubsetMask) -> Result<f64> {
        if u.is_empty() {
            return Ok(self.empty_weight().as_f64());
        }
        self.log_weight_of(u).map(f64::exp)
    }

    /// `ln gamma_u` for nonempty `u` (log space avoids factorial under/overflow).
    pub fn log_weight_of(&self, u: SubsetMask) -> Result<f64> {
        assert!(!u.is_empty(), "log_weight_of is defined for nonempty subsets");
        match self {
            WeightScheme::Product { factors, .. } => {
                let mut acc = 0.0;
                for j in u.indices() {
                    acc += factors.log_factor(j as u64)?;
                }
                Ok(acc)
            }
            WeightScheme::Order { factors, .. } => factors.log_factor(u.cardinality() as u64),
            WeightScheme::Pod { order, product, .. } => {
                let mut acc = order.log_factor(u.cardinality() as u64)?;
                for j in u.indices() {
                    acc += product.log_factor(j as u64)?;
                }
                Ok(acc)
            }
            WeightScheme::FiniteOrder { factors, .. } => factors
                .get(u.cardinality() as usize - 1)
                .copied()
                .map(f64::ln)
                .ok_or(Error::MissingWeight(u)),
            WeightScheme::Explicit { d, table, .. } => {
                if u.dim() != *d && u.ceiling() > *d {
                    return Err(Error::MissingWeight(u));
                }
                table.get(&u.bits()).copied().map(f64::ln).ok_or(Error::MissingWeight(u))
            }
        }
    }

    /// `ln gamma_{{s}}` for a singleton, without constructing a mask (so `s`
    /// may exceed the mask width; needed for truncation searches).
    pub fn log_singleton(&self, s: u64) -> Result<f64> {
        assert!(s >= 1);
        match self {
            WeightScheme::Product { factors, .. } => factors.log_factor(s),
            WeightScheme::Order { factors, .. } => factors.log_factor(1),
            WeightScheme::Pod { order, product, .. } => {
                Ok(order.log_factor(1)? + product.log_factor(s)?)
            }
            WeightScheme::FiniteOrder { factors, .. } => factors
                .first()
                .copied()
                .map(f64::ln)
                .ok_or_else(|| Error::MissingWeight(SubsetMask::singleton(1, 1))),
            WeightScheme::Explicit { d, .. } => {
                if s as usize > *d {
                    return Err(Error::MissingWeight(SubsetMask::singleton(*d, *d)));
                }
                self.log_weight_of(SubsetMask::singleton(*d, s as usize))
            }
        }
    }

    /// `ln gamma_{1:s}` for the prefix `{1, .., s}`, `s >= 1`.
    pub fn log_prefix(&self, s: u64) -> Result<f64> {
        assert!(s >= 1);
        match self {
            WeightScheme::Product { factors, .. } => {
                let mut acc = 0.0;
                for j in 1..=s {
                    acc += factors.log_factor(j)?;
                }
                Ok(acc)
            }
            WeightScheme::Order { factors, .. } => factors.log_factor(s),
            WeightScheme::Pod { order, product, .. } => {
                let mut acc = order.log_factor(s)?;
                for j in 1..=s {
                    acc += product.log_factor(j)?;
                }
                Ok(acc)
            }
            WeightScheme::FiniteOrder { factors, .. } => factors
                .get(s as usize - 1)
                .copied()
                .map(f64::ln)
                .ok_or_else(|| Error::MissingWeight(SubsetMask::prefix(128, 128.min(s as usize)))),
            WeightScheme::Explicit { d, .. } => {
                if s as usize > *d {
                    return Err(Error::MissingWeight(SubsetMask::full(*d)));
                }
                self.log_weight_of(SubsetMask::prefix(*d, s as usize))
            }
        }
    }

    /// `ln gamma_{1:s}` for `s = 1..=s_max`, computed incrementally so long
    /// scans stay linear.
    pub fn log_prefix_sequence(
        &self,
        s_max: u64,
    ) -> Box<dyn Iterator<Item = Result<f64>> + '_> {
        match self {
            WeightScheme::Product { factors, .. } => {
                let mut acc = 0.0;
                Box::new((1..=s_max).map(move |j| {
                    factors.log_factor(j).map(|lf| {
                        acc += lf;
                        acc
                    })
                }))
            }
            WeightScheme::Order { factors, .. } => match factors {
                OrderSeq::FactorialPower { alpha } => {
                    let alpha = *alpha;
                    let mut lnfact = 0.0;
                    Box::new((1..=s_max).map(move |s| {
                        lnfact += (s as f64).ln();
                        Ok(alpha * lnfact)
                    }))
                }
                _ => Box::new((1..=s_max).map(move |s| factors.log_factor(s))),
            },
            WeightScheme::Pod { order, product, .. } => {
                let mut prod_acc = 0.0;
                let mut lnfact = 0.0;
                Box::new((1..=s_max).map(move |s| {
                    prod_acc += product.log_factor(s)?;
                    let order_part = match order {
                        OrderSeq::FactorialPower { alpha } => {
                            lnfact += (s as f64).ln();
                            alpha * lnfact
                        }
                        _ => order.log_factor(s)?,
                    };
                    Ok(order_part + prod_acc)
                }))
            }
            _ => Box::new((1..=s_max).map(move |s| self.log_prefix(s))),
        }
    }

    /// Freeze the scheme into an explicit table over `1:d`.
    pub fn materialize_explicit(&self, d: usize) -> Result<WeightScheme> {
        if d > ENUMERATION_CAP {
            return Err(Error::CapExceeded(format!(
                "materializing 2^{d} weights exceeds the {ENUMERATION_CAP}-dimension cap"
            )));
        }
        let mut table = BTreeMap::new();
        for u in SubsetMask::all(d) {
            if !u.is_empty() {
                table.insert(u.bits(), self.weight_of(u)?);
            }
        }
        Ok(WeightScheme::Explicit { d, table, empty: self.empty_weight() })
    }
}

// --- condition checks -------------------------------------------------------

impl WeightScheme {
    /// Checks `|u| >= s  =>  gamma_u <= gamma_{1:s}` for all `s <= d`.
    pub fn verify_cardinality_condition(&self, d: usize) -> Result<ConditionVerdict> {
        self.verify_condition(d, Condition::Cardinality)
    }

    /// Checks `ceil(u) >= s  =>  gamma_u <= gamma_{s}` for all `s <= d`.
    pub fn verify_index_condition(&self, d: usize) -> Result<ConditionVerdict> {
        self.verify_condition(d, Condition::Index)
    }

    fn verify_condition(&self, d: usize, which: Condition) -> Result<ConditionVerdict> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if d <= ENUMERATION_CAP {
            return self.verify_exhaustive(d, which);
        }
        self.verify_analytic(d, which)
    }

    fn verify_exhaustive(&self, d: usize, which: Condition) -> Result<ConditionVerdict> {
        // Thresholds min_{t <= s} of the right-hand sides, so each subset is
        // screened in O(1) before locating its exact witness.
        let mut rhs = Vec::with_capacity(d + 1);
        rhs.push(f64::INFINITY); // s = 0 unused
        for s in 1..=d {
            let v = match which {
                Condition::Cardinality => self.log_prefix(s as u64)?,
                Condition::Index => self.log_singleton(s as u64)?,
            };
            rhs.push(v);
        }
        let mut running_min = vec![f64::INFINITY; d + 1];
        for s in 1..=d {
            running_min[s] = running_min[s - 1].min(rhs[s]);
        }

        for u in SubsetMask::all(d).skip(1) {
            let limit = match which {
                Condition::Cardinality => u.cardinality() as usize,
                Condition::Index => u.ceiling(),
            };
            let log_w = self.log_weight_of(u)?;
            if log_le(log_w, running_min[limit]) {
                continue;
            }
            for (s, threshold) in rhs.iter().enumerate().take(limit + 1).skip(1) {
                if log_violates(log_w, *threshold) {
                    return Ok(ConditionVerdict::Fails { witness_u: u, witness_s: s as u64 });
                }
            }
        }
        Ok(ConditionVerdict::Holds)
    }

    /// Closed-form verdicts for parametric families above the enumeration cap.
    fn verify_analytic(&self, d: usize, which: Condition) -> Result<ConditionVerdict> {
        let witness = |idx: &[usize], s: u64| ConditionVerdict::Fails {
            witness_u: SubsetMask::from_indices(idx.iter().copied().max().unwrap(), idx),
            witness_s: s,
        };
        match self {
            WeightScheme::Product { factors: FactorSeq::PowerLaw { eta }, .. } => {
                if *eta >= 0.0 {
                    Ok(ConditionVerdict::Holds)
                } else {
                    // increasing factors: {2} already outweighs the s = 1 threshold
                    Ok(witness(&[2], 1))
                }
            }
            WeightScheme::Product { factors: FactorSeq::Table(t), .. } => {
                if t.len() < d {
                    return Err(Error::MissingWeight(SubsetMask::singleton(128, 128.min(d))));
                }
                let monotone = t.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
                if monotone && t[0] <= 1.0 + 1e-12 {
                    Ok(ConditionVerdict::Holds)
                } else {
                    Err(Error::CapExceeded(format!(
                        "d = {d} exceeds the enumeration cap and the factor table is not \
                         nonincreasing with gamma_1 <= 1"
                    )))
                }
            }
            WeightScheme::Order { factors: OrderSeq::Geometric { gamma }, .. } => {
                if *gamma <= 1.0 {
                    Ok(ConditionVerdict::Holds)
                } else {
                    Ok(witness(&[1, 2], 1))
                }
            }
            WeightScheme::Pod {
                order: OrderSeq::FactorialPower { alpha },
                product: FactorSeq::PowerLaw { eta: beta },
                ..
            } => match which {
                Condition::Cardinality => {
                    if *alpha <= *beta {
                        Ok(ConditionVerdict::Holds)
                    } else {
                        Ok(witness(&[1, 2], 1))
                    }
                }
                Condition::Index => {
                    if *alpha > 0.0 {
                        // adjoining index 1 raises the weight: gamma_{u+{1}} > gamma_u
                        Ok(witness(&[1, 2], 2))
                    } else if *beta >= 0.0 {
                        Ok(ConditionVerdict::Holds)
                    } else {
                        Ok(witness(&[2], 1))
                    }
                }
            },
            _ => Err(Error::CapExceeded(format!(
                "d = {d} exceeds the enumeration cap {ENUMERATION_CAP} and no analytic \
                 shortcut applies to this scheme"
            ))),
        }
    }
}

#[derive(Copy, Clone)]
enum Condition {
    Cardinality,
    Index,
}

// --- JSON description --------------------------------------------------------

impl WeightScheme {
    /// Parse the compact JSON description, e.g.
    /// `{"kind":"product","eta":2}`, `{"kind":"pod","alpha":1,"beta":3}`,
    /// `{"kind":"order","gamma":0.5}`, or
    /// `{"kind":"explicit","d":3,"weights":{"{1}":1.0}}`.
    /// An optional `"empty_weight"` is a number or the string `"inf"`.
    pub fn from_json(text: &str) -> Result<WeightScheme> {
        let v: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("weight JSON: {e}")))?;
        let kind = v
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::InvalidInput("weight JSON needs a \"kind\" field".into()))?;
        let num = |key: &str| -> Result<f64> {
            v.get(key)
                .and_then(|x| x.as_f64())
                .ok_or_else(|| Error::InvalidInput(format!("weight JSON needs numeric \"{key}\"")))
        };
        let factor_list = |key: &str| -> Result<Vec<f64>> {
            v.get(key)
                .and_then(|x| x.as_array())
                .map(|a| a.iter().filter_map(|x| x.as_f64()).collect::<Vec<_>>())
                .ok_or_else(|| Error::InvalidInput(format!("weight JSON needs array \"{key}\"")))
        };

        let mut scheme = match kind {
            "product" => {
                if v.get("factors").is_some() {
                    WeightScheme::product_factors(factor_list("factors")?)?
                } else {
                    WeightScheme::product_power(num("eta")?)
                }
            }
            "order" => {
                if v.get("factors").is_some() {
                    WeightScheme::order_table(factor_list("factors")?)?
                } else {
                    WeightScheme::order_geometric(num("gamma")?)?
                }
            }
            "pod" => WeightScheme::pod(num("alpha")?, num("beta")?),
            "finite_order" => WeightScheme::finite_order(factor_list("factors")?)?,
            "explicit" => {
                let d = v
                    .get("d")
                    .and_then(|x| x.as_u64())
                    .ok_or_else(|| Error::InvalidInput("explicit weights need \"d\"".into()))?
                    as usize;
                let map = v
                    .get("weights")
                    .and_then(|x| x.as_object())
                    .ok_or_else(|| Error::InvalidInput("explicit weights need \"weights\"".into()))?;
                let mut entries = Vec::new();
                for (key, val) in map {
                    let u = SubsetMask::parse(key, d)?;
                    let w = val.as_f64().ok_or_else(|| {
                        Error::InvalidInput(format!("weight for {key} is not a number"))
                    })?;
                    entries.push((u, w));
                }
                WeightScheme::explicit(d, &entries)?
            }
            other => {
                return Err(Error::InvalidInput(format!("unknown weight kind \"{other}\"")));
            }
        };

        if let Some(ew) = v.get("empty_weight") {
            let empty = match ew {
                serde_json::Value::String(s) if s == "inf" => EmptyWeight::Infinite,
                serde_json::Value::Number(n) => EmptyWeight::Finite(
                    n.as_f64().ok_or_else(|| Error::InvalidInput("bad empty_weight".into()))?,
                ),
                _ => return Err(Error::InvalidInput("empty_weight must be a number or \"inf\"".into())),
            };
            scheme = scheme.with_empty_weight(empty);
        }
        Ok(scheme)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(d: usize, idx: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(d, idx)
    }

    #[test]
    fn product_weight_values() {
        let s = WeightScheme::product_power(2.0);
        let w = s.weight_of(mask(2, &[1, 2])).unwrap();
        assert!((w - 0.25).abs() < 1e-14, "got {w}");
        assert_eq!(s.weight_of(SubsetMask::empty(2)).unwrap(), 1.0);
    }

    #[test]
    fn pod_weight_values() {
        // (|u|!)^1 * 1^-3 * 2^-3 = 2/8
        let s = WeightScheme::pod(1.0, 3.0);
        let w = s.weight_of(mask(2, &[1, 2])).unwrap();
        assert!((w - 0.25).abs() < 1e-14, "got {w}");
    }

    #[test]
    fn empty_weight_conventions() {
        let s = WeightScheme::product_power(1.0).with_empty_weight(EmptyWeight::Infinite);
        assert!(s.weight_of(SubsetMask::empty(3)).unwrap().is_infinite());
        assert_eq!(s.empty_weight().reciprocal(), 0.0);
    }

    #[test]
    fn parametric_agrees_with_materialized_table() {
        for scheme in [
            WeightScheme::product_power(1.5),
            WeightScheme::pod(1.0, 3.0),
            WeightScheme::order_geometric(0.5).unwrap(),
        ] {
            let table = scheme.materialize_explicit(6).unwrap();
            for u in SubsetMask::all(6).skip(1) {
                let a = scheme.weight_of(u).unwrap();
                let b = table.weight_of(u).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cardinality_condition_examples() {
        // gamma_j = 1/j
        let s = WeightScheme::product_power(1.0);
        assert!(s.verify_cardinality_condition(5).unwrap().holds());

        let pod = WeightScheme::pod(1.0, 3.0);
        assert!(pod.verify_cardinality_condition(5).unwrap().holds());

        let e = WeightScheme::explicit(
            2,
            &[
                (mask(2, &[1]), 1.0),
                (mask(2, &[2]), 1.0),
                (mask(2, &[1, 2]), 2.0),
            ],
        )
        .unwrap();
        match e.verify_cardinality_condition(2).unwrap() {
            ConditionVerdict::Fails { witness_u, witness_s } => {
                assert_eq!(witness_u, mask(2, &[1, 2]));
                assert_eq!(witness_s, 1);
            }
            ConditionVerdict::Holds => panic!("expected failure"),
        }
    }

    #[test]
    fn index_condition_examples() {
        let s = WeightScheme::product_power(2.0);
        assert!(s.verify_index_condition(6).unwrap().holds());

        let order = WeightScheme::order_geometric(0.5).unwrap();
        assert!(order.verify_index_condition(4).unwrap().holds());

        // POD weights put extra mass on subsets containing index 1.
        let pod = WeightScheme::pod(1.0, 3.0);
        match pod.verify_index_condition(3).unwrap() {
            ConditionVerdict::Fails { witness_u, witness_s } => {
                assert_eq!(witness_u, mask(3, &[1, 2]));
                assert_eq!(witness_s, 2);
                let wu = pod.weight_of(witness_u).unwrap();
                let ws = pod.weight_of(mask(3, &[2])).unwrap();
                assert!((wu - 0.25).abs() < 1e-14);
                assert!((ws - 0.125).abs() < 1e-14);
            }
            ConditionVerdict::Holds => panic!("expected failure"),
        }
    }

    #[test]
    fn analytic_paths_match_exhaustive_direction() {
        // Above the cap, parametric schemes decide analytically.
        let s = WeightScheme::product_power(2.0);
        assert!(s.verify_cardinality_condition(50).unwrap().holds());
        assert!(s.verify_index_condition(50).unwrap().holds());

        let pod = WeightScheme::pod(1.0, 3.0);
        assert!(pod.verify_cardinality_condition(50).unwrap().holds());
        assert!(!pod.verify_index_condition(50).unwrap().holds());

        let incr = WeightScheme::product_power(-1.0);
        assert!(!incr.verify_cardinality_condition(30).unwrap().holds());
    }

    #[test]
    fn nonincreasing_product_satisfies_both_conditions() {
        // gamma_j nonincreasing and <= 1: both conditions hold exhaustively.
        for factors in [
            vec![1.0, 0.9, 0.5, 0.5, 0.1, 0.05],
            vec![0.7, 0.7, 0.7, 0.7, 0.7, 0.7],
            vec![1.0, 0.25, 0.2, 0.125, 0.0625, 0.03125],
        ] {
            let s = WeightScheme::product_factors(factors).unwrap();
            assert!(s.verify_cardinality_condition(6).unwrap().holds());
            assert!(s.verify_index_condition(6).unwrap().holds());
        }
    }

    #[test]
    fn finite_order_weights_stop_at_cutoff() {
        let s = WeightScheme::finite_order(vec![1.0, 0.5]).unwrap();
        assert!(s.weight_of(mask(3, &[1, 2])).is_ok());
        assert!(matches!(
            s.weight_of(mask(3, &[1, 2, 3])),
            Err(Error::MissingWeight(_))
        ));
    }

    #[test]
    fn json_round_trips() {
        let p = WeightScheme::from_json(r#"{"kind":"product","eta":2}"#).unwrap();
        assert_eq!(p, WeightScheme::product_power(2.0));

        let pod = WeightScheme::from_json(r#"{"kind":"pod","alpha":1,"beta":3}"#).unwrap();
        assert_eq!(pod, WeightScheme::pod(1.0, 3.0));

        let o = WeightScheme::from_json(r#"{"kind":"order","gamma":0.5}"#).unwrap();
        let w = o.weight_of(mask(4, &[2, 3])).unwrap();
        assert!((w - 0.25).abs() < 1e-14);

        let e = WeightScheme::from_json(
            r#"{"kind":"explicit","d":2,"weights":{"{1}":1.0,"{2}":0.5,"{1,2}":0.25,"{}":2.0}}"#,
        )
        .unwrap();
        assert_eq!(e.weight_of(SubsetMask::empty(2)).unwrap(), 2.0);
        assert_eq!(e.weight_of(mask(2, &[2])).unwrap(), 0.5);

        let semi = WeightScheme::from_json(r#"{"kind":"product","eta":1,"empty_weight":"inf"}"#)
            .unwrap();
        assert!(semi.empty_weight().as_f64().is_infinite());

        assert!(WeightScheme::from_json(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn explicit_missing_entry_errors() {
        let e = WeightScheme::explicit(2, &[(mask(2, &[1]), 1.0)]).unwrap();
        assert!(matches!(
            e.weight_of(mask(2, &[2])),
            Err(Error::MissingWeight(_))
        ));
    }
}
