//! Space-level quantities for a weight family: the critical radius of the
//! smallest ball containing a unit-variance function, per-subset variance
//! bounds, and upper bounds on effective dimension in the truncation and
//! superposition senses.
//!
//! The dimension bounds are maxima of the form `max { s : lhs(s) >= rhs(s) }`.
//! At exact equality the max is ambiguous in published tabulations, so every
//! comparison here is three-valued: `NonStrict` counts ties (within relative
//! 1e-12) as satisfying, `Strict` does not, and ties raise a boundary flag
//! either way.

use std::f64::consts::{E, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{log_cmp, TolCmp};
use crate::subset::{SubsetMask, MAX_DIM};
use crate::weights::{ConditionVerdict, WeightScheme, ENUMERATION_CAP};

/// Search cap for truncation scans on schemes without closed-form decay.
pub const TRUNCATION_SEARCH_CAP: u64 = 10_000_000;

/// Superposition searches with unbounded dimension stop here.
pub const SUPERPOSITION_SEARCH_CAP: u64 = 200;

/// Nominal dimension: finite, or unbounded for schemes defined for every
/// coordinate index.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum Extent {
    Finite(u64),
    Infinite,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum ComparisonMode {
    /// The literal formula: ties satisfy the defining inequality.
    NonStrict,
    /// Ties are excluded.
    Strict,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum DimSense {
    Truncation,
    Superposition,
}

/// A dimension value: finite, a verified lower bound (search hit its cap), or
/// unbounded.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum DimValue {
    Finite(u64),
    AtLeast(u64),
    Infinite,
}

impl DimValue {
    pub fn as_finite(&self) -> Option<u64> {
        match self {
            DimValue::Finite(s) => Some(*s),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, DimValue::Infinite)
    }
}

impl fmt::Display for DimValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimValue::Finite(s) => write!(f, "{s}"),
            DimValue::AtLeast(s) => write!(f, ">={s}"),
            DimValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Result of a dimension-bound computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EffDimReport {
    pub epsilon: f64,
    pub sense: DimSense,
    pub value: DimValue,
    pub mode: ComparisonMode,
    /// Some scanned `s` sat exactly on the defining equality (relative 1e-12).
    pub boundary: bool,
    /// Set when the required weight condition could not be verified.
    pub condition_warning: Option<String>,
}

/// How the critical radius was obtained.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum RhoStarRoute {
    /// The dominated-weights shortcut applied: the singleton `{1}` minimizes.
    Proposition,
    /// Exhaustive minimization over nonempty subsets.
    GeneralSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoStarResult {
    pub rho: f64,
    pub argmin_subset: SubsetMask,
    pub via: RhoStarRoute,
    /// `ln(rho^2)`, kept for downstream log-space products.
    pub log_rho_sq: f64,
}

// --- Lambert W -----------------------------------------------------------------

/// Principal branch of the Lambert function: the `w >= -1` solving
/// `w e^w = x`, for `x >= -1/e`. Residual `|w e^w - x|` stays within
/// `1e-12 * max(1, |x|)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp(); // -1/e
    if x < branch {
        if x > branch - 1e-12 {
            return Ok(-1.0);
        }
        return Err(Error::OutOfDomain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = if x > E {
        let l = x.ln();
        l - l.ln()
    } else if x > 0.0 {
        // ln(1+x) tracks W well on (0, e]
        x.ln_1p()
    } else {
        // series at the branch point
        let p = (2.0 * (E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    };

    for _ in 0..60 {
        let ew = w.exp();
        let fval = w * ew - x;
        if fval.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-9 {
            break; // at the branch point the residual is already flat
        }
        // Halley step
        let denom = ew * wp1 - (w + 2.0) * fval / (2.0 * wp1);
        let step = fval / denom;
        w -= step;
        if step.abs() <= 1e-16 * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}

/// Quadrature tractability classes for `gamma_j = j^(-eta)`.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum TractabilityClass {
    /// `sum gamma_j^(1/2) < inf`: QMC rates `n^(-1+delta)` exist.
    QmcRate,
    /// `sum gamma_j < inf`: dimension-independent cost, MC-like rate.
    StronglyTractable,
    /// Neither sufficient condition applies.
    NotEstablished,
}

impl fmt::Display for TractabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TractabilityClass::QmcRate => "QmcRate",
            TractabilityClass::StronglyTractable => "StronglyTractable",
            TractabilityClass::NotEstablished => "NotEstablished",
        };
        write!(f, "{s}")
    }
}

pub fn tractability_class(eta: f64) -> TractabilityClass {
    if eta > 2.0 {
        TractabilityClass::QmcRate
    } else if eta > 1.0 {
        TractabilityClass::StronglyTractable
    } else {
        TractabilityClass::NotEstablished
    }
}

// --- critical radius -------------------------------------------------------------

/// The radius of the smallest ball (in the weighted norm) containing a
/// function of unit variance. When `gamma_{1} pi^-2` dominates
/// `gamma_u pi^(-2|u|)` for every nonempty `u` this is
/// `pi / sqrt(gamma_{1})` with the singleton `{1}` extremal; otherwise an
/// exhaustive search minimizes `pi^(2|u|) / gamma_u`.
pub fn critical_radius(scheme: &WeightScheme, d: usize) -> Result<RhoStarResult> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let ln_pi = PI.ln();
    if weights_dominated_by_first_singleton(scheme) {
        let log_rho_sq = 2.0 * ln_pi - scheme.log_singleton(1)?;
        return Ok(RhoStarResult {
            rho: (0.5 * log_rho_sq).exp(),
            argmin_subset: SubsetMask::singleton(d.min(MAX_DIM), 1),
            via: RhoStarRoute::Proposition,
            log_rho_sq,
        });
    }
    if d > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "critical-radius search over 2^{d} subsets exceeds the cap of {ENUMERATION_CAP}"
        )));
    }

    let mut best: Option<(f64, SubsetMask)> = None;
    for u in SubsetMask::all(d).skip(1) {
        let key = 2.0 * u.cardinality() as f64 * ln_pi - scheme.log_weight_of(u)?;
        match &best {
            None => best = Some((key, u)),
            Some((bk, bu)) => match log_cmp(key, *bk) {
                TolCmp::Below => best = Some((key, u)),
                TolCmp::Tie => {
                    let better = (u.cardinality(), u.bits()) < (bu.cardinality(), bu.bits());
                    if better {
                        best = Some((*bk, u));
                    }
                }
                TolCmp::Above => {}
            },
        }
    }
    let (log_rho_sq, argmin) = best.expect("nonempty subset search");
    Ok(RhoStarResult {
        rho: (0.5 * log_rho_sq).exp(),
        argmin_subset: argmin,
        via: RhoStarRoute::GeneralSearch,
        log_rho_sq,
    })
}

/// Sufficient analytic check for `gamma_u <= gamma_{1}` on nonempty subsets,
/// which implies the singleton `{1}` minimizes `pi^(2|u|)/gamma_u`.
fn weights_dominated_by_first_singleton(scheme: &WeightScheme) -> bool {
    use crate::weights::{FactorSeq, OrderSeq};
    match scheme {
        WeightScheme::Product { factors: FactorSeq::PowerLaw { eta }, .. } => *eta >= 0.0,
        WeightScheme::Product { factors: FactorSeq::Table(t), .. } => {
            t.windows(2).all(|w| w[1] <= w[0]) && t.get(1).copied().unwrap_or(0.0) <= 1.0
        }
        WeightScheme::Order { factors: OrderSeq::Geometric { gamma }, .. } => *gamma <= 1.0,
        WeightScheme::Order { factors: OrderSeq::Table(t), .. } => {
            t.windows(2).all(|w| w[1] <= w[0])
        }
        WeightScheme::Pod {
            order: OrderSeq::FactorialPower { alpha },
            product: FactorSeq::PowerLaw { eta: beta },
            ..
        } => *alpha <= *beta && *beta >= 0.0,
        _ => false,
    }
}

/// The largest variance any function on the critical ball can put on the
/// component `u`: `rho*^2 gamma_u pi^(-2|u|)`.
pub fn component_variance_bound(scheme: &WeightScheme, u: SubsetMask) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    let rho = critical_radius(scheme, u.dim())?;
    let log_bound =
        rho.log_rho_sq + scheme.log_weight_of(u)? - 2.0 * u.cardinality() as f64 * PI.ln();
    Ok(log_bound.exp())
}

// --- dimension bounds --------------------------------------------------------------

/// Scan bookkeeping shared by both senses.
struct ScanState {
    best_nonstrict: Option<u64>,
    best_strict: Option<u64>,
    any_tie: bool,
}

impl ScanState {
    fn new() -> Self {
        ScanState { best_nonstrict: None, best_strict: None, any_tie: false }
    }

    fn observe(&mut self, s: u64, cmp: TolCmp) {
        match cmp {
            TolCmp::Above => {
                self.best_nonstrict = Some(s);
                self.best_strict = Some(s);
            }
            TolCmp::Tie => {
                self.any_tie = true;
                self.best_nonstrict = Some(s);
            }
            TolCmp::Below => {}
        }
    }

    fn value(&self, mode: ComparisonMode) -> u64 {
        // s = 1 always satisfies the non-strict test for eps < 1; an empty
        // scan can only come from a tie right at s = 1 in strict mode.
        match mode {
            ComparisonMode::NonStrict => self.best_nonstrict.unwrap_or(1),
            ComparisonMode::Strict => self.best_strict.unwrap_or(1),
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0,1)")));
    }
    Ok(())
}

/// Run a condition check, distinguishing "verifiably violated" (an error)
/// from "could not be verified" (a warning carried on the report).
fn gate_condition(
    check: std::result::Result<ConditionVerdict, Error>,
) -> Result<Option<String>> {
    match check {
        Ok(ConditionVerdict::Holds) => Ok(None),
        Ok(ConditionVerdict::Fails { witness_u, witness_s }) => {
            Err(Error::ConditionViolated { witness_u, witness_s })
        }
        Err(e) => Ok(Some(format!("weight condition not verifiable: {e}"))),
    }
}

fn condition_check_dim(extent: Extent) -> usize {
    match extent {
        Extent::Finite(d) => d as usize,
        // force the analytic path for unbounded schemes
        Extent::Infinite => ENUMERATION_CAP + 1,
    }
}

/// Finite superposition scans stop here; larger nominal dimensions report a
/// verified lower bound if the predicate still holds at the cap.
const SUPERPOSITION_FINITE_CAP: u64 = 1_000_000;

/// Upper bound on the superposition dimension at level `1 - epsilon`:
/// `max { s : gamma_{1:s} >= pi^(2(s-1)) gamma_{1} epsilon }`, scanned over
/// `1..=d` (or up to 200 when the dimension is unbounded). The predicate is
/// evaluated at every `s`; monotonicity is not assumed.
pub fn superposition_dimension_bound(
    scheme: &WeightScheme,
    extent: Extent,
    epsilon: f64,
    mode: ComparisonMode,
) -> Result<EffDimReport> {
    check_epsilon(epsilon)?;
    let warning = gate_condition(scheme.verify_cardinality_condition(condition_check_dim(extent)))?;

    let s_max = match extent {
        Extent::Finite(d) => d.min(SUPERPOSITION_FINITE_CAP),
        Extent::Infinite => SUPERPOSITION_SEARCH_CAP,
    };
    let ln_pi = PI.ln();
    let base = scheme.log_singleton(1)? + epsilon.ln();
    let mut state = ScanState::new();
    let mut last_satisfies = false;
    for (offset, lhs) in scheme.log_prefix_sequence(s_max).enumerate() {
        let s = offset as u64 + 1;
        let rhs = 2.0 * (s as f64 - 1.0) * ln_pi + base;
        let cmp = log_cmp(lhs?, rhs);
        last_satisfies = !matches!(cmp, TolCmp::Below);
        state.observe(s, cmp);
    }
    let value = if matches!(extent, Extent::Finite(d) if d > s_max) && last_satisfies {
        DimValue::AtLeast(s_max)
    } else {
        DimValue::Finite(state.value(mode))
    };
    Ok(EffDimReport {
        epsilon,
        sense: DimSense::Superposition,
        value,
        mode,
        boundary: state.any_tie,
        condition_warning: warning,
    })
}

/// How singleton weights behave as the index grows, for schemes that are
/// defined at every index.
enum SingletonDecay {
    /// `ln gamma_{s} - ln gamma_{1} = -beta ln s`.
    PowerLaw { beta: f64 },
    Constant,
}

fn singleton_decay(scheme: &WeightScheme) -> Option<SingletonDecay> {
    use crate::weights::{FactorSeq, OrderSeq};
    match scheme {
        WeightScheme::Product { factors: FactorSeq::PowerLaw { eta }, .. } => {
            Some(SingletonDecay::PowerLaw { beta: *eta })
        }
        WeightScheme::Pod { product: FactorSeq::PowerLaw { eta }, order, .. }
            if !matches!(order, OrderSeq::Table(_)) =>
        {
            // the order factor at cardinality 1 cancels out of the ratio
            Some(SingletonDecay::PowerLaw { beta: *eta })
        }
        WeightScheme::Order { factors, .. } if !matches!(factors, OrderSeq::Table(_)) => {
            Some(SingletonDecay::Constant)
        }
        _ => None,
    }
}

/// Upper bound on the truncation dimension at level `1 - epsilon`:
/// `max { s : gamma_{s} >= gamma_{1} epsilon }`. Power-law schemes solve the
/// crossing in closed form (so unbounded `d` and very large answers are
/// exact); everything else scans up to the cap and reports a lower bound if
/// the cap is hit while the predicate still holds.
pub fn truncation_dimension_bound(
    scheme: &WeightScheme,
    extent: Extent,
    epsilon: f64,
    mode: ComparisonMode,
) -> Result<EffDimReport> {
    check_epsilon(epsilon)?;
    let warning = gate_condition(scheme.verify_index_condition(condition_check_dim(extent)))?;

    let report = |value: DimValue, boundary: bool| EffDimReport {
        epsilon,
        sense: DimSense::Truncation,
        value,
        mode,
        boundary,
        condition_warning: warning.clone(),
    };

    match singleton_decay(scheme) {
        Some(SingletonDecay::Constant) => {
            // gamma_{s}/gamma_{1} = 1 >= epsilon for every s
            return Ok(match extent {
                Extent::Finite(d) => report(DimValue::Finite(d), false),
                Extent::Infinite => report(DimValue::Infinite, false),
            });
        }
        Some(SingletonDecay::PowerLaw { beta }) => {
            if beta <= 0.0 {
                // non-decaying singleton weights never drop below the level
                return Ok(match extent {
                    Extent::Finite(d) => report(DimValue::Finite(d), false),
                    Extent::Infinite => report(DimValue::Infinite, false),
                });
            }
            let s_star = ((1.0 / epsilon).ln() / beta).exp();
            if s_star > 1e12 {
                return Ok(report(DimValue::AtLeast(1e12 as u64), false));
            }
            // classify a window around the crossing; weights are strictly
            // decreasing so everything below the window satisfies strictly
            let center = s_star.floor() as u64;
            let lo = center.saturating_sub(3).max(1);
            let hi = center + 3;
            let mut state = ScanState::new();
            if lo > 1 {
                state.observe(lo - 1, TolCmp::Above);
            }
            for s in lo..=hi {
                if let Extent::Finite(d) = extent {
                    if s > d {
                        break;
                    }
                }
                let cmp = log_cmp(-beta * (s as f64).ln(), epsilon.ln());
                state.observe(s, cmp);
            }
            let mut value = state.value(mode);
            if let Extent::Finite(d) = extent {
                value = value.min(d);
            }
            return Ok(report(DimValue::Finite(value), state.any_tie));
        }
        None => {}
    }

    // generic scan
    let d = match extent {
        Extent::Finite(d) => d,
        Extent::Infinite => {
            return Err(Error::InvalidInput(
                "unbounded dimension needs a scheme with singleton weights at every index".into(),
            ))
        }
    };
    let scan_max = d.min(TRUNCATION_SEARCH_CAP);
    let base = scheme.log_singleton(1)? + epsilon.ln();
    let mut state = ScanState::new();
    let mut last_satisfies = false;
    for s in 1..=scan_max {
        let cmp = log_cmp(scheme.log_singleton(s)?, base);
        last_satisfies = !matches!(cmp, TolCmp::Below);
        state.observe(s, cmp);
    }
    if d > scan_max && last_satisfies {
        return Ok(report(DimValue::AtLeast(scan_max), state.any_tie));
    }
    Ok(report(DimValue::Finite(state.value(mode)), state.any_tie))
}

/// Closed-form bounds for product weights `gamma_j = j^(-eta)`:
/// truncation `max { s : s^-eta >= eps }` (unbounded when `eta = 0`) and
/// superposition `max { s : (s!)^-eta >= pi^(2(s-1)) eps }`, both evaluated in
/// log space.
pub fn product_dimension_bounds(
    eta: f64,
    epsilon: f64,
    mode: ComparisonMode,
) -> Result<(EffDimReport, EffDimReport)> {
    if eta < 0.0 {
        return Err(Error::InvalidInput(format!("eta {eta} must be nonnegative")));
    }
    let scheme = WeightScheme::product_power(eta);
    let trunc = truncation_dimension_bound(&scheme, Extent::Infinite, epsilon, mode)?;
    let sup = superposition_dimension_bound(&scheme, Extent::Infinite, epsilon, mode)?;
    Ok((trunc, sup))
}

/// One cell per `(epsilon, eta)` pair, in row-major order (epsilon outer).
#[derive(Debug, Clone)]
pub struct TableRow {
    pub epsilon: f64,
    pub eta: f64,
    pub truncation: EffDimReport,
    pub superposition: EffDimReport,
}

pub fn effective_dimension_table(
    etas: &[f64],
    epsilons: &[f64],
    mode: ComparisonMode,
) -> Result<Vec<TableRow>> {
    if etas.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidInput("table needs at least one eta and one epsilon".into()));
    }
    let mut rows = Vec::with_capacity(etas.len() * epsilons.len());
    for &epsilon in epsilons {
        for &eta in etas {
            let (truncation, superposition) = product_dimension_bounds(eta, epsilon, mode)?;
            rows.push(TableRow { epsilon, eta, truncation, superposition });
        }
    }
    Ok(rows)
}

// --- important interactions ---------------------------------------------------------

/// All subsets of order at most `max_order` whose component-variance bound
/// reaches `epsilon` (ties at the threshold count), sorted by bound
/// descending. Small dimensions enumerate; product weights with nonincreasing
/// factors below `pi^2` use a pruned depth-first search instead, since adding
/// an index can only shrink the bound.
pub fn important_subsets(
    scheme: &WeightScheme,
    d: usize,
    epsilon: f64,
    max_order: usize,
) -> Result<Vec<(SubsetMask, f64)>> {
    check_epsilon(epsilon)?;
    if max_order == 0 {
        return Err(Error::InvalidInput("max_order must be at least 1".into()));
    }
    if d > MAX_DIM {
        return Err(Error::CapExceeded(format!("d = {d} exceeds the subset width {MAX_DIM}")));
    }
    let rho = critical_radius(scheme, d)?;
    let ln_pi = PI.ln();
    let ln_eps = epsilon.ln();
    let log_bound = |u: SubsetMask| -> Result<f64> {
        Ok(rho.log_rho_sq + scheme.log_weight_of(u)? - 2.0 * u.cardinality() as f64 * ln_pi)
    };

    let mut hits: Vec<(SubsetMask, f64)> = Vec::new();
    if d <= ENUMERATION_CAP {
        for u in SubsetMask::all(d).skip(1) {
            if u.cardinality() as usize > max_order {
                continue;
            }
            let lb = log_bound(u)?;
            if !matches!(log_cmp(lb, ln_eps), TolCmp::Below) {
                hits.push((u, lb.exp()));
            }
        }
    } else {
        if !product_prunable(scheme, d)? {
            return Err(Error::CapExceeded(format!(
                "d = {d} exceeds the enumeration cap and the scheme does not support \
                 monotone pruning"
            )));
        }
        dfs_product(d, max_order, ln_eps, &log_bound, SubsetMask::empty(d), 0, &mut hits)?;
    }

    hits.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cardinality().cmp(&b.0.cardinality()))
            .then_with(|| a.0.bits().cmp(&b.0.bits()))
    });
    Ok(hits)
}

/// Pruning needs nonincreasing per-coordinate factors bounded by `pi^2`.
fn product_prunable(scheme: &WeightScheme, d: usize) -> Result<bool> {
    use crate::weights::FactorSeq;
    match scheme {
        WeightScheme::Product { factors: FactorSeq::PowerLaw { eta }, .. } => Ok(*eta >= 0.0),
        WeightScheme::Product { factors: FactorSeq::Table(t), .. } => {
            Ok(t.len() >= d
                && t.windows(2).all(|w| w[1] <= w[0])
                && t.iter().all(|&g| g <= PI * PI))
        }
        _ => Ok(false),
    }
}

fn dfs_product(
    d: usize,
    max_order: usize,
    ln_eps: f64,
    log_bound: &dyn Fn(SubsetMask) -> Result<f64>,
    u: SubsetMask,
    last: usize,
    hits: &mut Vec<(SubsetMask, f64)>,
) -> Result<()> {
    if u.cardinality() as usize >= max_order {
        return Ok(());
    }
    for j in (last + 1)..=d {
        let v = u.insert(j);
        let lb = log_bound(v)?;
        if matches!(log_cmp(lb, ln_eps), TolCmp::Below) {
            // factors are nonincreasing: later siblings and all supersets
            // have smaller bounds
            break;
        }
        hits.push((v, lb.exp()));
        dfs_product(d, max_order, ln_eps, log_bound, v, j, hits)?;
    }
    Ok(())
}

// --- asymptotics ----------------------------------------------------------------------

/// The asymptote for the superposition bound with product weights:
/// `log(A) / W0(A)` at `A = log(1/eps) / (lambda eta)`, valid once `A >= e`.
pub fn superposition_asymptote(epsilon: f64, eta: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidInput(format!("lambda {lambda} outside (0,1)")));
    }
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::InvalidInput(format!("eta {eta} must be positive")));
    }
    check_epsilon(epsilon)?;
    let a = (1.0 / epsilon).ln() / (lambda * eta);
    if a < E {
        return Err(Error::DomainTooLarge(a));
    }
    Ok(a.ln() / lambert_w0(a)?)
}
