//! ANOVA and anchored decompositions of explicit integrands, weighted norms,
//! and the per-function effective-dimension measures built on them.
//!
//! The ANOVA variance components come from closed moments
//! `C_v = int ( int f dx_{-v} )^2 dx_v` by subset Mobius inversion, so each
//! moment costs one full-dimensional quadrature and no projection has to be
//! represented explicitly. For tensor rules the moments of all `2^d` subsets
//! are collected from `binom(d, floor(d/2))` sweeps of the grid: every subset
//! is a prefix of some axis ordering, and one sweep yields every prefix of
//! its ordering at once (a symmetric chain decomposition of the subset
//! lattice). Product-form integrands skip the sweeps entirely and reduce to
//! one-dimensional sums.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec;
use crate::integrand::{Integrand, OneDim};
use crate::quadrature::{
    gauss_legendre_01, integrate, midpoint_01, CounterRng, Method, QuadSpec, STREAM_CAP,
};
use crate::subset::SubsetMask;
use crate::weights::WeightScheme;

/// Full enumeration of `2^d` closed moments stops here.
pub const ANOVA_CAP: usize = 12;

/// Inclusion-exclusion over anchored evaluations stops here.
pub const ANCHOR_CAP: u32 = 25;

// --- tensor sweeps -----------------------------------------------------------------

struct TensorCtx<'a> {
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    nodes: &'a [f64],
    weights: &'a [f64],
    perm: &'a [usize],
    d: usize,
}

/// Sum over axes `level..d` for the fixed outer coordinates in `x`, adding
/// `outer_w * (inner sum)^2` into `acc[level]` along the way.
fn sweep(
    ctx: &TensorCtx<'_>,
    level: usize,
    x: &mut [f64],
    outer_w: f64,
    acc: &mut [f64],
    bad: &mut Option<Vec<f64>>,
) -> f64 {
    if level == ctx.d {
        let v = (ctx.f)(x);
        if !v.is_finite() && bad.is_none() {
            *bad = Some(x.to_vec());
        }
        acc[ctx.d] += outer_w * v * v;
        return v;
    }
    let axis = ctx.perm[level];
    let mut s = 0.0;
    for (i, &node) in ctx.nodes.iter().enumerate() {
        x[axis] = node;
        let w = ctx.weights[i];
        s += w * sweep(ctx, level + 1, x, outer_w * w, acc, bad);
    }
    if level > 0 {
        acc[level] += outer_w * s * s;
    }
    s
}

/// Closed moments of every prefix of `perm`: returns `(mu, acc)` where
/// `acc[k]` is the moment of the subset `{perm[0], .., perm[k-1]}` (axes
/// 0-based) and `acc[0] = mu^2`.
fn prefix_moments(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    d: usize,
    nodes: &[f64],
    weights: &[f64],
    perm: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let n = nodes.len();
    let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > STREAM_CAP {
        return Err(Error::CapExceeded(format!(
            "sweeping {n}^{d} tensor nodes exceeds the cap of {STREAM_CAP}"
        )));
    }
    let chunk = (n / 64).max(1);
    let parts = exec::run_chunked(n, chunk, |range| {
        let ctx = TensorCtx { f, nodes, weights, perm, d };
        let mut acc = vec![0.0; d + 1];
        let mut x = vec![0.0; d];
        let mut bad = None;
        let mut top = 0.0;
        for i in range {
            x[perm[0]] = nodes[i];
            let w = weights[i];
            top += w * sweep(&ctx, 1, &mut x, w, &mut acc, &mut bad);
        }
        (top, acc, bad)
    });
    let mut mu = 0.0;
    let mut acc = vec![0.0; d + 1];
    for (top, part, bad) in parts {
        if let Some(point) = bad {
            return Err(Error::EvaluationError { point });
        }
        mu += top;
        for (a, p) in acc.iter_mut().zip(&part) {
            *a += p;
        }
    }
    acc[0] = mu * mu;
    Ok((mu, acc))
}

fn tensor_axes(spec: &QuadSpec) -> Option<(Vec<f64>, Vec<f64>)> {
    match spec.method {
        Method::GaussTensor { n } => Some(gauss_legendre_01(n)),
        Method::Midpoint { n } => Some(midpoint_01(n)),
        _ => None,
    }
}

// --- symmetric chain decomposition ----------------------------------------------------

/// One grid sweep: an axis ordering plus the (prefix length, subset bits)
/// pairs it is responsible for.
struct ChainPass {
    perm: Vec<usize>,
    levels: Vec<(usize, u128)>,
}

/// Partition the subsets of `1:d` into chains, each realized as consecutive
/// prefixes of one axis ordering. Bracket matching: members of `v` are
/// openers, non-members closers; a chain is identified by its matched pairs
/// and the set of unmatched positions.
fn chain_passes(d: usize) -> Vec<ChainPass> {
    use std::collections::HashSet;
    let mut seen: HashSet<(u128, u128)> = HashSet::new();
    let mut passes = Vec::new();
    for v in SubsetMask::all(d) {
        let mut stack: Vec<usize> = Vec::new();
        let mut matched: u128 = 0;
        let mut unmatched_out: Vec<usize> = Vec::new();
        for j in 1..=d {
            if v.contains(j) {
                stack.push(j);
            } else if let Some(i) = stack.pop() {
                matched |= 1u128 << (i - 1);
            } else {
                unmatched_out.push(j);
            }
        }
        // unmatched closers all precede unmatched openers
        let mut unmatched = unmatched_out;
        unmatched.extend(&stack);
        let u_bits = unmatched.iter().fold(0u128, |b, &j| b | (1u128 << (j - 1)));
        if !seen.insert((matched, u_bits)) {
            continue;
        }

        let base: Vec<usize> = (1..=d).filter(|&j| matched >> (j - 1) & 1 == 1).collect();
        let rest: Vec<usize> = (1..=d)
            .filter(|&j| matched >> (j - 1) & 1 == 0 && u_bits >> (j - 1) & 1 == 0)
            .collect();
        // prefixes of (base, reversed unmatched, rest) of lengths
        // |base|..=|base|+|unmatched| are exactly the chain members
        let mut perm: Vec<usize> = Vec::with_capacity(d);
        perm.extend(base.iter().map(|j| j - 1));
        perm.extend(unmatched.iter().rev().map(|j| j - 1));
        perm.extend(rest.iter().map(|j| j - 1));

        let mut levels = Vec::with_capacity(unmatched.len() + 1);
        let mut bits = matched;
        levels.push((base.len(), bits));
        for (t, &j) in unmatched.iter().rev().enumerate() {
            bits |= 1u128 << (j - 1);
            levels.push((base.len() + t + 1, bits));
        }
        passes.push(ChainPass { perm, levels });
    }
    passes
}

// --- closed moments -------------------------------------------------------------------

/// `C_v = int ( int f dx_{-v} )^2 dx_v`; the empty set gives the squared mean.
pub fn closed_moment(f: &Integrand, v: SubsetMask, spec: &QuadSpec) -> Result<f64> {
    let d = f.dim();
    assert_eq!(v.dim(), d, "subset dimension mismatch");
    if let Some((i_marg, q_marg)) = separable_marginals(f, spec) {
        let mut out = 1.0;
        for j in 1..=d {
            out *= if v.contains(j) { q_marg[j - 1] } else { i_marg[j - 1] * i_marg[j - 1] };
        }
        return Ok(out);
    }
    if let Some((nodes, weights)) = tensor_axes(spec) {
        let mut perm: Vec<usize> = v.indices().iter().map(|j| j - 1).collect();
        perm.extend(v.complement().indices().iter().map(|j| j - 1));
        let eval = |x: &[f64]| f.eval(x);
        let (_, acc) = prefix_moments(&eval, d, &nodes, &weights, &perm)?;
        return Ok(acc[v.cardinality() as usize]);
    }
    let (moments, _, _, _) = randomized_moments(f, spec, Some(v))?;
    Ok(moments[0])
}

/// Per-axis quadrature sums `(int phi_j, int phi_j^2)` for product-form
/// integrands under a tensor rule; the closed moments factorize over them.
fn separable_marginals(f: &Integrand, spec: &QuadSpec) -> Option<(Vec<f64>, Vec<f64>)> {
    let factors = f.factors()?;
    let (nodes, weights) = tensor_axes(spec)?;
    let mut i_marg = Vec::with_capacity(factors.len());
    let mut q_marg = Vec::with_capacity(factors.len());
    for fac in factors {
        let mut i_acc = 0.0;
        let mut q_acc = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            let v = (fac.f)(*t);
            i_acc += w * v;
            q_acc += w * v * v;
        }
        i_marg.push(i_acc);
        q_marg.push(q_acc);
    }
    Some((i_marg, q_marg))
}

/// Monte Carlo closed moments: `C_v = E[ f(x_v : y_{-v}) f(x_v : z_{-v}) ]`
/// with `x`, `y`, `z` independent streams. Returns per-subset estimates,
/// their standard errors, the mean estimate, and its standard error. When
/// `only` is given, just that subset is computed.
fn randomized_moments(
    f: &Integrand,
    spec: &QuadSpec,
    only: Option<SubsetMask>,
) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    let d = f.dim();
    if d > ANOVA_CAP && only.is_none() {
        return Err(Error::CapExceeded(format!(
            "enumerating 2^{d} closed moments exceeds the cap of {ANOVA_CAP}"
        )));
    }
    let (n, seed) = match spec.method {
        Method::MonteCarlo { n, seed } => (n, seed),
        Method::RandomizedHalton { n, replicates, seed } => (n * replicates, seed),
        _ => {
            return Err(Error::InvalidInput(
                "randomized moments need a randomized rule".into(),
            ))
        }
    };
    // positional indexing: in the full case `subsets[k] == k`, so the
    // returned vectors line up with subset bits; a single requested subset
    // lands in slot 0
    let subsets: Vec<u128> = match only {
        Some(v) => vec![v.bits()],
        None => (0..(1u128 << d)).collect(),
    };
    let parts = exec::run_chunked(n, 1 << 10, |range| {
        let mut sums = vec![0.0; subsets.len()];
        let mut sqsums = vec![0.0; subsets.len()];
        let mut mu_sum = 0.0;
        let mut mu_sq = 0.0;
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut p = vec![0.0; d];
        let mut q = vec![0.0; d];
        for i in range {
            let base = (i * d) as u64;
            for j in 0..d {
                x[j] = CounterRng::at(seed, 11, base + j as u64);
                y[j] = CounterRng::at(seed, 12, base + j as u64);
                z[j] = CounterRng::at(seed, 13, base + j as u64);
            }
            let fx = f.eval(&x);
            mu_sum += fx;
            mu_sq += fx * fx;
            for (k, &bits) in subsets.iter().enumerate() {
                for j in 0..d {
                    if bits >> j & 1 == 1 {
                        p[j] = x[j];
                        q[j] = x[j];
                    } else {
                        p[j] = y[j];
                        q[j] = z[j];
                    }
                }
                let t = f.eval(&p) * f.eval(&q);
                sums[k] += t;
                sqsums[k] += t * t;
            }
        }
        (sums, sqsums, mu_sum, mu_sq)
    });
    let mut sums = vec![0.0; subsets.len()];
    let mut sqsums = vec![0.0; subsets.len()];
    let mut mu_sum = 0.0;
    let mut mu_sq = 0.0;
    for (s, sq, m, msq) in parts {
        for k in 0..subsets.len() {
            sums[k] += s[k];
            sqsums[k] += sq[k];
        }
        mu_sum += m;
        mu_sq += msq;
    }
    let nf = n as f64;
    let mut moments = vec![0.0; subsets.len()];
    let mut ses = vec![0.0; subsets.len()];
    for k in 0..subsets.len() {
        let mean = sums[k] / nf;
        let var = (sqsums[k] - nf * mean * mean).max(0.0) / (nf - 1.0).max(1.0);
        moments[k] = mean;
        ses[k] = (var / nf).sqrt();
    }
    let mu = mu_sum / nf;
    let mu_var = (mu_sq - nf * mu * mu).max(0.0) / (nf - 1.0).max(1.0);
    Ok((moments, ses, mu, (mu_var / nf).sqrt()))
}

// --- ANOVA decomposition ----------------------------------------------------------------

/// The ANOVA variance ledger of one integrand.
#[derive(Debug, Clone)]
pub struct VarianceDecomposition {
    pub mu: f64,
    /// Total variance `int f^2 - mu^2`.
    pub sigma2: f64,
    /// `sigma2_u` for every subset; the empty set carries 0.
    pub components: BTreeMap<SubsetMask, f64>,
    pub method: String,
    /// Slightly negative estimates (inversion noise) clamped to zero.
    pub negatives_clamped: usize,
    /// Per-component standard errors for randomized rules.
    pub component_se: Option<BTreeMap<SubsetMask, f64>>,
}

impl VarianceDecomposition {
    /// Assemble directly from known components (useful as an oracle).
    pub fn from_components(mu: f64, components: BTreeMap<SubsetMask, f64>) -> Self {
        let sigma2 = components.values().sum();
        VarianceDecomposition {
            mu,
            sigma2,
            components,
            method: "analytic".into(),
            negatives_clamped: 0,
            component_se: None,
        }
    }

    pub fn component(&self, u: SubsetMask) -> f64 {
        self.components.get(&u).copied().unwrap_or(0.0)
    }

    pub fn component_sum(&self) -> f64 {
        self.components.values().sum()
    }
}

/// Mobius inversion in place: `a[v] <- sum_{w subset of v} (-1)^{|v\w|} a[w]`.
fn mobius_invert(a: &mut [f64], d: usize) {
    for bit in 0..d {
        let step = 1usize << bit;
        for mask in 0..a.len() {
            if mask & step != 0 {
                a[mask] -= a[mask ^ step];
            }
        }
    }
}

/// Full ANOVA decomposition by Mobius inversion of the closed moments.
pub fn anova_variances(f: &Integrand, spec: &QuadSpec) -> Result<VarianceDecomposition> {
    let d = f.dim();
    if d > ANOVA_CAP {
        return Err(Error::CapExceeded(format!(
            "2^{d} closed moments exceed the enumeration cap of {ANOVA_CAP}"
        )));
    }
    let size = 1usize << d;
    let mut moments = vec![f64::NAN; size];
    let mut ses: Option<Vec<f64>> = None;
    let mu;

    if let Some((i_marg, q_marg)) = separable_marginals(f, spec) {
        for (bits, m) in moments.iter_mut().enumerate() {
            let mut c = 1.0;
            for j in 0..d {
                c *= if bits >> j & 1 == 1 { q_marg[j] } else { i_marg[j] * i_marg[j] };
            }
            *m = c;
        }
        mu = i_marg.iter().product();
    } else if let Some((nodes, weights)) = tensor_axes(spec) {
        let eval = |x: &[f64]| f.eval(x);
        let mut mu_seen = 0.0;
        for pass in chain_passes(d) {
            let (m, acc) = prefix_moments(&eval, d, &nodes, &weights, &pass.perm)?;
            mu_seen = m;
            for (len, bits) in pass.levels {
                moments[bits as usize] = acc[len];
            }
        }
        mu = mu_seen;
    } else {
        let (m, se, mu_hat, _) = randomized_moments(f, spec, None)?;
        moments = m;
        ses = Some(se);
        mu = mu_hat;
    }

    debug_assert!(moments.iter().all(|m| m.is_finite()), "moment sweep left gaps");
    let sigma2 = (moments[size - 1] - moments[0]).max(0.0);

    let mut comps = moments.clone();
    mobius_invert(&mut comps, d);

    // component-level tolerance for negative inversion noise
    let se_comp: Option<Vec<f64>> = ses.as_ref().map(|se| {
        let mut out = vec![0.0; size];
        for (bits, o) in out.iter_mut().enumerate() {
            let mut var = 0.0;
            let mut sub = bits;
            loop {
                var += se[sub] * se[sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & bits;
            }
            *o = var.sqrt();
        }
        out
    });
    let deterministic_tol = match spec.method {
        Method::GaussTensor { .. } => 1e-8,
        // midpoint converges at n^-2; allow that much slack per component
        Method::Midpoint { n } => 1e-8f64.max(10.0 / (n as f64 * n as f64)),
        _ => 0.0,
    };

    let mut components = BTreeMap::new();
    let mut component_se = BTreeMap::new();
    let mut clamped = 0;
    for bits in 0..size {
        let u = SubsetMask::from_bits(d, bits as u128);
        let mut value = if bits == 0 { 0.0 } else { comps[bits] };
        let tol = match &se_comp {
            Some(se) => 3.0 * se[bits],
            None => deterministic_tol,
        };
        if value < 0.0 {
            if value < -tol {
                return Err(Error::NumericalInconsistency(format!(
                    "component {u} estimated at {value}, below -{tol}"
                )));
            }
            value = 0.0;
            clamped += 1;
        }
        components.insert(u, value);
        if let Some(se) = &se_comp {
            component_se.insert(u, se[bits]);
        }
    }

    Ok(VarianceDecomposition {
        mu,
        sigma2,
        components,
        method: spec.describe(),
        negatives_clamped: clamped,
        component_se: ses.map(|_| component_se),
    })
}

// --- per-function effective dimension ------------------------------------------------------

/// A nested family of subset sets described by a scale: level `s` contains
/// the subsets with `scale(u) <= s`.
#[derive(Clone)]
pub struct Filtration {
    pub scale: Arc<dyn Fn(SubsetMask) -> u64 + Send + Sync>,
    pub max_level: u64,
}

impl Filtration {
    pub fn truncation(d: usize) -> Self {
        Filtration { scale: Arc::new(|u| u.ceiling() as u64), max_level: d as u64 }
    }

    pub fn superposition(d: usize) -> Self {
        Filtration { scale: Arc::new(|u| u.cardinality() as u64), max_level: d as u64 }
    }

    /// The successive-dimensions scale `1 + max(u) - min(u)` (0 for the
    /// empty set).
    pub fn successive(d: usize) -> Self {
        Filtration {
            scale: Arc::new(|u| {
                if u.is_empty() {
                    0
                } else {
                    1 + u.ceiling() as u64 - u.min_index() as u64
                }
            }),
            max_level: d as u64,
        }
    }
}

#[derive(Clone)]
pub enum FunctionSense {
    Truncation,
    Superposition,
    Filtration(Filtration),
}

/// Effective dimension of a decomposed function. Truncation and
/// superposition return the smallest `s` whose components capture at least
/// `1 - epsilon` of the variance; a filtration returns the smallest level
/// whose excluded components fall below `epsilon` of the variance.
pub fn effective_dimension(
    vd: &VarianceDecomposition,
    epsilon: f64,
    sense: &FunctionSense,
) -> Result<u64> {
    if vd.sigma2 <= 0.0 {
        return Err(Error::ConstantFunction);
    }
    let d = vd.components.keys().next().map(|u| u.dim()).unwrap_or(1) as u64;
    match sense {
        FunctionSense::Truncation => cmo_dimension(vd, epsilon, d, |u| u.ceiling() as u64),
        FunctionSense::Superposition => cmo_dimension(vd, epsilon, d, |u| u.cardinality() as u64),
        FunctionSense::Filtration(filt) => {
            for s in 0..=filt.max_level {
                let outside: f64 = vd
                    .components
                    .iter()
                    .filter(|(u, _)| (filt.scale)(**u) > s)
                    .map(|(_, v)| v)
                    .sum();
                if outside < epsilon * vd.sigma2 {
                    return Ok(s);
                }
            }
            Ok(filt.max_level)
        }
    }
}

fn cmo_dimension(
    vd: &VarianceDecomposition,
    epsilon: f64,
    d: u64,
    scale: impl Fn(&SubsetMask) -> u64,
) -> Result<u64> {
    let target = (1.0 - epsilon) * vd.sigma2;
    for s in 1..=d {
        let captured: f64 = vd
            .components
            .iter()
            .filter(|(u, _)| scale(u) <= s)
            .map(|(_, v)| v)
            .sum();
        if captured >= target {
            return Ok(s);
        }
    }
    Ok(d)
}

/// Variance-weighted mean interaction order, `sum |u| sigma2_u / sigma2`,
/// taken against the component sum so purely additive functions give
/// exactly 1.
pub fn mean_dimension(vd: &VarianceDecomposition) -> Result<f64> {
    let total = vd.component_sum();
    if total <= 0.0 {
        return Err(Error::ConstantFunction);
    }
    let weighted: f64 = vd
        .components
        .iter()
        .map(|(u, v)| u.cardinality() as f64 * v)
        .sum();
    Ok(weighted / total)
}

// --- anchored decomposition -------------------------------------------------------------

/// The anchored term `f*_u(x)`: inclusion-exclusion over evaluations that
/// agree with the anchor off `v`, for `v` inside `u`. Costs `2^|u|`
/// evaluations; zero whenever some coordinate in `u` sits at the anchor.
pub fn anchored_component(
    f: &Integrand,
    anchor: &[f64],
    u: SubsetMask,
    x: &[f64],
) -> Result<f64> {
    let d = f.dim();
    assert_eq!(anchor.len(), d);
    assert_eq!(x.len(), d);
    if u.cardinality() > ANCHOR_CAP {
        return Err(Error::CapExceeded(format!(
            "anchored component of order {} exceeds the cap of {ANCHOR_CAP}",
            u.cardinality()
        )));
    }
    let mut point = anchor.to_vec();
    let mut acc = 0.0;
    let order = u.cardinality();
    for v in u.subsets() {
        for j in 1..=d {
            point[j - 1] = if v.contains(j) { x[j - 1] } else { anchor[j - 1] };
        }
        let sign = if (order - v.cardinality()).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * f.eval(&point);
    }
    Ok(acc)
}

// --- truncation dimension via mean agreement ----------------------------------------------

/// The smallest `k` such that integrating only over the first `k` inputs,
/// with the rest pinned at `fill`, reproduces the mean to relative `epsilon`.
pub fn paskov_dimension(f: &Integrand, epsilon: f64, fill: f64, spec: &QuadSpec) -> Result<u64> {
    let d = f.dim();
    let mu = integrate(f, spec)?.value;
    if mu.abs() < 1e-12 {
        return Err(Error::ZeroMeanUndefined);
    }
    for k in 1..=d {
        let inner = f.clone();
        let head = Integrand::new("head", k, move |x: &[f64]| {
            let mut full = vec![fill; inner.dim()];
            full[..k].copy_from_slice(x);
            inner.eval(&full)
        });
        let val = integrate(&head, spec)?.value;
        if (val - mu).abs() <= epsilon * mu.abs() {
            return Ok(k as u64);
        }
    }
    Ok(d as u64)
}

// --- weighted norm --------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Exact,
    /// Nested central differences (one-sided at the boundary); `None` picks
    /// the step `eps^(1/(2+|u|))` per order. Only trustworthy for orders
    /// up to about 3.
    FiniteDifference { h: Option<f64> },
}

/// The scheme-independent part of the weighted norm: one derivative moment
/// `int ( int d^u f dx_{-u} )^2 dx_u` per subset, plus the mean.
#[derive(Debug, Clone)]
pub struct NormData {
    pub d: usize,
    pub mu: f64,
    /// Indexed by subset bits; the empty slot holds `mu^2`.
    pub moments: Vec<f64>,
}

pub fn derivative_moments(
    f: &Integrand,
    spec: &QuadSpec,
    mode: DerivativeMode,
) -> Result<NormData> {
    let d = f.dim();
    if d > ANOVA_CAP {
        return Err(Error::CapExceeded(format!(
            "2^{d} derivative moments exceed the enumeration cap of {ANOVA_CAP}"
        )));
    }
    if matches!(mode, DerivativeMode::Exact) && !f.has_exact_partials() {
        return Err(Error::MissingDerivatives);
    }
    let (nodes, weights) = tensor_axes(spec).ok_or_else(|| {
        Error::InvalidInput("weighted norms need a deterministic tensor rule".into())
    })?;

    // product-form shortcut when every factor carries its derivative
    if matches!(mode, DerivativeMode::Exact) {
        if let Some(factors) = f.factors() {
            if factors.iter().all(|fac| fac.df.is_some()) {
                let mut i_marg = vec![0.0; d];
                let mut dq_marg = vec![0.0; d];
                for (j, fac) in factors.iter().enumerate() {
                    let df = fac.df.as_ref().unwrap();
                    for (t, w) in nodes.iter().zip(&weights) {
                        let v = (fac.f)(*t);
                        let dv = df(*t);
                        i_marg[j] += w * v;
                        dq_marg[j] += w * dv * dv;
                    }
                }
                let size = 1usize << d;
                let mut moments = vec![0.0; size];
                for (bits, m) in moments.iter_mut().enumerate() {
                    let mut acc = 1.0;
                    for j in 0..d {
                        acc *= if bits >> j & 1 == 1 {
                            dq_marg[j]
                        } else {
                            i_marg[j] * i_marg[j]
                        };
                    }
                    *m = acc;
                }
                let mu = i_marg.iter().product();
                return Ok(NormData { d, mu, moments });
            }
        }
    }

    let size = 1usize << d;
    let mut moments = Vec::with_capacity(size);
    let mut mu = 0.0;
    for bits in 0..size {
        let u = SubsetMask::from_bits(d, bits as u128);
        let deriv: DerivEval = match mode {
            DerivativeMode::Exact => {
                let g = f.clone();
                Box::new(move |x: &[f64]| g.partial(u, x).expect("exact partials checked"))
            }
            DerivativeMode::FiniteDifference { h } => {
                let g = f.clone();
                Box::new(move |x: &[f64]| fd_partial(&g, u, x, h))
            }
        };
        let mut perm: Vec<usize> = u.indices().iter().map(|j| j - 1).collect();
        perm.extend(u.complement().indices().iter().map(|j| j - 1));
        let (m, acc) = prefix_moments(deriv.as_ref(), d, &nodes, &weights, &perm)?;
        moments.push(acc[u.cardinality() as usize]);
        if bits == 0 {
            mu = m;
        }
    }
    Ok(NormData { d, mu, moments })
}

type DerivEval = Box<dyn Fn(&[f64]) -> f64 + Sync>;

/// Nested central differences for `d^u f`, second-order one-sided at the
/// boundary.
fn fd_partial(f: &Integrand, u: SubsetMask, x: &[f64], h_override: Option<f64>) -> f64 {
    let axes: Vec<usize> = u.indices();
    let h = h_override.unwrap_or_else(|| f64::EPSILON.powf(1.0 / (2.0 + axes.len() as f64)));
    let mut point = x.to_vec();
    fd_rec(f, &axes, 0, &mut point, h)
}

fn fd_rec(f: &Integrand, axes: &[usize], k: usize, x: &mut [f64], h: f64) -> f64 {
    if k == axes.len() {
        return f.eval(x);
    }
    let j = axes[k] - 1;
    let xj = x[j];
    let val = if xj - h >= 0.0 && xj + h <= 1.0 {
        x[j] = xj + h;
        let a = fd_rec(f, axes, k + 1, x, h);
        x[j] = xj - h;
        let b = fd_rec(f, axes, k + 1, x, h);
        (a - b) / (2.0 * h)
    } else {
        // second-order one-sided stencil pointing into the domain
        let dir = if xj + 2.0 * h <= 1.0 { h } else { -h };
        x[j] = xj;
        let f0 = fd_rec(f, axes, k + 1, x, h);
        x[j] = xj + dir;
        let f1 = fd_rec(f, axes, k + 1, x, h);
        x[j] = xj + 2.0 * dir;
        let f2 = fd_rec(f, axes, k + 1, x, h);
        (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * dir)
    };
    x[j] = xj;
    val
}

/// `|| f ||_gamma` from cached derivative moments.
pub fn weighted_norm_with(data: &NormData, scheme: &WeightScheme) -> Result<f64> {
    let mut acc = scheme.empty_weight().reciprocal() * data.mu * data.mu;
    for bits in 1..data.moments.len() {
        let u = SubsetMask::from_bits(data.d, bits as u128);
        let log_gamma = scheme.log_weight_of(u)?;
        acc += (-log_gamma).exp() * data.moments[bits];
    }
    Ok(acc.max(0.0).sqrt())
}

/// `|| f ||_gamma`: each subset contributes its derivative moment divided by
/// `gamma_u`, the empty set contributing `mu^2 / gamma_empty` (zero for the
/// semi-norm convention).
pub fn weighted_norm(
    f: &Integrand,
    scheme: &WeightScheme,
    spec: &QuadSpec,
    mode: DerivativeMode,
) -> Result<f64> {
    weighted_norm_with(&derivative_moments(f, spec, mode)?, scheme)
}

// --- derivative-to-variance ratio on an interval ----------------------------------------------

/// `int g'^2 / int g^2` over `(a, b)` for a zero-mean `g`; always at least
/// `(pi/(b-a))^2`, with equality for the half-period sine.
pub fn poincare_ratio(g: &OneDim, interval: (f64, f64), spec: &QuadSpec) -> Result<f64> {
    let (a, b) = interval;
    if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidInput(format!("empty interval ({a}, {b})")));
    }
    let len = b - a;
    let gf = g.f.clone();
    let mapped = Integrand::new("mapped", 1, move |t: &[f64]| gf(a + len * t[0]));
    let mean = integrate(&mapped, spec)?.value * len;
    if mean.abs() > 1e-8 {
        return Err(Error::MeanNotZero(mean, 1e-8));
    }

    let gf = g.f.clone();
    let sq = Integrand::new("sq", 1, move |t: &[f64]| {
        let v = gf(a + len * t[0]);
        v * v
    });
    let den = integrate(&sq, spec)?.value * len;
    if den <= 1e-14 {
        return Err(Error::ZeroFunction);
    }

    let num = match &g.df {
        Some(dg) => {
            let dg = dg.clone();
            let dsq = Integrand::new("dsq", 1, move |t: &[f64]| {
                let v = dg(a + len * t[0]);
                v * v
            });
            integrate(&dsq, spec)?.value * len
        }
        None => {
            let gf = g.f.clone();
            let h = f64::EPSILON.powf(1.0 / 3.0) * len;
            let dsq = Integrand::new("dsq_fd", 1, move |t: &[f64]| {
                let x = a + len * t[0];
                let lo = (x - h).max(a);
                let hi = (x + h).min(b);
                let v = (gf(hi) - gf(lo)) / (hi - lo);
                v * v
            });
            integrate(&dsq, spec)?.value * len
        }
    };
    Ok(num / den)
}

// --- norm vs ANOVA comparison -------------------------------------------------------------------

/// `||f||^2 - ( mu^2/gamma_empty + sum gamma_u^-1 pi^(2|u|) sigma2_u )`.
/// The derivative inequality guarantees this is nonnegative.
pub fn norm_anova_gap_with(
    data: &NormData,
    vd: &VarianceDecomposition,
    scheme: &WeightScheme,
) -> Result<f64> {
    let norm = weighted_norm_with(data, scheme)?;
    let ln_pi = std::f64::consts::PI.ln();
    let mut bound = scheme.empty_weight().reciprocal() * vd.mu * vd.mu;
    for (u, sigma2_u) in &vd.components {
        if u.is_empty() || *sigma2_u == 0.0 {
            continue;
        }
        let log_term = -scheme.log_weight_of(*u)? + 2.0 * u.cardinality() as f64 * ln_pi;
        bound += log_term.exp() * sigma2_u;
    }
    Ok(norm * norm - bound)
}

pub fn norm_anova_gap(
    f: &Integrand,
    scheme: &WeightScheme,
    spec: &QuadSpec,
    mode: DerivativeMode,
) -> Result<f64> {
    let data = derivative_moments(f, spec, mode)?;
    let vd = anova_variances(f, spec)?;
    norm_anova_gap_with(&data, &vd, scheme)
}

// --- ball-normalized tails --------------------------------------------------------------------

#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum TailSense {
    Truncation,
    Superposition,
}

/// Scale `f` onto the boundary of the critical ball (`c = rho*/||f||`) and
/// return the variance the scaled function puts beyond level `s`.
pub fn ball_tail_variance(
    f: &Integrand,
    scheme: &WeightScheme,
    s: u64,
    sense: TailSense,
    spec: &QuadSpec,
) -> Result<f64> {
    let data = derivative_moments(f, spec, DerivativeMode::Exact)?;
    let vd = anova_variances(f, spec)?;
    ball_tail_variance_with(&data, &vd, scheme, s, sense)
}

pub fn ball_tail_variance_with(
    data: &NormData,
    vd: &VarianceDecomposition,
    scheme: &WeightScheme,
    s: u64,
    sense: TailSense,
) -> Result<f64> {
    let norm = weighted_norm_with(data, scheme)?;
    if norm <= 0.0 {
        return Err(Error::ZeroFunction);
    }
    let rho = crate::bounds::critical_radius(scheme, data.d)?;
    let c_sq = (rho.rho / norm).powi(2);
    let tail: f64 = vd
        .components
        .iter()
        .filter(|(u, _)| match sense {
            TailSense::Truncation => u.ceiling() as u64 > s,
            TailSense::Superposition => u.cardinality() as u64 > s,
        })
        .map(|(_, v)| v)
        .sum();
    Ok(c_sq * tail)
}
