//! Integration primitives: tensor Gauss-Legendre and midpoint grids, plain
//! Monte Carlo, and randomized Halton points.
//!
//! Everything here is deterministic given its inputs. Randomized methods use
//! a counter-based generator with split streams, and all reductions run over
//! fixed-size chunks combined in index order, so results do not depend on the
//! thread count.

use crate::error::{Error, Result};
use crate::exec;
use crate::integrand::Integrand;

/// Materialized tensor rules are capped at this many nodes.
pub const TENSOR_CAP: usize = 10_000_000;

/// Streaming tensor evaluation tolerates larger grids than materialization.
pub const STREAM_CAP: u128 = 4_000_000_000;

// --- counter-based RNG ---------------------------------------------------------

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless counter generator: output `i` of stream `s` is a pure function
/// of `(seed, s, i)`, so parallel consumers can index into the stream.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
    ctr: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = splitmix64(splitmix64(seed) ^ stream.wrapping_mul(0xA24B_AED4_963E_E407));
        CounterRng { key, ctr: 0 }
    }

    pub fn at(seed: u64, stream: u64, index: u64) -> f64 {
        let mut rng = CounterRng::new(seed, stream);
        rng.ctr = index;
        rng.next_f64()
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = splitmix64(self.key.wrapping_add(self.ctr.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        self.ctr += 1;
        out
    }

    /// Uniform in [0,1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn fill_point(&mut self, x: &mut [f64]) {
        for t in x {
            *t = self.next_f64();
        }
    }
}

// --- Gauss-Legendre and midpoint rules ------------------------------------------

/// Legendre `P_n` and its derivative at `t` by the three-term recurrence.
fn legendre_and_deriv(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights mapped to the unit interval; weights sum
/// to 1. Nodes are found by Newton iteration to 1e-15 and mirrored about 1/2
/// so the rule is exactly symmetric.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the k-th root (descending in t).
        let mut t = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, t);
            let step = p / dp;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, t);
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        // t is the (k+1)-th largest root; map to [0,1] ascending.
        nodes[n - 1 - k] = 0.5 * (1.0 + t);
        nodes[k] = 0.5 * (1.0 - t);
        weights[k] = 0.5 * w;
        weights[n - 1 - k] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

/// Midpoint nodes `(i + 1/2)/n` with equal weights.
pub fn midpoint_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let nodes = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let weights = vec![1.0 / n as f64; n];
    (nodes, weights)
}

/// The full tensor product rule on `[0,1]^d` as explicit (node, weight) pairs.
pub fn tensor_rule(d: usize, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > TENSOR_CAP as u128 {
        return Err(Error::CapExceeded(format!(
            "tensor rule with {n}^{d} nodes exceeds the cap of {TENSOR_CAP}"
        )));
    }
    let (nodes, weights) = gauss_legendre_01(n);
    let total = total as usize;
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut point = vec![0.0; d];
        let mut w = 1.0;
        for axis in (0..d).rev() {
            let i = idx % n;
            idx /= n;
            point[axis] = nodes[i];
            w *= weights[i];
        }
        out.push((point, w));
    }
    Ok(out)
}

// --- quadrature specifications ---------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    GaussTensor { n: usize },
    Midpoint { n: usize },
    MonteCarlo { n: usize, seed: u64 },
    RandomizedHalton { n: usize, replicates: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpec {
    pub method: Method,
    pub error_report: bool,
}

impl QuadSpec {
    pub fn gauss(n: usize) -> Self {
        QuadSpec { method: Method::GaussTensor { n }, error_report: false }
    }

    pub fn midpoint(n: usize) -> Self {
        QuadSpec { method: Method::Midpoint { n }, error_report: false }
    }

    pub fn monte_carlo(n: usize, seed: u64) -> Self {
        QuadSpec { method: Method::MonteCarlo { n, seed }, error_report: true }
    }

    pub fn randomized_halton(n: usize, replicates: usize, seed: u64) -> Self {
        QuadSpec {
            method: Method::RandomizedHalton { n, replicates, seed },
            error_report: true,
        }
    }

    /// Gauss 16 per axis while the grid stays tractable, randomized Halton
    /// beyond that.
    pub fn default_for(d: usize) -> Self {
        if d <= 6 {
            QuadSpec::gauss(16)
        } else {
            QuadSpec::randomized_halton(1 << 14, 16, 0)
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(
            self.method,
            Method::MonteCarlo { .. } | Method::RandomizedHalton { .. }
        )
    }

    pub fn describe(&self) -> String {
        match &self.method {
            Method::GaussTensor { n } => format!("gauss n={n}"),
            Method::Midpoint { n } => format!("midpoint n={n}"),
            Method::MonteCarlo { n, seed } => format!("mc n={n} seed={seed}"),
            Method::RandomizedHalton { n, replicates, seed } => {
                format!("rhalton n={n} r={replicates} seed={seed}")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let n = match self.method {
            Method::GaussTensor { n } | Method::Midpoint { n } => n,
            Method::MonteCarlo { n, .. } => n,
            Method::RandomizedHalton { n, replicates, .. } => {
                if self.error_report && replicates < 2 {
                    return Err(Error::InvalidInput(
                        "standard errors need at least 2 replicates".into(),
                    ));
                }
                n
            }
        };
        if n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub n_evals: u64,
}

// --- integration -----------------------------------------------------------------

/// Deterministic or randomized estimate of the integral of `f` over the cube.
pub fn integrate(f: &Integrand, spec: &QuadSpec) -> Result<Estimate> {
    spec.validate()?;
    let d = f.dim();
    match &spec.method {
        Method::GaussTensor { n } => {
            let (nodes, weights) = gauss_legendre_01(*n);
            tensor_integrate(f, d, &nodes, &weights)
        }
        Method::Midpoint { n } => {
            let (nodes, weights) = midpoint_01(*n);
            tensor_integrate(f, d, &nodes, &weights)
        }
        Method::MonteCarlo { n, seed } => {
            let values = sample_means(f, d, *n, *seed, 0, None)?;
            let mean = values.0;
            let se = if spec.error_report {
                Some((values.1 / *n as f64).sqrt())
            } else {
                None
            };
            Ok(Estimate { value: mean, std_error: se, n_evals: *n as u64 })
        }
        Method::RandomizedHalton { n, replicates, seed } => {
            let mut reps = Vec::with_capacity(*replicates);
            for r in 0..*replicates {
                let shift = random_shift(d, *seed, r as u64);
                let (mean, _) = halton_mean(f, d, *n, Some(&shift))?;
                reps.push(mean);
            }
            let value = reps.iter().sum::<f64>() / reps.len() as f64;
            let se = if spec.error_report && reps.len() >= 2 {
                let var = reps.iter().map(|v| (v - value) * (v - value)).sum::<f64>()
                    / (reps.len() - 1) as f64;
                Some((var / reps.len() as f64).sqrt())
            } else {
                None
            };
            Ok(Estimate {
                value,
                std_error: se,
                n_evals: (*n * *replicates) as u64,
            })
        }
    }
}

/// Stream the tensor grid, chunked for deterministic parallelism.
fn tensor_integrate(f: &Integrand, d: usize, nodes: &[f64], weights: &[f64]) -> Result<Estimate> {
    let n = nodes.len();
    let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > STREAM_CAP {
        return Err(Error::CapExceeded(format!(
            "streaming {n}^{d} tensor nodes exceeds the cap of {STREAM_CAP}"
        )));
    }
    let total = total as usize;
    let parts = exec::run_chunked(total, 1 << 16, |range| {
        let mut acc = 0.0;
        let mut point = vec![0.0; d];
        let mut bad: Option<Vec<f64>> = None;
        for lin in range {
            let mut idx = lin;
            let mut w = 1.0;
            for axis in (0..d).rev() {
                let i = idx % n;
                idx /= n;
                point[axis] = nodes[i];
                w *= weights[i];
            }
            let v = f.eval(&point);
            if !v.is_finite() && bad.is_none() {
                bad = Some(point.clone());
            }
            acc += w * v;
        }
        (acc, bad)
    });
    let mut acc = 0.0;
    for (s, bad) in parts {
        if let Some(point) = bad {
            return Err(Error::EvaluationError { point });
        }
        acc += s;
    }
    Ok(Estimate { value: acc, std_error: None, n_evals: total as u64 })
}

/// Mean and sum of squared deviations over `n` Monte Carlo points from the
/// given stream, with an optional shift (unused for plain MC).
fn sample_means(
    f: &Integrand,
    d: usize,
    n: usize,
    seed: u64,
    stream: u64,
    shift: Option<&[f64]>,
) -> Result<(f64, f64)> {
    let parts = exec::run_chunked(n, 1 << 12, |range| {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut point = vec![0.0; d];
        let mut bad: Option<Vec<f64>> = None;
        for i in range {
            let mut rng = CounterRng::new(seed, stream);
            rng.ctr = (i * d) as u64;
            rng.fill_point(&mut point);
            if let Some(s) = shift {
                for (p, q) in point.iter_mut().zip(s) {
                    *p = (*p + q).fract();
                }
            }
            let v = f.eval(&point);
            if !v.is_finite() && bad.is_none() {
                bad = Some(point.clone());
            }
            sum += v;
            sumsq += v * v;
        }
        (sum, sumsq, bad)
    });
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (s, sq, bad) in parts {
        if let Some(point) = bad {
            return Err(Error::EvaluationError { point });
        }
        sum += s;
        sumsq += sq;
    }
    let mean = sum / n as f64;
    let var = (sumsq - n as f64 * mean * mean).max(0.0) / (n as f64 - 1.0).max(1.0);
    Ok((mean, var))
}

// --- low-discrepancy points --------------------------------------------------------

/// The first 64 primes, one Halton base per dimension.
const PRIMES: [u32; 64] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293,
    307, 311,
];

/// Radical inverse of `i` in the given base.
pub fn radical_inverse(base: u32, mut i: u64) -> f64 {
    let b = base as u64;
    let inv_b = 1.0 / base as f64;
    let mut f = inv_b;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv_b;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointKind {
    Halton,
    RandomShiftedHalton { seed: u64 },
}

/// The first `n` Halton points (index starting at 1) in the first `d` prime
/// bases, optionally shifted modulo 1.
pub fn low_discrepancy_points(d: usize, n: usize, kind: PointKind) -> Vec<Vec<f64>> {
    assert!(d <= 64, "Halton bases available up to d = 64");
    let shift = match kind {
        PointKind::Halton => None,
        PointKind::RandomShiftedHalton { seed } => Some(random_shift(d, seed, 0)),
    };
    (1..=n as u64)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut x = radical_inverse(PRIMES[j], i);
                    if let Some(s) = &shift {
                        x = (x + s[j]).fract();
                    }
                    x
                })
                .collect()
        })
        .collect()
}

fn random_shift(d: usize, seed: u64, replicate: u64) -> Vec<f64> {
    let mut rng = CounterRng::new(seed, 0x5A1F_0000 ^ replicate);
    (0..d).map(|_| rng.next_f64()).collect()
}

/// Mean of `f` over the first `n` (optionally shifted) Halton points.
fn halton_mean(f: &Integrand, d: usize, n: usize, shift: Option<&[f64]>) -> Result<(f64, f64)> {
    let parts = exec::run_chunked(n, 1 << 12, |range| {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut point = vec![0.0; d];
        let mut bad: Option<Vec<f64>> = None;
        for i in range {
            for (j, p) in point.iter_mut().enumerate() {
                *p = radical_inverse(PRIMES[j], i as u64 + 1);
                if let Some(s) = shift {
                    *p = (*p + s[j]).fract();
                }
            }
            let v = f.eval(&point);
            if !v.is_finite() && bad.is_none() {
                bad = Some(point.clone());
            }
            sum += v;
            sumsq += v * v;
        }
        (sum, sumsq, bad)
    });
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (s, sq, bad) in parts {
        if let Some(point) = bad {
            return Err(Error::EvaluationError { point });
        }
        sum += s;
        sumsq += sq;
    }
    Ok((sum / n as f64, sumsq))
}

// --- MC vs QMC comparison -------------------------------------------------------------

/// Root-mean-square integration errors of plain MC and randomly shifted
/// Halton at the same budget `n`, across the given replicates. The true mean
/// comes from the registry when known, otherwise from a 100x larger
/// reference run.
pub fn mc_qmc_rmse(
    f: &Integrand,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let d = f.dim();
    let truth = match f.known.mean {
        Some(m) => m,
        None => sample_means(f, d, n * 100, seed, 0xFEED_5EED, None)?.0,
    };
    let mut mc_sq = 0.0;
    let mut qmc_sq = 0.0;
    for r in 0..replicates {
        let (mc_mean, _) = sample_means(f, d, n, seed, 1 + r as u64, None)?;
        let shift = random_shift(d, seed, r as u64);
        let (qmc_mean, _) = halton_mean(f, d, n, Some(&shift))?;
        mc_sq += (mc_mean - truth) * (mc_mean - truth);
        qmc_sq += (qmc_mean - truth) * (qmc_mean - truth);
    }
    let m = replicates as f64;
    Ok(((mc_sq / m).sqrt(), (qmc_sq / m).sqrt()))
}
