//! Pick-freeze Monte Carlo estimators for black-box integrands at dimensions
//! where the `2^d` ANOVA enumeration is out of reach.
//!
//! Total Sobol' indices use the Jansen form
//! `tau2_j = E[ (f(x) - f(x with x_j resampled))^2 ] / 2`, which is a mean of
//! squares (so nonnegative by construction) and has lower variance than the
//! correlation forms. The mean dimension is their sum over the variance.

use crate::error::{Error, Result};
use crate::exec;
use crate::integrand::Integrand;
use crate::quadrature::CounterRng;

const STREAM_BASE: u64 = 21;
const STREAM_RESAMPLE: u64 = 22;
const STREAM_PF_BASE: u64 = 31;
const STREAM_PF_FROZEN: u64 = 32;

/// Jansen pick-freeze summary for one integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolEstimate {
    /// Unnormalized total indices `tau2_j = sum_{u containing j} sigma2_u`.
    pub tau2: Vec<f64>,
    pub tau2_se: Vec<f64>,
    /// Sample variance of `f`.
    pub sigma2: f64,
    pub sigma2_se: f64,
    /// `sum_j tau2_j / sigma2`, absent when the variance is indistinguishable
    /// from zero.
    pub mean_dimension: Option<f64>,
    /// Delete-one jackknife standard error of the mean dimension.
    pub mean_dimension_se: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

/// Unbiased pick-freeze estimates of all `d` total indices plus the mean
/// dimension, with jackknife standard errors. `n(d+1)` evaluations;
/// deterministic given the seed.
pub fn total_index_estimates(f: &Integrand, n: usize, seed: u64) -> Result<SobolEstimate> {
    if n < 64 {
        return Err(Error::InvalidInput(format!("n = {n} is below the minimum of 64")));
    }
    let d = f.dim();

    // per-chunk: per-index sums of d^2/2 and (d^2/2)^2, per-sample row sums
    // and f values (kept for the jackknife), moment sums of f
    struct Part {
        tau_sum: Vec<f64>,
        tau_sq: Vec<f64>,
        rows: Vec<f64>,
        fx: Vec<f64>,
        bad: Option<Vec<f64>>,
    }
    let parts = exec::run_chunked(n, 1 << 10, |range| {
        let mut p = Part {
            tau_sum: vec![0.0; d],
            tau_sq: vec![0.0; d],
            rows: Vec::with_capacity(range.len()),
            fx: Vec::with_capacity(range.len()),
            bad: None,
        };
        let mut x = vec![0.0; d];
        let mut z = vec![0.0; d];
        for i in range {
            let base = (i * d) as u64;
            for j in 0..d {
                x[j] = CounterRng::at(seed, STREAM_BASE, base + j as u64);
                z[j] = CounterRng::at(seed, STREAM_RESAMPLE, base + j as u64);
            }
            let fx = f.eval(&x);
            if !fx.is_finite() && p.bad.is_none() {
                p.bad = Some(x.clone());
            }
            let mut row = 0.0;
            for j in 0..d {
                let keep = x[j];
                x[j] = z[j];
                let fy = f.eval(&x);
                x[j] = keep;
                if !fy.is_finite() && p.bad.is_none() {
                    p.bad = Some(x.clone());
                }
                let t = 0.5 * (fx - fy) * (fx - fy);
                p.tau_sum[j] += t;
                p.tau_sq[j] += t * t;
                row += t;
            }
            p.rows.push(row);
            p.fx.push(fx);
        }
        p
    });

    let mut tau_sum = vec![0.0; d];
    let mut tau_sq = vec![0.0; d];
    let mut rows = Vec::with_capacity(n);
    let mut fx = Vec::with_capacity(n);
    for p in parts {
        if let Some(point) = p.bad {
            return Err(Error::EvaluationError { point });
        }
        for j in 0..d {
            tau_sum[j] += p.tau_sum[j];
            tau_sq[j] += p.tau_sq[j];
        }
        rows.extend(p.rows);
        fx.extend(p.fx);
    }

    let nf = n as f64;
    let tau2: Vec<f64> = tau_sum.iter().map(|s| s / nf).collect();
    let tau2_se: Vec<f64> = (0..d)
        .map(|j| {
            let m = tau2[j];
            let var = (tau_sq[j] - nf * m * m).max(0.0) / (nf - 1.0);
            (var / nf).sqrt()
        })
        .collect();

    let f_sum: f64 = fx.iter().sum();
    let f_mean = f_sum / nf;
    let f_sq: f64 = fx.iter().map(|v| v * v).sum();
    let sigma2 = ((f_sq - nf * f_mean * f_mean) / (nf - 1.0)).max(0.0);
    let m4: f64 = fx.iter().map(|v| (v - f_mean).powi(4)).sum::<f64>() / nf;
    let sigma2_se = ((m4 - sigma2 * sigma2).max(0.0) / nf).sqrt();

    // delete-one jackknife of the ratio sum_j tau2_j / sigma2, using totals
    let (mean_dimension, mean_dimension_se) = if sigma2 > 0.0 {
        let row_total: f64 = rows.iter().sum();
        let mut jack = Vec::with_capacity(n);
        let nm1 = nf - 1.0;
        for i in 0..n {
            let num = (row_total - rows[i]) / nm1;
            let mean_i = (f_sum - fx[i]) / nm1;
            let var_i = ((f_sq - fx[i] * fx[i] - nm1 * mean_i * mean_i) / (nm1 - 1.0)).max(0.0);
            if var_i > 0.0 {
                jack.push(num / var_i);
            }
        }
        if jack.len() < 2 {
            (Some(row_total / nf / sigma2), None)
        } else {
            let jn = jack.len() as f64;
            let jmean = jack.iter().sum::<f64>() / jn;
            let jvar = jack.iter().map(|t| (t - jmean) * (t - jmean)).sum::<f64>();
            let se = ((jn - 1.0) / jn * jvar).sqrt();
            (Some(row_total / nf / sigma2), Some(se))
        }
    } else {
        (None, None)
    };

    Ok(SobolEstimate {
        tau2,
        tau2_se,
        sigma2,
        sigma2_se,
        mean_dimension,
        mean_dimension_se,
        n,
        seed,
    })
}

/// Monte Carlo mean dimension with its standard error. Errors with
/// `ConstantFunction` when the variance estimate is within three standard
/// errors of zero.
pub fn mean_dimension_mc(f: &Integrand, n: usize, seed: u64) -> Result<(f64, f64)> {
    let est = total_index_estimates(f, n, seed)?;
    if est.sigma2 <= 3.0 * est.sigma2_se {
        return Err(Error::ConstantFunction);
    }
    let md = est.mean_dimension.ok_or(Error::ConstantFunction)?;
    Ok((md, est.mean_dimension_se.unwrap_or(0.0)))
}

/// Pick-freeze estimate of the closed variance of `u`
/// (`sum_{v inside u} sigma2_v`), via `E[f(x) f(x_u : z_{-u})] - mu^2`.
/// Negative estimates are reported as-is so differences stay unbiased.
pub fn closed_variance_pickfreeze(
    f: &Integrand,
    u: crate::subset::SubsetMask,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n < 64 {
        return Err(Error::InvalidInput(format!("n = {n} is below the minimum of 64")));
    }
    let d = f.dim();
    assert_eq!(u.dim(), d, "subset dimension mismatch");

    let parts = exec::run_chunked(n, 1 << 10, |range| {
        let mut fx = Vec::with_capacity(range.len());
        let mut fm = Vec::with_capacity(range.len());
        let mut prod = Vec::with_capacity(range.len());
        let mut bad: Option<Vec<f64>> = None;
        let mut x = vec![0.0; d];
        let mut mix = vec![0.0; d];
        for i in range {
            let base = (i * d) as u64;
            for j in 0..d {
                x[j] = CounterRng::at(seed, STREAM_PF_BASE, base + j as u64);
                let zj = CounterRng::at(seed, STREAM_PF_FROZEN, base + j as u64);
                mix[j] = if u.contains(j + 1) { x[j] } else { zj };
            }
            let a = f.eval(&x);
            let b = f.eval(&mix);
            if (!a.is_finite() || !b.is_finite()) && bad.is_none() {
                bad = Some(x.clone());
            }
            fx.push(a);
            fm.push(b);
            prod.push(a * b);
        }
        (fx, fm, prod, bad)
    });

    let mut fx = Vec::with_capacity(n);
    let mut fm = Vec::with_capacity(n);
    let mut prod = Vec::with_capacity(n);
    for (a, b, p, bad) in parts {
        if let Some(point) = bad {
            return Err(Error::EvaluationError { point });
        }
        fx.extend(a);
        fm.extend(b);
        prod.extend(p);
    }

    let nf = n as f64;
    let sx: f64 = fx.iter().sum();
    let sm: f64 = fm.iter().sum();
    let sp: f64 = prod.iter().sum();
    let estimate = sp / nf - (sx / nf) * (sm / nf);

    // delete-one jackknife of the composite statistic
    let nm1 = nf - 1.0;
    let mut jack_mean = 0.0;
    let mut jack: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let t = (sp - prod[i]) / nm1 - ((sx - fx[i]) / nm1) * ((sm - fm[i]) / nm1);
        jack.push(t);
        jack_mean += t;
    }
    jack_mean /= nf;
    let jvar: f64 = jack.iter().map(|t| (t - jack_mean) * (t - jack_mean)).sum();
    let se = (nm1 / nf * jvar).sqrt();
    Ok((estimate, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::anova_variances;
    use crate::integrand::registry;
    use crate::quadrature::QuadSpec;
    use crate::subset::SubsetMask;

    #[test]
    fn total_indices_of_weighted_additive_function() {
        let f = Integrand::new("x+2y", 2, |x| x[0] + 2.0 * x[1]);
        let est = total_index_estimates(&f, 1 << 14, 0).unwrap();
        assert!(
            (est.tau2[0] - 1.0 / 12.0).abs() <= 3.0 * est.tau2_se[0],
            "tau2_1 = {} (se {})",
            est.tau2[0],
            est.tau2_se[0]
        );
        assert!(
            (est.tau2[1] - 4.0 / 12.0).abs() <= 3.0 * est.tau2_se[1],
            "tau2_2 = {} (se {})",
            est.tau2[1],
            est.tau2_se[1]
        );
        assert!(est.tau2.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn constant_function_gives_zero_indices() {
        let f = Integrand::new("const", 3, |_| 4.2);
        let est = total_index_estimates(&f, 256, 1).unwrap();
        assert!(est.tau2.iter().all(|&t| t == 0.0));
        assert_eq!(est.sigma2, 0.0);
        assert!(matches!(
            mean_dimension_mc(&f, 256, 1),
            Err(Error::ConstantFunction)
        ));
    }

    #[test]
    fn total_indices_of_full_interaction_match_anova_oracle() {
        // every tau2_j of the order-3 product equals its single component
        let f = registry::prod_centered(3);
        let vd = anova_variances(&f, &QuadSpec::gauss(8)).unwrap();
        let expect: f64 = vd
            .components
            .iter()
            .filter(|(u, _)| u.contains(1))
            .map(|(_, v)| v)
            .sum();
        assert!((expect - 1.0 / 1728.0).abs() < 1e-12);
        let est = total_index_estimates(&f, 1 << 15, 7).unwrap();
        for j in 0..3 {
            assert!(
                (est.tau2[j] - expect).abs() <= 3.0 * est.tau2_se[j],
                "tau2_{j} = {} vs {expect} (se {})",
                est.tau2[j],
                est.tau2_se[j]
            );
        }
    }

    #[test]
    fn mean_dimension_additive_and_interactive() {
        let f = registry::linear_sum(16);
        let (md, se) = mean_dimension_mc(&f, 1 << 14, 0).unwrap();
        assert!((md - 1.0).abs() <= 3.0 * se, "additive: {md} (se {se})");

        let g = registry::prod_centered(3);
        let (md, se) = mean_dimension_mc(&g, 1 << 14, 0).unwrap();
        assert!((md - 3.0).abs() <= 3.0 * se, "order 3: {md} (se {se})");

        let h = registry::prod_centered(8);
        let (md, se) = mean_dimension_mc(&h, 1 << 16, 0).unwrap();
        assert!((md - 8.0).abs() <= 3.0 * se, "order 8: {md} (se {se})");
    }

    #[test]
    fn estimates_are_reproducible_and_se_shrinks() {
        let f = registry::additive_sine(4);
        let a = total_index_estimates(&f, 4096, 9).unwrap();
        let b = total_index_estimates(&f, 4096, 9).unwrap();
        assert_eq!(a, b, "same seed and n must give identical bits");

        // doubling n should shrink the jackknife se by about sqrt(2)
        let mut ratios = Vec::new();
        for seed in 0..6 {
            let small = total_index_estimates(&f, 4096, seed).unwrap();
            let large = total_index_estimates(&f, 8192, seed).unwrap();
            ratios.push(small.mean_dimension_se.unwrap() / large.mean_dimension_se.unwrap());
        }
        let avg: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let target = 2f64.sqrt();
        assert!(
            avg > target / 1.5 && avg < target * 1.5,
            "se ratio {avg} too far from sqrt(2)"
        );
    }

    #[test]
    fn closed_variance_examples() {
        let f = Integrand::new("sum2", 2, |x| x[0] + x[1]);
        let (est, se) = closed_variance_pickfreeze(&f, SubsetMask::singleton(2, 1), 1 << 14, 0)
            .unwrap();
        assert!((est - 1.0 / 12.0).abs() <= 3.0 * se, "{est} vs 1/12 (se {se})");

        let (est, se) = closed_variance_pickfreeze(&f, SubsetMask::full(2), 1 << 14, 0).unwrap();
        assert!((est - 1.0 / 6.0).abs() <= 3.0 * se, "full set gives sigma2");

        let g = registry::prod_centered(2);
        let (est, se) = closed_variance_pickfreeze(&g, SubsetMask::singleton(2, 1), 1 << 14, 0)
            .unwrap();
        assert!(est.abs() <= 3.0 * se + 1e-9, "no main effects: {est} (se {se})");
    }

    #[test]
    fn closed_variance_matches_anova_sums() {
        let f = registry::gfunction(&[0.0, 1.0, 3.0]);
        let vd = anova_variances(&f, &QuadSpec::midpoint(128)).unwrap();
        for u in [
            SubsetMask::singleton(3, 1),
            SubsetMask::from_indices(3, &[1, 2]),
            SubsetMask::from_indices(3, &[2, 3]),
        ] {
            let expect: f64 = vd
                .components
                .iter()
                .filter(|(v, _)| v.is_subset_of(&u))
                .map(|(_, s)| s)
                .sum();
            let (est, se) = closed_variance_pickfreeze(&f, u, 1 << 15, 3).unwrap();
            assert!(
                (est - expect).abs() <= 3.0 * se + 1e-4,
                "{u}: {est} vs {expect} (se {se})"
            );
        }
    }

    #[test]
    fn tiny_sample_sizes_are_rejected() {
        let f = registry::linear_sum(2);
        assert!(total_index_estimates(&f, 32, 0).is_err());
        assert!(closed_variance_pickfreeze(&f, SubsetMask::full(2), 16, 0).is_err());
    }
}
