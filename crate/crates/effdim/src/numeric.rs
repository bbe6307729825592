//! Small numeric helpers shared across modules.

/// Relative tolerance for weight comparisons. In log space a relative
/// tolerance on weights is an absolute tolerance on their logs.
pub const REL_TOL: f64 = 1e-12;

/// Three-way comparison of log-space quantities with the shared tolerance.
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum TolCmp {
    Above,
    Tie,
    Below,
}

pub fn log_cmp(lhs: f64, rhs: f64) -> TolCmp {
    if (lhs - rhs).abs() <= REL_TOL {
        TolCmp::Tie
    } else if lhs > rhs {
        TolCmp::Above
    } else {
        TolCmp::Below
    }
}

/// `lhs <= rhs` up to the tolerance (ties count as satisfied).
pub fn log_le(lhs: f64, rhs: f64) -> bool {
    !matches!(log_cmp(lhs, rhs), TolCmp::Above)
}

/// `lhs > rhs` strictly beyond the tolerance.
pub fn log_violates(lhs: f64, rhs: f64) -> bool {
    matches!(log_cmp(lhs, rhs), TolCmp::Above)
}

/// `ln(n!)` by direct accumulation; exact enough for the subset orders and
/// search ranges used here (hundreds at most).
pub fn ln_factorial(n: u64) -> f64 {
    let mut acc = 0.0;
    for k in 2..=n {
        acc += (k as f64).ln();
    }
    acc
}
