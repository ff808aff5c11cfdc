//! Evaluation statistics: Pass@k, Wilson score intervals, and
//! verifier-vs-expert agreement metrics.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("pass@k domain violation: need 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")]
    PassAtKDomain { n: u64, c: u64, k: u64 },
    #[error("wilson domain violation: need 0 <= p_hat <= 1, n >= 1, z > 0")]
    WilsonDomain,
    #[error("agreement stats need a non-empty confusion matrix")]
    EmptyMatrix,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Pass@k = 1 - C(n-c, k) / C(n, k), as a percentage rounded to one decimal.
/// Evaluated as an exact fraction; k = 1 reduces to c/n.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, StatsError> {
    if c > n || k == 0 || k > n {
        return Err(StatsError::PassAtKDomain { n, c, k });
    }
    // C(n-c, k) / C(n, k) = prod_{i=0..k} (n-c-i) / (n-i); zero when k > n-c
    if k > n - c {
        return Ok(100.0);
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    let mut exact = true;
    let mut approx = 1.0f64;
    for i in 0..k {
        let top = (n - c - i) as u128;
        let bottom = (n - i) as u128;
        approx *= top as f64 / bottom as f64;
        if exact {
            match (num.checked_mul(top), den.checked_mul(bottom)) {
                (Some(nn), Some(dd)) => {
                    let g = gcd(nn, dd);
                    num = nn / g;
                    den = dd / g;
                }
                _ => exact = false,
            }
        }
    }
    let ratio = if exact {
        num as f64 / den as f64
    } else {
        approx
    };
    let pct = 100.0 * (1.0 - ratio);
    Ok((pct * 10.0).round() / 10.0)
}

/// Wilson score interval for an observed proportion, clamped to [0, 1]:
/// center (p̂ + z²/2n) / (1 + z²/n), half-width
/// z/(1 + z²/n) · sqrt(p̂(1−p̂)/n + z²/4n²).
pub fn wilson_interval(p_hat: f64, n: u64, z: f64) -> Result<(f64, f64), StatsError> {
    if !(0.0..=1.0).contains(&p_hat) || n == 0 || z <= 0.0 || !z.is_finite() {
        return Err(StatsError::WilsonDomain);
    }
    let n = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Precision/recall/F1/Cohen's κ from a 2x2 confusion matrix. κ uses the
/// exact chance agreement from the marginals, not the balanced-marginal
/// 2·P_o − 1 shortcut. Undefined ratios are `None`, never a crash.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementStats {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub kappa: Option<f64>,
}

pub fn agreement_stats(tp: u64, fp: u64, fn_: u64, tn: u64) -> Result<AgreementStats, StatsError> {
    let total = tp + fp + fn_ + tn;
    if total == 0 {
        return Err(StatsError::EmptyMatrix);
    }
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let n = total as f64;
    let p_observed = (tp + tn) as f64 / n;
    // marginals: rows are verifier P/F, columns expert P/F
    let p_expected =
        ((tp + fp) as f64 * (tp + fn_) as f64 + (fn_ + tn) as f64 * (fp + tn) as f64) / (n * n);
    let kappa = if (1.0 - p_expected).abs() < f64::EPSILON {
        None
    } else {
        Some((p_observed - p_expected) / (1.0 - p_expected))
    };
    Ok(AgreementStats {
        precision,
        recall,
        f1,
        kappa,
    })
}
