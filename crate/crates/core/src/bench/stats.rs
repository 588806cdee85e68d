//! Paired comparison statistics and mean intervals.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Largest sample size handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("samples are empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// Pairs left after dropping zero differences.
    pub n: usize,
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    pub p_value: f64,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1 by convention.
    pub degenerate: bool,
}

/// Mid-ranks of `values` (1-based), doubled so ties stay integral.
pub fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j+1 share the mid-rank (i+1 + j+1) / 2
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and ties get mid-ranks. Exact for up to [`EXACT_MAX_N`] pairs,
/// normal approximation with continuity and tie correction above.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<Wilcoxon, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if d.is_empty() {
        return Ok(Wilcoxon {
            n: 0,
            w_plus: 0.0,
            p_value: 1.0,
            exact: true,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| libm::fabs(*v)).collect();
    let ranks = doubled_ranks(&abs);
    let w2: u64 = ranks
        .iter()
        .zip(&d)
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, _)| *r)
        .sum();
    let n = d.len();
    let w_plus = w2 as f64 / 2.0;
    if n <= EXACT_MAX_N {
        let p = exact_p(&ranks, w2);
        return Ok(Wilcoxon {
            n,
            w_plus,
            p_value: p,
            exact: true,
            degenerate: false,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
    let mut i = 0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    let dev = libm::fabs(w_plus - mean) - 0.5;
    let p = if dev <= 0.0 || var <= 0.0 {
        1.0
    } else {
        libm::erfc(dev / libm::sqrt(var) / core::f64::consts::SQRT_2)
    };
    Ok(Wilcoxon {
        n,
        w_plus,
        p_value: p.min(1.0),
        exact: false,
        degenerate: false,
    })
}

/// P(|W - mu| >= |w - mu|) under random signs, by counting subsets of the
/// doubled ranks per sum.
fn exact_p(ranks: &[u64], w2: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let observed = (2 * w2).abs_diff(total);
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as u64).abs_diff(total) >= observed)
        .map(|(_, c)| *c)
        .sum();
    let all = libm::ldexp(1.0, ranks.len() as i32);
    (extreme as f64 / all).min(1.0)
}

/// Bonferroni adjustment over the whole list.
pub fn bonferroni(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    p.iter().map(|v| (v * m).min(1.0)).collect()
}

/// Mean with the half-width of a Student-t interval. `half_width` is `None`
/// for a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub half_width: Option<f64>,
    pub n: usize,
}

pub fn mean_interval(xs: &[f64], confidence: f64) -> Option<Interval> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    if n == 1 {
        return Some(Interval {
            mean,
            half_width: None,
            n,
        });
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let t = student_t_quantile(0.5 + confidence / 2.0, nf - 1.0);
    Some(Interval {
        mean,
        half_width: Some(t * libm::sqrt(var / nf)),
        n,
    })
}

/// Regularised incomplete beta I_x(a, b), continued fraction (Lentz).
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < 1e-15 {
            break;
        }
    }
    h
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * inc_beta(df / (df + t * t), df / 2.0, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Inverse of [`student_t_cdf`] by bisection.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if p < 0.5 {
        return -student_t_quantile(1.0 - p, df);
    }
    let mut hi = 1.0;
    while student_t_cdf(hi, df) < p && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilcoxon_reference_values() {
        let w = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(w.degenerate);
        assert_eq!(w.p_value, 1.0);
        let w = wilcoxon_signed_rank(&[2.0, 3.0, 4.0, 5.0, 6.0], &[1.0; 5]).unwrap();
        assert_eq!(w.p_value, 0.0625);
        let w = wilcoxon_signed_rank(&[3.0], &[1.0]).unwrap();
        assert_eq!(w.p_value, 1.0);
        assert_eq!(
            wilcoxon_signed_rank(&[1.0], &[]),
            Err(StatsError::LengthMismatch(1, 0))
        );
        assert_eq!(wilcoxon_signed_rank(&[], &[]), Err(StatsError::Empty));
    }

    #[test]
    fn mid_ranks() {
        assert_eq!(doubled_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
    }

    #[test]
    fn large_sample_uses_normal() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 + 0.5).collect();
        let y = vec![0.0; 30];
        let w = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!(!w.exact);
        assert!(w.p_value < 1e-5);
    }

    #[test]
    fn bonferroni_arithmetic() {
        assert_eq!(bonferroni(&[0.02]), vec![0.02]);
        assert_eq!(bonferroni(&[0.02, 0.5]), vec![0.04, 1.0]);
        assert_eq!(bonferroni(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn t_quantiles() {
        // Textbook table values.
        for (df, q) in [(1.0, 12.706), (4.0, 2.776), (9.0, 2.262), (30.0, 2.042)] {
            assert!((student_t_quantile(0.975, df) - q).abs() < 1e-3, "{df}");
        }
        let i = mean_interval(&[5.0], 0.95).unwrap();
        assert_eq!(i.half_width, None);
        assert!(mean_interval(&[], 0.95).is_none());
    }
}
