//! Closed-form sizing and uniqueness calculators.
//!
//! Probabilities that can be astronomically small or large (anything with an
//! `n^k` factor) are returned as base-2 logarithms.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.3;
pub const DEFAULT_TARGET: f64 = 0.99999;

/// Pair counts up to this size use exact big-integer binomials.
const EXACT_PAIR_LIMIT: u64 = 5000;

/// Smallest `k` with `k >= (2 + delta) * log2(n)`.
pub fn compute_k(n: u64, delta: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::param(format!("node count must be at least 2, got {n}")));
    }
    if !(delta > 0.0) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    let x = (2.0 + delta) * (n as f64).log2();
    // absorb rounding noise when x is (nearly) an integer
    Ok((x - 1e-9).ceil() as usize)
}

pub fn pair_count(k: usize) -> u64 {
    (k as u64) * (k as u64).saturating_sub(1) / 2
}

/// Expected edge count of an embedded watermark subgraph:
/// `(C(k,2) + k - 1) / 2`.
pub fn watermark_density(k: usize) -> f64 {
    (pair_count(k) + k as u64 - 1) as f64 / 2.0
}

/// `(k + 1) / 2`, the expected degree a watermark node needs inside the
/// watermark subgraph.
pub fn watermark_min_avg_degree(k: usize) -> f64 {
    (k as f64 + 1.0) / 2.0
}

/// `log2( n^k * 2^-(C(k,2) - (k-1)) )`.
pub fn uniqueness_bound_log2(n: u64, k: usize) -> f64 {
    k as f64 * (n as f64).log2() - (pair_count(k) as f64 - (k as f64 - 1.0))
}

/// `log2( n^k * 2^-(e-k+1) * sum_{h<=L} C(e,h) )` with `e = C(k,2)`.
pub fn approx_uniqueness_bound_log2(n: u64, k: usize, l: u64) -> Result<f64> {
    let e = pair_count(k);
    if l > e {
        return Err(Error::param(format!("L = {l} exceeds the {e} watermark pairs")));
    }
    Ok(uniqueness_bound_log2(n, k) + log2_binomial_prefix_sums(e, l)[l as usize])
}

/// `log2 sum_{h=0}^{L} C(e, h)` for every `L` in `0..=max_l`.
pub fn log2_binomial_prefix_sums(e: u64, max_l: u64) -> Vec<f64> {
    let max_l = max_l.min(e);
    let mut out = Vec::with_capacity(max_l as usize + 1);
    if e <= EXACT_PAIR_LIMIT {
        let mut term = BigUint::one();
        let mut sum = BigUint::zero();
        for h in 0..=max_l {
            if h > 0 {
                term = term * BigUint::from(e - h + 1) / BigUint::from(h);
            }
            sum += &term;
            out.push(log2_big(&sum));
        }
    } else {
        // ln C(e,h) accumulated term by term, summed with log-sum-exp
        let mut ln_term = 0f64;
        let mut ln_sum = f64::NEG_INFINITY;
        for h in 0..=max_l {
            if h > 0 {
                ln_term += ((e - h + 1) as f64).ln() - (h as f64).ln();
            }
            ln_sum = log_add(ln_sum, ln_term);
            out.push(ln_sum / std::f64::consts::LN_2);
        }
    }
    out
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().expect("fits").to_f64().expect("finite").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits");
    (top as f64).log2() + shift as f64
}

/// Largest `L` whose approximate-match bound stays within `1 - target`, with
/// `k` from [`compute_k`]. Returns -1 when even exact matching misses the
/// target.
pub fn max_l(n: u64, delta: f64, target: f64) -> Result<i64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param(format!("target must lie in (0, 1), got {target}")));
    }
    let k = compute_k(n, delta)?;
    Ok(max_l_for_k(n, k, target))
}

pub fn max_l_for_k(n: u64, k: usize, target: f64) -> i64 {
    let budget = (1.0 - target).log2();
    let base = uniqueness_bound_log2(n, k);
    if base > budget {
        return -1;
    }
    let e = pair_count(k);
    // the bound only grows with L, so scan until it overshoots
    let mut hi = 16u64.min(e);
    loop {
        let sums = log2_binomial_prefix_sums(e, hi);
        if let Some(first_bad) = sums.iter().position(|s| base + s > budget) {
            return first_bad as i64 - 1;
        }
        if hi == e {
            return e as i64;
        }
        hi = (hi * 2).min(e);
    }
}

/// Chance that at least one of `m` independent copies collides:
/// `1 - (1 - p_e)^m`.
pub fn false_positive_m(p_e: f64, m: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) || m == 0 {
        return Err(Error::param(format!("need p_e in [0,1] and m >= 1, got {p_e}, {m}")));
    }
    Ok(-(m as f64 * (-p_e).ln_1p()).exp_m1())
}

/// Inner collusion term for a single `J`-way partition:
/// `1 - J * sum_{i >= ceil((M_a+1)/2)} C(M_a,i) (1/J)^i ((J-1)/J)^(M_a-i)`.
pub fn collusion_lambda_single_exact(m_a: u32, j: u32) -> Result<BigRational> {
    if m_a == 0 || j < 2 {
        return Err(Error::param(format!("need M_a >= 1 and J >= 2, got {m_a}, {j}")));
    }
    let jb = BigRational::from_integer(j.into());
    let p = BigRational::one() / &jb;
    let q = BigRational::one() - &p;
    let mut sum = BigRational::zero();
    let mut binom = BigUint::one();
    for i in 0..=m_a {
        if i > 0 {
            binom = binom * BigUint::from(m_a - i + 1) / BigUint::from(i);
        }
        // i >= ceil((M_a + 1) / 2), i.e. a strict majority
        if 2 * i > m_a {
            let c = BigRational::from_integer(binom.clone().into());
            sum += c * pow(&p, i) * pow(&q, m_a - i);
        }
    }
    Ok(BigRational::one() - jb * sum)
}

/// `λ(M_a, J)` for the two-partition design: the single-partition term
/// squared.
pub fn collusion_lambda_exact(m_a: u32, j: u32) -> Result<BigRational> {
    let v = collusion_lambda_single_exact(m_a, j)?;
    Ok(&v * &v)
}

pub fn collusion_lambda(m_a: u32, j: u32) -> Result<f64> {
    Ok(ratio_to_f64(&collusion_lambda_exact(m_a, j)?))
}

pub fn collusion_lambda_single(m_a: u32, j: u32) -> Result<f64> {
    Ok(ratio_to_f64(&collusion_lambda_single_exact(m_a, j)?))
}

fn pow(x: &BigRational, e: u32) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Everything the `bounds` command reports for a graph size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: u64,
    pub delta: f64,
    pub k: usize,
    #[serde(rename = "log2_PE")]
    pub log2_pe: f64,
    #[serde(rename = "max_L")]
    pub max_l: i64,
    pub target_uniqueness: f64,
    pub watermark_min_avg_degree: f64,
    pub watermark_density: f64,
}

pub fn bounds_report(n: u64, delta: f64, target: f64) -> Result<BoundsReport> {
    let k = compute_k(n, delta)?;
    Ok(BoundsReport {
        n,
        delta,
        k,
        log2_pe: uniqueness_bound_log2(n, k),
        max_l: max_l(n, delta, target)?,
        target_uniqueness: target,
        watermark_min_avg_degree: watermark_min_avg_degree(k),
        watermark_density: watermark_density(k),
    })
}
