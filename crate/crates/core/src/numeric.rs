//! Small deterministic reductions shared by the numerical kernels.

use num_complex::Complex64;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (l, r) = v.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub fn pairwise_sum_c(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (l, r) = v.split_at(n / 2);
            pairwise_sum_c(l) + pairwise_sum_c(r)
        }
    }
}

/// Sum of a fiber profile `v[p + band]`, accumulated as `v[0] + sum_{k>0} (v[k] + v[-k])`.
///
/// Reversing the profile (as the involution does) leaves the result bit-identical.
pub fn fiber_sum(v: &[f64]) -> f64 {
    let band = v.len() / 2;
    let mut acc = v[band];
    for k in 1..=band {
        acc += v[band + k] + v[band - k];
    }
    acc
}
