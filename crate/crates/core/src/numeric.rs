//! Reductions with a fixed evaluation order.
//!
//! All integrals and norms in the crate go through [`pairwise_sum`] so that
//! results do not depend on how work is scheduled across threads.

use num_complex::Complex64;
use std::ops::Add;

const LEAF: usize = 32;

/// Pairwise (cascade) summation over a fixed binary tree.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    if xs.len() <= LEAF {
        let mut acc = T::default();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_by<T, F>(n: usize, f: F) -> T
where
    T: Copy + Default + Add<Output = T>,
    F: Fn(usize) -> T,
{
    fn rec<T, F>(lo: usize, hi: usize, f: &F) -> T
    where
        T: Copy + Default + Add<Output = T>,
        F: Fn(usize) -> T,
    {
        if hi - lo <= LEAF {
            let mut acc = T::default();
            for k in lo..hi {
                acc = acc + f(k);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, &f)
}

pub fn complex_sum(xs: &[Complex64]) -> Complex64 {
    pairwise_sum(xs)
}
