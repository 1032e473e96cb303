//! Orthonormal fast Walsh–Hadamard transform.
//!
//! `H(x)_v = 2^{-m/2} Σ_a (-1)^{v·a} x_a`, computed with an in-place radix-2
//! butterfly followed by a single scaling pass. The transform is its own
//! inverse.

use std::ops::{Add, Mul, Sub};

use crate::{Error, Result};

/// Scalars the transform can act on (`f64`, `Complex64`).
pub trait WhtScalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> WhtScalar for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

pub fn check_len(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros() as usize)
}

pub fn fwht_in_place<T: WhtScalar>(x: &mut [T]) -> Result<()> {
    let m = check_len(x.len())?;
    butterflies(x);
    let scale = (-(m as f64) / 2.0).exp2();
    for v in x.iter_mut() {
        *v = *v * scale;
    }
    Ok(())
}

pub fn fwht<T: WhtScalar>(x: &[T]) -> Result<Vec<T>> {
    let mut out = x.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

fn butterflies<T: WhtScalar>(x: &mut [T]) {
    let n = x.len();
    let mut half = 1;
    while half < n {
        for block in x.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        half *= 2;
    }
}
