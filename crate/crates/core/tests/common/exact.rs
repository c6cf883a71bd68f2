//! Big-integer and exact rational counterparts of the log-space kernels.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn weight(d: u64, k: u64, l: u64) -> BigUint {
    binom(d, l) * BigUint::from(k - 1).pow((d - l) as u32)
}

pub fn tail(d: u64, k: u64, lo: u64, hi: u64) -> BigUint {
    (lo..=hi).map(|l| weight(d, k, l)).sum()
}

pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn big(x: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// `m = p c / S_high - (1 - p) c / S_low` in exact arithmetic.
pub fn exact_m(d: u64, k: u64, tau: u64, p: &BigRational) -> BigRational {
    let c = big(binom(d - 1, tau - 1) * BigUint::from(k - 1).pow((d - tau) as u32));
    let high = big(tail(d, k, tau, d));
    let low = big(tail(d, k, 0, tau - 1));
    let q = BigRational::one() - p;
    p * &c / high - q * c / low
}
