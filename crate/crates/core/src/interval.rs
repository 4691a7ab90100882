//! Outward-rounded dyadic interval arithmetic.
//!
//! An [`Interval`] at precision `prec` is the closed set
//! `[lo / 2^prec, hi / 2^prec]` with `lo <= hi` big integers. Every operation
//! rounds `lo` toward -inf and `hi` toward +inf, and the transcendental
//! functions add explicit series-tail bounds, so the true value always lies
//! inside the result. Comparisons return `None` when the intervals overlap.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Extra bits carried through ln/exp evaluations.
const GUARD_BITS: u32 = 64;
/// Halvings applied to the reduced exp argument before the Taylor series.
const EXP_HALVINGS: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    prec: u32,
}

fn pow2(s: u32) -> BigInt {
    BigInt::one() << s as usize
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn floor_shr(a: &BigInt, s: u32) -> BigInt {
    floor_div(a, &pow2(s))
}

fn ceil_shr(a: &BigInt, s: u32) -> BigInt {
    ceil_div(a, &pow2(s))
}

impl Interval {
    fn new(lo: BigInt, hi: BigInt, prec: u32) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi, prec }
    }

    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Self {
        let v = n.into() << prec as usize;
        Interval::new(v.clone(), v, prec)
    }

    /// Enclosure of `num / den`, `den != 0`.
    pub fn from_ratio(num: impl Into<BigInt>, den: impl Into<BigInt>, prec: u32) -> Self {
        let (mut num, mut den) = (num.into(), den.into());
        assert!(!den.is_zero(), "zero denominator");
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        let scaled = num << prec as usize;
        Interval::new(floor_div(&scaled, &den), ceil_div(&scaled, &den), prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Re-expresses the enclosure at another precision, rounding outward.
    pub fn with_prec(&self, prec: u32) -> Self {
        match prec.cmp(&self.prec) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let s = (prec - self.prec) as usize;
                Interval::new(&self.lo << s, &self.hi << s, prec)
            }
            Ordering::Less => {
                let s = self.prec - prec;
                Interval::new(floor_shr(&self.lo, s), ceil_shr(&self.hi, s), prec)
            }
        }
    }

    fn same_prec(&self, other: &Interval) {
        assert_eq!(self.prec, other.prec, "interval precision mismatch");
    }

    pub fn add(&self, other: &Interval) -> Interval {
        self.same_prec(other);
        Interval::new(&self.lo + &other.lo, &self.hi + &other.hi, self.prec)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.same_prec(other);
        Interval::new(&self.lo - &other.hi, &self.hi - &other.lo, self.prec)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-&self.hi, -&self.lo, self.prec)
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        self.same_prec(other);
        let products = [&self.lo * &other.lo, &self.lo * &other.hi, &self.hi * &other.lo, &self.hi * &other.hi];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        Interval::new(floor_shr(min, self.prec), ceil_shr(max, self.prec), self.prec)
    }

    /// Division by an interval that excludes zero.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        self.same_prec(other);
        if other.lo.sign() != other.hi.sign() || other.lo.is_zero() {
            return None;
        }
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in [&self.lo, &self.hi] {
            let scaled = n << self.prec as usize;
            for d in [&other.lo, &other.hi] {
                let f = floor_div(&scaled, d);
                let c = ceil_div(&scaled, d);
                lo = Some(match lo {
                    Some(x) if x <= f => x,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(x) if x >= c => x,
                    _ => c,
                });
            }
        }
        Some(Interval::new(lo.unwrap(), hi.unwrap(), self.prec))
    }

    pub fn mul_int(&self, n: impl Into<BigInt>) -> Interval {
        let n = n.into();
        let (a, b) = (&self.lo * &n, &self.hi * &n);
        if n.is_negative() {
            Interval::new(b, a, self.prec)
        } else {
            Interval::new(a, b, self.prec)
        }
    }

    /// Division by a positive integer.
    pub fn div_int(&self, n: u64) -> Interval {
        assert!(n > 0);
        let d = BigInt::from(n);
        Interval::new(floor_div(&self.lo, &d), ceil_div(&self.hi, &d), self.prec)
    }

    pub fn pow(&self, n: u32) -> Interval {
        let mut acc = Interval::from_int(1, self.prec);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Square root of a non-negative interval.
    pub fn sqrt(&self) -> Option<Interval> {
        if self.lo.is_negative() {
            return None;
        }
        let shift = self.prec as usize;
        let lo = (&self.lo << shift).sqrt();
        let hi_sq = &self.hi << shift;
        let mut hi = hi_sq.sqrt();
        if &hi * &hi < hi_sq {
            hi += 1;
        }
        Some(Interval::new(lo, hi, self.prec))
    }

    /// Natural logarithm of a positive interval.
    pub fn ln(&self) -> Option<Interval> {
        if !self.lo.is_positive() {
            return None;
        }
        let lo = ln_point(&self.lo, self.prec);
        let hi = ln_point(&self.hi, self.prec);
        Some(Interval::new(lo.lo, hi.hi, self.prec))
    }

    pub fn exp(&self) -> Interval {
        let lo = exp_point(&self.lo, self.prec);
        let hi = exp_point(&self.hi, self.prec);
        Interval::new(lo.lo, hi.hi, self.prec)
    }

    /// `self^y = exp(y ln self)` for a positive base.
    pub fn powf(&self, y: &Interval) -> Option<Interval> {
        Some(self.ln()?.mul(y).exp())
    }

    /// Certified `self < other`: `Some(true)` when every point of `self` is
    /// below every point of `other`, `Some(false)` when no point is, `None`
    /// when undecided at this precision.
    pub fn lt(&self, other: &Interval) -> Option<bool> {
        self.same_prec(other);
        if self.hi < other.lo {
            Some(true)
        } else if self.lo >= other.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn gt(&self, other: &Interval) -> Option<bool> {
        other.lt(self)
    }

    pub fn lo_f64(&self) -> f64 {
        ratio_f64(&self.lo, self.prec)
    }

    pub fn hi_f64(&self) -> f64 {
        ratio_f64(&self.hi, self.prec)
    }

    pub fn mid_f64(&self) -> f64 {
        ratio_f64(&(&self.lo + &self.hi), self.prec + 1)
    }

    /// Upper endpoint of the width, in units of `2^-prec`.
    pub fn width_ulps(&self) -> BigInt {
        &self.hi - &self.lo
    }

    /// Lower endpoint rounded down to `digits` decimals.
    pub fn lo_decimal(&self, digits: u32) -> String {
        let d = num_traits::pow(BigInt::from(10), digits as usize);
        format_decimal(&floor_shr(&(&self.lo * &d), self.prec), digits)
    }

    /// Upper endpoint rounded up to `digits` decimals.
    pub fn hi_decimal(&self, digits: u32) -> String {
        let d = num_traits::pow(BigInt::from(10), digits as usize);
        format_decimal(&ceil_shr(&(&self.hi * &d), self.prec), digits)
    }

    /// Midpoint/radius view with a radius that still covers the endpoints
    /// after the midpoint is rounded to `digits` decimals.
    pub fn to_real(&self, digits: u32) -> RealWithError {
        let d = num_traits::pow(BigInt::from(10), digits as usize);
        let mid_num = floor_shr(&((&self.lo + &self.hi) * &d), self.prec + 1);
        let mid_scaled = &mid_num << self.prec as usize;
        let up = &self.hi * &d - &mid_scaled;
        let down = &mid_scaled - &self.lo * &d;
        let rad = ceil_shr(&up.max(down).max(BigInt::zero()), self.prec);
        RealWithError {
            midpoint: format_decimal(&mid_num, digits),
            radius: format_decimal(&rad, digits),
            lo: self.lo_decimal(digits),
            hi: self.hi_decimal(digits),
            precision_bits: self.prec,
        }
    }
}

fn ratio_f64(n: &BigInt, prec: u32) -> f64 {
    // Keep ~60 significant bits before converting.
    let bits = n.bits() as i64;
    let drop = (bits - 60).max(0) as u32;
    let m = (n >> drop as usize).to_f64().unwrap_or(f64::NAN);
    m * 2f64.powi(drop as i32 - prec as i32)
}

fn format_decimal(n: &BigInt, digits: u32) -> String {
    let neg = n.is_negative();
    let s = n.abs().to_string();
    let digits = digits as usize;
    let s = if s.len() <= digits { format!("{}{}", "0".repeat(digits + 1 - s.len()), s) } else { s };
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Serializable enclosure of a real number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealWithError {
    pub midpoint: String,
    pub radius: String,
    pub lo: String,
    pub hi: String,
    pub precision_bits: u32,
}

/// `2 * atanh(z)` for `0 <= z <= 1/3 + eps`, at the interval's precision.
fn two_atanh_small(z: &Interval) -> Interval {
    let w = z.prec;
    // (1/3)^(2n+1) < 2^-(w+2)  <=  n > (w+2) / (2 log2 3)
    let n = (w as u64 + 2) * 100 / 317 + 2;
    let z2 = z.mul(z);
    let mut power = z.clone();
    let mut sum = Interval::from_int(0, w);
    for i in 0..n {
        sum = sum.add(&power.div_int(2 * i + 1));
        power = power.mul(&z2);
    }
    // tail <= z^(2n+1) / ((2n+1)(1 - z^2)) <= 2^-(w+1)
    let tail = Interval::new(BigInt::zero(), BigInt::one(), w);
    sum.add(&tail).mul_int(2)
}

fn ln2(w: u32) -> Interval {
    two_atanh_small(&Interval::from_ratio(1, 3, w))
}

/// Enclosure of `ln(m / 2^prec)` for `m > 0`.
fn ln_point(m: &BigInt, prec: u32) -> Interval {
    let w = prec + GUARD_BITS;
    let top = m.bits() - 1;
    // u = m / 2^top in [1, 2)
    let u = Interval::from_ratio(m.clone(), pow2(top as u32), w);
    let one = Interval::from_int(1, w);
    let z = u.sub(&one).div(&u.add(&one)).expect("u + 1 > 0");
    let exponent = top as i64 - prec as i64;
    let ln_u = two_atanh_small(&z);
    ln2(w).mul_int(exponent).add(&ln_u).with_prec(prec)
}

/// Enclosure of `exp(m / 2^prec)`.
fn exp_point(m: &BigInt, prec: u32) -> Interval {
    let w = prec + GUARD_BITS + EXP_HALVINGS;
    let scaled_m = m << (w - prec) as usize;
    let v = Interval::new(scaled_m.clone(), scaled_m, w);
    let approx = ratio_f64(m, prec) / std::f64::consts::LN_2;
    let n = approx.round() as i64;
    let r = v.sub(&ln2(w).mul_int(n));
    let r = Interval::new(floor_shr(&r.lo, EXP_HALVINGS), ceil_shr(&r.hi, EXP_HALVINGS), w);
    // |r| < 2^-12, so (N+1) terms leave a tail below 2 |r|^(N+1) < 2^-w
    let terms = (w as u64) / (EXP_HALVINGS as u64 - 1) + 2;
    let mut sum = Interval::from_int(0, w);
    let mut term = Interval::from_int(1, w);
    for i in 1..=terms {
        sum = sum.add(&term);
        term = term.mul(&r).div_int(i);
    }
    let mut acc = sum.add(&Interval::new(-BigInt::one(), BigInt::one(), w));
    if acc.lo.is_negative() {
        acc.lo = BigInt::zero();
    }
    for _ in 0..EXP_HALVINGS {
        acc = acc.mul(&acc);
    }
    let scaled = if n >= 0 {
        Interval::new(&acc.lo << n as usize, &acc.hi << n as usize, w)
    } else {
        let s = (-n) as u32;
        Interval::new(floor_shr(&acc.lo, s), ceil_shr(&acc.hi, s), w)
    };
    scaled.with_prec(prec)
}
