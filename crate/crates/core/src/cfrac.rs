//! Continued fractions of `N^(1/q)` in exact integer arithmetic, and the
//! `q = 3` convergent search for `(X^3 - 1)(Y^3 - 1) = Z^3`.
//!
//! Quotients come from Lagrange's method: keep an integer polynomial whose
//! only real root above 1 is the current complete quotient, read off its
//! floor from sign changes, then substitute `x -> a + 1/x`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CFExpansion {
    #[serde(with = "crate::bigstr")]
    pub radicand: BigUint,
    pub degree: u32,
    #[serde(with = "crate::bigstr::vec")]
    pub quotients: Vec<BigUint>,
    /// True iff the radicand is a perfect `degree`-th power.
    pub terminated: bool,
}

/// Lazy stream of partial quotients of `N^(1/q)`.
#[derive(Debug, Clone)]
pub struct Quotients {
    radicand: BigUint,
    degree: u32,
    /// Coefficients, constant term first. Empty before the first quotient.
    poly: Vec<BigInt>,
    done: bool,
}

impl Quotients {
    pub fn new(radicand: BigUint, degree: u32) -> Result<Self> {
        if radicand.is_zero() {
            return Err(Error::InvalidInput("radicand must be positive".into()));
        }
        if degree < 2 {
            return Err(Error::InvalidInput(format!("degree must be at least 2, got {degree}")));
        }
        Ok(Quotients { radicand, degree, poly: Vec::new(), done: false })
    }

    /// Replaces `P(x)` by `x^n P(a + 1/x)`, dividing out the content.
    fn advance(&mut self, a: &BigInt) {
        let c = &mut self.poly;
        let n = c.len() - 1;
        for i in 0..n {
            for j in (i..n).rev() {
                let t = a * &c[j + 1];
                c[j] += t;
            }
        }
        c.reverse();
        let g = c.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if !g.is_one() && !g.is_zero() {
            for x in c.iter_mut() {
                *x /= &g;
            }
        }
    }
}

fn eval(poly: &[BigInt], x: &BigInt) -> BigInt {
    poly.iter().rev().fold(BigInt::zero(), |acc, c| acc * x + c)
}

/// Floor of the unique real root above 1, given that the root is
/// irrational or the exact root is returned with `true`.
fn floor_of_root(poly: &[BigInt]) -> (BigInt, bool) {
    let lead = poly.last().expect("non-empty").sign();
    let below = |x: &BigInt| -> Option<bool> {
        match eval(poly, x).sign() {
            Sign::NoSign => None,
            s => Some(s != lead),
        }
    };
    let mut lo = BigInt::one();
    let mut hi = BigInt::from(2);
    loop {
        match below(&hi) {
            None => return (hi, true),
            Some(true) => {
                lo = hi.clone();
                hi <<= 1;
            }
            Some(false) => break,
        }
    }
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1;
        match below(&mid) {
            None => return (mid, true),
            Some(true) => lo = mid,
            Some(false) => hi = mid,
        }
    }
    (lo, false)
}

impl Iterator for Quotients {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        if self.done {
            return None;
        }
        let (a, exact) = if self.poly.is_empty() {
            let (r, exact) = arith::integer_root(&self.radicand, self.degree).expect("degree >= 2");
            let mut poly = vec![BigInt::zero(); self.degree as usize + 1];
            poly[0] = -BigInt::from(self.radicand.clone());
            poly[self.degree as usize] = BigInt::one();
            self.poly = poly;
            (BigInt::from(r), exact)
        } else {
            floor_of_root(&self.poly)
        };
        if exact {
            self.done = true;
        } else {
            self.advance(&a);
        }
        Some(a.to_biguint().expect("non-negative quotient"))
    }
}

/// The first `count` partial quotients of `N^(1/q)`; stops early when the
/// root is an integer.
pub fn cf_expand(radicand: &BigUint, degree: u32, count: usize) -> Result<CFExpansion> {
    let mut it = Quotients::new(radicand.clone(), degree)?;
    let quotients: Vec<BigUint> = it.by_ref().take(count).collect();
    let terminated = it.done;
    Ok(CFExpansion { radicand: radicand.clone(), degree, quotients, terminated })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    #[serde(with = "crate::bigstr")]
    pub h: BigUint,
    #[serde(with = "crate::bigstr")]
    pub k: BigUint,
    pub index: usize,
}

/// Running `h_n = a_n h_{n-1} + h_{n-2}`, `k_n = a_n k_{n-1} + k_{n-2}`.
#[derive(Debug, Clone)]
pub struct ConvergentStream<I> {
    quotients: I,
    prev: (BigUint, BigUint),
    cur: (BigUint, BigUint),
    index: usize,
}

impl<I: Iterator<Item = BigUint>> ConvergentStream<I> {
    pub fn new(quotients: I) -> Self {
        ConvergentStream {
            quotients,
            prev: (BigUint::zero(), BigUint::one()),
            cur: (BigUint::one(), BigUint::zero()),
            index: 0,
        }
    }
}

impl<I: Iterator<Item = BigUint>> Iterator for ConvergentStream<I> {
    type Item = Convergent;

    fn next(&mut self) -> Option<Convergent> {
        let a = self.quotients.next()?;
        let h = &a * &self.cur.0 + &self.prev.0;
        let k = &a * &self.cur.1 + &self.prev.1;
        self.prev = std::mem::replace(&mut self.cur, (h.clone(), k.clone()));
        let c = Convergent { h, k, index: self.index };
        self.index += 1;
        Some(c)
    }
}

pub fn convergents(expansion: &CFExpansion) -> Vec<Convergent> {
    ConvergentStream::new(expansion.quotients.iter().cloned()).collect()
}

/// `h/k` compared with `N^(1/q)` by `h^q` against `N k^q`.
pub fn compare_to_root(c: &Convergent, radicand: &BigUint, degree: u32) -> std::cmp::Ordering {
    num_traits::pow(c.h.clone(), degree as usize).cmp(&(radicand * num_traits::pow(c.k.clone(), degree as usize)))
}

/// Checks exactly that even-indexed convergents lie below the root and
/// odd-indexed ones above (an exact hit is allowed only at the end of a
/// terminated expansion), and that consecutive convergents satisfy
/// `h_{n+1} k_n - h_n k_{n+1} = (-1)^n`. Together these give
/// `|N^(1/q) - h_n/k_n| < 1/(k_n k_{n+1}) <= 1/k_n^2`.
pub fn certify_convergents(expansion: &CFExpansion, convs: &[Convergent]) -> bool {
    use std::cmp::Ordering::*;
    let (n, q) = (&expansion.radicand, expansion.degree);
    let alternates = convs.iter().enumerate().all(|(i, c)| {
        let last = i + 1 == convs.len();
        match (compare_to_root(c, n, q), c.index % 2) {
            (Equal, _) => last && expansion.terminated,
            (Less, 0) | (Greater, 1) => true,
            _ => false,
        }
    });
    let determinants = convs.windows(2).all(|w| {
        let lhs = BigInt::from(&w[1].h * &w[0].k) - BigInt::from(&w[0].h * &w[1].k);
        let expected = if w[0].index % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        lhs == expected
    });
    let coprime = convs.iter().all(|c| c.h.gcd(&c.k).is_one());
    alternates && determinants && coprime
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Q3Status {
    /// Every candidate below `5 X^6` was checked.
    NoSolution,
    /// `y_limit` stops short of `5 X^6`; only `Y <= y_limit` is covered.
    Partial,
    SolutionFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Q3Report {
    pub x: u64,
    #[serde(with = "crate::bigstr")]
    pub radicand: BigUint,
    pub y_limit: u64,
    /// `5 X^6`.
    #[serde(with = "crate::bigstr")]
    pub threshold: BigUint,
    pub convergents_checked: usize,
    /// Largest denominator examined.
    #[serde(with = "crate::bigstr")]
    pub max_denominator: BigUint,
    /// Smallest `k >= 2` among convergents with `|alpha - h/k| < 2/k^2` and no
    /// solution at `Y = k`.
    pub smallest_quality_denominator: Option<u64>,
    /// `(Y, Z)` pairs with `Z^3 = (X^3 - 1)(Y^3 - 1)`.
    pub solutions: Vec<(u64, u64)>,
    pub exhausted_below_threshold: bool,
    pub status: Q3Status,
    pub note: Option<String>,
}

/// Cube-free part bookkeeping: all `d` with `d^3 | n`.
fn cube_divisors(n: &BigUint) -> Vec<u64> {
    let limit = arith::integer_root(n, 3).expect("degree 3").0;
    let limit = u64::try_from(limit).unwrap_or(u64::MAX);
    (1..=limit).filter(|&d| (n % BigUint::from(d).pow(3u32)).is_zero()).collect()
}

struct CubicScan {
    checked: usize,
    max_denominator: BigUint,
    smallest_quality_denominator: Option<u64>,
    solutions: Vec<(u64, u64)>,
}

/// Solutions of `Z^3 = A (Y^3 - 1)` with `2 <= Y <= y_limit` reachable from
/// convergents of `A^(1/3)` and their admissible multiples.
fn scan_cubic(radicand: &BigUint, y_limit: u64) -> Result<CubicScan> {
    let multiples = cube_divisors(radicand);
    let limit = BigUint::from(y_limit);
    let two = BigUint::from(2u32);
    let mut scan = CubicScan {
        checked: 0,
        max_denominator: BigUint::zero(),
        smallest_quality_denominator: None,
        solutions: Vec::new(),
    };
    for c in ConvergentStream::new(Quotients::new(radicand.clone(), 3)?) {
        if c.k > limit {
            break;
        }
        scan.checked += 1;
        scan.max_denominator = c.k.clone();
        let mut hit = false;
        for &d in &multiples {
            let (y, z) = (&c.k * d, &c.h * d);
            if y > limit || y < two {
                continue;
            }
            if z.pow(3u32) == radicand * (y.pow(3u32) - 1u32) {
                hit = true;
                let y = u64::try_from(&y).expect("y <= y_limit");
                let z = u64::try_from(&z).expect("z < alpha y");
                scan.solutions.push((y, z));
            }
        }
        // Every convergent is within 1/k^2 of alpha, hence within 2/k^2.
        if !hit && scan.smallest_quality_denominator.is_none() && c.k >= two {
            scan.smallest_quality_denominator = u64::try_from(&c.k).ok();
        }
    }
    scan.solutions.sort_unstable();
    Ok(scan)
}

/// Searches `(X^3 - 1)(Y^3 - 1) = Z^3` along the convergents of
/// `alpha = (X^3 - 1)^(1/3)`.
///
/// A solution has `Z < alpha Y` and `alpha - Z/Y < alpha / (2.87 Y^3)` for
/// `Y >= X`, which is below `1/(2 Y^2)`; by Legendre's criterion `Z/Y` in
/// lowest terms is a convergent. If `d = gcd(Y, Z)` then `d^3` divides
/// `X^3 - 1`, so each convergent is tried at every such multiple.
pub fn q3_case_check(x: u64, y_limit: u64) -> Result<Q3Report> {
    if x < 2 {
        return Err(Error::InvalidInput(format!("X must be at least 2, got {x}")));
    }
    if y_limit == 0 {
        return Err(Error::InvalidInput("y_limit must be positive".into()));
    }
    let radicand = arith::pow_minus_one(x, 3);
    let threshold = BigUint::from(5u32) * BigUint::from(x).pow(6u32);
    let limit = BigUint::from(y_limit);
    let scan = scan_cubic(&radicand, y_limit)?;
    let (checked, max_den, smallest, solutions) =
        (scan.checked, scan.max_denominator, scan.smallest_quality_denominator, scan.solutions);

    let exhausted = limit.clone() + 1u32 >= threshold;
    let status = if !solutions.is_empty() {
        Q3Status::SolutionFound
    } else if exhausted {
        Q3Status::NoSolution
    } else {
        Q3Status::Partial
    };
    let note = (!exhausted).then(|| format!("limit below 5X^6 = {threshold}"));
    Ok(Q3Report {
        x,
        radicand,
        y_limit,
        threshold,
        convergents_checked: checked,
        max_denominator: max_den,
        smallest_quality_denominator: smallest,
        solutions,
        exhausted_below_threshold: exhausted,
        status,
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct XyzSolution {
    pub x: u64,
    pub y: u64,
    #[serde(with = "crate::bigstr")]
    pub z: BigUint,
}

/// All `2 <= X <= Y <= y_max`, `X <= x_max`, with `(X^q - 1)(Y^q - 1)` a
/// perfect `q`-th power, sorted by `(X, Y)`.
pub fn brute_search_xyz(q: u64, x_max: u64, y_max: u64) -> Result<Vec<XyzSolution>> {
    if q == 2 || !arith::is_prime(q) {
        return Err(Error::InvalidInput(format!("q must be an odd prime, got {q}")));
    }
    if x_max < 2 || y_max < 2 {
        return Err(Error::InvalidInput("bounds must be at least 2".into()));
    }
    let q32 = q as u32;
    let powers: Vec<BigUint> = (0..=y_max).map(|v| arith::pow_minus_one(v.max(1), q32)).collect();
    let mut found: Vec<XyzSolution> = (2..=y_max)
        .into_par_iter()
        .flat_map_iter(|y| {
            let powers = &powers;
            (2..=y.min(x_max)).filter_map(move |x| {
                let (z, exact) = arith::integer_root(&(&powers[x as usize] * &powers[y as usize]), q32).ok()?;
                exact.then_some(XyzSolution { x, y, z })
            })
        })
        .collect();
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    /// Common quotients of the CFs of `lo` and `hi`, both positive
    /// rationals with `lo < alpha < hi`.
    fn bracket_cf(mut lo: (BigUint, BigUint), mut hi: (BigUint, BigUint)) -> Vec<BigUint> {
        let mut out = Vec::new();
        loop {
            let (a, ra) = lo.0.div_rem(&lo.1);
            let (b, rb) = hi.0.div_rem(&hi.1);
            if a != b || ra.is_zero() || rb.is_zero() {
                return out;
            }
            out.push(a);
            // 1/(x - a) reverses the order.
            let new_lo = (hi.1.clone(), rb);
            let new_hi = (lo.1.clone(), ra);
            lo = new_lo;
            hi = new_hi;
        }
    }

    /// Quotients of `N^(1/q)` read from the dyadic bracket
    /// `[r / 2^m, (r + 1) / 2^m]` with `r = floor(N^(1/q) 2^m)`.
    fn dyadic_oracle(radicand: u64, q: u32, bits: usize) -> Vec<BigUint> {
        let scaled = n(radicand) << (bits * q as usize);
        let (r, _) = arith::integer_root(&scaled, q).unwrap();
        let den = n(1) << bits;
        bracket_cf((r.clone(), den.clone()), (r + 1u32, den))
    }

    #[test]
    fn trivial_expansions() {
        let e = cf_expand(&n(8), 3, 10).unwrap();
        assert_eq!(e.quotients, vec![n(2)]);
        assert!(e.terminated);
        let e = cf_expand(&n(7), 3, 1).unwrap();
        assert_eq!(e.quotients, vec![n(1)]);
        assert!(!e.terminated);
        let e = cf_expand(&n(1), 5, 4).unwrap();
        assert_eq!(e.quotients, vec![n(1)]);
        assert!(cf_expand(&n(0), 3, 4).is_err());
        assert!(cf_expand(&n(7), 1, 4).is_err());
    }

    #[test]
    fn cube_root_of_seven_matches_oracle() {
        // Leading quotients agree with a 200-digit floating expansion.
        let e = cf_expand(&n(7), 3, 8).unwrap();
        assert_eq!(e.quotients, vec![n(1), n(1), n(10), n(2), n(16), n(2), n(1), n(4)]);
        let oracle = dyadic_oracle(7, 3, 700);
        assert!(oracle.len() > 40);
        let long = cf_expand(&n(7), 3, oracle.len()).unwrap();
        assert_eq!(long.quotients, oracle);
    }

    #[test]
    fn square_roots_are_periodic() {
        // sqrt(7) = [2; 1, 1, 1, 4, ...]
        let e = cf_expand(&n(7), 2, 9).unwrap();
        let q: Vec<u64> = e.quotients.iter().map(|x| u64::try_from(x).unwrap()).collect();
        assert_eq!(q, vec![2, 1, 1, 1, 4, 1, 1, 1, 4]);
    }

    #[test]
    fn convergent_examples() {
        let e = CFExpansion { radicand: n(2), degree: 3, quotients: vec![n(1), n(1), n(10)], terminated: false };
        let c = convergents(&e);
        let pairs: Vec<(BigUint, BigUint)> = c.iter().map(|c| (c.h.clone(), c.k.clone())).collect();
        assert_eq!(pairs, vec![(n(1), n(1)), (n(2), n(1)), (n(21), n(11))]);

        let e = cf_expand(&n(8), 3, 5).unwrap();
        let c = convergents(&e);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].h.clone(), c[0].k.clone()), (n(2), n(1)));
        assert!(certify_convergents(&e, &c));

        let e = cf_expand(&n(7), 3, 10).unwrap();
        let c = convergents(&e);
        assert!(c.windows(2).skip(1).all(|w| w[0].k < w[1].k));
        assert!(certify_convergents(&e, &c));
    }

    #[test]
    fn certification_rejects_wrong_quotients() {
        let mut e = cf_expand(&n(7), 3, 6).unwrap();
        e.quotients[2] += 1u32;
        assert!(!certify_convergents(&e, &convergents(&e)));
    }

    #[test]
    fn q3_examples() {
        for x in [2u64, 3] {
            let r = q3_case_check(x, 1_000_000).unwrap();
            assert_eq!(r.status, Q3Status::NoSolution, "X={x}");
            assert!(r.solutions.is_empty());
            assert!(r.convergents_checked > 5);
        }
        let r = q3_case_check(2, 1).unwrap();
        assert_eq!(r.status, Q3Status::Partial);
        assert_eq!(r.threshold, n(320));
        assert_eq!(r.note.as_deref(), Some("limit below 5X^6 = 320"));
        assert!(q3_case_check(1, 10).is_err());
    }

    #[test]
    fn cubic_scan_finds_planted_solutions() {
        // 119^3 = 289 (18^3 - 1), coprime pair.
        let s = scan_cubic(&n(289), 1000).unwrap();
        assert_eq!(s.solutions, vec![(18, 119)]);
        // 238^3 = 2312 (18^3 - 1) with gcd(Y, Z) = 2 and 2^3 | 2312.
        let s = scan_cubic(&n(2312), 1000).unwrap();
        assert_eq!(s.solutions, vec![(18, 238)]);
        assert_eq!(cube_divisors(&n(2312)), vec![1, 2]);
        assert_eq!(cube_divisors(&n(7)), vec![1]);
    }

    #[test]
    fn brute_examples() {
        assert!(brute_search_xyz(3, 200, 200).unwrap().is_empty());
        assert!(brute_search_xyz(5, 100, 100).unwrap().is_empty());
        assert!(brute_search_xyz(7, 50, 50).unwrap().is_empty());
        assert!(brute_search_xyz(4, 10, 10).is_err());
        assert!(brute_search_xyz(3, 1, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn expansion_matches_dyadic_oracle(radicand in 2u64..5000, q in 2u32..8) {
            let e = cf_expand(&n(radicand), q, 400).unwrap();
            let (_, exact) = arith::integer_root(&n(radicand), q).unwrap();
            prop_assert_eq!(e.terminated, exact);
            if !exact {
                let oracle = dyadic_oracle(radicand, q, 256);
                prop_assert!(oracle.len() <= e.quotients.len());
                prop_assert_eq!(&e.quotients[..oracle.len()], &oracle[..]);
                prop_assert!(e.quotients.iter().skip(1).all(|a| !a.is_zero()));
            }
            prop_assert!(certify_convergents(&e, &convergents(&e)));
        }

        #[test]
        fn perfect_powers_terminate(root in 1u64..2000, q in 2u32..7) {
            let e = cf_expand(&n(root).pow(q), q, 10).unwrap();
            prop_assert!(e.terminated);
            prop_assert_eq!(e.quotients, vec![n(root)]);
        }
    }
}
