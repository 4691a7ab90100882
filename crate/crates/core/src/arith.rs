//! Exact integer primitives: p-adic valuations, integer roots, modular
//! exponentiation and the Lifting-the-Exponent rule.
//!
//! Valuations of large powers such as `b^(p-1) - 1` are never materialized;
//! they are read off residues modulo prime powers (see [`fermat_valuation`]).

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the prime-power exponent used when reading valuations
/// off residues.
pub const DEFAULT_VALUATION_CAP: u32 = 64;

/// How a valuation was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationMethod {
    Direct,
    Lte,
}

/// `e = v_p(n)` for some integer `n` identified by the surrounding context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationFact {
    pub p: u64,
    pub e: u32,
    pub method: ValuationMethod,
}

/// Deterministic Miller-Rabin for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes `p <= n`, by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime_after(n: u64) -> u64 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Prime factorization by trial division, primes in increasing order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[inline]
pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exp mod m` on machine words.
pub fn powmod_u64(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut b = base % m;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        exp >>= 1;
    }
    acc
}

/// `base^exp mod m`, result in `[0, m)`. Negative bases are reduced first.
pub fn modpow(base: &BigInt, exp: &BigUint, m: &BigUint) -> Result<BigUint> {
    if m.is_zero() {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    let m_int = BigInt::from_biguint(Sign::Plus, m.clone());
    let reduced = base.mod_floor(&m_int).to_biguint().expect("mod_floor is non-negative");
    Ok(reduced.modpow(exp, m))
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// `v_p(n)`: the largest `e` with `p^e | n`.
pub fn vp(n: &BigInt, p: u64) -> Result<u32> {
    check_prime(p)?;
    if n.is_zero() {
        return Err(Error::ValuationOfZero);
    }
    let p_big = BigUint::from(p);
    let mut m = n.magnitude().clone();
    let mut e = 0;
    loop {
        let (q, r) = m.div_rem(&p_big);
        if !r.is_zero() {
            return Ok(e);
        }
        m = q;
        e += 1;
    }
}

/// [`vp`] on machine words.
pub fn vp_u64(mut n: u64, p: u64) -> Result<u32> {
    check_prime(p)?;
    if n == 0 {
        return Err(Error::ValuationOfZero);
    }
    let mut e = 0;
    while n.is_multiple_of(p) {
        n /= p;
        e += 1;
    }
    Ok(e)
}

fn vp_i128(n: i128, p: u64) -> Result<u32> {
    vp(&BigInt::from(n), p)
}

/// `(floor(n^(1/q)), exact)` where `exact` iff the root is an integer.
pub fn integer_root(n: &BigUint, q: u32) -> Result<(BigUint, bool)> {
    if q == 0 {
        return Err(Error::InvalidInput("root degree must be positive".into()));
    }
    if n.is_zero() {
        return Ok((BigUint::zero(), true));
    }
    let mut r = n.nth_root(q);
    // Newton lands on the floor already; the loops only guard that claim.
    while num_traits::pow(r.clone(), q as usize) > *n {
        r -= 1u32;
    }
    loop {
        let next = &r + 1u32;
        if num_traits::pow(next.clone(), q as usize) <= *n {
            r = next;
        } else {
            break;
        }
    }
    let exact = num_traits::pow(r.clone(), q as usize) == *n;
    Ok((r, exact))
}

/// True iff `n = m^q` for some non-negative integer `m`.
pub fn is_perfect_qth_power(n: &BigUint, q: u32) -> bool {
    integer_root(n, q).map(|(_, exact)| exact).unwrap_or(false)
}

/// `v_p(a^k - b^k)` by the Lifting-the-Exponent rule.
///
/// Requires `p | a - b` and `p ∤ ab`; violations are rejected rather than
/// answered some other way.
pub fn lte_valuation(a: i64, b: i64, p: u64, k: u64) -> Result<u32> {
    check_prime(p)?;
    if k == 0 {
        return Err(Error::InvalidInput("exponent k must be positive".into()));
    }
    let (a_w, b_w, p_w) = (a as i128, b as i128, p as i128);
    if a_w == b_w {
        return Err(Error::LtePrecondition { a, b, p, reason: "a = b" });
    }
    if (a_w - b_w) % p_w != 0 {
        return Err(Error::LtePrecondition { a, b, p, reason: "p does not divide a - b" });
    }
    if a_w % p_w == 0 || b_w % p_w == 0 {
        return Err(Error::LtePrecondition { a, b, p, reason: "p divides ab" });
    }
    let vk = vp_u64(k, p)?;
    if p != 2 {
        return Ok(vp_i128(a_w - b_w, p)? + vk);
    }
    if k % 2 == 1 {
        return vp_i128(a_w - b_w, 2);
    }
    if a_w + b_w == 0 {
        return Err(Error::DegenerateDifference);
    }
    // v2(a^2 - b^2) + v2(k/2)
    Ok(vp_i128(a_w - b_w, 2)? + vp_i128(a_w + b_w, 2)? + vk - 1)
}

/// `v_p(a^k - b^k)` by materializing the difference. Independent of LTE.
pub fn valuation_oracle(a: i64, b: i64, p: u64, k: u32) -> Result<u32> {
    let diff = num_traits::pow(BigInt::from(a), k as usize) - num_traits::pow(BigInt::from(b), k as usize);
    if diff.is_zero() {
        return Err(Error::DegenerateDifference);
    }
    vp(&diff, p)
}

/// Order in which prime-power moduli are tried by [`fermat_valuation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModulusSchedule {
    /// One residue modulo the largest `p^J` below `2^64`, widened to
    /// `p^cap` only when that residue is 1.
    #[default]
    SinglePower,
    /// `p, p^2, p^3, ...` until the residue stops being 1.
    Ladder,
}

/// `v_p(base^(p-1) - 1)` computed from residues modulo powers of `p`.
///
/// Returns 0 when `p | base`. Fails with [`Error::ValuationCapExceeded`]
/// when the valuation is at least `cap`.
pub fn fermat_valuation(base: u64, p: u64, cap: u32, schedule: ModulusSchedule) -> Result<u32> {
    check_prime(p)?;
    if base.is_multiple_of(p) {
        return Ok(0);
    }
    let exceeded = || Error::ValuationCapExceeded { base, p, cap };
    match schedule {
        ModulusSchedule::SinglePower => {
            let mut modulus = p;
            let mut top = 1u32;
            while let Some(next) = modulus.checked_mul(p) {
                modulus = next;
                top += 1;
            }
            let x = powmod_u64(base, p - 1, modulus);
            let v = if x != 1 {
                vp_u64(x - 1, p)?
            } else if top >= cap {
                return Err(exceeded());
            } else {
                let m = num_traits::pow(BigUint::from(p), cap as usize);
                let y = BigUint::from(base).modpow(&BigUint::from(p - 1), &m);
                if y.is_one() {
                    return Err(exceeded());
                }
                vp(&BigInt::from(y - 1u32), p)?
            };
            if v >= cap {
                Err(exceeded())
            } else {
                Ok(v)
            }
        }
        ModulusSchedule::Ladder => {
            let p_big = BigUint::from(p);
            let exp = BigUint::from(p - 1);
            let b = BigUint::from(base);
            let mut m = BigUint::one();
            for j in 1..=cap {
                m *= &p_big;
                if !b.modpow(&exp, &m).is_one() {
                    return Ok(j - 1);
                }
            }
            Err(exceeded())
        }
    }
}

/// `v_p(2^(p-1) - 1)` as a [`ValuationFact`].
pub fn fermat_fact(base: u64, p: u64) -> Result<ValuationFact> {
    Ok(ValuationFact {
        p,
        e: fermat_valuation(base, p, DEFAULT_VALUATION_CAP, ModulusSchedule::SinglePower)?,
        method: ValuationMethod::Direct,
    })
}

/// Exact `x^q - 1` for `x >= 1`.
pub fn pow_minus_one(x: u64, q: u32) -> BigUint {
    num_traits::pow(BigUint::from(x), q as usize) - 1u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn vp_examples() {
        assert_eq!(vp(&big(24), 2).unwrap(), 3);
        assert_eq!(vp(&big(63), 3).unwrap(), 2);
        assert_eq!(vp(&big(7), 5).unwrap(), 0);
        assert_eq!(vp(&big(-24), 2).unwrap(), 3);
    }

    #[test]
    fn vp_errors() {
        assert!(matches!(vp(&big(0), 3), Err(Error::ValuationOfZero)));
        assert!(matches!(vp(&big(12), 4), Err(Error::NotPrime(4))));
        assert!(matches!(vp_u64(0, 2), Err(Error::ValuationOfZero)));
    }

    #[test]
    fn integer_root_examples() {
        let r = |n: u64, q| integer_root(&BigUint::from(n), q).unwrap();
        assert_eq!(r(32, 5), (BigUint::from(2u32), true));
        assert_eq!(r(31, 5), (BigUint::from(1u32), false));
        assert_eq!(r(961, 2), (BigUint::from(31u32), true));
        assert!(integer_root(&BigUint::from(8u32), 0).is_err());
    }

    #[test]
    fn perfect_power_examples() {
        assert!(is_perfect_qth_power(&BigUint::from(243u32), 5));
        assert!(!is_perfect_qth_power(&BigUint::from(31u32 * 31), 5));
        assert!(is_perfect_qth_power(&BigUint::from(1u32), 7));
    }

    #[test]
    fn modpow_examples() {
        let m = BigUint::from(1093u64 * 1093);
        assert!(modpow(&big(2), &BigUint::from(1092u32), &m).unwrap().is_one());
        assert_eq!(modpow(&big(2), &BigUint::from(10u32), &BigUint::from(1000u32)).unwrap(), BigUint::from(24u32));
        assert!(modpow(&big(5), &BigUint::zero(), &BigUint::from(7u32)).unwrap().is_one());
        assert_eq!(modpow(&big(-2), &BigUint::from(3u32), &BigUint::from(7u32)).unwrap(), BigUint::from(6u32));
        assert!(modpow(&big(2), &BigUint::one(), &BigUint::zero()).is_err());
    }

    #[test]
    fn lte_examples() {
        assert_eq!(lte_valuation(4, 1, 3, 3).unwrap(), 2);
        assert_eq!(lte_valuation(3, 1, 2, 4).unwrap(), 4);
        assert_eq!(lte_valuation(5, 1, 2, 3).unwrap(), 2);
    }

    #[test]
    fn lte_rejects_bad_preconditions() {
        assert!(matches!(lte_valuation(5, 1, 3, 2), Err(Error::LtePrecondition { .. })));
        assert!(matches!(lte_valuation(6, 3, 3, 2), Err(Error::LtePrecondition { .. })));
        assert!(matches!(lte_valuation(4, 4, 3, 2), Err(Error::LtePrecondition { .. })));
        assert!(matches!(lte_valuation(4, 1, 6, 2), Err(Error::NotPrime(6))));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(valuation_oracle(4, 1, 3, 3).unwrap(), 2);
        assert_eq!(valuation_oracle(2, 1, 7, 3).unwrap(), 1);
        assert_eq!(valuation_oracle(2, 1, 1093, 1092).unwrap(), 2);
        assert!(matches!(valuation_oracle(3, 3, 2, 5), Err(Error::DegenerateDifference)));
    }

    #[test]
    fn fermat_valuation_wieferich() {
        for schedule in [ModulusSchedule::SinglePower, ModulusSchedule::Ladder] {
            assert_eq!(fermat_valuation(2, 1093, 64, schedule).unwrap(), 2);
            assert_eq!(fermat_valuation(2, 3511, 64, schedule).unwrap(), 2);
            assert_eq!(fermat_valuation(2, 1091, 64, schedule).unwrap(), 1);
            assert_eq!(fermat_valuation(26, 5, 64, schedule).unwrap(), 2);
            assert_eq!(fermat_valuation(15, 5, 64, schedule).unwrap(), 0);
        }
    }

    #[test]
    fn fermat_valuation_cap() {
        // 3^2 - 1 = 8 = 2^3
        assert_eq!(fermat_valuation(3, 2, 64, ModulusSchedule::SinglePower).unwrap(), 1);
        // v_3(10^2 - 1) = 2
        for schedule in [ModulusSchedule::SinglePower, ModulusSchedule::Ladder] {
            assert!(matches!(fermat_valuation(10, 3, 2, schedule), Err(Error::ValuationCapExceeded { .. })));
            assert_eq!(fermat_valuation(10, 3, 3, schedule).unwrap(), 2);
        }
        // v_3(b^2 - 1) = 41 needs the wide path: b = 3^41 + 1 does not fit, so
        // use 3^40 - 1 with v_3 = 40.
        let b = 3u64.pow(40) - 1;
        assert_eq!(fermat_valuation(b, 3, 64, ModulusSchedule::SinglePower).unwrap(), 40);
        assert_eq!(fermat_valuation(b, 3, 64, ModulusSchedule::Ladder).unwrap(), 40);
    }

    #[test]
    fn primes_and_factors() {
        assert_eq!(primes_up_to(20), vec![2, 3, 5, 7, 11, 13, 17, 19]);
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(1), vec![]);
        assert_eq!(next_prime_after(2828), 2833);
        assert!(is_prime(1093) && is_prime(3511) && !is_prime(2829));
        let sieve = primes_up_to(5000);
        for n in 0..5000u64 {
            assert_eq!(is_prime(n), sieve.binary_search(&n).is_ok(), "{n}");
        }
    }

    proptest! {
        #[test]
        fn integer_root_brackets(n in 1u64..u64::MAX, q in 1u32..12) {
            let n = BigUint::from(n);
            let (r, exact) = integer_root(&n, q).unwrap();
            prop_assert!(num_traits::pow(r.clone(), q as usize) <= n);
            prop_assert!(num_traits::pow(&r + 1u32, q as usize) > n);
            prop_assert_eq!(exact, num_traits::pow(r, q as usize) == n);
        }

        #[test]
        fn perfect_powers_detected(m in 1u64..1_000_000, q in 1u32..7) {
            let n = num_traits::pow(BigUint::from(m), q as usize);
            prop_assert!(is_perfect_qth_power(&n, q));
            prop_assert_eq!(integer_root(&n, q).unwrap().0, BigUint::from(m));
        }

        #[test]
        fn vp_additive(n in 1i64..1_000_000, j in 0u32..20, pi in 0usize..6) {
            let p = [2u64, 3, 5, 7, 11, 13][pi];
            let scaled = BigInt::from(n) * num_traits::pow(BigInt::from(p), j as usize);
            prop_assert_eq!(vp(&scaled, p).unwrap(), vp(&big(n), p).unwrap() + j);
        }

        #[test]
        fn modpow_matches_direct(base in 0u64..1000, exp in 0u32..=20, m in 1u64..=1_000_000) {
            let direct = num_traits::pow(BigUint::from(base), exp as usize) % BigUint::from(m);
            let fast = modpow(&BigInt::from(base), &BigUint::from(exp), &BigUint::from(m)).unwrap();
            prop_assert_eq!(&fast, &direct);
            prop_assert_eq!(BigUint::from(powmod_u64(base, exp as u64, m)), direct);
        }

        #[test]
        fn lte_matches_oracle(a in -50i64..=50, t in 1i64..=8, neg in any::<bool>(), pi in 0usize..6, k in 1u32..=200) {
            let p = [2u64, 3, 5, 7, 11, 13][pi];
            let pw = p as i64;
            let b = if neg { a + t * pw } else { a - t * pw };
            prop_assume!(a % pw != 0);
            prop_assume!(!(p == 2 && k % 2 == 0 && a + b == 0));
            let oracle = valuation_oracle(a, b, p, k);
            prop_assume!(oracle.is_ok());
            prop_assert_eq!(lte_valuation(a, b, p, k as u64).unwrap(), oracle.unwrap());
        }

        #[test]
        fn fermat_schedules_agree(base in 2u64..1_000_000, pi in 0usize..40) {
            let p = primes_up_to(200)[pi + 1];
            prop_assert_eq!(
                fermat_valuation(base, p, 64, ModulusSchedule::SinglePower).unwrap(),
                fermat_valuation(base, p, 64, ModulusSchedule::Ladder).unwrap()
            );
        }
    }
}
