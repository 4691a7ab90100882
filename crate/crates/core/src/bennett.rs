//! Effective irrationality measures for `(1 + 1/A)^(1/k)` and the
//! upper/lower bound contradiction for `(X^q - 1)(Y^q - 1) = Z^q`.
//!
//! With `A = X^q - 1`, `B = Y^q - 1` and `XY = Z + t`, expanding
//! `((AB)^(1/q) + t)^q = (A + 1)(B + 1)` gives `B > q^q A^(q-1) t^q`, while
//! the approximation `|(1 + 1/A)^(1/q) - XY/Z| < 2A / (q Z^q)` against the
//! irrationality measure `lambda` gives
//! `B^(q - lambda) < 16^q mu_q^q A^(q + lambda)`. When the second bound sits
//! below the first there is no solution for that `(X, q)`.
//!
//! Every real comparison here is made on outward-rounded intervals; the
//! working precision doubles until the intervals separate or the cap is hit.

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::interval::{Interval, RealWithError};

/// Decimal digits used when serializing enclosures.
pub const REPORT_DIGITS: u32 = 30;

/// `|31^(1/5) - Z/Y| > 0.01 / Y^2.83`, Bennett's effective bound for the
/// fifth root of 31. Stored as exact ratios.
pub const Q5_X2_CONSTANT: (u64, u64) = (1, 100);
pub const Q5_X2_EXPONENT: (u64, u64) = (283, 100);
/// Largest `Y` the published argument leaves for `31(Y^5 - 1) = Z^5`.
pub const Q5_X2_PUBLISHED_Y_BOUND: u64 = 6;

/// Published bounds on lambda: `< 3.15` for `q >= 7`, `< 2.8` for `q = 5, X >= 3`.
pub const LAMBDA_BOUND_Q7: (u64, u64) = (315, 100);
pub const LAMBDA_BOUND_Q5: (u64, u64) = (28, 10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub start_bits: u32,
    pub cap_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { start_bits: 128, cap_bits: 4096 }
    }
}

impl PrecisionPolicy {
    pub fn with_cap(cap_bits: u32) -> Self {
        PrecisionPolicy { start_bits: 128.min(cap_bits), cap_bits }
    }

    fn ladder(&self) -> impl Iterator<Item = u32> {
        let cap = self.cap_bits;
        std::iter::successors(Some(self.start_bits.min(cap).max(1)), move |&p| (p < cap).then(|| (p * 2).min(cap)))
    }

    /// First `Some` produced while doubling the precision.
    pub fn decide<T>(&self, what: impl FnOnce() -> String, mut f: impl FnMut(u32) -> Option<T>) -> Result<T> {
        for prec in self.ladder() {
            if let Some(v) = f(prec) {
                return Ok(v);
            }
        }
        Err(Error::PrecisionExhausted { what: what(), cap_bits: self.cap_bits })
    }
}

fn ln_int(n: impl Into<BigInt>, prec: u32) -> Interval {
    Interval::from_int(n, prec).ln().expect("positive integer")
}

fn distinct_primes(k: u64) -> Vec<u64> {
    arith::factorize(k).into_iter().map(|(p, _)| p).collect()
}

/// `ln mu_k = sum over p | k of ln(p) / (p - 1)`.
pub fn ln_mu(k: u64, prec: u32) -> Interval {
    distinct_primes(k).into_iter().fold(Interval::from_int(0, prec), |acc, p| acc.add(&ln_int(p, prec).div_int(p - 1)))
}

/// `mu_k = prod over p | k of p^(1/(p-1))`.
pub fn mu(k: u64, prec: u32) -> Result<Interval> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("mu needs k >= 2, got {k}")));
    }
    Ok(ln_mu(k, prec).exp())
}

/// `ln(k mu_k)`.
fn ln_k_mu(k: u64, prec: u32) -> Interval {
    ln_int(k, prec).add(&ln_mu(k, prec))
}

/// `(sqrt(A) + sqrt(A + 1))^2 = 2A + 1 + 2 sqrt(A(A + 1))`.
pub fn surd_square(a: &BigUint, prec: u32) -> Interval {
    let a = BigInt::from(a.clone());
    let root = Interval::from_int(&a * (&a + 1), prec).sqrt().expect("non-negative");
    Interval::from_int(2 * &a + 1, prec).add(&root.mul_int(2))
}

fn check_condition_args(a: &BigUint, k: u64) -> Result<()> {
    if a == &BigUint::from(0u32) {
        return Err(Error::InvalidInput("A must be positive".into()));
    }
    if k < 3 {
        return Err(Error::InvalidInput(format!("k must be at least 3, got {k}")));
    }
    Ok(())
}

/// `(sqrt(A) + sqrt(A + 1))^(2(k - 2)) > (k mu_k)^k`, decided in log form.
pub fn condition_k_k(a: &BigUint, k: u64, policy: &PrecisionPolicy) -> Result<bool> {
    check_condition_args(a, k)?;
    policy.decide(
        || format!("condition for A={a}, k={k}"),
        |prec| {
            let lhs = surd_square(a, prec).ln().expect("positive").mul_int(k - 2);
            let rhs = ln_k_mu(k, prec).mul_int(k);
            lhs.gt(&rhs)
        },
    )
}

/// `lambda = 1 + ln(k mu_k S) / ln(S / (k mu_k))` with `S` from [`surd_square`],
/// at a fixed precision. `None` when `S <= k mu_k` cannot be excluded.
pub fn lambda_at(a: &BigUint, k: u64, prec: u32) -> Option<Interval> {
    let s = surd_square(a, prec).ln()?;
    let l = ln_k_mu(k, prec);
    let ratio = s.add(&l).div(&s.sub(&l))?;
    Some(ratio.add(&Interval::from_int(1, prec)))
}

/// Certified lambda. Requires the condition to hold and fails loudly if
/// `lambda < k` cannot be confirmed.
pub fn lambda_measure(a: &BigUint, k: u64, policy: &PrecisionPolicy) -> Result<Interval> {
    if !condition_k_k(a, k, policy)? {
        return Err(Error::InvalidInput(format!("condition fails for A={a}, k={k}; lambda is not defined")));
    }
    let (lambda, below) = policy.decide(
        || format!("lambda < k for A={a}, k={k}"),
        |prec| {
            let lambda = lambda_at(a, k, prec)?;
            let below = lambda.lt(&Interval::from_int(k, prec))?;
            Some((lambda, below))
        },
    )?;
    if !below {
        return Err(Error::ClaimMismatch(format!("lambda >= k for A={a}, k={k}")));
    }
    Ok(lambda)
}

/// `q^q A^(q-1) t^q`, exact.
pub fn b_lower_bound(a: &BigUint, t: &BigUint, q: u64) -> BigUint {
    let qq = num_traits::pow(BigUint::from(q), q as usize);
    qq * num_traits::pow(a.clone(), (q - 1) as usize) * num_traits::pow(t.clone(), q as usize)
}

fn check_odd_prime(q: u64) -> Result<()> {
    if q == 2 || !arith::is_prime(q) {
        return Err(Error::InvalidInput(format!("q must be an odd prime, got {q}")));
    }
    Ok(())
}

/// `ln` of the upper bound `(16^q mu_q^q A^(q + lambda))^(1/(q - lambda))`
/// on `B`, at the precision of `lambda`.
pub fn b_upper_bound_ln(a: &BigUint, q: u64, lambda: &Interval) -> Result<Interval> {
    check_odd_prime(q)?;
    if q == 3 {
        return Err(Error::InvalidInput("q = 3 is handled by the continued-fraction path".into()));
    }
    let prec = lambda.prec();
    let qi = Interval::from_int(q, prec);
    if qi.gt(lambda) != Some(true) {
        return Err(Error::InvalidInput(format!("lambda is not certified below q = {q}")));
    }
    let ln_a = ln_int(a.clone(), prec);
    let numerator = ln_int(16, prec).mul_int(q).add(&ln_mu(q, prec).mul_int(q)).add(&qi.add(lambda).mul(&ln_a));
    Ok(numerator.div(&qi.sub(lambda)).expect("q - lambda > 0"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertVerdict {
    NoSolution,
    Inconclusive,
}

/// Outcome of comparing a computed quantity against a published constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedCheck {
    pub claim: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BennettCertificate {
    pub x: u64,
    pub q: u64,
    #[serde(with = "crate::bigstr")]
    pub a: BigUint,
    pub mu_q: RealWithError,
    pub condition_ok: bool,
    pub lambda: Option<RealWithError>,
    pub lambda_below_q: Option<bool>,
    /// `lambda < 3.15` (q >= 7) or `lambda < 2.8` (q = 5, X >= 3).
    pub lambda_published: Option<PublishedCheck>,
    /// `ln(q^q A^(q-1))`, the lower bound on `ln B` at `t = 1`.
    pub ln_b_lower: RealWithError,
    pub ln_b_upper: Option<RealWithError>,
    /// Computed upper bound against `300 A^2.7` / `1400 A^3.6`.
    pub upper_shape_published: Option<PublishedCheck>,
    pub verdict: CertVerdict,
    pub precision_bits: u32,
}

impl BennettCertificate {
    /// True when every published claim attached to this cell holds.
    pub fn consistent_with_published(&self) -> bool {
        self.verdict == CertVerdict::NoSolution
            && self.lambda_below_q != Some(false)
            && self.lambda_published.as_ref().is_none_or(|c| c.holds)
            && self.upper_shape_published.as_ref().is_none_or(|c| c.holds)
    }
}

fn published_lambda_bound(x: u64, q: u64) -> Option<(u64, u64)> {
    match (x, q) {
        (_, q) if q >= 7 => Some(LAMBDA_BOUND_Q7),
        (x, 5) if x >= 3 => Some(LAMBDA_BOUND_Q5),
        _ => None,
    }
}

/// `(C, e)` for the published shape `B < C A^e`.
fn published_shape(x: u64, q: u64) -> Option<(u64, (u64, u64))> {
    match (x, q) {
        (_, q) if q >= 7 => Some((300, (27, 10))),
        (x, 5) if x >= 3 => Some((1400, (36, 10))),
        _ => None,
    }
}

/// Certifies (or fails to certify) that no `Y` solves the equation for the
/// given `(X, q)`, `q >= 5`. The pair `(2, 5)` is routed to
/// [`special_q5_x2`] and `q = 3` to the continued-fraction module.
pub fn contradiction_check(x: u64, q: u64, policy: &PrecisionPolicy) -> Result<BennettCertificate> {
    check_odd_prime(q)?;
    if x < 2 {
        return Err(Error::InvalidInput(format!("X must be at least 2, got {x}")));
    }
    if q == 3 {
        return Err(Error::InvalidInput("q = 3 is handled by the continued-fraction path".into()));
    }
    if (x, q) == (2, 5) {
        return Err(Error::InvalidInput("(X, q) = (2, 5) is handled by special_q5_x2".into()));
    }
    let a = arith::pow_minus_one(x, q as u32);
    let condition_ok = condition_k_k(&a, q, policy)?;
    let lower = b_lower_bound(&a, &BigUint::from(1u32), q);

    if !condition_ok {
        let prec = policy.start_bits;
        return Ok(BennettCertificate {
            x,
            q,
            mu_q: mu(q, prec)?.to_real(REPORT_DIGITS),
            condition_ok,
            lambda: None,
            lambda_below_q: None,
            lambda_published: None,
            ln_b_lower: ln_int(lower, prec).to_real(REPORT_DIGITS),
            ln_b_upper: None,
            upper_shape_published: None,
            verdict: CertVerdict::Inconclusive,
            precision_bits: prec,
            a,
        });
    }

    let lambda_bound = published_lambda_bound(x, q);
    let shape = published_shape(x, q);
    let lower_big = BigInt::from(lower);

    // All comparisons attached to the certificate are decided at one
    // precision so the reported enclosures are mutually consistent.
    let outcome = policy.decide(
        || format!("contradiction check for X={x}, q={q}"),
        |prec| {
            let lambda = lambda_at(&a, q, prec)?;
            let below_q = lambda.lt(&Interval::from_int(q, prec))?;
            if !below_q {
                return Some((prec, lambda, false, None, None, None, CertVerdict::Inconclusive));
            }
            let ln_upper = b_upper_bound_ln(&a, q, &lambda).ok()?;
            let ln_lower = ln_int(lower_big.clone(), prec);
            let verdict = match ln_upper.lt(&ln_lower)? {
                true => CertVerdict::NoSolution,
                false => CertVerdict::Inconclusive,
            };
            let lambda_pub = match lambda_bound {
                Some((n, d)) => Some(lambda.lt(&Interval::from_ratio(n, d, prec))?),
                None => None,
            };
            let shape_pub = match shape {
                Some((c, (n, d))) => {
                    let ln_a = ln_int(a.clone(), prec);
                    let bound = ln_int(c, prec).add(&ln_a.mul(&Interval::from_ratio(n, d, prec)));
                    Some(ln_upper.lt(&bound)?)
                }
                None => None,
            };
            Some((prec, lambda, true, Some(ln_upper), lambda_pub, shape_pub, verdict))
        },
    )?;
    let (prec, lambda, below_q, ln_upper, lambda_pub, shape_pub, verdict) = outcome;

    Ok(BennettCertificate {
        x,
        q,
        mu_q: mu(q, prec)?.to_real(REPORT_DIGITS),
        condition_ok,
        lambda: Some(lambda.to_real(REPORT_DIGITS)),
        lambda_below_q: Some(below_q),
        lambda_published: lambda_pub
            .map(|holds| PublishedCheck { claim: format!("lambda < {}", fmt_ratio(lambda_bound.unwrap())), holds }),
        ln_b_lower: ln_int(lower_big, prec).to_real(REPORT_DIGITS),
        ln_b_upper: ln_upper.map(|u| u.to_real(REPORT_DIGITS)),
        upper_shape_published: shape_pub.map(|holds| {
            let (c, e) = shape.unwrap();
            PublishedCheck { claim: format!("B < {c} A^{}", fmt_ratio(e)), holds }
        }),
        verdict,
        precision_bits: prec,
        a,
    })
}

fn fmt_ratio((n, d): (u64, u64)) -> String {
    if d == 1 {
        return n.to_string();
    }
    let digits = (d as f64).log10().round() as usize;
    format!("{:.*}", digits, n as f64 / d as f64)
}

/// One cell of a condition / lambda grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionCell {
    pub x: u64,
    pub q: u64,
    pub condition_ok: bool,
}

/// Condition flags over `xs × qs`, ordered by `(q, X)`.
pub fn condition_grid(xs: &[u64], qs: &[u64], policy: &PrecisionPolicy) -> Result<Vec<ConditionCell>> {
    let cells: Vec<(u64, u64)> = qs.iter().flat_map(|&q| xs.iter().map(move |&x| (q, x))).collect();
    cells
        .par_iter()
        .map(|&(q, x)| {
            let a = arith::pow_minus_one(x, q as u32);
            Ok(ConditionCell { x, q, condition_ok: condition_k_k(&a, q, policy)? })
        })
        .collect()
}

/// Certificates over `xs × qs`, ordered by `(q, X)`; cells routed elsewhere
/// (`q = 3`, `(2, 5)`) are skipped.
pub fn certificate_grid(xs: &[u64], qs: &[u64], policy: &PrecisionPolicy) -> Result<Vec<BennettCertificate>> {
    let cells: Vec<(u64, u64)> =
        qs.iter().flat_map(|&q| xs.iter().map(move |&x| (q, x))).filter(|&(q, x)| q != 3 && (x, q) != (2, 5)).collect();
    cells.par_iter().map(|&(q, x)| contradiction_check(x, q, policy)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerCheck {
    pub y: u64,
    #[serde(with = "crate::bigstr")]
    pub value: BigUint,
    #[serde(with = "crate::bigstr")]
    pub fifth_root_floor: BigUint,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialCaseReport {
    /// Largest `Y` compatible with both approximation bounds.
    pub y_max: u64,
    pub published_y_bound: u64,
    pub checks: Vec<PowerCheck>,
    pub verdict: CertVerdict,
}

/// `(X, q) = (2, 5)`: `31(Y^5 - 1) = Z^5`.
///
/// `|31^(1/5) - Z/Y| < 31^(1/5) / (5 Y^5)` meets the effective lower bound
/// `0.01 / Y^2.83` only while `Y^2.17 < 20 * 31^(1/5)`. The surviving `Y`
/// are then checked exactly.
pub fn special_q5_x2(policy: &PrecisionPolicy) -> Result<SpecialCaseReport> {
    let (cn, cd) = Q5_X2_CONSTANT;
    let (en, ed) = Q5_X2_EXPONENT;
    let mut y_max = 1u64;
    for y in 2u64.. {
        let possible = policy.decide(
            || format!("approximation window at Y={y}"),
            |prec| {
                // ln(c) - e ln Y < ln(31)/5 - ln 5 - 5 ln Y
                let ln_y = ln_int(y, prec);
                let lhs = Interval::from_ratio(cn, cd, prec).ln()?.sub(&ln_y.mul(&Interval::from_ratio(en, ed, prec)));
                let rhs = ln_int(31, prec).div_int(5).sub(&ln_int(5, prec)).sub(&ln_y.mul_int(5));
                lhs.lt(&rhs)
            },
        )?;
        if !possible {
            break;
        }
        y_max = y;
    }
    if y_max > Q5_X2_PUBLISHED_Y_BOUND {
        return Err(Error::ClaimMismatch(format!(
            "derived Y <= {y_max} exceeds the published Y <= {Q5_X2_PUBLISHED_Y_BOUND}"
        )));
    }
    let checks: Vec<PowerCheck> = (2..=Q5_X2_PUBLISHED_Y_BOUND)
        .map(|y| {
            let value = arith::pow_minus_one(y, 5) * 31u32;
            let (root, exact) = arith::integer_root(&value, 5).expect("degree 5");
            PowerCheck { y, value, fifth_root_floor: root, exact }
        })
        .collect();
    let verdict = if checks.iter().any(|c| c.exact) { CertVerdict::Inconclusive } else { CertVerdict::NoSolution };
    Ok(SpecialCaseReport { y_max, published_y_bound: Q5_X2_PUBLISHED_Y_BOUND, checks, verdict })
}
