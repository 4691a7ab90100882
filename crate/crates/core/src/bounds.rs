//! Valuation feasibility and the prime-induction engine.
//!
//! For a solution of `(2^k - 1)(b^k - 1) = y^q` and any prime `r` dividing
//! `y`, the `r`-adic valuation of the left side must be a positive multiple
//! of `q`. Once `(r - 1) | k` is known, that valuation is an affine function
//! of `m = v_r(k)`, so the admissible `m` form a residue class modulo `q`
//! bounded below. The engine walks the primes `p <= q` in increasing order,
//! proving `(p - 1) | k` from the lower bounds collected so far, and reports
//! whether the walk forces `q | k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{self, ValuationFact, ValuationMethod, DEFAULT_VALUATION_CAP};
use crate::error::{Error, Result};

/// Parameters `(b, q)` with the 2- and 3-adic data every chain needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationInstance {
    b: u64,
    q: u64,
    nu2_b_minus_1: u32,
    nu2_b_plus_1: u32,
    nu3_b2_minus_1: u32,
}

impl EquationInstance {
    /// Rejects even `b`, `b < 3` and `q` that is not an odd prime.
    pub fn new(b: u64, q: u64) -> Result<Self> {
        if b < 3 || b.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("b must be odd and at least 3, got {b}")));
        }
        if q == 2 || !arith::is_prime(q) {
            return Err(Error::InvalidInput(format!("q must be an odd prime, got {q}")));
        }
        let nu2_b_minus_1 = arith::vp_u64(b - 1, 2)?;
        let nu2_b_plus_1 = arith::vp_u64(b + 1, 2)?;
        let nu3_b2_minus_1 = if b.is_multiple_of(3) { 0 } else { arith::vp_u64(b - 1, 3)? + arith::vp_u64(b + 1, 3)? };
        debug_assert_eq!(nu2_b_minus_1.min(nu2_b_plus_1), 1);
        Ok(EquationInstance { b, q, nu2_b_minus_1, nu2_b_plus_1, nu3_b2_minus_1 })
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn nu2_b_minus_1(&self) -> u32 {
        self.nu2_b_minus_1
    }

    pub fn nu2_b_plus_1(&self) -> u32 {
        self.nu2_b_plus_1
    }

    pub fn nu2_b2_minus_1(&self) -> u32 {
        self.nu2_b_minus_1 + self.nu2_b_plus_1
    }

    pub fn nu3_b2_minus_1(&self) -> u32 {
        self.nu3_b2_minus_1
    }

    /// `q > log2(b + 1)`, decided exactly as `b + 1 < 2^q`.
    pub fn above_log_bound(&self) -> bool {
        self.q >= 64 || (self.b + 1) < (1u64 << self.q)
    }

    /// `v_r(2^(r-1) - 1)`.
    pub fn nu_two(&self, r: u64) -> Result<ValuationFact> {
        arith::fermat_fact(2, r)
    }

    /// `v_r(b^(r-1) - 1)`, zero when `r | b`.
    pub fn nu_base(&self, r: u64) -> Result<ValuationFact> {
        let e = arith::fermat_valuation(self.b, r, DEFAULT_VALUATION_CAP, Default::default())?;
        Ok(ValuationFact { p: r, e, method: ValuationMethod::Direct })
    }
}

/// `{ m >= min : m ≡ residue (mod modulus) }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueClass {
    pub modulus: u64,
    pub residue: u64,
    pub min: u64,
}

impl ResidueClass {
    pub fn contains(&self, m: u64) -> bool {
        m >= self.min && m % self.modulus == self.residue
    }
}

/// Admissible values of `v_r(k)`: finitely many isolated members plus one
/// residue class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilitySet {
    pub prime: u64,
    pub isolated: Vec<u64>,
    pub class: ResidueClass,
    pub derivation: String,
}

impl FeasibilitySet {
    pub fn contains(&self, m: u64) -> bool {
        self.isolated.contains(&m) || self.class.contains(m)
    }

    /// Proven lower bound on `v_r(k)`.
    pub fn minimum(&self) -> u64 {
        self.isolated.iter().copied().chain([self.class.min]).min().unwrap()
    }
}

/// Smallest `m >= floor` in the class with `base + coeff*m ≡ 0 (mod q)` and
/// `base + coeff*m >= q`. `coeff` must be invertible modulo `q`.
fn solve_class(base: u64, coeff: u64, q: u64, floor: u64) -> ResidueClass {
    let inv = match coeff {
        1 => 1,
        2 => q.div_ceil(2),
        _ => unreachable!("coefficients are 1 or 2"),
    };
    let residue = ((q - base % q) % q) * inv % q;
    let mut min = if floor <= residue { residue } else { residue + (floor - residue).div_ceil(q) * q };
    while base + coeff * min < q {
        min += q;
    }
    ResidueClass { modulus: q, residue, min }
}

/// Feasible `v_2(k)`.
///
/// Odd `k` gives `v_2(b^k - 1) = v_2(b - 1)`; even `k` gives
/// `v_2(b^2 - 1) + v_2(k) - 1`.
pub fn nu2_feasible(inst: &EquationInstance) -> FeasibilitySet {
    let q = inst.q;
    let odd = inst.nu2_b_minus_1 as u64;
    let odd_ok = odd >= q && odd.is_multiple_of(q);
    let v = inst.nu2_b2_minus_1() as u64;
    let class = solve_class(v - 1, 1, q, 1);
    let derivation = format!(
        "k odd: v2(b-1)={odd} {} a positive multiple of {q}; k even: v2(b^2-1)+j-1 = {v}+j-1 ≡ 0 (mod {q}), >= {q} gives j ≡ {} (mod {q}), j >= {}",
        if odd_ok { "is" } else { "is not" },
        class.residue,
        class.min
    );
    FeasibilitySet { prime: 2, isolated: if odd_ok { vec![0] } else { Vec::new() }, class, derivation }
}

/// Feasible `v_r(k)` for an odd prime `r <= q`, assuming `(r - 1) | k`.
pub fn nur_feasible(inst: &EquationInstance, r: u64) -> Result<FeasibilitySet> {
    if r == 2 || !arith::is_prime(r) {
        return Err(Error::InvalidInput(format!("r must be an odd prime, got {r}")));
    }
    if r > inst.q {
        return Err(Error::InvalidInput(format!("r = {r} exceeds q = {}", inst.q)));
    }
    Ok(feasible_with(inst, r, &inst.nu_two(r)?, &inst.nu_base(r)?))
}

fn feasible_with(inst: &EquationInstance, r: u64, two: &ValuationFact, base: &ValuationFact) -> FeasibilitySet {
    let q = inst.q;
    let (class, derivation) = if inst.b.is_multiple_of(r) {
        let c = two.e as u64;
        let class = solve_class(c, 1, q, 0);
        let text = format!(
            "{r} | b: v{r}(2^{}-1)+m = {c}+m ≡ 0 (mod {q}), >= {q} gives m ≡ {} (mod {q}), m >= {}",
            r - 1,
            class.residue,
            class.min
        );
        (class, text)
    } else {
        let c = two.e as u64 + base.e as u64;
        let class = solve_class(c, 2, q, 0);
        let text = format!(
            "v{r}(2^{r1}-1)+v{r}(b^{r1}-1)+2m = {}+{}+2m ≡ 0 (mod {q}), >= {q} gives m ≡ {} (mod {q}), m >= {}",
            two.e,
            base.e,
            class.residue,
            class.min,
            r1 = r - 1
        );
        (class, text)
    };
    FeasibilitySet { prime: r, isolated: Vec::new(), class, derivation }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    QDividesK,
    Exceptional,
}

/// One prime factor `r^needed` of `p - 1` and the bound available for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverEntry {
    pub r: u64,
    pub needed: u32,
    /// Proven `v_r(k) >=` bound, `None` when `r` never chained.
    pub available: Option<u64>,
}

impl CoverEntry {
    fn covered(&self) -> bool {
        self.available.is_some_and(|m| m >= self.needed as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub prime: u64,
    /// Factorization of `p - 1` against the current bounds.
    pub cover: Vec<CoverEntry>,
    /// Present iff `(p - 1) | k` was established.
    pub feasible: Option<FeasibilitySet>,
    pub nu_two: Option<ValuationFact>,
    pub nu_base: Option<ValuationFact>,
}

impl ChainStep {
    pub fn chained(&self) -> bool {
        self.feasible.is_some()
    }

    pub fn lower_bound(&self) -> Option<u64> {
        self.feasible.as_ref().map(FeasibilitySet::minimum)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blocking {
    pub prime: u64,
    pub constraint: String,
    pub failing: Vec<CoverEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDecision {
    pub b: u64,
    pub q: u64,
    pub verdict: Verdict,
    pub trace: Vec<ChainStep>,
    pub blocking: Option<Blocking>,
}

impl ChainDecision {
    /// Proven lower bound on `v_r(k)` for a chained prime `r`.
    pub fn lower_bound(&self, r: u64) -> Option<u64> {
        self.trace.iter().find(|s| s.prime == r).and_then(ChainStep::lower_bound)
    }
}

/// Runs the induction over all primes `p <= q`.
///
/// `p` is chained when every prime power `r^e || p - 1` has `r` chained
/// with proven `v_r(k) >= e`; chaining then records the feasibility set of
/// `v_p(k)`. Primes are visited once, in increasing order. The verdict is
/// [`Verdict::QDividesK`] iff `q` itself chains with `v_q(k) >= 1`.
pub fn prime_chain_decide(inst: &EquationInstance) -> Result<ChainDecision> {
    let mut bounds: BTreeMap<u64, u64> = BTreeMap::new();
    let mut trace = Vec::new();
    let mut first_unchained: Option<Blocking> = None;

    for p in arith::primes_up_to(inst.q) {
        if p == 2 {
            let set = nu2_feasible(inst);
            bounds.insert(2, set.minimum());
            trace.push(ChainStep { prime: 2, cover: Vec::new(), feasible: Some(set), nu_two: None, nu_base: None });
            continue;
        }
        let cover: Vec<CoverEntry> = arith::factorize(p - 1)
            .into_iter()
            .map(|(r, needed)| CoverEntry { r, needed, available: bounds.get(&r).copied() })
            .collect();
        if cover.iter().all(CoverEntry::covered) {
            let two = inst.nu_two(p)?;
            let base = inst.nu_base(p)?;
            let set = feasible_with(inst, p, &two, &base);
            bounds.insert(p, set.minimum());
            trace.push(ChainStep { prime: p, cover, feasible: Some(set), nu_two: Some(two), nu_base: Some(base) });
        } else {
            if first_unchained.is_none() {
                let failing: Vec<CoverEntry> = cover.iter().filter(|c| !c.covered()).cloned().collect();
                let constraint = failing
                    .iter()
                    .map(|c| match c.available {
                        Some(m) => format!("v{}(k) >= {m} < v{}({}) = {}", c.r, c.r, p - 1, c.needed),
                        None => format!("v{}(k) unconstrained, v{}({}) = {}", c.r, c.r, p - 1, c.needed),
                    })
                    .collect::<Vec<_>>()
                    .join("; ");
                first_unchained = Some(Blocking { prime: p, constraint, failing });
            }
            trace.push(ChainStep { prime: p, cover, feasible: None, nu_two: None, nu_base: None });
        }
    }

    let q = inst.q;
    let verdict = match bounds.get(&q) {
        Some(&m) if m >= 1 => Verdict::QDividesK,
        _ => Verdict::Exceptional,
    };
    let blocking = match verdict {
        Verdict::QDividesK => None,
        Verdict::Exceptional => Some(match bounds.get(&q) {
            Some(_) => Blocking { prime: q, constraint: format!("v{q}(k) = 0 remains feasible"), failing: Vec::new() },
            None => first_unchained.expect("q unchained implies some prime unchained"),
        }),
    };
    Ok(ChainDecision { b: inst.b, q, verdict, trace, blocking })
}

/// Closed-form lower bounds on `v_2(k)` and `v_3(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBounds {
    /// `q - log2(b + 1)`
    pub nu2: f64,
    /// `(q - log3(b + 1) - 1) / 2`
    pub nu3: f64,
}

/// `None` when `q <= log2(b + 1)`, where the bounds say nothing.
pub fn lemma2_log_bounds(inst: &EquationInstance) -> Option<LogBounds> {
    if !inst.above_log_bound() {
        return None;
    }
    let q = inst.q as f64;
    let b1 = (inst.b + 1) as f64;
    Some(LogBounds { nu2: q - b1.log2(), nu3: (q - b1.ln() / 3f64.ln() - 1.0) / 2.0 })
}

/// Smallest prime `q` with `q > 2 sqrt(2b)`, i.e. `q^2 > 8b`.
pub fn theorem1_threshold(b: u64) -> Result<u64> {
    if b < 3 || b.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("b must be odd and at least 3, got {b}")));
    }
    let mut q = (8 * b).isqrt();
    while q * q <= 8 * b || !arith::is_prime(q) {
        q += 1;
    }
    Ok(q)
}
