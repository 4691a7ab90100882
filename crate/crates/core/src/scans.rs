//! Batch pipelines: the exceptional-pair table, the Wieferich and
//! Fermat-quotient scans, the small-`b` resolutions and direct search.
//!
//! Workers are pure; every scan merges in canonical order so results do
//! not depend on job or shard counts.

use std::path::Path;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, ModulusSchedule, DEFAULT_VALUATION_CAP};
use crate::bounds::{self, Blocking, EquationInstance, FeasibilitySet, Verdict};
use crate::checkpoint::CheckpointFile;
use crate::error::{Error, Result};
use crate::pool;

/// Largest `v_p(b^(p-1) - 1)` the published search allows.
pub const FERMAT_QUOTIENT_BOUND: u32 = 11;

/// Range of the published Wieferich statement: `p < 2828`.
pub const WIEFERICH_RANGE: u64 = 2828;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub jobs: usize,
    /// Number of contiguous ranges each unit of work is cut into.
    pub shards: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { jobs: 1, shards: 16 }
    }
}

fn shard_ranges(len: usize, shards: usize) -> Vec<std::ops::Range<usize>> {
    let shards = shards.clamp(1, len.max(1));
    let step = len.div_ceil(shards);
    (0..shards).map(|i| (i * step).min(len)..((i + 1) * step).min(len)).filter(|r| !r.is_empty()).collect()
}

fn check_odd_primes(q_set: &[u64]) -> Result<Vec<u64>> {
    let mut qs = q_set.to_vec();
    if let Some(&bad) = qs.iter().find(|&&q| q == 2 || !arith::is_prime(q)) {
        return Err(Error::InvalidInput(format!("q must be an odd prime, got {bad}")));
    }
    qs.sort_unstable();
    qs.dedup();
    Ok(qs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalPair {
    pub q: u64,
    pub b: u64,
    pub blocking: Blocking,
}

/// Exclusive upper end of the odd `b` with `b + 1 < 2^q`.
fn log_region_end(q: u64) -> u64 {
    if q >= 63 {
        u64::MAX
    } else {
        (1u64 << q) - 1
    }
}

/// Every odd `b` in `[3, b_max)` and `q` in `q_set` with `q > log2(b + 1)`
/// for which the prime chain does not force `q | k`, ordered by `(q, b)`.
pub fn theorem2_scan(
    b_max: u64,
    q_set: &[u64],
    cfg: ScanConfig,
    checkpoint: Option<&Path>,
) -> Result<Vec<ExceptionalPair>> {
    if b_max < 3 {
        return Err(Error::InvalidInput(format!("b_max must be at least 3, got {b_max}")));
    }
    let qs = check_odd_primes(q_set)?;
    let mut ckpt = CheckpointFile::<Vec<ExceptionalPair>>::open(checkpoint, "scan", &(b_max, &qs))?;
    let mut out = Vec::new();
    for &q in &qs {
        if let Some(done) = ckpt.get(q) {
            out.extend(done.iter().cloned());
            continue;
        }
        let end = b_max.min(log_region_end(q));
        let bs: Vec<u64> = (3..end).step_by(2).collect();
        let found = pool::with_jobs(cfg.jobs, || {
            shard_ranges(bs.len(), cfg.shards)
                .into_par_iter()
                .map(|range| {
                    let mut part = Vec::new();
                    for &b in &bs[range] {
                        let d = bounds::prime_chain_decide(&EquationInstance::new(b, q)?)?;
                        if d.verdict == Verdict::Exceptional {
                            part.push(ExceptionalPair { q, b, blocking: d.blocking.expect("exceptional") });
                        }
                    }
                    Ok(part)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let found: Vec<ExceptionalPair> = found.into_iter().flatten().collect();
        ckpt.complete(q, found.clone())?;
        out.extend(found);
    }
    Ok(out)
}

/// The published table of unresolved `(q, b)` with `b < 10^6`, by `(q, b)`.
pub fn published_table() -> Vec<(u64, u64)> {
    let mut t = vec![(5, 15), (5, 17), (11, 1023), (11, 1025), (13, 4095), (13, 4097)];
    for s in 1..=7u64 {
        t.push((17, s * (1 << 14) - 1));
        t.push((17, s * (1 << 14) + 1));
    }
    t.sort_unstable();
    t
}

/// The hand argument for a single `q` in `{3, 5, 7, 11, 13, 17, 19}`:
/// whether `(q, b)` stays unresolved, or `None` for other `q`.
///
/// For `q = 5, 11, 13`, `q - 1 = 2 m` with the odd part of `q - 1` already
/// forced, so `v_2(k) = 1` and the total `v_2(b^2 - 1)` must be a multiple
/// of `q`. For `q = 17`, `16 | k` would force `17 | k`, leaving
/// `1 <= v_2(k) <= 3` and `15 <= v_2(b^2 - 1) <= 17`.
pub fn hand_argument_exceptional(q: u64, b: u64) -> Option<bool> {
    let nu = arith::vp_u64(b * b - 1, 2).ok()?;
    match q {
        3 | 7 | 19 => Some(false),
        5 | 11 | 13 => Some((nu as u64).is_multiple_of(q)),
        17 => Some((15..=17).contains(&nu)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WieferichHit {
    pub p: u64,
    pub e: u32,
}

/// Odd primes `p < p_max` with `v_p(2^(p-1) - 1) >= 2`.
pub fn wieferich_scan(p_max: u64, schedule: ModulusSchedule, cfg: ScanConfig) -> Result<Vec<WieferichHit>> {
    if p_max < 3 {
        return Err(Error::InvalidInput(format!("p_max must be at least 3, got {p_max}")));
    }
    let primes: Vec<u64> = arith::primes_up_to(p_max - 1).into_iter().filter(|&p| p > 2).collect();
    let hits = pool::with_jobs(cfg.jobs, || {
        primes
            .par_iter()
            .map(|&p| arith::fermat_valuation(2, p, DEFAULT_VALUATION_CAP, schedule).map(|e| WieferichHit { p, e }))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(hits.into_iter().filter(|h| h.e >= 2).collect())
}

/// Teichmüller-type lifts: the `p - 1` roots of `x^(p-1) = 1` modulo `p^j`,
/// indexed by their residue modulo `p`.
#[derive(Debug, Clone)]
struct Lifts {
    p: u64,
    level: u32,
    modulus: u64,
    roots: Vec<u64>,
}

impl Lifts {
    fn new(p: u64) -> Self {
        Lifts { p, level: 1, modulus: p, roots: (1..p).collect() }
    }

    /// `w_(j+1) = w_j^p mod p^(j+1)`; `None` once `p^(j+1)` leaves 64 bits.
    fn next(&self) -> Option<Lifts> {
        let modulus = self.modulus.checked_mul(self.p)?;
        let roots = self.roots.iter().map(|&w| arith::powmod_u64(w, self.p, modulus)).collect();
        Some(Lifts { p: self.p, level: self.level + 1, modulus, roots })
    }

    /// Smallest odd `b >= 3` congruent to `root` modulo `p^j`.
    fn first_odd(&self, root: u64) -> u64 {
        let m = self.modulus;
        let r = if root % 2 == 1 { root } else { root.saturating_add(m) };
        if r < 3 {
            r.saturating_add(m.saturating_mul(2))
        } else {
            r
        }
    }

    fn any_below(&self, b_max: u64) -> bool {
        self.roots.iter().any(|&w| self.first_odd(w) < b_max)
    }

    /// All odd `b` in `[3, b_max)` with `v_p(b^(p-1) - 1) >= level`, sorted.
    fn members(&self, b_max: u64) -> Vec<u64> {
        let step = self.modulus.saturating_mul(2);
        let mut out: Vec<u64> = self
            .roots
            .iter()
            .flat_map(|&w| {
                let start = self.first_odd(w);
                std::iter::successors(Some(start), move |&b| b.checked_add(step)).take_while(move |&b| b < b_max)
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// `v_p(b^(p-1) - 1)` from the lifts alone: the level `j` at which `b`
/// stops matching `(b mod p)^(p^(j-1)) mod p^j`. Zero when `p | b`.
pub fn fermat_valuation_by_lifts(b: u64, p: u64, cap: u32) -> Result<u32> {
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if b.is_multiple_of(p) {
        return Ok(0);
    }
    let mut lift = b % p;
    let mut modulus = p;
    let mut level = 1u32;
    loop {
        if level >= cap {
            return Err(Error::ValuationCapExceeded { base: b, p, cap });
        }
        let Some(next) = modulus.checked_mul(p) else {
            return Err(Error::ValuationCapExceeded { base: b, p, cap: level + 1 });
        };
        lift = arith::powmod_u64(lift, p, next);
        if b % next != lift {
            return Ok(level);
        }
        modulus = next;
        level += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeSummary {
    pub p: u64,
    /// Largest `v_p(b^(p-1) - 1)` over the `b` range; 0 if the range has
    /// no `b` prime to `p`.
    pub max_valuation: u32,
    /// Every `b` attaining it, increasing.
    pub witnesses: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FermatWitness {
    pub b: u64,
    pub p: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FermatScan {
    pub b_max: u64,
    pub p_max: u64,
    pub max_valuation: u32,
    /// All `(b, p)` attaining the maximum, ordered by `(b, p)`.
    pub witnesses: Vec<FermatWitness>,
    pub per_prime: Vec<PrimeSummary>,
}

fn prime_summary(p: u64, b_max: u64, cap: u32) -> Result<PrimeSummary> {
    let mut lifts = Lifts::new(p);
    if !lifts.any_below(b_max) {
        return Ok(PrimeSummary { p, max_valuation: 0, witnesses: Vec::new() });
    }
    loop {
        if lifts.level >= cap {
            return Err(Error::ValuationCapExceeded { base: lifts.members(b_max)[0], p, cap });
        }
        let next = lifts.next().ok_or(Error::ValuationCapExceeded {
            base: lifts.members(b_max)[0],
            p,
            cap: lifts.level + 1,
        })?;
        if !next.any_below(b_max) {
            break;
        }
        lifts = next;
    }
    Ok(PrimeSummary { p, max_valuation: lifts.level, witnesses: lifts.members(b_max) })
}

/// Primes handled between two checkpoint writes.
const FERMAT_BATCH: usize = 32;

/// Maximum of `v_p(b^(p-1) - 1)` over odd `b` in `[3, b_max)` and odd primes
/// `p` in `[3, p_max)` with `p` not dividing `b`.
///
/// For each `p` the `b` reaching level `j` are exactly those congruent to
/// one of the `p - 1` lifts modulo `p^j`, so levels are climbed on residues
/// and only the top level is enumerated.
pub fn fermat_quotient_scan(b_max: u64, p_max: u64, cfg: ScanConfig, checkpoint: Option<&Path>) -> Result<FermatScan> {
    if b_max < 3 || p_max < 3 {
        return Err(Error::InvalidInput(format!("ranges must be at least 3, got b_max={b_max}, p_max={p_max}")));
    }
    let primes: Vec<u64> = arith::primes_up_to(p_max - 1).into_iter().filter(|&p| p > 2).collect();
    let mut ckpt = CheckpointFile::<PrimeSummary>::open(checkpoint, "fermatq", &(b_max, p_max))?;
    let mut per_prime = Vec::with_capacity(primes.len());
    for batch in primes.chunks(FERMAT_BATCH) {
        let todo: Vec<u64> = batch.iter().copied().filter(|&p| ckpt.get(p).is_none()).collect();
        let fresh = pool::with_jobs(cfg.jobs, || {
            todo.par_iter().map(|&p| prime_summary(p, b_max, DEFAULT_VALUATION_CAP)).collect::<Result<Vec<_>>>()
        })?;
        if !fresh.is_empty() {
            ckpt.complete_many(fresh.into_iter().map(|s| (s.p, s)))?;
        }
        per_prime.extend(batch.iter().map(|p| ckpt.get(*p).expect("completed").clone()));
    }
    let max_valuation = per_prime.iter().map(|s| s.max_valuation).max().unwrap_or(0);
    let mut witnesses: Vec<FermatWitness> = per_prime
        .iter()
        .filter(|s| s.max_valuation == max_valuation && max_valuation > 0)
        .flat_map(|s| s.witnesses.iter().map(move |&b| FermatWitness { b, p: s.p }))
        .collect();
    witnesses.sort_by_key(|w| (w.b, w.p));
    Ok(FermatScan { b_max, p_max, max_valuation, witnesses, per_prime })
}

/// The small `b` resolved individually.
pub const RESOLVED_B: [u64; 8] = [5, 7, 11, 13, 21, 23, 27, 29];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nu3Branch {
    /// `3 | b - 1`: `v_3(b^k - 1) = v_3(b - 1) + v_3(k)`.
    BMinusOne,
    /// `3 | b + 1`: `v_3(b^k - 1) = v_3(b^2 - 1) + v_3(k)` for even `k`.
    BPlusOne,
    /// `3 | b`: `v_3(b^k - 1) = 0`.
    DividesB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    NoSolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeQCheck {
    pub q: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub b: u64,
    /// `floor(log2(b + 1))`.
    pub log2_floor: u32,
    /// Odd primes `q` with `log2(b + 1) < q <` the large-exponent threshold,
    /// each run through the prime chain.
    pub chain_checks: Vec<LargeQCheck>,
    pub large_q_threshold: u64,
    /// Odd primes `q <= log2(b + 1)` left for the direct argument.
    pub remaining_q: Vec<u64>,
    pub nu2: Option<FeasibilitySet>,
    pub nu3_branch: Option<Nu3Branch>,
    /// `v_3` of the left side as an affine function of `m = v_3(k)`.
    pub nu3_total: Option<String>,
    pub nu3: Option<FeasibilitySet>,
    pub three_divides_k: bool,
    /// Direct search at exponent 2, which the argument above does not cover.
    /// Non-empty for `b = 7`: `(2^2 - 1)(7^2 - 1) = 12^2`.
    pub square_case: Vec<EquationSolution>,
    pub square_case_k_max: u64,
    pub trace: Vec<String>,
    /// Outcome for odd prime exponents.
    pub resolution: Resolution,
}

/// Exponents up to which the square case is searched directly.
pub const SQUARE_CASE_K_MAX: u64 = 60;

/// Replays the resolution of `(2^k - 1)(b^k - 1) = y^q` for `b` in
/// [`RESOLVED_B`].
pub fn theorem3_check(b: u64) -> Result<Theorem3Report> {
    if !RESOLVED_B.contains(&b) {
        return Err(Error::InvalidInput(format!("b must be one of {RESOLVED_B:?}, got {b}")));
    }
    let mut trace = Vec::new();
    let log2_floor = (b + 1).ilog2();
    let threshold = bounds::theorem1_threshold(b)?;
    let mut chain_checks = Vec::new();
    for q in arith::primes_up_to(threshold - 1).into_iter().filter(|&q| q > 2) {
        let inst = EquationInstance::new(b, q)?;
        if inst.above_log_bound() {
            let d = bounds::prime_chain_decide(&inst)?;
            if d.verdict != Verdict::QDividesK {
                return Err(Error::ClaimMismatch(format!("q={q} is not forced to divide k for b={b}")));
            }
            chain_checks.push(LargeQCheck { q, verdict: d.verdict });
        }
    }
    trace.push(format!(
        "q >= {threshold}: no solution by the large-exponent bound; {} primes in ({}, {threshold}) force q | k",
        chain_checks.len(),
        (b as f64 + 1.0).log2()
    ));
    let remaining_q: Vec<u64> = arith::primes_up_to(log2_floor as u64).into_iter().filter(|&q| q > 2).collect();

    let mut report = Theorem3Report {
        b,
        log2_floor,
        chain_checks,
        large_q_threshold: threshold,
        remaining_q: remaining_q.clone(),
        nu2: None,
        nu3_branch: None,
        nu3_total: None,
        nu3: None,
        three_divides_k: false,
        square_case: Vec::new(),
        square_case_k_max: SQUARE_CASE_K_MAX,
        trace,
        resolution: Resolution::NoSolution,
    };

    match remaining_q.as_slice() {
        [] => report.trace.push(format!("q <= log2({}) < 3 leaves no odd prime", b + 1)),
        [3] => {
            report.trace.push(format!("q <= log2({}) < 4, so q = 3", b + 1));
            let inst = EquationInstance::new(b, 3)?;
            let nu2 = bounds::nu2_feasible(&inst);
            if nu2.minimum() < 1 {
                return Err(Error::ClaimMismatch(format!("k odd remains feasible for b={b}, q=3")));
            }
            report.trace.push(format!("v2: {} so 2 | k", nu2.derivation));
            let (branch, c) = if b.is_multiple_of(3) {
                (Nu3Branch::DividesB, None)
            } else if b % 3 == 1 {
                (Nu3Branch::BMinusOne, Some(arith::vp_u64(b - 1, 3)?))
            } else {
                (Nu3Branch::BPlusOne, Some(inst.nu3_b2_minus_1()))
            };
            let total = match c {
                None => "1 + m".to_string(),
                Some(c) => format!("{} + 2m", 1 + c),
            };
            let nu3 = bounds::nur_feasible(&inst, 3)?;
            if nu3.minimum() < 1 {
                return Err(Error::ClaimMismatch(format!("3 does not divide k for b={b}")));
            }
            report.trace.push(format!("v3 ({branch:?}): total {total}; {} so 3 | k", nu3.derivation));
            report.trace.push("q | k reduces to the two-variable equation, which has no solution".into());
            report.nu2 = Some(nu2);
            report.nu3_branch = Some(branch);
            report.nu3_total = Some(total);
            report.nu3 = Some(nu3);
            report.three_divides_k = true;
        }
        other => {
            return Err(Error::ClaimMismatch(format!("odd primes {other:?} remain below log2(b+1)")));
        }
    }

    report.square_case = brute_force_equation(b, &[2], SQUARE_CASE_K_MAX)?;
    report.trace.push(format!(
        "q = 2: settled elsewhere; direct search up to k = {SQUARE_CASE_K_MAX} finds {} solutions",
        report.square_case.len()
    ));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EquationSolution {
    pub k: u64,
    pub q: u64,
    #[serde(with = "crate::bigstr")]
    pub y: BigUint,
}

/// All `2 <= k <= k_max` and `q` in `q_set` (primes, 2 allowed) with
/// `(2^k - 1)(b^k - 1)` a perfect `q`-th power, ordered by `(k, q)`.
pub fn brute_force_equation(b: u64, q_set: &[u64], k_max: u64) -> Result<Vec<EquationSolution>> {
    if b < 3 || b.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("b must be odd and at least 3, got {b}")));
    }
    if k_max < 2 {
        return Err(Error::InvalidInput(format!("k_max must be at least 2, got {k_max}")));
    }
    let mut qs = q_set.to_vec();
    if let Some(&bad) = qs.iter().find(|&&q| !arith::is_prime(q)) {
        return Err(Error::NotPrime(bad));
    }
    qs.sort_unstable();
    qs.dedup();
    let k_top = u32::try_from(k_max).map_err(|_| Error::InvalidInput("k_max too large".into()))?;
    let found: Vec<EquationSolution> = (2..=k_top)
        .into_par_iter()
        .flat_map_iter(|k| {
            let n = arith::pow_minus_one(2, k) * arith::pow_minus_one(b, k);
            qs.iter()
                .filter_map(|&q| {
                    let (y, exact) = arith::integer_root(&n, q as u32).ok()?;
                    exact.then_some(EquationSolution { k: k as u64, q, y })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(found)
}
