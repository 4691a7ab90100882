//! Front end for the `dioph` binary: argument parsing, command dispatch and
//! record rendering.
//!
//! Every invocation yields a stream of [`RunRecord`]s. The payload of a
//! record depends only on the inputs and the toolkit version; timing lives
//! in `elapsed_ms` and worker counts are not echoed.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use dioph_core::arith::ModulusSchedule;
use dioph_core::bennett::{self, CertVerdict, PrecisionPolicy};
use dioph_core::bounds;
use dioph_core::cfrac::{self, Q3Status};
use dioph_core::interval::RealWithError;
use dioph_core::scans::{self, ScanConfig, FERMAT_QUOTIENT_BOUND, RESOLVED_B, WIEFERICH_RANGE};
use dioph_core::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exponents of the published exceptional table.
const TABLE_Q: [u64; 7] = [3, 5, 7, 11, 13, 17, 19];
const TABLE_B_MAX: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    ClaimViolation,
    InvalidInput,
    PrecisionExhausted,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ClaimViolation => 1,
            Status::InvalidInput => 2,
            Status::PrecisionExhausted => 3,
        }
    }

    fn of_error(e: &Error) -> Status {
        match e {
            Error::ClaimMismatch(_) | Error::ValuationCapExceeded { .. } => Status::ClaimViolation,
            Error::PrecisionExhausted { .. } => Status::PrecisionExhausted,
            _ => Status::InvalidInput,
        }
    }

    fn claim(violated: bool) -> Status {
        if violated {
            Status::ClaimViolation
        } else {
            Status::Ok
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: Value,
    pub version: String,
    pub status: Status,
    pub elapsed_ms: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    Single,
    Ladder,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write records here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "dioph", version, about = "Verification pipelines for (2^k - 1)(b^k - 1) = y^q")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exceptional (q, b) pairs left by the prime-chain argument.
    Scan {
        #[arg(long, default_value_t = 131_072)]
        b_max: u64,
        #[arg(long, value_delimiter = ',', default_values_t = TABLE_Q)]
        q: Vec<u64>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Odd primes p < p-max with p^2 | 2^(p-1) - 1.
    Wieferich {
        #[arg(long, default_value_t = WIEFERICH_RANGE)]
        p_max: u64,
        #[arg(long, value_enum, default_value_t = Schedule::Single)]
        schedule: Schedule,
        #[command(flatten)]
        common: Common,
    },
    /// Maximum of v_p(b^(p-1) - 1) over odd b < b-max, odd primes p < p-max.
    Fermatq {
        #[arg(long, default_value_t = 100_000)]
        b_max: u64,
        #[arg(long, default_value_t = 500)]
        p_max: u64,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Irrationality-measure certificates for (X^q - 1)(Y^q - 1) = Z^q.
    Bennett {
        /// A single X; overrides --x-max.
        #[arg(long)]
        x: Option<u64>,
        /// Grid X = 2..=x-max.
        #[arg(long, default_value_t = 10)]
        x_max: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [5u64, 7])]
        q: Vec<u64>,
        #[arg(long, default_value_t = 4096)]
        precision_cap: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Continued fractions of N^(1/q), or the cubic convergent search.
    Cfrac {
        /// Radicand for a plain expansion; without it the cubic search runs.
        #[arg(long)]
        n: Option<u64>,
        /// Root degree for --n.
        #[arg(long, default_value_t = 3)]
        q: u32,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// A single X for the cubic search; overrides --x-max.
        #[arg(long)]
        x: Option<u64>,
        #[arg(long, default_value_t = 10)]
        x_max: u64,
        /// Largest denominator; defaults to max(10^6, 5 X^6).
        #[arg(long)]
        y_limit: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Resolution trace for the individually settled b.
    VerifyB {
        /// Defaults to all of 5, 7, 11, 13, 21, 23, 27, 29.
        #[arg(long, value_delimiter = ',')]
        b: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Direct searches: the main equation over k, or X, Y for the
    /// two-variable equation.
    Brute {
        #[arg(long, value_enum, default_value_t = BruteMode::Equation)]
        mode: BruteMode,
        #[arg(long, value_delimiter = ',', default_values_t = [3u64, 5, 7, 11, 13, 21, 23, 27, 29])]
        b: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3, 5, 7])]
        q: Vec<u64>,
        #[arg(long, default_value_t = 60)]
        k_max: u64,
        #[arg(long, default_value_t = 200)]
        x_max: u64,
        #[arg(long, default_value_t = 200)]
        y_max: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Smallest prime q with q^2 > 8b.
    Threshold {
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<u64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BruteMode {
    Equation,
    Xyz,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Scan { common, .. }
            | Command::Wieferich { common, .. }
            | Command::Fermatq { common, .. }
            | Command::Bennett { common, .. }
            | Command::Cfrac { common, .. }
            | Command::VerifyB { common, .. }
            | Command::Brute { common, .. }
            | Command::Threshold { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Scan { .. } => "scan",
            Command::Wieferich { .. } => "wieferich",
            Command::Fermatq { .. } => "fermatq",
            Command::Bennett { .. } => "bennett",
            Command::Cfrac { .. } => "cfrac",
            Command::VerifyB { .. } => "verify-b",
            Command::Brute { .. } => "brute",
            Command::Threshold { .. } => "threshold",
        }
    }
}

/// One record before rendering.
struct Finding {
    params: Value,
    status: Status,
    payload: Value,
    rows: Vec<Vec<String>>,
    text: Vec<String>,
}

impl Finding {
    fn failed(params: Value, e: &Error) -> Finding {
        Finding {
            params,
            status: Status::of_error(e),
            payload: json!({ "error": e.to_string() }),
            rows: Vec::new(),
            text: vec![format!("error: {e}")],
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable payload")
}

fn cfg(common: &Common) -> ScanConfig {
    ScanConfig { jobs: common.jobs, ..ScanConfig::default() }
}

fn real(r: &Option<RealWithError>) -> (String, String) {
    r.as_ref().map(|r| (r.lo.clone(), r.hi.clone())).unwrap_or_default()
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>, sep: &str) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn run_scan(b_max: u64, q: &[u64], checkpoint: Option<&std::path::Path>, common: &Common) -> Vec<Finding> {
    let params = json!({ "b_max": b_max, "q": q });
    let found = match scans::theorem2_scan(b_max, q, cfg(common), checkpoint) {
        Ok(f) => f,
        Err(e) => return vec![Finding::failed(params, &e)],
    };
    // Within the published range the table must be reproduced exactly.
    let in_scope = b_max <= TABLE_B_MAX && q.iter().all(|x| TABLE_Q.contains(x));
    let pairs: Vec<(u64, u64)> = found.iter().map(|e| (e.q, e.b)).collect();
    let expected: Vec<(u64, u64)> =
        scans::published_table().into_iter().filter(|(tq, tb)| *tb < b_max && q.contains(tq)).collect();
    let matches = pairs == expected;
    let rows = found
        .iter()
        .map(|e| vec![e.q.to_string(), e.b.to_string(), e.blocking.prime.to_string(), e.blocking.constraint.clone()])
        .collect();
    let mut text: Vec<String> = found
        .iter()
        .map(|e| format!("q={} b={} blocked at {}: {}", e.q, e.b, e.blocking.prime, e.blocking.constraint))
        .collect();
    text.push(format!(
        "{} exceptional pairs; published table {}",
        found.len(),
        if matches { "reproduced" } else { "NOT reproduced" }
    ));
    vec![Finding {
        params,
        status: Status::claim(in_scope && !matches),
        payload: json!({ "pairs": found, "matches_published_table": matches }),
        rows,
        text,
    }]
}

fn run_wieferich(p_max: u64, schedule: Schedule, common: &Common) -> Vec<Finding> {
    let params = json!({ "p_max": p_max, "schedule": match schedule { Schedule::Single => "single", Schedule::Ladder => "ladder" } });
    let schedule = match schedule {
        Schedule::Single => ModulusSchedule::SinglePower,
        Schedule::Ladder => ModulusSchedule::Ladder,
    };
    let hits = match scans::wieferich_scan(p_max, schedule, cfg(common)) {
        Ok(h) => h,
        Err(e) => return vec![Finding::failed(params, &e)],
    };
    let violated = hits.iter().any(|h| h.p < WIEFERICH_RANGE && (h.p, h.e) != (1093, 2));
    vec![Finding {
        params,
        status: Status::claim(violated),
        payload: json!({ "hits": hits }),
        rows: hits.iter().map(|h| vec![h.p.to_string(), h.e.to_string()]).collect(),
        text: hits
            .iter()
            .map(|h| format!("p={} v_p(2^(p-1)-1)={}", h.p, h.e))
            .chain([format!("{} hits", hits.len())])
            .collect(),
    }]
}

fn run_fermatq(b_max: u64, p_max: u64, checkpoint: Option<&std::path::Path>, common: &Common) -> Vec<Finding> {
    let params = json!({ "b_max": b_max, "p_max": p_max });
    let scan = match scans::fermat_quotient_scan(b_max, p_max, cfg(common), checkpoint) {
        Ok(s) => s,
        Err(e) => return vec![Finding::failed(params, &e)],
    };
    let violated = scan.max_valuation > FERMAT_QUOTIENT_BOUND;
    let rows = scan
        .per_prime
        .iter()
        .map(|s| {
            vec![s.p.to_string(), s.max_valuation.to_string(), s.witnesses.len().to_string(), join(&s.witnesses, ";")]
        })
        .collect();
    let text = vec![
        format!("max v_p(b^(p-1)-1) = {} (bound {FERMAT_QUOTIENT_BOUND})", scan.max_valuation),
        format!("witnesses (b, p): {}", join(scan.witnesses.iter().map(|w| format!("({}, {})", w.b, w.p)), " ")),
    ];
    vec![Finding { params, status: Status::claim(violated), payload: to_value(&scan), rows, text }]
}

fn run_bennett(xs: &[u64], qs: &[u64], policy: PrecisionPolicy) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut qs = qs.to_vec();
    qs.sort_unstable();
    qs.dedup();
    for &q in &qs {
        for &x in xs {
            let params = json!({ "x": x, "q": q, "precision_cap": policy.cap_bits });
            out.push(bennett_cell(x, q, &policy).unwrap_or_else(|e| Finding::failed(params, &e)));
        }
    }
    out
}

fn bennett_cell(x: u64, q: u64, policy: &PrecisionPolicy) -> dioph_core::Result<Finding> {
    let params = json!({ "x": x, "q": q, "precision_cap": policy.cap_bits });
    if q == 3 {
        if x < 2 {
            return Err(Error::InvalidInput(format!("X must be at least 2, got {x}")));
        }
        let ok = bennett::condition_k_k(&dioph_core::arith::pow_minus_one(x, 3), 3, policy)?;
        // The condition is published to fail only at X = 2, 3 for q = 3.
        let violated = ok == (x <= 3);
        return Ok(Finding {
            params,
            status: Status::claim(violated),
            payload: json!({ "kind": "condition", "x": x, "q": q, "condition_ok": ok, "route": "cfrac" }),
            rows: vec![vec![x.to_string(), q.to_string(), "condition".into(), ok.to_string()]],
            text: vec![format!("X={x} q=3 condition {ok}; handled by the continued-fraction search")],
        });
    }
    if (x, q) == (2, 5) {
        let r = bennett::special_q5_x2(policy)?;
        let text = vec![format!(
            "X=2 q=5: Y <= {} (published {}), 31(Y^5-1) is a fifth power for Y in 2..=6: {}",
            r.y_max,
            r.published_y_bound,
            r.checks.iter().any(|c| c.exact)
        )];
        return Ok(Finding {
            params,
            status: Status::claim(r.verdict != CertVerdict::NoSolution),
            payload: json!({ "kind": "special", "report": r }),
            rows: vec![vec![
                x.to_string(),
                q.to_string(),
                "special".into(),
                "true".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("{:?}", r.verdict),
            ]],
            text,
        });
    }
    let c = bennett::contradiction_check(x, q, policy)?;
    let (lam_lo, lam_hi) = real(&c.lambda);
    let (_, up_hi) = real(&c.ln_b_upper);
    let flag = |p: &Option<bennett::PublishedCheck>| p.as_ref().map(|p| p.holds.to_string()).unwrap_or_default();
    let row = vec![
        x.to_string(),
        q.to_string(),
        "certificate".into(),
        c.condition_ok.to_string(),
        lam_lo.clone(),
        lam_hi.clone(),
        c.ln_b_lower.lo.clone(),
        up_hi.clone(),
        format!("{:?}", c.verdict),
        flag(&c.lambda_published),
        flag(&c.upper_shape_published),
    ];
    let mut text = vec![format!(
        "X={x} q={q}: lambda in [{lam_lo}, {lam_hi}], ln B > {}, ln B < {up_hi}: {:?}",
        c.ln_b_lower.lo, c.verdict
    )];
    for p in [&c.lambda_published, &c.upper_shape_published].into_iter().flatten() {
        text.push(format!("  {}: {}", p.claim, if p.holds { "holds" } else { "FAILS" }));
    }
    Ok(Finding {
        params,
        status: Status::claim(!c.consistent_with_published()),
        payload: json!({ "kind": "certificate", "certificate": c }),
        rows: vec![row],
        text,
    })
}

fn run_cfrac(n: Option<u64>, q: u32, count: usize, xs: &[u64], y_limit: Option<u64>) -> Vec<Finding> {
    if let Some(n) = n {
        let params = json!({ "n": n, "q": q, "count": count });
        let e = match cfrac::cf_expand(&n.into(), q, count) {
            Ok(e) => e,
            Err(err) => return vec![Finding::failed(params, &err)],
        };
        let convs = cfrac::convergents(&e);
        let certified = cfrac::certify_convergents(&e, &convs);
        let rows = e
            .quotients
            .iter()
            .zip(&convs)
            .map(|(a, c)| vec![c.index.to_string(), a.to_string(), c.h.to_string(), c.k.to_string()])
            .collect();
        let text = vec![
            format!("{n}^(1/{q}) = [{}]{}", join(&e.quotients, ", "), if e.terminated { " (exact)" } else { "" }),
            format!("convergents certified: {certified}"),
        ];
        return vec![Finding {
            params,
            status: Status::claim(!certified),
            payload: json!({ "expansion": e, "convergents": convs, "certified": certified }),
            rows,
            text,
        }];
    }
    xs.iter()
        .map(|&x| {
            let limit = y_limit.unwrap_or_else(|| 1_000_000u64.max(5u64.saturating_mul(x.saturating_pow(6))));
            let params = json!({ "x": x, "y_limit": limit });
            match cfrac::q3_case_check(x, limit) {
                Ok(r) => Finding {
                    params,
                    status: Status::claim(r.status == Q3Status::SolutionFound),
                    rows: vec![vec![
                        x.to_string(),
                        limit.to_string(),
                        r.threshold.to_string(),
                        r.convergents_checked.to_string(),
                        r.max_denominator.to_string(),
                        join(r.solutions.iter().map(|(y, z)| format!("{y}:{z}")), ";"),
                        format!("{:?}", r.status),
                    ]],
                    text: vec![format!(
                        "X={x}: {} convergents up to Y={}, {} solutions, {:?}{}",
                        r.convergents_checked,
                        r.max_denominator,
                        r.solutions.len(),
                        r.status,
                        r.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
                    )],
                    payload: to_value(&r),
                },
                Err(e) => Finding::failed(params, &e),
            }
        })
        .collect()
}

fn run_verify_b(bs: &[u64]) -> Vec<Finding> {
    let bs: Vec<u64> = if bs.is_empty() { RESOLVED_B.to_vec() } else { bs.to_vec() };
    bs.iter()
        .map(|&b| {
            let params = json!({ "b": b });
            match scans::theorem3_check(b) {
                Ok(r) => {
                    let squares = join(r.square_case.iter().map(|s| format!("k={} y={}", s.k, s.y)), ";");
                    let mut text = vec![format!("b={b}")];
                    text.extend(r.trace.iter().map(|t| format!("  {t}")));
                    Finding {
                        params,
                        status: Status::claim(!r.square_case.is_empty()),
                        rows: vec![vec![
                            b.to_string(),
                            join(&r.remaining_q, ";"),
                            r.nu3_branch.map(|x| format!("{x:?}")).unwrap_or_default(),
                            r.nu3_total.clone().unwrap_or_default(),
                            r.nu3.as_ref().map(|s| s.minimum().to_string()).unwrap_or_default(),
                            squares,
                            format!("{:?}", r.resolution),
                        ]],
                        text,
                        payload: to_value(&r),
                    }
                }
                Err(e) => Finding::failed(params, &e),
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_brute(
    mode: BruteMode,
    bs: &[u64],
    qs: &[u64],
    k_max: u64,
    x_max: u64,
    y_max: u64,
    common: &Common,
) -> Vec<Finding> {
    dioph_core::pool::with_jobs(common.jobs, || match mode {
        BruteMode::Equation => bs
            .iter()
            .map(|&b| {
                let params = json!({ "mode": "equation", "b": b, "q": qs, "k_max": k_max });
                match scans::brute_force_equation(b, qs, k_max) {
                    Ok(found) => Finding {
                        params,
                        status: Status::claim(!found.is_empty()),
                        rows: found
                            .iter()
                            .map(|s| vec![b.to_string(), s.k.to_string(), s.q.to_string(), s.y.to_string()])
                            .collect(),
                        text: vec![format!(
                            "b={b}: {} solutions{}",
                            found.len(),
                            join(found.iter().map(|s| format!(" (k={}, q={}, y={})", s.k, s.q, s.y)), "")
                        )],
                        payload: json!({ "b": b, "solutions": found }),
                    },
                    Err(e) => Finding::failed(params, &e),
                }
            })
            .collect(),
        BruteMode::Xyz => qs
            .iter()
            .map(|&q| {
                let params = json!({ "mode": "xyz", "q": q, "x_max": x_max, "y_max": y_max });
                match cfrac::brute_search_xyz(q, x_max, y_max) {
                    Ok(found) => Finding {
                        params,
                        status: Status::claim(!found.is_empty()),
                        rows: found
                            .iter()
                            .map(|s| vec![q.to_string(), s.x.to_string(), s.y.to_string(), s.z.to_string()])
                            .collect(),
                        text: vec![format!("q={q}: {} solutions with X <= {x_max}, Y <= {y_max}", found.len())],
                        payload: json!({ "q": q, "solutions": found }),
                    },
                    Err(e) => Finding::failed(params, &e),
                }
            })
            .collect(),
    })
}

fn run_threshold(bs: &[u64]) -> Vec<Finding> {
    bs.iter()
        .map(|&b| {
            let params = json!({ "b": b });
            match bounds::theorem1_threshold(b) {
                Ok(q) => Finding {
                    params,
                    status: Status::Ok,
                    payload: json!({ "b": b, "q": q }),
                    rows: vec![vec![b.to_string(), q.to_string()]],
                    text: vec![format!("b={b}: smallest prime q with q^2 > 8b is {q}")],
                },
                Err(e) => Finding::failed(params, &e),
            }
        })
        .collect()
}

fn csv_header(cmd: &Command) -> Vec<&'static str> {
    match cmd {
        Command::Scan { .. } => vec!["q", "b", "blocking_prime", "constraint"],
        Command::Wieferich { .. } => vec!["p", "valuation"],
        Command::Fermatq { .. } => vec!["p", "max_valuation", "witness_count", "witnesses"],
        Command::Bennett { .. } => vec![
            "x",
            "q",
            "kind",
            "condition_ok",
            "lambda_lo",
            "lambda_hi",
            "ln_b_lower_lo",
            "ln_b_upper_hi",
            "verdict",
            "lambda_published_holds",
            "shape_published_holds",
        ],
        Command::Cfrac { n: Some(_), .. } => vec!["index", "quotient", "h", "k"],
        Command::Cfrac { .. } => {
            vec!["x", "y_limit", "threshold", "convergents_checked", "max_denominator", "solutions", "status"]
        }
        Command::VerifyB { .. } => {
            vec!["b", "remaining_q", "nu3_branch", "nu3_total", "min_nu3_k", "square_case", "resolution"]
        }
        Command::Brute { mode: BruteMode::Equation, .. } => vec!["b", "k", "q", "y"],
        Command::Brute { mode: BruteMode::Xyz, .. } => vec!["q", "x", "y", "z"],
        Command::Threshold { .. } => vec!["b", "q"],
    }
}

/// Rendered output of one invocation.
#[derive(Debug)]
pub struct Execution {
    pub exit_code: i32,
    pub records: Vec<RunRecord>,
    pub rendered: String,
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> Result<Execution, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Ok(execute(Cli::try_parse_from(argv)?.command))
}

pub fn execute(cmd: Command) -> Execution {
    let start = Instant::now();
    let findings = match &cmd {
        Command::Scan { b_max, q, checkpoint, common } => run_scan(*b_max, q, checkpoint.as_deref(), common),
        Command::Wieferich { p_max, schedule, common } => run_wieferich(*p_max, *schedule, common),
        Command::Fermatq { b_max, p_max, checkpoint, common } => {
            run_fermatq(*b_max, *p_max, checkpoint.as_deref(), common)
        }
        Command::Bennett { x, x_max, q, precision_cap, common } => {
            let xs: Vec<u64> = match x {
                Some(x) => vec![*x],
                None => (2..=*x_max).collect(),
            };
            dioph_core::pool::with_jobs(common.jobs, || run_bennett(&xs, q, PrecisionPolicy::with_cap(*precision_cap)))
        }
        Command::Cfrac { n, q, count, x, x_max, y_limit, common } => {
            let xs: Vec<u64> = match x {
                Some(x) => vec![*x],
                None => (2..=*x_max).collect(),
            };
            dioph_core::pool::with_jobs(common.jobs, || run_cfrac(*n, *q, *count, &xs, *y_limit))
        }
        Command::VerifyB { b, common } => dioph_core::pool::with_jobs(common.jobs, || run_verify_b(b)),
        Command::Brute { mode, b, q, k_max, x_max, y_max, common } => {
            run_brute(*mode, b, q, *k_max, *x_max, *y_max, common)
        }
        Command::Threshold { b, .. } => run_threshold(b),
    };
    let elapsed_ms = start.elapsed().as_millis() as u64;
    let common = cmd.common();
    let records: Vec<RunRecord> = findings
        .iter()
        .map(|f| RunRecord {
            command: cmd.name().to_string(),
            params: f.params.clone(),
            version: VERSION.to_string(),
            status: f.status,
            elapsed_ms,
            payload: f.payload.clone(),
        })
        .collect();
    let exit_code = records.iter().map(|r| r.status.exit_code()).max().unwrap_or(0);
    let rendered = match common.format {
        Format::Json => records.iter().map(|r| serde_json::to_string(r).expect("record") + "\n").collect(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let header = csv_header(&cmd);
            w.write_record(&header).expect("in-memory write");
            for row in findings.iter().flat_map(|f| &f.rows) {
                // short rows leave trailing columns empty
                let pad = header.len().saturating_sub(row.len());
                w.write_record(row.iter().map(String::as_str).chain(std::iter::repeat_n("", pad)))
                    .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        Format::Text => {
            let mut s = String::new();
            for (f, r) in findings.iter().zip(&records) {
                for line in &f.text {
                    s.push_str(line);
                    s.push('\n');
                }
                if r.status != Status::Ok {
                    s.push_str(&format!(
                        "status: {}\n",
                        serde_json::to_value(r.status).expect("status").as_str().unwrap_or("")
                    ));
                }
            }
            s
        }
    };
    Execution { exit_code, records, rendered, out: common.out.clone() }
}
