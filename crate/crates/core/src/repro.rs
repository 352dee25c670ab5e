//! Reproduction of the worked examples: each case recomputes the published
//! numbers and compares them with the expected values under fixed tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Result, TcpError};
use crate::property_checkers::{
    diagonal_positivity, implication_audit, p_function_components, p_function_objective,
    p_tensor_check, strong_p_check, witness_value, CheckOptions, VerdictStatus, Witness,
};
use crate::solvers::{
    boundedness_probe, enumerate_solutions, gus_probe, q_grid, GusVerdict, SolverOptions,
};
use crate::spectral::{positivity_report, EigenOptions};
use crate::tcp::TcpInstance;
use crate::tensor::Tensor;

pub const DEFAULT_SEED: u64 = 42;

const SOLUTION_TOL: f64 = 1e-8;
const PSI_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-12;
const WITNESS_MARGIN: f64 = 1e-10;
const DEDUPE_DIST: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReproCase {
    Example1,
    Example2,
    Example3,
    Theorem31,
    Prop41,
}

impl ReproCase {
    pub const ALL: [ReproCase; 5] = [
        ReproCase::Example1,
        ReproCase::Example2,
        ReproCase::Example3,
        ReproCase::Theorem31,
        ReproCase::Prop41,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReproCase::Example1 => "example1",
            ReproCase::Example2 => "example2",
            ReproCase::Example3 => "example3",
            ReproCase::Theorem31 => "theorem31",
            ReproCase::Prop41 => "prop41",
        }
    }
}

impl fmt::Display for ReproCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReproCase {
    type Err = TcpError;

    fn from_str(s: &str) -> Result<Self> {
        ReproCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| TcpError::BadValue(format!("unknown repro case {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproCheck {
    pub name: String,
    pub expected: Value,
    pub computed: Value,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub case: ReproCase,
    pub checks: Vec<ReproCheck>,
    /// Every check passed.
    pub pass: bool,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
}

struct Builder {
    checks: Vec<ReproCheck>,
}

impl Builder {
    fn new() -> Self {
        Builder { checks: Vec::new() }
    }

    fn push(&mut self, name: &str, expected: impl Serialize, computed: impl Serialize, pass: bool) {
        self.checks.push(ReproCheck {
            name: name.to_owned(),
            expected: serde_json::to_value(expected).unwrap_or(Value::Null),
            computed: serde_json::to_value(computed).unwrap_or(Value::Null),
            pass,
        });
    }

    fn close(&mut self, name: &str, expected: f64, computed: f64, tol: f64) {
        let pass = (expected - computed).abs() <= tol;
        self.push(name, expected, computed, pass);
    }

    fn finish(self, case: ReproCase, seed: u64, tolerances: &[(&str, f64)]) -> ReproReport {
        ReproReport {
            case,
            pass: self.checks.iter().all(|c| c.pass),
            checks: self.checks,
            tolerances: tolerances.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed,
        }
    }
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Both lists have the same length and pair up within `tol`, in order.
fn matches_points(expected: &[Vec<f64>], computed: &[Vec<f64>], tol: f64) -> bool {
    expected.len() == computed.len()
        && expected
            .iter()
            .zip(computed)
            .all(|(e, c)| e.len() == c.len() && max_dist(e, c) <= tol)
}

pub fn diagonal_cubic_tensor() -> Tensor {
    Tensor::from_one_based(3, 2, [(vec![1, 1, 1], 1.0), (vec![2, 2, 2], 1.0)])
        .expect("valid tensor")
}

pub fn two_solution_tensor() -> Tensor {
    Tensor::from_one_based(
        4,
        2,
        [
            (vec![1, 1, 1, 1], 1.0),
            (vec![1, 1, 1, 2], -2.0),
            (vec![1, 1, 2, 2], 1.0),
            (vec![2, 2, 2, 2], 1.0),
        ],
    )
    .expect("valid tensor")
}

pub fn not_strong_p_tensor() -> Tensor {
    Tensor::from_one_based(
        4,
        2,
        [
            (vec![1, 1, 1, 1], 1.0),
            (vec![1, 2, 2, 2], -1.0),
            (vec![1, 1, 2, 2], 1.0),
            (vec![2, 2, 2, 2], 1.0),
            (vec![2, 1, 1, 1], -1.0),
            (vec![2, 2, 1, 1], 1.0),
        ],
    )
    .expect("valid tensor")
}

pub fn diagonal_identity(order: usize, dim: usize) -> Tensor {
    Tensor::diagonal(order, &vec![1.0; dim]).expect("valid tensor")
}

fn solver_opts(seed: u64) -> SolverOptions {
    SolverOptions::default().with_seed(seed)
}

fn check_opts(seed: u64) -> CheckOptions {
    CheckOptions::default().with_seed(seed)
}

fn solutions(a: &Tensor, q: &[f64], seed: u64) -> Result<Vec<Vec<f64>>> {
    let inst = TcpInstance::new(a.clone(), q.to_vec())?;
    Ok(enumerate_solutions(&inst, &solver_opts(seed))?.points())
}

fn closed_form_diagonal(q: &[f64]) -> Vec<f64> {
    q.iter().map(|&v| if v < 0.0 { (-v).sqrt() } else { 0.0 }).collect()
}

fn example1(seed: u64) -> Result<ReproReport> {
    let a = diagonal_cubic_tensor();
    let mut b = Builder::new();
    let grid = q_grid(2, -4.0, 4.0, 9);
    let mut matched = 0;
    for q in &grid {
        if matches_points(&[closed_form_diagonal(q)], &solutions(&a, q, seed)?, SOLUTION_TOL) {
            matched += 1;
        }
    }
    b.push(
        "unique closed-form solution on the 9x9 q-grid over [-4,4]^2",
        grid.len(),
        matched,
        matched == grid.len(),
    );
    for (label, q, x) in [
        ("q=(-4,1)", [-4.0, 1.0], [2.0, 0.0]),
        ("q=(0,0)", [0.0, 0.0], [0.0, 0.0]),
        ("q=(-2.25,-0.25)", [-2.25, -0.25], [1.5, 0.5]),
    ] {
        let got = solutions(&a, &q, seed)?;
        let pass = matches_points(&[x.to_vec()], &got, SOLUTION_TOL);
        b.push(&format!("solution set at {label}"), [x.to_vec()], got, pass);
    }
    let v = p_tensor_check(&a, &check_opts(seed));
    b.push(
        "P check on the order-3 tensor",
        json!({"status": VerdictStatus::CertifiedFails, "reason": "odd order"}),
        json!({"status": v.status, "reason": v.reason}),
        v.status == VerdictStatus::CertifiedFails && v.reason.as_deref() == Some("odd order"),
    );
    Ok(b.finish(
        ReproCase::Example1,
        seed,
        &[("solution", SOLUTION_TOL), ("dedupe_dist", DEDUPE_DIST)],
    ))
}

fn example2(seed: u64) -> Result<ReproReport> {
    let a = two_solution_tensor();
    let mut b = Builder::new();
    let v = p_tensor_check(&a, &check_opts(seed));
    b.push(
        "P check",
        json!({"status": VerdictStatus::NotDisproved, "min_value_positive": true}),
        json!({"status": v.status, "min_value": v.min_value, "samples": v.samples}),
        v.status == VerdictStatus::NotDisproved && v.min_value.is_some_and(|m| m > 0.0),
    );
    let expected = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
    let got = solutions(&a, &[0.0, -1.0], seed)?;
    let pass = matches_points(&expected, &got, SOLUTION_TOL);
    b.push("solution set at q=(0,-1)", &expected, &got, pass);
    b.push("solution count at q=(0,-1)", 2, got.len(), got.len() == 2);

    let inst = TcpInstance::new(a.clone(), vec![0.0, -1.0])?;
    let r = inst.residuals(&[1.0, 1.0])?;
    b.push(
        "max residual at x=(1,1), q=(0,-1)",
        0.0,
        r.max_violation(),
        r.max_violation() <= RESIDUAL_TOL,
    );
    let got = solutions(&a, &[1.0, 1.0], seed)?;
    let pass = matches_points(&[vec![0.0, 0.0]], &got, SOLUTION_TOL);
    b.push("solution set at q=(1,1)", [[0.0, 0.0]], &got, pass);

    let q_list = vec![vec![0.0, -1.0], vec![1.0, 1.0], vec![-1.0, -1.0]];
    let g = gus_probe(&a, &q_list, &solver_opts(seed))?;
    let flagged = g.flags.iter().any(|q| max_dist(q, &[0.0, -1.0]) == 0.0);
    b.push(
        "GUS probe",
        json!({"verdict": GusVerdict::Violated, "flags_include": [0.0, -1.0]}),
        json!({"verdict": g.verdict, "flags": g.flags}),
        g.verdict == GusVerdict::Violated && flagged,
    );
    Ok(b.finish(
        ReproCase::Example2,
        seed,
        &[
            ("solution", SOLUTION_TOL),
            ("residual", RESIDUAL_TOL),
            ("dedupe_dist", DEDUPE_DIST),
        ],
    ))
}

fn example3(seed: u64) -> Result<ReproReport> {
    let a = not_strong_p_tensor();
    let mut b = Builder::new();
    let x = [2.1, -1.9];
    let y = [2.0, -2.0];
    let comps = p_function_components(&a, &x, &y)?;
    b.close("psi component 1 at x=(2.1,-1.9), y=(2,-2)", -0.0299, comps[0], PSI_TOL);
    b.close("psi component 2 at x=(2.1,-1.9), y=(2,-2)", -0.0499, comps[1], PSI_TOL);

    let psi = p_function_objective(&a, &x, &y)?;
    let psi2 = p_function_objective(&a, &[4.2, -3.8], &[4.0, -4.0])?;
    b.close(
        "psi(2x,2y) / psi(x,y)",
        16.0,
        psi2 / psi,
        16.0 * 1e-9,
    );

    let v = strong_p_check(&a, &check_opts(seed));
    let reverified = match &v.witness {
        Some(w @ Witness::Pair { x, y }) => {
            let sep = x.iter().zip(y).map(|(u, w)| (u - w) * (u - w)).sum::<f64>().sqrt();
            witness_value(&a, v.property, w)
                .ok()
                .filter(|&val| val <= -WITNESS_MARGIN && sep >= 1e-8)
        }
        _ => None,
    };
    b.push(
        "strong P check with re-verified witness",
        json!({"status": VerdictStatus::Fails, "witness_value_below": -WITNESS_MARGIN}),
        json!({"status": v.status, "witness": v.witness, "witness_value": reverified}),
        v.status == VerdictStatus::Fails && reverified.is_some(),
    );
    let p = p_tensor_check(&a, &check_opts(seed));
    b.push(
        "P check",
        VerdictStatus::NotDisproved,
        p.status,
        p.status == VerdictStatus::NotDisproved,
    );
    Ok(b.finish(
        ReproCase::Example3,
        seed,
        &[
            ("psi", PSI_TOL),
            ("witness_margin", WITNESS_MARGIN),
            ("pair_separation", 1e-8),
        ],
    ))
}

/// The real root of `x (x - 1)^2 = 1`, by bisection on `[1, 2]`.
fn cubic_root() -> f64 {
    let f = |x: f64| x * (x - 1.0) * (x - 1.0) - 1.0;
    let (mut lo, mut hi) = (1.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn theorem31(seed: u64) -> Result<ReproReport> {
    let a = two_solution_tensor();
    let mut b = Builder::new();
    let radii = [2.0, 10.0, 100.0];
    let cases = [
        ([0.0, -1.0], vec![vec![0.0, 1.0], vec![1.0, 1.0]]),
        ([1.0, 1.0], vec![vec![0.0, 0.0]]),
        ([-1.0, -1.0], vec![vec![cubic_root(), 1.0]]),
    ];
    for (q, expected) in cases {
        let inst = TcpInstance::new(a.clone(), q.to_vec())?;
        let r = boundedness_probe(&inst, &radii, &solver_opts(seed))?;
        let last = r.per_radius.last().map(|p| p.solutions.clone()).unwrap_or_default();
        b.push(
            &format!("q=({},{}): nonempty and stabilized at radii 10 and 100", q[0], q[1]),
            json!({"nonempty": true, "stabilized": true}),
            json!({"nonempty": r.nonempty, "stabilized": r.stabilized}),
            r.nonempty && r.stabilized,
        );
        let pass = matches_points(&expected, &last, SOLUTION_TOL);
        b.push(
            &format!("q=({},{}): solution set at radius 100", q[0], q[1]),
            &expected,
            &last,
            pass,
        );
    }
    Ok(b.finish(
        ReproCase::Theorem31,
        seed,
        &[("solution", SOLUTION_TOL), ("dedupe_dist", DEDUPE_DIST)],
    ))
}

fn prop41(seed: u64) -> Result<ReproReport> {
    let mut b = Builder::new();
    let copts = check_opts(seed);
    let eopts = EigenOptions {
        seed,
        ..EigenOptions::default()
    };
    for (label, a) in [
        ("diagonal identity", diagonal_identity(4, 2)),
        ("not-strong-P tensor", not_strong_p_tensor()),
    ] {
        let audit = implication_audit(&a, &copts)?;
        b.push(
            &format!("{label}: implication audit"),
            Vec::<String>::new(),
            &audit.inconsistencies,
            audit.consistent,
        );
        let diag = diagonal_positivity(&a);
        b.push(&format!("{label}: diagonal positivity"), true, diag, diag);
        let pos = positivity_report(&a, &eopts, &copts);
        b.push(
            &format!("{label}: eigenvalue contradiction flag"),
            false,
            pos.contradiction,
            !pos.contradiction,
        );
        if label == "diagonal identity" {
            b.push(
                &format!("{label}: all computed eigenvalues positive"),
                true,
                json!({"all_positive": pos.all_positive, "min_h": pos.min_h, "min_z": pos.min_z}),
                pos.all_positive,
            );
            b.close(&format!("{label}: min Z-eigenvalue"), 0.5, pos.min_z.unwrap_or(f64::NAN), 1e-10);
            let first = &audit.entries[0];
            b.push(
                &format!("{label}: sub-tensor J={{1}} strong P"),
                VerdictStatus::CertifiedHolds,
                first.strong_p.status,
                first.subset == [1] && first.strong_p.status == VerdictStatus::CertifiedHolds,
            );
        } else {
            let top = audit.entries.last().expect("full tensor");
            b.push(
                &format!("{label}: strong P and P verdicts"),
                json!({"strong_p": VerdictStatus::Fails, "p": VerdictStatus::NotDisproved}),
                json!({"strong_p": top.strong_p.status, "p": top.p.status}),
                top.strong_p.status == VerdictStatus::Fails
                    && top.p.status == VerdictStatus::NotDisproved,
            );
        }
    }
    Ok(b.finish(
        ReproCase::Prop41,
        seed,
        &[("witness_margin", WITNESS_MARGIN), ("eigen_residual", 1e-10)],
    ))
}

pub fn run_repro(case: ReproCase, seed: u64) -> Result<ReproReport> {
    match case {
        ReproCase::Example1 => example1(seed),
        ReproCase::Example2 => example2(seed),
        ReproCase::Example3 => example3(seed),
        ReproCase::Theorem31 => theorem31(seed),
        ReproCase::Prop41 => prop41(seed),
    }
}

pub fn run_all(seed: u64) -> Result<Vec<ReproReport>> {
    ReproCase::ALL.into_iter().map(|c| run_repro(c, seed)).collect()
}
