//! Witness search for the structured tensor classes.
//!
//! Each class is defined by a universally quantified inequality, so a search
//! can only disprove membership by exhibiting a witness. When nothing is found
//! the verdict is [`VerdictStatus::NotDisproved`], never a proof. Exact
//! verdicts exist for odd orders (there is no odd-order P tensor), for axis
//! points (the objective there is a diagonal entry) and for `n = 1`.
//!
//! | class    | objective (`min_value`)                                | witness if        |
//! |----------|--------------------------------------------------------|-------------------|
//! | P        | `max_i x_i (A x^{m-1})_i` on the unit sphere            | `<= -margin`      |
//! | SSP      | `max_{i in S} min(x_i, (A x^{m-1})_i)`, `x >= 0`, supp `S` | `<= -margin`   |
//! | R        | [`r_objective`] at active-set Newton roots              | `<= root_tol`     |
//! | strong P | `max_i (x_i - y_i)((A x^{m-1})_i - (A y^{m-1})_i)`       | `<= -margin`      |

use std::cmp::Ordering;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcpError};
use crate::newton::{damped_newton, NewtonSettings, NonlinearSystem};
use crate::scalar::{lex_cmp, norm2, norm_inf, Scalar};
use crate::solvers::{mask_seed, ActiveSet};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "p")]
    P,
    #[serde(rename = "ssp")]
    StrictlySemiPositive,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "strong-p")]
    StrongP,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::P => "p",
            Property::StrictlySemiPositive => "ssp",
            Property::R => "r",
            Property::StrongP => "strong-p",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    /// A witness violating the defining inequality was found.
    Fails,
    /// The search budget found no witness.
    NotDisproved,
    /// Membership is impossible for a structural reason.
    CertifiedFails,
    /// Membership decided exactly (`n = 1`).
    CertifiedHolds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
pub enum Witness<T = f64> {
    Pair { x: Vec<T>, y: Vec<T> },
    PointShift { x: Vec<T>, t: T },
    Point { x: Vec<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PropertyVerdict<T = f64> {
    pub property: Property,
    pub status: VerdictStatus,
    pub witness: Option<Witness<T>>,
    /// Smallest objective value seen, see the module table.
    pub min_value: Option<T>,
    pub samples: usize,
    pub refinements: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl<T: Scalar> PropertyVerdict<T> {
    pub fn is_disproved(&self) -> bool {
        matches!(self.status, VerdictStatus::Fails | VerdictStatus::CertifiedFails)
    }

    fn certified(property: Property, status: VerdictStatus, reason: &str, seed: u64) -> Self {
        PropertyVerdict {
            property,
            status,
            witness: None,
            min_value: None,
            samples: 0,
            refinements: 0,
            seed,
            reason: Some(reason.to_owned()),
        }
    }

    fn exact_fail(property: Property, witness: Witness<T>, value: T, reason: &str, seed: u64) -> Self {
        PropertyVerdict {
            property,
            status: VerdictStatus::Fails,
            witness: Some(witness),
            min_value: Some(value),
            samples: 0,
            refinements: 0,
            seed,
            reason: Some(reason.to_owned()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CheckOptions<T = f64> {
    pub samples: usize,
    /// Best samples handed to the local refinement.
    pub refine_top: usize,
    pub refine_iters: usize,
    pub shrink: T,
    pub initial_step: T,
    /// A sampled witness must reach `objective <= -witness_margin`.
    pub witness_margin: T,
    /// Minimum `||x - y||` for pairs.
    pub pair_separation: T,
    /// Newton starts per support in the R-tensor search.
    pub r_starts: usize,
    pub root_tol: T,
    pub positivity_floor: T,
    pub n_max: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for CheckOptions<T> {
    fn default() -> Self {
        CheckOptions {
            samples: 20_000,
            refine_top: 50,
            refine_iters: 500,
            shrink: T::lit(0.5),
            initial_step: T::lit(0.1),
            witness_margin: T::tol(1e-10, 1e3),
            pair_separation: T::tol(1e-8, 1e3),
            r_starts: 64,
            root_tol: T::tol(1e-11, 1e3),
            positivity_floor: T::tol(1e-10, 1e3),
            n_max: 6,
            seed: 42,
        }
    }
}

impl<T: Scalar> CheckOptions<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

fn max_of<T: Scalar>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::neg_infinity(), T::max)
}

/// `max_i x_i (A x^{m-1})_i`.
pub fn p_objective<T: Scalar>(a: &Tensor<T>, x: &[T]) -> Result<T> {
    let ax = a.apply_power(x)?;
    Ok(max_of(x.iter().zip(&ax).map(|(&u, &v)| u * v)))
}

/// `max_i min(x_i, (A x^{m-1})_i)`.
pub fn ssp_objective<T: Scalar>(a: &Tensor<T>, x: &[T]) -> Result<T> {
    let ax = a.apply_power(x)?;
    Ok(max_of(x.iter().zip(&ax).map(|(&u, &v)| u.min(v))))
}

/// `max_{i : x_i > 0} min(x_i, (A x^{m-1})_i)`, or `+inf` when no coordinate
/// is positive. A nonpositive value at `x >= 0` violates strict
/// semi-positivity.
pub fn ssp_support_objective<T: Scalar>(a: &Tensor<T>, x: &[T]) -> Result<T> {
    let ax = a.apply_power(x)?;
    let v = max_of(
        x.iter()
            .zip(&ax)
            .filter(|(&u, _)| u > T::zero())
            .map(|(&u, &v)| u.min(v)),
    );
    Ok(if v == T::neg_infinity() { T::infinity() } else { v })
}

/// `(x_i - y_i)((A x^{m-1})_i - (A y^{m-1})_i)` for every `i`.
pub fn p_function_components<T: Scalar>(a: &Tensor<T>, x: &[T], y: &[T]) -> Result<Vec<T>> {
    let ax = a.apply_power(x)?;
    let ay = a.apply_power(y)?;
    Ok((0..x.len()).map(|i| (x[i] - y[i]) * (ax[i] - ay[i])).collect())
}

/// `max_i (x_i - y_i)((A x^{m-1})_i - (A y^{m-1})_i)`. Any `q` in
/// `F(x) = A x^{m-1} + q` cancels, so this is the P-function objective of `F`.
pub fn p_function_objective<T: Scalar>(a: &Tensor<T>, x: &[T], y: &[T]) -> Result<T> {
    Ok(max_of(p_function_components(a, x, y)?.into_iter()))
}

/// `max(-t, max_{i : x_i = 0} -((A x^{m-1})_i + t), max_{i : x_i > 0} |(A x^{m-1})_i + t|)`.
/// At most `root_tol` (with `x >= 0`, `x != 0`) means `(x, t)` violates the
/// R-tensor condition.
pub fn r_objective<T: Scalar>(a: &Tensor<T>, x: &[T], t: T) -> Result<T> {
    let ax = a.apply_power(x)?;
    let terms = x.iter().zip(&ax).map(|(&u, &v)| {
        if u > T::zero() {
            (v + t).abs()
        } else {
            -(v + t)
        }
    });
    Ok(max_of(terms).max(-t))
}

/// The objective of `property` at `witness`, as in the module table.
pub fn witness_value<T: Scalar>(a: &Tensor<T>, property: Property, witness: &Witness<T>) -> Result<T> {
    match (property, witness) {
        (Property::P, Witness::Point { x }) => p_objective(a, x),
        (Property::StrictlySemiPositive, Witness::Point { x }) => {
            if x.iter().any(|&v| v < T::zero()) {
                return Err(TcpError::BadValue("ssp witness must be nonnegative".into()));
            }
            ssp_support_objective(a, x)
        }
        (Property::R, Witness::PointShift { x, t }) => {
            if x.iter().any(|&v| v < T::zero()) || x.iter().all(|&v| v == T::zero()) {
                return Err(TcpError::BadValue("R witness must be nonnegative and nonzero".into()));
            }
            r_objective(a, x, *t)
        }
        (Property::StrongP, Witness::Pair { x, y }) => p_function_objective(a, x, y),
        _ => Err(TcpError::BadValue(format!("witness shape does not match property {property}"))),
    }
}

/// Each diagonal entry `a_{i...i}` is strictly positive.
pub fn diagonal_positivity<T: Scalar>(a: &Tensor<T>) -> bool {
    (0..a.dim()).all(|i| a.diag(i) > T::zero())
}


fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[i] = T::one();
    e
}

fn value_cmp<T: Scalar>(a: T, b: T) -> Ordering {
    let key = |v: T| if v.is_nan() { T::infinity() } else { v };
    key(a).partial_cmp(&key(b)).unwrap_or(Ordering::Equal)
}

fn gaussian<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let v: f64 = StandardNormal.sample(rng);
    T::lit(v)
}

fn normalize_in_place<T: Scalar>(v: &mut [T]) -> bool {
    let n = norm2(v);
    if !(n > T::zero() && n.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    true
}

/// A search point plus an integer tag fixing its face (support mask).
#[derive(Clone, Debug)]
struct Candidate<T> {
    z: Vec<T>,
    tag: u64,
    value: T,
}

struct SearchOutcome<T> {
    best: Option<Candidate<T>>,
    samples: usize,
    refinements: usize,
}

/// Evaluates every sample, then refines the `refine_top` best by compass
/// search. `project` maps a trial point back onto the feasible set or
/// rejects it. Ties break toward the lexicographically smallest point.
fn sample_and_refine<T, F, P>(
    starts: Vec<(Vec<T>, u64)>,
    refine_top: usize,
    objective: &F,
    project: &P,
    opts: &CheckOptions<T>,
) -> SearchOutcome<T>
where
    T: Scalar,
    F: Fn(&[T], u64) -> T + Sync,
    P: Fn(&mut [T], u64) -> bool + Sync,
{
    let samples = starts.len();
    let mut evaluated: Vec<Candidate<T>> = starts
        .into_par_iter()
        .map(|(z, tag)| {
            let value = objective(&z, tag);
            Candidate { z, tag, value }
        })
        .collect();
    let by_value = |a: &Candidate<T>, b: &Candidate<T>| {
        value_cmp(a.value, b.value).then_with(|| lex_cmp(&a.z, &b.z))
    };
    evaluated.sort_by(by_value);
    evaluated.truncate(refine_top.max(1));
    let refined: Vec<(Candidate<T>, usize)> = evaluated
        .into_par_iter()
        .map(|c| compass_search(c, objective, project, opts))
        .collect();
    let refinements = refined.iter().map(|(_, it)| it).sum();
    let best = refined.into_iter().map(|(c, _)| c).min_by(by_value);
    SearchOutcome {
        best,
        samples,
        refinements,
    }
}

fn compass_search<T, F, P>(
    mut c: Candidate<T>,
    objective: &F,
    project: &P,
    opts: &CheckOptions<T>,
) -> (Candidate<T>, usize)
where
    T: Scalar,
    F: Fn(&[T], u64) -> T + Sync,
    P: Fn(&mut [T], u64) -> bool + Sync,
{
    let mut step = opts.initial_step;
    let floor = T::epsilon() * T::lit(16.0);
    let mut trial = c.z.clone();
    let mut iters = 0;
    while iters < opts.refine_iters && step > floor {
        iters += 1;
        let mut improved = false;
        'dirs: for j in 0..c.z.len() {
            for sign in [T::one(), -T::one()] {
                trial.copy_from_slice(&c.z);
                trial[j] = trial[j] + sign * step;
                if !project(&mut trial, c.tag) {
                    continue;
                }
                let v = objective(&trial, c.tag);
                if value_cmp(v, c.value) == Ordering::Less {
                    c.z.copy_from_slice(&trial);
                    c.value = v;
                    improved = true;
                    break 'dirs;
                }
            }
        }
        if !improved {
            step = step * opts.shrink;
        }
    }
    (c, iters)
}

fn n1_rule<T: Scalar>(a: &Tensor<T>, property: Property, seed: u64) -> PropertyVerdict<T> {
    let d = a.diag(0);
    let even = a.order().is_multiple_of(2);
    let holds = match property {
        Property::P | Property::StrongP => d > T::zero() && even,
        Property::StrictlySemiPositive | Property::R => d > T::zero(),
    };
    if holds {
        return PropertyVerdict::certified(
            property,
            VerdictStatus::CertifiedHolds,
            "n = 1: positive diagonal entry",
            seed,
        );
    }
    let one = vec![T::one()];
    let witness = match property {
        Property::P | Property::StrictlySemiPositive => Witness::Point { x: one },
        Property::StrongP => Witness::Pair {
            x: one,
            y: vec![T::zero()],
        },
        Property::R => Witness::PointShift { x: one, t: -d },
    };
    let value = witness_value(a, property, &witness).unwrap_or(d);
    PropertyVerdict::exact_fail(property, witness, value, "n = 1: nonpositive diagonal entry", seed)
}

/// Exact witness at the first axis point `e_i` with `a_{i...i} <= 0` at which
/// the objective is nonpositive (for R, with `t = -a_{i...i}`).
fn axis_witness<T: Scalar>(a: &Tensor<T>, property: Property, seed: u64) -> Option<PropertyVerdict<T>> {
    let n = a.dim();
    (0..n).filter(|&i| a.diag(i) <= T::zero()).find_map(|i| {
        let e = unit::<T>(n, i);
        let witness = match property {
            Property::StrongP => Witness::Pair {
                x: e,
                y: vec![T::zero(); n],
            },
            Property::R => Witness::PointShift { x: e, t: -a.diag(i) },
            _ => Witness::Point { x: e },
        };
        let value = witness_value(a, property, &witness).ok()?;
        (value <= T::zero()).then(|| {
            PropertyVerdict::exact_fail(property, witness, value, "exact evaluation at an axis point", seed)
        })
    })
}

fn from_search<T: Scalar>(
    property: Property,
    out: SearchOutcome<T>,
    witness: impl FnOnce(&Candidate<T>) -> Witness<T>,
    opts: &CheckOptions<T>,
) -> PropertyVerdict<T> {
    let mut verdict = PropertyVerdict {
        property,
        status: VerdictStatus::NotDisproved,
        witness: None,
        min_value: out.best.as_ref().map(|c| c.value),
        samples: out.samples,
        refinements: out.refinements,
        seed: opts.seed,
        reason: None,
    };
    if let Some(best) = out.best.as_ref() {
        if best.value <= -opts.witness_margin {
            verdict.status = VerdictStatus::Fails;
            verdict.witness = Some(witness(best));
        }
    }
    verdict
}

fn sphere_samples<T: Scalar>(dim: usize, count: usize, seed: u64) -> Vec<(Vec<T>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut z: Vec<T> = (0..dim).map(|_| gaussian(&mut rng)).collect();
        if normalize_in_place(&mut z) {
            out.push((z, 0));
        }
    }
    out
}

/// P tensor: every `x != 0` has some `x_i (A x^{m-1})_i > 0`.
pub fn p_tensor_check<T: Scalar>(a: &Tensor<T>, opts: &CheckOptions<T>) -> PropertyVerdict<T> {
    let property = Property::P;
    if a.order() % 2 == 1 {
        return PropertyVerdict::certified(property, VerdictStatus::CertifiedFails, "odd order", opts.seed);
    }
    if a.dim() == 1 {
        return n1_rule(a, property, opts.seed);
    }
    if let Some(v) = axis_witness(a, property, opts.seed) {
        return v;
    }
    let objective = |x: &[T], _: u64| p_objective(a, x).unwrap_or(T::infinity());
    let project = |x: &mut [T], _: u64| normalize_in_place(x);
    let starts = sphere_samples(a.dim(), opts.samples, opts.seed);
    let out = sample_and_refine(starts, opts.refine_top, &objective, &project, opts);
    from_search(property, out, |c| Witness::Point { x: c.z.clone() }, opts)
}

/// Strictly semi-positive: every nonzero `x >= 0` has some `x_i > 0` with
/// `(A x^{m-1})_i > 0`. The search runs face by face: on the face with
/// support `S` it minimizes `max_{i in S} min(x_i, (A x^{m-1})_i)`, which
/// bounds the support objective from above, so any hit is a valid witness.
pub fn ssp_check<T: Scalar>(a: &Tensor<T>, opts: &CheckOptions<T>) -> PropertyVerdict<T> {
    let property = Property::StrictlySemiPositive;
    let n = a.dim();
    if n == 1 {
        return n1_rule(a, property, opts.seed);
    }
    if let Some(v) = axis_witness(a, property, opts.seed) {
        return v;
    }
    let full: u64 = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    let faces: Vec<u64> = if n <= opts.n_max {
        (1..=full).filter(|m| m.count_ones() >= 2).collect()
    } else {
        vec![full]
    };
    let in_face = |m: u64, i: usize| i >= 64 || m >> i & 1 == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = Vec::with_capacity(opts.samples);
    let mut k = 0;
    while starts.len() < opts.samples {
        let m = faces[k % faces.len()];
        k += 1;
        let mut z: Vec<T> = (0..n)
            .map(|i| {
                let g: T = gaussian(&mut rng);
                if in_face(m, i) { g.abs() } else { T::zero() }
            })
            .collect();
        if normalize_in_place(&mut z) {
            starts.push((z, m));
        }
    }
    let objective = |x: &[T], m: u64| match a.apply_power(x) {
        Ok(ax) => max_of((0..n).filter(|&i| in_face(m, i)).map(|i| x[i].min(ax[i]))),
        Err(_) => T::infinity(),
    };
    let project = |x: &mut [T], m: u64| {
        for (i, v) in x.iter_mut().enumerate() {
            *v = if in_face(m, i) { v.max(T::zero()) } else { T::zero() };
        }
        normalize_in_place(x)
    };
    let refine_top = opts.refine_top.max(faces.len());
    let out = sample_and_refine(starts, refine_top, &objective, &project, opts);
    from_search(property, out, |c| Witness::Point { x: c.z.clone() }, opts)
}

/// `(A x^{m-1})_i + t = 0` on the support, `||x||^2 = 1`.
struct ShiftSystem<'a, T: Scalar> {
    a: &'a Tensor<T>,
    support: &'a [usize],
}

impl<T: Scalar> ShiftSystem<'_, T> {
    fn embed(&self, z: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.a.dim()];
        for (&i, &v) in self.support.iter().zip(z) {
            x[i] = v;
        }
        x
    }
}

impl<T: Scalar> NonlinearSystem<T> for ShiftSystem<'_, T> {
    fn n_vars(&self) -> usize {
        self.support.len() + 1
    }

    fn n_eqs(&self) -> usize {
        self.support.len() + 1
    }

    fn eval(&self, z: &[T], out: &mut [T]) {
        let k = self.support.len();
        let x = self.embed(&z[..k]);
        let mut ax = vec![T::zero(); x.len()];
        self.a.apply_power_into(&x, &mut ax);
        for (r, &i) in self.support.iter().enumerate() {
            out[r] = ax[i] + z[k];
        }
        out[k] = z[..k].iter().map(|&v| v * v).sum::<T>() - T::one();
    }

    fn jacobian(&self, z: &[T], jac: &mut [T]) {
        let n = self.a.dim();
        let k = self.support.len();
        let cols = k + 1;
        let x = self.embed(&z[..k]);
        let mut full = vec![T::zero(); n * n];
        self.a.jacobian_into(&x, &mut full);
        for (r, &i) in self.support.iter().enumerate() {
            for (c, &j) in self.support.iter().enumerate() {
                jac[r * cols + c] = full[i * n + j];
            }
            jac[r * cols + k] = T::one();
        }
        for c in 0..k {
            jac[k * cols + c] = z[c] + z[c];
        }
        jac[k * cols + k] = T::zero();
    }
}

/// R tensor: no `x >= 0`, `x != 0`, `t >= 0` with `(A x^{m-1})_i + t = 0` where
/// `x_i > 0` and `(A x^{m-1})_i + t >= 0` where `x_i = 0`. Every support is
/// searched by multistart Newton on the normalized system.
pub fn r_tensor_check<T: Scalar>(a: &Tensor<T>, opts: &CheckOptions<T>) -> Result<PropertyVerdict<T>> {
    let property = Property::R;
    let n = a.dim();
    if n > opts.n_max {
        return Err(TcpError::TooLarge {
            dim: n,
            max: opts.n_max,
        });
    }
    if n == 1 {
        return Ok(n1_rule(a, property, opts.seed));
    }
    if let Some(v) = axis_witness(a, property, opts.seed) {
        return Ok(v);
    }
    let settings = NewtonSettings::default();
    let per_mask: Vec<(Option<Candidate<T>>, usize)> = (1..(1u64 << n))
        .into_par_iter()
        .map(|mask| {
            let active = ActiveSet::from_mask(n, mask);
            let support = active.indices();
            let sys = ShiftSystem { a, support };
            let mut rng = ChaCha8Rng::seed_from_u64(mask_seed(opts.seed, mask));
            let mut best: Option<Candidate<T>> = None;
            let mut tried = 0;
            for s in 0..opts.r_starts.max(1) {
                let mut y: Vec<T> = if s == 0 {
                    vec![T::one(); support.len()]
                } else {
                    (0..support.len()).map(|_| gaussian::<T>(&mut rng).abs()).collect()
                };
                if !normalize_in_place(&mut y) {
                    continue;
                }
                tried += 1;
                let x = sys.embed(&y);
                let ax = a.apply_power(&x).unwrap_or_else(|_| vec![T::zero(); n]);
                let mean = support.iter().map(|&i| ax[i]).sum::<T>() / T::lit(support.len() as f64);
                let mut z = y;
                z.push((-mean).max(T::zero()));
                let root = damped_newton(&sys, &z, &settings);
                if !(root.residual <= opts.root_tol) {
                    continue;
                }
                let (xs, t) = root.z.split_at(support.len());
                if xs.iter().any(|&v| v < opts.positivity_floor) {
                    continue;
                }
                let x = sys.embed(xs);
                let t = t[0];
                let value = r_objective(a, &x, t).unwrap_or(T::infinity());
                let better = best.as_ref().is_none_or(|b| {
                    value_cmp(value, b.value).then_with(|| lex_cmp(&x, &b.z)) == Ordering::Less
                });
                if better {
                    let mut z = x;
                    z.push(t);
                    best = Some(Candidate { z, tag: mask, value });
                }
            }
            (best, tried)
        })
        .collect();
    let samples = per_mask.iter().map(|(_, t)| t).sum();
    let best = per_mask
        .into_iter()
        .filter_map(|(c, _)| c)
        .min_by(|a, b| value_cmp(a.value, b.value).then_with(|| lex_cmp(&a.z, &b.z)));
    let mut verdict = PropertyVerdict {
        property,
        status: VerdictStatus::NotDisproved,
        witness: None,
        min_value: best.as_ref().map(|c| c.value),
        samples,
        refinements: 0,
        seed: opts.seed,
        reason: None,
    };
    if let Some(c) = best.filter(|c| c.value <= opts.root_tol) {
        let (x, t) = c.z.split_at(n);
        verdict.status = VerdictStatus::Fails;
        verdict.witness = Some(Witness::PointShift {
            x: x.to_vec(),
            t: t[0].max(T::zero()),
        });
    }
    Ok(verdict)
}

/// Strong P: `x -> A x^{m-1} + q` is a P-function on all of `R^n`, i.e.
/// `max_i (x_i - y_i)((A x^{m-1})_i - (A y^{m-1})_i) > 0` for all `x != y`.
pub fn strong_p_check<T: Scalar>(a: &Tensor<T>, opts: &CheckOptions<T>) -> PropertyVerdict<T> {
    let property = Property::StrongP;
    if a.order() % 2 == 1 {
        return PropertyVerdict::certified(property, VerdictStatus::CertifiedFails, "odd order", opts.seed);
    }
    let n = a.dim();
    if n == 1 {
        return n1_rule(a, property, opts.seed);
    }
    if let Some(v) = axis_witness(a, property, opts.seed) {
        return v;
    }
    let sep = opts.pair_separation;
    let separated = |z: &[T]| {
        let d: Vec<T> = (0..n).map(|i| z[i] - z[n + i]).collect();
        norm2(&d) >= sep
    };
    let objective = |z: &[T], _: u64| p_function_objective(a, &z[..n], &z[n..]).unwrap_or(T::infinity());
    let project = |z: &mut [T], _: u64| normalize_in_place(z) && separated(z);
    let starts: Vec<(Vec<T>, u64)> = sphere_samples(2 * n, opts.samples * 2, opts.seed)
        .into_iter()
        .filter(|(z, _)| separated(z))
        .take(opts.samples)
        .collect();
    let out = sample_and_refine(starts, opts.refine_top, &objective, &project, opts);
    from_search(
        property,
        out,
        |c| Witness::Pair {
            x: c.z[..n].to_vec(),
            y: c.z[n..].to_vec(),
        },
        opts,
    )
}

/// Dispatches on `property`.
pub fn check_property<T: Scalar>(
    a: &Tensor<T>,
    property: Property,
    opts: &CheckOptions<T>,
) -> Result<PropertyVerdict<T>> {
    Ok(match property {
        Property::P => p_tensor_check(a, opts),
        Property::StrictlySemiPositive => ssp_check(a, opts),
        Property::R => r_tensor_check(a, opts)?,
        Property::StrongP => strong_p_check(a, opts),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModulusEstimate<T = f64> {
    /// `min psi(x, y) / ||x - y||_inf^2` over the sampled pairs.
    pub mu: T,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub samples: usize,
    pub refinements: usize,
    pub seed: u64,
}

/// Estimates the uniform P-function modulus of `x -> A x^{m-1}` on the box
/// `region` (one `(lo, hi)` per coordinate). The distance is the max norm.
pub fn uniform_p_modulus<T: Scalar>(
    a: &Tensor<T>,
    region: &[(T, T)],
    opts: &CheckOptions<T>,
) -> Result<ModulusEstimate<T>> {
    let n = a.dim();
    if region.len() != n {
        return Err(TcpError::DimMismatch {
            expected: n,
            found: region.len(),
        });
    }
    if let Some((lo, hi)) = region.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(TcpError::BadValue(format!("empty box side [{lo}, {hi}]")));
    }
    if opts.samples == 0 {
        return Err(TcpError::BadValue("sample budget must be positive".into()));
    }
    let sep = opts.pair_separation;
    let gap = |z: &[T]| {
        let d: Vec<T> = (0..n).map(|i| z[i] - z[n + i]).collect();
        norm_inf(&d)
    };
    let objective = |z: &[T], _: u64| {
        let d = gap(z);
        match p_function_objective(a, &z[..n], &z[n..]) {
            Ok(psi) => psi / (d * d),
            Err(_) => T::infinity(),
        }
    };
    let project = |z: &mut [T], _: u64| {
        for (k, v) in z.iter_mut().enumerate() {
            let (lo, hi) = region[k % n];
            *v = v.max(lo).min(hi);
        }
        gap(z) >= sep
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sides: Vec<Uniform<f64>> = region
        .iter()
        .map(|(lo, hi)| Uniform::new_inclusive(lo.as_f64(), hi.as_f64()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| TcpError::BadValue(e.to_string()))?;
    let mut starts = Vec::with_capacity(opts.samples);
    while starts.len() < opts.samples {
        let z: Vec<T> = (0..2 * n).map(|k| T::lit(sides[k % n].sample(&mut rng))).collect();
        if gap(&z) >= sep {
            starts.push((z, 0));
        }
    }
    let out = sample_and_refine(starts, opts.refine_top, &objective, &project, opts);
    let best = out.best.expect("nonempty sample");
    Ok(ModulusEstimate {
        mu: best.value,
        x: best.z[..n].to_vec(),
        y: best.z[n..].to_vec(),
        samples: out.samples,
        refinements: out.refinements,
        seed: opts.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SubtensorAudit<T = f64> {
    /// 1-based indices of the principal sub-tensor.
    pub subset: Vec<usize>,
    pub p: PropertyVerdict<T>,
    pub ssp: PropertyVerdict<T>,
    pub r: PropertyVerdict<T>,
    pub strong_p: PropertyVerdict<T>,
    pub diagonal_positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AuditReport<T = f64> {
    /// Every principal sub-tensor, the full tensor last.
    pub entries: Vec<SubtensorAudit<T>>,
    pub inconsistencies: Vec<String>,
    pub consistent: bool,
}

/// Runs every checker on `a` and on each principal sub-tensor and lists the
/// verdict combinations that contradict strong P => P => {SSP, R}, strong P
/// => positive diagonal, or the closure of strong P under restriction.
pub fn implication_audit<T: Scalar>(a: &Tensor<T>, opts: &CheckOptions<T>) -> Result<AuditReport<T>> {
    let n = a.dim();
    if n > opts.n_max {
        return Err(TcpError::TooLarge {
            dim: n,
            max: opts.n_max,
        });
    }
    let full = (1u64 << n) - 1;
    let mut masks: Vec<u64> = (1..full).collect();
    masks.sort_by_key(|&m| (m.count_ones(), ActiveSet::from_mask(n, m)));
    masks.push(full);
    let entries: Vec<SubtensorAudit<T>> = masks
        .iter()
        .map(|&mask| {
            let subset = ActiveSet::from_mask(n, mask);
            let sub = a.principal_subtensor(subset.indices())?;
            let sub_opts = CheckOptions {
                seed: if mask == full { opts.seed } else { mask_seed(opts.seed, mask) },
                ..opts.clone()
            };
            Ok(SubtensorAudit {
                subset: subset.indices().iter().map(|i| i + 1).collect(),
                p: p_tensor_check(&sub, &sub_opts),
                ssp: ssp_check(&sub, &sub_opts),
                r: r_tensor_check(&sub, &sub_opts)?,
                strong_p: strong_p_check(&sub, &sub_opts),
                diagonal_positive: diagonal_positivity(&sub),
            })
        })
        .collect::<Result<_>>()?;

    let mut inconsistencies = Vec::new();
    for e in &entries {
        let name = format!("{:?}", e.subset);
        let strong = !e.strong_p.is_disproved();
        let p = !e.p.is_disproved();
        if strong && e.p.is_disproved() {
            inconsistencies.push(format!("{name}: strong P not disproved but P fails"));
        }
        if p && e.ssp.is_disproved() {
            inconsistencies.push(format!("{name}: P not disproved but SSP fails"));
        }
        if p && e.r.is_disproved() {
            inconsistencies.push(format!("{name}: P not disproved but R fails"));
        }
        if p && !e.diagonal_positive {
            inconsistencies.push(format!("{name}: P not disproved but a diagonal entry is nonpositive"));
        }
        if strong && !e.diagonal_positive {
            inconsistencies.push(format!("{name}: strong P not disproved but a diagonal entry is nonpositive"));
        }
    }
    let top = entries.last().expect("full tensor audited");
    if !top.strong_p.is_disproved() {
        for e in &entries[..entries.len() - 1] {
            if e.strong_p.is_disproved() {
                inconsistencies.push(format!(
                    "{:?}: strong P fails on a principal sub-tensor of a tensor where it is not disproved",
                    e.subset
                ));
            }
        }
    }
    Ok(AuditReport {
        consistent: inconsistencies.is_empty(),
        entries,
        inconsistencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex31() -> Tensor {
        Tensor::from_one_based(3, 2, [(vec![1, 1, 1], 1.0), (vec![2, 2, 2], 1.0)]).unwrap()
    }

    fn ex32() -> Tensor {
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
        .unwrap()
    }

    fn ex41() -> Tensor {
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
        .unwrap()
    }

    fn identity4(n: usize) -> Tensor {
        Tensor::diagonal(4, &vec![1.0; n]).unwrap()
    }

    fn opts() -> CheckOptions {
        CheckOptions::default()
    }

    fn assert_witness(a: &Tensor, v: &PropertyVerdict, margin: f64) {
        let w = v.witness.as_ref().expect("witness");
        let value = witness_value(a, v.property, w).unwrap();
        assert!(value <= -margin, "{v:?} re-evaluates to {value}");
    }

    #[test]
    fn p_check_examples() {
        let v = p_tensor_check(&ex32(), &opts());
        assert_eq!(v.status, VerdictStatus::NotDisproved);
        assert!(v.min_value.unwrap() > 0.0);
        assert_eq!(v.samples, 20_000);
        let v = p_tensor_check(&ex31(), &opts());
        assert_eq!(v.status, VerdictStatus::CertifiedFails);
        assert_eq!(v.reason.as_deref(), Some("odd order"));
        assert_eq!(v.samples, 0);
        assert_eq!(p_tensor_check(&ex41(), &opts()).status, VerdictStatus::NotDisproved);
    }

    #[test]
    fn p_check_finds_indefinite_witness() {
        // x1^4 - 3 x1^2 x2^2 + x2^4 is negative near the diagonal
        let a = Tensor::from_one_based(
            4,
            2,
            [
                (vec![1, 1, 1, 1], 1.0),
                (vec![1, 1, 2, 2], -1.5),
                (vec![2, 2, 1, 1], -1.5),
                (vec![2, 2, 2, 2], 1.0),
            ],
        )
        .unwrap();
        let v = p_tensor_check(&a, &opts());
        assert_eq!(v.status, VerdictStatus::Fails);
        assert_witness(&a, &v, 1e-10);
        // the witness transports to a strong-P pair (x, 0)
        let Some(Witness::Point { x }) = &v.witness else { panic!() };
        assert!(p_function_objective(&a, x, &[0.0, 0.0]).unwrap() <= -1e-10);
    }

    #[test]
    fn ssp_check_examples() {
        assert_eq!(ssp_check(&ex32(), &opts()).status, VerdictStatus::NotDisproved);
        assert_eq!(ssp_check(&ex31(), &opts()).status, VerdictStatus::NotDisproved);
        let neg = Tensor::diagonal(3, &[-1.0]).unwrap();
        let v = ssp_check(&neg, &opts());
        assert_eq!(v.status, VerdictStatus::Fails);
        assert_eq!(v.witness, Some(Witness::Point { x: vec![1.0] }));
        let pos = Tensor::diagonal(3, &[2.0]).unwrap();
        assert_eq!(ssp_check(&pos, &opts()).status, VerdictStatus::CertifiedHolds);
    }

    #[test]
    fn ssp_check_interior_witness() {
        // positive diagonal but (Ax^3)_i < 0 on the open positive quadrant near x1 = x2
        let a = Tensor::from_one_based(
            4,
            2,
            [
                (vec![1, 1, 1, 1], 1.0),
                (vec![1, 2, 2, 2], -3.0),
                (vec![2, 2, 2, 2], 1.0),
                (vec![2, 1, 1, 1], -3.0),
            ],
        )
        .unwrap();
        let v = ssp_check(&a, &opts());
        assert_eq!(v.status, VerdictStatus::Fails, "{v:?}");
        assert_witness(&a, &v, 1e-10);
        let Some(Witness::Point { x }) = &v.witness else { panic!() };
        assert!(x.iter().all(|&t| t >= 0.0));
        assert!(p_objective(&a, x).unwrap() <= 0.0);
    }

    #[test]
    fn r_check_examples() {
        assert_eq!(r_tensor_check(&ex32(), &opts()).unwrap().status, VerdictStatus::NotDisproved);
        assert_eq!(r_tensor_check(&identity4(2), &opts()).unwrap().status, VerdictStatus::NotDisproved);
        let neg = Tensor::diagonal(4, &[-1.0]).unwrap();
        let v = r_tensor_check(&neg, &opts()).unwrap();
        assert_eq!(v.status, VerdictStatus::Fails);
        assert_eq!(v.witness, Some(Witness::PointShift { x: vec![1.0], t: 1.0 }));
        let big = identity4(7);
        assert!(matches!(r_tensor_check(&big, &opts()), Err(TcpError::TooLarge { dim: 7, max: 6 })));
    }

    #[test]
    fn r_check_interior_witness() {
        // on x1 = x2 = s: (Ax^3)_i = s^3 (1 - 3) < 0, so t = 2 s^3 balances both rows
        let a = Tensor::from_one_based(
            4,
            2,
            [
                (vec![1, 1, 1, 1], 1.0),
                (vec![1, 2, 2, 2], -3.0),
                (vec![2, 2, 2, 2], 1.0),
                (vec![2, 1, 1, 1], -3.0),
            ],
        )
        .unwrap();
        let v = r_tensor_check(&a, &opts()).unwrap();
        assert_eq!(v.status, VerdictStatus::Fails, "{v:?}");
        let Some(Witness::PointShift { x, t }) = &v.witness else { panic!() };
        let s = 0.5f64.sqrt();
        assert!((x[0] - s).abs() < 1e-9 && (x[1] - s).abs() < 1e-9);
        assert!((t - 2.0 * s.powi(3)).abs() < 1e-9);
        assert!(r_objective(&a, x, *t).unwrap() <= 1e-11);
    }

    #[test]
    fn strong_p_examples() {
        let a = ex41();
        let comps = p_function_components(&a, &[2.1, -1.9], &[2.0, -2.0]).unwrap();
        assert!((comps[0] + 0.0299).abs() < 1e-9, "{comps:?}");
        assert!((comps[1] + 0.0499).abs() < 1e-9, "{comps:?}");
        let v = strong_p_check(&a, &opts());
        assert_eq!(v.status, VerdictStatus::Fails);
        assert_witness(&a, &v, 1e-10);
        let Some(Witness::Pair { x, y }) = &v.witness else { panic!() };
        assert!(norm2(&[x[0] - y[0], x[1] - y[1]]) >= 1e-8);

        assert_eq!(strong_p_check(&identity4(2), &opts()).status, VerdictStatus::NotDisproved);
        let v = strong_p_check(&ex31(), &opts());
        assert_eq!(v.status, VerdictStatus::CertifiedFails);
        assert_eq!(v.samples, 0);
    }

    #[test]
    fn witness_shape_mismatch_is_an_error() {
        let w = Witness::Point { x: vec![1.0, 0.0] };
        assert!(witness_value(&ex41(), Property::StrongP, &w).is_err());
        let neg = Witness::Point { x: vec![-1.0, 0.0] };
        assert!(witness_value(&ex41(), Property::StrictlySemiPositive, &neg).is_err());
    }

    #[test]
    fn modulus_examples() {
        let small = CheckOptions::default().with_samples(4000);
        let m = uniform_p_modulus(&ex41(), &[(-3.0, 3.0), (-3.0, 3.0)], &small).unwrap();
        assert!(m.mu < 0.0, "{m:?}");
        let eye = Tensor::diagonal(2, &[1.0, 1.0]).unwrap();
        let m = uniform_p_modulus(&eye, &[(-5.0, 5.0), (0.0, 1.0)], &small).unwrap();
        assert!((m.mu - 1.0).abs() < 1e-12, "{m:?}");
        let m = uniform_p_modulus(&identity4(2), &[(1.0, 2.0), (1.0, 2.0)], &small).unwrap();
        assert!(m.mu >= 3.0 - 1e-9, "{m:?}");
        assert!(uniform_p_modulus(&eye, &[(1.0, 1.0), (0.0, 1.0)], &small).is_err());
        assert!(uniform_p_modulus(&eye, &[(0.0, 1.0)], &small).is_err());
    }

    #[test]
    fn modulus_oracle_on_box() {
        // dense pair grid over [1, 2]^2 for the diagonal identity tensor
        let a = identity4(2);
        let pts: Vec<f64> = (0..=10).map(|k| 1.0 + k as f64 / 10.0).collect();
        let mut oracle = f64::INFINITY;
        for &x0 in &pts {
            for &x1 in &pts {
                for &y0 in &pts {
                    for &y1 in &pts {
                        let d = (x0 - y0).abs().max((x1 - y1).abs());
                        if d == 0.0 {
                            continue;
                        }
                        let psi = ((x0 - y0) * (x0.powi(3) - y0.powi(3)))
                            .max((x1 - y1) * (x1.powi(3) - y1.powi(3)));
                        oracle = oracle.min(psi / (d * d));
                    }
                }
            }
        }
        assert!(oracle >= 3.0);
        let m = uniform_p_modulus(&a, &[(1.0, 2.0), (1.0, 2.0)], &opts()).unwrap();
        assert!(m.mu >= 3.0 - 1e-9 && m.mu <= oracle + 1e-9, "{} vs {oracle}", m.mu);
    }

    #[test]
    fn diagonal_positivity_examples() {
        assert!(diagonal_positivity(&ex32()));
        assert!(diagonal_positivity(&ex41()));
        assert!(!diagonal_positivity(&Tensor::<f64>::zeros(4, 2).unwrap()));
    }

    #[test]
    fn audit_examples() {
        let r = implication_audit(&ex41(), &opts()).unwrap();
        assert!(r.consistent, "{:?}", r.inconsistencies);
        let top = r.entries.last().unwrap();
        assert_eq!(top.subset, vec![1, 2]);
        assert_eq!(top.strong_p.status, VerdictStatus::Fails);
        assert_eq!(top.p.status, VerdictStatus::NotDisproved);

        let r = implication_audit(&identity4(2), &opts()).unwrap();
        assert!(r.consistent);
        assert_eq!(r.entries.len(), 3);
        assert_eq!(r.entries[0].subset, vec![1]);
        assert_eq!(r.entries[0].strong_p.status, VerdictStatus::CertifiedHolds);
        assert!(r.entries.iter().all(|e| e.diagonal_positive && !e.strong_p.is_disproved()));

        let zero = Tensor::<f64>::zeros(4, 2).unwrap();
        let r = implication_audit(&zero, &opts()).unwrap();
        assert!(r.consistent, "{:?}", r.inconsistencies);
        let top = r.entries.last().unwrap();
        assert!(!top.diagonal_positive);
        assert_eq!(top.ssp.status, VerdictStatus::Fails);
    }

    #[test]
    fn verdict_json_shape() {
        let v = strong_p_check(&ex41(), &opts());
        let j: serde_json::Value = serde_json::to_value(&v).unwrap();
        assert_eq!(j["property"], "strong-p");
        assert_eq!(j["status"], "fails");
        assert!(j["witness"]["x"].is_array() && j["witness"]["y"].is_array());
        assert_eq!(j["seed"], 42);
        let back: PropertyVerdict = serde_json::from_value(j).unwrap();
        assert_eq!(back, v);
        let c = p_tensor_check(&ex31(), &opts());
        let j = serde_json::to_value(&c).unwrap();
        assert_eq!(j["status"], "certified_fails");
        assert!(j["witness"].is_null());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = ex41();
        assert_eq!(strong_p_check(&a, &opts()), strong_p_check(&a, &opts()));
        let other = strong_p_check(&a, &opts().with_seed(7));
        assert_eq!(other.status, VerdictStatus::Fails);
        assert_eq!(other.seed, 7);
    }
}
