//! Solution finding for TCP(q, A).
//!
//! Enumeration splits the complementarity conditions by active set: for a
//! support `J`, the candidate has `x_i = 0` off `J` and `F_i(x) = 0` on `J`,
//! a square polynomial system in `|J|` unknowns solved by multistart damped
//! Newton. Candidates that pass the full residual test are merged across all
//! `2^n` supports. Completeness is heuristic: multistart can miss roots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcpError};
use crate::newton::{damped_newton, NewtonSettings, NonlinearSystem};
use crate::scalar::{dist2, lex_cmp, to_f64_vec, Scalar};
use crate::tcp::{residuals_from, ResidualReport, TcpInstance};
use crate::tensor::Tensor;

/// Tunables shared by the enumeration, iterative and probing routines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SolverOptions<T = f64> {
    /// Residual a Newton root must reach on its active-set system.
    pub root_tol: T,
    /// Tolerance handed to [`TcpInstance::is_solution`].
    pub solution_tol: T,
    /// Candidates closer than this (Euclidean) are the same solution.
    pub dedupe_dist: T,
    /// Active coordinates below this are rejected as boundary roots.
    pub positivity_floor: T,
    /// Start-grid points per active coordinate.
    pub grid_points: usize,
    /// Start grids cover `[0, radius]` per coordinate.
    pub radius: T,
    /// Seeded random starts per active set, on top of the grid.
    pub random_starts: usize,
    /// Grids larger than this are replaced by a Halton set of this size.
    pub max_grid_starts: usize,
    /// Largest dimension accepted by the `2^n` enumeration.
    pub n_max: usize,
    pub newton_max_iter: usize,
    pub max_halvings: usize,
    /// Multistart budget of [`solve_iterative`].
    pub iterative_starts: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            root_tol: T::tol(1e-11, 1e3),
            solution_tol: T::tol(1e-9, 1e4),
            dedupe_dist: T::tol(1e-6, 1e4),
            positivity_floor: T::tol(1e-10, 1e3),
            grid_points: 8,
            radius: T::lit(10.0),
            random_starts: 8,
            max_grid_starts: 4096,
            n_max: 6,
            newton_max_iter: 200,
            max_halvings: 40,
            iterative_starts: 32,
            seed: 42,
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_radius(mut self, radius: T) -> Self {
        self.radius = radius;
        self
    }

    fn newton(&self) -> NewtonSettings<T> {
        NewtonSettings {
            max_iter: self.newton_max_iter,
            max_halvings: self.max_halvings,
            ..NewtonSettings::default()
        }
    }
}

/// Indices allowed to be strictly positive in a candidate solution.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    /// Sorted, deduplicated 0-based support.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ActiveSet(indices)
    }

    pub fn from_mask(dim: usize, mask: u64) -> Self {
        ActiveSet((0..dim).filter(|&i| mask >> i & 1 == 1).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One verified solution with its residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Solution<T = f64> {
    pub x: Vec<T>,
    pub residuals: ResidualReport<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SolutionSet<T = f64> {
    /// Sorted lexicographically by `x`.
    pub solutions: Vec<Solution<T>>,
    pub search_params: SolverOptions<T>,
    /// True when every active set was searched with its full start grid.
    pub exhaustive: bool,
}

impl<T: Scalar> SolutionSet<T> {
    pub fn points(&self) -> Vec<Vec<T>> {
        self.solutions.iter().map(|s| s.x.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

/// `F_J(x) = 0` with `x` zero off `J`, in the `|J|` free coordinates.
struct ActiveSystem<'a, T: Scalar> {
    inst: &'a TcpInstance<T>,
    support: &'a [usize],
}

impl<T: Scalar> ActiveSystem<'_, T> {
    fn embed(&self, y: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.inst.dim()];
        for (&i, &v) in self.support.iter().zip(y) {
            x[i] = v;
        }
        x
    }
}

impl<T: Scalar> NonlinearSystem<T> for ActiveSystem<'_, T> {
    fn n_vars(&self) -> usize {
        self.support.len()
    }

    fn n_eqs(&self) -> usize {
        self.support.len()
    }

    fn eval(&self, y: &[T], out: &mut [T]) {
        let x = self.embed(y);
        let mut f = vec![T::zero(); x.len()];
        self.inst.eval_f_into(&x, &mut f);
        for (o, &i) in out.iter_mut().zip(self.support) {
            *o = f[i];
        }
    }

    fn jacobian(&self, y: &[T], jac: &mut [T]) {
        let n = self.inst.dim();
        let k = self.support.len();
        let x = self.embed(y);
        let mut full = vec![T::zero(); n * n];
        self.inst.tensor().jacobian_into(&x, &mut full);
        for (r, &i) in self.support.iter().enumerate() {
            for (c, &j) in self.support.iter().enumerate() {
                jac[r * k + c] = full[i * n + j];
            }
        }
    }
}

fn halton(index: usize, base: usize) -> f64 {
    let (mut f, mut r, mut i) = (1.0, 0.0, index);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic start points in `[0, radius]^k`; the flag is false when the
/// tensor grid was too large and got replaced by a Halton set.
fn start_points<T: Scalar>(k: usize, opts: &SolverOptions<T>, seed: u64) -> (Vec<Vec<T>>, bool) {
    let g = opts.grid_points.max(1);
    let r = opts.radius.as_f64();
    let full = g
        .checked_pow(k as u32)
        .filter(|&c| c <= opts.max_grid_starts);
    let mut starts = Vec::new();
    match full {
        Some(count) => {
            for mut c in 0..count {
                let mut p = Vec::with_capacity(k);
                for _ in 0..k {
                    p.push(T::lit((((c % g) as f64) + 0.5) / g as f64 * r));
                    c /= g;
                }
                starts.push(p);
            }
        }
        None => {
            for i in 1..=opts.max_grid_starts {
                starts.push(
                    (0..k)
                        .map(|d| T::lit(halton(i, PRIMES[d % PRIMES.len()]) * r))
                        .collect(),
                );
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..opts.random_starts {
        starts.push((0..k).map(|_| T::lit(rng.random::<f64>() * r)).collect());
    }
    (starts, full.is_some())
}

pub(crate) fn mask_seed(seed: u64, mask: u64) -> u64 {
    seed ^ mask.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Keeps one representative (smallest key) per cluster of points within `dist`.
fn dedupe<T: Scalar, V>(mut items: Vec<(Vec<T>, T, V)>, dist: T) -> Vec<(Vec<T>, T, V)> {
    items.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(&a.0, &b.0))
    });
    let mut kept: Vec<(Vec<T>, T, V)> = Vec::new();
    for item in items {
        if kept.iter().all(|k| dist2(&k.0, &item.0) > dist) {
            kept.push(item);
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    kept
}

fn active_set_roots<T: Scalar>(
    inst: &TcpInstance<T>,
    active: &ActiveSet,
    opts: &SolverOptions<T>,
    seed: u64,
) -> (Vec<Vec<T>>, bool) {
    if active.is_empty() {
        return (vec![vec![T::zero(); inst.dim()]], true);
    }
    let sys = ActiveSystem { inst, support: active.indices() };
    let (starts, full_grid) = start_points(active.len(), opts, seed);
    let settings = opts.newton();
    let mut roots = Vec::new();
    for s in &starts {
        let out = damped_newton(&sys, s, &settings);
        if out.residual <= opts.root_tol && out.z.iter().all(|&v| v >= opts.positivity_floor) {
            roots.push((sys.embed(&out.z), out.residual, ()));
        }
    }
    let kept = dedupe(roots, opts.dedupe_dist);
    (kept.into_iter().map(|(x, _, _)| x).collect(), full_grid)
}

/// Roots of the active-set system for `active`, embedded in `R^n`.
///
/// Feasibility off the support (`F_i(x) >= 0`) is not checked here.
pub fn solve_active_set<T: Scalar>(
    inst: &TcpInstance<T>,
    active: &ActiveSet,
    opts: &SolverOptions<T>,
) -> Result<Vec<Vec<T>>> {
    if active.indices().iter().any(|&i| i >= inst.dim()) {
        return Err(TcpError::BadIndexSet(active.indices().to_vec()));
    }
    let mask = active.indices().iter().fold(0u64, |m, &i| m | 1 << i);
    Ok(active_set_roots(inst, active, opts, mask_seed(opts.seed, mask)).0)
}

fn check_enumerable<T: Scalar>(dim: usize, opts: &SolverOptions<T>) -> Result<()> {
    if dim > opts.n_max || dim >= 64 {
        return Err(TcpError::TooLarge { dim, max: opts.n_max });
    }
    Ok(())
}

/// All solutions found over the `2^n` active sets.
pub fn enumerate_solutions<T: Scalar>(
    inst: &TcpInstance<T>,
    opts: &SolverOptions<T>,
) -> Result<SolutionSet<T>> {
    let n = inst.dim();
    check_enumerable(n, opts)?;
    let per_mask: Vec<(Vec<Vec<T>>, bool)> = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| {
            let active = ActiveSet::from_mask(n, mask);
            active_set_roots(inst, &active, opts, mask_seed(opts.seed, mask))
        })
        .collect();
    let exhaustive = per_mask.iter().all(|(_, full)| *full);
    let mut verified = Vec::new();
    for x in per_mask.into_iter().flat_map(|(r, _)| r) {
        let f = inst.eval_f(&x)?;
        let report = residuals_from(&x, &f);
        let worst = report.max_violation();
        if worst <= opts.solution_tol {
            verified.push((x, worst, report));
        }
    }
    let solutions = dedupe(verified, opts.dedupe_dist)
        .into_iter()
        .map(|(x, _, residuals)| Solution { x, residuals })
        .collect();
    Ok(SolutionSet {
        solutions,
        search_params: opts.clone(),
        exhaustive,
    })
}

/// Result of a successful [`solve_iterative`] run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IterativeSolution<T = f64> {
    pub x: Vec<T>,
    pub residuals: ResidualReport<T>,
    /// Index of the start that converged (0 is the supplied or zero start).
    pub start_index: usize,
}

/// `min(x, F(x)) = 0` with the row-selecting generalized Jacobian.
struct NaturalMap<'a, T: Scalar> {
    inst: &'a TcpInstance<T>,
}

impl<T: Scalar> NonlinearSystem<T> for NaturalMap<'_, T> {
    fn n_vars(&self) -> usize {
        self.inst.dim()
    }

    fn n_eqs(&self) -> usize {
        self.inst.dim()
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        self.inst.eval_f_into(x, out);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = xi.min(*o);
        }
    }

    fn jacobian(&self, x: &[T], jac: &mut [T]) {
        let n = self.inst.dim();
        let mut f = vec![T::zero(); n];
        self.inst.eval_f_into(x, &mut f);
        self.inst.tensor().jacobian_into(x, jac);
        for i in 0..n {
            if x[i] <= f[i] {
                for j in 0..n {
                    jac[i * n + j] = if i == j { T::one() } else { T::zero() };
                }
            }
        }
    }
}

/// One solution by semismooth Newton on the natural residual `min(x, F(x))`,
/// with multistart from `start` (or the origin) and seeded points in
/// `[0, radius]^n`, all projected onto the nonnegative orthant.
pub fn solve_iterative<T: Scalar>(
    inst: &TcpInstance<T>,
    start: Option<&[T]>,
    opts: &SolverOptions<T>,
) -> Result<IterativeSolution<T>> {
    let n = inst.dim();
    let first: Vec<T> = match start {
        Some(s) => {
            inst.tensor().check_len(s)?;
            s.iter().map(|&v| v.max(T::zero())).collect()
        }
        None => vec![T::zero(); n],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let r = opts.radius.as_f64();
    let sys = NaturalMap { inst };
    let settings = NewtonSettings {
        deflate: false,
        ..opts.newton()
    };
    let mut best: Option<(Vec<T>, T)> = None;
    for k in 0..opts.iterative_starts.max(1) {
        let s = if k == 0 {
            first.clone()
        } else {
            (0..n).map(|_| T::lit(rng.random::<f64>() * r)).collect()
        };
        let candidates = if k == 0 {
            vec![s.clone(), damped_newton(&sys, &s, &settings).z]
        } else {
            vec![damped_newton(&sys, &s, &settings).z]
        };
        for x in candidates {
            let f = inst.eval_f(&x)?;
            let report = residuals_from(&x, &f);
            let worst = report.max_violation();
            if worst <= opts.solution_tol {
                return Ok(IterativeSolution { x, residuals: report, start_index: k });
            }
            if best.as_ref().is_none_or(|(_, b)| worst < *b) {
                best = Some((x, worst));
            }
        }
    }
    let (x, residual) = best.expect("at least one start");
    Err(TcpError::NoConvergence {
        best: to_f64_vec(&x),
        residual: residual.as_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GusVerdict {
    #[serde(rename = "GUS_consistent")]
    Consistent,
    #[serde(rename = "GUS_violated")]
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GusRecord<T = f64> {
    pub q: Vec<T>,
    pub solution_count: usize,
    pub solutions: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GusReport<T = f64> {
    pub records: Vec<GusRecord<T>>,
    /// Every `q` whose solution count differs from one.
    pub flags: Vec<Vec<T>>,
    pub verdict: GusVerdict,
}

/// Uniform grid over `[lo, hi]^dim` with `steps` points per axis, first axis
/// varying slowest.
pub fn q_grid<T: Scalar>(dim: usize, lo: T, hi: T, steps: usize) -> Vec<Vec<T>> {
    let axis: Vec<T> = if steps <= 1 {
        vec![lo]
    } else {
        (0..steps)
            .map(|k| lo + (hi - lo) * T::lit(k as f64) / T::lit((steps - 1) as f64))
            .collect()
    };
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut p = p.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

/// Enumerates solutions for every `q` and flags those without a unique one.
pub fn gus_probe<T: Scalar>(
    tensor: &Tensor<T>,
    q_list: &[Vec<T>],
    opts: &SolverOptions<T>,
) -> Result<GusReport<T>> {
    check_enumerable(tensor.dim(), opts)?;
    let records = q_list
        .par_iter()
        .map(|q| {
            let inst = TcpInstance::new(tensor.clone(), q.clone())?;
            let set = enumerate_solutions(&inst, opts)?;
            Ok(GusRecord {
                q: q.clone(),
                solution_count: set.len(),
                solutions: set.points(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let flags: Vec<Vec<T>> = records
        .iter()
        .filter(|r| r.solution_count != 1)
        .map(|r| r.q.clone())
        .collect();
    let verdict = if flags.is_empty() {
        GusVerdict::Consistent
    } else {
        GusVerdict::Violated
    };
    Ok(GusReport { records, flags, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RadiusRecord<T = f64> {
    pub radius: T,
    pub solutions: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundednessReport<T = f64> {
    pub per_radius: Vec<RadiusRecord<T>>,
    /// Solution sets at the two largest radii agree within the dedupe distance.
    pub stabilized: bool,
    /// Every radius produced at least one solution.
    pub nonempty: bool,
}

/// Whether two point sets match one-to-one within `dist`.
pub fn same_point_set<T: Scalar>(a: &[Vec<T>], b: &[Vec<T>], dist: T) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| b.iter().any(|r| dist2(p, r) <= dist))
        && b.iter().all(|p| a.iter().any(|r| dist2(p, r) <= dist))
}

/// Re-runs enumeration with start grids on `[0, R]^n` for each radius and
/// reports whether the solution set stays put as `R` grows.
pub fn boundedness_probe<T: Scalar>(
    inst: &TcpInstance<T>,
    radii: &[T],
    opts: &SolverOptions<T>,
) -> Result<BoundednessReport<T>> {
    check_enumerable(inst.dim(), opts)?;
    if radii.is_empty()
        || radii.iter().any(|&r| !(r >= T::one()) || !r.is_finite())
        || radii.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(TcpError::BadValue("radii must be increasing and >= 1".into()));
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    for &radius in radii {
        let set = enumerate_solutions(inst, &opts.clone().with_radius(radius))?;
        per_radius.push(RadiusRecord { radius, solutions: set.points() });
    }
    let stabilized = per_radius.len() >= 2 && {
        let k = per_radius.len();
        same_point_set(
            &per_radius[k - 2].solutions,
            &per_radius[k - 1].solutions,
            opts.dedupe_dist,
        )
    };
    let nonempty = per_radius.iter().all(|r| !r.solutions.is_empty());
    Ok(BoundednessReport { per_radius, stabilized, nonempty })
}
