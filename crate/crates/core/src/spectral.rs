//! Real H- and Z-eigenpairs.
//!
//! H: `A x^{m-1} = lambda x^{[m-1]}` (componentwise power).
//! Z: `A x^{m-1} = lambda x` with `||x|| = 1`.
//!
//! For `n = 2` every eigenvector direction is a root of a scalar function on
//! the unit circle, located by a sign-change scan plus bisection. Larger `n`
//! falls back to multistart Newton from shifted power iterates and is flagged
//! heuristic.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcpError};
use crate::newton::{damped_newton, NewtonSettings, NonlinearSystem};
use crate::property_checkers::{strong_p_check, CheckOptions, VerdictStatus};
use crate::scalar::{dot, lex_cmp, norm2, Scalar};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EigenKind {
    H,
    Z,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EigenPair<T = f64> {
    pub kind: EigenKind,
    pub lambda: T,
    pub x: Vec<T>,
    pub residual: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EigenOptions<T = f64> {
    /// Angles in the `n = 2` scan of `[0, 2 pi)`.
    pub grid_points: usize,
    /// Bisection stops once the angle bracket is this narrow.
    pub angle_tol: f64,
    /// Pairs closer than this in `lambda` and in direction are merged.
    pub dedupe: T,
    /// Pairs with a larger defining-equation residual are dropped.
    pub residual_tol: T,
    /// Starts of the `n >= 3` heuristic.
    pub starts: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for EigenOptions<T> {
    fn default() -> Self {
        EigenOptions {
            grid_points: 10_000,
            angle_tol: 1e-13,
            dedupe: T::tol(1e-8, 1e4),
            residual_tol: T::tol(1e-10, 1e3),
            starts: 64,
            power_iters: 100,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EigenReport<T = f64> {
    pub kind: EigenKind,
    /// Sorted by `lambda`, then lexicographically by `x`.
    pub pairs: Vec<EigenPair<T>>,
    /// True when the pair list may be incomplete (`n >= 3`).
    pub heuristic: bool,
    /// Every direction is an eigenvector. `pairs` then holds representatives:
    /// the axes, the diagonals and the extreme eigenvalues on the scan grid.
    pub degenerate: bool,
}

impl<T: Scalar> EigenReport<T> {
    pub fn lambdas(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn min_lambda(&self) -> Option<T> {
        self.pairs.iter().map(|p| p.lambda).reduce(T::min)
    }
}

fn power_vec<T: Scalar>(x: &[T], p: usize) -> Vec<T> {
    x.iter().map(|&v| v.powi(p as i32)).collect()
}

fn residual_of<T: Scalar>(a: &Tensor<T>, kind: EigenKind, lambda: T, x: &[T]) -> Result<T> {
    let ax = a.apply_power(x)?;
    let rhs = match kind {
        EigenKind::H => power_vec(x, a.order() - 1),
        EigenKind::Z => x.to_vec(),
    };
    let d: Vec<T> = ax.iter().zip(&rhs).map(|(&u, &v)| u - lambda * v).collect();
    Ok(norm2(&d))
}

/// The defining-equation residual of `pair` on `a`:
/// `||A x^{m-1} - lambda x^{[m-1]}||` (H) or `||A x^{m-1} - lambda x||` (Z).
pub fn eigen_residual<T: Scalar>(a: &Tensor<T>, pair: &EigenPair<T>) -> Result<T> {
    a.check_len(&pair.x)?;
    if pair.x.iter().all(|&v| v == T::zero()) {
        return Err(TcpError::BadEigenvector);
    }
    residual_of(a, pair.kind, pair.lambda, &pair.x)
}

/// `lambda` for the direction `x`: `x . A x^{m-1}` for unit `x` (Z), or the
/// ratio on the largest coordinate (H).
fn lambda_at<T: Scalar>(a: &Tensor<T>, kind: EigenKind, x: &[T]) -> T {
    let ax = a.apply_power(x).unwrap_or_else(|_| vec![T::nan(); x.len()]);
    match kind {
        EigenKind::Z => dot(x, &ax),
        EigenKind::H => {
            let (i, _) = x
                .iter()
                .enumerate()
                .fold((0, T::zero()), |b, (i, &v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
            ax[i] / x[i].powi(a.order() as i32 - 1)
        }
    }
}

/// Sign-normalizes directions whose negation is the same eigenpair.
fn canonical<T: Scalar>(kind: EigenKind, order: usize, mut x: Vec<T>) -> Vec<T> {
    let symmetric = kind == EigenKind::H || order.is_multiple_of(2);
    if symmetric {
        let tiny = T::epsilon().sqrt();
        if let Some(&lead) = x.iter().find(|v| v.abs() > tiny) {
            if lead < T::zero() {
                x.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    x
}

fn make_pair<T: Scalar>(a: &Tensor<T>, kind: EigenKind, x: Vec<T>) -> Option<EigenPair<T>> {
    let x = canonical(kind, a.order(), x);
    let lambda = lambda_at(a, kind, &x);
    let residual = residual_of(a, kind, lambda, &x).ok()?;
    (lambda.is_finite() && residual.is_finite()).then_some(EigenPair {
        kind,
        lambda,
        x,
        residual,
    })
}

fn finish<T: Scalar>(mut pairs: Vec<EigenPair<T>>, opts: &EigenOptions<T>) -> Vec<EigenPair<T>> {
    pairs.retain(|p| p.residual <= opts.residual_tol);
    // keep the smallest residual per cluster
    pairs.sort_by(|p, q| {
        p.residual
            .partial_cmp(&q.residual)
            .unwrap_or(Ordering::Equal)
            .then_with(|| lex_cmp(&p.x, &q.x))
    });
    let mut kept: Vec<EigenPair<T>> = Vec::new();
    for p in pairs {
        let same = |k: &EigenPair<T>| {
            let dl = (k.lambda - p.lambda).abs() <= opts.dedupe * (T::one() + p.lambda.abs());
            let dx: Vec<T> = k.x.iter().zip(&p.x).map(|(&u, &v)| u - v).collect();
            dl && norm2(&dx) <= opts.dedupe * (T::one() + norm2(&p.x))
        };
        if !kept.iter().any(same) {
            kept.push(p);
        }
    }
    kept.sort_by(|p, q| {
        p.lambda
            .partial_cmp(&q.lambda)
            .unwrap_or(Ordering::Equal)
            .then_with(|| lex_cmp(&p.x, &q.x))
    });
    kept
}

fn circle<T: Scalar>(theta: f64) -> Vec<T> {
    vec![T::lit(theta.cos()), T::lit(theta.sin())]
}

/// The cross function whose zeros on the circle are eigenvector directions.
fn cross<T: Scalar>(a: &Tensor<T>, kind: EigenKind, theta: f64) -> f64 {
    let x = circle::<T>(theta);
    let ax = a.apply_power(&x).unwrap_or_else(|_| vec![T::nan(); 2]);
    let (ax, x) = (ax.iter().map(|v| v.as_f64()).collect::<Vec<_>>(), [x[0].as_f64(), x[1].as_f64()]);
    match kind {
        EigenKind::Z => ax[0] * x[1] - ax[1] * x[0],
        EigenKind::H => {
            let p = a.order() as i32 - 1;
            ax[0] * x[1].powi(p) - ax[1] * x[0].powi(p)
        }
    }
}

fn bisect<T: Scalar>(a: &Tensor<T>, kind: EigenKind, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut g_lo = cross(a, kind, lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g = cross(a, kind, mid);
        if g == 0.0 {
            return mid;
        }
        if (g < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `|g|` on `[lo, hi]`, for roots where `g`
/// touches zero without changing sign.
fn touch_point<T: Scalar>(a: &Tensor<T>, kind: EigenKind, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let f = |t: f64| cross(a, kind, t).abs();
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

fn scan_n2<T: Scalar>(a: &Tensor<T>, kind: EigenKind, opts: &EigenOptions<T>) -> EigenReport<T> {
    let m = opts.grid_points.max(8);
    let step = 2.0 * PI / m as f64;
    let thetas: Vec<f64> = (0..m).map(|k| k as f64 * step).collect();
    let g: Vec<f64> = thetas.par_iter().map(|&t| cross(a, kind, t)).collect();
    let scale: f64 = a.entries().map(|(_, v)| v.as_f64().abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let flat = 64.0 * T::epsilon().as_f64() * scale;

    if g.iter().all(|v| v.abs() <= flat) {
        let mut reps: Vec<f64> = (0..8).map(|k| k as f64 * PI / 4.0).collect();
        let lambdas: Vec<f64> = thetas
            .par_iter()
            .map(|&t| lambda_at(a, kind, &circle::<T>(t)).as_f64())
            .collect();
        let arg = |better: fn(f64, f64) -> bool| {
            (0..m).fold(0, |b, k| if better(lambdas[k], lambdas[b]) { k } else { b })
        };
        reps.push(thetas[arg(|u, v| u < v)]);
        reps.push(thetas[arg(|u, v| u > v)]);
        let pairs = reps
            .into_iter()
            .filter_map(|t| make_pair(a, kind, circle(t)))
            .collect();
        return EigenReport {
            kind,
            pairs: finish(pairs, opts),
            heuristic: false,
            degenerate: true,
        };
    }

    let roots: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|k| {
            let (t0, t1) = (thetas[k], thetas[k] + step);
            let (g0, g1) = (g[k], g[(k + 1) % m]);
            let mut out = Vec::new();
            if g0 == 0.0 {
                out.push(t0);
            } else if g1 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
                out.push(bisect(a, kind, t0, t1, opts.angle_tol));
            } else if g1 != 0.0 {
                // local minimum of |g| without a sign change
                let gp = g[(k + m - 1) % m];
                if g0.abs() < gp.abs() && g0.abs() <= g1.abs() && (gp < 0.0) == (g0 < 0.0) {
                    out.push(touch_point(a, kind, t0 - step, t1, opts.angle_tol));
                }
            }
            out
        })
        .collect();
    let pairs = roots
        .into_iter()
        .filter_map(|t| make_pair(a, kind, circle(t)))
        .collect();
    EigenReport {
        kind,
        pairs: finish(pairs, opts),
        heuristic: false,
        degenerate: false,
    }
}

fn scalar_case<T: Scalar>(a: &Tensor<T>, kind: EigenKind, opts: &EigenOptions<T>) -> EigenReport<T> {
    let pairs = [T::one(), -T::one()]
        .into_iter()
        .filter_map(|s| make_pair(a, kind, vec![s]))
        .collect();
    EigenReport {
        kind,
        pairs: finish(pairs, opts),
        heuristic: false,
        degenerate: false,
    }
}

/// `A x^{m-1} - lambda x^{[m-1]}` (H) or `- lambda x` (Z), and `||x||^2 - 1`.
struct EigenSystem<'a, T: Scalar> {
    a: &'a Tensor<T>,
    kind: EigenKind,
}

impl<T: Scalar> NonlinearSystem<T> for EigenSystem<'_, T> {
    fn n_vars(&self) -> usize {
        self.a.dim() + 1
    }

    fn n_eqs(&self) -> usize {
        self.a.dim() + 1
    }

    fn eval(&self, z: &[T], out: &mut [T]) {
        let n = self.a.dim();
        let (x, lambda) = (&z[..n], z[n]);
        self.a.apply_power_into(x, &mut out[..n]);
        let p = self.a.order() as i32 - 1;
        for i in 0..n {
            let rhs = match self.kind {
                EigenKind::H => x[i].powi(p),
                EigenKind::Z => x[i],
            };
            out[i] = out[i] - lambda * rhs;
        }
        out[n] = x.iter().map(|&v| v * v).sum::<T>() - T::one();
    }

    fn jacobian(&self, z: &[T], jac: &mut [T]) {
        let n = self.a.dim();
        let cols = n + 1;
        let (x, lambda) = (&z[..n], z[n]);
        let mut ja = vec![T::zero(); n * n];
        self.a.jacobian_into(x, &mut ja);
        let p = self.a.order() as i32 - 1;
        for i in 0..n {
            for j in 0..n {
                jac[i * cols + j] = ja[i * n + j];
            }
            let (d, rhs) = match self.kind {
                EigenKind::H => (T::lit(p as f64) * x[i].powi(p - 1), x[i].powi(p)),
                EigenKind::Z => (T::one(), x[i]),
            };
            jac[i * cols + i] = jac[i * cols + i] - lambda * d;
            jac[i * cols + n] = -rhs;
        }
        for j in 0..n {
            jac[n * cols + j] = x[j] + x[j];
        }
        jac[n * cols + n] = T::zero();
    }
}

fn heuristic<T: Scalar>(a: &Tensor<T>, kind: EigenKind, opts: &EigenOptions<T>) -> EigenReport<T> {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<T>> = (0..opts.starts.max(1))
        .map(|_| {
            let v: Vec<T> = (0..n)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    T::lit(g)
                })
                .collect();
            let s = norm2(&v);
            v.into_iter().map(|t| t / s).collect()
        })
        .collect();
    let shift: T = a.entries().map(|(_, v)| v.abs()).sum();
    let settings = NewtonSettings::default();
    let pairs: Vec<EigenPair<T>> = starts
        .into_par_iter()
        .filter_map(|mut x| {
            // shifted power iteration x <- normalize(A x^{m-1} + shift x)
            for _ in 0..opts.power_iters {
                let ax = a.apply_power(&x).ok()?;
                let y: Vec<T> = ax.iter().zip(&x).map(|(&u, &v)| u + shift * v).collect();
                let s = norm2(&y);
                if !(s > T::zero() && s.is_finite()) {
                    break;
                }
                x = y.into_iter().map(|t| t / s).collect();
            }
            let sys = EigenSystem { a, kind };
            let mut z = x.clone();
            z.push(lambda_at(a, EigenKind::Z, &x));
            let root = damped_newton(&sys, &z, &settings);
            let x = root.z[..n].to_vec();
            let s = norm2(&x);
            make_pair(a, kind, x.into_iter().map(|t| t / s).collect())
        })
        .collect();
    EigenReport {
        kind,
        pairs: finish(pairs, opts),
        heuristic: true,
        degenerate: false,
    }
}

/// Real eigenpairs of `kind`; exact scan for `n <= 2`, heuristic beyond.
/// H eigenvectors are reported with unit 2-norm.
pub fn eigenpairs<T: Scalar>(a: &Tensor<T>, kind: EigenKind, opts: &EigenOptions<T>) -> EigenReport<T> {
    match a.dim() {
        1 => scalar_case(a, kind, opts),
        2 => scan_n2(a, kind, opts),
        _ => heuristic(a, kind, opts),
    }
}

pub fn z_eigenpairs<T: Scalar>(a: &Tensor<T>, opts: &EigenOptions<T>) -> EigenReport<T> {
    eigenpairs(a, EigenKind::Z, opts)
}

pub fn h_eigenpairs<T: Scalar>(a: &Tensor<T>, opts: &EigenOptions<T>) -> EigenReport<T> {
    eigenpairs(a, EigenKind::H, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PositivityReport<T = f64> {
    pub min_h: Option<T>,
    pub min_z: Option<T>,
    /// Some eigenpair was found and every computed eigenvalue is positive.
    pub all_positive: bool,
    pub strong_p: VerdictStatus,
    /// Strong P is not disproved yet some computed eigenvalue is `<= 0`.
    /// Strong P tensors have only positive H- and Z-eigenvalues, so this
    /// points at a defect in a checker or in the eigen solver.
    pub contradiction: bool,
    pub h: EigenReport<T>,
    pub z: EigenReport<T>,
}

pub fn positivity_report<T: Scalar>(
    a: &Tensor<T>,
    eig: &EigenOptions<T>,
    check: &CheckOptions<T>,
) -> PositivityReport<T> {
    let h = h_eigenpairs(a, eig);
    let z = z_eigenpairs(a, eig);
    let min_h = h.min_lambda();
    let min_z = z.min_lambda();
    let all_positive = (min_h.is_some() || min_z.is_some())
        && min_h.is_none_or(|v| v > T::zero())
        && min_z.is_none_or(|v| v > T::zero());
    let verdict = strong_p_check(a, check);
    let nonpositive = h.pairs.iter().chain(&z.pairs).any(|p| p.lambda <= T::zero());
    let contradiction = !verdict.is_disproved() && nonpositive;
    PositivityReport {
        min_h,
        min_z,
        all_positive,
        strong_p: verdict.status,
        contradiction,
        h,
        z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity4() -> Tensor {
        Tensor::diagonal(4, &[1.0, 1.0]).unwrap()
    }

    fn ex31() -> Tensor {
        Tensor::diagonal(3, &[1.0, 1.0]).unwrap()
    }

    fn opts() -> EigenOptions {
        EigenOptions::default()
    }

    fn has(report: &EigenReport, lambda: f64, x: &[f64]) -> bool {
        report.pairs.iter().any(|p| {
            (p.lambda - lambda).abs() < 1e-9 && p.x.iter().zip(x).all(|(u, v)| (u - v).abs() < 1e-9)
        })
    }

    #[test]
    fn residual_examples() {
        let s = 0.5f64.sqrt();
        let pair = |kind, lambda, x: Vec<f64>| EigenPair { kind, lambda, x, residual: 0.0 };
        assert_eq!(eigen_residual(&identity4(), &pair(EigenKind::H, 1.0, vec![1.0, 0.0])).unwrap(), 0.0);
        let r = eigen_residual(&identity4(), &pair(EigenKind::Z, 0.5, vec![s, s])).unwrap();
        assert!(r < 1e-12);
        assert_eq!(eigen_residual(&ex31(), &pair(EigenKind::H, 1.0, vec![1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(
            eigen_residual(&ex31(), &pair(EigenKind::H, 1.0, vec![0.0, 0.0])),
            Err(TcpError::BadEigenvector)
        );
    }

    #[test]
    fn z_pairs_of_diagonal_identity() {
        let r = z_eigenpairs(&identity4(), &opts());
        assert!(!r.degenerate && !r.heuristic);
        let s = 0.5f64.sqrt();
        assert!(has(&r, 1.0, &[1.0, 0.0]) && has(&r, 1.0, &[0.0, 1.0]));
        assert!(has(&r, 0.5, &[s, s]) && has(&r, 0.5, &[s, -s]));
        assert_eq!(r.pairs.len(), 4, "{:?}", r.pairs);
        for p in &r.pairs {
            assert!(p.residual <= 1e-10);
            assert!((norm2(&p.x) - 1.0).abs() < 1e-12);
            assert_eq!(eigen_residual(&identity4(), p).unwrap(), p.residual);
        }
        assert_eq!(r.min_lambda(), Some(0.5));
    }

    #[test]
    fn z_pairs_factored_oracle() {
        // g = c^2 s (c - 2 s): a tangential root at c = 0 and simple roots at
        // s = 0 and c = 2 s
        let a = Tensor::from_one_based(
            4,
            2,
            [
                (vec![1, 1, 1, 1], 1.0),
                (vec![1, 1, 1, 2], -2.0),
                (vec![1, 1, 2, 2], 1.0),
                (vec![2, 2, 2, 2], 1.0),
            ],
        )
        .unwrap();
        let r = z_eigenpairs(&a, &opts());
        let v = 5f64.sqrt();
        assert_eq!(r.pairs.len(), 3, "{:?}", r.pairs);
        assert!(has(&r, 0.2, &[2.0 / v, 1.0 / v]));
        assert!(has(&r, 1.0, &[0.0, 1.0]) && has(&r, 1.0, &[1.0, 0.0]));
    }

    #[test]
    fn z_pairs_of_odd_order() {
        let r = z_eigenpairs(&ex31(), &opts());
        assert!(has(&r, 1.0, &[1.0, 0.0]) && has(&r, 1.0, &[0.0, 1.0]));
        // odd order: -x pairs with -lambda
        assert!(has(&r, -1.0, &[-1.0, 0.0]));
    }

    #[test]
    fn degenerate_spectra() {
        let zero = Tensor::<f64>::zeros(4, 2).unwrap();
        let r = z_eigenpairs(&zero, &opts());
        assert!(r.degenerate);
        assert!(r.pairs.iter().all(|p| p.lambda == 0.0));
        assert!(r.pairs.len() <= 10);

        let h = h_eigenpairs(&identity4(), &opts());
        assert!(h.degenerate);
        let s = 0.5f64.sqrt();
        assert!(h.pairs.iter().all(|p| (p.lambda - 1.0).abs() < 1e-12));
        assert!(has(&h, 1.0, &[1.0, 0.0]) && has(&h, 1.0, &[0.0, 1.0]) && has(&h, 1.0, &[s, s]));

        let h = h_eigenpairs(&ex31(), &opts());
        assert!(h.pairs.iter().all(|p| (p.lambda - 1.0).abs() < 1e-12));
    }

    #[test]
    fn refinement_keeps_pair_sets() {
        let fine = EigenOptions { grid_points: 100_000, ..opts() };
        for kind in [EigenKind::H, EigenKind::Z] {
            let a = eigenpairs(&identity4(), kind, &opts());
            let b = eigenpairs(&identity4(), kind, &fine);
            assert_eq!(a.pairs.len(), b.pairs.len());
            for (p, q) in a.pairs.iter().zip(&b.pairs) {
                assert!((p.lambda - q.lambda).abs() < 1e-9);
                assert!(p.x.iter().zip(&q.x).all(|(u, v)| (u - v).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn scalar_tensor() {
        let a = Tensor::diagonal(4, &[2.5]).unwrap();
        let h = h_eigenpairs(&a, &opts());
        assert_eq!(h.lambdas(), vec![2.5]);
        let z = z_eigenpairs(&Tensor::diagonal(3, &[2.0]).unwrap(), &opts());
        assert_eq!(z.lambdas(), vec![-2.0, 2.0]);
    }

    #[test]
    fn matrix_case_matches_characteristic_roots() {
        for (p, q, r) in [(2.0, 1.0, 3.0), (1.0, -2.0, -1.0), (0.5, 0.25, 4.0)] {
            let a = Tensor::from_entries(
                2,
                2,
                [(vec![0, 0], p), (vec![0, 1], q), (vec![1, 0], q), (vec![1, 1], r)],
            )
            .unwrap();
            let tr: f64 = p + r;
            let det = p * r - q * q;
            let disc = (tr * tr / 4.0 - det).sqrt();
            let expected = [tr / 2.0 - disc, tr / 2.0 + disc];
            for kind in [EigenKind::H, EigenKind::Z] {
                let got = eigenpairs(&a, kind, &opts()).lambdas();
                assert_eq!(got.len(), 2);
                for (g, e) in got.iter().zip(expected) {
                    assert!((g - e).abs() < 1e-10, "{kind:?}: {got:?} vs {expected:?}");
                }
            }
        }
    }

    #[test]
    fn heuristic_three_dims() {
        let a = Tensor::diagonal(4, &[1.0, 2.0, 3.0]).unwrap();
        let z = z_eigenpairs(&a, &opts());
        assert!(z.heuristic);
        assert!(!z.pairs.is_empty());
        for p in &z.pairs {
            assert!(eigen_residual(&a, p).unwrap() <= 1e-10);
        }
        // the axes are Z-eigenvectors with the diagonal entries as eigenvalues
        assert!(has(&z, 3.0, &[0.0, 0.0, 1.0]));
    }

    #[test]
    fn positivity_examples() {
        let check = CheckOptions::default();
        let r = positivity_report(&identity4(), &opts(), &check);
        assert!(r.all_positive && !r.contradiction);
        assert_eq!(r.min_z, Some(0.5));
        let r = positivity_report(&Tensor::<f64>::zeros(4, 2).unwrap(), &opts(), &check);
        assert!(!r.all_positive && !r.contradiction);
        let j = serde_json::to_value(&r.z).unwrap();
        assert_eq!(j["kind"], "Z");
        assert_eq!(j["degenerate"], true);
    }
}
