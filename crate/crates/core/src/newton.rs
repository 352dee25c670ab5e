//! Damped Newton / Gauss-Newton for small polynomial systems.
//!
//! Multiple roots are refined by one deflation pass: once Newton stalls at a
//! point with a near-singular Jacobian `J`, the augmented system
//! `[G(z); J(z) v; c.v - 1] = 0` is solved by Gauss-Newton. For a double root
//! this system has a regular solution, so the root is recovered to working
//! precision instead of the square root of it.

use crate::linalg::{damped_least_squares, least_squares, lu_solve, normalized, null_vector};
use crate::scalar::{norm_inf, Scalar};

pub(crate) trait NonlinearSystem<T: Scalar> {
    fn n_vars(&self) -> usize;
    fn n_eqs(&self) -> usize;
    fn eval(&self, z: &[T], out: &mut [T]);
    /// Row-major `n_eqs x n_vars`.
    fn jacobian(&self, z: &[T], jac: &mut [T]);
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct NewtonSettings<T> {
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relative step size below which the iteration stops.
    pub step_tol: T,
    pub deflate: bool,
}

impl<T: Scalar> Default for NewtonSettings<T> {
    fn default() -> Self {
        NewtonSettings {
            max_iter: 200,
            max_halvings: 40,
            step_tol: T::epsilon() * T::lit(64.0),
            deflate: true,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct NewtonOutcome<T> {
    pub z: Vec<T>,
    /// `||G(z)||_inf`
    pub residual: T,
}

fn merit<T: Scalar>(g: &[T]) -> T {
    g.iter().map(|&v| v * v).sum()
}

fn step_direction<T: Scalar>(rows: usize, cols: usize, jac: &[T], g: &[T]) -> Option<Vec<T>> {
    let neg: Vec<T> = g.iter().map(|&v| -v).collect();
    let regular = if rows == cols {
        lu_solve(cols, jac, &neg)
            .filter(|(_, ratio)| *ratio > T::epsilon() * T::lit(16.0))
            .map(|(d, _)| d)
    } else {
        least_squares(rows, cols, jac, &neg)
    };
    let d = regular.or_else(|| {
        let fro2 = jac.iter().map(|&v| v * v).sum::<T>();
        let mu = (fro2 * T::lit(1e-10)).max(T::min_positive_value().sqrt());
        damped_least_squares(rows, cols, jac, &neg, mu)
    })?;
    d.iter().all(|v| v.is_finite()).then_some(d)
}

pub(crate) fn damped_newton<T: Scalar, S: NonlinearSystem<T>>(
    sys: &S,
    z0: &[T],
    settings: &NewtonSettings<T>,
) -> NewtonOutcome<T> {
    let (outcome, last_step) = iterate(sys, z0, settings);
    if settings.deflate && sys.n_eqs() == sys.n_vars() && outcome.residual.is_finite() {
        if let Some(better) = deflate(sys, &outcome, last_step.as_deref(), settings) {
            return better;
        }
    }
    outcome
}

fn iterate<T: Scalar, S: NonlinearSystem<T>>(
    sys: &S,
    z0: &[T],
    settings: &NewtonSettings<T>,
) -> (NewtonOutcome<T>, Option<Vec<T>>) {
    let (rows, cols) = (sys.n_eqs(), sys.n_vars());
    let mut z = z0.to_vec();
    let mut g = vec![T::zero(); rows];
    let mut jac = vec![T::zero(); rows * cols];
    let mut trial = vec![T::zero(); cols];
    let mut g_trial = vec![T::zero(); rows];
    sys.eval(&z, &mut g);
    let mut phi = merit(&g);
    let mut last_step: Option<Vec<T>> = None;
    let armijo = T::lit(1e-4);

    for _ in 0..settings.max_iter {
        if phi == T::zero() || !phi.is_finite() {
            break;
        }
        sys.jacobian(&z, &mut jac);
        let Some(d) = step_direction(rows, cols, &jac, &g) else {
            break;
        };
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..=settings.max_halvings {
            for k in 0..cols {
                trial[k] = z[k] + t * d[k];
            }
            sys.eval(&trial, &mut g_trial);
            let phi_trial = merit(&g_trial);
            if phi_trial.is_finite() && phi_trial <= (T::one() - armijo * t) * phi {
                accepted = true;
                break;
            }
            t = t * T::lit(0.5);
        }
        if !accepted {
            break;
        }
        let step = norm_inf(&d) * t;
        z.copy_from_slice(&trial);
        g.copy_from_slice(&g_trial);
        phi = merit(&g);
        last_step = Some(d);
        if step <= settings.step_tol * (T::one() + norm_inf(&z)) {
            break;
        }
    }

    let residual = norm_inf(&g);
    (NewtonOutcome { z, residual }, last_step)
}

struct Deflated<'a, T: Scalar, S> {
    inner: &'a S,
    c: Vec<T>,
}

impl<T: Scalar, S: NonlinearSystem<T>> Deflated<'_, T, S> {
    fn jv(&self, z: &[T], v: &[T], jac: &mut [T], out: &mut [T]) {
        let n = self.inner.n_vars();
        self.inner.jacobian(z, jac);
        for i in 0..n {
            out[i] = (0..n).map(|j| jac[i * n + j] * v[j]).sum();
        }
    }
}

impl<T: Scalar, S: NonlinearSystem<T>> NonlinearSystem<T> for Deflated<'_, T, S> {
    fn n_vars(&self) -> usize {
        2 * self.inner.n_vars()
    }

    fn n_eqs(&self) -> usize {
        2 * self.inner.n_vars() + 1
    }

    fn eval(&self, w: &[T], out: &mut [T]) {
        let n = self.inner.n_vars();
        let (z, v) = w.split_at(n);
        let mut jac = vec![T::zero(); n * n];
        self.inner.eval(z, &mut out[..n]);
        self.jv(z, v, &mut jac, &mut out[n..2 * n]);
        out[2 * n] = v.iter().zip(&self.c).map(|(&a, &b)| a * b).sum::<T>() - T::one();
    }

    fn jacobian(&self, w: &[T], out: &mut [T]) {
        let n = self.inner.n_vars();
        let cols = 2 * n;
        let (z, v) = w.split_at(n);
        out.iter_mut().for_each(|o| *o = T::zero());
        let mut jac = vec![T::zero(); n * n];
        self.inner.jacobian(z, &mut jac);
        for i in 0..n {
            for j in 0..n {
                out[i * cols + j] = jac[i * n + j];
                out[(n + i) * cols + n + j] = jac[i * n + j];
            }
        }
        // d(J(z) v)/dz by central differences
        let mut zp = z.to_vec();
        let mut plus = vec![T::zero(); n];
        let mut minus = vec![T::zero(); n];
        let cbrt_eps = T::epsilon().cbrt();
        for l in 0..n {
            let h = cbrt_eps * (T::one() + z[l].abs());
            zp[l] = z[l] + h;
            self.jv(&zp, v, &mut jac, &mut plus);
            zp[l] = z[l] - h;
            self.jv(&zp, v, &mut jac, &mut minus);
            zp[l] = z[l];
            for i in 0..n {
                out[(n + i) * cols + l] = (plus[i] - minus[i]) / (h + h);
            }
        }
        for j in 0..n {
            out[2 * n * cols + n + j] = self.c[j];
        }
    }
}

fn deflate<T: Scalar, S: NonlinearSystem<T>>(
    sys: &S,
    start: &NewtonOutcome<T>,
    direction: Option<&[T]>,
    settings: &NewtonSettings<T>,
) -> Option<NewtonOutcome<T>> {
    let n = sys.n_vars();
    if start.residual > T::tol(1e-6, 1e3) {
        return None;
    }
    let mut jac = vec![T::zero(); n * n];
    sys.jacobian(&start.z, &mut jac);
    let singular = match lu_solve(n, &jac, &vec![T::zero(); n]) {
        None => true,
        Some((_, ratio)) => ratio < T::lit(1e-6),
    };
    if !singular {
        return None;
    }
    let seed = direction
        .map(|d| d.to_vec())
        .unwrap_or_else(|| vec![T::one(); n]);
    let v = null_vector(n, n, &jac, &normalized(&seed));
    let aug = Deflated { inner: sys, c: v.clone() };
    let mut w = start.z.clone();
    w.extend_from_slice(&v);
    let inner_settings = NewtonSettings {
        max_iter: 60,
        deflate: false,
        ..*settings
    };
    let (refined, _) = iterate(&aug, &w, &inner_settings);
    let z = refined.z[..n].to_vec();
    let mut g = vec![T::zero(); n];
    sys.eval(&z, &mut g);
    let residual = norm_inf(&g);
    let moved = start
        .z
        .iter()
        .zip(&z)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    let close = moved <= T::lit(1e-3) * (T::one() + norm_inf(&start.z));
    (close && residual.is_finite() && residual <= start.residual).then_some(NewtonOutcome { z, residual })
}
