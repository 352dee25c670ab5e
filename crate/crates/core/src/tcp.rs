//! TCP(q, A) instances: find `x >= 0` with `F(x) = A x^{m-1} + q >= 0` and `x . F(x) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcpError};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Default absolute verification tolerance for [`TcpInstance::is_solution`].
pub const DEFAULT_SOLUTION_TOL: f64 = 1e-9;

/// A tensor complementarity problem instance `(A, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile<T>", bound = "T: Scalar")]
pub struct TcpInstance<T = f64> {
    tensor: Tensor<T>,
    q: Vec<T>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct InstanceFile<T> {
    tensor: Tensor<T>,
    q: Vec<T>,
}

impl<T: Scalar> TryFrom<InstanceFile<T>> for TcpInstance<T> {
    type Error = TcpError;

    fn try_from(f: InstanceFile<T>) -> Result<Self> {
        TcpInstance::new(f.tensor, f.q)
    }
}

/// Feasibility and complementarity residuals of a candidate point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ResidualReport<T = f64> {
    /// `max(0, -min_i x_i)`
    pub primal_violation: T,
    /// `max(0, -min_i F_i(x))`
    pub dual_violation: T,
    /// `|x . F(x)|`
    pub complementarity_gap: T,
    pub componentwise_products: Vec<T>,
}

impl<T: Scalar> ResidualReport<T> {
    pub fn max_violation(&self) -> T {
        self.primal_violation
            .max(self.dual_violation)
            .max(self.complementarity_gap)
    }
}

impl<T: Scalar> TcpInstance<T> {
    pub fn new(tensor: Tensor<T>, q: Vec<T>) -> Result<Self> {
        tensor.check_len(&q)?;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(TcpError::BadValue("non-finite q".into()));
        }
        Ok(TcpInstance { tensor, q })
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    /// `F(x) = A x^{m-1} + q`.
    pub fn eval_f(&self, x: &[T]) -> Result<Vec<T>> {
        let mut f = self.tensor.apply_power(x)?;
        for (fi, &qi) in f.iter_mut().zip(&self.q) {
            *fi = *fi + qi;
        }
        Ok(f)
    }

    pub(crate) fn eval_f_into(&self, x: &[T], out: &mut [T]) {
        self.tensor.apply_power_into(x, out);
        for (fi, &qi) in out.iter_mut().zip(&self.q) {
            *fi = *fi + qi;
        }
    }

    pub fn residuals(&self, x: &[T]) -> Result<ResidualReport<T>> {
        let f = self.eval_f(x)?;
        Ok(residuals_from(x, &f))
    }

    /// True iff every residual in [`ResidualReport`] is at most `tol`.
    pub fn is_solution(&self, x: &[T], tol: T) -> Result<bool> {
        if !(tol > T::zero()) {
            return Err(TcpError::BadTolerance(tol.as_f64()));
        }
        Ok(self.residuals(x)?.max_violation() <= tol)
    }

    /// `|| min(x, F(x)) ||_2`, zero exactly at solutions.
    pub fn natural_residual_norm(&self, x: &[T]) -> Result<T> {
        let f = self.eval_f(x)?;
        Ok(natural_residual(x, &f))
    }

    /// `F_i(x) - F_i(y)` for every `i`. The `q` terms cancel exactly, so the
    /// result is computed from the tensor part alone and is independent of `q`
    /// bit for bit.
    pub fn f_difference(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        let ax = self.tensor.apply_power(x)?;
        let ay = self.tensor.apply_power(y)?;
        Ok(ax.iter().zip(&ay).map(|(&a, &b)| a - b).collect())
    }
}

pub(crate) fn residuals_from<T: Scalar>(x: &[T], f: &[T]) -> ResidualReport<T> {
    let zero = T::zero();
    let min_x = x.iter().fold(T::infinity(), |m, &v| m.min(v));
    let min_f = f.iter().fold(T::infinity(), |m, &v| m.min(v));
    let products: Vec<T> = x.iter().zip(f).map(|(&a, &b)| a * b).collect();
    let gap = products.iter().copied().sum::<T>().abs();
    ResidualReport {
        primal_violation: (-min_x).max(zero),
        dual_violation: (-min_f).max(zero),
        complementarity_gap: gap,
        componentwise_products: products,
    }
}

pub(crate) fn natural_residual<T: Scalar>(x: &[T], f: &[T]) -> T {
    x.iter()
        .zip(f)
        .map(|(&a, &b)| {
            let m = a.min(b);
            m * m
        })
        .sum::<T>()
        .sqrt()
}

/// `[v]_+`, the componentwise positive part.
pub fn plus_part<T: Scalar>(v: &[T]) -> Vec<T> {
    v.iter().map(|&x| x.max(T::zero())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex32(q: [f64; 2]) -> TcpInstance {
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
        TcpInstance::new(a, q.to_vec()).unwrap()
    }

    fn ex31(q: [f64; 2]) -> TcpInstance {
        let a = Tensor::from_one_based(3, 2, [(vec![1, 1, 1], 1.0), (vec![2, 2, 2], 1.0)]).unwrap();
        TcpInstance::new(a, q.to_vec()).unwrap()
    }

    #[test]
    fn eval_f_examples() {
        assert_eq!(ex32([0.0, -1.0]).eval_f(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(ex32([0.3, -1.0]).eval_f(&[0.0, 0.0]).unwrap(), vec![0.3, -1.0]);
        assert_eq!(ex31([-4.0, 1.0]).eval_f(&[2.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        assert!(ex31([0.0, 0.0]).eval_f(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn residual_examples() {
        let r = ex32([0.0, -1.0]).residuals(&[0.0, 1.0]).unwrap();
        assert_eq!(r.max_violation(), 0.0);
        let r = ex31([1.0, 1.0]).residuals(&[-0.5, 0.0]).unwrap();
        assert_eq!(r.primal_violation, 0.5);
        let r = ex32([0.0, -1.0]).residuals(&[0.0, 0.5]).unwrap();
        assert_eq!(r.dual_violation, 0.875);
        let zero = Tensor::<f64>::zeros(3, 2).unwrap();
        assert!(TcpInstance::new(zero, vec![0.0]).is_err());
    }

    #[test]
    fn is_solution_examples() {
        let inst = ex32([0.0, -1.0]);
        assert!(inst.is_solution(&[1.0, 1.0], 1e-9).unwrap());
        assert!(inst.is_solution(&[0.0, 1.0], 1e-9).unwrap());
        assert!(!inst.is_solution(&[0.5, 1.0], 1e-9).unwrap());
        assert!(ex32([0.5, 2.0]).is_solution(&[0.0, 0.0], 1e-9).unwrap());
        assert_eq!(
            inst.is_solution(&[1.0, 1.0], 0.0),
            Err(TcpError::BadTolerance(0.0))
        );
        assert!(inst.is_solution(&[1.0], 1e-9).is_err());
    }

    #[test]
    fn plus_part_examples() {
        assert_eq!(plus_part(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(plus_part(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(plus_part(&[-3.5, -0.1]), vec![0.0, 0.0]);
    }

    #[test]
    fn natural_residual_examples() {
        let inst = ex32([0.0, -1.0]);
        assert!(inst.natural_residual_norm(&[1.0, 1.0]).unwrap() < 1e-12);
        assert!(inst.natural_residual_norm(&[0.0, 1.0]).unwrap() < 1e-12);
        assert_eq!(ex32([1.0, 1.0]).natural_residual_norm(&[0.0, 0.0]).unwrap(), 0.0);
        let r = ex32([-1.0, -1.0]).natural_residual_norm(&[0.0, 0.0]).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn f_difference_ignores_q() {
        let x = [2.1, -1.9];
        let y = [2.0, -2.0];
        let a = ex32([0.0, -1.0]).f_difference(&x, &y).unwrap();
        let b = ex32([123.4, 5e7]).f_difference(&x, &y).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn instance_json() {
        let json = r#"{"tensor":{"order":3,"dim":2,"entries":[{"idx":[1,1,1],"val":1}]},"q":[1,2]}"#;
        let inst: TcpInstance = serde_json::from_str(json).unwrap();
        assert_eq!(inst.q(), &[1.0, 2.0]);
        let bad = r#"{"tensor":{"order":3,"dim":2,"entries":[]},"q":[1]}"#;
        assert!(serde_json::from_str::<TcpInstance>(bad).is_err());
        let r = inst.residuals(&[1.0, 0.0]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "primal_violation",
            "dual_violation",
            "complementarity_gap",
            "componentwise_products",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
