//! Sparse coordinate tensors and the multilinear products `A x^{m-1}` and `A x^m`.
//!
//! Indices are 0-based in the Rust API. The JSON interchange format is 1-based:
//!
//! ```json
//! {"order": 3, "dim": 2, "entries": [{"idx": [1, 1, 1], "val": 1.0}]}
//! ```

use std::collections::BTreeMap;
use std::ops::Add;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcpError};
use crate::scalar::{dot, Scalar};

/// A real `order`-th order, `dim`-dimensional tensor in coordinate storage.
///
/// Entries are kept sorted lexicographically by index tuple and never contain
/// duplicates. No symmetry is assumed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "TensorFile<T>",
    into = "TensorFile<T>",
    bound = "T: Scalar"
)]
pub struct Tensor<T = f64> {
    order: usize,
    dim: usize,
    /// `nnz * order` flattened index tuples.
    indices: Vec<usize>,
    values: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct TensorFile<T> {
    order: usize,
    dim: usize,
    entries: Vec<FileEntry<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct FileEntry<T> {
    idx: Vec<usize>,
    val: T,
}

impl<T: Scalar> TryFrom<TensorFile<T>> for Tensor<T> {
    type Error = TcpError;

    fn try_from(file: TensorFile<T>) -> Result<Self> {
        Tensor::from_one_based(
            file.order,
            file.dim,
            file.entries.into_iter().map(|e| (e.idx, e.val)),
        )
    }
}

impl<T: Scalar> From<Tensor<T>> for TensorFile<T> {
    fn from(t: Tensor<T>) -> Self {
        let entries = t
            .entries()
            .map(|(idx, val)| FileEntry {
                idx: idx.iter().map(|i| i + 1).collect(),
                val,
            })
            .collect();
        TensorFile {
            order: t.order,
            dim: t.dim,
            entries,
        }
    }
}

impl<T: Scalar> Tensor<T> {
    /// Builds a tensor from 0-based `(index tuple, value)` pairs.
    ///
    /// Duplicate tuples are rejected, not summed. Explicit zeros are kept.
    pub fn from_entries<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, T)>,
    {
        if order < 2 {
            return Err(TcpError::BadValue(format!("order must be >= 2, got {order}")));
        }
        if dim < 1 {
            return Err(TcpError::BadValue("dim must be >= 1".into()));
        }
        let mut map = BTreeMap::new();
        for (idx, val) in entries {
            if idx.len() != order || idx.iter().any(|&i| i >= dim) {
                return Err(TcpError::BadIndex { index: idx, order, dim });
            }
            if !val.is_finite() {
                return Err(TcpError::BadValue(format!("non-finite value at {idx:?}")));
            }
            if map.contains_key(&idx) {
                return Err(TcpError::DuplicateEntry(idx));
            }
            map.insert(idx, val);
        }
        let mut indices = Vec::with_capacity(map.len() * order);
        let mut values = Vec::with_capacity(map.len());
        for (idx, val) in map {
            indices.extend_from_slice(&idx);
            values.push(val);
        }
        Ok(Tensor { order, dim, indices, values })
    }

    /// Same as [`Tensor::from_entries`] with 1-based index tuples; errors
    /// report indices 1-based too.
    pub fn from_one_based<I>(order: usize, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, T)>,
    {
        let mut shifted = Vec::new();
        for (idx, val) in entries {
            if idx.contains(&0) {
                return Err(TcpError::BadIndex { index: idx, order, dim });
            }
            shifted.push((idx.into_iter().map(|i| i - 1).collect(), val));
        }
        let one_based = |v: Vec<usize>| v.into_iter().map(|i| i + 1).collect();
        Self::from_entries(order, dim, shifted).map_err(|e| match e {
            TcpError::DuplicateEntry(idx) => TcpError::DuplicateEntry(one_based(idx)),
            TcpError::BadIndex { index, order, dim } => TcpError::BadIndex {
                index: one_based(index),
                order,
                dim,
            },
            other => other,
        })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Self::from_entries(order, dim, std::iter::empty())
    }

    /// The diagonal tensor with `a_{i...i} = diag[i]`.
    pub fn diagonal(order: usize, diag: &[T]) -> Result<Self> {
        Self::from_entries(
            order,
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (vec![i; order], v)),
        )
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries in lexicographic index order.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], T)> + '_ {
        self.indices
            .chunks_exact(self.order)
            .zip(self.values.iter().copied())
    }

    /// Entry at a 0-based index tuple; absent tuples are zero.
    pub fn get(&self, idx: &[usize]) -> T {
        if idx.len() != self.order {
            return T::zero();
        }
        let (mut lo, mut hi) = (0, self.nnz());
        while lo < hi {
            let mid = (lo + hi) / 2;
            let key = &self.indices[mid * self.order..(mid + 1) * self.order];
            match key.cmp(idx) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.values[mid],
            }
        }
        T::zero()
    }

    /// The diagonal entry `a_{i i ... i}`.
    pub fn diag(&self, i: usize) -> T {
        self.get(&vec![i; self.order])
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            order: self.order,
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub(crate) fn check_len(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(TcpError::DimMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `(A x^{m-1})_i = sum a_{i i2..im} x_{i2}..x_{im}`.
    pub fn apply_power(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x)?;
        let mut out = vec![T::zero(); self.dim];
        self.apply_power_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_power_into(&self, x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (idx, val) in self.entries() {
            let prod = idx[1..].iter().fold(val, |p, &j| p * x[j]);
            out[idx[0]] = out[idx[0]] + prod;
        }
    }

    /// `A x^m = x . (A x^{m-1})`.
    pub fn form_value(&self, x: &[T]) -> Result<T> {
        let ax = self.apply_power(x)?;
        Ok(dot(x, &ax))
    }

    /// Jacobian of `x -> A x^{m-1}`, dense row-major `dim x dim`.
    pub fn jacobian(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x)?;
        let mut jac = vec![T::zero(); self.dim * self.dim];
        self.jacobian_into(x, &mut jac);
        Ok(jac)
    }

    pub(crate) fn jacobian_into(&self, x: &[T], jac: &mut [T]) {
        let n = self.dim;
        jac.iter_mut().for_each(|v| *v = T::zero());
        let tail = self.order - 1;
        let mut prefix = vec![T::one(); tail + 1];
        let mut suffix = vec![T::one(); tail + 1];
        for (idx, val) in self.entries() {
            let t = &idx[1..];
            for k in 0..tail {
                prefix[k + 1] = prefix[k] * x[t[k]];
            }
            suffix[tail] = T::one();
            for k in (0..tail).rev() {
                suffix[k] = suffix[k + 1] * x[t[k]];
            }
            let row = idx[0] * n;
            for k in 0..tail {
                let d = val * prefix[k] * suffix[k + 1];
                jac[row + t[k]] = jac[row + t[k]] + d;
            }
        }
    }

    /// Restriction to the 0-based index set `subset`, reindexed in sorted order.
    pub fn principal_subtensor(&self, subset: &[usize]) -> Result<Self> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty()
            || sorted.len() != subset.len()
            || sorted.iter().any(|&i| i >= self.dim)
        {
            return Err(TcpError::BadIndexSet(subset.to_vec()));
        }
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in sorted.iter().enumerate() {
            position[i] = k;
        }
        let kept = self.entries().filter_map(|(idx, val)| {
            let mapped: Option<Vec<usize>> = idx
                .iter()
                .map(|&i| (position[i] != usize::MAX).then_some(position[i]))
                .collect();
            mapped.map(|m| (m, val))
        });
        Self::from_entries(self.order, sorted.len(), kept.collect::<Vec<_>>())
    }

    /// A random tensor: every index tuple is stored with probability `density`,
    /// with a value uniform on `[range.0, range.1)`. Deterministic in `seed`.
    pub fn random(
        order: usize,
        dim: usize,
        density: f64,
        range: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(TcpError::BadValue(format!("density {density} not in (0, 1]")));
        }
        let (lo, hi) = range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(TcpError::BadValue(format!("empty value range [{lo}, {hi})")));
        }
        if order < 2 || dim < 1 {
            return Err(TcpError::BadValue(format!("bad shape ({order}, {dim})")));
        }
        let total = dim
            .checked_pow(order as u32)
            .ok_or_else(|| TcpError::BadValue("tensor too large".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        let mut idx = vec![0usize; order];
        for _ in 0..total {
            if density >= 1.0 || rng.random::<f64>() < density {
                let v = rng.random_range(lo..hi);
                entries.push((idx.clone(), T::lit(v)));
            }
            for k in (0..order).rev() {
                idx[k] += 1;
                if idx[k] < dim {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::from_entries(order, dim, entries)
    }
}

impl<T: Scalar> Add for &Tensor<T> {
    type Output = Result<Tensor<T>>;

    /// Entrywise sum; both operands must share order and dim.
    fn add(self, rhs: Self) -> Result<Tensor<T>> {
        if self.order != rhs.order || self.dim != rhs.dim {
            return Err(TcpError::DimMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let mut map: BTreeMap<Vec<usize>, T> = BTreeMap::new();
        for (idx, v) in self.entries().chain(rhs.entries()) {
            let e = map.entry(idx.to_vec()).or_insert_with(T::zero);
            *e = *e + v;
        }
        Tensor::from_entries(self.order, self.dim, map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex31() -> Tensor {
        Tensor::from_one_based(3, 2, [(vec![1, 1, 1], 1.0), (vec![2, 2, 2], 1.0)]).unwrap()
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

    /// Dense m-fold summation over every index tuple.
    fn brute_form(a: &Tensor, x: &[f64]) -> f64 {
        let (m, n) = (a.order(), a.dim());
        let mut idx = vec![0; m];
        let mut total = 0.0;
        for _ in 0..n.pow(m as u32) {
            total += a.get(&idx) * idx.iter().map(|&i| x[i]).product::<f64>();
            for k in (0..m).rev() {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        total
    }

    #[test]
    fn construction_errors() {
        let dup = Tensor::from_one_based(3, 2, [(vec![1, 1, 1], 1.0), (vec![1, 1, 1], 2.0)]);
        assert_eq!(dup, Err(TcpError::DuplicateEntry(vec![1, 1, 1])));
        let bad = Tensor::from_one_based(3, 2, [(vec![1, 3, 1], 1.0)]);
        assert!(matches!(bad, Err(TcpError::BadIndex { .. })));
        let short = Tensor::from_entries(3, 2, [(vec![0, 1], 1.0)]);
        assert!(matches!(short, Err(TcpError::BadIndex { .. })));
        let nan = Tensor::from_entries(2, 2, [(vec![0, 1], f64::NAN)]);
        assert!(matches!(nan, Err(TcpError::BadValue(_))));
        assert!(Tensor::<f64>::zeros(1, 2).is_err());
    }

    #[test]
    fn zero_tensor_gives_zero_vector() {
        let z = Tensor::<f64>::zeros(4, 2).unwrap();
        assert_eq!(z.apply_power(&[1.5, -2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn apply_power_examples() {
        assert_eq!(ex31().apply_power(&[3.0, 2.0]).unwrap(), vec![9.0, 4.0]);
        assert_eq!(ex31().apply_power(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // closed forms x1^3 - x2^3 + x1 x2^2 and x2^3 - x1^3 + x2 x1^2
        let (x1, x2) = (2.1f64, -1.9f64);
        let f1 = x1.powi(3) - x2.powi(3) + x1 * x2 * x2;
        let f2 = x2.powi(3) - x1.powi(3) + x2 * x1 * x1;
        assert!((f1 - 23.701).abs() < 1e-12 && (f2 + 24.499).abs() < 1e-12);
        let got = ex41().apply_power(&[x1, x2]).unwrap();
        assert!((got[0] - f1).abs() < 1e-12);
        assert!((got[1] - f2).abs() < 1e-12);
        assert!(matches!(
            ex31().apply_power(&[1.0]),
            Err(TcpError::DimMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn form_value_examples() {
        assert_eq!(brute_form(&ex31(), &[3.0, 2.0]), 35.0);
        assert_eq!(ex31().form_value(&[3.0, 2.0]).unwrap(), 35.0);
        assert_eq!(ex31().form_value(&[0.0, 0.0]).unwrap(), 0.0);
        let d4 = Tensor::diagonal(4, &[1.0, 1.0]).unwrap();
        assert_eq!(brute_form(&d4, &[1.0, 1.0]), 2.0);
        assert_eq!(d4.form_value(&[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn subtensor_examples() {
        let ex32 = Tensor::from_one_based(
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
        let s = ex32.principal_subtensor(&[1]).unwrap();
        assert_eq!((s.order(), s.dim(), s.nnz()), (4, 1, 1));
        assert_eq!(s.get(&[0, 0, 0, 0]), 1.0);
        assert_eq!(ex32.principal_subtensor(&[0, 1]).unwrap(), ex32);
        let s41 = ex41().principal_subtensor(&[0]).unwrap();
        assert_eq!(s41.nnz(), 1);
        assert_eq!(s41.diag(0), 1.0);
        assert!(ex32.principal_subtensor(&[]).is_err());
        assert!(ex32.principal_subtensor(&[2]).is_err());
        assert!(ex32.principal_subtensor(&[0, 0]).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let a = Tensor::<f64>::random(4, 3, 0.7, (-1.0, 1.0), 11).unwrap();
        let x = [0.3, -0.7, 1.1];
        let jac = a.jacobian(&x).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fp = a.apply_power(&xp).unwrap();
            let fm = a.apply_power(&xm).unwrap();
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[i * 3 + j]).abs() < 1e-7, "({i},{j})");
            }
        }
    }

    #[test]
    fn random_tensor_contract() {
        let a = Tensor::<f64>::random(3, 2, 1.0, (-1.0, 1.0), 7).unwrap();
        assert_eq!(a, Tensor::random(3, 2, 1.0, (-1.0, 1.0), 7).unwrap());
        assert!(Tensor::<f64>::random(4, 2, 0.5, (-1.0, 1.0), 1).unwrap().nnz() <= 16);
        let m = Tensor::<f64>::random(2, 3, 1.0, (0.0, 1.0), 3).unwrap();
        assert_eq!((m.order(), m.dim(), m.nnz()), (2, 3, 9));
        assert!(Tensor::<f64>::random(2, 3, 1.0, (1.0, 1.0), 3).is_err());
        assert!(Tensor::<f64>::random(2, 3, 0.0, (0.0, 1.0), 3).is_err());
    }

    #[test]
    fn json_is_one_based() {
        let json = serde_json::to_string(&ex31()).unwrap();
        assert_eq!(
            json,
            r#"{"order":3,"dim":2,"entries":[{"idx":[1,1,1],"val":1.0},{"idx":[2,2,2],"val":1.0}]}"#
        );
        let back: Tensor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ex31());
        let dup = r#"{"order":2,"dim":1,"entries":[{"idx":[1,1],"val":1},{"idx":[1,1],"val":2}]}"#;
        assert!(serde_json::from_str::<Tensor>(dup).is_err());
    }

    #[test]
    fn f32_products() {
        let a: Tensor<f32> = ex41().cast();
        let got = a.apply_power(&[2.1, -1.9]).unwrap();
        assert!((got[0] - 23.701).abs() < 1e-4);
    }
}
