use proptest::prelude::*;
use tcpkit::{
    check_property, enumerate_solutions, p_tensor_check, ssp_check, strong_p_check, CheckOptions,
    Property, SolverOptions, TcpInstance, Tensor, VerdictStatus,
};

/// Dense reference for A x^{m-1}: sum over every index tuple.
fn dense_apply(a: &Tensor, x: &[f64]) -> Vec<f64> {
    let (m, n) = (a.order(), a.dim());
    let mut out = vec![0.0; n];
    let mut idx = vec![0usize; m];
    for _ in 0..n.pow(m as u32) {
        let prod: f64 = idx[1..].iter().map(|&j| x[j]).product();
        out[idx[0]] += a.get(&idx) * prod;
        for k in (0..m).rev() {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

fn small_tensor() -> impl Strategy<Value = Tensor> {
    (2usize..=4, 1usize..=3, any::<u64>())
        .prop_map(|(m, n, seed)| Tensor::random(m, n, 0.7, (-2.0, 2.0), seed).unwrap())
}

fn opts(seed: u64) -> CheckOptions {
    CheckOptions::default().with_seed(seed).with_samples(400)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn apply_matches_dense(a in small_tensor(), xs in prop::collection::vec(-3.0f64..3.0, 3)) {
        let x = &xs[..a.dim()];
        let got = a.apply_power(x).unwrap();
        for (g, d) in got.iter().zip(dense_apply(&a, x)) {
            prop_assert!((g - d).abs() <= 1e-12 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn apply_is_homogeneous(a in small_tensor(), xs in prop::collection::vec(-2.0f64..2.0, 3), t in 0.1f64..3.0) {
        let x = &xs[..a.dim()];
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let scale = t.powi(a.order() as i32 - 1);
        for (l, r) in a.apply_power(&tx).unwrap().iter().zip(a.apply_power(x).unwrap()) {
            prop_assert!((l - scale * r).abs() <= 1e-10 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn odd_order_is_never_p(n in 1usize..=3, seed in any::<u64>()) {
        let a = Tensor::random(3, n, 1.0, (0.5, 2.0), seed).unwrap();
        prop_assert_eq!(p_tensor_check(&a, &opts(seed)).status, VerdictStatus::CertifiedFails);
        prop_assert_eq!(strong_p_check(&a, &opts(seed)).status, VerdictStatus::CertifiedFails);
    }

    #[test]
    fn verdict_invariant_under_positive_scaling(a in small_tensor(), c in 0.1f64..10.0, seed in 0u64..1000) {
        let scaled = Tensor::from_entries(
            a.order(),
            a.dim(),
            a.entries().map(|(i, v)| (i.to_vec(), c * v)).collect::<Vec<_>>(),
        ).unwrap();
        for property in [Property::P, Property::StrictlySemiPositive] {
            let base = check_property(&a, property, &opts(seed)).unwrap();
            let other = check_property(&scaled, property, &opts(seed)).unwrap();
            if base.status == VerdictStatus::CertifiedFails || base.status == VerdictStatus::CertifiedHolds {
                prop_assert_eq!(base.status, other.status);
            }
            // a witness for A is a witness for cA
            if let Some(w) = &base.witness {
                let v = tcpkit::property_checkers::witness_value(&scaled, property, w).unwrap();
                prop_assert!(v <= 1e-10, "scaled witness value {v}");
            }
        }
    }

    #[test]
    fn witnesses_verify_independently(m in prop::sample::select(vec![2usize, 4]), n in 2usize..=3, seed in any::<u64>()) {
        let a = Tensor::random(m, n, 0.8, (-1.0, 1.0), seed).unwrap();
        let v = ssp_check(&a, &opts(seed));
        if let Some(tcpkit::Witness::Point { x }) = &v.witness {
            prop_assert!(x.iter().all(|&xi| xi >= 0.0));
            prop_assert!(x.iter().any(|&xi| xi > 0.0));
            let f = dense_apply(&a, x);
            let worst = x.iter().zip(&f).filter(|(xi, _)| **xi > 0.0).map(|(xi, fi)| xi * fi).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(worst <= 0.0);
        }
    }

    #[test]
    fn enumerated_points_solve_the_instance(n in 1usize..=2, seed in any::<u64>(), q in prop::collection::vec(-2.0f64..2.0, 2)) {
        let a = Tensor::random(4, n, 1.0, (-1.0, 1.0), seed).unwrap();
        let inst = TcpInstance::new(a.clone(), q[..n].to_vec()).unwrap();
        let set = enumerate_solutions(&inst, &SolverOptions::default()).unwrap();
        for x in set.points() {
            let f: Vec<f64> = dense_apply(&a, &x).iter().zip(&q).map(|(ax, qi)| ax + qi).collect();
            for i in 0..n {
                prop_assert!(x[i] >= -1e-8);
                prop_assert!(f[i] >= -1e-7);
                prop_assert!((x[i] * f[i]).abs() <= 1e-7);
            }
        }
    }
}

#[test]
fn same_seed_same_verdict() {
    let a = Tensor::random(4, 3, 0.9, (-1.0, 1.0), 7).unwrap();
    let o = opts(11);
    for property in [Property::P, Property::StrictlySemiPositive, Property::StrongP] {
        let x = serde_json::to_string(&check_property(&a, property, &o).unwrap()).unwrap();
        let y = serde_json::to_string(&check_property(&a, property, &o).unwrap()).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn f32_instances_work() {
    let a: tcpkit::TensorF32 = Tensor::diagonal(4, &[1.0f32, 2.0]).unwrap();
    let inst = TcpInstance::new(a.clone(), vec![-1.0f32, 1.0]).unwrap();
    let set = enumerate_solutions(&inst, &SolverOptions::default()).unwrap();
    assert_eq!(set.len(), 1);
    let x = &set.points()[0];
    assert!((x[0] - 1.0).abs() < 1e-5 && x[1].abs() < 1e-5);
    let v = p_tensor_check(&a, &CheckOptions::default().with_samples(200));
    assert_eq!(v.status, VerdictStatus::NotDisproved);
}
