use ncube_core::opsys::*;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn kernel_examples() {
    let j2 = kernel_basis(KernelName::Jn, 2).unwrap();
    assert_eq!(j2.basis, vec![vec![1, 1, -1, -1]]);

    let q2 = kernel_basis(KernelName::Qn, 2).unwrap();
    assert_eq!(q2.basis, vec![vec![1, 1, -1, -1]]);
    let q3 = kernel_basis(KernelName::Qn, 3).unwrap();
    assert_eq!(q3.basis, vec![vec![1, 1, -1, -1, 0, 0], vec![1, 1, 1, 1, -1, -1]]);

    let k3 = kernel_basis(KernelName::Kn1, 2).unwrap();
    assert_eq!(k3.dim(), 4);
    assert_eq!(k3.rank(), 4);
}

#[test]
fn kernel_dimensions() {
    for n in 1..=6 {
        let dims = [
            (KernelName::Jn, n - 1),
            (KernelName::Qn, n - 1),
            (KernelName::Kn1, 2 * n),
            (KernelName::Ln1, 2 * n),
            (KernelName::D0, n),
            (KernelName::Sn0, n),
        ];
        for (name, d) in dims {
            let k = kernel_basis(name, n).unwrap();
            assert_eq!(k.dim(), d, "{name:?} n={n}");
            assert_eq!(k.rank(), d, "{name:?} n={n} not independent");
        }
    }
}

#[test]
fn sn0_satisfies_defining_equations() {
    // λ_0 = 0 and λ_i + λ_{−i} = 0
    for n in 1..=5 {
        let k = kernel_basis(KernelName::Sn0, n).unwrap();
        let s = k.ambient;
        for v in &k.basis {
            assert_eq!(v[0], 0);
            for i in 1..=n {
                assert_eq!(v[s.u(i)] + v[s.u_star(i)], 0);
            }
        }
    }
}

#[test]
fn kernels_are_null() {
    for n in 1..=5 {
        for name in [KernelName::Jn, KernelName::Qn, KernelName::Kn1, KernelName::Ln1, KernelName::D0] {
            let k = kernel_basis(name, n).unwrap();
            let v = is_null_subspace(&k).unwrap();
            assert!(v.null, "{name:?} n={n}: {v:?}");
        }
    }
}

#[test]
fn non_null_span_has_witness() {
    let j = KernelSubspace {
        ambient: SystemId::cube(2),
        basis: vec![vec![1, 1, 0, 0]],
    };
    let v = is_null_subspace(&j).unwrap();
    assert!(!v.null);
    let w = v.witness.expect("witness");
    let expect = [1.0, 1.0, 0.0, 0.0];
    for (z, e) in w.iter().zip(expect) {
        assert!((z - Complex64::new(e, 0.0)).norm() < 1e-6, "{w:?}");
    }
}

#[test]
fn non_null_matrix_span() {
    // span{E11 − E22, E11 + E22}: contains E11
    let s = SystemId::tridiag(1);
    let mut a = vec![0; 4];
    a[s.mat(0, 0)] = 1;
    a[s.mat(1, 1)] = -1;
    let mut b = vec![0; 4];
    b[s.mat(0, 0)] = 1;
    b[s.mat(1, 1)] = 1;
    let v = is_null_subspace(&KernelSubspace { ambient: s, basis: vec![a, b] }).unwrap();
    assert!(!v.null);
    let w = v.witness.expect("witness");
    // positive semidefinite 2×2 with unit largest entry
    let (p, q, r) = (w[0].re, w[3].re, w[1]);
    assert!(p >= -1e-8 && q >= -1e-8 && p * q - r.norm_sqr() >= -1e-8, "{w:?}");
}

#[test]
fn null_test_rejects_unsupported_ambient() {
    let k = kernel_basis(KernelName::Sn0, 2).unwrap();
    assert!(is_null_subspace(&k).is_err());
}

#[test]
fn graph_check() {
    assert!(!graph_distinguish_tr(1));
    assert!(!graph_distinguish_tr(2));
    for n in 3..=6 {
        assert!(graph_distinguish_tr(n));
    }
}

#[test]
fn dual_pairing_examples() {
    let a = [1.0, 0.0, 1.0, 0.0];
    let j = kernel_basis(KernelName::Jn, 2).unwrap();
    assert_eq!(dual_pairing_check(2, &a, &j.element(0)).unwrap(), 0.0);
    let one = TensorElement::from_real(SystemId::cube(2), &[1.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(dual_pairing_check(2, &a, &one).unwrap(), 2.0);
    assert!(dual_pairing_check(2, &[1.0, 0.0, 0.5, 0.0], &one).is_err());
}

/// Value of `a0 + Σ a_i s_i` minimised over all sign tuples.
fn sign_oracle(a0: f64, a: &[f64]) -> f64 {
    let n = a.len();
    (0..1u32 << n)
        .map(|mask| {
            a0 + a
                .iter()
                .enumerate()
                .map(|(i, &x)| if mask >> i & 1 == 1 { x } else { -x })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn level1_matches_sign_oracle_on_grid() {
    let vals = [-1.0, -0.5, 0.0, 0.5, 1.0];
    for n in 1..=4usize {
        let total = vals.len().pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    let v = vals[c % vals.len()];
                    c /= vals.len();
                    v
                })
                .collect();
            for step in 0..=6 {
                let a0 = 0.5 * step as f64;
                let oracle = sign_oracle(a0, &a);
                match level1_positivity_nc(a0, &a) {
                    Level1::StronglyPositive { margin } => {
                        assert!(oracle > LEVEL1_TOL);
                        assert!((margin - oracle).abs() < 1e-12);
                    }
                    Level1::Boundary { .. } => assert!(oracle.abs() <= LEVEL1_TOL),
                    Level1::NotPositive { witness, value } => {
                        assert!(oracle < -LEVEL1_TOL);
                        assert!((value - oracle).abs() < 1e-12);
                        let at: f64 = a0 + a.iter().zip(&witness).map(|(x, s)| x * s).sum::<f64>();
                        assert!((at - value).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn symmetrise_makes_hermitian(re in proptest::collection::vec(-2.0..2.0f64, 8), im in proptest::collection::vec(-2.0..2.0f64, 8)) {
        // NC(1) element with non-Hermitian 2×2 coefficients
        let mats: Vec<_> = (0..2).map(|b| ncube_core::hermlin::ComplexMatrix::from_fn(2, 2, |i, j| {
            let t = 4 * b + 2 * i + j;
            Complex64::new(re[t], im[t])
        })).collect();
        let mut x = TensorElement::new(SystemId::nc(1), 2, mats).unwrap();
        x.symmetrise();
        prop_assert!(x.is_hermitian(1e-14));
    }
}
