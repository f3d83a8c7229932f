use ncube_core::hermlin::{inv_sqrt, min_eig, numerical_radius_default, op_norm, ComplexMatrix, HermitianMatrix};
use ncube_core::mincone::s2_min_search;
use ncube_core::opsys::TensorElement;
use ncube_core::sdpfeas::SolveOptions;
use ncube_core::wepchecks::{
    th_st_agreement, th_st_decompose, w_radius_bisect, w_radius_lmi, Decomposition,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s(x: f64) -> ComplexMatrix {
    ComplexMatrix::scalar(Complex64::new(x, 0.0))
}

fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(k, k, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Re-checks a found decomposition with plain linear algebra and the LMI.
fn reverify(a0: &HermitianMatrix, a1: &ComplexMatrix, a2: &ComplexMatrix, d: &Decomposition) {
    let Decomposition::Found { b, c, .. } = d else { panic!("expected a decomposition") };
    let opts = SolveOptions::default();
    assert!(min_eig(b).unwrap() > 0.0 && min_eig(c).unwrap() > 0.0);
    let mean = b.add(c).scale(0.5);
    assert!((mean.as_matrix() - a0.as_matrix()).frobenius_norm() <= 1e-8);
    for (p, a) in [(b, a1), (c, a2)] {
        let r = inv_sqrt(p, 0.0).unwrap().into_matrix();
        let m = r.matmul(a).matmul(&r);
        assert!(w_radius_lmi(&m, 0.5, &opts).unwrap());
        assert!(numerical_radius_default(&m).unwrap() < 0.5);
    }
}

#[test]
fn decomposition_examples() {
    let opts = SolveOptions::default();
    let one = HermitianMatrix::identity(1);
    let id = HermitianMatrix::identity(2);
    let zero = ComplexMatrix::zeros(2, 2);
    let d = th_st_decompose(&id, &zero, &zero, &opts).unwrap();
    reverify(&id, &zero, &zero, &d);
    let Decomposition::Found { b, z1, z2, .. } = &d else { unreachable!() };
    assert!(b.as_matrix().approx_eq(&ComplexMatrix::identity(2), 1e-6));
    assert!(z1.as_matrix().max_abs() < 1e-6 && z2.as_matrix().max_abs() < 1e-6);

    let d = th_st_decompose(&one, &s(0.2), &s(0.2), &opts).unwrap();
    reverify(&one, &s(0.2), &s(0.2), &d);
    assert!(!th_st_decompose(&one, &s(0.6), &s(0.6), &opts).unwrap().is_found());
}

#[test]
fn scalar_margin_closed_form() {
    let opts = SolveOptions::default();
    let one = HermitianMatrix::identity(1);
    for i in -4..=4 {
        for j in -4..=4 {
            let (a1, a2) = (0.25 * i as f64, 0.25 * j as f64);
            let want = 1.0 - a1.abs() - a2.abs();
            match th_st_decompose(&one, &s(a1), &s(a2), &opts).unwrap() {
                Decomposition::Found { margin, .. } => {
                    assert!(want > 0.0 && (margin - want).abs() < 1e-6, "({a1}, {a2})");
                }
                Decomposition::NotFound(r) => {
                    assert!(want <= 1e-6, "({a1}, {a2})");
                    assert!((r.margin - want).abs() < 1e-6);
                }
            }
        }
    }
    // complex entries only enter through their modulus
    let z = ComplexMatrix::scalar(Complex64::from_polar(0.3, 1.1));
    let Decomposition::Found { margin, .. } = th_st_decompose(&one, &z, &s(-0.2), &opts).unwrap() else { panic!() };
    assert!((margin - 0.5).abs() < 1e-6);
}

#[test]
fn random_decompositions_reverify() {
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut found = 0;
    for trial in 0..12 {
        let k = 1 + trial % 3;
        let g = random_matrix(&mut rng, k);
        let a0 = HermitianMatrix::symmetrised_from(g.scale(0.2)).shift(1.0);
        let a1 = random_matrix(&mut rng, k).scale(0.3 / k as f64);
        let a2 = random_matrix(&mut rng, k).scale(0.3 / k as f64);
        let d = th_st_decompose(&a0, &a1, &a2, &opts).unwrap();
        if d.is_found() {
            found += 1;
            reverify(&a0, &a1, &a2, &d);
        }
    }
    assert!(found >= 6, "{found}");
}

#[test]
fn radius_lmi_examples() {
    let opts = SolveOptions::default();
    let nil = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!(w_radius_lmi(&nil, 0.51, &opts).unwrap());
    assert!(!w_radius_lmi(&nil, 0.49, &opts).unwrap());
    assert!(w_radius_lmi(&ComplexMatrix::zeros(3, 3), 0.01, &opts).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 1..=4 {
        let h = HermitianMatrix::symmetrised_from(random_matrix(&mut rng, k)).into_matrix();
        let norm = op_norm(&h).unwrap();
        assert!(w_radius_lmi(&h, norm + 0.01, &opts).unwrap());
        assert!(!w_radius_lmi(&h, norm - 0.01, &opts).unwrap());
    }
    assert!(w_radius_lmi(&ComplexMatrix::zeros(2, 3), 1.0, &opts).is_err());
}

#[test]
fn bisected_radius_matches_sweep() {
    let opts = SolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 1..=6 {
        let m = random_matrix(&mut rng, k);
        let w = w_radius_bisect(&m, 1e-8, &opts).unwrap();
        let exact = numerical_radius_default(&m).unwrap();
        assert!((w - exact).abs() <= 1e-6, "k={k}: {w} vs {exact}");
    }
    let nil = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!((w_radius_bisect(&nil, 1e-10, &opts).unwrap() - 0.5).abs() <= 1e-9);
    assert_eq!(w_radius_bisect(&ComplexMatrix::zeros(2, 2), 1e-8, &opts).unwrap(), 0.0);
}

#[test]
fn agreement_examples() {
    let opts = SolveOptions::default();
    let id1 = HermitianMatrix::identity(1);
    for (a, positive) in [(0.1, true), (0.6, false), (0.0, true)] {
        let x = TensorElement::sn_hermitian(&id1, &[s(a), s(a)]).unwrap();
        let search = s2_min_search(&x, 2, 2, 0).unwrap();
        let d = th_st_decompose(&id1, &s(2.0 * a), &s(2.0 * a), &opts).unwrap();
        assert_eq!(search.is_violation(), !positive, "{a}");
        assert_eq!(d.is_found(), positive, "{a}");
    }
}

#[test]
fn agreement_on_random_instances() {
    let opts = SolveOptions::default();
    for k in [1, 2] {
        let report = th_st_agreement(k, 12, 40 + k as u64, &opts).unwrap();
        assert_eq!(report.rows.len(), 12);
        assert_eq!(report.contradictions, 0, "k={k}: {:?}", report.rows);
        for row in &report.rows {
            if row.min_value.abs() > 1e-3 && row.decomposition_margin.abs() > 1e-3 {
                assert_eq!(row.found, !row.violation, "k={k}: {row:?}");
            }
        }
        let again = th_st_agreement(k, 12, 40 + k as u64, &opts).unwrap();
        assert_eq!(format!("{:?}", again.rows), format!("{:?}", report.rows));
    }
}
