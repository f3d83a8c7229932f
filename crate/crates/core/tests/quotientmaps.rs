use ncube_core::hermlin::{ComplexMatrix, HermitianMatrix};
use ncube_core::opsys::{is_null_subspace, SystemId, TensorElement};
use ncube_core::quotientmaps::{
    apply_map, coproduct_embed, kernel_of, lift_margin, lift_parameterisation, qn_route, MapName, QuotientMapId, Route,
};
use ncube_core::sdpfeas::{solve_max_margin, SolveOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KERNEL_MAPS: [MapName; 8] = [
    MapName::Phi,
    MapName::Psi,
    MapName::Rho,
    MapName::Gamma,
    MapName::PsiGamma,
    MapName::Theta,
    MapName::ThetaQ,
    MapName::Beta,
];

fn random_hermitian(rng: &mut ChaCha8Rng, k: usize, scale: f64) -> HermitianMatrix {
    let m = ComplexMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale
    });
    HermitianMatrix::symmetrised_from(m)
}

fn random_element(sys: SystemId, k: usize, rng: &mut ChaCha8Rng) -> TensorElement {
    let mut x = TensorElement::zeros(sys, k);
    for idx in 0..sys.coord_len() {
        if sys.in_support(idx) {
            x.coeffs[idx] = ComplexMatrix::from_fn(k, k, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
        }
    }
    x
}

#[test]
fn kernels_are_annihilated_exactly() {
    for n in 1..=5 {
        for name in KERNEL_MAPS {
            let id = QuotientMapId::new(name, n).unwrap();
            let f = id.integer_form();
            let ker = kernel_of(id).unwrap();
            assert_eq!(ker.ambient, id.domain(), "{name:?} n={n}");
            for v in &ker.basis {
                assert!(f.apply_numerator(v).iter().all(|&e| e == 0), "{name:?} n={n} {v:?}");
            }
            // rank–nullity: the kernel is the whole kernel
            let image_rank = id.codomain().dim();
            assert_eq!(ker.rank() + image_rank, id.domain().dim(), "{name:?} n={n}");
        }
    }
}

#[test]
fn headline_kernels_are_null() {
    for n in 1..=4 {
        for name in [MapName::Rho, MapName::PsiGamma, MapName::Theta, MapName::Beta] {
            let ker = kernel_of(QuotientMapId::new(name, n).unwrap()).unwrap();
            assert!(is_null_subspace(&ker).unwrap().null, "{name:?} n={n}");
        }
    }
}

#[test]
fn rho_factors_through_s_n() {
    for n in 1..=5 {
        let rho = QuotientMapId::new(MapName::Rho, n).unwrap().integer_form();
        let phi = QuotientMapId::new(MapName::Phi, n).unwrap().integer_form();
        let psi = QuotientMapId::new(MapName::Psi, n).unwrap().integer_form();
        for c in 0..rho.cols {
            let mut e = vec![0i64; rho.cols];
            e[c] = 1;
            let direct = rho.apply_numerator(&e);
            let via = psi.apply_numerator(&phi.apply_numerator(&e));
            assert_eq!(rho.denom, phi.denom * psi.denom);
            assert_eq!(direct, via);
        }
    }
}

#[test]
fn map_examples() {
    let rho = QuotientMapId::new(MapName::Rho, 2).unwrap();
    let t = SystemId::tridiag(2);
    let mut e = TensorElement::zeros(t, 1);
    e.coeffs[t.mat(0, 0)] = ComplexMatrix::identity(1);
    let y = apply_map(rho, &e).unwrap();
    assert!((y.coeffs[0][(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
    assert!(y.coeffs[1][(0, 0)].norm() == 0.0);

    let mut e = TensorElement::zeros(t, 1);
    e.coeffs[t.mat(0, 1)] = ComplexMatrix::identity(1);
    let y = apply_map(rho, &e).unwrap();
    assert!(y.coeffs[0][(0, 0)].norm() == 0.0);
    assert!((y.coeffs[1][(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);

    let theta = QuotientMapId::new(MapName::Theta, 3).unwrap();
    let mut blocks = vec![HermitianMatrix::zeros(1); 6];
    blocks[0] = HermitianMatrix::identity(1);
    let y = apply_map(theta, &TensorElement::cube(&blocks).unwrap()).unwrap();
    assert!((y.coeffs[0][(0, 0)].re - 1.0 / 6.0).abs() < 1e-15);
    assert!((y.coeffs[1][(0, 0)].re - 1.0 / 6.0).abs() < 1e-15);
    let ones = vec![HermitianMatrix::identity(1); 6];
    let y = apply_map(theta, &TensorElement::cube(&ones).unwrap()).unwrap();
    assert_eq!(y.coeffs[0][(0, 0)].re, 1.0);
    assert!(y.coeffs[1..].iter().all(|c| c[(0, 0)].norm() == 0.0));
}

#[test]
fn coproduct_examples() {
    let c2 = SystemId::c2();
    let s = TensorElement::from_real(c2, &[1.0, 0.0]).unwrap();
    let y = coproduct_embed(1, 2, &s).unwrap();
    let v: Vec<f64> = y.coeffs.iter().map(|c| c[(0, 0)].re).collect();
    assert_eq!(v, vec![2.0, 0.0, 0.0, 0.0]);

    let s = TensorElement::from_real(c2, &[1.0, 1.0]).unwrap();
    let y = coproduct_embed(2, 2, &s).unwrap();
    let v: Vec<f64> = y.coeffs.iter().map(|c| c[(0, 0)].re).collect();
    assert_eq!(v, vec![0.0, 0.0, 2.0, 2.0]);
    // same class as the unit modulo J_2
    let theta = QuotientMapId::new(MapName::Theta, 2).unwrap();
    let unit_img = apply_map(theta, &y).unwrap();
    assert_eq!(unit_img.coeffs[0][(0, 0)].re, 1.0);

    let zero = TensorElement::from_real(c2, &[0.0, 0.0]).unwrap();
    let y = coproduct_embed(1, 3, &zero).unwrap();
    assert!(y.coeffs.iter().all(|c| c.max_abs() == 0.0));
    assert!(coproduct_embed(3, 2, &s).is_err());
}

#[test]
fn coproduct_generators_map_to_h() {
    let c2 = SystemId::c2();
    let f = TensorElement::from_real(c2, &[1.0, -1.0]).unwrap();
    for n in 1..=4 {
        for m in 1..=n {
            let y = coproduct_embed(m, n, &f).unwrap();
            let x = apply_map(QuotientMapId::new(MapName::Theta, n).unwrap(), &y).unwrap();
            for (i, c) in x.coeffs.iter().enumerate() {
                let want = if i == m { 1.0 } else { 0.0 };
                assert!((c[(0, 0)].re - want).abs() < 1e-14, "n={n} m={m} i={i}");
            }
        }
    }
}

#[test]
fn wrong_system_rejected() {
    let x = TensorElement::nc_scalar(1.0, &[0.2, 0.2]).unwrap();
    assert!(apply_map(QuotientMapId::new(MapName::Rho, 2).unwrap(), &x).is_err());
    assert!(kernel_of(QuotientMapId::new(MapName::CoproductIota(1), 2).unwrap()).is_err());
}

#[test]
fn lifts_map_back_to_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=3 {
        for k in 1..=2 {
            let a0 = random_hermitian(&mut rng, k, 1.0).shift(3.0);
            let a: Vec<_> = (0..n).map(|_| random_hermitian(&mut rng, k, 0.5)).collect();
            let x = TensorElement::nc(&a0, &a).unwrap();
            for route in Route::ALL {
                let l = lift_parameterisation(route, &x).unwrap();
                let v: Vec<f64> = (0..l.problem.free_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = l.lift(&v).unwrap();
                let back = apply_map(l.map, &y).unwrap();
                for (b, t) in back.coeffs.iter().zip(&x.coeffs) {
                    assert!(b.approx_eq(t, 1e-12), "{route:?} n={n} k={k}");
                }
                let direct = l.problem.unit_scale
                    * ncube_core::sdpfeas::check_point(&l.problem, &v).unwrap();
                assert!((lift_margin(&y).unwrap() - direct).abs() < 1e-10, "{route:?}");
            }
        }
    }
}

#[test]
fn generic_lifts_span_codomain() {
    // the pushforward of random domain elements has full rank
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=3 {
        for name in [MapName::Rho, MapName::PsiGamma, MapName::Theta, MapName::ThetaQ] {
            let id = QuotientMapId::new(name, n).unwrap();
            let f = id.integer_form();
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for _ in 0..(f.rows + 2) {
                let x = random_element(id.domain(), 1, &mut rng);
                let y = apply_map(id, &x).unwrap();
                rows.push(y.coeffs.iter().map(|c| c[(0, 0)].re).collect());
            }
            assert_eq!(real_rank(rows), id.codomain().dim(), "{name:?} n={n}");
        }
    }
}

fn real_rank(mut rows: Vec<Vec<f64>>) -> usize {
    let cols = rows[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[p][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(rank, p);
        let piv = rows[rank].clone();
        for r in rank + 1..rows.len() {
            let f = rows[r][c] / piv[c];
            for (x, y) in rows[r].iter_mut().zip(&piv) {
                *x -= f * y;
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn lifting_problem_shapes() {
    let x = TensorElement::nc_scalar(1.0, &[0.4, 0.4]).unwrap();
    let l = lift_parameterisation(Route::Tridiag, &x).unwrap();
    assert_eq!(l.problem.blocks.len(), 1);
    assert_eq!(l.problem.blocks[0].size(), 3);
    // two free diagonal entries, two imaginary parts
    assert_eq!(l.problem.free_dim, 4);

    let x3 = TensorElement::nc_scalar(1.0, &[0.1, 0.2, 0.3]).unwrap();
    let l = lift_parameterisation(Route::Arrow, &x3).unwrap();
    assert_eq!(l.problem.blocks[0].size(), 4);
    let y = l.lift(&vec![0.0; l.problem.free_dim]).unwrap();
    let big = y.to_block_matrix().unwrap();
    // arrow: zero outside the first row/column and the diagonal
    for i in 1..4 {
        for j in 1..4 {
            if i != j {
                assert_eq!(big[(i, j)].norm(), 0.0);
            }
        }
    }

    let l = lift_parameterisation(Route::Diagonal, &x).unwrap();
    assert_eq!(l.problem.free_dim, 1);
    assert_eq!(l.problem.blocks.len(), 4);

    let one = TensorElement::nc_scalar(1.0, &[0.3]).unwrap();
    let l = qn_route(&one).unwrap();
    assert_eq!(l.problem.free_dim, 0);
    assert_eq!(l.problem.blocks.len(), 2);
}

#[test]
fn all_routes_agree_on_level_one_examples() {
    let opts = SolveOptions::default();
    for (coeffs, want) in [([1.0, 0.4, 0.4], 0.2), ([1.0, 0.6, 0.6], -0.2), ([1.0, 0.0, 0.0], 1.0)] {
        let x = TensorElement::nc_scalar(coeffs[0], &coeffs[1..]).unwrap();
        for route in Route::ALL {
            let l = lift_parameterisation(route, &x).unwrap();
            let r = solve_max_margin(&l.problem, &opts).unwrap();
            let m = r.margin * l.problem.unit_scale;
            let ub = r.upper_bound * l.problem.unit_scale;
            assert!(m <= want + 1e-7, "{route:?} {coeffs:?}: {m}");
            assert!(ub >= want - 1e-7, "{route:?} {coeffs:?}: ub {ub}");
            assert!(ub - m < 1e-6, "{route:?} {coeffs:?}: gap {m} {ub}");
        }
    }
}
