use indexlab::bott::{build_bott, OscillatorConfig};
use indexlab::clifford::CliffordRep;
use indexlab::cstar::{k0_of_projection, AMatrix, Algebra};
use indexlab::elliptic::{analytic_index, twisted_dirac_block, ChiralOp, DoubledOp};
use indexlab::linalg::{apply_function, dft, hermitian_eig, idft, operator_norm, ComplexMatrix};
use indexlab::trials::{random_hermitian, random_projection};
use indexlab::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn clifford_square_is_norm(n in 1usize..=4, coords in prop::collection::vec(-3.0f64..3.0, 8)) {
        let rep = CliffordRep::new(n).unwrap();
        let (v, xi) = (&coords[..n], &coords[4..4 + n]);
        let c = rep.clifford_mult(v, xi).unwrap();
        let r2: f64 = v.iter().chain(xi).map(|a| a * a).sum();
        let mut sq = c.matmul(&c).unwrap();
        sq.add_scaled(&ComplexMatrix::identity(rep.dim()), C64::new(-r2, 0.0));
        prop_assert!(sq.max_abs() <= 1e-12 * (1.0 + r2));
        prop_assert!(c.hermitian_deviation() <= 1e-12);
        prop_assert!(c.anticommutator(rep.grading()).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn k0_class_is_unitarily_invariant(seed in any::<u64>(), k in 1usize..=3, m in 1usize..=3, s in 0.0f64..2.0) {
        let mut r = rng(seed);
        let n = m * k;
        let rank = (seed % (n as u64 + 1)) as usize;
        let alg = Algebra::new(vec![k]).unwrap();
        let p = AMatrix::new(alg.clone(), m, vec![random_projection(&mut r, n, rank).unwrap()]).unwrap();
        let h = random_hermitian(&mut r, n);
        let u = apply_function(&h, |l| C64::from_polar(1.0, s * l)).unwrap();
        let q = u.matmul(p.block(0)).unwrap().matmul(&u.adjoint()).unwrap();
        let q = AMatrix::new(alg, m, vec![q]).unwrap();
        let (cp, cq) = (k0_of_projection(&p).unwrap(), k0_of_projection(&q).unwrap());
        prop_assert_eq!(&cp, &cq);
        prop_assert_eq!(cp.components()[0], rank as i64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=120) {
        let s = random_hermitian(&mut rng(seed), n);
        let sd = hermitian_eig(&s).unwrap();
        prop_assert!((&sd.reconstruct() - &s).max_abs() <= 1e-10);
        prop_assert!(sd.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn functional_calculus_is_multiplicative(seed in any::<u64>(), n in 1usize..=40) {
        let s = random_hermitian(&mut rng(seed), n);
        let f = |l: f64| C64::new(1.0 / (1.0 + l * l), 0.0);
        let g = |l: f64| C64::from_polar(1.0, l);
        let fg = apply_function(&s, |l| f(l) * g(l)).unwrap();
        let prod = apply_function(&s, f).unwrap().matmul(&apply_function(&s, g).unwrap()).unwrap();
        prop_assert!((&fg - &prod).max_abs() <= 1e-12);
        let adj = apply_function(&s, |l| g(l).conj()).unwrap();
        prop_assert!((&adj - &apply_function(&s, g).unwrap().adjoint()).max_abs() <= 1e-12);
    }

    #[test]
    fn operator_norm_is_submultiplicative(seed in any::<u64>(), n in 1usize..=30) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, n);
        let b = random_hermitian(&mut r, n);
        let ab = operator_norm(&a.matmul(&b).unwrap()).unwrap();
        let (na, nb) = (operator_norm(&a).unwrap(), operator_norm(&b).unwrap());
        prop_assert!(ab <= na * nb * (1.0 + 1e-10));
        prop_assert!(na <= a.frobenius() * (1.0 + 1e-10));
    }

    #[test]
    fn dft_round_trips(values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..70)) {
        let x: Vec<C64> = values.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let back = idft(&dft(&x));
        prop_assert!(x.iter().zip(&back).all(|(a, b)| (a - b).norm() <= 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn index_survives_small_order_zero_perturbation(
        flux in -1i64..=1,
        coeffs in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let op = twisted_dirac_block(12, flux).unwrap();
        let base = analytic_index(&DoubledOp::scalar(op.clone()), 0.02).unwrap();
        let gap = base.reports[0].next_singular_value;
        let grid = op.grid().clone();
        let pot = grid.multiplication(1, |x| {
            C64::new(coeffs[0] + coeffs[1] * x[0].cos(), coeffs[2] * x[1].sin() + coeffs[3])
        });
        let scale = 0.05 * gap / operator_norm(&pot).unwrap().max(1e-12);
        let mut d = op.d_plus().clone();
        d.add_scaled(&pot, C64::new(scale, 0.0));
        let perturbed = ChiralOp::new(grid, 1, d, op.resolution()).unwrap();
        let idx = analytic_index(&DoubledOp::scalar(perturbed), 0.06 * gap).unwrap();
        prop_assert_eq!(idx.class.components(), base.class.components());
        prop_assert_eq!(base.class.components()[0], flux);
    }
}

#[test]
fn chirality_pairs_nonzero_spectrum() {
    let op = build_bott(&OscillatorConfig::new(1, 1.0, 32, 6.0).unwrap()).unwrap();
    let b = op.full_matrix();
    let eps = op.grading_diagonal();
    let sd = hermitian_eig(&b).unwrap();
    let n = sd.eigenvalues.len();
    for j in 0..n {
        let l = sd.eigenvalues[j];
        if l.abs() < 0.5 {
            continue;
        }
        let v = sd.vector(j);
        let ev: Vec<C64> = v.iter().zip(&eps).map(|(z, e)| z * e).collect();
        let k = (0..n)
            .min_by(|&a, &c| {
                (sd.eigenvalues[a] + l).abs().total_cmp(&(sd.eigenvalues[c] + l).abs())
            })
            .unwrap();
        assert!((sd.eigenvalues[k] + l).abs() < 1e-8);
        let w = sd.vector(k);
        let overlap: C64 = w.iter().zip(&ev).map(|(a, b)| a.conj() * b).sum();
        let residual: f64 = w
            .iter()
            .zip(&ev)
            .map(|(a, b)| (b - a * overlap).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-6, "λ = {l}: {residual}");
    }
}
