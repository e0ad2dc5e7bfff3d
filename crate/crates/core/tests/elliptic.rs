use std::f64::consts::PI;
use std::sync::Arc;

use indexlab::bott::{build_bott, continuity_in_t, OscillatorConfig};
use indexlab::cstar::{AMatrix, Algebra};
use indexlab::elliptic::{
    analytic_index, doubled_quantization_convergence, freeze_compare, lemma45_decay,
    quantization_convergence, twisted_dirac_block, DoubledOp, FirstOrderOp, ScalarFn,
};
use indexlab::grid::Grid;
use indexlab::linalg::ComplexMatrix;
use indexlab::quantize::wrap_angle;
use indexlab::C64;

fn resolvent() -> ScalarFn {
    Arc::new(|x: f64| C64::new(1.0 / (1.0 + x * x), 0.0))
}

fn bump(center: f64, width: f64) -> impl Fn(&[f64]) -> C64 + Clone {
    move |x: &[f64]| {
        let u = wrap_angle(x[0] - center) / width;
        if u.abs() >= 1.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new((-1.0 / (1.0 - u * u)).exp(), 0.0)
        }
    }
}

fn field(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<AMatrix> {
    (0..grid.size())
        .map(|p| {
            let v = C64::new(f(grid.point(p)[0]), 0.0);
            AMatrix::new(Algebra::scalars(), 1, vec![ComplexMatrix::from_diagonal(&[v])]).unwrap()
        })
        .collect()
}

fn variable_speed(n: usize) -> FirstOrderOp {
    FirstOrderOp::variable_speed(Grid::circle(n).unwrap(), |x| 2.0 + x.sin(), |x| x.cos()).unwrap()
}

#[test]
fn decay_lemma_parts_shrink_and_bound_holds() {
    let op1 = variable_speed(64);
    let grid = op1.grid().clone();
    let op2 = op1.perturbed(&field(&grid, |x| 0.5 * x.cos())).unwrap();
    let far = bump(PI, 1.0);
    let op3 = op1.perturbed(&field(&grid, |x| 3.0 * far(&[x]).re)).unwrap();
    let t = [4.0, 8.0, 16.0, 32.0];
    let r = lemma45_decay(&op1, &op2, &op3, &bump(0.0, 1.0), &resolvent(), &t).unwrap();
    for table in [&r.commutator, &r.order_zero, &r.local] {
        assert!(table.is_nonincreasing(1e-12), "{:?}", table.values);
        assert!(table.values[3] < 0.5 * table.values[0]);
    }
    assert!(r.resolvent_rows.iter().all(|row| row.holds(1e-8)));
}

#[test]
fn identical_operators_reduce_to_the_commutator() {
    let op = variable_speed(32);
    let r = lemma45_decay(&op, &op, &op, &bump(0.0, 1.0), &resolvent(), &[2.0, 4.0]).unwrap();
    assert!(r.order_zero.values.iter().all(|v| *v < 1e-12));
    for (l, c) in r.local.values.iter().zip(&r.commutator.values) {
        assert!((l - c).abs() <= 1e-12 * c.max(1.0));
    }
}

#[test]
fn freezing_a_constant_operator_changes_nothing() {
    let grid = Grid::circle(64).unwrap();
    let op = FirstOrderOp::constant(grid.clone(), &[1.0]).unwrap();
    let p0 = grid.nearest_index(&[0.0]);
    let r = freeze_compare(&op, p0, &bump(0.0, 1.0), &resolvent(), 16.0).unwrap();
    assert_eq!(r.delta, 0.0);
    assert!(r.norm < 1e-12);
}

#[test]
fn freezing_error_shrinks_with_the_cutoff() {
    let op = variable_speed(128);
    let p0 = op.grid().nearest_index(&[0.0]);
    let norms: Vec<f64> = [PI / 2.0, PI / 8.0, PI / 16.0]
        .iter()
        .map(|&w| freeze_compare(&op, p0, &bump(0.0, w), &resolvent(), 64.0).unwrap().norm)
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    assert!(norms[2] < 0.1);
    let off = freeze_compare(&op, p0, &bump(PI, 0.5), &resolvent(), 64.0);
    assert!(off.is_err());
}

#[test]
fn quantization_defect_decays_and_vanishes_for_constant_coefficients() {
    let op = variable_speed(128);
    let one = |_: &[f64]| C64::new(1.0, 0.0);
    let t = [8.0, 16.0, 32.0, 64.0];
    let d = quantization_convergence(&op, &one, &resolvent(), &t).unwrap();
    assert!(d.is_nonincreasing(1e-12), "{:?}", d.values);
    assert!(d.values[3] < 0.05);
    let k = FirstOrderOp::constant(op.grid().clone(), &[1.0]).unwrap();
    let c = quantization_convergence(&k, &one, &resolvent(), &t).unwrap();
    assert!(c.values.iter().all(|v| *v <= 1e-8));
}

#[test]
fn doubled_quantization_on_the_torus() {
    let op = twisted_dirac_block(16, 1).unwrap();
    let d = doubled_quantization_convergence(&op, &resolvent(), &[16.0, 32.0, 64.0]).unwrap();
    assert!(d.is_nonincreasing(1e-12), "{:?}", d.values);
    assert!(d.values[2] < 0.1, "{:?}", d.values);
}

#[test]
fn oscillator_analytic_index_is_one() {
    let op = build_bott(&OscillatorConfig::new(1, 1.0, 128, 8.0).unwrap()).unwrap();
    let gap_tol = 0.05 * (2.0f64).sqrt();
    let idx = analytic_index(&DoubledOp::scalar(op.chiral().clone()), gap_tol).unwrap();
    assert_eq!(idx.class.components(), &[1]);
}

#[test]
fn oscillator_resolvent_is_lipschitz_in_t() {
    let base = OscillatorConfig::new(1, 1.0, 64, 8.0).unwrap();
    let mesh: Vec<f64> = (0..10).map(|j| 1.0 + j as f64 / 9.0).collect();
    let r = continuity_in_t(&base, &mesh).unwrap();
    assert_eq!(r.differences.len(), 9);
    assert!(r.lipschitz.is_finite() && r.lipschitz > 0.0 && r.lipschitz < 10.0);
    for d in &r.differences {
        assert!(*d <= r.lipschitz / 9.0 * (1.0 + 1e-12));
    }
}
