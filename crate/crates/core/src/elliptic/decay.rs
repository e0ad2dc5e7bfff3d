//! Large-`t` comparisons between functions of `t⁻¹D` and quantized symbols.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::doubled::ChiralOp;
use super::operator::FirstOrderOp;
use crate::error::{Error, Result};
use crate::fit::DecayTable;
use crate::grid::Grid;
use crate::linalg::{hermitian_eig, operator_norm, ComplexMatrix, SpectralData};
use crate::quantize::{phi_t, PhaseFunction};
use crate::tolerances;

/// Real-line function applied through the functional calculus.
pub type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

fn check_t_list(t_list: &[f64]) -> Result<()> {
    if t_list.is_empty() || t_list.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::InvalidParameter("t values must be positive".into()));
    }
    Ok(())
}

fn spectra(op: &FirstOrderOp) -> Result<Vec<SpectralData>> {
    op.discretize()
        .iter()
        .map(|d| hermitian_eig(&d.hermitian_part()))
        .collect()
}

fn at_scale(s: &SpectralData, f: &dyn Fn(f64) -> C64, t: f64) -> Result<ComplexMatrix> {
    s.apply_function(|l| f(l / t))
}

fn multiplication(op: &FirstOrderOp, i: usize, phi: &dyn Fn(&[f64]) -> C64) -> ComplexMatrix {
    op.grid().multiplication(op.block_fiber(i), phi)
}

/// `max_i ‖X_i Π‖` over the blocks of `A`.
fn block_norm(op: &FirstOrderOp, mats: &[ComplexMatrix]) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (i, m) in mats.iter().enumerate() {
        sup = sup.max(op.grid().resolved_norm(m, op.block_fiber(i))?);
    }
    Ok(sup)
}

/// One row of `‖[M_φ, r_±(t⁻¹D)]‖ ≤ t⁻¹ ‖[D, M_φ]‖`, full operator norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventRow {
    pub t: f64,
    pub plus: f64,
    pub minus: f64,
    pub bound: f64,
}

impl ResolventRow {
    pub fn holds(&self, slack: f64) -> bool {
        self.plus <= self.bound + slack && self.minus <= self.bound + slack
    }
}

/// Part (1): `‖[M_φ, f(t⁻¹D)] Π‖`, plus the resolvent identity bound.
pub fn lemma45_commutator(
    op: &FirstOrderOp,
    phi: &dyn Fn(&[f64]) -> C64,
    f: &ScalarFn,
    t_list: &[f64],
) -> Result<(DecayTable, Vec<ResolventRow>)> {
    check_t_list(t_list)?;
    let specs = spectra(op)?;
    let ds = op.discretize();
    let ms: Vec<ComplexMatrix> = (0..specs.len()).map(|i| multiplication(op, i, phi)).collect();
    let mut dm_norm: f64 = 0.0;
    for (d, m) in ds.iter().zip(&ms) {
        dm_norm = dm_norm.max(operator_norm(&d.commutator(m)?)?);
    }
    let rp = |x: f64| C64::new(1.0, 0.0) / C64::new(x, 1.0);
    let rm = |x: f64| C64::new(1.0, 0.0) / C64::new(x, -1.0);
    let mut values = Vec::with_capacity(t_list.len());
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let mut comms = Vec::with_capacity(specs.len());
        let (mut plus, mut minus): (f64, f64) = (0.0, 0.0);
        for (s, m) in specs.iter().zip(&ms) {
            comms.push(m.commutator(&at_scale(s, f.as_ref(), t)?)?);
            plus = plus.max(operator_norm(&m.commutator(&at_scale(s, &rp, t)?)?)?);
            minus = minus.max(operator_norm(&m.commutator(&at_scale(s, &rm, t)?)?)?);
        }
        values.push(block_norm(op, &comms)?);
        rows.push(ResolventRow {
            t,
            plus,
            minus,
            bound: dm_norm / t,
        });
    }
    Ok((DecayTable::new(t_list.to_vec(), values), rows))
}

/// Part (2): `‖M_φ (f(t⁻¹D₁) − f(t⁻¹D₂)) Π‖` for `D₂ − D₁` of order zero.
pub fn lemma45_order_zero(
    op1: &FirstOrderOp,
    op2: &FirstOrderOp,
    phi: &dyn Fn(&[f64]) -> C64,
    f: &ScalarFn,
    t_list: &[f64],
) -> Result<DecayTable> {
    check_t_list(t_list)?;
    check_compatible(op1, op2)?;
    let n = op1.grid().size();
    for j in 0..op1.grid().dim() {
        for p in 0..n {
            if op1.a(j, p).sub(op2.a(j, p))?.max_abs() > tolerances::COEFFICIENT {
                return Err(Error::Precondition(
                    "operators differ in their first-order coefficients".into(),
                ));
            }
        }
    }
    let (s1, s2) = (spectra(op1)?, spectra(op2)?);
    let values = t_list
        .iter()
        .map(|&t| {
            let mats = (0..s1.len())
                .map(|i| {
                    let m = multiplication(op1, i, phi);
                    m.matmul(&(&at_scale(&s1[i], f.as_ref(), t)? - &at_scale(&s2[i], f.as_ref(), t)?))
                })
                .collect::<Result<Vec<_>>>()?;
            block_norm(op1, &mats)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::new(t_list.to_vec(), values))
}

/// Part (3): `‖(M_φ f(t⁻¹D₁) − f(t⁻¹D₂) M_φ) Π‖` for operators agreeing
/// near `supp φ`.
pub fn lemma45_local(
    op1: &FirstOrderOp,
    op2: &FirstOrderOp,
    phi: &dyn Fn(&[f64]) -> C64,
    f: &ScalarFn,
    t_list: &[f64],
) -> Result<DecayTable> {
    check_t_list(t_list)?;
    check_compatible(op1, op2)?;
    let mask = neighborhood(op1.grid(), phi, 2);
    let dist = op1.coefficient_distance(op2, &mask);
    if dist > tolerances::COEFFICIENT {
        return Err(Error::Precondition(format!(
            "operators differ by {dist:.3e} near the support of φ"
        )));
    }
    let (s1, s2) = (spectra(op1)?, spectra(op2)?);
    let values = t_list
        .iter()
        .map(|&t| {
            let mats = (0..s1.len())
                .map(|i| {
                    let m = multiplication(op1, i, phi);
                    Ok(&m.matmul(&at_scale(&s1[i], f.as_ref(), t)?)? - &at_scale(&s2[i], f.as_ref(), t)?.matmul(&m)?)
                })
                .collect::<Result<Vec<_>>>()?;
            block_norm(op1, &mats)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::new(t_list.to_vec(), values))
}

fn check_compatible(op1: &FirstOrderOp, op2: &FirstOrderOp) -> Result<()> {
    if op1.grid() != op2.grid() || op1.algebra() != op2.algebra() || op1.module_rank() != op2.module_rank() {
        return Err(Error::AlgebraMismatch("operators act on different spaces".into()));
    }
    Ok(())
}

/// Grid points within `radius` cells (per axis) of a point where `φ ≠ 0`.
fn neighborhood(grid: &Grid, phi: &dyn Fn(&[f64]) -> C64, radius: usize) -> Vec<bool> {
    let n = grid.npts() as i64;
    let support: Vec<bool> = (0..grid.size()).map(|p| phi(&grid.point(p)).norm() > 0.0).collect();
    let r = radius as i64;
    (0..grid.size())
        .map(|p| {
            let idx = grid.multi_index(p);
            let offsets: Vec<Vec<i64>> = match grid.dim() {
                1 => (-r..=r).map(|a| vec![a]).collect(),
                _ => (-r..=r).flat_map(|a| (-r..=r).map(move |b| vec![a, b])).collect(),
            };
            offsets.iter().any(|off| {
                let q: Vec<usize> = idx
                    .iter()
                    .zip(off)
                    .map(|(&i, &o)| (i as i64 + o).rem_euclid(n) as usize)
                    .collect();
                support[grid.flat_index(&q)]
            })
        })
        .collect()
}

/// All three parts of the decay lemma.
#[derive(Debug, Clone)]
pub struct Lemma45Report {
    pub commutator: DecayTable,
    pub resolvent_rows: Vec<ResolventRow>,
    pub order_zero: DecayTable,
    pub local: DecayTable,
}

/// `op2` must differ from `op1` by order zero; `op3` must agree with `op1`
/// near `supp φ`.
pub fn lemma45_decay(
    op1: &FirstOrderOp,
    op2: &FirstOrderOp,
    op3: &FirstOrderOp,
    phi: &dyn Fn(&[f64]) -> C64,
    f: &ScalarFn,
    t_list: &[f64],
) -> Result<Lemma45Report> {
    let (commutator, resolvent_rows) = lemma45_commutator(op1, phi, f, t_list)?;
    Ok(Lemma45Report {
        commutator,
        resolvent_rows,
        order_zero: lemma45_order_zero(op1, op2, phi, f, t_list)?,
        local: lemma45_local(op1, op3, phi, f, t_list)?,
    })
}

/// `‖M_φ f(t⁻¹D) − M_φ f(t⁻¹D^{x₀})‖` and the coefficient distance `δ` on `supp φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreezeResult {
    pub norm: f64,
    pub delta: f64,
}

pub fn freeze_compare(
    op: &FirstOrderOp,
    p0: usize,
    phi: &dyn Fn(&[f64]) -> C64,
    f: &ScalarFn,
    t: f64,
) -> Result<FreezeResult> {
    check_t_list(&[t])?;
    let grid = op.grid();
    if p0 >= grid.size() {
        return Err(Error::InvalidParameter(format!("grid point {p0} out of range")));
    }
    if phi(&grid.point(p0)).norm() == 0.0 {
        return Err(Error::Precondition("x₀ lies outside the support of φ".into()));
    }
    let frozen = op.frozen(p0);
    let mask: Vec<bool> = (0..grid.size()).map(|p| phi(&grid.point(p)).norm() > 0.0).collect();
    let delta = op.coefficient_distance(&frozen, &mask);
    let (s1, s2) = (spectra(op)?, spectra(&frozen)?);
    let mats = (0..s1.len())
        .map(|i| {
            let m = multiplication(op, i, phi);
            m.matmul(&(&at_scale(&s1[i], f.as_ref(), t)? - &at_scale(&s2[i], f.as_ref(), t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FreezeResult {
        norm: block_norm(op, &mats)?,
        delta,
    })
}

/// `f(H)` for a small Hermitian matrix.
fn small_function(h: &ComplexMatrix, f: &dyn Fn(f64) -> C64) -> ComplexMatrix {
    if h.rows() == 1 {
        return ComplexMatrix::from_diagonal(&[f(h[(0, 0)].re)]);
    }
    hermitian_eig(&h.hermitian_part())
        .and_then(|s| s.apply_function(f))
        .expect("finite Hermitian symbol")
}

/// `‖(Φ_t(φ f(σ(D))) − M_φ f(t⁻¹D)) Π‖` over `t_list`.
pub fn quantization_convergence(
    op: &FirstOrderOp,
    phi: &dyn Fn(&[f64]) -> C64,
    f: &ScalarFn,
    t_list: &[f64],
) -> Result<DecayTable> {
    check_t_list(t_list)?;
    let grid = op.grid().clone();
    let specs = spectra(op)?;
    let mut values = vec![0.0f64; t_list.len()];
    for (i, spec) in specs.iter().enumerate() {
        let fiber = op.block_fiber(i);
        // F is only evaluated at grid points, so φ is tabulated there.
        let sym_op = op.clone();
        let g = grid.clone();
        let samples: Arc<Vec<C64>> = Arc::new(grid.sample(phi));
        let fc = f.clone();
        let phase = PhaseFunction::new(grid.dim(), fiber, move |x, xi| {
            let p = g.nearest_index(x);
            let s = sym_op.principal_symbol(i, p, xi);
            small_function(&s, fc.as_ref()).scale(samples[p])
        });
        phase.check_decay(&grid, t_list[0], tolerances::PHASE_DECAY)?;
        let m = multiplication(op, i, phi);
        for (v, &t) in values.iter_mut().zip(t_list) {
            let diff = &phi_t(&grid, &phase, t)? - &m.matmul(&at_scale(spec, f.as_ref(), t)?)?;
            *v = v.max(grid.resolved_norm(&diff, fiber)?);
        }
    }
    Ok(DecayTable::new(t_list.to_vec(), values))
}

/// `‖(Φ_t(f(σ(𝔻))) − f(t⁻¹𝔻)) Π‖` for a graded operator carrying its symbol.
pub fn doubled_quantization_convergence(
    op: &ChiralOp,
    f: &ScalarFn,
    t_list: &[f64],
) -> Result<DecayTable> {
    check_t_list(t_list)?;
    let symbol = op
        .symbol()
        .cloned()
        .ok_or_else(|| Error::Precondition("operator carries no principal symbol".into()))?;
    let grid = op.grid().clone();
    let r = op.fiber();
    let n = op.sector_dim();
    let size = grid.size();
    let perm: Vec<usize> = (0..2 * n)
        .map(|i| {
            let (p, rest) = (i / (2 * r), i % (2 * r));
            let (s, a) = (rest / r, rest % r);
            s * n + p * r + a
        })
        .collect();
    debug_assert_eq!(size * r, n);
    let spec = hermitian_eig(&op.full_matrix().permute(&perm))?;
    let fc = f.clone();
    let phase = PhaseFunction::new(grid.dim(), 2 * r, move |x, xi| {
        small_function(&symbol(x, xi), fc.as_ref())
    });
    phase.check_decay(&grid, t_list[0], tolerances::PHASE_DECAY)?;
    let values = t_list
        .iter()
        .map(|&t| {
            let diff = &phi_t(&grid, &phase, t)? - &at_scale(&spec, f.as_ref(), t)?;
            grid.resolved_norm(&diff, 2 * r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::new(t_list.to_vec(), values))
}
