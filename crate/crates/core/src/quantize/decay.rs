use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fit::{DecayTable, LogLogFit};
use crate::grid::{Grid, ResolvedRestriction};
use crate::linalg::{operator_norm_map, LinearMap};

/// `[M_f, g(D)]` applied matrix-free through FFTs.
struct Commutator<'a> {
    grid: &'a Grid,
    f: Vec<C64>,
    symbol: Vec<C64>,
}

impl Commutator<'_> {
    fn apply_with(&self, f: &[C64], symbol: &[C64], x: &[C64]) -> Vec<C64> {
        let gx = self.grid.apply_multiplier(symbol, 1, x);
        let fx: Vec<C64> = f.iter().zip(x).map(|(a, b)| a * b).collect();
        let gfx = self.grid.apply_multiplier(symbol, 1, &fx);
        f.iter()
            .zip(&gx)
            .zip(&gfx)
            .map(|((a, b), c)| a * b - c)
            .collect()
    }
}

impl LinearMap for Commutator<'_> {
    fn nrows(&self) -> usize {
        self.f.len()
    }
    fn ncols(&self) -> usize {
        self.f.len()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.apply_with(&self.f, &self.symbol, x)
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        // [M_f, G]* = −[M_f̄, G*]
        let fc: Vec<C64> = self.f.iter().map(|z| z.conj()).collect();
        let sc: Vec<C64> = self.symbol.iter().map(|z| z.conj()).collect();
        self.apply_with(&fc, &sc, y).into_iter().map(|z| -z).collect()
    }
}

fn resolved_commutator_norm(grid: &Grid, f: &[C64], symbol: Vec<C64>) -> Result<f64> {
    let c = Commutator {
        grid,
        f: f.to_vec(),
        symbol,
    };
    operator_norm_map(&ResolvedRestriction::new(grid, 1, &c))
}

fn symbol_at(grid: &Grid, t: f64, g: &dyn Fn(&[f64]) -> C64) -> Vec<C64> {
    (0..grid.size())
        .map(|k| {
            let xi: Vec<f64> = grid.frequency(k).iter().map(|v| v / t).collect();
            g(&xi)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CommutatorReport {
    pub table: DecayTable,
    pub fit: LogLogFit,
}

/// `‖[M_f, C_t(g)] Π‖` over `t_list`, with `Π` the resolved-band projector.
pub fn commutator_decay(
    grid: &Grid,
    f: impl Fn(&[f64]) -> C64,
    g: impl Fn(&[f64]) -> C64,
    t_list: &[f64],
) -> Result<CommutatorReport> {
    if t_list.len() < 4 {
        return Err(Error::InvalidParameter(
            "commutator decay needs at least four values of t".into(),
        ));
    }
    if t_list.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(Error::InvalidParameter("t values must be positive".into()));
    }
    let fv = grid.sample(&f);
    let values = t_list
        .iter()
        .map(|&t| resolved_commutator_norm(grid, &fv, symbol_at(grid, t, &g)))
        .collect::<Result<Vec<_>>>()?;
    let table = DecayTable::new(t_list.to_vec(), values);
    let fit = table.loglog_fit()?;
    Ok(CommutatorReport { table, fit })
}

/// One row of the resolvent commutator bound
/// `‖[M_f, (t⁻¹D ± i)⁻¹] Π‖ ≤ t⁻¹ ‖[D, M_f] Π‖` for `D = −i∇` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventBoundRow {
    pub t: f64,
    pub plus: f64,
    pub minus: f64,
    pub bound: f64,
}

impl ResolventBoundRow {
    pub fn holds(&self, slack: f64) -> bool {
        self.plus <= self.bound + slack && self.minus <= self.bound + slack
    }
}

pub fn resolvent_bound_check(
    grid: &Grid,
    f: impl Fn(&[f64]) -> C64,
    axis: usize,
    t_list: &[f64],
) -> Result<Vec<ResolventBoundRow>> {
    if axis >= grid.dim() {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let fv = grid.sample(&f);
    let d_norm = resolved_commutator_norm(grid, &fv, symbol_at(grid, 1.0, &|xi| C64::new(xi[axis], 0.0)))?;
    t_list
        .iter()
        .map(|&t| {
            let plus = resolved_commutator_norm(
                grid,
                &fv,
                symbol_at(grid, t, &|xi| C64::new(1.0, 0.0) / C64::new(xi[axis], 1.0)),
            )?;
            let minus = resolved_commutator_norm(
                grid,
                &fv,
                symbol_at(grid, t, &|xi| C64::new(1.0, 0.0) / C64::new(xi[axis], -1.0)),
            )?;
            Ok(ResolventBoundRow {
                t,
                plus,
                minus,
                bound: d_norm / t,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::quantize::{conv_op, mult_op};

    #[test]
    fn matrix_free_commutator_matches_dense() {
        let grid = Grid::periodized_line(1, 128, 8.0).unwrap();
        let f = |x: &[f64]| C64::new(1.0 / (1.0 + x[0] * x[0]), 0.0);
        let g = |xi: &[f64]| C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0);
        let t = 3.0;
        let m = mult_op(&grid, 1, f);
        let c = conv_op(&grid, 1, |xi| ComplexMatrix::from_diagonal(&[g(xi)]), t).unwrap();
        let dense = m.commutator(&c).unwrap();
        let expected = grid.resolved_norm(&dense, 1).unwrap();
        let got = resolved_commutator_norm(&grid, &grid.sample(f), symbol_at(&grid, t, &g)).unwrap();
        assert!((got - expected).abs() < 1e-10 * expected.max(1e-300));
    }

    #[test]
    fn needs_four_samples() {
        let grid = Grid::circle(16).unwrap();
        let r = commutator_decay(&grid, |_| C64::new(1.0, 0.0), |_| C64::new(1.0, 0.0), &[1.0, 2.0]);
        assert!(r.is_err());
    }
}
