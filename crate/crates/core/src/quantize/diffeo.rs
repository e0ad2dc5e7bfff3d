use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::{phi_t, PhaseFunction};
use crate::error::{Error, Result};
use crate::fit::DecayTable;
use crate::grid::Grid;
use crate::linalg::ComplexMatrix;

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Orientation-preserving diffeomorphism of a one-dimensional periodic grid,
/// commuting with translation by the period.
#[derive(Clone)]
pub struct Diffeo {
    map: Arc<RealFn>,
    derivative: Arc<RealFn>,
}

impl std::fmt::Debug for Diffeo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Diffeo").finish_non_exhaustive()
    }
}

impl Diffeo {
    pub fn new(
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            map: Arc::new(map),
            derivative: Arc::new(derivative),
        }
    }

    pub fn identity() -> Self {
        Self::new(|x| x, |_| 1.0)
    }

    /// `x ↦ x + a`.
    pub fn translation(a: f64) -> Self {
        Self::new(move |x| x + a, |_| 1.0)
    }

    pub fn map(&self, x: f64) -> f64 {
        (self.map)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    /// Newton inverse, started from `y`.
    pub fn inverse_at(&self, y: f64) -> Result<f64> {
        let mut x = y;
        for _ in 0..100 {
            let step = (self.map(x) - y) / self.derivative(x);
            x -= step;
            if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                return Ok(x);
            }
        }
        if (self.map(x) - y).abs() <= 1e-12 * (1.0 + y.abs()) {
            return Ok(x);
        }
        Err(Error::NotInvertible(format!("Newton inverse failed at y = {y}")))
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != 1 {
            return Err(Error::Dimension("diffeomorphisms act on one-dimensional grids".into()));
        }
        let period = 2.0 * grid.half_period();
        for j in 0..grid.npts() {
            let x = grid.coord(j);
            let d = self.derivative(x);
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::NotInvertible(format!("Jacobian {d} at x = {x}")));
            }
            let shift = self.map(x + period) - self.map(x) - period;
            if shift.abs() > 1e-10 * period {
                return Err(Error::NotInvertible(format!(
                    "map does not commute with the period at x = {x}"
                )));
            }
        }
        Ok(())
    }

    fn inverse(&self) -> Self {
        let fwd = self.clone();
        let inv = self.clone();
        Self::new(
            move |y| fwd.inverse_at(y).expect("validated diffeomorphism"),
            move |y| 1.0 / inv.derivative(inv.inverse_at(y).expect("validated diffeomorphism")),
        )
    }
}

/// Row of weights evaluating the trigonometric interpolant at `y`; the
/// Nyquist mode enters as a cosine so real data interpolate to real values.
fn interpolation_row(grid: &Grid, y: f64) -> Vec<C64> {
    let n = grid.npts();
    let omega = PI / grid.half_period();
    let half = (n / 2) as i64;
    (0..n)
        .map(|j| {
            let s = y - grid.coord(j);
            let mut acc = (half as f64 * omega * s).cos();
            for k in 1..half {
                acc += 2.0 * (k as f64 * omega * s).cos();
            }
            C64::new((acc + 1.0) / n as f64, 0.0)
        })
        .collect()
}

/// `(T_ψ η)(x) = ψ'(x)^{1/2} η(ψ(x))`, unitary in the continuum.
pub fn transfer_operator(grid: &Grid, psi: &Diffeo) -> Result<ComplexMatrix> {
    psi.validate(grid)?;
    let n = grid.npts();
    let mut t = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let x = grid.coord(j);
        let w = psi.derivative(x).sqrt();
        for (l, v) in interpolation_row(grid, psi.map(x)).into_iter().enumerate() {
            t[(j, l)] = v * w;
        }
    }
    Ok(t)
}

/// `‖(Φ_t(F∘ψ̂) − T_ψ Φ_t(F) T_ψ⁻¹) Π‖` over `t_list`.
pub fn diffeo_covariance(
    grid: &Grid,
    f: &PhaseFunction,
    psi: &Diffeo,
    t_list: &[f64],
) -> Result<DecayTable> {
    let t_fwd = transfer_operator(grid, psi)?;
    let t_inv = transfer_operator(grid, &psi.inverse())?;
    let pulled = f.pullback(psi)?;
    let fiber = f.fiber();
    let id = ComplexMatrix::identity(fiber);
    let (t_fwd, t_inv) = (t_fwd.kron(&id), t_inv.kron(&id));
    let values = t_list
        .iter()
        .map(|&t| {
            let lhs = phi_t(grid, &pulled, t)?;
            let rhs = t_fwd.matmul(&phi_t(grid, f, t)?)?.matmul(&t_inv)?;
            grid.resolved_norm(&(&lhs - &rhs), fiber)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::new(t_list.to_vec(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_reproduces_grid_values() {
        let grid = Grid::circle(16).unwrap();
        for j in 0..16 {
            let row = interpolation_row(&grid, grid.coord(j));
            for (l, v) in row.iter().enumerate() {
                let e = if l == j { 1.0 } else { 0.0 };
                assert!((v.re - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn grid_translation_is_a_shift() {
        let grid = Grid::circle(32).unwrap();
        let t = transfer_operator(&grid, &Diffeo::translation(grid.spacing())).unwrap();
        for j in 0..32 {
            assert!((t[(j, (j + 1) % 32)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_diffeo_is_exactly_covariant() {
        let grid = Grid::circle(64).unwrap();
        let f = PhaseFunction::tensor(
            1,
            |x| C64::new(x[0].cos(), 0.0),
            |xi| C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0),
        );
        let table = diffeo_covariance(&grid, &f, &Diffeo::identity(), &[1.0, 4.0]).unwrap();
        assert!(table.values.iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn rejects_orientation_reversal() {
        let grid = Grid::circle(16).unwrap();
        let psi = Diffeo::new(|x| -x, |_| -1.0);
        assert!(matches!(
            transfer_operator(&grid, &psi),
            Err(Error::NotInvertible(_))
        ));
    }
}
