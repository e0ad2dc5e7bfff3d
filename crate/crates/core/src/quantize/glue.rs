use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::{phi_t, PhaseFunction};
use crate::error::{Error, Result};
use crate::fit::DecayTable;
use crate::grid::{Grid, Topology};
use crate::linalg::ComplexMatrix;
use crate::tolerances;

type Weight = dyn Fn(f64) -> f64 + Send + Sync;

/// A chart of the circle with its partition weight `ρ`.
#[derive(Clone)]
pub enum Chart {
    /// The identity chart; quantizes on the circle itself.
    Whole { rho: Arc<Weight> },
    /// Arc `|θ − center| < half_width` mapped isometrically onto an interval
    /// of the line; `center` is a grid point.
    Arc {
        center: f64,
        half_width: f64,
        rho: Arc<Weight>,
    },
}

impl Chart {
    fn rho(&self, theta: f64) -> f64 {
        match self {
            Chart::Whole { rho } | Chart::Arc { rho, .. } => rho(theta),
        }
    }
}

/// `θ − c` reduced to `[−π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Smooth step from 0 on `(−∞, 0]` to 1 on `[1, ∞)`.
pub fn smooth_step(u: f64) -> f64 {
    let bump = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (bump(u), bump(1.0 - u));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Charts with weights `ρ_α`, `Σ ρ_α² = 1`.
#[derive(Clone)]
pub struct Cover {
    grid: Grid,
    charts: Vec<Chart>,
}

impl Cover {
    pub fn new(grid: &Grid, charts: Vec<Chart>) -> Result<Self> {
        if grid.topology() != Topology::Circle {
            return Err(Error::InvalidCover("covers are defined on circle grids".into()));
        }
        if charts.is_empty() {
            return Err(Error::InvalidCover("empty cover".into()));
        }
        let h = grid.spacing();
        for ch in &charts {
            if let Chart::Arc {
                center, half_width, ..
            } = ch
            {
                if !(*half_width > 0.0 && *half_width < PI) {
                    return Err(Error::InvalidCover(format!(
                        "arc half width {half_width} outside (0, π)"
                    )));
                }
                let offset = center / h;
                if (offset - offset.round()).abs() > 1e-9 {
                    return Err(Error::InvalidCover(format!("center {center} is not a grid point")));
                }
            }
        }
        for j in 0..grid.npts() {
            let theta = grid.coord(j);
            let mut sum = 0.0;
            for ch in &charts {
                let r = ch.rho(theta);
                if let Chart::Arc {
                    center, half_width, ..
                } = ch
                {
                    if wrap_angle(theta - center).abs() >= *half_width && r != 0.0 {
                        return Err(Error::InvalidCover(format!(
                            "weight {r:.3e} outside its arc at θ = {theta:.4}"
                        )));
                    }
                }
                sum += r * r;
            }
            if (sum - 1.0).abs() > tolerances::PARTITION {
                return Err(Error::InvalidCover(format!(
                    "Σρ² = {sum:.12} at θ = {theta:.4}"
                )));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            charts,
        })
    }

    /// The single identity chart with `ρ ≡ 1`.
    pub fn whole(grid: &Grid) -> Result<Self> {
        Self::new(grid, vec![Chart::Whole { rho: Arc::new(|_| 1.0) }])
    }

    /// Two arcs of half width `3π/4` centered at `rotation` and `rotation + π`
    /// (snapped to the grid), with `ρ₁ = cos(πτ/2)`, `ρ₂ = sin(πτ/2)`.
    pub fn two_arcs(grid: &Grid, rotation: f64) -> Result<Self> {
        let h = grid.spacing();
        let c1 = (rotation / h).round() * h;
        let c2 = c1 + PI;
        let tau = move |theta: f64| {
            let d = wrap_angle(theta - c1).abs();
            smooth_step((d - (PI / 4.0 + 0.1)) / (PI / 2.0 - 0.2))
        };
        let half_width = 3.0 * PI / 4.0;
        Self::new(
            grid,
            vec![
                Chart::Arc {
                    center: c1,
                    half_width,
                    rho: Arc::new(move |th| {
                        let s = tau(th);
                        if s >= 1.0 {
                            0.0
                        } else {
                            (0.5 * PI * s).cos()
                        }
                    }),
                },
                Chart::Arc {
                    center: c2,
                    half_width,
                    rho: Arc::new(move |th| (0.5 * PI * tau(th)).sin()),
                },
            ],
        )
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// `Σ_α χ_α* Φ_t^{line}(ρ_α F ∘ χ_α⁻¹) χ_α M_{ρ_α}` on the circle.
pub fn glued_phi(cover: &Cover, f: &PhaseFunction, t: f64) -> Result<ComplexMatrix> {
    let grid = &cover.grid;
    if f.dim() != 1 {
        return Err(Error::Dimension("gluing acts on the circle".into()));
    }
    let n = grid.npts();
    let fiber = f.fiber();
    let mut out = ComplexMatrix::zeros(n * fiber, n * fiber);
    for ch in &cover.charts {
        match ch {
            Chart::Whole { rho } => {
                let rho_x = rho.clone();
                let local = f.scale_x(move |x| C64::new(rho_x(x[0]), 0.0));
                let k = phi_t(grid, &local, t)?;
                let w: Vec<C64> = (0..n)
                    .flat_map(|j| std::iter::repeat_n(C64::new(rho(grid.coord(j)), 0.0), fiber))
                    .collect();
                out = &out + &k.scale_cols(&w);
            }
            Chart::Arc {
                center,
                half_width,
                rho,
            } => {
                let line = Grid::periodized_line(1, 2 * n, 2.0 * PI)?;
                let (c, w, r) = (*center, *half_width, rho.clone());
                let g = f.clone();
                let local = PhaseFunction::new(1, fiber, move |y, xi| {
                    if y[0].abs() >= w {
                        return ComplexMatrix::zeros(g.fiber(), g.fiber());
                    }
                    g.eval(&[c + y[0]], xi).scale_real(r(c + y[0]))
                });
                let k = phi_t(&line, &local, t)?;
                let h = grid.spacing();
                let to_line: Vec<usize> = (0..n)
                    .map(|j| {
                        let y = wrap_angle(grid.coord(j) - c);
                        ((y + 2.0 * PI) / h).round() as usize
                    })
                    .collect();
                for j in 0..n {
                    for jp in 0..n {
                        let wgt = rho(grid.coord(jp));
                        if wgt == 0.0 {
                            continue;
                        }
                        for a in 0..fiber {
                            for b in 0..fiber {
                                out[(j * fiber + a, jp * fiber + b)] +=
                                    k[(to_line[j] * fiber + a, to_line[jp] * fiber + b)] * wgt;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `‖(glued₁ − glued₂) Π‖` over `t_list` for two covers of the same circle.
pub fn gluing_independence(
    first: &Cover,
    second: &Cover,
    f: &PhaseFunction,
    t_list: &[f64],
) -> Result<DecayTable> {
    if first.grid != second.grid {
        return Err(Error::InvalidCover("covers live on different grids".into()));
    }
    let values = t_list
        .iter()
        .map(|&t| {
            let d = &glued_phi(first, f, t)? - &glued_phi(second, f, t)?;
            first.grid.resolved_norm(&d, f.fiber())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayTable::new(t_list.to_vec(), values))
}

/// `max |Φ_t(ρF) − M_ρ Φ_t(F)|` entrywise.
pub fn module_property_defect(
    grid: &Grid,
    f: &PhaseFunction,
    rho: impl Fn(&[f64]) -> C64 + Send + Sync + Clone + 'static,
    t: f64,
) -> Result<f64> {
    let lhs = phi_t(grid, &f.scale_x(rho.clone()), t)?;
    let m = super::mult_op(grid, f.fiber(), rho);
    let rhs = m.matmul(&phi_t(grid, f, t)?)?;
    Ok((&lhs - &rhs).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp_times_resolvent() -> PhaseFunction {
        PhaseFunction::tensor(
            1,
            |x| C64::new(1.0 + 0.5 * x[0].cos() + 0.3 * (2.0 * x[0]).sin(), 0.0),
            |xi| C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0),
        )
    }

    #[test]
    fn whole_circle_cover_is_global_quantization() {
        let grid = Grid::circle(64).unwrap();
        let f = amp_times_resolvent();
        let g = glued_phi(&Cover::whole(&grid).unwrap(), &f, 4.0).unwrap();
        let global = phi_t(&grid, &f, 4.0).unwrap();
        assert!((&g - &global).max_abs() < 1e-13);
    }

    #[test]
    fn two_arc_cover_is_a_partition() {
        let grid = Grid::circle(128).unwrap();
        assert!(Cover::two_arcs(&grid, 0.0).is_ok());
        assert!(Cover::two_arcs(&grid, PI / 3.0).is_ok());
    }

    #[test]
    fn rejects_bad_partition() {
        let grid = Grid::circle(32).unwrap();
        let r = Cover::new(&grid, vec![Chart::Whole { rho: Arc::new(|_| 0.5) }]);
        assert!(matches!(r, Err(Error::InvalidCover(_))));
    }

    #[test]
    fn function_supported_in_one_arc_stays_there() {
        let grid = Grid::circle(64).unwrap();
        let cover = Cover::two_arcs(&grid, 0.0).unwrap();
        let f = PhaseFunction::tensor(
            1,
            |x| {
                let d = wrap_angle(x[0]).abs();
                C64::new(1.0 - smooth_step((d - 0.2) / 0.3), 0.0)
            },
            |xi| C64::new(1.0 / (1.0 + xi[0] * xi[0]), 0.0),
        );
        let g = glued_phi(&cover, &f, 8.0).unwrap();
        for j in 0..64 {
            if wrap_angle(grid.coord(j)).abs() >= 3.0 * PI / 4.0 {
                assert!(g.row(j).iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn module_property_is_exact() {
        let grid = Grid::circle(64).unwrap();
        let d = module_property_defect(&grid, &amp_times_resolvent(), |x| C64::new(x[0].sin(), 0.2), 4.0).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn rotated_covers_agree_asymptotically() {
        let grid = Grid::circle(64).unwrap();
        let a = Cover::two_arcs(&grid, 0.0).unwrap();
        let b = Cover::two_arcs(&grid, PI / 3.0).unwrap();
        let table = gluing_independence(&a, &b, &amp_times_resolvent(), &[2.0, 16.0]).unwrap();
        assert!(table.values[1] < table.values[0]);
    }
}
