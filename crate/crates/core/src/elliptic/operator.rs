//! First-order differential `A`-operators `D = Σ a_j ∂_j + b` sampled on a grid.

use num_complex::Complex64 as C64;

use crate::cstar::{AMatrix, Algebra};
use crate::error::{Error, Result};
use crate::grid::{Grid, ResolvedRestriction};
use crate::linalg::{hermitian_eig, operator_norm, operator_norm_map, ComplexMatrix};
use crate::tolerances;

/// Pointwise coefficient function on grid coordinates.
pub type CoeffFn<'a> = dyn Fn(&[f64]) -> C64 + 'a;

/// Number of sampled unit directions for two-dimensional symbol suprema.
const DIRECTIONS_2D: usize = 64;

/// `D = Σ_j a_j(x) ∂_j + b(x)` acting on `A^k`-valued functions.
#[derive(Debug, Clone)]
pub struct FirstOrderOp {
    grid: Grid,
    algebra: Algebra,
    k: usize,
    /// `a[j][p]`, an element of `M_k(A)` at grid point `p`.
    a: Vec<Vec<AMatrix>>,
    b: Vec<AMatrix>,
}

/// How strictly to treat the formal self-adjointness identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfAdjointness {
    /// Reject coefficients violating `b − b* = Σ ∂_j a_j`.
    Require,
    /// Replace `b` by the nearest coefficient satisfying the identity.
    Symmetrize,
}

impl FirstOrderOp {
    /// Validates anti-Hermitian `a_j`, formal self-adjointness and ellipticity
    /// with constant at least `c0`.
    pub fn new(
        grid: Grid,
        algebra: Algebra,
        k: usize,
        a: Vec<Vec<AMatrix>>,
        b: Vec<AMatrix>,
        mode: SelfAdjointness,
        c0: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("module rank must be positive".into()));
        }
        if a.len() != grid.dim() {
            return Err(Error::Dimension(format!(
                "{} coefficient fields on a {}-dimensional grid",
                a.len(),
                grid.dim()
            )));
        }
        let n = grid.size();
        for field in a.iter().chain(std::iter::once(&b)) {
            if field.len() != n {
                return Err(Error::Dimension(format!(
                    "coefficient field with {} samples on a grid of {n} points",
                    field.len()
                )));
            }
            for m in field {
                if m.algebra() != &algebra || m.size() != k {
                    return Err(Error::AlgebraMismatch(format!(
                        "coefficient in M_{}({}) for M_{k}({algebra})",
                        m.size(),
                        m.algebra()
                    )));
                }
            }
        }
        let mut op = Self {
            grid,
            algebra,
            k,
            a,
            b,
        };
        op.check_anti_hermitian()?;
        match mode {
            SelfAdjointness::Require => op.check_self_adjoint()?,
            SelfAdjointness::Symmetrize => op.symmetrize(),
        }
        op.check_elliptic(c0)?;
        Ok(op)
    }

    /// Scalar operator over `A = ℂ`, `k = 1`, from coefficient functions.
    pub fn scalar(
        grid: Grid,
        a: &[&CoeffFn],
        b: &CoeffFn,
        mode: SelfAdjointness,
    ) -> Result<Self> {
        let alg = Algebra::scalars();
        let field = |f: &CoeffFn| -> Vec<AMatrix> {
            (0..grid.size())
                .map(|p| {
                    let v = f(&grid.point(p));
                    AMatrix::new(alg.clone(), 1, vec![ComplexMatrix::from_diagonal(&[v])])
                        .expect("scalar coefficient")
                })
                .collect()
        };
        let a_fields = a.iter().map(|f| field(f)).collect();
        let b_field = field(b);
        Self::new(grid, alg, 1, a_fields, b_field, mode, tolerances::ELLIPTIC_MIN)
    }

    /// `D = −i Σ ∂_j` on a one-dimensional grid or `−i ∂_1` plus `−i ∂_2`
    /// weighted by `weights` in two dimensions; constant coefficients.
    pub fn constant(grid: Grid, weights: &[f64]) -> Result<Self> {
        if weights.len() != grid.dim() {
            return Err(Error::Dimension("one weight per axis".into()));
        }
        let fns: Vec<Box<CoeffFn>> = weights
            .iter()
            .map(|&w| Box::new(move |_: &[f64]| C64::new(0.0, -w)) as Box<CoeffFn>)
            .collect();
        let refs: Vec<&CoeffFn> = fns.iter().map(|f| f.as_ref()).collect();
        Self::scalar(grid, &refs, &|_| C64::new(0.0, 0.0), SelfAdjointness::Require)
    }

    /// `D = −i(h ∂ + ½ h′)` on a one-dimensional grid.
    pub fn variable_speed(
        grid: Grid,
        h: impl Fn(f64) -> f64,
        h_prime: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::scalar(
            grid,
            &[&|x: &[f64]| C64::new(0.0, -h(x[0]))],
            &|x: &[f64]| C64::new(0.0, -0.5 * h_prime(x[0])),
            SelfAdjointness::Require,
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn module_rank(&self) -> usize {
        self.k
    }

    /// Fiber dimension `k·k_i` of block `i`.
    pub fn block_fiber(&self, i: usize) -> usize {
        self.k * self.algebra.block_sizes()[i]
    }

    pub fn a(&self, j: usize, p: usize) -> &AMatrix {
        &self.a[j][p]
    }

    pub fn b(&self, p: usize) -> &AMatrix {
        &self.b[p]
    }

    /// Spectral `Σ_j ∂_j a_j` at every grid point.
    fn divergence(&self) -> Vec<AMatrix> {
        let n = self.grid.size();
        let mut out: Vec<AMatrix> = (0..n).map(|_| AMatrix::zeros(&self.algebra, self.k)).collect();
        for (j, field) in self.a.iter().enumerate() {
            for i in 0..self.algebra.num_blocks() {
                let f = self.block_fiber(i);
                for r in 0..f {
                    for c in 0..f {
                        let samples: Vec<C64> = field.iter().map(|m| m.block(i)[(r, c)]).collect();
                        let d = self.grid.differentiate(j, &samples);
                        for (p, v) in d.into_iter().enumerate() {
                            out[p].block_mut(i)[(r, c)] += v;
                        }
                    }
                }
            }
        }
        out
    }

    /// `b − ½ Σ ∂_j a_j`, Hermitian when the operator is formally self-adjoint.
    pub fn b_sym(&self) -> Vec<AMatrix> {
        self.b
            .iter()
            .zip(self.divergence())
            .map(|(b, div)| {
                b.sub(&div.map_blocks(|m| m.scale_real(0.5)))
                    .expect("same algebra")
            })
            .collect()
    }

    fn check_anti_hermitian(&self) -> Result<()> {
        let mut worst: f64 = 0.0;
        for field in &self.a {
            for m in field {
                for blk in m.blocks() {
                    worst = worst.max((blk + &blk.adjoint()).max_abs());
                }
            }
        }
        if worst > tolerances::COEFFICIENT {
            return Err(Error::NotAntiHermitian { deviation: worst });
        }
        Ok(())
    }

    fn check_self_adjoint(&self) -> Result<()> {
        let worst = self
            .b_sym()
            .iter()
            .flat_map(|m| m.blocks().iter().map(|b| b.hermitian_deviation()))
            .fold(0.0, f64::max);
        if worst > tolerances::COEFFICIENT {
            return Err(Error::NotSelfAdjoint { deviation: worst });
        }
        Ok(())
    }

    fn symmetrize(&mut self) {
        let div = self.divergence();
        let b_sym = self.b_sym();
        self.b = b_sym
            .iter()
            .zip(&div)
            .map(|(s, d)| {
                s.map_blocks(|m| m.hermitian_part())
                    .add(&d.map_blocks(|m| m.scale_real(0.5)))
                    .expect("same algebra")
            })
            .collect();
    }

    /// `σ(D)(x_p, ξ) = i Σ_j a_j(x_p) ξ_j` on block `i`.
    pub fn principal_symbol(&self, i: usize, p: usize, xi: &[f64]) -> ComplexMatrix {
        let f = self.block_fiber(i);
        let mut s = ComplexMatrix::zeros(f, f);
        for (j, &x) in xi.iter().enumerate() {
            s.add_scaled(self.a[j][p].block(i), C64::new(0.0, x));
        }
        s
    }

    /// `sym(D) = σ(D) + b` on block `i`.
    pub fn total_symbol(&self, i: usize, p: usize, xi: &[f64]) -> ComplexMatrix {
        &self.principal_symbol(i, p, xi) + self.b[p].block(i)
    }

    fn unit_directions(&self) -> Vec<Vec<f64>> {
        if self.grid.dim() == 1 {
            return vec![vec![1.0], vec![-1.0]];
        }
        (0..DIRECTIONS_2D)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / DIRECTIONS_2D as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()
    }

    /// `Prop(D, x_p) = sup_{‖ξ‖=1} ‖σ(D)(x_p, ξ)‖` over all blocks.
    pub fn propagation_speed(&self, p: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..self.algebra.num_blocks() {
            for xi in self.unit_directions() {
                let s = self.principal_symbol(i, p, &xi);
                sup = sup.max(operator_norm(&s).unwrap_or(f64::INFINITY));
            }
        }
        sup
    }

    /// Smallest singular value of `σ(D)(x, ξ)` over grid points and unit `ξ`,
    /// with the minimizing point and direction.
    pub fn ellipticity_constant(&self) -> (f64, Vec<f64>, Vec<f64>) {
        let mut best = (f64::INFINITY, Vec::new(), Vec::new());
        let dirs = self.unit_directions();
        for p in 0..self.grid.size() {
            for i in 0..self.algebra.num_blocks() {
                for xi in &dirs {
                    let s = self.principal_symbol(i, p, xi).hermitian_part();
                    let m = match hermitian_eig(&s) {
                        Ok(e) => e.eigenvalues.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min),
                        Err(_) => 0.0,
                    };
                    if m < best.0 {
                        best = (m, self.grid.point(p), xi.clone());
                    }
                }
            }
        }
        best
    }

    fn check_elliptic(&self, c0: f64) -> Result<()> {
        let (value, x, xi) = self.ellipticity_constant();
        if value < c0 {
            return Err(Error::NotElliptic { x, xi, value });
        }
        Ok(())
    }

    /// `Σ_j ½(M_{a_j} ∂_j + ∂_j M_{a_j}) + M_{b_sym}` on block `i`.
    pub fn discretize_block(&self, i: usize) -> ComplexMatrix {
        let f = self.block_fiber(i);
        let n = self.grid.size();
        let id = ComplexMatrix::identity(f);
        let pointwise = |vals: &dyn Fn(usize) -> ComplexMatrix| -> ComplexMatrix {
            let mut m = ComplexMatrix::zeros(n * f, n * f);
            for p in 0..n {
                m.set_block(p * f, p * f, &vals(p));
            }
            m
        };
        let b_sym = self.b_sym();
        let mut out = pointwise(&|p| b_sym[p].block(i).clone());
        for j in 0..self.grid.dim() {
            let d = self.grid.derivative(j).kron(&id);
            let ma = pointwise(&|p| self.a[j][p].block(i).clone());
            let sym = &ma.matmul(&d).expect("square") + &d.matmul(&ma).expect("square");
            out.add_scaled(&sym, C64::new(0.5, 0.0));
        }
        out
    }

    /// Discretized operator, one matrix per block of `A`.
    pub fn discretize(&self) -> Vec<ComplexMatrix> {
        (0..self.algebra.num_blocks()).map(|i| self.discretize_block(i)).collect()
    }

    /// Operator with coefficients frozen at grid point `p0`.
    pub fn frozen(&self, p0: usize) -> Self {
        let n = self.grid.size();
        let b0 = self.b_sym()[p0].clone();
        Self {
            grid: self.grid.clone(),
            algebra: self.algebra.clone(),
            k: self.k,
            a: self.a.iter().map(|f| vec![f[p0].clone(); n]).collect(),
            b: vec![b0; n],
        }
    }

    /// `D + M_c` for a Hermitian zeroth-order perturbation `c`.
    pub fn perturbed(&self, c: &[AMatrix]) -> Result<Self> {
        if c.len() != self.grid.size() {
            return Err(Error::Dimension("perturbation sample count".into()));
        }
        let b = self
            .b
            .iter()
            .zip(c)
            .map(|(b, c)| {
                if c.blocks().iter().any(|m| m.hermitian_deviation() > tolerances::COEFFICIENT) {
                    return Err(Error::NotSelfAdjoint {
                        deviation: c.blocks().iter().map(|m| m.hermitian_deviation()).fold(0.0, f64::max),
                    });
                }
                b.add(c)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            b,
            ..self.clone()
        })
    }

    /// Largest coefficient difference `max(‖a_j(x) − a'_j(x)‖, ‖b_sym(x) − b'_sym(x)‖)`
    /// over grid points with `mask[p]`.
    pub fn coefficient_distance(&self, other: &Self, mask: &[bool]) -> f64 {
        let bs = self.b_sym();
        let bo = other.b_sym();
        let mut worst: f64 = 0.0;
        for p in (0..self.grid.size()).filter(|&p| mask[p]) {
            for j in 0..self.grid.dim() {
                worst = worst.max(self.a[j][p].sub(&other.a[j][p]).map(|m| m.max_abs()).unwrap_or(f64::INFINITY));
            }
            worst = worst.max(bs[p].sub(&bo[p]).map(|m| m.max_abs()).unwrap_or(f64::INFINITY));
        }
        worst
    }
}

/// Result of the commutator bound `‖[D, M_φ]‖ ≤ sup_x ‖dφ(x)‖ Prop(D, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl CommutatorBound {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_slack) + tolerances::INEQUALITY_SLACK
    }
}

/// Compares `‖[D, M_φ] Π‖` with `sup_x ‖dφ(x)‖ Prop(D, x)`.
pub fn commutator_bound_check(op: &FirstOrderOp, phi: impl Fn(&[f64]) -> C64) -> Result<CommutatorBound> {
    let grid = op.grid();
    let samples = grid.sample(&phi);
    let ringing = grid.high_band_fraction(&samples);
    if ringing > tolerances::SMOOTHNESS {
        return Err(Error::Precondition(format!(
            "φ carries {ringing:.3e} of its energy outside the resolved band"
        )));
    }
    let grads: Vec<Vec<C64>> = (0..grid.dim()).map(|j| grid.differentiate(j, &samples)).collect();
    let mut rhs: f64 = 0.0;
    for p in 0..grid.size() {
        let g: f64 = grads.iter().map(|d| d[p].norm_sqr()).sum::<f64>().sqrt();
        rhs = rhs.max(g * op.propagation_speed(p));
    }
    let mut lhs: f64 = 0.0;
    for i in 0..op.algebra().num_blocks() {
        let f = op.block_fiber(i);
        let d = op.discretize_block(i);
        let m = grid.multiplication(f, &phi);
        let c = d.commutator(&m)?;
        lhs = lhs.max(operator_norm_map(&ResolvedRestriction::new(grid, f, &c))?);
    }
    Ok(CommutatorBound { lhs, rhs })
}

/// `sup_x ‖(σ(x, ξ) ± i)⁻¹‖` on the shell `‖ξ‖ = r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventShell {
    pub radius: f64,
    pub sup_norm: f64,
    /// `√2 / (1 + c₀ r)`, valid for every Hermitian symbol with ellipticity constant `c₀`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolResolventReport {
    pub ellipticity_constant: f64,
    pub shells: Vec<ResolventShell>,
    /// `sup_{r > 0} r · sup_norm(r)`, at most `1 / c₀`.
    pub asymptotic_constant: f64,
}

impl SymbolResolventReport {
    pub fn holds(&self) -> bool {
        let c0 = self.ellipticity_constant;
        self.shells
            .iter()
            .all(|s| s.sup_norm <= s.bound * (1.0 + 1e-12))
            && self.asymptotic_constant <= (1.0 / c0) * (1.0 + 1e-12)
    }
}

/// Resolvents of the principal symbol on the shells `‖ξ‖ ∈ radii`.
pub fn symbol_resolvent_decay(op: &FirstOrderOp, radii: &[f64]) -> Result<SymbolResolventReport> {
    let (c0, x, xi) = op.ellipticity_constant();
    if !(c0 > 0.0) {
        return Err(Error::NotElliptic { x, xi, value: c0 });
    }
    let dirs = op.unit_directions();
    let mut shells = Vec::with_capacity(radii.len());
    let mut asymptotic: f64 = 0.0;
    for &r in radii {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("shell radius {r}")));
        }
        let mut sup: f64 = 0.0;
        for p in 0..op.grid().size() {
            for i in 0..op.algebra().num_blocks() {
                for d in &dirs {
                    let v: Vec<f64> = d.iter().map(|c| c * r).collect();
                    let s = op.principal_symbol(i, p, &v).hermitian_part();
                    let lam_min = hermitian_eig(&s)?
                        .eigenvalues
                        .iter()
                        .map(|l| l.abs())
                        .fold(f64::INFINITY, f64::min);
                    // ‖(s ± i)⁻¹‖ = 1/√(λ_min² + 1) for Hermitian s.
                    sup = sup.max(1.0 / (lam_min * lam_min + 1.0).sqrt());
                }
            }
        }
        if r > 0.0 {
            asymptotic = asymptotic.max(r * sup);
        }
        shells.push(ResolventShell {
            radius: r,
            sup_norm: sup,
            bound: std::f64::consts::SQRT_2 / (1.0 + c0 * r),
        });
    }
    Ok(SymbolResolventReport {
        ellipticity_constant: c0,
        shells,
        asymptotic_constant: asymptotic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_op(n: usize) -> FirstOrderOp {
        FirstOrderOp::variable_speed(Grid::circle(n).unwrap(), |x| 2.0 + x.sin(), |x| x.cos()).unwrap()
    }

    #[test]
    fn derivative_has_integer_spectrum() {
        let op = FirstOrderOp::constant(Grid::circle(64).unwrap(), &[1.0]).unwrap();
        let d = op.discretize_block(0);
        let vals = crate::linalg::hermitian_eigvals(&d).unwrap();
        for (j, v) in vals.iter().enumerate() {
            assert!((v - (j as f64 - 32.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn variable_speed_operator_is_hermitian() {
        let op = h_op(64);
        assert!(op.discretize_block(0).hermitian_deviation() < 1e-8);
        assert!(op.b_sym().iter().all(|b| b.max_abs() < 1e-10));
    }

    #[test]
    fn rejects_hermitian_leading_coefficient() {
        let r = FirstOrderOp::scalar(
            Grid::circle(16).unwrap(),
            &[&|_| C64::new(1.0, 0.0)],
            &|_| C64::new(0.0, 0.0),
            SelfAdjointness::Require,
        );
        assert!(matches!(r, Err(Error::NotAntiHermitian { .. })));
    }

    #[test]
    fn rejects_missing_correction_unless_symmetrized() {
        let grid = Grid::circle(32).unwrap();
        let a = |x: &[f64]| C64::new(0.0, -(2.0 + x[0].sin()));
        let zero = |_: &[f64]| C64::new(0.0, 0.0);
        assert!(matches!(
            FirstOrderOp::scalar(grid.clone(), &[&a], &zero, SelfAdjointness::Require),
            Err(Error::NotSelfAdjoint { .. })
        ));
        let op = FirstOrderOp::scalar(grid, &[&a], &zero, SelfAdjointness::Symmetrize).unwrap();
        assert!(op.discretize_block(0).hermitian_deviation() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_symbol() {
        let r = FirstOrderOp::scalar(
            Grid::circle(16).unwrap(),
            &[&|x: &[f64]| C64::new(0.0, -x[0].sin())],
            &|x: &[f64]| C64::new(0.0, -0.5 * x[0].cos()),
            SelfAdjointness::Require,
        );
        assert!(matches!(r, Err(Error::NotElliptic { .. })));
    }

    #[test]
    fn commutator_bound_is_sharp_for_derivative() {
        let op = FirstOrderOp::constant(Grid::circle(256).unwrap(), &[1.0]).unwrap();
        let r = commutator_bound_check(&op, |x| C64::new(x[0].sin(), 0.0)).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-3 && (r.rhs - 1.0).abs() < 1e-3);
        let c = commutator_bound_check(&op, |_| C64::new(3.0, 0.0)).unwrap();
        assert!(c.lhs < 1e-12);
    }

    #[test]
    fn commutator_bound_holds_for_variable_speed() {
        let r = commutator_bound_check(&h_op(64), |x| C64::new(x[0].cos(), 0.0)).unwrap();
        assert!(r.holds(tolerances::COMMUTATOR_BOUND), "{r:?}");
    }

    #[test]
    fn symbol_resolvent_decays_like_inverse_radius() {
        let rep = symbol_resolvent_decay(&h_op(32), &[0.0, 10.0, 20.0, 40.0]).unwrap();
        assert!(rep.holds());
        assert!((rep.shells[0].sup_norm - 1.0).abs() < 1e-12);
        let ratio = rep.shells[2].sup_norm / rep.shells[3].sup_norm;
        assert!((ratio - 2.0).abs() < 0.2);
        assert!((rep.asymptotic_constant - 1.0).abs() < 0.01);
    }

    #[test]
    fn frozen_constant_operator_is_unchanged() {
        let op = FirstOrderOp::constant(Grid::circle(16).unwrap(), &[1.0]).unwrap();
        let f = op.frozen(5);
        assert!((&f.discretize_block(0) - &op.discretize_block(0)).max_abs() < 1e-14);
    }
}
