//! The Bott oscillator `B_t = Σ_j t⁻¹ (d_j − d_j*) ∂_j + x_j (d_j + d_j*)` on a
//! periodized box, its spectrum, kernel, index and the associated homotopies.
//!
//! `B_t` is stored through its odd←even block `A`; the full operator is
//! `[[0, A*], [A, 0]]` after reordering the fiber by parity.

use num_complex::Complex64 as C64;

use crate::clifford::CliffordRep;
use crate::elliptic::{ChiralOp, IndexReport};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{hermitian_eig, hermitian_eigvals, lu, operator_norm, ComplexMatrix};
use crate::quantize::SHELL_RADIUS;
use crate::resolution::Resolution;
use crate::tolerances;

/// Largest grid accepted in two dimensions.
pub const MAX_NPTS_2D: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorConfig {
    pub n: usize,
    pub t: f64,
    pub npts: usize,
    /// Half width `L` of the box `[−L, L)ⁿ`.
    pub half_width: f64,
    /// Replaces `x_1` by `−x_1` in the potential, reversing orientation.
    pub reversed: bool,
}

impl OscillatorConfig {
    pub fn new(n: usize, t: f64, npts: usize, half_width: f64) -> Result<Self> {
        let c = Self {
            n,
            t,
            npts,
            half_width,
            reversed: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n == 1 || self.n == 2) {
            return Err(Error::InvalidParameter(format!("dimension {} outside 1..=2", self.n)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidParameter(format!("t = {} must be positive", self.t)));
        }
        if self.npts < 16 || !self.npts.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N = {} must be a power of two ≥ 16",
                self.npts
            )));
        }
        if self.n == 2 && self.npts > MAX_NPTS_2D {
            return Err(Error::InvalidGrid(format!(
                "N = {} exceeds {MAX_NPTS_2D} in two dimensions",
                self.npts
            )));
        }
        let min_l = 6.0 / self.t.sqrt();
        if self.half_width < min_l {
            return Err(Error::InvalidGrid(format!(
                "L = {} below 6/√t = {min_l:.4}",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::periodized_line(self.n, self.npts, self.half_width)
    }

    /// `√(2/t)`, the smallest nonzero `|λ|`.
    pub fn first_level(&self) -> f64 {
        (2.0 / self.t).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct OscillatorOperator {
    config: OscillatorConfig,
    clifford: CliffordRep,
    /// Fiber positions of even and odd forms.
    even: Vec<usize>,
    odd: Vec<usize>,
    chiral: ChiralOp,
}

/// `Σ_j c_j ⊗ X_j` restricted to fiber rows `rows` and columns `cols`.
fn sector_block(
    t: f64,
    signs: &[f64],
    derivs: &[ComplexMatrix],
    coords: &[Vec<f64>],
    rep: &CliffordRep,
    rows: &[usize],
    cols: &[usize],
) -> ComplexMatrix {
    let restrict = |m: &ComplexMatrix| {
        ComplexMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    };
    let size = derivs[0].rows();
    let mut out = ComplexMatrix::zeros(size * rows.len(), size * cols.len());
    for (j, d) in derivs.iter().enumerate() {
        let g = restrict(&rep.imaginary_generator(j));
        let r = restrict(&rep.real_generator(j));
        out.add_scaled(&d.kron(&g), C64::new(1.0 / t, 0.0));
        let x = ComplexMatrix::from_real_diagonal(&coords[j]);
        out.add_scaled(&x.kron(&r), C64::new(signs[j], 0.0));
    }
    out
}

/// Builds `B_t` and checks Hermiticity and oddness.
pub fn build_bott(config: &OscillatorConfig) -> Result<OscillatorOperator> {
    config.validate()?;
    let rep = CliffordRep::new(config.n)?;
    let grid = config.grid()?;
    let line = Grid::periodized_line(1, config.npts, config.half_width)?;
    let d1 = line.derivative(0);
    let id = ComplexMatrix::identity(config.npts);
    let derivs: Vec<ComplexMatrix> = match config.n {
        1 => vec![d1],
        _ => vec![d1.kron(&id), id.kron(&d1)],
    };
    let coords: Vec<Vec<f64>> = (0..config.n)
        .map(|j| (0..grid.size()).map(|p| grid.point(p)[j]).collect())
        .collect();
    let even: Vec<usize> = (0..rep.dim()).filter(|&i| rep.is_even(i)).collect();
    let odd: Vec<usize> = (0..rep.dim()).filter(|&i| !rep.is_even(i)).collect();
    let mut signs = vec![1.0; config.n];
    if config.reversed {
        signs[0] = -1.0;
    }
    let block = |r: &[usize], c: &[usize]| sector_block(config.t, &signs, &derivs, &coords, &rep, r, c);
    let a = block(&odd, &even);
    let a_up = block(&even, &odd);
    let dev = (&a_up - &a.adjoint()).max_abs();
    if dev > tolerances::HERMITIAN {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let diag = block(&even, &even).max_abs().max(block(&odd, &odd).max_abs());
    if diag > tolerances::HERMITIAN {
        return Err(Error::Precondition(format!(
            "operator fails to anticommute with the grading ({diag:.3e})"
        )));
    }
    let chiral = ChiralOp::new(grid, even.len(), a, Resolution::Interior)?;
    Ok(OscillatorOperator {
        config: *config,
        clifford: rep,
        even,
        odd,
        chiral,
    })
}

impl OscillatorOperator {
    pub fn config(&self) -> &OscillatorConfig {
        &self.config
    }

    pub fn clifford(&self) -> &CliffordRep {
        &self.clifford
    }

    pub fn chiral(&self) -> &ChiralOp {
        &self.chiral
    }

    /// Full dimension `Nⁿ 2ⁿ`.
    pub fn dim(&self) -> usize {
        2 * self.chiral.sector_dim()
    }

    /// Full-space index of even-sector index `i`.
    pub fn even_position(&self, i: usize) -> usize {
        let r = self.even.len();
        (i / r) * self.clifford.dim() + self.even[i % r]
    }

    /// Full-space index of odd-sector index `i`.
    pub fn odd_position(&self, i: usize) -> usize {
        let r = self.odd.len();
        (i / r) * self.clifford.dim() + self.odd[i % r]
    }

    /// `B_t` on `grid ⊗ Λ*ℂⁿ`, point-major.
    pub fn full_matrix(&self) -> ComplexMatrix {
        let a = self.chiral.d_plus();
        let n = self.dim();
        let mut b = ComplexMatrix::zeros(n, n);
        for i in 0..a.rows() {
            let oi = self.odd_position(i);
            for j in 0..a.cols() {
                let v = a[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    let ej = self.even_position(j);
                    b[(oi, ej)] = v;
                    b[(ej, oi)] = v.conj();
                }
            }
        }
        b
    }

    /// `1 ⊗ ε`, point-major.
    pub fn grading_diagonal(&self) -> Vec<f64> {
        let g = self.clifford.grading();
        (0..self.dim())
            .map(|i| g[(i % self.clifford.dim(), i % self.clifford.dim())].re)
            .collect()
    }

    /// Embeds an even-sector vector into the full space.
    pub fn embed_even(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (i, z) in v.iter().enumerate() {
            out[self.even_position(i)] = *z;
        }
        out
    }

    /// Embeds an odd-sector vector into the full space.
    pub fn embed_odd(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (i, z) in v.iter().enumerate() {
            out[self.odd_position(i)] = *z;
        }
        out
    }

    /// Total symbol read off the discrete operator: `B_t` applied to the plane
    /// wave `e^{iξ·x} ⊗ e_a` at grid point `p`, for a grid frequency `ξ = ξ_k`.
    pub fn total_symbol(&self, p: usize, k: usize) -> ComplexMatrix {
        let grid = self.chiral.grid();
        let xi = grid.frequency(k);
        let size = grid.size();
        let b = self.full_matrix();
        let f = self.clifford.dim();
        let phase = |q: usize| {
            let x = grid.point(q);
            C64::from_polar(1.0, x.iter().zip(&xi).map(|(a, b)| a * b).sum())
        };
        let mut s = ComplexMatrix::zeros(f, f);
        for a in 0..f {
            for r in 0..f {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..size {
                    acc += b[(p * f + r, q * f + a)] * phase(q);
                }
                s[(r, a)] = acc / phase(p);
            }
        }
        s
    }
}

/// The `count` smallest-magnitude eigenvalues of `B_t`, sorted by `|λ|` then `λ`.
pub fn bott_spectrum(op: &OscillatorOperator, count: usize) -> Result<Vec<f64>> {
    if count > op.dim() {
        return Err(Error::InvalidParameter(format!(
            "{count} eigenvalues requested of a {}-dimensional operator",
            op.dim()
        )));
    }
    let a = op.chiral.d_plus();
    let gram = a.adjoint_matmul(a)?.hermitian_part();
    let mut vals: Vec<f64> = hermitian_eigvals(&gram)?
        .into_iter()
        .flat_map(|m| {
            let s = m.max(0.0).sqrt();
            [-s, s]
        })
        .collect();
    vals.sort_by(|x, y| x.abs().total_cmp(&y.abs()).then(x.total_cmp(y)));
    vals.truncate(count);
    Ok(vals)
}

/// Measured against `√(2k/t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub k: usize,
    pub measured: f64,
    pub exact: f64,
    pub abs_err: f64,
}

/// First `count` positive levels of a one-dimensional oscillator.
pub fn positive_levels(op: &OscillatorOperator, count: usize) -> Result<Vec<LevelRow>> {
    if op.config.n != 1 {
        return Err(Error::InvalidParameter(
            "level comparison needs the one-dimensional oscillator".into(),
        ));
    }
    let window = 0.5 * op.config.first_level();
    let spec = bott_spectrum(op, op.dim())?;
    let positive: Vec<f64> = spec.into_iter().filter(|&l| l >= window).take(count).collect();
    if positive.len() < count {
        return Err(Error::InvalidParameter(format!("only {} positive levels", positive.len())));
    }
    Ok(positive
        .into_iter()
        .enumerate()
        .map(|(j, measured)| {
            let exact = (2.0 * (j + 1) as f64 / op.config.t).sqrt();
            LevelRow {
                k: j + 1,
                measured,
                exact,
                abs_err: (measured - exact).abs(),
            }
        })
        .collect())
}

/// Default near-zero window: a twentieth of the first level, leaving the
/// required factor between window and gap.
pub fn default_gap_tol(config: &OscillatorConfig) -> f64 {
    0.05 * config.first_level()
}

/// `dim ker B⁺ − dim ker B⁻` on resolved modes.
pub fn bott_index(op: &OscillatorOperator, gap_tol: f64) -> Result<(i64, IndexReport)> {
    let report = op.chiral.index_report(gap_tol)?;
    Ok((report.index(), report))
}

/// Shape of the resolved kernel vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    /// Eigenvalues of `B_t` in `(−½√(2/t), ½√(2/t))`.
    pub raw_in_window: usize,
    pub resolved: usize,
    pub artifacts: usize,
    /// Weight of the resolved kernel vector on the 0-form fiber component.
    pub zero_form_weight: f64,
    /// Fitted `γ` in `|ψ(x)| ∝ e^{−γ‖x‖²}`.
    pub gamma: f64,
    /// Max deviation from the normalized fitted Gaussian.
    pub gaussian_residual: f64,
}

pub fn kernel_report(op: &OscillatorOperator) -> Result<KernelReport> {
    let window = 0.5 * op.config.first_level();
    let raw_in_window = bott_spectrum(op, op.dim())?
        .into_iter()
        .filter(|l| l.abs() < window)
        .count();
    let (_, report) = bott_index(op, default_gap_tol(&op.config))?;
    let resolved = report.even.num_resolved() + report.odd.num_resolved();
    let artifacts = report.even.num_artifacts() + report.odd.num_artifacts();
    let (basis, sector_even) = if report.even.num_resolved() > 0 {
        (&report.even.resolved, true)
    } else {
        (&report.odd.resolved, false)
    };
    if basis.cols() == 0 {
        return Err(Error::Precondition("no resolved kernel vector".into()));
    }
    let psi = basis.column(0);
    let r = if sector_even { op.even.len() } else { op.odd.len() };
    let zero_form = if sector_even { Some(0) } else { None };
    let zero_form_weight: f64 = match zero_form {
        Some(a) => psi.iter().skip(a).step_by(r).map(|z| z.norm_sqr()).sum(),
        None => 0.0,
    };
    let grid = op.chiral.grid();
    let amp: Vec<f64> = (0..grid.size())
        .map(|p| (0..r).map(|a| psi[p * r + a].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let peak = amp.iter().cloned().fold(0.0, f64::max);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (p, &w) in amp.iter().enumerate() {
        if grid.is_interior(p) && w > 1e-6 * peak {
            xs.push(grid.point(p).iter().map(|c| c * c).sum::<f64>());
            ys.push(w.ln());
        }
    }
    let gamma = -linear_slope(&xs, &ys);
    let gauss: Vec<f64> = (0..grid.size())
        .map(|p| (-gamma * grid.point(p).iter().map(|c| c * c).sum::<f64>()).exp())
        .collect();
    let gnorm = gauss.iter().map(|g| g * g).sum::<f64>().sqrt();
    let gaussian_residual = amp
        .iter()
        .zip(&gauss)
        .map(|(a, g)| (a - g / gnorm).abs())
        .fold(0.0, f64::max);
    Ok(KernelReport {
        raw_in_window,
        resolved,
        artifacts,
        zero_form_weight,
        gamma,
        gaussian_residual,
    })
}

fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `(x, v, ξ) ↦ f(εx + c(v, ξ))` at a point base.
pub struct ThomMap<'a> {
    rep: &'a CliffordRep,
    f: &'a dyn Fn(f64) -> C64,
}

/// Fails unless `f` vanishes at the edge of the sampled range.
pub fn thom_point_map<'a>(
    rep: &'a CliffordRep,
    f: &'a dyn Fn(f64) -> C64,
    radius: f64,
) -> Result<ThomMap<'a>> {
    let r = radius.max(SHELL_RADIUS);
    let edge = f(r).norm().max(f(-r).norm());
    if edge > tolerances::PHASE_DECAY {
        return Err(Error::PhaseDecay {
            sup: edge,
            eta: tolerances::PHASE_DECAY,
        });
    }
    Ok(ThomMap { rep, f })
}

impl ThomMap<'_> {
    pub fn eval(&self, x: f64, v: &[f64], xi: &[f64]) -> Result<ComplexMatrix> {
        let mut m = self.rep.clifford_mult(v, xi)?;
        m.add_scaled(self.rep.grading(), C64::new(x, 0.0));
        hermitian_eig(&m.hermitian_part())?.apply_function(self.f)
    }
}

/// Compactly supported bump `exp(1 − 1/(1 − (y/a)²))` on `(−a, a)`, with `f(0) = 1`.
pub fn bump(a: f64) -> impl Fn(f64) -> C64 + Send + Sync + Clone {
    move |y: f64| {
        let u = y / a;
        if u.abs() >= 1.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new((1.0 - 1.0 / (1.0 - u * u)).exp(), 0.0)
        }
    }
}

/// `sup_x ‖Q (f(εx + s⁻¹B_t) − f(x) P_t) Q‖` for each `s`, where `P_t` projects
/// onto the resolved kernel and `Q` removes the periodization artifacts.
pub fn homotopy_b20(
    op: &OscillatorOperator,
    f: &dyn Fn(f64) -> C64,
    support: f64,
    x_samples: &[f64],
    s_list: &[f64],
) -> Result<Vec<f64>> {
    if !(support > 0.0 && support.is_finite()) {
        return Err(Error::InvalidParameter("support half width must be positive".into()));
    }
    let probe = f(support * 1.0001).norm().max(f(-support * 1.0001).norm());
    if probe != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "f is nonzero ({probe:.3e}) outside [−{support}, {support}]"
        )));
    }
    if s_list.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter("s values must be positive".into()));
    }
    let (_, report) = bott_index(op, default_gap_tol(&op.config))?;
    let n = op.dim();
    let embed = |m: &ComplexMatrix, even: bool| -> Vec<Vec<C64>> {
        (0..m.cols())
            .map(|j| {
                let c = m.column(j);
                if even {
                    op.embed_even(&c)
                } else {
                    op.embed_odd(&c)
                }
            })
            .collect()
    };
    let mut kernel = embed(&report.even.resolved, true);
    kernel.extend(embed(&report.odd.resolved, false));
    let mut artifacts = embed(&report.even.artifacts, true);
    artifacts.extend(embed(&report.odd.artifacts, false));
    let kernel = ComplexMatrix::from_columns(n, &kernel);
    let w = ComplexMatrix::from_columns(n, &artifacts);
    let p = kernel.matmul(&kernel.adjoint())?;
    let mut q = ComplexMatrix::identity(n);
    q.add_scaled(&w.matmul(&w.adjoint())?, C64::new(-1.0, 0.0));
    let b = op.full_matrix();
    let eps = op.grading_diagonal();
    s_list
        .iter()
        .map(|&s| {
            let mut sup: f64 = 0.0;
            for &x in x_samples {
                let mut m = b.scale_real(1.0 / s);
                for (i, e) in eps.iter().enumerate() {
                    m[(i, i)] += C64::new(e * x, 0.0);
                }
                let mut diff = hermitian_eig(&m)?.apply_function(f)?;
                diff.add_scaled(&p, -f(x));
                let c = q.matmul(&diff)?.matmul(&q)?;
                sup = sup.max(operator_norm(&c)?);
            }
            Ok(sup)
        })
        .collect()
}

/// `‖v ↦ (2t/π)^{n/4} e^{−t‖v‖²}‖_{L²}` by the trapezoid rule on `[−R, R]ⁿ`
/// with `points` nodes per axis; `prefactor = false` drops the normalization.
pub fn alpha_isometry(t: f64, n: usize, half_width: f64, points: usize, prefactor: bool) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || n == 0 || points < 2 {
        return Err(Error::InvalidParameter("alpha isometry parameters".into()));
    }
    let tail = (-2.0 * t * half_width * half_width).exp();
    if tail > 1e-16 {
        return Err(Error::InvalidParameter(format!(
            "quadrature box R = {half_width} leaves a Gaussian tail {tail:.3e}"
        )));
    }
    let h = 2.0 * half_width / (points - 1) as f64;
    let one_d: f64 = (0..points)
        .map(|j| {
            let v = -half_width + j as f64 * h;
            let w = if j == 0 || j == points - 1 { 0.5 } else { 1.0 };
            w * h * (-2.0 * t * v * v).exp()
        })
        .sum();
    let c = if prefactor {
        (2.0 * t / std::f64::consts::PI).powf(n as f64 / 2.0)
    } else {
        1.0
    };
    Ok((c * one_d.powi(n as i32)).sqrt())
}

/// `f(B_t) = (1 + B_t²)⁻¹` by sector: `(1 + A*A)⁻¹ ⊕ (1 + AA*)⁻¹`.
fn resolvent_square(op: &OscillatorOperator) -> Result<ComplexMatrix> {
    let a = op.chiral.d_plus();
    let n = a.rows();
    let mut even = a.adjoint_matmul(a)?;
    let mut odd = a.matmul(&a.adjoint())?;
    for i in 0..n {
        even[(i, i)] += C64::new(1.0, 0.0);
        odd[(i, i)] += C64::new(1.0, 0.0);
    }
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    out.set_block(0, 0, &lu::inverse(&even)?);
    out.set_block(n, n, &lu::inverse(&odd)?);
    Ok(out)
}

/// `‖f(B_t) − f(B_s)‖ / |t − s|` along a mesh, with `f = (1 + x²)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub t: Vec<f64>,
    /// Differences between consecutive mesh points.
    pub differences: Vec<f64>,
    /// Empirical Lipschitz constant over all mesh pairs.
    pub lipschitz: f64,
}

pub fn continuity_in_t(base: &OscillatorConfig, t_mesh: &[f64]) -> Result<ContinuityReport> {
    if t_mesh.len() < 2 {
        return Err(Error::InvalidParameter("continuity needs two mesh points".into()));
    }
    let mats = t_mesh
        .iter()
        .map(|&t| {
            let cfg = OscillatorConfig { t, ..*base };
            resolvent_square(&build_bott(&cfg)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut differences = Vec::new();
    let mut lipschitz: f64 = 0.0;
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            let d = operator_norm(&(&mats[i] - &mats[j]))?;
            if j == i + 1 {
                differences.push(d);
            }
            lipschitz = lipschitz.max(d / (t_mesh[i] - t_mesh[j]).abs());
        }
    }
    Ok(ContinuityReport {
        t: t_mesh.to_vec(),
        differences,
        lipschitz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(t: f64) -> OscillatorOperator {
        build_bott(&OscillatorConfig::new(1, t, 64, 8.0).unwrap()).unwrap()
    }

    #[test]
    fn config_invariants() {
        assert!(OscillatorConfig::new(1, 1.0, 12, 10.0).is_err());
        assert!(OscillatorConfig::new(1, 1.0, 24, 10.0).is_err());
        assert!(OscillatorConfig::new(1, 1.0, 64, 5.0).is_err());
        assert!(OscillatorConfig::new(2, 1.0, 64, 6.0).is_err());
        assert!(OscillatorConfig::new(3, 1.0, 16, 6.0).is_err());
        assert!(OscillatorConfig::new(1, 4.0, 64, 3.0).is_ok());
    }

    #[test]
    fn one_dimensional_blocks_match_expansion() {
        let op = small(2.0);
        let grid = op.chiral().grid().clone();
        let d = grid.derivative(0);
        let x = grid.multiplication(1, |x| C64::new(x[0], 0.0));
        let mut expected = d.scale_real(0.5);
        expected.add_scaled(&x, C64::new(1.0, 0.0));
        assert!((op.chiral().d_plus() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn full_operator_is_odd_and_hermitian() {
        let op = build_bott(&OscillatorConfig::new(2, 1.0, 16, 6.0).unwrap()).unwrap();
        let b = op.full_matrix();
        assert!(b.hermitian_deviation() < 1e-12);
        let eps: Vec<C64> = op.grading_diagonal().iter().map(|&e| C64::new(e, 0.0)).collect();
        let anti = &b.scale_rows(&eps) + &b.scale_cols(&eps);
        assert!(anti.max_abs() < 1e-12);
    }

    #[test]
    fn spectrum_is_symmetric() {
        let op = small(1.0);
        let vals = hermitian_eigvals(&op.full_matrix()).unwrap();
        let n = vals.len();
        for i in 0..n {
            assert!((vals[i] + vals[n - 1 - i]).abs() < 1e-8);
        }
        let via_blocks = bott_spectrum(&op, 6).unwrap();
        assert!((via_blocks[2].abs() - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn total_symbol_is_clifford_multiplication() {
        let op = small(2.0);
        let grid = op.chiral().grid().clone();
        let p = 40;
        let k = 3;
        let v = grid.point(p);
        let xi: Vec<f64> = grid.frequency(k).iter().map(|z| z / 2.0).collect();
        let expected = op.clifford().clifford_mult(&v, &xi).unwrap();
        assert!((&op.total_symbol(p, k) - &expected).max_abs() < 1e-10);
    }

    #[test]
    fn gaussian_is_annihilated() {
        let op = small(1.0);
        let grid = op.chiral().grid();
        let g: Vec<C64> = (0..grid.size())
            .map(|p| C64::new((-0.5 * grid.point(p)[0].powi(2)).exp(), 0.0))
            .collect();
        let full = op.embed_even(&g);
        let bg = op.full_matrix().matvec(&full);
        let ip: C64 = full.iter().zip(&bg).map(|(a, b)| a.conj() * b).sum();
        assert!(ip.norm() < 1e-12);
        assert!(crate::linalg::norm2(&bg) < 1e-8);
    }

    #[test]
    fn index_is_one_and_flips_with_potential() {
        let cfg = OscillatorConfig::new(1, 1.0, 64, 8.0).unwrap();
        let op = build_bott(&cfg).unwrap();
        assert_eq!(bott_index(&op, default_gap_tol(&cfg)).unwrap().0, 1);
        let rev = build_bott(&cfg.reversed()).unwrap();
        assert_eq!(bott_index(&rev, default_gap_tol(&cfg)).unwrap().0, -1);
    }

    #[test]
    fn kernel_is_a_gaussian_zero_form() {
        let rep = kernel_report(&small(1.0)).unwrap();
        assert_eq!(rep.resolved, 1);
        assert_eq!(rep.raw_in_window, 2);
        assert!(rep.zero_form_weight > 1.0 - 1e-8);
        assert!((rep.gamma - 0.5).abs() < 1e-6);
    }

    #[test]
    fn thom_map_values() {
        let rep = CliffordRep::new(2).unwrap();
        let f = |y: f64| C64::new(1.0 / (1.0 + y * y), 0.0);
        let m = thom_point_map(&rep, &f, 10.0).unwrap();
        let at0 = m.eval(0.0, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((&at0 - &ComplexMatrix::identity(4)).max_abs() < 1e-14);
        let mut h = rep.clifford_mult(&[0.3, -0.4], &[1.2, 0.5]).unwrap();
        h.add_scaled(rep.grading(), C64::new(0.7, 0.0));
        let r = (0.49f64 + 0.09 + 0.16 + 1.44 + 0.25).sqrt();
        for v in hermitian_eigvals(&h).unwrap() {
            assert!((v.abs() - r).abs() < 1e-12);
        }
        let one = |_: f64| C64::new(1.0, 0.0);
        assert!(thom_point_map(&rep, &one, 10.0).is_err());
    }

    #[test]
    fn alpha_isometry_normalization() {
        for (t, n) in [(1.0, 1), (4.0, 2), (0.5, 2)] {
            let r = 8.0 / f64::sqrt(t);
            assert!((alpha_isometry(t, n, r, 801, true).unwrap() - 1.0).abs() < 1e-8);
        }
        let bare = alpha_isometry(1.0, 1, 8.0, 801, false).unwrap();
        let expected = (std::f64::consts::PI / 2.0).powf(0.25);
        assert!((bare - expected).abs() < 1e-8);
        assert!(alpha_isometry(1.0, 1, 1.0, 101, true).is_err());
    }

    #[test]
    fn homotopy_vanishes_for_narrow_support() {
        let op = build_bott(&OscillatorConfig::new(1, 1.0, 64, 8.0).unwrap()).unwrap();
        let f = bump(1.0);
        let xs = [-0.9, -0.3, 0.0, 0.5];
        let vals = homotopy_b20(&op, &f, 1.0, &xs, &[1.0, 0.5]).unwrap();
        assert!(vals.iter().all(|&v| v < 1e-8), "{vals:?}");
        let wide = bump(10.0);
        let v = homotopy_b20(&op, &wide, 10.0, &[0.0], &[1.0]).unwrap();
        assert!(v[0] > 0.5);
    }
}
