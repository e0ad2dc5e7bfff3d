//! Numerical tolerances and acceptance thresholds.
//!
//! Every threshold used by a check lives here. [`Tolerances`] carries the same
//! values as a keyed table so a caller can override individual entries.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Hermiticity check on assembled operators, relative to the max entry.
pub const HERMITIAN: f64 = 1e-10;
/// Eigendecomposition reconstruction `‖VΛV* − S‖ / max(1, ‖S‖)`.
pub const RECONSTRUCTION: f64 = 1e-10;
/// Orthonormality of eigenvectors.
pub const ORTHONORMALITY: f64 = 1e-10;
/// DFT round trip.
pub const DFT_ROUNDTRIP: f64 = 1e-12;
/// Relative accuracy of iterative operator norms.
pub const NORM_REL: f64 = 1e-10;
/// Spectral band for projection checks: eigenvalues must lie within this of {0, 1}.
pub const PROJECTION_BAND: f64 = 1e-8;
/// Eigenvalues of a near-projection above this count toward its rank.
pub const RANK_CUT: f64 = 0.5;
/// Clifford relations.
pub const CLIFFORD: f64 = 1e-12;
/// Oscillator eigenvalues against `√(2k/t)`.
pub const BOTT_EIGENVALUE: f64 = 1e-6;
/// Weight of the oscillator kernel vector in the 0-form sector.
pub const KERNEL_ZERO_FORM: f64 = 1e-8;
/// Gaussian normalization of the Bott point map.
pub const ALPHA_ISOMETRY: f64 = 1e-8;
/// Homotopy limit for functions supported in the first oscillator gap.
pub const HOMOTOPY_LIMIT: f64 = 1e-8;
/// Lower bound for the nontrivial homotopy comparison.
pub const HOMOTOPY_NONTRIVIAL: f64 = 0.5;
/// Accepted range of the commutator log-log slope.
pub const SLOPE_MIN: f64 = -1.15;
pub const SLOPE_MAX: f64 = -0.85;
/// Slack on exact operator inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-8;
/// Asymptotic threshold on quantization defects at the largest sampled t.
pub const DEFECT: f64 = 0.05;
/// Constant-coefficient quantization is exact up to this.
pub const CONSTANT_COEFFICIENT: f64 = 1e-8;
/// Module property `Φ_t(ρF) = M_ρ Φ_t(F)`.
pub const MODULE_PROPERTY: f64 = 1e-12;
/// Lemma-5.5 type convergence threshold.
pub const CONVERGENCE: f64 = 0.1;
/// Frozen-coefficient comparison threshold.
pub const FREEZE: f64 = 0.1;
/// Multiplier applied to `gap_tol` for the spectral gap requirement.
pub const GAP_FACTOR: f64 = 10.0;
/// Resolution-weight window treated as ambiguous.
pub const AMBIGUITY_LOW: f64 = 0.25;
pub const AMBIGUITY_HIGH: f64 = 0.75;
/// Decay threshold for phase functions on the boundary shell.
pub const PHASE_DECAY: f64 = 1e-4;
/// Anti-Hermiticity and formal self-adjointness of coefficients.
pub const COEFFICIENT: f64 = 1e-8;
/// Ellipticity constant below which a symbol is rejected.
pub const ELLIPTIC_MIN: f64 = 1e-6;
/// High-band energy fraction above which a test function is rejected as under-resolved.
pub const SMOOTHNESS: f64 = 1e-10;
/// Relative slack on the commutator bound `‖[D, M_φ]‖ ≤ sup ‖dφ‖ Prop(D)`.
pub const COMMUTATOR_BOUND: f64 = 1e-3;
/// Partition of unity `Σ ρ² = 1`.
pub const PARTITION: f64 = 1e-10;
/// Unitarity of `U_t` and the involution `(εU_t)² = 1`.
pub const CAYLEY: f64 = 1e-10;

/// Keyed tolerance table with overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    values: BTreeMap<&'static str, f64>,
}

const DEFAULTS: &[(&str, f64)] = &[
    ("hermitian", HERMITIAN),
    ("reconstruction", RECONSTRUCTION),
    ("orthonormality", ORTHONORMALITY),
    ("dft_roundtrip", DFT_ROUNDTRIP),
    ("norm_rel", NORM_REL),
    ("projection_band", PROJECTION_BAND),
    ("clifford", CLIFFORD),
    ("bott_eigenvalue", BOTT_EIGENVALUE),
    ("kernel_zero_form", KERNEL_ZERO_FORM),
    ("alpha_isometry", ALPHA_ISOMETRY),
    ("homotopy_limit", HOMOTOPY_LIMIT),
    ("homotopy_nontrivial", HOMOTOPY_NONTRIVIAL),
    ("slope_min", SLOPE_MIN),
    ("slope_max", SLOPE_MAX),
    ("inequality_slack", INEQUALITY_SLACK),
    ("defect", DEFECT),
    ("constant_coefficient", CONSTANT_COEFFICIENT),
    ("module_property", MODULE_PROPERTY),
    ("convergence", CONVERGENCE),
    ("freeze", FREEZE),
    ("gap_factor", GAP_FACTOR),
    ("phase_decay", PHASE_DECAY),
    ("coefficient", COEFFICIENT),
    ("commutator_bound", COMMUTATOR_BOUND),
    ("partition", PARTITION),
    ("cayley", CAYLEY),
    ("t_max", 64.0),
];

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            values: DEFAULTS.iter().copied().collect(),
        }
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    /// Overrides one entry; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match self.values.get_mut(key) {
            Some(v) if value.is_finite() => {
                *v = value;
                Ok(())
            }
            Some(_) => Err(Error::InvalidParameter(format!("tolerance {key} must be finite"))),
            None => Err(Error::InvalidParameter(format!("unknown tolerance key {key}"))),
        }
    }

    /// Parses `KEY=VAL`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, val) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected KEY=VAL, got {spec}")))?;
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("tolerance {key}: not a number")))?;
        self.set(key.trim(), value)
    }

    pub fn keys(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.values.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_roundtrip() {
        let mut tol = Tolerances::default();
        tol.apply_override("defect=0.1").unwrap();
        assert_eq!(tol.get("defect"), 0.1);
        assert!(tol.apply_override("nope=1").is_err());
        assert!(tol.apply_override("defect").is_err());
    }
}
