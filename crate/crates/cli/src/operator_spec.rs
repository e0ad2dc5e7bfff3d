//! JSON operator definitions.

use indexlab::cstar::{AMatrix, Algebra};
use indexlab::elliptic::{FirstOrderOp, SelfAdjointness};
use indexlab::grid::{Grid, Topology};
use indexlab::tolerances;
use indexlab::C64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "one")]
    pub n: usize,
    #[serde(rename = "N")]
    pub npts: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default = "circle")]
    pub topology: String,
}

fn one() -> usize {
    1
}

fn circle() -> String {
    "circle".into()
}

impl GridSpec {
    pub fn circle(npts: usize) -> Self {
        Self {
            n: 1,
            npts,
            half_width: None,
            topology: circle(),
        }
    }

    pub fn build(&self) -> CliResult<Grid> {
        let topo = Topology::parse(&self.topology).map_err(|e| CliError::config(e.to_string()))?;
        let grid = match topo {
            Topology::PeriodizedLine => {
                let l = self
                    .half_width
                    .ok_or_else(|| CliError::config("a periodized line needs L"))?;
                Grid::periodized_line(self.n, self.npts, l)
            }
            Topology::Circle | Topology::Torus => {
                if self.half_width.is_some() {
                    return Err(CliError::config("L is fixed to π on circles and tori"));
                }
                Grid::new(topo, self.n, self.npts, std::f64::consts::PI)
            }
        };
        grid.map_err(|e| CliError::config(e.to_string()))
    }
}

/// Named preset or inline samples (scalar algebra, one sample per grid point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Preset(String),
    Inline(InlineCoefficients),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineCoefficients {
    /// `a[j][p] = [re, im]`.
    pub a: Vec<Vec<[f64; 2]>>,
    pub b: Vec<[f64; 2]>,
    #[serde(default)]
    pub symmetrize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub grid: GridSpec,
    #[serde(default = "scalar_algebra")]
    pub algebra: Vec<usize>,
    #[serde(default = "one")]
    pub k: usize,
    pub coefficients: CoefficientSpec,
}

fn scalar_algebra() -> Vec<usize> {
    vec![1]
}

pub const PRESETS: [&str; 2] = ["derivative", "variable-speed"];

impl OperatorSpec {
    pub fn preset(name: &str, npts: usize) -> Self {
        Self {
            grid: GridSpec::circle(npts),
            algebra: scalar_algebra(),
            k: 1,
            coefficients: CoefficientSpec::Preset(name.into()),
        }
    }

    pub fn build(&self) -> CliResult<FirstOrderOp> {
        let grid = self.grid.build()?;
        let alg = Algebra::new(self.algebra.clone()).map_err(|e| CliError::config(e.to_string()))?;
        let wrap = |e: indexlab::Error| CliError::config(format!("operator: {e}"));
        let scalar_field = |f: &dyn Fn(&[f64]) -> C64| -> Vec<AMatrix> {
            (0..grid.size())
                .map(|p| {
                    let v = f(&grid.point(p));
                    AMatrix::identity(&alg, self.k).map_blocks(|m| m.scale(v))
                })
                .collect()
        };
        let (a, b, mode) = match &self.coefficients {
            CoefficientSpec::Preset(name) => match name.as_str() {
                "derivative" => {
                    let a = (0..grid.dim())
                        .map(|_| scalar_field(&|_| C64::new(0.0, -1.0)))
                        .collect();
                    (a, scalar_field(&|_| C64::new(0.0, 0.0)), SelfAdjointness::Require)
                }
                "variable-speed" => {
                    if grid.dim() != 1 {
                        return Err(CliError::config("variable-speed is one-dimensional"));
                    }
                    let a = vec![scalar_field(&|x| C64::new(0.0, -(2.0 + x[0].sin())))];
                    let b = scalar_field(&|x| C64::new(0.0, -0.5 * x[0].cos()));
                    (a, b, SelfAdjointness::Require)
                }
                other => {
                    return Err(CliError::config(format!(
                        "unknown operator preset {other}; expected one of {PRESETS:?}"
                    )))
                }
            },
            CoefficientSpec::Inline(c) => {
                if self.algebra != [1] || self.k != 1 {
                    return Err(CliError::config("inline coefficients need algebra [1] and k = 1"));
                }
                if c.a.len() != grid.dim() {
                    return Err(CliError::config("one coefficient array per axis"));
                }
                let field = |samples: &[[f64; 2]]| -> CliResult<Vec<AMatrix>> {
                    if samples.len() != grid.size() {
                        return Err(CliError::config(format!(
                            "{} samples for a grid of {} points",
                            samples.len(),
                            grid.size()
                        )));
                    }
                    Ok(samples
                        .iter()
                        .map(|&[re, im]| {
                            AMatrix::identity(&alg, 1).map_blocks(|m| m.scale(C64::new(re, im)))
                        })
                        .collect())
                };
                let a = c.a.iter().map(|s| field(s)).collect::<CliResult<Vec<_>>>()?;
                let mode = if c.symmetrize {
                    SelfAdjointness::Symmetrize
                } else {
                    SelfAdjointness::Require
                };
                (a, field(&c.b)?, mode)
            }
        };
        FirstOrderOp::new(grid, alg, self.k, a, b, mode, tolerances::ELLIPTIC_MIN).map_err(wrap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for p in PRESETS {
            OperatorSpec::preset(p, 32).build().unwrap();
        }
        assert!(OperatorSpec::preset("nope", 32).build().is_err());
    }

    #[test]
    fn inline_matches_preset() {
        let grid = Grid::circle(16).unwrap();
        let a: Vec<[f64; 2]> = (0..16).map(|_| [0.0, -1.0]).collect();
        let b: Vec<[f64; 2]> = (0..16).map(|_| [0.0, 0.0]).collect();
        let spec = OperatorSpec {
            grid: GridSpec::circle(16),
            algebra: vec![1],
            k: 1,
            coefficients: CoefficientSpec::Inline(InlineCoefficients {
                a: vec![a],
                b,
                symmetrize: false,
            }),
        };
        let op = spec.build().unwrap();
        let d = &op.discretize()[0] - &grid.derivative(0).scale(C64::new(0.0, -1.0));
        assert!(d.max_abs() < 1e-12);
    }

    #[test]
    fn algebra_valued_preset() {
        let mut spec = OperatorSpec::preset("derivative", 16);
        spec.algebra = vec![1, 2];
        let op = spec.build().unwrap();
        assert_eq!(op.block_fiber(1), 2);
    }

    #[test]
    fn parses_from_json() {
        let s: OperatorSpec = serde_json::from_str(
            r#"{"grid":{"N":32,"topology":"circle"},"coefficients":"variable-speed"}"#,
        )
        .unwrap();
        assert_eq!(s.grid.n, 1);
        assert!(serde_json::from_str::<OperatorSpec>(r#"{"grid":{"N":32,"x":1},"coefficients":"derivative"}"#).is_err());
    }
}
