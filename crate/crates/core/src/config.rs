//! TOML run configuration and its validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeffs::{ModelKind, TruncationLevel, ViscosityModel};
use crate::error::{Error, Result};
use crate::fixedpoint::PicardConfig;
use crate::grid::{Grid, ScalarField};
use crate::verify::ReportOptions;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub model: ModelSpec,
    pub source: SourceSpec,
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default)]
    pub route: Route,
    #[serde(default)]
    pub report: ReportSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub mms: MmsSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "one")]
    pub lx: f64,
    #[serde(default = "one")]
    pub ly: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub delta: f64,
    /// Floor constant in `a(s) ≥ γν(s)`; checked at load when present.
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum SourcePreset {
    Constant {
        c: f64,
    },
    Gaussian {
        x0: f64,
        y0: f64,
        sigma: f64,
        amplitude: f64,
    },
    /// Forcing whose exact `u` is `sin(πx/lx) sin(πy/ly)`; constant models only.
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    #[serde(flatten)]
    pub preset: SourcePreset,
    /// Claimed integrability exponent of `f`; every preset is bounded, so any
    /// value above 3/2 is admissible.
    #[serde(default = "default_r")]
    pub r: f64,
}

fn default_r() -> f64 {
    2.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    #[default]
    Direct,
    Kirchhoff,
    Chi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSpec {
    pub p: f64,
    pub level_set_points: usize,
}

impl Default for ReportSpec {
    fn default() -> Self {
        let d = ReportOptions::default();
        Self {
            p: d.p,
            level_set_points: d.level_set_points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write `u`/`k` dumps for every solve.
    pub fields: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            fields: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub u: Option<PathBuf>,
    pub k: Option<PathBuf>,
    /// Truncation level for the check; defaults to the last entry of `n_list`.
    pub n: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSpec {
    /// Cells per side, each roughly twice the previous.
    pub sizes: Vec<usize>,
}

impl Default for MmsSpec {
    fn default() -> Self {
        Self {
            sizes: vec![17, 33, 65],
        }
    }
}

/// A configuration after all hypothesis checks.
#[derive(Clone, Debug)]
pub struct Validated {
    pub config: RunConfig,
    pub grid: Grid,
    pub model: ViscosityModel,
    pub n_list: Vec<TruncationLevel>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(self) -> Result<Validated> {
        let grid = Grid::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)?;
        let model = ViscosityModel::new(self.model.kind.clone(), self.model.delta)?;
        if let Some(g) = self.model.gamma {
            model.check_ratio_floor(g)?;
        }
        if !(self.source.r > 1.5) {
            return Err(Error::Hypothesis {
                name: "H0",
                detail: format!("source exponent r = {} must exceed 3/2", self.source.r),
            });
        }
        match &self.source.preset {
            SourcePreset::Gaussian { sigma, .. } if !(*sigma > 0.0) => {
                return Err(Error::Config(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
            SourcePreset::Manufactured if manufactured_viscosity(&model).is_none() => {
                return Err(Error::Config(
                    "the manufactured source needs a constant viscosity model".into(),
                ));
            }
            _ => {}
        }
        if self.route == Route::Chi {
            if self.model.gamma.is_none() {
                return Err(Error::Hypothesis {
                    name: "H2",
                    detail: "route = \"chi\" requires model.gamma".into(),
                });
            }
            model.require_proportional()?;
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        let n_list = self
            .n_list
            .iter()
            .map(|&n| TruncationLevel::new(n))
            .collect::<Result<Vec<_>>>()?;
        if n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_list must be strictly ascending".into()));
        }
        self.picard.validate()?;
        if let Some(n) = self.verify.n {
            TruncationLevel::new(n)?;
        }
        self.report_options().validate()?;
        Ok(Validated {
            config: self,
            grid,
            model,
            n_list,
        })
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            p: self.report.p,
            r: self.source.r,
            face_rule: self.picard.face_rule,
            level_set_points: self.report.level_set_points,
        }
    }
}

impl ReportOptions {
    pub fn validate(&self) -> Result<()> {
        if !(1.0..1.5).contains(&self.p) {
            return Err(Error::Config(format!(
                "flux exponent p = {} must lie in [1, 3/2); the L^p flux bound fails from 3/2 on",
                self.p
            )));
        }
        if self.level_set_points < 2 {
            return Err(Error::Config(
                "report.level_set_points must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

fn manufactured_viscosity(m: &ViscosityModel) -> Option<f64> {
    match m.kind() {
        ModelKind::Constant { nu, .. } => Some(*nu),
        _ => None,
    }
}

/// Exact solution paired with [`SourcePreset::Manufactured`].
pub fn manufactured_u(grid: Grid) -> ScalarField {
    let (lx, ly) = (grid.lx(), grid.ly());
    ScalarField::from_fn(grid, |x, y| (PI * x / lx).sin() * (PI * y / ly).sin())
}

impl SourcePreset {
    pub fn sample(&self, grid: Grid, model: &ViscosityModel) -> Result<ScalarField> {
        Ok(match *self {
            Self::Constant { c } => ScalarField::constant(grid, c),
            Self::Gaussian {
                x0,
                y0,
                sigma,
                amplitude,
            } => ScalarField::from_fn(grid, |x, y| {
                amplitude * (-((x - x0).powi(2) + (y - y0).powi(2)) / (2.0 * sigma * sigma)).exp()
            }),
            Self::Manufactured => {
                let nu = manufactured_viscosity(model).ok_or_else(|| {
                    Error::Config("the manufactured source needs a constant viscosity model".into())
                })?;
                let (lx, ly) = (grid.lx(), grid.ly());
                let scale = nu * PI * PI * (1.0 / (lx * lx) + 1.0 / (ly * ly));
                manufactured_u(grid).scaled(scale)
            }
        })
    }
}
