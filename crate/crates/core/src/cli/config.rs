//! Run configuration: a TOML file with one table per block. Unknown keys are
//! rejected everywhere.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actions::ActionTol;
use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::front::FrontConfig;
use crate::geometry::{HamiltonianKind, HamiltonianModel, Rect, SurfaceKind, SurfaceModel, SurfacePoint};
use crate::trig::TrigPoly;
use crate::verify::{ErgodicProblem, OscillatoryProblem, Setup};

/// Cosine and sine coefficients in multiples of the base frequency, which
/// is fixed by the surface (`2 pi / L` on tori, `pi / L` on spheres).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coeffs {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceBlock {
    pub kind: SurfaceKind,
    #[serde(rename = "L", default)]
    pub length: Option<f64>,
    #[serde(default)]
    pub a_coeffs: Option<Coeffs>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianBlock {
    pub kind: HamiltonianKind,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "V_coeffs", default)]
    pub v_coeffs: Option<Coeffs>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBlock {
    pub horizon: f64,
    pub n_times: usize,
    pub tail_fraction: f64,
    pub gap_tol: f64,
    /// Rectangle for the masked-length check.
    pub mask: Option<Rect>,
    /// Window size of the pole periodicity check.
    pub periodic_n: usize,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self { horizon: 500.0, n_times: 32, tail_fraction: 0.25, gap_tol: 0.03, mask: None, periodic_n: 24 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicBlock {
    #[serde(flatten)]
    pub problem: ErgodicProblem,
    pub t_grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatphaseBlock {
    #[serde(flatten)]
    pub problem: OscillatoryProblem,
    pub t_grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: Option<SurfaceBlock>,
    pub hamiltonian: Option<HamiltonianBlock>,
    pub point: Option<SurfacePoint>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub front: FrontConfig,
    #[serde(default)]
    pub actions: ActionTol,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub output: OutputBlock,
    pub ergodic: Option<ErgodicBlock>,
    pub statphase: Option<StatphaseBlock>,
}

/// A parsed config plus the raw bytes it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub raw: String,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let config = Self::parse(&raw).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        Ok(LoadedConfig { path: path.to_path_buf(), raw, config })
    }

    fn need<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T> {
        v.as_ref().ok_or_else(|| Error::Config(format!("missing block [{key}]")))
    }

    pub fn surface_model(&self) -> Result<SurfaceModel> {
        let b = Self::need(&self.surface, "surface")?;
        let coeffs = || {
            b.a_coeffs.clone().ok_or_else(|| Error::Config("missing key surface.a_coeffs".into()))
        };
        match b.kind {
            SurfaceKind::FlatTorus => {
                if b.a_coeffs.is_some() || b.length.is_some() {
                    return Err(Error::Config("flat_torus takes no surface.L or surface.a_coeffs".into()));
                }
                Ok(SurfaceModel::flat_torus())
            }
            SurfaceKind::RevolutionTorus => {
                let l = b.length.unwrap_or(TAU);
                let c = coeffs()?;
                SurfaceModel::revolution_torus(TrigPoly::new(c.cos, c.sin, TAU / l)?, l)
            }
            SurfaceKind::RevolutionSphere => {
                let l = b.length.unwrap_or(PI);
                let c = coeffs()?;
                SurfaceModel::revolution_sphere(TrigPoly::new(c.cos, c.sin, PI / l)?, l)
            }
        }
    }

    pub fn hamiltonian_model(&self, surface: &SurfaceModel) -> Result<HamiltonianModel> {
        let b = Self::need(&self.hamiltonian, "hamiltonian")?;
        match b.kind {
            HamiltonianKind::Geodesic => {
                if b.v_coeffs.is_some() {
                    return Err(Error::Config("geodesic hamiltonian takes no V_coeffs".into()));
                }
                HamiltonianModel::geodesic(b.energy)
            }
            HamiltonianKind::Schrodinger => {
                let c = b.v_coeffs.clone().ok_or_else(|| Error::Config("missing key hamiltonian.V_coeffs".into()))?;
                let base = if surface.is_sphere() { PI } else { TAU } / surface.length();
                HamiltonianModel::schrodinger(TrigPoly::new(c.cos, c.sin, base)?, b.energy, surface)
            }
        }
    }

    pub fn point(&self) -> Result<SurfacePoint> {
        Self::need(&self.point, "point").copied()
    }

    pub fn validate_blocks(&self) -> Result<()> {
        self.integrator.validate()?;
        self.front.validate()?;
        self.actions.validate()?;
        Ok(())
    }

    /// The verify setup; `horizon` overrides `verify.horizon`.
    pub fn setup(&self, horizon: Option<f64>) -> Result<Setup> {
        self.validate_blocks()?;
        let surface = self.surface_model()?;
        let ham = self.hamiltonian_model(&surface)?;
        let mut s = Setup::new(surface, ham, self.point()?);
        s.integ = self.integrator;
        s.front = self.front;
        s.tol = self.actions;
        s.horizon = horizon.unwrap_or(self.verify.horizon);
        s.n_times = self.verify.n_times;
        s.tail_fraction = self.verify.tail_fraction;
        s.gap_tol = self.verify.gap_tol;
        Ok(s)
    }
}
