//! TOML run configuration and the benchmark presets built from it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::Model;
use crate::error::{Error, Result};
use crate::evolution::{BoundaryLoad, EvolutionConfig, Tolerances};
use crate::material::{
    ConstantProfile, MaterialModel, QuadraticWell, ScalarProfile, ShiftedQuadratic, DEFAULT_ETA,
};
use crate::mesh::{build_structured_mesh, EdgeMarker, TriMesh};
use crate::viscosity::{StepRule, SweepOptions, DEFAULT_GRID_INTERVALS, DEFAULT_PLATEAU_EPS};

/// Seed value assigned to nodes inside the notch band unless overridden.
pub const DEFAULT_NOTCH_VALUE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub time: TimeSection,
    #[serde(default)]
    pub viscosity: ViscositySection,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub degradation: DegradationSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub bc: BcSection,
    #[serde(default)]
    pub init: InitSection,
    #[serde(default)]
    pub tol: TolSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViscositySection {
    pub delta: f64,
    /// Descending list for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_list: Option<Vec<f64>>,
    /// If set, sweeps use `τ = tau_over_delta · δ` instead of `[time] steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_over_delta: Option<f64>,
    #[serde(default = "default_plateau_eps")]
    pub plateau_eps: f64,
    #[serde(default = "default_grid_intervals")]
    pub grid_intervals: usize,
}

fn default_plateau_eps() -> f64 {
    DEFAULT_PLATEAU_EPS
}

fn default_grid_intervals() -> usize {
    DEFAULT_GRID_INTERVALS
}

impl Default for ViscositySection {
    fn default() -> Self {
        ViscositySection {
            delta: 0.05,
            delta_list: None,
            tau_over_delta: None,
            plateau_eps: DEFAULT_PLATEAU_EPS,
            grid_intervals: DEFAULT_GRID_INTERVALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    pub mu: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection {
            mu: 1.0,
            kappa: 1.5,
            eta: DEFAULT_ETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationSection {
    /// `quadratic` (`z² + η`) or `constant` (`h ≡ h_value`).
    pub h_name: String,
    #[serde(default = "one")]
    pub h_value: f64,
    /// Only `quadratic` (`(z − 1)²`) is available.
    pub f_name: String,
}

fn one() -> f64 {
    1.0
}

impl Default for DegradationSection {
    fn default() -> Self {
        DegradationSection {
            h_name: "quadratic".into(),
            h_value: 1.0,
            f_name: "quadratic".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
    /// Mesh file; overrides the structured generator. Relative paths resolve against the
    /// config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            nx: 16,
            ny: 16,
            width: 1.0,
            height: 1.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Tension,
    Shear,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcSection {
    pub preset: Preset,
    pub rate: f64,
    /// Custom preset: `profile(x) = gradient · (x − x_min) + offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[f64; 2]>,
    /// Custom preset on a structured mesh: Dirichlet sides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<Vec<Side>>,
}

impl Default for BcSection {
    fn default() -> Self {
        BcSection {
            preset: Preset::Shear,
            rate: 1.0,
            gradient: None,
            offset: None,
            dirichlet: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchSection {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub width: f64,
    #[serde(default = "default_notch_value")]
    pub value: f64,
}

fn default_notch_value() -> f64 {
    DEFAULT_NOTCH_VALUE
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notch: Option<NotchSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolSection {
    /// Relative staggered tolerance, scaled by `1 + ‖z_prev‖_{H¹,h}`.
    pub stag_tol: f64,
    pub tol_u: f64,
    pub tol_z: f64,
    pub max_inner: usize,
    #[serde(default = "default_max_newton")]
    pub max_newton: usize,
}

fn default_max_newton() -> usize {
    Tolerances::default().max_newton
}

impl Default for TolSection {
    fn default() -> Self {
        let t = Tolerances::default();
        TolSection {
            stag_tol: t.stag_rel,
            tol_u: t.tol_u,
            tol_z: t.tol_z,
            max_inner: t.max_inner,
            max_newton: t.max_newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write a VTK snapshot every this many steps; 0 writes only the final state.
    pub vtk_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("pff-out"),
            vtk_every: 0,
        }
    }
}

/// Everything a run needs, built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: Model,
    pub evolution: EvolutionConfig,
    pub z_seed: Vec<f64>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: origin.to_string(),
                line,
                msg: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(p) = cfg.mesh.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("[time] T", self.time.horizon)?;
        if self.time.steps == 0 {
            return Err(cfg_err("[time] steps must be at least 1"));
        }
        positive("[viscosity] delta", self.viscosity.delta)?;
        if let Some(list) = &self.viscosity.delta_list {
            if list.is_empty() || list.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(cfg_err("[viscosity] delta_list must hold positive values"));
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(cfg_err("[viscosity] delta_list must be strictly descending"));
            }
        }
        if let Some(r) = self.viscosity.tau_over_delta {
            if !(r > 0.0 && r <= 1.0) {
                return Err(cfg_err(format!("[viscosity] tau_over_delta must lie in (0, 1], got {r}")));
            }
        }
        positive("[viscosity] plateau_eps", self.viscosity.plateau_eps)?;
        positive("[material] mu", self.material.mu)?;
        positive("[material] kappa", self.material.kappa)?;
        positive("[material] eta", self.material.eta)?;
        match self.degradation.h_name.as_str() {
            "quadratic" => {}
            "constant" => positive("[degradation] h_value", self.degradation.h_value)?,
            other => return Err(cfg_err(format!("[degradation] unknown h_name `{other}`"))),
        }
        if self.degradation.f_name != "quadratic" {
            return Err(cfg_err(format!("[degradation] unknown f_name `{}`", self.degradation.f_name)));
        }
        if self.mesh.path.is_none() {
            if self.mesh.nx == 0 || self.mesh.ny == 0 {
                return Err(cfg_err("[mesh] nx and ny must be at least 1"));
            }
            positive("[mesh] width", self.mesh.width)?;
            positive("[mesh] height", self.mesh.height)?;
        }
        if !self.bc.rate.is_finite() {
            return Err(cfg_err("[bc] rate must be finite"));
        }
        if self.bc.preset == Preset::Custom && self.bc.gradient.is_none() {
            return Err(cfg_err("[bc] custom preset needs `gradient`"));
        }
        if self.bc.preset != Preset::Custom
            && (self.bc.gradient.is_some() || self.bc.offset.is_some() || self.bc.dirichlet.is_some())
        {
            return Err(cfg_err("[bc] gradient/offset/dirichlet apply to the custom preset only"));
        }
        if let Some(n) = &self.init.notch {
            positive("[init.notch] width", n.width)?;
            if !(0.0..=1.0).contains(&n.value) {
                return Err(cfg_err(format!("[init.notch] value must lie in [0, 1], got {}", n.value)));
            }
        }
        positive("[tol] stag_tol", self.tol.stag_tol)?;
        positive("[tol] tol_u", self.tol.tol_u)?;
        positive("[tol] tol_z", self.tol.tol_z)?;
        if self.tol.max_inner == 0 || self.tol.max_newton == 0 {
            return Err(cfg_err("[tol] iteration caps must be at least 1"));
        }
        Ok(())
    }

    pub fn material_model(&self) -> Result<MaterialModel> {
        let m = &self.material;
        let h: Arc<dyn ScalarProfile> = match self.degradation.h_name.as_str() {
            "constant" => Arc::new(ConstantProfile {
                value: self.degradation.h_value,
            }),
            _ => Arc::new(ShiftedQuadratic { eta: m.eta }),
        };
        MaterialModel::new(m.mu, m.kappa, h, Arc::new(QuadraticWell), 2.0)
            .map_err(|e| cfg_err(e.to_string()))
    }

    fn dirichlet_sides(&self) -> Vec<Side> {
        match self.bc.preset {
            Preset::Tension | Preset::Shear => vec![Side::Bottom, Side::Top],
            Preset::Custom => self.bc.dirichlet.clone().unwrap_or(vec![Side::Bottom, Side::Top]),
        }
    }

    pub fn build_mesh(&self) -> Result<TriMesh> {
        if let Some(p) = &self.mesh.path {
            return TriMesh::read(p);
        }
        let (w, h) = (self.mesh.width, self.mesh.height);
        let sides = self.dirichlet_sides();
        let eps = 1e-9 * w.max(h);
        build_structured_mesh(self.mesh.nx, self.mesh.ny, w, h, |x, y| {
            let on = |s: Side| match s {
                Side::Bottom => y.abs() <= eps,
                Side::Top => (y - h).abs() <= eps,
                Side::Left => x.abs() <= eps,
                Side::Right => (x - w).abs() <= eps,
            };
            if sides.iter().any(|&s| on(s)) {
                EdgeMarker::Dirichlet
            } else {
                EdgeMarker::Free
            }
        })
    }

    /// Affine nodal profile of the boundary datum. Tension pulls the top edge up, shear
    /// drags it sideways; both hold the bottom edge.
    pub fn load_profile(&self, mesh: &TriMesh) -> Vec<f64> {
        let (xmin, ymin, _, ymax) = mesh.bounding_box();
        let height = ymax - ymin;
        let (a, b) = match self.bc.preset {
            Preset::Tension => ([[0.0, 0.0], [0.0, 1.0 / height]], [0.0, 0.0]),
            Preset::Shear => ([[0.0, 1.0 / height], [0.0, 0.0]], [0.0, 0.0]),
            Preset::Custom => (
                self.bc.gradient.expect("validated"),
                self.bc.offset.unwrap_or([0.0, 0.0]),
            ),
        };
        mesh.nodes()
            .iter()
            .flat_map(|p| {
                let (x, y) = (p[0] - xmin, p[1] - ymin);
                [a[0][0] * x + a[0][1] * y + b[0], a[1][0] * x + a[1][1] * y + b[1]]
            })
            .collect()
    }

    /// `1` everywhere except nodes within the notch band.
    pub fn seed_field(&self, mesh: &TriMesh) -> Vec<f64> {
        let Some(n) = &self.init.notch else {
            return vec![1.0; mesh.num_nodes()];
        };
        mesh.nodes()
            .iter()
            .map(|p| {
                if segment_distance(*p, n.start, n.end) <= n.width {
                    n.value
                } else {
                    1.0
                }
            })
            .collect()
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            stag_rel: self.tol.stag_tol,
            tol_u: self.tol.tol_u,
            tol_z: self.tol.tol_z,
            max_inner: self.tol.max_inner,
            max_newton: self.tol.max_newton,
        }
    }

    pub fn setup(&self) -> Result<Setup> {
        let mesh = self.build_mesh()?;
        if mesh.dirichlet_nodes().is_empty() {
            return Err(cfg_err("mesh has no Dirichlet edges"));
        }
        let profile = self.load_profile(&mesh);
        let z_seed = self.seed_field(&mesh);
        let model = Model::new(mesh, self.material_model()?);
        let evolution = EvolutionConfig {
            horizon: self.time.horizon,
            steps: self.time.steps,
            delta: self.viscosity.delta,
            load: BoundaryLoad {
                profile,
                rate: self.bc.rate,
            },
            tol: self.tolerances(),
        };
        Ok(Setup {
            model,
            evolution,
            z_seed,
        })
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            deltas: self
                .viscosity
                .delta_list
                .clone()
                .unwrap_or_else(|| vec![self.viscosity.delta]),
            step_rule: self
                .viscosity
                .tau_over_delta
                .map_or(StepRule::Fixed, StepRule::TauOverDelta),
            plateau_eps: self.viscosity.plateau_eps,
            grid_intervals: self.viscosity.grid_intervals,
        }
    }

    /// Named preset on an `n × n` unit square with a horizontal notch from the left edge
    /// to the centre.
    pub fn preset(preset: Preset, n: usize, steps: usize, delta: f64) -> Self {
        RunConfig {
            time: TimeSection { horizon: 1.0, steps },
            viscosity: ViscositySection {
                delta,
                ..Default::default()
            },
            material: MaterialSection::default(),
            degradation: DegradationSection::default(),
            mesh: MeshSection {
                nx: n,
                ny: n,
                ..Default::default()
            },
            bc: BcSection {
                preset,
                rate: 1.0,
                ..Default::default()
            },
            init: InitSection {
                notch: Some(NotchSection {
                    start: [0.0, 0.5],
                    end: [0.5, 0.5],
                    width: 0.5 / n as f64,
                    value: DEFAULT_NOTCH_VALUE,
                }),
            },
            tol: TolSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (cx * cx + cy * cy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[time]\nT = 1.0\nsteps = 4\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(MINIMAL, "mem").unwrap();
        assert_eq!(c.time.steps, 4);
        assert_eq!(c.bc.preset, Preset::Shear);
        assert_eq!(c.tol.tol_u, 1e-9);
    }

    #[test]
    fn missing_time_names_the_key() {
        let e = RunConfig::parse("[viscosity]\ndelta = 0.1\n", "cfg.toml").unwrap_err();
        assert!(e.to_string().contains("time"), "{e}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = RunConfig::parse("[time]\nT = 1.0\nsteps = 4\nbogus = 3\n", "cfg.toml").unwrap_err();
        match e {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 4);
                assert!(msg.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::preset(Preset::Tension, 8, 10, 0.05);
        let back = RunConfig::parse(&c.to_toml(), "mem").unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn presets_fix_bottom_and_top() {
        let c = RunConfig::preset(Preset::Shear, 4, 2, 0.1);
        let s = c.setup().unwrap();
        let mask = s.model.mesh.dirichlet_dof_mask();
        for (i, p) in s.model.mesh.nodes().iter().enumerate() {
            let on = p[1] == 0.0 || p[1] == 1.0;
            assert_eq!(mask[2 * i], on);
            let (gx, gy) = (s.evolution.load.profile[2 * i], s.evolution.load.profile[2 * i + 1]);
            assert_eq!((gx, gy), (p[1], 0.0));
        }
        let notched = s.z_seed.iter().filter(|z| **z == DEFAULT_NOTCH_VALUE).count();
        assert_eq!(notched, 3);
    }

    #[test]
    fn segment_distance_cases() {
        assert_eq!(segment_distance([0.5, 1.0], [0.0, 0.0], [1.0, 0.0]), 1.0);
        assert_eq!(segment_distance([2.0, 0.0], [0.0, 0.0], [1.0, 0.0]), 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = "[time]\nT = -1.0\nsteps = 4\n";
        assert!(matches!(RunConfig::parse(bad, "m"), Err(Error::Config(_))));
        let bad = "[time]\nT = 1.0\nsteps = 4\n[degradation]\nh_name = \"cubic\"\nf_name = \"quadratic\"\n";
        assert!(matches!(RunConfig::parse(bad, "m"), Err(Error::Config(_))));
    }
}
