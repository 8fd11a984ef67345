//! Pipeline configuration: one TOML file with `[flow]`, `[grid]`,
//! `[solver]`, `[build]` and `[analysis]` sections.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_composer::{Bump, FlowSpec, GridData, ImportedField};
use crate::radial_profile::{RadialProfile, TabulatedProfile, DEFAULT_INTERPOLATION_ORDER};
use crate::rigidity::{AnalysisParams, RelationParams, SymmetryParams};
use crate::spectral_solver::{Dealias, SolverConfig, SpectralGrid, PADDING};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    ClosedForm { amplitude: f64, support_radius: f64, exponent: u32 },
    Tabulated { table: PathBuf, order: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: [f64; 2],
    pub profile: ProfileConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportConfig {
    pub path: PathBuf,
    #[serde(default = "default_import_order")]
    pub order: usize,
}

fn default_import_order() -> usize {
    DEFAULT_INTERPOLATION_ORDER
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub angular_velocity: f64,
    pub gluing_radius: f64,
    #[serde(default)]
    pub bumps: Vec<BumpConfig>,
    pub imported: Option<ImportConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { resolution: 256, half_width: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub cfl: f64,
    pub dt: Option<f64>,
    pub horizon_revolutions: Option<f64>,
    /// Takes precedence over `horizon_revolutions`.
    pub horizon_time: Option<f64>,
    pub snapshot_every: Option<usize>,
    pub filter_order: Option<u32>,
    pub dealias: Dealias,
    pub diagnostic_every: usize,
    /// Bound on the largest rigid-rotation error of the run.
    pub rotation_tolerance: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            cfl: d.cfl,
            dt: d.dt,
            horizon_revolutions: None,
            horizon_time: None,
            snapshot_every: None,
            filter_order: None,
            dealias: d.dealias,
            diagnostic_every: d.diagnostic_every,
            rotation_tolerance: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Nodes per side of the residual grid.
    pub resolution: usize,
    pub residual_tolerance: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { resolution: 1024, residual_tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub dr: f64,
    pub n_angles: usize,
    pub tau: f64,
    pub tau_f: f64,
    /// Defaults to `2.5 R`.
    pub r_max: Option<f64>,
    pub bins: usize,
    pub resolution: usize,
    pub gradient_threshold: f64,
    pub window: usize,
    pub boundary_tolerance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let s = SymmetryParams::default();
        let r = RelationParams::default();
        let a = AnalysisParams::default();
        AnalysisConfig {
            dr: s.dr,
            n_angles: s.n_angles,
            tau: s.tau,
            tau_f: r.tau_f,
            r_max: None,
            bins: r.bins,
            resolution: r.resolution,
            gradient_threshold: r.gradient_threshold,
            window: r.window,
            boundary_tolerance: a.boundary_tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: Option<PathBuf>,
    pub flow: FlowConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub build: BuildConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

/// Sets the dot-separated `path` inside `root`, creating tables as needed.
/// Numeric segments index into arrays.
pub fn apply_override(root: &mut toml::Table, path: &str, value: &str) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("invalid override key {path:?}")));
    }
    let cur = root;
    let (last, head) = segments.split_last().expect("non-empty");
    let mut slot: Option<&mut toml::Value> = None;
    for seg in head {
        let next = match slot.take() {
            None => cur.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())),
            Some(v) => step_into(v, seg, path)?,
        };
        slot = Some(next);
    }
    let value = parse_value(value);
    match slot {
        None => {
            cur.insert(last.to_string(), value);
        }
        Some(v) => {
            let target = step_into(v, last, path)?;
            *target = value;
        }
    }
    Ok(())
}

fn step_into<'a>(v: &'a mut toml::Value, seg: &str, path: &str) -> Result<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => Ok(t.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()))),
        toml::Value::Array(a) => {
            let i: usize = seg.parse().map_err(|_| Error::Config(format!("{path}: {seg:?} is not an array index")))?;
            let len = a.len();
            a.get_mut(i).ok_or_else(|| Error::Config(format!("{path}: index {i} out of range (length {len})")))
        }
        _ => Err(Error::Config(format!("{path}: cannot descend into a scalar at {seg:?}"))),
    }
}

/// Splits `key=value`.
pub fn split_assignment(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("expected key=value, got {s:?}")))
}

impl PipelineConfig {
    /// Reads `path` and applies `overrides` (`key=value` with dot paths).
    pub fn load(path: &Path, overrides: &[String]) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        PipelineConfig::from_str_with(&text, &base, overrides)
    }

    pub fn from_str_with(text: &str, base_dir: &Path, overrides: &[String]) -> Result<PipelineConfig> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            let (k, v) = split_assignment(o)?;
            apply_override(&mut table, k, v)?;
        }
        let mut cfg: PipelineConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Cross-section consistency checks that need no heavy computation.
    pub fn validate(&self) -> Result<()> {
        let f = &self.flow;
        if !(f.gluing_radius > 0.0 && f.gluing_radius.is_finite()) {
            return Err(Error::Config(format!("flow.gluing_radius must be positive, got {}", f.gluing_radius)));
        }
        SpectralGrid::new(self.grid.resolution, self.grid.half_width).map_err(|e| Error::Config(e.to_string()))?;
        if 2.0 * f.gluing_radius >= PADDING * self.grid.half_width {
            return Err(Error::Config(format!(
                "support 2R = {} must be below {PADDING} * grid.half_width = {}",
                2.0 * f.gluing_radius,
                PADDING * self.grid.half_width
            )));
        }
        self.horizon()?;
        self.solver_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.solver.rotation_tolerance >= 0.0) {
            return Err(Error::Config("solver.rotation_tolerance must be non-negative".into()));
        }
        if self.build.resolution < 2 {
            return Err(Error::Config("build.resolution must be at least 2".into()));
        }
        for b in &f.bumps {
            if let ProfileConfig::Tabulated { table, .. } = &b.profile {
                let p = self.resolve(table);
                if !p.is_file() {
                    return Err(Error::Config(format!("profile table {} not found", p.display())));
                }
            }
        }
        if let Some(imp) = &f.imported {
            let p = self.resolve(&imp.path);
            if !p.is_file() {
                return Err(Error::Config(format!("imported grid {} not found", p.display())));
            }
        }
        let a = &self.analysis;
        if a.n_angles < 64 || !(a.dr > 0.0) {
            return Err(Error::Config("analysis needs n_angles >= 64 and dr > 0".into()));
        }
        Ok(())
    }

    /// Simulated time span.
    pub fn horizon(&self) -> Result<f64> {
        let s = &self.solver;
        let t = match (s.horizon_time, s.horizon_revolutions) {
            (Some(t), _) => t,
            (None, rev) => {
                let rev = rev.unwrap_or(1.0);
                let omega = self.flow.angular_velocity;
                if omega == 0.0 {
                    if rev == 0.0 {
                        0.0
                    } else {
                        return Err(Error::Config(
                            "a horizon in revolutions needs a nonzero angular velocity; set solver.horizon_time".into(),
                        ));
                    }
                } else {
                    rev * 2.0 * PI / omega.abs()
                }
            }
        };
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Config(format!("horizon must be finite and non-negative, got {t}")));
        }
        Ok(t)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            cfl: s.cfl,
            dt: s.dt,
            dealias: s.dealias,
            filter_order: s.filter_order,
            diagnostic_every: s.diagnostic_every,
            snapshot_every: s.snapshot_every,
        }
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.grid.resolution, self.grid.half_width)
    }

    pub fn analysis_params(&self) -> AnalysisParams {
        let a = &self.analysis;
        AnalysisParams {
            symmetry: SymmetryParams {
                r_max: a.r_max.unwrap_or(2.5 * self.flow.gluing_radius),
                dr: a.dr,
                n_angles: a.n_angles,
                tau: a.tau,
            },
            relation: RelationParams {
                bins: a.bins,
                tau_f: a.tau_f,
                gradient_threshold: a.gradient_threshold,
                resolution: a.resolution,
                window: a.window,
            },
            boundary_tolerance: a.boundary_tolerance,
        }
    }

    /// Builds the bumps (loading tables) without validating their placement.
    pub fn bumps(&self) -> Result<Vec<Bump>> {
        self.flow
            .bumps
            .iter()
            .map(|b| {
                let profile = match &b.profile {
                    ProfileConfig::ClosedForm { amplitude, support_radius, exponent } => {
                        RadialProfile::closed_form(*amplitude, *support_radius, *exponent)?
                    }
                    ProfileConfig::Tabulated { table, order } => RadialProfile::Tabulated(TabulatedProfile::load(
                        &self.resolve(table),
                        order.unwrap_or(DEFAULT_INTERPOLATION_ORDER),
                    )?),
                };
                Ok(Bump::new(b.center, profile))
            })
            .collect()
    }

    /// The construction described by `[flow]`.
    pub fn flow_spec(&self) -> Result<FlowSpec> {
        let spec = FlowSpec::new(self.flow.angular_velocity, self.flow.gluing_radius, self.bumps()?)?;
        match &self.flow.imported {
            None => Ok(spec),
            Some(imp) => {
                let data = GridData::load(&self.resolve(&imp.path))?;
                spec.with_imported(ImportedField::new(data, imp.order)?)
            }
        }
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[flow]
angular_velocity = 1.0
gluing_radius = 4.0

[[flow.bumps]]
center = [2.0, 0.0]
profile = { kind = "closed-form", amplitude = 1.0, support_radius = 1.5, exponent = 8 }

[grid]
resolution = 128
half_width = 10.0
"#;

    #[test]
    fn defaults_and_overrides() {
        let c = PipelineConfig::from_str_with(BASE, Path::new("."), &[]).unwrap();
        assert_eq!(c.build.resolution, 1024);
        assert!((c.horizon().unwrap() - 2.0 * PI).abs() < 1e-15);
        let c = PipelineConfig::from_str_with(
            BASE,
            Path::new("."),
            &[
                "flow.angular_velocity=-2".into(),
                "flow.bumps.0.profile.exponent=6".into(),
                "solver.horizon_time=0.5".into(),
                "output_dir=runs/x".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.flow.angular_velocity, -2.0);
        assert_eq!(c.horizon().unwrap(), 0.5);
        assert_eq!(c.output_dir, Some(PathBuf::from("runs/x")));
        match &c.flow.bumps[0].profile {
            ProfileConfig::ClosedForm { exponent, .. } => assert_eq!(*exponent, 6),
            _ => panic!(),
        }
    }

    #[test]
    fn cross_section_errors() {
        let small_box = PipelineConfig::from_str_with(BASE, Path::new("."), &["grid.half_width=8".into()]);
        assert!(matches!(small_box, Err(Error::Config(_))));
        let bad_index = PipelineConfig::from_str_with(BASE, Path::new("."), &["flow.bumps.3.center=[0,0]".into()]);
        assert!(bad_index.is_err());
        let stationary = PipelineConfig::from_str_with(BASE, Path::new("."), &["flow.angular_velocity=0".into()]);
        assert!(stationary.is_err());
        let unknown = PipelineConfig::from_str_with(BASE, Path::new("."), &["grid.colour=1".into()]);
        assert!(unknown.is_err());
    }
}
