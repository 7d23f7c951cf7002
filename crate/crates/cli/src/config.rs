//! Run configuration read from TOML.
//!
//! ```toml
//! [surface]                 # see SurfaceConfig for the keys
//! shape = "sphere"
//! radius = 1.0
//!
//! [run]
//! levels = [2, 3, 4]        # strictly increasing refinement levels
//! out = "out"
//! format = "csv"            # csv | json | both
//! threads = 1
//! extrapolation = "estimated"   # estimated | romberg | fixed | none
//! order = 2.0               # nominal order (estimated) or the fixed order
//!
//! [mesh]                    # surfaces of revolution only
//! azimuthal = 6
//! panel_aspect = 1.0
//! ```
//!
//! Command sections `[capacity]`, `[deform_scan]`, `[elongated]` and
//! `[bound_state]` are described on their structs.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use surfcrit::extrapolate::OrderRule;
use surfcrit::geometry::{MeshOptions, Profile, SurfaceConfig, SurfaceSpec};
use surfcrit::harmonics::HarmonicCoeffs;
use surfcrit::study::{check_levels, ElongatedOptions, StudyOptions};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    pub out: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: Format,
    pub threads: Option<usize>,
    #[serde(default = "default_extrapolation")]
    pub extrapolation: String,
    #[serde(default = "default_order")]
    pub order: f64,
}

fn default_levels() -> Vec<u32> {
    vec![2, 3, 4]
}

fn default_format() -> Format {
    Format::Csv
}

fn default_extrapolation() -> String {
    "estimated".into()
}

fn default_order() -> f64 {
    2.0
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            levels: default_levels(),
            out: None,
            format: default_format(),
            threads: None,
            extrapolation: default_extrapolation(),
            order: default_order(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default = "default_azimuthal")]
    pub azimuthal: usize,
    #[serde(default = "default_aspect")]
    pub panel_aspect: f64,
}

fn default_azimuthal() -> usize {
    6
}

fn default_aspect() -> f64 {
    1.0
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { azimuthal: default_azimuthal(), panel_aspect: default_aspect() }
    }
}

/// `[capacity]`: `export_sigma` writes the finest-level charge density (default true).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    #[serde(default = "yes")]
    pub export_sigma: bool,
}

fn yes() -> bool {
    true
}

impl Default for CapacitySection {
    fn default() -> Self {
        CapacitySection { export_sigma: true }
    }
}

/// `[deform_scan]`: the deformation `ρ` (`rho` triples and/or `rho_file`),
/// the ε grid, the largest ε used for the `ε → 0` fit of `deficit/ε²`
/// (default 0.1) and the ε range of the log-log fit (default `[0.1, 0.3]`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformSection {
    pub rho: Option<Vec<(i64, i64, f64)>>,
    pub rho_file: Option<PathBuf>,
    #[serde(default = "default_deform_grid")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_fit_max")]
    pub fit_max: f64,
    #[serde(default = "default_slope_range")]
    pub slope_range: [f64; 2],
}

fn default_deform_grid() -> Vec<f64> {
    vec![0.02, 0.04, 0.06, 0.08, 0.1]
}

fn default_fit_max() -> f64 {
    0.1
}

fn default_slope_range() -> [f64; 2] {
    [0.1, 0.3]
}

impl Default for DeformSection {
    fn default() -> Self {
        DeformSection {
            rho: None,
            rho_file: None,
            epsilons: default_deform_grid(),
            fit_max: default_fit_max(),
            slope_range: default_slope_range(),
        }
    }
}

/// `[elongated]`: constant strength `alpha0` (default 1), the ε values in
/// sweep order (default 1, 1/2, 1/4, 1/8), the profile (`profile = "ellipse"`
/// or `profile_table`), the per-ε panel budget (2000) and level cap (4),
/// revolution meshing (`azimuthal` 6, `panel_aspect` 8), `stop_at_first`
/// (true) and the critical band `tol_band` (1e-3).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElongatedSection {
    #[serde(default = "one")]
    pub alpha0: f64,
    #[serde(default = "default_elongation_grid")]
    pub epsilons: Vec<f64>,
    pub profile: Option<String>,
    pub profile_table: Option<PathBuf>,
    #[serde(default = "default_budget")]
    pub panel_budget: usize,
    #[serde(default = "default_max_level")]
    pub max_level: u32,
    #[serde(default = "default_azimuthal")]
    pub azimuthal: usize,
    #[serde(default = "default_elongated_aspect")]
    pub panel_aspect: f64,
    #[serde(default = "yes")]
    pub stop_at_first: bool,
    #[serde(default = "default_band")]
    pub tol_band: f64,
}

fn one() -> f64 {
    1.0
}

fn default_elongation_grid() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}

fn default_budget() -> usize {
    2000
}

fn default_max_level() -> u32 {
    4
}

fn default_elongated_aspect() -> f64 {
    8.0
}

fn default_band() -> f64 {
    1e-3
}

impl Default for ElongatedSection {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

/// `[bound_state]`: constant strength `alpha0` (required), optional
/// `tol_band` (default five times the extrapolation error of `λ_max`),
/// optional root `bracket`, root `tolerance` (1e-10), the evaluation cap
/// `max_evaluations` (200) and an optional `kappas` grid swept on the
/// finest mesh.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStateSection {
    pub alpha0: Option<f64>,
    pub tol_band: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    #[serde(default = "default_root_tol")]
    pub tolerance: f64,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
    #[serde(default)]
    pub kappas: Vec<f64>,
}

fn default_root_tol() -> f64 {
    1e-10
}

fn default_max_evaluations() -> usize {
    200
}

impl Default for BoundStateSection {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: Option<SurfaceConfig>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub capacity: CapacitySection,
    #[serde(default)]
    pub deform_scan: DeformSection,
    #[serde(default)]
    pub elongated: ElongatedSection,
    #[serde(default)]
    pub bound_state: BoundStateSection,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<RunConfig, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(config_err)?;
        cfg.base_dir = base_dir.map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Checks the invariants shared by all commands; `extrapolates` adds the
    /// three-level requirement of commands that extrapolate.
    pub fn validate(&self, extrapolates: bool) -> Result<(), CliError> {
        check_levels(&self.run.levels).map_err(config_err)?;
        if extrapolates && self.order_rule()?.is_some() && self.run.levels.len() < 3 {
            return Err(CliError::Config(format!(
                "extrapolation needs at least 3 levels, got {:?}; set run.extrapolation = \"none\" to skip it",
                self.run.levels
            )));
        }
        if self.run.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if self.mesh.azimuthal < 3 || !(self.mesh.panel_aspect > 0.0) {
            return Err(CliError::Config("mesh.azimuthal must be >= 3 and mesh.panel_aspect > 0".into()));
        }
        Ok(())
    }

    /// `None` when extrapolation is switched off.
    pub fn order_rule(&self) -> Result<Option<OrderRule>, CliError> {
        let p = self.run.order;
        if !(p > 0.0 && p.is_finite()) {
            return Err(CliError::Config(format!("run.order must be positive, got {p}")));
        }
        match self.run.extrapolation.as_str() {
            "estimated" => Ok(Some(OrderRule::Estimated { nominal: p })),
            "romberg" => Ok(Some(OrderRule::Romberg)),
            "fixed" => Ok(Some(OrderRule::Fixed(p))),
            "none" => Ok(None),
            other => Err(CliError::Config(format!(
                "unknown extrapolation `{other}` (expected estimated, romberg, fixed or none)"
            ))),
        }
    }

    pub fn study_options(&self) -> Result<StudyOptions, CliError> {
        Ok(StudyOptions {
            rule: self.order_rule()?.unwrap_or_default(),
            mesh: MeshOptions { revolution_azimuthal: self.mesh.azimuthal, revolution_panel_aspect: self.mesh.panel_aspect },
        })
    }

    pub fn surface(&self) -> Result<SurfaceSpec, CliError> {
        let surface = self.surface.clone().ok_or_else(|| CliError::Config("missing [surface] section".into()))?;
        surface.into_spec(self.base_dir.as_deref()).map_err(config_err)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn deformation(&self) -> Result<HarmonicCoeffs, CliError> {
        let d = &self.deform_scan;
        let mut triples = match &d.rho_file {
            Some(p) => HarmonicCoeffs::from_file(&self.resolve(p)).map_err(config_err)?.triples(),
            None => Vec::new(),
        };
        for &(n, m, v) in d.rho.iter().flatten() {
            let n = usize::try_from(n).map_err(|_| CliError::Config(format!("negative harmonic order {n}")))?;
            triples.push((n, m, v));
        }
        if d.rho.is_none() && d.rho_file.is_none() {
            return Err(CliError::Config("[deform_scan] needs `rho` or `rho_file`".into()));
        }
        if d.epsilons.is_empty() || d.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(CliError::Config(format!("deform_scan.epsilons must be positive, got {:?}", d.epsilons)));
        }
        HarmonicCoeffs::from_triples(&triples).map_err(config_err)
    }

    pub fn elongation(&self) -> Result<(Profile, ElongatedOptions), CliError> {
        let e = &self.elongated;
        let profile = match (&e.profile_table, e.profile.as_deref()) {
            (Some(p), _) => Profile::from_table_file(&self.resolve(p)).map_err(config_err)?,
            (None, None | Some("ellipse")) => Profile::Ellipse,
            (None, Some(other)) => return Err(CliError::Config(format!("unknown built-in profile `{other}`"))),
        };
        profile.validate().map_err(config_err)?;
        if e.epsilons.is_empty() || e.epsilons.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(CliError::Config(format!("elongated.epsilons must be positive, got {:?}", e.epsilons)));
        }
        if !(e.alpha0 > 0.0 && e.alpha0.is_finite()) {
            return Err(CliError::Config(format!("elongated.alpha0 must be positive, got {}", e.alpha0)));
        }
        let opts = ElongatedOptions {
            alpha0: e.alpha0,
            panel_budget: e.panel_budget,
            max_level: e.max_level,
            mesh: MeshOptions { revolution_azimuthal: e.azimuthal, revolution_panel_aspect: e.panel_aspect },
            stop_at_first: e.stop_at_first,
            tol_band: e.tol_band,
        };
        Ok((profile, opts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply() {
        let cfg = RunConfig::parse("[surface]\nshape = \"sphere\"\nradius = 2.0\n", None).unwrap();
        cfg.validate(true).unwrap();
        assert_eq!(cfg.run.levels, vec![2, 3, 4]);
        assert_eq!(cfg.run.format, Format::Csv);
        assert_eq!(cfg.elongated.epsilons, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(cfg.bound_state.tolerance, 1e-10);
        assert_eq!(cfg.surface().unwrap(), SurfaceSpec::sphere(2.0));
    }

    #[test]
    fn rejects_bad_levels_and_keys() {
        let bad = |text: &str| RunConfig::parse(text, None).and_then(|c| c.validate(true)).is_err();
        assert!(bad("[run]\nlevels = [3, 2, 4]\n"));
        assert!(bad("[run]\nlevels = [1, 2]\n"));
        let two = RunConfig::parse("[run]\nlevels = [1, 2]\n", None).unwrap();
        two.validate(false).unwrap();
        assert!(bad("[run]\nextrapolation = \"magic\"\n"));
        assert!(bad("[run]\nlevelz = [1, 2, 3]\n"));
        assert!(!bad("[run]\nlevels = [1, 2]\nextrapolation = \"none\"\n"));
    }

    #[test]
    fn deformation_needs_a_profile() {
        let cfg = RunConfig::parse("", None).unwrap();
        assert!(cfg.deformation().is_err());
        let cfg = RunConfig::parse("[deform_scan]\nrho = [[2, 0, 1.0]]\nepsilons = [0.1]\n", None).unwrap();
        assert_eq!(cfg.deformation().unwrap().get(2, 0), 1.0);
        let cfg = RunConfig::parse("[deform_scan]\nrho = [[2, 0, 1.0]]\nepsilons = [-0.1]\n", None).unwrap();
        assert!(cfg.deformation().is_err());
    }
}
