use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Deserialize;

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::harmonics::{HarmonicCoeffs, SphereQuadrature};
use crate::quadrature::gauss_legendre_on;

/// Declarative description of a closed surface.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSpec {
    Sphere { radius: f64 },
    /// Axis-aligned ellipsoid with semi-axes along x, y, z.
    Ellipsoid { axes: [f64; 3] },
    /// `r(polar, azimuth) = r0 (1 + ε ρ(polar, azimuth))`.
    RadialHarmonic { r0: f64, epsilon: f64, rho: HarmonicCoeffs },
    /// `(ε f(v) cos u, ε f(v) sin u, v / ε)` for `v ∈ (-1, 1)`.
    Revolution { profile: Profile, epsilon: f64 },
}

impl SurfaceSpec {
    pub fn sphere(radius: f64) -> SurfaceSpec {
        SurfaceSpec::Sphere { radius }
    }

    pub fn ellipsoid(a: f64, b: f64, c: f64) -> SurfaceSpec {
        SurfaceSpec::Ellipsoid { axes: [a, b, c] }
    }

    pub fn radial_harmonic(r0: f64, epsilon: f64, rho: HarmonicCoeffs) -> SurfaceSpec {
        SurfaceSpec::RadialHarmonic { r0, epsilon, rho }
    }

    pub fn revolution(profile: Profile, epsilon: f64) -> SurfaceSpec {
        SurfaceSpec::Revolution { profile, epsilon }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            SurfaceSpec::Sphere { radius } => positive("radius", *radius),
            SurfaceSpec::Ellipsoid { axes } => axes.iter().try_for_each(|a| positive("semi-axis", *a)),
            SurfaceSpec::RadialHarmonic { r0, epsilon, rho } => {
                positive("r0", *r0)?;
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return Err(Error::InvalidSpec(format!("epsilon must be >= 0, got {epsilon}")));
                }
                let value = epsilon * rho.sup_norm();
                if value >= 1.0 {
                    return Err(Error::Embedding { value });
                }
                Ok(())
            }
            SurfaceSpec::Revolution { profile, epsilon } => {
                positive("epsilon", *epsilon)?;
                profile.validate()
            }
        }
    }

    pub fn is_sphere_topology_radial(&self) -> bool {
        !matches!(self, SurfaceSpec::Revolution { .. })
    }

    /// Maps a unit direction to the surface (sphere-like specs only).
    pub(crate) fn radial_point(&self, u: &Vector3<f64>) -> Vector3<f64> {
        match self {
            SurfaceSpec::Sphere { radius } => u * *radius,
            SurfaceSpec::Ellipsoid { axes } => Vector3::new(axes[0] * u.x, axes[1] * u.y, axes[2] * u.z),
            SurfaceSpec::RadialHarmonic { r0, epsilon, rho } => {
                let (polar, azimuth) = polar_azimuth(u);
                u * (r0 * (1.0 + epsilon * rho.evaluate(polar, azimuth)))
            }
            SurfaceSpec::Revolution { .. } => unreachable!("revolution surfaces are not radial graphs"),
        }
    }

    /// Area of the smooth surface (closed form or high-order quadrature).
    pub fn exact_area(&self) -> f64 {
        match self {
            SurfaceSpec::Sphere { radius } => 4.0 * PI * radius * radius,
            SurfaceSpec::Ellipsoid { axes: [a, b, c] } => {
                let q = SphereQuadrature::new(160);
                // the rule's weights carry the sin(polar) factor
                q.integrate(|t, p| {
                    let (st, ct) = t.sin_cos();
                    let (sp, cp) = p.sin_cos();
                    ((b * c * st * cp).powi(2) + (a * c * st * sp).powi(2) + (a * b * ct).powi(2)).sqrt()
                })
            }
            SurfaceSpec::RadialHarmonic { r0, epsilon, rho } => {
                let q = SphereQuadrature::new(4 * rho.n_max() + 80);
                q.integrate(|t, p| {
                    let r = r0 * (1.0 + epsilon * rho.evaluate(t, p));
                    let (g1, g2) = rho.gradient(t, p);
                    let grad2 = (r0 * epsilon).powi(2) * (g1 * g1 + g2 * g2);
                    r * (r * r + grad2).sqrt()
                })
            }
            SurfaceSpec::Revolution { profile, epsilon } => profile.surface_area(*epsilon),
        }
    }

    /// Largest extent, used to scale root-finding brackets.
    pub fn diameter_hint(&self) -> f64 {
        match self {
            SurfaceSpec::Sphere { radius } => 2.0 * radius,
            SurfaceSpec::Ellipsoid { axes } => 2.0 * axes.iter().cloned().fold(0.0, f64::max),
            SurfaceSpec::RadialHarmonic { r0, epsilon, rho } => 2.0 * r0 * (1.0 + epsilon * rho.sup_norm()),
            SurfaceSpec::Revolution { epsilon, .. } => (2.0 / epsilon).max(0.0),
        }
    }

    /// Meridian length of a surface of revolution (`None` for other shapes).
    pub fn meridian_length(&self) -> Option<f64> {
        let SurfaceSpec::Revolution { profile, epsilon } = self else {
            return None;
        };
        let (ts, ws) = gauss_legendre_on(400, 0.0, PI);
        Some(
            ts.iter()
                .zip(&ws)
                .map(|(t, w)| {
                    let v = -t.cos();
                    let dv = t.sin();
                    let dr = epsilon * profile.derivative(v) * dv;
                    let dz = dv / epsilon;
                    let dr = if dr.is_finite() { dr } else { 0.0 };
                    w * (dr * dr + dz * dz).sqrt()
                })
                .sum(),
        )
    }

    /// Parses a `[surface]`-style TOML table (see [`SurfaceConfig`]).
    pub fn from_toml_str(text: &str) -> Result<SurfaceSpec> {
        let cfg: SurfaceConfig =
            toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        cfg.into_spec(None)
    }
}

/// Spherical angles `(polar, azimuth)` of a non-zero vector.
pub fn polar_azimuth(u: &Vector3<f64>) -> (f64, f64) {
    let r = u.norm();
    let polar = (u.z / r).clamp(-1.0, 1.0).acos();
    let mut azimuth = u.y.atan2(u.x);
    if azimuth < 0.0 {
        azimuth += 2.0 * PI;
    }
    (polar, azimuth)
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::Sphere { radius } => write!(f, "sphere(radius={radius})"),
            SurfaceSpec::Ellipsoid { axes } => {
                write!(f, "ellipsoid(axes={},{},{})", axes[0], axes[1], axes[2])
            }
            SurfaceSpec::RadialHarmonic { r0, epsilon, rho } => {
                write!(f, "radial_harmonic(r0={r0},epsilon={epsilon},rho=")?;
                let terms: Vec<String> = rho.triples().iter().map(|(n, m, v)| format!("({n},{m},{v})")).collect();
                write!(f, "[{}])", terms.join(";"))
            }
            SurfaceSpec::Revolution { profile, epsilon } => {
                write!(f, "revolution(profile={},epsilon={epsilon})", profile.name())
            }
        }
    }
}

/// Configuration keys for a surface:
///
/// | key | shapes | meaning |
/// |-----|--------|---------|
/// | `shape` | all | `sphere`, `ellipsoid`, `radial_harmonic`, `revolution` |
/// | `radius` | sphere | radius |
/// | `axes` | ellipsoid | `[a, b, c]` semi-axes along x, y, z |
/// | `r0` | radial_harmonic | base radius (default 1) |
/// | `epsilon` | radial_harmonic, revolution | deformation / elongation parameter |
/// | `rho` | radial_harmonic | list of `[n, m, value]` triples |
/// | `rho_file` | radial_harmonic | coefficient file with `n m value` lines |
/// | `profile` | revolution | `ellipse` (built-in) |
/// | `profile_table` | revolution | two-column `v f(v)` table, overrides `profile` |
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub shape: String,
    pub radius: Option<f64>,
    pub axes: Option<[f64; 3]>,
    pub r0: Option<f64>,
    pub epsilon: Option<f64>,
    pub rho: Option<Vec<(i64, i64, f64)>>,
    pub rho_file: Option<PathBuf>,
    pub profile: Option<String>,
    pub profile_table: Option<PathBuf>,
}

impl SurfaceConfig {
    /// Builds and validates the spec; relative paths resolve against `base_dir`.
    pub fn into_spec(self, base_dir: Option<&Path>) -> Result<SurfaceSpec> {
        let resolve = |p: &Path| match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        };
        let missing = |key: &str| Error::InvalidSpec(format!("shape `{}` needs `{key}`", self.shape));
        let spec = match self.shape.as_str() {
            "sphere" => SurfaceSpec::Sphere { radius: self.radius.ok_or_else(|| missing("radius"))? },
            "ellipsoid" | "spheroid" => SurfaceSpec::Ellipsoid { axes: self.axes.ok_or_else(|| missing("axes"))? },
            "radial_harmonic" => {
                let mut rho = match &self.rho_file {
                    Some(p) => HarmonicCoeffs::from_file(&resolve(p))?,
                    None => HarmonicCoeffs::zeros(0),
                };
                if let Some(triples) = &self.rho {
                    let mut all = rho.triples();
                    for &(n, m, v) in triples {
                        if n < 0 {
                            return Err(Error::HarmonicIndex { n, m });
                        }
                        all.push((n as usize, m, v));
                    }
                    rho = HarmonicCoeffs::from_triples(&all)?;
                }
                SurfaceSpec::RadialHarmonic {
                    r0: self.r0.unwrap_or(1.0),
                    epsilon: self.epsilon.ok_or_else(|| missing("epsilon"))?,
                    rho,
                }
            }
            "revolution" => {
                let profile = match (&self.profile_table, self.profile.as_deref()) {
                    (Some(p), _) => Profile::from_table_file(&resolve(p))?,
                    (None, None | Some("ellipse")) => Profile::Ellipse,
                    (None, Some(other)) => {
                        return Err(Error::InvalidSpec(format!("unknown built-in profile `{other}`")))
                    }
                };
                SurfaceSpec::Revolution { profile, epsilon: self.epsilon.ok_or_else(|| missing("epsilon"))? }
            }
            other => return Err(Error::InvalidSpec(format!("unknown shape `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}
