//! Mesh-convergence studies. Each study measures a quantity on a sequence of
//! refinement levels and extrapolates the finest three with [`richardson`].
//!
//! The deformation scan uses a mesh-consistent product: at each level the
//! product `S̄ / λ_max(Γ)` is taken with the mesh area, and the deficit is
//! measured against the undeformed sphere meshed at the same level. The
//! `O(h²)` bias of the sphere itself then cancels before extrapolation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bs_operator::{gamma_inf_norm_of, lambda_max, BsAssembler, DensityWeight};
use crate::capacity::solve_equilibrium_with;
use crate::error::{Error, Result};
use crate::extrapolate::{richardson, Extrapolated, OrderRule};
use crate::geometry::{build_mesh_with, surface_radius, MeshOptions, Profile, SurfaceMesh, SurfaceSpec};
use crate::harmonics::HarmonicCoeffs;
use crate::perturbation::{predict, series_from_profile, PerturbationSeries, Prediction};
use crate::spectrum::{
    classify_lambda, default_tol_band, ground_state_with, Certificate, Classification, GroundState,
    GroundStateOptions,
};

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    pub rule: OrderRule,
    pub mesh: MeshOptions,
}

/// Checks that levels are strictly increasing and non-empty.
pub fn check_levels(levels: &[u32]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("at least one mesh level is required".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("levels must be strictly increasing, got {levels:?}")));
    }
    Ok(())
}

/// Extrapolates when at least three values are available.
fn limit(values: &[f64], rule: OrderRule) -> Option<Extrapolated> {
    (values.len() >= 3).then(|| richardson(values, rule).expect("three or more values"))
}

/// Everything measured on one mesh of a surface with a constant density.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceLevel {
    pub level: u32,
    pub n_panels: usize,
    pub mesh_area: f64,
    /// `λ_max(Γ(0))`; the critical constant strength is its inverse.
    pub lambda_gamma: f64,
    pub critical_constant_strength: f64,
    /// `[α̂]_c` for the constant relative density `1/S`.
    pub critical_global_strength: f64,
    pub interaction_radius: f64,
    pub gamma_inf: f64,
    pub power_iterations: usize,
    pub perron_positive: bool,
    pub collocation_asymmetry: f64,
    pub capacity: f64,
    pub capacity_residual: f64,
    pub gauss_energy: f64,
    pub sigma_spread: f64,
    pub sigma_positive: bool,
    /// `λ_max` with the strength `4πCσ`.
    pub lambda_equilibrium: f64,
}

/// Measures one mesh. The equilibrium density is returned alongside.
pub fn measure_level(mesh: &SurfaceMesh) -> Result<(SurfaceLevel, Vec<f64>)> {
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    let report = lambda_max(&op, &DensityWeight::constant_strength(mesh, 1.0)?)?;
    let cap = solve_equilibrium_with(&op)?;
    let strength = DensityWeight::strength(cap.sigma.iter().map(|s| FOUR_PI * cap.capacity * s.max(0.0)).collect())?;
    let lambda_equilibrium = lambda_max(&op, &strength)?.lambda_max;
    let area = mesh.total_area();
    let row = SurfaceLevel {
        level: mesh.level().unwrap_or(0),
        n_panels: mesh.len(),
        mesh_area: area,
        lambda_gamma: report.lambda_max,
        critical_constant_strength: 1.0 / report.lambda_max,
        critical_global_strength: area / report.lambda_max,
        interaction_radius: area / (FOUR_PI * report.lambda_max),
        gamma_inf: gamma_inf_norm_of(&op)?.value,
        power_iterations: report.iterations,
        perron_positive: report.is_perron_positive(),
        collocation_asymmetry: op.collocation_asymmetry().unwrap_or(f64::NAN),
        capacity: cap.capacity,
        capacity_residual: cap.residual,
        gauss_energy: cap.gauss_energy,
        sigma_spread: cap.sigma_spread(mesh),
        sigma_positive: cap.sigma_positive,
        lambda_equilibrium,
    };
    Ok((row, cap.sigma))
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceLimits {
    pub lambda_gamma: Extrapolated,
    pub critical_constant_strength: Extrapolated,
    pub critical_global_strength: Extrapolated,
    pub interaction_radius: Extrapolated,
    pub gamma_inf: Extrapolated,
    pub capacity: Extrapolated,
    pub lambda_equilibrium: Extrapolated,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceStudy {
    pub surface: String,
    pub exact_area: f64,
    pub rows: Vec<SurfaceLevel>,
    /// Present when three or more levels were measured.
    pub limits: Option<SurfaceLimits>,
    /// Equilibrium density on the finest mesh.
    #[serde(skip)]
    pub finest_sigma: Vec<f64>,
    #[serde(skip)]
    pub finest_mesh: Option<SurfaceMesh>,
}

pub fn surface_study(spec: &SurfaceSpec, levels: &[u32], opts: &StudyOptions) -> Result<SurfaceStudy> {
    check_levels(levels)?;
    let mut rows = Vec::with_capacity(levels.len());
    let mut finest = None;
    for &level in levels {
        let mesh = build_mesh_with(spec, level, &opts.mesh)?;
        let (row, sigma) = measure_level(&mesh)?;
        rows.push(row);
        finest = Some((mesh, sigma));
    }
    let col = |f: fn(&SurfaceLevel) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let limits = (rows.len() >= 3).then(|| {
        let ex = |f: fn(&SurfaceLevel) -> f64| limit(&col(f), opts.rule).expect("three levels");
        SurfaceLimits {
            lambda_gamma: ex(|r| r.lambda_gamma),
            critical_constant_strength: ex(|r| r.critical_constant_strength),
            critical_global_strength: ex(|r| r.critical_global_strength),
            interaction_radius: ex(|r| r.interaction_radius),
            gamma_inf: ex(|r| r.gamma_inf),
            capacity: ex(|r| r.capacity),
            lambda_equilibrium: ex(|r| r.lambda_equilibrium),
        }
    });
    let (mesh, sigma) = finest.expect("levels is non-empty");
    Ok(SurfaceStudy {
        surface: spec.to_string(),
        exact_area: spec.exact_area(),
        rows,
        limits,
        finest_sigma: sigma,
        finest_mesh: Some(mesh),
    })
}

/// Least-squares fit `y = c₀ + c₁ x + … + c_d x^d`, coefficients in ascending
/// order. One point beyond the unknowns is required so the fit is overdetermined.
pub fn polynomial_fit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() < degree + 2 {
        return Err(Error::InvalidArgument(format!(
            "a degree-{degree} fit needs at least {} points, got {}",
            degree + 2,
            xs.len().min(ys.len())
        )));
    }
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| xs[i].powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let coeffs = a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(coeffs.iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw {
    pub slope: f64,
    pub prefactor: f64,
    pub points: usize,
}

/// Straight-line fit of `ln y` against `ln x`; needs two or more positive samples.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLaw> {
    if ys.iter().any(|y| *y <= 0.0) || xs.iter().any(|x| *x <= 0.0) {
        return Err(Error::InvalidArgument("a log-log fit needs positive samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let c = polynomial_fit(&lx, &ly, 1)?;
    Ok(PowerLaw { slope: c[1], prefactor: c[0].exp(), points: xs.len() })
}

/// One ε of a deformation scan.
#[derive(Debug, Clone, Serialize)]
pub struct DeformRow {
    pub epsilon: f64,
    /// Critical constant strength `1/λ_max(Γ)` per level.
    pub level_alpha: Vec<f64>,
    /// Mesh-consistent deficit per level.
    pub level_deficit: Vec<f64>,
    /// Extrapolated `α_ε` (finest level when fewer than three levels).
    pub alpha: f64,
    /// `S̄_ε` of the smooth surface.
    pub sbar: f64,
    pub deficit: f64,
    pub deficit_error: f64,
    /// `1 - deficit`.
    pub product: f64,
    pub series: Prediction,
}

impl DeformRow {
    pub fn deficit_over(&self, power: i32) -> f64 {
        self.deficit / self.epsilon.powi(power)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeformScan {
    pub levels: Vec<u32>,
    pub series: PerturbationSeries,
    /// `S̄ / λ_max(Γ)` of the undeformed sphere per level.
    pub reference_product: Vec<f64>,
    pub rows: Vec<DeformRow>,
}

impl DeformScan {
    /// `ε → 0` limit of `deficit/ε²` from a quadratic fit in ε over rows
    /// with `ε ≤ eps_max`.
    pub fn second_order_limit(&self, eps_max: f64) -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.rows.iter().filter(|r| r.epsilon <= eps_max).map(|r| (r.epsilon, r.deficit_over(2))).unzip();
        Ok(polynomial_fit(&xs, &ys, 2)?[0])
    }

    /// Log-log fit of the deficit over `ε ∈ [lo, hi]`.
    pub fn power_law(&self, lo: f64, hi: f64) -> Result<PowerLaw> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| r.epsilon >= lo && r.epsilon <= hi)
            .map(|r| (r.epsilon, r.deficit))
            .unzip();
        power_law_fit(&xs, &ys)
    }
}

fn mesh_product(mesh: &SurfaceMesh) -> Result<(f64, f64)> {
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    let lambda = lambda_max(&op, &DensityWeight::constant_strength(mesh, 1.0)?)?.lambda_max;
    Ok((1.0 / lambda, surface_radius(mesh.total_area())? / lambda))
}

/// BEM and series values of `α_ε S̄_ε` for `r = 1 + ε ρ` over an ε grid.
pub fn deform_scan(rho: &HarmonicCoeffs, epsilons: &[f64], levels: &[u32], opts: &StudyOptions) -> Result<DeformScan> {
    check_levels(levels)?;
    if epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!("epsilon grid must be positive, got {epsilons:?}")));
    }
    let specs: Vec<SurfaceSpec> =
        epsilons.iter().map(|&e| SurfaceSpec::radial_harmonic(1.0, e, rho.clone())).collect();
    for s in &specs {
        s.validate()?;
    }
    let sphere = SurfaceSpec::sphere(1.0);
    let mut reference_product = Vec::with_capacity(levels.len());
    let mut per_level = vec![Vec::with_capacity(levels.len()); specs.len()];
    for &level in levels {
        reference_product.push(mesh_product(&build_mesh_with(&sphere, level, &opts.mesh)?)?.1);
        for (k, spec) in specs.iter().enumerate() {
            per_level[k].push(mesh_product(&build_mesh_with(spec, level, &opts.mesh)?)?);
        }
    }
    let series = series_from_profile(rho);
    let rows = specs
        .iter()
        .zip(epsilons)
        .zip(per_level)
        .map(|((spec, &epsilon), vals)| {
            let level_alpha: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let level_deficit: Vec<f64> = vals.iter().zip(&reference_product).map(|(v, p0)| p0 - v.1).collect();
            let finest = |v: &[f64]| *v.last().expect("levels is non-empty");
            let alpha = limit(&level_alpha, opts.rule).map_or(finest(&level_alpha), |e| e.value);
            let (deficit, deficit_error) =
                limit(&level_deficit, opts.rule).map_or((finest(&level_deficit), f64::NAN), |e| (e.value, e.error_estimate));
            Ok(DeformRow {
                epsilon,
                alpha,
                sbar: surface_radius(spec.exact_area())?,
                deficit,
                deficit_error,
                product: 1.0 - deficit,
                series: predict(&series, epsilon),
                level_alpha,
                level_deficit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeformScan { levels: levels.to_vec(), series, reference_product, rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElongatedOptions {
    pub alpha0: f64,
    /// Finest level with at most this many panels is used for each ε.
    pub panel_budget: usize,
    pub max_level: u32,
    pub mesh: MeshOptions,
    pub stop_at_first: bool,
    /// Half-width of the critical band used for the verdict.
    pub tol_band: f64,
}

impl Default for ElongatedOptions {
    fn default() -> Self {
        ElongatedOptions {
            alpha0: 1.0,
            panel_budget: 2000,
            max_level: 4,
            mesh: MeshOptions { revolution_azimuthal: 6, revolution_panel_aspect: 8.0 },
            stop_at_first: true,
            tol_band: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ElongatedRow {
    pub epsilon: f64,
    /// Area of the smooth surface.
    pub area: f64,
    pub mesh_area: f64,
    pub level: u32,
    pub n_panels: usize,
    pub certificate: Certificate,
    pub lambda_max: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElongatedSweep {
    pub rows: Vec<ElongatedRow>,
    pub first_certified: Option<f64>,
    /// `‖Γ_ε‖_∞` strictly decreases along the sweep.
    pub monotone: bool,
}

/// Finest level of `spec` whose mesh fits the panel budget.
pub fn mesh_within_budget(spec: &SurfaceSpec, budget: usize, max_level: u32, opts: &MeshOptions) -> Result<SurfaceMesh> {
    let mut best = build_mesh_with(spec, 0, opts)?;
    if best.len() > budget {
        return Err(Error::InvalidArgument(format!(
            "level 0 already has {} panels, above the budget of {budget}",
            best.len()
        )));
    }
    for level in 1..=max_level {
        let m = build_mesh_with(spec, level, opts)?;
        if m.len() > budget {
            break;
        }
        best = m;
    }
    Ok(best)
}

/// Sweeps the elongation parameter in the given order, certifying the
/// absence of bound states with `2 α₀ ‖Γ_ε‖_∞ < 1`.
pub fn elongated_sweep(profile: &Profile, epsilons: &[f64], opts: &ElongatedOptions) -> Result<ElongatedSweep> {
    if !(opts.alpha0 > 0.0 && opts.alpha0.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha0 must be positive, got {}", opts.alpha0)));
    }
    let mut rows = Vec::new();
    let mut first_certified = None;
    for &epsilon in epsilons {
        let spec = SurfaceSpec::revolution(profile.clone(), epsilon);
        let mesh = mesh_within_budget(&spec, opts.panel_budget, opts.max_level, &opts.mesh)?;
        let assembler = BsAssembler::new(&mesh);
        let op = assembler.operator(0.0)?;
        let gamma_inf = gamma_inf_norm_of(&op)?.value;
        let threshold = 2.0 * opts.alpha0 * gamma_inf;
        let certificate = Certificate { alpha0: opts.alpha0, gamma_inf, threshold, holds: threshold < 1.0 };
        let lambda = lambda_max(&op, &DensityWeight::constant_strength(&mesh, opts.alpha0)?)?.lambda_max;
        rows.push(ElongatedRow {
            epsilon,
            area: spec.exact_area(),
            mesh_area: mesh.total_area(),
            level: mesh.level().unwrap_or(0),
            n_panels: mesh.len(),
            certificate,
            lambda_max: lambda,
            classification: classify_lambda(lambda, opts.tol_band),
        });
        if certificate.holds && first_certified.is_none() {
            first_certified = Some(epsilon);
            if opts.stop_at_first {
                break;
            }
        }
    }
    let monotone = rows.windows(2).all(|w| w[1].certificate.gamma_inf < w[0].certificate.gamma_inf);
    Ok(ElongatedSweep { rows, first_certified, monotone })
}

/// s-wave eigenvalue of `α₀Γ(iκ)` on a sphere of radius `R`.
pub fn sphere_s_wave_lambda(alpha0: f64, radius: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        alpha0 * radius
    } else {
        alpha0 * -(-2.0 * kappa * radius).exp_m1() / (2.0 * kappa)
    }
}

/// Root of `sphere_s_wave_lambda = 1`, or `None` when `α₀ R ≤ 1`.
pub fn sphere_kappa_star(alpha0: f64, radius: f64) -> Option<f64> {
    if alpha0 * radius <= 1.0 {
        return None;
    }
    let f = |k: f64| sphere_s_wave_lambda(alpha0, radius, k) - 1.0;
    // λ ≤ α₀/(2κ), so the root lies below α₀/2
    let (mut lo, mut hi) = (0.0, alpha0 / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStateLevel {
    pub level: u32,
    pub n_panels: usize,
    pub lambda_at_zero: f64,
    pub ground_state: Option<GroundState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStateStudy {
    pub alpha0: f64,
    pub rows: Vec<BoundStateLevel>,
    /// Best estimate of `λ_max(α₀Γ(0))`: extrapolated, else finest.
    pub lambda_at_zero: f64,
    pub lambda_error: f64,
    pub tol_band: f64,
    pub classification: Classification,
    pub kappa_star: Option<Extrapolated>,
    /// Radial-oracle `κ*` for spheres.
    pub oracle_kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundStateOptions {
    pub study: StudyOptions,
    pub ground: GroundStateOptions,
    /// Overrides the `5 ×` error-estimate band.
    pub tol_band: Option<f64>,
}

/// Classifies a constant strength `α₀` over several levels and, when
/// supercritical, extrapolates the ground-state `κ*`.
pub fn bound_state_study(spec: &SurfaceSpec, alpha0: f64, levels: &[u32], opts: &BoundStateOptions) -> Result<BoundStateStudy> {
    check_levels(levels)?;
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha0 must be positive, got {alpha0}")));
    }
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let mesh = build_mesh_with(spec, level, &opts.study.mesh)?;
        let alpha = DensityWeight::constant_strength(&mesh, alpha0)?;
        let assembler = BsAssembler::new(&mesh);
        let lambda_at_zero = lambda_max(&assembler.operator(0.0)?, &alpha)?.lambda_max;
        let ground_state = if lambda_at_zero > 1.0 {
            Some(ground_state_with(&assembler, &alpha, &opts.ground)?)
        } else {
            None
        };
        rows.push(BoundStateLevel { level, n_panels: mesh.len(), lambda_at_zero, ground_state });
    }
    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda_at_zero).collect();
    let n = lambdas.len();
    let (lambda_at_zero, lambda_error) = match limit(&lambdas, opts.study.rule) {
        Some(e) => (e.value, e.error_estimate),
        None if n == 2 => (lambdas[1], (lambdas[1] - lambdas[0]).abs()),
        None => (lambdas[0], 0.0),
    };
    let tol_band = opts.tol_band.unwrap_or_else(|| default_tol_band(lambda_error));
    let classification = classify_lambda(lambda_at_zero, tol_band);
    let kappas: Option<Vec<f64>> = rows.iter().map(|r| r.ground_state.map(|g| g.kappa_star)).collect();
    let kappa_star = match (classification, kappas) {
        (Classification::Supercritical, Some(k)) => limit(&k, opts.study.rule),
        _ => None,
    };
    let oracle_kappa = match spec {
        SurfaceSpec::Sphere { radius } => sphere_kappa_star(alpha0, *radius),
        _ => None,
    };
    Ok(BoundStateStudy { alpha0, rows, lambda_at_zero, lambda_error, tol_band, classification, kappa_star, oracle_kappa })
}
