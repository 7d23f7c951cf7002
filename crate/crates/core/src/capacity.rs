//! Electrostatic capacity, equilibrium charge density and the Gauss energy.
//!
//! The collocated first-kind system `4π Σ_j G_ij σ_j = 1/C` is solved together
//! with the unit-charge condition `Σ_j a_j σ_j = 1` as one bordered system by
//! an LU factorization. Because `σ` satisfies the collocation equations,
//! its energy `4π σᵀ A G σ` equals `1/C` up to the solve error.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::Serialize;

use crate::bs_operator::{lambda_max, BsAssembler, BsOperator, DensityWeight};
use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub capacity: f64,
    /// Per-panel charge density with `Σ σ_j a_j = 1`.
    #[serde(skip)]
    pub sigma: Vec<f64>,
    /// `max_i |4π (Gσ)_i - 1/C|` over the collocation points.
    pub residual: f64,
    /// `E(σ)`; equals `1/C` up to the solve error.
    pub gauss_energy: f64,
    pub sigma_positive: bool,
    pub n_panels: usize,
    pub level: Option<u32>,
}

impl CapacityResult {
    /// `max_j |σ_j / mean - 1|` with `mean = 1/S`.
    pub fn sigma_spread(&self, mesh: &SurfaceMesh) -> f64 {
        let mean = 1.0 / mesh.total_area();
        self.sigma.iter().map(|s| (s / mean - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn to_keyed_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "capacity = {:.15e}", self.capacity).unwrap();
        writeln!(s, "inverse_capacity = {:.15e}", 1.0 / self.capacity).unwrap();
        writeln!(s, "gauss_energy = {:.15e}", self.gauss_energy).unwrap();
        writeln!(s, "residual = {:.3e}", self.residual).unwrap();
        writeln!(s, "sigma_positive = {}", self.sigma_positive).unwrap();
        writeln!(s, "panels = {}", self.n_panels).unwrap();
        writeln!(s, "level = {}", self.level.map_or("none".to_string(), |l| l.to_string())).unwrap();
        s
    }

    /// Per-panel CSV: `panel,cx,cy,cz,area,sigma`.
    pub fn sigma_csv(&self, mesh: &SurfaceMesh) -> String {
        let mut s = String::from("panel,cx,cy,cz,area,sigma\n");
        for (i, (c, a)) in mesh.centroids().iter().zip(mesh.areas()).enumerate() {
            writeln!(s, "{i},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", c.x, c.y, c.z, a, self.sigma[i]).unwrap();
        }
        s
    }

    pub fn write_sigma_csv(&self, mesh: &SurfaceMesh, path: &Path) -> Result<()> {
        std::fs::write(path, self.sigma_csv(mesh))?;
        Ok(())
    }
}

pub fn solve_equilibrium(mesh: &SurfaceMesh) -> Result<CapacityResult> {
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    solve_equilibrium_with(&op)
}

/// Solves the equilibrium problem with an already assembled κ = 0 operator.
pub fn solve_equilibrium_with(op: &BsOperator) -> Result<CapacityResult> {
    if op.kappa() != 0.0 {
        return Err(Error::InvalidArgument("capacity needs the kappa = 0 operator".into()));
    }
    let mesh = op.mesh();
    let n = mesh.len();
    let a = mesh.areas();
    // [4πG  -1] [σ]   [0]
    // [ aᵀ   0] [c] = [1]
    let bordered = Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => FOUR_PI * op.entry(i, j),
        (true, false) => -1.0,
        (false, true) => a[j],
        (false, false) => 0.0,
    });
    let rhs = Mat::from_fn(n + 1, 1, |i, _| if i == n { 1.0 } else { 0.0 });
    let x = bordered.partial_piv_lu().solve(&rhs);
    let sigma: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let c = x[(n, 0)];
    if !(c > 0.0 && c.is_finite()) || sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::Singular);
    }
    let capacity = 1.0 / c;
    let residual = (0..n)
        .map(|i| {
            let p: f64 = (0..n).map(|j| op.entry(i, j) * sigma[j]).sum();
            (FOUR_PI * p - c).abs()
        })
        .fold(0.0, f64::max);
    let gauss_energy = energy(op, &sigma);
    Ok(CapacityResult {
        capacity,
        sigma_positive: sigma.iter().all(|s| *s > 0.0),
        sigma,
        residual,
        gauss_energy,
        n_panels: n,
        level: mesh.level(),
    })
}

/// Tolerance on `Σ μ_j a_j = 1` for [`gauss_energy`].
pub const UNIT_CHARGE_TOL: f64 = 1e-10;

/// `∬ μ(x) μ(y) / |x - y| dA dA` for a unit-charge density.
pub fn gauss_energy(mesh: &SurfaceMesh, mu: &[f64]) -> Result<f64> {
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    gauss_energy_with(&op, mu)
}

pub fn gauss_energy_with(op: &BsOperator, mu: &[f64]) -> Result<f64> {
    let mesh = op.mesh();
    if mu.len() != mesh.len() {
        return Err(Error::InvalidArgument(format!("{} values for {} panels", mu.len(), mesh.len())));
    }
    if let Some(k) = mu.iter().position(|m| !(*m >= 0.0 && m.is_finite())) {
        return Err(Error::InvalidArgument(format!("density is negative at panel {k}")));
    }
    let total: f64 = mu.iter().zip(mesh.areas()).map(|(m, a)| m * a).sum();
    if (total - 1.0).abs() > UNIT_CHARGE_TOL {
        return Err(Error::InvalidArgument(format!("density carries charge {total}, expected 1")));
    }
    Ok(energy(op, mu))
}

/// `4π μᵀ A G μ`, evaluated through the symmetric form.
fn energy(op: &BsOperator, mu: &[f64]) -> f64 {
    let sa: Vec<f64> = op.mesh().areas().iter().map(|x| x.sqrt()).collect();
    let scaled: Vec<f64> = mu.iter().zip(&sa).map(|(m, r)| m * r).collect();
    let y = op.apply_sym(&scaled);
    FOUR_PI * scaled.iter().zip(&y).map(|(p, q)| p * q).sum::<f64>()
}

/// Tolerances for [`verify_capacity_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityBoundTolerances {
    /// Allowed `|λ_max(4πCσ Γ) - 1|`.
    pub lambda: f64,
    /// Allowed negative gap, relative to `C`.
    pub gap: f64,
}

impl Default for CapacityBoundTolerances {
    fn default() -> Self {
        CapacityBoundTolerances { lambda: 5e-3, gap: 5e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityBounds {
    pub capacity: f64,
    /// `λ_max` of `Γ` weighted by the strength `4πCσ`.
    pub lambda_equilibrium: f64,
    /// `[α̂]_c / 4π` for the constant relative density.
    pub interaction_radius: f64,
    /// `C - interaction_radius`.
    pub gap: f64,
    pub equilibrium_critical: bool,
    pub radius_below_capacity: bool,
}

/// Checks that the strength `4πCσ` is critical and that the constant-density
/// interaction radius does not exceed the capacity.
pub fn verify_capacity_bounds(mesh: &SurfaceMesh) -> Result<CapacityBounds> {
    verify_capacity_bounds_with(mesh, &CapacityBoundTolerances::default())
}

pub fn verify_capacity_bounds_with(mesh: &SurfaceMesh, tol: &CapacityBoundTolerances) -> Result<CapacityBounds> {
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    let cap = solve_equilibrium_with(&op)?;
    if !cap.sigma_positive {
        return Err(Error::BadWeight("equilibrium density is not positive; refine the mesh".into()));
    }
    let strength = DensityWeight::strength(cap.sigma.iter().map(|s| FOUR_PI * cap.capacity * s).collect())?;
    let lambda_equilibrium = lambda_max(&op, &strength)?.lambda_max;
    let interaction_radius = lambda_max(&op, &DensityWeight::constant_density(mesh))?.interaction_radius;
    let gap = cap.capacity - interaction_radius;
    Ok(CapacityBounds {
        capacity: cap.capacity,
        lambda_equilibrium,
        interaction_radius,
        gap,
        equilibrium_critical: (lambda_equilibrium - 1.0).abs() <= tol.lambda,
        radius_below_capacity: gap >= -tol.gap * cap.capacity,
    })
}

/// Capacity of the spheroid with semi-axes `(a, b, b)`.
pub fn spheroid_capacity(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("semi-axes must be positive, got ({a}, {b})")));
    }
    let rel = (a - b).abs() / a.max(b);
    Ok(if rel < 1e-8 {
        // both closed forms lose precision as e → 0; expand to first order
        (a + 2.0 * b) / 3.0
    } else if a > b {
        let e = (a * a - b * b).sqrt();
        2.0 * e / ((a + e) / (a - e)).ln()
    } else {
        let e = (b * b - a * a).sqrt();
        e / (a / b).acos()
    })
}
