//! Criticality classification, ground-state energies from the
//! Birman-Schwinger condition `λ_max(αΓ(iκ)) = 1`, and the sup-norm
//! certificate excluding bound states.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bs_operator::{gamma_inf_norm_of, lambda_max, BsAssembler, DensityWeight, WeightKind};
use crate::error::{Error, Result};
use crate::geometry::SurfaceMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Subcritical,
    /// `|λ_max - 1|` within the tolerance band.
    Critical,
    Supercritical,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Subcritical => "subcritical",
            Classification::Critical => "critical",
            Classification::Supercritical => "supercritical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundState {
    pub kappa_star: f64,
    /// `-κ*²`.
    pub energy: f64,
    /// `λ_max(αΓ(iκ*)) - 1` at the returned root.
    pub residual: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub alpha0: f64,
    pub gamma_inf: f64,
    /// `2 α₀ ‖Γ‖_∞`.
    pub threshold: f64,
    /// `threshold < 1`, which rules out negative eigenvalues.
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralVerdict {
    pub classification: Classification,
    pub lambda_at_zero: f64,
    pub tol_band: f64,
    pub ground_state: Option<GroundState>,
    pub certificate: Option<Certificate>,
}

impl SpectralVerdict {
    pub fn to_keyed_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "classification = {}", self.classification.as_str()).unwrap();
        writeln!(s, "lambda_at_zero = {:.15e}", self.lambda_at_zero).unwrap();
        writeln!(s, "tol_band = {:.3e}", self.tol_band).unwrap();
        match &self.ground_state {
            Some(g) => {
                writeln!(s, "kappa_star = {:.15e}", g.kappa_star).unwrap();
                writeln!(s, "energy = {:.15e}", g.energy).unwrap();
                writeln!(s, "root_residual = {:.3e}", g.residual).unwrap();
            }
            None => writeln!(s, "kappa_star = none").unwrap(),
        }
        if let Some(c) = &self.certificate {
            writeln!(s, "gamma_inf = {:.15e}", c.gamma_inf).unwrap();
            writeln!(s, "certificate_threshold = {:.15e}", c.threshold).unwrap();
            writeln!(s, "certificate_holds = {}", c.holds).unwrap();
        }
        s
    }
}

/// Band of `5 ×` a discretization error estimate around `λ = 1`.
pub fn default_tol_band(error_estimate: f64) -> f64 {
    5.0 * error_estimate.abs()
}

fn check_strength(alpha: &DensityWeight) -> Result<()> {
    if alpha.kind() != WeightKind::Strength {
        return Err(Error::BadWeight("expected a coupling strength, not a relative density".into()));
    }
    Ok(())
}

fn constant_value(alpha: &DensityWeight) -> Option<f64> {
    let first = *alpha.values().first()?;
    alpha.values().iter().all(|v| *v == first).then_some(first)
}

pub fn classify_lambda(lambda: f64, tol_band: f64) -> Classification {
    if lambda < 1.0 - tol_band {
        Classification::Subcritical
    } else if lambda > 1.0 + tol_band {
        Classification::Supercritical
    } else {
        Classification::Critical
    }
}

/// Classifies `α`; a supercritical verdict carries the ground state and a
/// constant strength carries the certificate.
pub fn classify(mesh: &SurfaceMesh, alpha: &DensityWeight, tol_band: f64) -> Result<SpectralVerdict> {
    check_strength(alpha)?;
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    let lambda_at_zero = lambda_max(&op, alpha)?.lambda_max;
    let classification = classify_lambda(lambda_at_zero, tol_band);
    let certificate = match constant_value(alpha) {
        Some(a0) => Some(certificate_from_norm(a0, gamma_inf_norm_of(&op)?.value)),
        None => None,
    };
    drop(op);
    let ground_state = if classification == Classification::Supercritical {
        Some(ground_state_with(&assembler, alpha, &GroundStateOptions::default())?)
    } else {
        None
    };
    Ok(SpectralVerdict { classification, lambda_at_zero, tol_band, ground_state, certificate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Initial `[lo, hi]`; defaults to `[1e-6, 10 / diameter]`.
    pub bracket: Option<(f64, f64)>,
    /// Required `|λ_max - 1|` at the root.
    pub tolerance: f64,
    /// Relative bracket width at which bisection hands over to the secant polish.
    pub bisection_width: f64,
    pub max_evaluations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions { bracket: None, tolerance: 1e-10, bisection_width: 1e-2, max_evaluations: 200 }
    }
}

pub fn ground_state(mesh: &SurfaceMesh, alpha: &DensityWeight, bracket: Option<(f64, f64)>) -> Result<GroundState> {
    let assembler = BsAssembler::new(mesh);
    ground_state_with(&assembler, alpha, &GroundStateOptions { bracket, ..Default::default() })
}

/// Root of `g(κ) = λ_max(αΓ(iκ)) - 1`, which decreases strictly in κ:
/// bisection (geometric while the bracket spans decades) followed by an
/// Illinois-modified secant iteration inside the bracket.
pub fn ground_state_with(
    assembler: &BsAssembler,
    alpha: &DensityWeight,
    opts: &GroundStateOptions,
) -> Result<GroundState> {
    check_strength(alpha)?;
    let evaluations = std::cell::Cell::new(0usize);
    let g = |kappa: f64| -> Result<f64> {
        evaluations.set(evaluations.get() + 1);
        let op = assembler.operator(kappa)?;
        Ok(lambda_max(&op, alpha)?.lambda_max - 1.0)
    };
    let diameter = assembler.mesh().bounding_diameter();
    let (mut lo, mut hi) = opts.bracket.unwrap_or((1e-6, 10.0 / diameter));
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
    }
    let mut g_lo = g(lo)?;
    for _ in 0..8 {
        if g_lo > 0.0 {
            break;
        }
        lo *= 0.1;
        g_lo = g(lo)?;
    }
    if g_lo <= 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut g_hi = g(hi)?;
    for _ in 0..60 {
        if g_hi < 0.0 {
            break;
        }
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = g(hi)?;
    }
    if g_hi >= 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }

    while (hi - lo) > opts.bisection_width * hi {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        let g_mid = g(mid)?;
        if g_mid.abs() < opts.tolerance {
            return Ok(finish(mid, g_mid, evaluations.get()));
        }
        if g_mid > 0.0 {
            (lo, g_lo) = (mid, g_mid);
        } else {
            (hi, g_hi) = (mid, g_mid);
        }
    }

    // Illinois: halve the retained end's value when the same side is kept twice
    let mut side = 0i8;
    let mut last = (lo, g_lo);
    while evaluations.get() < opts.max_evaluations {
        let x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let gx = g(x)?;
        last = (x, gx);
        if gx.abs() < opts.tolerance || hi - lo < 4.0 * f64::EPSILON * hi {
            return Ok(finish(x, gx, evaluations.get()));
        }
        if gx > 0.0 {
            (lo, g_lo) = (x, gx);
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            (hi, g_hi) = (x, gx);
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NonConvergence { iterations: evaluations.get(), change: last.1.abs() })
}

fn finish(kappa: f64, residual: f64, evaluations: usize) -> GroundState {
    GroundState { kappa_star: kappa, energy: -kappa * kappa, residual, evaluations }
}

fn certificate_from_norm(alpha0: f64, gamma_inf: f64) -> Certificate {
    let threshold = 2.0 * alpha0 * gamma_inf;
    Certificate { alpha0, gamma_inf, threshold, holds: threshold < 1.0 }
}

/// `2 α₀ ‖Γ‖_∞ < 1` for a constant strength `α₀`.
pub fn certificate(mesh: &SurfaceMesh, alpha0: f64) -> Result<Certificate> {
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(Error::BadWeight(format!("alpha0 must be positive, got {alpha0}")));
    }
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    Ok(certificate_from_norm(alpha0, gamma_inf_norm_of(&op)?.value))
}

/// `(κ, λ_max(αΓ(iκ)))` for each κ.
pub fn kappa_sweep(assembler: &BsAssembler, alpha: &DensityWeight, kappas: &[f64]) -> Result<Vec<(f64, f64)>> {
    kappas
        .iter()
        .map(|&k| {
            let op = assembler.operator(k)?;
            Ok((k, lambda_max(&op, alpha)?.lambda_max))
        })
        .collect()
}

pub fn sweep_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("kappa,lambda_max\n");
    for (k, l) in rows {
        writeln!(s, "{k:.12e},{l:.15e}").unwrap();
    }
    s
}
