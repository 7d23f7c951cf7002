//! Small-ε series for the critical constant strength `α_ε` and the surface
//! radius `S̄_ε` of the radially deformed unit sphere `r = 1 + ερ`.
//!
//! With `X_0` the constant order-0 part of `ρ` and `I_n` the order-n mode
//! energies,
//!
//! ```text
//! α_ε   = 1 - ε X_0 + ε² X_0² - ε² (1/4π) Σ_{n≥1} ½ (n² + 1/n) I_n
//! S̄_ε   = 1 + ε X_0 + ε² (1/4π) Σ_{n≥1} (n² + n + 2)/4 · I_n
//! α_ε S̄_ε = 1 - ε² (1/4π) Σ_{n≥1} c_n I_n,   c_n = ½(n² + 1/n) - (n² + n + 2)/4
//! ```
//!
//! and for a pure order-one deformation `ρ = A Y_{1,0} + B Y_{1,-1} + C Y_{1,1}`
//! the product is `1 - ε⁴ · 3 (A² + B² + C²)² / (20π)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::harmonics::{mode_energy, HarmonicCoeffs};

/// Per-order contribution to the second-order coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeTerm {
    pub n: usize,
    pub energy: f64,
    /// `½ (n² + 1/n)`.
    pub alpha_weight: f64,
    /// `(n² + n + 2) / 4`.
    pub sbar_weight: f64,
    /// `alpha_weight - sbar_weight`.
    pub product_weight: f64,
}

impl ModeTerm {
    pub fn new(n: usize, energy: f64) -> ModeTerm {
        let nf = n as f64;
        let alpha_weight = 0.5 * (nf * nf + 1.0 / nf);
        let sbar_weight = (nf * nf + nf + 2.0) / 4.0;
        ModeTerm { n, energy, alpha_weight, sbar_weight, product_weight: product_weight(n) }
    }
}

/// `c_n = n²/2 + 1/(2n) - (n² + n + 2)/4`; zero at `n = 1`, positive above.
pub fn product_weight(n: usize) -> f64 {
    let nf = n as f64;
    0.5 * nf * nf + 0.5 / nf - (nf * nf + nf + 2.0) / 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSeries {
    /// Constant value of the order-0 component of `ρ`.
    pub x0: f64,
    pub modes: Vec<ModeTerm>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub sbar1: f64,
    pub sbar2: f64,
    pub product2: f64,
    /// ε⁴ coefficient of the product for a pure order-one deformation.
    pub fourth_order: Option<f64>,
}

/// First-order exterior and interior coefficients
/// `S_n = (1 + n) X_n / (2n)` and `R_n = (1 - n) X_n / (2n)` for `n ≥ 1`.
pub fn first_order_coefficients(rho: &HarmonicCoeffs) -> (HarmonicCoeffs, HarmonicCoeffs) {
    let mut s = HarmonicCoeffs::zeros(rho.n_max());
    let mut r = HarmonicCoeffs::zeros(rho.n_max());
    for (n, m, v) in rho.triples() {
        if n == 0 {
            continue;
        }
        let nf = n as f64;
        s.set(n, m, (1.0 + nf) * v / (2.0 * nf)).expect("index within n_max");
        r.set(n, m, (1.0 - nf) * v / (2.0 * nf)).expect("index within n_max");
    }
    (s, r)
}

pub fn series_from_profile(rho: &HarmonicCoeffs) -> PerturbationSeries {
    let x0 = rho.get(0, 0) / (4.0 * PI).sqrt();
    let modes: Vec<ModeTerm> = (1..=rho.n_max())
        .map(|n| ModeTerm::new(n, mode_energy(rho, n).expect("n within n_max")))
        .collect();
    let inv4pi = 1.0 / (4.0 * PI);
    let alpha_sum: f64 = modes.iter().map(|t| t.alpha_weight * t.energy).sum();
    let sbar_sum: f64 = modes.iter().map(|t| t.sbar_weight * t.energy).sum();
    let product_sum: f64 = modes.iter().map(|t| t.product_weight * t.energy).sum();
    let pure_first_order = x0 == 0.0 && modes.iter().all(|t| t.n == 1 || t.energy == 0.0);
    let fourth_order = pure_first_order.then(|| {
        fourth_order_n1(rho.get(1, 0), rho.get(1, -1), rho.get(1, 1))
    });
    PerturbationSeries {
        x0,
        alpha1: -x0,
        alpha2: x0 * x0 - inv4pi * alpha_sum,
        sbar1: x0,
        sbar2: inv4pi * sbar_sum,
        product2: -inv4pi * product_sum,
        fourth_order,
        modes,
    }
}

/// `-3 (A² + B² + C²)² / (20π)`.
pub fn fourth_order_n1(a: f64, b: f64, c: f64) -> f64 {
    let i1 = a * a + b * b + c * c;
    -3.0 * i1 * i1 / (20.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub alpha: f64,
    pub sbar: f64,
    /// Combined product series, not the product of the truncations.
    pub product: f64,
}

pub fn predict(series: &PerturbationSeries, epsilon: f64) -> Prediction {
    let e2 = epsilon * epsilon;
    let quartic = series.fourth_order.map_or(0.0, |c| c * e2 * e2);
    Prediction {
        alpha: 1.0 + epsilon * series.alpha1 + e2 * series.alpha2,
        sbar: 1.0 + epsilon * series.sbar1 + e2 * series.sbar2,
        product: 1.0 + e2 * series.product2 + quartic,
    }
}

impl PerturbationSeries {
    /// Lowest even order `k` and coefficient `d` with `1 - α_ε S̄_ε ≈ d ε^k`,
    /// or `None` when the series predicts no deficit.
    pub fn leading_deficit(&self) -> Option<(u32, f64)> {
        if self.product2 != 0.0 {
            Some((2, -self.product2))
        } else {
            self.fourth_order.filter(|c| *c != 0.0).map(|c| (4, -c))
        }
    }

    pub fn to_keyed_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "x0 = {:.15e}", self.x0).unwrap();
        writeln!(s, "alpha1 = {:.15e}", self.alpha1).unwrap();
        writeln!(s, "alpha2 = {:.15e}", self.alpha2).unwrap();
        writeln!(s, "sbar1 = {:.15e}", self.sbar1).unwrap();
        writeln!(s, "sbar2 = {:.15e}", self.sbar2).unwrap();
        writeln!(s, "product2 = {:.15e}", self.product2).unwrap();
        match self.fourth_order {
            Some(c) => writeln!(s, "product4 = {c:.15e}").unwrap(),
            None => writeln!(s, "product4 = none").unwrap(),
        }
        writeln!(s, "# n I_n c_n").unwrap();
        for t in &self.modes {
            writeln!(s, "mode = {} {:.15e} {:.15e}", t.n, t.energy, t.product_weight).unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(n: usize, m: i64) -> HarmonicCoeffs {
        HarmonicCoeffs::single(n, m, 1.0).unwrap()
    }

    #[test]
    fn product_weights() {
        assert_eq!(product_weight(1), 0.0);
        assert_eq!(product_weight(2), 0.25);
        for n in 2..40 {
            assert!(product_weight(n) > 0.0);
        }
    }

    #[test]
    fn order_one_mode_has_no_second_order_deficit() {
        let s = series_from_profile(&single(1, 0));
        assert_eq!(s.product2, 0.0);
        assert_eq!(s.alpha1, 0.0);
        assert_eq!(s.sbar1, 0.0);
        assert!((s.fourth_order.unwrap() + 3.0 / (20.0 * PI)).abs() < 1e-16);
        let (ext, int) = first_order_coefficients(&single(1, 0));
        assert_eq!(ext.get(1, 0), 1.0);
        assert_eq!(int.get(1, 0), 0.0);
        assert_eq!(s.leading_deficit().unwrap().0, 4);
    }

    #[test]
    fn order_two_mode_deficit() {
        let s = series_from_profile(&single(2, 0));
        assert!((s.product2 + 1.0 / (16.0 * PI)).abs() < 1e-16);
        let p = predict(&s, 0.1);
        assert!((p.product - (1.0 - 0.01 / (16.0 * PI))).abs() < 1e-15);
        assert!(s.fourth_order.is_none());
        let (ext, int) = first_order_coefficients(&single(2, 0));
        assert_eq!(ext.get(2, 0), 0.75);
        assert_eq!(int.get(2, 0), -0.25);
    }

    #[test]
    fn undeformed_sphere() {
        let s = series_from_profile(&HarmonicCoeffs::zeros(3));
        let p = predict(&s, 0.3);
        assert_eq!((p.alpha, p.sbar, p.product), (1.0, 1.0, 1.0));
        assert!(s.leading_deficit().is_none());
        let p = predict(&series_from_profile(&single(3, 2)), 0.0);
        assert_eq!((p.alpha, p.sbar, p.product), (1.0, 1.0, 1.0));
    }

    #[test]
    fn constant_part_cancels_in_the_product() {
        let rho = HarmonicCoeffs::single(0, 0, (4.0 * PI).sqrt() * 0.3).unwrap();
        let s = series_from_profile(&rho);
        assert!((s.x0 - 0.3).abs() < 1e-15);
        assert!((s.alpha1 + 0.3).abs() < 1e-15);
        assert!((s.alpha2 - 0.09).abs() < 1e-15);
        assert_eq!(s.product2, 0.0);
        // the unit sphere rescaled by 1 + ε X0: α = 1/(1 + εX0), S̄ = 1 + εX0
        let eps = 1e-3;
        let p = predict(&s, eps);
        assert!((p.alpha - 1.0 / (1.0 + eps * 0.3)).abs() < 1e-9);
        assert!((p.sbar - (1.0 + eps * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn fourth_order_values() {
        assert_eq!(fourth_order_n1(0.0, 0.0, 0.0), 0.0);
        assert!((fourth_order_n1(1.0, 0.0, 0.0) + 3.0 / (20.0 * PI)).abs() < 1e-16);
        assert!((fourth_order_n1(1.0, 1.0, 1.0) + 27.0 / (20.0 * PI)).abs() < 1e-15);
    }
}
