//! Richardson extrapolation over a sequence of uniformly refined meshes.
//!
//! Successive levels halve the mesh width, so a quantity with leading error
//! `c h^p` satisfies `v_k = v + c 2^{-kp} h_0^p + …`.

use serde::Serialize;

use crate::error::{Error, Result};

/// How the convergence order is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OrderRule {
    /// Use the order observed on the last three values when it lies in
    /// `[0.5, 4]`, otherwise the nominal order.
    Estimated { nominal: f64 },
    /// Fixed order `p`.
    Fixed(f64),
    /// Two-stage elimination of `h²` and `h⁴` terms from the last three values.
    Romberg,
}

impl Default for OrderRule {
    fn default() -> Self {
        OrderRule::Estimated { nominal: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolated {
    pub value: f64,
    /// Order used for the final step (`NaN` for Romberg).
    pub order: f64,
    /// Observed order on the last three values, if it was computable.
    pub observed_order: Option<f64>,
    /// `|value - finest|`, a conservative discretization error estimate.
    pub error_estimate: f64,
}

/// Observed convergence order `log2((v1 - v0) / (v2 - v1))`.
pub fn observed_order(v0: f64, v1: f64, v2: f64) -> Option<f64> {
    let d0 = v1 - v0;
    let d1 = v2 - v1;
    if d0 == 0.0 || d1 == 0.0 || d0.signum() != d1.signum() {
        return None;
    }
    let p = (d0 / d1).log2();
    p.is_finite().then_some(p)
}

/// Extrapolates the limit of `values` (coarse to fine, width halving each step).
pub fn richardson(values: &[f64], rule: OrderRule) -> Result<Extrapolated> {
    if values.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs at least 3 levels, got {}",
            values.len()
        )));
    }
    let n = values.len();
    let (v0, v1, v2) = (values[n - 3], values[n - 2], values[n - 1]);
    let observed = observed_order(v0, v1, v2);
    let (value, order) = match rule {
        OrderRule::Fixed(p) => (step(v1, v2, p), p),
        OrderRule::Estimated { nominal } => {
            let p = observed.filter(|p| (0.5..=4.0).contains(p)).unwrap_or(nominal);
            (step(v1, v2, p), p)
        }
        OrderRule::Romberg => ((64.0 * v2 - 20.0 * v1 + v0) / 45.0, f64::NAN),
    };
    Ok(Extrapolated { value, order, observed_order: observed, error_estimate: (value - v2).abs() })
}

fn step(coarse: f64, fine: f64, p: f64) -> f64 {
    let r = 2f64.powf(p);
    fine + (fine - coarse) / (r - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removes_a_pure_power_error() {
        let exact = 3.25;
        let vals: Vec<f64> = (0..4).map(|k| exact + 0.7 * 0.25f64.powi(k)).collect();
        let e = richardson(&vals, OrderRule::default()).unwrap();
        assert!((e.value - exact).abs() < 1e-13);
        assert!((e.order - 2.0).abs() < 1e-10);
        let e = richardson(&vals, OrderRule::Fixed(2.0)).unwrap();
        assert!((e.value - exact).abs() < 1e-13);
    }

    #[test]
    fn detects_first_order_convergence() {
        let vals: Vec<f64> = (0..3).map(|k| 1.0 - 0.3 * 0.5f64.powi(k)).collect();
        let e = richardson(&vals, OrderRule::default()).unwrap();
        assert!((e.order - 1.0).abs() < 1e-10);
        assert!((e.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn romberg_removes_two_even_powers() {
        let h = |k: i32| 0.5f64.powi(k);
        let vals: Vec<f64> = (0..3).map(|k| 2.0 + 0.4 * h(k).powi(2) - 0.9 * h(k).powi(4)).collect();
        let e = richardson(&vals, OrderRule::Romberg).unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn falls_back_when_the_order_is_not_observable() {
        let e = richardson(&[1.0, 1.2, 1.1], OrderRule::default()).unwrap();
        assert_eq!(e.order, 2.0);
        assert!(e.observed_order.is_none());
        assert!(richardson(&[1.0, 2.0], OrderRule::default()).is_err());
    }
}
