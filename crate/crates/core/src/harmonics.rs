//! Real orthonormal spherical harmonics and quadrature on the unit sphere.
//!
//! Angles are always passed as `(polar, azimuth)`: `polar ∈ [0, π]` is measured
//! from the +z axis and `azimuth ∈ [0, 2π)` from the +x axis. Deformation
//! formulas written with `φ` as the polar angle and `θ` as the azimuth map to
//! `polar = φ`, `azimuth = θ`.
//!
//! Basis (no Condon-Shortley phase):
//! `Y_{n,0} = P̄_n^0(cos polar)`,
//! `Y_{n,m} = √2 P̄_n^m(cos polar) cos(m azimuth)` for `m > 0`,
//! `Y_{n,-m} = √2 P̄_n^m(cos polar) sin(m azimuth)`,
//! with `P̄` normalized so that `∫_{S²} Y_{nm} Y_{n'm'} = δ δ`. At order one this
//! gives `Y_{1,0} = √(3/4π) cos polar`, `Y_{1,1} = √(3/4π) sin polar cos azimuth`,
//! `Y_{1,-1} = √(3/4π) sin polar sin azimuth`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[inline]
fn index(n: usize, m: i64) -> usize {
    ((n * n + n) as i64 + m) as usize
}

/// Fully normalized associated Legendre values `P̄_n^m(cos θ)` for
/// `0 ≤ m ≤ n ≤ n_max`, stored at `n (n + 1) / 2 + m`.
fn legendre_table(n_max: usize, x: f64, s: f64) -> Vec<f64> {
    let tri = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut p = vec![0.0; (n_max + 1) * (n_max + 2) / 2];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=n_max {
        if m > 0 {
            let mf = m as f64;
            p[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[tri(m - 1, m - 1)];
        }
        if m < n_max {
            p[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * p[tri(m, m)];
        }
        for n in (m + 2)..=n_max {
            let (nf, mf) = (n as f64, m as f64);
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0)).sqrt();
            p[tri(n, m)] = a * (x * p[tri(n - 1, m)] - b * p[tri(n - 2, m)]);
        }
    }
    p
}

/// All real harmonics up to `n_max` at one point, indexed by `n² + n + m`.
pub fn eval_all(n_max: usize, polar: f64, azimuth: f64) -> Vec<f64> {
    let (s, x) = polar.sin_cos();
    let p = legendre_table(n_max, x, s);
    let tri = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut out = vec![0.0; (n_max + 1) * (n_max + 1)];
    for n in 0..=n_max {
        out[index(n, 0)] = p[tri(n, 0)];
        for m in 1..=n {
            let (sm, cm) = (m as f64 * azimuth).sin_cos();
            out[index(n, m as i64)] = SQRT_2 * p[tri(n, m)] * cm;
            out[index(n, -(m as i64))] = SQRT_2 * p[tri(n, m)] * sm;
        }
    }
    out
}

/// Value of the real orthonormal harmonic `Y_{n,m}`.
pub fn eval_harmonic(n: usize, m: i64, polar: f64, azimuth: f64) -> Result<f64> {
    if m.unsigned_abs() as usize > n {
        return Err(Error::HarmonicIndex { n: n as i64, m });
    }
    Ok(eval_all(n, polar, azimuth)[index(n, m)])
}

/// Surface gradient components `(∂Y/∂polar, (1/sin polar) ∂Y/∂azimuth)` of all
/// harmonics up to `n_max`. Undefined at the poles.
pub fn eval_gradients(n_max: usize, polar: f64, azimuth: f64) -> (Vec<f64>, Vec<f64>) {
    let (s, x) = polar.sin_cos();
    let p = legendre_table(n_max, x, s);
    let tri = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let len = (n_max + 1) * (n_max + 1);
    let mut d_polar = vec![0.0; len];
    let mut d_azim = vec![0.0; len];
    for n in 0..=n_max {
        for m in 0..=n {
            let (nf, mf) = (n as f64, m as f64);
            let lower = if n > m {
                ((2.0 * nf + 1.0) / (2.0 * nf - 1.0) * (nf * nf - mf * mf)).sqrt() * p[tri(n - 1, m)]
            } else {
                0.0
            };
            let dp = (nf * x * p[tri(n, m)] - lower) / s;
            if m == 0 {
                d_polar[index(n, 0)] = dp;
            } else {
                let (sm, cm) = (mf * azimuth).sin_cos();
                d_polar[index(n, m as i64)] = SQRT_2 * dp * cm;
                d_polar[index(n, -(m as i64))] = SQRT_2 * dp * sm;
                let q = SQRT_2 * p[tri(n, m)] * mf / s;
                d_azim[index(n, m as i64)] = -q * sm;
                d_azim[index(n, -(m as i64))] = q * cm;
            }
        }
    }
    (d_polar, d_azim)
}

/// Product rule on the unit sphere: Gauss-Legendre in `cos polar` times a
/// uniform azimuthal rule. Exact for spherical polynomials of degree ≤ `order`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub order: usize,
    pub polar: Vec<f64>,
    pub polar_weights: Vec<f64>,
    pub azimuth: Vec<f64>,
    pub azimuth_weight: f64,
}

impl SphereQuadrature {
    pub fn new(order: usize) -> SphereQuadrature {
        let n_gl = order / 2 + 1;
        let n_az = order + 1;
        let (x, w) = gauss_legendre(n_gl);
        SphereQuadrature {
            order,
            polar: x.iter().map(|xi| xi.acos()).collect(),
            polar_weights: w,
            azimuth: (0..n_az).map(|j| 2.0 * PI * j as f64 / n_az as f64).collect(),
            azimuth_weight: 2.0 * PI / n_az as f64,
        }
    }

    /// Nodes as `(polar, azimuth, weight)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.polar.iter().zip(&self.polar_weights).flat_map(move |(t, wt)| {
            self.azimuth.iter().map(move |p| (*t, *p, wt * self.azimuth_weight))
        })
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.nodes().map(|(t, p, w)| w * f(t, p)).sum()
    }
}

/// Real harmonic coefficients `c_{nm}` for `n ≤ n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoeffs {
    n_max: usize,
    values: Vec<f64>,
}

impl HarmonicCoeffs {
    pub fn zeros(n_max: usize) -> HarmonicCoeffs {
        HarmonicCoeffs { n_max, values: vec![0.0; (n_max + 1) * (n_max + 1)] }
    }

    /// Builds coefficients from `(n, m, value)` triples; repeated entries add.
    pub fn from_triples(triples: &[(usize, i64, f64)]) -> Result<HarmonicCoeffs> {
        let n_max = triples.iter().map(|t| t.0).max().unwrap_or(0);
        let mut c = HarmonicCoeffs::zeros(n_max);
        for &(n, m, v) in triples {
            if m.unsigned_abs() as usize > n {
                return Err(Error::HarmonicIndex { n: n as i64, m });
            }
            c.values[index(n, m)] += v;
        }
        Ok(c)
    }

    /// Single-mode coefficients `value · Y_{n,m}`.
    pub fn single(n: usize, m: i64, value: f64) -> Result<HarmonicCoeffs> {
        Self::from_triples(&[(n, m, value)])
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, n: usize, m: i64) -> f64 {
        if n > self.n_max || m.unsigned_abs() as usize > n {
            0.0
        } else {
            self.values[index(n, m)]
        }
    }

    pub fn set(&mut self, n: usize, m: i64, value: f64) -> Result<()> {
        if n > self.n_max || m.unsigned_abs() as usize > n {
            return Err(Error::HarmonicIndex { n: n as i64, m });
        }
        self.values[index(n, m)] = value;
        Ok(())
    }

    /// Non-zero entries as `(n, m, value)`.
    pub fn triples(&self) -> Vec<(usize, i64, f64)> {
        let mut out = Vec::new();
        for n in 0..=self.n_max {
            for m in -(n as i64)..=(n as i64) {
                let v = self.values[index(n, m)];
                if v != 0.0 {
                    out.push((n, m, v));
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn evaluate(&self, polar: f64, azimuth: f64) -> f64 {
        let y = eval_all(self.n_max, polar, azimuth);
        y.iter().zip(&self.values).map(|(a, b)| a * b).sum()
    }

    /// Surface gradient `(∂ρ/∂polar, (1/sin polar) ∂ρ/∂azimuth)`.
    pub fn gradient(&self, polar: f64, azimuth: f64) -> (f64, f64) {
        let (dp, da) = eval_gradients(self.n_max, polar, azimuth);
        (
            dp.iter().zip(&self.values).map(|(a, b)| a * b).sum(),
            da.iter().zip(&self.values).map(|(a, b)| a * b).sum(),
        )
    }

    /// Estimate of `max |ρ|` from a dense product grid including the poles.
    pub fn sup_norm(&self) -> f64 {
        let q = SphereQuadrature::new(4 * self.n_max + 40);
        let mut best = self.evaluate(0.0, 0.0).abs().max(self.evaluate(PI, 0.0).abs());
        for (t, p, _) in q.nodes() {
            best = best.max(self.evaluate(t, p).abs());
        }
        best
    }

    /// Parses lines `n m value` (`#` starts a comment).
    pub fn from_text(text: &str) -> Result<HarmonicCoeffs> {
        let mut triples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: "expected `n m value`".into() });
            }
            let err = |e: String| Error::Parse { line: i + 1, msg: e };
            let n: usize = cols[0].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let m: i64 = cols[1].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let v: f64 = cols[2].parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
            triples.push((n, m, v));
        }
        Self::from_triples(&triples)
    }

    pub fn from_file(path: &Path) -> Result<HarmonicCoeffs> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# n m value\n");
        for (n, m, v) in self.triples() {
            let _ = writeln!(s, "{n} {m} {v:.17e}");
        }
        s
    }
}

/// Projects `f(polar, azimuth)` onto harmonics of order ≤ `n_max` using a
/// product rule of the given polynomial `order` (must be ≥ `2 n_max`).
pub fn expand(f: impl Fn(f64, f64) -> f64, n_max: usize, order: usize) -> Result<HarmonicCoeffs> {
    if order < 2 * n_max {
        return Err(Error::QuadratureOrder { order, n_max });
    }
    let q = SphereQuadrature::new(order);
    let mut c = HarmonicCoeffs::zeros(n_max);
    for (t, p, w) in q.nodes() {
        let fv = f(t, p);
        let y = eval_all(n_max, t, p);
        for (ci, yi) in c.values.iter_mut().zip(&y) {
            *ci += w * fv * yi;
        }
    }
    Ok(c)
}

/// Projects samples given on the nodes of `q` (in [`SphereQuadrature::nodes`] order).
pub fn expand_samples(q: &SphereQuadrature, samples: &[f64], n_max: usize) -> Result<HarmonicCoeffs> {
    if q.order < 2 * n_max {
        return Err(Error::QuadratureOrder { order: q.order, n_max });
    }
    let expected = q.polar.len() * q.azimuth.len();
    if samples.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "expected {expected} samples, got {}",
            samples.len()
        )));
    }
    let mut c = HarmonicCoeffs::zeros(n_max);
    for ((t, p, w), fv) in q.nodes().zip(samples) {
        let y = eval_all(n_max, t, p);
        for (ci, yi) in c.values.iter_mut().zip(&y) {
            *ci += w * fv * yi;
        }
    }
    Ok(c)
}

/// `I_n = ∫ X_n² dν₀ = Σ_m c_{nm}²`.
pub fn mode_energy(coeffs: &HarmonicCoeffs, n: usize) -> Result<f64> {
    if n > coeffs.n_max {
        return Err(Error::HarmonicIndex { n: n as i64, m: 0 });
    }
    Ok((-(n as i64)..=(n as i64)).map(|m| coeffs.get(n, m).powi(2)).sum())
}

/// `∫ |∇_{S²} X_n|² = n (n + 1) I_n`.
pub fn angular_energy(coeffs: &HarmonicCoeffs, n: usize) -> Result<f64> {
    Ok((n * (n + 1)) as f64 * mode_energy(coeffs, n)?)
}

/// Direct quadrature of `∫ |∇_{S²} X_n|²`, for cross-checking [`angular_energy`].
pub fn angular_energy_by_quadrature(coeffs: &HarmonicCoeffs, n: usize) -> Result<f64> {
    if n > coeffs.n_max {
        return Err(Error::HarmonicIndex { n: n as i64, m: 0 });
    }
    let q = SphereQuadrature::new(2 * n + 2);
    Ok(q.integrate(|t, p| {
        let (dp, da) = eval_gradients(n, t, p);
        let (mut g1, mut g2) = (0.0, 0.0);
        for m in -(n as i64)..=(n as i64) {
            let c = coeffs.get(n, m);
            g1 += c * dp[index(n, m)];
            g2 += c * da[index(n, m)];
        }
        g1 * g1 + g2 * g2
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_values() {
        let y00 = eval_harmonic(0, 0, 0.4, 1.1).unwrap();
        assert!((y00 - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let c = (3.0 / (4.0 * PI)).sqrt();
        assert!((eval_harmonic(1, 0, 0.0, 0.7).unwrap() - c).abs() < 1e-15);
        assert!((eval_harmonic(1, 1, PI / 2.0, 0.0).unwrap() - c).abs() < 1e-15);
        assert!((eval_harmonic(1, -1, PI / 2.0, PI / 2.0).unwrap() - c).abs() < 1e-15);
        let y20 = eval_harmonic(2, 0, 0.3, 0.0).unwrap();
        let x = 0.3f64.cos();
        assert!((y20 - (5.0 / (16.0 * PI)).sqrt() * (3.0 * x * x - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn invalid_index_is_rejected() {
        assert!(matches!(eval_harmonic(1, 2, 0.0, 0.0), Err(Error::HarmonicIndex { .. })));
        assert!(HarmonicCoeffs::from_triples(&[(2, -3, 1.0)]).is_err());
    }

    #[test]
    fn orthonormality_to_order_twelve() {
        let n_max = 12;
        let q = SphereQuadrature::new(2 * n_max);
        let len = (n_max + 1) * (n_max + 1);
        let mut gram = vec![0.0; len * len];
        for (t, p, w) in q.nodes() {
            let y = eval_all(n_max, t, p);
            for i in 0..len {
                for j in 0..len {
                    gram[i * len + j] += w * y[i] * y[j];
                }
            }
        }
        for i in 0..len {
            for j in 0..len {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * len + j] - e).abs() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn high_order_recurrence_is_stable() {
        // n = 50 still orthonormal under an exact rule
        let q = SphereQuadrature::new(100);
        let norm = q.integrate(|t, p| eval_harmonic(50, 17, t, p).unwrap().powi(2));
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expand_single_mode_and_constant() {
        let c = expand(|t, p| eval_harmonic(2, 0, t, p).unwrap(), 6, 12).unwrap();
        for (n, m, v) in c.triples() {
            if (n, m) == (2, 0) {
                assert!((v - 1.0).abs() < 1e-12);
            } else {
                assert!(v.abs() < 1e-10, "({n},{m}) = {v}");
            }
        }
        let one = expand(|_, _| 1.0, 4, 8).unwrap();
        assert!((one.get(0, 0) - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(matches!(expand(|_, _| 1.0, 4, 7), Err(Error::QuadratureOrder { .. })));
    }

    #[test]
    fn expand_cos_squared_only_even_orders() {
        // cos² = 1/3 + (2/3) P_2: c_00 = √(4π)/3, c_20 = (2/3) √(4π/5)
        let c = expand(|t, _| t.cos().powi(2), 6, 16).unwrap();
        assert!((c.get(0, 0) - (4.0 * PI).sqrt() / 3.0).abs() < 1e-12);
        assert!((c.get(2, 0) - 2.0 / 3.0 * (4.0 * PI / 5.0).sqrt()).abs() < 1e-12);
        for (n, _, v) in c.triples() {
            if n != 0 && n != 2 {
                assert!(v.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn expand_reconstructs_band_limited_function() {
        let src = HarmonicCoeffs::from_triples(&[(0, 0, 0.3), (1, -1, 0.2), (3, 2, -0.7), (5, -4, 0.05)]).unwrap();
        let c = expand(|t, p| src.evaluate(t, p), 5, 10).unwrap();
        for n in 0..=5 {
            for m in -(n as i64)..=(n as i64) {
                assert!((c.get(n, m) - src.get(n, m)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mode_energies() {
        let c = HarmonicCoeffs::single(2, 0, 1.0).unwrap();
        assert_eq!(mode_energy(&c, 2).unwrap(), 1.0);
        assert_eq!(mode_energy(&c, 1).unwrap(), 0.0);
        assert!(mode_energy(&c, 3).is_err());
        let (a, b, cc) = (0.3, -1.2, 0.5);
        let c1 = HarmonicCoeffs::from_triples(&[(1, 0, a), (1, -1, b), (1, 1, cc)]).unwrap();
        assert!((mode_energy(&c1, 1).unwrap() - (a * a + b * b + cc * cc)).abs() < 1e-15);
    }

    #[test]
    fn angular_energy_formula_matches_quadrature() {
        assert_eq!(angular_energy(&HarmonicCoeffs::single(1, 0, 1.0).unwrap(), 1).unwrap(), 2.0);
        assert_eq!(angular_energy(&HarmonicCoeffs::single(0, 0, 1.0).unwrap(), 0).unwrap(), 0.0);
        let q2 = angular_energy_by_quadrature(&HarmonicCoeffs::single(2, 0, 1.0).unwrap(), 2).unwrap();
        assert!((q2 - 6.0).abs() < 1e-8);
        // generic mixture for all n ≤ 8
        let mut triples = Vec::new();
        for n in 0..=8usize {
            for m in -(n as i64)..=(n as i64) {
                triples.push((n, m, ((n * 7 + (m + 9) as usize * 3) % 11) as f64 / 11.0 - 0.4));
            }
        }
        let c = HarmonicCoeffs::from_triples(&triples).unwrap();
        for n in 0..=8 {
            let direct = angular_energy_by_quadrature(&c, n).unwrap();
            let formula = angular_energy(&c, n).unwrap();
            assert!((direct - formula).abs() < 1e-8, "n={n}: {direct} vs {formula}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let c = HarmonicCoeffs::from_triples(&[(2, 1, 0.7), (3, -2, 0.4), (1, 0, 0.2)]).unwrap();
        let (t, p) = (0.9, 2.1);
        let h = 1e-6;
        let (g1, g2) = c.gradient(t, p);
        let fd1 = (c.evaluate(t + h, p) - c.evaluate(t - h, p)) / (2.0 * h);
        let fd2 = (c.evaluate(t, p + h) - c.evaluate(t, p - h)) / (2.0 * h) / t.sin();
        assert!((g1 - fd1).abs() < 1e-8);
        assert!((g2 - fd2).abs() < 1e-8);
    }

    #[test]
    fn text_round_trip() {
        let c = HarmonicCoeffs::from_triples(&[(2, 0, 1.0), (3, -1, -0.25)]).unwrap();
        let back = HarmonicCoeffs::from_text(&c.to_text()).unwrap();
        assert_eq!(c, back);
    }
}
