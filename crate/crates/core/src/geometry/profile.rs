//! Meridian profiles for surfaces of revolution.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Tolerance on `2π ∫ f dv = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Positive profile `f` on `(-1, 1)` with `f(±1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `f(v) = sqrt(1 - v²) / π²`; the resulting surface is a prolate spheroid.
    Ellipse,
    /// Monotone cubic (Fritsch-Carlson) interpolant through samples.
    Tabulated(Pchip),
}

impl Profile {
    pub fn value(&self, v: f64) -> f64 {
        match self {
            Profile::Ellipse => (1.0 - v * v).max(0.0).sqrt() / (PI * PI),
            Profile::Tabulated(p) => p.value(v),
        }
    }

    pub fn derivative(&self, v: f64) -> f64 {
        match self {
            Profile::Ellipse => {
                let s = (1.0 - v * v).max(0.0).sqrt();
                if s == 0.0 {
                    -v.signum() * f64::INFINITY
                } else {
                    -v / (PI * PI * s)
                }
            }
            Profile::Tabulated(p) => p.derivative(v),
        }
    }

    /// `2π ∫_{-1}^{1} f(v) dv`.
    pub fn normalization(&self) -> f64 {
        match self {
            Profile::Ellipse => 2.0 * PI * (PI / 2.0) / (PI * PI),
            Profile::Tabulated(p) => 2.0 * PI * p.integral(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Ellipse => "ellipse",
            Profile::Tabulated(_) => "tabulated",
        }
    }

    /// Checks positivity on the open interval, the endpoint zeros and the
    /// unit normalization.
    pub fn validate(&self) -> Result<()> {
        for end in [-1.0, 1.0] {
            let f = self.value(end);
            if f.abs() > 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "profile must vanish at v = {end}, got {f}"
                )));
            }
        }
        let n = 2001;
        for k in 1..n {
            let v = -1.0 + 2.0 * k as f64 / n as f64;
            let f = self.value(v);
            if !(f > 0.0) {
                return Err(Error::ProfileNotPositive { at: v, value: f });
            }
        }
        if let Profile::Tabulated(p) = self {
            for (v, f) in p.xs.iter().zip(&p.ys).skip(1).take(p.xs.len() - 2) {
                if !(*f > 0.0) {
                    return Err(Error::ProfileNotPositive { at: *v, value: *f });
                }
            }
        }
        let integral = self.normalization();
        if (integral - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::ProfileNotNormalized { integral });
        }
        Ok(())
    }

    /// Exact area of the surface `(ε f cos u, ε f sin u, v / ε)`:
    /// `2π ∫ f sqrt(1 + ε⁴ f'²) dv`, integrated in `v = -cos t`.
    pub fn surface_area(&self, epsilon: f64) -> f64 {
        let (ts, ws) = gauss_legendre_on(400, 0.0, PI);
        let integrand = |t: f64| {
            let v = -t.cos();
            let dv_dt = t.sin();
            let f = self.value(v);
            let fp = self.derivative(v);
            // f sqrt(1 + ε⁴ f'²) dv/dt, kept finite where f' blows up
            let a = f * dv_dt;
            let b = epsilon * epsilon * f * fp * dv_dt;
            (a * a + b * b).sqrt()
        };
        2.0 * PI * ts.iter().zip(&ws).map(|(t, w)| w * integrand(*t)).sum::<f64>()
    }

    /// Loads a two-column table `v f(v)` (whitespace separated, `#` comments).
    pub fn from_table_file(path: &Path) -> Result<Profile> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table_str(&text)
    }

    pub fn from_table_str(text: &str) -> Result<Profile> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse { line: i + 1, msg: "expected `v f`".into() });
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })
            };
            xs.push(parse(cols[0])?);
            ys.push(parse(cols[1])?);
        }
        Ok(Profile::Tabulated(Pchip::new(xs, ys)?))
    }
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Pchip> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err(Error::InvalidSpec("profile table needs at least 3 samples".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("profile abscissae must be strictly increasing".into()));
        }
        if (xs[0] + 1.0).abs() > 1e-12 || (xs[xs.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec("profile table must span [-1, 1]".into()));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Pchip { xs, ys, slopes })
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let k = self.locate(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        (d00 * self.ys[k] + d01 * self.ys[k + 1]) / h + d10 * self.slopes[k] + d11 * self.slopes[k + 1]
    }

    /// Exact integral of the interpolant over its support.
    pub fn integral(&self) -> f64 {
        self.xs
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let h = w[1] - w[0];
                h * (self.ys[k] + self.ys[k + 1]) / 2.0
                    + h * h * (self.slopes[k] - self.slopes[k + 1]) / 12.0
            })
            .sum()
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
