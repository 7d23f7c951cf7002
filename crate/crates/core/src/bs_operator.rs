//! Discrete Birman-Schwinger operator `Γ(iκ)` on a panel mesh, its weighted
//! Perron eigenvalue and the critical strength.
//!
//! Raw collocation entries are `G_ij = (1/4π) ∫_{T_j} e^{-κr}/r dA` with
//! `r = |c_i - y|`. At κ = 0 every entry uses the closed-form flat-triangle
//! integral. For κ > 0 the exact κ = 0 entry is multiplied by the ratio
//! `Q(e^{-κr}/r) / Q(1/r)` of a quadrature `Q` over panel `j`: a polar rule
//! around the centroid for the self panel, the 7-point rule for near panels and
//! the 3-point rule otherwise. Entries stay positive, agree with the κ = 0
//! matrix in the limit and decrease strictly in κ.
//!
//! The operator used for eigenvalues is the symmetric
//! `Ĝ_ij = (a_i G_ij + a_j G_ji) / (2 √(a_i a_j))`, i.e. `A^{1/2} G A^{-1/2}`
//! with the area-weighted matrix `A G` replaced by its symmetric half.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, SurfaceMesh};
use crate::quadrature::{gauss_legendre, TriangleRule, STRANG_FIX_3, STRANG_FIX_7};
use crate::singular::inv_r_triangle;

/// Largest panel count stored as a dense matrix under [`StorageMode::Auto`].
pub const DENSE_LIMIT: usize = 6000;

const FOUR_PI: f64 = 4.0 * PI;
/// Centroid distance, in units of the source panel diameter, below which the
/// 7-point rule is used.
const NEAR_FACTOR: f64 = 2.0;
const SELF_POLAR_POINTS: usize = 24;
/// Magic bytes opening a binary matrix dump.
pub const DUMP_MAGIC: &[u8; 8] = b"SCBSMAT1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StorageMode {
    /// Dense up to [`DENSE_LIMIT`] panels, matrix-free above.
    #[default]
    Auto,
    Dense,
    MatrixFree,
}

/// Panel quadrature points reused across κ values.
struct PanelRules {
    seven: Vec<[Point; 7]>,
    three: Vec<[Point; 3]>,
    /// Per panel and edge: `(P0, ψ-, ψ+)` for the polar rule around the centroid.
    polar: Vec<[(f64, f64, f64); 3]>,
    gl: (Vec<f64>, Vec<f64>),
}

fn rule_points<const K: usize>(rule: &TriangleRule, tri: [&Point; 3]) -> [Point; K] {
    std::array::from_fn(|q| {
        let b = rule.points[q];
        tri[0] * b[0] + tri[1] * b[1] + tri[2] * b[2]
    })
}

impl PanelRules {
    fn new(mesh: &SurfaceMesh) -> PanelRules {
        let n = mesh.len();
        let mut seven = Vec::with_capacity(n);
        let mut three = Vec::with_capacity(n);
        let mut polar = Vec::with_capacity(n);
        for i in 0..n {
            let tri = mesh.panel(i);
            seven.push(rule_points::<7>(&STRANG_FIX_7, tri));
            three.push(rule_points::<3>(&STRANG_FIX_3, tri));
            let c = mesh.centroids()[i];
            let normal = mesh.normals()[i];
            polar.push(std::array::from_fn(|e| {
                let a = tri[e];
                let b = tri[(e + 1) % 3];
                let t = (b - a).normalize();
                let m = t.cross(&normal);
                let p0 = (a - c).dot(&m);
                let lm = (a - c).dot(&t);
                let lp = (b - c).dot(&t);
                (p0, (lm / p0).atan(), (lp / p0).atan())
            }));
        }
        PanelRules { seven, three, polar, gl: gauss_legendre(SELF_POLAR_POINTS) }
    }

    /// `∫_T e^{-κr}/r dA` around the centroid, integrated radially in closed form.
    fn self_polar(&self, j: usize, kappa: f64) -> f64 {
        let (xs, ws) = &self.gl;
        self.polar[j]
            .iter()
            .map(|&(p0, lo, hi)| {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                xs.iter()
                    .zip(ws)
                    .map(|(x, w)| {
                        let reach = p0 / (mid + half * x).cos();
                        let radial = if kappa == 0.0 { reach } else { -(-kappa * reach).exp_m1() / kappa };
                        w * half * radial
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// `G_ij(κ) / G_ij(0)`.
    fn kappa_ratio(&self, mesh: &SurfaceMesh, i: usize, j: usize, kappa: f64) -> f64 {
        if i == j {
            return self.self_polar(j, kappa) / self.self_polar(j, 0.0);
        }
        let c = &mesh.centroids()[i];
        let near = (c - mesh.centroids()[j]).norm() < NEAR_FACTOR * mesh.diameters()[j];
        let ratio = |points: &[Point], weights: &[f64]| {
            let (mut num, mut den) = (0.0, 0.0);
            for (p, w) in points.iter().zip(weights) {
                let r = (c - p).norm();
                num += w * (-kappa * r).exp() / r;
                den += w / r;
            }
            num / den
        };
        if near {
            ratio(&self.seven[j], STRANG_FIX_7.weights)
        } else {
            ratio(&self.three[j], STRANG_FIX_3.weights)
        }
    }
}

fn raw_entry_zero(mesh: &SurfaceMesh, i: usize, j: usize) -> f64 {
    inv_r_triangle(&mesh.centroids()[i], mesh.panel(j), &mesh.normals()[j]) / FOUR_PI
}

/// Assembles operators on one mesh, caching the κ = 0 collocation matrix
/// and the panel quadrature points for repeated κ values.
pub struct BsAssembler<'m> {
    mesh: &'m SurfaceMesh,
    dense: bool,
    rules: PanelRules,
    raw_zero: OnceLock<Vec<f64>>,
}

impl<'m> BsAssembler<'m> {
    pub fn new(mesh: &'m SurfaceMesh) -> BsAssembler<'m> {
        Self::with_mode(mesh, StorageMode::Auto)
    }

    pub fn with_mode(mesh: &'m SurfaceMesh, mode: StorageMode) -> BsAssembler<'m> {
        let dense = match mode {
            StorageMode::Auto => mesh.len() <= DENSE_LIMIT,
            StorageMode::Dense => true,
            StorageMode::MatrixFree => false,
        };
        BsAssembler { mesh, dense, rules: PanelRules::new(mesh), raw_zero: OnceLock::new() }
    }

    pub fn mesh(&self) -> &'m SurfaceMesh {
        self.mesh
    }

    pub fn is_dense(&self) -> bool {
        self.dense
    }

    fn raw_zero(&self) -> &[f64] {
        self.raw_zero.get_or_init(|| {
            let n = self.mesh.len();
            let mut raw = vec![0.0; n * n];
            raw.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, g) in row.iter_mut().enumerate() {
                    *g = raw_entry_zero(self.mesh, i, j);
                }
            });
            raw
        })
    }

    /// Raw collocation entry `G_ij(κ)`.
    pub fn raw_entry(&self, i: usize, j: usize, kappa: f64) -> f64 {
        let g0 = match self.raw_zero.get() {
            Some(raw) => raw[i * self.mesh.len() + j],
            None => raw_entry_zero(self.mesh, i, j),
        };
        if kappa == 0.0 {
            g0
        } else {
            g0 * self.rules.kappa_ratio(self.mesh, i, j, kappa)
        }
    }

    fn sym_entry(&self, i: usize, j: usize, kappa: f64) -> f64 {
        let a = self.mesh.areas();
        if i == j {
            return self.raw_entry(i, i, kappa);
        }
        (a[i] * self.raw_entry(i, j, kappa) + a[j] * self.raw_entry(j, i, kappa)) / (2.0 * (a[i] * a[j]).sqrt())
    }

    pub fn operator(&self, kappa: f64) -> Result<BsOperator<'_>> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::NegativeKappa(kappa));
        }
        let n = self.mesh.len();
        if !self.dense {
            return Ok(BsOperator { assembler: self, kappa, dense: None, raw_row_sums: OnceLock::new(), asymmetry: None });
        }
        let zero = self.raw_zero();
        let scaled;
        let raw: &[f64] = if kappa == 0.0 {
            zero
        } else {
            let mut m = zero.to_vec();
            m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, g) in row.iter_mut().enumerate() {
                    *g *= self.rules.kappa_ratio(self.mesh, i, j, kappa);
                }
            });
            scaled = m;
            &scaled
        };
        let a = self.mesh.areas();
        let mut sym = vec![0.0; n * n];
        let (row_sums, row_asym): (Vec<f64>, Vec<(f64, f64)>) = sym
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, row)| {
                let (mut asym, mut peak, mut sum) = (0.0f64, 0.0f64, 0.0);
                for (j, s) in row.iter_mut().enumerate() {
                    let kij = a[i] * raw[i * n + j];
                    let kji = a[j] * raw[j * n + i];
                    *s = (kij + kji) / (2.0 * (a[i] * a[j]).sqrt());
                    asym = asym.max((kij - kji).abs());
                    peak = peak.max(kij.abs());
                    sum += raw[i * n + j];
                }
                (sum, (asym, peak))
            })
            .unzip();
        let (asym, peak) = row_asym.iter().fold((0.0f64, 0.0f64), |acc, r| (acc.0.max(r.0), acc.1.max(r.1)));
        let sums = OnceLock::new();
        let _ = sums.set(row_sums);
        Ok(BsOperator { assembler: self, kappa, dense: Some(sym), raw_row_sums: sums, asymmetry: Some(asym / peak) })
    }
}

/// Discretized `Γ(iκ)` on a mesh.
pub struct BsOperator<'a> {
    assembler: &'a BsAssembler<'a>,
    kappa: f64,
    /// Row-major symmetric `Ĝ` when stored densely.
    dense: Option<Vec<f64>>,
    raw_row_sums: OnceLock<Vec<f64>>,
    asymmetry: Option<f64>,
}

impl<'a> BsOperator<'a> {
    pub fn mesh(&self) -> &SurfaceMesh {
        self.assembler.mesh
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.mesh().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    /// Raw collocation entry `G_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.assembler.raw_entry(i, j, self.kappa)
    }

    /// Symmetric entry `Ĝ_ij`.
    pub fn sym_entry(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(m) => m[i * self.len() + j],
            None => self.assembler.sym_entry(i, j, self.kappa),
        }
    }

    /// `max |a_i G_ij - a_j G_ji| / max |a_i G_ij|` before symmetrization
    /// (dense storage only).
    pub fn collocation_asymmetry(&self) -> Option<f64> {
        self.asymmetry
    }

    /// Row sums `Σ_j G_ij`, the collocated potential of the unit density.
    pub fn row_sums(&self) -> &[f64] {
        self.raw_row_sums.get_or_init(|| {
            (0..self.len())
                .into_par_iter()
                .map(|i| (0..self.len()).map(|j| self.entry(i, j)).sum())
                .collect()
        })
    }

    /// `y = Ĝ x`.
    pub fn apply_sym(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        match &self.dense {
            Some(m) => m.par_chunks(n).map(|row| row.iter().zip(x).map(|(g, v)| g * v).sum()).collect(),
            None => (0..n)
                .into_par_iter()
                .map(|i| (0..n).map(|j| self.assembler.sym_entry(i, j, self.kappa) * x[j]).sum())
                .collect(),
        }
    }

    /// `W^{1/2} Ĝ W^{1/2}` as a dense faer matrix.
    pub fn weighted_dense(&self, w: &[f64]) -> Mat<f64> {
        let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        Mat::from_fn(self.len(), self.len(), |i, j| sw[i] * self.sym_entry(i, j) * sw[j])
    }

    /// Writes the symmetric matrix: magic, `u64` panel count, `f64` κ,
    /// `i64` level (`-1` if unknown), then row-major little-endian `f64`.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        out.write_all(&self.kappa.to_le_bytes())?;
        out.write_all(&self.mesh().level().map_or(-1i64, |l| l as i64).to_le_bytes())?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                out.write_all(&self.sym_entry(i, j).to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a dump written by [`BsOperator::write_dump`]: `(n, κ, level, entries)`.
pub fn read_dump(path: &Path) -> Result<(usize, f64, Option<u32>, Vec<f64>)> {
    let bytes = std::fs::read(path)?;
    let bad = || Error::InvalidArgument("not a matrix dump".into());
    if bytes.len() < 32 || &bytes[..8] != DUMP_MAGIC {
        return Err(bad());
    }
    let word = |k: usize| <[u8; 8]>::try_from(&bytes[8 + 8 * k..16 + 8 * k]).unwrap();
    let n = u64::from_le_bytes(word(0)) as usize;
    let kappa = f64::from_le_bytes(word(1));
    let level = i64::from_le_bytes(word(2));
    if bytes.len() != 32 + 8 * n * n {
        return Err(bad());
    }
    let entries = bytes[32..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((n, kappa, u32::try_from(level).ok(), entries))
}

/// Whether a weight is a coupling strength `α` or a relative density `α̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    Strength,
    RelativeDensity,
}

/// Positive per-panel weight multiplying `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityWeight {
    kind: WeightKind,
    values: Vec<f64>,
}

/// Tolerance on `Σ α̂_j a_j = 1`.
pub const DENSITY_NORMALIZATION_TOL: f64 = 1e-12;

impl DensityWeight {
    pub fn strength(values: Vec<f64>) -> Result<DensityWeight> {
        check_positive(&values)?;
        Ok(DensityWeight { kind: WeightKind::Strength, values })
    }

    pub fn constant_strength(mesh: &SurfaceMesh, alpha0: f64) -> Result<DensityWeight> {
        Self::strength(vec![alpha0; mesh.len()])
    }

    /// Relative density; rejects values whose area integral is not 1.
    pub fn relative_density(mesh: &SurfaceMesh, values: Vec<f64>) -> Result<DensityWeight> {
        check_positive(&values)?;
        check_len(mesh, &values)?;
        let total = integrate(mesh, &values);
        if (total - 1.0).abs() > DENSITY_NORMALIZATION_TOL {
            return Err(Error::BadWeight(format!("relative density integrates to {total}, expected 1")));
        }
        Ok(DensityWeight { kind: WeightKind::RelativeDensity, values })
    }

    /// Rescales positive values to a unit-integral relative density.
    pub fn normalized_density(mesh: &SurfaceMesh, values: &[f64]) -> Result<DensityWeight> {
        check_positive(values)?;
        check_len(mesh, values)?;
        let total = integrate(mesh, values);
        Ok(DensityWeight { kind: WeightKind::RelativeDensity, values: values.iter().map(|v| v / total).collect() })
    }

    /// `α̂ = 1/S`.
    pub fn constant_density(mesh: &SurfaceMesh) -> DensityWeight {
        DensityWeight { kind: WeightKind::RelativeDensity, values: vec![1.0 / mesh.total_area(); mesh.len()] }
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `[α] = Σ α_j a_j` (1 for a relative density).
    pub fn global_strength(&self, mesh: &SurfaceMesh) -> f64 {
        match self.kind {
            WeightKind::RelativeDensity => 1.0,
            WeightKind::Strength => integrate(mesh, &self.values),
        }
    }
}

fn integrate(mesh: &SurfaceMesh, values: &[f64]) -> f64 {
    values.iter().zip(mesh.areas()).map(|(v, a)| v * a).sum()
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        Some(k) => Err(Error::BadWeight(format!("value {} at panel {k} is not positive", values[k]))),
        None if values.is_empty() => Err(Error::BadWeight("empty weight".into())),
        None => Ok(()),
    }
}

fn check_len(mesh: &SurfaceMesh, values: &[f64]) -> Result<()> {
    if values.len() != mesh.len() {
        return Err(Error::BadWeight(format!("{} values for {} panels", values.len(), mesh.len())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenMethod {
    PowerIteration,
    DenseFallback,
}

/// Largest eigenvalue of `αΓ` with its Perron vector and the implied
/// critical strength.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalityReport {
    pub lambda_max: f64,
    /// Eigenvector of `αΓ` in density coordinates, scaled to unit area mean.
    #[serde(skip)]
    pub eigvec: Vec<f64>,
    /// `[α] / λ_max`; equals `1/λ_max` for a relative density.
    pub critical_strength: f64,
    /// `critical_strength / 4π`.
    pub interaction_radius: f64,
    pub iterations: usize,
    /// `‖S v - λ v‖ / λ` for the unit symmetric eigenvector `v`.
    pub residual: f64,
    pub method: EigenMethod,
    pub kappa: f64,
    pub n_panels: usize,
    pub level: Option<u32>,
}

impl CriticalityReport {
    pub fn is_perron_positive(&self) -> bool {
        self.eigvec.iter().all(|v| *v > 0.0)
    }

    pub fn to_keyed_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "lambda_max = {:.15e}", self.lambda_max).unwrap();
        writeln!(s, "critical_strength = {:.15e}", self.critical_strength).unwrap();
        writeln!(s, "interaction_radius = {:.15e}", self.interaction_radius).unwrap();
        writeln!(s, "iterations = {}", self.iterations).unwrap();
        writeln!(s, "residual = {:.3e}", self.residual).unwrap();
        writeln!(s, "method = {:?}", self.method).unwrap();
        writeln!(s, "kappa = {}", self.kappa).unwrap();
        writeln!(s, "panels = {}", self.n_panels).unwrap();
        writeln!(s, "level = {}", self.level.map_or("none".to_string(), |l| l.to_string())).unwrap();
        writeln!(s, "perron_positive = {}", self.is_perron_positive()).unwrap();
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Relative change of successive Rayleigh quotients that ends the iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tolerance: 1e-12, max_iterations: 5000 }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

struct PowerResult {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
    residual: f64,
    method: EigenMethod,
}

/// Power iteration on `S = W^{1/2} Ĝ W^{1/2}` (optionally deflated against
/// unit vectors `deflate` with eigenvalues `shift`).
fn power_iteration(
    op: &BsOperator,
    sqrt_w: &[f64],
    start: Vec<f64>,
    deflate: Option<(&[f64], f64)>,
    opts: &PowerOptions,
) -> Result<PowerResult> {
    let apply = |v: &[f64]| -> Vec<f64> {
        let x: Vec<f64> = v.iter().zip(sqrt_w).map(|(a, b)| a * b).collect();
        let mut y: Vec<f64> = op.apply_sym(&x).iter().zip(sqrt_w).map(|(a, b)| a * b).collect();
        if let Some((u, lambda)) = deflate {
            let c = lambda * dot(u, v);
            y.iter_mut().zip(u).for_each(|(yi, ui)| *yi -= c * ui);
        }
        y
    };
    let mut v = start;
    if let Some((u, _)) = deflate {
        let c = dot(u, &v);
        v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= c * ui);
    }
    normalize(&mut v);
    let mut q_prev = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let y = apply(&v);
        let q = dot(&v, &y);
        change = ((q - q_prev) / q).abs();
        let residual = y.iter().zip(&v).map(|(a, b)| (a - q * b).powi(2)).sum::<f64>().sqrt() / q.abs();
        let mut next = y;
        normalize(&mut next);
        if change < opts.tolerance {
            return Ok(PowerResult { value: q, vector: v, iterations: it, residual, method: EigenMethod::PowerIteration });
        }
        v = next;
        q_prev = q;
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations, change })
}

/// Dense eigen-decomposition of `S`, returning eigenpairs in descending order.
fn dense_eigenpairs(op: &BsOperator, w: &[f64]) -> Result<(Vec<f64>, Mat<f64>)> {
    let s = op.weighted_dense(w);
    let eig = s.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::NonConvergence { iterations: 0, change: f64::NAN })?;
    let n = op.len();
    let values: Vec<f64> = (0..n).rev().map(|k| eig.S().column_vector()[k]).collect();
    let u = eig.U();
    let vectors = Mat::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    Ok((values, vectors))
}

fn weight_roots(op: &BsOperator, w: &DensityWeight) -> Result<Vec<f64>> {
    check_len(op.mesh(), w.values())?;
    Ok(w.values().iter().map(|v| v.sqrt()).collect())
}

/// Largest eigenvalue of the weighted operator `αΓ` with default options.
pub fn lambda_max(op: &BsOperator, w: &DensityWeight) -> Result<CriticalityReport> {
    lambda_max_with(op, w, &PowerOptions::default())
}

pub fn lambda_max_with(op: &BsOperator, w: &DensityWeight, opts: &PowerOptions) -> Result<CriticalityReport> {
    let mesh = op.mesh();
    let sqrt_w = weight_roots(op, w)?;
    let start: Vec<f64> = mesh.areas().iter().zip(&sqrt_w).map(|(a, s)| a.sqrt() / s).collect();
    let result = match power_iteration(op, &sqrt_w, start, None, opts) {
        Ok(r) => r,
        Err(Error::NonConvergence { .. }) => {
            let (values, vectors) = dense_eigenpairs(op, w.values())?;
            let mut v: Vec<f64> = (0..op.len()).map(|i| vectors[(i, 0)]).collect();
            if v.iter().sum::<f64>() < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            PowerResult { value: values[0], vector: v, iterations: opts.max_iterations, residual: 0.0, method: EigenMethod::DenseFallback }
        }
        Err(e) => return Err(e),
    };
    let mut eigvec: Vec<f64> =
        result.vector.iter().zip(&sqrt_w).zip(mesh.areas()).map(|((v, s), a)| v * s / a.sqrt()).collect();
    let mean = integrate(mesh, &eigvec) / mesh.total_area();
    eigvec.iter_mut().for_each(|x| *x /= mean);
    let critical_strength = w.global_strength(mesh) / result.value;
    Ok(CriticalityReport {
        lambda_max: result.value,
        eigvec,
        critical_strength,
        interaction_radius: critical_strength / FOUR_PI,
        iterations: result.iterations,
        residual: result.residual,
        method: result.method,
        kappa: op.kappa(),
        n_panels: mesh.len(),
        level: mesh.level(),
    })
}

/// Second-largest eigenvalue of `αΓ`, by power iteration deflated against
/// the Perron vector (dense eigensolve if that stalls).
pub fn second_eigenvalue(op: &BsOperator, w: &DensityWeight) -> Result<f64> {
    let opts = PowerOptions { tolerance: 1e-12, max_iterations: 20000 };
    let sqrt_w = weight_roots(op, w)?;
    let mesh = op.mesh();
    let start: Vec<f64> = mesh.areas().iter().zip(&sqrt_w).map(|(a, s)| a.sqrt() / s).collect();
    let top = match power_iteration(op, &sqrt_w, start, None, &opts) {
        Ok(r) => r,
        Err(Error::NonConvergence { .. }) => return Ok(dense_eigenpairs(op, w.values())?.0[1]),
        Err(e) => return Err(e),
    };
    // a start vector without the symmetries of the mesh
    let start: Vec<f64> = (0..op.len()).map(|i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5).collect();
    match power_iteration(op, &sqrt_w, start, Some((&top.vector, top.value)), &opts) {
        Ok(r) => Ok(r.value),
        Err(Error::NonConvergence { .. }) => Ok(dense_eigenpairs(op, w.values())?.0[1]),
        Err(e) => Err(e),
    }
}

/// All eigenvalues of `αΓ`, descending, by a dense eigensolve.
pub fn dense_spectrum(op: &BsOperator, w: &DensityWeight) -> Result<Vec<f64>> {
    weight_roots(op, w)?;
    Ok(dense_eigenpairs(op, w.values())?.0)
}

/// `[α̂]_c = 1/λ_max(α̂Γ(0))` for a relative density.
pub fn critical_strength(mesh: &SurfaceMesh, rel_density: &DensityWeight) -> Result<CriticalityReport> {
    if rel_density.kind() != WeightKind::RelativeDensity {
        return Err(Error::BadWeight("critical strength needs a relative density".into()));
    }
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    lambda_max(&op, rel_density)
}

/// `‖Γ‖_∞` estimated as the largest collocated row integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaNorm {
    pub value: f64,
    pub panel: usize,
    pub point: [f64; 3],
}

/// `(1/4π) max_i ∫ 1/|c_i - y| dA(y)` for a κ = 0 operator.
pub fn gamma_inf_norm_of(op: &BsOperator) -> Result<GammaNorm> {
    if op.kappa() != 0.0 {
        return Err(Error::InvalidArgument("the sup norm is defined for kappa = 0".into()));
    }
    let sums = op.row_sums();
    let (panel, value) = sums
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
    let c = op.mesh().centroids()[panel];
    Ok(GammaNorm { value, panel, point: [c.x, c.y, c.z] })
}

pub fn gamma_inf_norm(mesh: &SurfaceMesh) -> Result<GammaNorm> {
    let assembler = BsAssembler::new(mesh);
    let op = assembler.operator(0.0)?;
    gamma_inf_norm_of(&op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, SurfaceSpec};

    fn sphere(level: u32) -> SurfaceMesh {
        build_mesh(&SurfaceSpec::sphere(1.0), level).unwrap()
    }

    #[test]
    fn entries_are_positive_and_decrease_in_kappa() {
        let m = build_mesh(&SurfaceSpec::ellipsoid(1.5, 1.0, 0.8), 1).unwrap();
        let asm = BsAssembler::new(&m);
        let ops: Vec<BsOperator> = [0.0, 0.5, 2.0, 50.0].iter().map(|k| asm.operator(*k).unwrap()).collect();
        for i in 0..m.len() {
            for j in 0..m.len() {
                let vals: Vec<f64> = ops.iter().map(|o| o.entry(i, j)).collect();
                assert!(vals.iter().all(|v| *v > 0.0));
                assert!(vals.windows(2).all(|w| w[1] < w[0]), "{i} {j}: {vals:?}");
            }
        }
        let big = asm.operator(1e3).unwrap();
        assert!((0..m.len()).all(|i| big.row_sums()[i] < 1e-2 * ops[0].row_sums()[i]));
    }

    #[test]
    fn self_polar_rule_reproduces_the_closed_form() {
        let m = sphere(1);
        let rules = PanelRules::new(&m);
        for j in 0..m.len() {
            let exact = raw_entry_zero(&m, j, j) * FOUR_PI;
            assert!((rules.self_polar(j, 0.0) - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn matrix_free_matches_dense() {
        let m = build_mesh(&SurfaceSpec::ellipsoid(1.3, 1.0, 0.9), 1).unwrap();
        let dense = BsAssembler::with_mode(&m, StorageMode::Dense);
        let free = BsAssembler::with_mode(&m, StorageMode::MatrixFree);
        for kappa in [0.0, 0.7] {
            let a = dense.operator(kappa).unwrap();
            let b = free.operator(kappa).unwrap();
            assert!(!b.is_dense());
            let x: Vec<f64> = (0..m.len()).map(|i| 1.0 + (i % 7) as f64).collect();
            let (ya, yb) = (a.apply_sym(&x), b.apply_sym(&x));
            for (p, q) in ya.iter().zip(&yb) {
                assert!((p - q).abs() < 1e-14 * p.abs());
            }
            for (p, q) in a.row_sums().iter().zip(b.row_sums()) {
                assert!((p - q).abs() < 1e-14 * p);
            }
        }
    }

    #[test]
    fn weights_are_validated() {
        let m = sphere(0);
        assert!(DensityWeight::strength(vec![1.0, -1.0]).is_err());
        assert!(DensityWeight::relative_density(&m, vec![1.0; m.len()]).is_err());
        let d = DensityWeight::constant_density(&m);
        assert!((d.values().iter().zip(m.areas()).map(|(v, a)| v * a).sum::<f64>() - 1.0).abs() < 1e-14);
        let n = DensityWeight::normalized_density(&m, &vec![3.0; m.len()]).unwrap();
        assert_eq!(n.kind(), WeightKind::RelativeDensity);
        assert!(DensityWeight::relative_density(&m, n.values().to_vec()).is_ok());
        assert!(BsAssembler::new(&m).operator(-1.0).is_err());
    }

    #[test]
    fn power_iteration_agrees_with_dense_eigensolve() {
        let m = build_mesh(&SurfaceSpec::ellipsoid(2.0, 1.0, 1.0), 1).unwrap();
        let asm = BsAssembler::new(&m);
        let op = asm.operator(0.3).unwrap();
        let w = DensityWeight::strength((0..m.len()).map(|i| 1.0 + 0.1 * (i % 5) as f64).collect()).unwrap();
        let report = lambda_max(&op, &w).unwrap();
        let spectrum = dense_spectrum(&op, &w).unwrap();
        assert!((report.lambda_max - spectrum[0]).abs() < 1e-10 * spectrum[0]);
        assert!((second_eigenvalue(&op, &w).unwrap() - spectrum[1]).abs() < 1e-8 * spectrum[1]);
        assert!(report.is_perron_positive());
        assert_eq!(report.method, EigenMethod::PowerIteration);
    }

    #[test]
    fn eigenvector_solves_the_density_problem() {
        let m = build_mesh(&SurfaceSpec::ellipsoid(1.4, 1.0, 0.7), 1).unwrap();
        let asm = BsAssembler::new(&m);
        let op = asm.operator(0.0).unwrap();
        let w = DensityWeight::constant_strength(&m, 0.8).unwrap();
        let r = lambda_max(&op, &w).unwrap();
        // (α Γ u)_i with the symmetrized kernel equals λ u_i
        let a = m.areas();
        let y: Vec<f64> = op
            .apply_sym(&r.eigvec.iter().zip(a).map(|(u, ai)| u * ai.sqrt()).collect::<Vec<_>>())
            .iter()
            .zip(a)
            .map(|(v, ai)| 0.8 * v / ai.sqrt())
            .collect();
        // Rayleigh-quotient convergence leaves the vector accurate to about √tol
        for (yi, ui) in y.iter().zip(&r.eigvec) {
            assert!((yi - r.lambda_max * ui).abs() < 1e-5 * ui);
        }
    }

    #[test]
    fn dump_round_trip() {
        let m = sphere(0);
        let asm = BsAssembler::new(&m);
        let op = asm.operator(0.25).unwrap();
        let dir = std::env::temp_dir().join(format!("surfcrit-dump-{}", std::process::id()));
        op.write_dump(&dir).unwrap();
        let (n, kappa, level, entries) = read_dump(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!((n, kappa, level), (20, 0.25, Some(0)));
        assert_eq!(entries[3 * 20 + 7], op.sym_entry(3, 7));
    }

    #[test]
    fn keyed_report_lists_the_fields() {
        let m = sphere(1);
        let r = critical_strength(&m, &DensityWeight::constant_density(&m)).unwrap();
        let text = r.to_keyed_text();
        for key in ["lambda_max", "critical_strength", "interaction_radius", "perron_positive = true"] {
            assert!(text.contains(key), "{text}");
        }
        assert!((r.critical_strength * r.lambda_max - 1.0).abs() < 1e-14);
    }
}
