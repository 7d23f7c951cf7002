use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Vector3;

use super::spec::SurfaceSpec;
use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Closed, outward-oriented triangulation with per-panel geometry.
///
/// Panel areas, centroids and unit normals are derived from the flat
/// triangles; `total_area` is the sequential sum of the panel areas.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Point>,
    areas: Vec<f64>,
    normals: Vec<Point>,
    diameters: Vec<f64>,
    total_area: f64,
    spec: Option<SurfaceSpec>,
    level: Option<u32>,
}

impl SurfaceMesh {
    /// Builds a mesh from raw vertices and index triples, rejecting
    /// degenerate panels and out-of-range indices.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<SurfaceMesh> {
        let n = triangles.len();
        let mut centroids = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut diameters = Vec::with_capacity(n);
        for (index, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {index} references a missing vertex")));
            }
            let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let cross = (b - a).cross(&(c - a));
            let norm = cross.norm();
            let area = 0.5 * norm;
            let diam = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            if !(area > 1e-14 * diam * diam) {
                return Err(Error::DegeneratePanel { index, area });
            }
            centroids.push((a + b + c) / 3.0);
            areas.push(area);
            normals.push(cross / norm);
            diameters.push(diam);
        }
        let total_area = areas.iter().sum();
        Ok(SurfaceMesh {
            vertices,
            triangles,
            centroids,
            areas,
            normals,
            diameters,
            total_area,
            spec: None,
            level: None,
        })
    }

    pub fn with_provenance(mut self, spec: SurfaceSpec, level: u32) -> SurfaceMesh {
        self.spec = Some(spec);
        self.level = Some(level);
        self
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    /// Longest edge of each panel.
    pub fn diameters(&self) -> &[f64] {
        &self.diameters
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn spec(&self) -> Option<&SurfaceSpec> {
        self.spec.as_ref()
    }

    pub fn level(&self) -> Option<u32> {
        self.level
    }

    pub fn panel(&self, i: usize) -> [&Point; 3] {
        let t = &self.triangles[i];
        [&self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]]
    }

    /// Largest distance between any two vertices' bounding-box corners.
    pub fn bounding_diameter(&self) -> f64 {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// `Σ area · normal`, which vanishes for a closed surface.
    pub fn area_weighted_normal_sum(&self) -> Point {
        self.areas.iter().zip(&self.normals).fold(Point::zeros(), |acc, (a, n)| acc + n * *a)
    }

    /// Enclosed volume by the divergence theorem; positive for outward orientation.
    pub fn enclosed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Checks that every edge is shared by exactly two triangles with
    /// opposite orientation.
    pub fn check_closed(&self) -> Result<()> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let e = (t[k], t[(k + 1) % 3]);
                *directed.entry(e).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) used {count} times in one direction")));
            }
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidArgument(format!("edge ({a},{b}) has no opposite twin")));
            }
        }
        Ok(())
    }

    /// Uniform dilation by `s > 0`.
    pub fn dilate(&self, s: f64) -> Result<SurfaceMesh> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {s}")));
        }
        let s2 = s * s;
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|v| *v *= s);
        out.centroids.iter_mut().for_each(|c| *c *= s);
        out.areas.iter_mut().for_each(|a| *a *= s2);
        out.diameters.iter_mut().for_each(|d| *d *= s);
        out.total_area = out.areas.iter().sum();
        out.spec = self.spec.as_ref().map(|spec| dilate_spec(spec, s));
        Ok(out)
    }
}

fn dilate_spec(spec: &SurfaceSpec, s: f64) -> SurfaceSpec {
    match spec {
        SurfaceSpec::Sphere { radius } => SurfaceSpec::Sphere { radius: radius * s },
        SurfaceSpec::Ellipsoid { axes } => SurfaceSpec::Ellipsoid { axes: axes.map(|a| a * s) },
        SurfaceSpec::RadialHarmonic { r0, epsilon, rho } => {
            SurfaceSpec::RadialHarmonic { r0: r0 * s, epsilon: *epsilon, rho: rho.clone() }
        }
        // no closed spec for a scaled revolution surface; keep the original as provenance
        other => other.clone(),
    }
}

/// `√(S / 4π)`.
pub fn surface_radius(area: f64) -> Result<f64> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::InvalidArgument(format!("area must be positive, got {area}")));
    }
    Ok((area / (4.0 * PI)).sqrt())
}

/// Meshing resolution knobs for surfaces of revolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Azimuthal segments of the level-0 grid.
    pub revolution_azimuthal: usize,
    /// Target meridian-to-azimuthal panel length ratio at level 0.
    pub revolution_panel_aspect: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { revolution_azimuthal: 6, revolution_panel_aspect: 1.0 }
    }
}

/// Meshes `spec` at refinement `level`; panel count grows ×4 per level.
pub fn build_mesh(spec: &SurfaceSpec, level: u32) -> Result<SurfaceMesh> {
    build_mesh_with(spec, level, &MeshOptions::default())
}

pub fn build_mesh_with(spec: &SurfaceSpec, level: u32, opts: &MeshOptions) -> Result<SurfaceMesh> {
    spec.validate()?;
    let (vertices, triangles) = match spec {
        SurfaceSpec::Revolution { .. } => revolution_mesh(spec, level, opts),
        _ => {
            let (dirs, tris) = icosphere(level);
            (dirs.iter().map(|u| spec.radial_point(u)).collect(), tris)
        }
    };
    Ok(SurfaceMesh::from_parts(vertices, triangles)?.with_provenance(spec.clone(), level))
}

/// Unit-sphere icosahedron subdivided `level` times, outward oriented.
/// The base solid is symmetric under every coordinate reflection.
pub fn icosphere(level: u32) -> (Vec<Point>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Point> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Point::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for t in tris.iter_mut() {
        let [a, b, c] = [verts[t[0]], verts[t[1]], verts[t[2]]];
        if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
            t.swap(1, 2);
        }
    }
    for _ in 0..level {
        (verts, tris) = subdivide(verts, &tris, |a, b| (a + b).normalize());
    }
    (verts, tris)
}

/// One 1→4 split; `midpoint` produces the new vertex parameter of an edge.
fn subdivide<P: Clone>(
    mut verts: Vec<P>,
    tris: &[[usize; 3]],
    midpoint: impl Fn(&P, &P) -> P,
) -> (Vec<P>, Vec<[usize; 3]>) {
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |i: usize, j: usize, verts: &mut Vec<P>| -> usize {
        let key = (i.min(j), i.max(j));
        *cache.entry(key).or_insert_with(|| {
            verts.push(midpoint(&verts[i], &verts[j]));
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(tris.len() * 4);
    for &[a, b, c] in tris {
        let ab = mid(a, b, &mut verts);
        let bc = mid(b, c, &mut verts);
        let ca = mid(c, a, &mut verts);
        out.push([a, ab, ca]);
        out.push([b, bc, ab]);
        out.push([c, ca, bc]);
        out.push([ab, bc, ca]);
    }
    (verts, out)
}

/// Parameter `(u, t)` of a revolution-surface vertex; poles carry `pole`.
#[derive(Debug, Clone, Copy)]
struct RevParam {
    u: f64,
    t: f64,
    pole: bool,
}

fn revolution_mesh(spec: &SurfaceSpec, level: u32, opts: &MeshOptions) -> (Vec<Point>, Vec<[usize; 3]>) {
    let SurfaceSpec::Revolution { profile, epsilon } = spec else {
        unreachable!()
    };
    let nu = opts.revolution_azimuthal.max(3);
    let meridian = spec.meridian_length().unwrap_or(2.0 / epsilon);
    let fmax = (1..200)
        .map(|k| profile.value(-1.0 + 2.0 * k as f64 / 200.0))
        .fold(0.0, f64::max);
    let girth = 2.0 * PI * epsilon * fmax;
    let nt = ((meridian * nu as f64 / (girth * opts.revolution_panel_aspect)).ceil() as usize).max(4);

    // level-0 grid: poles at t = 0 and t = π, (nt - 1) rings of nu vertices
    let mut params = vec![RevParam { u: 0.0, t: 0.0, pole: true }];
    for k in 1..nt {
        for j in 0..nu {
            params.push(RevParam {
                u: 2.0 * PI * j as f64 / nu as f64,
                t: PI * k as f64 / nt as f64,
                pole: false,
            });
        }
    }
    params.push(RevParam { u: 0.0, t: PI, pole: true });
    let south = params.len() - 1;
    let ring = |k: usize, j: usize| 1 + (k - 1) * nu + (j % nu);
    let mut tris = Vec::new();
    for j in 0..nu {
        tris.push([0, ring(1, j + 1), ring(1, j)]);
    }
    for k in 1..nt - 1 {
        for j in 0..nu {
            let (a, b, c, d) = (ring(k, j), ring(k, j + 1), ring(k + 1, j + 1), ring(k + 1, j));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    for j in 0..nu {
        tris.push([ring(nt - 1, j), ring(nt - 1, j + 1), south]);
    }
    // (u, t) is counter-clockwise for the outward normal x_u × x_t
    for _ in 0..level {
        (params, tris) = subdivide(params, &tris, |a, b| match (a.pole, b.pole) {
            (true, _) => RevParam { u: b.u, t: 0.5 * (a.t + b.t), pole: false },
            (_, true) => RevParam { u: a.u, t: 0.5 * (a.t + b.t), pole: false },
            _ => {
                let mut ub = b.u;
                if ub - a.u > PI {
                    ub -= 2.0 * PI;
                } else if a.u - ub > PI {
                    ub += 2.0 * PI;
                }
                RevParam { u: (0.5 * (a.u + ub)).rem_euclid(2.0 * PI), t: 0.5 * (a.t + b.t), pole: false }
            }
        });
    }
    let verts = params
        .iter()
        .map(|p| {
            let v = -p.t.cos();
            if p.pole {
                Point::new(0.0, 0.0, v / epsilon)
            } else {
                let r = epsilon * profile.value(v);
                Point::new(r * p.u.cos(), r * p.u.sin(), v / epsilon)
            }
        })
        .collect();
    (verts, tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::profile::Profile;
    use crate::harmonics::HarmonicCoeffs;

    fn y20() -> HarmonicCoeffs {
        HarmonicCoeffs::single(2, 0, 1.0).unwrap()
    }

    fn all_specs() -> Vec<SurfaceSpec> {
        vec![
            SurfaceSpec::sphere(1.0),
            SurfaceSpec::ellipsoid(2.0, 1.0, 1.0),
            SurfaceSpec::radial_harmonic(1.0, 0.2, y20()),
            SurfaceSpec::revolution(Profile::Ellipse, 1.0),
        ]
    }

    #[test]
    fn icosphere_counts_and_panel_growth() {
        for level in 0..4 {
            let (v, t) = icosphere(level);
            assert_eq!(t.len(), 20 * 4usize.pow(level));
            assert_eq!(v.len(), 10 * 4usize.pow(level) + 2);
        }
        for spec in all_specs() {
            let m0 = build_mesh(&spec, 0).unwrap();
            let m1 = build_mesh(&spec, 1).unwrap();
            assert_eq!(m1.len(), 4 * m0.len(), "{spec}");
        }
    }

    #[test]
    fn meshes_are_closed_oriented_and_satisfy_gauss_identity() {
        for spec in all_specs() {
            for level in 0..3 {
                let m = build_mesh(&spec, level).unwrap();
                m.check_closed().unwrap();
                assert!(m.enclosed_volume() > 0.0, "{spec} level {level} inward");
                let s = m.area_weighted_normal_sum().norm();
                assert!(s < 1e-10 * m.total_area(), "{spec}: {s}");
                for n in m.normals() {
                    assert!((n.norm() - 1.0).abs() < 1e-12);
                }
                assert!(m.areas().iter().all(|a| *a > 0.0));
                let sum: f64 = m.areas().iter().sum();
                assert_eq!(sum, m.total_area());
            }
        }
    }

    #[test]
    fn vertices_lie_on_the_surface() {
        let m = build_mesh(&SurfaceSpec::sphere(2.5), 3).unwrap();
        for v in m.vertices() {
            assert!((v.norm() - 2.5).abs() < 1e-14);
        }
        let spec = SurfaceSpec::ellipsoid(2.0, 1.0, 0.5);
        for v in build_mesh(&spec, 2).unwrap().vertices() {
            let q = (v.x / 2.0).powi(2) + v.y.powi(2) + (v.z / 0.5).powi(2);
            assert!((q - 1.0).abs() < 1e-13);
        }
        let spec = SurfaceSpec::revolution(Profile::Ellipse, 0.7);
        let (a, c) = (0.7 / (PI * PI), 1.0 / 0.7);
        for v in build_mesh(&spec, 2).unwrap().vertices() {
            let q = (v.x * v.x + v.y * v.y) / (a * a) + (v.z / c).powi(2);
            assert!((q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centroid_radial_error_is_second_order() {
        let errs: Vec<f64> = (1..5)
            .map(|l| {
                let m = build_mesh(&SurfaceSpec::sphere(1.0), l).unwrap();
                m.centroids().iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        }
    }

    #[test]
    fn area_converges_monotonically() {
        for spec in all_specs() {
            let exact = spec.exact_area();
            let areas: Vec<f64> = (0..5).map(|l| build_mesh(&spec, l).unwrap().total_area()).collect();
            let diffs: Vec<f64> = areas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            for w in diffs[2..].windows(2) {
                assert!(w[1] < w[0], "{spec}: {diffs:?}");
            }
            assert!((areas[4] - exact).abs() < 5e-3 * exact, "{spec}: {} vs {exact}", areas[4]);
        }
    }

    #[test]
    fn zero_deformation_reproduces_the_sphere() {
        let a = build_mesh(&SurfaceSpec::sphere(1.0), 3).unwrap();
        let b = build_mesh(&SurfaceSpec::radial_harmonic(1.0, 0.0, y20()), 3).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.triangles(), b.triangles());
    }

    #[test]
    fn revolution_area_exceeds_one() {
        for eps in [0.5, 1.0, 2.0] {
            let spec = SurfaceSpec::revolution(Profile::Ellipse, eps);
            assert!(spec.exact_area() > 1.0);
        }
    }

    #[test]
    fn surface_radius_values() {
        assert!((surface_radius(4.0 * PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((surface_radius(16.0 * PI).unwrap() - 2.0).abs() < 1e-15);
        assert!(surface_radius(0.0).is_err());
        assert!(surface_radius(-3.0).is_err());
    }

    #[test]
    fn dilation_scales_geometry() {
        let m = build_mesh(&SurfaceSpec::sphere(1.0), 2).unwrap();
        let same = m.dilate(1.0).unwrap();
        assert_eq!(same.vertices(), m.vertices());
        assert_eq!(same.areas(), m.areas());
        let d2 = m.dilate(2.0).unwrap();
        let d3 = m.dilate(3.0).unwrap();
        for i in 0..m.len() {
            assert!((d3.areas()[i] - 9.0 * m.areas()[i]).abs() <= 1e-15 * d3.areas()[i]);
            assert_eq!(d2.normals()[i], m.normals()[i]);
        }
        assert!((d2.total_area() - 4.0 * m.total_area()).abs() < 1e-12);
        assert!(m.dilate(0.0).is_err());
        assert!(m.dilate(-1.0).is_err());
    }

    #[test]
    fn degenerate_panel_is_rejected() {
        let v = vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0)];
        assert!(matches!(
            SurfaceMesh::from_parts(v, vec![[0, 1, 2]]),
            Err(Error::DegeneratePanel { .. })
        ));
    }

    #[test]
    fn embedding_violation_is_rejected() {
        let spec = SurfaceSpec::radial_harmonic(1.0, 2.0, y20());
        assert!(matches!(build_mesh(&spec, 0), Err(Error::Embedding { .. })));
    }
}
