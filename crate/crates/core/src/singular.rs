//! Closed-form potential of a uniform density on a flat triangle.
//!
//! Evaluates `∫_T 1/|x - y| dA(y)` exactly for an arbitrary observation
//! point `x` by decomposing the triangle into edge contributions (in-plane
//! logarithmic terms plus a solid-angle correction for off-plane points).
//! The same expression covers the self-panel case (`x` inside `T`), where the
//! integrand is weakly singular.

use nalgebra::Vector3;

type V3 = Vector3<f64>;

/// `∫_T 1/|x - y| dA(y)` for the triangle `(p0, p1, p2)`.
///
/// `normal` must be the unit normal `(p1 - p0) × (p2 - p0) / |…|`.
pub fn inv_r_triangle(x: &V3, tri: [&V3; 3], normal: &V3) -> f64 {
    let height = (x - tri[0]).dot(normal);
    let abs_h = height.abs();
    let foot = x - normal * height;
    let h2 = height * height;

    let mut total = 0.0;
    for e in 0..3 {
        let a = tri[e];
        let b = tri[(e + 1) % 3];
        let edge = b - a;
        let len = edge.norm();
        let t = edge / len;
        let m = t.cross(normal);
        let l_minus = (a - foot).dot(&t);
        let l_plus = (b - foot).dot(&t);
        let p0 = (a - foot).dot(&m);
        let r_minus = (x - a).norm();
        let r_plus = (x - b).norm();
        let r0_sq = p0 * p0 + h2;

        let scale = len.max(abs_h);
        if p0.abs() > 1e-14 * scale {
            total += p0 * (log_r_plus_l(r_plus, l_plus, r0_sq) - log_r_plus_l(r_minus, l_minus, r0_sq));
        }
        if abs_h > 1e-14 * scale {
            total -= abs_h
                * ((p0 * l_plus).atan2(r0_sq + abs_h * r_plus)
                    - (p0 * l_minus).atan2(r0_sq + abs_h * r_minus));
        }
    }
    total
}

/// `ln(R + l)` with `R = sqrt(r0² + l²)`, stable for negative `l`.
#[inline]
fn log_r_plus_l(r: f64, l: f64, r0_sq: f64) -> f64 {
    if l >= 0.0 {
        (r + l).ln()
    } else {
        r0_sq.ln() - (r - l).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_on;

    /// Independent oracle: Duffy-free polar integration around the projected
    /// point is avoided; instead split the triangle into three sub-triangles
    /// meeting at the foot point and integrate each with a tensor
    /// Gauss-Legendre rule in collapsed coordinates (singularity at the apex
    /// cancels against the Jacobian).
    fn brute_force(x: &V3, tri: [&V3; 3], n: usize) -> f64 {
        let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        let h = (x - tri[0]).dot(&normal);
        let foot = x - normal * h;
        let (g, w) = gauss_legendre_on(n, 0.0, 1.0);
        let mut total = 0.0;
        for e in 0..3 {
            let a = tri[e];
            let b = tri[(e + 1) % 3];
            // signed area (relative to the normal) handles feet outside T
            let sub_area2 = (a - foot).cross(&(b - foot)).dot(&normal);
            for (s, ws) in g.iter().zip(&w) {
                for (t, wt) in g.iter().zip(&w) {
                    // y = foot + s * ((1 - t) a' + t b'), Jacobian = s * 2A
                    let edge_pt = a * (1.0 - t) + b * *t;
                    let y = foot + (edge_pt - foot) * *s;
                    let r = (x - y).norm();
                    total += ws * wt * s * sub_area2 / r;
                }
            }
        }
        total
    }

    fn tri() -> [V3; 3] {
        [
            V3::new(0.1, -0.2, 0.05),
            V3::new(1.3, 0.1, -0.1),
            V3::new(0.4, 0.9, 0.2),
        ]
    }

    #[test]
    fn matches_quadrature_oracle_off_plane_and_in_plane() {
        let t = tri();
        let refs = [&t[0], &t[1], &t[2]];
        let normal = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
        let centroid = (t[0] + t[1] + t[2]) / 3.0;
        let points = [
            centroid,
            centroid + normal * 0.3,
            centroid - normal * 0.01,
            V3::new(2.0, -1.0, 0.7),
            t[0] + (t[1] - t[0]) * 0.5 + normal * 0.2,
            // in-plane, outside the triangle
            t[1] + (t[1] - t[2]) * 0.4,
        ];
        for x in &points {
            let exact = inv_r_triangle(x, refs, &normal);
            let oracle = brute_force(x, refs, 64);
            assert!(
                (exact - oracle).abs() < 1e-10 * oracle.abs().max(1.0),
                "x={x:?}: {exact} vs {oracle}"
            );
        }
    }

    #[test]
    fn equilateral_centroid_closed_form() {
        // For an equilateral triangle of side s, the centroid potential is
        // 3 * d * asinh(sqrt(3)) with inradius d = s / (2 sqrt 3).
        let s = 0.7;
        let t = [
            V3::new(0.0, 0.0, 0.0),
            V3::new(s, 0.0, 0.0),
            V3::new(0.5 * s, 0.5 * 3f64.sqrt() * s, 0.0),
        ];
        let n = V3::new(0.0, 0.0, 1.0);
        let c = (t[0] + t[1] + t[2]) / 3.0;
        let d = s / (2.0 * 3f64.sqrt());
        let expected = 3.0 * d * 2.0 * (3f64.sqrt()).asinh();
        let got = inv_r_triangle(&c, [&t[0], &t[1], &t[2]], &n);
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn far_field_tends_to_area_over_distance() {
        let t = tri();
        let normal = (t[1] - t[0]).cross(&(t[2] - t[0]));
        let area = 0.5 * normal.norm();
        let normal = normal.normalize();
        let c = (t[0] + t[1] + t[2]) / 3.0;
        let x = c + V3::new(300.0, -200.0, 100.0);
        let got = inv_r_triangle(&x, [&t[0], &t[1], &t[2]], &normal);
        let approx = area / (x - c).norm();
        // the dipole term vanishes about the centroid; the quadrupole is O((size/d)²)
        assert!((got - approx).abs() < 1e-4 * approx);
    }

    #[test]
    fn vertex_and_edge_points_are_finite() {
        let t = tri();
        let normal = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
        let refs = [&t[0], &t[1], &t[2]];
        let at_vertex = inv_r_triangle(&t[0], refs, &normal);
        let mid_edge = inv_r_triangle(&((t[0] + t[1]) * 0.5), refs, &normal);
        assert!(at_vertex.is_finite() && at_vertex > 0.0);
        assert!(mid_edge.is_finite() && mid_edge > 0.0);
        let oracle = brute_force(&((t[0] + t[1]) * 0.5), refs, 64);
        assert!((mid_edge - oracle).abs() < 1e-9);
    }
}
