use proptest::prelude::*;

use surfcrit::extrapolate::{richardson, OrderRule};
use surfcrit::geometry::Point;
use surfcrit::study::measure_level;
use surfcrit::{build_mesh, HarmonicCoeffs, SurfaceMesh, SurfaceSpec};

fn surfaces() -> Vec<SurfaceSpec> {
    let rho = HarmonicCoeffs::from_triples(&[(2, 1, 0.8), (3, -2, 0.4)]).unwrap();
    vec![
        SurfaceSpec::sphere(1.0),
        SurfaceSpec::ellipsoid(1.5, 1.0, 0.7),
        SurfaceSpec::radial_harmonic(1.0, 0.2, rho),
    ]
}

fn rotate(mesh: &SurfaceMesh, angle: f64, shift: [f64; 3]) -> SurfaceMesh {
    let (s, c) = angle.sin_cos();
    let verts: Vec<Point> = mesh
        .vertices()
        .iter()
        .map(|v| Point::new(c * v.x - s * v.z + shift[0], v.y + shift[1], s * v.x + c * v.z + shift[2]))
        .collect();
    SurfaceMesh::from_parts(verts, mesh.triangles().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dilation_scales_every_length(which in 0usize..3, s in 0.1f64..20.0) {
        let mesh = build_mesh(&surfaces()[which], 1).unwrap();
        let (a, _) = measure_level(&mesh).unwrap();
        let (b, _) = measure_level(&mesh.dilate(s).unwrap()).unwrap();
        for (x, y) in [
            (a.lambda_gamma, b.lambda_gamma),
            (a.capacity, b.capacity),
            (a.gamma_inf, b.gamma_inf),
            (a.interaction_radius, b.interaction_radius),
        ] {
            prop_assert!((y / (s * x) - 1.0).abs() < 1e-10, "{x} * {s} vs {y}");
        }
        prop_assert!((b.lambda_equilibrium - a.lambda_equilibrium).abs() < 1e-10);
    }

    #[test]
    fn rigid_motions_leave_results_unchanged(
        which in 0usize..3,
        angle in -3.0f64..3.0,
        shift in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let mesh = build_mesh(&surfaces()[which], 1).unwrap();
        let (a, _) = measure_level(&mesh).unwrap();
        let (b, _) = measure_level(&rotate(&mesh, angle, shift)).unwrap();
        for (x, y) in [(a.lambda_gamma, b.lambda_gamma), (a.capacity, b.capacity), (a.gamma_inf, b.gamma_inf)] {
            prop_assert!((y / x - 1.0).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn richardson_is_exact_on_power_models(
        limit in -10.0f64..10.0,
        c in -5.0f64..5.0,
        p in 0.75f64..3.5,
    ) {
        let values: Vec<f64> = (0..4).map(|k| limit + c * 2f64.powf(-p * k as f64)).collect();
        let fixed = richardson(&values, OrderRule::Fixed(p)).unwrap();
        prop_assert!((fixed.value - limit).abs() < 1e-9 * (1.0 + c.abs()));
        if c.abs() > 1e-3 {
            let est = richardson(&values, OrderRule::default()).unwrap();
            prop_assert!((est.observed_order.unwrap() - p).abs() < 1e-6);
            prop_assert!((est.value - limit).abs() < 1e-8 * (1.0 + c.abs()));
        }
    }
}
