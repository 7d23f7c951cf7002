//! Comparisons against closed forms and series evaluated independently of
//! the boundary-element code.

use std::f64::consts::PI;

use surfcrit::bs_operator::dense_spectrum;
use surfcrit::extrapolate::{richardson, OrderRule};
use surfcrit::{build_mesh, gauss_energy, lambda_max, solve_equilibrium, BsAssembler, DensityWeight, SurfaceSpec};

fn rel(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

/// Legendre values `P_0..=P_n` at `x`.
fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![1.0, x];
    for k in 1..n {
        p.push(((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64);
    }
    p.truncate(n + 1);
    p
}

/// Energy `∫∫ μ(x) μ(y) / |x - y|` of an axisymmetric density on the unit
/// sphere from its Legendre moments `J_l = ∫ μ P_l dA`: `E = Σ J_l²`.
fn energy_from_moments(moments: &[f64]) -> f64 {
    moments.iter().map(|j| j * j).sum()
}

/// Composite midpoint quadrature of `∫ μ(cos θ) P_l(cos θ) dA` for `l ≤ n`.
fn legendre_moments(mu: impl Fn(f64) -> f64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let mut out = vec![0.0; n + 1];
    for k in 0..steps {
        let t = lo + (k as f64 + 0.5) * h;
        let m = mu(t);
        for (o, p) in out.iter_mut().zip(legendre_all(n, t)) {
            *o += 2.0 * PI * m * p * h;
        }
    }
    out
}

fn sphere_energy(level: u32, mu: &dyn Fn(f64) -> f64) -> f64 {
    let mesh = build_mesh(&SurfaceSpec::sphere(1.0), level).unwrap();
    let raw: Vec<f64> = mesh.centroids().iter().map(|c| mu(c.z / c.norm())).collect();
    let charge: f64 = raw.iter().zip(mesh.areas()).map(|(v, a)| v * a).sum();
    let density: Vec<f64> = raw.iter().map(|v| v / charge).collect();
    gauss_energy(&mesh, &density).unwrap()
}

#[test]
fn smooth_density_energy_matches_legendre_series() {
    let mu = |t: f64| (1.0 + t) / (4.0 * PI);
    let exact = energy_from_moments(&legendre_moments(mu, 4, -1.0, 1.0));
    assert!((exact - 10.0 / 9.0).abs() < 1e-9, "series {exact}");
    let values: Vec<f64> = [2, 3, 4].iter().map(|&l| sphere_energy(l, &mu)).collect();
    let limit = richardson(&values, OrderRule::default()).unwrap().value;
    assert!(rel(values[2], exact) < 2e-3, "level 4 energy {values:?}");
    assert!(rel(limit, exact) < 5e-4, "extrapolated {limit} vs {exact}");
}

#[test]
fn hemisphere_charge_energy_matches_legendre_series() {
    // J_l = ∫_0^1 P_l = (P_{l-1}(0) - P_{l+1}(0)) / (2l + 1) for l ≥ 1
    let n = 4000;
    let p0 = legendre_all(n + 1, 0.0);
    let mut moments = vec![1.0];
    moments.extend((1..=n).map(|l| (p0[l - 1] - p0[l + 1]) / (2 * l + 1) as f64));
    let exact = energy_from_moments(&moments);
    let numeric = energy_from_moments(&legendre_moments(|_| 1.0 / (2.0 * PI), 12, 0.0, 1.0));
    let partial = energy_from_moments(&moments[..13]);
    assert!((numeric - partial).abs() < 1e-9, "{numeric} vs {partial}");

    let mu = |t: f64| if t > 0.0 { 1.0 } else { 0.0 };
    let values: Vec<f64> = [2, 3, 4].iter().map(|&l| sphere_energy(l, &mu)).collect();
    assert!(values.windows(2).all(|w| (w[1] - exact).abs() < (w[0] - exact).abs()), "{values:?} vs {exact}");
    let limit = richardson(&values, OrderRule::Estimated { nominal: 1.0 }).unwrap().value;
    assert!(rel(limit, exact) < 5e-3, "extrapolated {limit} vs {exact}");
}

#[test]
fn sphere_spectrum_follows_legendre_modes() {
    let mesh = build_mesh(&SurfaceSpec::sphere(1.0), 3).unwrap();
    let asm = BsAssembler::new(&mesh);
    let op = asm.operator(0.0).unwrap();
    let eig = dense_spectrum(&op, &DensityWeight::constant_strength(&mesh, 1.0).unwrap()).unwrap();
    let mut k = 0;
    for l in 0..4 {
        let target = 1.0 / (2 * l + 1) as f64;
        for _ in 0..(2 * l + 1) {
            assert!(rel(eig[k], target) < 1e-2, "eigenvalue {k} = {} vs {target}", eig[k]);
            k += 1;
        }
    }
}

fn extrapolated_capacity(spec: &SurfaceSpec) -> f64 {
    let values: Vec<f64> = [1, 2, 3]
        .iter()
        .map(|&l| {
            let c = solve_equilibrium(&build_mesh(spec, l).unwrap()).unwrap();
            assert!(c.sigma_positive);
            assert!(rel(c.gauss_energy, 1.0 / c.capacity) < 1e-10);
            c.capacity
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    richardson(&values, OrderRule::default()).unwrap().value
}

#[test]
fn capacity_of_spheres_and_spheroids() {
    let c = extrapolated_capacity(&SurfaceSpec::sphere(2.0));
    assert!(rel(c, 2.0) < 1e-3, "{c}");

    // oblate (1, 1, 1/2): C = e / arccos(c/a) with e = sqrt(a² - c²)
    let e = (1.0f64 - 0.25).sqrt();
    let oblate = e / 0.5f64.acos();
    let c = extrapolated_capacity(&SurfaceSpec::ellipsoid(1.0, 1.0, 0.5));
    assert!(rel(c, oblate) < 1e-3, "{c} vs {oblate}");
}

#[test]
fn yukawa_s_wave_on_the_sphere() {
    let mesh = build_mesh(&SurfaceSpec::sphere(1.0), 3).unwrap();
    let asm = BsAssembler::new(&mesh);
    let alpha = DensityWeight::constant_strength(&mesh, 1.0).unwrap();
    for kappa in [0.5, 1.0, 3.0] {
        let lam = lambda_max(&asm.operator(kappa).unwrap(), &alpha).unwrap().lambda_max;
        let exact = (1.0 - (-2.0 * kappa).exp()) / (2.0 * kappa);
        assert!(rel(lam, exact) < 5e-3, "kappa {kappa}: {lam} vs {exact}");
    }
}
