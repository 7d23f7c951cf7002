use std::fmt::Write as _;

use surfcrit::bs_operator::{BsAssembler, DensityWeight};
use surfcrit::capacity::spheroid_capacity;
use surfcrit::extrapolate::Extrapolated;
use surfcrit::geometry::io::mesh_to_text;
use surfcrit::geometry::{build_mesh_with, SurfaceSpec};
use surfcrit::spectrum::{kappa_sweep, sweep_csv, Classification, GroundStateOptions};
use surfcrit::study::{
    bound_state_study, deform_scan, elongated_sweep, surface_study, BoundStateOptions, SurfaceStudy,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{f, Keyed, Output};

fn put_limit(k: &mut Keyed, key: &str, e: &Extrapolated) {
    k.num(key, e.value);
    k.num(&format!("{key}_error"), e.error_estimate);
    match e.observed_order {
        Some(p) => k.num(&format!("{key}_observed_order"), p),
        None => k.put(&format!("{key}_observed_order"), "none"),
    };
}

fn study(cfg: &RunConfig) -> Result<(SurfaceSpec, SurfaceStudy), CliError> {
    let spec = cfg.surface()?;
    let study = surface_study(&spec, &cfg.run.levels, &cfg.study_options()?)?;
    Ok((spec, study))
}

/// Capacity of the smooth surface when a closed form is known.
fn closed_form_capacity(spec: &SurfaceSpec) -> Option<f64> {
    match spec {
        SurfaceSpec::Sphere { radius } => Some(*radius),
        SurfaceSpec::Ellipsoid { axes: [a, b, c] } => {
            let (polar, equatorial) = if b == c {
                (*a, *b)
            } else if a == b {
                (*c, *a)
            } else if a == c {
                (*b, *a)
            } else {
                return None;
            };
            spheroid_capacity(polar, equatorial).ok()
        }
        _ => None,
    }
}

pub fn critical(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let (spec, st) = study(cfg)?;
    let levels = &cfg.run.levels;
    let mut csv = String::from(
        "level,panels,mesh_area,lambda_max,critical_constant_strength,critical_global_strength,interaction_radius,gamma_inf,perron_positive,collocation_asymmetry\n",
    );
    for r in &st.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.n_panels,
            f(r.mesh_area),
            f(r.lambda_gamma),
            f(r.critical_constant_strength),
            f(r.critical_global_strength),
            f(r.interaction_radius),
            f(r.gamma_inf),
            r.perron_positive,
            f(r.collocation_asymmetry)
        )
        .unwrap();
    }
    out.table("critical", &csv, levels)?;

    let finest = st.rows.last().expect("at least one level");
    let mut k = Keyed::default();
    k.put("surface", &spec).num("exact_area", st.exact_area);
    k.num("finest_lambda_max", finest.lambda_gamma);
    k.num("finest_critical_global_strength", finest.critical_global_strength);
    k.num("finest_interaction_radius", finest.interaction_radius);
    k.put("perron_positive", st.rows.iter().all(|r| r.perron_positive));
    if let (Some(_), Some(l)) = (cfg.order_rule()?, &st.limits) {
        put_limit(&mut k, "lambda_max", &l.lambda_gamma);
        put_limit(&mut k, "critical_constant_strength", &l.critical_constant_strength);
        put_limit(&mut k, "critical_global_strength", &l.critical_global_strength);
        put_limit(&mut k, "interaction_radius", &l.interaction_radius);
        put_limit(&mut k, "capacity", &l.capacity);
        k.num("capacity_minus_radius", l.capacity.value - l.interaction_radius.value);
        let slack = l.capacity.error_estimate + l.interaction_radius.error_estimate;
        k.put("radius_within_capacity", l.interaction_radius.value <= l.capacity.value + slack);
    }
    out.summary("critical", k.text(), levels)?;
    out.json("critical", &st, levels)
}

pub fn capacity(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let (spec, st) = study(cfg)?;
    let levels = &cfg.run.levels;
    let mut csv = String::from(
        "level,panels,capacity,inverse_capacity,gauss_energy,residual,sigma_spread,sigma_positive,lambda_equilibrium\n",
    );
    for r in &st.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.level,
            r.n_panels,
            f(r.capacity),
            f(1.0 / r.capacity),
            f(r.gauss_energy),
            f(r.capacity_residual),
            f(r.sigma_spread),
            r.sigma_positive,
            f(r.lambda_equilibrium)
        )
        .unwrap();
    }
    out.table("capacity", &csv, levels)?;
    if cfg.capacity.export_sigma {
        let mesh = st.finest_mesh.as_ref().expect("finest mesh is kept");
        let sigma: String = mesh
            .centroids()
            .iter()
            .zip(mesh.areas())
            .zip(&st.finest_sigma)
            .enumerate()
            .fold(String::from("panel,cx,cy,cz,area,sigma\n"), |mut s, (i, ((c, a), v))| {
                writeln!(s, "{i},{},{},{},{},{}", f(c.x), f(c.y), f(c.z), f(*a), f(*v)).unwrap();
                s
            });
        out.table("sigma", &sigma, &levels[levels.len() - 1..])?;
    }

    let finest = st.rows.last().expect("at least one level");
    let mut k = Keyed::default();
    k.put("surface", &spec);
    k.num("finest_capacity", finest.capacity);
    k.num("finest_gauss_energy_minus_inverse_capacity", finest.gauss_energy - 1.0 / finest.capacity);
    k.num("finest_sigma_spread", finest.sigma_spread);
    k.put("sigma_positive", st.rows.iter().all(|r| r.sigma_positive));
    if let (Some(_), Some(l)) = (cfg.order_rule()?, &st.limits) {
        put_limit(&mut k, "capacity", &l.capacity);
        put_limit(&mut k, "lambda_equilibrium", &l.lambda_equilibrium);
        if let Some(exact) = closed_form_capacity(&spec) {
            k.num("capacity_closed_form", exact);
            k.num("capacity_relative_deviation", l.capacity.value / exact - 1.0);
        }
    } else if let Some(exact) = closed_form_capacity(&spec) {
        k.num("capacity_closed_form", exact);
    }
    out.summary("capacity", k.text(), levels)?;
    out.json("capacity", &st, levels)
}

pub fn deform(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let rho = cfg.deformation()?;
    let levels = &cfg.run.levels;
    let d = &cfg.deform_scan;
    let scan = deform_scan(&rho, &d.epsilons, levels, &cfg.study_options()?)?;
    let mut csv = String::from(
        "epsilon,alpha_bem,sbar,product_bem,alpha_series,sbar_series,product_series,deficit,deficit_error,deficit_over_eps2,deficit_over_eps4,series_deficit_over_eps2",
    );
    for l in levels {
        write!(csv, ",deficit_level{l}").unwrap();
    }
    csv.push('\n');
    for r in &scan.rows {
        let e2 = r.epsilon * r.epsilon;
        write!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            f(r.epsilon),
            f(r.alpha),
            f(r.sbar),
            f(r.product),
            f(r.series.alpha),
            f(r.series.sbar),
            f(r.series.product),
            f(r.deficit),
            f(r.deficit_error),
            f(r.deficit_over(2)),
            f(r.deficit_over(4)),
            f((1.0 - r.series.product) / e2)
        )
        .unwrap();
        for v in &r.level_deficit {
            write!(csv, ",{}", f(*v)).unwrap();
        }
        csv.push('\n');
    }
    out.table("deform_scan", &csv, levels)?;

    let mut k = Keyed::default();
    k.put("rho", rho.triples().iter().map(|(n, m, v)| format!("({n},{m},{v})")).collect::<Vec<_>>().join(";"));
    k.num("series_product2", scan.series.product2);
    match scan.series.fourth_order {
        Some(c) => k.num("series_product4", c),
        None => k.put("series_product4", "none"),
    };
    match scan.second_order_limit(d.fit_max) {
        Ok(v) => k.num("deficit_over_eps2_limit", v),
        Err(e) => k.put("deficit_over_eps2_limit", format_args!("unavailable ({e})")),
    };
    match scan.power_law(d.slope_range[0], d.slope_range[1]) {
        Ok(p) => k.num("loglog_slope", p.slope).num("loglog_prefactor", p.prefactor).put("loglog_points", p.points),
        Err(e) => k.put("loglog_slope", format_args!("unavailable ({e})")),
    };
    out.summary("deform_scan", k.text(), levels)?;
    out.json("deform_scan", &scan, levels)
}

pub fn elongated(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let (profile, opts) = cfg.elongation()?;
    let sweep = elongated_sweep(&profile, &cfg.elongated.epsilons, &opts)?;
    let levels: Vec<u32> = sweep.rows.iter().map(|r| r.level).collect();
    let mut csv = String::from("epsilon,area,mesh_area,level,panels,gamma_inf,threshold,certified,lambda_max,classification\n");
    for r in &sweep.rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            f(r.epsilon),
            f(r.area),
            f(r.mesh_area),
            r.level,
            r.n_panels,
            f(r.certificate.gamma_inf),
            f(r.certificate.threshold),
            r.certificate.holds,
            f(r.lambda_max),
            r.classification.as_str()
        )
        .unwrap();
    }
    out.table("elongated", &csv, &levels)?;
    let mut k = Keyed::default();
    k.put("profile", profile.name()).num("alpha0", opts.alpha0);
    match sweep.first_certified {
        Some(e) => k.num("first_certified_epsilon", e),
        None => k.put("first_certified_epsilon", "none"),
    };
    k.put("gamma_inf_monotone", sweep.monotone);
    k.put("area_above_one", sweep.rows.iter().all(|r| r.area > 1.0));
    k.put("certificate_sound", sweep.rows.iter().all(|r| !r.certificate.holds || r.lambda_max < 1.0));
    out.summary("elongated", k.text(), &levels)?;
    out.json("elongated", &sweep, &levels)?;
    match sweep.first_certified {
        Some(_) => Ok(()),
        None => Err(CliError::Numerical("sweep ended without a certificate; the trend table was written".into())),
    }
}

pub fn bound_state(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.surface()?;
    let b = &cfg.bound_state;
    let alpha0 = b.alpha0.ok_or_else(|| CliError::Config("[bound_state] needs `alpha0`".into()))?;
    let levels = &cfg.run.levels;
    let opts = BoundStateOptions {
        study: cfg.study_options()?,
        ground: GroundStateOptions {
            bracket: b.bracket.map(|[lo, hi]| (lo, hi)),
            tolerance: b.tolerance,
            max_evaluations: b.max_evaluations,
            ..Default::default()
        },
        tol_band: b.tol_band,
    };
    let st = bound_state_study(&spec, alpha0, levels, &opts)?;
    let mut csv = String::from("level,panels,lambda_at_zero,kappa_star,energy,residual,evaluations\n");
    for r in &st.rows {
        match r.ground_state {
            Some(g) => writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.level,
                r.n_panels,
                f(r.lambda_at_zero),
                f(g.kappa_star),
                f(g.energy),
                f(g.residual),
                g.evaluations
            ),
            None => writeln!(csv, "{},{},{},,,,", r.level, r.n_panels, f(r.lambda_at_zero)),
        }
        .unwrap();
    }
    out.table("bound_state", &csv, levels)?;
    if !b.kappas.is_empty() {
        let mesh = build_mesh_with(&spec, levels[levels.len() - 1], &opts.study.mesh)?;
        let rows = kappa_sweep(&BsAssembler::new(&mesh), &DensityWeight::constant_strength(&mesh, alpha0)?, &b.kappas)?;
        out.table("kappa_sweep", &sweep_csv(&rows), &levels[levels.len() - 1..])?;
    }

    let mut k = Keyed::default();
    k.put("surface", &spec).num("alpha0", alpha0);
    k.put("classification", st.classification.as_str());
    k.num("lambda_at_zero", st.lambda_at_zero).num("lambda_error", st.lambda_error).num("tol_band", st.tol_band);
    match (&st.kappa_star, st.classification) {
        (Some(e), _) => {
            put_limit(&mut k, "kappa_star", e);
            k.num("energy", -e.value * e.value);
        }
        (None, Classification::Supercritical) => {
            let g = st.rows.last().and_then(|r| r.ground_state);
            match g {
                Some(g) => k.num("kappa_star", g.kappa_star).num("energy", g.energy),
                None => k.put("kappa_star", "unresolved"),
            };
        }
        (None, _) => {
            k.put("bound_state", "none");
        }
    }
    if let Some(o) = st.oracle_kappa {
        k.num("oracle_kappa_star", o);
        if let Some(e) = &st.kappa_star {
            k.num("kappa_star_relative_deviation", e.value / o - 1.0);
        }
    }
    out.summary("bound_state", k.text(), levels)?;
    out.json("bound_state", &st, levels)
}

pub fn mesh_export(cfg: &RunConfig, out: &mut Output) -> Result<(), CliError> {
    let spec = cfg.surface()?;
    let opts = cfg.study_options()?;
    let mut csv = String::from("level,vertices,panels,area,exact_area,max_panel_diameter\n");
    for &level in &cfg.run.levels {
        let mesh = build_mesh_with(&spec, level, &opts.mesh)?;
        mesh.check_closed()?;
        out.file(&format!("mesh_level{level}.txt"), &mesh_to_text(&mesh), &[level])?;
        let dmax = mesh.diameters().iter().cloned().fold(0.0, f64::max);
        writeln!(
            csv,
            "{level},{},{},{},{},{}",
            mesh.vertices().len(),
            mesh.len(),
            f(mesh.total_area()),
            f(spec.exact_area()),
            f(dmax)
        )
        .unwrap();
    }
    out.table("mesh_export", &csv, &cfg.run.levels)
}
