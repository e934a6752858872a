//! Acceptance suite: one line per criterion, nonzero exit on any unexpected
//! failure.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use degobs::config::{coarse_alpha_grid, fine_alpha_grid, ExperimentConfig};
use degobs::runners::{delta_grid, PROP23_SLACK, SHRINK_FACTORS};
use degobs::Command;
use degobs_core::elliptic::{interpolation_report, interpolation_samples, minimal_constant, InterpolationSetup, SpectralData};
use degobs_core::heat::{verify_measurable_observability, L1Quadrature, MeasurableTimeSet};
use degobs_core::moment::{family_for_rates, BIORTHOGONAL_TOL};
use degobs_core::numerics::{to_f64, PrecisionContext};
use degobs_core::random::NormalSampler;
use degobs_core::specineq::{check_mass_positivity, fit_lr_scaling, scaling_experiment, ScalingSample};
use degobs_core::spectral::checks::{check_first_eigenvalue_bounds, check_spectral_gap};
use degobs_core::spectral::fem::FemOptions;
use degobs_core::spectral::{eigensystem, fem_eigensystem, Method, OperatorConfig};
use degobs_core::ObservationWindow;

/// Criteria that fail for reasons recorded alongside the project; they are
/// still evaluated at full tolerance and reported as failures.
const KNOWN_FAILURES: &[usize] = &[5];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let suffix = format!(" [{:.2}s]", took.as_secs_f64());
    match (out, budget) {
        (Ok(d), Some(b)) if took > b => Err(format!("{d}; runtime over {:.0}s{suffix}", b.as_secs_f64())),
        (Ok(d), _) => Ok(d + &suffix),
        (Err(d), _) => Err(d + &suffix),
    }
}

fn ctx(bits: usize) -> PrecisionContext {
    PrecisionContext::new(bits).expect("valid precision")
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn laplacian_exactness() -> Outcome {
    let c = ctx(128);
    let pairs = eigensystem(&OperatorConfig::new(0.0).map_err(err)?, 10, Method::Bessel, &c).map_err(err)?;
    let pi = std::f64::consts::PI;
    let mut lam_err = 0.0f64;
    let mut fn_err = 0.0f64;
    for p in &pairs {
        let j = p.index as f64;
        let exact = (j * pi) * (j * pi);
        lam_err = lam_err.max((to_f64(&p.lambda) - exact).abs() / exact);
        for k in 1..=20 {
            let x = k as f64 / 21.0;
            let v = to_f64(&p.eval(&c.real(x), &c));
            fn_err = fn_err.max((v - std::f64::consts::SQRT_2 * (j * pi * x).sin()).abs());
        }
    }
    check(lam_err <= 1e-10 && fn_err <= 1e-9, format!("max eigenvalue rel err {lam_err:.2e}, max eigenfunction err {fn_err:.2e}"))
}

fn oracle_equivalence() -> Outcome {
    let c = ctx(64);
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 1.0, 1.5] {
        let cfg = OperatorConfig::new(alpha).map_err(err)?;
        let bessel = eigensystem(&cfg, 10, Method::Bessel, &c).map_err(err)?;
        // The finite element solver refines the mesh once and rejects drifting eigenvalues.
        let fem = fem_eigensystem(&cfg, 10, &FemOptions::default(), &c).map_err(err)?;
        for (b, f) in bessel.iter().zip(&fem) {
            let (lb, lf) = (to_f64(&b.lambda), to_f64(&f.lambda));
            worst = worst.max((lb - lf).abs() / lb);
        }
    }
    check(worst <= 1e-6, format!("max relative difference {worst:.2e} over j <= 10"))
}

fn spectral_uniformity() -> Outcome {
    let c = ctx(128);
    let grid = fine_alpha_grid();
    let first = check_first_eigenvalue_bounds(&grid, &c).map_err(err)?;
    let gap = check_spectral_gap(&grid, 21, &c).map_err(err)?;
    check(
        first.all_inside() && gap.gamma_hat > 0.0 && gap.spread <= 4.0,
        format!(
            "lambda_1 in [{:.4}, {:.4}] inside ({}, {}); gamma_hat {:.4}, spread {:.3}",
            first.min, first.max, first.bracket.0, first.bracket.1, gap.gamma_hat, gap.spread
        ),
    )
}

fn mass_positivity() -> Outcome {
    let c = ctx(128);
    let r = check_mass_positivity(&fine_alpha_grid(), 20, &ObservationWindow::default(), &c).map_err(err)?;
    check(
        r.rho_hat > 0.0 && r.refinement_change() <= 0.1,
        format!("rho_hat {:.6}, change under refinement {:.2e}", r.rho_hat, r.refinement_change()),
    )
}

fn scaling_shape() -> Outcome {
    let c = ctx(256);
    let w = ObservationWindow::default();
    let mut samples = Vec::new();
    let mut cut = BTreeMap::new();
    for alpha in coarse_alpha_grid() {
        let rows = scaling_experiment(alpha, 2, 14, &w, &c).map_err(err)?;
        cut.insert(alpha.to_string(), rows.last().map_or(0, |r| r.n));
        samples.extend(rows.iter().map(ScalingSample::from));
    }
    let fit = fit_lr_scaling(&samples).map_err(err)?;
    let zero = &fit.per_alpha[0];
    let cs: Vec<f64> = fit.per_alpha.iter().map(|f| f.c_fit).collect();
    let monotone = cs.windows(2).all(|p| p[1] >= p[0]);
    let reached = cut.get("0").copied().unwrap_or(0);
    check(
        reached == 14 && (0.3..=0.7).contains(&zero.p_fit) && zero.r2 >= 0.9 && monotone,
        format!(
            "alpha=0: N up to {reached}, p {:.4}, R^2 {:.4}; C over alpha {:?} nondecreasing {monotone}",
            zero.p_fit,
            zero.r2,
            cs.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    )
}

type Rows = Vec<BTreeMap<String, String>>;

fn read_csv(path: &Path) -> Result<Rows, String> {
    let text = std::fs::read_to_string(path).map_err(err)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let headers = rd.headers().map_err(err)?.clone();
    rd.records()
        .map(|r| {
            let r = r.map_err(err)?;
            Ok(headers.iter().zip(r.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        })
        .collect()
}

fn f(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or(f64::NAN)
}

fn biorthogonality(dir: &Path) -> Outcome {
    let rows = read_csv(&dir.join("control.csv"))?;
    let worst = rows.iter().map(|r| f(r, "biortho_residual")).fold(0.0, f64::max);
    let cells = rows.len();
    let c = ctx(128);
    let fam = family_for_rates(&[c.zero(), c.one()], 1.0, &c).map_err(err)?;
    let e = std::f64::consts::E;
    let exact = (e + 1.0) / (3.0 - e);
    let dev = (to_f64(&fam.norm_sq(0)) - exact).abs();
    check(
        cells == 72 && worst <= BIORTHOGONAL_TOL && dev <= 1e-10,
        format!("{cells} cells, max residual {worst:.2e}; ||theta_1||^2 deviation {dev:.2e}"),
    )
}

fn null_control(dir: &Path) -> Outcome {
    let rows = read_csv(&dir.join("control.csv"))?;
    let t1: Vec<_> = rows.iter().filter(|r| f(r, "T") == 1.0).collect();
    let terminal = t1.iter().map(|r| f(r, "terminal_residual")).fold(0.0, f64::max);
    let duality = t1.iter().map(|r| f(r, "duality_residual")).fold(0.0, f64::max);
    check(
        t1.len() == 24 && terminal <= 1e-6 && duality <= 1e-8,
        format!("{} cells at T = 1: terminal {terminal:.2e}, duality {duality:.2e}", t1.len()),
    )
}

fn cost_bound(dir: &Path) -> Outcome {
    let rows = read_csv(&dir.join("control.csv"))?;
    let fit = read_csv(&dir.join("control_fit.csv"))?;
    let c = fit.first().map_or(f64::NAN, |r| f(r, "c"));
    let cost = rows.iter().map(|r| f(r, "bound_ratio")).fold(0.0, f64::max);
    let theta = rows.iter().map(|r| f(r, "theta_bound_ratio")).fold(0.0, f64::max);
    check(
        c.is_finite() && cost <= 1.0 && theta <= 1.0,
        format!("fitted c {c:.4}; max cost/bound {cost:.3e}, max family norm/bound {theta:.3e}"),
    )
}

fn prop23(dir: &Path) -> Outcome {
    let rows = read_csv(&dir.join("prop23.csv"))?;
    let worst = rows.iter().map(|r| f(r, "max_ratio") / f(r, "cost_constant")).fold(0.0, f64::max);
    let samples = rows.iter().all(|r| r["samples"] == "50");
    check(
        rows.len() == 72 && samples && worst <= 1.0 + PROP23_SLACK,
        format!("{} cells x 50 samples, max ratio / K {worst:.3e}", rows.len()),
    )
}

fn interpolation() -> Outcome {
    let c = ctx(128);
    let w = ObservationWindow::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [0.0, 1.0] {
        let pairs = eigensystem(&OperatorConfig::new(alpha).map_err(err)?, 6, Method::Bessel, &c).map_err(err)?;
        let seed = 7 + alpha as u64;
        let samples = interpolation_samples(50, &pairs, &w, 1.0, seed, &c).map_err(err)?;
        let rep = interpolation_report(&samples, &delta_grid(), seed).map_err(err)?;
        ok &= rep.best_c.is_finite() && rep.best_delta > 0.0 && rep.best_delta < 1.0;
        // Rescale every datum and recompute the constant.
        let setup = InterpolationSetup::new(&pairs, &w, 1.0, &c).map_err(err)?;
        let mut rng = NormalSampler::new(seed);
        let factor = c.real(37.5);
        let scaled = (0..50)
            .map(|_| setup.sample(&SpectralData::random(&pairs, &mut rng, &c).scaled(&factor), &c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let again = minimal_constant(&scaled, rep.best_delta);
        let dev = (again - rep.best_c).abs() / rep.best_c;
        ok &= dev <= 1e-12;
        lines.push(format!("alpha={alpha}: delta {} c {:.4e} rescaled dev {dev:.1e}", rep.best_delta, rep.best_c));
    }
    check(ok, lines.join("; "))
}

fn heat_observability() -> Outcome {
    let c = ctx(128);
    let w = ObservationWindow::default();
    let base = MeasurableTimeSet::default_for(1.0).map_err(err)?;
    let mut lines = Vec::new();
    let mut ok = (base.measure() - 5.0 / 16.0).abs() < 1e-15 && base.intervals().len() == 2;
    for alpha in coarse_alpha_grid() {
        let pairs = eigensystem(&OperatorConfig::new(alpha).map_err(err)?, 8, Method::Bessel, &c).map_err(err)?;
        let quad = L1Quadrature::new(&pairs, &w).map_err(err)?;
        let a = verify_measurable_observability(50, &quad, &base, 11).map_err(err)?;
        let b = verify_measurable_observability(50, &quad, &base, 12).map_err(err)?;
        let finite = a.ratios.iter().chain(&b.ratios).all(|r| r.is_finite() && *r > 0.0);
        let spread = (a.fitted_k3 / b.fitted_k3).max(b.fitted_k3 / a.fitted_k3);
        let mut k3 = Vec::new();
        for factor in SHRINK_FACTORS {
            k3.push(verify_measurable_observability(50, &quad, &base.shrunk(factor).map_err(err)?, 11).map_err(err)?.fitted_k3);
        }
        let increasing = k3.windows(2).all(|p| p[1] > p[0]);
        ok &= finite && spread <= 2.0 && increasing;
        lines.push(format!(
            "alpha={alpha}: seed spread {spread:.3}, K3 {}",
            k3.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" < ")
        ));
    }
    check(ok, lines.join("; "))
}

fn run_all(dir: &Path) -> Result<(), String> {
    let cfg = ExperimentConfig { out: Some(dir.to_path_buf()), ..Default::default() };
    degobs::run(Command::All, &cfg).map(|_| ()).map_err(|e| degobs::error_line(&e))
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let mut names: Vec<_> = std::fs::read_dir(a).map_err(err)?.filter_map(|e| e.ok().map(|e| e.file_name())).collect();
    names.sort();
    let mut differ = Vec::new();
    for n in &names {
        let x = std::fs::read(a.join(n)).map_err(err)?;
        let y = std::fs::read(b.join(n)).unwrap_or_default();
        if x != y {
            differ.push(n.to_string_lossy().into_owned());
        }
    }
    check(differ.is_empty() && !names.is_empty(), format!("{} files compared, {} differ {:?}", names.len(), differ.len(), differ))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |id: usize, name: &'static str, out: Outcome| {
        let (tag, detail) = match &out {
            Ok(d) => ("PASS", d.clone()),
            Err(d) if KNOWN_FAILURES.contains(&id) => ("FAIL (known)", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        println!("criterion {id:>2} {tag}: {name}: {detail}");
        results.push((id, name, out));
    };
    report(1, "eigenpairs at alpha = 0", timed(Some(Duration::from_secs(1)), laplacian_exactness));
    report(2, "Bessel and finite element eigenvalues", timed(Some(Duration::from_secs(60)), oracle_equivalence));
    report(3, "first eigenvalue bracket and uniform gap", timed(None, spectral_uniformity));
    report(4, "uniform window mass", timed(None, mass_positivity));
    report(5, "observability constant scaling", timed(Some(Duration::from_secs(300)), scaling_shape));

    let first = tempfile::tempdir().expect("temporary directory");
    let second = tempfile::tempdir().expect("temporary directory");
    let start = Instant::now();
    let run = run_all(first.path());
    let all_time = start.elapsed();
    let grid = |f: fn(&Path) -> Outcome| -> Outcome {
        match &run {
            Ok(()) => f(first.path()),
            Err(e) => Err(format!("default run failed: {e}")),
        }
    };
    report(6, "biorthogonality", grid(biorthogonality));
    let t7 = grid(null_control).map(|d| format!("{d} [default grid {:.1}s]", all_time.as_secs_f64()));
    let t7 = match t7 {
        Ok(d) if all_time > Duration::from_secs(300) => Err(format!("{d}; runtime over 300s")),
        other => other,
    };
    report(7, "null controllability and duality", t7);
    report(8, "cost bound with one fitted constant", grid(cost_bound));
    report(9, "observability ratios below the control cost", grid(prop23));
    report(10, "interpolation constants and homogeneity", timed(None, interpolation));
    report(11, "measurable time set observability", timed(None, heat_observability));
    let rerun = run_all(second.path());
    report(
        12,
        "byte-identical reruns",
        match (&run, rerun) {
            (Ok(()), Ok(())) => determinism(first.path(), second.path()),
            (Err(e), _) => Err(format!("default run failed: {e}")),
            (_, Err(e)) => Err(format!("rerun failed: {e}")),
        },
    );

    let unexpected: Vec<usize> =
        results.iter().filter(|(id, _, out)| out.is_err() && !KNOWN_FAILURES.contains(id)).map(|(id, _, _)| *id).collect();
    let passed = results.iter().filter(|(_, _, o)| o.is_ok()).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
