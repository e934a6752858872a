//! One runner per experiment. Each returns the tables it produced; hard
//! checks that fail return an invariant error instead.

use degobs_core::elliptic::{interpolation_check, SpectralData};
use degobs_core::heat::{verify_measurable_observability, L1Quadrature, MeasurableTimeSet};
use degobs_core::moment::{duality_check, fit_universal_c, verify_null_control, verify_prop23, BoundSample, ControlPlan, BIORTHOGONAL_TOL};
use degobs_core::numerics::{to_f64, PrecisionContext};
use degobs_core::random::NormalSampler;
use degobs_core::specineq::{
    check_mass_positivity, fit_lr_scaling, gram_matrix, observability_constant, sampled_rayleigh_max, scaling_experiment, ScalingSample,
};
use degobs_core::spectral::checks::{check_spectral_gap, gap_row, FIRST_EIGENVALUE_BRACKET};
use degobs_core::spectral::{eigensystem, EigenPair, OperatorConfig};
use degobs_core::{Error, Result};

use crate::config::{fine_alpha_grid, Experiment, Resolved};
use crate::output::{num, Table};

/// Relative tolerance of the null-control terminal state.
pub const TERMINAL_TOL: f64 = 1e-6;
/// Relative tolerance of the duality identity.
pub const DUALITY_TOL: f64 = 1e-8;
/// Slack allowed between sampled observability ratios and the cost constant.
pub const PROP23_SLACK: f64 = 1e-6;
/// Slack between sampled Rayleigh quotients and `1/lambda_min`.
pub const RAYLEIGH_SLACK: f64 = 1e-9;
/// Allowed relative change of the mass minimum under quadrature refinement.
pub const MASS_STABILITY: f64 = 0.1;
/// Number of eigenvalues entering the uniform gap estimate.
pub const GAP_COUNT: usize = 21;
/// Shrink factors applied to the time set in the heat experiment.
pub const SHRINK_FACTORS: [f64; 3] = [1.0, 0.5, 0.25];

/// The grid of exponents `delta` scanned by the interpolation experiment.
pub fn delta_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

/// Deterministic per-cell seed.
pub fn cell_seed(seed: u64, cell: &[usize]) -> u64 {
    cell.iter().fold(seed, |s, &c| s.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(c as u64 + 1))
}

fn exceeded(what: impl Into<String>, value: f64, tol: f64) -> Error {
    Error::ToleranceExceeded { what: what.into(), value, tol }
}

fn context(r: &Resolved) -> Result<PrecisionContext> {
    PrecisionContext::new(r.bits)
}

fn spectrum(alpha: f64, n: usize, r: &Resolved, ctx: &PrecisionContext) -> Result<Vec<EigenPair>> {
    eigensystem(&OperatorConfig::with_cap(alpha, r.alpha_cap)?, n, r.method, ctx)
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

pub fn run(exp: Experiment, r: &Resolved) -> Result<Vec<Table>> {
    match exp {
        Experiment::Eig => eig(r),
        Experiment::Gram => gram(r),
        Experiment::Specineq => specineq(r),
        Experiment::Interp => interp(r),
        Experiment::Control => control(r),
        Experiment::HeatObs => heat_obs(r),
    }
}

/// Eigenpairs, the first eigenvalue bracket and normalized gaps.
pub fn eig(r: &Resolved) -> Result<Vec<Table>> {
    let ctx = context(r)?;
    let mut eig = Table::new(
        "eig.csv",
        "eigenvalues of -(x^a u')' with the boundary flux of each normalized eigenfunction",
        &["alpha", "j", "lambda", "flux_at_1", "provenance"],
    );
    let mut spec = Table::new(
        "spectral.csv",
        "first eigenvalue stays in one bracket and the normalized square-root gap stays positive",
        &["alpha", "lambda1", "in_bracket", "min_gap", "argmin"],
    );
    let (lo, hi) = FIRST_EIGENVALUE_BRACKET;
    for &alpha in &r.alphas {
        let pairs = spectrum(alpha, r.n_max, r, &ctx)?;
        for p in &pairs {
            eig.push(vec![s(alpha), s(p.index), num(to_f64(&p.lambda)), num(to_f64(&p.flux_at_one(&ctx))), s(p.provenance.label())]);
        }
        let lambda1 = to_f64(&pairs[0].lambda);
        let gap = gap_row(alpha, &pairs, &ctx)?;
        if !(gap.min_gap > 0.0) {
            return Err(Error::GapViolation { index: gap.argmin, gap: gap.min_gap, bound: 0.0 });
        }
        spec.push(vec![s(alpha), num(lambda1), s(lo < lambda1 && lambda1 < hi), num(gap.min_gap), s(gap.argmin)]);
    }
    Ok(vec![eig, spec])
}

/// Window Gram matrices and window masses of single eigenfunctions.
pub fn gram(r: &Resolved) -> Result<Vec<Table>> {
    let ctx = context(r)?;
    let w = &r.window;
    let mut gram = Table::new(
        "gram.csv",
        "1/lambda_min of the window Gram matrix bounds every sampled Rayleigh quotient",
        &["alpha", "N", "lambda_N", "lambda_min", "observability_constant", "rayleigh_max", "window_a", "window_b"],
    );
    for (ia, &alpha) in r.alphas.iter().enumerate() {
        let pairs = spectrum(alpha, r.n_max, r, &ctx)?;
        let g = gram_matrix(&pairs, (w.a(), w.b()), &ctx)?;
        for n in 1..=r.n_max {
            let block = degobs_core::numerics::SymmetricMatrix::from_fn(n, &ctx, |i, j| g.get(i, j).clone());
            let obs = match observability_constant(&block, &ctx) {
                Ok(o) => o,
                // The precision guard bounds the usable cut; larger blocks carry no information.
                Err(Error::NearSingular { .. }) if n > 1 => break,
                Err(e) => return Err(e),
            };
            let k = to_f64(&obs.constant);
            let q = sampled_rayleigh_max(&block, r.samples, cell_seed(r.seed, &[ia, n]), &ctx);
            if q > k * (1.0 + RAYLEIGH_SLACK) {
                return Err(exceeded(format!("Rayleigh quotient at alpha = {alpha}, N = {n}"), q / k - 1.0, RAYLEIGH_SLACK));
            }
            gram.push(vec![
                s(alpha),
                s(n),
                num(to_f64(&pairs[n - 1].lambda)),
                num(to_f64(&obs.lambda_min)),
                num(k),
                num(q),
                s(w.a()),
                s(w.b()),
            ]);
        }
    }
    let report = check_mass_positivity(&r.alphas, r.n_max, w, &ctx)?;
    let mut mass = Table::new(
        "mass.csv",
        "window mass of every eigenfunction divided by (2 - alpha) has a positive minimum stable under refinement",
        &["alpha", "modes", "min_mass_ratio", "argmin", "rho_hat", "rho_hat_refined"],
    );
    for row in &report.rows {
        mass.push(vec![s(row.alpha), s(r.n_max), num(row.min_ratio), s(row.argmin), num(report.rho_hat), num(report.rho_hat_refined)]);
    }
    if !(report.rho_hat > 0.0) {
        return Err(exceeded("minimum window mass", report.rho_hat, 0.0));
    }
    if report.refinement_change() > MASS_STABILITY {
        return Err(exceeded("mass minimum change under refinement", report.refinement_change(), MASS_STABILITY));
    }
    Ok(vec![gram, mass])
}

/// Growth of the window observability constant with the spectral cut.
pub fn specineq(r: &Resolved) -> Result<Vec<Table>> {
    let ctx = context(r)?;
    let w = &r.window;
    let mut table = Table::new(
        "specineq.csv",
        "ln(1/lambda_min) of the window Gram matrix against the spectral cut",
        &["alpha", "N", "lambda_N", "lambda_min_gram", "log_cost", "window_a", "window_b"],
    );
    let mut samples = Vec::new();
    for &alpha in &r.alphas {
        for row in scaling_experiment(alpha, 1, r.n_max, w, &ctx)? {
            table.push(vec![s(alpha), s(row.n), num(row.lambda_n), num(row.lambda_min), num(row.log_cost), s(w.a()), s(w.b())]);
            if row.n >= 2 {
                samples.push(ScalingSample::from(&row));
            }
        }
    }
    let fit = fit_lr_scaling(&samples)?;
    let mut fits = Table::new(
        "specineq_fit.csv",
        "least squares fits ln C = c0 + C lambda^p and ln C = c0 + C sqrt(lambda) per alpha",
        &["alpha", "samples", "c0", "C", "p", "r2", "c_half", "r2_half"],
    );
    for f in &fit.per_alpha {
        fits.push(vec![s(f.alpha), s(f.samples), num(f.c0), num(f.c_fit), num(f.p_fit), num(f.r2), num(f.c_half), num(f.r2_half)]);
    }
    let mut tables = vec![table, fits];
    if let Some(c) = fit.cross_alpha {
        let mut trend =
            Table::new("specineq_trend.csv", "square-root growth rate against (2 - alpha)^-2 across alpha", &["intercept", "slope", "r2"]);
        trend.push(vec![num(c.intercept), num(c.slope), num(c.r2)]);
        tables.push(trend);
    }
    Ok(tables)
}

/// Empirical interpolation constants over a grid of exponents.
pub fn interp(r: &Resolved) -> Result<Vec<Table>> {
    let ctx = context(r)?;
    let mut table = Table::new(
        "interp.csv",
        "smallest c with ||u||_inner <= c ||u||_outer^(1-delta) ||data||^delta over random data",
        &["delta", "minimal_c", "sample_count", "alpha", "N", "seed"],
    );
    let deltas = delta_grid();
    for (ia, &alpha) in r.alphas.iter().enumerate() {
        let pairs = spectrum(alpha, r.n_max, r, &ctx)?;
        for (it, &t) in r.horizons.iter().enumerate() {
            let seed = cell_seed(r.seed, &[ia, it]);
            let rep = interpolation_check(r.samples, &pairs, &r.window, t, &deltas, seed, &ctx)?;
            for row in &rep.rows {
                table.push(vec![s(row.delta), num(row.minimal_c), s(rep.sample_count), s(alpha), s(r.n_max), s(seed)]);
            }
        }
    }
    Ok(vec![table])
}

struct ControlCell {
    alpha: f64,
    n: usize,
    horizon: f64,
    bits: usize,
    cost: f64,
    cost_sample: BoundSample,
    theta_samples: Vec<BoundSample>,
    terminal: f64,
    biortho: f64,
    duality: f64,
    moment: f64,
    data_cost_ratio: f64,
}

/// Moment-method null controls on the grid `alpha x N x T`.
pub fn control(r: &Resolved) -> Result<Vec<Table>> {
    let ctx = context(r)?;
    let gap_ctx = PrecisionContext::new(128)?;
    let gamma_hat = check_spectral_gap(&fine_alpha_grid(), GAP_COUNT, &gap_ctx)?.gamma_hat;
    let mut cells = Vec::new();
    let mut prop = Table::new(
        "prop23.csv",
        "observability ratios of random data stay below the certified control cost",
        &["alpha", "N", "T", "cost_constant", "max_ratio", "samples", "seed"],
    );
    for (ia, &alpha) in r.alphas.iter().enumerate() {
        let all = spectrum(alpha, r.n_max, r, &ctx)?;
        for n in 1..=r.n_max {
            let pairs = &all[..n];
            for (it, &t) in r.horizons.iter().enumerate() {
                let seed = cell_seed(r.seed, &[ia, n, it]);
                let plan = ControlPlan::new(pairs, &r.window, t, gamma_hat, &ctx)?;
                let pctx = plan.context().clone();
                let mut rng = NormalSampler::new(seed);
                let data = SpectralData::random(pairs, &mut rng, &pctx);
                let syn = plan.synthesize(&data)?;
                let report = verify_null_control(&data, &syn, &plan)?;
                let duality = duality_check(&data, &syn, &plan)?.iter().map(|d| d.deviation).fold(0.0, f64::max);
                let biortho = plan.family().residual;
                let where_ = format!("alpha = {alpha}, N = {n}, T = {t}");
                if biortho > BIORTHOGONAL_TOL {
                    return Err(exceeded(format!("biorthogonality residual at {where_}"), biortho, BIORTHOGONAL_TOL));
                }
                if report.relative > TERMINAL_TOL {
                    return Err(exceeded(format!("terminal residual at {where_}"), report.relative, TERMINAL_TOL));
                }
                if duality > DUALITY_TOL {
                    return Err(exceeded(format!("duality identity at {where_}"), duality, DUALITY_TOL));
                }
                let cost = plan.cost_constant();
                let p23 = verify_prop23(&plan, r.samples, seed.wrapping_add(1))?;
                if !p23.holds(PROP23_SLACK) {
                    return Err(exceeded(format!("observability ratio over cost at {where_}"), p23.max_ratio / cost, 1.0 + PROP23_SLACK));
                }
                prop.push(vec![s(alpha), s(n), s(t), num(cost), num(p23.max_ratio), s(r.samples), s(seed.wrapping_add(1))]);
                cells.push(ControlCell {
                    alpha,
                    n,
                    horizon: t,
                    bits: pctx.bits(),
                    cost,
                    cost_sample: plan.cost_bound_sample(&data, &syn),
                    theta_samples: plan.theta_bound_samples(),
                    terminal: report.relative,
                    biortho,
                    duality,
                    moment: plan.moment_residual(),
                    data_cost_ratio: to_f64(&syn.cost) / to_f64(&data.norm_sq(&pctx)),
                });
            }
        }
    }
    let cost_samples: Vec<BoundSample> = cells.iter().map(|c| c.cost_sample).collect();
    let theta_samples: Vec<BoundSample> = cells.iter().flat_map(|c| c.theta_samples.iter().copied()).collect();
    let c_cost = fit_universal_c(&cost_samples);
    let c_theta = fit_universal_c(&theta_samples);
    let c = c_cost.max(c_theta);
    if !c.is_finite() {
        return Err(exceeded("universal constant of the cost bound", c, f64::MAX));
    }
    let failures = cost_samples.iter().chain(&theta_samples).filter(|b| !b.holds(c)).count();
    if failures > 0 {
        return Err(exceeded("bound samples failing at the fitted constant", failures as f64, 0.0));
    }
    let mut table = Table::new(
        "control.csv",
        "terminal state of the controlled system, family residuals and the cost against its bound",
        &[
            "alpha",
            "N",
            "T",
            "bits",
            "cost",
            "bound_ratio",
            "terminal_residual",
            "biortho_residual",
            "duality_residual",
            "moment_residual",
            "datum_cost_ratio",
            "theta_bound_ratio",
        ],
    );
    for cell in &cells {
        let ratio = |b: &BoundSample| (b.log_value - b.log_bound(c)).exp();
        let theta = cell.theta_samples.iter().map(ratio).fold(0.0, f64::max);
        table.push(vec![
            s(cell.alpha),
            s(cell.n),
            s(cell.horizon),
            s(cell.bits),
            num(cell.cost),
            num(ratio(&cell.cost_sample)),
            num(cell.terminal),
            num(cell.biortho),
            num(cell.duality),
            num(cell.moment),
            num(cell.data_cost_ratio),
            num(theta),
        ]);
    }
    let mut fit = Table::new(
        "control_fit.csv",
        "one constant c makes the cost bound and the family norm bound hold on every cell",
        &["c", "c_cost", "c_theta", "cost_samples", "theta_samples", "gamma_hat"],
    );
    fit.push(vec![num(c), num(c_cost), num(c_theta), s(cost_samples.len()), s(theta_samples.len()), num(gamma_hat)]);
    Ok(vec![table, prop, fit])
}

/// Space-time `L^1` observability of the heat flow from `w x E`.
pub fn heat_obs(r: &Resolved) -> Result<Vec<Table>> {
    let ctx = context(r)?;
    let mut table = Table::new(
        "heat.csv",
        "largest ratio ||y(T)|| / integral over w x E of |y| for random data, E shrinking",
        &["alpha", "N", "T", "measure_E", "n_intervals", "fitted_K3", "seed"],
    );
    for (ia, &alpha) in r.alphas.iter().enumerate() {
        let pairs = spectrum(alpha, r.n_max, r, &ctx)?;
        let quad = L1Quadrature::new(&pairs, &r.window)?;
        for (it, &t) in r.horizons.iter().enumerate() {
            let base = match &r.measurable_set {
                Some(iv) => MeasurableTimeSet::new(iv.clone(), t)?,
                None => MeasurableTimeSet::default_for(t)?,
            };
            let seed = cell_seed(r.seed, &[ia, it]);
            for factor in SHRINK_FACTORS {
                let set = base.shrunk(factor)?;
                let rep = verify_measurable_observability(r.samples, &quad, &set, seed)?;
                if let Some(bad) = rep.ratios.iter().find(|q| !q.is_finite()) {
                    return Err(exceeded(format!("observability ratio at alpha = {alpha}, T = {t}"), *bad, f64::MAX));
                }
                table.push(vec![s(alpha), s(r.n_max), s(t), num(rep.measure), s(set.intervals().len()), num(rep.fitted_k3), s(seed)]);
            }
        }
    }
    Ok(vec![table])
}
