//! Moment-method null control of the forced elliptic system.
//!
//! For the first `N` modes, the rates `mu_n` collect `sqrt(lambda_N) -+ sqrt(lambda_j)`.
//! A finite family biorthogonal to `exp(mu_n t)` on `(0, T)` is the
//! minimal-norm solution of the exponential Gram system. Shifting it by
//! `exp(sqrt(lambda_N) t)` gives the functions `sigma_k^0`, `sigma_k^1` whose
//! moments against `exp(-+sqrt(lambda_j) t)` are Kronecker deltas, and the
//! control is assembled from them mode by mode.

use alloc::format;
use alloc::vec::Vec;

use crate::elliptic::{l2_on_rectangle, solve_duhamel, solve_homogeneous, SpectralData};
use crate::error::{domain, Error, Result};
use crate::numerics::precision::{is_negative, is_zero};
use crate::numerics::{to_f64, ExpTerm, ExponentialSum, PrecisionContext, Real, SymmetricMatrix};
use crate::random::NormalSampler;
use crate::spectral::sampling::ModeSamples;
use crate::spectral::EigenPair;
use crate::window::ObservationWindow;

/// Tolerance on `max |integral theta_m e^{mu_n} - delta_mn|`.
pub const BIORTHOGONAL_TOL: f64 = 1e-8;
/// Masses at or below this value make the control coefficients meaningless.
pub const MASS_FLOOR: f64 = 1e-14;
/// Slack allowed on the rate gap against `r`.
const GAP_SLACK: f64 = 1e-12;

/// The rates `mu_1..mu_{2N}` and the constants of their gap condition.
#[derive(Clone, Debug)]
pub struct MuSequence {
    values: Vec<Real>,
    sqrt_lambda_n: Real,
    /// `min_n (sqrt(mu_{n+1}) - sqrt(mu_n))`.
    pub gap_sqrt: f64,
    /// `varsigma / lambda_N^{1/4}`.
    pub r_bound: f64,
    pub varsigma: f64,
}

impl MuSequence {
    pub fn values(&self) -> &[Real] {
        &self.values
    }

    /// Number of modes `N`.
    pub fn modes(&self) -> usize {
        self.values.len() / 2
    }

    pub fn sqrt_lambda_n(&self) -> &Real {
        &self.sqrt_lambda_n
    }
}

/// `min(gamma (2 - alpha) / (2 sqrt 2), 2 sqrt(lambda_1) / (1 + sqrt 2))`.
pub fn varsigma(gamma_hat: f64, alpha: f64, lambda1: f64) -> f64 {
    let s2 = core::f64::consts::SQRT_2;
    (gamma_hat * (2.0 - alpha) / (2.0 * s2)).min(2.0 * libm::sqrt(lambda1) / (1.0 + s2))
}

/// The rates built from `lambdas` (the first `N` eigenvalues).
///
/// `gamma_hat` is the normalized spectral gap measured on the spectrum; it
/// enters `varsigma` and hence the gap bound `r`.
pub fn build_mu(lambdas: &[Real], alpha: f64, gamma_hat: f64, ctx: &PrecisionContext) -> Result<MuSequence> {
    let n = lambdas.len();
    if n == 0 {
        return Err(domain("at least one eigenvalue is needed"));
    }
    if lambdas.iter().any(|l| is_negative(l) || to_f64(l) <= 0.0) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("eigenvalues must be positive and strictly increasing"));
    }
    if !(gamma_hat > 0.0) {
        return Err(domain(format!("spectral gap estimate must be positive, got {gamma_hat}")));
    }
    let roots: Vec<Real> = lambdas.iter().map(|l| ctx.sqrt(l)).collect();
    let top = roots[n - 1].clone();
    let mut values = Vec::with_capacity(2 * n);
    for k in (0..n).rev() {
        values.push(&top - &roots[k]);
    }
    for r in &roots {
        values.push(&top + r);
    }
    let sqrt_mu: Vec<f64> = values.iter().map(|m| libm::sqrt(to_f64(m).max(0.0))).collect();
    let lambda_n = to_f64(&lambdas[n - 1]);
    let quarter = libm::pow(lambda_n, 0.25);
    let vs = varsigma(gamma_hat, alpha, to_f64(&lambdas[0]));
    let r_bound = vs / quarter;
    let mut gap_sqrt = f64::INFINITY;
    for (i, w) in sqrt_mu.windows(2).enumerate() {
        let g = w[1] - w[0];
        if !(g > 0.0) || g < r_bound - GAP_SLACK {
            return Err(Error::GapViolation { index: i + 1, gap: g, bound: r_bound });
        }
        gap_sqrt = gap_sqrt.min(g);
    }
    let cap = core::f64::consts::SQRT_2 * quarter;
    if sqrt_mu.iter().any(|s| *s > cap * (1.0 + GAP_SLACK)) {
        return Err(domain("rates exceed sqrt(2) lambda_N^{1/4} after square roots"));
    }
    Ok(MuSequence { values, sqrt_lambda_n: top, gap_sqrt, r_bound, varsigma: vs })
}

/// `G_nk = integral_0^T exp((mu_n + mu_k) t) dt`.
pub fn exponential_gram(mu: &[Real], horizon: f64, ctx: &PrecisionContext) -> Result<SymmetricMatrix> {
    if !(horizon > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    let t = ctx.real(horizon);
    Ok(SymmetricMatrix::from_fn(mu.len(), ctx, |i, j| {
        let s = &mu[i] + &mu[j];
        if is_zero(&s) {
            t.clone()
        } else {
            ctx.exp_m1(&(&s * &t)) / s
        }
    }))
}

/// Minimal-norm family `theta_m = sum_k C_mk exp(mu_k t)` biorthogonal to
/// `exp(mu_n t)` on `(0, T)`.
#[derive(Clone, Debug)]
pub struct BiorthogonalFamily {
    mu: Vec<Real>,
    coeffs: SymmetricMatrix,
    horizon: f64,
    /// `max |integral theta_m e^{mu_n} - delta_mn|`.
    pub residual: f64,
    ctx: PrecisionContext,
}

impl BiorthogonalFamily {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The context the family was solved in (possibly escalated).
    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    /// `theta_m` with `m` counted from zero.
    pub fn theta(&self, m: usize) -> ExponentialSum {
        let terms = (0..self.len()).map(|k| ExpTerm { coef: self.coeffs.get(m, k).clone(), rate: self.mu[k].clone(), degree: 0 }).collect();
        ExponentialSum::from_terms(terms, &self.ctx)
    }

    /// `||theta_m||^2 = (G^{-1})_{mm}`.
    pub fn norm_sq(&self, m: usize) -> Real {
        self.coeffs.get(m, m).clone()
    }

    /// Largest relative gap between `(G^{-1})_{mm}` and the exact integral of `theta_m^2`.
    pub fn norm_consistency(&self) -> f64 {
        let zero = self.ctx.zero();
        let t = self.ctx.real(self.horizon);
        (0..self.len())
            .map(|m| {
                let th = self.theta(m);
                let direct = th.mul(&th, &self.ctx).integral(&zero, &t, &self.ctx);
                let d = to_f64(&(&direct - &self.norm_sq(m)));
                (d / to_f64(&self.norm_sq(m))).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn family_at(mu: &[Real], horizon: f64, ctx: &PrecisionContext) -> Result<BiorthogonalFamily> {
    let g = exponential_gram(mu, horizon, ctx)?;
    let coeffs = g.cholesky(ctx)?.inverse(ctx);
    let mut fam = BiorthogonalFamily { mu: mu.to_vec(), coeffs, horizon, residual: f64::INFINITY, ctx: ctx.clone() };
    let zero = ctx.zero();
    let t = ctx.real(horizon);
    let mut worst = 0.0f64;
    for m in 0..fam.len() {
        let th = fam.theta(m);
        for (n, rate) in mu.iter().enumerate() {
            let v = to_f64(&th.shift_rate(rate).integral(&zero, &t, ctx));
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    fam.residual = worst;
    if !(worst <= BIORTHOGONAL_TOL) {
        return Err(Error::ToleranceExceeded { what: "biorthogonality residual".into(), value: worst, tol: BIORTHOGONAL_TOL });
    }
    Ok(fam)
}

/// Solve for the biorthogonal family, retrying once at twice the precision
/// when the Gram matrix is numerically indefinite or the residual is too big.
pub fn biorthogonal_family(mu: &MuSequence, horizon: f64, ctx: &PrecisionContext) -> Result<BiorthogonalFamily> {
    family_for_rates(&mu.values, horizon, ctx)
}

/// [`biorthogonal_family`] for arbitrary distinct rates.
pub fn family_for_rates(rates: &[Real], horizon: f64, ctx: &PrecisionContext) -> Result<BiorthogonalFamily> {
    if rates.is_empty() {
        return Err(domain("at least one rate is needed"));
    }
    match family_at(rates, horizon, ctx) {
        Err(Error::NotPositiveDefinite { .. }) | Err(Error::ToleranceExceeded { .. }) => {
            let wide = ctx.with_bits(2 * ctx.bits());
            family_at(rates, horizon, &wide).map_err(|e| match e {
                Error::NotPositiveDefinite { .. } | Error::ToleranceExceeded { .. } => Error::PrecisionExhausted {
                    bits: wide.bits(),
                    what: format!("biorthogonal family for {} rates, T = {horizon}", rates.len()),
                },
                other => other,
            })
        }
        other => other,
    }
}

/// `sigma_k^0 = theta_{N+k} e^{sqrt(lambda_N) t}` and
/// `sigma_k^1 = theta_{N-(k-1)} e^{sqrt(lambda_N) t}` for `k = 1..N`.
pub fn sigma_functions(fam: &BiorthogonalFamily, sqrt_lambda_n: &Real) -> (Vec<ExponentialSum>, Vec<ExponentialSum>) {
    let n = fam.len() / 2;
    let s0 = (0..n).map(|k| fam.theta(n + k).shift_rate(sqrt_lambda_n)).collect();
    let s1 = (0..n).map(|k| fam.theta(n - 1 - k).shift_rate(sqrt_lambda_n)).collect();
    (s0, s1)
}

/// Largest deviation of the four moment identities of the sigma functions.
pub fn moment_identity_residual(
    sigma0: &[ExponentialSum],
    sigma1: &[ExponentialSum],
    sqrt_lambdas: &[Real],
    horizon: f64,
    ctx: &PrecisionContext,
) -> f64 {
    let zero = ctx.zero();
    let t = ctx.real(horizon);
    let mut worst = 0.0f64;
    for k in 0..sigma0.len() {
        for (j, s) in sqrt_lambdas.iter().enumerate() {
            let delta = if j == k { 1.0 } else { 0.0 };
            let minus = -s.clone();
            let checks = [(&sigma0[k], &minus, 0.0), (&sigma1[k], &minus, delta), (&sigma0[k], s, delta), (&sigma1[k], s, 0.0)];
            for (f, rate, target) in checks {
                let v = to_f64(&f.shift_rate(rate).integral(&zero, &t, ctx));
                worst = worst.max((v - target).abs());
            }
        }
    }
    worst
}

/// Everything about a control problem that does not depend on the data:
/// rates, family, sigma functions and window couplings.
#[derive(Clone, Debug)]
pub struct ControlPlan {
    pairs: Vec<EigenPair>,
    horizon: f64,
    mu: MuSequence,
    family: BiorthogonalFamily,
    sigma0: Vec<ExponentialSum>,
    sigma1: Vec<ExponentialSum>,
    /// `[int sigma0^2, int sigma0 sigma1, int sigma1^2]` per mode.
    sigma_gram: Vec<[Real; 3]>,
    coupling: SymmetricMatrix,
    sqrt_lambdas: Vec<Real>,
    ctx: PrecisionContext,
}

impl ControlPlan {
    pub fn new(pairs: &[EigenPair], window: &ObservationWindow, horizon: f64, gamma_hat: f64, ctx: &PrecisionContext) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| domain("at least one eigenpair is needed"))?;
        let lambdas: Vec<Real> = pairs.iter().map(|p| p.lambda.clone()).collect();
        let mu = build_mu(&lambdas, first.alpha, gamma_hat, ctx)?;
        let family = biorthogonal_family(&mu, horizon, ctx)?;
        let w = family.context().clone();
        let sqrt_lambdas: Vec<Real> = pairs.iter().map(|p| p.sqrt_lambda(&w)).collect();
        let top = sqrt_lambdas.last().expect("nonempty").clone();
        let (sigma0, sigma1) = sigma_functions(&family, &top);
        let zero = w.zero();
        let t = w.real(horizon);
        let sigma_gram = sigma0
            .iter()
            .zip(&sigma1)
            .map(|(a, b)| {
                [a.mul(a, &w).integral(&zero, &t, &w), a.mul(b, &w).integral(&zero, &t, &w), b.mul(b, &w).integral(&zero, &t, &w)]
            })
            .collect();
        let coupling = ModeSamples::new(pairs, window.a(), window.b(), false, ctx)?.gram(ctx);
        for j in 0..pairs.len() {
            let m = to_f64(coupling.get(j, j));
            if !(m > MASS_FLOOR) {
                return Err(Error::ZeroMass { index: j + 1, mass: m });
            }
        }
        Ok(Self { pairs: pairs.to_vec(), horizon, mu, family, sigma0, sigma1, sigma_gram, coupling, sqrt_lambdas, ctx: w })
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn modes(&self) -> usize {
        self.pairs.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn mu(&self) -> &MuSequence {
        &self.mu
    }

    pub fn family(&self) -> &BiorthogonalFamily {
        &self.family
    }

    pub fn sigma0(&self) -> &[ExponentialSum] {
        &self.sigma0
    }

    pub fn sigma1(&self) -> &[ExponentialSum] {
        &self.sigma1
    }

    /// `integral_w phi_j phi_k`.
    pub fn coupling(&self) -> &SymmetricMatrix {
        &self.coupling
    }

    /// Working precision after any escalation.
    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn mass(&self, j: usize) -> &Real {
        self.coupling.get(j, j)
    }

    pub fn inf_mass(&self) -> f64 {
        (0..self.modes()).map(|j| to_f64(self.mass(j))).fold(f64::INFINITY, f64::min)
    }

    pub fn moment_residual(&self) -> f64 {
        moment_identity_residual(&self.sigma0, &self.sigma1, &self.sqrt_lambdas, self.horizon, &self.ctx)
    }

    /// The control for `data`.
    pub fn synthesize(&self, data: &SpectralData) -> Result<ControlSynthesis> {
        if data.len() != self.modes() {
            return Err(domain("data length does not match the plan"));
        }
        let ctx = &self.ctx;
        let mut plus = Vec::with_capacity(self.modes());
        let mut minus = Vec::with_capacity(self.modes());
        let mut g_modes = Vec::with_capacity(self.modes());
        let mut cost = ctx.zero();
        for j in 0..self.modes() {
            let (a, b) = (&data.c()[j], &data.d()[j]);
            let sa = &self.sqrt_lambdas[j] * a;
            let m = self.mass(j);
            let al = (&sa - b) / m;
            let be = -(&sa + b) / m;
            let [p, q, r] = &self.sigma_gram[j];
            cost += &al * &al * p + ctx.int(2) * &al * &be * q + &be * &be * r;
            g_modes.push(self.sigma0[j].scale(&al).add(&self.sigma1[j].scale(&be), ctx));
            plus.push(al);
            minus.push(be);
        }
        Ok(ControlSynthesis { coeff_plus: plus, coeff_minus: minus, g_modes, cost })
    }

    /// Smallest `K` with `||g||^2 <= K ||(u_0, u_1)||^2` for every datum.
    ///
    /// The cost decouples over modes into 2x2 quadratic forms in `(a_j, b_j)`,
    /// so `K` is the largest of their top eigenvalues.
    pub fn cost_constant(&self) -> f64 {
        let ctx = &self.ctx;
        let half = ctx.ratio(1, 2);
        let mut best = 0.0f64;
        for j in 0..self.modes() {
            let [p, q, r] = &self.sigma_gram[j];
            let s = &self.sqrt_lambdas[j];
            let m2 = self.mass(j) * self.mass(j);
            let qaa = s * s * (p - ctx.int(2) * q + r) / &m2;
            let qbb = (p + ctx.int(2) * q + r) / &m2;
            let qab = s * (r - p) / &m2;
            let mid = &half * (&qaa + &qbb);
            let dif = &half * (&qaa - &qbb);
            let top = mid + ctx.sqrt(&(&dif * &dif + &qab * &qab));
            best = best.max(to_f64(&top));
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct ControlSynthesis {
    /// `(sqrt(lambda_j) a_j - b_j) / mass_j`.
    pub coeff_plus: Vec<Real>,
    /// `-(sqrt(lambda_j) a_j + b_j) / mass_j`.
    pub coeff_minus: Vec<Real>,
    /// Mode components of the control.
    pub g_modes: Vec<ExponentialSum>,
    /// `||g||^2_{L^2((0,1) x (0,T))}`.
    pub cost: Real,
}

impl ControlSynthesis {
    /// The cost by integrating each `g_k^2` directly.
    pub fn cost_by_integration(&self, horizon: f64, ctx: &PrecisionContext) -> Real {
        let zero = ctx.zero();
        let t = ctx.real(horizon);
        let mut acc = ctx.zero();
        for g in &self.g_modes {
            acc += g.mul(g, ctx).integral(&zero, &t, ctx);
        }
        acc
    }
}

/// One-shot synthesis for a single datum.
pub fn synthesize_control(
    data: &SpectralData,
    pairs: &[EigenPair],
    window: &ObservationWindow,
    horizon: f64,
    gamma_hat: f64,
    ctx: &PrecisionContext,
) -> Result<(ControlPlan, ControlSynthesis)> {
    let plan = ControlPlan::new(pairs, window, horizon, gamma_hat, ctx)?;
    let syn = plan.synthesize(data)?;
    Ok((plan, syn))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NullControlReport {
    pub terminal_state_norm: f64,
    pub terminal_slope_norm: f64,
    /// `sqrt(state^2 + slope^2) / ||(u_0, u_1)||`.
    pub relative: f64,
    /// `(|u_j(T)|, |u_j'(T)|)` per mode.
    pub per_mode: Vec<(f64, f64)>,
}

/// Run the forced system under `syn` and measure the state left at `T`.
pub fn verify_null_control(data: &SpectralData, syn: &ControlSynthesis, plan: &ControlPlan) -> Result<NullControlReport> {
    let ctx = plan.context();
    let sol = solve_duhamel(data, &syn.g_modes, plan.coupling(), plan.pairs(), ctx)?;
    let (v, d) = sol.coefficients_at(&ctx.real(plan.horizon()), ctx);
    let per_mode: Vec<(f64, f64)> = v.iter().zip(&d).map(|(a, b)| (to_f64(a).abs(), to_f64(b).abs())).collect();
    let state = libm::sqrt(per_mode.iter().map(|p| p.0 * p.0).sum());
    let slope = libm::sqrt(per_mode.iter().map(|p| p.1 * p.1).sum());
    let scale = libm::sqrt(to_f64(&data.norm_sq(ctx)));
    let relative = if scale > 0.0 { libm::sqrt(state * state + slope * slope) / scale } else { libm::sqrt(state * state + slope * slope) };
    Ok(NullControlReport { terminal_state_norm: state, terminal_slope_norm: slope, relative, per_mode })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualityRow {
    /// Mode of the test datum.
    pub index: usize,
    /// Whether the test datum sits in the value slot `(Phi_i, 0)` or the slope slot `(0, Phi_i)`.
    pub value_slot: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
}

/// Check `-<u_1, phi(T)> - <u_0, phi_t(T)> = int_0^T int_w g(x,t) phi(x, T-t)`
/// for every test datum `(Phi_i, 0)` and `(0, Phi_i)`.
///
/// The deviation is relative to `|b_i phi_i(T)| + |a_i phi_i'(T)|`, the size
/// of the left side before cancellation.
pub fn duality_check(data: &SpectralData, syn: &ControlSynthesis, plan: &ControlPlan) -> Result<Vec<DualityRow>> {
    let ctx = plan.context();
    let n = plan.modes();
    let t = ctx.real(plan.horizon());
    let zero = ctx.zero();
    let mut rows = Vec::with_capacity(2 * n);
    for i in 0..n {
        // Forcing seen by mode i.
        let mut h = ExponentialSum::zero();
        for k in 0..n {
            h = h.add(&syn.g_modes[k].scale(plan.coupling().get(i, k)), ctx);
        }
        for value_slot in [true, false] {
            let test = SpectralData::unit(n, i, value_slot, ctx);
            let phi = solve_homogeneous(&test, plan.pairs(), ctx)?;
            let mode = &phi.modes()[i];
            let (v, d) = (mode.value.eval(&t, ctx), mode.slope.eval(&t, ctx));
            let lhs = -(&data.d()[i] * &v) - &data.c()[i] * &d;
            let rhs = h.mul(&mode.value.reflect(&t, ctx), ctx).integral(&zero, &t, ctx);
            let scale = to_f64(&(&data.d()[i] * &v)).abs() + to_f64(&(&data.c()[i] * &d)).abs();
            let diff = to_f64(&(&lhs - &rhs)).abs();
            rows.push(DualityRow {
                index: i + 1,
                value_slot,
                lhs: to_f64(&lhs),
                rhs: to_f64(&rhs),
                deviation: if scale > 0.0 { diff / scale } else { diff },
            });
        }
    }
    Ok(rows)
}

/// `B(T, r)` with constant `c`: `(1/T + 1/(T^2 r^2)) e^{c/(T r^2)}` when
/// `T < 1/r^2` and `c r^2` otherwise.
pub fn eval_b(horizon: f64, r: f64, c: f64) -> f64 {
    libm::exp(log_b(horizon, r, c))
}

/// Natural logarithm of [`eval_b`], finite even where `B` overflows.
pub fn log_b(horizon: f64, r: f64, c: f64) -> f64 {
    let r2 = r * r;
    if horizon * r2 < 1.0 {
        libm::log(1.0 / horizon + 1.0 / (horizon * horizon * r2)) + c / (horizon * r2)
    } else {
        libm::log(c) + libm::log(r2)
    }
}

/// A measured quantity against a bound of the form
/// `e^{prefactor} c e^{linear c} B(T, r)`, logarithms throughout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSample {
    pub log_value: f64,
    pub log_prefactor: f64,
    pub linear: f64,
    pub horizon: f64,
    pub r: f64,
}

impl BoundSample {
    pub fn log_bound(&self, c: f64) -> f64 {
        self.log_prefactor + libm::log(c) + self.linear * c + log_b(self.horizon, self.r, c)
    }

    pub fn holds(&self, c: f64) -> bool {
        self.log_value <= self.log_bound(c)
    }

    /// Smallest `c` (to bisection accuracy, rounded up) for which the bound holds.
    pub fn minimal_c(&self) -> f64 {
        let (mut lo, mut hi) = (-60.0f64, 60.0f64);
        if self.holds(libm::exp(lo)) {
            return libm::exp(lo);
        }
        if !self.holds(libm::exp(hi)) {
            return f64::INFINITY;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.holds(libm::exp(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        libm::exp(hi)
    }
}

fn log_real(x: &Real, ctx: &PrecisionContext) -> f64 {
    if is_negative(x) || is_zero(x) {
        f64::NEG_INFINITY
    } else {
        to_f64(&ctx.ln(x))
    }
}

impl ControlPlan {
    /// The cost bound combining the family bound and the coefficient bound:
    /// `8 (1 + lambda_N) / (inf mass)^2 c e^{2 sqrt(lambda_N) T}
    /// e^{c sqrt 2 sqrt(lambda_N) / varsigma} B(T, varsigma lambda_N^{-1/4}) ||data||^2`.
    pub fn cost_bound_sample(&self, data: &SpectralData, syn: &ControlSynthesis) -> BoundSample {
        let ctx = &self.ctx;
        let s_n = to_f64(self.mu.sqrt_lambda_n());
        let lambda_n = s_n * s_n;
        let m = self.inf_mass();
        BoundSample {
            log_value: log_real(&syn.cost, ctx),
            log_prefactor: libm::log(8.0 * (1.0 + lambda_n) / (m * m)) + 2.0 * s_n * self.horizon + log_real(&data.norm_sq(ctx), ctx),
            linear: core::f64::consts::SQRT_2 * s_n / self.mu.varsigma,
            horizon: self.horizon,
            r: self.mu.r_bound,
        }
    }

    /// The family bound `||theta_m||^2 <= c e^{-2 mu_m T} e^{c sqrt(mu_m) / r} B(T, r)`, one sample per `m`.
    pub fn theta_bound_samples(&self) -> Vec<BoundSample> {
        let ctx = &self.ctx;
        (0..self.family.len())
            .map(|m| {
                let mu = to_f64(&self.mu.values()[m]).max(0.0);
                BoundSample {
                    log_value: log_real(&self.family.norm_sq(m), ctx),
                    log_prefactor: -2.0 * mu * self.horizon,
                    linear: libm::sqrt(mu) / self.mu.r_bound,
                    horizon: self.horizon,
                    r: self.mu.r_bound,
                }
            })
            .collect()
    }
}

/// Smallest `c` making every sample hold.
pub fn fit_universal_c(samples: &[BoundSample]) -> f64 {
    samples.iter().map(BoundSample::minimal_c).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop23Report {
    pub cost_constant: f64,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub seed: u64,
}

impl Prop23Report {
    pub fn holds(&self, slack: f64) -> bool {
        self.max_ratio <= self.cost_constant * (1.0 + slack)
    }
}

/// `(||phi(T)||^2 + ||phi_t(T)||^2) / int_0^T int_w phi^2` for one datum.
pub fn observability_ratio(data: &SpectralData, plan: &ControlPlan) -> Result<f64> {
    let ctx = plan.context();
    let sol = solve_homogeneous(data, plan.pairs(), ctx)?;
    let (v, d) = sol.coefficients_at(&ctx.real(plan.horizon()), ctx);
    let mut top = ctx.zero();
    for x in v.iter().chain(&d) {
        top += x * x;
    }
    let observed = l2_on_rectangle(&sol, plan.coupling(), (0.0, plan.horizon()), ctx)?;
    Ok(to_f64(&(top / observed)))
}

/// Observability ratios of random data against the certified cost constant.
pub fn verify_prop23(plan: &ControlPlan, sample_count: usize, seed: u64) -> Result<Prop23Report> {
    if sample_count == 0 {
        return Err(domain("at least one sample is needed"));
    }
    let ctx = plan.context();
    let mut rng = NormalSampler::new(seed);
    let ratios = (0..sample_count)
        .map(|_| observability_ratio(&SpectralData::random(plan.pairs(), &mut rng, ctx), plan))
        .collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(Prop23Report { cost_constant: plan.cost_constant(), ratios, max_ratio, seed })
}
