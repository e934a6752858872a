//! The elliptic evolution `phi_tt = P phi` in the eigenbasis.
//!
//! Every mode amplitude is an exponential sum: free modes combine
//! `exp(+-sqrt(lambda_j) t)`, and the response to a forcing that is itself an
//! exponential sum follows from the Duhamel formula in closed form. Space-time
//! norms on rectangles are quadratic forms whose spatial part is a Gram
//! matrix of eigenfunctions and whose temporal part is an exact integral.

use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::numerics::{to_f64, ExponentialSum, PrecisionContext, Real, SymmetricMatrix};
use crate::random::NormalSampler;
use crate::spectral::sampling::ModeSamples;
use crate::spectral::EigenPair;
use crate::window::ObservationWindow;

/// Mode coefficients of a pair of initial data (value and time derivative).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    c: Vec<Real>,
    d: Vec<Real>,
}

impl SpectralData {
    pub fn new(c: Vec<Real>, d: Vec<Real>) -> Result<Self> {
        if c.len() != d.len() {
            return Err(domain(alloc::format!("coefficient vectors differ in length: {} and {}", c.len(), d.len())));
        }
        Ok(Self { c, d })
    }

    pub fn from_f64(c: &[f64], d: &[f64], ctx: &PrecisionContext) -> Result<Self> {
        if c.iter().chain(d).any(|v| !v.is_finite()) {
            return Err(domain("coefficients must be finite"));
        }
        Self::new(c.iter().map(|v| ctx.real(*v)).collect(), d.iter().map(|v| ctx.real(*v)).collect())
    }

    pub fn zeros(n: usize, ctx: &PrecisionContext) -> Self {
        Self { c: (0..n).map(|_| ctx.zero()).collect(), d: (0..n).map(|_| ctx.zero()).collect() }
    }

    /// `e_j` in the value slot (`value = true`) or the slope slot.
    pub fn unit(n: usize, j: usize, value: bool, ctx: &PrecisionContext) -> Self {
        let mut s = Self::zeros(n, ctx);
        if value {
            s.c[j] = ctx.one();
        } else {
            s.d[j] = ctx.one();
        }
        s
    }

    /// Random data with independent normal coefficients scaled by `1/(1 + lambda_j)`.
    pub fn random(pairs: &[EigenPair], rng: &mut NormalSampler, ctx: &PrecisionContext) -> Self {
        let lambdas: Vec<f64> = pairs.iter().map(|p| to_f64(&p.lambda)).collect();
        let c = rng.scaled_coefficients(&lambdas);
        let d = rng.scaled_coefficients(&lambdas);
        Self::from_f64(&c, &d, ctx).expect("finite samples")
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn c(&self) -> &[Real] {
        &self.c
    }

    pub fn d(&self) -> &[Real] {
        &self.d
    }

    pub fn scaled(&self, s: &Real) -> Self {
        Self { c: self.c.iter().map(|v| v * s).collect(), d: self.d.iter().map(|v| v * s).collect() }
    }

    /// `sum c_j^2 + d_j^2`.
    pub fn norm_sq(&self, ctx: &PrecisionContext) -> Real {
        let mut acc = ctx.zero();
        for v in self.c.iter().chain(&self.d) {
            acc += v * v;
        }
        acc
    }
}

/// One mode amplitude and its time derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitude {
    pub value: ExponentialSum,
    pub slope: ExponentialSum,
}

#[derive(Clone, Debug)]
pub struct EllipticSolution {
    modes: Vec<ModeAmplitude>,
    lambdas: Vec<Real>,
}

impl EllipticSolution {
    pub fn modes(&self) -> &[ModeAmplitude] {
        &self.modes
    }

    pub fn lambdas(&self) -> &[Real] {
        &self.lambdas
    }

    /// Mode values and slopes at time `t`.
    pub fn coefficients_at(&self, t: &Real, ctx: &PrecisionContext) -> (Vec<Real>, Vec<Real>) {
        self.modes.iter().map(|m| (m.value.eval(t, ctx), m.slope.eval(t, ctx))).unzip()
    }

    /// Largest coefficient of `m_j'' - lambda_j m_j` after simplification,
    /// for a free solution. It vanishes up to rounding of the coefficients.
    pub fn mode_equation_residual(&self, ctx: &PrecisionContext) -> f64 {
        let mut worst = 0.0f64;
        for (m, l) in self.modes.iter().zip(&self.lambdas) {
            let r = m.value.derivative(ctx).derivative(ctx).sub(&m.value.scale(l), ctx);
            let scale = m.value.terms().iter().map(|t| to_f64(&t.coef).abs()).fold(0.0, f64::max) * to_f64(l);
            for t in r.terms() {
                worst = worst.max(to_f64(&t.coef).abs() / scale.max(f64::MIN_POSITIVE));
            }
        }
        worst
    }
}

fn check_len(data: &SpectralData, pairs: &[EigenPair]) -> Result<()> {
    if data.len() != pairs.len() || pairs.is_empty() {
        return Err(domain(alloc::format!("data has {} modes but {} eigenpairs were given", data.len(), pairs.len())));
    }
    Ok(())
}

/// `cosh(s t) c + sinh(s t) d / s` as an exponential sum.
fn free_mode(c: &Real, d: &Real, s: &Real, ctx: &PrecisionContext) -> ExponentialSum {
    let half = ctx.ratio(1, 2);
    let ds = d / s;
    let plus = ExponentialSum::exponential(&half * (c + &ds), s.clone());
    let minus = ExponentialSum::exponential(&half * (c - &ds), -s.clone());
    plus.add(&minus, ctx)
}

/// `t -> integral_0^t sinh(s (t - u)) / s f(u) du`.
fn sinh_response(f: &ExponentialSum, s: &Real, ctx: &PrecisionContext) -> ExponentialSum {
    let two_s = s.clone() << 1isize;
    let up = f.convolve_exp(s, ctx);
    let down = f.convolve_exp(&-s.clone(), ctx);
    up.sub(&down, ctx).scale(&(ctx.one() / two_s))
}

/// Free evolution of `data`.
pub fn solve_homogeneous(data: &SpectralData, pairs: &[EigenPair], ctx: &PrecisionContext) -> Result<EllipticSolution> {
    check_len(data, pairs)?;
    let mut modes = Vec::with_capacity(pairs.len());
    for (j, p) in pairs.iter().enumerate() {
        let s = p.sqrt_lambda(ctx);
        let value = free_mode(&data.c[j], &data.d[j], &s, ctx);
        let slope = value.derivative(ctx);
        modes.push(ModeAmplitude { value, slope });
    }
    Ok(EllipticSolution { modes, lambdas: pairs.iter().map(|p| p.lambda.clone()).collect() })
}

/// Forced evolution `u_tt = P u + h` with `h_j = sum_k coupling_jk g_k`.
/// `coupling` is the window Gram matrix `integral_w phi_j phi_k`.
pub fn solve_duhamel(
    data: &SpectralData,
    g_modes: &[ExponentialSum],
    coupling: &SymmetricMatrix,
    pairs: &[EigenPair],
    ctx: &PrecisionContext,
) -> Result<EllipticSolution> {
    check_len(data, pairs)?;
    let n = pairs.len();
    if g_modes.len() != n || coupling.dim() != n {
        return Err(domain("forcing and coupling must match the number of modes"));
    }
    let mut modes = Vec::with_capacity(n);
    for (j, p) in pairs.iter().enumerate() {
        let s = p.sqrt_lambda(ctx);
        let mut forcing = ExponentialSum::zero();
        for (k, g) in g_modes.iter().enumerate() {
            forcing = forcing.add(&g.scale(coupling.get(j, k)), ctx);
        }
        let value = free_mode(&data.c[j], &data.d[j], &s, ctx).add(&sinh_response(&forcing, &s, ctx), ctx);
        let slope = value.derivative(ctx);
        modes.push(ModeAmplitude { value, slope });
    }
    Ok(EllipticSolution { modes, lambdas: pairs.iter().map(|p| p.lambda.clone()).collect() })
}

/// Spatial matrices of a window: `integral phi_i phi_j` and `integral phi_i' phi_j'`.
#[derive(Clone, Debug)]
pub struct WindowForms {
    pub window: (f64, f64),
    pub mass: SymmetricMatrix,
    pub stiffness: SymmetricMatrix,
}

impl WindowForms {
    pub fn new(pairs: &[EigenPair], window: (f64, f64), ctx: &PrecisionContext) -> Result<Self> {
        let samples = ModeSamples::new(pairs, window.0, window.1, true, ctx)?;
        Ok(Self { window, mass: samples.gram(ctx), stiffness: samples.stiffness(0.0, ctx).expect("derivatives tabulated") })
    }
}

/// `integral phi^2`, `integral phi_x^2` and `integral phi_t^2` over a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangleNorms {
    pub l2: Real,
    pub dx: Real,
    pub dt: Real,
}

impl RectangleNorms {
    /// The squared `H^1` norm.
    pub fn h1_sq(&self) -> Real {
        &self.l2 + &self.dx + &self.dt
    }
}

fn time_gram(a: &[&ExponentialSum], lo: &Real, hi: &Real, ctx: &PrecisionContext) -> Vec<Vec<Real>> {
    let n = a.len();
    let mut out = alloc::vec![alloc::vec![ctx.zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = a[i].mul(a[j], ctx).integral(lo, hi, ctx);
            out[j][i] = v.clone();
            out[i][j] = v;
        }
    }
    out
}

fn contract(space: &SymmetricMatrix, time: &[Vec<Real>], ctx: &PrecisionContext) -> Real {
    let mut acc = ctx.zero();
    for (i, row) in time.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            acc += space.get(i, j) * t;
        }
    }
    acc
}

/// Norms of `sol` on `window x t_interval`.
pub fn norms_on_rectangle(
    sol: &EllipticSolution,
    forms: &WindowForms,
    t_interval: (f64, f64),
    ctx: &PrecisionContext,
) -> Result<RectangleNorms> {
    if !(t_interval.0 >= 0.0 && t_interval.1 > t_interval.0) {
        return Err(domain(alloc::format!("invalid time interval {t_interval:?}")));
    }
    let lo = ctx.real(t_interval.0);
    let hi = ctx.real(t_interval.1);
    let values: Vec<&ExponentialSum> = sol.modes.iter().map(|m| &m.value).collect();
    let slopes: Vec<&ExponentialSum> = sol.modes.iter().map(|m| &m.slope).collect();
    let tv = time_gram(&values, &lo, &hi, ctx);
    let ts = time_gram(&slopes, &lo, &hi, ctx);
    Ok(RectangleNorms {
        l2: contract(&forms.mass, &tv, ctx),
        dx: contract(&forms.stiffness, &tv, ctx),
        dt: contract(&forms.mass, &ts, ctx),
    })
}

/// `integral phi^2` over `window x t_interval`, given the window Gram matrix.
pub fn l2_on_rectangle(sol: &EllipticSolution, mass: &SymmetricMatrix, t_interval: (f64, f64), ctx: &PrecisionContext) -> Result<Real> {
    if !(t_interval.0 >= 0.0 && t_interval.1 > t_interval.0) {
        return Err(domain(alloc::format!("invalid time interval {t_interval:?}")));
    }
    let values: Vec<&ExponentialSum> = sol.modes.iter().map(|m| &m.value).collect();
    let tv = time_gram(&values, &ctx.real(t_interval.0), &ctx.real(t_interval.1), ctx);
    Ok(contract(mass, &tv, ctx))
}

/// One row of the interpolation table.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationRow {
    pub delta: f64,
    pub minimal_c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationReport {
    pub rows: Vec<InterpolationRow>,
    pub best_delta: f64,
    pub best_c: f64,
    pub sample_count: usize,
    pub seed: u64,
}

/// The three norms entering the interpolation inequality for one sample:
/// inner `H^1` norm, outer `H^1` norm and the data norm
/// `||phi_0||_{H^1(a,b)} + ||phi_1||_{L^2(a,b)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationSample {
    pub inner: f64,
    pub outer: f64,
    pub data: f64,
}

/// Holder-type interpolation from a boundary strip.
#[derive(Clone, Debug)]
pub struct InterpolationSetup {
    pairs: Vec<EigenPair>,
    outer: WindowForms,
    inner: WindowForms,
    horizon: f64,
}

impl InterpolationSetup {
    pub fn new(pairs: &[EigenPair], window: &ObservationWindow, horizon: f64, ctx: &PrecisionContext) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(domain("horizon must be positive"));
        }
        let t = window.middle_third();
        Ok(Self {
            pairs: pairs.to_vec(),
            outer: WindowForms::new(pairs, (window.a(), window.b()), ctx)?,
            inner: WindowForms::new(pairs, (t.a(), t.b()), ctx)?,
            horizon,
        })
    }

    pub fn sample(&self, data: &SpectralData, ctx: &PrecisionContext) -> Result<InterpolationSample> {
        let sol = solve_homogeneous(data, &self.pairs, ctx)?;
        let inner = norms_on_rectangle(&sol, &self.inner, (0.0, self.horizon / 4.0), ctx)?;
        let outer = norms_on_rectangle(&sol, &self.outer, (0.0, self.horizon), ctx)?;
        let quad = |m: &SymmetricMatrix, v: &[Real]| to_f64(&m.quadratic_form(v, ctx));
        let phi0 = quad(&self.outer.mass, data.c()) + quad(&self.outer.stiffness, data.c());
        let phi1 = quad(&self.outer.mass, data.d());
        Ok(InterpolationSample {
            inner: libm::sqrt(to_f64(&inner.h1_sq())),
            outer: libm::sqrt(to_f64(&outer.h1_sq())),
            data: libm::sqrt(phi0.max(0.0)) + libm::sqrt(phi1.max(0.0)),
        })
    }
}

/// Minimal `c` with `inner <= c outer^{1-delta} data^delta` on every sample.
pub fn minimal_constant(samples: &[InterpolationSample], delta: f64) -> f64 {
    samples
        .iter()
        .filter(|s| s.inner > 0.0)
        .map(|s| {
            // Logarithms keep the ratio exact in scale: both sides are homogeneous.
            let log_rhs = (1.0 - delta) * libm::log(s.outer) + delta * libm::log(s.data);
            libm::exp(libm::log(s.inner) - log_rhs)
        })
        .fold(0.0, f64::max)
}

/// Table of minimal constants over `deltas` for `sample_count` random data.
pub fn interpolation_check(
    sample_count: usize,
    pairs: &[EigenPair],
    window: &ObservationWindow,
    horizon: f64,
    deltas: &[f64],
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<InterpolationReport> {
    let samples = interpolation_samples(sample_count, pairs, window, horizon, seed, ctx)?;
    interpolation_report(&samples, deltas, seed)
}

pub fn interpolation_samples(
    sample_count: usize,
    pairs: &[EigenPair],
    window: &ObservationWindow,
    horizon: f64,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<Vec<InterpolationSample>> {
    if sample_count < 20 {
        return Err(Error::InsufficientSamples { alpha: pairs.first().map_or(f64::NAN, |p| p.alpha), have: sample_count, need: 20 });
    }
    let setup = InterpolationSetup::new(pairs, window, horizon, ctx)?;
    let mut rng = NormalSampler::new(seed);
    (0..sample_count).map(|_| setup.sample(&SpectralData::random(pairs, &mut rng, ctx), ctx)).collect()
}

pub fn interpolation_report(samples: &[InterpolationSample], deltas: &[f64], seed: u64) -> Result<InterpolationReport> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(domain("every delta must lie in (0, 1)"));
    }
    let rows: Vec<InterpolationRow> =
        deltas.iter().map(|&delta| InterpolationRow { delta, minimal_c: minimal_constant(samples, delta) }).collect();
    let best = rows
        .iter()
        .filter(|r| r.minimal_c.is_finite())
        .min_by(|a, b| a.minimal_c.partial_cmp(&b.minimal_c).expect("finite"))
        .ok_or_else(|| domain("no finite constant in the table"))?;
    Ok(InterpolationReport { best_delta: best.delta, best_c: best.minimal_c, rows: rows.clone(), sample_count: samples.len(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigensystem, Method, OperatorConfig};

    fn laplacian(n: usize, ctx: &PrecisionContext) -> Vec<EigenPair> {
        eigensystem(&OperatorConfig::new(0.0).unwrap(), n, Method::Bessel, ctx).unwrap()
    }

    #[test]
    fn free_modes() {
        let ctx = PrecisionContext::new(128).unwrap();
        let pairs = laplacian(2, &ctx);
        let pi = core::f64::consts::PI;
        let cosh = solve_homogeneous(&SpectralData::unit(2, 0, true, &ctx), &pairs, &ctx).unwrap();
        let sinh = solve_homogeneous(&SpectralData::unit(2, 0, false, &ctx), &pairs, &ctx).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let (v, _) = cosh.coefficients_at(&ctx.real(t), &ctx);
            assert!((to_f64(&v[0]) - libm::cosh(pi * t)).abs() < 1e-12 * libm::cosh(pi * t));
            assert!(to_f64(&v[1]).abs() < 1e-30);
            let (v, d) = sinh.coefficients_at(&ctx.real(t), &ctx);
            assert!((to_f64(&v[0]) - libm::sinh(pi * t) / pi).abs() < 1e-12);
            assert!((to_f64(&d[0]) - libm::cosh(pi * t)).abs() < 1e-12 * libm::cosh(pi * t));
        }
        assert!(cosh.mode_equation_residual(&ctx) < 1e-30);
    }

    #[test]
    fn single_forcing_closed_form() {
        let ctx = PrecisionContext::new(128).unwrap();
        let pairs = laplacian(1, &ctx);
        let mu = 1.7f64;
        let g = alloc::vec![ExponentialSum::exponential(ctx.one(), ctx.real(mu))];
        let id = SymmetricMatrix::from_fn(1, &ctx, |_, _| ctx.one());
        let sol = solve_duhamel(&SpectralData::zeros(1, &ctx), &g, &id, &pairs, &ctx).unwrap();
        let s = core::f64::consts::PI;
        for t in [0.25, 1.0, 2.0] {
            let expect = (libm::exp(mu * t) - libm::cosh(s * t) - mu / s * libm::sinh(s * t)) / (mu * mu - s * s);
            let got = to_f64(&sol.coefficients_at(&ctx.real(t), &ctx).0[0]);
            assert!((got - expect).abs() < 1e-12 * expect.abs().max(1.0), "t = {t}");
        }
    }

    #[test]
    fn resonant_forcing_has_secular_term() {
        let ctx = PrecisionContext::new(128).unwrap();
        let pairs = laplacian(1, &ctx);
        let s = pairs[0].sqrt_lambda(&ctx);
        let g = alloc::vec![ExponentialSum::exponential(ctx.one(), s.clone())];
        let id = SymmetricMatrix::from_fn(1, &ctx, |_, _| ctx.one());
        let sol = solve_duhamel(&SpectralData::zeros(1, &ctx), &g, &id, &pairs, &ctx).unwrap();
        assert_eq!(sol.modes()[0].value.max_degree(), 1);
        // Limit of the non-resonant formula: t e^{st}/(2s) - sinh(st)/(2 s^2).
        let sf = to_f64(&s);
        for t in [0.5, 1.5] {
            let expect = t * libm::exp(sf * t) / (2.0 * sf) - libm::sinh(sf * t) / (2.0 * sf * sf);
            let got = to_f64(&sol.coefficients_at(&ctx.real(t), &ctx).0[0]);
            assert!((got - expect).abs() < 1e-12 * expect.abs());
        }
    }

    #[test]
    fn duhamel_starts_from_data() {
        let ctx = PrecisionContext::new(128).unwrap();
        let pairs = laplacian(2, &ctx);
        let data = SpectralData::from_f64(&[0.3, -1.1], &[2.0, 0.5], &ctx).unwrap();
        let g = alloc::vec![
            ExponentialSum::exponential(ctx.real(0.7), ctx.real(2.5)),
            ExponentialSum::exponential(ctx.real(-0.2), ctx.real(-1.0)),
        ];
        let coupling = SymmetricMatrix::from_fn(2, &ctx, |i, j| if i == j { ctx.real(0.6) } else { ctx.real(0.1) });
        let sol = solve_duhamel(&data, &g, &coupling, &pairs, &ctx).unwrap();
        let (v, d) = sol.coefficients_at(&ctx.zero(), &ctx);
        for j in 0..2 {
            assert!(to_f64(&(&v[j] - &data.c()[j])).abs() < 1e-35);
            assert!(to_f64(&(&d[j] - &data.d()[j])).abs() < 1e-35);
        }
    }

    #[test]
    fn single_mode_rectangle_norm() {
        let ctx = PrecisionContext::new(128).unwrap();
        let pairs = laplacian(1, &ctx);
        let sol = solve_homogeneous(&SpectralData::unit(1, 0, true, &ctx), &pairs, &ctx).unwrap();
        let forms = WindowForms::new(&pairs, (0.0, 1.0), &ctx).unwrap();
        let n = norms_on_rectangle(&sol, &forms, (0.0, 1.0), &ctx).unwrap();
        let pi = core::f64::consts::PI;
        let expect = 0.5 + libm::sinh(2.0 * pi) / (4.0 * pi);
        assert!((to_f64(&n.l2) - expect).abs() < 1e-12 * expect);
        // phi_x has norm pi^2 per unit amplitude, phi_t gives the sinh^2 integral.
        assert!((to_f64(&n.dx) - pi * pi * expect).abs() < 1e-11 * expect * pi * pi);
        let dt = pi * pi * (libm::sinh(2.0 * pi) / (4.0 * pi) - 0.5);
        assert!((to_f64(&n.dt) - dt).abs() < 1e-11 * dt);
    }

    #[test]
    fn interpolation_constant_is_scale_free() {
        let ctx = PrecisionContext::new(128).unwrap();
        let pairs = laplacian(3, &ctx);
        let w = ObservationWindow::default();
        let setup = InterpolationSetup::new(&pairs, &w, 1.0, &ctx).unwrap();
        let mut rng = NormalSampler::new(3);
        let data: Vec<SpectralData> = (0..4).map(|_| SpectralData::random(&pairs, &mut rng, &ctx)).collect();
        let base: Vec<InterpolationSample> = data.iter().map(|d| setup.sample(d, &ctx).unwrap()).collect();
        let ten = ctx.int(10);
        let big: Vec<InterpolationSample> = data.iter().map(|d| setup.sample(&d.scaled(&ten), &ctx).unwrap()).collect();
        for delta in [0.1, 0.5, 0.9] {
            let a = minimal_constant(&base, delta);
            let b = minimal_constant(&big, delta);
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }
}
