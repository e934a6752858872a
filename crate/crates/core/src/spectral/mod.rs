//! Eigenpairs of `P u = -(x^alpha u')'` on `(0, 1)` with `u(1) = 0`.
//!
//! For `0 <= alpha < 1` the condition at zero is `u(0) = 0`; for
//! `1 <= alpha < 2` it is `(x^alpha u')(0) = 0`. With
//! `kappa = (2 - alpha)/2` and `nu = |1 - alpha| / (2 - alpha)` the spectrum
//! is `lambda_j = kappa^2 j_{nu,j}^2`, and
//!
//! ```text
//! phi_j(x) = sqrt(2 kappa) / |J_{nu+1}(j_{nu,j})| * x^((1-alpha)/2) J_nu(j_{nu,j} x^kappa)
//! ```
//!
//! is `L^2(0, 1)`-normalized and positive near zero. A finite element
//! discretization is available as an independent cross-check.

pub mod checks;
pub mod fem;
pub mod sampling;

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::numerics::bessel::{bessel_zeros, gamma, regular_series, regular_series_f64, SeriesTable};
use crate::numerics::precision::{abs, is_zero, to_f64, PrecisionContext, Real};

pub use fem::{FemMode, FemOptions};

/// Largest exponent accepted unless the caller raises the cap explicitly.
pub const DEFAULT_ALPHA_CAP: f64 = 1.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `0 <= alpha < 1`: Dirichlet condition at the degenerate endpoint.
    Weak,
    /// `1 <= alpha < 2`: vanishing weighted flux at the degenerate endpoint.
    Strong,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Weak => "weak",
            Regime::Strong => "strong",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorConfig {
    alpha: f64,
}

impl OperatorConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_cap(alpha, DEFAULT_ALPHA_CAP)
    }

    /// Accept exponents up to `cap`, which itself must stay below 2.
    pub fn with_cap(alpha: f64, cap: f64) -> Result<Self> {
        if !(cap < 2.0) {
            return Err(Error::InvalidConfig(format!("alpha cap must be below 2, got {cap}")));
        }
        if !(alpha >= 0.0 && alpha <= cap) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0, {cap}], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn regime(&self) -> Regime {
        if self.alpha < 1.0 {
            Regime::Weak
        } else {
            Regime::Strong
        }
    }

    pub fn kappa(&self, ctx: &PrecisionContext) -> Real {
        (ctx.int(2) - ctx.real(self.alpha)) >> 1isize
    }

    pub fn nu(&self, ctx: &PrecisionContext) -> Real {
        let a = ctx.real(self.alpha);
        abs(&(ctx.one() - &a)) / (ctx.int(2) - a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Bessel,
    Fem,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Bessel => "bessel",
            Method::Fem => "fem",
        }
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bessel" => Ok(Method::Bessel),
            "fem" => Ok(Method::Fem),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}' (expected bessel or fem)"))),
        }
    }
}

/// Which computation produced an eigenpair.
pub type Provenance = Method;

// Few profiles are alive at once, so the unboxed Bessel variant costs little.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
enum Profile {
    Bessel {
        amplitude: Real,
        exponent: Real,
        deriv_coef: Real,
        deriv_exponent: Real,
        value_series: Arc<SeriesTable>,
        deriv_series: Arc<SeriesTable>,
        fast: FastProfile,
    },
    Fem(Arc<FemMode>),
}

/// Double precision copy of a Bessel profile.
#[derive(Clone, Copy, Debug)]
struct FastProfile {
    amplitude: f64,
    exponent: f64,
    deriv_coef: f64,
    deriv_exponent: f64,
    nu: f64,
    deriv_order: f64,
    kappa: f64,
    zero: f64,
}

impl FastProfile {
    fn value(&self, x: f64) -> f64 {
        if x == 0.0 {
            return if self.exponent == 0.0 { self.amplitude } else { 0.0 };
        }
        let z = self.zero * libm::pow(x, self.kappa);
        self.amplitude * libm::pow(x, self.exponent) * regular_series_f64(self.nu, z)
    }

    fn derivative(&self, x: f64) -> f64 {
        if x == 0.0 {
            let e = self.deriv_exponent;
            return if e == 0.0 {
                self.deriv_coef
            } else if e > 0.0 {
                0.0
            } else {
                f64::INFINITY * self.deriv_coef.signum()
            };
        }
        let z = self.zero * libm::pow(x, self.kappa);
        self.deriv_coef * libm::pow(x, self.deriv_exponent) * regular_series_f64(self.deriv_order, z)
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    /// 1-based index in increasing order of eigenvalues.
    pub index: usize,
    pub alpha: f64,
    pub lambda: Real,
    pub nu: Real,
    pub kappa: Real,
    /// The Bessel zero `j_{nu,index}` (for finite elements: `sqrt(lambda)/kappa`).
    pub zero: Real,
    /// The factor `sqrt(2 kappa)/|J_{nu+1}(zero)|` (1 for finite elements,
    /// whose nodal values are normalized directly).
    pub norm_const: Real,
    pub provenance: Provenance,
    profile: Profile,
}

impl EigenPair {
    pub fn regime(&self) -> Regime {
        if self.alpha < 1.0 {
            Regime::Weak
        } else {
            Regime::Strong
        }
    }

    pub fn sqrt_lambda(&self, ctx: &PrecisionContext) -> Real {
        ctx.sqrt(&self.lambda)
    }

    /// `phi(x)` for `x` in `[0, 1]`.
    pub fn eval(&self, x: &Real, ctx: &PrecisionContext) -> Real {
        match &self.profile {
            Profile::Fem(m) => ctx.real(m.eval(to_f64(x))),
            Profile::Bessel { amplitude, exponent, value_series, .. } => {
                if is_zero(x) {
                    return if is_zero(exponent) { ctx.round(amplitude) } else { ctx.zero() };
                }
                let p = Powers::new(x);
                let z = &self.zero * p.pow(&self.kappa, ctx);
                amplitude * p.pow(exponent, ctx) * value_series.eval(&z, ctx)
            }
        }
    }

    /// `phi'(x)` for `x` in `(0, 1]`.
    pub fn eval_derivative(&self, x: &Real, ctx: &PrecisionContext) -> Real {
        match &self.profile {
            Profile::Fem(m) => ctx.real(m.eval_derivative(to_f64(x))),
            Profile::Bessel { deriv_coef, deriv_exponent, deriv_series, .. } => {
                assert!(!is_zero(x) || !x_pow_singular(deriv_exponent), "derivative is unbounded at the origin");
                if is_zero(x) {
                    return if is_zero(deriv_exponent) { ctx.round(deriv_coef) } else { ctx.zero() };
                }
                let p = Powers::new(x);
                let z = &self.zero * p.pow(&self.kappa, ctx);
                deriv_coef * p.pow(deriv_exponent, ctx) * deriv_series.eval(&z, ctx)
            }
        }
    }

    /// Both `phi(x)` and `phi'(x)`.
    pub fn eval_both(&self, x: &Real, ctx: &PrecisionContext) -> (Real, Real) {
        let mut out = eval_many(core::slice::from_ref(self), x, ctx, true);
        out.pop().expect("one pair")
    }

    /// Boundary flux `phi'(1)`.
    pub fn flux_at_one(&self, ctx: &PrecisionContext) -> Real {
        match &self.profile {
            Profile::Fem(m) => ctx.real(m.flux),
            Profile::Bessel { .. } => self.eval_derivative(&ctx.one(), ctx),
        }
    }

    /// `phi(x)` in double precision.
    pub fn eval_f64(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::Fem(m) => m.eval(x),
            Profile::Bessel { fast, .. } => fast.value(x),
        }
    }

    /// `phi'(x)` in double precision.
    pub fn eval_derivative_f64(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::Fem(m) => m.eval_derivative(x),
            Profile::Bessel { fast, .. } => fast.derivative(x),
        }
    }

    pub fn fem_mode(&self) -> Option<&FemMode> {
        match &self.profile {
            Profile::Fem(m) => Some(m),
            Profile::Bessel { .. } => None,
        }
    }
}

fn x_pow_singular(e: &Real) -> bool {
    e.sign() == dashu_base::Sign::Negative && !is_zero(e)
}

/// Powers of a fixed positive `x`, with `ln x` computed at most once.
struct Powers<'a> {
    x: &'a Real,
    ln: core::cell::OnceCell<Real>,
}

impl<'a> Powers<'a> {
    fn new(x: &'a Real) -> Self {
        Self { x, ln: core::cell::OnceCell::new() }
    }

    fn pow(&self, e: &Real, ctx: &PrecisionContext) -> Real {
        if is_zero(e) {
            return ctx.one();
        }
        if e.repr().is_int() && to_f64(e).abs() < 64.0 {
            return ctx.powi(self.x, to_f64(e) as i64);
        }
        let l = self.ln.get_or_init(|| ctx.widened(8).ln(self.x));
        ctx.exp(&(l * e))
    }
}

/// Values (and optionally derivatives) of several eigenpairs of the same
/// operator at one point. Powers of `x` are shared between the pairs; the
/// derivative slot is zero when `with_derivative` is false.
pub fn eval_many(pairs: &[EigenPair], x: &Real, ctx: &PrecisionContext, with_derivative: bool) -> Vec<(Real, Real)> {
    let mut out = Vec::with_capacity(pairs.len());
    if pairs.is_empty() {
        return out;
    }
    let p = Powers::new(x);
    let mut cache: Option<(Real, Real, Real)> = None;
    for pair in pairs {
        match &pair.profile {
            Profile::Fem(m) => {
                let xf = to_f64(x);
                let d = if with_derivative { ctx.real(m.eval_derivative(xf)) } else { ctx.zero() };
                out.push((ctx.real(m.eval(xf)), d));
            }
            Profile::Bessel { amplitude, exponent, deriv_coef, deriv_exponent, value_series, deriv_series, .. } => {
                if is_zero(x) {
                    let d = if with_derivative { pair.eval_derivative(x, ctx) } else { ctx.zero() };
                    out.push((pair.eval(x, ctx), d));
                    continue;
                }
                let (xk, xe, xd) = cache.get_or_insert_with(|| {
                    let xd = if with_derivative { p.pow(deriv_exponent, ctx) } else { ctx.zero() };
                    (p.pow(&pair.kappa, ctx), p.pow(exponent, ctx), xd)
                });
                let z = &pair.zero * &*xk;
                let v = amplitude * &*xe * value_series.eval(&z, ctx);
                let d = if with_derivative { deriv_coef * &*xd * deriv_series.eval(&z, ctx) } else { ctx.zero() };
                out.push((v, d));
            }
        }
    }
    out
}

/// The first `count` eigenpairs, computed by `method`.
pub fn eigensystem(config: &OperatorConfig, count: usize, method: Method, ctx: &PrecisionContext) -> Result<Vec<EigenPair>> {
    match method {
        Method::Bessel => bessel_eigensystem(config, count, ctx),
        Method::Fem => fem_eigensystem(config, count, &FemOptions::default(), ctx),
    }
}

fn bessel_eigensystem(config: &OperatorConfig, count: usize, ctx: &PrecisionContext) -> Result<Vec<EigenPair>> {
    if count == 0 {
        return Err(domain("at least one eigenpair must be requested"));
    }
    let w = ctx.widened(16);
    let alpha = w.real(config.alpha());
    let kappa = config.kappa(&w);
    let nu = config.nu(&w);
    let zeros = bessel_zeros(&nu, count, &w)?;
    let weak = config.regime() == Regime::Weak;
    let one = w.one();
    let nu1 = &nu + &one;
    let gamma_nu1 = gamma(&nu1, &w)?;
    let sqrt_2k = w.sqrt(&(kappa.clone() << 1isize));
    let exponent = if weak { &one - &alpha } else { w.zero() };
    let z_max = to_f64(zeros.last().expect("count >= 1")) * (1.0 + 1e-9);
    let value_series = Arc::new(SeriesTable::new(&nu, z_max, ctx));
    let deriv_order = if weak { &nu - &one } else { nu1.clone() };
    let deriv_series = Arc::new(SeriesTable::new(&deriv_order, z_max, ctx));
    let mut pairs = Vec::with_capacity(count);
    for (k, z) in zeros.into_iter().enumerate() {
        let f1 = abs(&regular_series(&nu1, &z, &w));
        let amplitude = &sqrt_2k * &nu1 * (w.int(2) / &z) / f1;
        let norm_const = &amplitude * &gamma_nu1 * w.powf(&(w.int(2) / &z), &nu);
        let (deriv_coef, deriv_exponent) = if weak {
            (&amplitude * (kappa.clone() << 1isize) * &nu, -alpha.clone())
        } else {
            (-(&amplitude * &kappa * &z * &z) / (nu1.clone() << 1isize), &one - &alpha)
        };
        let lambda = &kappa * &kappa * &z * &z;
        pairs.push(EigenPair {
            index: k + 1,
            alpha: config.alpha(),
            lambda: ctx.round(&lambda),
            nu: ctx.round(&nu),
            kappa: ctx.round(&kappa),
            zero: ctx.round(&z),
            norm_const: ctx.round(&norm_const),
            provenance: Method::Bessel,
            profile: Profile::Bessel {
                amplitude: ctx.round(&amplitude),
                exponent: ctx.round(&exponent),
                deriv_coef: ctx.round(&deriv_coef),
                deriv_exponent: ctx.round(&deriv_exponent),
                value_series: value_series.clone(),
                deriv_series: deriv_series.clone(),
                fast: FastProfile {
                    amplitude: to_f64(&amplitude),
                    exponent: to_f64(&exponent),
                    deriv_coef: to_f64(&deriv_coef),
                    deriv_exponent: to_f64(&deriv_exponent),
                    nu: to_f64(&nu),
                    deriv_order: to_f64(&deriv_order),
                    kappa: to_f64(&kappa),
                    zero: to_f64(&z),
                },
            },
        });
    }
    Ok(pairs)
}

/// Finite element eigenpairs with explicit mesh options.
pub fn fem_eigensystem(config: &OperatorConfig, count: usize, opts: &FemOptions, ctx: &PrecisionContext) -> Result<Vec<EigenPair>> {
    let modes = fem::fem_modes(config.alpha(), count, opts)?;
    let kappa = config.kappa(ctx);
    let nu = config.nu(ctx);
    Ok(modes
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let lambda = ctx.real(m.lambda);
            let zero = ctx.sqrt(&lambda) / &kappa;
            EigenPair {
                index: k + 1,
                alpha: config.alpha(),
                lambda,
                nu: nu.clone(),
                kappa: kappa.clone(),
                zero,
                norm_const: ctx.one(),
                provenance: Method::Fem,
                profile: Profile::Fem(Arc::new(m)),
            }
        })
        .collect())
}

/// Evaluate `pair` at `x` (free-function form).
pub fn eval_eigenfunction(pair: &EigenPair, x: &Real, ctx: &PrecisionContext) -> Real {
    pair.eval(x, ctx)
}

/// Evaluate `pair'` at `x` (free-function form).
pub fn eval_derivative(pair: &EigenPair, x: &Real, ctx: &PrecisionContext) -> Real {
    pair.eval_derivative(x, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(OperatorConfig::new(0.0).is_ok());
        assert!(OperatorConfig::new(1.95).is_ok());
        assert!(OperatorConfig::new(1.96).is_err());
        assert!(OperatorConfig::new(-0.1).is_err());
        assert!(OperatorConfig::with_cap(1.99, 1.995).is_ok());
        assert!(OperatorConfig::with_cap(1.0, 2.0).is_err());
        assert_eq!(OperatorConfig::new(0.999).unwrap().regime(), Regime::Weak);
        assert_eq!(OperatorConfig::new(1.0).unwrap().regime(), Regime::Strong);
        assert_eq!("fem".parse::<Method>().unwrap(), Method::Fem);
        assert!("spline".parse::<Method>().is_err());
    }

    #[test]
    fn laplacian_case_is_a_sine_series() {
        let ctx = PrecisionContext::new(128).unwrap();
        let cfg = OperatorConfig::new(0.0).unwrap();
        let pairs = eigensystem(&cfg, 4, Method::Bessel, &ctx).unwrap();
        let pi = core::f64::consts::PI;
        for p in &pairs {
            let n = p.index as f64;
            assert!((to_f64(&p.lambda) - n * n * pi * pi).abs() < 1e-12);
            for &x in &[0.1, 0.37, 0.9] {
                let expect = libm::sqrt(2.0) * libm::sin(n * pi * x);
                assert!((p.eval_f64(x) - expect).abs() < 1e-14);
                let d = to_f64(&p.eval_derivative(&ctx.real(x), &ctx));
                assert!((d - libm::sqrt(2.0) * n * pi * libm::cos(n * pi * x)).abs() < 1e-12);
            }
            let flux = to_f64(&p.flux_at_one(&ctx));
            let sign = if p.index % 2 == 0 { 1.0 } else { -1.0 };
            assert!((flux - sign * libm::sqrt(2.0) * n * pi).abs() < 1e-12);
        }
    }

    #[test]
    fn double_precision_path_matches_extended() {
        let ctx = PrecisionContext::new(128).unwrap();
        for alpha in [0.0, 0.3, 1.0, 1.7] {
            let pairs = eigensystem(&OperatorConfig::new(alpha).unwrap(), 12, Method::Bessel, &ctx).unwrap();
            for p in &pairs {
                let scale = libm::sqrt(to_f64(&p.lambda));
                for i in 1..=40 {
                    let x = i as f64 / 40.0;
                    let (v, d) = p.eval_both(&ctx.real(x), &ctx);
                    assert!((p.eval_f64(x) - to_f64(&v)).abs() < 1e-12, "alpha {alpha} j {} x {x}", p.index);
                    let dv = p.eval_derivative_f64(x) - to_f64(&d);
                    assert!(dv.abs() < 1e-12 * scale * libm::pow(x, -alpha), "alpha {alpha} j {} x {x}", p.index);
                }
            }
        }
    }

    #[test]
    fn strong_regime_is_bounded_at_zero() {
        let ctx = PrecisionContext::new(96).unwrap();
        let cfg = OperatorConfig::new(1.5).unwrap();
        let pairs = eigensystem(&cfg, 2, Method::Bessel, &ctx).unwrap();
        let at0 = pairs[0].eval_f64(0.0);
        let near = pairs[0].eval_f64(1e-12);
        assert!(at0 > 0.0 && (at0 - near).abs() < 1e-4 * at0);
    }
}
