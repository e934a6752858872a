//! Exponential polynomials `sum_i c_i t^{p_i} e^{r_i t}` with exact calculus.
//!
//! These represent every time-dependent quantity of the moment construction:
//! Gram entries, biorthogonal functions, controls and the Duhamel response of
//! a mode to them. Integrals, products, derivatives and convolutions against
//! an exponential kernel are all evaluated in closed form.

use alloc::vec::Vec;

use super::precision::{is_zero, log2_abs, PrecisionContext, Real};

/// One term `coef * t^degree * exp(rate * t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpTerm {
    pub coef: Real,
    pub rate: Real,
    pub degree: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExponentialSum {
    terms: Vec<ExpTerm>,
}

impl ExponentialSum {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `coef * exp(rate * t)`.
    pub fn exponential(coef: Real, rate: Real) -> Self {
        Self { terms: alloc::vec![ExpTerm { coef, rate, degree: 0 }] }
    }

    pub fn from_terms(terms: Vec<ExpTerm>, ctx: &PrecisionContext) -> Self {
        let mut s = Self { terms };
        s.canonicalize(ctx);
        s
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.degree).max().unwrap_or(0)
    }

    /// Merge terms whose rates agree to half the working precision and drop
    /// vanishing coefficients. Terms end up sorted by rate, then degree.
    pub fn canonicalize(&mut self, ctx: &PrecisionContext) {
        let mut terms = core::mem::take(&mut self.terms);
        terms.retain(|t| !is_zero(&t.coef));
        terms.sort_by(|a, b| a.rate.partial_cmp(&b.rate).expect("finite rates").then(a.degree.cmp(&b.degree)));
        let half = -(ctx.bits() as isize) / 2;
        let mut out: Vec<ExpTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            // Sorted by rate: candidates for merging sit at the tail of `out`.
            let mut merged = false;
            for o in out.iter_mut().rev() {
                if !rates_close(&o.rate, &t.rate, half) {
                    break;
                }
                if o.degree == t.degree {
                    o.coef += &t.coef;
                    merged = true;
                    break;
                }
            }
            if !merged {
                out.push(t);
            }
        }
        out.retain(|t| !is_zero(&t.coef));
        self.terms = out;
    }

    pub fn eval(&self, t: &Real, ctx: &PrecisionContext) -> Real {
        let mut acc = ctx.zero();
        for term in &self.terms {
            let mut v = ctx.exp(&(&term.rate * t)) * &term.coef;
            if term.degree > 0 {
                v *= ctx.powi(t, term.degree as i64);
            }
            acc += v;
        }
        acc
    }

    pub fn scale(&self, c: &Real) -> Self {
        Self { terms: self.terms.iter().map(|t| ExpTerm { coef: &t.coef * c, rate: t.rate.clone(), degree: t.degree }).collect() }
    }

    pub fn add(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(terms, ctx)
    }

    pub fn sub(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| ExpTerm { coef: -t.coef.clone(), rate: t.rate.clone(), degree: t.degree }));
        Self::from_terms(terms, ctx)
    }

    pub fn mul(&self, other: &Self, ctx: &PrecisionContext) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(ExpTerm { coef: &a.coef * &b.coef, rate: &a.rate + &b.rate, degree: a.degree + b.degree });
            }
        }
        Self::from_terms(terms, ctx)
    }

    /// Multiply by `exp(rate * t)`.
    pub fn shift_rate(&self, rate: &Real) -> Self {
        Self { terms: self.terms.iter().map(|t| ExpTerm { coef: t.coef.clone(), rate: &t.rate + rate, degree: t.degree }).collect() }
    }

    pub fn derivative(&self, ctx: &PrecisionContext) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            terms.push(ExpTerm { coef: &t.coef * &t.rate, rate: t.rate.clone(), degree: t.degree });
            if t.degree > 0 {
                terms.push(ExpTerm { coef: &t.coef * ctx.int(t.degree as i64), rate: t.rate.clone(), degree: t.degree - 1 });
            }
        }
        Self::from_terms(terms, ctx)
    }

    /// The function `t -> f(horizon - t)`.
    pub fn reflect(&self, horizon: &Real, ctx: &PrecisionContext) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            let base = &t.coef * ctx.exp(&(&t.rate * horizon));
            let rate = -t.rate.clone();
            let p = t.degree;
            for i in 0..=p {
                let mut c = &base * ctx.int(binomial(p, i)) * ctx.powi(horizon, (p - i) as i64);
                if i % 2 == 1 {
                    c = -c;
                }
                terms.push(ExpTerm { coef: c, rate: rate.clone(), degree: i });
            }
        }
        Self::from_terms(terms, ctx)
    }

    /// Exact `integral_lo^hi f(t) dt`.
    pub fn integral(&self, lo: &Real, hi: &Real, ctx: &PrecisionContext) -> Real {
        let w = ctx.widened(16 + 3 * self.max_degree() as usize);
        let delta = w.round(&(hi - lo));
        let lo_w = w.round(lo);
        let mut acc = w.zero();
        for t in &self.terms {
            acc += term_integral(t, &lo_w, &delta, &w);
        }
        ctx.round(&acc)
    }

    /// The Duhamel-type convolution `t -> integral_0^t exp(rho (t - s)) f(s) ds`.
    pub fn convolve_exp(&self, rho: &Real, ctx: &PrecisionContext) -> Self {
        let half = -(ctx.bits() as isize) / 2;
        let mut terms = Vec::new();
        for t in &self.terms {
            let delta = &t.rate - rho;
            let p = t.degree;
            if is_zero(&delta) || rates_close(&t.rate, rho, half) {
                terms.push(ExpTerm { coef: &t.coef / ctx.int(p as i64 + 1), rate: rho.clone(), degree: p + 1 });
                continue;
            }
            // integral_0^t s^p e^{d s} ds
            //   = e^{d t} sum_k (-1)^k p!/(p-k)! t^{p-k} / d^{k+1} - (-1)^p p! / d^{p+1}
            let inv = ctx.one() / &delta;
            let mut falling = ctx.one();
            let mut inv_pow = inv.clone();
            for k in 0..=p {
                if k > 0 {
                    falling *= ctx.int((p - k + 1) as i64);
                    inv_pow *= &inv;
                }
                let mut c = &t.coef * &falling * &inv_pow;
                if k % 2 == 1 {
                    c = -c;
                }
                terms.push(ExpTerm { coef: c, rate: t.rate.clone(), degree: p - k });
            }
            let mut tail = &t.coef * &falling * &inv_pow;
            if p % 2 == 0 {
                tail = -tail;
            }
            terms.push(ExpTerm { coef: tail, rate: rho.clone(), degree: 0 });
        }
        Self::from_terms(terms, ctx)
    }
}

/// Exact integral of an exponential sum over `[lo, hi]`.
pub fn exact_integral(f: &ExponentialSum, lo: &Real, hi: &Real, ctx: &PrecisionContext) -> Real {
    f.integral(lo, hi, ctx)
}

fn rates_close(a: &Real, b: &Real, half: isize) -> bool {
    let d = a - b;
    if is_zero(&d) {
        return true;
    }
    let scale = log2_abs(a).max(log2_abs(b)).max(0);
    log2_abs(&d) < half + scale
}

fn binomial(n: u32, k: u32) -> i64 {
    let mut c: i64 = 1;
    for i in 0..k as i64 {
        c = c * (n as i64 - i) / (i + 1);
    }
    c
}

/// integral over [lo, lo + delta] of coef t^p e^{r t}.
fn term_integral(t: &ExpTerm, lo: &Real, delta: &Real, ctx: &PrecisionContext) -> Real {
    let p = t.degree;
    let r = &t.rate;
    // Shift to the left endpoint: t = lo + s.
    let mut acc = ctx.zero();
    for i in 0..=p {
        let weight = if i == p { ctx.one() } else { ctx.int(binomial(p, i)) * ctx.powi(lo, (p - i) as i64) };
        if is_zero(&weight) {
            continue;
        }
        acc += weight * monomial_exp_integral(i, r, delta, ctx);
    }
    let shift = if is_zero(r) || is_zero(lo) { ctx.one() } else { ctx.exp(&(r * lo)) };
    acc * shift * &t.coef
}

/// integral_0^d s^i e^{r s} ds.
fn monomial_exp_integral(i: u32, r: &Real, d: &Real, ctx: &PrecisionContext) -> Real {
    if is_zero(d) {
        return ctx.zero();
    }
    let rd = r * d;
    if is_zero(r) || log2_abs(&rd) < -1 {
        // Power series in r d, converging at least geometrically with ratio 1/2.
        let eps = -(ctx.bits() as isize) - 8;
        let dp = ctx.powi(d, i as i64 + 1);
        let mut term = ctx.one();
        let mut acc = &dp / ctx.int(i as i64 + 1);
        let mut m = 0i64;
        loop {
            m += 1;
            term = term * &rd / ctx.int(m);
            let contrib = &term * &dp / ctx.int(i as i64 + 1 + m);
            if is_zero(&contrib) || log2_abs(&contrib) < eps + log2_abs(&acc) {
                break;
            }
            acc += contrib;
        }
        return acc;
    }
    let inv = ctx.one() / r;
    let e = ctx.exp(&rd);
    let mut falling = ctx.one();
    let mut inv_pow = inv.clone();
    let mut acc = ctx.zero();
    for k in 0..=i {
        if k > 0 {
            falling *= ctx.int((i - k + 1) as i64);
            inv_pow *= &inv;
        }
        let mut c = &falling * &inv_pow * ctx.powi(d, (i - k) as i64);
        if k % 2 == 1 {
            c = -c;
        }
        acc += c;
    }
    let mut tail = &falling * &inv_pow;
    if i % 2 == 1 {
        tail = -tail;
    }
    acc * e - tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::precision::to_f64;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn integral_of_single_exponential() {
        let ctx = ctx();
        let f = ExponentialSum::exponential(ctx.real(3.0), ctx.real(-2.0));
        let v = to_f64(&f.integral(&ctx.zero(), &ctx.real(1.5), &ctx));
        let expect = 1.5 * (1.0 - libm::exp(-3.0));
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn integral_with_tiny_rate_has_no_cancellation() {
        let ctx = ctx();
        let f = ExponentialSum::exponential(ctx.one(), ctx.real(1e-30));
        let v = f.integral(&ctx.zero(), &ctx.one(), &ctx);
        let expect = ctx.one() + ctx.real(0.5e-30);
        assert!(to_f64(&(v - expect)).abs() < 1e-36);
    }

    #[test]
    fn product_and_degree() {
        let ctx = ctx();
        let a = ExponentialSum::exponential(ctx.one(), ctx.real(1.0));
        let b = ExponentialSum::exponential(ctx.one(), ctx.real(-1.0));
        let p = a.mul(&b, &ctx);
        assert_eq!(p.terms().len(), 1);
        assert!(is_zero(&p.terms()[0].rate));
        // t e^{t} integrated over [0, 1] is 1.
        let f = ExponentialSum::from_terms(alloc::vec![ExpTerm { coef: ctx.one(), rate: ctx.one(), degree: 1 }], &ctx);
        let v = to_f64(&f.integral(&ctx.zero(), &ctx.one(), &ctx));
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_closed_form() {
        let ctx = ctx();
        let f = ExponentialSum::from_terms(
            alloc::vec![
                ExpTerm { coef: ctx.real(2.0), rate: ctx.real(0.5), degree: 2 },
                ExpTerm { coef: ctx.real(-1.0), rate: ctx.real(-3.0), degree: 0 },
            ],
            &ctx,
        );
        let df = f.derivative(&ctx);
        let t = 0.7f64;
        let expect = 2.0 * (0.5 * t * t + 2.0 * t) * libm::exp(0.5 * t) + 3.0 * libm::exp(-3.0 * t);
        assert!((to_f64(&df.eval(&ctx.real(t), &ctx)) - expect).abs() < 1e-14);
    }

    #[test]
    fn reflection() {
        let ctx = ctx();
        let f = ExponentialSum::from_terms(alloc::vec![ExpTerm { coef: ctx.real(1.5), rate: ctx.real(0.8), degree: 1 }], &ctx);
        let horizon = ctx.real(2.0);
        let g = f.reflect(&horizon, &ctx);
        for &t in &[0.0, 0.3, 1.9] {
            let a = to_f64(&g.eval(&ctx.real(t), &ctx));
            let b = to_f64(&f.eval(&ctx.real(2.0 - t), &ctx));
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_solves_first_order_ode() {
        // y = conv(f, rho) satisfies y' = rho y + f with y(0) = 0.
        let ctx = ctx();
        let f = ExponentialSum::from_terms(
            alloc::vec![
                ExpTerm { coef: ctx.real(1.0), rate: ctx.real(0.5), degree: 0 },
                ExpTerm { coef: ctx.real(-0.5), rate: ctx.real(2.0), degree: 1 },
            ],
            &ctx,
        );
        for rho in [ctx.real(-1.5), ctx.real(0.5), ctx.real(2.0)] {
            let y = f.convolve_exp(&rho, &ctx);
            let res = y.derivative(&ctx).sub(&y.scale(&rho), &ctx).sub(&f, &ctx);
            for &t in &[0.0, 0.4, 1.3] {
                let v = to_f64(&res.eval(&ctx.real(t), &ctx));
                assert!(v.abs() < 1e-25, "rho {} t {t}: {v:e}", to_f64(&rho));
            }
            assert!(to_f64(&y.eval(&ctx.zero(), &ctx)).abs() < 1e-30);
        }
    }

    #[test]
    fn near_equal_rates_merge() {
        let ctx = ctx();
        let a = ExponentialSum::exponential(ctx.one(), ctx.one());
        let b = ExponentialSum::exponential(ctx.one(), ctx.one() + ctx.real(1e-30));
        assert_eq!(a.add(&b, &ctx).terms().len(), 1);
        let c = ExponentialSum::exponential(ctx.one(), ctx.real(1.0 + 1e-3));
        assert_eq!(a.add(&c, &ctx).terms().len(), 2);
        assert!(a.sub(&a, &ctx).is_zero());
    }
}
