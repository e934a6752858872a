//! Composite Gauss-Legendre quadrature.
//!
//! Panel layouts are described in `f64` (window endpoints and widths are
//! modest numbers); the nodes themselves live at the context precision.

use alloc::format;
use alloc::vec::Vec;

use super::precision::{is_zero, log2_abs, to_f64, PrecisionContext, Real};
use crate::error::{domain, Error, Result};

/// Gauss-Legendre rule on `[-1, 1]` with ascending nodes.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<Real>,
    weights: Vec<Real>,
}

impl GaussLegendre {
    pub fn new(n: usize, ctx: &PrecisionContext) -> Result<Self> {
        if n == 0 || n > 512 {
            return Err(domain(format!("node count must lie in [1, 512], got {n}")));
        }
        let w = ctx.widened(16);
        let mut pairs: Vec<(Real, Real)> = Vec::with_capacity(n);
        for i in 0..n.div_ceil(2) {
            // Positive roots in decreasing order; the guess is good to a few digits.
            let theta = core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
            let (x, wt) = refine_root(n, polish_f64(n, libm::cos(theta)), &w)?;
            let (x, wt) = (ctx.round(&x), ctx.round(&wt));
            if 2 * i + 1 == n {
                pairs.push((ctx.zero(), wt));
            } else {
                pairs.push((-x.clone(), wt.clone()));
                pairs.push((x, wt));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
        let (nodes, weights): (Vec<Real>, Vec<Real>) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Real] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Real] {
        &self.weights
    }

    pub fn to_f64(&self) -> GaussLegendreF64 {
        let nodes: Vec<f64> = self.nodes.iter().map(to_f64).collect();
        let weights: Vec<f64> = self.weights.iter().map(to_f64).collect();
        let bary = nodes
            .iter()
            .zip(weights.iter())
            .enumerate()
            .map(|(i, (&x, &w))| {
                let s = libm::sqrt((1.0 - x * x) * w);
                if i % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        GaussLegendreF64 { nodes, weights, bary }
    }

    /// Integrate `f` over `[lo, hi]` with this rule on a single panel.
    pub fn integrate<F: FnMut(&Real) -> Real>(&self, f: &mut F, lo: &Real, hi: &Real) -> Real {
        let half = (hi - lo) >> 1isize;
        let mid = (hi + lo) >> 1isize;
        let mut terms = self.nodes.iter().zip(self.weights.iter()).map(|(t, w)| f(&(&mid + &half * t)) * w);
        let first = terms.next().expect("rule has at least one node");
        terms.fold(first, |acc, v| acc + v) * half
    }
}

fn legendre_pair_f64(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        (1.0, 0.0)
    } else {
        (p1, p0)
    }
}

fn polish_f64(n: usize, mut x: f64) -> f64 {
    for _ in 0..100 {
        let (p, pm) = legendre_pair_f64(n, x);
        let dp = n as f64 * (x * p - pm) / (x * x - 1.0);
        let dx = p / dp;
        x -= dx;
        if dx.abs() < 1e-16 {
            break;
        }
    }
    x
}

/// Newton refinement of a Legendre root at full precision; returns (node, weight).
fn refine_root(n: usize, guess: f64, ctx: &PrecisionContext) -> Result<(Real, Real)> {
    let one = ctx.one();
    let mut x = ctx.real(guess);
    if n % 2 == 1 && guess.abs() < 1e-12 {
        x = ctx.zero();
    }
    let target = -(ctx.bits() as isize) + 4;
    for _ in 0..60 {
        let (p, pm) = legendre_pair(n, &x, ctx);
        let dp = ctx.int(n as i64) * (&x * &p - &pm) / (&x * &x - &one);
        let dx = &p / &dp;
        x -= &dx;
        if is_zero(&dx) || log2_abs(&dx) < target {
            let (p, pm) = legendre_pair(n, &x, ctx);
            let dp = ctx.int(n as i64) * (&x * &p - &pm) / (&x * &x - &one);
            let wt = ctx.int(2) / ((&one - &x * &x) * &dp * &dp);
            return Ok((x, wt));
        }
    }
    Err(Error::NonConvergence { what: format!("legendre root refinement for n = {n}"), iterations: 60 })
}

fn legendre_pair(n: usize, x: &Real, ctx: &PrecisionContext) -> (Real, Real) {
    let mut p0 = ctx.one();
    let mut p1 = x.clone();
    for k in 2..=n {
        let k = k as i64;
        let p2 = (ctx.int(2 * k - 1) * x * &p1 - ctx.int(k - 1) * &p0) / ctx.int(k);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss-Legendre rule in double precision, with barycentric weights for
/// interpolation through its nodes.
#[derive(Clone, Debug)]
pub struct GaussLegendreF64 {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bary: Vec<f64>,
}

impl GaussLegendreF64 {
    pub fn new(n: usize) -> Result<Self> {
        let ctx = PrecisionContext::new(64)?;
        Ok(GaussLegendre::new(n, &ctx)?.to_f64())
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(self.weights.iter()) {
            acc += w * f(mid + half * t);
        }
        acc * half
    }

    /// Barycentric interpolation of `values` (sampled at the nodes mapped to
    /// `[lo, hi]`) at the point `x`.
    pub fn interpolate(&self, values: &[f64], lo: f64, hi: f64, x: f64) -> f64 {
        let t = (2.0 * x - lo - hi) / (hi - lo);
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xi, &bi), &v) in self.nodes.iter().zip(self.bary.iter()).zip(values.iter()) {
            let d = t - xi;
            if d == 0.0 {
                return v;
            }
            let c = bi / d;
            num += c * v;
            den += c;
        }
        num / den
    }
}

/// How an interval is cut into quadrature panels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PanelLayout {
    /// Equal panels no wider than `width`.
    Uniform { width: f64 },
    /// Near a left endpoint at zero, panels shrink geometrically by `ratio`
    /// until the innermost one is at most `innermost` wide; elsewhere they are
    /// uniform of width at most `width`.
    GradedToZero { width: f64, ratio: f64, innermost: f64 },
}

impl PanelLayout {
    /// Grading used for integrands with an algebraic singularity at zero.
    pub fn graded(width: f64) -> Self {
        PanelLayout::GradedToZero { width, ratio: 0.5, innermost: libm::ldexp(1.0, -40) }
    }
}

/// Panel boundaries for `[lo, hi]` under `layout`.
pub fn panel_breaks(lo: f64, hi: f64, layout: PanelLayout) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(domain(format!("invalid integration interval [{lo}, {hi}]")));
    }
    let (width, grading) = match layout {
        PanelLayout::Uniform { width } => (width, None),
        PanelLayout::GradedToZero { width, ratio, innermost } => {
            if !(ratio > 0.0 && ratio < 1.0 && innermost > 0.0) {
                return Err(domain("graded layout needs ratio in (0, 1) and positive innermost width"));
            }
            (width, if lo == 0.0 { Some((ratio, innermost)) } else { None })
        }
    };
    if !(width > 0.0) {
        return Err(domain(format!("panel width must be positive, got {width}")));
    }
    let mut breaks = Vec::new();
    let mut start = lo;
    if let Some((ratio, innermost)) = grading {
        let first = width.min(hi);
        let mut edges = Vec::new();
        let mut e = first;
        while e > innermost {
            edges.push(e);
            e *= ratio;
        }
        edges.push(e);
        breaks.push(0.0);
        breaks.extend(edges.iter().rev());
        start = first;
    } else {
        breaks.push(lo);
    }
    if start < hi {
        let count = libm::ceil((hi - start) / width).max(1.0) as usize;
        let step = (hi - start) / count as f64;
        for i in 1..count {
            breaks.push(start + step * i as f64);
        }
        breaks.push(hi);
    }
    Ok(breaks)
}

/// Nodes and weights of the composite rule over `[lo, hi]`, ascending.
pub fn composite_rule(
    lo: f64,
    hi: f64,
    layout: PanelLayout,
    rule: &GaussLegendre,
    ctx: &PrecisionContext,
) -> Result<(Vec<Real>, Vec<Real>)> {
    let breaks = panel_breaks(lo, hi, layout)?;
    let count = (breaks.len() - 1) * rule.len();
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for pair in breaks.windows(2) {
        let a = ctx.real(pair[0]);
        let b = ctx.real(pair[1]);
        let half = (&b - &a) >> 1isize;
        let mid = (&b + &a) >> 1isize;
        for (t, w) in rule.nodes.iter().zip(rule.weights.iter()) {
            nodes.push(ctx.round(&(&mid + &half * t)));
            weights.push(ctx.round(&(&half * w)));
        }
    }
    Ok((nodes, weights))
}

/// Composite quadrature of `f` over `[lo, hi]`.
pub fn integrate_panels<F: FnMut(&Real) -> Real>(
    mut f: F,
    lo: f64,
    hi: f64,
    layout: PanelLayout,
    rule: &GaussLegendre,
    ctx: &PrecisionContext,
) -> Result<Real> {
    let breaks = panel_breaks(lo, hi, layout)?;
    let mut acc = ctx.zero();
    for pair in breaks.windows(2) {
        let a = ctx.real(pair[0]);
        let b = ctx.real(pair[1]);
        acc += rule.integrate(&mut f, &a, &b);
    }
    Ok(acc)
}

/// Integral of `|f|` over one panel. The panel is bisected, up to
/// `max_depth` times, wherever `f` changes sign between the sample points.
pub fn integrate_abs<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, rule: &GaussLegendreF64, max_depth: u32) -> f64 {
    let fa = f(lo);
    let fb = f(hi);
    abs_panel(f, lo, hi, fa, fb, rule, max_depth)
}

fn abs_panel<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, fa: f64, fb: f64, rule: &GaussLegendreF64, depth: u32) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = 0.0;
    let mut pos = fa > 0.0 || fb > 0.0;
    let mut neg = fa < 0.0 || fb < 0.0;
    for (t, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let v = f(mid + half * t);
        pos |= v > 0.0;
        neg |= v < 0.0;
        acc += w * v.abs();
    }
    if !(pos && neg) || depth == 0 {
        return acc * half;
    }
    let fm = f(mid);
    abs_panel(f, lo, mid, fa, fm, rule, depth - 1) + abs_panel(f, mid, hi, fm, fb, rule, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let ctx = PrecisionContext::new(128).unwrap();
        for n in [1usize, 2, 5, 8, 13] {
            let rule = GaussLegendre::new(n, &ctx).unwrap();
            for p in 0..(2 * n) as i64 {
                let mut f = |x: &Real| ctx.powi(x, p);
                let got = rule.integrate(&mut f, &ctx.zero(), &ctx.one());
                let expect = ctx.ratio(1, p + 1);
                assert!(to_f64(&(got - expect)).abs() < 1e-35, "n = {n} p = {p}");
            }
        }
    }

    #[test]
    fn nodes_ascending_and_symmetric() {
        let ctx = PrecisionContext::new(96).unwrap();
        for n in [4usize, 7] {
            let rule = GaussLegendre::new(n, &ctx).unwrap();
            for i in 1..n {
                assert!(rule.nodes()[i - 1] < rule.nodes()[i]);
            }
            for i in 0..n {
                let s = &rule.nodes()[i] + &rule.nodes()[n - 1 - i];
                assert!(to_f64(&s).abs() < 1e-25);
            }
            let total: f64 = rule.weights().iter().map(to_f64).sum();
            assert!((total - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_integrand_with_graded_panels() {
        let ctx = PrecisionContext::new(96).unwrap();
        let rule = GaussLegendre::new(16, &ctx).unwrap();
        let p = ctx.real(-0.25);
        let got = integrate_panels(|x| ctx.powf(x, &p), 0.0, 1.0, PanelLayout::graded(0.25), &rule, &ctx).unwrap();
        assert!((to_f64(&got) - 4.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn oscillatory_integrand_with_uniform_panels() {
        let ctx = PrecisionContext::new(96).unwrap();
        let rule = GaussLegendre::new(12, &ctx).unwrap();
        let got =
            integrate_panels(|x| ctx.cos_sin(&(x * ctx.real(40.0))).1, 0.0, 1.0, PanelLayout::Uniform { width: 1.0 / 64.0 }, &rule, &ctx)
                .unwrap();
        let expect = (1.0 - libm::cos(40.0)) / 40.0;
        assert!((to_f64(&got) - expect).abs() < 1e-20);
    }

    #[test]
    fn abs_integral_of_sign_changing_function() {
        let rule = GaussLegendreF64::new(10).unwrap();
        let mut f = |x: f64| libm::sin(7.0 * x);
        let got: f64 = [0.0, 0.5, 1.0].windows(2).map(|w| integrate_abs(&mut f, w[0], w[1], &rule, 30)).sum();
        // |sin 7x| on [0, 1]: two full humps of area 2/7 each, plus the tail.
        let expect = 4.0 / 7.0 + (1.0 - libm::cos(7.0 - 2.0 * core::f64::consts::PI)) / 7.0;
        assert!((got - expect).abs() < 1e-9, "got {got} expect {expect}");
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let rule = GaussLegendreF64::new(8).unwrap();
        let (lo, hi) = (0.2, 0.7);
        let values: Vec<f64> = rule
            .nodes
            .iter()
            .map(|t| {
                let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
                x * x * x - 2.0 * x + 0.5
            })
            .collect();
        for &x in &[0.2, 0.33, 0.5, 0.7] {
            let v = rule.interpolate(&values, lo, hi, x);
            assert!((v - (x * x * x - 2.0 * x + 0.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn graded_breaks_reach_innermost() {
        let b = panel_breaks(0.0, 1.0, PanelLayout::graded(0.1)).unwrap();
        assert_eq!(b[0], 0.0);
        assert!(b[1] <= libm::ldexp(1.0, -40));
        assert_eq!(*b.last().unwrap(), 1.0);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(panel_breaks(0.5, 0.2, PanelLayout::Uniform { width: 0.1 }).is_err());
    }
}
