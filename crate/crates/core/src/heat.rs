//! The degenerate heat semigroup `e^{-tP}` in the eigenbasis and its
//! observation from `w x E` with `E` a finite union of time intervals.
//!
//! Everything here runs in double precision: the semigroup only damps
//! coefficients, so no cancellation arises.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::numerics::quadrature::{integrate_abs, panel_breaks, GaussLegendreF64, PanelLayout};
use crate::numerics::to_f64;
use crate::random::NormalSampler;
use crate::spectral::sampling::{panel_width, NODES_PER_PANEL};
use crate::spectral::EigenPair;
use crate::window::ObservationWindow;

/// Bisection depth for panels on which the integrand changes sign.
pub const SIGN_DEPTH: u32 = 30;

/// A finite union of disjoint, sorted open intervals inside `(0, T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurableTimeSet {
    intervals: Vec<(f64, f64)>,
    horizon: f64,
}

impl MeasurableTimeSet {
    pub fn new(mut intervals: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(domain("horizon must be positive"));
        }
        if intervals.is_empty() {
            return Err(domain("time set needs at least one interval"));
        }
        intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite endpoints"));
        for &(lo, hi) in &intervals {
            if !(0.0 <= lo && lo < hi && hi <= horizon) {
                return Err(domain(alloc::format!("interval ({lo}, {hi}) must lie inside (0, {horizon})")));
            }
        }
        if intervals.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(domain("time intervals overlap"));
        }
        Ok(Self { intervals, horizon })
    }

    /// `(T/8, T/4) and (T/2, 11T/16)`, of total measure `5T/16`.
    pub fn default_for(horizon: f64) -> Result<Self> {
        Self::new(alloc::vec![(horizon / 8.0, horizon / 4.0), (horizon / 2.0, 11.0 * horizon / 16.0)], horizon)
    }

    /// The whole interval `(0, T)`.
    pub fn full(horizon: f64) -> Result<Self> {
        Self::new(alloc::vec![(0.0, horizon)], horizon)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// The subset keeping the first `factor` of every interval.
    pub fn shrunk(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(domain("shrink factor must lie in (0, 1]"));
        }
        Self::new(self.intervals.iter().map(|&(a, b)| (a, a + factor * (b - a))).collect(), self.horizon)
    }
}

/// Mode coefficients of `e^{-tP} y_0` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatState {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl HeatState {
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.coeffs.iter().map(|c| c * c).sum())
    }

    /// `d/dt ||y||^2 = -2 sum lambda_j y_j^2`.
    pub fn dissipation(&self, lambdas: &[f64]) -> f64 {
        -2.0 * self.coeffs.iter().zip(lambdas).map(|(c, l)| l * c * c).sum::<f64>()
    }
}

pub fn lambdas_f64(pairs: &[EigenPair]) -> Vec<f64> {
    pairs.iter().map(|p| to_f64(&p.lambda)).collect()
}

/// `y_j e^{-lambda_j t}`.
pub fn semigroup(y0: &[f64], lambdas: &[f64], t: f64) -> Result<HeatState> {
    if !(t >= 0.0) {
        return Err(domain("time must be nonnegative"));
    }
    if y0.len() > lambdas.len() {
        return Err(domain("more coefficients than eigenvalues"));
    }
    Ok(HeatState { coeffs: y0.iter().zip(lambdas).map(|(y, l)| y * libm::exp(-l * t)).collect(), time: t })
}

/// Random initial data with normal coefficients scaled by `1/(1 + lambda_j)`.
pub fn random_data(lambdas: &[f64], rng: &mut NormalSampler) -> Vec<f64> {
    rng.scaled_coefficients(lambdas)
}

/// Eigenfunctions tabulated on a window for the space-time `L^1` norm.
#[derive(Clone, Debug)]
pub struct L1Quadrature {
    lambdas: Vec<f64>,
    rule: GaussLegendreF64,
    /// Per panel: `(lo, hi, values[node][mode])`.
    panels: Vec<(f64, f64, Vec<Vec<f64>>)>,
    refine: u32,
}

impl L1Quadrature {
    pub fn new(pairs: &[EigenPair], window: &ObservationWindow) -> Result<Self> {
        Self::with_refinement(pairs, window, 1)
    }

    /// Panels in space and time are split `refine` times finer than the default.
    pub fn with_refinement(pairs: &[EigenPair], window: &ObservationWindow, refine: u32) -> Result<Self> {
        if pairs.is_empty() || refine == 0 {
            return Err(domain("need at least one eigenpair and a positive refinement"));
        }
        let lambdas = lambdas_f64(pairs);
        let lmax = lambdas.iter().copied().fold(0.0, f64::max);
        let rule = GaussLegendreF64::new(NODES_PER_PANEL)?;
        let width = panel_width(window.a(), window.b(), lmax) / refine as f64;
        let breaks = panel_breaks(window.a(), window.b(), PanelLayout::Uniform { width })?;
        let panels = breaks
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                let values = rule.nodes.iter().map(|t| pairs.iter().map(|p| p.eval_f64(mid + half * t)).collect()).collect();
                (lo, hi, values)
            })
            .collect();
        Ok(Self { lambdas, rule, panels, refine })
    }

    /// `integral_w |sum_j c_j phi_j(x)| dx`.
    pub fn space_l1(&self, c: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut node_vals = alloc::vec![0.0; self.rule.nodes.len()];
        for (lo, hi, values) in &self.panels {
            let mut pos = false;
            let mut neg = false;
            for (v, row) in node_vals.iter_mut().zip(values) {
                *v = row.iter().zip(c).map(|(p, a)| p * a).sum();
                pos |= *v > 0.0;
                neg |= *v < 0.0;
            }
            if pos && neg {
                // Interpolate through the nodes so the bisection stays cheap.
                let mut f = |x: f64| self.rule.interpolate(&node_vals, *lo, *hi, x);
                total += integrate_abs(&mut f, *lo, *hi, &self.rule, SIGN_DEPTH);
            } else {
                let half = 0.5 * (hi - lo);
                total += half * node_vals.iter().zip(&self.rule.weights).map(|(v, w)| w * v.abs()).sum::<f64>();
            }
        }
        total
    }

    /// `integral_{w x E} |e^{-tP} y_0|`.
    pub fn observed(&self, y0: &[f64], set: &MeasurableTimeSet) -> Result<f64> {
        if y0.len() != self.lambdas.len() {
            return Err(domain("coefficient count does not match the tabulated modes"));
        }
        let lmax = self.lambdas.iter().copied().fold(0.0, f64::max);
        let mut total = 0.0;
        let mut c = alloc::vec![0.0; y0.len()];
        for &(lo, hi) in set.intervals() {
            let mut width = (hi - lo) / 4.0;
            if lmax > 0.0 {
                width = width.min(4.0 / lmax);
            }
            let breaks = panel_breaks(lo, hi, PanelLayout::Uniform { width: width / self.refine as f64 })?;
            for w in breaks.windows(2) {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (t, wt) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    let time = mid + half * t;
                    for ((cj, y), l) in c.iter_mut().zip(y0).zip(&self.lambdas) {
                        *cj = y * libm::exp(-l * time);
                    }
                    total += half * wt * self.space_l1(&c);
                }
            }
        }
        Ok(total)
    }
}

/// `integral_{w x E} |e^{-tP} y_0|` with the default panels.
pub fn observed_l1(y0: &[f64], pairs: &[EigenPair], window: &ObservationWindow, set: &MeasurableTimeSet) -> Result<f64> {
    L1Quadrature::new(pairs, window)?.observed(y0, set)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `||z|| <= 4 e^{C1/2} e^{C1^2/(2 eps t)} ||z||_{L^2(w~)}^{1-eps/2} ||y_0||^{eps/2}`
/// with `z = e^{-tP} y_0`. `gram` is the Gram matrix of the modes on `w~`.
pub fn check_one_time_interpolation(
    y0: &[f64],
    lambdas: &[f64],
    gram: &[Vec<f64>],
    t: f64,
    eps: f64,
    c1: f64,
) -> Result<InterpolationCheck> {
    let parts = interpolation_parts(y0, lambdas, gram, t, eps)?;
    let rhs = libm::exp(log_prefactor(c1, eps, t)) * parts.1;
    Ok(InterpolationCheck { holds: parts.0 <= rhs, lhs: parts.0, rhs })
}

fn log_prefactor(c1: f64, eps: f64, t: f64) -> f64 {
    libm::log(4.0) + 0.5 * c1 + c1 * c1 / (2.0 * eps * t)
}

/// `(||z||, ||z||_{w~}^{1-eps/2} ||y_0||^{eps/2})`.
fn interpolation_parts(y0: &[f64], lambdas: &[f64], gram: &[Vec<f64>], t: f64, eps: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(domain("time must be positive"));
    }
    if !(eps > 0.0 && eps < 2.0) {
        return Err(domain("eps must lie in (0, 2)"));
    }
    if gram.len() != y0.len() {
        return Err(domain("gram matrix does not match the coefficients"));
    }
    let z = semigroup(y0, lambdas, t)?;
    let mut local = 0.0;
    for (i, row) in gram.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            local += z.coeffs[i] * g * z.coeffs[j];
        }
    }
    let local = libm::sqrt(local.max(0.0));
    let y_norm = libm::sqrt(y0.iter().map(|v| v * v).sum());
    Ok((z.norm(), libm::pow(local, 1.0 - eps / 2.0) * libm::pow(y_norm, eps / 2.0)))
}

/// Smallest `C1 >= 0` for which the one-time interpolation holds on every datum.
pub fn minimal_c1(samples: &[Vec<f64>], lambdas: &[f64], gram: &[Vec<f64>], t: f64, eps: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for y0 in samples {
        let (lhs, base) = interpolation_parts(y0, lambdas, gram, t, eps)?;
        if lhs == 0.0 {
            continue;
        }
        if base == 0.0 {
            return Ok(f64::INFINITY);
        }
        // The prefactor is increasing in C1, so solve for its logarithm.
        let need = libm::log(lhs / base) - libm::log(4.0);
        if need <= 0.0 {
            continue;
        }
        // 0.5 C1 + C1^2 / (2 eps t) = need
        let a = 1.0 / (2.0 * eps * t);
        let c = (-0.5 + libm::sqrt(0.25 + 4.0 * a * need)) / (2.0 * a);
        best = best.max(c);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// The fitted constant: the largest ratio over the samples.
    pub fitted_k3: f64,
    pub measure: f64,
    pub seed: u64,
}

/// Ratios `||e^{-TP} y_0|| / integral_{w x E} |e^{-tP} y_0|` over random data.
pub fn verify_measurable_observability(
    sample_count: usize,
    quad: &L1Quadrature,
    set: &MeasurableTimeSet,
    seed: u64,
) -> Result<ObservabilityReport> {
    if sample_count == 0 {
        return Err(domain("at least one sample is needed"));
    }
    let mut rng = NormalSampler::new(seed);
    let mut ratios = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let y0 = random_data(&quad.lambdas, &mut rng);
        let top = semigroup(&y0, &quad.lambdas, set.horizon())?.norm();
        ratios.push(top / quad.observed(&y0, set)?);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ObservabilityReport { ratios, max_ratio, fitted_k3: max_ratio, measure: set.measure(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PrecisionContext;
    use crate::spectral::{eigensystem, Method, OperatorConfig};

    fn pairs(alpha: f64, n: usize) -> Vec<EigenPair> {
        let ctx = PrecisionContext::new(96).unwrap();
        eigensystem(&OperatorConfig::new(alpha).unwrap(), n, Method::Bessel, &ctx).unwrap()
    }

    #[test]
    fn time_set_validation() {
        let e = MeasurableTimeSet::default_for(1.0).unwrap();
        assert!((e.measure() - 5.0 / 16.0).abs() < 1e-15);
        assert!(MeasurableTimeSet::new(alloc::vec![(0.1, 0.3), (0.2, 0.4)], 1.0).is_err());
        assert!(MeasurableTimeSet::new(alloc::vec![(0.5, 1.5)], 1.0).is_err());
        assert!(MeasurableTimeSet::new(alloc::vec![], 1.0).is_err());
        let s = e.shrunk(0.5).unwrap();
        assert!((s.measure() - 5.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn semigroup_acts_diagonally() {
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let l = lambdas_f64(&pairs(0.0, 2));
        let s = semigroup(&[1.0, 1.0], &l, 0.1).unwrap();
        assert!((s.coeffs[0] - libm::exp(-pi2 / 10.0)).abs() < 1e-14);
        assert!((s.coeffs[1] - libm::exp(-4.0 * pi2 / 10.0)).abs() < 1e-14);
        assert_eq!(semigroup(&[0.3, -2.0], &l, 0.0).unwrap().coeffs, alloc::vec![0.3, -2.0]);
        assert!(semigroup(&[1.0], &l, -1.0).is_err());
    }

    #[test]
    fn single_mode_l1_closed_form() {
        let ps = pairs(0.0, 1);
        let w = ObservationWindow::default();
        let e = MeasurableTimeSet::default_for(1.0).unwrap();
        let got = observed_l1(&[1.0], &ps, &w, &e).unwrap();
        let pi = core::f64::consts::PI;
        let l = pi * pi;
        let time: f64 = e.intervals().iter().map(|(a, b)| (libm::exp(-l * a) - libm::exp(-l * b)) / l).sum();
        // integral of sqrt(2) sin(pi x) over (0.2, 0.8)
        let space = core::f64::consts::SQRT_2 * 2.0 * libm::cos(0.2 * pi) / pi;
        assert!((got - time * space).abs() < 1e-12 * got);
        assert_eq!(observed_l1(&[0.0], &ps, &w, &e).unwrap(), 0.0);
    }

    #[test]
    fn sign_changes_are_resolved() {
        // Phi_2 changes sign at x = 1/2: the L1 norm on (0.2, 0.8) is
        // 2 * sqrt(2) * (cos(0.4 pi) - cos(pi)) / (2 pi) * 2 halves.
        let ps = pairs(0.0, 2);
        let q = L1Quadrature::new(&ps, &ObservationWindow::default()).unwrap();
        let pi = core::f64::consts::PI;
        let expect = 2.0 * core::f64::consts::SQRT_2 * (libm::cos(0.4 * pi) + 1.0) / (2.0 * pi);
        assert!((q.space_l1(&[0.0, 1.0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn full_interval_ratio() {
        let ps = pairs(0.0, 1);
        let w = ObservationWindow::default();
        let q = L1Quadrature::new(&ps, &w).unwrap();
        let e = MeasurableTimeSet::full(1.0).unwrap();
        let r = verify_measurable_observability(3, &q, &e, 5).unwrap();
        let pi = core::f64::consts::PI;
        let l = pi * pi;
        let space = core::f64::consts::SQRT_2 * 2.0 * libm::cos(0.2 * pi) / pi;
        let expect = libm::exp(-l) / ((1.0 - libm::exp(-l)) / l * space);
        for ratio in &r.ratios {
            assert!((ratio - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn refinement_is_stable_and_shrinking_raises_k3() {
        let ps = pairs(1.5, 8);
        let w = ObservationWindow::default();
        let e = MeasurableTimeSet::default_for(1.0).unwrap();
        let coarse = L1Quadrature::new(&ps, &w).unwrap();
        let fine = L1Quadrature::with_refinement(&ps, &w, 2).unwrap();
        let mut rng = NormalSampler::new(11);
        for _ in 0..3 {
            let y0 = random_data(&lambdas_f64(&ps), &mut rng);
            let a = coarse.observed(&y0, &e).unwrap();
            let b = fine.observed(&y0, &e).unwrap();
            assert!(((a - b) / b).abs() < 1e-6);
        }
        let big = verify_measurable_observability(10, &coarse, &e, 2).unwrap();
        let small = verify_measurable_observability(10, &coarse, &e.shrunk(0.5).unwrap(), 2).unwrap();
        assert!(small.fitted_k3 >= big.fitted_k3);
    }

    #[test]
    fn one_time_interpolation() {
        let ps = pairs(0.0, 4);
        let l = lambdas_f64(&ps);
        let id: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let y0 = [0.5, -0.2, 0.1, 0.3];
        // On the whole interval the inequality holds for any C1 >= 0.
        let r = check_one_time_interpolation(&y0, &l, &id, 0.1, 1.0, 0.0).unwrap();
        assert!(r.holds);
        let zero = check_one_time_interpolation(&[0.0; 4], &l, &id, 0.1, 1.0, 2.0).unwrap();
        assert!(zero.holds && zero.lhs == 0.0);
        let gram = [[1e-5, 0.0], [0.0, 1e-5]].iter().map(|r| r.to_vec()).collect::<Vec<_>>();
        let samples = alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]];
        let c1 = minimal_c1(&samples, &l[..2], &gram, 0.1, 1.0).unwrap();
        for y in &samples {
            assert!(check_one_time_interpolation(y, &l[..2], &gram, 0.1, 1.0, c1 * (1.0 + 1e-12)).unwrap().holds);
        }
        assert!(c1 > 0.0);
        for y in &samples[..1] {
            assert!(!check_one_time_interpolation(y, &l[..2], &gram, 0.1, 1.0, c1 * 0.999).unwrap().holds || c1 == 0.0);
        }
    }
}
