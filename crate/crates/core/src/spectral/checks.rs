//! Empirical checks of spectral properties: a uniform bracket for the first
//! eigenvalue, a uniform gap between square roots of consecutive eigenvalues,
//! and the boundary-flux and interior-trace ratios of eigenfunctions.

use alloc::vec::Vec;

use super::sampling::ModeSamples;
use super::{eigensystem, EigenPair, Method, OperatorConfig, Regime};
use crate::error::{domain, Error, Result};
use crate::numerics::{to_f64, PrecisionContext};
use crate::window::ObservationWindow;

/// Bracket expected to contain the first eigenvalue for every `alpha` in
/// `[0, 1.95]`. The lower end is the limit `1/4` reached as `alpha -> 2`; the
/// upper end sits just above `pi^2`, the value at `alpha = 0`.
pub const FIRST_EIGENVALUE_BRACKET: (f64, f64) = (0.25, 10.0);

#[derive(Clone, Debug, PartialEq)]
pub struct FirstEigenvalueRow {
    pub alpha: f64,
    pub lambda1: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstEigenvalueReport {
    pub rows: Vec<FirstEigenvalueRow>,
    pub bracket: (f64, f64),
    pub min: f64,
    pub max: f64,
}

impl FirstEigenvalueReport {
    pub fn all_inside(&self) -> bool {
        self.rows.iter().all(|r| r.inside)
    }
}

fn check_grid(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(domain("alpha grid is empty"));
    }
    Ok(())
}

/// `lambda_1(alpha)` over `alphas`, flagged against [`FIRST_EIGENVALUE_BRACKET`].
pub fn check_first_eigenvalue_bounds(alphas: &[f64], ctx: &PrecisionContext) -> Result<FirstEigenvalueReport> {
    check_grid(alphas)?;
    let bracket = FIRST_EIGENVALUE_BRACKET;
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let pairs = eigensystem(&OperatorConfig::new(alpha)?, 1, Method::Bessel, ctx)?;
        let lambda1 = to_f64(&pairs[0].lambda);
        rows.push(FirstEigenvalueRow { alpha, lambda1, inside: bracket.0 < lambda1 && lambda1 < bracket.1 });
    }
    let min = rows.iter().map(|r| r.lambda1).fold(f64::INFINITY, f64::min);
    let max = rows.iter().map(|r| r.lambda1).fold(f64::NEG_INFINITY, f64::max);
    Ok(FirstEigenvalueReport { rows, bracket, min, max })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub alpha: f64,
    /// `min_k (sqrt(lambda_{k+1}) - sqrt(lambda_k)) / (2 - alpha)`.
    pub min_gap: f64,
    /// The `k` attaining the minimum.
    pub argmin: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Minimum of the normalized gap over the grid.
    pub gamma_hat: f64,
    /// Ratio between the largest and smallest per-alpha minimum.
    pub spread: f64,
}

/// Normalized gaps between the first `count` eigenvalues over `alphas`.
pub fn check_spectral_gap(alphas: &[f64], count: usize, ctx: &PrecisionContext) -> Result<GapReport> {
    check_grid(alphas)?;
    if count < 2 {
        return Err(domain("the spectral gap needs at least two eigenvalues"));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let pairs = eigensystem(&OperatorConfig::new(alpha)?, count, Method::Bessel, ctx)?;
        rows.push(gap_row(alpha, &pairs, ctx)?);
    }
    let gamma_hat = rows.iter().map(|r| r.min_gap).fold(f64::INFINITY, f64::min);
    let top = rows.iter().map(|r| r.min_gap).fold(f64::NEG_INFINITY, f64::max);
    if !(gamma_hat > 0.0) {
        return Err(Error::GapViolation { index: 0, gap: gamma_hat, bound: 0.0 });
    }
    Ok(GapReport { rows, gamma_hat, spread: top / gamma_hat })
}

/// Normalized minimum gap of one computed spectrum.
pub fn gap_row(alpha: f64, pairs: &[EigenPair], ctx: &PrecisionContext) -> Result<GapRow> {
    if pairs.len() < 2 {
        return Err(domain("the spectral gap needs at least two eigenvalues"));
    }
    let roots: Vec<f64> = pairs.iter().map(|p| to_f64(&p.sqrt_lambda(ctx))).collect();
    let mut best = (f64::INFINITY, 0);
    for (k, w) in roots.windows(2).enumerate() {
        let g = (w[1] - w[0]) / (2.0 - alpha);
        if g < best.0 {
            best = (g, k + 1);
        }
    }
    Ok(GapRow { alpha, min_gap: best.0, argmin: best.1 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaRow {
    pub index: usize,
    /// `2 lambda_j / |phi_j'(1)|^2`.
    pub flux_ratio: f64,
    /// `|phi_j'(1)|^2 / ||phi_j||^2_{H^1}` on the inner window.
    pub trace_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub alpha: f64,
    /// The inner window carrying the `H^1` norm.
    pub inner: ObservationWindow,
    pub rows: Vec<LemmaRow>,
    pub max_flux_ratio: f64,
    pub max_trace_ratio: f64,
}

/// Flux and trace ratios of weakly degenerate eigenfunctions.
///
/// On an eigenfunction with `sigma^2 = lambda_j`, the energy
/// `sigma^2 ||phi||^2 + ||x^{alpha/2} phi'||^2` equals `2 lambda_j`, so the
/// first ratio measures the constant in the boundary observability estimate.
/// The second compares the flux at `x = 1` with the `H^1` norm on the middle
/// half of `window`.
pub fn check_lemma51_52(pairs: &[EigenPair], window: &ObservationWindow, ctx: &PrecisionContext) -> Result<LemmaReport> {
    let first = pairs.first().ok_or_else(|| domain("at least one eigenpair is needed"))?;
    if first.regime() != Regime::Weak {
        return Err(Error::RegimeMismatch { alpha: first.alpha, expected: Regime::Weak.label() });
    }
    let inner = window.middle_half();
    let samples = ModeSamples::new(pairs, inner.a(), inner.b(), true, ctx)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for (j, p) in pairs.iter().enumerate() {
        let flux = to_f64(&p.flux_at_one(ctx));
        let flux2 = flux * flux;
        let h1 = to_f64(&samples.mass(j, ctx)) + to_f64(&samples.derivative_mass(j, ctx).expect("derivatives tabulated"));
        rows.push(LemmaRow { index: p.index, flux_ratio: 2.0 * to_f64(&p.lambda) / flux2, trace_ratio: flux2 / h1 });
    }
    let max_flux_ratio = rows.iter().map(|r| r.flux_ratio).fold(0.0, f64::max);
    let max_trace_ratio = rows.iter().map(|r| r.trace_ratio).fold(0.0, f64::max);
    Ok(LemmaReport { alpha: first.alpha, inner, rows, max_flux_ratio, max_trace_ratio })
}
