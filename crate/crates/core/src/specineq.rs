//! Observability of finite eigenfunction sums from an interior window.
//!
//! For `u = sum_{j<=N} a_j phi_j` the best constant in
//! `sum |a_j|^2 <= C integral_w |u|^2` is `1/lambda_min(G)` with
//! `G_ij = integral_w phi_i phi_j`. The module computes `G`, that constant,
//! window masses of single eigenfunctions and least squares fits of how the
//! constant grows with the spectral cut.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::fit::{linear_fit, offset_power_fit, LinearFit};
use crate::numerics::{min_eig_spd, to_f64, PrecisionContext, Real, SymmetricMatrix};
use crate::random::NormalSampler;
use crate::spectral::sampling::{mass_f64, ModeSamples, NODES_PER_PANEL};
use crate::spectral::{eigensystem, EigenPair, Method, OperatorConfig};
use crate::window::ObservationWindow;

/// Which eigenpairs enter a finite sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralCut {
    /// The first `n` eigenpairs.
    Count(usize),
    /// Every eigenpair with `lambda_j <= threshold`.
    Threshold(f64),
}

impl SpectralCut {
    /// Number of eigenpairs of `pairs` (sorted by eigenvalue) selected by the cut.
    pub fn select(&self, pairs: &[EigenPair]) -> Result<usize> {
        let n = match *self {
            SpectralCut::Count(n) => n.min(pairs.len()),
            SpectralCut::Threshold(t) => pairs.iter().take_while(|p| to_f64(&p.lambda) <= t).count(),
        };
        if n == 0 {
            return Err(Error::InvalidConfig(alloc::format!("spectral cut {self:?} selects no eigenpair")));
        }
        Ok(n)
    }
}

/// `G_ij = integral_w phi_i phi_j`.
pub fn gram_matrix(pairs: &[EigenPair], window: (f64, f64), ctx: &PrecisionContext) -> Result<SymmetricMatrix> {
    Ok(ModeSamples::new(pairs, window.0, window.1, false, ctx)?.gram(ctx))
}

#[derive(Clone, Debug)]
pub struct ObservabilityConstant {
    pub lambda_min: Real,
    /// `1/lambda_min`.
    pub constant: Real,
}

impl ObservabilityConstant {
    /// `ln(1/lambda_min)`.
    pub fn log_cost(&self) -> f64 {
        -log_of(&self.lambda_min)
    }
}

fn log_of(x: &Real) -> f64 {
    // ln x = log2(x) ln 2 without overflowing f64 for tiny x.
    let e = crate::numerics::precision::log2_abs(x);
    let m = to_f64(&(x.clone() >> e));
    (libm::log(m) + e as f64 * core::f64::consts::LN_2).max(f64::NEG_INFINITY)
}

/// The optimal constant `1/lambda_min(g)`.
///
/// Fails with [`Error::NearSingular`] once `lambda_min < 2^{-bits/2}`: beyond that
/// point rounding errors in `g` are no longer small against `lambda_min`.
pub fn observability_constant(g: &SymmetricMatrix, ctx: &PrecisionContext) -> Result<ObservabilityConstant> {
    let lambda_min = min_eig_spd(g, ctx);
    let floor = -((ctx.bits() / 2) as isize);
    if lambda_min.sign() == dashu_base::Sign::Negative
        || crate::numerics::precision::is_zero(&lambda_min)
        || crate::numerics::precision::log2_abs(&lambda_min) < floor
    {
        return Err(Error::NearSingular { lambda_min: to_f64(&lambda_min), bits: ctx.bits() });
    }
    let constant = ctx.one() / &lambda_min;
    Ok(ObservabilityConstant { lambda_min, constant })
}

/// `integral_w phi^2` at context precision.
pub fn eigenfunction_mass(pair: &EigenPair, window: (f64, f64), ctx: &PrecisionContext) -> Result<Real> {
    let samples = ModeSamples::new(core::slice::from_ref(pair), window.0, window.1, false, ctx)?;
    Ok(samples.mass(0, ctx))
}

/// Largest sampled Rayleigh quotient `|a|^2 / a^T G a` over `count` random
/// unit vectors.
pub fn sampled_rayleigh_max(g: &SymmetricMatrix, count: usize, seed: u64, ctx: &PrecisionContext) -> f64 {
    let mut rng = NormalSampler::new(seed);
    let mut best = 0.0f64;
    for _ in 0..count {
        let a: Vec<Real> = rng.unit_vector(g.dim()).into_iter().map(|v| ctx.real(v)).collect();
        let q = to_f64(&(ctx.one() / g.quadratic_form(&a, ctx)));
        best = best.max(q);
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub alpha: f64,
    pub n: usize,
    pub lambda_n: f64,
    pub lambda_min: f64,
    /// `ln(1/lambda_min)`.
    pub log_cost: f64,
}

/// `ln(1/lambda_min(G_N))` for `N = n_min..=n_max`, from leading blocks of
/// one Gram matrix. Stops early (and reports the rows found so far) if the
/// precision guard trips.
pub fn scaling_experiment(
    alpha: f64,
    n_min: usize,
    n_max: usize,
    window: &ObservationWindow,
    ctx: &PrecisionContext,
) -> Result<Vec<ScalingRow>> {
    if n_min == 0 || n_max < n_min {
        return Err(Error::InvalidConfig(alloc::format!("invalid mode range {n_min}..={n_max}")));
    }
    let pairs = eigensystem(&OperatorConfig::new(alpha)?, n_max, Method::Bessel, ctx)?;
    let g = gram_matrix(&pairs, (window.a(), window.b()), ctx)?;
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let block = SymmetricMatrix::from_fn(n, ctx, |i, j| g.get(i, j).clone());
        let obs = match observability_constant(&block, ctx) {
            Ok(o) => o,
            Err(e @ Error::NearSingular { .. }) if rows.is_empty() => return Err(e),
            Err(Error::NearSingular { .. }) => break,
            Err(e) => return Err(e),
        };
        rows.push(ScalingRow {
            alpha,
            n,
            lambda_n: to_f64(&pairs[n - 1].lambda),
            lambda_min: to_f64(&obs.lambda_min),
            log_cost: obs.log_cost(),
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingSample {
    pub lambda_n: f64,
    pub alpha: f64,
    /// `ln C_obs`.
    pub log_cost: f64,
}

impl From<&ScalingRow> for ScalingSample {
    fn from(r: &ScalingRow) -> Self {
        Self { lambda_n: r.lambda_n, alpha: r.alpha, log_cost: r.log_cost }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaFit {
    pub alpha: f64,
    pub samples: usize,
    /// Free exponent fit `ln C = c0 + C lambda^p`.
    pub c0: f64,
    pub c_fit: f64,
    pub p_fit: f64,
    pub r2: f64,
    /// Fit with the exponent pinned to `1/2`: `ln C = c0 + C sqrt(lambda)`.
    pub c_half: f64,
    pub r2_half: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub per_alpha: Vec<AlphaFit>,
    /// `c_half` against `(2 - alpha)^{-2}`, if at least two values of alpha
    /// were fitted.
    pub cross_alpha: Option<LinearFit>,
}

/// Exponent search range of the free fit.
pub const EXPONENT_RANGE: (f64, f64) = (0.05, 3.0);
/// Minimum samples per value of alpha.
pub const MIN_SAMPLES: usize = 5;

/// Fit `ln C_obs = c0 + C lambda_N^p` per alpha, plus the square-root law and a
/// cross-alpha fit of its slope against `(2 - alpha)^{-2}`.
pub fn fit_lr_scaling(samples: &[ScalingSample]) -> Result<ScalingFit> {
    let mut alphas: Vec<f64> = Vec::new();
    for s in samples {
        if !alphas.contains(&s.alpha) {
            alphas.push(s.alpha);
        }
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("finite alpha"));
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let group: Vec<&ScalingSample> = samples.iter().filter(|s| s.alpha == alpha).collect();
        if group.len() < MIN_SAMPLES {
            return Err(Error::InsufficientSamples { alpha, have: group.len(), need: MIN_SAMPLES });
        }
        let x: Vec<f64> = group.iter().map(|s| s.lambda_n).collect();
        let y: Vec<f64> = group.iter().map(|s| s.log_cost).collect();
        let free = offset_power_fit(&x, &y, EXPONENT_RANGE.0, EXPONENT_RANGE.1)?;
        let roots: Vec<f64> = x.iter().map(|v| libm::sqrt(*v)).collect();
        let half = linear_fit(&roots, &y)?;
        per_alpha.push(AlphaFit {
            alpha,
            samples: group.len(),
            c0: free.offset,
            c_fit: free.coefficient,
            p_fit: free.exponent,
            r2: free.r2,
            c_half: half.slope,
            r2_half: half.r2,
        });
    }
    let cross_alpha = if per_alpha.len() >= 2 {
        let x: Vec<f64> = per_alpha.iter().map(|f| 1.0 / ((2.0 - f.alpha) * (2.0 - f.alpha))).collect();
        let y: Vec<f64> = per_alpha.iter().map(|f| f.c_half).collect();
        Some(linear_fit(&x, &y)?)
    } else {
        None
    };
    Ok(ScalingFit { per_alpha, cross_alpha })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassRow {
    pub alpha: f64,
    /// `min_{j <= J} integral_w phi_j^2 / (2 - alpha)`.
    pub min_ratio: f64,
    pub argmin: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassReport {
    pub rows: Vec<MassRow>,
    /// Minimum over the grid.
    pub rho_hat: f64,
    /// The same minimum with twice the Gauss nodes per panel.
    pub rho_hat_refined: f64,
}

impl MassReport {
    /// Relative change of `rho_hat` under refinement.
    pub fn refinement_change(&self) -> f64 {
        ((self.rho_hat_refined - self.rho_hat) / self.rho_hat).abs()
    }
}

fn min_mass_ratio(pairs: &[EigenPair], window: &ObservationWindow, nodes: usize) -> Result<(f64, usize)> {
    let mut best = (f64::INFINITY, 0);
    for p in pairs {
        let m = mass_f64(p, window.a(), window.b(), nodes)? / (2.0 - p.alpha);
        if m < best.0 {
            best = (m, p.index);
        }
    }
    Ok(best)
}

/// Uniform positivity of window masses: `min_{j <= modes} integral_w phi_j^2 / (2 - alpha)`
/// over `alphas`, computed in double precision.
pub fn check_mass_positivity(alphas: &[f64], modes: usize, window: &ObservationWindow, ctx: &PrecisionContext) -> Result<MassReport> {
    if alphas.is_empty() || modes == 0 {
        return Err(Error::InvalidConfig("mass check needs a nonempty grid and at least one mode".into()));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    let mut refined = f64::INFINITY;
    for &alpha in alphas {
        let pairs = eigensystem(&OperatorConfig::new(alpha)?, modes, Method::Bessel, ctx)?;
        let (min_ratio, argmin) = min_mass_ratio(&pairs, window, NODES_PER_PANEL)?;
        refined = refined.min(min_mass_ratio(&pairs, window, 2 * NODES_PER_PANEL)?.0);
        rows.push(MassRow { alpha, min_ratio, argmin });
    }
    let rho_hat = rows.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    Ok(MassReport { rows, rho_hat, rho_hat_refined: refined })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize, ctx: &PrecisionContext) -> Vec<EigenPair> {
        eigensystem(&OperatorConfig::new(0.0).unwrap(), n, Method::Bessel, ctx).unwrap()
    }

    #[test]
    fn half_interval_gram() {
        let ctx = PrecisionContext::new(128).unwrap();
        let g = gram_matrix(&laplacian(2, &ctx), (0.0, 0.5), &ctx).unwrap();
        let c = 4.0 / (3.0 * core::f64::consts::PI);
        assert!((to_f64(g.get(0, 0)) - 0.5).abs() < 1e-13);
        assert!((to_f64(g.get(1, 1)) - 0.5).abs() < 1e-13);
        assert!((to_f64(g.get(0, 1)) - c).abs() < 1e-13);
        let obs = observability_constant(&g, &ctx).unwrap();
        assert!((to_f64(&obs.constant) - 1.0 / (0.5 - c)).abs() < 1e-10);
    }

    #[test]
    fn full_interval_gram_is_identity() {
        let ctx = PrecisionContext::new(128).unwrap();
        let g = gram_matrix(&laplacian(3, &ctx), (0.0, 1.0), &ctx).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((to_f64(g.get(i, j)) - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mass_closed_form() {
        let ctx = PrecisionContext::new(128).unwrap();
        let m = eigenfunction_mass(&laplacian(1, &ctx)[0], (0.2, 0.8), &ctx).unwrap();
        let pi = core::f64::consts::PI;
        let expect = 0.6 + libm::sin(0.4 * pi) / pi;
        assert!((to_f64(&m) - expect).abs() < 1e-14);
    }

    #[test]
    fn cut_selection() {
        let ctx = PrecisionContext::new(64).unwrap();
        let pairs = laplacian(4, &ctx);
        assert_eq!(SpectralCut::Count(3).select(&pairs).unwrap(), 3);
        assert_eq!(SpectralCut::Threshold(40.0).select(&pairs).unwrap(), 2);
        assert!(SpectralCut::Threshold(1.0).select(&pairs).is_err());
        assert!(SpectralCut::Count(0).select(&pairs).is_err());
    }

    #[test]
    fn near_singular_guard() {
        let ctx = PrecisionContext::new(64).unwrap();
        let tiny = SymmetricMatrix::from_fn(2, &ctx, |i, j| if i == j { ctx.real(1e-12) } else { ctx.zero() });
        assert!(matches!(observability_constant(&tiny, &ctx), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn synthetic_square_root_law() {
        let samples: Vec<ScalingSample> = (1..=8)
            .map(|k| {
                let l = (k * k) as f64 * 9.8696;
                ScalingSample { lambda_n: l, alpha: 0.0, log_cost: 1.0 + 2.0 * libm::sqrt(l) }
            })
            .collect();
        let f = fit_lr_scaling(&samples).unwrap();
        let a = &f.per_alpha[0];
        assert!((a.p_fit - 0.5).abs() < 1e-6 && (a.c_fit - 2.0).abs() < 1e-5 && (a.r2 - 1.0).abs() < 1e-12);
        assert!((a.c_half - 2.0).abs() < 1e-12);
        assert!(f.cross_alpha.is_none());
        assert!(matches!(fit_lr_scaling(&samples[..3]), Err(Error::InsufficientSamples { have: 3, .. })));
    }

    #[test]
    fn sampled_quotients_reach_the_constant_for_small_cuts() {
        let ctx = PrecisionContext::new(128).unwrap();
        for alpha in [0.0, 0.5, 1.0, 1.5] {
            let pairs = eigensystem(&OperatorConfig::new(alpha).unwrap(), 2, Method::Bessel, &ctx).unwrap();
            for n in 1..=2 {
                let g = gram_matrix(&pairs[..n], (0.2, 0.8), &ctx).unwrap();
                let k = to_f64(&observability_constant(&g, &ctx).unwrap().constant);
                let q = sampled_rayleigh_max(&g, 1000, 1, &ctx);
                assert!(q <= k * (1.0 + 1e-9) && q >= 0.95 * k, "alpha {alpha} N {n}: {q} vs {k}");
            }
        }
    }
}
