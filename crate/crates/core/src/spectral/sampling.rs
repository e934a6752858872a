//! Eigenfunctions tabulated on composite quadrature nodes.
//!
//! Most integrals of eigenfunctions over an interval (Gram matrices, masses,
//! weak-form residuals) share the same nodes, so the eigenfunctions are
//! evaluated once per node and the integrals are assembled from the table.

use alloc::vec::Vec;

use super::{eval_many, EigenPair};
use crate::error::{domain, Result};
use crate::numerics::quadrature::{composite_rule, GaussLegendre, GaussLegendreF64, PanelLayout};
use crate::numerics::{PrecisionContext, Real, SymmetricMatrix};

/// Default Gauss-Legendre nodes per panel.
pub const NODES_PER_PANEL: usize = 16;

/// Panel width resolving eigenfunctions up to `lambda_max` on `[lo, hi]`:
/// at most an eighth of the interval and a quarter of `1/sqrt(lambda_max)`.
pub fn panel_width(lo: f64, hi: f64, lambda_max: f64) -> f64 {
    let by_interval = (hi - lo) / 8.0;
    if lambda_max > 0.0 {
        by_interval.min(0.25 / libm::sqrt(lambda_max))
    } else {
        by_interval
    }
}

/// Layout for `[lo, hi]`: graded toward the origin when `lo == 0`.
pub fn layout_for(lo: f64, hi: f64, lambda_max: f64) -> PanelLayout {
    let width = panel_width(lo, hi, lambda_max);
    if lo == 0.0 {
        PanelLayout::graded(width)
    } else {
        PanelLayout::Uniform { width }
    }
}

fn lambda_max(pairs: &[EigenPair]) -> f64 {
    pairs.iter().map(|p| crate::numerics::to_f64(&p.lambda)).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct ModeSamples {
    nodes: Vec<Real>,
    weights: Vec<Real>,
    /// `values[q][j]` is `phi_j` at node `q`.
    values: Vec<Vec<Real>>,
    derivs: Option<Vec<Vec<Real>>>,
}

impl ModeSamples {
    /// Tabulate `pairs` on `[lo, hi]` with the default layout.
    pub fn new(pairs: &[EigenPair], lo: f64, hi: f64, with_derivative: bool, ctx: &PrecisionContext) -> Result<Self> {
        let rule = GaussLegendre::new(NODES_PER_PANEL, ctx)?;
        Self::with_rule(pairs, lo, hi, layout_for(lo, hi, lambda_max(pairs)), &rule, with_derivative, ctx)
    }

    pub fn with_rule(
        pairs: &[EigenPair],
        lo: f64,
        hi: f64,
        layout: PanelLayout,
        rule: &GaussLegendre,
        with_derivative: bool,
        ctx: &PrecisionContext,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(domain("at least one eigenpair is needed"));
        }
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(domain(alloc::format!("interval [{lo}, {hi}] must lie inside [0, 1]")));
        }
        let (nodes, weights) = composite_rule(lo, hi, layout, rule, ctx)?;
        let mut values = Vec::with_capacity(nodes.len());
        let mut derivs = with_derivative.then(|| Vec::with_capacity(nodes.len()));
        for x in &nodes {
            let row = eval_many(pairs, x, ctx, with_derivative);
            let (v, d): (Vec<Real>, Vec<Real>) = row.into_iter().unzip();
            values.push(v);
            if let Some(ds) = derivs.as_mut() {
                ds.push(d);
            }
        }
        Ok(Self { nodes, weights, values, derivs })
    }

    pub fn modes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn nodes(&self) -> &[Real] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Real] {
        &self.weights
    }

    /// `phi_j` at every node.
    pub fn values_of(&self, j: usize) -> Vec<Real> {
        self.values.iter().map(|row| row[j].clone()).collect()
    }

    /// `phi_j'` at every node, if derivatives were tabulated.
    pub fn derivatives_of(&self, j: usize) -> Option<Vec<Real>> {
        self.derivs.as_ref().map(|d| d.iter().map(|row| row[j].clone()).collect())
    }

    fn weighted_gram(table: &[Vec<Real>], weights: &[Real], n: usize, ctx: &PrecisionContext) -> SymmetricMatrix {
        let mut g = SymmetricMatrix::zeros(n, ctx);
        let mut acc: Vec<Real> = (0..n * (n + 1) / 2).map(|_| ctx.zero()).collect();
        for (row, w) in table.iter().zip(weights) {
            let scaled: Vec<Real> = row.iter().map(|v| v * w).collect();
            let mut idx = 0;
            for i in 0..n {
                for j in 0..=i {
                    acc[idx] += &scaled[i] * &row[j];
                    idx += 1;
                }
            }
        }
        let mut idx = 0;
        for i in 0..n {
            for j in 0..=i {
                g.set(i, j, ctx.round(&acc[idx]));
                idx += 1;
            }
        }
        g
    }

    /// `G_ij = integral of phi_i phi_j` over the interval.
    pub fn gram(&self, ctx: &PrecisionContext) -> SymmetricMatrix {
        Self::weighted_gram(&self.values, &self.weights, self.modes(), ctx)
    }

    /// `integral of x^alpha phi_i' phi_j'`, if derivatives were tabulated.
    pub fn stiffness(&self, alpha: f64, ctx: &PrecisionContext) -> Option<SymmetricMatrix> {
        let derivs = self.derivs.as_ref()?;
        let a = ctx.real(alpha);
        let weights: Vec<Real> =
            self.nodes.iter().zip(&self.weights).map(|(x, w)| if alpha == 0.0 { w.clone() } else { w * ctx.powf(x, &a) }).collect();
        Some(Self::weighted_gram(derivs, &weights, self.modes(), ctx))
    }

    /// `integral of phi_j^2` over the interval.
    pub fn mass(&self, j: usize, ctx: &PrecisionContext) -> Real {
        let mut acc = ctx.zero();
        for (row, w) in self.values.iter().zip(&self.weights) {
            acc += &row[j] * &row[j] * w;
        }
        ctx.round(&acc)
    }

    /// `integral of phi_j'^2` over the interval, if derivatives were tabulated.
    pub fn derivative_mass(&self, j: usize, ctx: &PrecisionContext) -> Option<Real> {
        let derivs = self.derivs.as_ref()?;
        let mut acc = ctx.zero();
        for (row, w) in derivs.iter().zip(&self.weights) {
            acc += &row[j] * &row[j] * w;
        }
        Some(ctx.round(&acc))
    }
}

/// `integral of phi^2` over `[lo, hi]` in double precision, with `nodes`
/// Gauss points per panel and the default panel width.
pub fn mass_f64(pair: &EigenPair, lo: f64, hi: f64, nodes: usize) -> Result<f64> {
    let rule = GaussLegendreF64::new(nodes)?;
    let lambda = crate::numerics::to_f64(&pair.lambda);
    let breaks = crate::numerics::quadrature::panel_breaks(lo, hi, layout_for(lo, hi, lambda))?;
    Ok(breaks
        .windows(2)
        .map(|w| {
            rule.integrate(
                |x| {
                    let v = pair.eval_f64(x);
                    v * v
                },
                w[0],
                w[1],
            )
        })
        .sum())
}
