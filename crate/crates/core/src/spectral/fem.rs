//! Independent finite element discretization of the degenerate operator.
//!
//! Piecewise-linear elements on two nested meshes, eigenvalues located by
//! Sturm counts of the tridiagonal pencil `K - lambda M`, and one Richardson
//! step across the meshes. Near the degenerate endpoint the elements follow
//! the leading behaviour of the eigenfunctions:
//!
//! * `alpha < 1`: elements are linear in `s = x^(1-alpha)` on a uniform
//!   `s` mesh, with homogeneous Dirichlet data at both ends;
//! * `alpha >= 1`: elements are linear in `x` on the graded mesh
//!   `x_i = (i/M)^(2/(2-alpha))`, with the natural condition at zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::numerics::GaussLegendreF64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FemOptions {
    /// Element count of the coarse mesh; the fine mesh has twice as many.
    pub elements: usize,
    /// Largest accepted relative change of an eigenvalue between meshes.
    pub drift_tol: f64,
}

impl Default for FemOptions {
    fn default() -> Self {
        Self { elements: 4096, drift_tol: 1e-3 }
    }
}

/// One finite element eigenmode, normalized in `L^2(0, 1)`.
#[derive(Clone, Debug)]
pub struct FemMode {
    /// Extrapolated eigenvalue.
    pub lambda: f64,
    /// Extrapolated boundary flux `phi'(1)`.
    pub flux: f64,
    pub lambda_coarse: f64,
    pub lambda_fine: f64,
    /// Nodes of the fine mesh in `x`.
    pub nodes: Vec<f64>,
    /// Nodal values on the fine mesh (zero at Dirichlet nodes).
    pub values: Vec<f64>,
    alpha: f64,
}

impl FemMode {
    fn weak(&self) -> bool {
        self.alpha < 1.0
    }

    fn coord(&self, x: f64) -> f64 {
        if self.weak() && self.alpha != 0.0 {
            libm::pow(x, 1.0 - self.alpha)
        } else {
            x
        }
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|v| v.partial_cmp(&x).expect("finite nodes")) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.clamp(1, n - 1) - 1,
        }
    }

    /// Piecewise-linear interpolant (in the element coordinate).
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let (c0, c1) = (self.coord(self.nodes[i]), self.coord(self.nodes[i + 1]));
        let t = (self.coord(x) - c0) / (c1 - c0);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Derivative of the interpolant with respect to `x`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let (c0, c1) = (self.coord(self.nodes[i]), self.coord(self.nodes[i + 1]));
        let slope = (self.values[i + 1] - self.values[i]) / (c1 - c0);
        if self.weak() && self.alpha != 0.0 {
            slope * (1.0 - self.alpha) * libm::pow(x, -self.alpha)
        } else {
            slope
        }
    }
}

/// Symmetric tridiagonal matrices on all mesh nodes.
struct Pencil {
    kd: Vec<f64>,
    ko: Vec<f64>,
    md: Vec<f64>,
    mo: Vec<f64>,
}

fn pow_diff(a: f64, b: f64, e: f64) -> f64 {
    // b^e - a^e for 0 <= a < b without cancellation.
    if a == 0.0 {
        libm::pow(b, e)
    } else {
        libm::pow(a, e) * libm::expm1(e * libm::log1p((b - a) / a))
    }
}

fn assemble(alpha: f64, m: usize, gauss: &GaussLegendreF64) -> (Vec<f64>, Pencil) {
    let mut p = Pencil { kd: vec![0.0; m + 1], ko: vec![0.0; m], md: vec![0.0; m + 1], mo: vec![0.0; m] };
    let nodes: Vec<f64>;
    if alpha < 1.0 {
        let beta = 1.0 - alpha;
        let pw = alpha / beta;
        let h = 1.0 / m as f64;
        nodes = (0..=m).map(|i| libm::pow(i as f64 * h, 1.0 / beta)).collect();
        for i in 0..m {
            let k = beta / h;
            p.kd[i] += k;
            p.kd[i + 1] += k;
            p.ko[i] -= k;
            let (m00, m01, m11) = if i == 0 {
                // Exact moments of s^pw against the hat functions on [0, h].
                let base = libm::pow(h, pw + 1.0);
                let a = 1.0 / (pw + 1.0);
                let b = 1.0 / (pw + 2.0);
                let c = 1.0 / (pw + 3.0);
                (base * (a - 2.0 * b + c), base * (b - c), base * c)
            } else {
                // s = s_i (1 + tau / i) on tau in [0, 1].
                let si = i as f64 * h;
                let scale = h * libm::pow(si, pw);
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for (t, w) in gauss.nodes.iter().zip(gauss.weights.iter()) {
                    let tau = 0.5 * (t + 1.0);
                    let wt = 0.5 * w * libm::pow(1.0 + tau / i as f64, pw);
                    a += wt * (1.0 - tau) * (1.0 - tau);
                    b += wt * (1.0 - tau) * tau;
                    c += wt * tau * tau;
                }
                (scale * a, scale * b, scale * c)
            };
            p.md[i] += m00 / beta;
            p.mo[i] += m01 / beta;
            p.md[i + 1] += m11 / beta;
        }
    } else {
        let q = 2.0 / (2.0 - alpha);
        nodes = (0..=m).map(|i| libm::pow(i as f64 / m as f64, q)).collect();
        for i in 0..m {
            let (x0, x1) = (nodes[i], nodes[i + 1]);
            let h = x1 - x0;
            let k = pow_diff(x0, x1, alpha + 1.0) / ((alpha + 1.0) * h * h);
            p.kd[i] += k;
            p.kd[i + 1] += k;
            p.ko[i] -= k;
            p.md[i] += h / 3.0;
            p.md[i + 1] += h / 3.0;
            p.mo[i] += h / 6.0;
        }
    }
    (nodes, p)
}

/// Free (non-Dirichlet) node indices.
fn free_range(alpha: f64, m: usize) -> (usize, usize) {
    if alpha < 1.0 {
        (1, m)
    } else {
        (0, m)
    }
}

/// Number of generalized eigenvalues below `lambda` (Sylvester inertia).
fn count_below(p: &Pencil, lo: usize, hi: usize, lambda: f64) -> usize {
    let mut count = 0;
    let mut d = 0.0;
    for i in lo..hi {
        let a = p.kd[i] - lambda * p.md[i];
        d = if i == lo {
            a
        } else {
            let b = p.ko[i - 1] - lambda * p.mo[i - 1];
            a - b * b / d
        };
        if d == 0.0 {
            d = f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn eigenvalue(p: &Pencil, lo: usize, hi: usize, k: usize) -> f64 {
    let mut b = 1.0;
    while count_below(p, lo, hi, b) <= k {
        b *= 2.0;
    }
    let mut a = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if count_below(p, lo, hi, mid) > k {
            b = mid;
        } else {
            a = mid;
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    0.5 * (a + b)
}

/// Inverse iteration for the eigenvector at shift `sigma`.
fn eigenvector(p: &Pencil, lo: usize, hi: usize, sigma: f64) -> Vec<f64> {
    let n = hi - lo;
    let a: Vec<f64> = (lo..hi).map(|i| p.kd[i] - sigma * p.md[i]).collect();
    let b: Vec<f64> = (lo..hi - 1).map(|i| p.ko[i] - sigma * p.mo[i]).collect();
    let mass_mul = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let g = lo + i;
                let mut v = p.md[g] * u[i];
                if i > 0 {
                    v += p.mo[g - 1] * u[i - 1];
                }
                if i + 1 < n {
                    v += p.mo[g] * u[i + 1];
                }
                v
            })
            .collect()
    };
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (i % 7) as f64).collect();
    for _ in 0..4 {
        let rhs = mass_mul(&u);
        // Thomas algorithm on the symmetric tridiagonal system.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = a[0];
        c[0] = if n > 1 { b[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = a[i] - b[i - 1] * c[i - 1];
            if denom == 0.0 {
                denom = f64::MIN_POSITIVE;
            }
            if i + 1 < n {
                c[i] = b[i] / denom;
            }
            d[i] = (rhs[i] - b[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        let norm = libm::sqrt(d.iter().zip(mass_mul(&d)).map(|(x, y)| x * y).sum::<f64>());
        u = d.into_iter().map(|v| v / norm).collect();
    }
    if u[0] < 0.0 {
        for v in u.iter_mut() {
            *v = -*v;
        }
    }
    u
}

struct MeshModes {
    nodes: Vec<f64>,
    lambdas: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    fluxes: Vec<f64>,
}

fn solve_mesh(alpha: f64, m: usize, count: usize, gauss: &GaussLegendreF64) -> MeshModes {
    let (nodes, p) = assemble(alpha, m, gauss);
    let (lo, hi) = free_range(alpha, m);
    let mut lambdas = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut fluxes = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = eigenvalue(&p, lo, hi, k);
        let u = eigenvector(&p, lo, hi, lambda * (1.0 - 1e-11));
        let mut full = vec![0.0; m + 1];
        full[lo..hi].copy_from_slice(&u);
        // Residual of the discrete equation tested against the hat function at x = 1.
        let flux = (p.ko[m - 1] - lambda * p.mo[m - 1]) * full[m - 1];
        lambdas.push(lambda);
        vectors.push(full);
        fluxes.push(flux);
    }
    MeshModes { nodes, lambdas, vectors, fluxes }
}

/// The first `count` eigenmodes computed by finite elements.
pub fn fem_modes(alpha: f64, count: usize, opts: &FemOptions) -> Result<Vec<FemMode>> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(domain(alloc::format!("alpha must lie in [0, 2), got {alpha}")));
    }
    if count == 0 || opts.elements < 8 * count {
        return Err(domain("finite element mesh too coarse for the requested modes"));
    }
    let gauss = GaussLegendreF64::new(8)?;
    let coarse = solve_mesh(alpha, opts.elements, count, &gauss);
    let fine = solve_mesh(alpha, 2 * opts.elements, count, &gauss);
    let mut modes = Vec::with_capacity(count);
    for k in 0..count {
        let (lc, lf) = (coarse.lambdas[k], fine.lambdas[k]);
        let drift = (lf - lc).abs() / lf;
        if !(drift <= opts.drift_tol) {
            return Err(Error::FemNonConvergence { index: k + 1, drift });
        }
        let lambda = (4.0 * lf - lc) / 3.0;
        let flux = (4.0 * fine.fluxes[k] - coarse.fluxes[k]) / 3.0;
        modes.push(FemMode {
            lambda,
            flux,
            lambda_coarse: lc,
            lambda_fine: lf,
            nodes: fine.nodes.clone(),
            values: fine.vectors[k].clone(),
            alpha,
        });
    }
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_laplacian() {
        let opts = FemOptions { elements: 512, drift_tol: 1e-2 };
        let modes = fem_modes(0.0, 3, &opts).unwrap();
        for (k, m) in modes.iter().enumerate() {
            let n = (k + 1) as f64;
            let pi = core::f64::consts::PI;
            assert!((m.lambda - n * n * pi * pi).abs() / (n * n * pi * pi) < 1e-9);
            let flux = libm::sqrt(2.0) * n * pi * if k % 2 == 0 { -1.0 } else { 1.0 };
            assert!((m.flux - flux).abs() / flux.abs() < 1e-5, "{} vs {flux}", m.flux);
            let x = 0.3;
            assert!((m.eval(x) - libm::sqrt(2.0) * libm::sin(n * pi * x)).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fem_modes(2.0, 1, &FemOptions::default()).is_err());
        assert!(fem_modes(0.5, 10, &FemOptions { elements: 16, drift_tol: 1.0 }).is_err());
    }
}
