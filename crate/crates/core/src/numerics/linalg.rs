//! Dense symmetric linear algebra at arbitrary precision.

use alloc::vec;
use alloc::vec::Vec;

use super::precision::{abs, is_zero, log2_abs, PrecisionContext, Real};
use crate::error::{domain, Error, Result};

/// Square symmetric matrix stored densely in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<Real>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize, ctx: &PrecisionContext) -> Self {
        Self { n, data: vec![ctx.zero(); n * n] }
    }

    /// Build from a function of the indices; only `j >= i` is queried.
    pub fn from_fn<F: FnMut(usize, usize) -> Real>(n: usize, ctx: &PrecisionContext, mut f: F) -> Self {
        let mut m = Self::zeros(n, ctx);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Real {
        &self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: Real) {
        self.data[j * self.n + i] = v.clone();
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[Real], ctx: &PrecisionContext) -> Vec<Real> {
        (0..self.n)
            .map(|i| {
                let mut acc = ctx.zero();
                for (j, xj) in x.iter().enumerate() {
                    acc += self.get(i, j) * xj;
                }
                acc
            })
            .collect()
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[Real], ctx: &PrecisionContext) -> Real {
        let ax = self.mul_vec(x, ctx);
        let mut acc = ctx.zero();
        for (a, b) in ax.iter().zip(x.iter()) {
            acc += a * b;
        }
        acc
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| super::to_f64(self.get(i, j))).collect()).collect()
    }

    pub fn cholesky(&self, ctx: &PrecisionContext) -> Result<Cholesky> {
        let n = self.n;
        let mut l = vec![ctx.zero(); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).clone();
            for k in 0..j {
                let v = &l[j * n + k];
                d -= v * v;
            }
            if d.sign() == dashu_base::Sign::Negative || is_zero(&d) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = ctx.sqrt(&d);
            for i in j + 1..n {
                let mut s = self.get(i, j).clone();
                for k in 0..j {
                    s -= &l[i * n + k] * &l[j * n + k];
                }
                l[i * n + j] = s / &djj;
            }
            l[j * n + j] = djj;
        }
        Ok(Cholesky { n, l })
    }

    /// Tridiagonal form (diagonal, off-diagonal) by Householder reflections.
    pub fn tridiagonalize(&self, ctx: &PrecisionContext) -> (Vec<Real>, Vec<Real>) {
        let n = self.n;
        let mut a = self.data.clone();
        let idx = |i: usize, j: usize| i * n + j;
        for k in 0..n.saturating_sub(2) {
            let mut norm2 = ctx.zero();
            for i in k + 1..n {
                norm2 += &a[idx(i, k)] * &a[idx(i, k)];
            }
            if is_zero(&norm2) {
                continue;
            }
            let alpha = {
                let s = ctx.sqrt(&norm2);
                if a[idx(k + 1, k)].sign() == dashu_base::Sign::Negative {
                    s
                } else {
                    -s
                }
            };
            let mut v = vec![ctx.zero(); n];
            v[k + 1] = &a[idx(k + 1, k)] - &alpha;
            for i in k + 2..n {
                v[i] = a[idx(i, k)].clone();
            }
            let mut vnorm2 = ctx.zero();
            for vi in v.iter().skip(k + 1) {
                vnorm2 += vi * vi;
            }
            if is_zero(&vnorm2) {
                continue;
            }
            // A <- H A H with H = I - 2 v v^T / (v^T v).
            let beta = ctx.int(2) / &vnorm2;
            let mut p = vec![ctx.zero(); n];
            for i in k..n {
                let mut s = ctx.zero();
                for j in k + 1..n {
                    s += &a[idx(i, j)] * &v[j];
                }
                p[i] = s * &beta;
            }
            let mut vp = ctx.zero();
            for i in k + 1..n {
                vp += &v[i] * &p[i];
            }
            let kfac = (&beta * vp) >> 1isize;
            let q: Vec<Real> = (0..n).map(|i| &p[i] - &kfac * &v[i]).collect();
            for i in k..n {
                for j in k..n {
                    let upd = &v[i] * &q[j] + &q[i] * &v[j];
                    a[idx(i, j)] -= upd;
                }
            }
        }
        let d = (0..n).map(|i| a[idx(i, i)].clone()).collect();
        let e = (0..n.saturating_sub(1)).map(|i| a[idx(i + 1, i)].clone()).collect();
        (d, e)
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<Real>,
}

impl Cholesky {
    pub fn solve(&self, b: &[Real], ctx: &PrecisionContext) -> Vec<Real> {
        let n = self.n;
        let mut y: Vec<Real> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = b[i].clone();
            for k in 0..i {
                s -= &self.l[i * n + k] * &y[k];
            }
            y.push(s / &self.l[i * n + i]);
        }
        let mut x = vec![ctx.zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i].clone();
            for k in i + 1..n {
                s -= &self.l[k * n + i] * &x[k];
            }
            x[i] = s / &self.l[i * n + i];
        }
        x
    }

    pub fn inverse(&self, ctx: &PrecisionContext) -> SymmetricMatrix {
        let n = self.n;
        let mut inv = SymmetricMatrix::zeros(n, ctx);
        for j in 0..n {
            let mut e = vec![ctx.zero(); n];
            e[j] = ctx.one();
            let col = self.solve(&e, ctx);
            for (i, v) in col.into_iter().enumerate().skip(j) {
                inv.set(i, j, v);
            }
        }
        inv
    }
}

pub fn solve_spd(a: &SymmetricMatrix, b: &[Real], ctx: &PrecisionContext) -> Result<Vec<Real>> {
    if b.len() != a.dim() {
        return Err(domain("right-hand side length does not match matrix"));
    }
    Ok(a.cholesky(ctx)?.solve(b, ctx))
}

/// Number of eigenvalues of the tridiagonal matrix `(d, e)` below `x`.
fn sturm_count(d: &[Real], e2: &[Real], x: &Real, tiny: &Real) -> usize {
    let mut count = 0;
    let mut q = &d[0] - x;
    for i in 0..d.len() {
        if i > 0 {
            q = &d[i] - x - &e2[i - 1] / &q;
        }
        if is_zero(&q) {
            q = tiny.clone();
        }
        if q.sign() == dashu_base::Sign::Negative {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of a symmetric matrix in increasing order.
pub fn symmetric_eigenvalues(a: &SymmetricMatrix, ctx: &PrecisionContext) -> Vec<Real> {
    let n = a.dim();
    let w = ctx.widened(16);
    let (d, e) = a.tridiagonalize(&w);
    (0..n).map(|k| ctx.round(&kth_eigenvalue(&d, &e, k, &w))).collect()
}

/// Smallest eigenvalue of a symmetric matrix (positive when it is SPD).
pub fn min_eig_spd(a: &SymmetricMatrix, ctx: &PrecisionContext) -> Real {
    let w = ctx.widened(16);
    let (d, e) = a.tridiagonalize(&w);
    ctx.round(&kth_eigenvalue(&d, &e, 0, &w))
}

fn kth_eigenvalue(d: &[Real], e: &[Real], k: usize, ctx: &PrecisionContext) -> Real {
    let n = d.len();
    if n == 1 {
        return d[0].clone();
    }
    let e2: Vec<Real> = e.iter().map(|v| v * v).collect();
    let mut lo = d[0].clone();
    let mut hi = d[0].clone();
    let mut scale = ctx.zero();
    for i in 0..n {
        let mut r = ctx.zero();
        if i > 0 {
            r += abs(&e[i - 1]);
        }
        if i + 1 < n {
            r += abs(&e[i]);
        }
        let l = &d[i] - &r;
        let h = &d[i] + &r;
        if l < lo {
            lo = l;
        }
        if h > hi {
            hi = h;
        }
        let m = abs(&d[i]) + r;
        if m > scale {
            scale = m;
        }
    }
    let tiny = if is_zero(&scale) { ctx.real(1e-300) } else { scale.clone() >> (2 * ctx.bits() as isize) };
    let target = -(ctx.bits() as isize) + 8;
    let floor = log2_abs(&scale) - 2 * ctx.bits() as isize;
    for _ in 0..(8 * ctx.bits()) {
        let mid = (&lo + &hi) >> 1isize;
        if sturm_count(d, &e2, &mid, &tiny) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        let width = &hi - &lo;
        let mag = log2_abs(&lo).max(log2_abs(&hi)).max(floor);
        if is_zero(&width) || log2_abs(&width) < target + mag {
            break;
        }
    }
    (lo + hi) >> 1isize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::precision::to_f64;

    fn hilbert(n: usize, ctx: &PrecisionContext) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(n, ctx, |i, j| ctx.ratio(1, (i + j + 1) as i64))
    }

    #[test]
    fn solve_hilbert_system() {
        let ctx = PrecisionContext::new(192).unwrap();
        let n = 10;
        let h = hilbert(n, &ctx);
        let x: Vec<Real> = (0..n).map(|i| ctx.int(i as i64 + 1)).collect();
        let b = h.mul_vec(&x, &ctx);
        let got = solve_spd(&h, &b, &ctx).unwrap();
        for (g, e) in got.iter().zip(x.iter()) {
            assert!(to_f64(&(g - e)).abs() < 1e-30);
        }
    }

    #[test]
    fn hilbert_min_eigenvalue() {
        // Smallest eigenvalue of the 8x8 Hilbert matrix.
        let ctx = PrecisionContext::new(160).unwrap();
        let v = to_f64(&min_eig_spd(&hilbert(8, &ctx), &ctx));
        assert!((v - 1.111_538_966_372_442_4e-10).abs() / 1.1115389663724424e-10 < 1e-11, "{v:e}");
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        let ctx = PrecisionContext::new(96).unwrap();
        // Tridiagonal [2 -1; -1 2 -1; ...] has eigenvalues 2 - 2 cos(k pi / (n+1)).
        let n = 6;
        let m = SymmetricMatrix::from_fn(n, &ctx, |i, j| {
            if i == j {
                ctx.int(2)
            } else if j == i + 1 {
                ctx.int(-1)
            } else {
                ctx.zero()
            }
        });
        let ev = symmetric_eigenvalues(&m, &ctx);
        for (k, v) in ev.iter().enumerate() {
            let expect = 2.0 - 2.0 * libm::cos((k + 1) as f64 * core::f64::consts::PI / 7.0);
            assert!((to_f64(v) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let ctx = PrecisionContext::new(64).unwrap();
        let m = SymmetricMatrix::from_fn(2, &ctx, |i, j| if i == j { ctx.one() } else { ctx.int(2) });
        assert_eq!(m.cholesky(&ctx).unwrap_err(), Error::NotPositiveDefinite { pivot: 1 });
        assert!(to_f64(&min_eig_spd(&m, &ctx)) + 1.0 < 1e-15);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let ctx = PrecisionContext::new(128).unwrap();
        let h = hilbert(5, &ctx);
        let inv = h.cholesky(&ctx).unwrap().inverse(&ctx);
        for i in 0..5 {
            let col: Vec<Real> = (0..5).map(|j| inv.get(j, i).clone()).collect();
            let e = h.mul_vec(&col, &ctx);
            for (j, v) in e.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((to_f64(v) - expect).abs() < 1e-25);
            }
        }
    }
}
