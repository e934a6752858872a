//! Bessel functions of the first kind of real order and their positive zeros.
//!
//! Values come from the power series with enough guard bits to absorb the
//! cancellation between its terms, which grows like `e^x`. We mostly work
//! with the normalized series
//!
//! ```text
//! F_nu(z) = sum_k (-z^2/4)^k / (k! (nu+1)_k),   J_nu(z) = (z/2)^nu F_nu(z) / Gamma(nu+1),
//! ```
//!
//! which avoids the Gamma function entirely and satisfies
//! `F_nu'(z) = -z F_{nu+1}(z) / (2 (nu+1))`.

use alloc::format;
use alloc::vec::Vec;

use super::precision::{is_zero, log2_abs, to_f64, PrecisionContext, Real};
use crate::error::{domain, Error, Result};

/// Extra precision needed to evaluate the series at `|z|`.
fn guard_bits(z: f64) -> usize {
    libm::ceil(1.45 * z.abs()) as usize + 16
}

/// The normalized series `F_nu(z)`, valid for `nu > -1`.
pub fn regular_series(nu: &Real, z: &Real, ctx: &PrecisionContext) -> Real {
    let w = ctx.widened(guard_bits(to_f64(z)));
    let q = {
        let zw = w.round(z);
        (&zw * &zw) >> 2isize
    };
    let nu = w.round(nu);
    let eps = -(w.bits() as isize) - 4;
    let mut term = w.one();
    let mut sum = w.one();
    let mut k = 0i64;
    loop {
        k += 1;
        let kr = w.int(k);
        term = -(term * &q) / (&kr * (&nu + &kr));
        let kf = k as f64;
        let decreasing = kf * (kf + to_f64(&nu)) > to_f64(&q);
        if is_zero(&term) || (decreasing && log2_abs(&term) < eps) {
            break;
        }
        sum += &term;
    }
    ctx.round(&sum)
}

/// Precomputed coefficients of `F_nu` for repeated evaluation on `[0, z_max]`.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    coeffs: Vec<Real>,
    log2_coeffs: Vec<f64>,
    z_max: f64,
    nu: Real,
}

impl SeriesTable {
    pub fn new(nu: &Real, z_max: f64, ctx: &PrecisionContext) -> Self {
        let w = ctx.widened(guard_bits(z_max));
        let nu_w = w.round(nu);
        let nuf = to_f64(nu);
        let target = -(w.bits() as f64) - 4.0;
        let log2_q = 2.0 * libm::log2(z_max.max(1e-300));
        let mut coeffs = alloc::vec![w.one()];
        let mut log2_coeffs = alloc::vec![0.0];
        let quarter = -w.ratio(1, 4);
        let mut c = w.one();
        let mut lc = 0.0f64;
        let mut k = 0i64;
        loop {
            k += 1;
            let kr = w.int(k);
            c = c * &quarter / (&kr * (&nu_w + &kr));
            let kf = k as f64;
            lc -= 2.0 + libm::log2(kf) + libm::log2((kf + nuf).abs());
            coeffs.push(c.clone());
            log2_coeffs.push(lc);
            let decreasing = 4.0 * kf * (kf + nuf) > z_max * z_max;
            if decreasing && lc + kf * log2_q < target {
                break;
            }
        }
        Self { coeffs, log2_coeffs, z_max, nu: ctx.round(nu) }
    }

    /// `F_nu(z)` for `0 <= z <= z_max`, evaluated at `ctx` precision.
    pub fn eval(&self, z: &Real, ctx: &PrecisionContext) -> Real {
        let zf = to_f64(z);
        if zf > self.z_max * (1.0 + 1e-12) || self.coeffs[0].precision() < ctx.bits() + guard_bits(zf) {
            return regular_series(&self.nu, z, ctx);
        }
        let w = ctx.widened(guard_bits(zf));
        let target = -(w.bits() as f64) - 4.0;
        let log2_q = 2.0 * libm::log2(zf.max(1e-300));
        let mut last = 0;
        for (k, lc) in self.log2_coeffs.iter().enumerate() {
            if lc + k as f64 * log2_q >= target {
                last = k;
            }
        }
        let zw = w.round(z);
        let y = &zw * &zw;
        let mut s = w.round(&self.coeffs[last]);
        for c in self.coeffs[..last].iter().rev() {
            s = s * &y + c;
            s = w.round(&s);
        }
        ctx.round(&s)
    }
}

/// Derivative of [`regular_series`] with respect to `z`.
pub fn regular_series_derivative(nu: &Real, z: &Real, ctx: &PrecisionContext) -> Real {
    let nu1 = nu + ctx.one();
    let f1 = regular_series(&nu1, z, ctx);
    -(f1 * z) / (nu1 << 1isize)
}

/// `F_nu(z)` in double precision for `nu > -1`, `z >= 0`.
///
/// Small arguments use the series directly. Otherwise Miller's backward
/// recurrence produces `J_{nu+m}` up to a common factor, which cancels
/// against the Neumann sum `(z/2)^nu / Gamma(nu+1) = sum_k c_k J_{nu+2k}` with
/// `c_k = (nu+2k) (nu+1)_{k-1} / k!`. The result is accurate relative to the
/// local envelope of `F_nu`, not necessarily near its zeros.
pub fn regular_series_f64(nu: f64, z: f64) -> f64 {
    debug_assert!(nu > -1.0 && z >= 0.0);
    let q = 0.25 * z * z;
    if q <= nu + 1.0 || z < 2.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -q / (k * (nu + k));
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() && k * (k + nu) > q {
                return sum;
            }
        }
    }
    let start = 2 * ((z + 12.0 * libm::cbrt(z) + 30.0) as usize / 2 + 1);
    let mut next = 0.0f64;
    let mut cur = 1e-280f64;
    let mut sum = 0.0f64;
    let mut coef = sum_coefficients(nu, start / 2);
    for m in (1..=start).rev() {
        // cur = J_{nu+m}, next = J_{nu+m+1}, both unnormalized.
        if m % 2 == 0 {
            sum += coef.pop().expect("coefficient per even order") * cur;
        }
        let prev = 2.0 * (nu + m as f64) / z * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            sum *= 1e-250;
        }
    }
    sum += cur;
    cur / sum
}

fn sum_coefficients(nu: f64, count: usize) -> Vec<f64> {
    // c_0 = 1 is added separately; this returns c_1..c_count for popping from the top.
    let mut out = Vec::with_capacity(count);
    let mut poch = 1.0; // (nu+1)_{k-1} / k!
    for k in 1..=count {
        let kf = k as f64;
        if k > 1 {
            poch *= (nu + kf - 1.0) / kf;
        } else {
            poch = 1.0;
        }
        out.push((nu + 2.0 * kf) * poch);
    }
    out
}

/// Gamma function for positive arguments.
pub fn gamma(x: &Real, ctx: &PrecisionContext) -> Result<Real> {
    if x.sign() == dashu_base::Sign::Negative || is_zero(x) {
        return Err(domain(format!("gamma is only provided for positive arguments, got {}", to_f64(x))));
    }
    if to_f64(x) < 1.0 {
        let g = gamma_spouge(x, ctx);
        return Ok(ctx.round(&(g / x)));
    }
    let z = x - ctx.one();
    Ok(gamma_spouge(&z, ctx))
}

/// Spouge's approximation of `Gamma(z + 1)`, `z >= 0`.
fn gamma_spouge(z: &Real, ctx: &PrecisionContext) -> Real {
    let bits = ctx.bits() + 8;
    let a = libm::ceil(bits as f64 * core::f64::consts::LN_2 / libm::log(2.0 * core::f64::consts::PI)) as i64 + 2;
    let w = ctx.with_bits(bits + (3 * a) as usize + 16);
    let z = w.round(z);
    let two_pi = w.pi() << 1isize;
    let mut sum = w.sqrt(&two_pi);
    let mut factorial = w.one();
    for k in 1..a {
        if k > 1 {
            factorial *= w.int(k - 1);
        }
        let ak = w.int(a - k);
        let pow = w.powi(&ak, k - 1) * w.sqrt(&ak);
        let mut c = pow * w.exp(&ak) / &factorial;
        if k % 2 == 0 {
            c = -c;
        }
        sum += c / (&z + w.int(k));
    }
    let za = &z + w.int(a);
    let half = w.ratio(1, 2);
    let lead = w.exp(&(w.ln(&za) * (&z + half) - &za));
    ctx.round(&(lead * sum))
}

/// `J_nu(x)` for `nu > -1` and `x >= 0`.
pub fn bessel_j(nu: &Real, x: &Real, ctx: &PrecisionContext) -> Result<Real> {
    let nuf = to_f64(nu);
    if !(nuf > -1.0) {
        return Err(domain(format!("bessel order must exceed -1, got {nuf}")));
    }
    if x.sign() == dashu_base::Sign::Negative && !is_zero(x) {
        return Err(domain(format!("bessel argument must be non-negative, got {}", to_f64(x))));
    }
    if is_zero(x) {
        return if is_zero(nu) {
            Ok(ctx.one())
        } else if nuf > 0.0 {
            Ok(ctx.zero())
        } else {
            Err(domain("J_nu(0) is singular for negative order"))
        };
    }
    let w = ctx.widened(16);
    let f = regular_series(nu, x, &w);
    let nu1 = w.round(nu) + w.one();
    let scale = w.powf(&(w.round(x) >> 1isize), nu) / gamma(&nu1, &w)?;
    Ok(ctx.round(&(scale * f)))
}

/// The `n`-th positive zero (`n >= 1`) of `J_nu`.
pub fn bessel_zero(nu: &Real, n: usize, ctx: &PrecisionContext) -> Result<Real> {
    if n == 0 {
        return Err(domain("zero index starts at 1"));
    }
    let mut zeros = bessel_zeros(nu, n, ctx)?;
    Ok(zeros.pop().expect("n >= 1 zeros"))
}

/// The first `count` positive zeros of `J_nu`, in increasing order.
pub fn bessel_zeros(nu: &Real, count: usize, ctx: &PrecisionContext) -> Result<Vec<Real>> {
    let nuf = to_f64(nu);
    if !(nuf > -1.0) {
        return Err(domain(format!("bessel order must exceed -1, got {nuf}")));
    }
    let coarse = ctx.with_bits(64);
    let nu_c = coarse.round(nu);
    let sample = |z: f64| to_f64(&regular_series(&nu_c, &coarse.real(z), &coarse));

    // Consecutive zeros are always more than two units apart, so a fixed
    // scan step cannot step over a pair of them.
    const STEP: f64 = 0.25;
    let limit = nuf.max(0.0) + 8.0 * (count as f64 + 4.0) + 20.0;
    let mut zeros = Vec::with_capacity(count);
    let mut lo = if nuf > 0.0 { nuf } else { 0.0 };
    let mut f_lo = sample(lo);
    while zeros.len() < count {
        let hi = lo + STEP;
        if hi > limit {
            return Err(Error::NonConvergence {
                what: format!("bracketing zero {} of J_{nuf}", zeros.len() + 1),
                iterations: (limit / STEP) as usize,
            });
        }
        let f_hi = sample(hi);
        if f_lo == 0.0 || (f_lo < 0.0) != (f_hi < 0.0) {
            zeros.push(refine_zero(nu, lo, hi, f_lo, &sample, ctx)?);
        }
        lo = hi;
        f_lo = f_hi;
    }
    Ok(zeros)
}

fn refine_zero(nu: &Real, mut a: f64, mut b: f64, mut fa: f64, sample: &dyn Fn(f64) -> f64, ctx: &PrecisionContext) -> Result<Real> {
    if fa == 0.0 {
        b = a;
    }
    while b - a > 1e-13 * b {
        let m = 0.5 * (a + b);
        let fm = sample(m);
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let w = ctx.widened(12);
    let lo = w.real(a - 1e-12 * b);
    let hi = w.real(b + 1e-12 * b);
    let mut z = w.real(0.5 * (a + b));
    let target = -(ctx.bits() as isize) - 2;
    for _ in 0..40 {
        let f = regular_series(nu, &z, &w);
        let df = regular_series_derivative(nu, &z, &w);
        if is_zero(&df) {
            break;
        }
        let step = f / df;
        let mut next = &z - &step;
        if next < lo || next > hi {
            next = (&lo + &hi) >> 1isize;
        }
        let converged = is_zero(&step) || log2_abs(&step) < target + log2_abs(&z);
        z = next;
        if converged {
            return Ok(ctx.round(&z));
        }
    }
    Err(Error::NonConvergence { what: format!("newton refinement of bessel zero near {a}"), iterations: 40 })
}
