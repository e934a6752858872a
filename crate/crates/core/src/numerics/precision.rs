//! Arbitrary-precision reals and the elementary functions built on them.
//!
//! Every value handled by a [`PrecisionContext`] carries `bits` bits of
//! binary mantissa. Transcendental functions run internally with a few guard
//! bits and round back once at the end.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::error::{domain, Result};

/// Binary floating point number with round-half-even semantics.
pub type Real = FBig<HalfEven, 2>;

const MIN_BITS: usize = 24;
const MAX_BITS: usize = 1 << 16;
const CONST_GUARD: usize = 64;

#[derive(Clone, Debug)]
pub struct PrecisionContext {
    bits: usize,
    ln2: Real,
    pi: Real,
}

impl PrecisionContext {
    pub fn new(bits: usize) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(domain(alloc::format!("precision must lie in [{MIN_BITS}, {MAX_BITS}] bits, got {bits}")));
        }
        // Headroom so that the widened contexts used for guard bits can share
        // the constants instead of recomputing them.
        let wide = 2 * bits + 4 * CONST_GUARD;
        Ok(Self { bits, ln2: ln2_series(wide), pi: pi_machin(wide) })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// A context carrying `extra` more bits than this one.
    pub fn widened(&self, extra: usize) -> Self {
        self.with_bits(self.bits + extra)
    }

    pub fn with_bits(&self, bits: usize) -> Self {
        let bits = bits.clamp(MIN_BITS, MAX_BITS);
        if bits + CONST_GUARD <= self.ln2.precision() {
            Self { bits, ln2: self.ln2.clone(), pi: self.pi.clone() }
        } else {
            Self::new(bits).expect("clamped precision")
        }
    }

    /// Round to this context's precision.
    pub fn round(&self, x: &Real) -> Real {
        x.clone().with_precision(self.bits).value()
    }

    pub fn real(&self, x: f64) -> Real {
        assert!(x.is_finite(), "cannot represent non-finite value {x}");
        Real::try_from(x).expect("finite f64").with_precision(self.bits).value()
    }

    pub fn int(&self, x: i64) -> Real {
        Real::from(x).with_precision(self.bits).value()
    }

    pub fn zero(&self) -> Real {
        self.int(0)
    }

    pub fn one(&self) -> Real {
        self.int(1)
    }

    /// Exact rational `num / den` rounded to the context precision.
    pub fn ratio(&self, num: i64, den: i64) -> Real {
        self.int(num) / self.int(den)
    }

    pub fn pi(&self) -> Real {
        self.round(&self.pi)
    }

    pub fn ln2(&self) -> Real {
        self.round(&self.ln2)
    }

    pub fn sqrt(&self, x: &Real) -> Real {
        assert!(x.sign() != dashu_base::Sign::Negative || is_zero(x), "sqrt of negative value");
        if is_zero(x) {
            return self.zero();
        }
        self.round(x).sqrt()
    }

    pub fn exp(&self, x: &Real) -> Real {
        let w = self.bits + 32 + isqrt(self.bits);
        self.round(&exp_at(x, w, &self.ln2))
    }

    /// `exp(x) - 1` without cancellation for small `x`.
    pub fn exp_m1(&self, x: &Real) -> Real {
        if log2_abs(x) > -2 {
            return self.exp(x) - self.one();
        }
        let w = self.bits + 16;
        let x = x.clone().with_precision(w).value();
        let eps = -(w as isize) - 4;
        let mut term = x.clone();
        let mut sum = x.clone();
        let mut n = 1i64;
        loop {
            n += 1;
            term = term * &x / Real::from(n);
            if is_zero(&term) || log2_abs(&term) < eps + log2_abs(&sum) {
                break;
            }
            sum += &term;
        }
        self.round(&sum)
    }

    /// Natural logarithm of a positive number.
    pub fn ln(&self, x: &Real) -> Real {
        assert!(x.sign() == dashu_base::Sign::Positive && !is_zero(x), "ln of non-positive value");
        let w = self.bits + 24;
        // Split x = m * 2^e with m in [1, 2).
        let e = log2_floor(x);
        let m = (x.clone().with_precision(w).value()) >> e;
        let mut y = Real::try_from(libm::log(m.to_f64().value())).expect("finite seed").with_precision(w).value();
        let mut prec = 50usize;
        // Halley iteration on exp(y) = m roughly triples the correct bits per step.
        while prec < w {
            prec = (prec * 3).min(w);
            let p = prec + 16;
            let yp = y.clone().with_precision(p).value();
            let ey = exp_at(&yp, p, &self.ln2);
            let mp = m.clone().with_precision(p).value();
            let num = (&mp - &ey) * Real::from(2);
            let den = &mp + &ey;
            y = yp + num / den;
        }
        let ln2 = self.ln2.clone().with_precision(w).value();
        let r = y + ln2 * Real::from(e as i64);
        self.round(&r)
    }

    /// `x^p` for positive `x`; `0^p = 0` for positive `p`.
    pub fn powf(&self, x: &Real, p: &Real) -> Real {
        if is_zero(p) {
            return self.one();
        }
        if is_zero(x) {
            assert!(p.sign() == dashu_base::Sign::Positive, "0 raised to non-positive power");
            return self.zero();
        }
        if let Some(n) = small_integer(p) {
            return self.powi(x, n);
        }
        let scale = (log2_abs(p) + log2_abs(&log2_approx(x))).max(0) as usize;
        let wide = self.widened(scale + 8);
        let l = wide.ln(x);
        self.round(&wide.exp(&(l * wide.round(p))))
    }

    pub fn powi(&self, x: &Real, n: i64) -> Real {
        let w = self.bits + 8 + 2 * (64 - n.unsigned_abs().leading_zeros() as usize);
        let base = x.clone().with_precision(w).value();
        let mut acc = Real::ONE.with_precision(w).value();
        let mut b = base;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc *= &b;
            }
            k >>= 1;
            if k > 0 {
                b = &b * &b;
            }
        }
        if n < 0 {
            acc = Real::ONE.with_precision(w).value() / acc;
        }
        self.round(&acc)
    }

    /// Cosine and sine of `x`.
    pub fn cos_sin(&self, x: &Real) -> (Real, Real) {
        let w = self.bits + 32 + log2_abs(x).max(0) as usize;
        let pi = self.pi.clone().with_precision(w + CONST_GUARD).value();
        let x = x.clone().with_precision(w).value();
        // Reduce by multiples of pi/2, then halve and use double-angle formulas.
        let half_pi = (pi.clone() >> 1isize).with_precision(w).value();
        let k = libm::round((&x / &half_pi).to_f64().value());
        let r = &x - &half_pi * Real::from(k as i64);
        let m = 8isize;
        let r = r >> m;
        let r2 = &r * &r;
        let eps = -(w as isize) - 8;
        let mut c = Real::ONE.with_precision(w).value();
        let mut s = r.clone();
        let mut tc = c.clone();
        let mut ts = r.clone();
        let mut n = 0i64;
        loop {
            n += 2;
            tc = -(tc * &r2) / Real::from((n - 1) * n);
            ts = -(ts * &r2) / Real::from(n * (n + 1));
            c += &tc;
            s += &ts;
            if log2_abs(&tc) < eps && (is_zero(&ts) || log2_abs(&ts) < eps + log2_abs(&s)) {
                break;
            }
        }
        for _ in 0..m {
            let s2 = (&s * &c) << 1isize;
            let c2 = &c * &c - &s * &s;
            s = s2;
            c = c2;
        }
        let (c, s) = match (k as i64).rem_euclid(4) {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        };
        (self.round(&c), self.round(&s))
    }
}

/// Lossy conversion, saturating to infinities and flushing tiny values to zero.
pub fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn is_zero(x: &Real) -> bool {
    x.repr().is_pos_zero() || x.repr().is_neg_zero()
}

pub fn abs(x: &Real) -> Real {
    if x.sign() == dashu_base::Sign::Negative {
        -x.clone()
    } else {
        x.clone()
    }
}

pub fn is_negative(x: &Real) -> bool {
    x.sign() == dashu_base::Sign::Negative && !is_zero(x)
}

/// Floor of log2 |x|; a very negative number for zero.
pub fn log2_abs(x: &Real) -> isize {
    if is_zero(x) {
        return isize::MIN / 4;
    }
    log2_floor(x)
}

fn log2_floor(x: &Real) -> isize {
    let r = x.repr();
    r.exponent() + r.digits() as isize - 1
}

fn log2_approx(x: &Real) -> Real {
    let e = log2_floor(x);
    let m = (x.clone().with_precision(53).value() >> e).to_f64().value();
    Real::try_from(e as f64 + libm::log2(m)).expect("finite")
}

fn small_integer(p: &Real) -> Option<i64> {
    if p.repr().is_int() && log2_abs(p) < 20 {
        let v = p.to_f64().value();
        Some(v as i64)
    } else {
        None
    }
}

fn isqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// exp(x) evaluated with `w` working bits; the result carries `w` bits.
fn exp_at(x: &Real, w: usize, ln2: &Real) -> Real {
    if is_zero(x) {
        return Real::ONE.with_precision(w).value();
    }
    let xf = x.to_f64().value();
    assert!(xf.abs() < 1.0e15, "exp argument out of range: {xf}");
    let k = libm::round(xf / core::f64::consts::LN_2) as i64;
    let kbits = 64 - k.unsigned_abs().leading_zeros() as usize;
    let m = isqrt(w).max(4) as isize;
    let wp = w + m as usize + kbits + 16;
    let ln2 = ln2.clone().with_precision(wp).value();
    let xr = x.clone().with_precision(wp).value() - ln2 * Real::from(k);
    let r = xr >> m;
    let eps = -(wp as isize) - 4;
    let one = Real::ONE.with_precision(wp).value();
    let mut term = one.clone();
    let mut sum = one;
    let mut n = 0i64;
    loop {
        n += 1;
        term = term * &r / Real::from(n);
        if is_zero(&term) || log2_abs(&term) < eps {
            break;
        }
        sum += &term;
    }
    for _ in 0..m {
        sum = &sum * &sum;
    }
    (sum << (k as isize)).with_precision(w).value()
}

/// ln 2 = 2 atanh(1/3).
fn ln2_series(bits: usize) -> Real {
    let w = bits + 16;
    let third = Real::ONE.with_precision(w).value() / Real::from(3);
    let ninth = &third * &third;
    let eps = -(w as isize) - 4;
    let mut pow = third;
    let mut sum = pow.clone();
    let mut k = 0i64;
    loop {
        k += 1;
        pow *= &ninth;
        let term = &pow / Real::from(2 * k + 1);
        if log2_abs(&term) < eps {
            break;
        }
        sum += term;
    }
    (sum << 1isize).with_precision(bits).value()
}

fn atan_inv(n: i64, w: usize) -> Real {
    let x = Real::ONE.with_precision(w).value() / Real::from(n);
    let x2 = &x * &x;
    let eps = -(w as isize) - 4;
    let mut pow = x.clone();
    let mut sum = x;
    let mut k = 0i64;
    loop {
        k += 1;
        pow *= &x2;
        let term = &pow / Real::from(2 * k + 1);
        if log2_abs(&term) < eps {
            break;
        }
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    sum
}

/// pi = 16 atan(1/5) - 4 atan(1/239).
fn pi_machin(bits: usize) -> Real {
    let w = bits + 16;
    let a = atan_inv(5, w) * Real::from(16);
    let b = atan_inv(239, w) * Real::from(4);
    (a - b).with_precision(bits).value()
}
