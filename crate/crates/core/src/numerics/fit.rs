//! Small least-squares fits in double precision.

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(domain("linear fit needs at least two paired samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(domain("linear fit needs at least two distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(LinearFit { intercept, slope, r2: r_squared(y, |i| intercept + slope * x[i]) })
}

fn r_squared(y: &[f64], model: impl Fn(usize) -> f64) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let sse: f64 = y.iter().enumerate().map(|(i, v)| (v - model(i)) * (v - model(i))).sum();
    if sst == 0.0 {
        if sse == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub offset: f64,
    pub coefficient: f64,
    pub exponent: f64,
    pub r2: f64,
}

/// Least squares fit of `y = offset + coefficient * x^exponent` over positive
/// `x`, with the exponent searched in `[p_lo, p_hi]`.
pub fn offset_power_fit(x: &[f64], y: &[f64], p_lo: f64, p_hi: f64) -> Result<PowerFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(domain("power fit needs at least three paired samples"));
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(domain("power fit needs positive abscissae"));
    }
    if !(p_lo > 0.0 && p_hi > p_lo) {
        return Err(domain("invalid exponent search range"));
    }
    let sse = |p: f64| -> f64 {
        let xs: alloc::vec::Vec<f64> = x.iter().map(|v| libm::pow(*v, p)).collect();
        match linear_fit(&xs, y) {
            Ok(f) => xs
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let r = b - f.intercept - f.slope * a;
                    r * r
                })
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };
    // Coarse scan, then golden-section refinement around the best grid point.
    let steps = 600;
    let h = (p_hi - p_lo) / steps as f64;
    let mut best = (f64::INFINITY, p_lo);
    for i in 0..=steps {
        let p = p_lo + h * i as f64;
        let v = sse(p);
        if v < best.0 {
            best = (v, p);
        }
    }
    let (mut a, mut b) = ((best.1 - h).max(p_lo), (best.1 + h).min(p_hi));
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sse(d);
        }
    }
    let p = 0.5 * (a + b);
    let xs: alloc::vec::Vec<f64> = x.iter().map(|v| libm::pow(*v, p)).collect();
    let f = linear_fit(&xs, y)?;
    Ok(PowerFit { offset: f.intercept, coefficient: f.slope, exponent: p, r2: f.r2 })
}
