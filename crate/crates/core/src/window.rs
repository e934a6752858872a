//! Spatial observation and control windows inside `(0, 1)`.

use crate::error::{Error, Result};

/// An open interval `(a, b)` with `0 < a < b < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservationWindow {
    a: f64,
    b: f64,
}

impl ObservationWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b && b < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("window must satisfy 0 < a < b < 1, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// The middle third `((2a+b)/3, (a+2b)/3)`.
    pub fn middle_third(&self) -> Self {
        Self { a: (2.0 * self.a + self.b) / 3.0, b: (self.a + 2.0 * self.b) / 3.0 }
    }

    /// The middle half `((3a+b)/4, (a+3b)/4)`.
    pub fn middle_half(&self) -> Self {
        Self { a: (3.0 * self.a + self.b) / 4.0, b: (self.a + 3.0 * self.b) / 4.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }
}

impl Default for ObservationWindow {
    fn default() -> Self {
        Self { a: 0.2, b: 0.8 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ObservationWindow::new(0.2, 0.8).is_ok());
        assert!(ObservationWindow::new(0.0, 0.5).is_err());
        assert!(ObservationWindow::new(0.5, 0.5).is_err());
        assert!(ObservationWindow::new(0.3, 1.0).is_err());
        assert!(ObservationWindow::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn inner_windows() {
        let w = ObservationWindow::new(0.2, 0.8).unwrap();
        let t = w.middle_third();
        assert!((t.a() - 0.4).abs() < 1e-15 && (t.b() - 0.6).abs() < 1e-15);
        let h = w.middle_half();
        assert!((h.a() - 0.35).abs() < 1e-15 && (h.b() - 0.65).abs() < 1e-15);
    }
}
