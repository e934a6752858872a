//! Numerical building blocks: precision, special functions, quadrature,
//! exponential sums, dense linear algebra and small fits.

pub mod bessel;
pub mod expsum;
pub mod fit;
pub mod linalg;
pub mod precision;
pub mod quadrature;

pub use bessel::{bessel_j, bessel_zero, bessel_zeros, gamma};
pub use expsum::{exact_integral, ExpTerm, ExponentialSum};
pub use linalg::{min_eig_spd, solve_spd, symmetric_eigenvalues, Cholesky, SymmetricMatrix};
pub use precision::{to_f64, PrecisionContext, Real};
pub use quadrature::{composite_rule, integrate_abs, integrate_panels, GaussLegendre, GaussLegendreF64, PanelLayout};
