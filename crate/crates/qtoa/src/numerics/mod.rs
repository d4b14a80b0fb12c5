//! Special functions, quadrature rules and the dense eigensolver used by
//! every other module.

pub mod eigen;
pub mod hyp2f1;
pub mod quadrature;
pub mod real;
pub mod special;

pub use hyp2f1::{hyp2f1_row, row_is_singular_at, CutSide};
pub use quadrature::{
    composite_gauss_legendre, gauss_legendre, gauss_legendre_unit, oscillatory_rule,
    QuadratureRule,
};
pub use real::{DoubleDouble, Precision, Real};
pub use special::{bessel_j1, binomial, binomial_half, gamma, hermite, hyp0f1, rgamma};
