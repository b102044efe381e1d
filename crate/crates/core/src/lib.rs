#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod specfun;
pub mod quadrature;
pub mod optimize;
pub mod rmm;
pub mod bivariate;
pub mod fit;
pub mod approx_family;
pub mod compound;
pub mod cli;
