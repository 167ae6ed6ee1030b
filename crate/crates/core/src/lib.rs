//! Numerical laboratory for singularly perturbed fully nonlinear parabolic
//! problems `F(x,t,D²u) - ∂ₜu = β_ε(u) + f_ε`, their `ε → 0` limit, and
//! quantitative audits of the limiting free boundary.

pub mod config;
pub mod error;
pub mod expr;
pub mod freeboundary;
pub mod geometry;
pub mod operators;
pub mod problem;
pub mod regularity;
pub mod solver;

pub use error::{Error, Result};
