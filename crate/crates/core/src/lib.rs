//! Charged sessile droplets in the half-plane.
//!
//! Convex bodies resting on the floor `{y = 0}` are scored by
//! `F = P_beta(E) + q^2 I_2(E) + lambda |area - target|`, where `P_beta` is
//! the capillarity perimeter and `I_2` the logarithmic Robin constant.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capillarity;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod potential;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{HalfPlanePolygon, Point, Vec2};
