//! Vector fields on semi-Riemannian manifolds: classification, flow
//! integration and numerical verification of product splittings.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod geometry;
pub mod classify;
pub mod sampling;
pub mod spec;
pub mod flow;
pub mod split;
pub mod fixtures;
