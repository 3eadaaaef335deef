//! A desk-scale laboratory for fourth-order curvature gradient flows.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] — pointwise algebra of symmetric 2-tensors and (2,2) double-forms;
//! * [`jet`] — truncated Taylor jets of metrics and exact covariant calculus at a point;
//! * [`catalog`] — closed-form homogeneous geometries;
//! * [`functionals`] — quadratic curvature functionals, Yamabe brackets and pinching predicates;
//! * [`symbol`] — principal symbols and the strong-ellipticity trichotomy;
//! * [`flow`] — gradient flows reduced to finite-parameter families;
//! * [`estimates`] — interpolation and Sobolev inequality experiments on periodic grids.

pub mod catalog;
pub mod estimates;
pub mod flow;
pub mod functionals;
pub mod jet;
pub mod symbol;
pub mod tensor;
