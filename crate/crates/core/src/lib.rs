//! Anosov-Liouville pairs, foliations on transverse tori and pre-Lagrangian
//! certificates.
//!
//! The crate is layered bottom-up:
//!
//! - [`expr`]: scalar expressions with exact differentiation,
//! - [`geom`]: charts, gluings, differential forms and exterior calculus,
//! - [`contact`]: Anosov-Liouville checks, pair perturbation and scaling
//!   extension off a transverse torus,
//! - [`foliation`]: oriented foliations of the 2-torus (winding, leaves,
//!   return maps, compact leaves, Reeb annuli),
//! - [`anosov`]: suspension flow models and the splitting estimator,
//! - [`prelag`]: the obstruction test and the certificate pipeline.

pub mod anosov;
pub mod contact;
pub mod expr;
pub mod foliation;
pub mod geom;
pub mod par;
pub mod prelag;

pub use expr::{Env, Expr, ExprError, Var};
