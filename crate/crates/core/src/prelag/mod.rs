//! The winding obstruction for pre-Lagrangian tori and the constructive
//! certificate pipeline.
//!
//! A transverse torus `Σ` is certified by producing a defining pair whose
//! standard pair restricts to a closed form on `Σ`: the scalings `f`, `g`
//! with `f α_u − g α_s` closed on `Σ` are solved for numerically, extended
//! to the manifold along the flow, and the remaining non-closed part of the
//! restricted sum is absorbed by a collar perturbation.

mod certificate;
mod solve;
pub mod spectral;

use serde::Serialize;

use crate::anosov::AnosovError;
use crate::contact::ContactError;
use crate::expr::ExprError;
use crate::foliation::{winding, Foliation2, FoliationError, Winding, VALIDATION_GRID};
use crate::geom::GeomError;

pub use certificate::{
    check_graph_lagrangian, closed_projection, pre_lagrangian_certificate, Certificate, Construction, ExtendedPair,
    ExtensionSummary, GraphCheck, PreLagInput, PreLagParams, PreLagReport, StageRecord, StageStatus,
};
pub use solve::{scaling_solve, symbolic_residual, ClosednessObjective, ScalingSolution, SolverParams};

#[derive(Debug, Clone, thiserror::Error)]
pub enum PrelagError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Anosov(#[from] AnosovError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("foliations are not transverse at {at:?} (|det| {det:e})")]
    NotTransverse { at: [f64; 2], det: f64 },
    #[error("scaling solver did not converge in {iterations} iterations (best residual {residual:e})")]
    NoConvergence { residual: f64, iterations: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionVerdict {
    Obstructed,
    PassesObstruction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub verdict: ObstructionVerdict,
    pub winding_ws: Winding,
    pub winding_wu: Winding,
    pub windings_agree: bool,
}

/// Winding test on the weak stable and weak unstable foliations of a torus.
pub fn obstruction_test(ws: &Foliation2, wu: &Foliation2) -> Result<ObstructionReport, PrelagError> {
    let (at, det) = ws.transversality(wu, VALIDATION_GRID);
    if !(det > 1e-9) {
        return Err(PrelagError::NotTransverse { at, det });
    }
    let winding_ws = winding(ws)?;
    let winding_wu = winding(wu)?;
    Ok(ObstructionReport {
        verdict: if winding_ws.is_trivial() {
            ObstructionVerdict::PassesObstruction
        } else {
            ObstructionVerdict::Obstructed
        },
        winding_ws,
        winding_wu,
        windings_agree: winding_ws == winding_wu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foliation::models;

    #[test]
    fn obstruction_on_models() {
        let r = obstruction_test(&models::franks_williams(), &models::franks_williams_partner()).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::Obstructed);
        assert!(r.windings_agree);
        let r = obstruction_test(&models::figure3(), &models::figure3_partner()).unwrap();
        assert_eq!(r.verdict, ObstructionVerdict::PassesObstruction);
        let f = models::two_reeb();
        assert!(matches!(obstruction_test(&f, &f), Err(PrelagError::NotTransverse { .. })));
    }
}
