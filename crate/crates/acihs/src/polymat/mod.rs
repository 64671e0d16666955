//! The polynomial-matrix spectral system: characteristic-polynomial maps,
//! spectral curves, residue embeddings, Kostant-Kirillov Poisson brackets,
//! isospectral flows, normal forms, and branch-series residue Hamiltonians.

mod branch;
mod bracket;
mod matrix;
mod normal;
mod residue;
#[cfg(test)]
mod tests;

pub use branch::{branch_residue_hamiltonians, sqrt_series, BranchExpansion};
pub use bracket::{
    kk_bracket, kk_flow, LinearFunctional, SpectralFunctional, TupleFlowStep, TupleFunctional,
};
pub use matrix::{
    char_poly, direct_image_splitting, ramification_matrix, spectral_genus,
    spectral_smooth_affine, CharPoly, PolyMatrix, SmoothnessReport,
};
pub use normal::{normal_form, theta_complement_normalize};
pub use residue::{residue_embed, residue_reconstruct, trace_pair, DivisorMode, ResidueTuple};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolymatError {
    #[error("divisor points coincide within tolerance")]
    DuplicatePoints,
    #[error("matrix degree {0} too high for a divisor of {1} points")]
    DegreeTooHigh(usize, usize),
    #[error("residues do not sum to zero (|sum| = {0:.3e}); not in the image of the embedding")]
    ResidueSumNonzero(f64),
    #[error("leading coefficient is not regular nilpotent")]
    LeadingNotRegularNilpotent,
    #[error("beta_r vanishes: spectral curve is singular over infinity")]
    BetaZero,
    #[error("fiber over x0 is ramified; only unramified fibers are supported")]
    RamifiedFiber,
    #[error("computation lost too much precision to be trusted")]
    IllConditioned,
    #[error("isospectral drift {0:.3e} exceeded 1e-3 in one step; reduce dt")]
    StepRejected(f64),
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
}

pub(crate) fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}
