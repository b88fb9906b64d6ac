//! Spectral and fractal analysis of directed networks.
//!
//! The crate builds the damped, column-stochastic link matrix of a directed
//! graph (the Google matrix), computes its complex eigenvalue spectrum and
//! PageRank, and derives scaling statistics from them: the fractal Weyl
//! exponent of the eigenvalue count, integrated relaxation-rate densities,
//! cluster-growing fractal dimensions, and eigenstate localization measures.
//! A small heuristic C lexer extracts procedure-call networks from source
//! trees so the same pipeline can run on real software graphs.

pub mod callgraph;
pub mod eigenstates;
pub mod error;
mod fit;
pub mod fracdim;
pub mod gmatrix;
pub mod graph;
pub mod spectral;
pub mod weyl;

pub use error::{Error, Result};
pub use graph::DirectedGraph;
