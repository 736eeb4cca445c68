//! Analysis of augmented symbolic trees of integer iterated function systems.
//!
//! Given an IFS with equal contraction ratio (an expanding integer matrix `B`,
//! digit vectors, optional signed-permutation linear parts), this crate expands
//! the symbolic tree with horizontal edges between same-level words whose cells
//! intersect, classifies the horizontal components into connected classes,
//! builds the incidence matrix, decides primitivity and rearrangeability with
//! explicit certificates, constructs the level-preserving near-isometry onto
//! the plain tree, and reports whether the attractor is Lipschitz equivalent
//! to a dust-like set.
//!
//! Everything on the combinatorial side is exact: cells are tracked as
//! `(linear part, integer translation, level)` triples in arbitrary precision,
//! adjacency is decided by integer box intersection or by lattice neighbor
//! sets, and graph distances, Gromov products, and certificates are integers
//! or half-integers. Floating point enters only in the final boundary
//! diagnostics (`rho_a` exponentials and Hölder ratios).

pub mod boundary;
pub mod classify;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod model;
pub mod rearrange;
pub mod report;
pub mod sigma;
pub mod svg;
pub mod tree;

pub use classify::{
    analyze_matrix, classify, expand_component, merge_isomorphic, signature_of, Classification,
    Component, IncidenceAnalysis, Signature,
};
pub use error::Error;
pub use geometry::{adjacent, compute_neighbor_set, AdjacencyOracle, NeighborSet};
pub use model::{Caps, CellState, IfsSpec, InvariantSet, Word};
pub use rearrange::{
    decompose_lemma45, rearrange_power, rearrange_row, square_certificate, validate_certificate,
    PowerCertificate, PowerOutcome, RowCertificate, RowOutcome, DEFAULT_NODE_BUDGET,
};
pub use report::{
    run_analyze, run_compare, Analysis, AnalyzeOptions, CompareVerdict, ComparisonReport, Report,
    Verdict,
};
pub use sigma::{build_sigma, iterated_tree_distance, DistortionAudit, SigmaMap};
pub use svg::emit_svg;
pub use tree::ExploredTree;
