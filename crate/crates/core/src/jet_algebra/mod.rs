//! Jet-bundle coordinates, symmetric-pair packing and the automatic
//! differentiation scalars used throughout the crate.

pub mod jet;
pub mod pair;
pub mod scalar;
pub mod taylor;

pub use jet::{
    packed_to_matrix, partial, random_jet, random_metric, tangent, total_derivative, validate_metric, Coord, Jet,
    JetFn, MetricJet, MINKOWSKI,
};
pub use pair::{mult, normalize_pair, pidx, tidx, SymPair, MULT, PAIRS, TRIPLES};
pub use scalar::{derivative, Dual, Scalar};
pub use taylor::{Taylor3, Taylor4, TaylorJet};
