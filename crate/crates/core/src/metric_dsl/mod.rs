//! Closed-form metric families: parsing, printing and prolongation to jets.

pub mod corpus;
pub mod expr;
pub mod family;

pub use expr::{parse_expression, BinOp, Expr, Func};
pub use family::{prolong_family, taylor_metric_jet, Bindings, MetricFamily, VectorFamily};
