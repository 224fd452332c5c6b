//! Nonlinear factor graphs, linear elimination and the Bayes tree.

pub mod bayes_tree;
pub mod factor_graph;
pub mod key;
pub mod linear;
pub mod ordering;
pub mod values;

pub use bayes_tree::{eliminate, BayesTree, Clique, CliqueId, CliqueStats};
pub use factor_graph::{FactorGraph, FactorId};
pub use key::{Key, KeyKind};
pub use linear::{Conditional, HessianFactor};
pub use ordering::{compute_ordering, Ordering};
pub use values::{Values, Variable};
