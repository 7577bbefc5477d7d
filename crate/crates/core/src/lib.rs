//! Color refinement laboratory.
//!
//! A refinement engine with pluggable worklist policies and exact split-cost
//! accounting, generators for adversarial graph families built from
//! CFI-style gadgets, an online-model adversary, and a set-cover reduction.

pub mod experiment;
pub mod families;
pub mod gadgets;
pub mod graph;
pub mod online;
pub mod partition;
pub mod refine;
pub mod setcover;
pub mod worklist;

pub use experiment::{BenchCell, Runner};
pub use families::{build_family, FamilyDescriptor, FamilyKind};
pub use graph::{ColoredGraph, GraphError, Vertex};
pub use online::{adversary_build, fast_oracle_strategy, level_progress, partial_quotient, PartialQuotientGraph};
pub use partition::{is_equitable, naive_stable, ClassId, Partition};
pub use refine::{
    default_budget, queue_rounds, refine_strategy, refine_strategy_with, refine_worklist, refine_worklist_with,
    split_class, Choice, FullRefinement, NoObserver, RefineError, RefinementReport, Replay, RunObserver, RunOptions, SplitStep,
    Strategy,
};
pub use setcover::{reduce_setcover, SetCoverInstance};
pub use worklist::{PolicyKind, Worklist};
