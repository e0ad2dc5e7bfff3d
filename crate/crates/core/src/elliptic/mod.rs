//! First-order elliptic `A`-operators, their graded doubles and indices.

pub mod decay;
pub mod doubled;
pub mod flux;
pub mod operator;

pub use decay::{
    doubled_quantization_convergence, freeze_compare, lemma45_commutator, lemma45_decay,
    lemma45_local, lemma45_order_zero, quantization_convergence, FreezeResult, Lemma45Report,
    ResolventRow, ScalarFn,
};
pub use doubled::{
    analytic_index, block_indices, block_morphism_index, morphism_index, AnalyticIndex, BlockIndex,
    ChiralOp, DoubledOp, DoubledSymbol, IndexReport,
};
pub use flux::{
    topological_index_torus, torus_indices, twisted_dirac_block, twisted_dirac_torus, FluxCache,
    TorusIndexSettings, TorusIndices,
};
pub use operator::{
    commutator_bound_check, symbol_resolvent_decay, CommutatorBound, FirstOrderOp, ResolventShell,
    SelfAdjointness, SymbolResolventReport,
};
