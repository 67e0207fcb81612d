//! Per-frequency realization of the linear theory: the boundary-value solver,
//! the operator-valued symbol, its derivatives and the multiplier-bound scan.

pub mod block;
pub mod derivative;
pub mod frequency;
pub mod scan;

pub use block::{symbol_derivative_matrix, symbol_matrix, PsiData, SymbolBlock};
pub use derivative::{loglog_slope, symbol_derivative, taylor_remainder, DerivativeContext, MAX_ORDER};
pub use frequency::{
    eta_from_chi, relative_residual, solve_frequency, solve_frequency_batch, translated_solve, FrequencyData,
    FrequencyOperator, FrequencySolution,
};
pub use scan::{alphas, block_name, block_roles, layer_stretch, mh_scan, Alpha, ScanGrid, ScanReport, ScanRow, FORCE_DEGREE, LAYER_SPAN};
