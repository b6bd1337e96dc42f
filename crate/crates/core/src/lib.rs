//! Object reconstruction from multi-measurement data.
//!
//! Data columns (or video frames) are modeled as cyclically shifted copies of
//! a slowly changing object. The shifts are found by a longest-path search on
//! a banded approximation of the reduced objective; the object then follows
//! from one tridiagonal solve per sample.
//!
//! ```
//! use orka::{orka_extract, synth, ExtractionParams, Mu};
//!
//! let scene = synth::pulse_scene(32, 8, &[synth::Pulse::new(8.0, 1.0)]).unwrap();
//! let est = orka_extract(&scene.clean, &ExtractionParams::new(Mu::Infinite, 1, 3)).unwrap();
//! assert_eq!(est.lambda.axis(0), scene.paths[0]);
//! ```

pub mod data;
pub mod error;
pub mod experiments;
pub mod extract;
pub mod graph;
pub mod kernel;
pub mod objective;
pub mod oracle;
pub mod par;
pub mod quadratic;
pub mod shift;
pub mod synth;

pub use data::{DataMatrix, Frames, Measurements, VideoTensor};
pub use error::{OrkaError, Result};
pub use extract::{
    decompose, extract, extract_video, orka_extract, Decomposition, ExtractionParams,
    ObjectEstimate,
};
pub use graph::{longest_path, longest_path_with, GraphConfig, LongestPath, MoveOrder, MoveSet};
pub use kernel::{build_kernel, kernel_entry_hyperbolic, kernel_entry_spectral, KernelWeights, Mu};
pub use objective::{correlate_band, full_objective, tau_k, CorrelationBand, CorrelationMethod};
pub use oracle::{brute_force_best_lambda, error_bounds, verify_theorem, ErrorBoundReport};
pub use par::Exec;
pub use quadratic::{mean_projection, solve_shifted_quadratic, total_change};
pub use shift::{shift_columns, Shift, ShiftVector};
