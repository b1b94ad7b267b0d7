//! Post-processing: Fourier/THD, h-parameters and linear fits.

mod fit;
mod fourier;
mod hparams;

pub use fit::{linear_fit, FitResult};
pub use fourier::{
    fourier_coefficients, pinched_loop_area, thd, thd_report, AnalysisWindow, ThdReport,
};
pub use hparams::{
    analytic_hparams, extract_hparams_numeric, memristance_at, HParams, MirrorTopology, SmallSignalView,
    PERTURBATION,
};
