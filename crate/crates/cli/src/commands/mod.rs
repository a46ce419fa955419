mod detect;
mod export;
mod gram;
mod purity;
mod qpt;
mod wigner;

pub use detect::{cmd_detect, DetectParams};
pub use export::{cmd_channel_export, ExportParams};
pub use gram::{cmd_gram, GramParams};
pub use purity::{cmd_purity_curve, PurityParams};
pub use qpt::{cmd_qpt, QptParams};
pub use wigner::{cmd_wigner, WignerParams};
