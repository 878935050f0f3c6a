//! Dense complex-matrix quantum toolbox.

pub mod channel;
pub mod linalg;
pub mod mlcm;
pub mod state;

pub use channel::{dpi_saturation, dpi_saturation_check, petz_recovery, DpiCheck, KrausChannel};
pub use linalg::{CMatrix, CVector};
pub use mlcm::{cq_mlcm, Mlcm};
pub use state::{
    fidelity, holevo, mutual_information, relative_entropy, renyi_entropy, trace_norm_distance,
    von_neumann_entropy, CQEnsemble, DensityOperator,
};
