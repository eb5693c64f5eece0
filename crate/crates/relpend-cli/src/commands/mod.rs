mod experiment_cmds;
mod factor_cmds;
mod flow_cmds;
mod mather_cmds;
mod scaled_cmds;

pub use experiment_cmds::{Boundedness, Escape, Quasiperiodic, Subharmonic};
pub use factor_cmds::{FactorCheck, GenfunSurface};
pub use flow_cmds::{Poincare, Simulate};
pub use mather_cmds::{Hull, Mather};
pub use scaled_cmds::{Expansion, MoserReport};

use std::borrow::Cow;

use relpend::model::ModelSpec;

/// The factor, generating-function, and minimal-orbit machinery presumes a
/// unit position period; rescale transparently and note it in the report.
pub(crate) fn unit_period_model(spec: &ModelSpec) -> (Cow<'_, ModelSpec>, bool) {
    if spec.unit_period() {
        (Cow::Borrowed(spec), false)
    } else {
        (Cow::Owned(spec.rescaled()), true)
    }
}

/// Factor count: explicit when positive, otherwise the smallest admissible.
pub(crate) fn resolve_factor_count(spec: &ModelSpec, requested: u64) -> usize {
    if requested == 0 {
        relpend::poincare::minimal_factor_count(spec)
    } else {
        requested as usize
    }
}
