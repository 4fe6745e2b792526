//! Sensitivity peaks, Bode integrals, design constraints and root loci.

mod bode;
mod constraints;
mod locus;
mod peak;

pub use bode::{bode_integral, BodeIntegralReport};
pub use constraints::{
    check_constraints, continuous_stability_bound, max_bandwidth, ConstraintReport, Margins, PeakSpec,
};
pub use locus::{
    critical_parameter, loop_residual, root_locus, LocusRow, LoopBuilder, LoopKind, RootLocusTable, Spacing, Sweep,
    SweptParam, CRITICAL_REL_WIDTH,
};
pub use peak::{sensitivity_peak, Peak, PEAK_GRID};
