//! Archimedean side: points of `SL2(R)`, metrics, Haar measure in Iwasawa
//! coordinates, regions and ball volumes.

mod ball_volume;
mod equivalence;
mod haar;
mod metric;
mod point;
mod region;

pub use ball_volume::{
    ball_volume_arch, BallGrid, BallVolumeRow, BallVolumeTable, DEFAULT_R_MAX, DEFAULT_R_MIN,
};
pub use equivalence::{compare_metrics, MetricComparison};
pub use haar::{
    analytic_kappa, calibrate_haar, covolume_cross_check, default_window, haar_points,
    integral_points_in_norm_ball, modular_domain_area, norm_ball_area_closed_form,
    norm_ball_volume, CalibrationOptions, CrossCheck, HaarCalibration, IwasawaBox,
    KAPPA_FIBRE_MASS,
};
pub use metric::{distance, distance_flagged, log_sl2, MetricChoice, LOG_TRACE_MARGIN};
pub use point::{Iwasawa, Mat2, RealPoint, DET_TOLERANCE, INPUT_DET_TOLERANCE};
pub use region::{n_of_e, region_inner_outer, Interval, OverlapOptions, RegionE, RegionKind};
