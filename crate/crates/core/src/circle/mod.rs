//! Truncated singular series and singular integral, and the resulting prediction
//! for the number of zeros in an expanding box.

mod integral;
mod predict;
mod series;

pub use integral::{singular_integral, InnerIntegral, SingularIntegralTruncation, CONVERGENCE_TOLERANCE};
pub use predict::{
    predict_and_verify, write_prediction_csv, PredictConfig, PredictionReport, PredictionRow, PredictionVerdict,
    RATIO_TOLERANCE,
};
pub use series::{
    common_root_count, complete_exponential_sum_mod_q, series_term_direct, singular_series, singular_series_with,
    SeriesMethod, SingularSeriesTruncation, ENUMERATION_CAP, REALNESS_TOLERANCE,
};
