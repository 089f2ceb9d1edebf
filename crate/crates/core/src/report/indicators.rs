use serde::{Serialize, Serializer};

use super::MetricsReport;

/// Depth, boundary and smoothness performance indicators. Higher is better;
/// a perfect score on either factor gives `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Indicators {
    #[serde(serialize_with = "finite_or_marker")]
    pub i_d: f64,
    #[serde(serialize_with = "finite_or_marker")]
    pub i_b: f64,
    #[serde(serialize_with = "finite_or_marker")]
    pub i_s: f64,
}

/// JSON has no infinity; degenerate indicators are written as `"inf"`.
fn finite_or_marker<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_indicator(*v))
    }
}

pub(crate) fn format_indicator(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `1 / ((1 − accuracy) · error)`, `+∞` when the denominator vanishes.
pub fn indicator(accuracy: f64, error: f64) -> f64 {
    let denom = (1.0 - accuracy) * error;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        1.0 / denom
    }
}

impl Indicators {
    pub const CSV_HEADER: &'static str = "model,i_d,i_b,i_s";

    pub fn csv_row(&self, model: &str) -> String {
        format!(
            "{model},{},{},{}",
            format_indicator(self.i_d),
            format_indicator(self.i_b),
            format_indicator(self.i_s)
        )
    }
}

/// `i_d` from `δ_1.25` and RMSE, `i_b` from the mean F-score and `dbe_acc`,
/// `i_s` from the mean `α` accuracy and the angular RMSE.
pub fn indicators(r: &MetricsReport) -> Indicators {
    let mean = |v: &[f64; 3]| v.iter().sum::<f64>() / 3.0;
    Indicators {
        i_d: indicator(r.direct.delta[2], r.direct.errors.rmse),
        i_b: indicator(mean(&r.boundary.f1), r.boundary.dbe_acc),
        i_s: indicator(mean(&r.smoothness.alpha), r.smoothness.rmse_deg),
    }
}
