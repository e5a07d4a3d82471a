//! Distances between empirical laws: total variation, dictionary lower
//! bounds on `d_k`, the shift modulus `D(s)`, and the gaussian smoothing
//! constants `c_k`.

mod dk;
mod shift;
mod smoothing;
mod tv;

use serde::Serialize;

pub use dk::{
    dk_lower, dk_lower_profile, hermite, DictionaryGrid, DictionaryMember, TestFunction, TestFunctionDictionary,
};
pub use shift::{shift_modulus, shift_modulus_curve, shift_tv_sorted, DEFAULT_SHIFT_FRACTIONS};
pub use smoothing::{smoothed_tv_check, smoothing_constant, smoothing_constant_max, SmoothedTvCheck};
pub use tv::{
    interval_scan_sorted, noise_floor, tv_distance, tv_gaussian_shift, ScanResult, TvMethod, TvOptions,
    MIN_RELIABLE_SAMPLES,
};

/// A distance value with its uncertainty and how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: String,
    pub detail: String,
    pub samples_x: usize,
    pub samples_y: usize,
    pub warning: Option<String>,
}

impl DistanceEstimate {
    /// An exactly known value.
    pub fn exact(value: f64, method: &str) -> Self {
        Self {
            value,
            stderr: 0.0,
            ci_low: value,
            ci_high: value,
            method: method.into(),
            detail: String::new(),
            samples_x: 0,
            samples_y: 0,
            warning: None,
        }
    }
}
