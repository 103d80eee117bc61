use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of `knn-evidence estimate`, serialized as the JSON payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub tool_version: String,
    /// ln E_MAP in nats.
    pub log_map: f64,
    /// log₁₀ E_MAP, equal to `log_map / ln 10`.
    pub log10_map: f64,
    pub sigma_frac: f64,
    pub sigma_frac_conservative: f64,
    pub interval: Interval,
    #[serde(rename = "N_used")]
    pub n_used: usize,
    pub m: usize,
    pub k: usize,
    pub log_jacobian: f64,
    pub resolution: Resolution,
    pub zero_distance_count: usize,
    pub preprocessing: Preprocessing,
    pub settings: Settings,
}

/// Equal-tailed credible interval of ln E.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub log_low: f64,
    pub log_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub indicator: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub n_input: usize,
    pub n_after_burn_in: usize,
    pub stride: usize,
    /// Largest integrated autocorrelation time when thinning was automatic.
    pub max_autocorr_time: Option<f64>,
    pub n_after_thin: usize,
    pub n_after_compact: usize,
}

/// Echo of the settings that produced the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub inputs: Vec<String>,
    pub weight_col: Option<usize>,
    pub logtarget_col: usize,
    pub neglog: bool,
    pub params: Option<Vec<usize>>,
    pub burn_in: f64,
    /// `"auto"` or the requested stride.
    pub thin: String,
    pub compact: bool,
    pub whiten: bool,
    pub knn_backend: String,
    /// Backend that actually ran after resolving `auto`.
    pub knn_backend_used: String,
}
