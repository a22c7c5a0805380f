//! Record of a simulated collection, sufficient to regenerate it.

use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Efrw { nu: f64, lambda: f64, burn_in: f64 },
    Gnp { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub n: usize,
    #[serde(flatten)]
    pub model: ModelSpec,
    pub count: usize,
    pub seed: u64,
    pub graphs: Vec<ManifestEntry>,
}
