//! Report types and their CSV/JSON serialization.

use crate::error::CliError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA: &str = "cslab.run/1";

/// One named invariant with its measured value and tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`; NaN fails.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }
}

/// One row of the per-radius table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub rho: f64,
    pub so3_raw: f64,
    pub torsion_term: f64,
    #[serde(rename = "F_so3")]
    pub f_so3: f64,
    pub w_volume: f64,
    pub psl2_re_raw: f64,
    pub psl2_im_raw: f64,
    #[serde(rename = "F_psl_re")]
    pub f_psl_re: f64,
    #[serde(rename = "F_psl_im")]
    pub f_psl_im: f64,
}

/// One row of the normal-hit table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitRow {
    pub x1: f64,
    pub x2: f64,
    pub hit1: f64,
    pub hit2: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<num_complex::Complex64> for Complex {
    fn from(z: num_complex::Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TubeResults {
    pub cs_r_so3: f64,
    pub vol_r: f64,
    pub w_r: f64,
    pub cs_r_psl: Complex,
    pub psl_limit: Complex,
    pub tau_inf_integral: f64,
    pub h_inf_integral: f64,
    pub euler_characteristic: i64,
    pub euler_characteristic_raw: f64,
    pub so3_slope: Option<f64>,
    pub psl_slope: Option<f64>,
    pub so3_exp_coefficient: f64,
    pub so3_expected_exp_coefficient: f64,
    pub psl_re_exp_coefficient: f64,
    pub psl_expected_re_exp_coefficient: f64,
    pub w_slope: f64,
    pub w_linearity_residual: f64,
    pub cross_pipeline_residual: f64,
    pub max_p: f64,
    pub q_integral: f64,
    pub q_expected: f64,
    pub q_residual: f64,
    pub constancy: f64,
    pub core_volume: f64,
    pub psl_core_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitySummary {
    pub gauss_residual: f64,
    pub conformal_residual: f64,
    pub torsion_spread: f64,
    pub comparison_weingarten: f64,
    pub comparison_mean: f64,
    pub decomposition_max: f64,
    pub exact_form_max: f64,
    pub cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphResults {
    pub max_hit_residual: f64,
    pub critical_differential_residual: f64,
    pub critical_infinity_metric_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Results {
    Tube { results: TubeResults, identities: IdentitySummary },
    Graph { results: GraphResults },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    #[serde(flatten)]
    pub results: Results,
    pub checks: Vec<Check>,
    /// Where each constant of the pipeline comes from.
    pub constants: BTreeMap<&'static str, &'static str>,
    pub passed: bool,
}

impl RunReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Io { path: "<csv>".into(), source: std::io::Error::other(e) })?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io { path: "<csv>".into(), source: std::io::Error::other(e.to_string()) })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn json_string(report: &RunReport) -> Result<String, CliError> {
    serde_json::to_string_pretty(report).map_err(|e| CliError::Io { path: "<json>".into(), source: std::io::Error::other(e) })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}
