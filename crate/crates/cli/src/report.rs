//! Report documents and table writers. The structured JSON documents are
//! deterministic for a fixed run configuration: they carry no wall-clock
//! data, field order is fixed, and floats print in shortest round-trip form.
//! Wall times appear only in the human-readable tables.

use serde::{Deserialize, Serialize};
use spherical_cluster::stats::ProjectionTable;
use spherical_cluster::{EtaReport64, StepCounts, Trajectory64};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StepCountsDoc {
    pub teleport: usize,
    pub line_descent: usize,
    pub sphere_descent: usize,
    pub min_jump: usize,
}

impl From<StepCounts> for StepCountsDoc {
    fn from(c: StepCounts) -> Self {
        StepCountsDoc {
            teleport: c.teleport,
            line_descent: c.line_descent,
            sphere_descent: c.sphere_descent,
            min_jump: c.min_jump,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BaselineDoc {
    pub method: String,
    pub f_value: f64,
    pub center: Vec<f64>,
    pub iterations: usize,
    pub f_evals: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub line_search_failed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EtaDoc {
    pub eta: f64,
    pub eta_prime: f64,
    pub center: Vec<f64>,
    pub f_value: f64,
    pub sc_radius_sq: f64,
    pub converged: bool,
    pub gen_grad_norm: f64,
    pub n_out_sc: usize,
    pub n_out_com: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cost_sc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cost_com: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_ratio: Option<f64>,
    pub step_counts: StepCountsDoc,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub baselines: Vec<BaselineDoc>,
}

pub fn eta_doc(report: &EtaReport64, eta_prime: f64, trajectory: &Trajectory64) -> EtaDoc {
    EtaDoc {
        eta: report.eta,
        eta_prime,
        center: report.center.clone(),
        f_value: report.f_value,
        sc_radius_sq: report.sc_radius_sq,
        converged: trajectory.converged,
        gen_grad_norm: report.gen_grad_norm,
        n_out_sc: report.n_out_sc,
        n_out_com: report.n_out_com,
        mean_cost_sc: report.mean_cost_sc,
        mean_cost_com: report.mean_cost_com,
        outlier_ratio: report.outlier_ratio,
        step_counts: report.step_counts.into(),
        baselines: Vec::new(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunMeta {
    pub command: String,
    pub input: String,
    pub n: usize,
    pub d: usize,
    pub normalize: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SolveDoc {
    pub meta: RunMeta,
    #[serde(flatten)]
    pub eta: EtaDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepDoc {
    pub meta: RunMeta,
    pub rows: Vec<EtaDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RatioRow {
    pub eta: f64,
    pub method: String,
    pub time_ratio_min: f64,
    pub time_ratio_median: f64,
    pub time_ratio_max: f64,
    pub value_ratio_min: f64,
    pub value_ratio_median: f64,
    pub value_ratio_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompareDoc {
    pub meta: RunMeta,
    pub repeats: usize,
    pub rows: Vec<RatioRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DistanceEntry {
    pub a: String,
    pub b: String,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MedianDoc {
    pub meta: RunMeta,
    pub num_directions: usize,
    pub centers: Vec<LabeledPoint>,
    pub pairwise_distances: Vec<DistanceEntry>,
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serialization");
    s.push('\n');
    s
}

/// Sweep rows as a delimited table, one row per eta.
pub fn sweep_table(rows: &[EtaDoc]) -> String {
    let mut out = String::from(
        "eta,f_value,sc_radius_sq,n_out_sc,n_out_com,outlier_ratio,mean_cost_sc,mean_cost_com,teleport,line_descent,sphere_descent,min_jump,gen_grad_norm,converged\n",
    );
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.eta,
            r.f_value,
            r.sc_radius_sq,
            r.n_out_sc,
            r.n_out_com,
            opt(r.outlier_ratio),
            opt(r.mean_cost_sc),
            opt(r.mean_cost_com),
            r.step_counts.teleport,
            r.step_counts.line_descent,
            r.step_counts.sphere_descent,
            r.step_counts.min_jump,
            r.gen_grad_norm,
            r.converged,
        ));
    }
    out
}

/// Ratio summary in the min/median/max layout.
pub fn compare_table(rows: &[RatioRow]) -> String {
    let mut out = String::from(
        "eta,method,time_ratio_min,time_ratio_median,time_ratio_max,value_ratio_min,value_ratio_median,value_ratio_max\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.3e},{:.3e},{:.3e},{:.6},{:.6},{:.6}\n",
            r.eta,
            r.method,
            r.time_ratio_min,
            r.time_ratio_median,
            r.time_ratio_max,
            r.value_ratio_min,
            r.value_ratio_median,
            r.value_ratio_max,
        ));
    }
    out
}

/// One row per solver step: index, kind, objective, gradient norm, number of
/// incident spheres, then the point coordinates.
pub fn trace_table(trajectory: &Trajectory64) -> String {
    let dim = trajectory.final_point.len();
    let coords: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    let mut out = format!("step,kind,f_value,gen_grad_norm,n_on,{}\n", coords.join(","));
    for (i, s) in trajectory.steps.iter().enumerate() {
        let grad = s
            .gen_grad_norm
            .map(|g| format!("{g}"))
            .unwrap_or_default();
        let pt: Vec<String> = s.point.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i,
            s.kind.label(),
            s.f_value,
            grad,
            s.signature.i_zero.len(),
            pt.join(",")
        ));
    }
    out
}

/// Projection plot data: per-point coordinates with the outlier flag, then
/// the labeled centers.
pub fn projection_table(table: &ProjectionTable<f64>) -> String {
    let mut out = String::from("x,y,is_outlier,label\n");
    for p in &table.points {
        out.push_str(&format!(
            "{},{},{},\n",
            p.coords[0],
            p.coords[1],
            if p.is_outlier { 1 } else { 0 }
        ));
    }
    for (label, c) in &table.centers {
        out.push_str(&format!("{},{},,{}\n", c[0], c[1], label));
    }
    out
}
