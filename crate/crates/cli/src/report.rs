//! Report documents and their renderings.

use std::collections::BTreeMap;

use escape_rate::drift::DriftReport;
use escape_rate::oracle::{IdentityReport, TrendReport};
use escape_rate::simulate::SimulationSummary;
use escape_rate::{Factor, ModelSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "escape-rate".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigInfo {
    pub name: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorInfo {
    /// `matrix` or the builtin lattice name.
    pub kind: String,
    pub states: Option<usize>,
    pub transitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub factors: Vec<FactorInfo>,
    pub weights: Vec<f64>,
}

impl ModelInfo {
    pub fn of(model: &ModelSpec) -> Self {
        ModelInfo {
            factors: model
                .factors()
                .iter()
                .map(|f| FactorInfo {
                    kind: match f {
                        Factor::Finite(_) => "matrix".into(),
                        Factor::Analytic(a) => a.kind().name().into(),
                    },
                    states: f.state_count(),
                    transitive: f.is_transitive(),
                })
                .collect(),
            weights: model.weights().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub analyze_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeReport {
    pub command: String,
    pub report_version: u32,
    pub tool: ToolInfo,
    pub config: ConfigInfo,
    pub model: ModelInfo,
    pub solver: SolverInfo,
    /// The drift value reported as the answer (the dgf formula).
    pub ell: f64,
    pub drift: DriftReport,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParameters {
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Closed-form values the estimates are compared with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub ell: f64,
    pub nu: Vec<f64>,
    pub partial: Vec<f64>,
    pub markovian: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub command: String,
    pub report_version: u32,
    pub tool: ToolInfo,
    pub config: ConfigInfo,
    pub model: ModelInfo,
    pub parameters: SimulationParameters,
    pub estimates: SimulationSummary,
    pub reference: Reference,
    /// |estimate - reference| in standard errors.
    pub z_scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub ell_exit_time: f64,
    pub ell_dgf: f64,
    pub ell_group: Option<f64>,
    pub tolerance: f64,
    pub residuals: BTreeMap<String, f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSection {
    pub horizon: usize,
    pub max_words: usize,
    pub ell: f64,
    pub result: TrendReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub command: String,
    pub report_version: u32,
    pub tool: ToolInfo,
    pub config: ConfigInfo,
    pub model: ModelInfo,
    pub order: usize,
    pub identities: Option<IdentityReport>,
    pub trend: Option<TrendSection>,
    pub agreement: Agreement,
    pub notices: Vec<String>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Canonical JSON: keys sorted (serde_json's default map is ordered), two
/// space indent, trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize");
    let mut s = serde_json::to_string_pretty(&value).expect("values serialize");
    s.push('\n');
    s
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Null => out.push((prefix.into(), String::new())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Two columns, `key,value`, one row per leaf of the JSON document.
pub fn to_csv<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize");
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        s.push_str(&csv_field(&k));
        s.push(',');
        s.push_str(&csv_field(&v));
        s.push('\n');
    }
    s
}

fn vec_text(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("[{}]", parts.join(", "))
}

fn opt_text(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.12}"))
}

pub fn compute_text(r: &ComputeReport) -> String {
    let d = &r.drift;
    let mut s = String::new();
    s.push_str(&format!("model            {}\n", r.config.name.as_deref().unwrap_or("(unnamed)")));
    s.push_str(&format!("config sha256    {}\n", r.config.sha256));
    s.push_str(&format!("xi               {}\n", vec_text(&d.xi.xi)));
    s.push_str(&format!("xi'(1)           {}\n", vec_text(&d.xi.xi_prime)));
    s.push_str(&format!("G(o,o|1)         {:.12}\n", d.xi.g_root));
    s.push_str(&format!("ell (exit time)  {:.12}\n", d.ell_exit_time));
    s.push_str(&format!("ell (dgf)        {:.12}\n", d.ell_dgf));
    s.push_str(&format!("ell (group)      {}\n", opt_text(d.ell_group)));
    s.push_str(&format!("Lambda           {:.12}\n", d.lambda_exit));
    s.push_str(&format!("nu               {}\n", vec_text(&d.type_chain.nu)));
    for (i, row) in d.type_chain.qhat.iter().enumerate() {
        s.push_str(&format!("qhat[{i}]          {}\n", vec_text(row)));
    }
    s.push_str(&format!("partial ell_i    {}\n", vec_text(&d.partial)));
    s.push_str(&format!("sigma            {}\n", opt_text(d.sigma)));
    s.push_str(&format!("lambda           {}\n", opt_text(d.markovian)));
    s.push_str("residuals\n");
    for (k, v) in &d.residuals {
        s.push_str(&format!("  {k:<22} {v:.3e}\n"));
    }
    s.push_str(&format!("solved in {} iterations, {:.2} ms total\n", d.xi.iterations, r.timings.total_ms));
    s
}

pub fn simulate_text(r: &SimulateReport) -> String {
    let e = &r.estimates;
    let mut s = String::new();
    s.push_str(&format!(
        "steps {}, trials {}, seed {}\n",
        r.parameters.steps, r.parameters.trials, r.parameters.seed
    ));
    s.push_str(&format!(
        "ell     {:.6} +- {:.6}  95% [{:.6}, {:.6}]  formula {:.6}\n",
        e.drift.mean, e.drift.stderr, e.drift.ci95[0], e.drift.ci95[1], r.reference.ell
    ));
    for (i, p) in e.partial_share.iter().enumerate() {
        s.push_str(&format!(
            "ell_{}/ell {:.6} +- {:.6}  nu {:.6}\n",
            i + 1,
            p.mean,
            p.stderr,
            r.reference.nu[i]
        ));
    }
    s.push_str(&format!(
        "|Z_n|/n {:.6} +- {:.6}  formula {}\n",
        e.markovian.mean,
        e.markovian.stderr,
        opt_text(r.reference.markovian)
    ));
    s.push_str("stabilized prefix depth\n");
    for p in &e.profile {
        s.push_str(&format!("  n = {:>8}  {:.3} +- {:.3}\n", p.step, p.mean_depth, p.stderr));
    }
    s
}

pub fn verify_text(r: &VerifyReport) -> String {
    let mut s = String::new();
    for n in &r.notices {
        s.push_str(&format!("note: {n}\n"));
    }
    if let Some(id) = &r.identities {
        for c in &id.checks {
            s.push_str(&format!(
                "{} {:<44} {:>4} cases  max diff {:.2e}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.cases,
                c.max_discrepancy
            ));
        }
    }
    if let Some(t) = &r.trend {
        s.push_str(&format!(
            "{} drift trend over {} steps: final gap {:.4}, initial gap {:.4}, mass error {:.1e}\n",
            if t.passed { "PASS" } else { "FAIL" },
            t.result.layers.len() - 1,
            t.result.final_gap,
            t.result.initial_gap,
            t.result.max_mass_error
        ));
    }
    let a = &r.agreement;
    s.push_str(&format!(
        "{} formula agreement: exit {:.12}, dgf {:.12}, group {}\n",
        if a.passed { "PASS" } else { "FAIL" },
        a.ell_exit_time,
        a.ell_dgf,
        opt_text(a.ell_group)
    ));
    for f in &r.failures {
        s.push_str(&format!("failure: {f}\n"));
    }
    s.push_str(if r.passed { "verify: pass\n" } else { "verify: FAIL\n" });
    s
}
