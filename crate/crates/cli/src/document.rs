//! JSON result documents. Keys come out sorted and numbers are rounded to
//! 12 significant digits, so equal runs give byte-identical output.

use leximin::apps::{AppError, Instance};
use leximin::model::{Outcome, SparseDistribution};
use leximin::oracle::VerdictReport;
use leximin::reduction::RunReport;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round12).collect()
}

fn lottery_json(instance: &Instance, x: &SparseDistribution) -> Result<Value, AppError> {
    let mut entries = Vec::with_capacity(x.support_size());
    for (record, p) in x.iter() {
        let outcome = instance.decode_state(record)?;
        entries.push(json!({
            "probability": round12(p),
            "outcome": serde_json::to_value(&outcome).expect("outcomes serialize"),
            "description": instance.describe(&outcome),
            "utilities": rounded(record.utilities.as_slice()),
        }));
    }
    Ok(Value::Array(entries))
}

pub fn solve_document(instance: &Instance, solver: &str, report: &RunReport) -> Result<Value, AppError> {
    let iterations: Vec<Value> = report
        .iterations
        .iter()
        .map(|it| {
            json!({
                "t": it.t,
                "z": round12(it.z),
                "probes": it.probe_count,
                "cuts": it.cut_count,
                "ellipsoid_iterations": it.ellipsoid_iterations,
                "blackbox_calls": it.blackbox_calls,
                "upper_clamped": it.upper_clamped,
            })
        })
        .collect();
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "mode": "solve",
        "kind": instance.kind(),
        "agents": instance.agents(),
        "solver": solver,
        "alpha": report.alpha,
        "eps": report.eps,
        "lottery": lottery_json(instance, &report.distribution)?,
        "expected": rounded(&report.expected.0),
        "z": rounded(&report.z),
        "iterations": iterations,
        "blackbox_calls": report.blackbox_calls,
        "repetitions": report.repetitions,
        "support_cap": report.support_cap,
    }))
}

pub fn oracle_document(instance: &Instance, x: &SparseDistribution) -> Result<Value, AppError> {
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "mode": "oracle",
        "kind": instance.kind(),
        "agents": instance.agents(),
        "lottery": lottery_json(instance, x)?,
        "expected": rounded(&x.expected_utilities().0),
    }))
}

pub fn verdict_document(mode: &str, verdict: &VerdictReport, solved: Option<Value>) -> Value {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "pass": verdict.pass,
        "valid": verdict.valid,
        "support_feasible": verdict.support_feasible,
        "approximation": verdict.approximation,
        "alpha": verdict.alpha,
        "eps": verdict.eps,
        "candidate_sorted": rounded(&verdict.candidate_sorted),
        "optimum_sorted": rounded(&verdict.optimum_sorted),
        "target_sorted": rounded(&verdict.target_sorted),
        "failures": verdict.failures,
    });
    if let Some(solved) = solved {
        doc["pipeline"] = solved;
    }
    doc
}

fn schema(field: &str, message: impl Into<String>) -> AppError {
    AppError::Schema {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Rebuilds a lottery from the `lottery` array of a result document.
/// Outcomes must be feasible for `instance`; utilities are recomputed.
pub fn lottery_from_json(instance: &Instance, doc: &Value) -> Result<SparseDistribution, AppError> {
    let entries = doc
        .get("lottery")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("lottery", "expected an array of entries"))?;
    let mut pairs = Vec::with_capacity(entries.len());
    for (k, entry) in entries.iter().enumerate() {
        let field = format!("lottery[{k}]");
        let p = entry
            .get("probability")
            .and_then(Value::as_f64)
            .ok_or_else(|| schema(&field, "missing probability"))?;
        let outcome: Outcome = entry
            .get("outcome")
            .cloned()
            .ok_or_else(|| schema(&field, "missing outcome"))
            .and_then(|v| serde_json::from_value(v).map_err(|e| schema(&field, e.to_string())))?;
        let record = instance.record(&outcome).ok_or_else(|| AppError::Invariant {
            field: field.clone(),
            message: format!("`{}` is not a feasible outcome", instance.describe(&outcome)),
        })?;
        pairs.push((record, p));
    }
    SparseDistribution::new(instance.agents(), pairs).map_err(|e| AppError::Invariant {
        field: "lottery".to_string(),
        message: e.to_string(),
    })
}
