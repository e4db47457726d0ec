//! Report rendering: machine-readable JSON (deterministic for a fixed
//! seed) and human-readable text tables.

use serde_json::{json, Map, Value};

use crate::expr::PhasePoint;
use crate::helmholtz::{CheckReport, ConditionResidual, ObstructionReport};

/// Version tag of the JSON report schema.
pub const REPORT_VERSION: u32 = 1;

/// Configuration echoed into every report.
#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub problem: String,
    pub candidate: Option<String>,
    pub command: String,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
}

fn point_json(p: &PhasePoint) -> Value {
    json!({ "x": p.x, "y": p.y })
}

fn condition_json(c: &ConditionResidual) -> Value {
    json!({
        "name": c.name.as_str(),
        "max_abs": c.max_abs,
        "scale": c.scale,
        "pass": c.pass,
        "informational": c.informational,
        "argmax_point": point_json(&c.argmax_point),
    })
}

fn config_json(cfg: &ReportConfig) -> Value {
    json!({
        "command": cfg.command,
        "candidate": cfg.candidate,
        "tol": cfg.tol,
        "samples": cfg.samples,
        "seed": cfg.seed,
    })
}

/// JSON rendering of a check report.
pub fn check_report_json(cfg: &ReportConfig, report: &CheckReport) -> Value {
    let mut obj = Map::new();
    obj.insert("report_version".into(), json!(REPORT_VERSION));
    obj.insert("problem".into(), json!(cfg.problem));
    obj.insert("config".into(), config_json(cfg));
    obj.insert(
        "conditions".into(),
        Value::Array(report.conditions.iter().map(condition_json).collect()),
    );
    obj.insert("verdict".into(), json!(if report.verdict { "pass" } else { "fail" }));
    if let Some(k) = report.homogeneity_degree {
        obj.insert("homogeneity_degree".into(), json!(k.to_string()));
    }
    if let Some(l) = &report.potential {
        obj.insert("potential".into(), json!(l.to_string()));
    }
    if let Some(rank) = report.g_rank {
        obj.insert("g_rank".into(), json!(rank));
    }
    if let Some(w) = &report.consistency_warning {
        obj.insert("consistency_warning".into(), json!(w));
    }
    Value::Object(obj)
}

/// Text rendering of a check report.
pub fn check_report_text(cfg: &ReportConfig, report: &CheckReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "problem: {}  command: {}  candidate: {}\n",
        cfg.problem,
        cfg.command,
        cfg.candidate.as_deref().unwrap_or("-")
    ));
    out.push_str(&format!(
        "tol: {:e}  samples: {}  seed: {:#x}\n\n",
        cfg.tol, cfg.samples, cfg.seed
    ));
    out.push_str(&format!(
        "{:<18} {:>12} {:>12}  {}\n",
        "condition", "max_abs", "scale", "status"
    ));
    for c in &report.conditions {
        let status = match (c.pass, c.informational) {
            (true, false) => "pass",
            (false, false) => "FAIL",
            (true, true) => "pass (info)",
            (false, true) => "FAIL (info)",
        };
        out.push_str(&format!(
            "{:<18} {:>12.3e} {:>12.3e}  {}\n",
            c.name.as_str(),
            c.max_abs,
            c.scale,
            status
        ));
        if !c.pass {
            out.push_str(&format!(
                "    worst at x = {:?}, y = {:?}\n",
                c.argmax_point.x, c.argmax_point.y
            ));
        }
    }
    if let Some(k) = report.homogeneity_degree {
        out.push_str(&format!("\nhomogeneity degree k = {k}\n"));
    }
    if let Some(l) = &report.potential {
        out.push_str(&format!("recovered potential: {l}\n"));
    }
    if let Some(rank) = report.g_rank {
        out.push_str(&format!("multiplier rank (informational): {rank}\n"));
    }
    if let Some(w) = &report.consistency_warning {
        out.push_str(&format!("\nWARNING: {w}\n"));
    }
    out.push_str(&format!(
        "\nverdict: {}\n",
        if report.verdict { "pass" } else { "FAIL" }
    ));
    out
}

/// JSON rendering of per-point obstruction reports.
pub fn obstruction_json(cfg: &ReportConfig, reports: &[ObstructionReport]) -> Value {
    json!({
        "report_version": REPORT_VERSION,
        "problem": cfg.problem,
        "config": config_json(cfg),
        "points": reports.iter().map(|r| json!({
            "point": point_json(&r.point),
            "rows": r.rows,
            "cols": r.cols,
            "rank": r.rank,
            "solution_dim": r.solution_dim,
            "verdict": r.verdict.as_str(),
        })).collect::<Vec<_>>(),
    })
}

/// Text rendering of per-point obstruction reports.
pub fn obstruction_text(cfg: &ReportConfig, reports: &[ObstructionReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!("problem: {}  obstruction rank per point\n\n", cfg.problem));
    out.push_str(&format!(
        "{:>4} {:>6} {:>6} {:>6} {:>8}  verdict\n",
        "#", "rows", "cols", "rank", "sol_dim"
    ));
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!(
            "{:>4} {:>6} {:>6} {:>6} {:>8}  {}\n",
            i, r.rows, r.cols, r.rank, r.solution_dim, r.verdict.as_str()
        ));
    }
    out
}

/// A generic residual row for the identities battery.
#[derive(Debug, Clone)]
pub struct IdentityRow {
    pub name: String,
    /// `None` means "n/a" (identity requires a spray).
    pub residual: Option<f64>,
    pub scale: f64,
    pub pass: bool,
}

pub fn identities_json(cfg: &ReportConfig, rows: &[IdentityRow], verdict: bool) -> Value {
    json!({
        "report_version": REPORT_VERSION,
        "problem": cfg.problem,
        "config": config_json(cfg),
        "identities": rows.iter().map(|r| json!({
            "name": r.name,
            "residual": r.residual,
            "scale": r.scale,
            "status": match r.residual {
                None => "n/a",
                Some(_) if r.pass => "pass",
                Some(_) => "fail",
            },
        })).collect::<Vec<_>>(),
        "verdict": if verdict { "pass" } else { "fail" },
    })
}

pub fn identities_text(cfg: &ReportConfig, rows: &[IdentityRow], verdict: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!("problem: {}  structure-identity battery\n\n", cfg.problem));
    out.push_str(&format!("{:<28} {:>12} {:>12}  status\n", "identity", "residual", "scale"));
    for r in rows {
        match r.residual {
            None => out.push_str(&format!("{:<28} {:>12} {:>12}  n/a\n", r.name, "-", "-")),
            Some(v) => out.push_str(&format!(
                "{:<28} {:>12.3e} {:>12.3e}  {}\n",
                r.name,
                v,
                r.scale,
                if r.pass { "pass" } else { "FAIL" }
            )),
        }
    }
    out.push_str(&format!("\nverdict: {}\n", if verdict { "pass" } else { "FAIL" }));
    out
}
