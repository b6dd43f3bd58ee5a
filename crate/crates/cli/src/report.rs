//! Writes reports as JSON or CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliError;
use crate::run::{Report, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Serializes `report` and writes it to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let bytes = match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("reports serialize");
            out.push(b'\n');
            out
        }
        Format::Csv => to_csv(report),
    };
    let io_err = |source| CliError::Io {
        path: path.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    };
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(io_err),
        None => std::io::stdout().lock().write_all(&bytes).map_err(io_err),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Fixed columns per scenario kind; sweeps get one row per point.
pub fn to_csv(report: &Report) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |fields: &[String]| w.write_record(fields).expect("in-memory write");
    let s = |x: &dyn ToString| x.to_string();
    match &report.result {
        RunResult::RateCompare(r) => {
            row(&[s(&"protocol"), s(&"eta"), s(&"rate")]);
            for p in &r.points {
                row(&[s(&p.protocol), s(&p.eta), s(&p.rate)]);
            }
        }
        RunResult::Mdi(r) => {
            row(&["rounds", "detections", "gain", "siftedBits", "qberZ", "qberX"].map(String::from));
            row(&[s(&r.rounds), s(&r.detections), s(&r.gain), s(&r.sifted_key_a.len()), opt(r.qber_z), opt(r.qber_x)]);
        }
        RunResult::Relay(r) => {
            row(&["recoveredBits", "qberAlice", "qberBob", "keysMatch", "truncated"].map(String::from));
            row(&[
                s(&r.recovered_key.len()),
                s(&r.per_link_qber.alice),
                s(&r.per_link_qber.bob),
                s(&r.keys_match),
                s(&r.truncated.is_some()),
            ]);
        }
        RunResult::Qpv(r) => {
            row(&qpv_header(false));
            row(&qpv_row(r, None));
        }
        RunResult::Attack(a) => {
            row(&qpv_header(true));
            row(&qpv_row(&a.session, Some(opt(a.analytic.map(|x| x.er)))));
        }
        RunResult::Bound(b) => {
            row(&["value", "evaluations", "gridValue"].map(String::from));
            row(&[s(&b.minimum.value), s(&b.minimum.evaluations), opt(b.grid.map(|g| g.value))]);
        }
        RunResult::Equivalence(e) => {
            row(&["order", "statistic", "degreesOfFreedom", "pValue", "consistent"].map(String::from));
            for c in &e.entanglement_based {
                row(&[
                    format!("{:?}", c.order),
                    s(&c.statistic),
                    s(&c.degrees_of_freedom),
                    s(&c.p_value),
                    s(&c.consistent),
                ]);
            }
        }
    }
    w.into_inner().expect("in-memory flush")
}

fn qpv_header(with_analytic: bool) -> Vec<String> {
    let mut h: Vec<String> = ["rounds", "detections", "errorRate", "timingOk", "consistencyOk", "accepted", "threshold"]
        .map(String::from)
        .to_vec();
    if with_analytic {
        h.push("analyticErrorRate".into());
    }
    h
}

fn qpv_row(r: &qkdsim_core::qpv::QpvReport, analytic: Option<String>) -> Vec<String> {
    let mut v = vec![
        r.rounds.to_string(),
        r.detections.to_string(),
        opt(r.error_rate),
        r.timing_ok.to_string(),
        r.consistency_ok.to_string(),
        r.accepted.to_string(),
        r.threshold.to_string(),
    ];
    v.extend(analytic);
    v
}

/// JSON value of `report` with the wall-clock field removed.
pub fn comparable<T: Serialize>(report: &T) -> serde_json::Value {
    let mut v = serde_json::to_value(report).expect("reports serialize");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("wallClockSeconds");
    }
    v
}
