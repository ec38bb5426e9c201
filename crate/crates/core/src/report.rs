//! Flat JSON records for every report type, their text rendering and the
//! run manifest.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::estimators::{AbReport, CappedReport, HkReport, RunStats, ZvPmf};
use crate::model::ChannelModel;
use crate::montecarlo::RateEstimate;
use crate::oracle::DecompositionReport;
use crate::series::{format_significant, GBreakdown};

/// Significant digits in text output.
pub const TEXT_DIGITS: usize = 9;

pub type Record = Map<String, Value>;

/// Everything needed to rerun a command.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub version: &'static str,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(command: &str, params: Value, seed: Option<u64>, workers: Option<usize>) -> Self {
        RunManifest {
            command: command.to_string(),
            params,
            seed,
            workers,
            version: env!("CARGO_PKG_VERSION"),
            duration_secs: 0.0,
        }
    }
}

fn put(rec: &mut Record, key: impl Into<String>, v: impl Into<Value>) {
    rec.insert(key.into(), v.into());
}

/// `estimate`, `std_error`, `trials`, `seed` at the top level.
fn headline(rec: &mut Record, e: &RateEstimate) {
    put(rec, "estimate", e.estimate);
    put(rec, "std_error", e.std_error);
    put(rec, "trials", e.trials);
    put(rec, "seed", e.seed);
}

fn secondary(rec: &mut Record, name: &str, e: &RateEstimate) {
    put(rec, format!("{name}_estimate"), e.estimate);
    put(rec, format!("{name}_std_error"), e.std_error);
}

pub fn constants_record(b: &GBreakdown) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "model", b.model.name());
    put(&mut rec, "g", b.g.value);
    put(&mut rec, "g_tail_bound", b.g.tail_bound);
    put(&mut rec, "terms_used", b.g.terms_used);
    put(&mut rec, "s1", b.s1.value);
    let pair = match b.model {
        ChannelModel::Simple => "s2",
        ChannelModel::Gallager => "s3",
    };
    put(&mut rec, pair, b.pair_series.value);
    put(&mut rec, "s1_weight", b.s1_weight);
    put(&mut rec, format!("{pair}_weight"), b.pair_weight);
    put(&mut rec, "minus_log2_e", b.minus_log2_e);
    if b.model == ChannelModel::Gallager {
        put(&mut rec, "offset", b.offset);
    }
    rec
}

pub fn decomposition_record(model: ChannelModel, n: usize, alpha: f64, max_events: Option<usize>, r: &DecompositionReport) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "model", model.name());
    put(&mut rec, "n", n);
    put(&mut rec, "alpha", alpha);
    put(&mut rec, "max_events", json!(max_events));
    if let Value::Object(fields) = json!(r) {
        rec.extend(fields);
    }
    rec
}

pub fn runstats_record(r: &RunStats) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "law", json!(r.law));
    put(&mut rec, "samples", r.samples);
    headline(&mut rec, &r.e_log_l0);
    secondary(&mut rec, "e_l0", &r.e_l0);
    secondary(&mut rec, "e_l0_log_l0", &r.e_l0_log_l0);
    rec
}

pub fn zv_record(r: &ZvPmf) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "model", r.model.name());
    put(&mut rec, "alpha", r.alpha);
    put(&mut rec, "n", r.n);
    headline(&mut rec, &r.p_z1);
    put(&mut rec, "predicted_p_z1", r.predicted_p_z1);
    secondary(&mut rec, "z1_balance", &r.z1_balance);
    put(&mut rec, "positions", r.positions);
    for o in &r.outcomes {
        secondary(&mut rec, &format!("mass_{}", o.label), &o.mass);
    }
    rec
}

pub fn hk_record(r: &HkReport) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "model", r.model.name());
    put(&mut rec, "alpha", r.alpha);
    put(&mut rec, "n", r.n);
    put(&mut rec, "edges", json!(r.edges));
    headline(&mut rec, &r.per_pair);
    put(&mut rec, "reference", r.reference_per_pair);
    secondary(&mut rec, "per_bit", &r.per_bit);
    let prefix = match r.model {
        ChannelModel::Simple => "case_",
        ChannelModel::Gallager => "case_v",
    };
    for (i, c) in r.tally.cases.iter().enumerate() {
        put(&mut rec, format!("{prefix}{}", i + 1), *c);
    }
    if r.model == ChannelModel::Gallager {
        for (name, c) in ["none", "same", "opposite", "same_opposite", "opposite_same"]
            .iter()
            .zip(r.tally.replacement)
        {
            put(&mut rec, format!("replacement_{name}"), c);
        }
    }
    put(&mut rec, "pairs", r.tally.pairs);
    put(&mut rec, "bits", r.tally.bits);
    put(&mut rec, "events", r.tally.events);
    rec
}

pub fn ab_record(r: &AbReport) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "model", r.model.name());
    put(&mut rec, "alpha", r.alpha);
    put(&mut rec, "n", r.n);
    put(&mut rec, "edges", json!(r.edges));
    headline(&mut rec, &r.exact);
    put(&mut rec, "prediction", r.prediction_exact);
    secondary(&mut rec, "ledger", &r.ledger);
    put(&mut rec, "ledger_prediction", r.prediction_ledger);
    put(&mut rec, "reference_per_run", r.reference_per_run);
    put(&mut rec, "reference_length_biased", r.reference_length_biased);
    put(&mut rec, "events", r.events);
    rec
}

pub fn capped_record(r: &CappedReport) -> Record {
    let mut rec = Record::new();
    put(&mut rec, "l_star", r.l_star);
    put(&mut rec, "n", r.n);
    headline(&mut rec, &r.density);
    put(&mut rec, "max_run", r.max_run);
    put(&mut rec, "bound_length_biased", r.bound_length_biased);
    put(&mut rec, "bound_per_run", r.bound_per_run);
    put(&mut rec, "exact_density", r.exact_density);
    rec
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format_significant(n.as_f64().unwrap_or(f64::NAN), TEXT_DIGITS),
        Value::String(s) => s.clone(),
        Value::Null => "-".to_string(),
        other => other.to_string(),
    }
}

/// `key = value` lines with floats at [`TEXT_DIGITS`] significant digits.
pub fn to_text(rec: &Record) -> String {
    let width = rec.keys().map(|k| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rec {
        out.push_str(&format!("{k:<width$} = {}\n", text_value(v)));
    }
    out
}

pub fn to_json(rec: &Record) -> String {
    let mut s = Value::Object(rec.clone()).to_string();
    s.push('\n');
    s
}
