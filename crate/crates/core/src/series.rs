//! Certified summation of the capacity-expansion series.
//!
//! Every series here has non-negative, exponentially decaying terms. Each
//! summation stops once a geometric majorant of the remainder is below the
//! requested tolerance, and the returned [`SeriesValue`] carries that
//! majorant as its tail bound, so the limit lies in
//! `[value, value + tail_bound]` up to floating-point rounding.
//!
//! * `S1 = sum_{l>=1} 2^{-l-1} l log2 l`
//! * `S2 = sum_{a,b>=1} (b+1) 2^{-a-b} h(1/(b+1))`, where the `a`-sum is 1
//! * `S3 = sum_{a,b>=1} (a+b+2) 2^{-a-b} h((a+1)/(a+b+2))`
//!
//! and the expansion constants
//!
//! * `G1 = -log2 e + S1/2 + S2/2`
//! * `G2 = -log2 e - 7/8 + S1/4 + S3/4`

use std::sync::OnceLock;

use serde::Serialize;

use crate::entropy::{h2, CompensatedSum, LOG2_E};
use crate::error::{Error, Result};
use crate::model::ChannelModel;

/// Hard cap on summation length; the majorants reach 1e-300 long before.
const MAX_TERMS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

impl SeriesValue {
    fn scaled(self, factor: f64) -> SeriesValue {
        SeriesValue {
            value: self.value * factor,
            terms_used: self.terms_used,
            tail_bound: self.tail_bound * factor.abs(),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("tolerance {eps} must be positive")))
    }
}

/// Sums `term(i)` for `i = first, first + 1, ...` until the tail bound for
/// the remaining indices drops to `eps`. `tail(i)` must bound
/// `sum_{j >= i} term(j)`.
fn certified_sum(
    first: usize,
    eps: f64,
    term: impl Fn(usize) -> f64,
    tail: impl Fn(usize) -> f64,
) -> SeriesValue {
    let mut acc = CompensatedSum::new();
    let mut i = first;
    loop {
        acc.add(term(i));
        i += 1;
        let bound = tail(i);
        if bound <= eps || i - first >= MAX_TERMS {
            return SeriesValue {
                value: acc.value(),
                terms_used: i - first,
                tail_bound: bound,
            };
        }
    }
}

/// Geometric tail bound for a majorant sequence `m(i)` whose ratio
/// `m(i+1)/m(i)` is non-increasing for `i >= from`.
fn geometric_tail(m: impl Fn(usize) -> f64, from: usize) -> f64 {
    let first = m(from);
    let ratio = m(from + 1) / first;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    first / (1.0 - ratio)
}

pub fn s1_term(l: usize) -> f64 {
    let lf = l as f64;
    0.5f64.powi(l as i32 + 1) * lf * lf.log2()
}

pub fn sum_s1(eps: f64) -> Result<SeriesValue> {
    check_eps(eps)?;
    // term ratio (l+1) log(l+1) / (2 l log l) decreases for l >= 2
    Ok(certified_sum(1, eps, s1_term, |i| {
        geometric_tail(s1_term, i.max(2)) + if i < 2 { s1_term(1) } else { 0.0 }
    }))
}

/// `(b+1) 2^{-b} h(1/(b+1))`: the `S2` term for a given `b`, summed over `a`.
pub fn s2_term(b: usize) -> f64 {
    let bf = b as f64;
    (bf + 1.0) * 0.5f64.powi(b as i32) * h2(1.0 / (bf + 1.0))
}

fn s2_majorant(b: usize) -> f64 {
    // (b+1) h(1/(b+1)) <= log2(b+1) + log2 e
    0.5f64.powi(b as i32) * ((b as f64 + 1.0).log2() + LOG2_E)
}

pub fn sum_s2(eps: f64) -> Result<SeriesValue> {
    check_eps(eps)?;
    Ok(certified_sum(1, eps, s2_term, |i| geometric_tail(s2_majorant, i)))
}

pub fn s3_term(a: usize, b: usize) -> f64 {
    let (af, bf) = (a as f64, b as f64);
    (af + bf + 2.0) * 0.5f64.powi((a + b) as i32) * h2((af + 1.0) / (af + bf + 2.0))
}

/// Sum of `S3` terms on the diagonal `a + b = d`.
fn s3_diagonal(d: usize) -> f64 {
    (1..d).map(|a| s3_term(a, d - a)).collect::<CompensatedSum>().value()
}

fn s3_diagonal_majorant(d: usize) -> f64 {
    let df = d as f64;
    (df + 2.0) * (df - 1.0) * 0.5f64.powi(d as i32)
}

/// Triangular sweep over the diagonals `a + b = d`, `d >= 2`; the discarded
/// region is bounded using `h <= 1`.
pub fn sum_s3(eps: f64) -> Result<SeriesValue> {
    check_eps(eps)?;
    Ok(certified_sum(2, eps, s3_diagonal, |d| {
        geometric_tail(s3_diagonal_majorant, d.max(3))
    }))
}

/// A G constant together with the pieces it is assembled from.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GBreakdown {
    pub model: ChannelModel,
    pub g: SeriesValue,
    pub s1: SeriesValue,
    /// `S2` for Simple, `S3` for Gallager.
    pub pair_series: SeriesValue,
    pub minus_log2_e: f64,
    /// `0` for Simple, `-7/8` for Gallager.
    pub offset: f64,
    pub s1_weight: f64,
    pub pair_weight: f64,
}

pub fn g_breakdown(model: ChannelModel, eps: f64) -> Result<GBreakdown> {
    check_eps(eps)?;
    let s1 = sum_s1(eps)?;
    let (pair_series, offset, weight) = match model {
        ChannelModel::Simple => (sum_s2(eps)?, 0.0, 0.5),
        ChannelModel::Gallager => (sum_s3(eps)?, -7.0 / 8.0, 0.25),
    };
    let a = s1.scaled(weight);
    let b = pair_series.scaled(weight);
    let g = SeriesValue {
        value: -LOG2_E + offset + a.value + b.value,
        terms_used: s1.terms_used + pair_series.terms_used,
        tail_bound: a.tail_bound + b.tail_bound,
    };
    Ok(GBreakdown {
        model,
        g,
        s1,
        pair_series,
        minus_log2_e: -LOG2_E,
        offset,
        s1_weight: weight,
        pair_weight: weight,
    })
}

pub fn constant_g(model: ChannelModel, eps: f64) -> Result<SeriesValue> {
    Ok(g_breakdown(model, eps)?.g)
}

fn cached_g(model: ChannelModel) -> f64 {
    static SIMPLE: OnceLock<f64> = OnceLock::new();
    static GALLAGER: OnceLock<f64> = OnceLock::new();
    let cell = match model {
        ChannelModel::Simple => &SIMPLE,
        ChannelModel::Gallager => &GALLAGER,
    };
    *cell.get_or_init(|| {
        constant_g(model, 1e-16)
            .expect("positive tolerance")
            .value
    })
}

/// `1 + alpha log2 alpha + G alpha`, with `alpha log2 alpha = 0` at zero.
pub fn capacity_approx(model: ChannelModel, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha {alpha} outside [0, 1]")));
    }
    let alpha_log = if alpha == 0.0 { 0.0 } else { alpha * alpha.log2() };
    Ok(1.0 + alpha_log + cached_g(model) * alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub alpha: f64,
    pub model: ChannelModel,
    pub capacity_approx: f64,
}

/// One row per `(alpha, model)`, alpha-major.
pub fn curve(models: &[ChannelModel], alphas: &[f64]) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::with_capacity(models.len() * alphas.len());
    for &alpha in alphas {
        for &model in models {
            rows.push(CurveRow {
                alpha,
                model,
                capacity_approx: capacity_approx(model, alpha)?,
            });
        }
    }
    Ok(rows)
}

/// `steps` evenly spaced points `alpha_max * i / steps`, `i = 1..=steps`.
pub fn alpha_grid(alpha_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(alpha_max > 0.0 && alpha_max <= 1.0) {
        return Err(Error::usage(format!("alpha-max {alpha_max} must lie in (0, 1]")));
    }
    if steps == 0 {
        return Err(Error::usage("steps must be at least 1"));
    }
    Ok((1..=steps)
        .map(|i| alpha_max * i as f64 / steps as f64)
        .collect())
}

/// Formats `x` with `digits` significant digits, trimming trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_string() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub const CSV_HEADER: &str = "alpha,model,capacity_approx";

/// CSV with 15 significant digits per numeric field.
pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            format_significant(row.alpha, 15),
            row.model,
            format_significant(row.capacity_approx, 15)
        ));
    }
    out
}

/// Parses a curve CSV back into rows.
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::usage(format!("missing CSV header {CSV_HEADER:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::usage(format!("malformed CSV row {line:?}")));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::usage(format!("bad number {s:?} in row {line:?}")))
            };
            Ok(CurveRow {
                alpha: num(fields[0])?,
                model: fields[1].trim().parse()?,
                capacity_approx: num(fields[2])?,
            })
        })
        .collect()
}
