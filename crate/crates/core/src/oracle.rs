//! Exact joint law of input, output and run vector for short blocks.
//!
//! Inputs are i.i.d. Bernoulli(1/2). For each input `x` the realizations are
//! expanded position by position; partial realizations that have produced
//! the same output prefix and the same run-image boundaries are merged, since
//! from then on they evolve identically. Each merged state carries its mass
//! `M` and `S = sum q log2 q` over the realizations it absorbed, which is
//! enough to recover `H(A,B | x, y, k)` per cell without storing realizations.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{runs_of, BitSeq, RunVector};
use crate::channels::InsertionRealization;
use crate::entropy::{entropy_of_masses, h2, xlog2x, CompensatedSum};
use crate::error::{Error, Result};
use crate::model::{ChannelModel, ChannelSpec};

type FixedState = BuildHasherDefault<DefaultHasher>;

/// Hard cap on the block length.
pub const MAX_N: usize = 20;
/// Budget on `2^n * sum_{k <= max_events} C(n, k) 2^{w k}`, the number of
/// input/realization pairs expanded.
pub const WORK_BUDGET: f64 = 5e8;
/// Cell budget for a materialized [`JointTable`].
pub const MAX_TABLE_CELLS: usize = 4_000_000;

/// Number of input/realization pairs an enumeration expands.
pub fn enumeration_work(n: usize, model: ChannelModel, max_events: Option<usize>) -> f64 {
    let cap = effective_max(n, max_events);
    let branches = (1u32 << model.payload_width()) as f64;
    let per_input: f64 = (0..=cap).map(|k| binomial(n, k) * branches.powi(k as i32)).sum();
    2f64.powi(n as i32) * per_input
}

/// Checks the enumeration limits; `max_events = None` means untruncated.
///
/// Untruncated this admits Simple up to n = 11 and Gallager up to n = 8;
/// with `max_events = 2` Simple reaches n = 19 and Gallager n = 17.
pub fn check_limits(n: usize, model: ChannelModel, max_events: Option<usize>) -> Result<()> {
    if n == 0 {
        return Err(Error::usage("n must be at least 1"));
    }
    if let Some(m) = max_events {
        if m > n {
            return Err(Error::usage(format!("max_events {m} exceeds n = {n}")));
        }
    }
    if n > MAX_N {
        return Err(Error::usage(format!("n = {n} exceeds the limit n <= {MAX_N}")));
    }
    let work = enumeration_work(n, model, max_events);
    if work > WORK_BUDGET {
        return Err(Error::usage(format!(
            "{model} enumeration at n = {n}, max_events {} expands {work:.3e} \
             input/realization pairs, above the limit {WORK_BUDGET:.0e}; lower n or max_events",
            max_events.map_or("unbounded".to_string(), |m| m.to_string())
        )));
    }
    Ok(())
}

/// Exact `P(y | x)` by a prefix-alignment dynamic program.
pub fn likelihood(y: &BitSeq, x: &BitSeq, spec: &ChannelSpec) -> f64 {
    let (n, m) = (x.len(), y.len());
    if m < n || m > 2 * n {
        return 0.0;
    }
    let alpha = spec.alpha();
    // f[j] = P(x[..i] produces y[..j])
    let mut f = vec![0.0; m + 1];
    f[0] = 1.0;
    for i in 0..n {
        let mut g = vec![0.0; m + 1];
        let xi = x.get(i);
        // prefix lengths reachable after i positions lie in [i, 2i]
        for j in i..=(2 * i).min(m) {
            let p = f[j];
            if p == 0.0 {
                continue;
            }
            match spec.model() {
                ChannelModel::Simple => {
                    if j < m && y.get(j) == xi {
                        g[j + 1] += p * (1.0 - alpha);
                        if j + 1 < m {
                            g[j + 2] += p * alpha / 2.0;
                        }
                    }
                }
                ChannelModel::Gallager => {
                    if j < m && y.get(j) == xi {
                        g[j + 1] += p * (1.0 - alpha);
                    }
                    if j + 1 < m {
                        g[j + 2] += p * alpha / 4.0;
                    }
                }
            }
        }
        f = g;
    }
    f[m]
}

/// Output bits in a `u128` with a leading sentinel one; `1` is the empty
/// sequence.
#[inline]
fn key_len(key: u128) -> usize {
    127 - key.leading_zeros() as usize
}

fn key_to_bits(key: u128) -> BitSeq {
    let len = key_len(key);
    (0..len).map(|i| (key >> (len - 1 - i)) & 1 == 1).collect()
}

/// Run vector from the run-image end markers.
fn mask_to_runs(mask: u128) -> RunVector {
    let mut lengths = Vec::new();
    let mut prev = 0;
    let mut m = mask;
    while m != 0 {
        let end = m.trailing_zeros() as usize;
        lengths.push(end - prev);
        prev = end;
        m &= m - 1;
    }
    RunVector(lengths)
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    y: u128,
    mask: u128,
    mass: f64,
    /// `sum q log2 q` over the realizations merged into this cell.
    s: f64,
}

/// All `(y, k)` cells for one input, sorted by `(y, mask)`.
fn cells_for_input(x: u64, n: usize, spec: &ChannelSpec, max_events: usize) -> Vec<Cell> {
    let alpha = spec.alpha();
    let model = spec.model();
    let bit = |i: usize| (x >> i) & 1 == 1;
    let x_mass = 0.5f64.powi(n as i32);
    let mut states = vec![Cell {
        y: 1,
        mask: 0,
        mass: x_mass,
        s: -(n as f64) * x_mass,
    }];
    let mut branches: Vec<(f64, u128, u32)> = Vec::with_capacity(5);
    let mut next: Vec<Cell> = Vec::new();
    for i in 0..n {
        let xi = bit(i) as u128;
        let run_ends = i + 1 == n || bit(i + 1) != bit(i);
        branches.clear();
        if alpha < 1.0 {
            branches.push((1.0 - alpha, xi, 1));
        }
        if alpha > 0.0 {
            match model {
                ChannelModel::Simple => {
                    for b in 0..2u128 {
                        branches.push((alpha / 2.0, (xi << 1) | b, 2));
                    }
                }
                ChannelModel::Gallager => {
                    for b in 0..4u128 {
                        branches.push((alpha / 4.0, b, 2));
                    }
                }
            }
        }
        next.clear();
        for st in &states {
            let events = key_len(st.y) - i;
            for &(c, bits, width) in &branches {
                if width == 2 && events >= max_events {
                    continue;
                }
                let y = (st.y << width) | bits;
                let mask = if run_ends {
                    st.mask | (1u128 << key_len(y))
                } else {
                    st.mask
                };
                next.push(Cell {
                    y,
                    mask,
                    mass: c * st.mass,
                    s: c * st.s + c * c.log2() * st.mass,
                });
            }
        }
        next.sort_unstable_by_key(|c| (c.y, c.mask));
        states.clear();
        for c in next.drain(..) {
            match states.last_mut() {
                Some(last) if last.y == c.y && last.mask == c.mask => {
                    last.mass += c.mass;
                    last.s += c.s;
                }
                _ => states.push(c),
            }
        }
    }
    states
}

/// Output marginal accumulated in input order. Dense over sentinel keys
/// when the longest output is short, hashed otherwise.
enum OutputMarginal {
    Dense(Vec<f64>),
    Sparse(HashMap<u128, f64, FixedState>),
}

const DENSE_KEY_BITS: usize = 25;

impl OutputMarginal {
    fn new(n: usize, max_events: usize) -> Self {
        let key_bits = n + max_events + 1;
        if key_bits <= DENSE_KEY_BITS {
            OutputMarginal::Dense(vec![0.0; 1 << key_bits])
        } else {
            OutputMarginal::Sparse(HashMap::default())
        }
    }

    #[inline]
    fn add(&mut self, y: u128, m: f64) {
        match self {
            OutputMarginal::Dense(v) => v[y as usize] += m,
            OutputMarginal::Sparse(map) => *map.entry(y).or_default() += m,
        }
    }

    fn entropy(self) -> f64 {
        match self {
            OutputMarginal::Dense(v) => entropy_of_masses(v.into_iter().filter(|&m| m > 0.0)),
            OutputMarginal::Sparse(map) => {
                let mut masses: Vec<(u128, f64)> = map.into_iter().collect();
                masses.sort_unstable_by_key(|&(y, _)| y);
                entropy_of_masses(masses.into_iter().map(|(_, m)| m))
            }
        }
    }
}

/// Per-input entropy pieces.
#[derive(Default)]
struct InputSummary {
    mass: f64,
    h_xyk: CompensatedSum,
    h_xy: CompensatedSum,
    h_ab_given_xyk: CompensatedSum,
    y_marginal: Vec<(u128, f64)>,
}

fn summarize(cells: &[Cell]) -> InputSummary {
    let mut out = InputSummary::default();
    let mut i = 0;
    while i < cells.len() {
        let y = cells[i].y;
        let mut m_y = CompensatedSum::new();
        while i < cells.len() && cells[i].y == y {
            let c = cells[i];
            out.h_xyk.add(-xlog2x(c.mass));
            out.h_ab_given_xyk.add(-c.s + xlog2x(c.mass));
            m_y.add(c.mass);
            i += 1;
        }
        let m = m_y.value();
        out.h_xy.add(-xlog2x(m));
        out.y_marginal.push((y, m));
        out.mass += m;
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability of more than `max_events` events among `n` positions.
pub fn binomial_tail(n: usize, alpha: f64, max_events: usize) -> f64 {
    (max_events + 1..=n)
        .map(|k| binomial(n, k) * alpha.powi(k as i32) * (1.0 - alpha).powi((n - k) as i32))
        .collect::<CompensatedSum>()
        .value()
}

/// `H(A,B)` in closed form, `n (h(alpha) + w alpha)` with payload width `w`.
pub fn h_ab_closed_form(n: usize, spec: &ChannelSpec) -> f64 {
    let a = spec.alpha();
    n as f64 * (h2(a) + spec.model().payload_width() as f64 * a)
}

/// `H(A,B)` restricted to realizations with at most `max_events` events,
/// conditioned on the kept mass (equals the closed form when nothing is
/// discarded).
fn h_ab_truncated(n: usize, spec: &ChannelSpec, max_events: usize) -> f64 {
    if max_events >= n {
        return h_ab_closed_form(n, spec);
    }
    let a = spec.alpha();
    let w = spec.model().payload_width() as i32;
    let mut kept = CompensatedSum::new();
    let mut h = CompensatedSum::new();
    for k in 0..=max_events {
        let class = binomial(n, k) * a.powi(k as i32) * (1.0 - a).powi((n - k) as i32);
        if class == 0.0 {
            continue;
        }
        let each = a.powi(k as i32) * (1.0 - a).powi((n - k) as i32) * 0.5f64.powi(w * k as i32);
        kept.add(class);
        h.add(-class * each.log2());
    }
    let m = kept.value();
    h.value() + xlog2x(m)
}

/// Exact terms of the decomposition
/// `I(X;Y) = H(Y) - H(A,B) + H(A,B|X,Y,K) + H(K|X,Y)`.
///
/// For truncated enumerations every entropy is the functional
/// `-sum p log2 p` on the kept sub-probability mass and `h_ab` is the
/// conditional entropy of the kept realizations given the input, so the
/// identity still holds exactly; the gap to the untruncated values is what
/// `discarded_mass` budgets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub h_y: f64,
    pub h_ab: f64,
    pub h_ab_given_xyk: f64,
    pub h_k_given_xy: f64,
    pub mutual_info: f64,
    pub per_bit: f64,
    pub residual: f64,
    pub discarded_mass: f64,
}

fn effective_max(n: usize, max_events: Option<usize>) -> usize {
    max_events.unwrap_or(n).min(n)
}

/// Streams the enumeration over all `2^n` inputs and returns the exact
/// decomposition. Inputs are processed in parallel chunks and merged in input
/// order, so the result does not depend on the thread count.
pub fn exact_rate(
    n: usize,
    spec: &ChannelSpec,
    max_events: Option<usize>,
) -> Result<DecompositionReport> {
    check_limits(n, spec.model(), max_events)?;
    let cap = effective_max(n, max_events);
    const CHUNK: u64 = 64;
    let inputs = 1u64 << n;
    let mut y_marginal = OutputMarginal::new(n, cap);
    let mut h_x = CompensatedSum::new();
    let mut h_xy = CompensatedSum::new();
    let mut h_xyk = CompensatedSum::new();
    let mut h_ab_given_xyk = CompensatedSum::new();
    let mut start = 0u64;
    while start < inputs {
        let end = (start + CHUNK * rayon::current_num_threads() as u64).min(inputs);
        let summaries: Vec<InputSummary> = (start..end)
            .into_par_iter()
            .map(|x| summarize(&cells_for_input(x, n, spec, cap)))
            .collect();
        for s in summaries {
            h_x.add(-xlog2x(s.mass));
            h_xy.merge(&s.h_xy);
            h_xyk.merge(&s.h_xyk);
            h_ab_given_xyk.merge(&s.h_ab_given_xyk);
            for (y, m) in s.y_marginal {
                y_marginal.add(y, m);
            }
        }
        start = end;
    }
    let h_y = y_marginal.entropy();

    let (h_x, h_xy, h_xyk) = (h_x.value(), h_xy.value(), h_xyk.value());
    let mutual_info = h_y + h_x - h_xy;
    let h_k_given_xy = h_xyk - h_xy;
    let h_ab = h_ab_truncated(n, spec, cap);
    let h_ab_given_xyk = h_ab_given_xyk.value();
    let residual = mutual_info - (h_y - h_ab + h_ab_given_xyk + h_k_given_xy);
    Ok(DecompositionReport {
        h_y,
        h_ab,
        h_ab_given_xyk,
        h_k_given_xy,
        mutual_info,
        per_bit: mutual_info / n as f64,
        residual,
        discarded_mass: binomial_tail(n, spec.alpha(), cap),
    })
}

/// One `(x, y, k)` cell of a [`JointTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct JointEntry {
    pub x: BitSeq,
    pub y: BitSeq,
    pub k: RunVector,
    pub probability: f64,
}

/// Materialized joint law, sorted by `(x, y, k)`.
#[derive(Clone, Debug)]
pub struct JointTable {
    pub n: usize,
    pub spec: ChannelSpec,
    pub max_events: Option<usize>,
    pub discarded_mass: f64,
    pub entries: Vec<JointEntry>,
}

impl JointTable {
    pub fn total_mass(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.probability)
            .collect::<CompensatedSum>()
            .value()
    }

    /// `H(Y)` over the kept mass.
    pub fn h_y(&self) -> f64 {
        let mut by_y: HashMap<&BitSeq, f64, FixedState> = HashMap::default();
        for e in &self.entries {
            *by_y.entry(&e.y).or_default() += e.probability;
        }
        let mut masses: Vec<(&BitSeq, f64)> = by_y.into_iter().collect();
        masses.sort_unstable_by(|a, b| a.0.cmp(b.0));
        entropy_of_masses(masses.into_iter().map(|(_, m)| m))
    }

    /// `H(K | X, Y)` over the kept mass.
    pub fn h_k_given_xy(&self) -> f64 {
        let mut h = CompensatedSum::new();
        let mut i = 0;
        while i < self.entries.len() {
            let (x, y) = (&self.entries[i].x, &self.entries[i].y);
            let mut m = 0.0;
            let mut j = i;
            while j < self.entries.len() && &self.entries[j].x == x && &self.entries[j].y == y {
                m += self.entries[j].probability;
                j += 1;
            }
            for e in &self.entries[i..j] {
                h.add(-e.probability * (e.probability / m).log2());
            }
            i = j;
        }
        h.value()
    }
}

/// Materializes the joint law of `(X, Y, K)`.
pub fn build_joint(
    n: usize,
    spec: &ChannelSpec,
    max_events: Option<usize>,
) -> Result<JointTable> {
    check_limits(n, spec.model(), max_events)?;
    let cap = effective_max(n, max_events);
    let per_input: Vec<Vec<Cell>> = (0..1u64 << n)
        .into_par_iter()
        .map(|x| cells_for_input(x, n, spec, cap))
        .collect();
    let cells: usize = per_input.iter().map(Vec::len).sum();
    if cells > MAX_TABLE_CELLS {
        return Err(Error::usage(format!(
            "joint table would hold {cells} cells, above the limit {MAX_TABLE_CELLS}; \
             use exact_rate for streamed evaluation"
        )));
    }
    let mut entries = Vec::with_capacity(cells);
    for (x, list) in per_input.into_iter().enumerate() {
        let xs = BitSeq::from_u64(x as u64, n);
        for c in list {
            entries.push(JointEntry {
                x: xs.clone(),
                y: key_to_bits(c.y),
                k: mask_to_runs(c.mask),
                probability: c.mass,
            });
        }
    }
    entries.sort_by(|a, b| (&a.x, &a.y, &a.k.0).cmp(&(&b.x, &b.y, &b.k.0)));
    Ok(JointTable {
        n,
        spec: *spec,
        max_events,
        discarded_mass: binomial_tail(n, spec.alpha(), cap),
        entries,
    })
}

/// Output image of a run of `len` copies of `symbol` with one event at
/// `pos` carrying `payload`.
fn run_image(model: ChannelModel, symbol: bool, len: usize, pos: usize, payload: (bool, bool)) -> BitSeq {
    let mut out = BitSeq::with_capacity(len + 1);
    for i in 0..len {
        if i == pos {
            match model {
                ChannelModel::Simple => {
                    out.push(symbol);
                    out.push(payload.0);
                }
                ChannelModel::Gallager => {
                    out.push(payload.0);
                    out.push(payload.1);
                }
            }
        } else {
            out.push(symbol);
        }
    }
    out
}

fn payloads(model: ChannelModel) -> &'static [(bool, bool)] {
    match model {
        ChannelModel::Simple => &[(false, false), (true, false)],
        ChannelModel::Gallager => &[(false, false), (false, true), (true, false), (true, true)],
    }
}

/// Single-event placements `(position, payload)` inside a run of `len`
/// copies of `symbol` whose output image is `image`.
///
/// `forbid_first` / `forbid_last` exclude the run's edge positions; they are
/// set when the neighbouring run also carries an event, since an event on a
/// shared extended-run bit would then be reversed by the modified process.
pub fn run_ambiguity(
    model: ChannelModel,
    symbol: bool,
    len: usize,
    image: &BitSeq,
    forbid_first: bool,
    forbid_last: bool,
) -> Vec<(usize, (bool, bool))> {
    let mut out = Vec::new();
    if image.len() != len + 1 {
        return out;
    }
    for pos in 0..len {
        if (pos == 0 && forbid_first) || (pos + 1 == len && forbid_last) {
            continue;
        }
        for &payload in payloads(model) {
            if &run_image(model, symbol, len, pos, payload) == image {
                out.push((pos, payload));
            }
        }
    }
    out
}

/// Modified-process realizations consistent with one `(x, y, k)` triple.
#[derive(Clone, Debug)]
pub struct Ambiguity {
    model: ChannelModel,
    n: usize,
    /// Absolute `(position, payload)` options for every run with an event.
    options: Vec<Vec<(usize, (bool, bool))>>,
}

impl Ambiguity {
    /// Number of consistent realizations.
    pub fn count(&self) -> u128 {
        self.options.iter().map(|o| o.len() as u128).product()
    }

    /// Conditional entropy of the realization given the triple; the
    /// realizations share the same event count, so the law is uniform.
    pub fn entropy(&self) -> f64 {
        self.options.iter().map(|o| (o.len() as f64).log2()).sum()
    }

    /// Every consistent realization with its conditional probability.
    pub fn realizations(&self) -> Vec<(InsertionRealization, f64)> {
        let p = 1.0 / self.count() as f64;
        let mut out = Vec::new();
        let mut choice = vec![0usize; self.options.len()];
        loop {
            let events: Vec<_> = choice
                .iter()
                .zip(&self.options)
                .map(|(&c, o)| o[c])
                .collect();
            out.push((
                InsertionRealization::from_events(self.model, self.n, &events)
                    .expect("positions lie inside the input"),
                p,
            ));
            let mut d = 0;
            loop {
                if d == choice.len() {
                    return out;
                }
                choice[d] += 1;
                if choice[d] < self.options[d].len() {
                    break;
                }
                choice[d] = 0;
                d += 1;
            }
        }
    }
}

/// Counts the modified-process realizations (at most one event per run, no
/// extended run with two events) that map `x` to `(y, k)`.
pub fn ambiguity_count(
    x: &BitSeq,
    y: &BitSeq,
    k: &RunVector,
    spec: &ChannelSpec,
) -> Result<Ambiguity> {
    let runs = runs_of(x);
    if k.lengths().len() != runs.len() || k.total() != y.len() {
        return Err(Error::domain(format!(
            "run vector {k} does not match input {x} and output {y}"
        )));
    }
    let extra: Vec<usize> = k
        .lengths()
        .iter()
        .zip(&runs.run_lengths)
        .map(|(&kj, &lj)| kj.checked_sub(lj).filter(|&e| e <= 1))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::domain(format!("run vector {k} needs more than one event in a run")))?;
    let starts = runs.starts();
    let offsets = k.offsets();
    let mut options = Vec::new();
    for j in 0..runs.len() {
        let len = runs.run_lengths[j];
        let image: BitSeq = (offsets[j]..offsets[j] + k.lengths()[j]).map(|i| y.get(i)).collect();
        let symbol = runs.symbol(j);
        if extra[j] == 0 {
            if image.iter().any(|b| b != symbol) {
                return Err(Error::domain(format!("run {j} of {x} is not reproduced in {y}")));
            }
            continue;
        }
        let forbid_first = j > 0 && extra[j - 1] == 1;
        let forbid_last = j + 1 < runs.len() && extra[j + 1] == 1;
        let local = run_ambiguity(spec.model(), symbol, len, &image, forbid_first, forbid_last);
        if local.is_empty() {
            return Err(Error::domain(format!(
                "no single event in run {j} of {x} produces {image}"
            )));
        }
        options.push(local.into_iter().map(|(p, v)| (starts[j] + p, v)).collect());
    }
    Ok(Ambiguity {
        model: spec.model(),
        n: x.len(),
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_realization, enumerate_realizations, modify_realization};
    use crate::entropy::entropy_of_distribution;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn bs(s: &str) -> BitSeq {
        s.parse().unwrap()
    }

    fn simple(a: f64) -> ChannelSpec {
        ChannelSpec::simple(a).unwrap()
    }

    fn gallager(a: f64) -> ChannelSpec {
        ChannelSpec::gallager(a).unwrap()
    }

    /// `P(y|x)` by summing over every realization.
    fn brute_likelihood(y: &BitSeq, x: &BitSeq, spec: &ChannelSpec) -> f64 {
        enumerate_realizations(spec, x.len(), None)
            .unwrap()
            .filter(|(r, _)| &apply_realization(x, r).unwrap().0 == y)
            .map(|(_, p)| p)
            .sum()
    }

    /// Joint law of `(x, y, k)` plus `sum q log q` per cell, by brute force.
    fn brute_cells(n: usize, spec: &ChannelSpec) -> BTreeMap<(BitSeq, BitSeq, Vec<usize>), (f64, f64)> {
        let mut cells = BTreeMap::new();
        let px = 0.5f64.powi(n as i32);
        for xv in 0..1u64 << n {
            let x = BitSeq::from_u64(xv, n);
            for (r, p) in enumerate_realizations(spec, n, None).unwrap() {
                let (y, k) = apply_realization(&x, &r).unwrap();
                let q = px * p;
                let e = cells.entry((x.clone(), y, k.0)).or_insert((0.0, 0.0));
                e.0 += q;
                e.1 += xlog2x(q);
            }
        }
        cells
    }

    /// Decomposition computed from the brute-force table.
    fn brute_report(n: usize, spec: &ChannelSpec) -> (f64, f64, f64, f64) {
        let cells = brute_cells(n, spec);
        let mut by_y: BTreeMap<BitSeq, f64> = BTreeMap::new();
        let mut by_xy: BTreeMap<(BitSeq, BitSeq), f64> = BTreeMap::new();
        let mut h_ab_xyk = 0.0;
        let mut h_xyk = 0.0;
        for ((x, y, _), &(m, s)) in &cells {
            *by_y.entry(y.clone()).or_default() += m;
            *by_xy.entry((x.clone(), y.clone())).or_default() += m;
            h_ab_xyk += -s + xlog2x(m);
            h_xyk -= xlog2x(m);
        }
        let h_y = entropy_of_masses(by_y.values().copied());
        let h_xy = entropy_of_masses(by_xy.values().copied());
        let mi = h_y + n as f64 - h_xy;
        (h_y, mi, h_ab_xyk, h_xyk - h_xy)
    }

    #[test]
    fn likelihood_single_bit() {
        let x = bs("0");
        let s = simple(0.3);
        assert!((likelihood(&bs("0"), &x, &s) - 0.7).abs() < 1e-15);
        assert!((likelihood(&bs("00"), &x, &s) - 0.15).abs() < 1e-15);
        assert!((likelihood(&bs("01"), &x, &s) - 0.15).abs() < 1e-15);
        assert_eq!(likelihood(&bs("1"), &x, &s), 0.0);
        let g = gallager(0.3);
        assert!((likelihood(&bs("0"), &x, &g) - 0.7).abs() < 1e-15);
        for y in ["00", "01", "10", "11"] {
            assert!((likelihood(&bs(y), &x, &g) - 0.075).abs() < 1e-15);
        }
        assert_eq!(likelihood(&bs("000"), &x, &g), 0.0);
    }

    #[test]
    fn likelihood_matches_brute_force() {
        for spec in [simple(0.05), simple(0.3), gallager(0.05), gallager(0.3)] {
            for n in 1..=4usize {
                for xv in 0..1u64 << n {
                    let x = BitSeq::from_u64(xv, n);
                    let mut total = 0.0;
                    for m in n..=2 * n {
                        for yv in 0..1u64 << m {
                            let y = BitSeq::from_u64(yv, m);
                            let dp = likelihood(&y, &x, &spec);
                            let bf = brute_likelihood(&y, &x, &spec);
                            assert!((dp - bf).abs() < 1e-14, "{spec:?} x={x} y={y}");
                            total += dp;
                        }
                    }
                    assert!((total - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn likelihood_normalizes_up_to_six() {
        for spec in [simple(0.05), simple(0.3), gallager(0.05), gallager(0.3)] {
            for xs in ["000000", "010110", "111001", "01010"] {
                let x = bs(xs);
                let n = x.len();
                let total: f64 = (n..=2 * n)
                    .flat_map(|m| (0..1u64 << m).map(move |v| BitSeq::from_u64(v, m)))
                    .map(|y| likelihood(&y, &x, &spec))
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_table_single_bit() {
        let a = 0.2;
        let t = build_joint(1, &simple(a), None).unwrap();
        assert_eq!(t.entries.len(), 6);
        assert_eq!(t.discarded_mass, 0.0);
        let find = |x: &str, y: &str| {
            t.entries
                .iter()
                .find(|e| e.x == bs(x) && e.y == bs(y))
                .map(|e| (e.probability, e.k.clone()))
                .unwrap()
        };
        assert!((find("0", "0").0 - (1.0 - a) / 2.0).abs() < 1e-15);
        assert!((find("1", "1").0 - (1.0 - a) / 2.0).abs() < 1e-15);
        for (x, y) in [("0", "00"), ("0", "01"), ("1", "10"), ("1", "11")] {
            let (p, k) = find(x, y);
            assert!((p - a / 4.0).abs() < 1e-15);
            assert_eq!(k, RunVector(vec![2]));
        }
    }

    #[test]
    fn joint_table_noiseless() {
        for spec in [simple(0.0), gallager(0.0)] {
            let t = build_joint(3, &spec, None).unwrap();
            assert_eq!(t.entries.len(), 8);
            assert!(t.entries.iter().all(|e| e.probability == 0.125 && e.x == e.y));
        }
    }

    #[test]
    fn joint_table_matches_brute_force() {
        for spec in [simple(0.2), gallager(0.3)] {
            for n in 1..=4 {
                let t = build_joint(n, &spec, None).unwrap();
                let brute = brute_cells(n, &spec);
                assert_eq!(t.entries.len(), brute.len());
                for e in &t.entries {
                    let (m, _) = brute[&(e.x.clone(), e.y.clone(), e.k.0.clone())];
                    assert!((e.probability - m).abs() < 1e-15);
                    assert!(e.y.len() >= n && e.y.len() <= 2 * n);
                }
                assert!((t.total_mass() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncated_table_discards_binomial_tail() {
        let spec = simple(0.01);
        let t = build_joint(8, &spec, Some(2)).unwrap();
        let closed = 1.0
            - (0..=2)
                .map(|k| binomial(8, k) * 0.01f64.powi(k as i32) * 0.99f64.powi(8 - k as i32))
                .sum::<f64>();
        assert!((t.discarded_mass - closed).abs() < 1e-15);
        assert!((t.discarded_mass - 5.4e-5).abs() < 1e-6);
        assert!((t.total_mass() + t.discarded_mass - 1.0).abs() < 1e-12);
        assert!(t.entries.iter().all(|e| e.y.len() <= 10));
    }

    #[test]
    fn exact_rate_matches_brute_force_decomposition() {
        for spec in [simple(0.2), gallager(0.2), simple(0.5)] {
            for n in 1..=4 {
                let r = exact_rate(n, &spec, None).unwrap();
                let (h_y, mi, h_ab_xyk, h_k) = brute_report(n, &spec);
                assert!((r.h_y - h_y).abs() < 1e-12);
                assert!((r.mutual_info - mi).abs() < 1e-12);
                assert!((r.h_ab_given_xyk - h_ab_xyk).abs() < 1e-12);
                assert!((r.h_k_given_xy - h_k).abs() < 1e-12);
                let t = build_joint(n, &spec, None).unwrap();
                assert!((t.h_y() - h_y).abs() < 1e-12);
                assert!((t.h_k_given_xy() - h_k).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn h_ab_closed_form_matches_enumeration() {
        for spec in [simple(0.05), simple(0.5), gallager(0.2)] {
            for n in 1..=6 {
                let h = entropy_of_distribution(
                    enumerate_realizations(&spec, n, None).unwrap().map(|(_, p)| p),
                )
                .unwrap();
                assert!((h - h_ab_closed_form(n, &spec)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_bit_rates() {
        for a in [0.1, 0.3, 0.5, 0.9] {
            let r = exact_rate(1, &simple(a), None).unwrap();
            assert!((r.per_bit - 1.0).abs() < 1e-12);
            let g = exact_rate(1, &gallager(a), None).unwrap();
            assert!((g.per_bit - (1.0 - a)).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_rate_is_one() {
        for n in [1, 4, 7] {
            for spec in [simple(0.0), gallager(0.0)] {
                let r = exact_rate(n, &spec, None).unwrap();
                assert!((r.per_bit - 1.0).abs() < 1e-12);
                assert_eq!(r.h_ab, 0.0);
                assert!(r.h_ab_given_xyk.abs() < 1e-12);
                assert!(r.h_k_given_xy.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_residual_and_processing_bound() {
        for spec in [simple(0.05), gallager(0.5)] {
            for n in 2..=6 {
                let r = exact_rate(n, &spec, None).unwrap();
                assert!(r.residual.abs() < 1e-9);
                assert!(r.per_bit < 1.0);
            }
        }
    }

    #[test]
    fn truncated_rate_is_close_and_identity_holds() {
        let spec = simple(0.01);
        let full = exact_rate(6, &spec, None).unwrap();
        for m in 1..=3 {
            let t = exact_rate(6, &spec, Some(m)).unwrap();
            assert!(t.residual.abs() < 1e-9);
            assert!((t.per_bit - full.per_bit).abs() <= t.discarded_mass * 13.0);
        }
        let same = exact_rate(6, &spec, Some(6)).unwrap();
        assert_eq!(same.discarded_mass, 0.0);
        assert!((same.per_bit - full.per_bit).abs() < 1e-15);
    }

    #[test]
    fn limits_are_enforced() {
        assert!(matches!(exact_rate(40, &simple(0.1), None), Err(Error::Usage(_))));
        assert!(matches!(exact_rate(11, &gallager(0.1), None), Err(Error::Usage(_))));
        assert!(matches!(exact_rate(21, &simple(0.1), Some(1)), Err(Error::Usage(_))));
        assert!(matches!(exact_rate(16, &gallager(0.1), Some(3)), Err(Error::Usage(_))));
        assert!(matches!(exact_rate(3, &simple(0.1), Some(4)), Err(Error::Usage(_))));
        assert!(matches!(exact_rate(0, &simple(0.1), None), Err(Error::Usage(_))));
        assert!(check_limits(11, ChannelModel::Simple, None).is_ok());
        assert!(check_limits(12, ChannelModel::Simple, None).is_err());
        assert!(check_limits(8, ChannelModel::Gallager, None).is_ok());
        assert!(check_limits(9, ChannelModel::Gallager, None).is_err());
        assert!(check_limits(19, ChannelModel::Simple, Some(2)).is_ok());
        assert!(check_limits(17, ChannelModel::Gallager, Some(2)).is_ok());
        assert!(check_limits(14, ChannelModel::Simple, Some(3)).is_ok());
    }

    #[test]
    fn ambiguity_examples() {
        let spec = simple(0.1);
        let x = bs("0000");
        let same = ambiguity_count(&x, &bs("00000"), &RunVector(vec![5]), &spec).unwrap();
        assert_eq!(same.count(), 4);
        assert!((same.entropy() - 2.0).abs() < 1e-15);
        let opposite = ambiguity_count(&x, &bs("00100"), &RunVector(vec![5]), &spec).unwrap();
        assert_eq!(opposite.count(), 1);
        assert_eq!(opposite.entropy(), 0.0);

        let g = gallager(0.1);
        let amb = ambiguity_count(&bs("000"), &bs("0100"), &RunVector(vec![4]), &g).unwrap();
        assert_eq!(amb.count(), 2);
        let events: Vec<_> = amb.realizations().iter().map(|(r, _)| r.events()).collect();
        assert!(events.contains(&vec![(0, (false, true))]));
        assert!(events.contains(&vec![(1, (true, false))]));

        assert!(ambiguity_count(&x, &bs("000000"), &RunVector(vec![6]), &spec).is_err());
        assert!(ambiguity_count(&x, &bs("00000"), &RunVector(vec![4, 1]), &spec).is_err());
        assert!(ambiguity_count(&x, &bs("11111"), &RunVector(vec![5]), &spec).is_err());
    }

    #[test]
    fn ambiguity_respects_neighbouring_events() {
        // runs 00|11; both carry an event, so the shared boundary bits are
        // excluded from the alternatives
        let spec = simple(0.1);
        let x = bs("0011");
        let y = bs("000111");
        let amb = ambiguity_count(&x, &y, &RunVector(vec![3, 3]), &spec).unwrap();
        assert_eq!(amb.count(), 1);
        let (r, p) = &amb.realizations()[0];
        assert_eq!(*p, 1.0);
        assert_eq!(r.events(), vec![(0, (false, false)), (3, (true, false))]);
    }

    /// Brute-force count of modified-process realizations for the triple.
    fn brute_ambiguity(x: &BitSeq, y: &BitSeq, k: &RunVector, spec: &ChannelSpec) -> usize {
        enumerate_realizations(spec, x.len(), None)
            .unwrap()
            .filter(|(r, _)| {
                let (yy, kk) = apply_realization(x, r).unwrap();
                &yy == y && &kk == k && &modify_realization(x, r).unwrap().0 == r
            })
            .count()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn ambiguity_matches_brute_force(
            xv in 0u64..64, seed in 0u64..1000, gallager_model in any::<bool>()
        ) {
            use rand::SeedableRng;
            let n = 6;
            let x = BitSeq::from_u64(xv, n);
            let spec = if gallager_model { gallager(0.3) } else { simple(0.3) };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let raw = crate::channels::sample_realization(&spec, n, &mut rng).unwrap();
            let (r, _) = modify_realization(&x, &raw).unwrap();
            let (y, k) = apply_realization(&x, &r).unwrap();
            let amb = ambiguity_count(&x, &y, &k, &spec).unwrap();
            prop_assert_eq!(amb.count() as usize, brute_ambiguity(&x, &y, &k, &spec));
            prop_assert!(amb.realizations().iter().any(|(rr, _)| rr == &r));
        }
    }
}
