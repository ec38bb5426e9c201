//! Monte Carlo estimators for run-level quantities of long blocks.
//!
//! Every estimator takes a [`MonteCarlo`] configuration and is deterministic
//! given `(seed, trials)`; the worker count only changes wall-clock time.
//! Blocks are i.i.d. Bernoulli(1/2) inputs. Unless an estimator says
//! otherwise, rates are normalized per counted input bit and per unit of
//! `alpha`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::{runs_of, BitSeq, RunDecomposition};
use crate::channels::{
    apply_with_runs, modify_with_runs, perturb_with_runs, sample_realization, InsertionRealization,
};
use crate::entropy::h2;
use crate::error::{Error, Result};
use crate::model::{ChannelModel, ChannelSpec};
use crate::montecarlo::{ratio_estimate, segment_of, MonteCarlo, RateEstimate};
use crate::oracle::run_ambiguity;
use crate::series;

/// Law of the run length `L0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunLaw {
    /// `P(L0 = l) = 2^{-l}`: the length of a run picked run by run.
    PerRun,
    /// `P(L0 = l) = l 2^{-l-1}`: the run covering a fixed position.
    LengthBiased,
}

impl RunLaw {
    pub fn pmf(self, l: usize) -> f64 {
        if l == 0 {
            return 0.0;
        }
        match self {
            RunLaw::PerRun => 0.5f64.powi(l as i32),
            RunLaw::LengthBiased => l as f64 * 0.5f64.powi(l as i32 + 1),
        }
    }

    /// `E[f(L0)]` for `f` of at most polynomial growth.
    pub fn expect(self, f: impl Fn(usize) -> f64) -> f64 {
        (1..=1100).map(|l| self.pmf(l) * f(l)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> usize {
        match self {
            RunLaw::PerRun => 1 + geometric_half(rng),
            RunLaw::LengthBiased => 1 + geometric_half(rng) + geometric_half(rng),
        }
    }
}

/// `G` with `P(G = g) = 2^{-g-1}`, `g >= 0`.
fn geometric_half<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let mut g = 0;
    loop {
        let w: u64 = rng.random();
        if w != 0 {
            return g + w.trailing_zeros() as usize;
        }
        g += 64;
    }
}

/// Which runs of a simulated block enter the tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePolicy {
    /// Drop the first and last run of every block.
    #[default]
    Exclude,
    /// Keep every run; the normalizer is the full block length.
    Include,
}

/// Runs `[first, last)` and positions `[lo, hi)` counted under a policy.
fn counted_region(runs: &RunDecomposition, starts: &[usize], n: usize, edges: EdgePolicy) -> (usize, usize, usize, usize) {
    match edges {
        EdgePolicy::Include => (0, runs.len(), 0, n),
        EdgePolicy::Exclude if runs.len() >= 3 => (1, runs.len() - 1, starts[1], starts[runs.len() - 1]),
        EdgePolicy::Exclude => (0, 0, 0, 0),
    }
}

/// Boundaries `b_0 <= ... <= b_s` splitting `[lo, hi)` into `s` segments
/// consistently with [`segment_of`].
fn segment_bounds(lo: usize, hi: usize, segments: usize) -> Vec<usize> {
    let len = hi - lo;
    (0..=segments)
        .map(|k| lo + (k * len).div_ceil(segments.max(1)).min(len))
        .collect()
}

fn check_block(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::usage(format!("block length n = {n} must be at least {min}")));
    }
    Ok(())
}

/// Moments of `L0` with standard errors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RunStats {
    pub law: RunLaw,
    pub samples: usize,
    pub e_log_l0: RateEstimate,
    pub e_l0: RateEstimate,
    pub e_l0_log_l0: RateEstimate,
}

/// Draws `samples` run lengths under `law`, spread evenly over the trials.
pub fn estimate_run_stats(law: RunLaw, samples: usize, mc: &MonteCarlo) -> Result<RunStats> {
    if samples == 0 {
        return Err(Error::usage("samples must be at least 1"));
    }
    let segs = mc.segments_per_trial();
    let per_trial = mc.run(|t, rng| {
        let count = samples / mc.trials + usize::from(t < samples % mc.trials);
        let mut out = vec![[0.0f64; 4]; segs];
        for i in 0..count {
            let l = law.sample(rng) as f64;
            let s = &mut out[segment_of(i, count, segs)];
            s[0] += l.log2();
            s[1] += l;
            s[2] += l * l.log2();
            s[3] += 1.0;
        }
        out
    })?;
    let all: Vec<[f64; 4]> = per_trial.into_iter().flatten().collect();
    let moment = |k: usize| {
        let parts: Vec<(f64, f64)> = all.iter().map(|s| (s[k], s[3])).collect();
        ratio_estimate(&parts, mc.trials, mc.seed)
    };
    Ok(RunStats {
        law,
        samples,
        e_log_l0: moment(0),
        e_l0: moment(1),
        e_l0_log_l0: moment(2),
    })
}

/// One outcome of the per-position `(z, v)` law.
#[derive(Clone, Debug, Serialize)]
pub struct ZvOutcome {
    /// `z` followed by the payload bits, e.g. `"110"` for Gallager.
    pub label: String,
    pub mass: RateEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZvPmf {
    pub model: ChannelModel,
    pub alpha: f64,
    pub n: usize,
    pub positions: u64,
    pub outcomes: Vec<ZvOutcome>,
    /// `P(z = 1)`.
    pub p_z1: RateEstimate,
    /// `P(z = 1, v_1 = 0) - P(z = 1, v_1 = 1)`.
    pub z1_balance: RateEstimate,
    /// `alpha (1 - E[(1 - alpha)^{L0 + 1}])` under the length-biased law.
    pub predicted_p_z1: f64,
}

/// Predicted `P(z = 1)`: a flagged bit is reversed when one of the other
/// `L0 + 1` bits of its extended run is flagged too.
pub fn predicted_p_z1(alpha: f64) -> f64 {
    let q = 1.0 - alpha;
    alpha * (1.0 - RunLaw::LengthBiased.expect(|l| q.powi(l as i32 + 1)))
}

/// Empirical law of `(z, v)` per position after the modified process.
pub fn estimate_zv_pmf(spec: &ChannelSpec, n: usize, mc: &MonteCarlo) -> Result<ZvPmf> {
    check_block(n, 1000)?;
    let model = spec.model();
    let outcome_count = 1 + (1 << model.payload_width());
    let segs = mc.segments_per_trial();
    let per_trial = mc.run(|_, rng| {
        let x = BitSeq::random(n, rng);
        let r = sample_realization(spec, n, rng).expect("n >= 1");
        let runs = runs_of(&x);
        let starts = runs.starts();
        let (_, _, lo, hi) = counted_region(&runs, &starts, n, EdgePolicy::Exclude);
        let (_, delta) = modify_with_runs(&runs, &r);
        let bounds = segment_bounds(lo, hi, segs);
        // counts[s][0] = positions, counts[s][1 + o] = reversed events with payload o
        let mut counts = vec![vec![0u64; outcome_count]; segs];
        for s in 0..segs {
            counts[s][0] = (bounds[s + 1] - bounds[s]) as u64;
        }
        for p in delta.z.ones().filter(|&p| p >= lo && p < hi) {
            let (a, b) = delta.v.at(p);
            let o = match model {
                ChannelModel::Simple => a as usize,
                ChannelModel::Gallager => 2 * a as usize + b as usize,
            };
            counts[segment_of(p - lo, hi - lo, segs)][1 + o] += 1;
        }
        counts
    })?;
    let all: Vec<Vec<u64>> = per_trial.into_iter().flatten().collect();
    let positions: u64 = all.iter().map(|c| c[0]).sum();
    let estimate = |f: &dyn Fn(&[u64]) -> f64| {
        let parts: Vec<(f64, f64)> = all.iter().map(|c| (f(c), c[0] as f64)).collect();
        ratio_estimate(&parts, mc.trials, mc.seed)
    };
    let width = model.payload_width();
    let mut outcomes = vec![ZvOutcome {
        label: "0".repeat(1 + width),
        mass: estimate(&|c| (c[0] - c[1..].iter().sum::<u64>()) as f64),
    }];
    for o in 0..outcome_count - 1 {
        let label = match model {
            ChannelModel::Simple => format!("1{o}"),
            ChannelModel::Gallager => format!("1{}{}", o >> 1, o & 1),
        };
        outcomes.push(ZvOutcome {
            label,
            mass: estimate(&|c| c[1 + o] as f64),
        });
    }
    let half = (outcome_count - 1) / 2;
    Ok(ZvPmf {
        model,
        alpha: spec.alpha(),
        n,
        positions,
        outcomes,
        p_z1: estimate(&|c| c[1..].iter().sum::<u64>() as f64),
        z1_balance: estimate(&|c| {
            c[1..1 + half].iter().sum::<u64>() as f64 - c[1 + half..].iter().sum::<u64>() as f64
        }),
        predicted_p_z1: predicted_p_z1(spec.alpha()),
    })
}

/// Case counts and accumulated ambiguity for consecutive run pairs.
///
/// Simple cases: 1 no ambiguity, 2 the first run's image is short (an
/// opposite bit inside it), 3 the first image is long, 4 the extra bit sits
/// on the boundary and may belong to either run. Gallager cases V1..V4 are
/// indexed the same way: V2 short first image, V3 first image one longer,
/// V4 second image one longer. `replacement` counts events per payload
/// relative to the run symbol `s`: `[none, ss, s's', ss', s's]` (Gallager
/// only).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CaseTally {
    pub cases: [u64; 4],
    pub replacement: [u64; 5],
    pub contribution: f64,
    pub pairs: u64,
    pub bits: u64,
    pub events: u64,
}

impl CaseTally {
    fn merge(&mut self, other: &CaseTally) {
        for i in 0..4 {
            self.cases[i] += other.cases[i];
        }
        for i in 0..5 {
            self.replacement[i] += other.replacement[i];
        }
        self.contribution += other.contribution;
        self.pairs += other.pairs;
        self.bits += other.bits;
        self.events += other.events;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HkReport {
    pub model: ChannelModel,
    pub alpha: f64,
    pub n: usize,
    pub edges: EdgePolicy,
    /// Contribution per classified run pair per unit `alpha`.
    pub per_pair: RateEstimate,
    /// Contribution per counted input bit per unit `alpha`.
    pub per_bit: RateEstimate,
    pub tally: CaseTally,
    /// `S2 / 2` (Simple) or `S3 / 4` (Gallager).
    pub reference_per_pair: f64,
}

/// Length of the stretch of `y` starting at `from` equal to `bit`.
fn stretch(y: &BitSeq, from: usize, bit: bool) -> usize {
    (from..y.len()).take_while(|&i| y.get(i) == bit).count()
}

/// Number of sorted `flagged` positions inside `[lo, hi)`.
fn count_in(flagged: &[usize], lo: usize, hi: usize) -> usize {
    flagged.partition_point(|&p| p < hi) - flagged.partition_point(|&p| p < lo)
}

/// Classifies run pair `(j, j+1)`; returns the case index (0-based) and its
/// ambiguity in bits.
#[allow(clippy::too_many_arguments)]
fn classify_pair(
    model: ChannelModel,
    runs: &RunDecomposition,
    starts: &[usize],
    offsets: &[usize],
    y: &BitSeq,
    flagged: &[usize],
    n: usize,
    j: usize,
) -> (usize, f64) {
    let s = runs.symbol(j);
    let (a, b) = (runs.run_lengths[j], runs.run_lengths[j + 1]);
    let first = stretch(y, offsets[j], s);
    let second = stretch(y, offsets[j] + first, !s);
    let pair_end = starts.get(j + 2).copied().unwrap_or(n);
    let carries = count_in(flagged, starts[j], pair_end) > 0;
    match model {
        ChannelModel::Simple => {
            if first < a {
                (1, 0.0)
            } else if first > a {
                (2, 0.0)
            } else if second == b + 1 && carries {
                (3, h2(1.0 / (b as f64 + 1.0)))
            } else {
                (0, 0.0)
            }
        }
        ChannelModel::Gallager => {
            let t = h2((a as f64 + 1.0) / (a + b + 2) as f64);
            if first < a {
                (1, 0.0)
            } else if first == a + 1 && second == b && carries {
                (2, t)
            } else if first == a && second == b + 1 && carries {
                (3, t)
            } else {
                (0, 0.0)
            }
        }
    }
}

/// Replacement type index of an event relative to the run symbol.
fn replacement_type(symbol: bool, payload: (bool, bool)) -> usize {
    match (payload.0 == symbol, payload.1 == symbol) {
        (true, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
        (false, true) => 4,
    }
}

/// Accumulates the run-pair ambiguity of the perturbed process.
pub fn estimate_hk_contribution(
    spec: &ChannelSpec,
    n: usize,
    mc: &MonteCarlo,
    edges: EdgePolicy,
) -> Result<HkReport> {
    check_block(n, 2)?;
    let model = spec.model();
    let alpha = spec.alpha();
    let segs = mc.segments_per_trial();
    let per_trial = mc.run(|_, rng| {
        let x = BitSeq::random(n, rng);
        let r = sample_realization(spec, n, rng).expect("n >= 1");
        hk_trial(model, &x, &r, edges, segs)
    })?;
    let mut tally = CaseTally::default();
    let mut pair_parts = Vec::with_capacity(mc.trials * segs);
    let mut bit_parts = Vec::with_capacity(mc.trials * segs);
    for trial in &per_trial {
        for seg in trial {
            tally.merge(seg);
            pair_parts.push((seg.contribution, seg.pairs as f64 * alpha));
            bit_parts.push((seg.contribution, seg.bits as f64 * alpha));
        }
    }
    let reference_per_pair = match model {
        ChannelModel::Simple => series::sum_s2(1e-14)?.value / 2.0,
        ChannelModel::Gallager => series::sum_s3(1e-14)?.value / 4.0,
    };
    Ok(HkReport {
        model,
        alpha,
        n,
        edges,
        per_pair: ratio_estimate(&pair_parts, mc.trials, mc.seed),
        per_bit: ratio_estimate(&bit_parts, mc.trials, mc.seed),
        tally,
        reference_per_pair,
    })
}

/// Per-segment tallies for one block.
fn hk_trial(
    model: ChannelModel,
    x: &BitSeq,
    r: &InsertionRealization,
    edges: EdgePolicy,
    segs: usize,
) -> Vec<CaseTally> {
    let n = x.len();
    let runs = runs_of(x);
    let starts = runs.starts();
    let (first_run, end_run, lo, hi) = counted_region(&runs, &starts, n, edges);
    let mut out = vec![CaseTally::default(); segs];
    if end_run < first_run + 2 {
        return out;
    }
    let bounds = segment_bounds(lo, hi, segs);
    // pairs (j, j+1) with both runs counted
    let (pair_lo, pair_hi) = (first_run, end_run - 1);
    for (s, seg) in out.iter_mut().enumerate() {
        seg.bits = (bounds[s + 1] - bounds[s]) as u64;
        let a = starts.partition_point(|&p| p < bounds[s]).max(pair_lo);
        let b = starts.partition_point(|&p| p < bounds[s + 1]).min(pair_hi);
        seg.pairs = b.saturating_sub(a) as u64;
        seg.cases[0] = seg.pairs;
    }

    let (check, _) = perturb_with_runs(&runs, r);
    let (y, k) = apply_with_runs(x, &runs, &check);
    let mut offsets = Vec::with_capacity(k.0.len());
    let mut acc = 0;
    for &kj in &k.0 {
        offsets.push(acc);
        acc += kj;
    }
    let flagged: Vec<usize> = check.flags().ones().collect();
    let mut pairs: Vec<usize> = Vec::new();
    for &p in &flagged {
        let j = starts.partition_point(|&s| s <= p) - 1;
        if p >= lo && p < hi {
            let seg = &mut out[segment_of(p - lo, hi - lo, segs)];
            seg.events += 1;
            if model == ChannelModel::Gallager {
                seg.replacement[replacement_type(runs.symbol(j), check.payload().at(p))] += 1;
            }
        }
        pairs.extend([j.wrapping_sub(1), j]);
    }
    pairs.sort_unstable();
    pairs.dedup();
    for j in pairs.into_iter().filter(|&j| j >= pair_lo && j < pair_hi) {
        let (case, t) = classify_pair(model, &runs, &starts, &offsets, &y, &flagged, n, j);
        let seg = &mut out[segment_of(starts[j] - lo, hi - lo, segs)];
        seg.cases[0] -= 1;
        seg.cases[case] += 1;
        seg.contribution += t;
    }
    if model == ChannelModel::Gallager {
        for seg in &mut out {
            seg.replacement[0] = seg.bits - seg.events;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct AbReport {
    pub model: ChannelModel,
    pub alpha: f64,
    pub n: usize,
    pub edges: EdgePolicy,
    /// `log2` of the exact number of consistent placements per surviving
    /// event, per counted bit per unit `alpha`.
    pub exact: RateEstimate,
    /// Same-polarity payload contributes `log2 l`; for Gallager the `s's`
    /// payload away from the run start also contributes one bit.
    pub ledger: RateEstimate,
    /// Exact per-event expectation under the length-biased law.
    pub prediction_exact: f64,
    /// Expectation of the ledger variant under the length-biased law.
    pub prediction_ledger: f64,
    /// Ledger formula evaluated with `E[L0]` and `E[log L0]` under each law.
    pub reference_per_run: f64,
    pub reference_length_biased: f64,
    pub events: u64,
}

/// Ledger formula `w1 E[log L0] + w2 (E[L0] - 1) / E[L0]` under `law`.
pub fn ab_reference(model: ChannelModel, law: RunLaw) -> f64 {
    let e_log = law.expect(|l| (l as f64).log2());
    let e_l = law.expect(|l| l as f64);
    match model {
        ChannelModel::Simple => 0.5 * e_log,
        ChannelModel::Gallager => 0.25 * e_log + 0.25 * (e_l - 1.0) / e_l,
    }
}

/// Exact per-event ambiguity expectation: Simple `E[log L0] / 2`; Gallager
/// `E[log L0] / 4 + E[(L0 - 1) / L0] / 2`, both length-biased.
pub fn ab_prediction(model: ChannelModel) -> f64 {
    let law = RunLaw::LengthBiased;
    let e_log = law.expect(|l| (l as f64).log2());
    match model {
        ChannelModel::Simple => 0.5 * e_log,
        ChannelModel::Gallager => 0.25 * e_log + 0.5 * law.expect(|l| (l as f64 - 1.0) / l as f64),
    }
}

/// Length-biased expectation of the ledger variant: Simple
/// `E[log L0] / 2`; Gallager `E[log L0] / 4 + E[(L0 - 1) / L0] / 4`.
pub fn ab_ledger_prediction(model: ChannelModel) -> f64 {
    let law = RunLaw::LengthBiased;
    let e_log = law.expect(|l| (l as f64).log2());
    match model {
        ChannelModel::Simple => 0.5 * e_log,
        ChannelModel::Gallager => 0.25 * e_log + 0.25 * law.expect(|l| (l as f64 - 1.0) / l as f64),
    }
}

/// Accumulates the realization ambiguity left after the modified process.
pub fn estimate_ab_ambiguity(
    spec: &ChannelSpec,
    n: usize,
    mc: &MonteCarlo,
    edges: EdgePolicy,
) -> Result<AbReport> {
    check_block(n, 2)?;
    let model = spec.model();
    let alpha = spec.alpha();
    let segs = mc.segments_per_trial();
    let per_trial = mc.run(|_, rng| {
        let x = BitSeq::random(n, rng);
        let r = sample_realization(spec, n, rng).expect("n >= 1");
        ab_trial(model, &x, &r, edges, segs)
    })?;
    let mut exact = Vec::new();
    let mut ledger = Vec::new();
    let mut events = 0;
    for seg in per_trial.iter().flatten() {
        exact.push((seg.0, seg.2 * alpha));
        ledger.push((seg.1, seg.2 * alpha));
        events += seg.3;
    }
    Ok(AbReport {
        model,
        alpha,
        n,
        edges,
        exact: ratio_estimate(&exact, mc.trials, mc.seed),
        ledger: ratio_estimate(&ledger, mc.trials, mc.seed),
        prediction_exact: ab_prediction(model),
        prediction_ledger: ab_ledger_prediction(model),
        reference_per_run: ab_reference(model, RunLaw::PerRun),
        reference_length_biased: ab_reference(model, RunLaw::LengthBiased),
        events,
    })
}

/// Per segment: (exact bits, ledger bits, counted positions, events).
fn ab_trial(
    model: ChannelModel,
    x: &BitSeq,
    r: &InsertionRealization,
    edges: EdgePolicy,
    segs: usize,
) -> Vec<(f64, f64, f64, u64)> {
    let n = x.len();
    let runs = runs_of(x);
    let starts = runs.starts();
    let (_, _, lo, hi) = counted_region(&runs, &starts, n, edges);
    let bounds = segment_bounds(lo, hi, segs);
    let mut out: Vec<(f64, f64, f64, u64)> = (0..segs)
        .map(|s| (0.0, 0.0, (bounds[s + 1] - bounds[s]) as f64, 0))
        .collect();
    let (hat, _) = modify_with_runs(&runs, r);
    let (y, k) = apply_with_runs(x, &runs, &hat);
    let mut offsets = Vec::with_capacity(k.0.len());
    let mut acc = 0;
    for &kj in &k.0 {
        offsets.push(acc);
        acc += kj;
    }
    let has_event = |j: usize| k.0[j] > runs.run_lengths[j];
    for p in hat.flags().ones().filter(|&p| p >= lo && p < hi) {
        let j = starts.partition_point(|&s| s <= p) - 1;
        let len = runs.run_lengths[j];
        let symbol = runs.symbol(j);
        let image: BitSeq = (offsets[j]..offsets[j] + k.0[j]).map(|i| y.get(i)).collect();
        let forbid_first = j > 0 && has_event(j - 1);
        let forbid_last = j + 1 < runs.len() && has_event(j + 1);
        let count = run_ambiguity(model, symbol, len, &image, forbid_first, forbid_last).len();
        let payload = hat.payload().at(p);
        let ledger = match (model, replacement_type(symbol, payload)) {
            (ChannelModel::Simple, _) if payload.0 == symbol => (len as f64).log2(),
            (ChannelModel::Gallager, 1) => (len as f64).log2(),
            (ChannelModel::Gallager, 4) if p > starts[j] => 1.0,
            _ => 0.0,
        };
        let seg = &mut out[segment_of(p - lo, hi - lo, segs)];
        seg.0 += (count.max(1) as f64).log2();
        seg.1 += ledger;
        seg.3 += 1;
    }
    out
}

/// Capped-run input and the positions where a bit was flipped.
#[derive(Clone, Debug)]
pub struct CappedSample {
    pub bits: BitSeq,
    pub flips: Vec<usize>,
}

/// Bernoulli(1/2) bits drawn in order; a bit that would extend a run to
/// `l_star + 1` is flipped.
pub fn sample_capped_process<R: Rng + ?Sized>(l_star: usize, n: usize, rng: &mut R) -> Result<CappedSample> {
    if l_star == 0 {
        return Err(Error::usage("l_star must be at least 1"));
    }
    let raw = BitSeq::random(n, rng);
    let mut bits = BitSeq::with_capacity(n);
    let mut flips = Vec::new();
    let mut run = 0usize;
    let mut prev = false;
    for (i, b) in raw.iter().enumerate() {
        let mut bit = b;
        if i > 0 && bit == prev && run == l_star {
            bit = !bit;
            flips.push(i);
        }
        run = if i > 0 && bit == prev { run + 1 } else { 1 };
        prev = bit;
        bits.push(bit);
    }
    Ok(CappedSample { bits, flips })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CappedReport {
    pub l_star: usize,
    pub n: usize,
    pub density: RateEstimate,
    pub max_run: usize,
    /// `P(L0 > l_star) / l_star` under the per-run law.
    pub bound_per_run: f64,
    /// `P(L0 > l_star) / l_star` under the length-biased law.
    pub bound_length_biased: f64,
    /// Flips per bit of the stationary capped process,
    /// `2^{-l*} / (2 - 2^{1-l*})`.
    pub exact_density: f64,
}

/// `P(L0 > l) / l` under `law`.
pub fn capped_bound(law: RunLaw, l_star: usize) -> f64 {
    let tail = match law {
        RunLaw::PerRun => 0.5f64.powi(l_star as i32),
        RunLaw::LengthBiased => (l_star as f64 + 2.0) * 0.5f64.powi(l_star as i32 + 1),
    };
    tail / l_star as f64
}

/// Flip density of the capped process per bit.
pub fn estimate_capped_density(l_star: usize, n: usize, mc: &MonteCarlo) -> Result<CappedReport> {
    check_block(n, 1)?;
    let segs = mc.segments_per_trial();
    let per_trial = mc.run(|_, rng: &mut ChaCha8Rng| {
        let sample = sample_capped_process(l_star, n, rng)?;
        let mut parts: Vec<(f64, f64)> = segment_bounds(0, n, segs)
            .windows(2)
            .map(|w| (0.0, (w[1] - w[0]) as f64))
            .collect();
        for &p in &sample.flips {
            parts[segment_of(p, n, segs)].0 += 1.0;
        }
        let max_run = runs_of(&sample.bits).run_lengths.into_iter().max().unwrap_or(0);
        Ok::<_, Error>((parts, max_run))
    })?;
    let mut parts = Vec::new();
    let mut max_run = 0;
    for trial in per_trial {
        let (p, m) = trial?;
        parts.extend(p);
        max_run = max_run.max(m);
    }
    let two = 2f64;
    Ok(CappedReport {
        l_star,
        n,
        density: ratio_estimate(&parts, mc.trials, mc.seed),
        max_run,
        bound_per_run: capped_bound(RunLaw::PerRun, l_star),
        bound_length_biased: capped_bound(RunLaw::LengthBiased, l_star),
        exact_density: two.powi(-(l_star as i32)) / (2.0 - two.powi(1 - l_star as i32)),
    })
}
