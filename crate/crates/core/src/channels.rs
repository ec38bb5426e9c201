//! Insertion realizations for the Simple and Gallager models.
//!
//! A realization is the per-position event flags `A` together with the
//! inserted payload `B`. [`apply_realization`] turns an input and a
//! realization into the channel output and the run vector `K`, which
//! attributes every output bit (original or inserted) to the input run
//! containing the position that produced it.
//!
//! Two transforms rewrite a realization so that events are sparse at the run
//! level:
//!
//! * [`modify_realization`] clears every event inside a run whose extended
//!   run (the run plus one neighbouring bit on each side, truncated at the
//!   sequence edges) carries two or more events. Each run is judged on its
//!   own extended run; flags on the neighbouring bits are only cleared when
//!   their own run triggers.
//! * [`perturb_realization`] clears the events of run `S_i` whenever the
//!   consecutive pair `{S_i, S_{i+1}}` carries two or more events, taking the
//!   union over all pairs.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bits::{runs_of, BitSeq, RunDecomposition, RunVector};
use crate::error::{Error, Result};
use crate::model::{ChannelModel, ChannelSpec};

/// Inserted bits: one sequence for Simple, two for Gallager.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Payload {
    Single(BitSeq),
    Pair(BitSeq, BitSeq),
}

impl Payload {
    fn zeros(model: ChannelModel, n: usize) -> Self {
        match model {
            ChannelModel::Simple => Payload::Single(BitSeq::zeros(n)),
            ChannelModel::Gallager => Payload::Pair(BitSeq::zeros(n), BitSeq::zeros(n)),
        }
    }

    pub fn model(&self) -> ChannelModel {
        match self {
            Payload::Single(_) => ChannelModel::Simple,
            Payload::Pair(..) => ChannelModel::Gallager,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Payload::Single(b) | Payload::Pair(b, _) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Payload at position `i` as `(first, second)`; `second` is always
    /// `false` for Simple.
    #[inline]
    pub fn at(&self, i: usize) -> (bool, bool) {
        match self {
            Payload::Single(b) => (b.get(i), false),
            Payload::Pair(b1, b2) => (b1.get(i), b2.get(i)),
        }
    }

    fn set(&mut self, i: usize, value: (bool, bool)) {
        match self {
            Payload::Single(b) => b.set(i, value.0),
            Payload::Pair(b1, b2) => {
                b1.set(i, value.0);
                b2.set(i, value.1);
            }
        }
    }

    fn is_zero_at(&self, i: usize) -> bool {
        self.at(i) == (false, false)
    }
}

/// Event flags and payload for one use of the channel on `n` input bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InsertionRealization {
    flags: BitSeq,
    payload: Payload,
}

impl InsertionRealization {
    pub fn new(flags: BitSeq, payload: Payload) -> Result<Self> {
        if flags.len() != payload.len() {
            return Err(Error::usage(format!(
                "flags have length {} but payload has length {}",
                flags.len(),
                payload.len()
            )));
        }
        for i in 0..flags.len() {
            if !flags.get(i) && !payload.is_zero_at(i) {
                return Err(Error::usage(format!(
                    "payload is nonzero at unflagged position {i}"
                )));
            }
        }
        Ok(InsertionRealization { flags, payload })
    }

    /// No events on `n` positions.
    pub fn empty(model: ChannelModel, n: usize) -> Self {
        InsertionRealization {
            flags: BitSeq::zeros(n),
            payload: Payload::zeros(model, n),
        }
    }

    /// Builds a realization from `(position, payload)` events.
    pub fn from_events(
        model: ChannelModel,
        n: usize,
        events: &[(usize, (bool, bool))],
    ) -> Result<Self> {
        let mut r = Self::empty(model, n);
        for &(pos, value) in events {
            if pos >= n {
                return Err(Error::usage(format!("event position {pos} out of range {n}")));
            }
            if model == ChannelModel::Simple && value.1 {
                return Err(Error::usage("Simple events carry a single payload bit"));
            }
            r.flags.set(pos, true);
            r.payload.set(pos, value);
        }
        Ok(r)
    }

    pub fn model(&self) -> ChannelModel {
        self.payload.model()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flags(&self) -> &BitSeq {
        &self.flags
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn event_count(&self) -> usize {
        self.flags.count_ones()
    }

    /// Flagged positions with their payloads, in increasing position order.
    pub fn events(&self) -> Vec<(usize, (bool, bool))> {
        self.flags.ones().map(|i| (i, self.payload.at(i))).collect()
    }

    /// Same flags with every flagged payload bit inverted.
    pub fn complement_payload(&self) -> Self {
        let payload = match &self.payload {
            Payload::Single(b) => Payload::Single(b.xor(&self.flags)),
            Payload::Pair(b1, b2) => Payload::Pair(b1.xor(&self.flags), b2.xor(&self.flags)),
        };
        InsertionRealization {
            flags: self.flags.clone(),
            payload,
        }
    }

    fn clear(&mut self, i: usize) {
        self.flags.set(i, false);
        self.payload.set(i, (false, false));
    }

    /// Probability of this exact realization under `spec`.
    pub fn probability(&self, spec: &ChannelSpec) -> f64 {
        let k = self.event_count() as i32;
        let n = self.len() as i32;
        let a = spec.alpha();
        a.powi(k) * (1.0 - a).powi(n - k) * spec.payload_probability().powi(k)
    }
}

impl fmt::Display for InsertionRealization {
    /// `flags/payload` for Simple, `flags/first/second` for Gallager.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::Single(b) => write!(f, "{}/{}", self.flags, b),
            Payload::Pair(b1, b2) => write!(f, "{}/{}/{}", self.flags, b1, b2),
        }
    }
}

impl FromStr for InsertionRealization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').collect();
        let flags: BitSeq = parts[0].parse()?;
        let payload = match parts.len() {
            2 => Payload::Single(parts[1].parse()?),
            3 => Payload::Pair(parts[1].parse()?, parts[2].parse()?),
            _ => {
                return Err(Error::usage(format!(
                    "realization {s:?} must be flags/payload or flags/first/second"
                )))
            }
        };
        InsertionRealization::new(flags, payload)
    }
}

/// Differences between an original and a modified realization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessDelta {
    pub z: BitSeq,
    pub v: Payload,
}

fn check_len(x: &BitSeq, r: &InsertionRealization) -> Result<()> {
    if x.len() != r.len() {
        return Err(Error::usage(format!(
            "input has length {} but realization has length {}",
            x.len(),
            r.len()
        )));
    }
    Ok(())
}

/// Draws a realization of length `n`: flags i.i.d. Bernoulli(alpha), payload
/// i.i.d. Bernoulli(1/2) at flagged positions.
///
/// Flags are placed by geometric gap sampling, so the cost is proportional
/// to the number of events rather than to `n`.
pub fn sample_realization<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    n: usize,
    rng: &mut R,
) -> Result<InsertionRealization> {
    if n == 0 {
        return Err(Error::usage("realization length must be at least 1"));
    }
    let mut r = InsertionRealization::empty(spec.model(), n);
    let alpha = spec.alpha();
    if alpha == 0.0 {
        return Ok(r);
    }
    let log_q = (-alpha).ln_1p();
    let mut pos = 0usize;
    loop {
        let u: f64 = rng.random();
        // number of failures before the next success, P(gap = g) = (1-a)^g a
        let gap = ((-u).ln_1p() / log_q).floor();
        if gap >= (n - pos) as f64 {
            break;
        }
        pos += gap as usize;
        let bits: u8 = rng.random();
        let value = match spec.model() {
            ChannelModel::Simple => (bits & 1 == 1, false),
            ChannelModel::Gallager => (bits & 1 == 1, bits & 2 == 2),
        };
        r.flags.set(pos, true);
        r.payload.set(pos, value);
        pos += 1;
        if pos >= n {
            break;
        }
    }
    Ok(r)
}

/// Output bits produced by input bit `bit` at a position.
#[inline]
fn emit(out: &mut BitSeq, model: ChannelModel, bit: bool, flagged: bool, payload: (bool, bool)) {
    if !flagged {
        out.push(bit);
        return;
    }
    match model {
        ChannelModel::Simple => {
            out.push(bit);
            out.push(payload.0);
        }
        ChannelModel::Gallager => {
            out.push(payload.0);
            out.push(payload.1);
        }
    }
}

/// Applies a realization to an input with a precomputed run decomposition.
pub(crate) fn apply_with_runs(
    x: &BitSeq,
    runs: &RunDecomposition,
    r: &InsertionRealization,
) -> (BitSeq, RunVector) {
    let model = r.model();
    let mut y = BitSeq::with_capacity(x.len() + r.event_count());
    let mut k = runs.run_lengths.clone();
    let starts = runs.starts();
    let mut next = 0usize;
    for (pos, payload) in r.events() {
        for i in next..pos {
            y.push(x.get(i));
        }
        emit(&mut y, model, x.get(pos), true, payload);
        let run = starts.partition_point(|&s| s <= pos) - 1;
        k[run] += 1;
        next = pos + 1;
    }
    for i in next..x.len() {
        y.push(x.get(i));
    }
    (y, RunVector(k))
}

/// Output sequence and run vector for input `x` under realization `r`.
pub fn apply_realization(x: &BitSeq, r: &InsertionRealization) -> Result<(BitSeq, RunVector)> {
    check_len(x, r)?;
    Ok(apply_with_runs(x, &runs_of(x), r))
}

/// Number of flags in `[lo, hi)` given the sorted flagged positions.
#[inline]
fn flags_in(flagged: &[usize], lo: usize, hi: usize) -> usize {
    flagged.partition_point(|&p| p < hi) - flagged.partition_point(|&p| p < lo)
}

pub(crate) fn modify_with_runs(
    runs: &RunDecomposition,
    r: &InsertionRealization,
) -> (InsertionRealization, ProcessDelta) {
    let n = r.len();
    let flagged: Vec<usize> = r.flags.ones().collect();
    let starts = runs.starts();
    let mut hat = r.clone();
    let mut z = BitSeq::zeros(n);
    let mut v = Payload::zeros(r.model(), n);

    let mut candidates: Vec<usize> = Vec::new();
    for &p in &flagged {
        let j = starts.partition_point(|&s| s <= p) - 1;
        candidates.extend(j.saturating_sub(1)..=(j + 1).min(runs.len() - 1));
    }
    candidates.dedup();
    candidates.sort_unstable();
    candidates.dedup();

    for j in candidates {
        let start = starts[j];
        let end = start + runs.run_lengths[j];
        let ext_lo = start.saturating_sub(1);
        let ext_hi = (end + 1).min(n);
        if flags_in(&flagged, ext_lo, ext_hi) >= 2 {
            let lo = flagged.partition_point(|&p| p < start);
            let hi = flagged.partition_point(|&p| p < end);
            for &p in &flagged[lo..hi] {
                z.set(p, true);
                v.set(p, r.payload.at(p));
                hat.clear(p);
            }
        }
    }
    (hat, ProcessDelta { z, v })
}

/// Clears all events of every run whose extended run carries at least two
/// events; returns the modified realization and the XOR delta.
pub fn modify_realization(
    x: &BitSeq,
    r: &InsertionRealization,
) -> Result<(InsertionRealization, ProcessDelta)> {
    check_len(x, r)?;
    Ok(modify_with_runs(&runs_of(x), r))
}

pub(crate) fn perturb_with_runs(
    runs: &RunDecomposition,
    r: &InsertionRealization,
) -> (InsertionRealization, BitSeq) {
    let n = r.len();
    let flagged: Vec<usize> = r.flags.ones().collect();
    let starts = runs.starts();
    let mut check = r.clone();
    let mut z = BitSeq::zeros(n);

    let mut pairs: Vec<usize> = Vec::new();
    for &p in &flagged {
        let j = starts.partition_point(|&s| s <= p) - 1;
        if j > 0 {
            pairs.push(j - 1);
        }
        if j + 1 < runs.len() {
            pairs.push(j);
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    for i in pairs {
        let lo = starts[i];
        let mid = lo + runs.run_lengths[i];
        let hi = mid + runs.run_lengths[i + 1];
        if flags_in(&flagged, lo, hi) >= 2 {
            let a = flagged.partition_point(|&p| p < lo);
            let b = flagged.partition_point(|&p| p < mid);
            for &p in &flagged[a..b] {
                z.set(p, true);
                check.clear(p);
            }
        }
    }
    (check, z)
}

/// Clears the events of `S_i` for every consecutive run pair `{S_i, S_{i+1}}`
/// carrying at least two events; returns the perturbed realization and the
/// union of the cleared positions.
pub fn perturb_realization(
    x: &BitSeq,
    r: &InsertionRealization,
) -> Result<(InsertionRealization, BitSeq)> {
    check_len(x, r)?;
    Ok(perturb_with_runs(&runs_of(x), r))
}

/// Every realization with at most `max_events` events together with its
/// probability. Events are enumerated by count, then by position set in
/// lexicographic order, then by payload value.
pub fn enumerate_realizations(
    spec: &ChannelSpec,
    n: usize,
    max_events: Option<usize>,
) -> Result<RealizationIter> {
    if n == 0 {
        return Err(Error::usage("realization length must be at least 1"));
    }
    let max = match max_events {
        Some(m) if m > n => {
            return Err(Error::usage(format!(
                "max_events {m} exceeds sequence length {n}"
            )))
        }
        Some(m) => m,
        None => n,
    };
    let max = if spec.alpha() == 0.0 { 0 } else { max };
    Ok(RealizationIter {
        spec: *spec,
        n,
        max_events: max,
        events: 0,
        positions: Vec::new(),
        payload_index: 0,
        done: false,
    })
}

pub struct RealizationIter {
    spec: ChannelSpec,
    n: usize,
    max_events: usize,
    events: usize,
    positions: Vec<usize>,
    payload_index: u64,
    done: bool,
}

impl RealizationIter {
    fn advance(&mut self) {
        let width = self.spec.model().payload_width() * self.events;
        self.payload_index += 1;
        if self.payload_index < (1u64 << width) {
            return;
        }
        self.payload_index = 0;
        // next combination of `events` positions out of n
        let k = self.events;
        let n = self.n;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.positions[i] < n - k + i {
                self.positions[i] += 1;
                for j in i + 1..k {
                    self.positions[j] = self.positions[j - 1] + 1;
                }
                return;
            }
        }
        self.events += 1;
        if self.events > self.max_events {
            self.done = true;
            return;
        }
        self.positions = (0..self.events).collect();
    }
}

impl Iterator for RealizationIter {
    type Item = (InsertionRealization, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let model = self.spec.model();
        let width = model.payload_width();
        let events: Vec<(usize, (bool, bool))> = self
            .positions
            .iter()
            .enumerate()
            .map(|(e, &p)| {
                let bits = self.payload_index >> (e * width);
                let first = bits & 1 == 1;
                let second = width == 2 && bits & 2 == 2;
                (p, (first, second))
            })
            .collect();
        let r = InsertionRealization::from_events(model, self.n, &events)
            .expect("enumerated events are in range");
        let p = r.probability(&self.spec);
        self.advance();
        Some((r, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitSeq {
        s.parse().unwrap()
    }

    fn simple(events: &[(usize, bool)], n: usize) -> InsertionRealization {
        let ev: Vec<_> = events.iter().map(|&(p, b)| (p, (b, false))).collect();
        InsertionRealization::from_events(ChannelModel::Simple, n, &ev).unwrap()
    }

    #[test]
    fn apply_examples() {
        let (y, k) = apply_realization(&bs("000"), &simple(&[(1, true)], 3)).unwrap();
        assert_eq!(y.to_string(), "0010");
        assert_eq!(k, RunVector(vec![4]));

        let r = InsertionRealization::from_events(ChannelModel::Gallager, 2, &[(0, (true, false))])
            .unwrap();
        let (y, k) = apply_realization(&bs("01"), &r).unwrap();
        assert_eq!(y.to_string(), "101");
        assert_eq!(k, RunVector(vec![2, 1]));

        let (y, k) = apply_realization(&bs("0000000"), &simple(&[(2, false)], 7)).unwrap();
        assert_eq!(y.len(), 8);
        assert_eq!(k, RunVector(vec![8]));

        assert!(apply_realization(&bs("00"), &simple(&[], 3)).is_err());
    }

    #[test]
    fn realization_invariants() {
        let bad = InsertionRealization::new(bs("010"), Payload::Single(bs("001")));
        assert!(bad.is_err());
        let bad_len = InsertionRealization::new(bs("010"), Payload::Single(bs("01")));
        assert!(bad_len.is_err());
        let r: InsertionRealization = "0101/0100".parse().unwrap();
        assert_eq!(r.to_string(), "0101/0100");
        let g: InsertionRealization = "01/01/00".parse().unwrap();
        assert_eq!(g.model(), ChannelModel::Gallager);
        assert_eq!(g.to_string(), "01/01/00");
    }

    #[test]
    fn modify_examples() {
        let x = bs("0000");
        let (hat, delta) = modify_realization(&x, &simple(&[(0, true), (1, false)], 4)).unwrap();
        assert_eq!(hat.event_count(), 0);
        assert_eq!(delta.z.to_string(), "1100");
        assert_eq!(delta.v, Payload::Single(bs("1000")));

        let x = bs("0011");
        let r = simple(&[(0, true)], 4);
        let (hat, delta) = modify_realization(&x, &r).unwrap();
        assert_eq!(hat, r);
        assert_eq!(delta.z.count_ones(), 0);
    }

    #[test]
    fn modify_uses_extended_runs() {
        // run 1 (positions 3..5) has one flag, but its extended run also
        // covers position 2 (last bit of run 0) which is flagged
        let x = bs("000111000");
        let r = simple(&[(2, true), (4, false)], 9);
        let (hat, delta) = modify_realization(&x, &r).unwrap();
        // run 1 (ext 2..=6) triggers, run 0 (ext 0..=3) sees one flag
        assert_eq!(delta.z.to_string(), "000010000");
        assert_eq!(hat.event_count(), 1);
        assert!(hat.flags().get(2));

        // flags at both ends of run 1 clear it and nothing else
        let r = simple(&[(3, true), (5, false)], 9);
        let (hat, delta) = modify_realization(&x, &r).unwrap();
        assert_eq!(delta.z.to_string(), "000101000");
        assert_eq!(hat.event_count(), 0);

        // a flag two runs away does not count
        let r = simple(&[(1, true), (7, false)], 9);
        let (hat, _) = modify_realization(&x, &r).unwrap();
        assert_eq!(hat, r);
    }

    #[test]
    fn perturb_table_example() {
        let x = bs("000 1111 00 111 0000");
        let a = bs("010 1000 00 001 0000");
        let r = simple(&a.ones().map(|p| (p, false)).collect::<Vec<_>>(), x.len());
        let (check, z) = perturb_realization(&x, &r).unwrap();
        assert_eq!(z, bs("010 0000 00 000 0000"));
        assert_eq!(check.flags(), &bs("000 1000 00 001 0000"));
    }

    #[test]
    fn perturb_trivial_cases() {
        let x = bs("0011100");
        let none = InsertionRealization::empty(ChannelModel::Simple, 7);
        let (check, z) = perturb_realization(&x, &none).unwrap();
        assert_eq!(check, none);
        assert_eq!(z.count_ones(), 0);
        for p in 0..7 {
            let r = simple(&[(p, true)], 7);
            assert_eq!(perturb_realization(&x, &r).unwrap().0, r);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_respects_alpha_zero() {
        let spec = ChannelSpec::simple(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_realization(&spec, 1000, &mut rng).unwrap().event_count(), 0);

        let spec = ChannelSpec::gallager(0.3).unwrap();
        let a = sample_realization(&spec, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_realization(&spec, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(sample_realization(&spec, 0, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn sampled_flag_count_mean() {
        // E[#flags] = n alpha; 10^6 draws of n = 100 at alpha = 0.1
        let spec = ChannelSpec::simple(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let c = sample_realization(&spec, 100, &mut rng).unwrap().event_count() as f64;
            sum += c;
            sum_sq += c * c;
        }
        let mean = sum / draws as f64;
        let var = sum_sq / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        assert!((mean - 10.0).abs() < 3.0 * se, "mean {mean} se {se}");
        // Binomial variance n a (1-a) = 9
        assert!((var - 9.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn sampled_payload_is_uniform() {
        let spec = ChannelSpec::gallager(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = [0usize; 4];
        for _ in 0..200 {
            let r = sample_realization(&spec, 1000, &mut rng).unwrap();
            for (_, (a, b)) in r.events() {
                counts[usize::from(a) + 2 * usize::from(b)] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        for c in counts {
            let p = c as f64 / total as f64;
            assert!((p - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn enumeration_counts_and_mass() {
        let spec = ChannelSpec::simple(0.3).unwrap();
        let all: Vec<_> = enumerate_realizations(&spec, 2, None).unwrap().collect();
        assert_eq!(all.len(), 9);
        let mass: f64 = all.iter().map(|(_, p)| p).sum();
        assert!((mass - 1.0).abs() < 1e-12);

        let zero = ChannelSpec::gallager(0.0).unwrap();
        let all: Vec<_> = enumerate_realizations(&zero, 4, None).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].1, 1.0);

        assert!(enumerate_realizations(&spec, 2, Some(3)).is_err());
    }

    #[test]
    fn enumeration_truncated_mass_is_binomial_cdf() {
        for model in ChannelModel::ALL {
            let spec = ChannelSpec::new(model, 0.2).unwrap();
            for n in 1..=6 {
                for m in 0..=n {
                    let items: Vec<_> = enumerate_realizations(&spec, n, Some(m)).unwrap().collect();
                    let mass: f64 = items.iter().map(|(_, p)| p).sum();
                    let cdf: f64 = (0..=m)
                        .map(|k| binom(n, k) * 0.2f64.powi(k as i32) * 0.8f64.powi((n - k) as i32))
                        .sum();
                    assert!((mass - cdf).abs() < 1e-12);
                    let distinct: std::collections::HashSet<_> =
                        items.iter().map(|(r, _)| r.clone()).collect();
                    assert_eq!(distinct.len(), items.len());
                    assert!(items.iter().all(|(r, _)| r.event_count() <= m));
                }
            }
        }
    }

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    fn arb_case() -> impl Strategy<Value = (BitSeq, InsertionRealization)> {
        (1usize..80, any::<bool>()).prop_flat_map(|(n, gallager)| {
            let model = if gallager { ChannelModel::Gallager } else { ChannelModel::Simple };
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec((any::<u8>(), any::<bool>(), any::<bool>()), n),
            )
                .prop_map(move |(xb, ev)| {
                    let x: BitSeq = xb.into_iter().collect();
                    let events: Vec<_> = ev
                        .iter()
                        .enumerate()
                        .filter(|(_, (u, _, _))| *u < 60)
                        .map(|(i, &(_, a, b))| (i, (a, b && model == ChannelModel::Gallager)))
                        .collect();
                    let r = InsertionRealization::from_events(model, x.len(), &events).unwrap();
                    (x, r)
                })
        })
    }

    proptest! {
        #[test]
        fn output_length_and_run_vector((x, r) in arb_case()) {
            let (y, k) = apply_realization(&x, &r).unwrap();
            prop_assert_eq!(y.len(), x.len() + r.event_count());
            prop_assert_eq!(k.total(), y.len());
            let runs = runs_of(&x);
            for (kj, lj) in k.lengths().iter().zip(&runs.run_lengths) {
                prop_assert!(kj >= lj);
            }
        }

        #[test]
        fn complement_symmetry((x, r) in arb_case()) {
            let (y, k) = apply_realization(&x, &r).unwrap();
            let (yc, kc) = apply_realization(&x.complement(), &r.complement_payload()).unwrap();
            prop_assert_eq!(yc, y.complement());
            prop_assert_eq!(kc, k);
        }

        #[test]
        fn modify_is_idempotent_and_consistent((x, r) in arb_case()) {
            let (hat, delta) = modify_realization(&x, &r).unwrap();
            prop_assert_eq!(&delta.z, &hat.flags().xor(r.flags()));
            for i in 0..x.len() {
                let v = delta.v.at(i);
                let expected = (hat.payload().at(i).0 ^ r.payload().at(i).0,
                                hat.payload().at(i).1 ^ r.payload().at(i).1);
                prop_assert_eq!(v, expected);
                if !delta.z.get(i) {
                    prop_assert_eq!(v, (false, false));
                }
            }
            let (again, delta2) = modify_realization(&x, &hat).unwrap();
            prop_assert_eq!(again, hat);
            prop_assert_eq!(delta2.z.count_ones(), 0);
        }

        #[test]
        fn perturbed_pairs_carry_at_most_one_event((x, r) in arb_case()) {
            let (check, z) = perturb_realization(&x, &r).unwrap();
            prop_assert_eq!(&z, &check.flags().xor(r.flags()));
            let runs = runs_of(&x);
            let starts = runs.starts();
            for i in 0..runs.len().saturating_sub(1) {
                let lo = starts[i];
                let hi = lo + runs.run_lengths[i] + runs.run_lengths[i + 1];
                let original = (lo..hi).filter(|&p| r.flags().get(p)).count();
                let after = (lo..hi).filter(|&p| check.flags().get(p)).count();
                // the last run has no later pair to clear it
                if i + 2 < runs.len() {
                    prop_assert!(after <= 1);
                }
                if original >= 2 {
                    let mid = lo + runs.run_lengths[i];
                    prop_assert!((lo..mid).all(|p| !check.flags().get(p)));
                }
            }
        }
    }
}
