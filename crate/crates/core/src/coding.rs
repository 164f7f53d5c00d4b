//! Monte Carlo realization of the superposition random-coding scheme on a
//! discrete memoryless channel: cloud centers `u^n(w0)`, satellites
//! `x_i^n(w0, w_i)` drawn conditionally on the cloud, memoryless channel
//! use, and strong-typicality decoding at every receiver.
//!
//! The decoder searches all message tuples but prunes level by level. A
//! partial tuple `(u, x_1..x_k)` survives only if no received position falls
//! in a zero-probability cell and each aggregated cell frequency is within
//! `eps` times the number of joint cells it aggregates. Both are necessary
//! for joint typicality, so pruning never drops a typical tuple. The last
//! transmitter is resolved through a per-cloud codeword index whenever the
//! zero cells pin its symbols down.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::stream_rng;
use crate::discrete::{DiscreteChannelSpec, InputLaw};
use crate::error::{ensure, Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.05;
/// Default ceiling on stored codeword symbols.
pub const DEFAULT_MAX_SYMBOLS: usize = 1 << 26;
/// Default ceiling on the number of message tuples a receiver may face.
pub const DEFAULT_MAX_TUPLES: u128 = 1 << 40;
/// Enumerate pinned-down sequences instead of scanning when there are at most this many.
const MAX_ENUMERATED: usize = 256;
const TRIAL_STREAM: u64 = 1 << 62;

/// Largest blocklength supported.
pub const MAX_BLOCKLENGTH: usize = 1 << 20;

/// Everything needed to draw one codebook.
#[derive(Debug, Clone)]
pub struct CodebookSpec {
    pub channel: DiscreteChannelSpec<f64>,
    pub law: InputLaw<f64>,
    pub n: usize,
    /// `R0, R1, .., Rp` in bits per symbol.
    pub rates: Vec<f64>,
    pub epsilon: f64,
    pub seed: u64,
    pub max_symbols: usize,
    pub max_tuples: u128,
}

impl CodebookSpec {
    pub fn new(channel: DiscreteChannelSpec<f64>, law: InputLaw<f64>, n: usize, rates: Vec<f64>, epsilon: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            channel,
            law,
            n,
            rates,
            epsilon,
            seed,
            max_symbols: DEFAULT_MAX_SYMBOLS,
            max_tuples: DEFAULT_MAX_TUPLES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        let spec = Self { n, ..self.clone() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.law.check_for(&self.channel)?;
        ensure!(self.n >= 1 && self.n <= MAX_BLOCKLENGTH, Invalid, "blocklength {} out of range", self.n);
        ensure!(self.epsilon > 0.0 && self.epsilon.is_finite(), Invalid, "epsilon must be > 0");
        ensure!(
            self.rates.len() == self.channel.num_tx() + 1,
            Shape,
            "expected {} rates (R0..Rp), got {}",
            self.channel.num_tx() + 1,
            self.rates.len()
        );
        ensure!(
            self.rates.iter().all(|r| *r >= 0.0 && r.is_finite()),
            Invalid,
            "rates must be finite and >= 0"
        );
        self.message_counts().map(|_| ())
    }

    /// `ceil(2^(n R))` messages per rate, at least one.
    pub fn message_counts(&self) -> Result<Vec<usize>> {
        self.rates
            .iter()
            .map(|r| {
                let bits = self.n as f64 * r;
                if bits >= 48.0 {
                    return Err(Error::Budget {
                        what: "message set",
                        needed: u128::MAX,
                        limit: 1 << 48,
                    });
                }
                // guard against 2^(nR) landing a hair above an integer
                let m = (bits.exp2() - 1e-9).ceil().max(1.0);
                Ok(m as usize)
            })
            .collect()
    }

    /// `log2(count) / n` for each message set.
    pub fn realized_rates(&self) -> Result<Vec<f64>> {
        Ok(self.message_counts()?.iter().map(|m| (*m as f64).log2() / self.n as f64).collect())
    }
}

/// Decoding result of one receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Tuple(Vec<usize>),
    /// No typical tuple, or more than one.
    Failure,
}

/// Aggregated cell table for a prefix `(u, x_1..x_k, y)`.
#[derive(Debug, Clone)]
struct Level {
    /// Number of distinct `x_1..x_k` prefixes.
    width: usize,
    prob: Vec<f64>,
    tol: f64,
}

#[derive(Debug, Clone)]
struct ReceiverDecoder {
    ny: usize,
    levels: Vec<Level>,
    /// Allowed last-transmitter symbols per level `p - 1` cell.
    allowed: Vec<Vec<u16>>,
}

/// Slack against floating error in the law itself.
const FREQ_SLACK: f64 = 1e-12;

impl Level {
    #[inline]
    fn passes(&self, cells: &[usize], counts: &mut [u32]) -> bool {
        counts.iter_mut().for_each(|c| *c = 0);
        for &c in cells {
            if self.prob[c] == 0.0 {
                return false;
            }
            counts[c] += 1;
        }
        let n = cells.len() as f64;
        self.prob
            .iter()
            .zip(counts.iter())
            .all(|(p, c)| (*c as f64 / n - p).abs() <= self.tol + FREQ_SLACK)
    }
}

impl ReceiverDecoder {
    fn new(channel: &DiscreteChannelSpec<f64>, law: &InputLaw<f64>, j: usize, eps: f64) -> Self {
        let sizes = channel.input_sizes();
        let p = sizes.len();
        let nu = law.u_size();
        let nx = channel.input_tuples();
        let ny = channel.output_sizes()[j];
        let joint = law.joint(channel);
        let py_x = channel.receiver_marginal(j);
        let mut levels = Vec::with_capacity(p + 1);
        for k in 0..=p {
            let width: usize = sizes[..k].iter().product();
            let tail = nx / width;
            let mut prob = vec![0.0; nu * width * ny];
            for u in 0..nu {
                for x in 0..nx {
                    let w = joint[u * nx + x];
                    for y in 0..ny {
                        prob[(u * width + x / tail) * ny + y] += w * py_x[x * ny + y];
                    }
                }
            }
            levels.push(Level {
                width,
                prob,
                tol: eps * (tail as f64),
            });
        }
        let last = sizes[p - 1];
        let before = &levels[p - 1];
        let full = &levels[p];
        let mut allowed = vec![Vec::new(); before.prob.len()];
        for u in 0..nu {
            for pref in 0..before.width {
                for y in 0..ny {
                    let cell = (u * before.width + pref) * ny + y;
                    allowed[cell] = (0..last)
                        .filter(|s| full.prob[(u * full.width + pref * last + s) * ny + y] > 0.0)
                        .map(|s| s as u16)
                        .collect();
                }
            }
        }
        Self { ny, levels, allowed }
    }
}

/// A drawn codebook together with the tables its decoders need.
#[derive(Debug, Clone)]
pub struct Codebook {
    spec: CodebookSpec,
    counts: Vec<usize>,
    clouds: Vec<u16>,
    satellites: Vec<Vec<u16>>,
    /// Per cloud: last-transmitter codeword to message indices.
    last_index: Vec<HashMap<Vec<u16>, Vec<u32>>>,
    decoders: Vec<ReceiverDecoder>,
    channel_rows: Vec<WeightedIndex<f64>>,
}

fn categorical(weights: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(weights.iter().copied()).expect("validated probability vector")
}

impl Codebook {
    pub fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    /// Message counts `M0, M1, .., Mp`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn cloud(&self, w0: usize) -> &[u16] {
        let n = self.spec.n;
        &self.clouds[w0 * n..(w0 + 1) * n]
    }

    /// Satellite of transmitter `i` (zero-based) for `(w0, wi)`.
    pub fn satellite(&self, i: usize, w0: usize, wi: usize) -> &[u16] {
        let n = self.spec.n;
        let at = (w0 * self.counts[i + 1] + wi) * n;
        &self.satellites[i][at..at + n]
    }
}

pub fn build_codebook(spec: &CodebookSpec) -> Result<Codebook> {
    build_codebook_stream(spec, 0)
}

fn build_codebook_stream(spec: &CodebookSpec, stream: u64) -> Result<Codebook> {
    spec.validate()?;
    let counts = spec.message_counts()?;
    let p = spec.channel.num_tx();
    let n = spec.n;
    let m0 = counts[0];
    let stored: u128 = (m0 as u128) * (1 + counts[1..].iter().map(|m| *m as u128).sum::<u128>()) * n as u128;
    if stored > spec.max_symbols as u128 {
        return Err(Error::Budget {
            what: "codebook symbols",
            needed: stored,
            limit: spec.max_symbols as u128,
        });
    }
    let tuples: u128 = counts.iter().map(|m| *m as u128).product();
    if tuples > spec.max_tuples {
        return Err(Error::Budget {
            what: "message tuples",
            needed: tuples,
            limit: spec.max_tuples,
        });
    }

    let mut rng = stream_rng(spec.seed, stream);
    let pu = categorical(spec.law.pu());
    let clouds: Vec<u16> = (0..m0 * n).map(|_| pu.sample(&mut rng) as u16).collect();
    let mut satellites = Vec::with_capacity(p);
    for i in 0..p {
        let rows: Vec<WeightedIndex<f64>> = spec.law.conditional(i).iter().map(|r| categorical(r)).collect();
        let mi = counts[i + 1];
        let mut sat = Vec::with_capacity(m0 * mi * n);
        for w0 in 0..m0 {
            let u = &clouds[w0 * n..(w0 + 1) * n];
            for _ in 0..mi {
                sat.extend(u.iter().map(|s| rows[*s as usize].sample(&mut rng) as u16));
            }
        }
        satellites.push(sat);
    }

    let mp = counts[p];
    let last = &satellites[p - 1];
    let last_index = (0..m0)
        .map(|w0| {
            let mut map: HashMap<Vec<u16>, Vec<u32>> = HashMap::with_capacity(mp);
            for wp in 0..mp {
                let at = (w0 * mp + wp) * n;
                map.entry(last[at..at + n].to_vec()).or_default().push(wp as u32);
            }
            map
        })
        .collect();
    let decoders = (0..spec.channel.num_rx())
        .map(|j| ReceiverDecoder::new(&spec.channel, &spec.law, j, spec.epsilon))
        .collect();
    let channel_rows = spec.channel.transition().iter().map(|r| categorical(r)).collect();
    Ok(Codebook {
        spec: spec.clone(),
        counts,
        clouds,
        satellites,
        last_index,
        decoders,
        channel_rows,
    })
}

/// Result of one transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub sent: Vec<usize>,
    pub decoded: Vec<Decoded>,
    /// Whether the transmitted tuple itself was jointly typical at each receiver.
    pub true_typical: Vec<bool>,
}

impl TrialOutcome {
    /// Any receiver failed or decoded a wrong tuple.
    pub fn is_error(&self) -> bool {
        self.decoded.iter().any(|d| d != &Decoded::Tuple(self.sent.clone()))
    }
}

struct Search<'a> {
    book: &'a Codebook,
    dec: &'a ReceiverDecoder,
    y: &'a [u16],
    found: Vec<Vec<usize>>,
    counts: Vec<u32>,
}

impl<'a> Search<'a> {
    fn cells(&self, level: usize, pref: &[usize], u: &[u16]) -> Vec<usize> {
        let lv = &self.dec.levels[level];
        (0..self.y.len())
            .map(|t| (u[t] as usize * lv.width + pref[t]) * self.dec.ny + self.y[t] as usize)
            .collect()
    }

    fn check(&mut self, level: usize, cells: &[usize]) -> bool {
        let lv = &self.dec.levels[level];
        self.counts.resize(lv.prob.len(), 0);
        lv.passes(cells, &mut self.counts[..lv.prob.len()])
    }

    fn done(&self) -> bool {
        self.found.len() >= 2
    }

    fn run(&mut self) {
        let m0 = self.book.counts[0];
        let n = self.y.len();
        for w0 in 0..m0 {
            let u = self.book.cloud(w0);
            let zero = vec![0usize; n];
            let cells = self.cells(0, &zero, u);
            if !self.check(0, &cells) {
                continue;
            }
            let mut tuple = vec![0; self.book.counts.len()];
            tuple[0] = w0;
            self.descend(1, w0, u, &zero, &mut tuple);
            if self.done() {
                return;
            }
        }
    }

    /// Fixes the message of transmitter `k` (one-based) given the prefix.
    fn descend(&mut self, k: usize, w0: usize, u: &[u16], pref: &[usize], tuple: &mut Vec<usize>) {
        let p = self.book.counts.len() - 1;
        let size = self.book.spec.channel.input_sizes()[k - 1];
        if k == p {
            self.resolve_last(w0, u, pref, tuple);
            return;
        }
        for wk in 0..self.book.counts[k] {
            let x = self.book.satellite(k - 1, w0, wk);
            let next: Vec<usize> = pref.iter().zip(x).map(|(a, s)| a * size + *s as usize).collect();
            let cells = self.cells(k, &next, u);
            if !self.check(k, &cells) {
                continue;
            }
            tuple[k] = wk;
            self.descend(k + 1, w0, u, &next, tuple);
            if self.done() {
                return;
            }
        }
    }

    fn resolve_last(&mut self, w0: usize, u: &[u16], pref: &[usize], tuple: &mut Vec<usize>) {
        let p = self.book.counts.len() - 1;
        let size = self.book.spec.channel.input_sizes()[p - 1];
        let before = self.cells(p - 1, pref, u);
        let sets: Vec<&Vec<u16>> = before.iter().map(|c| &self.dec.allowed[*c]).collect();
        if sets.iter().any(|s| s.is_empty()) {
            return;
        }
        let mut combos: usize = 1;
        for s in &sets {
            combos = combos.saturating_mul(s.len());
        }
        let mut candidates: Vec<usize> = Vec::new();
        if combos <= MAX_ENUMERATED {
            let index = &self.book.last_index[w0];
            let mut seq: Vec<u16> = sets.iter().map(|s| s[0]).collect();
            let mut pos = vec![0usize; sets.len()];
            loop {
                if let Some(ws) = index.get(&seq) {
                    candidates.extend(ws.iter().map(|w| *w as usize));
                }
                // odometer over the allowed symbols
                let mut t = 0;
                while t < sets.len() {
                    pos[t] += 1;
                    if pos[t] < sets[t].len() {
                        seq[t] = sets[t][pos[t]];
                        break;
                    }
                    pos[t] = 0;
                    seq[t] = sets[t][0];
                    t += 1;
                }
                if t == sets.len() {
                    break;
                }
            }
            candidates.sort_unstable();
        } else {
            for wp in 0..self.book.counts[p] {
                let x = self.book.satellite(p - 1, w0, wp);
                if x.iter().zip(&sets).all(|(s, a)| a.contains(s)) {
                    candidates.push(wp);
                }
            }
        }
        for wp in candidates {
            let x = self.book.satellite(p - 1, w0, wp);
            let full: Vec<usize> = pref.iter().zip(x).map(|(a, s)| a * size + *s as usize).collect();
            let cells = self.cells(p, &full, u);
            if self.check(p, &cells) {
                tuple[p] = wp;
                self.found.push(tuple.clone());
                if self.done() {
                    return;
                }
            }
        }
    }
}

fn decode_receiver(book: &Codebook, j: usize, y: &[u16]) -> Decoded {
    if book.counts.iter().all(|m| *m == 1) {
        // a single tuple leaves nothing to decide
        return Decoded::Tuple(vec![0; book.counts.len()]);
    }
    let mut s = Search {
        book,
        dec: &book.decoders[j],
        y,
        found: Vec::new(),
        counts: Vec::new(),
    };
    s.run();
    if s.found.len() == 1 {
        Decoded::Tuple(s.found.pop().expect("one candidate"))
    } else {
        Decoded::Failure
    }
}

fn tuple_is_typical(book: &Codebook, j: usize, y: &[u16], messages: &[usize]) -> bool {
    let dec = &book.decoders[j];
    let p = messages.len() - 1;
    let sizes = book.spec.channel.input_sizes();
    let u = book.cloud(messages[0]);
    let mut pref = vec![0usize; y.len()];
    for i in 0..p {
        let x = book.satellite(i, messages[0], messages[i + 1]);
        for (a, s) in pref.iter_mut().zip(x) {
            *a = *a * sizes[i] + *s as usize;
        }
    }
    let lv = &dec.levels[p];
    let cells: Vec<usize> = (0..y.len())
        .map(|t| (u[t] as usize * lv.width + pref[t]) * dec.ny + y[t] as usize)
        .collect();
    let mut counts = vec![0; lv.prob.len()];
    lv.passes(&cells, &mut counts)
}

/// Sends `messages = (w0, w1, .., wp)` through the channel and decodes at
/// every receiver. Channel noise is drawn from `seed`.
pub fn transmit_and_decode(book: &Codebook, messages: &[usize], seed: u64) -> Result<TrialOutcome> {
    let mut rng = stream_rng(seed, TRIAL_STREAM);
    transmit_with(book, messages, &mut rng)
}

fn transmit_with(book: &Codebook, messages: &[usize], rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    ensure!(
        messages.len() == book.counts.len(),
        Shape,
        "expected {} messages, got {}",
        book.counts.len(),
        messages.len()
    );
    for (i, (w, m)) in messages.iter().zip(&book.counts).enumerate() {
        ensure!(w < m, Invalid, "message {i} = {w} out of range (count {m})");
    }
    let n = book.spec.n;
    let channel = &book.spec.channel;
    let p = channel.num_tx();
    let q = channel.num_rx();
    let mut ys = vec![vec![0u16; n]; q];
    let mut symbols = vec![0usize; p];
    for t in 0..n {
        for (i, s) in symbols.iter_mut().enumerate() {
            *s = book.satellite(i, messages[0], messages[i + 1])[t] as usize;
        }
        let x = channel.input_index(&symbols);
        let y = book.channel_rows[x].sample(rng);
        for (j, d) in channel.output_digits(y).into_iter().enumerate() {
            ys[j][t] = d as u16;
        }
    }
    let decoded = (0..q).map(|j| decode_receiver(book, j, &ys[j])).collect();
    let true_typical = (0..q).map(|j| tuple_is_typical(book, j, &ys[j], messages)).collect();
    Ok(TrialOutcome {
        sent: messages.to_vec(),
        decoded,
        true_typical,
    })
}

/// Empirical error at one blocklength.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPoint {
    pub n: usize,
    pub nominal_rates: Vec<f64>,
    pub realized_rates: Vec<f64>,
    pub trials: usize,
    pub errors: usize,
    /// Trials where the sent tuple was typical at every receiver.
    pub typical_accepts: usize,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (phat + z * z / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Simulation settings shared across blocklengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationOptions {
    pub trials: usize,
    /// A fresh codebook is drawn every this many trials.
    pub trials_per_codebook: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            trials_per_codebook: 100,
        }
    }
}

/// Error rate of the scheme at each blocklength in `ns`, over uniformly
/// random messages. An error is any receiver missing the sent tuple.
pub fn error_curve(template: &CodebookSpec, ns: &[usize], opts: &SimulationOptions) -> Result<Vec<ErrorPoint>> {
    ensure!(opts.trials >= 100, Invalid, "need at least 100 trials, got {}", opts.trials);
    ensure!(opts.trials_per_codebook >= 1, Invalid, "trials_per_codebook must be >= 1");
    ensure!(!ns.is_empty(), Invalid, "no blocklengths given");
    ns.iter().map(|&n| error_point(template, n, opts)).collect()
}

fn error_point(template: &CodebookSpec, n: usize, opts: &SimulationOptions) -> Result<ErrorPoint> {
    let spec = template.with_n(n)?;
    let counts = spec.message_counts()?;
    let batches = opts.trials.div_ceil(opts.trials_per_codebook);
    let stream_base = (n as u64) << 32;
    let mut errors = 0;
    let mut accepts = 0;
    for b in 0..batches {
        let book = build_codebook_stream(&spec, stream_base + b as u64)?;
        let start = b * opts.trials_per_codebook;
        let end = (start + opts.trials_per_codebook).min(opts.trials);
        let (e, a) = (start..end)
            .into_par_iter()
            .map(|trial| -> Result<(usize, usize)> {
                let mut rng = stream_rng(spec.seed, TRIAL_STREAM + stream_base + trial as u64);
                let msgs: Vec<usize> = counts.iter().map(|m| rng.random_range(0..*m)).collect();
                let out = transmit_with(&book, &msgs, &mut rng)?;
                Ok((out.is_error() as usize, out.true_typical.iter().all(|t| *t) as usize))
            })
            .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
        errors += e;
        accepts += a;
    }
    let (ci_low, ci_high) = wilson_interval(errors, opts.trials);
    Ok(ErrorPoint {
        n,
        nominal_rates: spec.rates.clone(),
        realized_rates: spec.realized_rates()?,
        trials: opts.trials,
        errors,
        typical_accepts: accepts,
        error_rate: errors as f64 / opts.trials as f64,
        ci_low,
        ci_high,
    })
}
