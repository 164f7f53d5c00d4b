//! Throughput regions of Gaussian fading multiple-access channels with a
//! common message, partial CSIT and perfect CSIR.
//!
//! For a fixed transmit policy `(phi_i, rho_i)` over the CSIT alphabets the
//! region is a polytope. Receiver `j` sees, for each nonempty subset `L`,
//!
//! ```text
//! a_j(L) = E[ C( sum_{k in L} S_jk^2 phi_k (1 - rho_k^2) / s_j^2 ) ]
//! b_j    = E[ C( (sum_k S_jk^2 phi_k + 2 sum_{k<i} S_jk S_ji rho_k rho_i sqrt(phi_k phi_i)) / s_j^2 ) ]
//! ```
//!
//! with `phi_k = phi_k(E_k)`, `rho_k = rho_k(E_k)` and `E_k = xi_k(S)`. The
//! full region is the union over policies; [`frontier`] approximates it from
//! inside by searching a finite policy grid.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{sample_block, stream_rng, CsitQuantizer, FadingChannelSpec, StateBlock, StateView, SAMPLE_CHUNK};
use crate::error::{ensure, Error, Result};
use crate::expectation::{cap, Engine, Ensemble, ExpectationEstimate};
use crate::region::{RateConstraintSet, RatePoint, ReceiverBounds, Subset, WeightVector, MAX_TX};
use crate::scalar::Real;

/// Relative slack on the average power constraint.
pub const POWER_REL_TOL: f64 = 1e-6;

/// Stream offset separating signal draws from state draws under one seed.
const SIGNAL_STREAM_BASE: u64 = 1 << 40;

pub type StateFn<T> = Arc<dyn Fn(StateView<'_, T>) -> T + Send + Sync>;

/// A policy component: a table over the CSIT alphabet, or a function of the
/// full state (perfect CSIT).
#[derive(Clone)]
pub enum PolicyMap<T> {
    Table(Vec<T>),
    PerSample(StateFn<T>),
}

impl<T: Real> PolicyMap<T> {
    pub fn constant(value: T) -> Self {
        Self::Table(vec![value])
    }

    #[inline]
    fn eval(&self, symbol: usize, state: StateView<'_, T>) -> T {
        match self {
            Self::Table(t) => t[symbol],
            Self::PerSample(f) => f(state),
        }
    }

    fn table_len(&self) -> Option<usize> {
        match self {
            Self::Table(t) => Some(t.len()),
            Self::PerSample(_) => None,
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for PolicyMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Self::PerSample(_) => f.write_str("PerSample(..)"),
        }
    }
}

/// Power allocation `phi_i` and correlation `rho_i` of one transmitter.
#[derive(Debug, Clone)]
pub struct TxPolicy<T> {
    pub power: PolicyMap<T>,
    pub correlation: PolicyMap<T>,
}

#[derive(Debug, Clone)]
pub struct TransmitPolicy<T> {
    tx: Vec<TxPolicy<T>>,
}

impl<T: Real> TransmitPolicy<T> {
    pub fn new(tx: Vec<TxPolicy<T>>) -> Self {
        Self { tx }
    }

    /// `phi_i = powers[i]`, `rho_i = rhos[i]` regardless of the state.
    pub fn constant(powers: &[T], rhos: &[T]) -> Self {
        Self::new(
            powers
                .iter()
                .zip(rhos)
                .map(|(p, r)| TxPolicy {
                    power: PolicyMap::constant(*p),
                    correlation: PolicyMap::constant(*r),
                })
                .collect(),
        )
    }

    /// Tabular policy, one `(phi, rho)` table pair per transmitter.
    pub fn tables(tables: Vec<(Vec<T>, Vec<T>)>) -> Self {
        Self::new(
            tables
                .into_iter()
                .map(|(phi, rho)| TxPolicy {
                    power: PolicyMap::Table(phi),
                    correlation: PolicyMap::Table(rho),
                })
                .collect(),
        )
    }

    pub fn num_tx(&self) -> usize {
        self.tx.len()
    }

    pub fn transmitters(&self) -> &[TxPolicy<T>] {
        &self.tx
    }

    /// Evaluates `phi` and `rho` for every transmitter at one state.
    #[inline]
    pub fn eval_into(&self, state: StateView<'_, T>, symbols: &[usize], phi: &mut [T], rho: &mut [T]) -> Result<()> {
        for (k, tx) in self.tx.iter().enumerate() {
            let p = tx.power.eval(symbols[k], state);
            let r = tx.correlation.eval(symbols[k], state);
            if !(p >= T::zero() && p.is_finite()) {
                return Err(Error::Invalid(format!("power of transmitter {} is {p}", k + 1)));
            }
            if !(r >= T::zero() && r <= T::one()) {
                return Err(Error::Invalid(format!(
                    "correlation of transmitter {} is {r}, must lie in [0, 1]",
                    k + 1
                )));
            }
            phi[k] = p;
            rho[k] = r;
        }
        Ok(())
    }

    fn check_shape(&self, spec: &FadingChannelSpec<T>, quantizer: &CsitQuantizer<T>) -> Result<()> {
        ensure!(
            self.tx.len() == spec.num_tx(),
            Shape,
            "policy has {} transmitters, channel has {}",
            self.tx.len(),
            spec.num_tx()
        );
        quantizer.check_arity(spec.num_tx())?;
        for (k, (tx, m)) in self.tx.iter().zip(quantizer.alphabet_sizes()).enumerate() {
            for (name, map) in [("power", &tx.power), ("correlation", &tx.correlation)] {
                if let Some(len) = map.table_len() {
                    ensure!(
                        len == m,
                        Shape,
                        "{name} table of transmitter {} has {len} entries, CSIT alphabet has {m}",
                        k + 1
                    );
                }
            }
        }
        Ok(())
    }

    /// `E[phi_i(E_i)]` for every transmitter.
    pub fn average_power(&self, ensemble: &Ensemble<T>, quantizer: &CsitQuantizer<T>) -> Result<Vec<ExpectationEstimate<T>>> {
        ensure!(
            self.tx.len() == quantizer.alphabet_sizes().len(),
            Shape,
            "policy has {} transmitters, quantizer has {}",
            self.tx.len(),
            quantizer.alphabet_sizes().len()
        );
        for (k, (tx, m)) in self.tx.iter().zip(quantizer.alphabet_sizes()).enumerate() {
            for map in [&tx.power, &tx.correlation] {
                if let Some(len) = map.table_len() {
                    ensure!(len == m, Shape, "table of transmitter {} has {len} entries, alphabet has {m}", k + 1);
                }
            }
        }
        let p = self.tx.len();
        ensemble.expect_many(p, |s, out| {
            let mut sym = [0; MAX_TX];
            let mut rho = [T::zero(); MAX_TX];
            quantizer.apply_into(s, &mut sym[..p])?;
            self.eval_into(s, &sym[..p], out, &mut rho[..p])
        })
    }

    /// Table ranges, shapes and the average power budget under `ensemble`.
    pub fn validate(&self, spec: &FadingChannelSpec<T>, quantizer: &CsitQuantizer<T>, ensemble: &Ensemble<T>) -> Result<()> {
        self.check_shape(spec, quantizer)?;
        let avg = self.average_power(ensemble, quantizer)?;
        for (k, (e, budget)) in avg.iter().zip(spec.power_budget()).enumerate() {
            let limit = *budget * (T::one() + T::lit(POWER_REL_TOL)) + T::rate_tol();
            if e.value > limit {
                return Err(Error::Infeasible(format!(
                    "E[phi_{}] = {} exceeds the budget {budget}",
                    k + 1,
                    e.value
                )));
            }
        }
        Ok(())
    }
}

/// Per-bound estimates behind a constraint set.
#[derive(Debug, Clone)]
pub struct BoundEstimates<T> {
    pub num_tx: usize,
    /// `subset[j][mask]`; index 0 is unused.
    pub subset: Vec<Vec<ExpectationEstimate<T>>>,
    pub total: Vec<ExpectationEstimate<T>>,
}

impl<T: Real> BoundEstimates<T> {
    pub fn to_set(&self, has_common: bool) -> Result<RateConstraintSet<T>> {
        let receivers = self
            .subset
            .iter()
            .zip(&self.total)
            .map(|(a, b)| ReceiverBounds::new(self.num_tx, |s| a[s.0 as usize].value, b.value))
            .collect();
        RateConstraintSet::new(self.num_tx, has_common, receivers)
    }
}

/// Bound estimates for one policy on a prepared ensemble.
pub fn cm_bound_estimates<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    policy: &TransmitPolicy<T>,
    ensemble: &Ensemble<T>,
) -> Result<BoundEstimates<T>> {
    policy.validate(spec, quantizer, ensemble)?;
    let (p, q) = (spec.num_tx(), spec.num_rx());
    let slots = 1usize << p;
    let noise = spec.noise_var().to_vec();
    let est = ensemble.expect_many(q * slots, |s, out| {
        let mut sym = [0; MAX_TX];
        let mut phi = [T::zero(); MAX_TX];
        let mut rho = [T::zero(); MAX_TX];
        quantizer.apply_into(s, &mut sym[..p])?;
        policy.eval_into(s, &sym[..p], &mut phi[..p], &mut rho[..p])?;
        for j in 0..q {
            let row = &mut out[j * slots..(j + 1) * slots];
            // private received powers, built up from the mask without its
            // lowest bit; slot 0 stays zero until the total is written
            row[0] = T::zero();
            for mask in 1..slots {
                let k = mask.trailing_zeros() as usize;
                let g = s.get(j, k);
                row[mask] = row[mask & (mask - 1)] + g * g * phi[k] * (T::one() - rho[k] * rho[k]);
            }
            for v in row[1..].iter_mut() {
                *v = cap(*v / noise[j]);
            }
            let mut total = T::zero();
            for k in 0..p {
                let gk = s.get(j, k);
                total = total + gk * gk * phi[k];
                for i in k + 1..p {
                    let gi = s.get(j, i);
                    total = total + T::lit(2.0) * gk * gi * rho[k] * rho[i] * (phi[k] * phi[i]).sqrt();
                }
            }
            row[0] = cap(total / noise[j]);
        }
        Ok(())
    })?;
    let subset = (0..q).map(|j| est[j * slots..(j + 1) * slots].to_vec()).collect();
    let total = (0..q).map(|j| est[j * slots]).collect();
    Ok(BoundEstimates { num_tx: p, subset, total })
}

/// Constraint set of the common-message region for one policy.
pub fn region_cm<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    policy: &TransmitPolicy<T>,
    engine: Engine,
) -> Result<RateConstraintSet<T>> {
    let ensemble = Ensemble::build(spec, engine)?;
    region_cm_on(spec, quantizer, policy, &ensemble)
}

pub fn region_cm_on<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    policy: &TransmitPolicy<T>,
    ensemble: &Ensemble<T>,
) -> Result<RateConstraintSet<T>> {
    cm_bound_estimates(spec, quantizer, policy, ensemble)?.to_set(true)
}

/// Capacities `(C12, C21)` of the links between the two encoders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConferencingSpec<T> {
    pub c12: T,
    pub c21: T,
}

impl<T: Real> ConferencingSpec<T> {
    pub fn new(c12: T, c21: T) -> Result<Self> {
        ensure!(
            c12 >= T::zero() && c21 >= T::zero() && c12.is_finite() && c21.is_finite(),
            Invalid,
            "link capacities must be finite and >= 0 (got {c12}, {c21})"
        );
        Ok(Self { c12, c21 })
    }

    pub fn none() -> Self {
        Self {
            c12: T::zero(),
            c21: T::zero(),
        }
    }

    pub fn symmetric(c: T) -> Result<Self> {
        Self::new(c, c)
    }
}

/// Two-user conferencing region: the private bounds gain the link credits,
/// the fully correlated bound caps `R1 + R2` without credit.
pub fn region_conf<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    policy: &TransmitPolicy<T>,
    conf: ConferencingSpec<T>,
    engine: Engine,
) -> Result<RateConstraintSet<T>> {
    spec.require_two_user("conferencing region")?;
    let ensemble = Ensemble::build(spec, engine)?;
    region_conf_on(spec, quantizer, policy, conf, &ensemble)
}

pub fn region_conf_on<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    policy: &TransmitPolicy<T>,
    conf: ConferencingSpec<T>,
    ensemble: &Ensemble<T>,
) -> Result<RateConstraintSet<T>> {
    spec.require_two_user("conferencing region")?;
    region_cm_on(spec, quantizer, policy, ensemble)?.with_link_credits(conf.c12, conf.c21)
}

/// The four unconferenced bounds of a two-user, one-receiver policy region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoUserBounds<T> {
    pub a1: T,
    pub a2: T,
    pub a12: T,
    pub b: T,
}

impl<T: Real> TwoUserBounds<T> {
    /// Reads the bounds of a two-user common-message set (credits are not subtracted).
    pub fn from_set(set: &RateConstraintSet<T>) -> Result<Self> {
        if set.num_tx() != 2 || set.num_rx() != 1 {
            return Err(Error::Capability("two-user bounds need p = 2, q = 1".into()));
        }
        Ok(Self {
            a1: set.bound(0, Subset(1)),
            a2: set.bound(0, Subset(2)),
            a12: set.bound(0, Subset(3)),
            b: set.total(0),
        })
    }
}

/// Rate-splitting test: with `R12 = min(R1, C12)` and `R21 = min(R2, C21)`
/// sent over the conference as a common message, is the remaining private
/// tuple inside the common-message region?
pub fn conferencing_reduction_check<T: Real>(rates: (T, T), conf: ConferencingSpec<T>, bounds: &TwoUserBounds<T>) -> bool {
    let tol = T::rate_tol();
    let (r1, r2) = rates;
    let r12 = r1.min(conf.c12);
    let r21 = r2.min(conf.c21);
    let (t1, t2) = (r1 - r12, r2 - r21);
    t1 >= -tol
        && t1 <= bounds.a1 + tol
        && t2 >= -tol
        && t2 <= bounds.a2 + tol
        && t1 + t2 <= bounds.a12 + tol
        && r1 + r2 <= bounds.b + tol
}

/// Region with no CSIT: full constant power and constant correlations.
/// With `conf` the conferencing form is returned.
pub fn region_no_csit<T: Real>(
    spec: &FadingChannelSpec<T>,
    rho1: T,
    rho2: T,
    conf: Option<ConferencingSpec<T>>,
    engine: Engine,
) -> Result<RateConstraintSet<T>> {
    spec.require_two_user("no-CSIT region")?;
    let ensemble = Ensemble::build(spec, engine)?;
    region_no_csit_on(spec, rho1, rho2, conf, &ensemble)
}

pub fn region_no_csit_on<T: Real>(
    spec: &FadingChannelSpec<T>,
    rho1: T,
    rho2: T,
    conf: Option<ConferencingSpec<T>>,
    ensemble: &Ensemble<T>,
) -> Result<RateConstraintSet<T>> {
    spec.require_two_user("no-CSIT region")?;
    for r in [rho1, rho2] {
        ensure!(r >= T::zero() && r <= T::one(), Invalid, "rho = {r} must lie in [0, 1]");
    }
    let quantizer = CsitQuantizer::no_csit(2);
    let policy = TransmitPolicy::constant(spec.power_budget(), &[rho1, rho2]);
    match conf {
        None => region_cm_on(spec, &quantizer, &policy, ensemble),
        Some(c) => region_conf_on(spec, &quantizer, &policy, c, ensemble),
    }
}

/// Largest common rate: the fully correlated total bound at full power,
/// `E[C((S1^2 P1 + S2^2 P2 + 2 S1 S2 sqrt(P1 P2)) / s^2)]`.
pub fn max_common_rate<T: Real>(spec: &FadingChannelSpec<T>, engine: Engine) -> Result<ExpectationEstimate<T>> {
    spec.require_two_user("max common rate")?;
    let (p1, p2) = (spec.power_budget()[0], spec.power_budget()[1]);
    let noise = spec.noise_var()[0];
    let cross = T::lit(2.0) * (p1 * p2).sqrt();
    Ensemble::build(spec, engine)?.expect(|s| {
        let (s1, s2) = (s.get(0, 0), s.get(0, 1));
        cap((s1 * s1 * p1 + s2 * s2 * p2 + s1 * s2 * cross) / noise)
    })
}

/// Conferencing capacity that compensates a power deficit `P2 = alpha P1`:
/// `E[C(S1^2 alpha P1 / (s^2 + S2^2 alpha P2))]`, using the channel's budgets.
pub fn compensation_capacity<T: Real>(alpha: T, spec: &FadingChannelSpec<T>, engine: Engine) -> Result<ExpectationEstimate<T>> {
    spec.require_two_user("compensation capacity")?;
    ensure!(alpha > T::zero() && alpha < T::one(), Domain, "alpha = {alpha} must lie in (0, 1)");
    let (p1, p2) = (spec.power_budget()[0], spec.power_budget()[1]);
    let noise = spec.noise_var()[0];
    Ensemble::build(spec, engine)?.expect(|s| {
        let (s1, s2) = (s.get(0, 0), s.get(0, 1));
        cap(s1 * s1 * alpha * p1 / (noise + s2 * s2 * alpha * p2))
    })
}

/// `E[sqrt(phi_i phi_j) rho_i rho_j] / sqrt(E[phi_i] E[phi_j])`, the
/// correlation coefficient of the transmitted signals of `i` and `j`
/// (zero-based indices).
pub fn correlation_coefficient<T: Real>(
    policy: &TransmitPolicy<T>,
    i: usize,
    j: usize,
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    engine: Engine,
) -> Result<T> {
    let ensemble = Ensemble::build(spec, engine)?;
    correlation_coefficient_on(policy, i, j, spec, quantizer, &ensemble)
}

pub fn correlation_coefficient_on<T: Real>(
    policy: &TransmitPolicy<T>,
    i: usize,
    j: usize,
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    ensemble: &Ensemble<T>,
) -> Result<T> {
    ensure!(i != j, Invalid, "correlation needs two distinct transmitters");
    ensure!(i < spec.num_tx() && j < spec.num_tx(), Shape, "transmitter index out of range");
    policy.check_shape(spec, quantizer)?;
    let p = spec.num_tx();
    let est = ensemble.expect_many(3, |s, out| {
        let mut sym = [0; MAX_TX];
        let mut phi = [T::zero(); MAX_TX];
        let mut rho = [T::zero(); MAX_TX];
        quantizer.apply_into(s, &mut sym[..p])?;
        policy.eval_into(s, &sym[..p], &mut phi[..p], &mut rho[..p])?;
        out[0] = (phi[i] * phi[j]).sqrt() * rho[i] * rho[j];
        out[1] = phi[i];
        out[2] = phi[j];
        Ok(())
    })?;
    for (idx, e) in [(i, est[1]), (j, est[2])] {
        if e.value <= T::zero() {
            return Err(Error::UndefinedCorrelation { index: idx + 1 });
        }
    }
    Ok((est[0].value / (est[1].value * est[2].value).sqrt()).min(T::one()).max(T::zero()))
}

/// Draws of the superposition signaling
/// `X_i = sqrt(phi_i) (rho_i U + sqrt(1 - rho_i^2) V_i)` with `U`, `V_i`
/// independent standard normals, stored column-wise.
#[derive(Debug, Clone)]
pub struct SignalBlock<T> {
    num_tx: usize,
    states: StateBlock<T>,
    u: Vec<T>,
    v: Vec<T>,
    x: Vec<T>,
    power: Vec<T>,
}

/// One draw of [`SignalBlock`].
#[derive(Debug, Clone, Copy)]
pub struct GaussianSignalSample<'a, T> {
    pub state: StateView<'a, T>,
    pub u: T,
    pub v: &'a [T],
    pub x: &'a [T],
    /// `phi_i(E_i)` at this state.
    pub power: &'a [T],
}

impl<T: Real> SignalBlock<T> {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn get(&self, n: usize) -> GaussianSignalSample<'_, T> {
        let p = self.num_tx;
        GaussianSignalSample {
            state: self.states.get(n),
            u: self.u[n],
            v: &self.v[n * p..(n + 1) * p],
            x: &self.x[n * p..(n + 1) * p],
            power: &self.power[n * p..(n + 1) * p],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = GaussianSignalSample<'_, T>> + '_ {
        (0..self.len()).map(|n| self.get(n))
    }
}

/// States come from the same stream as `Engine::mc(count, seed)`, so
/// signal statistics can be compared with expectations on identical states.
pub fn gaussian_signal_samples<T: Real>(
    policy: &TransmitPolicy<T>,
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    count: usize,
    seed: u64,
) -> Result<SignalBlock<T>> {
    ensure!(count >= 2, Invalid, "need at least 2 signal samples");
    policy.check_shape(spec, quantizer)?;
    let p = spec.num_tx();
    let states = sample_block(spec, seed, count)?;
    let mut u = vec![T::zero(); count];
    let mut v = vec![T::zero(); count * p];
    let mut x = vec![T::zero(); count * p];
    let mut power = vec![T::zero(); count * p];
    let mut sym = vec![0; p];
    let mut rho = vec![T::zero(); p];
    for (chunk, start) in (0..count).step_by(SAMPLE_CHUNK).enumerate() {
        let mut rng = stream_rng(seed, SIGNAL_STREAM_BASE + chunk as u64);
        for n in start..(start + SAMPLE_CHUNK).min(count) {
            let s = states.get(n);
            quantizer.apply_into(s, &mut sym)?;
            let phi = &mut power[n * p..(n + 1) * p];
            policy.eval_into(s, &sym, phi, &mut rho)?;
            let common: f64 = rng.sample(StandardNormal);
            u[n] = T::lit(common);
            for k in 0..p {
                let own: f64 = rng.sample(StandardNormal);
                v[n * p + k] = T::lit(own);
                let r = rho[k];
                x[n * p + k] = phi[k].sqrt() * (r * u[n] + (T::one() - r * r).sqrt() * v[n * p + k]);
            }
        }
    }
    Ok(SignalBlock {
        num_tx: p,
        states,
        u,
        v,
        x,
        power,
    })
}

/// Policy grid searched by [`frontier`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyGrid {
    /// Uniform points on `[0, 1]` for each `rho_i(e)`.
    pub rho_points: usize,
    /// Power is split over CSIT cells in multiples of `1 / power_levels` of
    /// the budget; ignored for single-cell alphabets (full power).
    pub power_levels: usize,
    /// Refuse grids with more policies than this.
    pub max_policies: usize,
}

impl Default for PolicyGrid {
    fn default() -> Self {
        Self {
            rho_points: 21,
            power_levels: 4,
            max_policies: 200_000,
        }
    }
}

/// Which region family the frontier is taken over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionKind<T> {
    CommonMessage,
    Conferencing(ConferencingSpec<T>),
}

#[derive(Debug, Clone)]
pub struct FrontierPoint<T> {
    pub weights: WeightVector<T>,
    pub value: T,
    pub point: RatePoint<T>,
    pub policy_index: usize,
    pub policy: TransmitPolicy<T>,
}

fn uniform_grid<T: Real>(points: usize) -> Vec<T> {
    match points {
        0 => vec![],
        1 => vec![T::zero()],
        n => (0..n).map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)).collect(),
    }
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers.
pub(crate) fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn cartesian<X: Clone>(axes: &[Vec<X>]) -> Vec<Vec<X>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |x| {
                    let mut next = prefix.clone();
                    next.push(x.clone());
                    next
                })
            })
            .collect()
    })
}

/// Enumerates the tabular policies of `grid`. Power tables meet each budget
/// with equality under the cell probabilities of `ensemble`.
pub fn policy_grid<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    grid: &PolicyGrid,
    ensemble: &Ensemble<T>,
) -> Result<Vec<TransmitPolicy<T>>> {
    quantizer.check_arity(spec.num_tx())?;
    ensure!(grid.rho_points >= 1, Invalid, "policy grid is empty: rho_points = 0");
    let sizes = quantizer.alphabet_sizes();
    let p = spec.num_tx();

    // cell probabilities per transmitter
    let slots: usize = sizes.iter().sum();
    let probs = ensemble.expect_many(slots, |s, out| {
        out.iter_mut().for_each(|x| *x = T::zero());
        let mut sym = [0; MAX_TX];
        quantizer.apply_into(s, &mut sym[..p])?;
        let mut base = 0;
        for (k, m) in sizes.iter().enumerate() {
            out[base + sym[k]] = T::one();
            base += m;
        }
        Ok(())
    })?;

    let rhos = uniform_grid::<T>(grid.rho_points);
    let mut per_tx: Vec<Vec<(Vec<T>, Vec<T>)>> = Vec::with_capacity(p);
    let mut base = 0;
    for (k, &m) in sizes.iter().enumerate() {
        let cell: Vec<T> = probs[base..base + m].iter().map(|e| e.value).collect();
        base += m;
        let budget = spec.power_budget()[k];
        let power_tables: Vec<Vec<T>> = if m == 1 {
            vec![vec![budget]]
        } else {
            ensure!(grid.power_levels >= 1, Invalid, "policy grid is empty: power_levels = 0");
            compositions(grid.power_levels, m)
                .into_iter()
                .filter(|c| c.iter().zip(&cell).all(|(k, pr)| *k == 0 || *pr > T::zero()))
                .map(|c| {
                    c.iter()
                        .zip(&cell)
                        .map(|(k, pr)| {
                            if *k == 0 {
                                T::zero()
                            } else {
                                budget * T::from_usize_lossy(*k) / T::from_usize_lossy(grid.power_levels) / *pr
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let rho_tables = cartesian(&vec![rhos.clone(); m]);
        let mut options = Vec::new();
        for phi in &power_tables {
            for rho in &rho_tables {
                options.push((phi.clone(), rho.clone()));
            }
        }
        per_tx.push(options);
    }
    let count: u128 = per_tx.iter().map(|o| o.len() as u128).product();
    if count == 0 {
        return Err(Error::Invalid("policy grid is empty".into()));
    }
    if count > grid.max_policies as u128 {
        return Err(Error::Budget {
            what: "policy grid",
            needed: count,
            limit: grid.max_policies as u128,
        });
    }
    Ok(cartesian(&per_tx).into_iter().map(TransmitPolicy::tables).collect())
}

/// Weighted-sum frontier over a finite policy grid: for each weight vector
/// the best support value over all grid policies. This is an inner bound of
/// the capacity region, not its exact boundary.
pub fn frontier<T: Real>(
    spec: &FadingChannelSpec<T>,
    quantizer: &CsitQuantizer<T>,
    weights: &[WeightVector<T>],
    grid: &PolicyGrid,
    kind: RegionKind<T>,
    engine: Engine,
) -> Result<Vec<FrontierPoint<T>>> {
    ensure!(!weights.is_empty(), Invalid, "no weight vectors given");
    if let RegionKind::Conferencing(_) = kind {
        spec.require_two_user("conferencing frontier")?;
    }
    let ensemble = Ensemble::build(spec, engine)?;
    let policies = policy_grid(spec, quantizer, grid, &ensemble)?;
    let sets: Vec<RateConstraintSet<T>> = policies
        .par_iter()
        .map(|policy| match kind {
            RegionKind::CommonMessage => region_cm_on(spec, quantizer, policy, &ensemble),
            RegionKind::Conferencing(c) => region_conf_on(spec, quantizer, policy, c, &ensemble),
        })
        .collect::<Result<_>>()?;

    let tol = T::rate_tol();
    let mut out = Vec::with_capacity(weights.len());
    for w in weights {
        let mut best: Option<(usize, T, RatePoint<T>)> = None;
        for (idx, set) in sets.iter().enumerate() {
            let (value, point) = set.support_value(w)?;
            let better = match &best {
                None => true,
                Some((_, bv, bp)) => value > *bv + tol || (value >= *bv - tol && point.total() > bp.total() + tol),
            };
            if better {
                best = Some((idx, value, point));
            }
        }
        let (idx, value, point) = best.expect("grid is nonempty");
        out.push(FrontierPoint {
            weights: w.clone(),
            value,
            point,
            policy_index: idx,
            policy: policies[idx].clone(),
        });
    }
    Ok(out)
}

/// Unit weight vectors `(0, cos t, sin t)` for `t` uniform on `[0, pi/2]`.
pub fn planar_directions<T: Real>(count: usize) -> Vec<WeightVector<T>> {
    (0..count)
        .map(|i| {
            let t = if count == 1 {
                T::FRAC_PI_4()
            } else {
                T::FRAC_PI_2() * T::from_usize_lossy(i) / T::from_usize_lossy(count - 1)
            };
            WeightVector::new(vec![T::zero(), t.cos().max(T::zero()), t.sin().max(T::zero())]).expect("nonzero direction")
        })
        .collect()
}
