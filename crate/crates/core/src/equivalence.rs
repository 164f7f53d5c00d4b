//! Change of variables between the two parameterizations of the two-user
//! perfect-CSIT region.
//!
//! The transmitter view uses per-state powers and correlations `(phi_i, rho_i)`.
//! The receiver view uses received powers `(p0, p1, p2)` and a split `varrho`
//! of the common amplitude, all functions of `H = (S1^2, S2^2)`:
//!
//! ```text
//! p0 = (S1 rho1 sqrt(phi1) + S2 rho2 sqrt(phi2))^2
//! pi = Si^2 phi_i (1 - rho_i^2)
//! varrho = S1 rho1 sqrt(phi1) / sqrt(p0)
//! ```
//!
//! Under this map the capacity-function arguments of every bound agree state
//! by state, and `E[phi_i]` equals the receiver-view power cost exactly, so
//! the two regions coincide.

use std::fmt;
use std::sync::Arc;

use crate::channel::{CsitQuantizer, FadingChannelSpec, StateView};
use crate::error::{ensure, Error, Result};
use crate::expectation::{cap, Engine, Ensemble, ExpectationEstimate};
use crate::fading::{PolicyMap, TransmitPolicy, TxPolicy, POWER_REL_TOL};
use crate::region::{RateConstraintSet, ReceiverBounds};
use crate::scalar::Real;

/// Receiver-view values at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuValues<T> {
    pub p0: T,
    pub p1: T,
    pub p2: T,
    pub varrho: T,
}

/// Transmitter-view values at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyValues<T> {
    pub phi: [T; 2],
    pub rho: [T; 2],
}

pub type HFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Receiver-view policy: four functions of `(h1, h2) = (S1^2, S2^2)`.
#[derive(Clone)]
pub struct LiuUlukusPolicy<T> {
    pub p0: HFn<T>,
    pub p1: HFn<T>,
    pub p2: HFn<T>,
    pub varrho: HFn<T>,
}

impl<T> fmt::Debug for LiuUlukusPolicy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LiuUlukusPolicy(..)")
    }
}

fn cell<T: Real>(cuts: &[T], h: T) -> usize {
    cuts.partition_point(|c| *c <= h)
}

impl<T: Real> LiuUlukusPolicy<T> {
    pub fn from_fns(
        p0: impl Fn(T, T) -> T + Send + Sync + 'static,
        p1: impl Fn(T, T) -> T + Send + Sync + 'static,
        p2: impl Fn(T, T) -> T + Send + Sync + 'static,
        varrho: impl Fn(T, T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            p0: Arc::new(p0),
            p1: Arc::new(p1),
            p2: Arc::new(p2),
            varrho: Arc::new(varrho),
        }
    }

    /// Tables over the product grid of `h1` cells (split at `cuts1`) and `h2`
    /// cells (split at `cuts2`), indexed `[c1 * (cuts2.len() + 1) + c2]`.
    /// Each table holds `[p0, p1, p2, varrho]`.
    pub fn tabulated(cuts1: Vec<T>, cuts2: Vec<T>, table: Vec<[T; 4]>) -> Result<Self> {
        for cuts in [&cuts1, &cuts2] {
            ensure!(cuts.windows(2).all(|w| w[0] < w[1]), Invalid, "cuts must be strictly increasing");
        }
        let cells = (cuts1.len() + 1) * (cuts2.len() + 1);
        ensure!(table.len() == cells, Shape, "table has {} rows, grid has {cells} cells", table.len());
        let table = Arc::new(table);
        let (cuts1, cuts2) = (Arc::new(cuts1), Arc::new(cuts2));
        let col = |k: usize| -> HFn<T> {
            let (t, c1, c2) = (table.clone(), cuts1.clone(), cuts2.clone());
            Arc::new(move |h1, h2| t[cell(&c1, h1) * (c2.len() + 1) + cell(&c2, h2)][k])
        };
        Ok(Self {
            p0: col(0),
            p1: col(1),
            p2: col(2),
            varrho: col(3),
        })
    }

    /// Evaluates and range-checks the policy at `H`.
    pub fn eval(&self, h1: T, h2: T) -> Result<LuValues<T>> {
        let v = LuValues {
            p0: (self.p0)(h1, h2),
            p1: (self.p1)(h1, h2),
            p2: (self.p2)(h1, h2),
            varrho: (self.varrho)(h1, h2),
        };
        for (name, x) in [("p0", v.p0), ("p1", v.p1), ("p2", v.p2)] {
            ensure!(x >= T::zero() && x.is_finite(), Invalid, "{name} = {x} must be finite and >= 0");
        }
        ensure!(
            v.varrho >= T::zero() && v.varrho <= T::one(),
            Invalid,
            "varrho = {} must lie in [0, 1]",
            v.varrho
        );
        Ok(v)
    }

    fn eval_state(&self, s: StateView<'_, T>) -> Result<LuValues<T>> {
        let (s1, s2) = (s.get(0, 0), s.get(0, 1));
        self.eval(s1 * s1, s2 * s2)
    }

    /// Pulls a transmitter-view policy back to the receiver view. Tabular
    /// maps are resolved through `quantizer`.
    pub fn from_transmit_policy(policy: TransmitPolicy<T>, quantizer: CsitQuantizer<T>) -> Result<Self> {
        ensure!(policy.num_tx() == 2, Capability, "the change of variables needs p = 2");
        quantizer.check_arity(2)?;
        let shared = Arc::new((policy, quantizer));
        let col = |k: usize| -> HFn<T> {
            let shared = shared.clone();
            Arc::new(move |h1: T, h2: T| {
                let entries = [h1.sqrt(), h2.sqrt()];
                let s = StateView::new(1, 2, &entries);
                match policy_values(&shared.0, &shared.1, s) {
                    Ok(v) => {
                        let lu = to_lu_values(&v, entries);
                        [lu.p0, lu.p1, lu.p2, lu.varrho][k]
                    }
                    Err(_) => T::nan(),
                }
            })
        };
        Ok(Self {
            p0: col(0),
            p1: col(1),
            p2: col(2),
            varrho: col(3),
        })
    }

    /// Transmitter-view policy with per-state maps. States where the inverse
    /// is singular evaluate to NaN power, which policy validation rejects.
    pub fn to_transmit_policy(&self) -> TransmitPolicy<T> {
        let make = |pick: fn(&PolicyValues<T>) -> T| -> PolicyMap<T> {
            let lu = self.clone();
            PolicyMap::PerSample(Arc::new(move |s: StateView<'_, T>| {
                lu.eval_state(s)
                    .and_then(|v| from_lu_values(&v, [s.get(0, 0), s.get(0, 1)]))
                    .map_or(T::nan(), |pv| pick(&pv))
            }))
        };
        TransmitPolicy::new(vec![
            TxPolicy {
                power: make(|v| v.phi[0]),
                correlation: make(|v| v.rho[0]),
            },
            TxPolicy {
                power: make(|v| v.phi[1]),
                correlation: make(|v| v.rho[1]),
            },
        ])
    }
}

/// Transmitter view to receiver view at gains `s = [S1, S2]`.
pub fn to_lu_values<T: Real>(v: &PolicyValues<T>, s: [T; 2]) -> LuValues<T> {
    let amp1 = s[0] * v.rho[0] * v.phi[0].sqrt();
    let amp2 = s[1] * v.rho[1] * v.phi[1].sqrt();
    let sum = amp1 + amp2;
    let own = |k: usize| s[k] * s[k] * v.phi[k] * (T::one() - v.rho[k] * v.rho[k]);
    LuValues {
        p0: sum * sum,
        p1: own(0),
        p2: own(1),
        varrho: if sum > T::zero() { (amp1 / sum).min(T::one()) } else { T::zero() },
    }
}

/// Receiver view to transmitter view at gains `s = [S1, S2]`.
pub fn from_lu_values<T: Real>(v: &LuValues<T>, s: [T; 2]) -> Result<PolicyValues<T>> {
    let shares = [v.varrho, T::one() - v.varrho];
    let own = [v.p1, v.p2];
    let mut phi = [T::zero(); 2];
    let mut rho = [T::zero(); 2];
    for k in 0..2 {
        let received = own[k] + shares[k] * shares[k] * v.p0;
        if received > T::zero() {
            if s[k] <= T::zero() {
                return Err(Error::SingularState { index: k + 1 });
            }
            phi[k] = received / (s[k] * s[k]);
            rho[k] = (shares[k] * v.p0.sqrt() / received.sqrt()).min(T::one());
        }
    }
    Ok(PolicyValues { phi, rho })
}

fn policy_values<T: Real>(policy: &TransmitPolicy<T>, quantizer: &CsitQuantizer<T>, s: StateView<'_, T>) -> Result<PolicyValues<T>> {
    let mut sym = [0usize; 2];
    let mut phi = [T::zero(); 2];
    let mut rho = [T::zero(); 2];
    quantizer.apply_into(s, &mut sym)?;
    policy.eval_into(s, &sym, &mut phi, &mut rho)?;
    Ok(PolicyValues { phi, rho })
}

/// Receiver-view values of `policy` at one two-user state.
pub fn to_liu_ulukus<T: Real>(policy: &TransmitPolicy<T>, quantizer: &CsitQuantizer<T>, state: StateView<'_, T>) -> Result<LuValues<T>> {
    check_state(state)?;
    let v = policy_values(policy, quantizer, state)?;
    Ok(to_lu_values(&v, [state.get(0, 0), state.get(0, 1)]))
}

/// Transmitter-view values of `lu` at one two-user state.
pub fn from_liu_ulukus<T: Real>(lu: &LiuUlukusPolicy<T>, state: StateView<'_, T>) -> Result<PolicyValues<T>> {
    check_state(state)?;
    from_lu_values(&lu.eval_state(state)?, [state.get(0, 0), state.get(0, 1)])
}

fn check_state<T: Real>(state: StateView<'_, T>) -> Result<()> {
    if state.rows() != 1 || state.cols() != 2 {
        return Err(Error::Capability(format!(
            "the change of variables needs a 1x2 state, got {}x{}",
            state.rows(),
            state.cols()
        )));
    }
    Ok(())
}

/// Capacity-function arguments `[R1, R2, R1+R2, R0+R1+R2]` of the
/// transmitter-view bounds at one state.
pub fn tx_view_arguments<T: Real>(v: &PolicyValues<T>, s: [T; 2], noise: T) -> [T; 4] {
    let own = |k: usize| s[k] * s[k] * v.phi[k] * (T::one() - v.rho[k] * v.rho[k]);
    let (a1, a2) = (own(0), own(1));
    let b = s[0] * s[0] * v.phi[0]
        + s[1] * s[1] * v.phi[1]
        + T::lit(2.0) * s[0] * s[1] * v.rho[0] * v.rho[1] * (v.phi[0] * v.phi[1]).sqrt();
    [a1 / noise, a2 / noise, (a1 + a2) / noise, b / noise]
}

/// The same arguments in the receiver view.
pub fn rx_view_arguments<T: Real>(v: &LuValues<T>, noise: T) -> [T; 4] {
    [v.p1 / noise, v.p2 / noise, (v.p1 + v.p2) / noise, (v.p0 + v.p1 + v.p2) / noise]
}

/// Power cost of the receiver view at gains `s`: the transmit powers it implies.
pub fn lu_power_cost<T: Real>(v: &LuValues<T>, s: [T; 2]) -> Result<[T; 2]> {
    from_lu_values(v, s).map(|p| p.phi)
}

/// `E` of the receiver-view power cost for both transmitters.
pub fn lu_average_power<T: Real>(lu: &LiuUlukusPolicy<T>, ensemble: &Ensemble<T>) -> Result<Vec<ExpectationEstimate<T>>> {
    ensemble.expect_many(2, |s, out| {
        let cost = lu_power_cost(&lu.eval_state(s)?, [s.get(0, 0), s.get(0, 1)])?;
        out.copy_from_slice(&cost);
        Ok(())
    })
}

/// Checks the receiver-view power constraint against the channel budgets.
pub fn validate_lu<T: Real>(lu: &LiuUlukusPolicy<T>, spec: &FadingChannelSpec<T>, ensemble: &Ensemble<T>) -> Result<()> {
    spec.require_two_user("receiver-view policy")?;
    let avg = lu_average_power(lu, ensemble)?;
    for (k, (e, budget)) in avg.iter().zip(spec.power_budget()).enumerate() {
        if e.value > *budget * (T::one() + T::lit(POWER_REL_TOL)) + T::rate_tol() {
            return Err(Error::Infeasible(format!(
                "receiver-view power cost of transmitter {} is {}, budget {budget}",
                k + 1,
                e.value
            )));
        }
    }
    Ok(())
}

/// Region of a receiver-view policy:
/// `R1 <= E[C(p1)]`, `R2 <= E[C(p2)]`, `R1 + R2 <= E[C(p1 + p2)]`,
/// `R0 + R1 + R2 <= E[C(p0 + p1 + p2)]`, with powers divided by the noise
/// variance when it is not one.
pub fn region_rx_view<T: Real>(lu: &LiuUlukusPolicy<T>, spec: &FadingChannelSpec<T>, engine: Engine) -> Result<RateConstraintSet<T>> {
    spec.require_two_user("receiver-view region")?;
    let ensemble = Ensemble::build(spec, engine)?;
    region_rx_view_on(lu, spec, &ensemble)
}

pub fn region_rx_view_on<T: Real>(lu: &LiuUlukusPolicy<T>, spec: &FadingChannelSpec<T>, ensemble: &Ensemble<T>) -> Result<RateConstraintSet<T>> {
    validate_lu(lu, spec, ensemble)?;
    let noise = spec.noise_var()[0];
    let est = ensemble.expect_many(4, |s, out| {
        let args = rx_view_arguments(&lu.eval_state(s)?, noise);
        for (o, a) in out.iter_mut().zip(args) {
            *o = cap(a);
        }
        Ok(())
    })?;
    let bounds = [est[0].value, est[1].value, est[2].value];
    let rx = ReceiverBounds::new(2, |sub| bounds[sub.0 as usize - 1], est[3].value);
    RateConstraintSet::new(2, true, vec![rx])
}

/// Settings of the randomized round-trip suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Random policies drawn in each direction.
    pub policies: usize,
    /// Monte Carlo states shared by every policy.
    pub states: usize,
    pub seed: u64,
    /// Relative tolerance on the capacity-function arguments.
    pub argument_tol: f64,
    /// Relative tolerance on round-trip reconstruction.
    pub roundtrip_tol: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            policies: 1000,
            states: 256,
            seed: 0,
            argument_tol: 1e-12,
            roundtrip_tol: 1e-10,
        }
    }
}

/// Worst-case findings of [`equivalence_suite`]. Errors are relative, scaled
/// by `max(|a|, |b|, 1)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub tx_policies: usize,
    pub lu_policies: usize,
    pub state_checks: usize,
    pub max_argument_err: f64,
    pub max_roundtrip_err: f64,
    pub roundtrip_checks: usize,
    /// States skipped by the round trip because the inverse is not unique.
    pub degenerate_states: usize,
    /// Policies whose feasibility verdict differed between the two views.
    pub feasibility_mismatches: usize,
    pub feasible_seen: usize,
    pub infeasible_seen: usize,
}

impl SuiteReport {
    pub fn passed(&self, opts: &SuiteOptions) -> bool {
        self.max_argument_err <= opts.argument_tol
            && self.max_roundtrip_err <= opts.roundtrip_tol
            && self.feasibility_mismatches == 0
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Draws random perfect-CSIT policies and random receiver-view policies,
/// then checks at every state that both views give the same capacity
/// arguments and reconstruct each other, and that power feasibility agrees
/// under budgets placed just above or just below the policy's own cost.
pub fn equivalence_suite<T: Real>(spec: &FadingChannelSpec<T>, opts: &SuiteOptions) -> Result<SuiteReport> {
    use rand::Rng;

    spec.require_two_user("equivalence suite")?;
    ensure!(opts.policies >= 1 && opts.states >= 1, Invalid, "suite needs policies and states");
    let ensemble = Ensemble::build(spec, Engine::mc(opts.states, opts.seed))?;
    let noise = spec.noise_var()[0];
    let budget = [spec.power_budget()[0].to_f64_lossy(), spec.power_budget()[1].to_f64_lossy()];
    let no_csit = CsitQuantizer::no_csit(2);
    let mut rng = crate::channel::stream_rng(opts.seed, 1 << 61);
    let mut report = SuiteReport::default();

    // feasibility verdicts under a budget scaled around the actual cost
    let transport = |cost_tx: &[ExpectationEstimate<T>], cost_lu: &[ExpectationEstimate<T>], factor: f64, report: &mut SuiteReport| -> Result<()> {
        let limit: Vec<T> = cost_tx.iter().map(|c| c.value * T::lit(factor)).collect();
        let ok = |cost: &[ExpectationEstimate<T>]| {
            cost.iter()
                .zip(&limit)
                .all(|(c, l)| c.value <= *l * (T::one() + T::lit(POWER_REL_TOL)) + T::rate_tol())
        };
        let (a, b) = (ok(cost_tx), ok(cost_lu));
        if a != b {
            report.feasibility_mismatches += 1;
        }
        if a {
            report.feasible_seen += 1;
        } else {
            report.infeasible_seen += 1;
        }
        Ok(())
    };

    for _ in 0..opts.policies {
        // transmitter view: phi affine in the squared gains, rho decaying in the own gain
        let mut tx = Vec::with_capacity(2);
        for k in 0..2 {
            let (a, b, c) = (
                rng.random_range(0.0..budget[k]),
                rng.random_range(0.0..budget[k]),
                rng.random_range(0.0..budget[k]),
            );
            let (r, d) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..2.0));
            let (a, b, c, r, d) = (T::lit(a), T::lit(b), T::lit(c), T::lit(r), T::lit(d));
            tx.push(TxPolicy {
                power: PolicyMap::PerSample(Arc::new(move |s: StateView<'_, T>| {
                    let (s1, s2) = (s.get(0, 0), s.get(0, 1));
                    a + b * s1 * s1 + c * s2 * s2
                })),
                correlation: PolicyMap::PerSample(Arc::new(move |s: StateView<'_, T>| {
                    let g = s.get(0, k);
                    r / (T::one() + d * g * g)
                })),
            });
        }
        let policy = TransmitPolicy::new(tx);
        let lu = LiuUlukusPolicy::from_transmit_policy(policy.clone(), no_csit.clone())?;
        for s in ensemble.states().iter() {
            let gains = [s.get(0, 0), s.get(0, 1)];
            let v = policy_values(&policy, &no_csit, s)?;
            let image = lu.eval_state(s)?;
            let (a, b) = (tx_view_arguments(&v, gains, noise), rx_view_arguments(&image, noise));
            for (x, y) in a.iter().zip(&b) {
                report.max_argument_err = report.max_argument_err.max(rel_err(x.to_f64_lossy(), y.to_f64_lossy()));
            }
            report.state_checks += 1;
            let live = (0..2).all(|k| gains[k] > T::zero() && v.phi[k] > T::zero());
            if !live {
                report.degenerate_states += 1;
                continue;
            }
            let back = from_lu_values(&image, gains)?;
            for k in 0..2 {
                report.max_roundtrip_err = report
                    .max_roundtrip_err
                    .max(rel_err(back.phi[k].to_f64_lossy(), v.phi[k].to_f64_lossy()))
                    .max(rel_err(back.rho[k].to_f64_lossy(), v.rho[k].to_f64_lossy()));
            }
            report.roundtrip_checks += 1;
        }
        let cost_tx = policy.average_power(&ensemble, &no_csit)?;
        let cost_lu = lu_average_power(&lu, &ensemble)?;
        transport(&cost_tx, &cost_lu, rng.random_range(0.9..1.1), &mut report)?;
        report.tx_policies += 1;
    }

    for _ in 0..opts.policies {
        // receiver view: every received power vanishes with its own link
        let (a0, a1, a2) = (
            rng.random_range(0.0..budget[0] + budget[1]),
            rng.random_range(0.0..budget[0]),
            rng.random_range(0.0..budget[1]),
        );
        let (v0, e) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..2.0));
        let (a0, a1, a2, v0, e) = (T::lit(a0), T::lit(a1), T::lit(a2), T::lit(v0), T::lit(e));
        let lu = LiuUlukusPolicy::from_fns(
            move |h1, h2| a0 * h1 * h2 / (T::one() + h1 + h2),
            move |h1, _| a1 * h1,
            move |_, h2| a2 * h2,
            move |_, h2| v0 / (T::one() + e * h2),
        );
        let policy = lu.to_transmit_policy();
        for s in ensemble.states().iter() {
            let gains = [s.get(0, 0), s.get(0, 1)];
            let w = lu.eval_state(s)?;
            let v = policy_values(&policy, &no_csit, s)?;
            let (a, b) = (tx_view_arguments(&v, gains, noise), rx_view_arguments(&w, noise));
            for (x, y) in a.iter().zip(&b) {
                report.max_argument_err = report.max_argument_err.max(rel_err(x.to_f64_lossy(), y.to_f64_lossy()));
            }
            report.state_checks += 1;
            if !(w.p0 > T::zero()) {
                report.degenerate_states += 1;
                continue;
            }
            let back = to_lu_values(&v, gains);
            for (x, y) in [(back.p0, w.p0), (back.p1, w.p1), (back.p2, w.p2), (back.varrho, w.varrho)] {
                report.max_roundtrip_err = report.max_roundtrip_err.max(rel_err(x.to_f64_lossy(), y.to_f64_lossy()));
            }
            report.roundtrip_checks += 1;
        }
        let cost_lu = lu_average_power(&lu, &ensemble)?;
        let cost_tx = policy.average_power(&ensemble, &no_csit)?;
        transport(&cost_tx, &cost_lu, rng.random_range(0.9..1.1), &mut report)?;
        report.lu_policies += 1;
    }
    Ok(report)
}
