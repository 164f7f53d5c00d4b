//! Expectations over the channel state.
//!
//! Two engines estimate `E_S[f(S)]`: plain Monte Carlo over sampled states,
//! and a tensor-product Gauss-Laguerre rule for i.i.d. Rayleigh fading. With
//! `u = s^2` the Rayleigh density `2 s exp(-s^2) ds` becomes `exp(-u) du`, the
//! Laguerre weight, so the rule integrates `f(sqrt(u))` directly.
//!
//! Both engines materialize an [`Ensemble`] of states (with weights for
//! quadrature). Every bound of one constraint set is evaluated against the
//! same ensemble, so the bounds are consistent functions of the same states.

use rayon::prelude::*;

use crate::channel::{sample_block, FadingChannelSpec, FadingDistribution, StateBlock, StateView};
use crate::error::{ensure, Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Samples per reduction chunk. Results are bit-stable for a fixed chunk size.
pub const REDUCE_CHUNK: usize = 4096;

/// Largest `q * p` the quadrature engine accepts.
pub const MAX_QUAD_DIMS: usize = 3;

pub const DEFAULT_MC_SAMPLES: usize = 200_000;
pub const DEFAULT_QUAD_NODES: usize = 64;

/// `C(x) = 1/2 log2(1 + x)`, in bits.
pub fn capacity_fn<T: Real>(x: T) -> Result<T> {
    ensure!(x > -T::one(), Domain, "capacity function needs x > -1, got {x}");
    Ok(cap(x))
}

/// Unchecked `C(x)` for hot loops; callers guarantee `x > -1`.
#[inline]
pub(crate) fn cap<T: Real>(x: T) -> T {
    x.ln_1p() / (T::lit(2.0) * T::LN_2())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationEstimate<T> {
    pub value: T,
    /// Zero for quadrature.
    pub std_error: T,
    pub method: EstimateMethod,
}

/// How expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature { nodes: usize },
}

impl Engine {
    pub fn mc(samples: usize, seed: u64) -> Self {
        Self::MonteCarlo { samples, seed }
    }

    pub fn quad(nodes: usize) -> Self {
        Self::Quadrature { nodes }
    }

    fn method(&self) -> EstimateMethod {
        match *self {
            Self::MonteCarlo { samples, seed } => EstimateMethod::MonteCarlo { samples, seed },
            Self::Quadrature { nodes } => EstimateMethod::Quadrature { nodes },
        }
    }
}

/// A set of states with optional weights; uniform weights mean Monte Carlo.
#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    states: StateBlock<T>,
    weights: Option<Vec<T>>,
    method: EstimateMethod,
}

impl<T: Real> Ensemble<T> {
    pub fn build(spec: &FadingChannelSpec<T>, engine: Engine) -> Result<Self> {
        match engine {
            Engine::MonteCarlo { samples, seed } => {
                ensure!(samples >= 2, Invalid, "Monte Carlo needs at least 2 samples");
                let states = match spec.fading() {
                    // every draw is identical, one state carries the whole law
                    FadingDistribution::Deterministic(m) => {
                        StateBlock::from_flat(m.rows(), m.cols(), m.entries().to_vec())
                    }
                    _ => sample_block(spec, seed, samples)?,
                };
                Ok(Self {
                    states,
                    weights: None,
                    method: engine.method(),
                })
            }
            Engine::Quadrature { nodes } => {
                if !matches!(spec.fading(), FadingDistribution::IidRayleigh) {
                    return Err(Error::Capability(
                        "quadrature engine supports only i.i.d. Rayleigh fading".into(),
                    ));
                }
                let dims = spec.num_tx() * spec.num_rx();
                if dims > MAX_QUAD_DIMS {
                    return Err(Error::Capability(format!(
                        "quadrature engine supports q*p <= {MAX_QUAD_DIMS}, got {dims}"
                    )));
                }
                ensure!(nodes >= 1, Invalid, "quadrature needs at least one node");
                let (u, w) = gauss_laguerre(nodes);
                let total = nodes.pow(dims as u32);
                let mut data = Vec::with_capacity(total * dims);
                let mut weights = Vec::with_capacity(total);
                let mut idx = vec![0usize; dims];
                for _ in 0..total {
                    let mut weight = 1.0;
                    for &i in &idx {
                        data.push(T::lit(u[i].sqrt()));
                        weight *= w[i];
                    }
                    weights.push(T::lit(weight));
                    // odometer, last dimension fastest
                    for d in (0..dims).rev() {
                        idx[d] += 1;
                        if idx[d] < nodes {
                            break;
                        }
                        idx[d] = 0;
                    }
                }
                Ok(Self {
                    states: StateBlock::from_flat(spec.num_rx(), spec.num_tx(), data),
                    weights: Some(weights),
                    method: engine.method(),
                })
            }
        }
    }

    pub fn states(&self) -> &StateBlock<T> {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn method(&self) -> EstimateMethod {
        self.method
    }

    /// Weight of state `i` in the expectation.
    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Some(w) => w[i],
            None => T::one() / T::from_usize_lossy(self.len()),
        }
    }

    /// Estimates `n_out` expectations at once; `f` fills one value per output.
    pub fn expect_many<F>(&self, n_out: usize, f: F) -> Result<Vec<ExpectationEstimate<T>>>
    where
        F: Fn(StateView<'_, T>, &mut [T]) -> Result<()> + Sync,
    {
        let n = self.len();
        let chunks: Vec<ChunkStats<T>> = (0..n.div_ceil(REDUCE_CHUNK))
            .into_par_iter()
            .map(|c| self.chunk_stats(c, n_out, &f))
            .collect::<Result<_>>()?;

        let mut out = Vec::with_capacity(n_out);
        for k in 0..n_out {
            let total: CompensatedSum<T> = chunks.iter().map(|c| c.sums[k]).collect();
            let (value, std_error) = match &self.weights {
                Some(_) => (total.value(), T::zero()),
                None => {
                    let nf = T::from_usize_lossy(n);
                    let mean = total.value() / nf;
                    let mut m2 = CompensatedSum::new();
                    for c in &chunks {
                        let cn = T::from_usize_lossy(c.count);
                        let d = c.sums[k] / cn - mean;
                        m2.add(c.m2[k]);
                        m2.add(cn * d * d);
                    }
                    let se = if n > 1 {
                        (m2.value().max(T::zero()) / (nf - T::one()) / nf).sqrt()
                    } else {
                        T::zero()
                    };
                    (mean, se)
                }
            };
            out.push(ExpectationEstimate {
                value,
                std_error,
                method: self.method,
            });
        }
        Ok(out)
    }

    pub fn expect<F>(&self, f: F) -> Result<ExpectationEstimate<T>>
    where
        F: Fn(StateView<'_, T>) -> T + Sync,
    {
        Ok(self.expect_many(1, |s, out| {
            out[0] = f(s);
            Ok(())
        })?[0])
    }

    fn chunk_stats<F>(&self, chunk: usize, n_out: usize, f: &F) -> Result<ChunkStats<T>>
    where
        F: Fn(StateView<'_, T>, &mut [T]) -> Result<()>,
    {
        let start = chunk * REDUCE_CHUNK;
        let end = (start + REDUCE_CHUNK).min(self.len());
        let count = end - start;
        let mut values = vec![T::zero(); count * n_out];
        for (i, row) in (start..end).zip(values.chunks_exact_mut(n_out)) {
            f(self.states.get(i), row)?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        let mut sums = vec![T::zero(); n_out];
        let mut m2 = vec![T::zero(); n_out];
        for k in 0..n_out {
            let column = values.iter().skip(k).step_by(n_out);
            match &self.weights {
                Some(w) => {
                    sums[k] = column
                        .zip(&w[start..end])
                        .map(|(v, w)| *v * *w)
                        .collect::<CompensatedSum<T>>()
                        .value();
                }
                None => {
                    let s = column.clone().copied().collect::<CompensatedSum<T>>().value();
                    let mean = s / T::from_usize_lossy(count);
                    sums[k] = s;
                    m2[k] = column
                        .map(|v| (*v - mean) * (*v - mean))
                        .collect::<CompensatedSum<T>>()
                        .value();
                }
            }
        }
        Ok(ChunkStats { count, sums, m2 })
    }
}

struct ChunkStats<T> {
    count: usize,
    /// Plain sums for Monte Carlo, weighted sums for quadrature.
    sums: Vec<T>,
    m2: Vec<T>,
}

/// Monte Carlo estimate of `E_S[f(S)]`.
pub fn mc_expect<T: Real, F>(
    f: F,
    spec: &FadingChannelSpec<T>,
    samples: usize,
    seed: u64,
) -> Result<ExpectationEstimate<T>>
where
    F: Fn(StateView<'_, T>) -> T + Sync,
{
    Ensemble::build(spec, Engine::mc(samples, seed))?.expect(f)
}

/// Gauss-Laguerre estimate of `E_S[f(S)]` under i.i.d. Rayleigh fading.
pub fn quad_expect<T: Real, F>(f: F, spec: &FadingChannelSpec<T>, nodes_per_dim: usize) -> Result<ExpectationEstimate<T>>
where
    F: Fn(StateView<'_, T>) -> T + Sync,
{
    Ensemble::build(spec, Engine::quad(nodes_per_dim))?.expect(f)
}

/// Nodes and weights of the `n`-point Gauss-Laguerre rule for `exp(-x)` on `[0, inf)`.
///
/// Newton iteration on `L_n` from asymptotic starting guesses; the rule is
/// exact for polynomials of degree `2n - 1`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n {
        z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => z + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
            }
        };
        for _ in 0..100 {
            let (p1, p2) = laguerre_pair(n, z);
            let dp = nf * (p1 - p2) / z;
            let z_old = z;
            z = z_old - p1 / dp;
            if (z - z_old).abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        let (p1, p2) = laguerre_pair(n, z);
        let dp = nf * (p1 - p2) / z;
        x[i] = z;
        w[i] = -1.0 / (dp * nf * p2);
    }
    (x, w)
}

/// `(L_n(z), L_{n-1}(z))` by the three-term recurrence.
fn laguerre_pair(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0f64, 0.0f64);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
    }
    (p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingDistribution, StateSample};

    fn rayleigh_1x1() -> FadingChannelSpec<f64> {
        FadingChannelSpec::new(1, 1, vec![1.0], vec![1.0], FadingDistribution::IidRayleigh).unwrap()
    }

    /// `E[C(a S^2)]` for Rayleigh `S`: `1/2 e^{1/a} E1(1/a) / ln 2`.
    fn closed_form(a: f64) -> f64 {
        0.5 * (1.0 / a).exp() * exp_integral_e1(1.0 / a) / std::f64::consts::LN_2
    }

    /// Series for `E1(x)`, fine for small `x`.
    fn exp_integral_e1(x: f64) -> f64 {
        const EULER: f64 = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -EULER - x.ln() + sum
    }

    #[test]
    fn capacity_fn_values() {
        assert_eq!(capacity_fn(0.0f64).unwrap(), 0.0);
        assert!((capacity_fn(1.0f64).unwrap() - 0.5).abs() < 1e-15);
        assert!((capacity_fn(3.0f64).unwrap() - 1.0).abs() < 1e-15);
        assert!(capacity_fn(-0.5f64).is_ok());
        assert!(matches!(capacity_fn(-1.0f64), Err(Error::Domain(_))));
        assert!((capacity_fn(3.0f32).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn laguerre_rule_integrates_moments() {
        for n in [1usize, 2, 5, 16, 64] {
            let (x, w) = gauss_laguerre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "n={n}");
            let mut factorial = 1.0;
            for k in 1..(2 * n).min(24) {
                factorial *= k as f64;
                let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((m / factorial - 1.0).abs() < 1e-9, "n={n} k={k} m={m}");
            }
        }
    }

    #[test]
    fn constant_integrand() {
        let spec = rayleigh_1x1();
        let e = mc_expect(|_| 1.0, &spec, 1000, 3).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
        let q = quad_expect(|_| 1.0, &spec, 64).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12, "{}", q.value - 1.0);
        assert_eq!(q.std_error, 0.0);
    }

    #[test]
    fn second_moment() {
        let spec = rayleigh_1x1();
        let q = quad_expect(|s| s.get(0, 0).powi(2), &spec, 64).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
        let e = mc_expect(|s| s.get(0, 0).powi(2), &spec, 1_000_000, 11).unwrap();
        assert!((e.value - 1.0).abs() < 0.005);
    }

    #[test]
    fn single_link_ergodic_capacity() {
        let spec = rayleigh_1x1();
        let exact = closed_form(100.0);
        assert!((exact - 2.942).abs() < 5e-4, "{exact}");
        let f = |s: StateView<'_, f64>| cap(100.0 * s.get(0, 0).powi(2));
        let e = mc_expect(f, &spec, 1_000_000, 5).unwrap();
        assert!((e.value - exact).abs() < 0.01, "{}", e.value);
        assert!((e.value - exact).abs() < 4.0 * e.std_error);
        // the log singularity at u = -0.01 limits plain 64-node accuracy to ~1.3e-3
        let q64 = quad_expect(f, &spec, 64).unwrap();
        assert!((q64.value - exact).abs() < 2e-3, "{}", q64.value);
        let q128 = quad_expect(f, &spec, 128).unwrap();
        assert!((q128.value - exact).abs() < 1e-3, "{}", q128.value);
        assert!((e.value - q64.value).abs() < 3.0 * e.std_error + 1e-3);
    }

    #[test]
    fn non_finite_integrand_names_the_sample() {
        let spec = rayleigh_1x1();
        let ens = Ensemble::build(&spec, Engine::mc(10_000, 1)).unwrap();
        let err = ens
            .expect_many(1, |s, out| {
                out[0] = if s.get(0, 0) == ens.states().get(5000).get(0, 0) {
                    f64::NAN
                } else {
                    0.0
                };
                Ok(())
            })
            .unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 5000 });
    }

    #[test]
    fn deterministic_estimates_are_repeatable() {
        let spec = FadingChannelSpec::new(2, 1, vec![1.0], vec![1.0, 1.0], FadingDistribution::IidRayleigh).unwrap();
        let f = |s: StateView<'_, f64>| cap(10.0 * (s.get(0, 0) + s.get(0, 1)).powi(2));
        let a = mc_expect(f, &spec, 50_000, 8).unwrap();
        let b = mc_expect(f, &spec, 50_000, 8).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn quadrature_capabilities() {
        let spec = FadingChannelSpec::<f64>::two_user_unit(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(quad_expect(|_| 1.0, &spec, 8), Err(Error::Capability(_))));
        let big = FadingChannelSpec::new(2, 2, vec![1.0; 2], vec![1.0; 2], FadingDistribution::IidRayleigh).unwrap();
        assert!(matches!(quad_expect(|_| 1.0, &big, 8), Err(Error::Capability(_))));
    }

    #[test]
    fn deterministic_fading_collapses_to_one_state() {
        let spec = FadingChannelSpec::new(
            1,
            1,
            vec![1.0],
            vec![1.0],
            FadingDistribution::Deterministic(StateSample::new(1, 1, vec![2.0]).unwrap()),
        )
        .unwrap();
        let e = mc_expect(|s| s.get(0, 0), &spec, 1000, 1).unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn f32_engine() {
        let spec = FadingChannelSpec::<f32>::new(1, 1, vec![1.0], vec![1.0], FadingDistribution::IidRayleigh).unwrap();
        let q = quad_expect(|s| s.get(0, 0).powi(2), &spec, 32).unwrap();
        assert!((q.value - 1.0).abs() < 1e-4);
    }
}
