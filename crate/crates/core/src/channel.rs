//! Fading channel specifications, state sampling and CSIT quantization.
//!
//! A state is the `q x p` matrix of nonnegative fading amplitudes `S[j][k]`
//! multiplying transmitter `k`'s signal at receiver `j`. Samples are drawn in
//! fixed-size chunks, each from its own ChaCha stream keyed by `(seed, chunk)`,
//! so any prefix of a sequence is reproducible and chunks can be generated
//! independently.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;

/// Samples per independently seeded RNG stream.
pub const SAMPLE_CHUNK: usize = 1 << 14;

/// Converts a decibel quantity to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Owned realization of the channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: Real> StateSample<T> {
    /// Builds a state from row-major entries (`rows = q`, `cols = p`).
    pub fn new(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        ensure!(rows >= 1 && cols >= 1, Shape, "state must be at least 1x1");
        ensure!(
            entries.len() == rows * cols,
            Shape,
            "expected {} entries for a {rows}x{cols} state, got {}",
            rows * cols,
            entries.len()
        );
        if let Some(bad) = entries.iter().position(|s| !(*s >= T::zero()) || !s.is_finite()) {
            return Err(Error::Invalid(format!(
                "state entry {bad} is {} (entries must be finite and >= 0)",
                entries[bad]
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        ensure!(rows.iter().all(|row| row.len() == c), Shape, "ragged state matrix");
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn view(&self) -> StateView<'_, T> {
        StateView {
            rows: self.rows,
            cols: self.cols,
            entries: &self.entries,
        }
    }

    pub fn get(&self, rx: usize, tx: usize) -> T {
        self.view().get(rx, tx)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }
}

/// Borrowed view of a state, used on hot paths to avoid per-sample allocation.
#[derive(Debug, Clone, Copy)]
pub struct StateView<'a, T> {
    rows: usize,
    cols: usize,
    entries: &'a [T],
}

impl<'a, T: Real> StateView<'a, T> {
    pub fn new(rows: usize, cols: usize, entries: &'a [T]) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            entries,
        }
    }

    #[inline]
    pub fn get(&self, rx: usize, tx: usize) -> T {
        self.entries[rx * self.cols + tx]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &'a [T] {
        self.entries
    }

    pub fn to_owned(&self) -> StateSample<T> {
        StateSample {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.to_vec(),
        }
    }
}

pub type Sampler<T> = Arc<dyn Fn(&mut dyn RngCore) -> Vec<T> + Send + Sync>;
pub type Density<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Law of the state matrix.
#[derive(Clone)]
pub enum FadingDistribution<T> {
    /// Every draw returns the same matrix.
    Deterministic(StateSample<T>),
    /// Entries i.i.d. with density `2 s exp(-s^2)`.
    IidRayleigh,
    /// User-supplied joint sampler returning row-major entries. Use this for
    /// statistically dependent entries.
    Custom {
        sampler: Sampler<T>,
        marginal_density: Option<Density<T>>,
    },
}

impl<T> fmt::Debug for FadingDistribution<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic(m) => f.debug_tuple("Deterministic").field(m).finish(),
            Self::IidRayleigh => f.write_str("IidRayleigh"),
            Self::Custom {
                marginal_density, ..
            } => f
                .debug_struct("Custom")
                .field("has_marginal_density", &marginal_density.is_some())
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FadingChannelSpec<T> {
    num_tx: usize,
    num_rx: usize,
    noise_var: Vec<T>,
    power_budget: Vec<T>,
    fading: FadingDistribution<T>,
}

impl<T: Real> FadingChannelSpec<T> {
    pub fn new(
        num_tx: usize,
        num_rx: usize,
        noise_var: Vec<T>,
        power_budget: Vec<T>,
        fading: FadingDistribution<T>,
    ) -> Result<Self> {
        ensure!(
            (1..=crate::region::MAX_TX).contains(&num_tx),
            Invalid,
            "num_tx must be in 1..={}",
            crate::region::MAX_TX
        );
        ensure!(num_rx >= 1, Invalid, "num_rx must be >= 1");
        ensure!(
            noise_var.len() == num_rx,
            Shape,
            "noise_var has {} entries, expected {num_rx}",
            noise_var.len()
        );
        ensure!(
            power_budget.len() == num_tx,
            Shape,
            "power_budget has {} entries, expected {num_tx}",
            power_budget.len()
        );
        for (j, v) in noise_var.iter().enumerate() {
            ensure!(*v > T::zero() && v.is_finite(), Invalid, "noise_var[{j}] = {v} must be > 0");
        }
        for (i, v) in power_budget.iter().enumerate() {
            ensure!(*v >= T::zero() && v.is_finite(), Invalid, "power_budget[{i}] = {v} must be >= 0");
        }
        if let FadingDistribution::Deterministic(m) = &fading {
            ensure!(
                m.rows() == num_rx && m.cols() == num_tx,
                Shape,
                "deterministic state is {}x{}, expected {num_rx}x{num_tx}",
                m.rows(),
                m.cols()
            );
        }
        Ok(Self {
            num_tx,
            num_rx,
            noise_var,
            power_budget,
            fading,
        })
    }

    /// Two transmitters, one receiver, independent Rayleigh fading.
    pub fn two_user_rayleigh(p1: T, p2: T, noise_var: T) -> Result<Self> {
        Self::new(2, 1, vec![noise_var], vec![p1, p2], FadingDistribution::IidRayleigh)
    }

    /// Two transmitters, one receiver, all gains fixed at one.
    pub fn two_user_unit(p1: T, p2: T, noise_var: T) -> Result<Self> {
        Self::new(
            2,
            1,
            vec![noise_var],
            vec![p1, p2],
            FadingDistribution::Deterministic(StateSample::filled(1, 2, T::one())?),
        )
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn noise_var(&self) -> &[T] {
        &self.noise_var
    }

    pub fn power_budget(&self) -> &[T] {
        &self.power_budget
    }

    pub fn fading(&self) -> &FadingDistribution<T> {
        &self.fading
    }

    /// Same channel with different power budgets.
    pub fn with_power(&self, power_budget: Vec<T>) -> Result<Self> {
        Self::new(
            self.num_tx,
            self.num_rx,
            self.noise_var.clone(),
            power_budget,
            self.fading.clone(),
        )
    }

    pub(crate) fn state_len(&self) -> usize {
        self.num_tx * self.num_rx
    }

    pub(crate) fn require_two_user(&self, what: &str) -> Result<()> {
        if self.num_tx != 2 || self.num_rx != 1 {
            return Err(Error::Capability(format!(
                "{what} needs p = 2, q = 1 (got p = {}, q = {})",
                self.num_tx, self.num_rx
            )));
        }
        Ok(())
    }
}

/// Flat storage for a run of states, `len * rows * cols` entries row-major.
#[derive(Debug, Clone)]
pub struct StateBlock<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> StateBlock<T> {
    pub(crate) fn from_flat(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len() % (rows * cols), 0);
        Self { rows, cols, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.rows * self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: usize) -> StateView<'_, T> {
        let w = self.rows * self.cols;
        StateView::new(self.rows, self.cols, &self.data[index * w..(index + 1) * w])
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = StateView<'_, T>> + '_ {
        let (rows, cols) = (self.rows, self.cols);
        self.data
            .chunks_exact(rows * cols)
            .map(move |c| StateView::new(rows, cols, c))
    }

    pub fn to_samples(&self) -> Vec<StateSample<T>> {
        self.iter().map(|v| v.to_owned()).collect()
    }
}

/// RNG for one `(seed, stream)` pair. State draws use streams `0, 1, ...`
/// (one per chunk); other consumers offset their stream numbers.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    stream_rng(seed, chunk as u64)
}

#[inline]
pub(crate) fn rayleigh_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    (-u.ln()).sqrt()
}

fn fill_chunk<T: Real>(
    spec: &FadingChannelSpec<T>,
    seed: u64,
    chunk: usize,
    first: usize,
    out: &mut [T],
) -> Result<()> {
    let width = spec.state_len();
    let mut rng = chunk_rng(seed, chunk);
    match &spec.fading {
        FadingDistribution::Deterministic(m) => {
            for dst in out.chunks_exact_mut(width) {
                dst.copy_from_slice(m.entries());
            }
        }
        FadingDistribution::IidRayleigh => {
            for x in out.iter_mut() {
                *x = T::lit(rayleigh_draw(&mut rng));
            }
        }
        FadingDistribution::Custom { sampler, .. } => {
            for (offset, dst) in out.chunks_exact_mut(width).enumerate() {
                let draw = sampler(&mut rng);
                let index = first + offset;
                if draw.len() != width {
                    return Err(Error::Shape(format!(
                        "custom sampler returned {} entries at sample {index}, expected {width}",
                        draw.len()
                    )));
                }
                if let Some(bad) = draw.iter().find(|s| !(**s >= T::zero()) || !s.is_finite()) {
                    return Err(Error::Invalid(format!(
                        "custom sampler returned entry {bad} at sample {index}"
                    )));
                }
                dst.copy_from_slice(&draw);
            }
        }
    }
    Ok(())
}

/// Draws `count` states into flat storage.
pub fn sample_block<T: Real>(spec: &FadingChannelSpec<T>, seed: u64, count: usize) -> Result<StateBlock<T>> {
    ensure!(count >= 1, Invalid, "count must be >= 1");
    let width = spec.state_len();
    let mut data = vec![T::zero(); count * width];
    data.par_chunks_mut(SAMPLE_CHUNK * width)
        .enumerate()
        .try_for_each(|(chunk, out)| fill_chunk(spec, seed, chunk, chunk * SAMPLE_CHUNK, out))?;
    Ok(StateBlock::from_flat(spec.num_rx, spec.num_tx, data))
}

/// Draws `count` i.i.d. states; bit-identical for equal `(spec, seed, count)`.
pub fn sample_state<T: Real>(spec: &FadingChannelSpec<T>, seed: u64, count: usize) -> Result<Vec<StateSample<T>>> {
    Ok(sample_block(spec, seed, count)?.to_samples())
}

/// Rayleigh density `2 s exp(-s^2)`.
pub fn rayleigh_density<T: Real>(s: T) -> Result<T> {
    ensure!(s >= T::zero(), Domain, "rayleigh density needs s >= 0, got {s}");
    Ok(T::lit(2.0) * s * (-s * s).exp())
}

pub type CsitFn<T> = Arc<dyn Fn(StateView<'_, T>) -> usize + Send + Sync>;

/// One transmitter's CSIT map from the state to a finite alphabet.
#[derive(Clone)]
pub enum CsitMap<T> {
    /// Single-symbol alphabet.
    NoCsit,
    /// Partitions the range of entry `(row, col)` at the sorted `cuts`;
    /// the symbol is the number of cuts `<=` the entry.
    Threshold { row: usize, col: usize, cuts: Vec<T> },
    Custom { alphabet: usize, map: CsitFn<T> },
}

impl<T: fmt::Debug> fmt::Debug for CsitMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoCsit => f.write_str("NoCsit"),
            Self::Threshold { row, col, cuts } => f
                .debug_struct("Threshold")
                .field("row", row)
                .field("col", col)
                .field("cuts", cuts)
                .finish(),
            Self::Custom { alphabet, .. } => f
                .debug_struct("Custom")
                .field("alphabet", alphabet)
                .finish_non_exhaustive(),
        }
    }
}

impl<T: Real> CsitMap<T> {
    pub fn threshold(row: usize, col: usize, cuts: Vec<T>) -> Result<Self> {
        ensure!(!cuts.is_empty(), Invalid, "threshold needs at least one cut");
        ensure!(
            cuts.windows(2).all(|w| w[0] < w[1]) && cuts.iter().all(|c| c.is_finite()),
            Invalid,
            "threshold cuts must be finite and strictly increasing"
        );
        Ok(Self::Threshold { row, col, cuts })
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            Self::NoCsit => 1,
            Self::Threshold { cuts, .. } => cuts.len() + 1,
            Self::Custom { alphabet, .. } => *alphabet,
        }
    }

    fn symbol(&self, state: StateView<'_, T>) -> Result<usize> {
        match self {
            Self::NoCsit => Ok(0),
            Self::Threshold { row, col, cuts } => {
                if *row >= state.rows() || *col >= state.cols() {
                    return Err(Error::Shape(format!(
                        "threshold entry ({row}, {col}) outside {}x{} state",
                        state.rows(),
                        state.cols()
                    )));
                }
                let s = state.get(*row, *col);
                Ok(cuts.partition_point(|c| *c <= s))
            }
            Self::Custom { alphabet, map } => {
                let e = map(state);
                ensure!(e < *alphabet, Invalid, "custom CSIT map returned {e}, alphabet size is {alphabet}");
                Ok(e)
            }
        }
    }
}

/// Per-transmitter CSIT maps `E_i = xi_i(S)`.
#[derive(Debug, Clone)]
pub struct CsitQuantizer<T> {
    maps: Vec<CsitMap<T>>,
}

impl<T: Real> CsitQuantizer<T> {
    pub fn new(maps: Vec<CsitMap<T>>) -> Self {
        Self { maps }
    }

    pub fn no_csit(num_tx: usize) -> Self {
        Self::new(vec![CsitMap::NoCsit; num_tx])
    }

    pub fn num_tx(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[CsitMap<T>] {
        &self.maps
    }

    pub fn alphabet_sizes(&self) -> Vec<usize> {
        self.maps.iter().map(CsitMap::alphabet_size).collect()
    }

    pub(crate) fn check_arity(&self, num_tx: usize) -> Result<()> {
        ensure!(
            self.maps.len() == num_tx,
            Shape,
            "quantizer has {} maps, channel has {num_tx} transmitters",
            self.maps.len()
        );
        Ok(())
    }

    /// Writes the CSIT symbol of each transmitter into `out`.
    #[inline]
    pub fn apply_into(&self, state: StateView<'_, T>, out: &mut [usize]) -> Result<()> {
        for (slot, map) in out.iter_mut().zip(&self.maps) {
            *slot = map.symbol(state)?;
        }
        Ok(())
    }

    /// `(E_1, ..., E_p)` for one state.
    pub fn apply_csit(&self, state: &StateSample<T>) -> Result<Vec<usize>> {
        self.check_arity(state.cols())?;
        let mut out = vec![0; self.maps.len()];
        self.apply_into(state.view(), &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rayleigh_1x1() -> FadingChannelSpec<f64> {
        FadingChannelSpec::new(1, 1, vec![1.0], vec![1.0], FadingDistribution::IidRayleigh).unwrap()
    }

    #[test]
    fn deterministic_fading_repeats_the_matrix() {
        let spec = FadingChannelSpec::<f64>::two_user_unit(1.0, 1.0, 1.0).unwrap();
        let draws = sample_state(&spec, 9, 3).unwrap();
        assert_eq!(draws.len(), 3);
        for d in &draws {
            assert_eq!(d.entries(), &[1.0, 1.0]);
        }
    }

    #[test]
    fn sampling_is_reproducible_and_prefix_stable() {
        let spec = rayleigh_1x1();
        let a = sample_state(&spec, 42, 40_000).unwrap();
        let b = sample_state(&spec, 42, 40_000).unwrap();
        assert_eq!(a, b);
        let prefix = sample_state(&spec, 42, 100).unwrap();
        assert_eq!(&a[..100], &prefix[..]);
        let other = sample_state(&spec, 43, 100).unwrap();
        assert_ne!(prefix, other);
    }

    #[test]
    fn rayleigh_moments() {
        let block = sample_block(&rayleigh_1x1(), 1, 1_000_000).unwrap();
        let n = block.len() as f64;
        let m1: f64 = block.iter().map(|s| s.get(0, 0)).sum::<f64>() / n;
        let m2: f64 = block.iter().map(|s| s.get(0, 0).powi(2)).sum::<f64>() / n;
        assert!((m1 - std::f64::consts::PI.sqrt() / 2.0).abs() < 0.003, "{m1}");
        assert!((m2 - 1.0).abs() < 0.005, "{m2}");
    }

    #[test]
    fn custom_sampler_rejections() {
        let bad_shape = FadingDistribution::Custom {
            sampler: Arc::new(|_: &mut dyn RngCore| vec![1.0f64]),
            marginal_density: None,
        };
        let spec = FadingChannelSpec::new(2, 1, vec![1.0], vec![1.0, 1.0], bad_shape).unwrap();
        assert!(matches!(sample_state(&spec, 0, 2), Err(Error::Shape(_))));

        let negative = FadingDistribution::Custom {
            sampler: Arc::new(|_: &mut dyn RngCore| vec![1.0f64, -0.5]),
            marginal_density: None,
        };
        let spec = FadingChannelSpec::new(2, 1, vec![1.0], vec![1.0, 1.0], negative).unwrap();
        assert!(matches!(sample_state(&spec, 0, 2), Err(Error::Invalid(_))));
    }

    #[test]
    fn correlated_custom_sampler() {
        // both gains equal: a fully dependent pair
        let same = FadingDistribution::Custom {
            sampler: Arc::new(|rng: &mut dyn RngCore| {
                let s = rayleigh_draw(rng);
                vec![s, s]
            }),
            marginal_density: Some(Arc::new(|s: f64| rayleigh_density(s).unwrap())),
        };
        let spec = FadingChannelSpec::new(2, 1, vec![1.0], vec![1.0, 1.0], same).unwrap();
        for s in sample_state(&spec, 3, 50).unwrap() {
            assert_eq!(s.get(0, 0), s.get(0, 1));
        }
    }

    #[test]
    fn density_values() {
        assert_eq!(rayleigh_density(0.0f64).unwrap(), 0.0);
        assert!((rayleigh_density(1.0f64).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((rayleigh_density(1.0f64).unwrap() - 0.73576).abs() < 1e-5);
        assert!(matches!(rayleigh_density(-0.1f64), Err(Error::Domain(_))));
    }

    #[test]
    fn density_mode_is_inverse_sqrt_two() {
        let step = 1e-5;
        let (mode, _) = (0..300_000)
            .map(|i| i as f64 * step)
            .map(|s| (s, rayleigh_density(s).unwrap()))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((mode - std::f64::consts::FRAC_1_SQRT_2).abs() < 2.0 * step);
    }

    #[test]
    fn csit_maps() {
        let q = CsitQuantizer::<f64>::no_csit(3);
        let s = StateSample::new(1, 3, vec![0.2, 3.0, 1.0]).unwrap();
        assert_eq!(q.apply_csit(&s).unwrap(), vec![0, 0, 0]);

        let q = CsitQuantizer::new(vec![CsitMap::threshold(0, 0, vec![1.0]).unwrap()]);
        let low = StateSample::new(1, 1, vec![0.5]).unwrap();
        let high = StateSample::new(1, 1, vec![1.5]).unwrap();
        assert_eq!(q.apply_csit(&low).unwrap(), vec![0]);
        assert_eq!(q.apply_csit(&high).unwrap(), vec![1]);
    }

    #[test]
    fn independent_thresholds_per_transmitter() {
        let q = CsitQuantizer::new(vec![
            CsitMap::threshold(0, 0, vec![0.5, 1.0]).unwrap(),
            CsitMap::threshold(0, 0, vec![2.0]).unwrap(),
        ]);
        // S11 = 0.8: above the first cut of map 1, below map 2's cut
        let s = StateSample::new(1, 2, vec![0.8, 5.0]).unwrap();
        assert_eq!(q.apply_csit(&s).unwrap(), vec![1, 0]);
        assert_eq!(q.apply_csit(&s).unwrap(), q.apply_csit(&s).unwrap());
    }

    #[test]
    fn csit_errors() {
        let q = CsitQuantizer::<f64>::no_csit(2);
        let s = StateSample::new(1, 3, vec![1.0; 3]).unwrap();
        assert!(matches!(q.apply_csit(&s), Err(Error::Shape(_))));
        let q = CsitQuantizer::new(vec![CsitMap::<f64>::Custom {
            alphabet: 2,
            map: Arc::new(|_| 5),
        }]);
        let s = StateSample::new(1, 1, vec![1.0]).unwrap();
        assert!(q.apply_csit(&s).is_err());
        assert!(CsitMap::threshold(0, 0, vec![2.0f64, 1.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(FadingChannelSpec::<f64>::two_user_rayleigh(-1.0, 1.0, 1.0).is_err());
        assert!(FadingChannelSpec::<f64>::two_user_rayleigh(1.0, 1.0, 0.0).is_err());
        assert!(FadingChannelSpec::<f64>::new(0, 1, vec![1.0], vec![], FadingDistribution::IidRayleigh).is_err());
        let wrong = FadingDistribution::Deterministic(StateSample::filled(2, 2, 1.0).unwrap());
        assert!(FadingChannelSpec::new(2, 1, vec![1.0], vec![1.0, 1.0], wrong).is_err());
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((db_to_linear(23.01) - 200.0).abs() < 0.02);
    }
}
