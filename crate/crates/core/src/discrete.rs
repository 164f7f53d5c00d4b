//! Exact rate regions of small discrete memoryless multiple-access channels
//! with a common message.
//!
//! For an input law `P_U(u) prod_i P_{X_i|U}(x_i|u)` receiver `j` contributes
//! `a_j(L) = I(X_L; Y_j | X_{L^c}, U)` for every nonempty subset `L` and
//! `b_j = I(X_1..X_p; Y_j)`. All informations are in bits.

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::fading::{compositions, ConferencingSpec};
use crate::region::{pareto_indices, RateConstraintSet, RatePoint, ReceiverBounds, WeightVector};
use crate::scalar::Real;

/// Largest input or output tuple alphabet accepted.
pub const MAX_TUPLES: usize = 1 << 16;

/// Memoryless channel with finite alphabets.
///
/// Tuples are indexed in mixed radix with the first coordinate most
/// significant. `transition[x]` is the law of the output tuple given input
/// tuple `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannelSpec<T> {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    transition: Vec<Vec<T>>,
    /// Per receiver, `P(y_j | x)` flattened as `[x * |Y_j| + y_j]`.
    marginals: Vec<Vec<T>>,
}

fn tuple_count(sizes: &[usize], what: &str) -> Result<usize> {
    ensure!(!sizes.is_empty(), Invalid, "{what}: need at least one alphabet");
    ensure!(sizes.iter().all(|s| *s >= 1), Invalid, "{what}: alphabet sizes must be >= 1");
    let mut n: usize = 1;
    for s in sizes {
        n = n.saturating_mul(*s);
    }
    if n > MAX_TUPLES {
        return Err(Error::Capability(format!("{what}: {n} tuples exceeds the limit of {MAX_TUPLES}")));
    }
    Ok(n)
}

/// Digits of `index` in mixed radix `sizes`, first digit most significant.
fn digits(mut index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut d = vec![0; sizes.len()];
    for (k, s) in sizes.iter().enumerate().rev() {
        d[k] = index % s;
        index /= s;
    }
    d
}

fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut st = vec![1; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * sizes[k + 1];
    }
    st
}

impl<T: Real> DiscreteChannelSpec<T> {
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>, transition: Vec<Vec<T>>) -> Result<Self> {
        let nx = tuple_count(&inputs, "inputs")?;
        let ny = tuple_count(&outputs, "outputs")?;
        ensure!(transition.len() == nx, Shape, "transition has {} rows, expected {nx}", transition.len());
        for (x, row) in transition.iter().enumerate() {
            ensure!(row.len() == ny, Shape, "transition row {x} has {} entries, expected {ny}", row.len());
            ensure!(
                row.iter().all(|p| *p >= T::zero() && p.is_finite()),
                Invalid,
                "transition row {x} has a negative or non-finite entry"
            );
            let sum: T = row.iter().copied().sum();
            ensure!(
                (sum - T::one()).abs() <= T::prob_tol(),
                Invalid,
                "transition row {x} sums to {sum}, not 1"
            );
        }
        let ystr = strides(&outputs);
        let marginals = outputs
            .iter()
            .enumerate()
            .map(|(j, &yj)| {
                let mut m = vec![T::zero(); nx * yj];
                for (x, row) in transition.iter().enumerate() {
                    for (y, p) in row.iter().enumerate() {
                        let d = (y / ystr[j]) % yj;
                        m[x * yj + d] = m[x * yj + d] + *p;
                    }
                }
                m
            })
            .collect();
        Ok(Self {
            inputs,
            outputs,
            transition,
            marginals,
        })
    }

    /// Channel given as a function from input digits to the output tuple
    /// index.
    pub fn deterministic(inputs: Vec<usize>, outputs: Vec<usize>, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let nx = tuple_count(&inputs, "inputs")?;
        let ny = tuple_count(&outputs, "outputs")?;
        let rows = (0..nx)
            .map(|x| {
                let y = f(&digits(x, &inputs));
                ensure!(y < ny, Invalid, "output index {y} out of range");
                let mut row = vec![T::zero(); ny];
                row[y] = T::one();
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Self::new(inputs, outputs, rows)
    }

    /// `Y = X1 + X2` over binary inputs.
    pub fn binary_adder() -> Self {
        Self::deterministic(vec![2, 2], vec![3], |x| x[0] + x[1]).expect("valid channel")
    }

    /// Noiseless single-user channel on `size` symbols.
    pub fn identity(size: usize) -> Result<Self> {
        Self::deterministic(vec![size], vec![size], |x| x[0])
    }

    pub fn binary_symmetric(crossover: T) -> Result<Self> {
        ensure!(
            crossover >= T::zero() && crossover <= T::one(),
            Domain,
            "crossover {crossover} must lie in [0, 1]"
        );
        Self::new(
            vec![2],
            vec![2],
            vec![vec![T::one() - crossover, crossover], vec![crossover, T::one() - crossover]],
        )
    }

    pub fn num_tx(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_rx(&self) -> usize {
        self.outputs.len()
    }

    pub fn input_sizes(&self) -> &[usize] {
        &self.inputs
    }

    pub fn output_sizes(&self) -> &[usize] {
        &self.outputs
    }

    pub fn input_tuples(&self) -> usize {
        self.transition.len()
    }

    pub fn output_tuples(&self) -> usize {
        self.transition[0].len()
    }

    pub fn transition(&self) -> &[Vec<T>] {
        &self.transition
    }

    /// `P(y_j | x)` for receiver `j`, flattened `[x * |Y_j| + y_j]`.
    pub fn receiver_marginal(&self, j: usize) -> &[T] {
        &self.marginals[j]
    }

    /// Splits an input tuple index into per-transmitter symbols.
    pub fn input_digits(&self, x: usize) -> Vec<usize> {
        digits(x, &self.inputs)
    }

    pub fn input_index(&self, symbols: &[usize]) -> usize {
        symbols.iter().zip(&self.inputs).fold(0, |acc, (s, n)| acc * n + s)
    }

    pub fn output_digits(&self, y: usize) -> Vec<usize> {
        digits(y, &self.outputs)
    }

    /// Largest auxiliary alphabet needed: `prod |X_i| + q 2^p - 1`.
    pub fn auxiliary_bound(&self) -> usize {
        self.input_tuples() + self.num_rx() * (1usize << self.num_tx().min(20)) - 1
    }
}

fn check_distribution<T: Real>(row: &[T], what: &str) -> Result<()> {
    ensure!(!row.is_empty(), Invalid, "{what} is empty");
    ensure!(
        row.iter().all(|p| *p >= T::zero() && p.is_finite()),
        Invalid,
        "{what} has a negative or non-finite entry"
    );
    let sum: T = row.iter().copied().sum();
    ensure!((sum - T::one()).abs() <= T::prob_tol(), Invalid, "{what} sums to {sum}, not 1");
    Ok(())
}

/// `P_U` and the conditionals `P_{X_i|U}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputLaw<T> {
    pu: Vec<T>,
    /// `cond[i][u]` is the law of `X_i` given `U = u`.
    cond: Vec<Vec<Vec<T>>>,
}

impl<T: Real> InputLaw<T> {
    pub fn new(pu: Vec<T>, cond: Vec<Vec<Vec<T>>>) -> Result<Self> {
        check_distribution(&pu, "P_U")?;
        ensure!(!cond.is_empty(), Invalid, "need at least one transmitter");
        for (i, table) in cond.iter().enumerate() {
            ensure!(
                table.len() == pu.len(),
                Shape,
                "conditional of X{} has {} rows, |U| = {}",
                i + 1,
                table.len(),
                pu.len()
            );
            let width = table[0].len();
            for (u, row) in table.iter().enumerate() {
                ensure!(row.len() == width, Shape, "conditional of X{} is ragged", i + 1);
                check_distribution(row, &format!("P(X{} | U = {u})", i + 1))?;
            }
        }
        Ok(Self { pu, cond })
    }

    /// Independent inputs with a trivial auxiliary.
    pub fn independent(marginals: Vec<Vec<T>>) -> Result<Self> {
        Self::new(vec![T::one()], marginals.into_iter().map(|m| vec![m]).collect())
    }

    /// Independent uniform inputs for `channel`.
    pub fn uniform(channel: &DiscreteChannelSpec<T>) -> Self {
        let marginals = channel
            .input_sizes()
            .iter()
            .map(|&n| vec![T::one() / T::from_usize_lossy(n); n])
            .collect();
        Self::independent(marginals).expect("uniform law is valid")
    }

    pub fn u_size(&self) -> usize {
        self.pu.len()
    }

    pub fn pu(&self) -> &[T] {
        &self.pu
    }

    pub fn conditional(&self, tx: usize) -> &[Vec<T>] {
        &self.cond[tx]
    }

    pub fn num_tx(&self) -> usize {
        self.cond.len()
    }

    /// Shapes against `channel` and the auxiliary cardinality bound.
    pub fn check_for(&self, channel: &DiscreteChannelSpec<T>) -> Result<()> {
        ensure!(
            self.cond.len() == channel.num_tx(),
            Shape,
            "law has {} transmitters, channel has {}",
            self.cond.len(),
            channel.num_tx()
        );
        for (i, (table, n)) in self.cond.iter().zip(channel.input_sizes()).enumerate() {
            ensure!(
                table[0].len() == *n,
                Shape,
                "conditional of X{} has {} columns, alphabet has {n}",
                i + 1,
                table[0].len()
            );
        }
        let bound = channel.auxiliary_bound();
        ensure!(
            self.u_size() <= bound,
            Invalid,
            "|U| = {} exceeds the cardinality bound {bound}",
            self.u_size()
        );
        Ok(())
    }

    /// `P(u, x)` flattened `[u * |X| + x]`.
    pub fn joint(&self, channel: &DiscreteChannelSpec<T>) -> Vec<T> {
        let nx = channel.input_tuples();
        let mut out = Vec::with_capacity(self.u_size() * nx);
        for (u, pu) in self.pu.iter().enumerate() {
            for x in 0..nx {
                let d = channel.input_digits(x);
                let p = d.iter().enumerate().fold(*pu, |acc, (i, s)| acc * self.cond[i][u][*s]);
                out.push(p);
            }
        }
        out
    }
}

fn plogp<T: Real>(p: T) -> T {
    if p > T::zero() {
        p * p.log2()
    } else {
        T::zero()
    }
}

/// `H(Y | G)` from an unnormalized table `q[g * ny + y]` of `P(g, y)`.
fn conditional_entropy<T: Real>(q: &[T], ny: usize) -> T {
    let mut h = T::zero();
    for row in q.chunks_exact(ny) {
        let total: T = row.iter().copied().sum();
        h = h + plogp(total) - row.iter().map(|p| plogp(*p)).sum::<T>();
    }
    h
}

/// Per-receiver informations of one law: `a[j][mask]` (index 0 unused) and `b[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LawInformation<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
}

pub fn law_information<T: Real>(channel: &DiscreteChannelSpec<T>, law: &InputLaw<T>) -> Result<LawInformation<T>> {
    law.check_for(channel)?;
    let joint = law.joint(channel);
    Ok(information_of_joint(channel, &joint, law.u_size()))
}

fn information_of_joint<T: Real>(channel: &DiscreteChannelSpec<T>, joint: &[T], nu: usize) -> LawInformation<T> {
    let p = channel.num_tx();
    let nx = channel.input_tuples();
    let xstr = strides(channel.input_sizes());
    let xdig: Vec<Vec<usize>> = (0..nx).map(|x| channel.input_digits(x)).collect();
    let mut px = vec![T::zero(); nx];
    for u in 0..nu {
        for x in 0..nx {
            px[x] = px[x] + joint[u * nx + x];
        }
    }
    let mut a_all = Vec::with_capacity(channel.num_rx());
    let mut b_all = Vec::with_capacity(channel.num_rx());
    for j in 0..channel.num_rx() {
        let ny = channel.output_sizes()[j];
        let py_x = channel.receiver_marginal(j);
        // H(Y | X), the same with or without U
        let mut h_given_x = T::zero();
        let mut py = vec![T::zero(); ny];
        for x in 0..nx {
            let row = &py_x[x * ny..(x + 1) * ny];
            h_given_x = h_given_x - px[x] * row.iter().map(|p| plogp(*p)).sum::<T>();
            for y in 0..ny {
                py[y] = py[y] + px[x] * row[y];
            }
        }
        let h_y = -py.iter().map(|p| plogp(*p)).sum::<T>();
        b_all.push((h_y - h_given_x).max(T::zero()));

        let mut a = vec![T::zero(); 1 << p];
        let mut acc = vec![T::zero(); nu * nx * ny];
        for mask in 1usize..(1 << p) {
            acc.iter_mut().for_each(|v| *v = T::zero());
            for u in 0..nu {
                for x in 0..nx {
                    let w = joint[u * nx + x];
                    if w == T::zero() {
                        continue;
                    }
                    // keep only the coordinates outside the subset
                    let key = (0..p).filter(|i| mask & (1 << i) == 0).map(|i| xdig[x][i] * xstr[i]).sum::<usize>();
                    let base = (u * nx + key) * ny;
                    for y in 0..ny {
                        acc[base + y] = acc[base + y] + w * py_x[x * ny + y];
                    }
                }
            }
            a[mask] = (conditional_entropy(&acc, ny) - h_given_x).max(T::zero());
        }
        a_all.push(a);
    }
    LawInformation { a: a_all, b: b_all }
}

/// Constraint set of one input law, with a common-message coordinate.
pub fn region_for_law<T: Real>(channel: &DiscreteChannelSpec<T>, law: &InputLaw<T>) -> Result<RateConstraintSet<T>> {
    let info = law_information(channel, law)?;
    set_from_information(channel.num_tx(), &info)
}

fn set_from_information<T: Real>(p: usize, info: &LawInformation<T>) -> Result<RateConstraintSet<T>> {
    let tol = T::rate_tol();
    let receivers = info
        .a
        .iter()
        .zip(&info.b)
        .map(|(a, b)| {
            // I(X_L; Y | X_L^c, U) <= I(X; Y) exactly; trim rounding excess
            ReceiverBounds::new(p, |s| a[s.0 as usize].min(*b + tol), *b)
        })
        .collect();
    RateConstraintSet::new(p, true, receivers)
}

/// Two encoders with conferencing links: the private bounds gain the link
/// credits, `R1 + R2 <= I(X1 X2; Y)` carries none.
pub fn willems_region<T: Real>(
    channel: &DiscreteChannelSpec<T>,
    law: &InputLaw<T>,
    conf: ConferencingSpec<T>,
) -> Result<RateConstraintSet<T>> {
    if channel.num_tx() != 2 || channel.num_rx() != 1 {
        return Err(Error::Capability(format!(
            "conferencing region needs p = 2, q = 1 (got p = {}, q = {})",
            channel.num_tx(),
            channel.num_rx()
        )));
    }
    region_for_law(channel, law)?.with_link_credits(conf.c12, conf.c21)
}

/// Enumeration settings for [`brute_force_region`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceOptions {
    /// Probabilities are multiples of `1 / denominator`.
    pub denominator: usize,
    /// Largest auxiliary alphabet tried (also capped by the cardinality bound).
    pub u_size_cap: usize,
    /// Refuse enumerations larger than this many laws.
    pub max_laws: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            denominator: 8,
            u_size_cap: 4,
            max_laws: 5_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteFrontierPoint<T> {
    pub weights: WeightVector<T>,
    pub value: T,
    pub point: RatePoint<T>,
    pub law: InputLaw<T>,
}

/// Grid rows for one alphabet: all multiples of `1/d` plus the uniform law.
fn grid_rows<T: Real>(size: usize, d: usize) -> Vec<Vec<T>> {
    let mut rows: Vec<Vec<T>> = compositions(d, size)
        .into_iter()
        .map(|c| c.iter().map(|k| T::from_usize_lossy(*k) / T::from_usize_lossy(d)).collect())
        .collect();
    if d % size != 0 {
        rows.push(vec![T::one() / T::from_usize_lossy(size); size]);
    }
    rows
}

fn multichoose(n: usize, k: usize) -> u128 {
    // C(n + k - 1, k)
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r * (n as u128 + i) / (i + 1);
    }
    r
}

/// Nondecreasing index tuples of length `k` over `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Union of the law regions over a probability grid, probed by weighted sums.
///
/// Laws with `|U| = k` use strictly positive `P_U` on the grid and
/// conditional rows taken as a multiset (auxiliary relabelings are
/// redundant). For each weight the best support point over all laws is
/// kept; the non-dominated survivors are returned with their laws. This is
/// an inner bound that tightens as the grid is refined.
pub fn brute_force_region<T: Real>(
    channel: &DiscreteChannelSpec<T>,
    weights: &[WeightVector<T>],
    opts: &BruteForceOptions,
) -> Result<Vec<DiscreteFrontierPoint<T>>> {
    ensure!(!weights.is_empty(), Invalid, "no weight vectors given");
    ensure!(opts.denominator >= 1, Invalid, "grid denominator must be >= 1");
    ensure!(opts.u_size_cap >= 1, Invalid, "u_size_cap must be >= 1");
    let p = channel.num_tx();
    for w in weights {
        ensure!(
            w.as_slice().len() == p + 1,
            Shape,
            "weight vector has {} entries, expected {}",
            w.as_slice().len(),
            p + 1
        );
    }

    let per_tx: Vec<Vec<Vec<T>>> = channel.input_sizes().iter().map(|&n| grid_rows(n, opts.denominator)).collect();
    let row_count: usize = per_tx.iter().map(Vec::len).product();
    let row_at = |mut r: usize| -> Vec<&Vec<T>> {
        let mut picks = vec![&per_tx[0][0]; p];
        for i in (0..p).rev() {
            picks[i] = &per_tx[i][r % per_tx[i].len()];
            r /= per_tx[i].len();
        }
        picks
    };

    let max_u = opts.u_size_cap.min(channel.auxiliary_bound()).min(opts.denominator);
    let pu_options: Vec<Vec<Vec<usize>>> = (1..=max_u)
        .map(|k| {
            compositions(opts.denominator - k, k)
                .into_iter()
                .map(|c| c.into_iter().map(|x| x + 1).collect())
                .collect()
        })
        .collect();
    let needed: u128 = (1..=max_u)
        .map(|k| pu_options[k - 1].len() as u128 * multichoose(row_count, k))
        .sum();
    if needed > opts.max_laws as u128 {
        return Err(Error::Budget {
            what: "input-law enumeration",
            needed,
            limit: opts.max_laws as u128,
        });
    }

    let build_law = |pu: &[usize], rows: &[usize]| -> InputLaw<T> {
        let d = T::from_usize_lossy(opts.denominator);
        let pu: Vec<T> = pu.iter().map(|k| T::from_usize_lossy(*k) / d).collect();
        let picked: Vec<Vec<&Vec<T>>> = rows.iter().map(|r| row_at(*r)).collect();
        let cond = (0..p).map(|i| picked.iter().map(|pk| pk[i].clone()).collect()).collect();
        InputLaw { pu, cond }
    };

    type Best<T> = Vec<Option<(T, u128, RatePoint<T>)>>;
    let better = |a: &(T, u128, RatePoint<T>), b: &(T, u128, RatePoint<T>)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    let merge = |mut x: Best<T>, y: Best<T>| -> Best<T> {
        for (slot, cand) in x.iter_mut().zip(y) {
            if let Some(c) = cand {
                if slot.as_ref().is_none_or(|s| better(&c, s)) {
                    *slot = Some(c);
                }
            }
        }
        x
    };

    let mut best: Best<T> = vec![None; weights.len()];
    let mut offset: u128 = 0;
    let mut index_map: Vec<(u128, usize, Vec<Vec<usize>>)> = Vec::new();
    for k in 1..=max_u {
        let sets = multisets(row_count, k);
        let pus = &pu_options[k - 1];
        let count = pus.len() * sets.len();
        let local: Best<T> = (0..count)
            .into_par_iter()
            .map(|i| -> Result<Best<T>> {
                let law = build_law(&pus[i / sets.len()], &sets[i % sets.len()]);
                let joint = law.joint(channel);
                let set = set_from_information(p, &information_of_joint(channel, &joint, k))?;
                let id = offset + i as u128;
                weights
                    .iter()
                    .map(|w| set.support_value(w).map(|(v, pt)| Some((v, id, pt))))
                    .collect()
            })
            .try_reduce(|| vec![None; weights.len()], |a, b| Ok(merge(a, b)))?;
        best = merge(best, local);
        index_map.push((offset, k, sets));
        offset += count as u128;
    }

    let law_of = |id: u128| -> InputLaw<T> {
        let (start, k, sets) = index_map.iter().rev().find(|(s, _, _)| *s <= id).expect("id in range");
        let local = (id - start) as usize;
        build_law(&pu_options[k - 1][local / sets.len()], &sets[local % sets.len()])
    };

    let found: Vec<(usize, T, u128, RatePoint<T>)> = best
        .into_iter()
        .enumerate()
        .map(|(w, b)| {
            let (v, id, pt) = b.expect("at least one law");
            (w, v, id, pt)
        })
        .collect();
    let points: Vec<RatePoint<T>> = found.iter().map(|f| f.3.clone()).collect();
    let keep = pareto_indices(&points);
    let mut out: Vec<DiscreteFrontierPoint<T>> = Vec::with_capacity(keep.len());
    for i in keep {
        let (w, v, id, pt) = &found[i];
        if out.iter().any(|o| o.point == *pt) {
            continue;
        }
        out.push(DiscreteFrontierPoint {
            weights: weights[*w].clone(),
            value: *v,
            point: pt.clone(),
            law: law_of(*id),
        });
    }
    Ok(out)
}

/// Weight vectors `(mu_0, .., mu_p)` with entries in `0..=steps` summing to
/// `steps`, scaled to unit sum.
pub fn simplex_weights<T: Real>(dims: usize, steps: usize) -> Vec<WeightVector<T>> {
    compositions(steps, dims)
        .into_iter()
        .map(|c| {
            WeightVector::new(c.iter().map(|k| T::from_usize_lossy(*k) / T::from_usize_lossy(steps)).collect())
                .expect("nonzero weight")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::Subset;

    fn h(ps: &[f64]) -> f64 {
        -ps.iter().filter(|p| **p > 0.0).map(|p| p * p.log2()).sum::<f64>()
    }

    #[test]
    fn noiseless_bit() {
        let ch = DiscreteChannelSpec::<f64>::identity(2).unwrap();
        let set = region_for_law(&ch, &InputLaw::uniform(&ch)).unwrap();
        assert!((set.bound(0, Subset(1)) - 1.0).abs() < 1e-15);
        assert!((set.total(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adder_uniform() {
        let ch = DiscreteChannelSpec::<f64>::binary_adder();
        let set = region_for_law(&ch, &InputLaw::uniform(&ch)).unwrap();
        assert!((set.bound(0, Subset(1)) - 1.0).abs() < 1e-15);
        assert!((set.bound(0, Subset(2)) - 1.0).abs() < 1e-15);
        assert!((set.bound(0, Subset(3)) - 1.5).abs() < 1e-15);
        assert!((set.total(0) - h(&[0.25, 0.5, 0.25])).abs() < 1e-15);
        assert!(set.check_submodular().unwrap().is_none());
    }

    #[test]
    fn degenerate_input_has_no_private_rate() {
        let ch = DiscreteChannelSpec::<f64>::binary_adder();
        let law = InputLaw::new(
            vec![0.3, 0.7],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.5, 0.5], vec![0.2, 0.8]]],
        )
        .unwrap();
        let set = region_for_law(&ch, &law).unwrap();
        assert!(set.bound(0, Subset(1)).abs() < 1e-15);
        assert!(set.total(0) > set.bound(0, Subset(3)));
    }

    #[test]
    fn validation() {
        assert!(DiscreteChannelSpec::<f64>::new(vec![2], vec![2], vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(DiscreteChannelSpec::<f64>::new(vec![2], vec![2], vec![vec![1.0, 0.0]]).is_err());
        assert!(InputLaw::<f64>::new(vec![0.5, 0.6], vec![vec![vec![1.0], vec![1.0]]]).is_err());
        let ch = DiscreteChannelSpec::<f64>::identity(2).unwrap();
        let big = InputLaw::new(vec![0.25; 4], vec![vec![vec![0.5, 0.5]; 4]]).unwrap();
        // bound is 2 + 1 * 2 - 1 = 3
        assert!(matches!(region_for_law(&ch, &big), Err(Error::Invalid(_))));
        let wrong = InputLaw::independent(vec![vec![1.0 / 3.0; 3]]).unwrap();
        assert!(matches!(region_for_law(&ch, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn mixed_radix_roundtrip() {
        let ch = DiscreteChannelSpec::<f64>::deterministic(vec![2, 3, 2], vec![7], |x| x[0] + x[1] + x[2]).unwrap();
        for x in 0..ch.input_tuples() {
            assert_eq!(ch.input_index(&ch.input_digits(x)), x);
        }
        assert_eq!(ch.input_digits(5), vec![0, 2, 1]);
    }

    #[test]
    fn multi_receiver_marginals() {
        // Y1 = X, Y2 = 0 always
        let ch = DiscreteChannelSpec::<f64>::deterministic(vec![2], vec![2, 2], |x| x[0] * 2).unwrap();
        let set = region_for_law(&ch, &InputLaw::uniform(&ch)).unwrap();
        assert!((set.total(0) - 1.0).abs() < 1e-15);
        assert_eq!(set.total(1), 0.0);
    }

    #[test]
    fn willems_credit_and_cap() {
        let ch = DiscreteChannelSpec::<f64>::binary_adder();
        let law = InputLaw::uniform(&ch);
        let conf = ConferencingSpec::symmetric(10.0).unwrap();
        let set = willems_region(&ch, &law, conf).unwrap();
        let (v, pt) = set.support_value(&WeightVector::new(vec![0.0, 1.0, 1.0]).unwrap()).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        assert!(set.contains(&pt).unwrap());
        let zero = willems_region(&ch, &law, ConferencingSpec::none()).unwrap();
        assert!((zero.bound(0, Subset(3)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let ch = DiscreteChannelSpec::<f64>::binary_adder();
        let w = simplex_weights::<f64>(3, 2);
        let r = brute_force_region(&ch, &w, &BruteForceOptions::default());
        match r {
            Err(Error::Budget { needed, .. }) => assert!(needed > 60_000_000),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multisets(5, 3).len() as u128, multichoose(5, 3));
        assert_eq!(multichoose(81, 2), 3321);
        assert_eq!(grid_rows::<f64>(3, 8).len(), 45 + 1);
        assert_eq!(grid_rows::<f64>(2, 8).len(), 9);
    }

    #[test]
    fn brute_force_bsc_and_adder() {
        let ch = DiscreteChannelSpec::<f64>::binary_symmetric(0.0).unwrap();
        let w = vec![WeightVector::new(vec![0.0, 1.0]).unwrap()];
        let opts = BruteForceOptions { u_size_cap: 1, ..Default::default() };
        let f = brute_force_region(&ch, &w, &opts).unwrap();
        assert!((f[0].value - 1.0).abs() < 1e-12);

        let ch = DiscreteChannelSpec::<f64>::binary_adder();
        let w = vec![WeightVector::new(vec![0.0, 1.0, 1.0]).unwrap()];
        let f = brute_force_region(&ch, &w, &opts).unwrap();
        assert!((f[0].value - 1.5).abs() < 0.01);
        assert_eq!(f[0].law, InputLaw::uniform(&ch));
    }
}
