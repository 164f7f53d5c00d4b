//! Rate polytopes.
//!
//! A [`RateConstraintSet`] holds, for every receiver `j`, a bound `a_j(L)` on
//! `sum_{k in L} R_k` for each nonempty transmitter subset `L`, and a total
//! bound `b_j` on `R_0 + R_1 + ... + R_p`. The region is the intersection over
//! receivers. When the set carries no common message, `R_0` is absent and
//! `b_j` is a second bound on the private sum (the conferencing form).

use std::cmp::Ordering;
use std::fmt;

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;

/// Largest transmitter count a constraint set may carry (bounds are stored densely).
pub const MAX_TX: usize = 16;
/// Largest transmitter count for vertex enumeration and support values.
pub const MAX_GEOMETRY_TX: usize = 3;
/// Largest transmitter count for the exhaustive submodularity check.
pub const MAX_SUBMODULAR_TX: usize = 4;

/// Subset of transmitters as a bit mask (bit `k` is transmitter `k + 1`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(p: usize) -> Self {
        Subset((1u32 << p) - 1)
    }

    pub fn singleton(k: usize) -> Self {
        Subset(1 << k)
    }

    pub fn from_members(members: &[usize]) -> Self {
        Subset(members.iter().fold(0, |m, k| m | (1 << k)))
    }

    pub fn contains(self, k: usize) -> bool {
        self.0 & (1 << k) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Subset(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |k| self.contains(*k))
    }

    /// All nonempty subsets of `{0..p}` in mask order.
    pub fn nonempty(p: usize) -> impl Iterator<Item = Subset> {
        (1u32..(1 << p)).map(Subset)
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.members().map(|k| (k + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint<T> {
    pub common: Option<T>,
    pub private: Vec<T>,
}

impl<T: Real> RatePoint<T> {
    pub fn new(common: Option<T>, private: Vec<T>) -> Result<Self> {
        let point = Self { common, private };
        ensure!(
            point.coords().iter().all(|r| *r >= T::zero() && r.is_finite()),
            Invalid,
            "rates must be finite and >= 0"
        );
        Ok(point)
    }

    pub fn origin(num_tx: usize, has_common: bool) -> Self {
        Self {
            common: has_common.then(T::zero),
            private: vec![T::zero(); num_tx],
        }
    }

    /// Coordinates in order `[R0?, R1, ..., Rp]`.
    pub fn coords(&self) -> Vec<T> {
        self.common.iter().chain(self.private.iter()).copied().collect()
    }

    fn from_coords(has_common: bool, coords: &[T]) -> Self {
        if has_common {
            Self {
                common: Some(coords[0]),
                private: coords[1..].to_vec(),
            }
        } else {
            Self {
                common: None,
                private: coords.to_vec(),
            }
        }
    }

    pub fn subset_sum(&self, subset: Subset) -> T {
        subset.members().map(|k| self.private[k]).fold(T::zero(), |a, b| a + b)
    }

    pub fn total(&self) -> T {
        self.coords().into_iter().fold(T::zero(), |a, b| a + b)
    }

    /// Strict Pareto dominance with tolerance `tol`.
    pub fn dominates(&self, other: &Self, tol: T) -> bool {
        let (a, b) = (self.coords(), other.coords());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| *x >= *y - tol)
            && a.iter().zip(&b).any(|(x, y)| *x > *y + tol)
    }
}

/// Bounds seen by one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverBounds<T> {
    /// Indexed by subset mask; entry 0 (the empty set) is always zero.
    subset: Vec<T>,
    total: T,
}

impl<T: Real> ReceiverBounds<T> {
    pub fn new(num_tx: usize, mut bound: impl FnMut(Subset) -> T, total: T) -> Self {
        let mut subset = vec![T::zero(); 1 << num_tx];
        for s in Subset::nonempty(num_tx) {
            subset[s.0 as usize] = bound(s);
        }
        Self { subset, total }
    }

    pub fn subset_bound(&self, s: Subset) -> T {
        self.subset[s.0 as usize]
    }

    pub fn total(&self) -> T {
        self.total
    }
}

/// Which inequality a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRef {
    Subset(Subset),
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation<T> {
    pub receiver: usize,
    pub constraint: ConstraintRef,
    pub lhs: T,
    pub bound: T,
}

/// Pair of subsets breaking `a(L) + a(M) >= a(L u M) + a(L n M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmodularWitness {
    pub receiver: usize,
    pub first: Subset,
    pub second: Subset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    weights: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    /// Weights `(mu_0, mu_1, ..., mu_p)`; `mu_0` applies to the common rate.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        ensure!(
            weights.iter().all(|w| *w >= T::zero() && w.is_finite()),
            Invalid,
            "weights must be finite and >= 0"
        );
        ensure!(
            weights.iter().any(|w| *w > T::zero()),
            Invalid,
            "weight vector is empty (all zero)"
        );
        Ok(Self { weights })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    /// Weighted sum of a rate point; `mu_0` is ignored for points without `R_0`.
    pub fn apply(&self, point: &RatePoint<T>) -> T {
        let mut acc = point.common.map_or(T::zero(), |r0| r0 * self.weights[0]);
        for (r, w) in point.private.iter().zip(&self.weights[1..]) {
            acc = acc + *r * *w;
        }
        acc
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.weights.iter().map(|w| *w * factor).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateConstraintSet<T> {
    num_tx: usize,
    has_common: bool,
    receivers: Vec<ReceiverBounds<T>>,
    /// `(C12, C21)` when conferencing credits are folded into the bounds.
    link_credits: Option<(T, T)>,
}

impl<T: Real> RateConstraintSet<T> {
    pub fn new(num_tx: usize, has_common: bool, receivers: Vec<ReceiverBounds<T>>) -> Result<Self> {
        Self::with_parts(num_tx, has_common, receivers, None)
    }

    /// Builds a set from bound functions of `(receiver, subset)` and `receiver`.
    pub fn from_fn(
        num_tx: usize,
        num_rx: usize,
        has_common: bool,
        mut subset_bound: impl FnMut(usize, Subset) -> T,
        mut total: impl FnMut(usize) -> T,
    ) -> Result<Self> {
        ensure!((1..=MAX_TX).contains(&num_tx), Invalid, "num_tx must be in 1..={MAX_TX}");
        let receivers = (0..num_rx)
            .map(|j| ReceiverBounds::new(num_tx, |s| subset_bound(j, s), total(j)))
            .collect();
        Self::new(num_tx, has_common, receivers)
    }

    fn with_parts(
        num_tx: usize,
        has_common: bool,
        receivers: Vec<ReceiverBounds<T>>,
        link_credits: Option<(T, T)>,
    ) -> Result<Self> {
        ensure!((1..=MAX_TX).contains(&num_tx), Invalid, "num_tx must be in 1..={MAX_TX}");
        ensure!(!receivers.is_empty(), Invalid, "constraint set needs at least one receiver");
        let set = Self {
            num_tx,
            has_common,
            receivers,
            link_credits,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let tol = T::rate_tol();
        for (j, r) in self.receivers.iter().enumerate() {
            ensure!(
                r.subset.len() == 1 << self.num_tx,
                Shape,
                "receiver {j} has {} subset slots, expected {}",
                r.subset.len(),
                1usize << self.num_tx
            );
            for s in Subset::nonempty(self.num_tx) {
                let a = r.subset_bound(s);
                ensure!(a >= T::zero() && a.is_finite(), Invalid, "receiver {j}: bound {s:?} = {a} must be finite and >= 0");
            }
            ensure!(
                r.total >= T::zero() && r.total.is_finite(),
                Invalid,
                "receiver {j}: total bound {} must be finite and >= 0",
                r.total
            );
            if let Some((small, large)) = self.monotonicity_failure(j) {
                return Err(Error::Invalid(format!(
                    "receiver {j}: bound {small:?} exceeds bound {large:?} (bounds must be monotone)"
                )));
            }
            if self.link_credits.is_none() {
                let full = r.subset_bound(Subset::full(self.num_tx));
                ensure!(
                    full <= r.total + tol,
                    Invalid,
                    "receiver {j}: full-subset bound {full} exceeds total bound {}",
                    r.total
                );
            }
        }
        Ok(())
    }

    fn monotonicity_failure(&self, j: usize) -> Option<(Subset, Subset)> {
        let r = &self.receivers[j];
        for s in Subset::nonempty(self.num_tx) {
            for k in 0..self.num_tx {
                let bigger = s.union(Subset::singleton(k));
                if bigger != s && r.subset_bound(s) > r.subset_bound(bigger) + T::rate_tol() {
                    return Some((s, bigger));
                }
            }
        }
        None
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_rx(&self) -> usize {
        self.receivers.len()
    }

    pub fn has_common(&self) -> bool {
        self.has_common
    }

    pub fn link_credits(&self) -> Option<(T, T)> {
        self.link_credits
    }

    pub fn receivers(&self) -> &[ReceiverBounds<T>] {
        &self.receivers
    }

    pub fn bound(&self, receiver: usize, subset: Subset) -> T {
        self.receivers[receiver].subset_bound(subset)
    }

    pub fn total(&self, receiver: usize) -> T {
        self.receivers[receiver].total
    }

    /// Number of coordinates of a member point.
    pub fn dimension(&self) -> usize {
        self.num_tx + usize::from(self.has_common)
    }

    /// Removes `R_0` and adds conferencing credits: `C12` to every subset
    /// containing transmitter 1, `C21` to every subset containing
    /// transmitter 2. The total bound is unchanged and now caps `R1 + R2`.
    pub fn with_link_credits(&self, c12: T, c21: T) -> Result<Self> {
        if self.num_tx != 2 {
            return Err(Error::Capability(format!(
                "conferencing credits need p = 2, got p = {}",
                self.num_tx
            )));
        }
        ensure!(
            c12 >= T::zero() && c21 >= T::zero() && c12.is_finite() && c21.is_finite(),
            Invalid,
            "link capacities must be finite and >= 0"
        );
        let receivers = self
            .receivers
            .iter()
            .map(|r| {
                ReceiverBounds::new(
                    2,
                    |s| {
                        let mut a = r.subset_bound(s);
                        if s.contains(0) {
                            a = a + c12;
                        }
                        if s.contains(1) {
                            a = a + c21;
                        }
                        a
                    },
                    r.total,
                )
            })
            .collect();
        Self::with_parts(2, false, receivers, Some((c12, c21)))
    }

    fn check_point(&self, point: &RatePoint<T>) -> Result<()> {
        ensure!(
            point.private.len() == self.num_tx && point.common.is_some() == self.has_common,
            Shape,
            "point has {} private rates (common: {}), set has p = {} (common: {})",
            point.private.len(),
            point.common.is_some(),
            self.num_tx,
            self.has_common
        );
        Ok(())
    }

    /// First violated constraint, or `None` when the point is a member.
    pub fn membership(&self, point: &RatePoint<T>) -> Result<Option<Violation<T>>> {
        self.check_point(point)?;
        let tol = T::rate_tol();
        if point.coords().iter().any(|r| *r < -tol) {
            return Err(Error::Invalid("rate point has negative coordinates".into()));
        }
        let total = point.total();
        for (j, r) in self.receivers.iter().enumerate() {
            for s in Subset::nonempty(self.num_tx) {
                let lhs = point.subset_sum(s);
                let bound = r.subset_bound(s);
                if lhs > bound + tol {
                    return Ok(Some(Violation {
                        receiver: j,
                        constraint: ConstraintRef::Subset(s),
                        lhs,
                        bound,
                    }));
                }
            }
            if total > r.total + tol {
                return Ok(Some(Violation {
                    receiver: j,
                    constraint: ConstraintRef::Total,
                    lhs: total,
                    bound: r.total,
                }));
            }
        }
        Ok(None)
    }

    pub fn contains(&self, point: &RatePoint<T>) -> Result<bool> {
        Ok(self.membership(point)?.is_none())
    }

    /// Single-receiver set with `a(L) = min_j a_j(L)` and `b = min_j b_j`.
    pub fn effective_bounds(&self) -> Self {
        let min_over = |f: &dyn Fn(&ReceiverBounds<T>) -> T| {
            self.receivers.iter().map(f).fold(T::infinity(), T::min)
        };
        let subset: Vec<T> = (0..1usize << self.num_tx)
            .map(|m| min_over(&|r: &ReceiverBounds<T>| r.subset[m]))
            .collect();
        let total = min_over(&|r: &ReceiverBounds<T>| r.total);
        Self {
            num_tx: self.num_tx,
            has_common: self.has_common,
            receivers: vec![ReceiverBounds { subset, total }],
            link_credits: self.link_credits,
        }
    }

    /// Extreme points, sorted lexicographically by `[R0?, R1, ...]`.
    pub fn vertices(&self) -> Result<Vec<RatePoint<T>>> {
        if self.num_tx > MAX_GEOMETRY_TX {
            return Err(Error::Capability(format!(
                "vertex enumeration supports p <= {MAX_GEOMETRY_TX} (got {}); use support_value",
                self.num_tx
            )));
        }
        let eff = self.effective_bounds();
        let dim = self.dimension();
        let offset = usize::from(self.has_common);
        let r = &eff.receivers[0];

        // halfspaces  coeffs . x <= rhs
        let mut halfspaces: Vec<(Vec<T>, T)> = Vec::new();
        for s in Subset::nonempty(self.num_tx) {
            let mut c = vec![T::zero(); dim];
            for k in s.members() {
                c[offset + k] = T::one();
            }
            halfspaces.push((c, r.subset_bound(s)));
        }
        halfspaces.push((vec![T::one(); dim], r.total));
        for i in 0..dim {
            let mut c = vec![T::zero(); dim];
            c[i] = -T::one();
            halfspaces.push((c, T::zero()));
        }

        let tol = T::rate_tol();
        let mut found: Vec<Vec<T>> = Vec::new();
        for combo in combinations(halfspaces.len(), dim) {
            let a: Vec<Vec<T>> = combo.iter().map(|&i| halfspaces[i].0.clone()).collect();
            let b: Vec<T> = combo.iter().map(|&i| halfspaces[i].1).collect();
            let Some(x) = solve(a, b) else { continue };
            let feasible = halfspaces.iter().all(|(c, rhs)| {
                let lhs = c.iter().zip(&x).fold(T::zero(), |acc, (c, x)| acc + *c * *x);
                lhs <= *rhs + tol
            });
            if !feasible {
                continue;
            }
            let x: Vec<T> = x.into_iter().map(|v| if v.abs() <= tol { T::zero() } else { v }).collect();
            if !found.iter().any(|y| y.iter().zip(&x).all(|(a, b)| (*a - *b).abs() <= tol)) {
                found.push(x);
            }
        }
        found.sort_by(|a, b| lex_cmp(a, b));
        let points: Vec<RatePoint<T>> = found
            .iter()
            .map(|x| RatePoint::from_coords(self.has_common, x))
            .collect();
        debug_assert!(points.iter().all(|p| self.contains(p).unwrap_or(false)));
        Ok(points)
    }

    /// `max sum_i mu_i R_i` over the region with a maximizing point.
    ///
    /// Among maximizers the one with the largest total rate is returned, so
    /// the argmax is Pareto-optimal in the region.
    pub fn support_value(&self, weights: &WeightVector<T>) -> Result<(T, RatePoint<T>)> {
        ensure!(
            weights.weights.len() == self.num_tx + 1,
            Shape,
            "weight vector has {} entries, expected p + 1 = {}",
            weights.weights.len(),
            self.num_tx + 1
        );
        let tol = T::rate_tol();
        let mut best: Option<(T, T, RatePoint<T>)> = None;
        for v in self.vertices()? {
            let value = weights.apply(&v);
            let total = v.total();
            let better = match &best {
                None => true,
                Some((bv, bt, _)) => value > *bv + tol || (value >= *bv - tol && total > *bt + tol),
            };
            if better {
                best = Some((value, total, v));
            }
        }
        let (value, _, point) = best.expect("a polytope containing the origin has a vertex");
        Ok((value, point))
    }

    /// `None` when every receiver's bound function is submodular.
    pub fn check_submodular(&self) -> Result<Option<SubmodularWitness>> {
        if self.num_tx > MAX_SUBMODULAR_TX {
            return Err(Error::Capability(format!(
                "submodularity check supports p <= {MAX_SUBMODULAR_TX}, got {}",
                self.num_tx
            )));
        }
        let tol = T::rate_tol();
        let subsets: Vec<Subset> = Subset::nonempty(self.num_tx).collect();
        for (j, r) in self.receivers.iter().enumerate() {
            for (i, &x) in subsets.iter().enumerate() {
                for &y in &subsets[i + 1..] {
                    let lhs = r.subset_bound(x) + r.subset_bound(y);
                    let rhs = r.subset_bound(x.union(y)) + r.subset_bound(x.intersection(y));
                    if lhs < rhs - tol {
                        return Ok(Some(SubmodularWitness {
                            receiver: j,
                            first: x,
                            second: y,
                        }));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Monotone subset bounds and (without credits) `a(full) <= b`.
    pub fn check_invariants(&self) -> Result<()> {
        self.validate()
    }
}

/// Indices of mutually non-dominated points (first occurrence kept among duplicates).
pub fn pareto_indices<T: Real>(points: &[RatePoint<T>]) -> Vec<usize> {
    let tol = T::rate_tol();
    let mut keep = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dominated = points.iter().any(|q| q.dominates(p, tol));
        let duplicate = keep.iter().any(|&k: &usize| {
            points[k]
                .coords()
                .iter()
                .zip(p.coords())
                .all(|(a, b)| (*a - b).abs() <= tol)
        });
        if !dominated && !duplicate {
            keep.push(i);
        }
    }
    keep
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(Ordering::Equal))?;
        if a[pivot][col].abs() < T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == T::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[row][c] = a[row][c] - factor * v;
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc = acc - a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
