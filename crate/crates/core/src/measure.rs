//! Support points, discrete measures, weights and the geometric primitives
//! every algorithm consumes.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// Input masses within this distance of 1 are rescaled to sum to exactly 1.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// Default cap on the number of candidate points enumerated for the
/// centroid set.
pub const DEFAULT_CENTROID_CAP: usize = 1_000_000;

/// A point in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<S>(Vec<S>);

impl<S: Scalar> Point<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Point(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point(coords.iter().map(|&c| S::from_i64(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[S] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<S> {
        self.0
    }

    /// Lexicographic order on coordinates.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }

    /// Coordinate-wise equality under the arithmetic mode.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn dot(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for (a, b) in self.0.iter().zip(&other.0) {
            acc += a.clone() * b;
        }
        acc
    }

    pub fn sub(&self, other: &Self) -> Self {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() - b)
                .collect(),
        )
    }
}

impl<S: Scalar> std::fmt::Display for Point<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (t, c) in self.0.iter().enumerate() {
            if t > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Squared Euclidean distance for points already known to share a dimension.
pub(crate) fn dist2<S: Scalar>(a: &Point<S>, b: &Point<S>) -> S {
    debug_assert_eq!(a.dim(), b.dim());
    let mut acc = S::zero();
    for (x, y) in a.0.iter().zip(&b.0) {
        let diff = x.clone() - y;
        acc += diff.clone() * &diff;
    }
    acc
}

pub fn squared_distance<S: Scalar>(a: &Point<S>, b: &Point<S>) -> Result<S> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(dist2(a, b))
}

pub(crate) fn centroid_of<'a, S: Scalar>(
    points: impl IntoIterator<Item = &'a Point<S>>,
    weights: &[S],
    dim: usize,
) -> Point<S> {
    let mut coords = vec![S::zero(); dim];
    for (p, w) in points.into_iter().zip(weights) {
        for (c, x) in coords.iter_mut().zip(&p.0) {
            *c += x.clone() * w;
        }
    }
    Point(coords)
}

/// `c = sum_i lambda_i x_i`.
pub fn weighted_centroid<S: Scalar>(
    points: &[Point<S>],
    weights: &WeightVector<S>,
) -> Result<Point<S>> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            found: points.len(),
        });
    }
    let dim = points.first().map_or(0, Point::dim);
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.dim(),
        });
    }
    Ok(centroid_of(points, weights.as_slice(), dim))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    /// Total mass 1.
    Full,
    /// Total mass at most 1.
    Partial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom<S> {
    pub point: Point<S>,
    pub mass: S,
}

/// Finite set of distinct points with positive masses, kept in
/// lexicographic order of the points.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<S> {
    atoms: Vec<Atom<S>>,
    kind: MeasureKind,
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Validates and canonicalizes a list of atoms. Coincident points are
    /// merged and their masses summed.
    pub fn new(atoms: Vec<(Point<S>, S)>, kind: MeasureKind, tol: f64) -> Result<Self> {
        Ok(Self::with_index_map(atoms, kind, tol)?.0)
    }

    /// Like [`DiscreteMeasure::new`], additionally returning for every input
    /// atom the index of the atom it was merged into.
    pub fn with_index_map(
        atoms: Vec<(Point<S>, S)>,
        kind: MeasureKind,
        tol: f64,
    ) -> Result<(Self, Vec<usize>)> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        };
        let dim = first.0.dim();
        if dim == 0 {
            return Err(Error::InvalidMeasure("points must have dimension >= 1".into()));
        }
        for (p, m) in &atoms {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if !m.is_positive(tol) {
                return Err(Error::InvalidMeasure(format!(
                    "mass {m} at {p} is not strictly positive"
                )));
            }
        }
        let (merged, index) = canonicalize(atoms, tol);
        let measure = DiscreteMeasure {
            atoms: merged
                .into_iter()
                .map(|(point, mass)| Atom { point, mass })
                .collect(),
            kind,
        };
        let total = measure.total_mass();
        match kind {
            MeasureKind::Full if !total.approx_eq(&S::one(), tol) => {
                return Err(Error::InvalidMeasure(format!(
                    "masses sum to {total}, expected 1"
                )));
            }
            MeasureKind::Partial if total > S::one() && !total.approx_eq(&S::one(), tol) => {
                return Err(Error::InvalidMeasure(format!(
                    "partial measure has total mass {total} > 1"
                )));
            }
            _ => {}
        }
        Ok((measure, index))
    }

    /// Builds a full measure, rescaling the masses when their sum is within
    /// [`RENORMALIZE_TOLERANCE`] of 1 but not equal to 1 up to `tol`.
    pub fn normalized(mut atoms: Vec<(Point<S>, S)>, tol: f64) -> Result<Self> {
        let total = sum(atoms.iter().map(|(_, m)| m));
        let deviation = (total.clone() - S::one()).to_f64().abs();
        if deviation > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        if !total.approx_eq(&S::one(), tol) {
            for (_, m) in &mut atoms {
                *m = m.clone() / &total;
            }
        }
        Self::new(atoms, MeasureKind::Full, tol)
    }

    /// A single point of mass 1.
    pub fn dirac(point: Point<S>) -> Self {
        DiscreteMeasure {
            atoms: vec![Atom {
                point,
                mass: S::one(),
            }],
            kind: MeasureKind::Full,
        }
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].point.dim()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point<S>> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn masses(&self) -> impl Iterator<Item = &S> {
        self.atoms.iter().map(|a| &a.mass)
    }

    pub fn total_mass(&self) -> S {
        sum(self.masses())
    }

    /// Index of the atom located at `point`, if any.
    pub fn position(&self, point: &Point<S>, tol: f64) -> Option<usize> {
        if S::EXACT {
            self.atoms
                .binary_search_by(|a| a.point.lex_cmp(point))
                .ok()
        } else {
            self.atoms.iter().position(|a| a.point.approx_eq(point, tol))
        }
    }

    /// Same atoms and masses under the arithmetic mode.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.point.approx_eq(&b.point, tol) && a.mass.approx_eq(&b.mass, tol)
            })
    }
}

/// Sorts atoms lexicographically and merges coincident points. Returns the
/// merged atoms and, for each input atom, the index it was merged into.
pub(crate) fn canonicalize<S: Scalar>(
    atoms: Vec<(Point<S>, S)>,
    tol: f64,
) -> (Vec<(Point<S>, S)>, Vec<usize>) {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[a].0.lex_cmp(&atoms[b].0));
    let mut slots: Vec<Option<(Point<S>, S)>> = atoms.into_iter().map(Some).collect();
    let mut merged: Vec<(Point<S>, S)> = Vec::with_capacity(slots.len());
    let mut index = vec![0; slots.len()];
    for idx in order {
        let (point, mass) = slots[idx].take().expect("each atom visited once");
        let target = find_representative(&merged, &point, tol);
        match target {
            Some(t) => {
                merged[t].1 += mass;
                index[idx] = t;
            }
            None => {
                index[idx] = merged.len();
                merged.push((point, mass));
            }
        }
    }
    (merged, index)
}

fn find_representative<S: Scalar>(
    merged: &[(Point<S>, S)],
    point: &Point<S>,
    tol: f64,
) -> Option<usize> {
    if S::EXACT {
        return merged
            .last()
            .filter(|(p, _)| p == point)
            .map(|_| merged.len() - 1);
    }
    // Candidates within tolerance of the leading coordinate form a suffix of
    // the sorted representatives.
    let lead = &point.coords()[0];
    for t in (0..merged.len()).rev() {
        let rep_lead = &merged[t].0.coords()[0];
        if !rep_lead.approx_eq(lead, tol) && rep_lead.total_cmp(lead) == Ordering::Less {
            break;
        }
        if merged[t].0.approx_eq(point, tol) {
            return Some(t);
        }
    }
    None
}

/// Sorted, deduplicated points.
pub(crate) fn canonical_points<S: Scalar>(points: Vec<Point<S>>, tol: f64) -> Vec<Point<S>> {
    let atoms = points.into_iter().map(|p| (p, S::zero())).collect();
    canonicalize(atoms, tol).0.into_iter().map(|(p, _)| p).collect()
}

/// Strictly positive weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<S>(Vec<S>);

impl<S: Scalar> WeightVector<S> {
    pub fn new(weights: Vec<S>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_positive(tol)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
        }
        let total = sum(&weights);
        if !total.approx_eq(&S::one(), tol) {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(WeightVector(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weights need n >= 1");
        WeightVector(vec![S::from_ratio(1, n as i64); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }
}

/// Input measures with their weights and the comparison tolerance of the
/// computation.
#[derive(Clone, Debug)]
pub struct Instance<S> {
    measures: Vec<DiscreteMeasure<S>>,
    weights: WeightVector<S>,
    tol: f64,
}

impl<S: Scalar> Instance<S> {
    pub fn new(measures: Vec<DiscreteMeasure<S>>, weights: WeightVector<S>, tol: f64) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::InvalidMeasure("at least one measure is required".into()));
        }
        if measures.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: measures.len(),
                found: weights.len(),
            });
        }
        let dim = measures[0].dim();
        for m in &measures {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            if m.kind() != MeasureKind::Full {
                return Err(Error::InvalidMeasure("input measures must have total mass 1".into()));
            }
        }
        Ok(Instance {
            measures,
            weights,
            tol,
        })
    }

    /// Uniform weights `1/N`.
    pub fn uniform(measures: Vec<DiscreteMeasure<S>>, tol: f64) -> Result<Self> {
        let n = measures.len().max(1);
        Self::new(measures, WeightVector::uniform(n), tol)
    }

    pub fn measures(&self) -> &[DiscreteMeasure<S>] {
        &self.measures
    }

    pub fn weights(&self) -> &WeightVector<S> {
        &self.weights
    }

    pub fn lambda(&self) -> &[S] {
        self.weights.as_slice()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.measures[0].dim()
    }

    pub fn num_measures(&self) -> usize {
        self.measures.len()
    }
}

fn check_dims<S: Scalar>(measures: &[DiscreteMeasure<S>]) -> Result<usize> {
    let Some(first) = measures.first() else {
        return Err(Error::InvalidMeasure("at least one measure is required".into()));
    };
    let dim = first.dim();
    if let Some(m) = measures.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        });
    }
    Ok(dim)
}

/// Deduplicated union of all supports, in lexicographic order.
pub fn union_support<S: Scalar>(measures: &[DiscreteMeasure<S>], tol: f64) -> Result<Vec<Point<S>>> {
    check_dims(measures)?;
    let points = measures
        .iter()
        .flat_map(|m| m.points().cloned())
        .collect();
    Ok(canonical_points(points, tol))
}

/// Number of combinations `prod_i |P_i|`, saturating.
pub fn combination_count<S: Scalar>(measures: &[DiscreteMeasure<S>]) -> u128 {
    measures
        .iter()
        .fold(1u128, |acc, m| acc.saturating_mul(m.len() as u128))
}

/// All weighted centroids `sum_i lambda_i x_i` with one `x_i` from each
/// support, deduplicated and sorted. Fails when more than `cap` combinations
/// would have to be enumerated.
pub fn centroid_set<S: Scalar>(
    measures: &[DiscreteMeasure<S>],
    weights: &WeightVector<S>,
    cap: usize,
    tol: f64,
) -> Result<Vec<Point<S>>> {
    let dim = check_dims(measures)?;
    if measures.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: measures.len(),
            found: weights.len(),
        });
    }
    let count = combination_count(measures);
    if count > cap as u128 {
        return Err(Error::TooLarge {
            size: count,
            cap: cap as u128,
        });
    }
    let mut points = Vec::with_capacity(count as usize);
    for_each_combination(measures, |tuple| {
        let chosen = tuple
            .iter()
            .zip(measures)
            .map(|(&k, m)| &m.atoms()[k].point);
        points.push(centroid_of(chosen, weights.as_slice(), dim));
    });
    Ok(canonical_points(points, tol))
}

/// Visits every index tuple `(k_1, ..., k_N)` in lexicographic order.
pub(crate) fn for_each_combination<S: Scalar>(
    measures: &[DiscreteMeasure<S>],
    mut visit: impl FnMut(&[usize]),
) {
    let n = measures.len();
    if measures.iter().any(|m| m.is_empty()) {
        return;
    }
    let mut tuple = vec![0usize; n];
    loop {
        visit(&tuple);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < measures[pos].len() {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// `sum_i |P_i| - N + 1`: the support size bound for vertex solutions.
pub fn sparsity_bound<S: Scalar>(measures: &[DiscreteMeasure<S>]) -> usize {
    let total: usize = measures.iter().map(DiscreteMeasure::len).sum();
    (total + 1).saturating_sub(measures.len())
}
