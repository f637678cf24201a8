#![allow(dead_code)]

use barycenter_core::measure::{DiscreteMeasure, Instance, MeasureKind, Point, WeightVector};
use barycenter_core::scalar::{rat, Rational};
use proptest::prelude::*;
use proptest::sample::subsequence;

/// Integer description of a random instance: per measure, points with
/// masses in multiples of `1/denominator`; positive integer weights,
/// normalized on use.
#[derive(Clone, Debug)]
pub struct RawInstance {
    pub dim: usize,
    pub denominator: i64,
    pub measures: Vec<Vec<(Vec<i64>, i64)>>,
    pub weights: Vec<i64>,
}

impl RawInstance {
    pub fn build(&self) -> Instance<Rational> {
        let measures = self.measures.iter().map(|atoms| fractions(atoms, self.denominator)).collect();
        let total: i64 = self.weights.iter().sum();
        let weights = WeightVector::new(self.weights.iter().map(|&w| rat(w, total)).collect(), 0.0).unwrap();
        Instance::new(measures, weights, 0.0).unwrap()
    }

    pub fn atom_count(&self) -> usize {
        self.measures.iter().map(Vec::len).sum()
    }

    /// `sum |P_i| - N + 1`.
    pub fn sparsity_bound(&self) -> usize {
        self.atom_count() - self.measures.len() + 1
    }
}

pub fn eighths(atoms: &[(Vec<i64>, i64)]) -> DiscreteMeasure<Rational> {
    fractions(atoms, 8)
}

pub fn fractions(atoms: &[(Vec<i64>, i64)], denominator: i64) -> DiscreteMeasure<Rational> {
    DiscreteMeasure::new(
        atoms.iter().map(|(c, m)| (Point::from_ints(c), rat(*m, denominator))).collect(),
        MeasureKind::Full,
        0.0,
    )
    .unwrap()
}

pub fn measure(atoms: &[(Vec<Rational>, Rational)]) -> DiscreteMeasure<Rational> {
    DiscreteMeasure::new(
        atoms.iter().map(|(c, m)| (Point::new(c.clone()), m.clone())).collect(),
        MeasureKind::Full,
        0.0,
    )
    .unwrap()
}

fn grid(dim: usize) -> Vec<Vec<i64>> {
    let side: Vec<i64> = (-1..=2).collect();
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                side.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// `k` positive parts summing to `total`.
fn compositions(k: usize, total: i64) -> impl Strategy<Value = Vec<i64>> {
    subsequence((1..total).collect::<Vec<_>>(), k - 1).prop_map(move |cuts| {
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(total);
        bounds.windows(2).map(|w| w[1] - w[0]).collect()
    })
}

/// Distinct grid points with masses in multiples of `1/denominator`.
pub fn measure_strategy(
    dim: usize,
    sizes: std::ops::RangeInclusive<usize>,
    denominator: i64,
) -> impl Strategy<Value = Vec<(Vec<i64>, i64)>> {
    sizes.prop_flat_map(move |k| {
        (subsequence(grid(dim), k), compositions(k, denominator)).prop_map(|(points, masses)| points.into_iter().zip(masses).collect())
    })
}

/// `N` measures of `sizes` atoms each on a small integer grid in dimension
/// `dims`, masses in multiples of `1/denominator`, random positive weights.
pub fn instance_strategy(
    n: std::ops::RangeInclusive<usize>,
    sizes: std::ops::RangeInclusive<usize>,
    dims: std::ops::RangeInclusive<usize>,
    denominator: i64,
) -> impl Strategy<Value = RawInstance> {
    (n, dims).prop_flat_map(move |(n, dim)| {
        (
            prop::collection::vec(measure_strategy(dim, sizes.clone(), denominator), n),
            prop::collection::vec(1..=4i64, n),
        )
            .prop_map(move |(measures, weights)| RawInstance {
                dim,
                denominator,
                measures,
                weights,
            })
    })
}

/// The distribution of the acceptance property suite.
pub fn acceptance_instances() -> impl Strategy<Value = RawInstance> {
    instance_strategy(2..=4, 2..=4, 1..=3, 8)
}

/// The two three-atom measures of the worked planar example.
pub fn two_by_three() -> Instance<Rational> {
    Instance::uniform(
        vec![
            eighths(&[(vec![0, 1], 2), (vec![1, 0], 4), (vec![2, 1], 2)]),
            eighths(&[(vec![0, 0], 2), (vec![1, 1], 4), (vec![2, 0], 2)]),
        ],
        0.0,
    )
    .unwrap()
}

/// Four two-atom measures: segments `(-e,0)-(e,1)`, two vertical unit
/// segments at the origin, and `(-e,1)-(e,0)`.
pub fn four_segments(e: i64) -> Instance<Rational> {
    Instance::uniform(
        vec![
            eighths(&[(vec![-e, 0], 4), (vec![e, 1], 4)]),
            eighths(&[(vec![0, 0], 4), (vec![0, 1], 4)]),
            eighths(&[(vec![0, 0], 4), (vec![0, 1], 4)]),
            eighths(&[(vec![-e, 1], 4), (vec![e, 0], 4)]),
        ],
        0.0,
    )
    .unwrap()
}

/// A random instance together with a candidate measure of up to four atoms
/// in the same dimension.
pub fn instance_with_candidate() -> impl Strategy<Value = (RawInstance, Vec<(Vec<i64>, i64)>)> {
    acceptance_instances().prop_flat_map(|raw| {
        let dim = raw.dim;
        (Just(raw), measure_strategy(dim, 1..=4, 8))
    })
}
