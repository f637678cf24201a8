mod common;

use barycenter_core::measure::{
    centroid_set, squared_distance, union_support, weighted_centroid, Point, WeightVector,
};
use barycenter_core::oracle::brute_force_phi;
use barycenter_core::scalar::{rat, Rational};
use barycenter_core::transport::transport_cost;
use common::{acceptance_instances, eighths, instance_with_candidate};
use proptest::prelude::*;

fn rational_point(dim: usize) -> impl Strategy<Value = Point<Rational>> {
    prop::collection::vec((-6i64..=6, 1i64..=4), dim)
        .prop_map(|c| Point::new(c.into_iter().map(|(p, q)| rat(p, q)).collect()))
}

/// Points `x_1..x_n`, weights summing to 1, and a probe point `s`.
fn centroid_case() -> impl Strategy<Value = (Vec<Point<Rational>>, WeightVector<Rational>, Point<Rational>)> {
    (1usize..=3, 1usize..=5).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(rational_point(dim), n),
            prop::collection::vec(1i64..=6, n),
            rational_point(dim),
        )
            .prop_map(|(points, w, s)| {
                let total: i64 = w.iter().sum();
                let weights = WeightVector::new(w.iter().map(|&v| rat(v, total)).collect(), 0.0).unwrap();
                (points, weights, s)
            })
    })
}

fn spread_cost(s: &Point<Rational>, points: &[Point<Rational>], weights: &WeightVector<Rational>) -> Rational {
    points
        .iter()
        .zip(weights.as_slice())
        .map(|(x, l)| l * squared_distance(s, x).unwrap())
        .sum()
}

proptest! {
    #[test]
    fn cost_splits_at_the_centroid((points, weights, s) in centroid_case()) {
        let c = weighted_centroid(&points, &weights).unwrap();
        let lhs = spread_cost(&s, &points, &weights);
        let rhs = squared_distance(&s, &c).unwrap() + spread_cost(&c, &points, &weights);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn centroid_is_the_strict_minimizer((points, weights, s) in centroid_case()) {
        let c = weighted_centroid(&points, &weights).unwrap();
        prop_assume!(s != c);
        prop_assert!(spread_cost(&s, &points, &weights) > spread_cost(&c, &points, &weights));
    }

    #[test]
    fn candidate_supports_respect_size_bounds(raw in acceptance_instances()) {
        let inst = raw.build();
        let union = union_support(inst.measures(), 0.0).unwrap();
        prop_assert!(union.len() <= raw.atom_count());
        let product: usize = raw.measures.iter().map(Vec::len).product();
        let centroids = centroid_set(inst.measures(), inst.weights(), product, 0.0).unwrap();
        prop_assert!(centroids.len() <= product);
    }

    #[test]
    fn transport_plans_have_exact_marginals((raw, candidate) in instance_with_candidate()) {
        let inst = raw.build();
        let p0 = eighths(&candidate);
        let (phi, plan) = transport_cost(&p0, &inst).unwrap();
        prop_assert_eq!(&plan.cost(inst.lambda()), &phi);
        for (i, target) in inst.measures().iter().enumerate() {
            let mut out = vec![rat(0, 1); p0.len()];
            let mut inn = vec![rat(0, 1); target.len()];
            for f in plan.flows().iter().filter(|f| f.measure == i) {
                out[f.source] += &f.mass;
                inn[f.target] += &f.mass;
            }
            prop_assert!(out.iter().zip(p0.masses()).all(|(a, b)| a == b));
            prop_assert!(inn.iter().zip(target.masses()).all(|(a, b)| a == b));
        }
    }

    #[test]
    fn transport_cost_matches_exhaustive_search((raw, candidate) in instance_with_candidate()) {
        let inst = raw.build();
        let p0 = eighths(&candidate);
        let (phi, _) = transport_cost(&p0, &inst).unwrap();
        prop_assert_eq!(phi, brute_force_phi(&p0, &inst, 8).unwrap());
    }
}
