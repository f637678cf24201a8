//! Barycenter approximation over a restricted support, recovery of a
//! non-mass-splitting transport, the iterative local improvement loop, and
//! the exact barycenter for small instances.

pub mod improve;
pub mod recovery;

use log::debug;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, SolverOptions, VertexSolution, WarmStart};
use crate::measure::{
    canonical_points, centroid_of, combination_count, dist2, for_each_combination, DiscreteMeasure,
    Instance, MeasureKind, Point,
};
use crate::scalar::Scalar;
use crate::transport::{Flow, TransportPlan};

pub use improve::{certified_bound, iterate_local_improvement, ImproveOptions, ImprovementTrace, IterationRecord};
pub use recovery::{
    greedy_lex_maximize, partition_by_source, partition_cost, recover_non_mass_split,
    spread_to_centroids, CellAtom, PartitionCell, Recovery, RecoveryOptions, SpreadAtom,
    SpreadCell,
};

/// Simplex bookkeeping for one solve.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub pivots: usize,
    pub crash_moves: usize,
    pub warm_start_fallback: bool,
}

impl SolveStats {
    fn from_solution<S>(sol: &VertexSolution<S>) -> Self {
        SolveStats {
            pivots: sol.pivots,
            crash_moves: sol.crash_moves,
            warm_start_fallback: sol.warm_start_fallback,
        }
    }
}

/// A candidate barycenter together with a transport to the input measures.
#[derive(Clone, Debug)]
pub struct ApproxResult<S> {
    pub measure: DiscreteMeasure<S>,
    pub plan: TransportPlan<S>,
    /// Cost of `plan`.
    pub phi: S,
    /// Candidate support the measure was optimized over.
    pub support_used: Vec<Point<S>>,
    pub stats: SolveStats,
}

/// The barycenter program over a fixed candidate support `S0`:
///
/// ```text
/// min  sum_i lambda_i sum_{j,k} |x_j - x_ik|^2 y_ijk
/// s.t. sum_k y_ijk - z_j = 0      for all i, j
///      sum_j y_ijk       = d_ik   for all i, k
///      y, z >= 0
/// ```
///
/// Variables are `z_0 .. z_{m-1}` followed by the `y_ijk` blocks of each
/// measure, `j`-major.
#[derive(Clone, Debug)]
pub struct BarycenterProgram<S> {
    support: Vec<Point<S>>,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    lp: LinearProgram<S>,
}

impl<S: Scalar> BarycenterProgram<S> {
    /// `support` is sorted and deduplicated before the program is built.
    pub fn new(support: &[Point<S>], instance: &Instance<S>) -> Result<Self> {
        let tol = instance.tol();
        let dim = instance.dim();
        if let Some(p) = support.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        let support = canonical_points(support.to_vec(), tol);
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let m = support.len();
        let sizes: Vec<usize> = instance.measures().iter().map(DiscreteMeasure::len).collect();
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut next = m;
        for &n in &sizes {
            offsets.push(next);
            next += m * n;
        }
        let num_vars = next;

        let mut objective = vec![S::zero(); num_vars];
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (i, (measure, lambda)) in instance.measures().iter().zip(instance.lambda()).enumerate() {
            let n = sizes[i];
            for (j, s) in support.iter().enumerate() {
                let mut row: Vec<(usize, i8)> = (0..n).map(|k| (offsets[i] + j * n + k, 1)).collect();
                row.push((j, -1));
                rows.push(row);
                rhs.push(S::zero());
                for (k, atom) in measure.atoms().iter().enumerate() {
                    objective[offsets[i] + j * n + k] = lambda.clone() * &dist2(s, &atom.point);
                }
            }
            for (k, atom) in measure.atoms().iter().enumerate() {
                rows.push((0..m).map(|j| (offsets[i] + j * n + k, 1)).collect());
                rhs.push(atom.mass.clone());
            }
        }
        let lp = LinearProgram::new(num_vars, objective, rows, rhs)?;
        Ok(BarycenterProgram {
            support,
            offsets,
            sizes,
            lp,
        })
    }

    pub fn lp(&self) -> &LinearProgram<S> {
        &self.lp
    }

    pub fn support(&self) -> &[Point<S>] {
        &self.support
    }

    pub fn z_var(&self, j: usize) -> usize {
        j
    }

    pub fn y_var(&self, i: usize, j: usize, k: usize) -> usize {
        self.offsets[i] + j * self.sizes[i] + k
    }

    /// Encodes a measure supported on the candidate support and a transport
    /// from it as a point of the program.
    pub fn encode(&self, plan: &TransportPlan<S>, tol: f64) -> Result<Vec<S>> {
        let mut values = vec![S::zero(); self.lp.num_vars()];
        let mut slot = Vec::with_capacity(plan.source().len());
        for atom in plan.source().atoms() {
            let j = self.position(&atom.point, tol).ok_or_else(|| {
                Error::InvalidPlan(format!("{} is not in the candidate support", atom.point))
            })?;
            values[self.z_var(j)] = atom.mass.clone();
            slot.push(j);
        }
        for f in plan.flows() {
            values[self.y_var(f.measure, slot[f.source], f.target)] += &f.mass;
        }
        Ok(values)
    }

    fn position(&self, point: &Point<S>, tol: f64) -> Option<usize> {
        if S::EXACT {
            self.support.binary_search_by(|p| p.lex_cmp(point)).ok()
        } else {
            self.support.iter().position(|p| p.approx_eq(point, tol))
        }
    }

    /// Turns an optimal solution into a measure (zero-mass candidates
    /// dropped) and its transport.
    pub fn decode(&self, sol: &VertexSolution<S>, instance: &Instance<S>) -> Result<ApproxResult<S>> {
        let tol = instance.tol();
        let mut atoms = Vec::new();
        let mut atom_of = vec![usize::MAX; self.support.len()];
        for (j, s) in self.support.iter().enumerate() {
            let z = &sol.values[self.z_var(j)];
            if z.is_positive(tol) {
                atom_of[j] = atoms.len();
                atoms.push((s.clone(), z.clone()));
            }
        }
        let measure = DiscreteMeasure::new(atoms, MeasureKind::Full, tol)?;
        let mut flows = Vec::new();
        for (i, &n) in self.sizes.iter().enumerate() {
            for (j, &a) in atom_of.iter().enumerate() {
                if a == usize::MAX {
                    continue;
                }
                for k in 0..n {
                    let y = &sol.values[self.y_var(i, j, k)];
                    if y.is_positive(tol) {
                        flows.push(Flow {
                            measure: i,
                            source: a,
                            target: k,
                            mass: y.clone(),
                        });
                    }
                }
            }
        }
        let plan = TransportPlan::new(measure.clone(), instance.measures().to_vec(), flows, tol)?;
        let phi = plan.cost(instance.lambda());
        Ok(ApproxResult {
            measure,
            plan,
            phi,
            support_used: self.support.clone(),
            stats: SolveStats::from_solution(sol),
        })
    }
}

/// Optimal measure supported on `support`, as an optimal vertex of the
/// barycenter program. Its support has at most `sum_i |P_i| - N + 1` atoms.
pub fn approx_barycenter<S: Scalar>(support: &[Point<S>], instance: &Instance<S>) -> Result<ApproxResult<S>> {
    let program = BarycenterProgram::new(support, instance)?;
    let opts = SolverOptions::with_tolerance(instance.tol());
    let sol = lp::solve_to_optimal_vertex(program.lp(), &opts)?.into_optimal()?;
    debug!(
        "barycenter program over {} points solved in {} pivots",
        program.support().len(),
        sol.pivots
    );
    program.decode(&sol, instance)
}

/// Like [`approx_barycenter`], starting the simplex from the measure and
/// transport in `start`, whose support must lie in `support`.
pub fn approx_barycenter_warm<S: Scalar>(
    support: &[Point<S>],
    instance: &Instance<S>,
    start: &TransportPlan<S>,
) -> Result<ApproxResult<S>> {
    let program = BarycenterProgram::new(support, instance)?;
    let opts = SolverOptions::with_tolerance(instance.tol());
    let hint = WarmStart {
        values: program.encode(start, instance.tol())?,
        basis: None,
    };
    let sol = lp::solve_warm_started(program.lp(), &hint, &opts)?.into_optimal()?;
    debug!(
        "warm-started barycenter program over {} points: {} crash moves, {} pivots",
        program.support().len(),
        sol.crash_moves,
        sol.pivots
    );
    program.decode(&sol, instance)
}

/// An exact barycenter.
///
/// Solved as the equivalent multi-marginal program: one variable per tuple
/// `(k_1, .., k_N)` of support indices, priced at
/// `sum_i lambda_i |c - x_{i k_i}|^2` for the tuple's weighted centroid `c`,
/// with one marginal row per input atom. Tuples with coincident centroids
/// are merged into a single atom. Fails with [`Error::TooLarge`] when more
/// than `cap` tuples would be enumerated.
pub fn exact_barycenter<S: Scalar>(instance: &Instance<S>, cap: usize) -> Result<ApproxResult<S>> {
    let measures = instance.measures();
    let count = combination_count(measures);
    if count > cap as u128 {
        return Err(Error::TooLarge {
            size: count,
            cap: cap as u128,
        });
    }
    let tol = instance.tol();
    let dim = instance.dim();
    let lambda = instance.lambda();
    let mut offsets = Vec::with_capacity(measures.len());
    let mut num_rows = 0;
    for m in measures {
        offsets.push(num_rows);
        num_rows += m.len();
    }
    let mut rows: Vec<Vec<(usize, i8)>> = vec![Vec::new(); num_rows];
    let mut objective = Vec::with_capacity(count as usize);
    let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(count as usize);
    let mut centroids = Vec::with_capacity(count as usize);
    for_each_combination(measures, |tuple| {
        let var = tuples.len();
        let chosen: Vec<&Point<S>> = tuple
            .iter()
            .zip(measures)
            .map(|(&k, m)| &m.atoms()[k].point)
            .collect();
        let c = centroid_of(chosen.iter().copied(), lambda, dim);
        let mut cost = S::zero();
        for (x, l) in chosen.iter().zip(lambda) {
            cost += l.clone() * &dist2(&c, x);
        }
        for (i, &k) in tuple.iter().enumerate() {
            rows[offsets[i] + k].push((var, 1));
        }
        objective.push(cost);
        tuples.push(tuple.to_vec());
        centroids.push(c);
    });
    let rhs = measures
        .iter()
        .flat_map(|m| m.masses().cloned())
        .collect();
    let program = LinearProgram::new(tuples.len(), objective, rows, rhs)?;
    let opts = SolverOptions::with_tolerance(tol);
    let sol = lp::solve_to_optimal_vertex(&program, &opts)?.into_optimal()?;

    let used: Vec<usize> = (0..tuples.len())
        .filter(|&t| sol.values[t].is_positive(tol))
        .collect();
    let atoms = used
        .iter()
        .map(|&t| (centroids[t].clone(), sol.values[t].clone()))
        .collect();
    let (measure, index) = DiscreteMeasure::with_index_map(atoms, MeasureKind::Full, tol)?;
    let mut flows = Vec::new();
    for (slot, &t) in used.iter().enumerate() {
        for (i, &k) in tuples[t].iter().enumerate() {
            flows.push(Flow {
                measure: i,
                source: index[slot],
                target: k,
                mass: sol.values[t].clone(),
            });
        }
    }
    let plan = TransportPlan::new(measure.clone(), measures.to_vec(), flows, tol)?;
    let phi = plan.cost(lambda);
    Ok(ApproxResult {
        measure,
        plan,
        phi,
        support_used: canonical_points(centroids, tol),
        stats: SolveStats::from_solution(&sol),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{centroid_set, union_support, WeightVector};
    use crate::scalar::{rat, Rational};

    fn singletons() -> Instance<Rational> {
        Instance::uniform(
            vec![
                DiscreteMeasure::dirac(Point::from_ints(&[0, 0])),
                DiscreteMeasure::dirac(Point::from_ints(&[1, 0])),
            ],
            0.0,
        )
        .unwrap()
    }

    fn example_one() -> Instance<Rational> {
        let m = |atoms: &[([i64; 2], i64)]| {
            DiscreteMeasure::new(
                atoms
                    .iter()
                    .map(|(c, q)| (Point::from_ints(c), rat(*q, 4)))
                    .collect(),
                MeasureKind::Full,
                0.0,
            )
            .unwrap()
        };
        Instance::uniform(
            vec![
                m(&[([0, 1], 1), ([1, 0], 2), ([2, 1], 1)]),
                m(&[([0, 0], 1), ([1, 1], 2), ([2, 0], 1)]),
            ],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn two_singletons_over_original_support() {
        let inst = singletons();
        let support = union_support(inst.measures(), 0.0).unwrap();
        let res = approx_barycenter(&support, &inst).unwrap();
        assert_eq!(res.phi, rat(1, 2));
        assert_eq!(res.measure.len(), 1);
    }

    #[test]
    fn two_singletons_over_centroid_set() {
        let inst = singletons();
        let s = centroid_set(inst.measures(), inst.weights(), 10, 0.0).unwrap();
        let res = approx_barycenter(&s, &inst).unwrap();
        assert_eq!(res.phi, rat(1, 4));
        assert_eq!(
            res.measure.atoms()[0].point,
            Point::new(vec![rat(1, 2), rat(0, 1)])
        );
    }

    #[test]
    fn unequal_weights_pick_heavier_side() {
        let measures = singletons().measures().to_vec();
        let w = WeightVector::new(vec![rat(1, 3), rat(2, 3)], 0.0).unwrap();
        let inst = Instance::new(measures, w, 0.0).unwrap();
        let support = union_support(inst.measures(), 0.0).unwrap();
        let res = approx_barycenter(&support, &inst).unwrap();
        assert_eq!(res.phi, rat(1, 3));
        assert_eq!(res.measure.atoms()[0].point, Point::from_ints(&[1, 0]));
    }

    #[test]
    fn example_one_original_support() {
        let inst = example_one();
        let support = union_support(inst.measures(), 0.0).unwrap();
        let res = approx_barycenter(&support, &inst).unwrap();
        assert_eq!(res.phi, rat(1, 2));
        assert!(res.measure.len() <= 5);
        assert_eq!(res.plan.cost(inst.lambda()), res.phi);
    }

    #[test]
    fn exact_matches_program_over_centroid_set() {
        let inst = example_one();
        let exact = exact_barycenter(&inst, 100).unwrap();
        let s = centroid_set(inst.measures(), inst.weights(), 100, 0.0).unwrap();
        let via_program = approx_barycenter(&s, &inst).unwrap();
        assert_eq!(exact.phi, rat(1, 4));
        assert_eq!(via_program.phi, rat(1, 4));
        assert!(exact.plan.is_non_mass_splitting());
    }

    #[test]
    fn exact_respects_cap() {
        let inst = example_one();
        assert!(matches!(
            exact_barycenter(&inst, 8),
            Err(Error::TooLarge { size: 9, cap: 8 })
        ));
    }

    #[test]
    fn empty_support_is_rejected() {
        let inst = singletons();
        assert!(matches!(approx_barycenter(&[], &inst), Err(Error::EmptySupport)));
    }

    #[test]
    fn warm_start_from_optimum_is_free() {
        let inst = example_one();
        let support = union_support(inst.measures(), 0.0).unwrap();
        let cold = approx_barycenter(&support, &inst).unwrap();
        let warm = approx_barycenter_warm(&support, &inst, &cold.plan).unwrap();
        assert_eq!(warm.phi, cold.phi);
        assert!(!warm.stats.warm_start_fallback);
    }
}
