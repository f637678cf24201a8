//! Transport plans between a candidate measure and the input measures, and
//! the cost `phi(P0) = sum_i lambda_i W_2(P0, P_i)^2` of a fixed candidate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, SolverOptions};
use crate::measure::{dist2, DiscreteMeasure, Instance};
use crate::scalar::Scalar;

/// Mass `mass` moved from source atom `source` to atom `target` of measure
/// `measure`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow<S> {
    pub measure: usize,
    pub source: usize,
    pub target: usize,
    pub mass: S,
}

/// Flows from one source measure to each of the input measures. Stored
/// flows are strictly positive, sorted by `(measure, source, target)`, and
/// satisfy both marginal constraints.
#[derive(Clone, Debug)]
pub struct TransportPlan<S> {
    flows: Vec<Flow<S>>,
    source: DiscreteMeasure<S>,
    targets: Vec<DiscreteMeasure<S>>,
}

impl<S: Scalar> TransportPlan<S> {
    /// Validates the flows. Duplicate index triples are summed; flows that
    /// are zero under `tol` are dropped.
    pub fn new(
        source: DiscreteMeasure<S>,
        targets: Vec<DiscreteMeasure<S>>,
        flows: Vec<Flow<S>>,
        tol: f64,
    ) -> Result<Self> {
        let mut flows = flows;
        for f in &flows {
            if f.measure >= targets.len()
                || f.source >= source.len()
                || f.target >= targets[f.measure].len()
            {
                return Err(Error::InvalidPlan(format!(
                    "flow ({}, {}, {}) is out of range",
                    f.measure, f.source, f.target
                )));
            }
            if f.mass.is_negative(tol) {
                return Err(Error::InvalidPlan(format!(
                    "flow ({}, {}, {}) has negative mass {}",
                    f.measure, f.source, f.target, f.mass
                )));
            }
        }
        flows.sort_by_key(|f| (f.measure, f.source, f.target));
        let mut merged: Vec<Flow<S>> = Vec::with_capacity(flows.len());
        for f in flows {
            match merged.last_mut() {
                Some(last)
                    if (last.measure, last.source, last.target)
                        == (f.measure, f.source, f.target) =>
                {
                    last.mass += f.mass;
                }
                _ => merged.push(f),
            }
        }
        merged.retain(|f| f.mass.is_positive(tol));
        let plan = TransportPlan {
            flows: merged,
            source,
            targets,
        };
        plan.check_marginals(tol)?;
        Ok(plan)
    }

    fn check_marginals(&self, tol: f64) -> Result<()> {
        for (i, target) in self.targets.iter().enumerate() {
            let mut out = vec![S::zero(); self.source.len()];
            let mut inflow = vec![S::zero(); target.len()];
            for f in self.flows.iter().filter(|f| f.measure == i) {
                out[f.source] += &f.mass;
                inflow[f.target] += &f.mass;
            }
            for (j, (sent, atom)) in out.iter().zip(self.source.atoms()).enumerate() {
                if !sent.approx_eq(&atom.mass, tol) {
                    return Err(Error::InvalidPlan(format!(
                        "source atom {j} sends {sent} to measure {i}, has mass {}",
                        atom.mass
                    )));
                }
            }
            for (k, (got, atom)) in inflow.iter().zip(target.atoms()).enumerate() {
                if !got.approx_eq(&atom.mass, tol) {
                    return Err(Error::InvalidPlan(format!(
                        "atom {k} of measure {i} receives {got}, has mass {}",
                        atom.mass
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn flows(&self) -> &[Flow<S>] {
        &self.flows
    }

    pub fn source(&self) -> &DiscreteMeasure<S> {
        &self.source
    }

    pub fn targets(&self) -> &[DiscreteMeasure<S>] {
        &self.targets
    }

    /// `sum_i lambda_i sum_{j,k} y_ijk |x_j - x_ik|^2`.
    pub fn cost(&self, lambda: &[S]) -> S {
        let mut total = S::zero();
        for f in &self.flows {
            let d = dist2(
                &self.source.atoms()[f.source].point,
                &self.targets[f.measure].atoms()[f.target].point,
            );
            total += lambda[f.measure].clone() * &f.mass * &d;
        }
        total
    }

    /// True iff every source atom sends its whole mass to a single atom of
    /// every target measure.
    pub fn is_non_mass_splitting(&self) -> bool {
        self.flows
            .windows(2)
            .all(|w| (w[0].measure, w[0].source) != (w[1].measure, w[1].source))
    }

    /// For a non-mass-splitting plan: the target atom index of every
    /// `(source atom, measure)` pair.
    pub fn assignment(&self) -> Option<Vec<Vec<usize>>> {
        if !self.is_non_mass_splitting() {
            return None;
        }
        let mut out = vec![vec![usize::MAX; self.targets.len()]; self.source.len()];
        for f in &self.flows {
            out[f.source][f.measure] = f.target;
        }
        Some(out)
    }
}

/// Transportation problem from `source` to `target`: variables `y_jk`
/// (index `j * |target| + k`), one row per source atom followed by one row
/// per target atom.
pub fn transportation_program<S: Scalar>(
    source: &DiscreteMeasure<S>,
    target: &DiscreteMeasure<S>,
) -> Result<LinearProgram<S>> {
    let (m, n) = (source.len(), target.len());
    let mut objective = Vec::with_capacity(m * n);
    for a in source.atoms() {
        for b in target.atoms() {
            objective.push(dist2(&a.point, &b.point));
        }
    }
    let mut rows = Vec::with_capacity(m + n);
    let mut rhs = Vec::with_capacity(m + n);
    for (j, a) in source.atoms().iter().enumerate() {
        rows.push((0..n).map(|k| (j * n + k, 1)).collect());
        rhs.push(a.mass.clone());
    }
    for (k, b) in target.atoms().iter().enumerate() {
        rows.push((0..m).map(|j| (j * n + k, 1)).collect());
        rhs.push(b.mass.clone());
    }
    LinearProgram::new(m * n, objective, rows, rhs)
}

/// Optimal cost and plan for a fixed candidate `p0`. The program separates
/// into one transportation problem per input measure; these are solved in
/// parallel and merged in measure order.
pub fn transport_cost<S: Scalar>(
    p0: &DiscreteMeasure<S>,
    instance: &Instance<S>,
) -> Result<(S, TransportPlan<S>)> {
    if p0.dim() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            found: p0.dim(),
        });
    }
    let tol = instance.tol();
    let opts = SolverOptions::with_tolerance(tol);
    let per_measure: Vec<Result<Vec<Flow<S>>>> = instance
        .measures()
        .par_iter()
        .enumerate()
        .map(|(i, target)| {
            let program = transportation_program(p0, target)?;
            let sol = lp::solve_to_optimal_vertex(&program, &opts)?.into_optimal()?;
            let n = target.len();
            Ok(sol
                .values
                .into_iter()
                .enumerate()
                .filter(|(_, v)| v.is_positive(tol))
                .map(|(var, mass)| Flow {
                    measure: i,
                    source: var / n,
                    target: var % n,
                    mass,
                })
                .collect())
        })
        .collect();
    let mut flows = Vec::new();
    for part in per_measure {
        flows.extend(part?);
    }
    let plan = TransportPlan::new(p0.clone(), instance.measures().to_vec(), flows, tol)?;
    Ok((plan.cost(instance.lambda()), plan))
}
