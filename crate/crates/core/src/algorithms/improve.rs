//! Iterative local improvement: alternate an optimal solve over the current
//! support with non-mass-splitting recovery until the recovery no longer
//! changes the measure.

use log::{debug, info, warn};

use super::recovery::{recover_non_mass_split, RecoveryOptions};
use super::{approx_barycenter, approx_barycenter_warm, ApproxResult, SolveStats};
use crate::error::Result;
use crate::measure::{union_support, Instance};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ImproveOptions {
    pub recovery: RecoveryOptions,
    pub max_iterations: usize,
}

impl Default for ImproveOptions {
    fn default() -> Self {
        ImproveOptions {
            recovery: RecoveryOptions::default(),
            max_iterations: 100,
        }
    }
}

/// One round of the loop.
#[derive(Clone, Debug)]
pub struct IterationRecord<S> {
    /// Cost of the optimum over the current support.
    pub phi_step1: S,
    /// Cost of the recovered measure under its non-mass-splitting plan.
    pub phi_step2: S,
    /// Size of the candidate support the optimum was taken over.
    pub candidate_size: usize,
    /// Atoms of the optimum.
    pub support_size: usize,
    /// Atoms of the recovered measure.
    pub recovered_support_size: usize,
    /// True when the recovered measure equals the optimum.
    pub fixpoint: bool,
    pub solve: SolveStats,
    pub shifts: usize,
}

#[derive(Clone, Debug)]
pub struct ImprovementTrace<S> {
    pub iterations: Vec<IterationRecord<S>>,
    /// On convergence: the optimum of the last round with its
    /// non-mass-splitting transport. Otherwise the best measure seen.
    pub result: ApproxResult<S>,
    pub converged: bool,
    pub certified_ratio_bound: S,
}

impl<S: Scalar> ImprovementTrace<S> {
    /// `phi_step1, phi_step2` of every round, in order.
    pub fn stage_phis(&self) -> Vec<S> {
        self.iterations
            .iter()
            .flat_map(|r| [r.phi_step1.clone(), r.phi_step2.clone()])
            .collect()
    }

    /// The certified ratio bound after every stage, `2 * phi / phi_first`.
    pub fn stage_bounds(&self) -> Vec<S> {
        let first = self.iterations.first().map(|r| r.phi_step1.clone());
        self.stage_phis()
            .iter()
            .map(|phi| ratio_bound(phi, first.as_ref().unwrap_or(phi)))
            .collect()
    }
}

fn ratio_bound<S: Scalar>(phi: &S, first: &S) -> S {
    if first.is_zero() {
        S::one()
    } else {
        S::from_i64(2) * phi / first
    }
}

/// `2 / alpha` with `alpha = phi_first / phi_final`: the final measure costs
/// at most this factor times an exact barycenter. Equals 1 when the first
/// optimum already has cost zero.
pub fn certified_bound<S: Scalar>(trace: &ImprovementTrace<S>) -> S {
    match trace.iterations.first() {
        Some(first) => ratio_bound(&trace.result.phi, &first.phi_step1),
        None => S::from_i64(2),
    }
}

/// Runs the loop from the optimum over the union of the input supports.
/// Every re-solve after the first is warm-started from the recovered measure
/// and its transport.
pub fn iterate_local_improvement<S: Scalar>(
    instance: &Instance<S>,
    options: &ImproveOptions,
) -> Result<ImprovementTrace<S>> {
    let tol = instance.tol();
    let support = union_support(instance.measures(), tol)?;
    let mut current = approx_barycenter(&support, instance)?;
    let mut iterations = Vec::new();
    let mut best: Option<ApproxResult<S>> = None;
    let mut converged = false;
    for round in 1..=options.max_iterations.max(1) {
        let recovered = recover_non_mass_split(&current, instance, &options.recovery)?;
        let fixpoint = recovered.measure.approx_eq(&current.measure, tol);
        info!(
            "round {round}: phi {} -> {}, support {} -> {}",
            current.phi,
            recovered.phi,
            current.measure.len(),
            recovered.measure.len()
        );
        iterations.push(IterationRecord {
            phi_step1: current.phi.clone(),
            phi_step2: recovered.phi.clone(),
            candidate_size: current.support_used.len(),
            support_size: current.measure.len(),
            recovered_support_size: recovered.measure.len(),
            fixpoint,
            solve: current.stats.clone(),
            shifts: recovered.shifts,
        });
        let next = ApproxResult {
            measure: recovered.measure,
            plan: recovered.plan,
            phi: recovered.phi,
            support_used: current.support_used.clone(),
            stats: current.stats.clone(),
        };
        if fixpoint {
            best = Some(next);
            converged = true;
            break;
        }
        if round == options.max_iterations {
            best = Some(next);
            break;
        }
        let new_support: Vec<_> = next.measure.points().cloned().collect();
        current = approx_barycenter_warm(&new_support, instance, &next.plan)?;
        if current.stats.warm_start_fallback {
            warn!("round {}: warm start rejected, solved from scratch", round + 1);
        }
        debug!(
            "round {}: warm start took {} crash moves and {} pivots",
            round + 1,
            current.stats.crash_moves,
            current.stats.pivots
        );
    }
    if !converged {
        warn!(
            "no fixpoint after {} rounds, returning the best measure found",
            options.max_iterations
        );
    }
    let result = best.expect("at least one round runs");
    let mut trace = ImprovementTrace {
        iterations,
        result,
        converged,
        certified_ratio_bound: S::zero(),
    };
    trace.certified_ratio_bound = certified_bound(&trace);
    Ok(trace)
}
