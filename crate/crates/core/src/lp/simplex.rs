use log::{debug, warn};

use super::{LinearProgram, Pricing, SolverOptions, Status, VertexSolution, WarmStart};

/// Consecutive degenerate pivots after which Dantzig pricing falls back to
/// Bland's rule until the objective moves again.
const DEGENERATE_RUN_LIMIT: usize = 50;
use crate::error::Result;
use crate::scalar::Scalar;

/// Solves `lp` from scratch: phase 1 on artificials, then phase 2.
pub fn solve_to_optimal_vertex<S: Scalar>(
    lp: &LinearProgram<S>,
    opts: &SolverOptions,
) -> Result<VertexSolution<S>> {
    let mut engine = Engine::new(lp, opts);
    engine.start_artificial();
    if let Some(status) = engine.phase_one() {
        return Ok(engine.finish(status, false));
    }
    let status = engine.phase_two();
    Ok(engine.finish(status, false))
}

/// Solves `lp` starting from a feasible point. A point that is not a
/// vertex is first moved to one without increasing the objective. An
/// infeasible hint falls back to [`solve_to_optimal_vertex`] and sets
/// `warm_start_fallback`.
pub fn solve_warm_started<S: Scalar>(
    lp: &LinearProgram<S>,
    hint: &WarmStart<S>,
    opts: &SolverOptions,
) -> Result<VertexSolution<S>> {
    let Some(values) = feasible_hint(lp, &hint.values, opts) else {
        warn!("warm-start point is infeasible, solving from scratch");
        let mut sol = solve_to_optimal_vertex(lp, opts)?;
        sol.warm_start_fallback = true;
        return Ok(sol);
    };
    let mut engine = Engine::new(lp, opts);
    engine.start_from_point(values, hint.basis.as_deref());
    if let Some(status) = engine.purify() {
        return Ok(engine.finish(status, false));
    }
    engine.drive_out_artificials();
    let status = engine.phase_two();
    Ok(engine.finish(status, false))
}

/// Validates a warm-start point; small negative noise is clipped in
/// floating-point mode.
fn feasible_hint<S: Scalar>(
    lp: &LinearProgram<S>,
    values: &[S],
    opts: &SolverOptions,
) -> Option<Vec<S>> {
    if values.len() != lp.num_vars() {
        return None;
    }
    let mut clipped = Vec::with_capacity(values.len());
    for v in values {
        if v.is_negative(opts.tol) {
            return None;
        }
        if *v < S::zero() || v.is_negligible(opts.tol) && !S::EXACT {
            clipped.push(S::zero());
        } else {
            clipped.push(v.clone());
        }
    }
    let residuals = lp.residuals(&clipped);
    let scale = lp
        .rhs()
        .iter()
        .fold(1.0f64, |acc, b| acc.max(b.to_f64().abs()));
    if residuals.iter().all(|r| r.is_negligible(opts.tol * scale)) {
        Some(clipped)
    } else {
        None
    }
}

struct Engine<'a, S> {
    lp: &'a LinearProgram<S>,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    /// Column of artificial `n + r` is `art_sign[r] * e_r`.
    art_cols: Vec<[(usize, i8); 1]>,
    /// Explicit basis inverse, row-major.
    binv: Vec<Vec<S>>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    /// Values of all `n + m` variables.
    x: Vec<S>,
    cost: Vec<S>,
    duals: Vec<S>,
    pivots: usize,
    crash_moves: usize,
}

impl<'a, S: Scalar> Engine<'a, S> {
    fn new(lp: &'a LinearProgram<S>, opts: &'a SolverOptions) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let art_cols = lp
            .rhs()
            .iter()
            .enumerate()
            .map(|(r, b)| [(r, if *b < S::zero() { -1 } else { 1 })])
            .collect();
        Engine {
            lp,
            opts,
            m,
            n,
            art_cols,
            binv: Vec::new(),
            basis: Vec::new(),
            position: vec![None; n + m],
            x: vec![S::zero(); n + m],
            cost: vec![S::zero(); n + m],
            duals: vec![S::zero(); m],
            pivots: 0,
            crash_moves: 0,
        }
    }

    fn column(&self, var: usize) -> &[(usize, i8)] {
        if var < self.n {
            self.lp.column(var)
        } else {
            &self.art_cols[var - self.n]
        }
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.n
    }

    /// All-artificial basis. `x` is left for the caller to fill.
    fn init_artificial_basis(&mut self) {
        let m = self.m;
        self.binv = (0..m)
            .map(|r| {
                let mut row = vec![S::zero(); m];
                row[r] = if self.art_cols[r][0].1 > 0 {
                    S::one()
                } else {
                    -S::one()
                };
                row
            })
            .collect();
        self.basis = (0..m).map(|r| self.n + r).collect();
        for r in 0..m {
            self.position[self.n + r] = Some(r);
        }
    }

    fn start_artificial(&mut self) {
        self.init_artificial_basis();
        for r in 0..self.m {
            self.x[self.n + r] = self.lp.rhs()[r].abs();
        }
    }

    fn start_from_point(&mut self, values: Vec<S>, basis_hint: Option<&[usize]>) {
        self.init_artificial_basis();
        for (slot, v) in self.x.iter_mut().zip(values) {
            *slot = v;
        }
        let mut order: Vec<usize> = Vec::new();
        if let Some(hint) = basis_hint {
            order.extend(hint.iter().copied().filter(|&v| v < self.n));
        }
        order.extend((0..self.n).filter(|&j| self.x[j].is_positive(self.opts.tol)));
        for j in order {
            if self.position[j].is_some() {
                continue;
            }
            let d = self.ftran(j);
            if let Some(p) = self.choose_artificial_row(&d) {
                // The point does not move: the artificial leaving is at zero.
                self.x[self.basis[p]] = S::zero();
                self.pivot(p, j, &d);
            }
        }
    }

    /// Row of a basic artificial with a usable entry in `d`.
    fn choose_artificial_row(&self, d: &[S]) -> Option<usize> {
        let candidates = (0..self.m)
            .filter(|&r| self.is_artificial(self.basis[r]) && !d[r].is_negligible(self.opts.pivot_tol));
        if S::EXACT {
            candidates.min_by_key(|&r| self.basis[r])
        } else {
            candidates.max_by(|&a, &b| {
                d[a].abs()
                    .total_cmp(&d[b].abs())
                    .then_with(|| self.basis[b].cmp(&self.basis[a]))
            })
        }
    }

    /// `B^{-1} a_var`.
    fn ftran(&self, var: usize) -> Vec<S> {
        let mut d = vec![S::zero(); self.m];
        for &(r, coef) in self.column(var) {
            for (i, di) in d.iter_mut().enumerate() {
                let e = &self.binv[i][r];
                if e.is_zero() {
                    continue;
                }
                if coef > 0 {
                    *di += e;
                } else {
                    *di -= e;
                }
            }
        }
        d
    }

    fn reduced_cost(&self, var: usize) -> S {
        let mut rc = self.cost[var].clone();
        for &(r, coef) in self.column(var) {
            if coef > 0 {
                rc -= &self.duals[r];
            } else {
                rc += &self.duals[r];
            }
        }
        rc
    }

    fn compute_duals(&mut self) {
        let mut duals = vec![S::zero(); self.m];
        for i in 0..self.m {
            let c = &self.cost[self.basis[i]];
            if c.is_zero() {
                continue;
            }
            for (r, e) in self.binv[i].iter().enumerate() {
                if !e.is_zero() {
                    duals[r] += c.clone() * e;
                }
            }
        }
        self.duals = duals;
    }

    /// Replaces the basic variable of row `p` by `entering`; `d` is
    /// `B^{-1} a_entering`. Values are not touched.
    fn pivot(&mut self, p: usize, entering: usize, d: &[S]) {
        let piv = d[p].clone();
        let mut row_p = std::mem::take(&mut self.binv[p]);
        let mut nz = Vec::new();
        for (r, e) in row_p.iter_mut().enumerate() {
            if !e.is_zero() {
                *e = e.clone() / &piv;
                nz.push(r);
            }
        }
        let exact = S::EXACT;
        for (i, row) in self.binv.iter_mut().enumerate() {
            if i == p || d[i].is_zero() {
                continue;
            }
            let factor = &d[i];
            for &r in &nz {
                let delta = factor.clone() * &row_p[r];
                row[r] -= delta;
                if !exact && row[r].is_negligible(1e-14) {
                    row[r] = S::zero();
                }
            }
        }
        self.binv[p] = row_p;
        let leaving = self.basis[p];
        self.position[leaving] = None;
        self.basis[p] = entering;
        self.position[entering] = Some(p);
    }

    /// Moves `var` by `step` (signed) and the basic variables along `-step * d`.
    fn shift(&mut self, var: usize, step: &S, d: &[S]) {
        if step.is_zero() {
            return;
        }
        self.x[var] += step;
        for i in 0..self.m {
            if !d[i].is_zero() {
                let b = self.basis[i];
                self.x[b] -= step.clone() * &d[i];
            }
        }
    }

    fn clamp_basic(&mut self) {
        if S::EXACT {
            return;
        }
        for &b in &self.basis {
            if self.x[b] < S::zero() {
                self.x[b] = S::zero();
            }
        }
    }

    /// Entering variable: smallest structural index with a negative reduced
    /// cost (Bland), or the most negative reduced cost (Dantzig) unless
    /// `bland` forces the anti-cycling rule.
    fn entering(&self, bland: bool) -> Option<(usize, S)> {
        let mut candidates = (0..self.n)
            .filter(|&j| self.position[j].is_none())
            .map(|j| (j, self.reduced_cost(j)))
            .filter(|(_, rc)| rc.is_negative(self.opts.reduced_cost_tol));
        if bland || self.opts.pricing == Pricing::Bland {
            return candidates.next();
        }
        let mut best = candidates.next()?;
        for (j, rc) in candidates {
            if rc < best.1 {
                best = (j, rc);
            }
        }
        Some(best)
    }

    /// Minimum ratio over rows with `d_i > 0`; ties go to the smallest basic
    /// variable index.
    fn leaving(&self, d: &[S]) -> Option<(usize, S)> {
        let mut best: Option<(usize, S)> = None;
        for i in 0..self.m {
            if !d[i].is_positive(self.opts.pivot_tol) {
                continue;
            }
            let xb = &self.x[self.basis[i]];
            let xb = if *xb < S::zero() { S::zero() } else { xb.clone() };
            let ratio = xb / &d[i];
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = ratio.approx_eq(&br, self.opts.tol);
                    if (!tie && ratio < br) || (tie && self.basis[i] < self.basis[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    /// Primal simplex on the current cost vector. Returns a terminal status.
    fn iterate(&mut self) -> Status {
        self.compute_duals();
        let mut since_refresh = 0usize;
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots >= self.opts.max_pivots {
                return Status::IterationLimit;
            }
            let Some((entering, rc)) = self.entering(degenerate_run >= DEGENERATE_RUN_LIMIT) else {
                return Status::Optimal;
            };
            let d = self.ftran(entering);
            let Some((p, theta)) = self.leaving(&d) else {
                return Status::Unbounded;
            };
            if theta.is_negligible(self.opts.tol) {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            let leaving_var = self.basis[p];
            self.shift(entering, &theta, &d);
            self.x[leaving_var] = S::zero();
            self.pivot(p, entering, &d);
            // pi' = pi + rc_q * (row p of the new inverse)
            for (r, e) in self.binv[p].iter().enumerate() {
                if !e.is_zero() {
                    self.duals[r] += rc.clone() * e;
                }
            }
            self.pivots += 1;
            since_refresh += 1;
            if !S::EXACT && since_refresh >= 64 {
                self.refresh();
                since_refresh = 0;
            }
        }
    }

    /// Recomputes basic values and duals from the inverse (floating-point
    /// drift control). Nonbasic variables are at zero here.
    fn refresh(&mut self) {
        let mut xb = vec![S::zero(); self.m];
        for (i, v) in xb.iter_mut().enumerate() {
            for (r, b) in self.lp.rhs().iter().enumerate() {
                let e = &self.binv[i][r];
                if !e.is_zero() && !b.is_zero() {
                    *v += e.clone() * b;
                }
            }
        }
        for (i, v) in xb.into_iter().enumerate() {
            let b = self.basis[i];
            self.x[b] = v;
        }
        self.clamp_basic();
        self.compute_duals();
    }

    /// Returns `Some(status)` when the program is infeasible or phase 1 hit
    /// the iteration limit.
    fn phase_one(&mut self) -> Option<Status> {
        for r in 0..self.m {
            self.cost[self.n + r] = S::one();
        }
        let status = self.iterate();
        if status == Status::IterationLimit {
            return Some(status);
        }
        let infeasibility = self.x[self.n..]
            .iter()
            .fold(S::zero(), |acc, v| acc + v);
        let scale = self
            .lp
            .rhs()
            .iter()
            .fold(1.0f64, |acc, b| acc + b.to_f64().abs());
        if !infeasibility.is_negligible(self.opts.tol * scale) {
            debug!("phase 1 ended with infeasibility {infeasibility}");
            return Some(Status::Infeasible);
        }
        for r in 0..self.m {
            self.x[self.n + r] = S::zero();
        }
        self.drive_out_artificials();
        None
    }

    /// Pivots basic artificials (all at zero) out wherever their row of
    /// `B^{-1} A` has a nonzero structural entry.
    fn drive_out_artificials(&mut self) {
        for p in 0..self.m {
            if !self.is_artificial(self.basis[p]) {
                continue;
            }
            let mut choice: Option<(usize, S)> = None;
            for j in 0..self.n {
                if self.position[j].is_some() {
                    continue;
                }
                let mut alpha = S::zero();
                for &(r, coef) in self.lp.column(j) {
                    let e = &self.binv[p][r];
                    if e.is_zero() {
                        continue;
                    }
                    if coef > 0 {
                        alpha += e;
                    } else {
                        alpha -= e;
                    }
                }
                if alpha.is_negligible(self.opts.pivot_tol) {
                    continue;
                }
                if S::EXACT {
                    choice = Some((j, alpha));
                    break;
                }
                let better = choice
                    .as_ref()
                    .is_none_or(|(_, best)| alpha.abs() > best.abs());
                if better {
                    choice = Some((j, alpha));
                }
            }
            if let Some((j, _)) = choice {
                let d = self.ftran(j);
                let art = self.basis[p];
                self.x[art] = S::zero();
                self.pivot(p, j, &d);
            }
        }
    }

    fn phase_two(&mut self) -> Status {
        for (j, c) in self.lp.objective().iter().enumerate() {
            self.cost[j] = c.clone();
        }
        for r in 0..self.m {
            self.cost[self.n + r] = S::zero();
        }
        self.iterate()
    }

    /// Turns the current (feasible, possibly non-basic) point into a basic
    /// solution without increasing the objective. Returns `Some(status)` if
    /// the objective is unbounded along a superbasic direction.
    fn purify(&mut self) -> Option<Status> {
        for (j, c) in self.lp.objective().iter().enumerate() {
            self.cost[j] = c.clone();
        }
        loop {
            let Some(j) = (0..self.n)
                .find(|&j| self.position[j].is_none() && !self.x[j].is_negligible(self.opts.tol))
            else {
                break;
            };
            self.compute_duals();
            let rc = self.reduced_cost(j);
            let d = self.ftran(j);
            let decrease = !rc.is_negative(self.opts.reduced_cost_tol);
            // Direction of the basic variables per unit step of x_j.
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.m {
                let di = &d[i];
                if di.is_negligible(self.opts.pivot_tol) {
                    continue;
                }
                let b = self.basis[i];
                let ratio = if self.is_artificial(b) {
                    S::zero()
                } else {
                    let blocks = if decrease {
                        *di < S::zero()
                    } else {
                        *di > S::zero()
                    };
                    if !blocks {
                        continue;
                    }
                    let xb = if self.x[b] < S::zero() {
                        S::zero()
                    } else {
                        self.x[b].clone()
                    };
                    xb / &di.abs()
                };
                let replace = match &best {
                    None => true,
                    Some((bi, br)) => {
                        let tie = ratio.approx_eq(br, self.opts.tol);
                        (!tie && ratio < *br) || (tie && self.basis[i] < self.basis[*bi])
                    }
                };
                if replace {
                    best = Some((i, ratio));
                }
            }
            self.crash_moves += 1;
            if decrease {
                let own = self.x[j].clone();
                match best {
                    Some((p, ratio)) if ratio < own && !ratio.approx_eq(&own, self.opts.tol) => {
                        let leaving = self.basis[p];
                        self.shift(j, &(-ratio), &d);
                        self.x[leaving] = S::zero();
                        self.pivot(p, j, &d);
                    }
                    _ => {
                        self.shift(j, &(-own), &d);
                        self.x[j] = S::zero();
                    }
                }
            } else {
                let Some((p, ratio)) = best else {
                    return Some(Status::Unbounded);
                };
                let leaving = self.basis[p];
                self.shift(j, &ratio, &d);
                self.x[leaving] = S::zero();
                self.pivot(p, j, &d);
            }
            self.clamp_basic();
        }
        None
    }

    fn finish(mut self, status: Status, warm_start_fallback: bool) -> VertexSolution<S> {
        if status == Status::Optimal && !S::EXACT {
            self.refresh();
        }
        let tol = self.opts.tol;
        let values: Vec<S> = (0..self.n)
            .map(|j| {
                let v = &self.x[j];
                if self.position[j].is_none() || (!S::EXACT && (v.is_negligible(tol) || *v < S::zero())) {
                    S::zero()
                } else {
                    v.clone()
                }
            })
            .collect();
        let mut basis: Vec<usize> = self.basis.iter().copied().filter(|&b| b < self.n).collect();
        basis.sort_unstable();
        let objective_value = self.lp.evaluate(&values);
        VertexSolution {
            values,
            basis,
            objective_value,
            status,
            pivots: self.pivots,
            crash_moves: self.crash_moves,
            warm_start_fallback,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};
    use num_traits::Zero;

    fn lp(
        n: usize,
        c: &[(i64, i64)],
        rows: Vec<Vec<(usize, i8)>>,
        b: &[(i64, i64)],
    ) -> LinearProgram<Rational> {
        LinearProgram::new(
            n,
            c.iter().map(|&(p, q)| rat(p, q)).collect(),
            rows,
            b.iter().map(|&(p, q)| rat(p, q)).collect(),
        )
        .unwrap()
    }

    /// 2x2 transportation problem with supplies (1/2, 1/2), demands (1/4, 3/4).
    fn transport_2x2() -> LinearProgram<Rational> {
        // vars: y00 y01 y10 y11
        lp(
            4,
            &[(0, 1), (1, 1), (1, 1), (0, 1)],
            vec![
                vec![(0, 1), (1, 1)],
                vec![(2, 1), (3, 1)],
                vec![(0, 1), (2, 1)],
                vec![(1, 1), (3, 1)],
            ],
            &[(1, 2), (1, 2), (1, 4), (3, 4)],
        )
    }

    #[test]
    fn solves_small_transportation_problem() {
        let sol = solve_to_optimal_vertex(&transport_2x2(), &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // Diagonal carries 1/4 and 1/2, the remaining 1/4 crosses at cost 1.
        assert_eq!(sol.objective_value, rat(1, 4));
        assert_eq!(sol.values, vec![rat(1, 4), rat(1, 4), rat(0, 1), rat(1, 2)]);
        assert!(sol.support_size(0.0) <= 4);
        // One row is redundant, so three structural basics.
        assert_eq!(sol.basis.len(), 3);
    }

    #[test]
    fn zero_objective_returns_feasible_vertex() {
        let mut prog = transport_2x2();
        prog.objective = vec![rat(0, 1); 4];
        let sol = solve_to_optimal_vertex(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.objective_value, rat(0, 1));
        assert!(prog.residuals(&sol.values).iter().all(|r| r.is_zero()));
    }

    #[test]
    fn reports_infeasible_and_unbounded() {
        // x0 + x1 = 1, x0 + x1 = 2
        let infeasible = lp(
            2,
            &[(1, 1), (1, 1)],
            vec![vec![(0, 1), (1, 1)], vec![(0, 1), (1, 1)]],
            &[(1, 1), (2, 1)],
        );
        let sol = solve_to_optimal_vertex(&infeasible, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Infeasible);

        // x0 - x1 = 1, minimize -x0
        let unbounded = lp(2, &[(-1, 1), (0, 1)], vec![vec![(0, 1), (1, -1)]], &[(1, 1)]);
        let sol = solve_to_optimal_vertex(&unbounded, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Unbounded);
    }

    #[test]
    fn negative_rhs_rows() {
        // -x0 - x1 = -1, min x0 + 2 x1
        let prog = lp(2, &[(1, 1), (2, 1)], vec![vec![(0, -1), (1, -1)]], &[(-1, 1)]);
        let sol = solve_to_optimal_vertex(&prog, &SolverOptions::default()).unwrap();
        assert_eq!(sol.objective_value, rat(1, 1));
        assert_eq!(sol.values, vec![rat(1, 1), rat(0, 1)]);
    }

    #[test]
    fn warm_start_from_optimal_vertex_needs_no_pivots() {
        let prog = transport_2x2();
        let opts = SolverOptions::default();
        let cold = solve_to_optimal_vertex(&prog, &opts).unwrap();
        let hint = WarmStart {
            values: cold.values.clone(),
            basis: Some(cold.basis.clone()),
        };
        let warm = solve_warm_started(&prog, &hint, &opts).unwrap();
        assert_eq!(warm.pivots, 0);
        assert_eq!(warm.crash_moves, 0);
        assert_eq!(warm.objective_value, cold.objective_value);
        assert_eq!(warm.values, cold.values);
    }

    #[test]
    fn warm_start_crashes_interior_point_to_vertex() {
        let prog = transport_2x2();
        let opts = SolverOptions::default();
        // Product coupling: every entry positive, objective 1/2.
        let hint = WarmStart {
            values: vec![rat(1, 8), rat(3, 8), rat(1, 8), rat(3, 8)],
            basis: None,
        };
        let warm = solve_warm_started(&prog, &hint, &opts).unwrap();
        assert!(!warm.warm_start_fallback);
        assert!(warm.crash_moves >= 1);
        assert_eq!(warm.objective_value, rat(1, 4));
    }

    #[test]
    fn infeasible_hint_falls_back() {
        let prog = transport_2x2();
        let hint = WarmStart {
            values: vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(0, 1)],
            basis: None,
        };
        let warm = solve_warm_started(&prog, &hint, &SolverOptions::default()).unwrap();
        assert!(warm.warm_start_fallback);
        assert_eq!(warm.objective_value, rat(1, 4));
    }

    #[test]
    fn float_mode_matches_exact() {
        let exact = transport_2x2();
        let float = LinearProgram::<f64>::new(
            4,
            vec![0.0, 1.0, 1.0, 0.0],
            exact.rows().to_vec(),
            vec![0.5, 0.5, 0.25, 0.75],
        )
        .unwrap();
        let sol = solve_to_optimal_vertex(&float, &SolverOptions::default()).unwrap();
        assert!((sol.objective_value - 0.25).abs() < 1e-12);
    }
}
