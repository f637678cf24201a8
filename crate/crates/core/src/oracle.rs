//! Brute-force verifiers, independent of the simplex code, for small
//! instances.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, VertexSolution};
use crate::measure::{dist2, DiscreteMeasure, Instance, MeasureKind, Point};
use crate::scalar::Scalar;

/// Largest `|P0| * |P1|` the exhaustive transport search accepts.
pub const MAX_CELLS: usize = 16;

/// Largest common mass denominator the exhaustive transport search accepts.
pub const MAX_DENOMINATOR: usize = 16;

/// Largest candidate support [`enumerate_measures`] accepts.
pub const MAX_ENUMERATED_SUPPORT: usize = 9;

/// Transportation problem with masses scaled to integers by a common
/// denominator.
#[derive(Clone, Debug)]
pub struct IntegralTransportInstance<S> {
    pub denominator: usize,
    pub supply: Vec<usize>,
    pub demand: Vec<usize>,
    /// `cost[j][k]`, squared distances.
    pub cost: Vec<Vec<S>>,
}

fn scaled_mass<S: Scalar>(mass: &S, denominator: usize, tol: f64) -> Option<usize> {
    let scaled = mass.clone() * &S::from_i64(denominator as i64);
    let rounded = scaled.to_f64().round();
    if rounded < 0.0 || !scaled.approx_eq(&S::from_i64(rounded as i64), tol) {
        return None;
    }
    Some(rounded as usize)
}

impl<S: Scalar> IntegralTransportInstance<S> {
    pub fn new(p0: &DiscreteMeasure<S>, p1: &DiscreteMeasure<S>, denominator: usize, tol: f64) -> Result<Self> {
        if p0.len() * p1.len() > MAX_CELLS {
            return Err(Error::OracleLimit(format!(
                "{} x {} transport exceeds {MAX_CELLS} cells",
                p0.len(),
                p1.len()
            )));
        }
        if denominator == 0 || denominator > MAX_DENOMINATOR {
            return Err(Error::OracleLimit(format!(
                "denominator {denominator} outside 1..={MAX_DENOMINATOR}"
            )));
        }
        let scale = |m: &DiscreteMeasure<S>| -> Result<Vec<usize>> {
            m.masses()
                .map(|mass| {
                    scaled_mass(mass, denominator, tol).ok_or_else(|| {
                        Error::OracleLimit(format!("mass {mass} is not a multiple of 1/{denominator}"))
                    })
                })
                .collect()
        };
        let supply = scale(p0)?;
        let demand = scale(p1)?;
        let (a, b): (usize, usize) = (supply.iter().sum(), demand.iter().sum());
        if a != b {
            return Err(Error::InvalidMeasure(format!(
                "scaled masses differ: {a} vs {b}"
            )));
        }
        let cost = p0
            .points()
            .map(|x| p1.points().map(|y| dist2(x, y)).collect())
            .collect();
        Ok(IntegralTransportInstance {
            denominator,
            supply,
            demand,
            cost,
        })
    }

    /// Minimum cost over all integral transports, by depth-first search over
    /// the cells in row-major order.
    pub fn min_cost(&self) -> S {
        let rows = self.supply.len();
        let cols = self.demand.len();
        let mut best: Option<S> = None;
        let mut row_left = self.supply.clone();
        let mut col_left = self.demand.clone();
        let mut flows = vec![0usize; rows * cols];
        self.search(0, &mut row_left, &mut col_left, &mut flows, &mut best);
        let total = best.expect("balanced integral transportation problems are feasible");
        total / &S::from_i64(self.denominator as i64)
    }

    fn search(
        &self,
        cell: usize,
        row_left: &mut [usize],
        col_left: &mut [usize],
        flows: &mut [usize],
        best: &mut Option<S>,
    ) {
        let cols = self.demand.len();
        if cell == flows.len() {
            if col_left.iter().all(|&c| c == 0) {
                let mut total = S::zero();
                for (idx, &f) in flows.iter().enumerate() {
                    if f > 0 {
                        total += S::from_i64(f as i64) * &self.cost[idx / cols][idx % cols];
                    }
                }
                if best.as_ref().is_none_or(|b| total < *b) {
                    *best = Some(total);
                }
            }
            return;
        }
        let (j, k) = (cell / cols, cell % cols);
        let cap = row_left[j].min(col_left[k]);
        // The last cell of a row must take whatever the row has left.
        let range = if k + 1 == cols {
            if row_left[j] > col_left[k] {
                return;
            }
            row_left[j]..=row_left[j]
        } else {
            0..=cap
        };
        for f in range {
            flows[cell] = f;
            row_left[j] -= f;
            col_left[k] -= f;
            self.search(cell + 1, row_left, col_left, flows, best);
            row_left[j] += f;
            col_left[k] += f;
        }
        flows[cell] = 0;
    }
}

/// Squared Wasserstein distance by exhaustive search over transports at
/// `1/denominator` granularity.
pub fn brute_force_w2<S: Scalar>(
    p0: &DiscreteMeasure<S>,
    p1: &DiscreteMeasure<S>,
    denominator: usize,
    tol: f64,
) -> Result<S> {
    if p0.dim() != p1.dim() {
        return Err(Error::DimensionMismatch {
            expected: p0.dim(),
            found: p1.dim(),
        });
    }
    Ok(IntegralTransportInstance::new(p0, p1, denominator, tol)?.min_cost())
}

/// `sum_i lambda_i W_2(p0, P_i)^2` via [`brute_force_w2`].
pub fn brute_force_phi<S: Scalar>(p0: &DiscreteMeasure<S>, instance: &Instance<S>, denominator: usize) -> Result<S> {
    let mut total = S::zero();
    for (m, l) in instance.measures().iter().zip(instance.lambda()) {
        total += l.clone() * &brute_force_w2(p0, m, denominator, instance.tol())?;
    }
    Ok(total)
}

/// Smallest `D <= max` such that every mass is a multiple of `1/D`.
pub fn common_denominator<'a, S: Scalar>(
    measures: impl IntoIterator<Item = &'a DiscreteMeasure<S>> + Clone,
    max: usize,
    tol: f64,
) -> Option<usize> {
    (1..=max).find(|&d| {
        measures
            .clone()
            .into_iter()
            .all(|m| m.masses().all(|mass| scaled_mass(mass, d, tol).is_some()))
    })
}

/// Every measure on `support` whose masses are multiples of
/// `1/denominator`, in a fixed order.
pub fn enumerate_measures<S: Scalar>(
    support: &[Point<S>],
    denominator: usize,
    tol: f64,
) -> Result<Vec<DiscreteMeasure<S>>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if support.len() > MAX_ENUMERATED_SUPPORT || denominator == 0 || denominator > MAX_DENOMINATOR {
        return Err(Error::OracleLimit(format!(
            "enumeration over {} points at 1/{denominator} exceeds the limits",
            support.len()
        )));
    }
    let mut out = Vec::new();
    let mut parts = vec![0usize; support.len()];
    compositions(0, denominator, &mut parts, &mut |parts| {
        let atoms = parts
            .iter()
            .zip(support)
            .filter(|(&q, _)| q > 0)
            .map(|(&q, p)| (p.clone(), S::from_ratio(q as i64, denominator as i64)))
            .collect();
        out.push(DiscreteMeasure::new(atoms, MeasureKind::Full, tol));
    });
    out.into_iter().collect()
}

fn compositions(pos: usize, left: usize, parts: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if pos + 1 == parts.len() {
        parts[pos] = left;
        visit(parts);
        return;
    }
    for q in 0..=left {
        parts[pos] = q;
        compositions(pos + 1, left - q, parts, visit);
    }
}

/// Dense copy of the constraint matrix.
fn dense_matrix<S: Scalar>(lp: &LinearProgram<S>) -> Vec<Vec<S>> {
    let mut a = vec![vec![S::zero(); lp.num_vars()]; lp.num_rows()];
    for (r, row) in lp.rows().iter().enumerate() {
        for &(var, coef) in row {
            a[r][var] = S::from_i64(coef as i64);
        }
    }
    a
}

/// Row-reduces `m` in place; returns the pivot columns.
fn row_reduce<S: Scalar>(m: &mut [Vec<S>], tol: f64) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).filter(|&i| !m[i][c].is_negligible(tol)).max_by(|&a, &b| {
            m[a][c].abs().total_cmp(&m[b][c].abs())
        }) else {
            continue;
        };
        m.swap(r, p);
        let piv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() / &piv;
        }
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for cc in c..cols {
                let delta = f.clone() * &m[r][cc];
                m[i][cc] -= delta;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Independent check that `sol` is an optimal basic solution of `lp`:
/// feasibility, zero nonbasic variables, basis columns independent and as
/// many as the rank of the constraint matrix, and no negative reduced cost
/// with respect to that basis.
pub fn verify_vertex<S: Scalar>(sol: &VertexSolution<S>, lp: &LinearProgram<S>, tol: f64) -> bool {
    if !sol.is_optimal() || sol.values.len() != lp.num_vars() {
        return false;
    }
    if sol.values.iter().any(|v| v.is_negative(tol)) {
        return false;
    }
    if lp.residuals(&sol.values).iter().any(|r| !r.is_negligible(tol)) {
        return false;
    }
    let mut basis = sol.basis.clone();
    basis.sort_unstable();
    basis.dedup();
    if basis.len() != sol.basis.len() || basis.iter().any(|&b| b >= lp.num_vars()) {
        return false;
    }
    let is_basic = |j: usize| basis.binary_search(&j).is_ok();
    if (0..lp.num_vars()).any(|j| !is_basic(j) && !sol.values[j].is_negligible(tol)) {
        return false;
    }

    let a = dense_matrix(lp);
    let rank = row_reduce(&mut a.clone(), tol).len();
    let mut b: Vec<Vec<S>> = a
        .iter()
        .map(|row| basis.iter().map(|&j| row[j].clone()).collect())
        .collect();
    if row_reduce(&mut b, tol).len() != basis.len() || basis.len() != rank {
        return false;
    }

    // Duals: solve B^T pi = c_B, free unknowns set to zero.
    let m = lp.num_rows();
    let mut system: Vec<Vec<S>> = basis
        .iter()
        .map(|&j| {
            let mut row: Vec<S> = (0..m).map(|r| a[r][j].clone()).collect();
            row.push(lp.objective()[j].clone());
            row
        })
        .collect();
    let pivots = row_reduce(&mut system, tol);
    if pivots.last() == Some(&m) {
        return false;
    }
    let mut pi = vec![S::zero(); m];
    for (row, &c) in system.iter().zip(&pivots) {
        pi[c] = row[m].clone();
    }
    (0..lp.num_vars()).all(|j| {
        let mut rc = lp.objective()[j].clone();
        for &(r, coef) in lp.column(j) {
            if coef > 0 {
                rc -= &pi[r];
            } else {
                rc += &pi[r];
            }
        }
        !rc.is_negative(tol)
    })
}
