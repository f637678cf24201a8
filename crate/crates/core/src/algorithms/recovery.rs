//! Recovery of a non-mass-splitting transport from an approximation and an
//! arbitrary optimal transport.
//!
//! The source atoms are split into cells (what each atom sends to each input
//! measure), mass is shifted between cells where this is free of cost, and
//! every cell is spread onto weighted centroids of one point per measure.

use std::cmp::Ordering;

use log::debug;

use super::{exact_barycenter, ApproxResult};
use crate::error::Result;
use crate::measure::{centroid_of, dist2, DiscreteMeasure, Instance, MeasureKind, Point, WeightVector};
use crate::scalar::Scalar;
use crate::transport::{Flow, TransportPlan};

/// A point of an input measure inside a cell, with the mass it receives.
#[derive(Clone, Debug, PartialEq)]
pub struct CellAtom<S> {
    /// Index of the point in its input measure.
    pub index: usize,
    pub point: Point<S>,
    pub mass: S,
}

/// What one source atom `s_l` sends to each input measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionCell<S> {
    pub source: Point<S>,
    /// Residual source mass `d_l`.
    pub mass: S,
    /// `images[i]` lists the points of `P_i` receiving mass, by index.
    pub images: Vec<Vec<CellAtom<S>>>,
}

impl<S: Scalar> PartitionCell<S> {
    /// Total number of points over all images.
    pub fn point_count(&self) -> usize {
        self.images.iter().map(Vec::len).sum()
    }

    /// Cost of transporting the cell's image masses from its source.
    pub fn cost(&self, lambda: &[S]) -> S {
        let mut total = S::zero();
        for (image, l) in self.images.iter().zip(lambda) {
            for a in image {
                total += l.clone() * &a.mass * &dist2(&self.source, &a.point);
            }
        }
        total
    }

    fn add(&mut self, i: usize, index: usize, point: &Point<S>, mass: &S) {
        let image = &mut self.images[i];
        match image.binary_search_by_key(&index, |a| a.index) {
            Ok(pos) => image[pos].mass += mass,
            Err(pos) => image.insert(
                pos,
                CellAtom {
                    index,
                    point: point.clone(),
                    mass: mass.clone(),
                },
            ),
        }
    }

    /// Removes `mass` from atom `pos` of image `i`, dropping the atom once it
    /// is exhausted.
    fn take(&mut self, i: usize, pos: usize, mass: &S, tol: f64) {
        let atom = &mut self.images[i][pos];
        atom.mass -= mass;
        if !atom.mass.is_positive(tol) {
            self.images[i].remove(pos);
        }
    }
}

/// Sum of the cell costs.
pub fn partition_cost<S: Scalar>(cells: &[PartitionCell<S>], lambda: &[S]) -> S {
    let mut total = S::zero();
    for c in cells {
        total += c.cost(lambda);
    }
    total
}

/// One cell per source atom of `plan`, in the (lexicographic) order of the
/// source atoms.
pub fn partition_by_source<S: Scalar>(plan: &TransportPlan<S>) -> Vec<PartitionCell<S>> {
    let n = plan.targets().len();
    let mut cells: Vec<PartitionCell<S>> = plan
        .source()
        .atoms()
        .iter()
        .map(|a| PartitionCell {
            source: a.point.clone(),
            mass: a.mass.clone(),
            images: vec![Vec::new(); n],
        })
        .collect();
    for f in plan.flows() {
        let point = &plan.targets()[f.measure].atoms()[f.target].point;
        cells[f.source].add(f.measure, f.target, point, &f.mass);
    }
    cells
}

fn lex_max<S: Scalar>(image: &[CellAtom<S>]) -> Option<usize> {
    (0..image.len()).max_by(|&a, &b| image[a].point.lex_cmp(&image[b].point))
}

/// Index of the atom maximizing `direction . x`, ties going to the
/// lexicographically larger point.
fn argmax_along<S: Scalar>(image: &[CellAtom<S>], direction: &Point<S>, tol: f64) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (q, a) in image.iter().enumerate() {
        let v = direction.dot(&a.point);
        let better = match &best {
            None => true,
            Some((bq, bv)) => {
                if v.approx_eq(bv, tol) {
                    a.point.lex_cmp(&image[*bq].point) == Ordering::Greater
                } else {
                    v > *bv
                }
            }
        };
        if better {
            best = Some((q, v));
        }
    }
    best.map(|(q, _)| q)
}

/// `|c - s_j|^2 == |c - s_l|^2`; in floating-point mode within
/// `tol * max(1, lhs)`.
fn equidistant<S: Scalar>(lhs: &S, rhs: &S, tol: f64) -> bool {
    if S::EXACT {
        lhs == rhs
    } else {
        let l = lhs.to_f64();
        (l - rhs.to_f64()).abs() <= tol * l.abs().max(1.0)
    }
}

fn min_mass<S: Scalar>(cell: &PartitionCell<S>, picks: &[usize]) -> S {
    let mut it = cell.images.iter().zip(picks).map(|(image, &q)| &image[q].mass);
    let first = it.next().expect("at least one measure").clone();
    it.fold(first, |acc, m| if *m < acc { m.clone() } else { acc })
}

/// Shifts mass between cells without changing the transport cost.
///
/// For `l` from the last cell down and every `j < l`: pick from each image
/// of cell `l` the point furthest in direction `s_j - s_l`; while their
/// weighted centroid is equidistant from `s_j` and `s_l`, move the smallest
/// of their masses (and those points) from cell `l` to cell `j`. Returns the
/// number of shifts performed.
pub fn greedy_lex_maximize<S: Scalar>(
    cells: &mut [PartitionCell<S>],
    weights: &WeightVector<S>,
    tol: f64,
) -> usize {
    let lambda = weights.as_slice();
    let mut shifts = 0;
    for l in (0..cells.len()).rev() {
        for j in 0..l {
            let direction = cells[j].source.sub(&cells[l].source);
            let dim = cells[l].source.dim();
            loop {
                let cell = &cells[l];
                if !cell.mass.is_positive(tol) {
                    break;
                }
                let Some(picks) = cell
                    .images
                    .iter()
                    .map(|image| argmax_along(image, &direction, tol))
                    .collect::<Option<Vec<usize>>>()
                else {
                    break;
                };
                let chosen = cell.images.iter().zip(&picks).map(|(image, &q)| &image[q].point);
                let c = centroid_of(chosen, lambda, dim);
                let to_j = dist2(&c, &cells[j].source);
                let to_l = dist2(&c, &cells[l].source);
                if !equidistant(&to_j, &to_l, tol) {
                    break;
                }
                let d_min = min_mass(cell, &picks);
                let moved: Vec<(usize, Point<S>)> = cell
                    .images
                    .iter()
                    .zip(&picks)
                    .map(|(image, &q)| (image[q].index, image[q].point.clone()))
                    .collect();
                let cell = &mut cells[l];
                cell.mass -= &d_min;
                if !cell.mass.is_positive(tol) {
                    cell.mass = S::zero();
                }
                for (i, &q) in picks.iter().enumerate() {
                    cell.take(i, q, &d_min, tol);
                }
                let target = &mut cells[j];
                target.mass += &d_min;
                for (i, (index, point)) in moved.iter().enumerate() {
                    target.add(i, *index, point, &d_min);
                }
                shifts += 1;
            }
        }
    }
    shifts
}

/// An atom placed by the spreading step, with the input atom it sends its
/// whole mass to in each measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadAtom<S> {
    pub point: Point<S>,
    pub mass: S,
    pub targets: Vec<usize>,
}

/// The partial measure a cell is spread to.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadCell<S> {
    pub atoms: Vec<SpreadAtom<S>>,
}

impl<S: Scalar> SpreadCell<S> {
    pub fn total_mass(&self) -> S {
        let mut total = S::zero();
        for a in &self.atoms {
            total += &a.mass;
        }
        total
    }

    /// The cell as a partial measure.
    pub fn measure(&self, tol: f64) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::new(
            self.atoms.iter().map(|a| (a.point.clone(), a.mass.clone())).collect(),
            MeasureKind::Partial,
            tol,
        )
    }
}

/// Greedily spreads one cell: repeatedly take the lexicographically maximal
/// point of every image, put the smallest of their masses on their weighted
/// centroid, and remove it from the images.
fn spread_cell<S: Scalar>(cell: &PartitionCell<S>, lambda: &[S], tol: f64) -> SpreadCell<S> {
    let mut cell = cell.clone();
    let dim = cell.source.dim();
    let mut atoms = Vec::new();
    while cell.mass.is_positive(tol) {
        let Some(picks) = cell
            .images
            .iter()
            .map(|image| lex_max(image))
            .collect::<Option<Vec<usize>>>()
        else {
            break;
        };
        let chosen = cell.images.iter().zip(&picks).map(|(image, &q)| &image[q].point);
        let c = centroid_of(chosen, lambda, dim);
        let d_min = min_mass(&cell, &picks);
        let targets = cell
            .images
            .iter()
            .zip(&picks)
            .map(|(image, &q)| image[q].index)
            .collect();
        cell.mass -= &d_min;
        for (i, &q) in picks.iter().enumerate() {
            cell.take(i, q, &d_min, tol);
        }
        if d_min.is_positive(tol) {
            atoms.push(SpreadAtom {
                point: c,
                mass: d_min,
                targets,
            });
        }
    }
    SpreadCell { atoms }
}

/// Exact barycenter of a cell's images (rescaled to unit mass). `None` when
/// two tuples of the solution share a centroid, which would split mass.
fn spread_cell_exact<S: Scalar>(
    cell: &PartitionCell<S>,
    weights: &WeightVector<S>,
    tol: f64,
) -> Result<Option<SpreadCell<S>>> {
    let scale = cell.mass.clone();
    let mut measures = Vec::with_capacity(cell.images.len());
    for image in &cell.images {
        let atoms = image
            .iter()
            .map(|a| (a.point.clone(), a.mass.clone() / &scale))
            .collect();
        measures.push(DiscreteMeasure::normalized(atoms, tol)?);
    }
    let local = Instance::new(measures, weights.clone(), tol)?;
    let exact = exact_barycenter(&local, usize::MAX)?;
    let Some(assignment) = exact.plan.assignment() else {
        return Ok(None);
    };
    let atoms = exact
        .measure
        .atoms()
        .iter()
        .zip(assignment)
        .map(|(a, local_targets)| SpreadAtom {
            point: a.point.clone(),
            mass: a.mass.clone() * &scale,
            targets: local_targets
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let point = &local.measures()[i].atoms()[k].point;
                    cell.images[i]
                        .iter()
                        .find(|c| c.point.approx_eq(point, tol))
                        .map(|c| c.index)
                        .expect("local atom comes from the cell image")
                })
                .collect(),
        })
        .collect();
    Ok(Some(SpreadCell { atoms }))
}

/// Spreads every cell onto weighted centroids. Successive centroids within a
/// cell are lexicographically decreasing, so they are distinct.
pub fn spread_to_centroids<S: Scalar>(
    cells: &[PartitionCell<S>],
    weights: &WeightVector<S>,
    tol: f64,
) -> Vec<SpreadCell<S>> {
    cells
        .iter()
        .map(|c| spread_cell(c, weights.as_slice(), tol))
        .collect()
}

#[derive(Clone, Debug)]
pub struct RecoveryOptions {
    /// Replace the greedy spreading of a cell by an exact barycenter of the
    /// cell when its images hold fewer than `2N` points in total.
    pub mini_exact: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { mini_exact: true }
    }
}

/// Output of [`recover_non_mass_split`].
#[derive(Clone, Debug)]
pub struct Recovery<S> {
    pub measure: DiscreteMeasure<S>,
    /// Non-mass-splitting transport built alongside the measure.
    pub plan: TransportPlan<S>,
    /// Cost of `plan`.
    pub phi: S,
    /// Mass shifts performed between cells.
    pub shifts: usize,
    /// Cells solved exactly instead of greedily.
    pub exact_cells: usize,
}

/// Builds a new measure with a non-mass-splitting transport whose cost is at
/// most that of `result`.
pub fn recover_non_mass_split<S: Scalar>(
    result: &ApproxResult<S>,
    instance: &Instance<S>,
    options: &RecoveryOptions,
) -> Result<Recovery<S>> {
    let tol = instance.tol();
    let n = instance.num_measures();
    let mut cells = partition_by_source(&result.plan);
    let shifts = greedy_lex_maximize(&mut cells, instance.weights(), tol);
    let mut exact_cells = 0;
    let mut spread = Vec::with_capacity(cells.len());
    for cell in &cells {
        if !cell.mass.is_positive(tol) {
            continue;
        }
        if options.mini_exact && cell.point_count() < 2 * n {
            if let Some(s) = spread_cell_exact(cell, instance.weights(), tol)? {
                exact_cells += 1;
                spread.push(s);
                continue;
            }
        }
        spread.push(spread_cell(cell, instance.lambda(), tol));
    }
    let placed: Vec<&SpreadAtom<S>> = spread.iter().flat_map(|s| &s.atoms).collect();
    let (measure, index) = DiscreteMeasure::with_index_map(
        placed.iter().map(|a| (a.point.clone(), a.mass.clone())).collect(),
        MeasureKind::Full,
        tol,
    )?;
    if measure.len() < placed.len() {
        debug!("{} spread atoms coincide across cells", placed.len() - measure.len());
    }
    let mut flows = Vec::with_capacity(placed.len() * n);
    for (a, &slot) in placed.iter().zip(&index) {
        for (i, &k) in a.targets.iter().enumerate() {
            flows.push(Flow {
                measure: i,
                source: slot,
                target: k,
                mass: a.mass.clone(),
            });
        }
    }
    let plan = TransportPlan::new(measure.clone(), instance.measures().to_vec(), flows, tol)?;
    let phi = plan.cost(instance.lambda());
    Ok(Recovery {
        measure,
        plan,
        phi,
        shifts,
        exact_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rational};

    fn pt(x: (i64, i64), y: (i64, i64)) -> Point<Rational> {
        Point::new(vec![rat(x.0, x.1), rat(y.0, y.1)])
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

    /// Sources (0, 1/2) with mass 1/4 and (2, 1/2) with mass 3/4, sending the
    /// left column to the first and everything else to the second.
    fn two_source_plan(inst: &Instance<Rational>) -> TransportPlan<Rational> {
        let source = DiscreteMeasure::new(
            vec![(pt((0, 1), (1, 2)), rat(1, 4)), (pt((2, 1), (1, 2)), rat(3, 4))],
            MeasureKind::Full,
            0.0,
        )
        .unwrap();
        let f = |measure, source, target, q| Flow {
            measure,
            source,
            target,
            mass: rat(q, 4),
        };
        let flows = vec![
            f(0, 0, 0, 1),
            f(0, 1, 1, 2),
            f(0, 1, 2, 1),
            f(1, 0, 0, 1),
            f(1, 1, 1, 2),
            f(1, 1, 2, 1),
        ];
        TransportPlan::new(source, inst.measures().to_vec(), flows, 0.0).unwrap()
    }

    #[test]
    fn cells_follow_the_plan() {
        let inst = example_one();
        let cells = partition_by_source(&two_source_plan(&inst));
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].mass, rat(1, 4));
        assert_eq!(cells[0].images[0].len(), 1);
        assert_eq!(cells[0].images[0][0].point, Point::from_ints(&[0, 1]));
        assert_eq!(cells[1].images[1].len(), 2);
        for cell in &cells {
            for image in &cell.images {
                let total = image.iter().fold(rat(0, 1), |acc, a| acc + &a.mass);
                assert_eq!(total, cell.mass);
            }
        }
    }

    #[test]
    fn shift_moves_half_to_first_source() {
        let inst = example_one();
        let plan = two_source_plan(&inst);
        let mut cells = partition_by_source(&plan);
        let before = partition_cost(&cells, inst.lambda());
        let shifts = greedy_lex_maximize(&mut cells, inst.weights(), 0.0);
        assert_eq!(shifts, 1);
        assert_eq!(cells[0].mass, rat(3, 4));
        assert_eq!(cells[1].mass, rat(1, 4));
        assert_eq!(partition_cost(&cells, inst.lambda()), before);
    }

    #[test]
    fn spread_produces_centroids_in_lex_order() {
        let inst = example_one();
        let mut cells = partition_by_source(&two_source_plan(&inst));
        greedy_lex_maximize(&mut cells, inst.weights(), 0.0);
        let spread = spread_to_centroids(&cells, inst.weights(), 0.0);
        let got: Vec<_> = spread[0].atoms.iter().map(|a| (a.point.clone(), a.mass.clone())).collect();
        assert_eq!(
            got,
            vec![(pt((1, 1), (1, 2)), rat(1, 2)), (pt((0, 1), (1, 2)), rat(1, 4))]
        );
        assert_eq!(spread[1].atoms.len(), 1);
        assert_eq!(spread[1].atoms[0].point, pt((2, 1), (1, 2)));
        assert_eq!(spread[1].atoms[0].mass, rat(1, 4));
    }

    #[test]
    fn single_source_gives_one_cell() {
        let inst = example_one();
        let source = DiscreteMeasure::dirac(Point::from_ints(&[1, 0]));
        let (_, plan) = crate::transport::transport_cost(&source, &inst).unwrap();
        let cells = partition_by_source(&plan);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].images[0].len(), 3);
        let mut moved = cells.clone();
        assert_eq!(greedy_lex_maximize(&mut moved, inst.weights(), 0.0), 0);
        assert_eq!(moved, cells);
    }

    #[test]
    fn recovery_of_original_support_optimum_improves() {
        let inst = example_one();
        let support = crate::measure::union_support(inst.measures(), 0.0).unwrap();
        let approx = super::super::approx_barycenter(&support, &inst).unwrap();
        for mini_exact in [false, true] {
            let rec = recover_non_mass_split(&approx, &inst, &RecoveryOptions { mini_exact }).unwrap();
            assert!(rec.plan.is_non_mass_splitting());
            assert!(rec.phi <= approx.phi);
            if !rec.measure.approx_eq(&approx.measure, 0.0) {
                assert!(rec.phi < approx.phi);
            }
        }
    }

    #[test]
    fn fixpoint_input_is_unchanged() {
        let inst = example_one();
        let bary = DiscreteMeasure::new(
            vec![
                (pt((0, 1), (1, 2)), rat(1, 4)),
                (pt((1, 1), (1, 2)), rat(1, 2)),
                (pt((2, 1), (1, 2)), rat(1, 4)),
            ],
            MeasureKind::Full,
            0.0,
        )
        .unwrap();
        let (phi, plan) = crate::transport::transport_cost(&bary, &inst).unwrap();
        let result = ApproxResult {
            measure: bary.clone(),
            plan,
            phi,
            support_used: bary.points().cloned().collect(),
            stats: Default::default(),
        };
        let rec = recover_non_mass_split(&result, &inst, &RecoveryOptions::default()).unwrap();
        assert_eq!(rec.measure, bary);
        assert_eq!(rec.shifts, 0);
    }
}
