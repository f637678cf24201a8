//! Reference values of small built-in instances, each recomputed by the
//! solver and by exhaustive search.

use std::fmt::Write as _;

use barycenter_core::algorithms::{approx_barycenter, exact_barycenter, iterate_local_improvement, ImproveOptions};
use barycenter_core::error::Result;
use barycenter_core::measure::{centroid_set, union_support, DiscreteMeasure, Instance, MeasureKind, Point};
use barycenter_core::oracle::{brute_force_phi, enumerate_measures};
use barycenter_core::scalar::{rat, Rational};

use crate::CliError;

fn measure(atoms: &[(Vec<Rational>, Rational)]) -> DiscreteMeasure<Rational> {
    DiscreteMeasure::new(
        atoms.iter().map(|(c, m)| (Point::new(c.clone()), m.clone())).collect(),
        MeasureKind::Full,
        0.0,
    )
    .expect("built-in measure is valid")
}

fn ints(c: &[i64]) -> Vec<Rational> {
    c.iter().map(|&v| rat(v, 1)).collect()
}

/// Smallest cost over all measures on `support` with masses in `1/denominator`.
fn oracle_min(support: &[Point<Rational>], instance: &Instance<Rational>, denominator: usize) -> Result<Rational> {
    let mut best: Option<Rational> = None;
    for m in enumerate_measures(support, denominator, 0.0)? {
        let phi = brute_force_phi(&m, instance, denominator)?;
        if best.as_ref().is_none_or(|b| phi < *b) {
            best = Some(phi);
        }
    }
    Ok(best.expect("enumeration is never empty"))
}

struct Report {
    text: String,
    failures: Vec<String>,
}

impl Report {
    fn check(&mut self, label: &str, solver: &Rational, oracle: &Rational) {
        let ok = solver == oracle;
        let _ = writeln!(
            self.text,
            "{label}: solver {solver}, oracle {oracle} {}",
            if ok { "ok" } else { "MISMATCH" }
        );
        if !ok {
            self.failures.push(label.to_string());
        }
    }
}

fn singletons(report: &mut Report) -> Result<()> {
    let inst = Instance::uniform(
        vec![
            DiscreteMeasure::dirac(Point::from_ints(&[0, 0])),
            DiscreteMeasure::dirac(Point::from_ints(&[1, 0])),
        ],
        0.0,
    )?;
    let s_org = union_support(inst.measures(), 0.0)?;
    let approx = approx_barycenter(&s_org, &inst)?;
    report.check("two points, original support", &approx.phi, &oracle_min(&s_org, &inst, 2)?);
    let exact = exact_barycenter(&inst, 1_000_000)?;
    let cs = centroid_set(inst.measures(), inst.weights(), 1_000_000, 0.0)?;
    report.check("two points, exact", &exact.phi, &oracle_min(&cs, &inst, 2)?);
    Ok(())
}

fn two_by_three(report: &mut Report) -> Result<()> {
    let q = |n| rat(n, 4);
    let inst = Instance::uniform(
        vec![
            measure(&[(ints(&[0, 1]), q(1)), (ints(&[1, 0]), q(2)), (ints(&[2, 1]), q(1))]),
            measure(&[(ints(&[0, 0]), q(1)), (ints(&[1, 1]), q(2)), (ints(&[2, 0]), q(1))]),
        ],
        0.0,
    )?;
    let s_org = union_support(inst.measures(), 0.0)?;
    let approx = approx_barycenter(&s_org, &inst)?;
    report.check("two measures of three atoms, original support", &approx.phi, &oracle_min(&s_org, &inst, 4)?);
    let exact = exact_barycenter(&inst, 1_000_000)?;
    let cs = centroid_set(inst.measures(), inst.weights(), 1_000_000, 0.0)?;
    report.check("two measures of three atoms, exact", &exact.phi, &oracle_min(&cs, &inst, 4)?);
    let half = rat(1, 2);
    let three = measure(&[
        (vec![rat(0, 1), half.clone()], q(1)),
        (vec![rat(1, 1), half.clone()], q(2)),
        (vec![rat(2, 1), half], q(1)),
    ]);
    report.check(
        "two measures of three atoms, three-atom barycenter",
        &exact.phi,
        &brute_force_phi(&three, &inst, 4)?,
    );
    Ok(())
}

fn stretched_squares(report: &mut Report) -> Result<()> {
    let h = rat(1, 2);
    for e in [1i64, 2, 4, 8] {
        let inst = Instance::uniform(
            vec![
                measure(&[(ints(&[-e, 0]), h.clone()), (ints(&[e, 1]), h.clone())]),
                measure(&[(ints(&[0, 0]), h.clone()), (ints(&[0, 1]), h.clone())]),
                measure(&[(ints(&[0, 0]), h.clone()), (ints(&[0, 1]), h.clone())]),
                measure(&[(ints(&[-e, 1]), h.clone()), (ints(&[e, 0]), h.clone())]),
            ],
            0.0,
        )?;
        let trace = iterate_local_improvement(&inst, &ImproveOptions::default())?;
        let exact = exact_barycenter(&inst, 1_000_000)?;
        let label = format!("four segments, eps {e}");
        report.check(
            &format!("{label}, local improvement"),
            &trace.result.phi,
            &brute_force_phi(&trace.result.measure, &inst, 4)?,
        );
        report.check(&format!("{label}, exact"), &exact.phi, &brute_force_phi(&exact.measure, &inst, 4)?);
        let _ = writeln!(
            report.text,
            "{label}: iterations {}, ratio {}",
            trace.iterations.len(),
            trace.result.phi.clone() / &exact.phi
        );
    }
    Ok(())
}

pub fn run() -> std::result::Result<String, CliError> {
    let mut report = Report {
        text: String::new(),
        failures: Vec::new(),
    };
    singletons(&mut report)?;
    two_by_three(&mut report)?;
    stretched_squares(&mut report)?;
    if report.failures.is_empty() {
        Ok(report.text)
    } else {
        print!("{}", report.text);
        Err(CliError::Mismatch(report.failures.join(", ")))
    }
}
