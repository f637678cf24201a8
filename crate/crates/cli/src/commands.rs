use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use barycenter_core::algorithms::{
    approx_barycenter, exact_barycenter, iterate_local_improvement, recover_non_mass_split, ApproxResult,
    ImproveOptions, RecoveryOptions, SolveStats,
};
use barycenter_core::error::Error;
use barycenter_core::io::{
    format_measure, format_transport, grid_to_measure, parse_measure, parse_pgm, parse_transport, render_measure, write_pgm_ascii,
    write_pgm_binary,
};
use barycenter_core::measure::{union_support, DiscreteMeasure, Instance, WeightVector};
use barycenter_core::scalar::Scalar;
use barycenter_core::transport::{transport_cost, TransportPlan};

use crate::{verify, CliError, Command, Common, Switch};

type CliResult<T> = Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::in_file(path)(e.into()))
}

/// A measure file, or a `P2`/`P5` image read as a grid measure.
fn read_measure<S: Scalar>(path: &Path, tol: f64) -> CliResult<DiscreteMeasure<S>> {
    let bytes = fs::read(path).map_err(|e| CliError::in_file(path)(e.into()))?;
    let parsed = if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        parse_pgm(&bytes).and_then(|img| grid_to_measure(&img, tol))
    } else {
        parse_measure(&String::from_utf8_lossy(&bytes), tol)
    };
    parsed.map_err(CliError::in_file(path))
}

fn load_instance<S: Scalar>(paths: &[std::path::PathBuf], common: &Common) -> CliResult<Instance<S>> {
    let measures = paths
        .iter()
        .map(|p| read_measure(p, common.tol))
        .collect::<CliResult<Vec<DiscreteMeasure<S>>>>()?;
    let weights = match &common.lambda {
        None => WeightVector::uniform(measures.len()),
        Some(raw) => {
            let values = raw
                .iter()
                .map(|t| S::parse_str(t.trim()).map_err(|e| Error::InvalidWeights(e.to_string())))
                .collect::<Result<Vec<S>, Error>>()?;
            WeightVector::new(values, common.tol)?
        }
    };
    Ok(Instance::new(measures, weights, common.tol)?)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::in_file(p)(e.into())),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Core(e.into())),
    }
}

/// Measure text (unless it goes to `--out`), then the report lines.
fn emit<S: Scalar>(
    measure: &DiscreteMeasure<S>,
    plan: Option<&TransportPlan<S>>,
    report: &str,
    common: &Common,
) -> CliResult<()> {
    let text = format_measure(measure);
    if let Some(p) = &common.out {
        write_output(Some(p), text.as_bytes())?;
    }
    if let (Some(p), Some(plan)) = (&common.transport_out, plan) {
        write_output(Some(p), format_transport(plan).as_bytes())?;
    }
    let mut stdout = if common.out.is_none() { text } else { String::new() };
    stdout.push_str(report);
    write_output(None, stdout.as_bytes())
}

fn result_report<S: Scalar>(r: &ApproxResult<S>) -> String {
    format!(
        "# phi: {}\n# support: {}\n# candidates: {}\n# pivots: {}\n",
        r.phi,
        r.measure.len(),
        r.support_used.len(),
        r.stats.pivots
    )
}

pub fn run<S: Scalar>(command: &Command, common: &Common) -> CliResult<()> {
    match command {
        Command::Approx { measures } => {
            let instance = load_instance::<S>(measures, common)?;
            let support = union_support(instance.measures(), common.tol)?;
            let r = approx_barycenter(&support, &instance)?;
            emit(&r.measure, Some(&r.plan), &result_report(&r), common)
        }
        Command::Recover {
            measures,
            input,
            transport,
        } => {
            let instance = load_instance::<S>(measures, common)?;
            let candidate = read_measure::<S>(input, common.tol)?;
            let (phi, plan) = match transport {
                Some(path) => {
                    let plan = parse_transport(&read_text(path)?, &candidate, instance.measures(), common.tol)
                        .map_err(CliError::in_file(path))?;
                    (plan.cost(instance.lambda()), plan)
                }
                None => transport_cost(&candidate, &instance)?,
            };
            let start = ApproxResult {
                support_used: candidate.points().cloned().collect(),
                measure: candidate,
                plan,
                phi,
                stats: SolveStats::default(),
            };
            let r = recover_non_mass_split(&start, &instance, &recovery_options(common))?;
            let report = format!(
                "# input phi: {}\n# phi: {}\n# support: {}\n# shifts: {}\n# exact cells: {}\n",
                start.phi,
                r.phi,
                r.measure.len(),
                r.shifts,
                r.exact_cells
            );
            emit(&r.measure, Some(&r.plan), &report, common)
        }
        Command::Improve { measures } => {
            let instance = load_instance::<S>(measures, common)?;
            let options = ImproveOptions {
                recovery: recovery_options(common),
                max_iterations: common.max_iter,
            };
            let trace = iterate_local_improvement(&instance, &options)?;
            let mut report = String::new();
            for (t, it) in trace.iterations.iter().enumerate() {
                let _ = writeln!(
                    report,
                    "# iteration {}: phi {} -> {}, support {} -> {}, candidates {}, pivots {}, crash moves {}",
                    t + 1,
                    it.phi_step1,
                    it.phi_step2,
                    it.support_size,
                    it.recovered_support_size,
                    it.candidate_size,
                    it.solve.pivots,
                    it.solve.crash_moves
                );
            }
            let join = |v: Vec<S>| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ");
            let _ = writeln!(report, "# phi trace: {}", join(trace.stage_phis()));
            let _ = writeln!(report, "# stage bounds: {}", join(trace.stage_bounds()));
            let _ = writeln!(report, "# converged: {}", trace.converged);
            let _ = writeln!(report, "# phi: {}", trace.result.phi);
            let _ = writeln!(report, "# certified_ratio_bound: {}", trace.certified_ratio_bound);
            emit(&trace.result.measure, Some(&trace.result.plan), &report, common)
        }
        Command::Exact { measures } => {
            let instance = load_instance::<S>(measures, common)?;
            let r = exact_barycenter(&instance, common.centroid_cap)?;
            emit(&r.measure, Some(&r.plan), &result_report(&r), common)
        }
        Command::Cost { candidate, measures } => {
            let instance = load_instance::<S>(measures, common)?;
            let p0 = read_measure::<S>(candidate, common.tol)?;
            let (phi, plan) = transport_cost(&p0, &instance)?;
            if let Some(p) = &common.transport_out {
                write_output(Some(p), format_transport(&plan).as_bytes())?;
            }
            let report = format!(
                "# phi: {phi}\n# non-mass-splitting: {}\n",
                plan.is_non_mass_splitting()
            );
            write_output(common.out.as_deref(), report.as_bytes())
        }
        Command::Render {
            measure,
            refine,
            canvas,
            max_value,
            binary,
        } => {
            let m = read_measure::<S>(measure, common.tol)?;
            let img = render_measure(&m, *refine, canvas.0, canvas.1, *max_value)?;
            let bytes = if *binary {
                write_pgm_binary(&img)
            } else {
                write_pgm_ascii(&img).into_bytes()
            };
            write_output(common.out.as_deref(), &bytes)
        }
        Command::Verify => {
            let report = verify::run()?;
            write_output(common.out.as_deref(), report.as_bytes())
        }
    }
}

fn recovery_options(common: &Common) -> RecoveryOptions {
    RecoveryOptions {
        mini_exact: common.mini_exact == Switch::On,
    }
}
