use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crms_core::compatible::standard_triple;
use crms_core::darboux::crms_darboux;
use crms_core::field::{
    bridges_residual, gradient_check, principal_symbol, read_container, write_container,
    FiberLayout, FieldError, FieldState, GradientCheck, OperatorTag, TorusGrid,
};
use crms_core::flow::{
    fueter_residual, run_flow, trajectory, FlowConfig, FlowError, FlowTrace, Integrator,
};
use crms_core::linalg::{
    validate_crms, AlternatingThreeForm, LinearComplexStructure, SplitSpace, ValidationReport,
};
use crms_core::samples::{random_general_crms, random_smooth_state, rng_from_seed, uniform_vector};
use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, FormSource, InitialMode, Injection};
use crate::{CliError, Outcome};

/// Darboux reconstruction must reproduce the form to this max-entry error.
pub const DARBOUX_TOLERANCE: f64 = 1e-8;
/// Pass threshold for the directional-derivative comparison.
pub const GRADCHECK_TOLERANCE: f64 = 1e-6;

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn field_error(e: FieldError) -> CliError {
    CliError::Usage(e.to_string())
}

struct ConfiguredForm {
    form: AlternatingThreeForm,
    structure: LinearComplexStructure,
}

fn configured_form(config: &ExperimentConfig) -> Result<ConfiguredForm, CliError> {
    let space = config.space()?;
    let mut rng = rng_from_seed(config.seed);
    let (mut form, mut structure) = match config.form.source {
        FormSource::Standard => (
            AlternatingThreeForm::standard(space),
            LinearComplexStructure::standard(space),
        ),
        FormSource::StandardPlusNu => {
            let nu = match &config.form.nu {
                Some(nu) => nu.clone(),
                None => uniform_vector(&mut rng, space.dim_fiber()),
            };
            let mut form = AlternatingThreeForm::standard(space);
            form.add_nu_term(&nu)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (form, LinearComplexStructure::standard(space))
        }
        FormSource::SeededRandomConjugate => {
            let r = random_general_crms(&mut rng, space);
            (r.form, r.structure)
        }
    };
    match config.form.inject {
        None => {}
        Some(Injection::VerticalTriple) => {
            let scale = form.max_abs().max(1.0);
            form.add_wedge(
                0.5 * scale,
                space.a1(0),
                space.a2(0),
                space.b1(space.n() - 1),
            );
        }
        Some(Injection::Zero) => form = AlternatingThreeForm::zeros(space),
        Some(Injection::RankDeficient) => form = without_last_block(&form, space),
        Some(Injection::IncompatibleStructure) => {
            let (b1, b2) = (space.b1(0), space.b2(0));
            let mut m = structure.matrix().clone();
            let (x, y) = (m[(b2, b1)], m[(b1, b2)]);
            m[(b2, b1)] = -x;
            m[(b1, b2)] = -y;
            structure = LinearComplexStructure::new(space, m)
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
    }
    Ok(ConfiguredForm { form, structure })
}

/// Drop every coefficient touching the last fiber block, so the vertical
/// contractions lose rank.
fn without_last_block(form: &AlternatingThreeForm, space: SplitSpace) -> AlternatingThreeForm {
    let last = space.n() - 1;
    let dropped = [
        space.a1(last),
        space.a2(last),
        space.b1(last),
        space.b2(last),
    ];
    let mut out = form.clone();
    let d = space.dim();
    for i in 0..d {
        for j in i + 1..d {
            for k in j + 1..d {
                if [i, j, k].iter().any(|x| dropped.contains(x)) {
                    out.set(i, j, k, 0.0);
                }
            }
        }
    }
    out
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    n: usize,
    source: &'a str,
    all_passed: bool,
    report: &'a ValidationReport,
}

fn source_name(config: &ExperimentConfig) -> &'static str {
    match config.form.source {
        FormSource::Standard => "standard",
        FormSource::StandardPlusNu => "standard_plus_nu",
        FormSource::SeededRandomConjugate => "seeded_random_conjugate",
    }
}

pub(crate) fn validate(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let f = configured_form(config)?;
    let report =
        validate_crms(&f.form, &f.structure).map_err(|e| CliError::Usage(e.to_string()))?;
    let passed = report.all_passed();
    write_json(
        out,
        "validate.json",
        &ValidateOutput {
            n: config.n,
            source: source_name(config),
            all_passed: passed,
            report: &report,
        },
    )?;
    Ok(Outcome {
        passed,
        summary: format!(
            "validate: one_horizontal={} fiberwise_nondegenerate={} i_compatible={}",
            report.one_horizontal.passed,
            report.fiberwise_nondegenerate.passed,
            report.i_compatible.passed
        ),
    })
}

#[derive(Serialize)]
struct DarbouxOutput<'a> {
    n: usize,
    source: &'a str,
    passed: bool,
    error: Option<String>,
    /// Rows of the frame matrix; columns are the frame vectors.
    frame: Option<Vec<Vec<f64>>>,
    nu: Option<Vec<f64>>,
    reconstruction_error: Option<f64>,
    structure_defect: Option<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

pub(crate) fn darboux(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let f = configured_form(config)?;
    let mut output = DarbouxOutput {
        n: config.n,
        source: source_name(config),
        passed: false,
        error: None,
        frame: None,
        nu: None,
        reconstruction_error: None,
        structure_defect: None,
    };
    let summary = match crms_darboux(&f.form, &f.structure) {
        Ok(frame) => {
            let err = frame
                .reconstruction_error(&f.form)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            output.passed = err < DARBOUX_TOLERANCE;
            output.frame = Some(rows(&frame.basis));
            output.nu = Some(frame.nu.clone());
            output.reconstruction_error = Some(err);
            output.structure_defect = Some(frame.structure_defect(&f.structure));
            format!("darboux: reconstruction error {err:.3e}")
        }
        Err(e) => {
            output.error = Some(e.to_string());
            format!("darboux: {e}")
        }
    };
    write_json(out, "darboux.json", &output)?;
    Ok(Outcome {
        passed: output.passed,
        summary,
    })
}

pub(crate) fn symbol(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let covectors: Vec<[f64; 2]> = match &config.symbol.covectors {
        Some(list) => list.clone(),
        None => {
            let m = config.symbol.angles;
            (0..m)
                .map(|k| {
                    let theta = TAU * k as f64 / m as f64;
                    [theta.cos(), theta.sin()]
                })
                .collect()
        }
    };
    let mut table = Vec::with_capacity(covectors.len());
    for xi in &covectors {
        let ddw = principal_symbol(OperatorTag::Ddw, *xi, config.n).map_err(field_error)?;
        let bridges = principal_symbol(OperatorTag::Bridges, *xi, config.n).map_err(field_error)?;
        table.push((
            xi[1].atan2(xi[0]),
            ddw.kernel_dim,
            bridges.kernel_dim,
            bridges.determinant,
        ));
    }
    let mut w = csv::Writer::from_path(out.join("symbol.csv"))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let csv_err = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record([
        "angle",
        "ddw_kernel_dim",
        "bridges_kernel_dim",
        "bridges_det",
    ])
    .map_err(csv_err)?;
    for (angle, ddw, bridges, det) in &table {
        w.write_record([
            angle.to_string(),
            ddw.to_string(),
            bridges.to_string(),
            det.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    let passed = table
        .iter()
        .all(|&(_, ddw, bridges, _)| bridges == 0 && ddw >= 1);
    Ok(Outcome {
        passed,
        summary: format!(
            "symbol: {} covectors, bridges elliptic on all: {}",
            table.len(),
            table.iter().all(|r| r.2 == 0)
        ),
    })
}

fn initial_state(config: &ExperimentConfig, grid: TorusGrid) -> Result<FieldState, CliError> {
    let layout = FiberLayout::Bridges { n: config.n };
    let init = &config.initial;
    match init.mode {
        InitialMode::RandomSmooth => {
            let mut rng = rng_from_seed(config.seed);
            Ok(random_smooth_state(
                &mut rng,
                grid,
                layout,
                init.amplitude,
                init.max_mode,
            ))
        }
        InitialMode::Constant => {
            let value = init
                .value
                .clone()
                .unwrap_or_else(|| vec![0.0; layout.fiber_dim()]);
            FieldState::constant(grid, layout, &value).map_err(field_error)
        }
        InitialMode::File => {
            let path = init.path.as_ref().expect("validated: file mode has a path");
            let file = File::open(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let state = read_container(std::io::BufReader::new(file)).map_err(field_error)?;
            if *state.grid() != grid || state.layout() != layout {
                return Err(CliError::Usage(format!(
                    "{} holds a {}x{} state with n = {}, config asks for {}x{} with n = {}",
                    path.display(),
                    state.grid().n1(),
                    state.grid().n2(),
                    state.layout().n(),
                    grid.n1(),
                    grid.n2(),
                    config.n
                )));
            }
            Ok(state)
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum FlowStatus {
    Converged,
    MaxStepsReached,
    Diverged,
}

#[derive(Serialize)]
struct FlowSummary<'a> {
    status: FlowStatus,
    hamiltonian: &'a str,
    n: usize,
    n1: usize,
    n2: usize,
    seed: u64,
    integrator: Integrator,
    ds: f64,
    steps: Option<usize>,
    s: Option<f64>,
    final_action: Option<f64>,
    grad_norm: Option<f64>,
    grad_l2: Option<f64>,
    bridges_residual: Option<f64>,
    fueter_residual: Option<f64>,
    divergence_step: Option<usize>,
}

pub(crate) fn flow(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let grid = config.torus()?;
    let h = config.hamiltonian()?;
    let triple = standard_triple(config.n);
    let fc = &config.flow;
    let ds = fc.ds.unwrap_or_else(|| 0.5 * fc.integrator.max_step(&grid));
    let flow_config = FlowConfig::new(
        &grid,
        ds,
        fc.max_steps,
        fc.tolerance,
        fc.integrator,
        fc.record_every,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let initial = initial_state(config, grid)?;

    let mut summary = FlowSummary {
        status: FlowStatus::Diverged,
        hamiltonian: h.name(),
        n: config.n,
        n1: grid.n1(),
        n2: grid.n2(),
        seed: config.seed,
        integrator: fc.integrator,
        ds,
        steps: None,
        s: None,
        final_action: None,
        grad_norm: None,
        grad_l2: None,
        bridges_residual: None,
        fueter_residual: None,
        divergence_step: None,
    };
    let trace: FlowTrace = match run_flow(&initial, &h, &triple, &flow_config) {
        Ok(trace) => trace,
        Err(FlowError::Divergence { step }) => {
            summary.divergence_step = Some(step);
            write_json(out, "flow_summary.json", &summary)?;
            return Err(CliError::Diverged { step });
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };

    let mut csv_out = BufWriter::new(File::create(out.join("flow_trace.csv"))?);
    trace.write_csv(&mut csv_out).map_err(field_error)?;
    csv_out.flush()?;
    let mut state_out = BufWriter::new(File::create(out.join("final_state.crms"))?);
    write_container(&trace.final_state, &mut state_out).map_err(field_error)?;
    state_out.flush()?;

    let last = *trace.final_record();
    let residual = bridges_residual(&trace.final_state, &h)
        .map_err(field_error)?
        .sup_norm();
    // Fueter defect over a short continuation from the final state.
    let fueter = trajectory(&trace.final_state, &h, &triple, ds, fc.integrator, 2)
        .and_then(|traj| fueter_residual(&traj, ds, &h, &triple))
        .ok();
    summary.status = if trace.converged {
        FlowStatus::Converged
    } else {
        FlowStatus::MaxStepsReached
    };
    summary.steps = Some(last.step);
    summary.s = Some(last.s);
    summary.final_action = Some(last.action);
    summary.grad_norm = Some(last.grad_norm);
    summary.grad_l2 = Some(last.grad_l2);
    summary.bridges_residual = Some(residual);
    summary.fueter_residual = fueter;
    write_json(out, "flow_summary.json", &summary)?;
    Ok(Outcome {
        passed: trace.converged,
        summary: format!(
            "flow: {} after {} steps, action {:.6e}, grad norm {:.3e}, bridges residual {:.3e}",
            if trace.converged {
                "converged"
            } else {
                "not converged"
            },
            last.step,
            last.action,
            last.grad_norm,
            residual
        ),
    })
}

#[derive(Serialize)]
struct GradcheckOutput<'a> {
    hamiltonian: &'a str,
    n: usize,
    n1: usize,
    n2: usize,
    tolerance: f64,
    passed: bool,
    #[serde(flatten)]
    check: &'a GradientCheck,
}

pub(crate) fn gradcheck(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let grid = config.torus()?;
    let h = config.hamiltonian()?;
    let triple = standard_triple(config.n);
    let layout = FiberLayout::Bridges { n: config.n };
    let mut rng = rng_from_seed(config.seed);
    let a = config.gradcheck.amplitude;
    let values = (0..grid.points() * layout.fiber_dim())
        .map(|_| a * rng.gen_range(-1.0..1.0))
        .collect();
    let state = FieldState::from_values(grid, layout, values).map_err(field_error)?;
    let check = gradient_check(
        &state,
        &h,
        &triple,
        config.gradcheck.directions,
        config.seed,
    )
    .map_err(field_error)?;
    let passed = check.max_relative_error < GRADCHECK_TOLERANCE;
    write_json(
        out,
        "gradcheck.json",
        &GradcheckOutput {
            hamiltonian: h.name(),
            n: config.n,
            n1: grid.n1(),
            n2: grid.n2(),
            tolerance: GRADCHECK_TOLERANCE,
            passed,
            check: &check,
        },
    )?;
    Ok(Outcome {
        passed,
        summary: format!(
            "gradcheck: {} max relative error {:.3e} over {} directions",
            h.name(),
            check.max_relative_error,
            check.directions
        ),
    })
}
