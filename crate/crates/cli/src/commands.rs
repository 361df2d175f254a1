use std::fmt::Write as _;
use std::path::Path;

use qmor_core::eom::{
    environment_variables, format_equations, initial_expectations, GeneratorRecord, DEFAULT_MAX_DIM,
};
use qmor_core::linalg::Vector;
use qmor_core::mor::{balance, choose_order, hinf_error, truncate, ReductionReport};
use qmor_core::qec::{
    cycle_map, encoded_expectations, logical_dynamics, oracle_cycles, run_cycles, LogicalInitial,
    Mode, SectorReport, MAX_LEVELS,
};
use qmor_core::scenario::{InitialSpec, NoiseModel, QecSpec};
use qmor_core::sim::svg::{line_plot, Series};
use qmor_core::sim::{format_sig, relative_l2_error};
use qmor_core::{
    bitflip3, build_generator, closure, concatenate, integrate_linear, oracle_master_equation,
    partition_and_factor, reduce_interconnected, simulate_interconnected, DensityMatrix, Error,
    GeneratorMatrix, InitialState, InterconnectedModel, PauliString, RecoveryChannel, Scenario,
    Trajectory, VariableSet,
};
use serde::Serialize;

use crate::{CliError, ModelArg, QecArgs};

type CliResult<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

// Closure of the interest set and its generator.
fn physical_system(sc: &Scenario) -> CliResult<(VariableSet, GeneratorMatrix, Vec<PauliString>)> {
    let model = sc.model()?;
    let interest = sc.interest_set()?;
    let vars = closure(&interest, &model, DEFAULT_MAX_DIM)?;
    let g = build_generator(&vars, &model)?;
    Ok((vars, g, interest.as_slice().to_vec()))
}

fn split(g: &GeneratorMatrix, interest: &[PauliString]) -> CliResult<InterconnectedModel> {
    if interest.len() >= g.variables.len() {
        return Err(Error::Schema {
            field: "interest".into(),
            message: "the interest set is already closed; there is no environment to reduce".into(),
        }
        .into());
    }
    Ok(partition_and_factor(g, interest)?)
}

fn reduction_order(sc: &Scenario, flag: Option<usize>, hankel: &[f64]) -> CliResult<usize> {
    if let Some(k) = flag {
        return Ok(k);
    }
    let spec = sc.reduction.ok_or_else(|| Error::Schema {
        field: "reduction".into(),
        message: "no reduced order given (use --k or a reduction block)".into(),
    })?;
    if let Some(k) = spec.k {
        return Ok(k);
    }
    let tol = spec.tolerance.expect("validated: k or tolerance");
    choose_order(hankel, tol).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no admissible order meets the error tolerance {tol}"
        ))
        .into()
    })
}

pub fn derive(path: &Path, json: Option<&Path>) -> CliResult<()> {
    let sc = Scenario::load(path)?;
    let (vars, g, _) = physical_system(&sc)?;
    println!("# {} variables closed under the generator", vars.len());
    print!("{}", format_equations(&g));
    if let Some(p) = json {
        write_file(p, &to_json(&GeneratorRecord::from(&g)))?;
    }
    Ok(())
}

pub fn reduce(path: &Path, k: Option<usize>, report: Option<&Path>) -> CliResult<()> {
    let sc = Scenario::load(path)?;
    let (_, g, interest) = physical_system(&sc)?;
    let m = split(&g, &interest)?;
    let b = balance(&m.sys2)?;
    let k = reduction_order(&sc, k, &b.hankel)?;
    let r = truncate(&b, k)?;
    let rep = ReductionReport {
        hankel: b.hankel.clone(),
        removed: b.removed,
        k,
        lower_bound: r.lower_bound,
        upper_bound: r.upper_bound,
        hinf_measured: hinf_error(&m.sys2, &r)?,
    };
    let text = to_json(&rep);
    print!("{text}");
    if let Some(p) = report {
        write_file(p, &text)?;
    }
    Ok(())
}

pub fn simulate(
    path: &Path,
    reduce_k: Option<usize>,
    svg: Option<&Path>,
    out: Option<&Path>,
) -> CliResult<()> {
    let sc = Scenario::load(path)?;
    let (vars, g, interest) = physical_system(&sc)?;
    let times = sc.time_grid()?;
    let x0 = initial_expectations(&sc.initial_state()?, &vars)?;
    let full = integrate_linear(&g.a, &x0, &times)?;
    let n1 = interest.len();
    let labels: Vec<String> = interest.iter().map(|p| p.site_label()).collect();
    let mut columns: Vec<(String, Vec<f64>, bool)> = labels
        .iter()
        .enumerate()
        .map(|(j, l)| {
            (
                l.clone(),
                full.values.column(j).iter().copied().collect(),
                false,
            )
        })
        .collect();

    if let Some(k) = reduce_k {
        let m = split(&g, &interest)?;
        let (reduced, r) = reduce_interconnected(&m, k)?;
        let env = environment_variables(&vars, &interest);
        let x1 = x0.rows(0, n1).into_owned();
        let x2 = Vector::from_iterator(
            env.len(),
            env.iter()
                .map(|p| x0[vars.index_of(p).expect("closure member")]),
        );
        let red = simulate_interconnected(&reduced, &x1, &x2, Some(&r.t), &times)?;
        for (j, l) in labels.iter().enumerate() {
            let y: Vec<f64> = red.values.column(j).iter().copied().collect();
            let err = relative_l2_error(&y, &columns[j].1);
            eprintln!(
                "{l}: order-{k} reduced model, relative L2 error {}",
                format_sig(err, 4)
            );
            columns.push((format!("{l}_reduced"), y, true));
        }
    }

    let values = qmor_core::Matrix::from_fn(times.len(), columns.len(), |i, j| columns[j].1[i]);
    let traj = Trajectory::new(
        times.clone(),
        columns.iter().map(|c| c.0.clone()).collect(),
        values,
    )?;
    emit(out, &traj.to_csv())?;
    if let Some(p) = svg {
        let series: Vec<Series> = columns
            .iter()
            .map(|(label, y, dashed)| Series {
                label: label.clone(),
                x: times.clone(),
                y: y.clone(),
                dashed: *dashed,
            })
            .collect();
        let title = sc.name.clone().unwrap_or_else(|| "trajectory".into());
        write_file(p, &line_plot(&title, "t", &series))?;
    }
    Ok(())
}

// Code, channel, noise, schedule, and initial state after merging flags into the scenario.
struct QecSetup {
    spec: QecSpec,
    initial: [f64; 3],
}

fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("--{flag} is required when no scenario is given"))
}

fn qec_setup(args: &QecArgs) -> CliResult<QecSetup> {
    let base = match &args.scenario {
        Some(p) => Some(Scenario::load(p)?),
        None => None,
    };
    let from_file = base.as_ref().and_then(|s| s.qec.clone());
    if base.is_some() && from_file.is_none() {
        return Err(Error::Schema {
            field: "qec".into(),
            message: "scenario has no qec block".into(),
        }
        .into());
    }
    let model = match args.model {
        Some(ModelArg::Independent) => Some(NoiseModel::Independent),
        Some(ModelArg::Correlated) => Some(NoiseModel::Correlated),
        None => None,
    };
    let spec = QecSpec {
        code: args
            .code
            .clone()
            .or_else(|| from_file.as_ref().map(|q| q.code.clone()))
            .unwrap_or_else(|| "bitflip3".into()),
        levels: args
            .levels
            .or(from_file.as_ref().map(|q| q.levels))
            .unwrap_or(1),
        model: model
            .or(from_file.as_ref().map(|q| q.model))
            .ok_or_else(|| missing("model"))?,
        gamma: args
            .gamma
            .or(from_file.as_ref().map(|q| q.gamma))
            .ok_or_else(|| missing("gamma"))?,
        eta_meas: args
            .eta_meas
            .or(from_file.as_ref().map(|q| q.eta_meas))
            .unwrap_or(1.0),
        eta_rec: args
            .eta_rec
            .or(from_file.as_ref().map(|q| q.eta_rec))
            .unwrap_or(1.0),
        dt: args
            .dt
            .or(from_file.as_ref().map(|q| q.dt))
            .ok_or_else(|| missing("dt"))?,
        cycles: args
            .cycles
            .or(from_file.as_ref().map(|q| q.cycles))
            .ok_or_else(|| missing("cycles"))?,
    };
    let initial = match (&args.initial, base.as_ref().and_then(|s| s.initial.clone())) {
        (Some(v), _) if v.len() == 3 => [v[0], v[1], v[2]],
        (Some(v), _) => {
            return Err(CliError::Usage(format!(
                "--initial takes three comma-separated components, got {}",
                v.len()
            )))
        }
        (None, Some(InitialSpec::Logical(b))) => b,
        (None, Some(_)) => {
            return Err(Error::Schema {
                field: "initial.type".into(),
                message: "qec runs start from a logical Bloch vector".into(),
            }
            .into())
        }
        (None, None) => [0.0, 0.0, 1.0],
    };
    // Validate the merged settings with the scenario schema rules.
    let check = Scenario {
        name: None,
        n_sites: if (1..=MAX_LEVELS).contains(&spec.levels) {
            3usize.pow(spec.levels as u32)
        } else {
            1
        },
        hamiltonian: Vec::new(),
        dissipators: Vec::new(),
        interest: Vec::new(),
        initial: Some(InitialSpec::Logical(initial)),
        times: None,
        reduction: None,
        qec: Some(spec.clone()),
    };
    check.validate()?;
    Ok(QecSetup { spec, initial })
}

#[derive(Debug, Serialize)]
struct ModeRecord {
    rate: f64,
    frequency: f64,
    amplitude: f64,
}

#[derive(Debug, Serialize)]
struct SectorRecord {
    #[serde(flatten)]
    summary: SectorReport,
    modes: Vec<ModeRecord>,
}

#[derive(Debug, Serialize)]
struct QecReport {
    code: String,
    levels: usize,
    physical_qubits: usize,
    model: NoiseModel,
    gamma: f64,
    channel: RecoveryChannel,
    dt: f64,
    cycles: usize,
    initial: [f64; 3],
    sectors: Vec<SectorRecord>,
    zbar_ybar_joint_dimension: usize,
    cycle_closure_size: usize,
    full_state_parameters: String,
}

fn mode_records(modes: &[Mode]) -> Vec<ModeRecord> {
    modes
        .iter()
        .map(|m| ModeRecord {
            rate: 0.0 - m.rate.re,
            frequency: m.rate.im,
            amplitude: m.amplitude.re,
        })
        .collect()
}

pub fn qec(args: QecArgs) -> CliResult<()> {
    let QecSetup { spec, initial } = qec_setup(&args)?;
    let (code, _) = concatenate(&bitflip3(), spec.levels)?;
    let ch = spec.channel()?;
    let noise = spec.noise()?;
    let traj = run_cycles(
        &code,
        &ch,
        &noise,
        spec.dt,
        spec.cycles,
        &LogicalInitial::Bloch(initial),
    )?;
    emit(args.out.as_deref(), &traj.to_csv_with_index("cycle"))?;

    if let Some(path) = &args.report {
        let ld = logical_dynamics(&code, &ch, &noise)?;
        let mut sectors = Vec::new();
        for s in &ld.sectors {
            let v0 = encoded_expectations(&code, initial, &s.closure)?;
            sectors.push(SectorRecord {
                summary: SectorReport::from(s),
                modes: mode_records(&s.exponential_modes(&v0)?),
            });
        }
        let report = QecReport {
            code: spec.code.clone(),
            levels: spec.levels,
            physical_qubits: code.n,
            model: spec.model,
            gamma: spec.gamma,
            channel: ch,
            dt: spec.dt,
            cycles: spec.cycles,
            initial,
            sectors,
            zbar_ybar_joint_dimension: ld.joint_dimension(&["zbar", "ybar"])?,
            cycle_closure_size: cycle_map(&code, &ch, &noise)?.variables.len(),
            full_state_parameters: format!("4^{} - 1", code.n),
        };
        write_file(path, &to_json(&report))?;
    }
    Ok(())
}

struct Check {
    name: String,
    deviation: f64,
}

fn max_column_deviation(a: &Trajectory, b: &Trajectory, j: usize) -> f64 {
    (0..a.times.len())
        .map(|i| (a.values[(i, j)] - b.values[(i, j)]).abs())
        .fold(0.0, f64::max)
}

pub fn verify(path: &Path, tol: Option<f64>) -> CliResult<()> {
    let sc = Scenario::load(path)?;
    let tol = tol.unwrap_or(if sc.n_sites >= 9 { 1e-5 } else { 1e-6 });
    let mut checks = Vec::new();

    if !sc.interest.is_empty() {
        let (vars, g, _) = physical_system(&sc)?;
        let times = sc.time_grid()?;
        let state = sc.initial_state()?;
        let rho = match &state {
            InitialState::Product(b) => DensityMatrix::from_product_bloch(b)?,
            InitialState::Amplitudes(psi) => DensityMatrix::from_pure(psi)?,
        };
        let x0 = initial_expectations(&state, &vars)?;
        let ode = integrate_linear(&g.a, &x0, &times)?;
        let oracle = oracle_master_equation(&sc.model()?, &rho, &times, &vars)?;
        for (j, label) in vars.labels().into_iter().enumerate() {
            checks.push(Check {
                name: format!("<{label}>(t)"),
                deviation: max_column_deviation(&ode, &oracle, j),
            });
        }
    }

    if let Some(spec) = &sc.qec {
        let initial = match &sc.initial {
            Some(InitialSpec::Logical(b)) => *b,
            _ => [0.0, 0.0, 1.0],
        };
        let (code, _) = concatenate(&bitflip3(), spec.levels)?;
        let ch = spec.channel()?;
        let noise = spec.noise()?;
        let start = LogicalInitial::Bloch(initial);
        let symbolic = run_cycles(&code, &ch, &noise, spec.dt, spec.cycles, &start)?;
        let oracle = oracle_cycles(&code, &ch, &noise, spec.dt, spec.cycles, &start)?;
        for (j, label) in ["xbar", "ybar", "zbar"].iter().enumerate() {
            checks.push(Check {
                name: format!("{label} per cycle"),
                deviation: max_column_deviation(&symbolic, &oracle, j),
            });
        }
    }

    if checks.is_empty() {
        return Err(Error::Schema {
            field: "interest".into(),
            message: "nothing to verify: give an interest set or a qec block".into(),
        }
        .into());
    }
    let width = checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut table = String::new();
    let _ = writeln!(table, "{:<width$}  {:>12}  status", "check", "max dev");
    let mut failed = 0;
    for c in &checks {
        let ok = c.deviation <= tol;
        failed += usize::from(!ok);
        let _ = writeln!(
            table,
            "{:<width$}  {:>12.3e}  {}",
            c.name,
            c.deviation,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(
        table,
        "tolerance {tol:.1e}: {} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    print!("{table}");
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}
