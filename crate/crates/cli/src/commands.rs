use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use consensus_core::consensus::matrix_to_rows;
use consensus_core::optimal_control::analyze_control;
use consensus_core::reduction::reduce_with;
use consensus_core::stability::{ucc_sample_check, SCREEN_DISCLAIMER};
use consensus_core::{
    consensus_distance, cross_validate, default_basis, evaluate_mp_residual, propagate, reduce_state,
    solve_analytic_n2, solve_bang_bang, solve_relaxed, ucc_decide_n3_r2, BangBangOptions, OCProblem, RelaxedOptions,
    Sense, Tolerances,
};
use serde::Serialize;

use crate::error::CliError;
use crate::harness;
use crate::problem::{parse_control, ProblemFile};
use crate::report::{emit, switching_csv, trajectory_csv, MpCheck, RunReport, Solution, UccReport, MP_CONSISTENCY};

/// Environment variable naming a JSON file that overrides the tolerance record.
pub const TOL_FILE_VAR: &str = "CONSENSUS_OPT_TOL_FILE";

#[derive(Debug, Parser)]
#[command(
    name = "consensus-opt",
    version,
    about = "Optimal and worst-case switching for linear consensus networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that every matrix of a problem file is a consensus matrix.
    Validate { file: PathBuf },
    /// Propagate a given control and emit the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Print the reduced matrices, metric and initial state.
    Reduce {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the switching law that minimizes (or maximizes) the
    /// distance to consensus at the horizon.
    Optimize(OptimizeArgs),
    /// Same as `optimize --sense max`.
    WorstCase(SolverArgs),
    /// Decide uniform convergence to consensus.
    Ucc(UccArgs),
    /// Check a given control against the maximum principle.
    MpVerify(MpVerifyArgs),
    /// Reproduce the reference problems and compare with stored values.
    PaperExamples(HarnessArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub file: PathBuf,
    /// Control, e.g. `2@0,1@0.264834` or `0.5:0.5@0`.
    #[arg(long)]
    pub control: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Samples per control segment.
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Bangbang,
    Relaxed,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SenseArg {
    Min,
    Max,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    pub mode: Mode,
    #[arg(long)]
    pub max_switches: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub time_bins: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report destination (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory CSV of the best solution.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Overrides the sense given in the file.
    #[arg(long, value_enum)]
    pub sense: Option<SenseArg>,
}

#[derive(Debug, Args)]
pub struct UccArgs {
    pub file: PathBuf,
    /// Lattice resolution per simplex edge for the sampling screen.
    #[arg(long, default_value_t = 11)]
    pub hull_samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MpVerifyArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub control: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Switching functions as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HarnessArgs {
    /// Comma-separated fixture names.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Multiplies every fixture tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// JSON results destination; the table always goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Default tolerances, or the record named by [`TOL_FILE_VAR`].
pub fn load_tolerances() -> Result<Tolerances, CliError> {
    let Some(path) = std::env::var_os(TOL_FILE_VAR) else {
        return Ok(Tolerances::default());
    };
    let path = PathBuf::from(path);
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let tol = load_tolerances()?;
    match cli.command {
        Command::Validate { file } => validate(&file, &tol),
        Command::Simulate(args) => simulate(&args, &tol),
        Command::Reduce { file, out } => reduce_cmd(&file, out.as_deref(), &tol),
        Command::Optimize(args) => {
            let sense = args.sense.map(|s| match s {
                SenseArg::Min => Sense::Minimize,
                SenseArg::Max => Sense::Maximize,
            });
            optimize(&args.solver, sense, "optimize", &tol)
        }
        Command::WorstCase(args) => optimize(&args, Some(Sense::Maximize), "worst-case", &tol),
        Command::Ucc(args) => ucc(&args, &tol),
        Command::MpVerify(args) => mp_verify(&args, &tol),
        Command::PaperExamples(args) => paper_examples(&args),
    }
}

fn validate(path: &Path, tol: &Tolerances) -> Result<(), CliError> {
    let file = ProblemFile::load(path)?;
    let mut bad = 0;
    for f in file.diagnose(tol) {
        if f.issues.is_empty() {
            println!("matrix {}: ok", f.index);
        }
        for issue in &f.issues {
            println!("matrix {}: {issue}", f.index);
            bad += 1;
        }
    }
    match file.problem(tol) {
        Ok(p) => println!(
            "problem: n = {}, r = {}, T = {}, sense = {:?}",
            p.dim(),
            p.inputs(),
            p.horizon,
            p.sense
        ),
        Err(e) => {
            if bad == 0 {
                println!("problem: {e}");
            }
            return Err(e);
        }
    }
    if bad > 0 {
        return Err(CliError::Validation(format!("{bad} invalid entries")));
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, tol: &Tolerances) -> Result<(), CliError> {
    let file = ProblemFile::load(&args.file)?;
    let prob = file.problem(tol)?;
    let u = parse_control(&args.control, prob.inputs(), prob.horizon)?;
    let traj = propagate(&prob.sys, &prob.x0, &u, args.samples.max(1))?;
    let red = reduce_with(&prob.sys, &default_basis(prob.dim()), tol)?;
    let csv = trajectory_csv(&traj, &red);
    emit(args.csv.as_deref(), &csv)?;
    if args.csv.is_some() {
        println!("V(x(T)) = {:.16e}", consensus_distance(traj.final_state()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ReducedView {
    n: usize,
    basis: Vec<Vec<f64>>,
    lift: Vec<Vec<f64>>,
    metric: Vec<Vec<f64>>,
    reduced_matrices: Vec<Vec<Vec<f64>>>,
    z0: Vec<f64>,
}

fn reduce_cmd(path: &Path, out: Option<&Path>, tol: &Tolerances) -> Result<(), CliError> {
    let file = ProblemFile::load(path)?;
    let prob = file.problem(tol)?;
    let basis = default_basis(prob.dim());
    let red = reduce_with(&prob.sys, &basis, tol)?;
    let view = ReducedView {
        n: prob.dim(),
        basis: matrix_to_rows(&basis.s),
        lift: matrix_to_rows(&basis.lift),
        metric: matrix_to_rows(&red.metric),
        reduced_matrices: red.bar_matrices.iter().map(matrix_to_rows).collect(),
        z0: reduce_state(&prob.x0, &basis).iter().copied().collect(),
    };
    let mut text = serde_json::to_string_pretty(&view).expect("plain data serializes");
    text.push('\n');
    emit(out, &text)
}

fn solver_options(args: &SolverArgs, file: &ProblemFile) -> Result<(BangBangOptions, RelaxedOptions), CliError> {
    if args.mode == Mode::Relaxed && (args.max_switches.is_some() || args.grid.is_some()) {
        return Err(CliError::Validation(
            "--max-switches and --grid apply to the bang-bang solver, not to --mode relaxed".into(),
        ));
    }
    if args.mode == Mode::Bangbang && args.time_bins.is_some() {
        return Err(CliError::Validation(
            "--time-bins applies to the relaxed solver, not to --mode bangbang".into(),
        ));
    }
    let mut bb = BangBangOptions::default();
    bb.max_switches = args.max_switches.or(file.solver.max_switches);
    if let Some(g) = args.grid.or(file.solver.grid) {
        bb.grid = g;
    }
    let mut relaxed = RelaxedOptions::default();
    if let Some(b) = args.time_bins.or(file.solver.time_bins) {
        relaxed.time_bins = b;
    }
    Ok((bb, relaxed))
}

fn optimize(args: &SolverArgs, sense: Option<Sense>, command: &str, tol: &Tolerances) -> Result<(), CliError> {
    let start = Instant::now();
    let mut file = ProblemFile::load(&args.file)?;
    if let Some(s) = sense {
        file.sense = s;
    }
    if args.seed.is_some() {
        file.solver.seed = args.seed;
    }
    let (bb_opts, relaxed_opts) = solver_options(args, &file)?;
    let prob = file.problem(tol)?;
    let mut report = RunReport::new(command, file);

    if prob.dim() == 2 {
        report.solutions.push(Solution::from(&solve_analytic_n2(&prob)?));
    } else {
        let bb = match args.mode {
            Mode::Bangbang | Mode::Both => Some(solve_bang_bang(&prob, &bb_opts)?),
            Mode::Relaxed => None,
        };
        let relaxed = match args.mode {
            Mode::Relaxed | Mode::Both => Some(solve_relaxed(&prob, &relaxed_opts)?),
            Mode::Bangbang => None,
        };
        if let (Some(b), Some(r)) = (&bb, &relaxed) {
            report.cross_validation = Some(cross_validate(prob.sense, b, r));
        }
        report.solutions.extend(bb.iter().chain(&relaxed).map(Solution::from));
    }

    if let Some(path) = &args.csv {
        let best = best_solution(&report.solutions, prob.sense);
        let traj = propagate(&prob.sys, &prob.x0, &best.control, 32)?;
        let red = reduce_with(&prob.sys, &default_basis(prob.dim()), tol)?;
        crate::report::write_atomic(path, trajectory_csv(&traj, &red).as_bytes())?;
    }
    report.timing.elapsed_seconds = start.elapsed().as_secs_f64();
    emit(args.out.as_deref(), &report.to_json())
}

fn best_solution(solutions: &[Solution], sense: Sense) -> &Solution {
    solutions
        .iter()
        .reduce(|a, b| if sense.better(b.cost, a.cost) { b } else { a })
        .expect("at least one solver ran")
}

fn ucc(args: &UccArgs, tol: &Tolerances) -> Result<(), CliError> {
    let start = Instant::now();
    let file = ProblemFile::load(&args.file)?;
    let sys = file.system(tol)?;
    let ucc = if sys.dim() == 3 && sys.len() == 2 {
        UccReport::Decision {
            verdict: ucc_decide_n3_r2(sys.matrix(0), sys.matrix(1))?,
        }
    } else {
        eprintln!("note: {SCREEN_DISCLAIMER}");
        UccReport::Screen {
            result: ucc_sample_check(&sys, args.hull_samples)?,
            hull_samples: args.hull_samples,
            disclaimer: SCREEN_DISCLAIMER.to_string(),
        }
    };
    let mut report = RunReport::new("ucc", file);
    report.ucc = Some(ucc);
    report.timing.elapsed_seconds = start.elapsed().as_secs_f64();
    emit(args.out.as_deref(), &report.to_json())
}

fn mp_verify(args: &MpVerifyArgs, tol: &Tolerances) -> Result<(), CliError> {
    let start = Instant::now();
    let file = ProblemFile::load(&args.file)?;
    let prob: OCProblem = file.problem(tol)?;
    let u = parse_control(&args.control, prob.inputs(), prob.horizon)?;
    let a = analyze_control(&prob, &u, 32)?;
    let scale = prob.horizon * a.switching.max_abs();
    let residual = evaluate_mp_residual(&u, &a.switching, prob.sense);
    let arc_signs = (prob.inputs() == 2).then(|| a.switching.arc_signs(0, 1, u.breakpoints()));
    if let Some(path) = &args.csv {
        crate::report::write_atomic(path, switching_csv(&a.switching).as_bytes())?;
    }
    let mut report = RunReport::new("mp-verify", file);
    report.mp_check = Some(MpCheck {
        control: u,
        cost: consensus_distance(a.trajectory.final_state()),
        mp_residual: residual,
        mp_scale: scale,
        mp_consistent: residual <= MP_CONSISTENCY * scale,
        arc_signs,
        switching_functions: a.switching,
    });
    report.timing.elapsed_seconds = start.elapsed().as_secs_f64();
    emit(args.out.as_deref(), &report.to_json())
}

fn paper_examples(args: &HarnessArgs) -> Result<(), CliError> {
    let report = harness::run(&args.only, args.tolerance_scale)?;
    print!("{}", report.table());
    if let Some(path) = &args.out {
        let mut text = serde_json::to_string_pretty(&report).expect("plain data serializes");
        text.push('\n');
        crate::report::write_atomic(path, text.as_bytes())?;
    }
    if report.all_pass() {
        Ok(())
    } else {
        let names: Vec<String> = report
            .failures()
            .map(|c| format!("{}: {}", c.fixture, c.quantity))
            .collect();
        Err(CliError::Regression(names.join("; ")))
    }
}
