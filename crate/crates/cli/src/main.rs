//! Command-line front end for the pulse toolkit: `design` fits a cosine
//! series to a target rotation profile, `compile` turns a design into an
//! executable segment program, `simulate` propagates the program over a
//! dispersion mesh, `evaluate` scores a states file against its design, and
//! `reproduce` regenerates the bundled demo datasets.
//!
//! Commands exchange files only (design JSON, program JSON, states CSV), so
//! any stage can be re-run or swapped out. All outputs are deterministic:
//! identical inputs give byte-identical files. Writes go through a
//! temp-and-rename step so an interrupted run never leaves a half-written
//! file behind.
//!
//! Angles in files are always radians; flags accept radians or a number
//! with a `deg` suffix (`--beta0 5deg`). Exit codes: 0 success, 2 bad
//! arguments, 3 numerical-tolerance failure, 4 malformed input file,
//! 5 evaluation threshold exceeded, 1 output I/O failure.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fourpulse::analysis::{figure_dataset, profile_error, Figure};
use fourpulse::compiler::{compile_design, program_duration};
use fourpulse::fourier::{
    coefficients_1d, coefficients_2d, even_extension, series_eval_2d, slice_target,
    truncation_error, Design, TargetProfile1D, TargetProfile2D,
};
use fourpulse::simulator::{
    linspace, naive_pulse, parse_states_csv, simulate_ensemble, EnsembleMesh,
};
use fourpulse::{Axis, PulseProgram, SpinState};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_BAD_INPUT: u8 = 4;
const EXIT_THRESHOLD: u8 = 5;

/// A failed command: message for stderr plus the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }

    /// Library errors keep their own split: precondition violations are
    /// usage errors, tolerance breaches are numerical failures.
    fn from_core(e: fourpulse::Error) -> Failure {
        let code = match e {
            fourpulse::Error::InvalidArgument(_) => EXIT_USAGE,
            fourpulse::Error::Numerical { .. } => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }

    /// Same library errors, but raised while interpreting an input file:
    /// the file, not the command line, is at fault.
    fn bad_input(path: &Path, e: impl Display) -> Failure {
        Failure::new(EXIT_BAD_INPUT, format!("{}: {}", path.display(), e))
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure::new(EXIT_USAGE, message)
}

// ---------------------------------------------------------------------------
// Flag value parsers
// ---------------------------------------------------------------------------

/// Angle flag: plain radians, or degrees with a `deg` suffix.
fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (num, scale) = match t.strip_suffix("deg") {
        Some(n) => (n.trim_end(), std::f64::consts::PI / 180.0),
        None => (t, 1.0),
    };
    num.parse::<f64>()
        .map(|v| v * scale)
        .map_err(|_| format!("expected a number with optional `deg` suffix, got `{s}`"))
}

/// Grid flag: a single value, or `lo:hi:n` for n uniformly spaced points.
#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => v
            .trim()
            .parse::<f64>()
            .map(|x| Grid(vec![x]))
            .map_err(|_| format!("expected a number or `lo:hi:n`, got `{s}`")),
        [lo, hi, n] => {
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|_| format!("bad grid bound `{lo}`"))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|_| format!("bad grid bound `{hi}`"))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| format!("bad grid count `{n}`"))?;
            linspace(lo, hi, n).map(Grid).map_err(|e| e.to_string())
        }
        _ => Err(format!("expected a number or `lo:hi:n`, got `{s}`")),
    }
}

/// Initial-state flag: `x`, `y`, `z`, or three comma-separated components
/// (normalized to a unit vector).
#[derive(Clone, Debug)]
struct StateArg([f64; 3]);

fn parse_state(s: &str) -> Result<StateArg, String> {
    let m = match s.trim() {
        "x" => [1.0, 0.0, 0.0],
        "y" => [0.0, 1.0, 0.0],
        "z" => [0.0, 0.0, 1.0],
        other => {
            let c: Vec<f64> = other
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| format!("expected x, y, z, or three components, got `{s}`"))?;
            if c.len() != 3 {
                return Err(format!("expected three components, got {}", c.len()));
            }
            let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if !n.is_finite() || n == 0.0 {
                return Err("initial state must have a nonzero finite norm".to_string());
            }
            [c[0] / n, c[1] / n, c[2] / n]
        }
    };
    Ok(StateArg(m))
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    Figure::from_str(s).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

/// Design, compile, simulate, and score compensating pulse sequences.
#[derive(Parser)]
#[command(name = "fourpulse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a truncated cosine series to a target rotation profile.
    Design(DesignArgs),
    /// Compile a design file into an executable segment program.
    Compile(CompileArgs),
    /// Propagate a program over a dispersion mesh and write the final states.
    Simulate(SimulateArgs),
    /// Score a states file against the design it was compiled from.
    Evaluate(EvaluateArgs),
    /// Regenerate one of the bundled demo datasets (fig2 through fig6).
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TargetKind {
    /// Constant angle across rf scales in [1 - delta, 1].
    UniformEps,
    /// Angle inside the position band [lo, hi], identity outside.
    Slice,
    /// Constant angle across positions and rf scales jointly.
    UniformJoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    X,
    Y,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
        }
    }
}

/// Target-profile flags shared by `design` and `evaluate`.
#[derive(Args)]
struct TargetSpec {
    /// Target family.
    #[arg(long, value_enum)]
    kind: TargetKind,

    /// Desired rotation angle (radians; append `deg` for degrees).
    #[arg(long, value_parser = parse_angle, allow_negative_numbers = true)]
    angle: f64,

    /// Rf-dispersion width: uniform targets cover eps in [1 - delta, 1].
    #[arg(long)]
    delta: Option<f64>,

    /// Lower edge of the slice band (slice targets).
    #[arg(long)]
    lo: Option<f64>,

    /// Upper edge of the slice band (slice targets).
    #[arg(long)]
    hi: Option<f64>,

    /// Linear ramp width flanking the slice band.
    #[arg(long, default_value_t = 0.0)]
    ramp: f64,
}

impl TargetSpec {
    fn delta(&self) -> Result<f64, Failure> {
        self.delta
            .ok_or_else(|| usage("this target kind requires --delta"))
    }

    fn band(&self) -> Result<(f64, f64), Failure> {
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(usage("slice targets require --lo and --hi")),
        }
    }

    /// The one-variable profile these flags describe; joint targets are
    /// rejected where only one dispersion variable makes sense.
    fn build_1d(&self) -> Result<TargetProfile1D, Failure> {
        match self.kind {
            TargetKind::UniformEps => {
                TargetProfile1D::uniform_eps(self.angle, self.delta()?).map_err(Failure::from_core)
            }
            TargetKind::Slice => {
                let (lo, hi) = self.band()?;
                slice_target(lo, hi, self.angle, self.ramp).map_err(Failure::from_core)
            }
            TargetKind::UniformJoint => Err(usage(
                "this command scores one dispersion variable; pick uniform-eps or slice",
            )),
        }
    }
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    target: TargetSpec,

    /// Number of series terms (one-variable targets).
    #[arg(long, default_value_t = 5)]
    terms: usize,

    /// Position term count (joint targets; defaults to --terms).
    #[arg(long)]
    terms_s: Option<usize>,

    /// Rf-scale term count (joint targets; defaults to --terms).
    #[arg(long)]
    terms_eps: Option<usize>,

    /// Output design file (JSON).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CompileArgs {
    /// Input design file (JSON).
    #[arg(long)]
    design: PathBuf,

    /// Control axis the flip segments rotate about.
    #[arg(long, value_enum, default_value_t = AxisArg::Y)]
    axis: AxisArg,

    /// Largest per-segment flip angle before splitting kicks in
    /// (radians or `deg`; at most 30 degrees).
    #[arg(long, value_parser = parse_angle, default_value = "5deg")]
    beta0: f64,

    /// Output program file (JSON).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Compiled program file (omit when using --naive).
    #[arg(long, conflicts_with = "naive")]
    program: Option<PathBuf>,

    /// Skip compilation and apply the uncompensated one-unit 90-degree
    /// flip instead; its closed-form states depend on eps only.
    #[arg(long)]
    naive: bool,

    /// Position grid: a single value or `lo:hi:n`.
    #[arg(long, default_value = "0", value_parser = parse_grid)]
    s_grid: Grid,

    /// Rf-scale grid: a single value or `lo:hi:n`.
    #[arg(long, default_value = "1", value_parser = parse_grid)]
    eps_grid: Grid,

    /// Initial spin state: x, y, z, or three comma-separated components.
    #[arg(long, default_value = "z", value_parser = parse_state, allow_negative_numbers = true)]
    m0: StateArg,

    /// Output states file (CSV).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// States CSV produced by `simulate`.
    #[arg(long)]
    states: PathBuf,

    /// Design file the states are supposed to realize.
    #[arg(long)]
    design: PathBuf,

    #[command(flatten)]
    target: TargetSpec,

    /// Control axis the program was compiled with.
    #[arg(long, value_enum, default_value_t = AxisArg::Y)]
    axis: AxisArg,

    /// Splitting threshold the program was compiled with.
    #[arg(long, value_parser = parse_angle, default_value = "5deg")]
    beta0: f64,

    /// Initial spin state the states file was simulated from.
    #[arg(long, default_value = "z", value_parser = parse_state, allow_negative_numbers = true)]
    m0: StateArg,

    /// Exit 5 when the worst angle gap exceeds this bound (radians or `deg`).
    #[arg(long, value_parser = parse_angle)]
    max_angle_gap: Option<f64>,

    /// Exit 5 when the worst state error exceeds this bound.
    #[arg(long)]
    max_state_error: Option<f64>,

    /// Output report file (CSV).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Dataset id: fig2, fig3, fig4, fig5, or fig6.
    #[arg(value_parser = parse_figure)]
    id: Figure,

    /// Directory the dataset files are written into (created if missing).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Compile(args) => cmd_compile(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Write through a sibling temp file and rename, so a crash mid-write
/// cannot leave a truncated output behind.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let io_err =
        |e: std::io::Error| Failure::new(EXIT_IO, format!("writing {}: {}", path.display(), e));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::bad_input(path, e))
}

fn load_design(path: &Path) -> Result<Design, Failure> {
    Design::from_json(&read_input(path)?).map_err(|e| Failure::bad_input(path, e))
}

fn load_program(path: &Path) -> Result<PulseProgram, Failure> {
    PulseProgram::from_json(&read_input(path)?).map_err(|e| Failure::bad_input(path, e))
}

fn spin_state(m0: &StateArg) -> Result<SpinState, Failure> {
    SpinState::new(m0.0).map_err(Failure::from_core)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_design(args: DesignArgs) -> Result<(), Failure> {
    if args.terms == 0 {
        return Err(usage("--terms must be at least 1"));
    }
    let (design, summary) = match args.target.kind {
        TargetKind::UniformJoint => {
            let target = TargetProfile2D::uniform_joint(args.target.angle, args.target.delta()?)
                .map_err(Failure::from_core)?;
            let k1 = args.terms_s.unwrap_or(args.terms);
            let k2 = args.terms_eps.unwrap_or(args.terms);
            let d = coefficients_2d(&target, k1, k2).map_err(Failure::from_core)?;

            // No closed truncation report for two variables; sample the
            // series against the scaled target on a coarse grid instead.
            let (s_lo, s_hi) = target.s_range();
            let (e_lo, e_hi) = target.eps_range();
            let (mut max_abs, mut sum_sq, n) = (0.0f64, 0.0f64, 41usize);
            for i in 0..n {
                let s = s_lo + (s_hi - s_lo) * i as f64 / (n - 1) as f64;
                for j in 0..n {
                    let e = e_lo + (e_hi - e_lo) * j as f64 / (n - 1) as f64;
                    let gap = series_eval_2d(&d, s, e) - target.angle(s, e) / e;
                    max_abs = max_abs.max(gap.abs());
                    sum_sq += gap * gap;
                }
            }
            let rms = (sum_sq / (n * n) as f64).sqrt();
            let summary = format!(
                "{k1} x {k2} terms; truncation over a {n} x {n} grid: max {max_abs:.3e}, rms {rms:.3e}"
            );
            (Design::TwoD(d), summary)
        }
        _ => {
            let target = args.target.build_1d()?;
            let d = coefficients_1d(&even_extension(&target), args.terms)
                .map_err(Failure::from_core)?;
            let report = truncation_error(&d, &target, 1001).map_err(Failure::from_core)?;
            let summary = format!(
                "{} terms; truncation over 1001 grid points: max {:.3e}, rms {:.3e}",
                args.terms, report.max_abs, report.rms
            );
            (Design::OneD(d), summary)
        }
    };
    write_atomic(&args.output, &design.to_json())?;
    println!(
        "wrote {} ({}): {}",
        args.output.display(),
        design.kind_str(),
        summary
    );
    Ok(())
}

fn cmd_compile(args: CompileArgs) -> Result<(), Failure> {
    let design = load_design(&args.design)?;
    let program =
        compile_design(&design, args.axis.into(), args.beta0).map_err(Failure::from_core)?;
    let duration = program_duration(&program, 1.0, 1.0).map_err(Failure::from_core)?;
    write_atomic(&args.output, &program.to_json())?;
    println!(
        "wrote {}: {} segments, duration {:.4} at unit rf amplitude and gradient rate",
        args.output.display(),
        program.segments().len(),
        duration
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    if args.naive {
        // Closed-form hard pulse; position plays no role, so the grid must
        // collapse to the single value recorded in the output rows.
        if args.s_grid.0.len() != 1 {
            return Err(usage(
                "--naive has no position dependence; use a single-value --s-grid",
            ));
        }
        let s = args.s_grid.0[0];
        let states = naive_pulse(&args.eps_grid.0).map_err(Failure::from_core)?;
        let mut csv = String::from("s,eps,Mx,My,Mz\n");
        for (&eps, m) in args.eps_grid.0.iter().zip(&states) {
            csv.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s, eps, m.0[0], m.0[1], m.0[2]
            ));
        }
        write_atomic(&args.output, &csv)?;
        println!(
            "wrote {}: {} states (uncompensated one-unit 90-degree flip)",
            args.output.display(),
            states.len()
        );
        return Ok(());
    }

    let path = args
        .program
        .as_deref()
        .ok_or_else(|| usage("pass --program FILE, or --naive"))?;
    let program = load_program(path)?;
    let mesh = EnsembleMesh::new(args.s_grid.0.clone(), args.eps_grid.0.clone())
        .map_err(Failure::from_core)?;
    let result = simulate_ensemble(&program, &mesh, &spin_state(&args.m0)?);
    write_atomic(&args.output, &result.to_csv())?;
    println!(
        "wrote {}: {} states ({} x {} mesh)",
        args.output.display(),
        mesh.len(),
        mesh.s_values().len(),
        mesh.eps_values().len()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let (mesh, states) = parse_states_csv(&read_input(&args.states)?)
        .map_err(|e| Failure::bad_input(&args.states, e))?;
    let design = load_design(&args.design)?;
    let target = args.target.build_1d()?;

    // The states file carries no propagators, so rebuild the program the
    // same deterministic way `compile` does and re-run it over the file's
    // mesh. The file must agree with the re-simulation exactly (both sides
    // print 17 significant digits); any gap means the design, axis, beta0,
    // or m0 given here is not what produced the file.
    let program =
        compile_design(&design, args.axis.into(), args.beta0).map_err(Failure::from_core)?;
    let result = simulate_ensemble(&program, &mesh, &spin_state(&args.m0)?);
    let n_eps = mesh.eps_values().len();
    for (idx, row) in states.iter().enumerate() {
        let m = result.final_state(idx / n_eps, idx % n_eps);
        let gap = (0..3)
            .map(|j| (row[j] - m.0[j]).powi(2))
            .sum::<f64>()
            .sqrt();
        if gap > 1e-9 {
            return Err(Failure::new(
                EXIT_BAD_INPUT,
                format!(
                    "{}: row {} disagrees with the declared design/axis/beta0/m0 by {gap:.3e}",
                    args.states.display(),
                    idx + 2
                ),
            ));
        }
    }

    let report =
        profile_error(&result, &design, args.axis.into(), &target).map_err(Failure::from_core)?;
    write_atomic(&args.output, &report.to_csv())?;
    println!(
        "wrote {}: {} points; max angle gap {:.3e} rad, max state error {:.3e}, \
         max operator error {:.3e}",
        args.output.display(),
        report.points.len(),
        report.max_angle_gap,
        report.max_state_error,
        report.max_op_error
    );

    if let Some(bound) = args.max_angle_gap {
        if report.max_angle_gap > bound {
            return Err(Failure::new(
                EXIT_THRESHOLD,
                format!(
                    "max angle gap {:.3e} exceeds bound {bound:.3e}",
                    report.max_angle_gap
                ),
            ));
        }
    }
    if let Some(bound) = args.max_state_error {
        if report.max_state_error > bound {
            return Err(Failure::new(
                EXIT_THRESHOLD,
                format!(
                    "max state error {:.3e} exceeds bound {bound:.3e}",
                    report.max_state_error
                ),
            ));
        }
    }
    Ok(())
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<(), Failure> {
    fs::create_dir_all(&args.out_dir).map_err(|e| {
        Failure::new(
            EXIT_IO,
            format!("creating {}: {}", args.out_dir.display(), e),
        )
    })?;
    let data = figure_dataset(args.id).map_err(Failure::from_core)?;
    for (name, contents) in &data.files {
        let path = args.out_dir.join(name);
        write_atomic(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    #[test]
    fn angles_accept_degree_suffix() {
        assert!((parse_angle("90deg").unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((parse_angle("-90deg").unwrap() + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!(parse_angle("ninety").is_err());
        assert!(parse_angle("deg").is_err());
    }

    #[test]
    fn grids_parse_single_values_and_ranges() {
        assert_eq!(parse_grid("0.25").unwrap().0, vec![0.25]);
        assert_eq!(
            parse_grid("0:1:5").unwrap().0,
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("0:1:one").is_err());
    }

    #[test]
    fn states_parse_names_and_components() {
        assert_eq!(parse_state("z").unwrap().0, [0.0, 0.0, 1.0]);
        let m = parse_state("1,1,0").unwrap().0;
        assert!((m[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((m[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(parse_state("0,0,0").is_err());
        assert!(parse_state("1,2").is_err());
    }

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
