use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use isingc_core::angle::{parse_angle, parse_grid};
use isingc_core::decompose::{
    compile_four_body, verify_decomposition, CompileOptions, FourBodyRealization, Variant,
};
use isingc_core::quantum::{pauli_exponential, PauliString};
use isingc_core::refocus::{default_segments, refocus_block, toggling_patterns};
use isingc_core::sequence::{coupling_tau, parse_sequence, CouplingAmount};
use isingc_core::simulate::{
    evolve_four_body, prepare_initial_state, prepare_state_on, sweep_csv, sweep_pi_jt, ErrorModel,
    EvolutionMode,
};
use isingc_core::spectro::{
    fid_to_spectrum, fit_cosine, integrate_multiplet, multiplet_window, synthesize_fid,
    DEFAULT_DWELL, DEFAULT_POINTS, DEFAULT_T2,
};
use isingc_core::{FourBodyTarget, SpinSystem};

use crate::output::OutDir;
use crate::Failure;

type CmdResult = Result<(), Failure>;

/// Compile, verify and simulate many-body ZZ..Z interactions on NMR spin systems.
#[derive(Parser, Debug)]
#[command(name = "isingc", version)]
pub struct Cli {
    /// Output root; files go to sequences/, reports/ and csv/ below it.
    #[arg(long, global = true, env = "ISINGC_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile the four-spin interaction into a pulse program.
    Compile(CompileArgs),
    /// Check a sequence file against exp(-i angle P).
    Verify(VerifyArgs),
    /// Expand one coupling block into its echo schedule.
    Refocus(RefocusArgs),
    /// Prepare sigma_x on one spin from thermal equilibrium.
    Prepare(PrepareArgs),
    /// Sweep <sigma_x^3> over a grid of pi*J_eff*T values.
    Sweep(SweepArgs),
    /// Synthesize C3 spectra at n*pi/4 points.
    Spectrum(SpectrumArgs),
    /// Fit A*cos(b*x) to a sweep CSV.
    Fit(FitArgs),
    /// Run the full four-spin reproduction and summarize it.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct MoleculeArg {
    /// Preset name or path to a TOML molecule file.
    #[arg(long, default_value = "crotonic-acid")]
    molecule: String,
}

impl MoleculeArg {
    fn load(&self) -> Result<SpinSystem, Failure> {
        Ok(SpinSystem::load(&self.molecule)?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    A,
    B,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::A => Variant::A,
            VariantArg::B => Variant::B,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RealizationArg {
    Ideal,
    Refocused,
}

impl From<RealizationArg> for FourBodyRealization {
    fn from(r: RealizationArg) -> Self {
        match r {
            RealizationArg::Ideal => FourBodyRealization::Ideal,
            RealizationArg::Refocused => FourBodyRealization::Refocused,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Analytic,
    CompiledIdeal,
    CompiledRefocused,
}

impl From<ModeArg> for EvolutionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Analytic => EvolutionMode::Analytic,
            ModeArg::CompiledIdeal => EvolutionMode::CompiledIdeal,
            ModeArg::CompiledRefocused => EvolutionMode::CompiledRefocused,
        }
    }
}

#[derive(Args, Debug)]
struct ErrorArgs {
    /// Multiplier on every rotation angle.
    #[arg(long, default_value_t = 1.0)]
    angle_scale: f64,
    /// Per-instruction factor on transverse components, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
}

impl ErrorArgs {
    fn model(&self) -> Result<ErrorModel, Failure> {
        Ok(ErrorModel::new(self.angle_scale, self.damping)?)
    }
}

fn positive_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("tolerance must be > 0".into())
    }
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    #[arg(long, value_enum, default_value = "a")]
    variant: VariantArg,
    /// pi*J_eff*T, e.g. `pi/2` or `1.5707963`.
    #[arg(long = "piJT", alias = "pi-jt", value_parser = parse_angle)]
    pi_jt: f64,
    #[arg(long, default_value_t = 1.0)]
    j_eff: f64,
    #[arg(long, value_enum, default_value = "ideal")]
    realization: RealizationArg,
    /// Echo segments per refocused block (power of two).
    #[arg(long)]
    segments: Option<usize>,
    /// Realize negative block durations with pi_x pulses.
    #[arg(long)]
    sign_adjust: bool,
    #[arg(long, default_value = "1e-10", value_parser = positive_tolerance)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    /// Sequence listing to check.
    #[arg(long)]
    sequence: PathBuf,
    /// Generator Pauli string; defaults to Z on every spin.
    #[arg(long)]
    pauli: Option<String>,
    /// Generator angle theta in exp(-i theta P).
    #[arg(long, value_parser = parse_angle, conflicts_with = "pi_jt", required_unless_present = "pi_jt")]
    angle: Option<f64>,
    /// pi*J_eff*T; the generator angle is half of it.
    #[arg(long = "piJT", alias = "pi-jt", value_parser = parse_angle)]
    pi_jt: Option<f64>,
    #[arg(long, default_value = "1e-10", value_parser = positive_tolerance)]
    tolerance: f64,
}

fn spin_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected k,l")?;
    let parse = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid spin {x:?}"))
    };
    Ok((parse(a)?, parse(b)?))
}

#[derive(Args, Debug)]
struct RefocusArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    /// Coupled pair `k,l`.
    #[arg(long, value_parser = spin_pair)]
    pair: (usize, usize),
    /// Block duration in seconds; defaults to 1/(2|J_kl|).
    #[arg(long, conflicts_with = "angle")]
    tau: Option<f64>,
    /// ZZ generator angle instead of a duration.
    #[arg(long, value_parser = parse_angle)]
    angle: Option<f64>,
    #[arg(long)]
    segments: Option<usize>,
}

#[derive(Args, Debug)]
struct PrepareArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    /// Spin that ends up along x.
    #[arg(long, default_value_t = 3)]
    target: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    /// `start:step:stop` over pi*J_eff*T, inclusive.
    #[arg(long, default_value = "0:pi/4:2pi")]
    grid: String,
    #[arg(long, value_enum, default_value = "compiled-refocused")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    j_eff: f64,
    #[command(flatten)]
    errors: ErrorArgs,
    /// Also fit A*cos(b*x) to the sweep.
    #[arg(long)]
    fit: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    /// Points n of pi*J_eff*T = n*pi/4, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8")]
    n: Vec<i64>,
    #[arg(long, value_enum, default_value = "compiled-refocused")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_T2)]
    t2: f64,
    #[arg(long, default_value_t = DEFAULT_DWELL)]
    dwell: f64,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    npoints: usize,
    /// Also write the FID of each point.
    #[arg(long)]
    fid: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "pi_J_T")]
    x_column: String,
    #[arg(long, default_value = "expectation_sx3")]
    y_column: String,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    molecule: MoleculeArg,
    #[command(flatten)]
    errors: ErrorArgs,
}

pub fn run(cli: Cli) -> CmdResult {
    let out = OutDir::new(&cli.out_dir);
    match cli.command {
        Command::Compile(a) => compile(a, &out),
        Command::Verify(a) => verify(a, &out),
        Command::Refocus(a) => refocus(a, &out),
        Command::Prepare(a) => prepare(a, &out),
        Command::Sweep(a) => sweep(a, &out),
        Command::Spectrum(a) => spectrum(a, &out),
        Command::Fit(a) => fit(a, &out),
        Command::Report(a) => report(a, &out),
    }
}

fn four_body_target(pi_jt: f64, j_eff: f64) -> Result<FourBodyTarget, Failure> {
    if !(j_eff.is_finite() && j_eff != 0.0) {
        return Err(Failure::config(
            "invalid-parameter",
            "J_eff must be finite and nonzero",
        ));
    }
    Ok(FourBodyTarget::from_pi_jt(pi_jt, j_eff))
}

fn compile(a: CompileArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    let target = four_body_target(a.pi_jt, a.j_eff)?;
    let opts = CompileOptions {
        segments: a.segments,
        sign_adjust: a.sign_adjust,
    };
    let report = compile_four_body(
        &sys,
        &target,
        a.variant.into(),
        a.realization.into(),
        a.tolerance,
        &opts,
    )?;
    let name = report.sequence.name.clone();
    let seq_path = out.sequence(&format!("{name}.seq"), &report.sequence.to_string())?;
    let rep_path = out.report(&format!("{name}.json"), &report.to_json())?;
    println!("sequence: {}", seq_path.display());
    println!("report: {}", rep_path.display());
    println!("instructions: {}", report.instruction_count);
    println!("deviation: {:e}", report.deviation);
    println!("corrected: {}", report.corrected);
    println!("duration_ms: {:.6}", report.duration_s * 1e3);
    Ok(())
}

fn verify(a: VerifyArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    let text = std::fs::read_to_string(&a.sequence)?;
    let seq = parse_sequence(&text)?;
    let pauli = match &a.pauli {
        Some(p) => p.parse::<PauliString>()?,
        None => PauliString::z_string(sys.n(), &(1..=sys.n()).collect::<Vec<_>>())?,
    };
    let angle = match (a.angle, a.pi_jt) {
        (Some(theta), _) => theta,
        (None, Some(x)) => x / 2.0,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let ideal = pauli_exponential(&pauli, angle, sys.n())?;
    let mut report = verify_decomposition(&seq, &ideal, &sys, a.tolerance)?;
    report.target = format!("exp(-i {angle} {})", pauli.label());
    let stem = a
        .sequence
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    let path = out.report(&format!("verify-{stem}.json"), &report.to_json())?;
    println!("report: {}", path.display());
    println!("deviation: {:e}", report.deviation);
    println!("global_phase: {}", report.global_phase);
    if report.equal {
        println!("verified: true");
        Ok(())
    } else {
        Err(Failure {
            code: "verification-failed",
            message: format!(
                "deviation {:e} exceeds tolerance {:e}",
                report.deviation, a.tolerance
            ),
            exit: 3,
        })
    }
}

fn refocus(a: RefocusArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    let (k, l) = a.pair;
    sys.check_spin(k)?;
    sys.check_spin(l)?;
    let tau = match (a.tau, a.angle) {
        (Some(t), _) => t,
        (None, Some(theta)) => coupling_tau(&sys, a.pair, CouplingAmount::Angle(theta))?,
        (None, None) => {
            let j = sys.coupling(k, l);
            if j == 0.0 {
                return Err(isingc_core::Error::ZeroCoupling { k, l }.into());
            }
            1.0 / (2.0 * j.abs())
        }
    };
    let m = a.segments.unwrap_or_else(|| default_segments(sys.n()));
    let block = refocus_block(&sys, a.pair, tau, m)?;
    let pattern = toggling_patterns(sys.n(), a.pair, m)?;
    let seq_path = out.sequence(&format!("refocus-{k}-{l}.seq"), &block.to_string())?;
    let csv_path = out.csv(&format!("toggling-{k}-{l}.csv"), &pattern.to_csv())?;
    println!("sequence: {}", seq_path.display());
    println!("pattern: {}", csv_path.display());
    println!("segments: {m}");
    println!("duration_ms: {:.6}", block.duration() * 1e3);
    Ok(())
}

fn prepare(a: PrepareArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    let state = prepare_state_on(&sys, a.target)?;
    let mut csv = String::from("pauli,coefficient\n");
    for (label, c) in state.pauli_coefficients().iter() {
        csv.push_str(&format!("{label},{c}\n"));
        println!("{label} {c}");
    }
    let path = out.csv(&format!("prepared-x{}.csv", a.target), &csv)?;
    println!("table: {}", path.display());
    Ok(())
}

fn sweep(a: SweepArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    let grid = parse_grid(&a.grid)?;
    if grid.is_empty() {
        return Err(Failure::config("invalid-parameter", "empty grid"));
    }
    four_body_target(0.0, a.j_eff)?;
    let mode: EvolutionMode = a.mode.into();
    let points = sweep_pi_jt(&sys, a.j_eff, &grid, mode, &a.errors.model()?)?;
    let path = out.csv(&format!("sweep-{}.csv", mode.as_str()), &sweep_csv(&points))?;
    println!("table: {}", path.display());
    if a.fit {
        let ys: Vec<f64> = points.iter().map(|p| p.expectation).collect();
        let result = fit_cosine(&grid, &ys)?;
        let rep = out.report(
            &format!("fit-sweep-{}.json", mode.as_str()),
            &result.to_json(),
        )?;
        print_fit(&result);
        println!("report: {}", rep.display());
    }
    Ok(())
}

fn spectrum(a: SpectrumArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    if a.npoints < 2 {
        return Err(Failure::config("invalid-parameter", "npoints must be >= 2"));
    }
    let initial = prepare_initial_state(&sys)?;
    let (center, half) = multiplet_window(&sys, 3)?;
    let reference_spec =
        fid_to_spectrum(&synthesize_fid(&initial, &sys, a.t2, a.dwell, a.npoints)?);
    let reference = integrate_multiplet(&reference_spec, center, half)?;
    for &n in &a.n {
        let target = FourBodyTarget::from_pi_jt(n as f64 * FRAC_PI_4, 1.0);
        let state = evolve_four_body(&initial, &sys, &target, a.mode.into(), &ErrorModel::IDEAL)?;
        let fid = synthesize_fid(&state, &sys, a.t2, a.dwell, a.npoints)?;
        let spec = fid_to_spectrum(&fid);
        let ratio = integrate_multiplet(&spec, center, half)? / reference;
        let path = out.csv(&format!("spectrum-n{n}.csv"), &spec.to_csv())?;
        if a.fid {
            out.csv(&format!("fid-n{n}.csv"), &fid.to_csv())?;
        }
        println!("n={n} ratio={ratio:.6} spectrum={}", path.display());
    }
    Ok(())
}

fn read_columns(a: &FitArgs) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let bad = |m: String| Failure::config("csv-parse", m);
    let mut reader = csv::Reader::from_path(&a.input).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name:?}")))
    };
    let (xi, yi) = (column(&a.x_column)?, column(&a.y_column)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let cell = |i: usize| -> Result<f64, Failure> {
            let text = record.get(i).unwrap_or_default();
            text.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: invalid number {text:?}", row + 2)))
        };
        xs.push(cell(xi)?);
        ys.push(cell(yi)?);
    }
    Ok((xs, ys))
}

fn print_fit(r: &isingc_core::spectro::FitResult) {
    println!(
        "A={:.6} b={:.6} residual={:e}",
        r.amplitude, r.frequency_scale, r.residual
    );
}

fn fit(a: FitArgs, out: &OutDir) -> CmdResult {
    let (xs, ys) = read_columns(&a)?;
    let result = fit_cosine(&xs, &ys)?;
    let stem = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    let path = out.report(&format!("fit-{stem}.json"), &result.to_json())?;
    print_fit(&result);
    println!("report: {}", path.display());
    Ok(())
}

fn report(a: ReportArgs, out: &OutDir) -> CmdResult {
    let sys = a.molecule.load()?;
    let err = a.errors.model()?;
    let full_turn = compile_four_body(
        &sys,
        &four_body_target(2.0 * std::f64::consts::PI, 1.0)?,
        Variant::A,
        FourBodyRealization::Refocused,
        1e-10,
        &CompileOptions::default(),
    )?;
    let prepared = prepare_initial_state(&sys)?;
    let table: serde_json::Map<String, serde_json::Value> = prepared
        .pauli_coefficients()
        .iter()
        .map(|(l, c)| (l.to_string(), json!(c)))
        .collect();
    let grid: Vec<f64> = (0..=8).map(|n| n as f64 * FRAC_PI_4).collect();
    let mut sweeps = serde_json::Map::new();
    let mut fits = serde_json::Map::new();
    for mode in EvolutionMode::ALL {
        let model = if mode == EvolutionMode::Analytic {
            ErrorModel::IDEAL
        } else {
            err
        };
        let pts = sweep_pi_jt(&sys, 1.0, &grid, mode, &model)?;
        let ys: Vec<f64> = pts.iter().map(|p| p.expectation).collect();
        let f = fit_cosine(&grid, &ys)?;
        out.csv(&format!("sweep-{}.csv", mode.as_str()), &sweep_csv(&pts))?;
        fits.insert(
            mode.as_str().into(),
            json!({"A": f.amplitude, "b": f.frequency_scale, "residual": f.residual}),
        );
        sweeps.insert(mode.as_str().into(), json!(ys));
    }
    let summary = json!({
        "molecule": sys.labels(),
        "error_model": {"angle_scale": err.angle_scale, "damping": err.damping},
        "program_at_2pi": {
            "instructions": full_turn.instruction_count,
            "duration_ms": full_turn.duration_s * 1e3,
            "deviation": full_turn.deviation,
            "corrected": full_turn.corrected,
        },
        "prepared_state": table,
        "pi_J_T": grid,
        "expectation_sx3": sweeps,
        "fit": fits,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    let path = out.report("summary.json", &text)?;
    println!(
        "program duration at piJT=2pi: {:.3} ms",
        full_turn.duration_s * 1e3
    );
    for (mode, f) in &fits {
        println!(
            "{mode}: A={:.6} b={:.6}",
            f["A"].as_f64().unwrap_or(f64::NAN),
            f["b"].as_f64().unwrap_or(f64::NAN)
        );
    }
    println!("report: {}", path.display());
    Ok(())
}
