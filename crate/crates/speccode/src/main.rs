//! `speccode`: build codes from JSON specifications and run the distance,
//! threshold, fluctuation, and quantization experiments from one binary.
//!
//! Every subcommand reads a JSON config (`--config`), writes its artifacts
//! into a directory (`--out`), and exits 0 on success. Failures map to exit
//! codes by cause: 2 for configuration problems (unreadable file, schema
//! violation, unknown keys), 3 for requests outside an operation's domain
//! (rejected constructor inputs, incompatible dimensions), 4 for numerical
//! failures (a tolerance breached during computation).
//!
//! CSV artifacts are deterministic: fixed column order, `.` decimal,
//! 17 significant digits, no timestamps. Reruns with the same config and
//! seed produce identical bytes. Runtimes and seeds are recorded in the
//! JSON reports only.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use spectral_codes::channels::{threshold_estimate, threshold_sweep, sweep_csv, Decoder};
use spectral_codes::channels::{noise_family, verify_poor_decoder_expansion};
use spectral_codes::codes::{classical_code, gkp_discrete, stabilizer_code, toric_code_z2};
use spectral_codes::crossed::{
    compute_w_set, pauli_string_matrix, AbelianGroup, Cocycle, WeightFunction,
    WeylRepresentation,
};
use spectral_codes::fluctuations::{
    gap_sweep_csv, leakage_gap_sweep, perturbation_spec, SweepMode,
};
use spectral_codes::metric::{DiscreteMetricTriple, SolverOptions};
use spectral_codes::operators::{identity, CodeProjection, HermitianOperator};
use spectral_codes::quantization::{axiom_csv, build_quantizer, verify_axioms, SphereFunction};
use spectral_codes::Error as LibError;

// ---------------------------------------------------------------------------
// argument surface

#[derive(Parser)]
#[command(name = "speccode", version, about = "Spectral-code experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code and report its spectrum, W-set size, and distance.
    Code(RunArgs),
    /// Sweep a noise family over a strength grid and fit the threshold map.
    Threshold(RunArgs),
    /// Open the spectral gap along a lambda grid and report the bound chain.
    Fluctuation(RunArgs),
    /// Quantize sphere functions and tabulate the axiom defects over flux.
    Bt(RunArgs),
    /// Tabulate Connes distances between the points of a weighted group.
    Distance(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Random seed; overrides the config's `seed` field.
    #[arg(long)]
    seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// failure taxonomy

enum CliError {
    /// Unusable invocation or config document; exit 2.
    Config(String),
    /// Library rejection; exit 3 for domain errors, 4 for numerical ones.
    Lib(LibError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Lib(e) if e.is_numerical() => 4,
            CliError::Lib(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Lib(err) => write!(f, "{err}"),
        }
    }
}

impl From<LibError> for CliError {
    fn from(err: LibError) -> Self {
        CliError::Lib(err)
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Code(args) => cmd_code(args),
        Command::Threshold(args) => cmd_threshold(args),
        Command::Fluctuation(args) => cmd_fluctuation(args),
        Command::Bt(args) => cmd_bt(args),
        Command::Distance(args) => cmd_distance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

// ---------------------------------------------------------------------------
// config plumbing

fn load_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn parse_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let value = load_json(path)?;
    serde_json::from_value(value)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))
}

/// The seed actually used: the `--seed` flag wins over the config field,
/// and absent both the run is seeded with 0.
fn resolve_seed(flag: Option<u64>, field: Option<u64>) -> u64 {
    flag.or(field).unwrap_or(0)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| config_error(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| config_error(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn pretty(report: &Value) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// code specifications
//
// The four shapes share a `kind` discriminant:
//   {"kind": "stabilizer", "n": 5, "generators": ["XZZXI", ...]}
//   {"kind": "classical",  "n": 7, "generators": [[1,0,...], ...]}
//   {"kind": "gkp",        "M": 8}
//   {"kind": "toric",      "lx": 2, "ly": 2}
// The discriminant is split off by hand so every variant can reject unknown
// keys with the offending field named.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilizerFields {
    n: usize,
    generators: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassicalFields {
    n: usize,
    generators: Vec<Vec<u8>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GkpFields {
    #[serde(rename = "M")]
    truncation: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToricFields {
    lx: u32,
    ly: u32,
}

/// A constructed code with the group data its Weyl scans run over.
struct BuiltCode {
    kind: &'static str,
    dirac: HermitianOperator,
    projection: CodeProjection,
    distance: f64,
    group: AbelianGroup,
    rep: WeylRepresentation,
}

fn parse_variant<T: serde::de::DeserializeOwned>(
    kind: &str,
    fields: Map<String, Value>,
) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(fields))
        .map_err(|e| config_error(format!("{kind} code specification: {e}")))
}

fn build_code(raw: &Value) -> Result<BuiltCode, CliError> {
    let obj = raw
        .as_object()
        .ok_or_else(|| config_error("code specification must be a JSON object"))?;
    let mut fields = obj.clone();
    let kind = match fields.remove("kind") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(config_error("code specification field \"kind\" must be a string")),
        None => return Err(config_error("code specification is missing the \"kind\" field")),
    };
    match kind.as_str() {
        "stabilizer" => {
            let spec: StabilizerFields = parse_variant(&kind, fields)?;
            let gens: Vec<&str> = spec.generators.iter().map(String::as_str).collect();
            let inst = stabilizer_code(spec.n, &gens)?;
            Ok(BuiltCode {
                kind: "stabilizer",
                dirac: inst.dirac,
                projection: inst.projection,
                distance: inst.distance,
                group: AbelianGroup::SymplecticBitVectors(spec.n),
                rep: WeylRepresentation::QubitPauli,
            })
        }
        "classical" => {
            let spec: ClassicalFields = parse_variant(&kind, fields)?;
            let inst = classical_code(spec.n, &spec.generators)?;
            let group = AbelianGroup::BitVectors(spec.n);
            let rep = WeylRepresentation::Regular(Cocycle::trivial(group.clone()));
            Ok(BuiltCode {
                kind: "classical",
                dirac: inst.code.dirac,
                projection: inst.projection,
                distance: inst.distance,
                group,
                rep,
            })
        }
        "gkp" => {
            let spec: GkpFields = parse_variant(&kind, fields)?;
            let inst = gkp_discrete(spec.truncation)?;
            let group = AbelianGroup::torus(spec.truncation)?;
            let rep = WeylRepresentation::Regular(Cocycle::standard(group.clone()));
            Ok(BuiltCode {
                kind: "gkp",
                dirac: inst.dirac,
                projection: inst.projection,
                distance: inst.distance,
                group,
                rep,
            })
        }
        "toric" => {
            let spec: ToricFields = parse_variant(&kind, fields)?;
            let inst = toric_code_z2(spec.lx, spec.ly)?;
            let group = AbelianGroup::SymplecticBitVectors(inst.lattice.n_edges);
            Ok(BuiltCode {
                kind: "toric",
                dirac: inst.dirac,
                projection: inst.projection,
                distance: inst.distance,
                group,
                rep: WeylRepresentation::QubitPauli,
            })
        }
        other => Err(config_error(format!(
            "unknown code kind \"{other}\"; known kinds: stabilizer, classical, gkp, toric"
        ))),
    }
}

// ---------------------------------------------------------------------------
// code: spectral report

fn cmd_code(args: &RunArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut root = load_json(&args.config)?;
    let seed_field = take_seed_field(&mut root)?;
    let seed = resolve_seed(args.seed, seed_field);

    let built = build_code(&root)?;
    let spectrum = built.dirac.spectrum();
    // the exhaustive scan refuses oversized groups; report null in that case
    let w_set_size = match compute_w_set(&built.projection, &built.group, &built.rep) {
        Ok(w) => Some(w.len()),
        Err(LibError::Domain(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let report = json!({
        "kind": built.kind,
        "hilbert_dim": built.dirac.dim(),
        "kernel_dim": spectrum.kernel_dim,
        "eigenvalues": spectrum.eigenvalues,
        "multiplicities": spectrum.multiplicities,
        "spectral_gap": spectrum.gap,
        "distance": built.distance,
        "w_set_size": w_set_size,
        "seed": seed,
        "runtime_ms": started.elapsed().as_millis() as u64,
    });
    write_artifact(&args.out, "report.json", &pretty(&report))
}

/// Pull an optional top-level `seed` out of a code-spec document so the
/// remaining keys can be schema-checked as the specification alone.
fn take_seed_field(root: &mut Value) -> Result<Option<u64>, CliError> {
    let obj = root
        .as_object_mut()
        .ok_or_else(|| config_error("config must be a JSON object"))?;
    match obj.remove("seed") {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| config_error("\"seed\" must be a nonnegative integer")),
    }
}

// ---------------------------------------------------------------------------
// threshold: noise sweep + fit

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdConfig {
    code: Value,
    /// Error generators as Pauli strings over the code's qubits.
    noise: Vec<String>,
    /// Optional real amplitude per generator; defaults to 1.
    #[serde(default)]
    amplitudes: Option<Vec<f64>>,
    thetas: Vec<f64>,
    decoder: DecoderSpec,
    /// Start of the iterated map trace; defaults to the largest grid point.
    #[serde(default)]
    theta0: Option<f64>,
    /// Number of iteration steps; defaults to 32.
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum DecoderSpec {
    Petz,
    Poor,
    PetzThenExpectation { low_dim: usize, high_dim: usize },
}

impl DecoderSpec {
    fn to_decoder(&self) -> Decoder {
        match self {
            DecoderSpec::Petz => Decoder::Petz,
            DecoderSpec::Poor => Decoder::Poor,
            DecoderSpec::PetzThenExpectation { low_dim, high_dim } => {
                Decoder::PetzThenExpectation { low_dim: *low_dim, high_dim: *high_dim }
            }
        }
    }
}

fn pauli_errors(
    strings: &[String],
    amplitudes: Option<&[f64]>,
) -> Result<Vec<spectral_codes::operators::CMat>, CliError> {
    if strings.is_empty() {
        return Err(config_error("\"noise\" needs at least one Pauli string"));
    }
    if let Some(amps) = amplitudes {
        if amps.len() != strings.len() {
            return Err(config_error(format!(
                "{} amplitudes for {} noise generators",
                amps.len(),
                strings.len()
            )));
        }
    }
    let mut errors = Vec::with_capacity(strings.len());
    for (i, s) in strings.iter().enumerate() {
        let mut m = pauli_string_matrix(s)?;
        if let Some(amps) = amplitudes {
            m.scale_mut(amps[i]);
        }
        errors.push(m);
    }
    Ok(errors)
}

fn cmd_threshold(args: &RunArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg: ThresholdConfig = parse_config(&args.config)?;
    let seed = resolve_seed(args.seed, cfg.seed);
    if cfg.thetas.len() < 4 {
        return Err(config_error(format!(
            "\"thetas\" needs at least 4 grid points for the fit, got {}",
            cfg.thetas.len()
        )));
    }

    let built = build_code(&cfg.code)?;
    let errors = pauli_errors(&cfg.noise, cfg.amplitudes.as_deref())?;
    let noise = noise_family(errors)?;
    let p = &built.projection;
    let sigma = p.matrix() / spectral_codes::operators::c(p.rank() as f64, 0.0);
    let decoder = cfg.decoder.to_decoder();

    let rows = threshold_sweep(&sigma, p, &noise, &cfg.thetas, &decoder)?;
    write_artifact(&args.out, "sweep.csv", &sweep_csv(&rows))?;

    let samples: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let theta0 = cfg.theta0.unwrap_or_else(|| {
        cfg.thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    });
    let steps = cfg.steps.unwrap_or(32);
    let fit = threshold_estimate(&cfg.thetas, &samples, theta0, steps)?;

    // the second-order certificate only exists for the randomizing decoder,
    // and its grid must stay inside the small-noise window
    let expansion = if matches!(decoder, Decoder::Poor)
        && cfg.thetas.iter().all(|&t| t <= 1e-2)
    {
        Some(verify_poor_decoder_expansion(p, &noise, &cfg.thetas)?)
    } else {
        None
    };

    // non-finite numbers serialize as null; `theta_th` is null when the
    // fitted map is subcritical with no quadratic term, `expansion_slope`
    // when the remainder sits at the floating-point floor
    let report = json!({
        "k": fit.k,
        "gamma": fit.gamma,
        "theta_th": fit.theta_th,
        "max_residual": fit.max_residual,
        "clipped": fit.clipped,
        "theta0": theta0,
        "iteration": fit.iteration,
        "monotone_decreasing": fit.monotone_decreasing,
        "expansion_slope": expansion.as_ref().map(|e| e.slope),
        "expansion_at_floor": expansion.as_ref().map(|e| e.at_floor),
        "seed": seed,
        "runtime_ms": started.elapsed().as_millis() as u64,
    });
    write_artifact(&args.out, "fit.json", &pretty(&report))
}

// ---------------------------------------------------------------------------
// fluctuation: gap sweep

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FluctuationConfig {
    code: Value,
    /// The fixed error operator, as a Pauli string.
    error: String,
    theta: f64,
    lambdas: Vec<f64>,
    #[serde(default)]
    mode: ModeSpec,
    /// Accepted for interface uniformity; this command has no randomness.
    #[serde(default)]
    #[allow(dead_code)]
    seed: Option<u64>,
}

#[derive(Deserialize, Clone, Copy, Default)]
#[serde(rename_all = "snake_case")]
enum ModeSpec {
    #[default]
    Raw,
    NormalizedCommutator,
}

impl ModeSpec {
    fn to_mode(self) -> SweepMode {
        match self {
            ModeSpec::Raw => SweepMode::Raw,
            ModeSpec::NormalizedCommutator => SweepMode::NormalizedCommutator,
        }
    }
}

fn cmd_fluctuation(args: &RunArgs) -> Result<(), CliError> {
    let cfg: FluctuationConfig = parse_config(&args.config)?;
    let built = build_code(&cfg.code)?;
    let error = pauli_string_matrix(&cfg.error)?;

    // gap opener: the complement projection, scaled by lambda downstream;
    // it commutes with P, vanishes on the code, and is bounded below by 1
    // on the complement
    let dim = built.projection.dim();
    let v = HermitianOperator::new(identity(dim) - built.projection.matrix())?;
    let spec = perturbation_spec(v, built.projection.clone(), 1.0)?;

    let report = leakage_gap_sweep(
        &built.dirac,
        &spec,
        &error,
        cfg.theta,
        &cfg.lambdas,
        cfg.mode.to_mode(),
    )?;
    write_artifact(&args.out, "sweep.csv", &gap_sweep_csv(&report))
}

// ---------------------------------------------------------------------------
// bt: quantization defect table

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BtConfig {
    /// Flux values, strictly increasing, at least 3.
    p_list: Vec<usize>,
    /// Quadrature order is `p + order_margin`; defaults to 8.
    #[serde(default)]
    order_margin: Option<usize>,
    f: String,
    g: String,
    /// Accepted for interface uniformity; this command has no randomness.
    #[serde(default)]
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn sphere_function(name: &str) -> Result<SphereFunction, CliError> {
    match name {
        "one" => Ok(SphereFunction::constant(1.0)),
        "x" => Ok(SphereFunction::x()),
        "y" => Ok(SphereFunction::y()),
        "z" => Ok(SphereFunction::z()),
        "north_bump" => Ok(SphereFunction::bump(PI / 6.0, PI / 6.0)),
        "south_bump" => Ok(SphereFunction::bump(5.0 * PI / 6.0, PI / 6.0)),
        other => Err(config_error(format!(
            "unknown sphere function \"{other}\"; known: one, x, y, z, north_bump, south_bump"
        ))),
    }
}

fn cmd_bt(args: &RunArgs) -> Result<(), CliError> {
    let cfg: BtConfig = parse_config(&args.config)?;
    let f = sphere_function(&cfg.f)?;
    let g = sphere_function(&cfg.g)?;
    let margin = cfg.order_margin.unwrap_or(8);

    let mut quantizers = Vec::with_capacity(cfg.p_list.len());
    for &p in &cfg.p_list {
        quantizers.push(build_quantizer(p, p + margin)?);
    }
    let table = verify_axioms(&quantizers, &f, &g)?;
    write_artifact(&args.out, "defects.csv", &axiom_csv(&table))
}

// ---------------------------------------------------------------------------
// distance: pairwise Connes distances

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistanceConfig {
    group: GroupSpec,
    /// Also run the convex solver and emit its column next to the closed form.
    #[serde(default)]
    general: bool,
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    iterations: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum GroupSpec {
    /// Bit vectors with Hamming weight: `{"bits": 3}`.
    Bits(usize),
    /// Symplectic pairs with Pauli weight: `{"symplectic_bits": 2}`.
    SymplecticBits(usize),
    /// `Z_M x Z_M` with wrapped Manhattan weight: `{"torus": 4}`.
    Torus(u32),
}

impl GroupSpec {
    fn to_group(&self) -> Result<AbelianGroup, CliError> {
        match self {
            GroupSpec::Bits(n) => Ok(AbelianGroup::BitVectors(*n)),
            GroupSpec::SymplecticBits(n) => Ok(AbelianGroup::SymplecticBitVectors(*n)),
            GroupSpec::Torus(m) => Ok(AbelianGroup::torus(*m)?),
        }
    }
}

/// Component labels contain commas, so the label columns are quoted.
fn csv_quote(label: &str) -> String {
    format!("\"{label}\"")
}

fn cmd_distance(args: &RunArgs) -> Result<(), CliError> {
    let cfg: DistanceConfig = parse_config(&args.config)?;
    let seed = resolve_seed(args.seed, cfg.seed);
    let group = cfg.group.to_group()?;
    let weight = WeightFunction::standard(&group);
    let triple = DiscreteMetricTriple::from_group(&group, &weight)?;
    let closed = triple.closed_distance_matrix();
    let labels = triple.labels();

    let general = if cfg.general {
        let defaults = SolverOptions::default();
        let opts = SolverOptions {
            restarts: cfg.restarts.unwrap_or(defaults.restarts),
            iterations: cfg.iterations.unwrap_or(defaults.iterations),
            seed,
        };
        let fst = triple.to_spectral_triple()?;
        let mut values = Vec::new();
        for (i, j, _) in triple.pairs() {
            values.push(fst.connes_distance_general(&labels[i], &labels[j], &opts)?.value);
        }
        Some(values)
    } else {
        None
    };

    let mut csv = String::from(if general.is_some() {
        "x,y,closed,general\n"
    } else {
        "x,y,closed\n"
    });
    for (row, (i, j, _)) in triple.pairs().into_iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{:.16e}",
            csv_quote(&labels[i]),
            csv_quote(&labels[j]),
            closed[i][j]
        ));
        if let Some(values) = &general {
            csv.push_str(&format!(",{:.16e}", values[row]));
        }
        csv.push('\n');
    }
    write_artifact(&args.out, "distances.csv", &csv)
}
