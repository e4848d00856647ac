//! Command-line front end.

mod figures;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analytic::{
    chernoff_bound, pe_grouped_coding, pe_grouped_paired_coding, pe_iid_coding, pe_iid_majority,
    pe_paired_coding, pe_paired_majority, ExactPerfReport, Pairing,
};
use crate::codebook::{known, majority_equivalent_matrix, random_balanced_matrix, CodeMatrix, CodeMatrixFile};
use crate::crowd::{covariance_from_correlation, CrowdConfig, CrowdSpec, CrowdVariant, ReliabilityDist};
use crate::datasets::{dataset_matrix, evaluate_dataset, load_csv, DATASET_DESIGN_SEED};
use crate::design::{
    anneal_restarts, cyclic_column_replacement, AnnealMove, AnnealSchedule, ColumnSpace, DesignObjective,
    DesignOutcome,
};
use crate::error::{Error, Result};
use crate::fusion::GroupMap;
use crate::simkit::{
    exact_values, run_mc, sweep, write_sweep_csv, write_trace_csv, PartnerPlacement, ResamplePolicy, SimConfig,
    SweepAxis,
};

pub use figures::Figure;

#[derive(Debug, Parser)]
#[command(name = "crowdcode", version, about = "Coding-based fusion for crowdsourced classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Search for a code matrix by annealing and/or column replacement.
    Design(DesignArgs),
    /// Exact expected misclassification probability.
    EvalExact(EvalArgs),
    /// Large-deviations bound for fixed worker reliabilities.
    Bound(BoundArgs),
    /// Monte Carlo estimate for one configuration.
    Simulate(SimulateArgs),
    /// Monte Carlo and exact values along a parameter grid.
    Sweep(SweepArgs),
    /// Coding versus majority on a gold-labelled rating file.
    Dataset(DatasetArgs),
    /// Regenerate the data behind one of the reference figures.
    ReproduceFigure(FigureArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DistKind {
    SpammerHammer,
    Beta,
    /// Every worker has reliability `--p`.
    Constant,
}

/// Crowd description shared by the subcommands.
#[derive(Debug, Args, Serialize)]
struct CrowdArgs {
    /// Reliability distribution.
    #[arg(long, value_enum, default_value_t = DistKind::SpammerHammer)]
    model: DistKind,
    /// Spammer-hammer quality (fraction of hammers).
    #[arg(long, default_value_t = 0.8)]
    q: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Reliability for `--model constant`.
    #[arg(long, default_value_t = 0.9)]
    p: f64,
    /// Dependence model; inferred from --rho-corr/--kappa when omitted.
    #[arg(long, value_enum)]
    variant: Option<CrowdVariant>,
    /// Partner correlation coefficient.
    #[arg(long, allow_hyphen_values = true)]
    rho_corr: Option<f64>,
    /// Stick-breaking concentration.
    #[arg(long)]
    kappa: Option<f64>,
    /// Stick-breaking truncation level.
    #[arg(long)]
    truncation: Option<usize>,
    /// JSON crowd description; overrides the flags above.
    #[arg(long)]
    crowd: Option<PathBuf>,
}

impl CrowdArgs {
    fn config(&self, m: usize) -> Result<CrowdConfig> {
        if let Some(path) = &self.crowd {
            return Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?);
        }
        let dist = match self.model {
            DistKind::SpammerHammer => ReliabilityDist::spammer_hammer(self.q, m),
            DistKind::Beta => ReliabilityDist::Beta {
                alpha: self.alpha,
                beta: self.beta,
            },
            DistKind::Constant => ReliabilityDist::constant(self.p),
        };
        let variant = self.variant.unwrap_or(match (self.rho_corr.is_some(), self.kappa.is_some()) {
            (false, false) => CrowdVariant::Iid,
            (true, false) => CrowdVariant::Paired,
            (false, true) => CrowdVariant::LatentGroups,
            (true, true) => CrowdVariant::LatentGroupsPaired,
        });
        Ok(CrowdConfig {
            variant,
            dist,
            rho_corr: self.rho_corr,
            kappa: self.kappa,
            truncation: self.truncation,
        })
    }

    fn spec(&self, m: usize) -> Result<CrowdSpec> {
        self.config(m)?.to_spec()
    }
}

/// Where the code matrix comes from.
#[derive(Debug, Args, Serialize)]
struct MatrixArgs {
    /// JSON matrix file, or one of `m4n10`, `m8n15`, `majority`, `random`,
    /// `design` (the last three use --m and --n).
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Concatenate the matrix with itself this many times.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

impl MatrixArgs {
    fn shape(&self) -> Result<(usize, usize)> {
        match (self.m, self.n) {
            (Some(m), Some(n)) => Ok((m, n)),
            _ => Err(Error::param("--m and --n are required for this matrix source")),
        }
    }

    /// The matrix and, for file input, `(path, sha256)`.
    fn resolve(&self, seed: u64) -> Result<(CodeMatrix, Option<(PathBuf, String)>)> {
        let spec = self
            .matrix
            .as_deref()
            .ok_or_else(|| Error::param("--matrix is required"))?;
        let mut input = None;
        let base = match spec {
            "m4n10" => CodeMatrix::from_column_ints(&known::M4_N10, 4)?,
            "m8n15" => CodeMatrix::from_column_ints(&known::M8_N15, 8)?,
            "majority" => {
                let (m, n) = self.shape()?;
                majority_equivalent_matrix(m, n)?
            }
            "random" => {
                let (m, n) = self.shape()?;
                random_balanced_matrix(m, n, seed)?
            }
            "design" => {
                let (m, n) = self.shape()?;
                dataset_matrix(m, n, seed)?
            }
            path => {
                let text = std::fs::read(path)?;
                input = Some((PathBuf::from(path), sha256_hex(&text)));
                CodeMatrix::from_json(std::str::from_utf8(&text).map_err(|e| Error::param(e.to_string()))?)?
            }
        };
        let a = if self.repeat == 1 { base } else { base.concatenate(self.repeat)? };
        if let Some(m) = self.m.filter(|&m| m != a.num_classes()) {
            return Err(Error::param(format!("--m {m} contradicts the matrix ({} rows)", a.num_classes())));
        }
        if let Some(n) = self.n.filter(|&n| n != a.num_workers()) {
            return Err(Error::param(format!("--n {n} contradicts the matrix ({} columns)", a.num_workers())));
        }
        Ok((a, input))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DesignMethod {
    Anneal,
    Ccr,
    /// Annealing followed by column replacement.
    Both,
}

#[derive(Debug, Args, Serialize)]
struct DesignArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    crowd: CrowdArgs,
    #[arg(long, value_enum, default_value_t = DesignMethod::Anneal)]
    method: DesignMethod,
    #[arg(long, default_value_t = 0.1)]
    t0: f64,
    #[arg(long, default_value_t = 0.95)]
    cooling: f64,
    /// Moves per temperature (default 50 N).
    #[arg(long)]
    moves: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    t_min: f64,
    #[arg(long, value_enum, default_value_t = MoveArg::FlipBit)]
    move_kind: MoveArg,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Column candidates for replacement.
    #[arg(long, value_enum, default_value_t = SpaceArg::Balanced)]
    space: SpaceArg,
    /// Starting matrix for `--method ccr` (default: seeded random balanced).
    #[arg(long)]
    start: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MoveArg {
    FlipBit,
    ResampleBalancedColumn,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SpaceArg {
    Balanced,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Fusion {
    Coding,
    Majority,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long, value_enum, default_value_t = Fusion::Coding)]
    fusion: Fusion,
    /// Mean reliability (default: mean of the crowd flags).
    #[arg(long)]
    mu: Option<f64>,
    /// Pair covariance; alternatively --rho-corr with the crowd flags.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[command(flatten)]
    crowd: CrowdArgs,
    /// Print the full JSON report instead of the bare value.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BoundArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Common reliability of every worker.
    #[arg(long)]
    mu: Option<f64>,
    /// Comma-separated per-worker reliabilities.
    #[arg(long, value_delimiter = ',')]
    reliabilities: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ResamplePolicy::ReliabilitiesPerTrial)]
    resample: ResamplePolicy,
    #[arg(long, value_enum, default_value_t = PartnerPlacement::SameBitGroup)]
    placement: PartnerPlacement,
    /// Skip bitwise majority voting.
    #[arg(long)]
    no_majority: bool,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    crowd: CrowdArgs,
    #[command(flatten)]
    mc: McArgs,
    /// Per-trial trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    crowd: CrowdArgs,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long, value_enum)]
    axis: SweepAxis,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    grid: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DatasetArgs {
    /// Rating file with header task_id,gold,w1,...,wN.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// JSON matrix file or `design`.
    #[arg(long, default_value = "design")]
    matrix: String,
    /// Name reported for the dataset (default: file stem).
    #[arg(long)]
    name: Option<String>,
    /// Seed for tie-breaks.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Seed of the design run for `--matrix design`.
    #[arg(long, default_value_t = DATASET_DESIGN_SEED)]
    design_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FigureArgs {
    #[arg(value_enum)]
    figure: Figure,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Record of one run: enough to regenerate its outputs from flags alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// `(path, sha256)` of every input file.
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<PathBuf>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Manifest path for an output file: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

struct Run<'a> {
    command: &'a Command,
    seed: Option<u64>,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<PathBuf>,
}

impl Run<'_> {
    /// Writes `bytes` to `out`, or to stdout without one.
    fn emit(&mut self, out: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match out {
            Some(path) => {
                std::fs::write(path, bytes)?;
                self.outputs.push(path.to_path_buf());
            }
            None => std::io::stdout().write_all(bytes)?,
        }
        Ok(())
    }

    fn finish(self, out: Option<&Path>) -> Result<()> {
        let Some(out) = out else { return Ok(()) };
        let params = serde_json::to_value(self.command)?;
        let subcommand = params
            .as_object()
            .and_then(|o| o.keys().next().cloned())
            .unwrap_or_default();
        let manifest = RunManifest {
            subcommand,
            params,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        std::fs::write(manifest_path(out), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

/// Parses `args` and runs the subcommand; returns the process exit code
/// (0 success, 2 invalid input or usage, 1 runtime failure).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    let mut run = Run {
        command,
        seed: None,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let out = match command {
        Command::Design(a) => design(a, &mut run)?,
        Command::EvalExact(a) => eval_exact(a, &mut run)?,
        Command::Bound(a) => bound(a, &mut run)?,
        Command::Simulate(a) => simulate(a, &mut run)?,
        Command::Sweep(a) => sweep_cmd(a, &mut run)?,
        Command::Dataset(a) => dataset(a, &mut run)?,
        Command::ReproduceFigure(a) => figure(a, &mut run)?,
    };
    run.finish(out)
}

fn read_matrix_file(path: &Path, run: &mut Run) -> Result<CodeMatrix> {
    let text = std::fs::read(path)?;
    run.inputs.push((path.to_path_buf(), sha256_hex(&text)));
    CodeMatrix::from_json(std::str::from_utf8(&text).map_err(|e| Error::param(e.to_string()))?)
}

fn resolve_matrix(args: &MatrixArgs, seed: u64, run: &mut Run) -> Result<CodeMatrix> {
    let (a, input) = args.resolve(seed)?;
    run.inputs.extend(input);
    Ok(a)
}

fn design<'a>(args: &'a DesignArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    run.seed = Some(args.seed);
    let spec = args.crowd.spec(args.m)?;
    let objective = DesignObjective::from_crowd(&spec)?;
    let schedule = AnnealSchedule {
        initial_temperature: args.t0,
        cooling: args.cooling,
        moves_per_temperature: args.moves.unwrap_or(50 * args.n),
        min_temperature: args.t_min,
        seed: args.seed,
        moves: match args.move_kind {
            MoveArg::FlipBit => AnnealMove::FlipBit,
            MoveArg::ResampleBalancedColumn => AnnealMove::ResampleBalancedColumn,
        },
    };
    let space = match args.space {
        SpaceArg::Balanced => ColumnSpace::Balanced,
        SpaceArg::All => ColumnSpace::All,
    };
    let outcome: DesignOutcome = match args.method {
        DesignMethod::Anneal => anneal_restarts(args.m, args.n, &objective, &schedule, args.restarts)?,
        DesignMethod::Ccr => {
            let start = match &args.start {
                Some(path) => read_matrix_file(path, run)?,
                None => random_balanced_matrix(args.m, args.n, args.seed)?,
            };
            cyclic_column_replacement(start, &objective, space)?
        }
        DesignMethod::Both => {
            let annealed = anneal_restarts(args.m, args.n, &objective, &schedule, args.restarts)?;
            let mut polished = cyclic_column_replacement(annealed.matrix, &objective, space)?;
            let mut trace = annealed.trace;
            trace.extend(polished.trace.into_iter().skip(1));
            polished.trace = trace;
            polished
        }
    };
    let file = CodeMatrixFile {
        m: args.m,
        columns: outcome.matrix.to_column_ints(),
        metadata: Some(json!({
            "objective": outcome.objective,
            "objective_kind": objective,
            "method": args.method,
            "schedule": schedule,
            "restarts": args.restarts,
            "space": space,
            "seed": args.seed,
            "crowd": args.crowd.config(args.m)?,
            "fingerprint": outcome.matrix.fingerprint(),
            "trace": outcome.trace,
        })),
    };
    run.emit(args.out.as_deref(), (serde_json::to_string_pretty(&file)? + "\n").as_bytes())?;
    Ok(args.out.as_deref())
}

fn eval_exact<'a>(args: &'a EvalArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    let config = args.crowd.config(args.matrix.m.unwrap_or(4).max(2))?;
    let mu = args.mu.unwrap_or(config.dist.mean());
    let rho = match (args.rho, args.crowd.rho_corr) {
        (Some(rho), _) => Some(rho),
        (None, Some(c)) => Some(covariance_from_correlation(&config.dist, c)?),
        (None, None) => None,
    };
    let report: ExactPerfReport = match args.fusion {
        Fusion::Coding => {
            let a = resolve_matrix(&args.matrix, args.seed, run)?;
            let n = a.num_workers();
            match (rho, args.crowd.kappa) {
                (None, None) => pe_iid_coding(&a, mu)?,
                (Some(rho), None) => pe_paired_coding(&a, mu, rho, &Pairing::adjacent(n)?)?,
                (None, Some(kappa)) => pe_grouped_coding(&a, mu, kappa, args.crowd.truncation.unwrap_or(2))?,
                (Some(rho), Some(kappa)) => pe_grouped_paired_coding(
                    &a,
                    mu,
                    rho,
                    kappa,
                    args.crowd.truncation.unwrap_or(2),
                    &Pairing::adjacent(n)?,
                )?,
            }
        }
        Fusion::Majority => {
            let (m, n) = args.matrix.shape()?;
            if args.crowd.kappa.is_some() {
                return Err(Error::param("no exact majority evaluator for latent-group crowds; use simulate"));
            }
            match rho {
                None => pe_iid_majority(m, n, mu)?,
                Some(rho) => pe_paired_majority(m, n, mu, rho)?,
            }
        }
    };
    let text = if args.json || args.out.is_some() {
        serde_json::to_string_pretty(&report)? + "\n"
    } else {
        format!("{}\n", report.value)
    };
    run.emit(args.out.as_deref(), text.as_bytes())?;
    Ok(args.out.as_deref())
}

fn bound<'a>(args: &'a BoundArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    let a = resolve_matrix(&args.matrix, args.seed, run)?;
    let p = match (&args.reliabilities, args.mu) {
        (Some(p), _) => p.clone(),
        (None, Some(mu)) => vec![mu; a.num_workers()],
        (None, None) => return Err(Error::param("give --mu or --reliabilities")),
    };
    let report = chernoff_bound(&a, &p)?;
    run.emit(args.out.as_deref(), (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    Ok(args.out.as_deref())
}

fn sim_config(matrix: &MatrixArgs, crowd: &CrowdArgs, mc: &McArgs, run: &mut Run) -> Result<SimConfig> {
    run.seed = Some(mc.seed);
    let a = resolve_matrix(matrix, mc.seed, run)?;
    let spec = crowd.spec(a.num_classes())?;
    let mut config = SimConfig::new(a, spec, mc.trials, mc.seed);
    config.majority &= !mc.no_majority;
    config.resample = mc.resample;
    config.placement = mc.placement;
    Ok(config)
}

fn simulate<'a>(args: &'a SimulateArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    let mut config = sim_config(&args.matrix, &args.crowd, &args.mc, run)?;
    config.record_trace = args.trace.is_some();
    let result = run_mc(&config)?;
    let (code_exact, maj_exact, _) = exact_values(&config)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let io = |e: csv::Error| Error::param(format!("CSV output failed: {e}"));
    w.write_record(["fusion", "errors", "trials", "pe", "stderr", "exact"]).map_err(io)?;
    for (name, est, exact) in [("coding", result.coding, code_exact), ("majority", result.majority, maj_exact)] {
        if let Some(e) = est {
            w.write_record([
                name.to_string(),
                e.errors.to_string(),
                e.trials.to_string(),
                e.pe.to_string(),
                e.stderr.to_string(),
                cell(exact),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::param(e.to_string()))?;
    if let (Some(path), Some(rows)) = (&args.trace, &result.trace) {
        write_trace_csv(rows, std::fs::File::create(path)?)?;
        run.outputs.push(path.clone());
    }
    run.emit(args.out.as_deref(), &bytes)?;
    Ok(args.out.as_deref())
}

fn sweep_cmd<'a>(args: &'a SweepArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    let config = sim_config(&args.matrix, &args.crowd, &args.mc, run)?;
    let rows = sweep(&config, args.axis, &args.grid)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, None, &mut buf)?;
    run.emit(args.out.as_deref(), &buf)?;
    Ok(args.out.as_deref())
}

fn dataset<'a>(args: &'a DatasetArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    run.seed = Some(args.seed);
    let bytes = std::fs::read(&args.csv)?;
    run.inputs.push((args.csv.clone(), sha256_hex(&bytes)));
    let records = load_csv(&args.csv)?;
    let n = records.first().ok_or(Error::EmptyDataset)?.workers.len();
    let a = if args.matrix == "design" {
        dataset_matrix(args.m, n, args.design_seed)?
    } else {
        read_matrix_file(Path::new(&args.matrix), run)?
    };
    if a.num_classes() != args.m {
        return Err(Error::param(format!("--m {} contradicts the matrix ({} rows)", args.m, a.num_classes())));
    }
    let name = args.name.clone().unwrap_or_else(|| {
        args.csv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let report = evaluate_dataset(&name, &records, &a, &GroupMap::contiguous(args.m, n)?, args.seed)?;
    run.emit(args.out.as_deref(), (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    Ok(args.out.as_deref())
}

fn figure<'a>(args: &'a FigureArgs, run: &mut Run) -> Result<Option<&'a Path>> {
    run.seed = Some(args.seed);
    let bytes = figures::reproduce(args.figure, args.trials, args.seed)?;
    run.emit(args.out.as_deref(), &bytes)?;
    Ok(args.out.as_deref())
}
