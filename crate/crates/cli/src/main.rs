//! `cajaccard` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors (unknown flags, flags that do
//! not apply to the chosen method), 2 for runtime failures (I/O, malformed
//! input, invalid data). Every failure prints a single diagnostic line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cajaccard::clustering::{dbscan, ClusterAssignment, DbscanParams};
use cajaccard::distance::{original_distance, pairwise_distance, Metric};
use cajaccard::eval::{cluster_agreement, evaluate, neighbor_stats, RetrievalReport};
use cajaccard::io::{
    read_features, read_labels, read_matrix, write_features, write_labels, write_matrix,
    MatrixFormat,
};
use cajaccard::pipeline::{expanded_vectors, rerank, run, PipelineRequest};
use cajaccard::synth::{generate, SynthConfig};
use cajaccard::{
    CaJaccardParams, DistanceKind, DistanceMatrix, EncodingPlan, Features, JaccardParams, Method,
    SampleMeta,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cajaccard", version, about = "Camera-aware Jaccard distance toolkit")]
struct Cli {
    /// Worker threads (defaults to one per core). Output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Original (cosine or Euclidean) distance matrix.
    Distance(DistanceArgs),
    /// Baseline k-reciprocal Jaccard distance over all samples.
    Jaccard(EncodeArgs),
    /// Camera-aware Jaccard distance over all samples.
    Cajaccard(EncodeArgs),
    /// Query-versus-gallery re-ranking, with evaluation when identities are known.
    Rerank(RerankArgs),
    /// DBSCAN over a Jaccard-like distance matrix.
    Cluster(ClusterArgs),
    /// mAP and CMC of a query-by-gallery distance matrix.
    Eval(EvalArgs),
    /// Neighbor statistics and parameter sweeps as CSV.
    Stats(StatsArgs),
    /// Generate a synthetic camera-biased feature set.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => Metric::Cosine,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => MatrixFormat::Binary,
            FormatArg::Csv => MatrixFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Jaccard,
    Cajaccard,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Feature file (CAJF binary).
    #[arg(long)]
    features: PathBuf,
    /// Label CSV with header `index,camera[,identity]`.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cosine")]
    metric: MetricArg,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output path for the distance matrix.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "binary")]
    format: FormatArg,
}

/// Neighborhood sizes. Unset flags take the default values; which flags
/// are accepted depends on the method.
#[derive(Debug, Args, Default)]
struct ParamArgs {
    /// Intra-camera reciprocal neighborhood size [default: 5].
    #[arg(long)]
    k1_intra: Option<usize>,
    /// Inter-camera reciprocal neighborhood size [default: 20].
    #[arg(long)]
    k1_inter: Option<usize>,
    /// Intra-camera expansion size [default: 2].
    #[arg(long)]
    k2_intra: Option<usize>,
    /// Inter-camera expansion size [default: 4].
    #[arg(long)]
    k2_inter: Option<usize>,
    /// Baseline reciprocal neighborhood size [default: 20].
    #[arg(long)]
    k1: Option<usize>,
    /// Baseline expansion size [default: 6].
    #[arg(long)]
    k2: Option<usize>,
}

impl ParamArgs {
    fn camera_aware(&self) -> CaJaccardParams {
        let d = CaJaccardParams::default();
        CaJaccardParams {
            k1_intra: self.k1_intra.unwrap_or(d.k1_intra),
            k1_inter: self.k1_inter.unwrap_or(d.k1_inter),
            k2_intra: self.k2_intra.unwrap_or(d.k2_intra),
            k2_inter: self.k2_inter.unwrap_or(d.k2_inter),
        }
    }

    fn baseline(&self) -> JaccardParams {
        let d = JaccardParams::default();
        JaccardParams {
            k1: self.k1.unwrap_or(d.k1),
            k2: self.k2.unwrap_or(d.k2),
        }
    }

    /// Resolve the parameter block of `method`, rejecting flags that belong
    /// to the other method.
    fn method(&self, method: MethodArg, command: &str) -> Result<Method, Failure> {
        let (foreign, flags) = match method {
            MethodArg::Jaccard => (
                [self.k1_intra, self.k1_inter, self.k2_intra, self.k2_inter],
                ["--k1-intra", "--k1-inter", "--k2-intra", "--k2-inter"],
            ),
            MethodArg::Cajaccard => (
                [self.k1, self.k2, None, None],
                ["--k1", "--k2", "", ""],
            ),
        };
        if let Some((_, flag)) = foreign.iter().zip(flags).find(|(v, _)| v.is_some()) {
            let name = match method {
                MethodArg::Jaccard => "the baseline jaccard method",
                MethodArg::Cajaccard => "the camera-aware method",
            };
            return Err(Failure::Usage(format!(
                "`{flag}` does not apply to {name} (`{command}`)"
            )));
        }
        let m = match method {
            MethodArg::Jaccard => Method::Jaccard(self.baseline()),
            MethodArg::Cajaccard => Method::CaJaccard(self.camera_aware()),
        };
        m.plan().map_err(runtime)?;
        Ok(m)
    }
}

#[derive(Debug, Args)]
struct DistanceArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Rows of the output; defaults to the samples of `--features`.
    #[arg(long)]
    query_features: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Weight on the original distance in the output.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct RerankArgs {
    /// Gallery features and labels.
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    query_features: PathBuf,
    #[arg(long)]
    query_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cajaccard")]
    method: MethodArg,
    #[command(flatten)]
    params: ParamArgs,
    /// Weight on the original query-gallery distance.
    #[arg(long, default_value_t = 0.3)]
    lambda: f64,
    /// CMC ranks reported when identities are available.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    cmc: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Precomputed Jaccard-like distance matrix.
    #[arg(long, conflicts_with = "features")]
    distances: Option<PathBuf>,
    /// Features to encode before clustering (instead of `--distances`).
    #[arg(long, required_unless_present = "distances")]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cosine")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "cajaccard")]
    method: MethodArg,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.6)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    min_samples: usize,
    /// Format of `--distances`.
    #[arg(long, value_enum, default_value = "binary")]
    format: FormatArg,
    /// Output CSV with header `index,cluster` (noise is -1).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Query-by-gallery distance matrix.
    #[arg(long)]
    distances: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    format: FormatArg,
    #[arg(long)]
    query_labels: PathBuf,
    /// Gallery labels.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    cmc: Vec<usize>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = SynthConfig::S1.seed)]
    seed: u64,
    /// Output prefix: writes `<out>.cajf` and `<out>.csv`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::S1.num_identities)]
    identities: usize,
    #[arg(long, default_value_t = SynthConfig::S1.samples_per_identity)]
    samples_per_identity: usize,
    #[arg(long, default_value_t = SynthConfig::S1.num_cameras)]
    cameras: usize,
    #[arg(long, default_value_t = SynthConfig::S1.feature_dim)]
    dim: usize,
    #[arg(long, default_value_t = SynthConfig::S1.identity_spread)]
    identity_spread: f64,
    #[arg(long, default_value_t = SynthConfig::S1.camera_bias)]
    camera_bias: f64,
    #[arg(long, default_value_t = SynthConfig::S1.noise_sigma)]
    noise_sigma: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn at(path: &Path) -> impl Fn(cajaccard::Error) -> Failure + '_ {
    move |e| match e {
        cajaccard::Error::Io(io) => Failure::Runtime(format!("{}: {io}", path.display())),
        other => runtime(other),
    }
}

fn load_features(path: &Path) -> Result<Features, Failure> {
    read_features(path).map_err(at(path))
}

fn load_labels(path: Option<&Path>, n: usize) -> Result<SampleMeta, Failure> {
    let meta = match path {
        Some(p) => read_labels(p).map_err(at(p))?,
        None => SampleMeta::single_camera(n).map_err(runtime)?,
    };
    if meta.len() != n {
        return Err(Failure::Runtime(format!(
            "{} labels for {n} feature rows",
            meta.len()
        )));
    }
    Ok(meta)
}

fn load_input(input: &InputArgs) -> Result<(Features, SampleMeta), Failure> {
    let f = load_features(&input.features)?;
    let meta = load_labels(input.labels.as_deref(), f.n_samples())?;
    Ok((f, meta))
}

fn save_matrix(d: &DistanceMatrix<f64>, output: &OutputArgs) -> Result<(), Failure> {
    match &output.out {
        Some(path) => write_matrix(d, path, output.format.into()).map_err(at(path)),
        None => Ok(()),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_report(report: &RetrievalReport) {
    println!("{:<10}{:>8.4}", "mAP", report.map);
    for (k, v) in &report.cmc {
        println!("{:<10}{:>8.4}", format!("CMC@{k}"), v);
    }
    println!(
        "{:<10}{:>8}",
        "queries",
        format!("{}/{}", report.valid_queries, report.valid_queries + report.skipped_queries.len())
    );
}

fn cmd_distance(a: &DistanceArgs) -> Result<(), Failure> {
    let gallery = load_features(&a.input.features)?;
    let metric = a.input.metric.into();
    let d = match &a.query_features {
        Some(q) => original_distance(&load_features(q)?, &gallery, metric),
        None => pairwise_distance(&gallery, metric),
    }
    .map_err(runtime)?;
    save_matrix(&d, &a.output)?;
    println!("distance {}x{}", d.nrows(), d.ncols());
    Ok(())
}

fn cmd_encode(a: &EncodeArgs, method: MethodArg, command: &str) -> Result<(), Failure> {
    let method = a.params.method(method, command)?;
    let (f, meta) = load_input(&a.input)?;
    let mut req = PipelineRequest::all_pairs(f, meta, method);
    req.metric = a.input.metric.into();
    req.lambda = a.lambda;
    let d = run(&req).map_err(runtime)?;
    save_matrix(&d, &a.output)?;
    println!("{command} {}x{}", d.nrows(), d.ncols());
    Ok(())
}

fn cmd_rerank(a: &RerankArgs) -> Result<(), Failure> {
    let method = a.params.method(a.method, "rerank")?;
    let (gallery, gmeta) = load_input(&a.input)?;
    let query = load_features(&a.query_features)?;
    let qmeta = load_labels(a.query_labels.as_deref(), query.n_samples())?;
    let d = rerank(&query, &qmeta, &gallery, &gmeta, a.input.metric.into(), &method, a.lambda)
        .map_err(runtime)?;
    save_matrix(&d, &a.output)?;
    println!("rerank {}x{}", d.nrows(), d.ncols());
    if qmeta.has_identities() && gmeta.has_identities() {
        print_report(&evaluate(&d, &qmeta, &gmeta, &a.cmc).map_err(runtime)?);
    }
    Ok(())
}

fn cmd_cluster(a: &ClusterArgs) -> Result<(), Failure> {
    let (d, meta) = match (&a.distances, &a.features) {
        (Some(path), _) => {
            for (flag, set) in [
                ("--k1-intra", a.params.k1_intra.is_some()),
                ("--k1-inter", a.params.k1_inter.is_some()),
                ("--k2-intra", a.params.k2_intra.is_some()),
                ("--k2-inter", a.params.k2_inter.is_some()),
                ("--k1", a.params.k1.is_some()),
                ("--k2", a.params.k2.is_some()),
            ] {
                if set {
                    return Err(Failure::Usage(format!(
                        "`{flag}` needs `--features`; `--distances` is already encoded"
                    )));
                }
            }
            // Matrix files carry no kind tag; they are taken as Jaccard-like.
            let d: DistanceMatrix<f64> =
                read_matrix(path, a.format.into(), DistanceKind::Blended).map_err(at(path))?;
            let meta = match &a.labels {
                Some(p) => Some(load_labels(Some(p), d.nrows())?),
                None => None,
            };
            (d, meta)
        }
        (None, Some(features)) => {
            let method = a.params.method(a.method, "cluster")?;
            let f = load_features(features)?;
            let meta = load_labels(a.labels.as_deref(), f.n_samples())?;
            let mut req = PipelineRequest::all_pairs(f, meta.clone(), method);
            req.metric = a.metric.into();
            req.lambda = a.lambda;
            (run(&req).map_err(runtime)?, Some(meta))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let params = DbscanParams {
        eps: a.eps,
        min_samples: a.min_samples,
    };
    let clusters = dbscan(&d, &params).map_err(runtime)?;
    if let Some(out) = &a.out {
        write_text(Some(out), &cluster_csv(&clusters))?;
    }
    println!("{:<12}{:>8}", "clusters", clusters.n_clusters());
    println!("{:<12}{:>8}", "noise", clusters.n_noise());
    if let Some(ids) = meta.as_ref().and_then(SampleMeta::identities) {
        let agreement = cluster_agreement(&clusters, ids).map_err(runtime)?;
        println!("{:<12}{:>8.4}", "ARI", agreement.ari);
        println!("{:<12}{:>8.4}", "pairwise F", agreement.pairwise_f);
    }
    Ok(())
}

fn cluster_csv(c: &ClusterAssignment) -> String {
    let mut s = String::from("index,cluster\n");
    for (i, l) in c.to_signed().iter().enumerate() {
        writeln!(s, "{i},{l}").unwrap();
    }
    s
}

fn cmd_eval(a: &EvalArgs) -> Result<(), Failure> {
    let d: DistanceMatrix<f64> =
        read_matrix(&a.distances, a.format.into(), DistanceKind::Blended).map_err(at(&a.distances))?;
    let qmeta = load_labels(Some(&a.query_labels), d.nrows())?;
    let gmeta = load_labels(Some(&a.labels), d.ncols())?;
    print_report(&evaluate(&d, &qmeta, &gmeta, &a.cmc).map_err(runtime)?);
    Ok(())
}

/// One row of the stats CSV.
struct StatsRow {
    name: &'static str,
    plan: EncodingPlan,
    ca: CaJaccardParams,
    base: JaccardParams,
}

fn stats_rows(ca: CaJaccardParams, base: JaccardParams) -> Vec<StatsRow> {
    let mut rows = vec![
        StatsRow { name: "baseline", plan: EncodingPlan::jaccard(&base), ca, base },
        StatsRow { name: "ca_jaccard", plan: EncodingPlan::ca_jaccard(&ca), ca, base },
        StatsRow { name: "ckrnn_only", plan: EncodingPlan::ckrnn_only(&ca, &base), ca, base },
        StatsRow { name: "clqe_only", plan: EncodingPlan::clqe_only(&ca, &base), ca, base },
    ];
    let mut push = |name, p: CaJaccardParams| {
        rows.push(StatsRow { name, plan: EncodingPlan::ca_jaccard(&p), ca: p, base });
    };
    for k1_intra in [1, 5, 10, 15, 20, 25, 30] {
        // Expansion may not reach past the neighborhood.
        let k2_intra = ca.k2_intra.min(k1_intra);
        push("sweep_k1_intra", CaJaccardParams { k1_intra, k2_intra, ..ca });
    }
    for k1_inter in [5, 15, 20, 25, 30, 35] {
        let k2_inter = ca.k2_inter.min(k1_inter);
        push("sweep_k1_inter", CaJaccardParams { k1_inter, k2_inter, ..ca });
    }
    for k2_intra in 1..=5 {
        let p = CaJaccardParams {
            k2_intra,
            k2_inter: 6 - k2_intra,
            k1_intra: ca.k1_intra.max(k2_intra),
            k1_inter: ca.k1_inter.max(6 - k2_intra),
        };
        push("sweep_k2_split", p);
    }
    rows
}

fn cmd_stats(a: &StatsArgs) -> Result<(), Failure> {
    let ca = a.params.camera_aware();
    let base = a.params.baseline();
    ca.validate().map_err(runtime)?;
    base.validate().map_err(runtime)?;
    let (f, meta) = load_input(&a.input)?;
    if !meta.has_identities() {
        return Err(Failure::Runtime("stats needs a label file with identities".into()));
    }
    let dist = pairwise_distance(&f, a.input.metric.into()).map_err(runtime)?;
    let mut csv = String::from(
        "config,k1_intra,k1_inter,k2_intra,k2_inter,k1,k2,\
         inter_proportion,inter_weight,accuracy_support,accuracy_weighted\n",
    );
    for row in stats_rows(ca, base) {
        let vectors = expanded_vectors(&dist, &meta, &row.plan).map_err(runtime)?;
        let s = neighbor_stats(&vectors, &meta).map_err(runtime)?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            row.name,
            row.ca.k1_intra,
            row.ca.k1_inter,
            row.ca.k2_intra,
            row.ca.k2_inter,
            row.base.k1,
            row.base.k2,
            s.mean_inter_proportion,
            s.mean_inter_weight,
            s.neighbor_accuracy_support,
            s.neighbor_accuracy_weighted
        )
        .unwrap();
    }
    write_text(a.out.as_deref(), &csv)
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Failure> {
    let cfg = SynthConfig {
        num_identities: a.identities,
        samples_per_identity: a.samples_per_identity,
        num_cameras: a.cameras,
        feature_dim: a.dim,
        identity_spread: a.identity_spread,
        camera_bias: a.camera_bias,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
    };
    let (f, meta) = generate(&cfg).map_err(runtime)?;
    let features = with_extension(&a.out, "cajf");
    let labels = with_extension(&a.out, "csv");
    write_features(&f, &features).map_err(at(&features))?;
    write_labels(&meta, &labels).map_err(at(&labels))?;
    println!(
        "synth {} samples x {} dims -> {}, {}",
        f.n_samples(),
        f.dim(),
        features.display(),
        labels.display()
    );
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Distance(a) => cmd_distance(a),
        Command::Jaccard(a) => cmd_encode(a, MethodArg::Jaccard, "jaccard"),
        Command::Cajaccard(a) => cmd_encode(a, MethodArg::Cajaccard, "cajaccard"),
        Command::Rerank(a) => cmd_rerank(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("cajaccard: {}", line.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.into()).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(runtime(e)),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("cajaccard: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("cajaccard: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
