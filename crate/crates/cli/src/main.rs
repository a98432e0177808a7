use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctsvd::bench;
use ctsvd::io::{load, save};
use ctsvd::metrics::{evaluate, MetricOptions};
use ctsvd::report::RunReport;
use ctsvd::tsvd::{default_rank_tol, multi_rank, t_svd_timed};
use ctsvd::{
    admm_complete, make_mask, Error, ObservationMask, SamplingPattern, SolverConfig, TransformKind,
    TubeTransform,
};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ctsvd",
    version,
    about = "DCT and DFT tensor SVD, tensor completion, metrics and timing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a tensor from a subset of its entries.
    Complete(CompleteArgs),
    /// Factor a tensor and write U, S, V plus its multi-rank.
    Tsvd(TsvdArgs),
    /// Time the DFT and DCT t-SVD on random tensors (CSV).
    Bench(BenchArgs),
    /// Compare two tensors (JSON).
    Metrics(MetricsArgs),
    /// Write a random 0/1 sampling mask.
    Mask(MaskArgs),
}

#[derive(Args)]
struct CompleteArgs {
    /// Tensor holding the observed values (entries off the mask are ignored).
    #[arg(long)]
    input: PathBuf,
    /// 0/1 mask file with the same dims as the input.
    #[arg(long, conflicts_with_all = ["sr", "seed"], required_unless_present = "sr")]
    mask: Option<PathBuf>,
    /// Sampling rate for a random mask.
    #[arg(long)]
    sr: Option<f64>,
    #[arg(long, requires = "sr", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "dct")]
    method: TransformKind,
    #[arg(long, default_value_t = 1e-2)]
    beta: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Ground truth for metrics and relative error.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// SSIM dynamic range; defaults to the largest absolute reference entry.
    #[arg(long)]
    dynamic_range: Option<f64>,
}

#[derive(Args)]
struct TsvdArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "dct")]
    method: TransformKind,
    /// Writes `<prefix>_U.t3f`, `<prefix>_S.t3f` and `<prefix>_V.t3f`.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Multi-rank JSON destination; stdout when omitted.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Singular values at or below this count as zero.
    #[arg(long)]
    rank_tol: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated sizes such as `100x100x100,200x200x100`.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<String>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also complete a 24x24x16 smooth-tube tensor at SR 0.1 with both
    /// methods and write the PSNR comparison here (JSON).
    #[arg(long)]
    psnr_report: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    dynamic_range: Option<f64>,
    /// ERGAS resolution ratio.
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    /// JSON destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    /// Dims as `m1xm2xm3`.
    #[arg(long, required_unless_present = "like", conflicts_with = "like")]
    dims: Option<String>,
    /// Take the dims from an existing tensor file.
    #[arg(long)]
    like: Option<PathBuf>,
    #[arg(long)]
    sr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        Error::Numerical(_)
        | Error::SvdNotConverged { .. }
        | Error::NotConjugateSymmetric { .. }
        | Error::NotBlockDiagonal { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn read(path: &Path) -> ctsvd::Result<ctsvd::Tensor3> {
    load(path).map_err(|e| with_path(e, path))
}

fn write(path: &Path, x: &ctsvd::Tensor3) -> ctsvd::Result<()> {
    save(path, x).map_err(|e| with_path(e, path))
}

fn write_text(path: Option<&Path>, text: &str) -> ctsvd::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| with_path(e.into(), p)),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{}", text.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> ctsvd::Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Format(format!("JSON serialization: {e}")))
}

fn complete(a: CompleteArgs) -> ctsvd::Result<()> {
    let input = read(&a.input)?;
    let (pattern, seed) = match (&a.mask, a.sr) {
        (Some(p), _) => {
            let pattern = SamplingPattern::from_tensor(&read(p)?)?;
            (pattern, None)
        }
        (None, Some(sr)) => (make_mask(input.dims(), sr, a.seed)?, Some(a.seed)),
        (None, None) => unreachable!("clap requires --mask or --sr"),
    };
    let mask = ObservationMask::observe(pattern, &input)?;
    let cfg = SolverConfig {
        beta: a.beta,
        tol: a.tol,
        max_iters: a.max_iters,
        transform: a.method,
        seed: a.seed,
    };
    let reference = a.reference.as_deref().map(read).transpose()?;
    let (x, state) = admm_complete(&mask, &cfg)?;
    write(&a.output, &x)?;
    let opts = MetricOptions {
        dynamic_range: a.dynamic_range,
        ..MetricOptions::default()
    };
    let report = RunReport::new(&cfg, &mask, &state, seed, reference.as_ref(), &opts)?;
    if let Some(p) = &a.report {
        write_text(Some(p), &report.to_json()?)?;
    }
    eprintln!(
        "{} iterations, relative change {:.3e}{}",
        report.iterations,
        report.final_relative_change,
        report
            .relative_error
            .map(|e| format!(", relative error {e:.3e}"))
            .unwrap_or_default()
    );
    Ok(())
}

fn tsvd(a: TsvdArgs) -> ctsvd::Result<()> {
    let x = read(&a.input)?;
    let t = TubeTransform::for_tensor(a.method, &x);
    let (f, times) = t_svd_timed(&x, &t)?;
    let tol = a.rank_tol.unwrap_or_else(|| default_rank_tol(x.dims()));
    let rank = multi_rank(&x, &t, tol)?;
    let prefix = a.out_prefix.to_string_lossy().into_owned();
    for (name, part) in [("U", &f.u), ("S", &f.s), ("V", &f.v)] {
        write(Path::new(&format!("{prefix}_{name}.t3f")), part)?;
    }
    let out = serde_json::json!({
        "method": a.method,
        "dims": x.dims(),
        "rank_tol": tol,
        "ranks": rank.ranks,
        "tubal_rank": rank.tubal_rank,
        "times": times,
    });
    write_text(a.json.as_deref(), &to_json(&out)?)
}

fn run_bench(a: BenchArgs) -> ctsvd::Result<()> {
    let sizes = if a.sizes.is_empty() {
        bench::DEFAULT_SIZES.to_vec()
    } else {
        a.sizes
            .iter()
            .map(|s| bench::parse_size(s))
            .collect::<ctsvd::Result<_>>()?
    };
    let rows = bench::run(&sizes, a.runs, a.seed)?;
    write_text(a.output.as_deref(), &bench::to_csv(&rows))?;
    if let Some(p) = &a.psnr_report {
        let cmp = bench::smooth_tube_comparison([24, 24, 16], 0.1, a.seed)?;
        if !cmp.dct_not_worse {
            eprintln!("warning: DCT mean PSNR below DFT on the smooth-tube check");
        }
        write_text(Some(p), &to_json(&cmp)?)?;
    }
    Ok(())
}

fn metrics(a: MetricsArgs) -> ctsvd::Result<()> {
    let r = read(&a.reference)?;
    let e = read(&a.estimate)?;
    let opts = MetricOptions {
        dynamic_range: a.dynamic_range,
        ergas_ratio: a.ratio,
    };
    let rep = evaluate(&r, &e, &opts, Default::default())?;
    write_text(a.output.as_deref(), &to_json(&rep)?)
}

fn mask(a: MaskArgs) -> ctsvd::Result<()> {
    let dims = match (&a.dims, &a.like) {
        (Some(d), _) => bench::parse_size(d)?,
        (None, Some(p)) => read(p)?.dims(),
        (None, None) => unreachable!("clap requires --dims or --like"),
    };
    write(&a.output, &make_mask(dims, a.sr, a.seed)?.to_tensor())
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("TSVD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("TSVD_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match cli.command {
        Command::Complete(a) => complete(a),
        Command::Tsvd(a) => tsvd(a),
        Command::Bench(a) => run_bench(a),
        Command::Metrics(a) => metrics(a),
        Command::Mask(a) => mask(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
