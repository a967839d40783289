use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use refaas_core::bench::{
    repetitions_csv, run_benchmark, savings_csv, savings_report, BenchmarkConfig,
};
use refaas_core::energy::{
    amortization, open_probe, wh_to_joules, MonotonicClock, ProbeContext, ProbeLeases,
};
use refaas_core::pipeline::{run_pipeline, TranslationJob, Verdict};
use refaas_core::runner::{Builder, InvokeLimits, LanguageRegistry, ProcessInvoker, Toolchain};
use refaas_core::{
    load_test_suite_dir, parse_package_with, parse_test_archive, serialize_package,
    serialize_test_archive, DeploymentPackage, JobSpec, LanguageId, TestSuite,
};
use refaas_service::{Runtime, Service, ServiceConfig};

#[derive(Parser)]
#[command(
    name = "refaas",
    version,
    about = "Translate serverless functions into a more efficient language"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "REFAAS_CONFIG")]
        config: Option<PathBuf>,
    },
    /// Translate one function locally, without a server.
    Translate(TranslateArgs),
    /// Energy benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Zip a package or test directory.
    #[command(subcommand)]
    Pack(PackCommand),
}

#[derive(Args)]
struct TranslateArgs {
    /// Package directory or zip archive.
    package: PathBuf,
    /// Directory of test files or zip of them.
    #[arg(long)]
    tests: PathBuf,
    #[arg(long, default_value = "cot")]
    pipeline: String,
    #[arg(long, default_value = "go")]
    target: String,
    /// Service config supplying LLM backends, probes and presets.
    #[arg(long, env = "REFAAS_CONFIG")]
    config: Option<PathBuf>,
    /// Replay transcript answering every LLM call.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    invocations: Option<u32>,
    #[arg(long)]
    repetitions: Option<u32>,
    /// Where to write the resulting archive.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Where to write the job report (JSON); stdout otherwise.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    keep_workdir: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Benchmark an original and a translated package on the same events.
    Run(BenchRunArgs),
    /// Invocations needed to pay back a conversion.
    Amortization {
        /// Conversion energy in watt-hours.
        #[arg(long)]
        conversion_wh: f64,
        /// Saving per invocation in joules.
        #[arg(long)]
        saving_j: f64,
    },
}

#[derive(Args)]
struct BenchRunArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    translated: PathBuf,
    #[arg(long)]
    tests: PathBuf,
    #[arg(long, default_value_t = refaas_core::DEFAULT_BENCHMARK_INVOCATIONS)]
    invocations: u32,
    #[arg(long, default_value_t = refaas_core::DEFAULT_BENCHMARK_REPETITIONS)]
    repetitions: u32,
    #[arg(long, default_value_t = refaas_core::bench::DEFAULT_WARMUP_INVOCATIONS)]
    warmup: u32,
    /// `rapl`, `cputime[:W]` or `synthetic:<name>`.
    #[arg(long, default_value = "cputime")]
    probe: String,
    #[arg(long, default_value = "fixtures/probes")]
    probe_dir: PathBuf,
    /// Logical CPU to pin invocations to.
    #[arg(long)]
    pin_cpu: Option<usize>,
    #[arg(long, default_value = "function")]
    name: String,
    /// Directory for reports.json, savings.csv and repetitions.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PackCommand {
    /// Zip a directory holding a manifest into a deployment archive.
    Package {
        dir: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Zip a directory of test files.
    Tests {
        dir: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("REFAAS_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Serve { config } => serve(config.as_deref()),
        Command::Translate(args) => translate(args),
        Command::Bench(BenchCommand::Run(args)) => bench_run(args),
        Command::Bench(BenchCommand::Amortization {
            conversion_wh,
            saving_j,
        }) => {
            let report = amortization(wh_to_joules(conversion_wh), saving_j);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Pack(PackCommand::Package { dir, out }) => {
            let pkg =
                DeploymentPackage::from_dir(&dir).with_context(|| dir.display().to_string())?;
            fs::write(&out, serialize_package(&pkg)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pack(PackCommand::Tests { dir, out }) => {
            let suite = load_test_suite_dir(&dir).with_context(|| dir.display().to_string())?;
            fs::write(&out, serialize_test_archive(&suite)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn serve(config: Option<&Path>) -> Result<ExitCode> {
    let cfg = ServiceConfig::load(config)?;
    let listen = cfg.listen.clone();
    let service = Service::open(cfg)?;
    service.start_workers();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .with_context(|| format!("bind {listen}"))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        refaas_service::http::serve(service, listener, shutdown).await?;
        anyhow::Ok(())
    })?;
    Ok(ExitCode::SUCCESS)
}

fn read_package(path: &Path, languages: &[LanguageId]) -> Result<(DeploymentPackage, Vec<u8>)> {
    let pkg = if path.is_dir() {
        DeploymentPackage::from_dir(path)?
    } else {
        parse_package_with(&fs::read(path)?, languages)?
    };
    if !languages.contains(pkg.language()) {
        bail!(
            "{}: no adapter for language `{}`",
            path.display(),
            pkg.language()
        );
    }
    let bytes = if path.is_dir() {
        serialize_package(&pkg)?
    } else {
        fs::read(path)?
    };
    Ok((pkg, bytes))
}

fn read_suite(path: &Path) -> Result<TestSuite> {
    let suite = if path.is_dir() {
        load_test_suite_dir(path)?
    } else {
        parse_test_archive(&fs::read(path)?)?
    };
    Ok(suite)
}

fn translate(args: TranslateArgs) -> Result<ExitCode> {
    let mut cfg = ServiceConfig::load(args.config.as_deref())?;
    if args.replay.is_some() {
        cfg.llm.replay = args.replay.clone();
        cfg.llm.backends.retain(|b| !b.models.is_empty());
    }
    cfg.keep_workdir |= args.keep_workdir;
    let work = tempfile::tempdir()?;
    if args.config.is_none() {
        cfg.data_dir = work.path().to_path_buf();
    }
    let runtime = Runtime::build(&cfg)?;
    let languages = runtime.languages.languages();
    let (pkg, original) = read_package(&args.package, &languages)?;
    let suite = read_suite(&args.tests).with_context(|| args.tests.display().to_string())?;
    let spec = JobSpec::new(pkg, LanguageId::new(&args.target), suite)?
        .with_pipeline(&args.pipeline)
        .with_benchmark(
            args.invocations.unwrap_or(cfg.bench.invocations),
            args.repetitions.unwrap_or(cfg.bench.repetitions),
        )?;
    let pipeline = runtime.catalog.get(&args.pipeline)?;
    let job = run_pipeline(TranslationJob::new(spec), pipeline, &runtime.services)?;

    let report = serde_json::to_string_pretty(&job.report())?;
    match &args.report {
        Some(p) => fs::write(p, report)?,
        None => println!("{report}"),
    }
    let translated = job.verdict == Some(Verdict::Translated);
    if let Some(out) = &args.out {
        let bytes = match (&job.output_package, translated) {
            (Some(pkg), true) => serialize_package(pkg)?,
            _ => original,
        };
        fs::write(out, bytes)?;
    }
    eprintln!(
        "{}: {} ({} stage executions, {:.3} Wh, {} tokens)",
        job.id,
        if translated {
            "translated"
        } else {
            "original kept"
        },
        job.trace.len(),
        job.metrics.energy,
        job.metrics.tokens
    );
    if let Some(dir) = &job.workdir {
        eprintln!("work directory kept at {}", dir.display());
    }
    Ok(if translated {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn bench_run(args: BenchRunArgs) -> Result<ExitCode> {
    let languages = Arc::new(LanguageRegistry::builtin());
    let ids = languages.languages();
    let (original, _) = read_package(&args.original, &ids)?;
    let (translated, _) = read_package(&args.translated, &ids)?;
    let suite = read_suite(&args.tests)?;

    let clock = Arc::new(MonotonicClock::new());
    let mut ctx = ProbeContext::new(clock.clone());
    ctx.synthetic_dir = args.probe_dir.clone();
    let probe = open_probe(&args.probe, &ctx)?;
    let leases = ProbeLeases::new(clock);
    let invoker = match args.pin_cpu {
        Some(cpu) => ProcessInvoker::pinned(cpu),
        None => ProcessInvoker::new(),
    };
    let cfg = BenchmarkConfig {
        invocations: args.invocations,
        repetitions: args.repetitions,
        warmup_invocations: args.warmup,
        probe: args.probe.clone(),
        limits: InvokeLimits::default(),
    };
    let toolchain = Toolchain::new(languages);
    let work = tempfile::tempdir()?;
    let events = suite.events();
    let mut reports = Vec::new();
    for (variant, pkg) in [("original", &original), ("translated", &translated)] {
        let built = toolchain.build(pkg, &work.path().join(variant))?;
        let Some(artifact) = built.artifact.filter(|_| built.ok) else {
            bail!("{variant} package does not build:\n{}", built.stderr);
        };
        eprintln!("benchmarking {variant} ({})", pkg.language());
        reports.push(run_benchmark(
            &artifact,
            &events,
            &cfg,
            &invoker,
            probe.as_ref(),
            &leases,
        )?);
    }

    fs::create_dir_all(&args.out)?;
    let row = savings_report(&args.name, &reports[0], &reports[1]);
    fs::write(
        args.out.join("reports.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "original": reports[0],
            "translated": reports[1],
            "savings": row,
        }))?,
    )?;
    fs::write(
        args.out.join("savings.csv"),
        savings_csv(std::slice::from_ref(&row))?,
    )?;
    fs::write(
        args.out.join("repetitions.csv"),
        repetitions_csv(&[("original", &reports[0]), ("translated", &reports[1])])?,
    )?;
    println!("{}", serde_json::to_string_pretty(&row)?);
    Ok(ExitCode::SUCCESS)
}
