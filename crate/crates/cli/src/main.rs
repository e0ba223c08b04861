//! `autotos`: run the repair loop, evaluate component pairs, run batch
//! experiments and inspect the bundled oracles.

use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use autotos_core::domains::{reference_search, search_algorithm, validate_solution, DomainSpec, DEFAULT_STATE_BUDGET};
use autotos_core::llm::{HttpBackend, HttpSettings, ModelBackend, ScriptedBackend};
use autotos_core::pipeline::{
    clean_log, evaluate_checkpoints, evaluate_components, experiment::write_run, run_autotos, run_experiment,
    ExperimentConfig, OptimumCache, RunConfig, RunStatus,
};
use autotos_core::sandbox::executor::{Executor, Fatal};
use autotos_core::sandbox::serve::{serve, ServeEnd};
use autotos_core::sandbox::{Channel, ExecutorConfig, FakeSandbox, ProcessSandbox, SandboxSession, SessionError};
use autotos_core::{DomainId, Limits};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "autotos", version, about = "Synthesize and check search components with a language model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the generate, test and repair loop once for a domain.
    Run(RunArgs),
    /// Measure the accuracy of a successor function and goal test pair.
    Eval(EvalArgs),
    /// Run every domain and setting in a config file, several times each.
    Experiment(ExperimentArgs),
    /// Solve a bundled instance with the reference components.
    Oracle(OracleArgs),
    /// Serve the line protocol on stdin/stdout with the built-in executor.
    #[command(hide = true)]
    ReferenceExecutor(ExecutorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    /// OpenAI-style chat completions endpoint from AUTOTOS_ENDPOINT,
    /// AUTOTOS_MODEL and AUTOTOS_API_KEY.
    Http,
    /// Replies read in order from a JSONL transcript.
    Scripted,
}

#[derive(Args)]
struct SandboxArgs {
    /// Executor program speaking the line protocol. Defaults to this
    /// binary's built-in executor. It is started with `--domain <d>` and
    /// `--per-call-timeout <secs>` appended to `--executor-arg`s.
    #[arg(long)]
    executor: Option<PathBuf>,
    #[arg(long = "executor-arg", allow_hyphen_values = true)]
    executor_args: Vec<String>,
    /// Run the built-in executor in this process instead of a child.
    #[arg(long, conflicts_with = "executor")]
    in_process: bool,
    /// Seconds the host waits past a request's own limit.
    #[arg(long, default_value_t = 10.0)]
    grace: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    domain: DomainId,
    #[arg(long, value_enum, default_value = "scripted")]
    backend: BackendKind,
    /// Reply transcript for the scripted backend.
    #[arg(long, required_if_eq("backend", "scripted"))]
    transcript: Option<PathBuf>,
    #[arg(long)]
    no_partial_soundness: bool,
    /// TOML file overriding the default limits.
    #[arg(long)]
    limits: Option<PathBuf>,
    /// Directory for the run record and clean log.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also measure accuracy at each checkpoint.
    #[arg(long)]
    evaluate: bool,
    #[command(flatten)]
    sandbox: SandboxArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    domain: DomainId,
    /// File holding the successor function source.
    #[arg(long)]
    successor: PathBuf,
    /// File holding the goal test source.
    #[arg(long)]
    goal: PathBuf,
    /// Evaluate on the first n instances only.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    limits: Option<PathBuf>,
    /// Print every instance's result.
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    sandbox: SandboxArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "scripted")]
    backend: BackendKind,
    /// Directory of `<domain>-<partial|plain>-<rep>.jsonl` reply transcripts
    /// for the scripted backend.
    #[arg(long, required_if_eq("backend", "scripted"))]
    transcripts: Option<PathBuf>,
    #[command(flatten)]
    sandbox: SandboxArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    domain: DomainId,
    /// Instance id; all evaluation instances when omitted.
    #[arg(long)]
    instance: Option<String>,
}

#[derive(Args)]
struct ExecutorArgs {
    #[arg(long)]
    domain: DomainId,
    #[arg(long, default_value_t = 1.0)]
    per_call_timeout: f64,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("AUTOTOS_LOG").unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::ReferenceExecutor(a) => cmd_executor(a),
    };
    match result {
        Ok(code) => code,
        // Output cut short by the reader, as in `autotos oracle | head`.
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn secs(v: f64, what: &str) -> Result<Duration> {
    Duration::try_from_secs_f64(v).with_context(|| format!("invalid {what}: {v}"))
}

fn load_limits(path: Option<&Path>) -> Result<Limits> {
    let limits = match path {
        None => Limits::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
    };
    limits.validate()?;
    Ok(limits)
}

impl SandboxArgs {
    fn session(&self, domain: DomainId, limits: &Limits) -> Result<Box<dyn SandboxSession>, SessionError> {
        if self.in_process {
            return Ok(Box::new(FakeSandbox::new(domain, [])));
        }
        let (program, mut args) = match &self.executor {
            Some(p) => (p.clone(), self.executor_args.clone()),
            None => {
                let me = std::env::current_exe().map_err(|source| SessionError::Spawn {
                    program: "autotos".into(),
                    source,
                })?;
                (me, vec!["reference-executor".to_string()])
            }
        };
        args.extend([
            "--domain".to_string(),
            domain.to_string(),
            "--per-call-timeout".to_string(),
            limits.per_call_timeout.as_secs_f64().to_string(),
        ]);
        let grace = Duration::try_from_secs_f64(self.grace).unwrap_or(Duration::from_secs(10));
        let cfg = ExecutorConfig::new(program)
            .args(args)
            .grace(grace)
            .per_call_timeout(limits.per_call_timeout);
        Ok(Box::new(ProcessSandbox::spawn(cfg)?))
    }

    fn channel(&self, domain: DomainId, limits: &Limits) -> Result<Channel> {
        let session = self.session(domain, limits).context("starting the executor")?;
        Ok(Channel::new(session))
    }
}

fn backend(kind: BackendKind, transcript: Option<&Path>) -> Result<(Box<dyn ModelBackend>, String)> {
    Ok(match kind {
        BackendKind::Http => {
            let settings = HttpSettings::from_env()?;
            let name = format!("http:{}", settings.model);
            (Box::new(HttpBackend::new(settings)?), name)
        }
        BackendKind::Scripted => {
            let path = transcript.context("the scripted backend needs a transcript")?;
            (Box::new(ScriptedBackend::from_file(path)?), format!("scripted:{}", path.display()))
        }
    })
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let limits = load_limits(a.limits.as_deref())?;
    let (mut model, name) = backend(a.backend, a.transcript.as_deref())?;
    let mut channel = a.sandbox.channel(a.domain, &limits)?;
    let cfg = RunConfig {
        domain: a.domain,
        limits,
        partial_soundness: !a.no_partial_soundness,
        backend: name,
    };
    let mut record = run_autotos(&cfg, model.as_mut(), &mut channel);
    if a.evaluate {
        let spec = DomainSpec::get(a.domain);
        evaluate_checkpoints(&mut record, &spec.eval_instances, &mut channel, &limits, &mut OptimumCache::default())
            .context("evaluating checkpoints")?;
    }
    channel.shutdown();

    let failures: Vec<String> = record.failure_sequence().iter().map(|c| c.code().to_string()).collect();
    println!("domain: {}", record.domain);
    println!("status: {}", status_line(&record.status));
    println!(
        "calls: {} (successor {}, goal {})",
        record.total_calls(),
        record.calls.successor,
        record.calls.goal
    );
    println!("failures: [{}]", failures.join(", "));
    println!(
        "checkpoint reached: {}",
        record.checkpoint_reached.map_or("none", |c| c.as_str())
    );
    if a.evaluate {
        let acc = record.checkpoint_accuracies;
        for (label, v) in [
            ("initial", acc.initial),
            ("soundness", acc.post_soundness),
            ("completeness", acc.post_completeness),
        ] {
            if let Some(v) = v {
                println!("accuracy at {label}: {:.1}%", 100.0 * v);
            }
        }
    }
    if let Some(out) = &a.out {
        let stem = format!("{}-{}", a.domain, if cfg.partial_soundness { "partial" } else { "plain" });
        write_run(out, &stem, &record)?;
        println!("record: {}", out.join("runs").join(format!("{stem}.json")).display());
    } else {
        tracing::debug!("{}", clean_log(&record));
    }
    Ok(match record.status {
        RunStatus::Error(_) => ExitCode::FAILURE,
        _ => ExitCode::SUCCESS,
    })
}

fn status_line(s: &RunStatus) -> String {
    match s {
        RunStatus::Completed => "completed".into(),
        RunStatus::BudgetExhausted => "budget exhausted".into(),
        RunStatus::Error(e) => format!("error: {e}"),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode> {
    let limits = load_limits(a.limits.as_deref())?;
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let successor = read(&a.successor)?;
    let goal = read(&a.goal)?;
    let spec = DomainSpec::get(a.domain);
    let n = a.limit.unwrap_or(usize::MAX).min(spec.eval_instances.len());
    let mut channel = a.sandbox.channel(a.domain, &limits)?;
    let e = evaluate_components(
        a.domain,
        &successor,
        &goal,
        &spec.eval_instances[..n],
        &mut channel,
        &limits,
        &mut OptimumCache::default(),
    )?;
    channel.shutdown();
    if a.verbose {
        for r in &e.per_instance {
            println!("{}\t{}\t{}", r.instance, if r.solved { "solved" } else { "unsolved" }, r.note);
        }
    }
    let solved = e.per_instance.iter().filter(|r| r.solved).count();
    println!("accuracy: {:.1}% ({solved}/{n})", 100.0 * e.accuracy);
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let config: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    config.limits.validate()?;
    let kind = a.backend;
    let dir = a.transcripts.clone();
    let mut backends = |d: DomainId, partial: bool, rep: u32| -> Result<Box<dyn ModelBackend>, String> {
        let path = dir
            .as_ref()
            .map(|d_| d_.join(format!("{d}-{}-{rep}.jsonl", if partial { "partial" } else { "plain" })));
        backend(kind, path.as_deref()).map(|(b, _)| b).map_err(|e| format!("{e:#}"))
    };
    let limits = config.limits;
    let sandbox = &a.sandbox;
    let mut sandboxes = |d: DomainId| sandbox.session(d, &limits);
    let name = match kind {
        BackendKind::Http => "http",
        BackendKind::Scripted => "scripted",
    };
    let summary = run_experiment(&config, &mut backends, &mut sandboxes, name, &a.out)?;
    for row in &summary.calls_table {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1}"));
        println!(
            "{}: mean calls {} with partial soundness, {} without",
            row.domain,
            fmt(row.with_partial_soundness),
            fmt(row.without_partial_soundness)
        );
    }
    println!("tables written to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> Result<ExitCode> {
    let spec = DomainSpec::get(a.domain);
    let instances: Vec<_> = match &a.instance {
        Some(id) => vec![spec
            .instance(id)
            .with_context(|| format!("no instance {id:?} in {}", a.domain))?],
        None => spec.eval_instances.iter().collect(),
    };
    let mut out = io::stdout().lock();
    let mut unsolved = 0;
    for inst in instances {
        match reference_search(inst, search_algorithm(a.domain), DEFAULT_STATE_BUDGET)? {
            Some(trace) => {
                let v = validate_solution(inst, &trace);
                let states: Vec<String> = trace.states().iter().map(|s| s.to_string()).collect();
                writeln!(out, "{}\t{} steps\t{}\t{}", inst.id, trace.steps(), v.reason, states.join(" -> "))?;
                if !v.solved() {
                    unsolved += 1;
                }
            }
            None => {
                writeln!(out, "{}\tno plan", inst.id)?;
                unsolved += 1;
            }
        }
    }
    if unsolved > 0 && a.instance.is_some() {
        bail!("the reference components did not solve {}", a.instance.unwrap_or_default());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_executor(a: ExecutorArgs) -> Result<ExitCode> {
    let timeout = secs(a.per_call_timeout, "per-call timeout")?;
    let mut executor = Executor::new(a.domain, timeout).real_time_hangs(true);
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    match serve(&mut executor, stdin, stdout)? {
        ServeEnd::Shutdown | ServeEnd::Eof => Ok(ExitCode::SUCCESS),
        ServeEnd::Fatal(Fatal::Crash) => std::process::exit(70),
        ServeEnd::Fatal(Fatal::Stall) => loop {
            std::thread::park();
        },
    }
}
