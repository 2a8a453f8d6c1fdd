//! The `trackbc` command line.

use std::fmt::Write as _;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trackbc_core::controller::{run_closed_loop, LoopConfig};
use trackbc_core::courses;
use trackbc_core::demo::{self, ControllerKind, Demonstration, ExpertConfig};
use trackbc_core::domain::{encode_action, NUM_ACTIONS};
use trackbc_core::net::{
    evaluate_accuracy, train, transfer_train, NetworkShape, TrainConfig, TrainReport,
};
use trackbc_core::sim::{ScenarioSpec, SensorConfig, SimConfig, World};

use crate::results::{self, RolloutSummary};
use crate::{checkpoint, demo_file, scenario, teleop, Error};

const EXIT_CODES: &str = "\
Exit status:
  0  success
  1  the operation ran but failed (validation errors, shape mismatch, ...)
  2  usage error
  3  an input file is missing or malformed
  4  an output file could not be written";

#[derive(Debug, Parser)]
#[command(
    name = "trackbc",
    version,
    about = "Record, edit and learn from tracked-robot demonstrations"
)]
#[command(after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record a scripted-expert demonstration.
    #[command(after_help = EXIT_CODES)]
    Record(RecordArgs),
    /// Trim, merge or validate demonstrations.
    #[command(after_help = EXIT_CODES)]
    Edit {
        #[command(subcommand)]
        op: EditOp,
    },
    /// Train a controller network from a demonstration.
    #[command(after_help = EXIT_CODES)]
    Train(TrainArgs),
    /// Retrain an existing network on a new demonstration.
    #[command(after_help = EXIT_CODES)]
    Transfer(TransferArgs),
    /// Measure a network's accuracy on a demonstration.
    #[command(after_help = EXIT_CODES)]
    Eval(EvalArgs),
    /// Run both networks in closed loop on seeded scenarios.
    #[command(after_help = EXIT_CODES)]
    Rollout(RolloutArgs),
    /// Serve a live teleoperation session over a websocket.
    #[command(after_help = EXIT_CODES)]
    Teleop(TeleopArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Mobility,
    Manipulation,
}

impl From<Kind> for ControllerKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Mobility => ControllerKind::Mobility,
            Kind::Manipulation => ControllerKind::Manipulation,
        }
    }
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Scenario document to drive the expert through.
    #[arg(
        long,
        conflicts_with = "standard",
        required_unless_present = "standard"
    )]
    pub scenario: Option<PathBuf>,
    /// Build the standard merged training demo for this controller instead.
    #[arg(long, value_enum)]
    pub standard: Option<Kind>,
    /// Which expert to run on `--scenario`.
    #[arg(long, value_enum, default_value = "mobility")]
    pub controller: Kind,
    /// Overrides the scenario seed; seeds the standard courses.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum EditOp {
    /// Keep the records from `--from` to `--to` (seconds, both idle).
    Trim {
        #[arg(long)]
        demo: PathBuf,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Join demonstrations end to end at idle records.
    Merge {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        demos: Vec<PathBuf>,
    },
    /// Check format, ranges and idle boundaries.
    Validate { demo: PathBuf },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub demo: PathBuf,
    /// Defaults to the controller named in the demo.
    #[arg(long, value_enum)]
    pub controller: Option<Kind>,
    #[arg(long, default_value_t = trackbc_core::net::DEFAULT_HIDDEN)]
    pub hidden: usize,
    /// Window length in control ticks; 25 for mobility, 55 for manipulation.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 3000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Stop once training-set accuracy reaches this value.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub eval_every: u64,
    /// Accuracy reported as steps-to-threshold.
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    /// Checkpoint path. The report goes next to it as `<out>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Source checkpoint.
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long)]
    pub demo: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3000)]
    pub steps: u64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub eval_every: u64,
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    /// From-scratch steps to the same threshold, for comparison.
    #[arg(long)]
    pub baseline_steps: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub demo: PathBuf,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Scenario document; each seed replaces its seed. Without it the
    /// shuffled evaluation variants are used, one per seed.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub mobility: PathBuf,
    #[arg(long)]
    pub manipulation: PathBuf,
    /// Comma-separated list, for example `0,1,2`.
    #[arg(long, value_delimiter = ',', num_args = 0.., required = true)]
    pub seeds: Vec<u64>,
    /// Results document (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TeleopArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    /// Directory that saved demos are written to.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "mobility")]
    pub controller: Kind,
    /// Control period in milliseconds.
    #[arg(long, default_value_t = 100)]
    pub tick_ms: u64,
}

/// A failed command: exit status and the message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn failed(e: impl std::fmt::Display) -> Self {
        Failure::new(1, e.to_string())
    }

    fn usage(m: impl Into<String>) -> Self {
        Failure::new(2, m)
    }

    fn input(e: Error) -> Self {
        match e {
            Error::Core(_) => Failure::failed(e),
            e => Failure::new(3, e.to_string()),
        }
    }

    fn output(e: Error) -> Self {
        Failure::new(4, e.to_string())
    }
}

type Outcome = std::result::Result<String, Failure>;

/// Run one command. On success returns what to print on stdout.
pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Record(a) => record(a),
        Command::Edit { op } => edit(op),
        Command::Train(a) => cmd_train(a),
        Command::Transfer(a) => cmd_transfer(a),
        Command::Eval(a) => eval(a),
        Command::Rollout(a) => rollout(a),
        Command::Teleop(a) => cmd_teleop(a),
    }
}

fn read_demo(p: &Path) -> std::result::Result<Demonstration, Failure> {
    demo_file::read_demo(p).map_err(Failure::input)
}

fn load_spec(p: &Path) -> std::result::Result<ScenarioSpec, Failure> {
    scenario::load_scenario(p).map_err(Failure::input)
}

fn histogram(d: &Demonstration) -> String {
    let mut counts = [0usize; NUM_ACTIONS];
    for r in &d.records {
        counts[encode_action(r.action).index()] += 1;
    }
    let mut s = String::new();
    for (id, n) in counts.iter().enumerate().filter(|(_, n)| **n > 0) {
        let _ = writeln!(s, "  action {id:>2}: {n}");
    }
    s
}

fn record(a: RecordArgs) -> Outcome {
    let demo = match (a.standard, &a.scenario) {
        (Some(k), _) => {
            courses::standard_demo(k.into(), a.seed.unwrap_or(0)).map_err(Failure::failed)?
        }
        (None, Some(p)) => {
            let mut spec = load_spec(p)?;
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            let expert = match a.controller {
                Kind::Mobility => ExpertConfig::mobility(),
                Kind::Manipulation => ExpertConfig::manipulation(),
            };
            courses::record_expert(spec, expert, SensorConfig::default())
                .map_err(Failure::failed)?
        }
        (None, None) => {
            return Err(Failure::usage(
                "either --scenario or --standard is required",
            ))
        }
    };
    demo_file::write_demo(&a.out, &demo).map_err(Failure::output)?;
    Ok(format!(
        "{} records ({:.1} s) -> {}\n{}",
        demo.len(),
        demo.duration(),
        a.out.display(),
        histogram(&demo)
    ))
}

fn edit(op: EditOp) -> Outcome {
    match op {
        EditOp::Trim {
            demo,
            from,
            to,
            out,
        } => {
            let d = read_demo(&demo)?;
            let t = demo::trim(&d, from, to).map_err(Failure::failed)?;
            demo_file::write_demo(&out, &t).map_err(Failure::output)?;
            Ok(format!("{} records -> {}\n", t.len(), out.display()))
        }
        EditOp::Merge { out, demos } => {
            let parts = demos
                .iter()
                .map(|p| read_demo(p))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let m = demo::merge(&parts).map_err(Failure::failed)?;
            demo_file::write_demo(&out, &m).map_err(Failure::output)?;
            Ok(format!(
                "{} segments, {} records -> {}\n",
                parts.len(),
                m.len(),
                out.display()
            ))
        }
        EditOp::Validate { demo } => validate(&demo),
    }
}

fn validate(path: &Path) -> Outcome {
    let d = read_demo(path)?;
    let r = d.meta.rates;
    let mut s = format!(
        "{}: {} records, {:.1} s, {:?} by {:?}{}\n  rates: imu {} Hz, sonar {} Hz, control {} Hz\n",
        path.display(),
        d.len(),
        d.duration(),
        d.meta.controller,
        d.meta.created_by,
        if d.meta.complete { "" } else { " (incomplete)" },
        r.imu_hz,
        r.sonar_hz,
        r.control_hz
    );
    let range = |f: fn(&trackbc_core::domain::Observation) -> f64| {
        d.records
            .iter()
            .map(|x| f(&x.obs))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    for (name, (lo, hi)) in [
        ("yaw", range(|o| o.yaw)),
        ("pitch", range(|o| o.pitch)),
        ("roll", range(|o| o.roll)),
        ("distance", range(|o| o.distance)),
    ] {
        let _ = writeln!(s, "  {name}: {lo:.2} .. {hi:.2}");
    }
    let bad = d.boundary_violations();
    if bad.is_empty() {
        s.push_str("  idle boundaries: ok\n");
        Ok(s)
    } else {
        let ts: Vec<String> = bad.iter().map(|t| format!("t={t:.1}s")).collect();
        Err(Failure::failed(format!(
            "{s}  non-idle boundary records at {}",
            ts.join(", ")
        )))
    }
}

fn report_path(out: &Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".report.json");
    PathBuf::from(p)
}

fn steps_line(report: &TrainReport, threshold: f64) -> String {
    match report.steps_to(threshold) {
        Some(s) => format!("reached {:.1}% at step {s}", threshold * 100.0),
        None => format!("did not reach {:.1}%", threshold * 100.0),
    }
}

fn cmd_train(a: TrainArgs) -> Outcome {
    let d = read_demo(&a.demo)?;
    let kind: ControllerKind = a.controller.map_or(d.meta.controller, Into::into);
    let m = a.window.unwrap_or(kind.default_window());
    let ds = demo::window(&d, m).map_err(Failure::failed)?;
    let cfg = TrainConfig {
        max_steps: a.steps,
        batch_size: a.batch,
        eval_every: a.eval_every,
        target_accuracy: a.target,
        ..TrainConfig::default()
    };
    let (ck, report) =
        train(&ds, NetworkShape::new(a.hidden, m), &cfg, a.seed).map_err(Failure::failed)?;
    checkpoint::write_checkpoint(&a.out, &ck).map_err(Failure::output)?;
    results::write_json(&report_path(&a.out), &report).map_err(Failure::output)?;
    Ok(format!(
        "{} windows, m={m}, hidden={}: {} steps, accuracy {:.4}, {}\n",
        ds.len(),
        a.hidden,
        report.steps,
        report.final_accuracy,
        steps_line(&report, a.threshold)
    ))
}

fn cmd_transfer(a: TransferArgs) -> Outcome {
    let src = checkpoint::read_checkpoint(&a.from).map_err(Failure::input)?;
    let d = read_demo(&a.demo)?;
    let ds = demo::window(&d, src.shape().m).map_err(Failure::failed)?;
    let cfg = TrainConfig {
        max_steps: a.steps,
        batch_size: a.batch,
        eval_every: a.eval_every,
        target_accuracy: a.target,
        ..TrainConfig::default()
    };
    let (ck, report) = transfer_train(&src, &ds, &cfg, a.seed).map_err(Failure::failed)?;
    checkpoint::write_checkpoint(&a.out, &ck).map_err(Failure::output)?;
    results::write_json(&report_path(&a.out), &report).map_err(Failure::output)?;
    let mut s = format!(
        "transfer=true: {} steps, accuracy {:.4}, {}\n",
        report.steps,
        report.final_accuracy,
        steps_line(&report, a.threshold)
    );
    if let (Some(base), Some(got)) = (a.baseline_steps, report.steps_to(a.threshold)) {
        let _ = writeln!(
            s,
            "from-scratch baseline {base} steps; transfer used {:.0}%",
            100.0 * got as f64 / base as f64
        );
    }
    Ok(s)
}

fn eval(a: EvalArgs) -> Outcome {
    let ck = checkpoint::read_checkpoint(&a.ckpt).map_err(Failure::input)?;
    let d = read_demo(&a.demo)?;
    let ds = demo::window(&d, ck.shape().m).map_err(Failure::failed)?;
    let acc = evaluate_accuracy(&ck, &ds).map_err(Failure::failed)?;
    Ok(format!("{} windows, accuracy {acc:.4}\n", ds.len()))
}

fn rollout(a: RolloutArgs) -> Outcome {
    if a.seeds.is_empty() {
        return Err(Failure::usage("--seeds needs at least one seed"));
    }
    let mob = checkpoint::read_checkpoint(&a.mobility).map_err(Failure::input)?;
    let man = checkpoint::read_checkpoint(&a.manipulation).map_err(Failure::input)?;
    let base = a.scenario.as_deref().map(load_spec).transpose()?;
    let cfg = LoopConfig {
        m_mobility: mob.shape().m,
        m_manipulation: man.shape().m,
        ..LoopConfig::default()
    };
    let mut out = String::new();
    let mut episodes = Vec::new();
    for &seed in &a.seeds {
        let spec = match &base {
            Some(s) => ScenarioSpec { seed, ..s.clone() },
            None => courses::variant(seed),
        };
        let world = World::new(spec, SimConfig::default());
        let ep = run_closed_loop(world, SensorConfig::default(), &mob, &man, &cfg)
            .map_err(Failure::failed)?;
        let _ = writeln!(
            out,
            "seed {seed}: {} delivered={} returned={} falls={} recoveries={} yaw_err={:.1} t={:.1}s",
            if ep.success() { "ok  " } else { "FAIL" },
            ep.delivered,
            ep.returned,
            ep.falls,
            ep.recoveries,
            ep.final_yaw_error,
            ep.ticks as f64 / cfg.control_hz
        );
        episodes.push(ep);
    }
    let summary = RolloutSummary::new(episodes);
    let _ = writeln!(out, "success {}/{}", summary.successes, summary.total);
    if let Some(p) = &a.out {
        results::write_json(p, &summary).map_err(Failure::output)?;
    }
    Ok(out)
}

fn cmd_teleop(a: TeleopArgs) -> Outcome {
    let spec = load_spec(&a.scenario)?;
    if !a.out.is_dir() {
        return Err(Failure::new(
            4,
            format!("{}: not a directory", a.out.display()),
        ));
    }
    let rt = tokio::runtime::Runtime::new().map_err(Failure::failed)?;
    rt.block_on(async {
        let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, a.port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::failed(format!("cannot bind {addr}: {e}")))?;
        eprintln!("teleop: waiting for a client on ws://{addr}");
        let cfg = teleop::TeleopConfig {
            spec,
            kind: a.controller.into(),
            out_dir: a.out.clone(),
            tick: Duration::from_millis(a.tick_ms.max(1)),
        };
        let s = teleop::serve(listener, cfg)
            .await
            .map_err(Failure::failed)?;
        let mut out = format!("{} ticks, {} frames dropped\n", s.ticks, s.dropped_frames);
        for p in &s.saved {
            let _ = writeln!(out, "saved {}", p.display());
        }
        if let Some(p) = &s.partial {
            let _ = writeln!(out, "partial recording {}", p.display());
        }
        Ok(out)
    })
}
