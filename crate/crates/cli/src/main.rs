use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use reflectolab_core::corpus;
use reflectolab_core::exact_num::{fmt_vector, Feasibility, Rational};
use reflectolab_core::fluid_sim::{simulate, simulate_branching, SimOptions, Status, Trace, DEFAULT_ZSET_CAP};
use reflectolab_core::formats::{parse_instance, parse_machine, sample_csv, to_json, InstanceFile, MachineFile};
use reflectolab_core::matrix_props::{
    check_certificate, default_certificate, is_completely_s, is_s_matrix, CompletelySVerdict, DEFAULT_DIM_CAP,
};
use reflectolab_core::reduction::{apply_halting_modification, reduce, Group};
use reflectolab_core::verify::{semi_decide_stability, verify_encoding, Limits, Report};

const ZSET_CAP_VAR: &str = "REFLECTOLAB_ZSET_CAP";
const BRANCH_BUDGET: usize = 64;
/// Step budget used for the expected halting steps of the corpus.
const CORPUS_BUDGET: usize = 100;

#[derive(Parser)]
#[command(name = "reflectolab", version, about = "Counter machines as fluid Skorokhod problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Det,
    Branch,
}

#[derive(Subcommand)]
enum Command {
    /// Run a counter machine from its initial configuration.
    RunCm {
        machine: PathBuf,
        #[arg(long)]
        budget: usize,
    },
    /// Build the Skorokhod instance for a machine.
    Reduce {
        machine: PathBuf,
        /// Apply the halting modification.
        #[arg(long)]
        modify: bool,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Simulate an instance exactly.
    Simulate {
        instance: PathBuf,
        #[arg(long)]
        t_max: Rational,
        #[arg(long, value_enum, default_value = "det")]
        mode: Mode,
        /// Sampling step of the CSV export.
        #[arg(long)]
        sample_dt: Option<Rational>,
        #[arg(short = 'o')]
        output: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check z(5t) against the machine configuration at every step.
    VerifyEncoding {
        machine: PathBuf,
        #[arg(long)]
        budget: usize,
        /// Write the JSON report here.
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Budget-bounded stability verdict through the halting modification.
    Stability {
        machine: PathBuf,
        #[arg(long)]
        budget: usize,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// S-matrix and completely-S checks on an instance's reflection matrix.
    CheckS {
        instance: PathBuf,
        /// Enumerate every principal submatrix.
        #[arg(long)]
        brute_force: bool,
        /// A JSON array of positive rationals, or `default`.
        #[arg(long)]
        certificate: Option<String>,
    },
    /// Write the sample machines and their expected halting steps.
    Corpus { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn zset_cap() -> Result<usize> {
    match std::env::var(ZSET_CAP_VAR) {
        Ok(v) => v.trim().parse().with_context(|| format!("{ZSET_CAP_VAR}={v:?} is not a count")),
        Err(_) => Ok(DEFAULT_ZSET_CAP),
    }
}

fn limits() -> Result<Limits> {
    Ok(Limits {
        zset_cap: zset_cap()?,
        ..Limits::default()
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_machine(path: &Path) -> Result<(reflectolab_core::counter_machine::CounterMachine, reflectolab_core::counter_machine::Configuration)> {
    parse_machine(&read(path)?).with_context(|| format!("loading machine {}", path.display()))
}

fn emit_report(report: &Report, output: Option<&Path>) -> Result<()> {
    for c in report.failures() {
        let at = c.time.as_ref().map(|t| format!(" at t={t}")).unwrap_or_default();
        println!("FAIL {}{at}: expected {}, got {}", c.name, c.expected, c.actual);
    }
    println!("{}", report.summary);
    if let Some(path) = output {
        write(path, &to_json(report)?)?;
    }
    Ok(())
}

fn status_code(status: &Status) -> u8 {
    match status {
        Status::Ambiguous { .. } | Status::ZenoSuspected { .. } => 2,
        _ => 0,
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::RunCm { machine, budget } => {
            let (cm, cfg0) = load_machine(&machine)?;
            let run = cm.run(cfg0, budget)?;
            for (t, cfg) in run.trajectory.iter().enumerate() {
                println!("t={t} {cfg}");
            }
            match run.halted_at {
                Some(t) => println!("halted_at: {t}"),
                None => println!("no halt within budget {budget}"),
            }
            Ok(0)
        }
        Command::Reduce { machine, modify, output } => {
            let (cm, cfg0) = load_machine(&machine)?;
            let mut inst = reduce(&cm, &cfg0)?;
            if modify {
                inst = apply_halting_modification(&inst, cm.halt_state())?;
            }
            write(&output, &to_json(&InstanceFile::from_instance(&inst))?)?;
            let layout = inst.layout.expect("reduction sets the layout");
            println!("d={}", inst.dim());
            let groups: Vec<String> = Group::ALL.iter().map(|&g| format!("{g}:{}", layout.size(g))).collect();
            println!("groups {}", groups.join(" "));
            println!("modified: {}", inst.modified);
            Ok(0)
        }
        Command::Simulate { instance, t_max, mode, sample_dt, output, csv } => {
            let inst = parse_instance(&read(&instance)?)?;
            let opts = SimOptions {
                zset_cap: zset_cap()?,
                ..SimOptions::until(t_max.clone())
            };
            let traces = match mode {
                Mode::Det => vec![simulate(&inst, &opts)?],
                Mode::Branch => simulate_branching(&inst, &opts, BRANCH_BUDGET)?,
            };
            let dt = sample_dt.unwrap_or_else(|| Rational::new(1, 4).expect("nonzero denominator"));
            let suffixed = |base: &Path, k: usize| -> PathBuf {
                if traces.len() == 1 {
                    base.to_path_buf()
                } else {
                    PathBuf::from(format!("{}.{k}", base.display()))
                }
            };
            let mut code = 0;
            for (k, trace) in traces.iter().enumerate() {
                let path = suffixed(&output, k);
                write(&path, &to_json(trace)?)?;
                if let Some(csv) = &csv {
                    write(&suffixed(csv, k), &sample_csv(trace, &dt, &t_max)?)?;
                }
                print_trace_summary(&path, trace);
                code = code.max(status_code(&trace.status));
            }
            Ok(code)
        }
        Command::VerifyEncoding { machine, budget, output } => {
            let (cm, cfg0) = load_machine(&machine)?;
            let out = verify_encoding(&cm, cfg0, budget, &limits()?)?;
            emit_report(&out.report, output.as_deref())?;
            Ok(out.report.outcome().exit_code() as u8)
        }
        Command::Stability { machine, budget, output } => {
            let (cm, cfg0) = load_machine(&machine)?;
            let out = semi_decide_stability(&cm, cfg0, budget, &limits()?)?;
            emit_report(&out.checked.report, output.as_deref())?;
            println!("{}", out.verdict);
            Ok(out.verdict.exit_code() as u8)
        }
        Command::CheckS { instance, brute_force, certificate } => {
            let inst = parse_instance(&read(&instance)?)?;
            check_s(&inst, brute_force, certificate.as_deref())
        }
        Command::Corpus { dir } => {
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut expected = serde_json::Map::new();
            for entry in corpus::all() {
                let file = MachineFile::from_machine(&entry.machine, entry.initial);
                write(&dir.join(format!("{}.json", entry.name)), &to_json(&file)?)?;
                let run = entry.machine.run(entry.initial, CORPUS_BUDGET)?;
                expected.insert(entry.name.to_string(), serde_json::json!({ "halted_at": run.halted_at, "budget": CORPUS_BUDGET }));
            }
            write(&dir.join("expected.json"), &to_json(&expected)?)?;
            println!("wrote {} machines to {}", expected.len(), dir.display());
            Ok(0)
        }
    }
}

fn print_trace_summary(path: &Path, trace: &Trace) {
    let min = trace.min_step().map_or("none".into(), |m| m.to_string());
    println!(
        "{}: {} ({} segments, min step {min})",
        path.display(),
        trace.status,
        trace.segments.len()
    );
    if let Some(last) = trace.segments.last() {
        println!("  last state {}", fmt_vector(&last.end().unwrap_or_else(|| last.z.clone())));
    }
}

fn check_s(
    inst: &reflectolab_core::reduction::SkorokhodInstance,
    brute_force: bool,
    certificate: Option<&str>,
) -> Result<u8> {
    let r = &inst.r;
    let mut code = 0u8;
    match is_s_matrix(r)? {
        Feasibility::Feasible(w) => println!("S-matrix: yes, w = {}", fmt_vector(&w)),
        Feasibility::Infeasible(y) => {
            println!("S-matrix: no, certificate y = {}", fmt_vector(&y));
            code = 1;
        }
    }
    if let Some(spec) = certificate {
        let v: Vec<Rational> = if spec == "default" {
            let Some(layout) = inst.layout else {
                bail!("the default certificate needs an instance built by reduce");
            };
            default_certificate(layout.m())?
        } else {
            serde_json::from_str(&read(Path::new(spec))?).with_context(|| format!("parsing certificate {spec}"))?
        };
        let report = check_certificate(r, &v)?;
        let worst = report.rows.iter().min_by(|a, b| a.worst_case.cmp(&b.worst_case));
        if let Some(w) = worst {
            println!("certificate: smallest row margin {} at row {}", w.worst_case, w.row);
        }
        if report.passes() {
            println!("certificate: passes, so the matrix is completely-S");
        } else {
            for row in report.rows.iter().filter(|r| !r.pass) {
                println!("certificate: row {} fails with margin {}", row.row, row.worst_case);
            }
            code = code.max(1);
        }
    }
    if brute_force {
        match is_completely_s(r, DEFAULT_DIM_CAP) {
            Ok(CompletelySVerdict::Yes) => println!("completely-S: yes"),
            Ok(CompletelySVerdict::No { indices, farkas }) => {
                println!("completely-S: no, principal set {indices:?} has certificate y = {}", fmt_vector(&farkas));
                code = code.max(1);
            }
            Err(e @ reflectolab_core::Error::Capacity { .. }) => {
                println!("completely-S: inconclusive ({e})");
                return Ok(2);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(code)
}
