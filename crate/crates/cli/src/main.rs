//! `gridmodal` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use gridmodal::cases::{self, case_stats};
use gridmodal::dynamics::{assemble, DynamicSystem, UnitOutputs};
use gridmodal::power_flow::{solve_power_flow, PfOptions, PowerFlowSolution};
use gridmodal::reports::{self, Command, RunManifest};
use gridmodal::small_signal::{eigen_analysis, linearize, ModalResult, DEFAULT_H_REL};
use gridmodal::system_model::{parse_case_str, PowerSystemCase};
use gridmodal::time_domain::{simulate, Event, SimOptions, EVENT_GRAMMAR};

const EXIT_INPUT: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_UNSTABLE: u8 = 3;
const EXIT_EIGEN: u8 = 4;
const EXIT_SIMULATION: u8 = 5;

#[derive(Parser)]
#[command(name = "gridmodal", version, about = "Power flow, modal analysis and stiff simulation of small power systems")]
struct Cli {
    /// Directory that receives CSV, SVG and manifest files.
    #[arg(long, global = true, env = "GRIDMODAL_OUT", default_value = "gridmodal-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the power flow and write the bus solution.
    Pf {
        /// Case file path or bundled case name.
        case: String,
    },
    /// Linearize at the power-flow equilibrium and write the spectrum.
    Modal {
        case: String,
        #[arg(long, value_enum, default_value_t = Pss::On)]
        pss: Pss,
        /// Also draw the eigenvalue map.
        #[arg(long)]
        svg: bool,
    },
    /// Simulate reference steps from the equilibrium.
    #[command(after_help = format!("Event grammar: {EVENT_GRAMMAR}\n  pm   = mechanical power reference\n  vref = exciter voltage reference\n  %    = change relative to the current reference; without it the value is added in per unit"))]
    Sim {
        case: String,
        /// Reference step, repeatable.
        #[arg(long = "event")]
        events: Vec<String>,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Pss::On)]
        pss: Pss,
        #[arg(long, default_value_t = 0.02)]
        max_step: f64,
        #[arg(long, default_value_t = 0.02)]
        output_dt: f64,
        /// Also plot every unit quantity.
        #[arg(long)]
        svg: bool,
    },
    /// List the bundled cases.
    Cases,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Pss {
    On,
    Off,
}

impl Pss {
    fn as_str(self) -> &'static str {
        match self {
            Pss::On => "on",
            Pss::Off => "off",
        }
    }
}

/// Failure carrying its exit code and a short machine-readable kind.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn new<E: std::fmt::Debug + std::fmt::Display>(code: u8, err: E) -> Self {
        let dbg = format!("{err:?}");
        let kind = dbg.split(|c: char| !c.is_alphanumeric() && c != '_').next().unwrap_or("Error").to_string();
        Failure { code, kind, message: err.to_string() }
    }

    fn io(err: anyhow::Error) -> Self {
        Failure { code: EXIT_INPUT, kind: "Io".into(), message: format!("{err:#}") }
    }
}

struct LoadedCase {
    label: String,
    stem: String,
    text: String,
    case: PowerSystemCase,
}

fn load_case(arg: &str) -> Result<LoadedCase, Failure> {
    let path = Path::new(arg);
    let (label, text) = if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {arg}")).map_err(Failure::io)?;
        (arg.to_string(), text)
    } else {
        let name = arg.strip_suffix(".case").unwrap_or(arg);
        match cases::find(name) {
            Some(b) => (format!("bundled:{}", b.name), b.text.to_string()),
            None => {
                return Err(Failure {
                    code: EXIT_INPUT,
                    kind: "CaseNotFound".into(),
                    message: format!("'{arg}' is neither a file nor a bundled case"),
                })
            }
        }
    };
    let case = parse_case_str(&text).map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let stem = Path::new(arg.strip_prefix("bundled:").unwrap_or(arg))
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "case".into());
    Ok(LoadedCase { label, stem, text, case })
}

struct Output {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Output {
    fn new(root: &Path, case: &LoadedCase, command: Command, run: &str) -> Result<Self, Failure> {
        let dir = root.join(&case.stem).join(run);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::io)?;
        let manifest = RunManifest::new(&case.label, &case.text, command, &dir.display().to_string());
        Ok(Output { dir, manifest })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display())).map_err(Failure::io)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf, Failure> {
        let json = self.manifest.to_json().map_err(|e| Failure::new(EXIT_INPUT, e))?;
        self.write("manifest.json", &json)?;
        Ok(self.dir)
    }
}

fn report_err(e: reports::ReportError) -> Failure {
    Failure::new(EXIT_INPUT, e)
}

fn power_flow(case: &PowerSystemCase) -> Result<PowerFlowSolution, Failure> {
    solve_power_flow(case, &PfOptions::default()).map_err(|e| Failure::new(EXIT_DIVERGED, e))
}

fn prepare(loaded: &LoadedCase, pss: Pss) -> Result<DynamicSystem, Failure> {
    let case = match pss {
        Pss::On => loaded.case.clone(),
        Pss::Off => loaded.case.without_pss(),
    };
    let pf = power_flow(&case)?;
    assemble(&case, &pf).map_err(|e| Failure::new(EXIT_INPUT, e))
}

fn modal(sys: &DynamicSystem) -> Result<ModalResult, Failure> {
    let a = linearize(sys, DEFAULT_H_REL).map_err(|e| Failure::new(EXIT_EIGEN, e))?;
    eigen_analysis(&a).map_err(|e| Failure::new(EXIT_EIGEN, e))
}

fn cmd_pf(out: &Path, arg: &str) -> Result<u8, Failure> {
    let loaded = load_case(arg)?;
    let pf = power_flow(&loaded.case)?;
    let mut o = Output::new(out, &loaded, Command::Pf, "pf")?;
    o.write("power_flow.csv", &reports::power_flow_csv(&loaded.case, &pf).map_err(report_err)?)?;
    let slack = loaded.case.slack_index();
    let s_gen = pf.generation(&loaded.case, slack) * loaded.case.base.s_base;
    println!("converged in {} iterations, max mismatch {:.3e} pu", pf.iterations, pf.max_mismatch);
    println!("slack {}: P = {:.3} MW, Q = {:.3} MVAr", loaded.case.buses[slack].name, s_gen.re, s_gen.im);
    println!("wrote {}", o.finish()?.display());
    Ok(0)
}

fn cmd_modal(out: &Path, arg: &str, pss: Pss, svg: bool) -> Result<u8, Failure> {
    let loaded = load_case(arg)?;
    let sys = prepare(&loaded, pss)?;
    let result = modal(&sys)?;
    let mut o = Output::new(out, &loaded, Command::Modal, &format!("modal-pss-{}", pss.as_str()))?;
    o.manifest = o.manifest.clone().option("pss", pss.as_str()).option("svg", svg);
    o.write("modes.csv", &reports::modal_csv(&result).map_err(report_err)?)?;
    o.write("catalog.csv", &reports::catalog_csv(&sys).map_err(report_err)?)?;
    if svg {
        let title = format!("{} eigenvalues (PSS {})", loaded.stem, pss.as_str());
        o.write("eigenvalues.svg", &reports::eigenvalue_map_svg(&result, &title).map_err(report_err)?)?;
    }
    println!(
        "{} states, {} modes ({} oscillatory), stable: {}",
        sys.n_states(),
        result.modes.len(),
        result.modes.iter().filter(|m| m.is_oscillatory()).count(),
        result.stable
    );
    if let Some(m) = result.least_damped_mode() {
        println!(
            "least damped: {:.6} {:+.6}j  f = {:.4} Hz  zeta = {:.5}  ({})",
            m.lambda.re, m.lambda.im, m.freq_hz, m.damping_ratio, m.category
        );
    }
    if let Some(m) = result.least_damped_in_band(0.3, 3.0) {
        println!("least damped in 0.3-3 Hz: f = {:.4} Hz  zeta = {:.5}", m.freq_hz, m.damping_ratio);
    }
    println!("wrote {}", o.finish()?.display());
    Ok(if result.stable { 0 } else { EXIT_UNSTABLE })
}

struct SimArgs {
    events: Vec<String>,
    t_end: f64,
    pss: Pss,
    max_step: f64,
    output_dt: f64,
    svg: bool,
}

fn cmd_sim(out: &Path, arg: &str, a: SimArgs) -> Result<u8, Failure> {
    let events: Vec<Event> =
        a.events.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let opts = SimOptions { t_end: a.t_end, max_step: a.max_step, output_dt: a.output_dt, ..Default::default() };
    opts.validate().map_err(|e| Failure::new(EXIT_INPUT, e))?;
    let loaded = load_case(arg)?;
    let sys = prepare(&loaded, a.pss)?;
    for e in &events {
        if sys.input_position(&e.unit, e.input.catalog_name()).is_none() {
            return Err(Failure::new(
                EXIT_INPUT,
                gridmodal::time_domain::SimError::UnknownTarget { unit: e.unit.clone(), input: e.input },
            ));
        }
    }
    let ts = simulate(&sys, &events, &opts).map_err(|e| Failure::new(EXIT_SIMULATION, e))?;

    let mut o = Output::new(out, &loaded, Command::Sim, &format!("sim-pss-{}", a.pss.as_str()))?;
    o.manifest = o
        .manifest
        .clone()
        .option("pss", a.pss.as_str())
        .option("t_end", a.t_end)
        .option("max_step", a.max_step)
        .option("output_dt", a.output_dt)
        .option("events", a.events.join(" "))
        .option("svg", a.svg);
    o.write("time_series.csv", &reports::time_series_csv(&ts).map_err(report_err)?)?;
    if a.svg {
        for q in UnitOutputs::NAMES {
            o.write(&format!("{q}.svg"), &reports::time_series_svg(&ts, q).map_err(report_err)?)?;
        }
    }
    println!(
        "{} samples, {} accepted / {} rejected steps, {} Jacobians",
        ts.t.len(),
        ts.stats.accepted_steps,
        ts.stats.rejected_steps,
        ts.stats.jacobian_evals
    );
    let t1 = a.t_end;
    let t0 = (t1 - 10.0).max(0.0);
    println!("speed oscillation envelope over [{t0}, {t1}] s: {:.4e} pu", ts.speed_oscillation_envelope(t0, t1));
    println!("wrote {}", o.finish()?.display());
    Ok(0)
}

fn cmd_cases() -> Result<u8, Failure> {
    println!(
        "{:<14} {:>6} {:>9} {:>6} {:>9} {:>9}  {}",
        "name", "buses", "branches", "units", "load_mw", "exact_pi", "unit_mva"
    );
    for b in &cases::BUNDLED {
        let case = b.load().map_err(|e| Failure::new(EXIT_INPUT, e))?;
        let s = case_stats(&case);
        let mva: Vec<String> = s.unit_mva.iter().map(|m| format!("{m}")).collect();
        println!(
            "{:<14} {:>6} {:>9} {:>6} {:>9} {:>9}  {}",
            b.name,
            s.buses,
            s.branches,
            s.units,
            s.total_load_mw,
            s.exact_pi_branches,
            mva.join("/")
        );
    }
    println!();
    for b in &cases::BUNDLED {
        println!("{}: {}. {}", b.name, b.description, b.provenance);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli.out;
    let result = match cli.command {
        Cmd::Pf { case } => cmd_pf(&out, &case),
        Cmd::Modal { case, pss, svg } => cmd_modal(&out, &case, pss, svg),
        Cmd::Sim { case, events, t_end, pss, max_step, output_dt, svg } => {
            cmd_sim(&out, &case, SimArgs { events, t_end, pss, max_step, output_dt, svg })
        }
        Cmd::Cases => cmd_cases(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message);
            ExitCode::from(f.code)
        }
    }
}
