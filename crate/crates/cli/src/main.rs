mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stirap_core::experiments::{emit_pulse_shapes, linspace, reproduce_figure, scan, Table};
use stirap_core::propagator::{propagate, PropagationConfig, SystemModel};
use stirap_core::verify::{run_checks, sigma_pi_report};

use crate::config::{check_writable, Area, RunConfig};

#[derive(Parser)]
#[command(
    name = "stirap",
    version,
    about = "Shortcut-assisted multistate STIRAP simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one trajectory and write populations against time.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also record populations of the instantaneous eigenstates.
        #[arg(long)]
        track_adiabatic: bool,
        /// Rerun with twice the steps and report the change in efficiency.
        #[arg(long)]
        check_convergence: bool,
    },
    /// Final efficiency over a grid of one parameter.
    Scan {
        #[command(flatten)]
        run: RunArgs,
        /// phase, xi, beta or area.
        #[arg(long)]
        parameter: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Write JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Pump, Stokes and shortcut pulse shapes against time.
    #[command(alias = "shortcut")]
    Pulses {
        #[command(flatten)]
        run: RunArgs,
        /// Number of time samples between --t-start and --t-end.
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Run the self-check suite and print one line per check.
    Verify {
        #[arg(long)]
        json: bool,
    },
    /// Write the data tables behind one figure (3 to 8).
    Reproduce {
        #[arg(long)]
        fig: u32,
        /// Directory receiving one CSV per table.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the resolved configuration to this file and exit.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    /// three, m21, m22, sigmapi22, sigmapi3212 or generic.
    #[arg(long)]
    scheme: Option<String>,
    /// Coupling coefficients of a generic chain, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cg: Option<Vec<f64>>,
    /// Individual pulse area, e.g. `10pi` or `31.4`.
    #[arg(long)]
    area: Option<String>,
    /// Pump–Stokes delay in units of T.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// none, type1, type2, type3, numeric2, numeric3 or numeric-full.
    #[arg(long)]
    shortcut: Option<String>,
    /// Phase of the Ω_{0,2} shortcut coupling.
    #[arg(long, allow_hyphen_values = true)]
    phase: Option<f64>,
    /// Amplitude factor on the Ω_{−2,0} shortcut coupling.
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// Factor on the Stokes field.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// magnus4 or midpoint.
    #[arg(long)]
    integrator: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.scheme {
            c.system.scheme = v.clone();
        }
        if let Some(v) = &self.cg {
            c.system.cg = Some(v.clone());
        }
        if let Some(v) = &self.area {
            c.drive.area = Area::Text(v.clone());
        }
        set(&mut c.drive.tau, self.tau);
        if let Some(v) = &self.shortcut {
            c.shortcut.kind = v.clone();
        }
        set(&mut c.shortcut.phase, self.phase);
        set(&mut c.shortcut.xi, self.xi);
        set(&mut c.shortcut.beta, self.beta);
        set(&mut c.propagation.steps, self.steps);
        set(&mut c.propagation.t_start, self.t_start);
        set(&mut c.propagation.t_end, self.t_end);
        if let Some(v) = &self.integrator {
            c.propagation.integrator = v.clone();
        }
        if let Some(v) = &self.output {
            c.output.path = Some(v.to_string_lossy().into_owned());
        }
        Ok(c)
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Writes the resolved config when asked to; returns whether it did.
fn dump_config(run: &RunArgs, cfg: &RunConfig) -> Result<bool> {
    let Some(path) = &run.dump_config else {
        return Ok(false);
    };
    check_writable(path)?;
    std::fs::write(path, cfg.to_toml()?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    println!("config written to {}", path.display());
    Ok(true)
}

fn open_output(path: Option<&str>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {p}"))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn simulate(run: &RunArgs, track_adiabatic: bool, check_convergence: bool) -> Result<()> {
    let cfg = run.resolve()?;
    cfg.validate()?;
    if dump_config(run, &cfg)? {
        return Ok(());
    }
    let model = SystemModel::new(cfg.scheme()?, cfg.drive()?, cfg.shortcut_scheme()?)?;
    let prop = PropagationConfig {
        track_adiabatic,
        check_convergence,
        ..cfg.propagation()?
    };
    let r = propagate(&model, &prop)?;
    if let Some(path) = cfg.output.path.as_deref() {
        let mut columns = vec!["t [T]".to_string()];
        columns.extend(r.labels.iter().map(|l| format!("P[{l}]")));
        if r.adiabatic.is_some() {
            columns.extend((0..r.labels.len()).map(|k| format!("P_adiabatic[{k}]")));
        }
        let rows = (0..r.times.len())
            .map(|k| {
                let mut row = vec![r.times[k]];
                row.extend_from_slice(&r.populations[k]);
                if let Some(a) = &r.adiabatic {
                    row.extend_from_slice(&a[k]);
                }
                row
            })
            .collect();
        Table { columns, rows }.write_csv(open_output(Some(path))?)?;
        println!("trajectory written to {path}");
    }
    println!("norm drift: {:.3e}", r.norm_drift);
    if let Some(d) = r.convergence_delta {
        println!("step-doubling change: {d:.3e}");
    }
    println!("final efficiency: {:.6}", r.efficiency);
    Ok(())
}

fn run_scan(
    run: &RunArgs,
    parameter: &Option<String>,
    from: Option<f64>,
    to: Option<f64>,
    points: Option<usize>,
    json: bool,
) -> Result<()> {
    let mut cfg = run.resolve()?;
    if let Some(p) = parameter {
        cfg.scan.parameter = p.clone();
    }
    set(&mut cfg.scan.from, from.map(Some));
    set(&mut cfg.scan.to, to.map(Some));
    set(&mut cfg.scan.points, points.map(Some));
    cfg.validate()?;
    let spec = cfg.scan_spec()?;
    if dump_config(run, &cfg)? {
        return Ok(());
    }
    let r = scan(&spec)?;
    let mut out = open_output(cfg.output.path.as_deref())?;
    if json {
        serde_json::to_writer_pretty(&mut out, &r)?;
        writeln!(out)?;
    } else {
        let unit = match r.parameter.name() {
            "phase" | "area" => " [rad]",
            _ => "",
        };
        let table = Table {
            columns: vec![format!("{}{unit}", r.parameter), "efficiency".into()],
            rows: r
                .grid
                .iter()
                .zip(&r.efficiencies)
                .map(|(&v, &p)| vec![v, p])
                .collect(),
        };
        table.write_csv(&mut out)?;
    }
    out.flush()?;
    if cfg.output.path.is_some() {
        println!(
            "argmax {} = {:.6}, max efficiency {:.6}",
            r.parameter,
            r.argmax(),
            r.max()
        );
    }
    Ok(())
}

fn pulses(run: &RunArgs, samples: usize) -> Result<()> {
    let cfg = run.resolve()?;
    cfg.validate()?;
    anyhow::ensure!(samples >= 2, "need at least two time samples");
    if dump_config(run, &cfg)? {
        return Ok(());
    }
    let sc = cfg.shortcut_scheme()?;
    let p = cfg.propagation()?;
    let table = emit_pulse_shapes(
        &cfg.scheme()?,
        sc.kind,
        &cfg.drive()?,
        &linspace(p.t_start, p.t_end, samples),
    )?;
    let mut out = open_output(cfg.output.path.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn verify(json: bool) -> Result<bool> {
    let checks = run_checks();
    let passed = checks.iter().all(|c| c.passed);
    if json {
        let report = serde_json::json!({
            "passed": passed,
            "checks": checks,
            "sigma_pi": sigma_pi_report(200)?,
        });
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for c in &checks {
            println!(
                "{} {:<28} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        for r in sigma_pi_report(200)? {
            println!(
                "     {:<28} numeric vs closed-form fields: max relative deviation {:.3e} (at theta = {:.4})",
                format!("sigma-pi-{}", r.scheme),
                r.formula_deviation,
                r.worst_theta
            );
        }
        let failed = checks.iter().filter(|c| !c.passed).count();
        println!("{} checks, {} failed", checks.len(), failed);
    }
    Ok(passed)
}

fn reproduce(fig: u32, out_dir: &Path) -> Result<()> {
    anyhow::ensure!(
        out_dir.is_dir(),
        "output directory {} does not exist",
        out_dir.display()
    );
    for (name, table) in reproduce_figure(fig)? {
        let path = out_dir.join(format!("{name}.csv"));
        let file =
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        table.write_csv(BufWriter::new(file))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            run,
            track_adiabatic,
            check_convergence,
        } => simulate(run, *track_adiabatic, *check_convergence),
        Command::Scan {
            run,
            parameter,
            from,
            to,
            points,
            json,
        } => run_scan(run, parameter, *from, *to, *points, *json),
        Command::Pulses { run, samples } => pulses(run, *samples),
        Command::Verify { json } => match verify(*json) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::FAILURE,
            Err(e) => Err(e),
        },
        Command::Reproduce { fig, out_dir } => reproduce(*fig, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
