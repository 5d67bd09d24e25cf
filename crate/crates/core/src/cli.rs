//! Command-line front end. Every subcommand writes its datasets plus a
//! `<command>.manifest.json` into the output directory.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::RunConfig;
use crate::continuation::Direction;
use crate::equilibria::{self, Label};
use crate::error::{Error, Result};
use crate::geometry;
use crate::io;
use crate::reproduce::{self, l_tag, Outputs};
use crate::tipping::{self, ExperimentOptions};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DAISYWORLD_OUT";
pub const DEFAULT_OUT: &str = "daisyworld-out";

#[derive(Debug, Parser)]
#[command(name = "daisyworld", version, about = "Daisyworld equilibria, continuation, basins and rate-induced tipping")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $DAISYWORLD_OUT, then ./daisyworld-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid and diagram computations.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate and classify equilibria at one or more luminosities.
    Equilibria {
        #[arg(long = "L", value_delimiter = ',', num_args = 1..)]
        luminosities: Vec<f64>,
    },
    /// Continue equilibrium branches and locate folds.
    Continue {
        /// Start a single branch from this equilibrium instead of the configured set.
        #[arg(long, requires = "luminosity")]
        from: Option<Label>,
        #[arg(long = "L")]
        luminosity: Option<f64>,
        #[arg(long, value_parser = parse_direction)]
        direction: Option<Direction>,
        #[arg(long = "Lmin")]
        l_lo: Option<f64>,
        #[arg(long = "Lmax")]
        l_hi: Option<f64>,
    },
    /// Classify a grid of initial states by the attractor they reach.
    Basins {
        #[arg(long = "L")]
        luminosity: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Trace the stable manifold of a saddle.
    Manifold {
        #[arg(long)]
        label: Option<Label>,
        #[arg(long = "L")]
        luminosity: Option<f64>,
    },
    /// Run one rate-tipping experiment.
    Tip {
        #[arg(long = "Lmin")]
        l_min: Option<f64>,
        #[arg(long = "dL")]
        delta_l: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        /// Skip the stable-manifold crossing test.
        #[arg(long)]
        no_manifold: bool,
    },
    /// Tipping diagram over (r, delta_L) with the critical curve.
    Diagram {
        #[arg(long = "Lmin")]
        l_min: Option<f64>,
        #[arg(long)]
        r_points: Option<usize>,
        #[arg(long = "dL-points")]
        delta_l_points: Option<usize>,
    },
    /// Write one dataset per figure panel.
    ReproduceFiguresData,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Equilibria { .. } => "equilibria",
            Command::Continue { .. } => "continue",
            Command::Basins { .. } => "basins",
            Command::Manifold { .. } => "manifold",
            Command::Tip { .. } => "tip",
            Command::Diagram { .. } => "diagram",
            Command::ReproduceFiguresData => "reproduce-figures-data",
        }
    }
}

fn parse_direction(s: &str) -> std::result::Result<Direction, String> {
    match s.to_ascii_lowercase().as_str() {
        "increasing" | "up" => Ok(Direction::Increasing),
        "decreasing" | "down" => Ok(Direction::Decreasing),
        _ => Err(format!("expected increasing or decreasing, got {s:?}")),
    }
}

/// Merge the config file (if any) with command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    match &cli.command {
        Command::Equilibria { luminosities } if !luminosities.is_empty() => {
            cfg.equilibria.luminosities = luminosities.clone();
        }
        Command::Continue { from, luminosity, direction, l_lo, l_hi } => {
            let c = &mut cfg.continuation;
            if let (Some(label), Some(l)) = (from, luminosity) {
                c.starts = vec![crate::config::BranchStart {
                    label: *label,
                    luminosity: *l,
                    direction: direction.unwrap_or(Direction::Increasing),
                }];
            } else if let Some(d) = direction {
                c.starts.iter_mut().for_each(|s| s.direction = *d);
            }
            c.l_range = [l_lo.unwrap_or(c.l_range[0]), l_hi.unwrap_or(c.l_range[1])];
        }
        Command::Basins { luminosity, resolution } => {
            cfg.basins.luminosity = luminosity.unwrap_or(cfg.basins.luminosity);
            cfg.basins.resolution = resolution.unwrap_or(cfg.basins.resolution);
        }
        Command::Manifold { label, luminosity } => {
            cfg.manifold.label = label.unwrap_or(cfg.manifold.label);
            cfg.manifold.luminosity = luminosity.unwrap_or(cfg.manifold.luminosity);
        }
        Command::Tip { l_min, delta_l, r, no_manifold } => {
            let t = &mut cfg.tip;
            t.l_min = l_min.unwrap_or(t.l_min);
            t.delta_l = delta_l.unwrap_or(t.delta_l);
            t.r = r.unwrap_or(t.r);
            t.check_manifold &= !no_manifold;
        }
        Command::Diagram { l_min, r_points, delta_l_points } => {
            let d = &mut cfg.diagram;
            d.l_min = l_min.unwrap_or(d.l_min);
            d.r_points = r_points.unwrap_or(d.r_points);
            d.delta_l_points = delta_l_points.unwrap_or(d.delta_l_points);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Outcome of a dispatched command: a short human summary plus any
/// datasets that failed while others were written.
struct Report {
    summary: Vec<String>,
    failures: Vec<(String, Error)>,
}

fn dispatch(command: &Command, cfg: &RunConfig, out: &mut Outputs) -> Result<Report> {
    let p = &cfg.params;
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    match command {
        Command::Equilibria { .. } => {
            let mut all = Vec::new();
            for &l in &cfg.equilibria.luminosities {
                let eqs = equilibria::enumerate_equilibria(l, p)?;
                let labels: Vec<&str> = eqs.iter().map(|e| e.label.as_str()).collect();
                summary.push(format!("L={l} equilibria={}", labels.join(",")));
                all.extend(eqs);
            }
            io::write_file(&out.path("equilibria.csv"), |w| io::write_equilibria(w, &all))?;
        }
        Command::Continue { .. } => {
            let branches = reproduce::continue_all(cfg, cfg.workers)?;
            for (name, b) in &branches {
                let (lo, hi) = b.l_span();
                summary.push(format!(
                    "branch={name} points={} L=[{lo:.6}, {hi:.6}] end={:?}",
                    b.points.len(),
                    b.termination
                ));
                for f in &b.folds {
                    summary.push(format!("fold branch={name} L={:.6}", f.l_fold));
                }
            }
            io::write_file(&out.path("branches.csv"), |w| io::write_branches(w, &branches))?;
            io::write_file(&out.path("folds.csv"), |w| io::write_folds(w, &branches))?;
        }
        Command::Basins { .. } => {
            let b = cfg.basins;
            let grid = geometry::basin_grid(b.luminosity, b.resolution, &cfg.integrator, cfg.workers, p)?;
            for e in &grid.attractors {
                summary.push(format!("attractor={} area={:.4}", e.label, grid.area_fraction(e.label)));
            }
            let tag = l_tag(b.luminosity);
            io::write_file(&out.path(&format!("basins_{tag}.csv")), |w| io::write_basin_matrix(w, &grid))?;
            io::write_json(&out.path(&format!("basins_{tag}.json")), &io::basin_header(&grid))?;
        }
        Command::Manifold { .. } => {
            let m = cfg.manifold;
            let saddle = equilibria::find_equilibrium(m.label, m.luminosity, p)?;
            let curve = geometry::stable_manifold(&saddle, &m.options, p)?;
            summary.push(format!(
                "saddle={} points={} ends={:?},{:?}",
                m.label,
                curve.points.len(),
                curve.halves[0].end,
                curve.halves[1].end
            ));
            let name = format!("manifold_{}_{}.csv", m.label, l_tag(m.luminosity));
            io::write_file(&out.path(&name), |w| io::write_manifold(w, &curve))?;
        }
        Command::Tip { .. } => {
            let f = cfg.tip.forcing();
            let opts = ExperimentOptions {
                integrator: cfg.integrator,
                check_manifold: cfg.tip.check_manifold,
                ..Default::default()
            };
            let o = tipping::run_experiment(&f, &opts, p)?;
            summary.push(format!(
                "classification={} final={}",
                o.classification.as_str(),
                o.final_attractor.map_or("none", |l| l.as_str())
            ));
            io::write_file(&out.path("tip_trajectory.csv"), |w| io::write_trajectory(w, &o.trajectory, None, p))?;
            io::write_json(
                &out.path("tip_outcome.json"),
                &json!({
                    "forcing": f,
                    "classification": o.classification,
                    "final_attractor": o.final_attractor,
                    "crossed_manifold": o.crossed_manifold,
                    "window_end": o.window_end,
                }),
            )?;
        }
        Command::Diagram { .. } => {
            let files = reproduce::write_diagram(cfg, out)?;
            summary.push(format!("wrote {}", files.join(",")));
        }
        Command::ReproduceFiguresData => {
            failures = reproduce::reproduce_figures_data(cfg, out);
            summary.push(format!("datasets={} failed={}", out.files.len(), failures.len()));
        }
    }
    Ok(Report { summary, failures })
}

fn error_line(e: &Error) -> String {
    let message = e.to_string().replace('\n', " ");
    format!("error kind={} message={message:?}", e.kind())
}

/// Run the CLI on `args`; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").to_string();
            eprintln!("error kind=usage message={first:?}");
            return 1;
        }
    };
    let cfg = match resolve_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            return if e.is_configuration() { 1 } else { 2 };
        }
    };
    let dir = output_dir(&cfg);
    let mut out = Outputs::new(&dir);
    let started = Instant::now();
    let result = dispatch(&cli.command, &cfg, &mut out);
    let wall = started.elapsed().as_secs_f64();

    let (status, code, errors) = match &result {
        Ok(r) if r.failures.is_empty() => ("ok", 0, vec![]),
        Ok(r) => (
            "partial",
            2,
            r.failures.iter().map(|(name, e)| json!({"dataset": name, "kind": e.kind(), "message": e.to_string()})).collect(),
        ),
        Err(e) => (
            "failed",
            if e.is_configuration() { 1 } else { 2 },
            vec![json!({"kind": e.kind(), "message": e.to_string()})],
        ),
    };
    let manifest = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "status": status,
        "wall_time_seconds": wall,
        "outputs": out.files,
        "errors": errors,
        "config": cfg,
    });
    let manifest_path = dir.join(format!("{}.manifest.json", cli.command.name()));
    if let Err(e) = io::write_json(&manifest_path, &manifest) {
        eprintln!("{}", error_line(&e));
        return 2;
    }
    match result {
        Ok(r) => {
            for line in r.summary {
                println!("{line}");
            }
            for (name, e) in &r.failures {
                eprintln!("{} dataset={name}", error_line(e));
            }
        }
        Err(e) => eprintln!("{}", error_line(&e)),
    }
    code
}
