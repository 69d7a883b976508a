use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scanner_core::config::ToolConfig;
use scanner_core::geometry::{config1_report, config2_report};
use scanner_core::optics::pgm;
use scanner_core::optics::sweep::{self, benchmark_pattern, Instance, ShapeKind, SweepRow};
use scanner_core::partitions::{self, parse_sites, AddressPattern};
use scanner_core::scheduler::{self, compile_config1, compile_config2, parse_layers};
use scanner_core::{Error, Exec};

#[derive(Parser)]
#[command(name = "scanner", version, about = "Hybrid AOD + SLM scanner design and simulation")]
struct Cli {
    /// Configuration file; built-in reference values when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::C1)]
    mode: Mode,
    /// Reserved; every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    C1,
    C2,
}

#[derive(Subcommand)]
enum Command {
    /// Rates and capacities for every design row of the configuration.
    Design,
    /// Count and export the canonical patterns of a sub-array.
    Partitions {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k_max: u32,
        /// Fail if the catalog needs more patches than this.
        #[arg(long)]
        available: Option<u64>,
    },
    /// Simulate one hologram and report its figures of merit.
    Holo {
        #[arg(long)]
        pixels: u32,
        /// Target sites, e.g. "(3,3) (2,1)"; defaults to the benchmark order.
        #[arg(long)]
        targets: Option<String>,
        /// Number of benchmark targets when --targets is absent.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        shape: Option<String>,
        #[arg(long)]
        grid_n: Option<usize>,
        /// Also dump the phase mask as a 16-bit graymap.
        #[arg(long)]
        mask_pgm: Option<PathBuf>,
    },
    /// Pixel-count by target-count sweep.
    Sweep {
        #[arg(long)]
        shape: Option<String>,
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Compile a layer file into a timeline.
    Schedule {
        /// Layer file; falls back to `paths.layers` of the configuration.
        #[arg(long)]
        layers: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ToolConfig, Failure> {
    match path {
        None => Ok(ToolConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            Ok(ToolConfig::parse(&text)?)
        }
    }
}

/// Writes via a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Compute(format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Design => {
            let report = match cli.mode {
                Mode::C1 => design_c1(&cfg)?,
                Mode::C2 => design_c2(&cfg)?,
            };
            emit(out, &report)
        }
        Command::Partitions { m, n, k_max, available } => {
            let total = partitions::partition_total(*m, *n, *k_max)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let available = available.unwrap_or(u64::try_from(total).unwrap_or(u64::MAX).max(1));
            let catalog = partitions::build_catalog(*m, *n, *k_max, available)?;
            if let Some(p) = out {
                write_atomic(p, &catalog.to_text())?;
            }
            println!("{total}");
            Ok(())
        }
        Command::Holo {
            pixels,
            targets,
            k,
            shape,
            grid_n,
            mask_pgm,
        } => {
            let sim = sim_config(&cfg, *grid_n);
            let shape = pick_shape(&cfg, shape.as_deref())?;
            let sites = match targets {
                Some(t) => AddressPattern::new(parse_sites(t).map_err(Failure::Usage)?)
                    .map_err(|e| Failure::Usage(e.to_string()))?,
                None => benchmark_pattern(*k).map_err(|e| Failure::Usage(e.to_string()))?,
            };
            let inst = Instance::new(&sim, *pixels, &sites, shape, exec)?;
            let mask = inst.hologram(&sim, exec)?;
            let metrics = inst.evaluate(&mask, exec)?;
            if let Some(p) = mask_pgm {
                let mut buf = Vec::new();
                pgm::write_mask(&mut buf, &mask)?;
                let io = |e: std::io::Error| Failure::Compute(format!("{}: {e}", p.display()));
                let mut tmp = p.as_os_str().to_owned();
                tmp.push(".tmp");
                fs::write(&tmp, &buf).map_err(io)?;
                fs::rename(&tmp, p).map_err(io)?;
            }
            let row = SweepRow {
                pixels: *pixels,
                n_targets: sites.len(),
                shape,
                metrics,
            };
            emit(out, &sweep::sweep_csv(std::slice::from_ref(&row)))?;
            if out.is_some() {
                println!(
                    "efficiency {:.4} accuracy {:.4} crosstalk {:.4}",
                    row.metrics.efficiency, row.metrics.accuracy, row.metrics.crosstalk
                );
            }
            Ok(())
        }
        Command::Sweep { shape, grid_n } => {
            let sim = sim_config(&cfg, *grid_n);
            let shape = pick_shape(&cfg, shape.as_deref())?;
            let patterns = cfg
                .simulation
                .targets
                .iter()
                .map(|&k| benchmark_pattern(k))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let rows = sweep::sweep_pixels(&sim, &cfg.simulation.pixels, &patterns, shape, exec)?;
            emit(out, &sweep::sweep_csv(&rows))?;
            if out.is_some() {
                println!("{} rows", rows.len());
            }
            Ok(())
        }
        Command::Schedule { layers } => {
            let path = layers
                .clone()
                .or_else(|| cfg.paths.layers.as_ref().map(PathBuf::from))
                .ok_or_else(|| Failure::Usage("no layer file given (--layers or paths.layers)".into()))?;
            let text = fs::read_to_string(&path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            let layers = parse_layers(&text)?;
            let timeline = match cli.mode {
                Mode::C1 => compile_config1(&layers, &cfg.scanner)?,
                Mode::C2 => {
                    let s = &cfg.schedule;
                    let available = cfg.scanner.partitions_x as u64 * cfg.scanner.partitions_y as u64;
                    let catalog = partitions::build_catalog(s.sub_m, s.sub_n, s.k_max, available)?;
                    compile_config2(&layers, &catalog, &cfg.scanner, s.sub_m, s.sub_n)?
                }
            };
            emit(out, &timeline.to_csv())?;
            if out.is_some() {
                println!(
                    "total_time_s {} average_rate_hz {} frames {}",
                    timeline.total_time,
                    timeline.average_rate(),
                    timeline.count(scheduler::EventKind::SlmFrameLoad)
                );
            }
            Ok(())
        }
    }
}

fn sim_config(cfg: &ToolConfig, grid_n: Option<usize>) -> sweep::SimulationConfig {
    let mut sim = cfg.simulation.config.clone();
    if let Some(n) = grid_n {
        sim.grid_n = n;
    }
    sim
}

fn pick_shape(cfg: &ToolConfig, flag: Option<&str>) -> Result<ShapeKind, Failure> {
    match flag {
        Some(s) => Ok(s.parse()?),
        None => Ok(cfg.simulation.shape),
    }
}

fn design_c1(cfg: &ToolConfig) -> Result<String, Failure> {
    let rows = if cfg.design.c1_rows.is_empty() {
        vec![scanner_core::config::C1Row {
            q_aod_a: cfg.scanner.q_aod_a,
            partitions: cfg.scanner.partitions_x,
        }]
    } else {
        cfg.design.c1_rows.clone()
    };
    let mut s = String::from(
        "array,partitions,q_aod_a,resolvable_spots,pixels_per_site,average_rate_1e3_per_s,burst_rate_1e3_per_s,burst_time_us,aperture_ok,partitions_ok\n",
    );
    for row in rows {
        let p = row.apply(&cfg.scanner);
        let r = config1_report(&p)?;
        s.push_str(&format!(
            "{0}x{0},{1}x{1},{2},{3:.3},{4},{5:.1},{6:.1},{7:.3},{8},{9}\n",
            r.n_q,
            row.partitions,
            row.q_aod_a,
            r.n_resolvable,
            r.pixels_per_site,
            r.average_rate / 1e3,
            r.burst_rate / 1e3,
            r.burst_time * 1e6,
            r.aperture_ok,
            r.partitions_ok
        ));
    }
    Ok(s)
}

fn design_c2(cfg: &ToolConfig) -> Result<String, Failure> {
    let rows = if cfg.design.c2_rows.is_empty() {
        let q_aod_c = cfg.scanner.q_aod_c().map_err(|e| Failure::Usage(e.to_string()))?;
        vec![scanner_core::config::C2Row {
            q_aod_a: cfg.scanner.q_aod_a,
            q_aod_c,
            partitions: cfg.scanner.partitions_x,
            sub_m: cfg.schedule.sub_m,
            sub_n: cfg.schedule.sub_n,
        }]
    } else {
        cfg.design.c2_rows.clone()
    };
    let mut s = String::from(
        "array,partitions,sub_array,k_max,q_aod_a,q_aod_c,transition_rate_1e3_per_s,transition_time_us,limited_by\n",
    );
    for row in rows {
        let p = row.apply(&cfg.scanner);
        let r = config2_report(&p, row.sub_m, row.sub_n)?;
        s.push_str(&format!(
            "{0}x{0},{1}x{1},{2}x{3},{4},{5},{6},{7:.1},{8:.3},{9}\n",
            r.n_q,
            row.partitions,
            row.sub_m,
            row.sub_n,
            r.k_max_label(),
            row.q_aod_a,
            row.q_aod_c,
            r.transition_rate / 1e3,
            r.transition_time * 1e6,
            r.limiting_deflector
        ));
    }
    Ok(s)
}
