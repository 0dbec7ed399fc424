use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use excitable_fem::config::{Boundary, ExperimentConfig};
use excitable_fem::experiments::{
    classify_run, spearman_trend, sweep, Axis, Experiment, Label, RunSettings, SweepSpec, SweepTable,
};
use excitable_fem::fem::DofLayout;
use excitable_fem::heat::{monte_carlo_gamma, strong_error_study, GammaSeries, LinearSchemeConfig, StrongErrorConfig};
use excitable_fem::mesh::{generate_square_grid, import_mesh, Mesh};
use excitable_fem::noise::{mu_n_experiment, NoiseFactor, NoiseSites};
use excitable_fem::output::{nodal_csv, record_csv, vtk_snapshot, OutputDir};
use excitable_fem::{Error, Result};

#[derive(Parser)]
#[command(name = "excitable", version, about = "Stochastic excitable media on triangular finite elements")]
struct Cli {
    /// worker threads (default: all cores, or `threads` from the config)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// output directory, overriding `output.dir`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Fhn,
    Barkley,
    Ms,
}

impl ModelName {
    fn as_str(self) -> &'static str {
        match self {
            ModelName::Fhn => "fhn",
            ModelName::Barkley => "barkley",
            ModelName::Ms => "ms",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print node and triangle counts, h and rho of a mesh
    MeshInfo {
        file: Option<PathBuf>,
        /// generated square: side length and cells per side
        #[arg(long, num_args = 2, value_names = ["L", "N"], conflicts_with = "file")]
        square: Option<Vec<String>>,
    },
    /// Noise projection error μ_N against N for the separable kernel
    NoiseError {
        #[arg(long = "N", value_delimiter = ',', default_values_t = [5, 10, 20, 30])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        k0: u32,
        #[arg(long, default_value_t = 1)]
        p0: u32,
        /// also write the table and a manifest into this directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo variance of the stochastic heat equation against its series
    HeatValidate(ConfigArgs),
    /// Strong convergence rates of the heat scheme
    StrongOrder(ConfigArgs),
    /// One trajectory with snapshots
    Simulate {
        #[arg(long, value_enum)]
        model: ModelName,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// noise stream of this run
        #[arg(long, default_value_t = 0)]
        replica: u64,
    },
    /// Classified parameter sweep
    Sweep {
        #[arg(long, value_enum)]
        model: ModelName,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                ref e if e.is_numerical() => 3,
                _ => 1,
            })
        }
    }
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.into(), msg: msg.into() }
}

fn init_threads(flag: Option<usize>, cfg: Option<&ExperimentConfig>) -> Result<()> {
    let n = flag.or(cfg.and_then(|c| c.threads)).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| config_err("threads", e.to_string()))
}

/// Loaded config with every path checked and the output directory created.
struct Loaded {
    cfg: ExperimentConfig,
    base: PathBuf,
    out: OutputDir,
}

fn load(args: &ConfigArgs) -> Result<Loaded> {
    let cfg = ExperimentConfig::from_file(&args.config)?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(p) = cfg.mesh_path(&base) {
        if !p.is_file() {
            return Err(config_err("mesh.source", format!("no such file: {}", p.display())));
        }
    }
    let dir = args.out.clone().unwrap_or_else(|| base.join(&cfg.output.dir));
    let out = OutputDir::create(&dir).map_err(|e| config_err("output.dir", format!("{}: {e}", dir.display())))?;
    Ok(Loaded { cfg, base, out })
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::MeshInfo { file, square } => {
            let mesh = match (file, square) {
                (Some(f), _) => {
                    let file = std::fs::File::open(f)
                        .map_err(|e| config_err("file", format!("cannot open {}: {e}", f.display())))?;
                    import_mesh(std::io::BufReader::new(file))?
                }
                (None, Some(v)) => {
                    let l: f64 = v[0].parse().map_err(|_| config_err("square.L", format!("not a number: {}", v[0])))?;
                    let n: usize =
                        v[1].parse().map_err(|_| config_err("square.N", format!("not an integer: {}", v[1])))?;
                    generate_square_grid(l, n)?
                }
                (None, None) => return Err(config_err("mesh-info", "give a mesh file or --square L N")),
            };
            print_mesh_info(&mesh);
            Ok(())
        }
        Command::NoiseError { n, samples, seed, k0, p0, out } => {
            init_threads(cli.threads, None)?;
            let out = out
                .as_ref()
                .map(|d| OutputDir::create(d).map_err(|e| config_err("out", format!("{}: {e}", d.display()))))
                .transpose()?;
            let table = mu_n_experiment(*k0, *p0, n, *samples, *seed)?;
            let csv = table.to_csv();
            print!("{csv}");
            println!("slope,{:.4}", table.slope);
            if let Some(mut out) = out {
                out.write("mu_n.csv", &csv)?;
                out.finish()?;
            }
            Ok(())
        }
        Command::HeatValidate(args) => {
            let Loaded { cfg, base, mut out } = load(args)?;
            init_threads(cli.threads, Some(&cfg))?;
            heat_validate(&cfg, &base, &mut out)?;
            out.finish()?;
            Ok(())
        }
        Command::StrongOrder(args) => {
            let Loaded { cfg, mut out, .. } = load(args)?;
            init_threads(cli.threads, Some(&cfg))?;
            strong_order(&cfg, &mut out)?;
            out.finish()?;
            Ok(())
        }
        Command::Simulate { model, cfg: args, replica } => {
            let Loaded { cfg, base, mut out } = load(args)?;
            init_threads(cli.threads, Some(&cfg))?;
            simulate(&cfg, &base, model.as_str(), *replica, &mut out)?;
            out.finish()?;
            Ok(())
        }
        Command::Sweep { model, cfg: args } => {
            let Loaded { cfg, base, mut out } = load(args)?;
            init_threads(cli.threads, Some(&cfg))?;
            run_sweep(&cfg, &base, model.as_str(), &mut out)?;
            out.finish()?;
            Ok(())
        }
    }
}

fn print_mesh_info(mesh: &Mesh) {
    println!("{} nodes, {} triangles", mesh.num_nodes(), mesh.num_triangles());
    println!("h = {:.6}", mesh.h);
    println!("rho = {:.6}", mesh.rho);
}

fn heat_validate(cfg: &ExperimentConfig, base: &Path, out: &mut OutputDir) -> Result<()> {
    if cfg.boundary(Boundary::Dirichlet) != Boundary::Dirichlet {
        return Err(config_err("mesh.boundary", "the heat check uses homogeneous Dirichlet conditions"));
    }
    if cfg.mesh.source != "square" {
        return Err(config_err("mesh.source", "the variance series is known on the square only"));
    }
    let kernel = cfg.kernel()?;
    let n_steps = cfg.n_steps()?;
    if cfg.heat.replicas == 0 {
        return Err(config_err("heat.replicas", "must be >= 1"));
    }
    let mesh = cfg.build_mesh(base)?;
    let scheme = LinearSchemeConfig {
        sigma: cfg.noise.sigma,
        dt: cfg.time.dt,
        n_steps,
        kernel,
        discretization: cfg.noise.discretization,
        seed: cfg.seed(),
    };
    let series = GammaSeries::new(cfg.mesh.square_l, cfg.noise.sigma, kernel, cfg.heat.k_max)?;
    let table = monte_carlo_gamma(&scheme, &mesh, cfg.heat.replicas)?;
    out.write("gamma.csv", &table.to_csv(&series))?;
    let band = cfg.time.dt.sqrt() + mesh.h;
    let frac = table.fraction_within(&series, band);
    let summary = format!("band,{band:.6}\nfraction_within,{frac:.4}\n");
    print!("{summary}");
    out.write("gamma_summary.csv", &summary)?;
    Ok(())
}

fn strong_order(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let s = &cfg.strong;
    if s.joint_n.len() != s.joint_dt.len() {
        return Err(config_err("strong.joint_dt", "must have as many entries as strong.joint_n"));
    }
    if cfg.kernel.kind != "separable" {
        return Err(config_err("kernel.type", "the strong-order study needs the separable kernel"));
    }
    let study = StrongErrorConfig {
        sigma: s.sigma,
        t_end: s.t_end,
        k0: cfg.kernel.k0,
        p0: cfg.kernel.p0,
        spatial_n: s.spatial_n.clone(),
        spatial_dt: s.spatial_dt,
        temporal_dt: s.temporal_dt.clone(),
        temporal_n: s.temporal_n,
        joint: s.joint_n.iter().copied().zip(s.joint_dt.iter().copied()).collect(),
        discretization: cfg.noise.discretization,
        replicas: s.replicas,
        seed: cfg.seed(),
    };
    let table = strong_error_study(&study)?;
    let csv = table.to_csv();
    print!("{csv}");
    out.write("strong_order.csv", &csv)?;
    Ok(())
}

fn default_boundary(cfg: &ExperimentConfig, model: &str) -> Boundary {
    let square = cfg.mesh.source == "square";
    cfg.boundary(if square && model != "fhn" { Boundary::Periodic } else { Boundary::Neumann })
}

fn build_factor(cfg: &ExperimentConfig, mesh: &Mesh, layout: &DofLayout) -> Result<NoiseFactor> {
    let sites = NoiseSites::for_layout(cfg.noise.discretization, layout);
    NoiseFactor::new(&cfg.kernel()?, mesh, sites)
}

fn run_settings(cfg: &ExperimentConfig) -> Result<RunSettings> {
    cfg.n_steps()?;
    cfg.classify.validate().map_err(|e| config_err("classify", e.to_string()))?;
    Ok(RunSettings {
        t_obs: cfg.time.t_end,
        record_every: cfg.time.record_every,
        snapshot_every: cfg.output.snapshot_every,
        u_act: cfg.classify.u_act,
    })
}

fn simulate(cfg: &ExperimentConfig, base: &Path, model: &str, replica: u64, out: &mut OutputDir) -> Result<()> {
    let model = cfg.model(model)?;
    let settings = run_settings(cfg)?;
    let boundary = default_boundary(cfg, model.name());
    if boundary == Boundary::Dirichlet {
        return Err(config_err("mesh.boundary", "excitable models run with neumann or periodic conditions"));
    }
    let mesh = cfg.build_mesh(base)?;
    let layout = cfg.layout(&mesh, boundary)?;
    let factor = if model.sigma() > 0.0 { Some(build_factor(cfg, &mesh, &layout)?) } else { None };
    let exp = Experiment::new(&mesh, layout, factor.as_ref())?;
    let stepper = exp.stepper(model, cfg.time.dt)?;
    let record = exp.run(&stepper, &settings, cfg.seed(), replica)?;

    out.write("series.csv", &record_csv(&record))?;
    let digits = record.snapshots.len().max(1).to_string().len().max(4);
    for (i, (t, u, v)) in record.snapshots.iter().enumerate() {
        out.write(&format!("snapshot_{i:0digits$}.vtk"), &vtk_snapshot(&mesh, *t, u, v))?;
        out.write(&format!("snapshot_{i:0digits$}.csv"), &nodal_csv(&mesh, u, v))?;
    }
    let class = classify_run(&record, &cfg.classify)?;
    let summary = format!(
        "model,{}\nlabel,{}\nmax_fraction,{:.6}\nsustain_time,{:.4}\ncomponents_late,{:.4}\nnucleations,{}\nsnapshots,{}\n",
        model.name(),
        class.label,
        class.max_fraction,
        class.sustain_time,
        class.components_late,
        record.nucleations,
        record.snapshots.len()
    );
    print!("{summary}");
    out.write("summary.csv", &summary)?;
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig, base: &Path, model: &str, out: &mut OutputDir) -> Result<()> {
    let base_model = cfg.model(model)?;
    let settings = run_settings(cfg)?;
    let sw = &cfg.sweep;
    let default_axis1 = if model == "ms" { Axis::TauClose } else { Axis::Epsilon };
    let axis1 = sw.axis1.unwrap_or(default_axis1);
    let axis2 = sw.axis2.unwrap_or(Axis::Sigma);
    if sw.values1.is_empty() {
        return Err(config_err("sweep.values1", "must list at least one value"));
    }
    if sw.values2.is_empty() {
        return Err(config_err("sweep.values2", "must list at least one value"));
    }
    for (key, axis, values) in [("sweep.axis1", axis1, &sw.values1), ("sweep.axis2", axis2, &sw.values2)] {
        for &v in values {
            axis.apply(&base_model, v).and_then(|m| m.validate()).map_err(|e| config_err(key, e.to_string()))?;
        }
    }
    let seeds = sw.seeds_per_cell.unwrap_or(1);
    if seeds == 0 {
        return Err(config_err("sweep.seeds_per_cell", "must be >= 1"));
    }
    let boundary = default_boundary(cfg, model);
    let mesh = cfg.build_mesh(base)?;
    let layout = cfg.layout(&mesh, boundary)?;
    let factor = build_factor(cfg, &mesh, &layout)?;
    let exp = Experiment::new(&mesh, layout, Some(&factor))?;
    let spec = SweepSpec {
        base: base_model,
        axis1: (axis1, sw.values1.clone()),
        axis2: (axis2, sw.values2.clone()),
        seeds_per_cell: seeds,
        dt: cfg.time.dt,
        settings,
        policy: cfg.classify,
        seed: cfg.seed(),
    };
    let table = sweep(&spec, &exp)?;
    out.write("sweep.csv", &table.to_csv())?;
    out.write("sweep_summary.csv", &table.summary_csv())?;
    let diagram = diagram_text(&table, &spec);
    print!("{diagram}");
    out.write("diagram.txt", &diagram)?;
    if axis2 == Axis::Sigma {
        let mut trend = String::from("axis1,rho,p_value,n\n");
        for &a1 in &sw.values1 {
            let (x, y): (Vec<f64>, Vec<f64>) = table.nucleations_along_axis2(a1).into_iter().unzip();
            if let Ok(t) = spearman_trend(&x, &y) {
                trend.push_str(&format!("{a1},{:.4},{:.4e},{}\n", t.rho, t.p_value, t.n));
            }
        }
        out.write("trend.csv", &trend)?;
    }
    Ok(())
}

/// Grid of modal labels, axis 1 down the rows and axis 2 across.
fn diagram_text(table: &SweepTable, spec: &SweepSpec) -> String {
    let mut s = format!("{:>10} |", format!("{:?}\\{:?}", spec.axis1.0, spec.axis2.0));
    for v in &spec.axis2.1 {
        s.push_str(&format!("{v:>8}"));
    }
    s.push('\n');
    for &a1 in &spec.axis1.1 {
        s.push_str(&format!("{a1:>10} |"));
        for &a2 in &spec.axis2.1 {
            let cell = table.cells.iter().find(|c| c.axis1 == a1 && c.axis2 == a2);
            let label = cell.and_then(|c| c.modal).map_or("ERR".to_string(), |l: Label| l.to_string());
            s.push_str(&format!("{label:>8}"));
        }
        s.push('\n');
    }
    s
}
