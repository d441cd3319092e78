use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use redgeo_cli::acceptance::{run_suite, SuiteOptions};
use redgeo_cli::config::RouteChoice;
use redgeo_cli::runner::write_field;
use redgeo_cli::{parse_model, run, ConfigError, ExperimentConfig, Quantity, WeightSpec, EXIT_CONFIG, EXIT_FLAGGED};
use redgeo_core::lgeo::{reduced_distance, reduced_distance_variational};
use redgeo_core::models::{make_model, ModelSpec, Point};

#[derive(Parser)]
#[command(name = "redgeo", version, about = "Reduced distance, reduced volume and local pseudo heat ball quantities")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, env = "REDGEO_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Catalog models.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Reduced distance at points, or the gridded field as CSV.
    Ell(EllArgs),
    /// Reduced volume curve (rv.csv).
    Rv(RunArgs),
    /// Local I curve, both forms (i.csv).
    LocalI(RunArgs),
    /// Local J curve (j.csv).
    LocalJ(RunArgs),
    /// I–J relation residuals (ij_check.json).
    IjCheck(RunArgs),
    /// Extrapolated limits and the main equality (limits.json).
    Limits(RunArgs),
    /// Weak-form subsolution certification of the weight (certify.json).
    Certify(RunArgs),
    /// Gaussian density of the matching soliton (density.json).
    Density(RunArgs),
    /// Structural and bound checks (checks.json).
    Checks(RunArgs),
    /// Every quantity listed in the config.
    Run(RunArgs),
    /// Named suites.
    Suite {
        #[command(subcommand)]
        suite: SuiteName,
    },
}

#[derive(Subcommand)]
enum ModelAction {
    List,
}

#[derive(Subcommand)]
enum SuiteName {
    Acceptance {
        /// Halve every resolution and widen quadrature tolerances.
        #[arg(long)]
        half: bool,
        /// Comma-separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EllRoute {
    Exact,
    Variational,
}

#[derive(Args)]
struct EllArgs {
    #[arg(long, value_parser = model_arg)]
    model: ModelSpec,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Radial coordinates (distance or polar angle).
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
    u: Vec<f64>,
    /// Line coordinate for products, or polar angle for warped models.
    #[arg(long, default_value_t = 0.0)]
    x: f64,
    #[arg(long, value_enum, default_value_t = EllRoute::Exact)]
    route: EllRoute,
    #[arg(long, default_value_t = 64)]
    segments: usize,
    /// Write the gridded field on [tau-min, tau-max] to this CSV instead.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    tau_min: f64,
    #[arg(long, default_value_t = 100.0)]
    tau_max: f64,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = model_arg)]
    model: Option<ModelSpec>,
    #[arg(long, value_parser = weight_arg)]
    weight: Option<WeightSpec>,
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    tau_min: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    points_per_decade: Option<usize>,
    /// Use a variational field instead of exact ℓ.
    #[arg(long)]
    field: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Admit uncertified weights; results carry the flag.
    #[arg(long)]
    allow_flagged: bool,
}

fn model_arg(s: &str) -> Result<ModelSpec, String> {
    parse_model(s).map_err(|e| e.to_string())
}

fn weight_arg(s: &str) -> Result<WeightSpec, String> {
    s.parse().map_err(|e: ConfigError| e.to_string())
}

impl RunArgs {
    fn config(&self, quantity: Option<Quantity>) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
            None => {
                let model = self
                    .model
                    .clone()
                    .ok_or_else(|| ConfigError::Invalid("either --config or --model is required".into()))?;
                ExperimentConfig::new("run", model)
            }
        };
        if let Some(m) = &self.model {
            cfg.model = m.clone();
        }
        if let Some(w) = &self.weight {
            cfg.weight = w.clone();
        }
        if let Some(id) = &self.id {
            cfg.id = id.clone();
        } else if self.config.is_none() {
            cfg.id = cfg.model.label();
        }
        let g = &mut cfg.grid;
        g.tau_min = self.tau_min.unwrap_or(g.tau_min);
        g.tau_max = self.tau_max.unwrap_or(g.tau_max);
        g.r_min = self.r_min.unwrap_or(g.r_min);
        g.r_max = self.r_max.unwrap_or(g.r_max);
        g.points_per_decade = self.points_per_decade.unwrap_or(g.points_per_decade);
        if self.field {
            cfg.route = RouteChoice::Field;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.allow_flagged |= self.allow_flagged;
        if let Some(q) = quantity {
            cfg.quantities = vec![q];
        }
        Ok(cfg)
    }
}

fn execute(args: &RunArgs, quantity: Option<Quantity>) -> Result<i32, ConfigError> {
    let cfg = args.config(quantity)?;
    let summary = run(&cfg)?;
    println!("config {} -> {}", summary.config_hash, summary.dir.display());
    for r in &summary.records {
        let value = r.value.map(|v| format!(" value={v:.6}")).unwrap_or_default();
        let file = r.file.as_deref().map(|f| format!(" file={f}")).unwrap_or_default();
        println!(
            "{:<10} flags={}{value}{file} ({:.2} s)",
            r.quantity,
            r.flags.join(","),
            r.wall_time
        );
    }
    for v in &summary.violations {
        eprintln!("flagged: {v}");
    }
    Ok(summary.exit_code())
}

fn ell(args: &EllArgs) -> Result<i32, ConfigError> {
    if let Some(path) = &args.field {
        let mut cfg = ExperimentConfig::new("field", args.model.clone());
        cfg.grid.tau_min = args.tau_min;
        cfg.grid.tau_max = args.tau_max;
        cfg.grid.points_per_decade = 16;
        cfg.grid.segments = args.segments;
        if matches!(args.route, EllRoute::Variational) {
            cfg.route = RouteChoice::Field;
        }
        let field = write_field(&cfg, path)?;
        println!(
            "wrote {} ({} unconverged, {} clamped nodes)",
            path.display(),
            field.unconverged_nodes(),
            field.clamped_nodes()
        );
        return Ok(0);
    }
    let m = make_model(&args.model)?;
    println!("u,x,tau,ell");
    for &u in &args.u {
        let q = Point::new(u, args.x);
        let v = match args.route {
            EllRoute::Exact => reduced_distance(&m, q, args.tau)?,
            EllRoute::Variational => reduced_distance_variational(&m, q, args.tau, args.segments)?.ell,
        };
        println!("{u},{},{},{v}", args.x, args.tau);
    }
    Ok(0)
}

fn model_list() -> i32 {
    let rows = [
        ("gaussian", "n", "static flat R^n"),
        ("cone", "slope, base", "static surface of revolution asymptotic to a cone"),
        ("sphere", "n", "shrinking round S^n"),
        ("scaled_super", "n, curvature", "(1 + 2C tau) times the round S^n"),
        ("product", "n", "shrinking S^n times a static line"),
    ];
    for (name, params, what) in rows {
        println!("{name:<13} {params:<13} {what}");
    }
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let result = match &cli.command {
        Command::Model {
            action: ModelAction::List,
        } => Ok(model_list()),
        Command::Ell(a) => ell(a),
        Command::Rv(a) => execute(a, Some(Quantity::RvCurve)),
        Command::LocalI(a) => execute(a, Some(Quantity::ICurve)),
        Command::LocalJ(a) => execute(a, Some(Quantity::JCurve)),
        Command::IjCheck(a) => execute(a, Some(Quantity::IjCheck)),
        Command::Limits(a) => execute(a, Some(Quantity::Limits)),
        Command::Certify(a) => execute(a, Some(Quantity::Certify)),
        Command::Density(a) => execute(a, Some(Quantity::Density)),
        Command::Checks(a) => execute(a, Some(Quantity::Checks)),
        Command::Run(a) => execute(a, None),
        Command::Suite {
            suite: SuiteName::Acceptance { half, only, json },
        } => {
            let report = run_suite(&SuiteOptions { half: *half }, only, |c| println!("{}", c.line()));
            for f in &report.findings {
                println!("[FINDING] {}: {}", f.name, f.detail);
            }
            println!("acceptance: {}", if report.pass { "PASS" } else { "FAIL" });
            match json {
                Some(path) => std::fs::write(path, serde_json::to_string_pretty(&report).expect("report serializes"))
                    .map(|_| if report.pass { 0 } else { EXIT_FLAGGED })
                    .map_err(ConfigError::from),
                None => Ok(if report.pass { 0 } else { EXIT_FLAGGED }),
            }
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
