use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sicaoi::analytic::AnalyticModel;
use sicaoi::artifact::{format_policy_table, load_policy_table, PolicyBundle};
use sicaoi::harness::{
    compare_report, default_s_grid, read_csv, refine_knee, rows_to_csv, run_acceptance, run_sweep, tradeoff_knee,
    write_csv, Mode, SweepRow, SweepSpec, SweepSummary,
};
use sicaoi::sim::{simulate, SimOptions};
use sicaoi::{AccessPolicy, Error, GridSpec, PolicyForm, Result, SystemConfig};

/// Worker threads for sweeps and replications; defaults to all cores.
const WORKERS_ENV: &str = "SICAOI_WORKERS";

#[derive(Parser)]
#[command(
    name = "sicaoi",
    version,
    about = "Adaptive SIC random access: policy, analytic model, simulator, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect the optimized access policy.
    #[command(subcommand)]
    Policy(PolicyCmd),
    /// Evaluate the analytic model.
    #[command(subcommand)]
    Analytic(RunCmd),
    /// Run the slot-level simulator.
    #[command(subcommand)]
    Simulate(RunCmd),
    /// Sweep the mean generation time; writes sweep.csv and summary.json.
    Sweep(SweepArgs),
    /// Compare analytic and simulated sweep CSVs.
    Compare(CompareArgs),
    /// Run the reference-target regression checks.
    Accept(AcceptArgs),
}

#[derive(Subcommand)]
enum PolicyCmd {
    /// Estimate the SIC profile, optimize and fit; caches the bundle.
    Build(Common),
    /// Print the policy table.
    Show(Common),
}

#[derive(Subcommand)]
enum RunCmd {
    /// Evaluate at the given mean generation times.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Raw,
    Fitted,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file (key = value); reference-scenario defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; also holds the policy cache.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated mean generation times in ms; default 30 points over 1 ms..1 s.
    #[arg(long, value_delimiter = ',')]
    s_ms: Option<Vec<f64>>,
    /// Simulation replications.
    #[arg(long, default_value_t = 10)]
    replications: usize,
    /// Slots per replication (10% warmup).
    #[arg(long, default_value_t = 100_000)]
    slots: u64,
    /// Policy form derived from the bundle.
    #[arg(long, value_enum, default_value_t = FormArg::Fitted)]
    form: FormArg,
    /// `k p_k gamma_k [T_k]` table replacing the optimized policy.
    #[arg(long)]
    policy_override: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = ModeArg::Analytic)]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Simulate,
    Both,
}

#[derive(Args)]
struct CompareArgs {
    /// Analytic sweep CSV (rows with mode = analytic are used).
    #[arg(long)]
    analytic: PathBuf,
    /// Simulated sweep CSV (rows with mode = simulate are used).
    #[arg(long)]
    sim: PathBuf,
    /// Relative tolerance accepted outside the confidence interval.
    #[arg(long, default_value_t = 0.05)]
    rel_tol: f64,
}

#[derive(Args)]
struct AcceptArgs {
    #[command(flatten)]
    common: Common,
    /// Skip the simulation-backed criteria.
    #[arg(long)]
    no_sim: bool,
}

impl Common {
    fn config(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(p) => SystemConfig::load(p)?,
            None => SystemConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn s_values(&self) -> Vec<f64> {
        match &self.s_ms {
            Some(v) => v.iter().map(|ms| ms * 1e-3).collect(),
            None => default_s_grid(),
        }
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions::with_horizon(self.slots, self.replications)
    }

    fn cache(&self) -> PathBuf {
        self.out.join("cache")
    }

    fn bundle(&self, cfg: &SystemConfig) -> Result<PolicyBundle> {
        PolicyBundle::load_or_build(&self.cache(), cfg, &GridSpec::default())
    }

    fn policy(&self, cfg: &SystemConfig, bundle: &PolicyBundle) -> Result<AccessPolicy> {
        match &self.policy_override {
            Some(p) => load_policy_table(p, cfg),
            None => bundle.policy(
                match self.form {
                    FormArg::Raw => PolicyForm::Raw,
                    FormArg::Fitted => PolicyForm::Fitted,
                },
                cfg,
            ),
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn print_rows(rows: &[SweepRow]) -> Result<()> {
    print!("{}", rows_to_csv(rows)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Policy(PolicyCmd::Build(c)) => {
            let cfg = c.config()?;
            let bundle = c.bundle(&cfg)?;
            ensure_dir(&c.out)?;
            for (form, name) in [
                (PolicyForm::Fitted, "policy_fitted.txt"),
                (PolicyForm::Raw, "policy_raw.txt"),
            ] {
                let path = c.out.join(name);
                std::fs::write(&path, format_policy_table(&bundle.policy(form, &cfg)?))
                    .map_err(|e| Error::Io { path, source: e })?;
            }
            let k = bundle.constants;
            println!("key {}", bundle.key);
            println!(
                "k_c = {}, a_gamma = {:.4}, b_gamma = {:.4}, a_D = {:.4}",
                k.k_c, k.a_gamma, k.b_gamma, k.a_d
            );
            println!("wrote {}", c.out.display());
        }
        Command::Policy(PolicyCmd::Show(c)) => {
            let cfg = c.config()?;
            let bundle = c.bundle(&cfg)?;
            print!("{}", format_policy_table(&c.policy(&cfg, &bundle)?));
        }
        Command::Analytic(RunCmd::Run(c)) => {
            let cfg = c.config()?;
            let bundle = c.bundle(&cfg)?;
            let policy = c.policy(&cfg, &bundle)?;
            let spec = SweepSpec {
                s_values: c.s_values(),
                mode: Mode::Analytic,
                sim: c.sim_options(),
            };
            print_rows(&run_sweep(&cfg, &policy, &bundle.profile, &spec)?.analytic)?;
        }
        Command::Simulate(RunCmd::Run(c)) => {
            let cfg = c.config()?;
            let policy = match &c.policy_override {
                Some(p) => load_policy_table(p, &cfg)?,
                None => c.policy(&cfg, &c.bundle(&cfg)?)?,
            };
            let opts = c.sim_options();
            let rows = c
                .s_values()
                .iter()
                .map(|&s| simulate(&cfg.with_generation_time(s), &policy, &opts).map(|r| SweepRow::simulated(s, &r)))
                .collect::<Result<Vec<_>>>()?;
            print_rows(&rows)?;
        }
        Command::Sweep(a) => {
            let c = &a.common;
            let cfg = c.config()?;
            let bundle = c.bundle(&cfg)?;
            let policy = c.policy(&cfg, &bundle)?;
            let mode = match a.mode {
                ModeArg::Analytic => Mode::Analytic,
                ModeArg::Simulate => Mode::Simulate,
                ModeArg::Both => Mode::Both,
            };
            let spec = SweepSpec {
                s_values: c.s_values(),
                mode,
                sim: c.sim_options(),
            };
            let outcome = run_sweep(&cfg, &policy, &bundle.profile, &spec)?;
            ensure_dir(&c.out)?;
            write_csv(&outcome.rows(), &c.out.join("sweep.csv"))?;
            let model = AnalyticModel::new(&cfg, &policy, &bundle.profile)?;
            let critical = model.evaluate(cfg.mean_generation_time())?.critical;
            let refined = match tradeoff_knee(&outcome.analytic) {
                Some(k) if spec.s_values.len() >= 3 => {
                    let i = spec
                        .s_values
                        .iter()
                        .position(|s| (s * 1e3 - k.s_ms).abs() < 1e-9)
                        .unwrap_or(0);
                    let lo = spec.s_values[i.saturating_sub(1)];
                    let hi = spec.s_values[(i + 1).min(spec.s_values.len() - 1)];
                    Some(refine_knee(&model, lo, hi)?)
                }
                _ => None,
            };
            let comparison = if mode == Mode::Both {
                Some(compare_report(&outcome.analytic, &outcome.simulated, 0.05)?)
            } else {
                None
            };
            let summary = SweepSummary::new(
                bundle.constants,
                critical,
                model.coverage_radius,
                &outcome.analytic,
                refined,
                comparison,
            );
            summary.write(&c.out.join("summary.json"))?;
            println!("S_inf = {:.2} ms; wrote {}", summary.s_inf_ms, c.out.display());
        }
        Command::Compare(a) => {
            let analytic: Vec<SweepRow> = read_csv(&a.analytic)?
                .into_iter()
                .filter(|r| r.mode == "analytic")
                .collect();
            let sim: Vec<SweepRow> = read_csv(&a.sim)?.into_iter().filter(|r| r.mode == "simulate").collect();
            let cmp = compare_report(&analytic, &sim, a.rel_tol)?;
            println!("S_ms,metric,analytic,simulated,half_width,rel_err,contained,agrees");
            for cell in &cmp.cells {
                println!(
                    "{},{},{},{},{},{},{},{}",
                    cell.s_ms,
                    cell.metric,
                    cell.analytic,
                    cell.simulated,
                    cell.half_width,
                    cell.rel_err,
                    cell.contained,
                    cell.agrees
                );
            }
            eprintln!(
                "agreement {:.1}% (CI-contained {:.1}%) over {} cells",
                100.0 * cmp.agreement_fraction,
                100.0 * cmp.contained_fraction,
                cmp.cells.len()
            );
            return Ok(cmp.passes());
        }
        Command::Accept(a) => {
            let cfg = a.common.config()?;
            let bundle = a.common.bundle(&cfg)?;
            let outcomes = run_acceptance(&cfg, &bundle, &a.common.sim_options(), !a.no_sim)?;
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.pass));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("thread pool set once");
            }
            _ => {
                eprintln!("{WORKERS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
