use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mlapprox::approximation::{a_n_r, bound_constants, q_m, schedule_a_n_r, schedule_q_m};
use mlapprox::error::{Error, Result};
use mlapprox::experiment::{
    compare_integration, comparisons_to_csv, emit, records_to_csv, run_convergence, Algorithm,
    ExperimentConfig, KeyValues,
};
use mlapprox::function::exact_l2_error;
use mlapprox::integration::{approx_bound, direct_simulation_bound, integration_bound};
use mlapprox::sampling::ReplicationSeed;
use mlapprox::spectral::{enumerate_basis, preasymptotic_exponent};

#[derive(Parser)]
#[command(
    name = "mlapprox",
    version,
    about = "Multilevel randomized approximation and integration from point samples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the level schedule (j, n_j, m_j) of A_n^r, or of Q_m when --m is given
    Schedule(Overrides),
    /// Print the bound constants and the explicit error bounds for n, r, d
    Bound(Overrides),
    /// Run the approximation once and emit the approximant as CSV
    Approx(Overrides),
    /// Compare Q_2n^r with direct simulation over replications
    Integrate(Overrides),
    /// Run a convergence study and emit one record per grid value
    Converge(Overrides),
    /// Emit the first N singular values with their frequencies
    Sigma(Overrides),
}

/// Flags override values read from `--config`.
#[derive(Args, Default)]
struct Overrides {
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    spec: Option<String>,
    /// Sobolev smoothness; also the default order of A_n^r
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    angular: Option<String>,
    #[arg(long)]
    factors: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long = "sigma-power")]
    sigma_power: Option<String>,
    /// Basis truncation N
    #[arg(long = "N", alias = "basis-size")]
    basis_size: Option<String>,
    #[arg(long)]
    algorithm: Option<String>,
    /// The r of A_n^r when it differs from the smoothness
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Sample budget, or a grid such as 16,32,64 or 2^4..2^12
    #[arg(long)]
    n: Option<String>,
    /// Output dimension of Q_m (a power of two)
    #[arg(long)]
    m: Option<String>,
    #[arg(long, alias = "R")]
    replications: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long = "target-len")]
    target_len: Option<String>,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<String>,
}

impl Overrides {
    fn key_values(&self) -> Result<KeyValues> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::read(path)?,
            None => KeyValues::default(),
        };
        let pairs = [
            ("spec", &self.spec),
            ("r", &self.r),
            ("d", &self.d),
            ("angular", &self.angular),
            ("factors", &self.factors),
            ("sigma", &self.sigma),
            ("sigma_power", &self.sigma_power),
            ("basis_size", &self.basis_size),
            ("algorithm", &self.algorithm),
            ("order", &self.order),
            ("epsilon", &self.epsilon),
            ("n_grid", &self.n),
            ("replications", &self.replications),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("target", &self.target),
            ("target_len", &self.target_len),
            ("output", &self.out),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                kv.set(key, v.clone());
            }
        }
        if let Some(m) = &self.m {
            kv.set("n_grid", m.clone());
            kv.set("algorithm", "q_m");
        }
        Ok(kv)
    }

    fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_key_values(&self.key_values()?)
    }
}

fn require<'a>(kv: &'a KeyValues, key: &str) -> Result<&'a str> {
    kv.get(key).ok_or_else(|| Error::Config {
        field: key.to_string(),
        message: "required".into(),
    })
}

fn parse_field<T: std::str::FromStr>(kv: &KeyValues, key: &str) -> Result<T> {
    let v = require(kv, key)?;
    v.parse().map_err(|_| Error::Config {
        field: key.to_string(),
        message: format!("cannot parse `{v}`"),
    })
}

fn schedule(o: &Overrides) -> Result<()> {
    let kv = o.key_values()?;
    let text = if kv.get("algorithm") == Some("q_m") {
        let cfg = ExperimentConfig::from_key_values(&kv)?;
        let basis = cfg.basis()?;
        let eps = cfg.epsilon.function(&basis);
        schedule_q_m(&eps, cfg.n_grid[0])?.to_csv()
    } else {
        let n: u64 = parse_field(&kv, "n_grid")?;
        let r: f64 = match kv.get("order") {
            Some(_) => parse_field(&kv, "order")?,
            None => parse_field(&kv, "r")?,
        };
        let cap = match kv.get("basis_size") {
            Some(_) => parse_field(&kv, "basis_size")?,
            None => usize::MAX,
        };
        schedule_a_n_r(n, r, cap)?.to_csv()
    };
    emit(&text, kv.get("output").map(std::path::Path::new))
}

fn bound(o: &Overrides) -> Result<()> {
    let kv = o.key_values()?;
    let n: u64 = parse_field(&kv, "n_grid")?;
    let r: f64 = parse_field(&kv, "r")?;
    let d: u64 = match kv.get("d") {
        Some(_) => parse_field(&kv, "d")?,
        None => 1,
    };
    let c = bound_constants(r)?;
    let p = preasymptotic_exponent(r, d)?;
    let text = format!(
        "r={r}\nell_r={}\nc_r={}\ncbar_r={}\nctilde_r={}\np={p}\napprox_bound={}\nintegration_bound={}\ndirect_simulation_bound={}\n",
        c.ell_r,
        c.c_r,
        c.cbar_r,
        c.ctilde_r,
        approx_bound(n, r, d)?,
        integration_bound(n, r, d)?,
        direct_simulation_bound(2 * n),
    );
    emit(&text, kv.get("output").map(std::path::Path::new))
}

fn approx(o: &Overrides) -> Result<()> {
    let cfg = o.config()?;
    let basis = cfg.basis()?;
    let n = cfg.n_grid[0];
    let seed = ReplicationSeed::new(cfg.seed, 0);
    let (f, result) = match cfg.algorithm {
        Algorithm::ANR => {
            let s = schedule_a_n_r(n, cfg.order, basis.len())?;
            let f = cfg.target_function(&basis, s.final_m())?;
            let a = a_n_r(&f, &basis, n, cfg.order, &seed)?;
            (f, a)
        }
        Algorithm::QM => {
            let eps = cfg.epsilon.function(&basis);
            let f = cfg.target_function(&basis, n as usize)?;
            let a = q_m(&f, &basis, &eps, n, &seed)?;
            (f, a)
        }
        _ => {
            return Err(Error::Config {
                field: "algorithm".into(),
                message: "approx runs a_n_r or q_m".into(),
            })
        }
    };
    eprintln!(
        "l2_error={} evals_used={}",
        exact_l2_error(&f, &result.value)?,
        result.evals_used
    );
    emit(&result.to_csv(), cfg.output.as_deref())
}

fn integrate(o: &Overrides) -> Result<()> {
    let cfg = o.config()?;
    let rows = compare_integration(&cfg)?;
    emit(&comparisons_to_csv(&rows), cfg.output.as_deref())
}

fn converge(o: &Overrides) -> Result<()> {
    let cfg = o.config()?;
    let records = run_convergence(&cfg)?;
    emit(&records_to_csv(&records), cfg.output.as_deref())
}

fn sigma(o: &Overrides) -> Result<()> {
    let mut kv = o.key_values()?;
    // the grid is irrelevant here; keep config validation happy
    kv.set("n_grid", "1");
    let n: usize = parse_field(&kv, "basis_size")?;
    let cfg = ExperimentConfig::from_key_values(&kv)?;
    let basis = enumerate_basis(&cfg.spec, n)?;
    emit(&basis.to_csv(), cfg.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Schedule(o) => schedule(o),
        Command::Bound(o) => bound(o),
        Command::Approx(o) => approx(o),
        Command::Integrate(o) => integrate(o),
        Command::Converge(o) => converge(o),
        Command::Sigma(o) => sigma(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
