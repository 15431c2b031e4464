//! Command-line driver: runs an [`ExperimentConfig`] and writes CSV tables.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use num_complex::Complex64;

use crate::analytic::{beta_approx, gil_pelaez, mb_hcn_hat, mb_hcn_same_alpha, mb_hip, HcnSpec};
use crate::config::{ExperimentConfig, Mode, ThetaGrid};
use crate::error::{Error, Result};
use crate::gains::{effective_gain, estimate_g0, estimate_gb_curve};
use crate::metasim::{critical_theta, simulate_meta, SimConfig};
use crate::pp::{GaussPoissonParams, MaternParams, ProcessKind};
use crate::rng::derive_seed;
use crate::sir::{db_to_linear, TierSpec};

#[derive(Debug, Parser)]
#[command(name = "sirmeta", version, about = "SIR meta distributions of cellular networks")]
pub struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    pub mode: Mode,
    /// JSON experiment config; a single Poisson tier is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SIRMETA_SEED")]
    pub seed: Option<u64>,
    /// Number of Monte Carlo realizations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Output CSV file (a directory for `figures`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "SIRMETA_THREADS")]
    pub threads: Option<usize>,
}

impl Cli {
    /// The config after applying command-line overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = self.mode;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form; empty for missing values.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn text(s: &str) -> String {
    s.to_string()
}

fn hcn_spec(cfg: &ExperimentConfig) -> Result<HcnSpec> {
    HcnSpec::new(cfg.tiers_with_gains())
}

fn sim_config(cfg: &ExperimentConfig, tiers: Vec<TierSpec>, x: Vec<f64>, seed: u64) -> SimConfig {
    SimConfig {
        tiers,
        window: cfg.window,
        theta_db: cfg.theta_points(),
        x,
        b: Vec::new(),
        n: cfg.n,
        seed,
    }
}

fn g0_table(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("g0", &["tier", "kind", "alpha", "g0_db", "g0_linear", "stderr_db", "n"]);
    for (k, tier) in cfg.tiers.iter().enumerate() {
        let g = estimate_g0(tier, cfg.window, cfg.n, derive_seed(cfg.seed, k as u64)).map_err(|e| e.in_tier(k))?;
        t.push(vec![
            k.to_string(),
            text(tier.kind.name()),
            num(tier.alpha),
            num(g.value_db),
            num(g.value_linear),
            num(g.std_error_db),
            g.n_realizations.to_string(),
        ]);
    }
    Ok(t)
}

fn gb_table(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("gb", &["tier", "kind", "b", "theta_db", "gb_db", "stderr_db", "n"]);
    let thetas = cfg.theta_points();
    for (k, tier) in cfg.tiers.iter().enumerate() {
        for &b in &cfg.b {
            let gains = estimate_gb_curve(&thetas, b, tier, cfg.window, cfg.n, derive_seed(cfg.seed, k as u64))
                .map_err(|e| e.in_tier(k))?;
            for (th, g) in thetas.iter().zip(gains) {
                t.push(vec![
                    k.to_string(),
                    text(tier.kind.name()),
                    num(b),
                    num(*th),
                    num(g.value_db),
                    num(g.std_error_db),
                    g.n_realizations.to_string(),
                ]);
            }
        }
    }
    Ok(t)
}

fn moments_table(cfg: &ExperimentConfig) -> Result<Table> {
    let spec = hcn_spec(cfg)?;
    let exact = cfg.tiers.iter().all(|t| t.kind == ProcessKind::Poisson) && spec.common_alpha().is_ok();
    let mut t = Table::new("moments", &["theta_db", "b", "value", "method"]);
    for th in cfg.theta_points() {
        let theta = db_to_linear(th);
        for &b in &cfg.b {
            let bc = Complex64::new(b, 0.0);
            t.push(vec![num(th), num(b), num(mb_hcn_hat(&spec, bc, theta)?.re), text("hcn")]);
            if exact {
                let v = mb_hip(spec.tiers()[0].alpha, bc, theta)?.re;
                t.push(vec![num(th), num(b), num(v), text("ppp-exact")]);
            }
        }
    }
    Ok(t)
}

fn hcn_table(cfg: &ExperimentConfig) -> Result<Table> {
    let spec = hcn_spec(cfg)?;
    let g_eff = effective_gain(spec.tiers()).ok();
    let mut t = Table::new("hcn", &["theta_db", "b", "mb_hat", "mb_closed_form", "hip_at_geff", "g_eff_db"]);
    for th in cfg.theta_points() {
        let theta = db_to_linear(th);
        for &b in &cfg.b {
            let bc = Complex64::new(b, 0.0);
            let hat = mb_hcn_hat(&spec, bc, theta)?.re;
            let (closed, hip, geff_db) = match g_eff {
                Some(g) => (
                    mb_hcn_same_alpha(&spec, bc, theta)?.re,
                    mb_hip(spec.tiers()[0].alpha, bc, theta / g.value_linear)?.re,
                    g.value_db,
                ),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            t.push(vec![num(th), num(b), num(hat), num(closed), num(hip), num(geff_db)]);
        }
    }
    Ok(t)
}

const META_HEADER: [&str; 5] = ["theta_db", "x", "fbar", "stderr", "method"];

fn meta_analytic_table(cfg: &ExperimentConfig) -> Result<Table> {
    let spec = hcn_spec(cfg)?;
    let mut t = Table::new("meta-analytic", &META_HEADER);
    for th in cfg.theta_points() {
        let theta = db_to_linear(th);
        for &x in &cfg.x {
            let v = gil_pelaez(|b| mb_hcn_hat(&spec, b, theta), x)?;
            t.push(vec![num(th), num(x), num(v.value), num(v.abs_error), text("analytic-gp")]);
        }
    }
    Ok(t)
}

fn aba(spec: &HcnSpec, theta: f64, x: f64) -> Result<f64> {
    let m1 = mb_hcn_hat(spec, Complex64::new(1.0, 0.0), theta)?.re;
    let m2 = mb_hcn_hat(spec, Complex64::new(2.0, 0.0), theta)?.re;
    beta_approx(m1, m2.clamp(m1 * m1, m1), x)
}

fn meta_beta_table(cfg: &ExperimentConfig) -> Result<Table> {
    let spec = hcn_spec(cfg)?;
    let mut t = Table::new("meta-beta", &META_HEADER);
    for th in cfg.theta_points() {
        for &x in &cfg.x {
            let v = aba(&spec, db_to_linear(th), x)?;
            t.push(vec![num(th), num(x), num(v), String::new(), text("beta")]);
        }
    }
    Ok(t)
}

fn meta_sim_table(cfg: &ExperimentConfig) -> Result<Table> {
    let m = simulate_meta(&sim_config(cfg, cfg.tiers.clone(), cfg.x.clone(), cfg.seed))?;
    let mut t = Table::new("meta-sim", &META_HEADER);
    for (i, th) in m.theta_db.iter().enumerate() {
        for (j, x) in m.x.iter().enumerate() {
            t.push(vec![num(*th), num(*x), num(m.ccdf(i, j)), num(m.ccdf_std_error(i, j)), text("empirical")]);
        }
    }
    Ok(t)
}

const COMPARE_HEADER: [&str; 8] = [
    "theta_db",
    "x",
    "simulation",
    "simulation_stderr",
    "shifted_hip",
    "gil_pelaez",
    "aba",
    "g_eff_db",
];

fn compare_rows(cfg: &ExperimentConfig, tiers: &[TierSpec], seed: u64, prefix: &[String], t: &mut Table) -> Result<()> {
    let spec = HcnSpec::new(tiers.to_vec())?;
    let g_eff = effective_gain(tiers).ok();
    let sim = simulate_meta(&sim_config(cfg, tiers.to_vec(), cfg.x.clone(), seed))?;
    for (i, &th) in sim.theta_db.iter().enumerate() {
        let theta = db_to_linear(th);
        for (j, &x) in sim.x.iter().enumerate() {
            let shifted = match g_eff {
                Some(g) => {
                    let alpha = tiers[0].alpha;
                    gil_pelaez(|b| mb_hip(alpha, b, theta / g.value_linear), x)?.value
                }
                None => f64::NAN,
            };
            let gp = gil_pelaez(|b| mb_hcn_hat(&spec, b, theta), x)?.value;
            let mut row = prefix.to_vec();
            row.extend([
                num(th),
                num(x),
                num(sim.ccdf(i, j)),
                num(sim.ccdf_std_error(i, j)),
                num(shifted),
                num(gp),
                num(aba(&spec, theta, x)?),
                num(g_eff.map_or(f64::NAN, |g| g.value_db)),
            ]);
            t.push(row);
        }
    }
    Ok(())
}

fn compare_table(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("compare", &COMPARE_HEADER);
    compare_rows(cfg, &cfg.tiers_with_gains(), cfg.seed, &[], &mut t)?;
    Ok(t)
}

fn critical_table(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new("critical-theta", &["tier", "x", "theta_c_db", "eta", "alpha"]);
    for (k, tier) in cfg.tiers.iter().enumerate() {
        for &x in &cfg.x {
            let c = critical_theta(&tier.kind, tier.alpha, x).map_err(|e| e.in_tier(k))?;
            t.push(vec![k.to_string(), num(x), num(c.theta_c_db), num(c.eta), num(c.alpha)]);
        }
    }
    Ok(t)
}

/// Reference models at density 0.1 with their reference gains in dB.
fn figure_models() -> Vec<(&'static str, ProcessKind, f64)> {
    vec![
        ("ppp", ProcessKind::Poisson, 0.0),
        ("tl", ProcessKind::triangular_lattice_with_density(0.1), 3.6099),
        ("ptl", ProcessKind::perturbed_lattice_with_density(0.1, 0.5), 1.8343),
        (
            "gappp",
            ProcessKind::GaussPoisson(GaussPoissonParams {
                lambda_p: 1.0 / 15.0,
                p: 0.5,
                u: 1.0,
            }),
            -1.3768,
        ),
        (
            "mcp",
            ProcessKind::MaternCluster(MaternParams {
                lambda_p: 0.01,
                c_bar: 10.0,
                r_c: 4.0,
            }),
            -5.1702,
        ),
    ]
}

fn figure_tier(kind: ProcessKind, gain_db: f64) -> Result<TierSpec> {
    Ok(TierSpec::new(kind, 0.1, 1.0, 4.0)?.with_gain_db(gain_db))
}

/// The reference experiments at the configured `n`, with the reference values
/// they are checked against.
fn figure_tables(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let models = figure_models();
    let mut g0s = Table::new("reference_g0", &["model", "alpha", "g0_db", "stderr_db", "reference_db"]);
    let mut measured = Vec::new();
    for (k, (name, kind, reference)) in models.iter().enumerate() {
        let g = estimate_g0(&figure_tier(*kind, 0.0)?, cfg.window, cfg.n, derive_seed(cfg.seed, k as u64))?;
        log::info!("G0 {name}: {:.4} dB (reference {reference} dB)", g.value_db);
        g0s.push(vec![text(name), num(4.0), num(g.value_db), num(g.std_error_db), num(*reference)]);
        measured.push(g.value_db);
    }

    let mut gbs = Table::new("reference_gb", &["model", "b", "theta_db", "gb_db", "stderr_db", "reference_g0_db"]);
    let grid = ThetaGrid {
        start: -20.0,
        stop: 10.0,
        step: 2.0,
    }
    .points();
    for &(name, kind, reference) in models.iter().filter(|m| matches!(m.0, "tl" | "gappp")) {
        for b in [1.0, 2.0, 3.0] {
            let gains = estimate_gb_curve(&grid, b, &figure_tier(kind, 0.0)?, cfg.window, cfg.n, cfg.seed)?;
            for (th, g) in grid.iter().zip(gains) {
                gbs.push(vec![text(name), num(b), num(*th), num(g.value_db), num(g.std_error_db), num(reference)]);
            }
        }
    }

    let mut metas = Table::new(
        "reference_meta",
        &["model", "theta_db", "x", "simulation", "simulation_stderr", "shifted_ppp", "g0_db"],
    );
    for (k, (name, kind, _)) in models.iter().enumerate() {
        let g0 = measured[k];
        let sim = simulate_meta(&sim_config(cfg, vec![figure_tier(*kind, 0.0)?], vec![0.95], derive_seed(cfg.seed, 10 + k as u64)))?;
        for (i, &th) in sim.theta_db.iter().enumerate() {
            let shifted = gil_pelaez(|b| mb_hip(4.0, b, db_to_linear(th - g0)), 0.95)?.value;
            metas.push(vec![
                text(name),
                num(th),
                num(0.95),
                num(sim.ccdf(i, 0)),
                num(sim.ccdf_std_error(i, 0)),
                num(shifted),
                num(g0),
            ]);
        }
    }

    let mut crit = Table::new("reference_critical_theta", &["x", "theta_c_db", "reference_db"]);
    let tl = models[1].1;
    for x in [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99] {
        let c = critical_theta(&tl, 4.0, x)?;
        let reference = if x == 0.95 { -16.68 } else { f64::NAN };
        crit.push(vec![num(x), num(c.theta_c_db), num(reference)]);
    }

    let mut header = vec!["network", "reference_g_eff_db"];
    header.extend(COMPARE_HEADER);
    let mut hcn = Table::new("reference_hcn", &header);
    let ppp = figure_tier(ProcessKind::Poisson, 0.0)?;
    let pairs = [("tl+ppp", 1, 1.2190), ("ptl+ppp", 2, 0.5361), ("gappp+ppp", 3, -0.3064), ("mcp+ppp", 4, -0.8301)];
    for (label, idx, reference) in pairs {
        let (_, kind, g) = models[idx];
        let tiers = vec![figure_tier(kind, g)?, ppp];
        compare_rows(cfg, &tiers, derive_seed(cfg.seed, 20 + idx as u64), &[text(label), num(reference)], &mut hcn)?;
    }
    let three = vec![figure_tier(models[3].1, models[3].2)?, figure_tier(models[4].1, models[4].2)?, ppp];
    compare_rows(cfg, &three, derive_seed(cfg.seed, 30), &[text("gappp+mcp+ppp"), num(-0.4959)], &mut hcn)?;

    Ok(vec![g0s, gbs, metas, crit, hcn])
}

/// Computes the tables of one run.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    cfg.validate()?;
    Ok(match cfg.mode {
        Mode::G0 => vec![g0_table(cfg)?],
        Mode::Gb => vec![gb_table(cfg)?],
        Mode::Moments => vec![moments_table(cfg)?],
        Mode::MetaAnalytic => vec![meta_analytic_table(cfg)?],
        Mode::MetaBeta => vec![meta_beta_table(cfg)?],
        Mode::MetaSim => vec![meta_sim_table(cfg)?],
        Mode::Hcn => vec![hcn_table(cfg)?],
        Mode::CriticalTheta => vec![critical_table(cfg)?],
        Mode::Compare => vec![compare_table(cfg)?],
        Mode::Figures => figure_tables(cfg)?,
    })
}

/// Writes tables to `out`: a file for one table, a directory of
/// `<name>.csv` files for several, stdout when `None`.
pub fn write_tables(tables: &[Table], out: Option<&Path>) -> Result<()> {
    match out {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for (i, t) in tables.iter().enumerate() {
                if tables.len() > 1 {
                    if i > 0 {
                        writeln!(lock)?;
                    }
                    writeln!(lock, "# {}", t.name)?;
                }
                t.write(&mut lock)?;
            }
            Ok(())
        }
        Some(p) if tables.len() == 1 => tables[0].write(std::fs::File::create(p)?),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for t in tables {
                t.write(std::fs::File::create(dir.join(format!("{}.csv", t.name)))?)?;
            }
            Ok(())
        }
    }
}

/// Entry point behind the binary.
pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config {
                field: "threads".into(),
                reason: "must be >= 1".into(),
            });
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = cli.resolve()?;
    let tables = run(&cfg)?;
    write_tables(&tables, cfg.output.as_deref())
}
