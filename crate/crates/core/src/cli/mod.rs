//! The `spinrestrict` batch frontend: one JSON config file plus flag
//! overrides, one report per run.

pub mod config;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub use config::{Beta, Command, ObservableChoice, RunConfig};
pub use report::{emit_report, format_float, Cell, Format, Report, Table};

use crate::dyson_polymer::{factorization_residual, kp_certificate, random_loop_diagram, truncated_dyson, Diagram, DysonModel, KPParams};
use crate::error::{Error, Result};
use crate::fcs_entanglement::{best_conditioned_correlation, fcs_restriction, gell_mann, Conditioning, FcsModel};
use crate::gibbs_engine::{classical_restriction, gibbs_state, ground_state, GroundMethod, QuantumState};
use crate::ising_exact::{ldp_table, rate_function, IsingParams, QuadratureRule};
use crate::locality_probe::{nonlocality_scan, ProbeSpec};
use crate::mobius_potential::{beta_max, classical_potential, gibbs_measure_from_potential, ground_classical_potential};
use crate::spin_algebra::{build_hamiltonian, hermitian_eigh, CMatrix, Interaction, Lattice, ObservableSpectrum};

#[derive(Debug, Parser)]
#[command(name = "spinrestrict", version, about = "Classical restrictions of quantum spin chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, clap::Subcommand)]
pub enum Sub {
    /// Classical restriction of an Ising Gibbs or ground state.
    Restrict(Args),
    /// Classical potential of the restriction on a finite chain.
    Potential(Args),
    /// Largest inverse temperature of the high-temperature bound.
    Betamax(Args),
    /// Toeplitz generating functions, Szegő limit and rate function.
    IsingLdp(Args),
    /// Conditional probabilities of the σz restriction.
    Locality(Args),
    /// Dyson truncation, diagram factorization and the KP check.
    DysonCheck(Args),
    /// Conditioned correlations of a finitely correlated state.
    Fcs(Args),
}

impl Sub {
    pub fn split(&self) -> (Command, &Args) {
        match self {
            Sub::Restrict(a) => (Command::Restrict, a),
            Sub::Potential(a) => (Command::Potential, a),
            Sub::Betamax(a) => (Command::Betamax, a),
            Sub::IsingLdp(a) => (Command::IsingLdp, a),
            Sub::Locality(a) => (Command::Locality, a),
            Sub::DysonCheck(a) => (Command::DysonCheck, a),
            Sub::Fcs(a) => (Command::Fcs, a),
        }
    }
}

/// Flags shared by every subcommand. Model flags override the config file.
#[derive(Debug, Default, clap::Args)]
pub struct Args {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
    #[arg(long = "J", allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long = "h", allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// A number or "ground".
    #[arg(long)]
    pub beta: Option<Beta>,
    #[arg(long = "N")]
    pub sites: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<i64>>,
    #[arg(long = "L", value_delimiter = ',')]
    pub l: Option<Vec<usize>>,
    #[arg(long = "X", value_enum)]
    pub x: Option<ObservableChoice>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub quadrature: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub buffer: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub m: Option<Vec<f64>>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long = "kp_sites")]
    pub kp_sites: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub diagrams: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "x_V", value_delimiter = ',')]
    pub x_v: Option<Vec<usize>>,
}

impl Args {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.into(), v);
            }
        };
        set("out", self.out.as_ref().map(|p| json!(p)));
        set("format", self.format.map(|f| json!(f)));
        set("seed", self.seed.map(|s| json!(s)));
        set("threads", self.threads.map(|s| json!(s)));
        set("J", self.j.map(|v| json!(v)));
        set("h", self.h.map(|v| json!(v)));
        set("beta", self.beta.map(|v| json!(v)));
        set("N", self.sites.map(|v| json!(v)));
        set("window", self.window.as_ref().map(|v| json!(v)));
        set("L", self.l.as_ref().map(|v| json!(v)));
        set("X", self.x.map(|v| json!(v)));
        set("a", self.a.map(|v| json!(v)));
        set("kappa", self.kappa.map(|v| json!(v)));
        set("quadrature", self.quadrature.map(|v| json!(v)));
        set("epsilon", self.epsilon.map(|v| json!(v)));
        set("buffer", self.buffer.map(|v| json!(v)));
        set("g", self.g.map(|v| json!(v)));
        set("n", self.n.as_ref().map(|v| json!(v)));
        set("t", self.t.as_ref().map(|v| json!(v)));
        set("m", self.m.as_ref().map(|v| json!(v)));
        set("order", self.order.map(|v| json!(v)));
        set("kp_sites", self.kp_sites.map(|v| json!(v)));
        set("samples", self.samples.map(|v| json!(v)));
        set("diagrams", self.diagrams.as_ref().map(|p| json!(p)));
        set("model", self.model.as_ref().map(|p| json!(p)));
        set("x_V", self.x_v.as_ref().map(|v| json!(v)));
        m
    }
}

/// Config file, then the subcommand, then flags.
pub fn load_config(command: Command, args: &Args) -> Result<RunConfig> {
    let mut map = match &args.config {
        Some(p) => config::read_config_file(p)?,
        None => Map::new(),
    };
    map.insert("command".into(), json!(command));
    map.extend(args.overrides());
    RunConfig::from_value(Value::Object(map))
}

fn join_values(spectrum: &[f64], cfg: &[usize]) -> String {
    cfg.iter().map(|&c| spectrum[c].to_string()).collect::<Vec<_>>().join(";")
}

fn join_sites(sites: &[i64]) -> String {
    sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
}

fn ising_state(cfg: &RunConfig, n: usize) -> Result<(Lattice, Interaction, QuantumState)> {
    let lat = Lattice::chain(n, 2)?;
    let phi = Interaction::transverse_ising(cfg.j, cfg.h);
    let h = build_hamiltonian(&phi, &lat)?;
    let st = match cfg.beta.finite() {
        Some(b) => gibbs_state(&h, &lat, b)?,
        None => ground_state(&h, &lat, GroundMethod::Auto, cfg.seed)?,
    };
    Ok((lat, phi, st))
}

fn opt(x: Option<f64>) -> Cell {
    Cell::Float(x.unwrap_or(f64::NAN))
}

fn beta_cell(b: Beta) -> Cell {
    match b {
        Beta::Finite(b) => Cell::Float(b),
        Beta::Ground(_) => "ground".into(),
    }
}

fn run_restrict(cfg: &RunConfig) -> Result<Vec<Table>> {
    let n = cfg.sites.expect("validated");
    let (_, _, st) = ising_state(cfg, n)?;
    let spec = ObservableSpectrum::new(&cfg.observable_matrix()?)?;
    let window = cfg.window.clone().unwrap_or_else(|| (0..n as i64).collect());
    let mu = classical_restriction(&st, &spec, &window)?;
    let mut t = Table::new("restriction", &["x", "prob"]);
    for (idx, &p) in mu.probs().iter().enumerate() {
        t.push(vec![join_values(mu.spectrum(), &mu.config(idx)).into(), p.into()]);
    }
    let mut s = Table::new("state", &["N", "beta", "energy", "log_partition", "gap"]);
    s.push(vec![n.into(), beta_cell(cfg.beta), opt(st.energy()), opt(st.log_partition()), opt(st.gap())]);
    Ok(vec![t, s])
}

fn run_potential(cfg: &RunConfig) -> Result<Vec<Table>> {
    let n = cfg.sites.expect("validated");
    let sites: Vec<i64> = (0..n as i64).collect();
    let spec = ObservableSpectrum::new(&cfg.observable_matrix()?)?;
    let (_, phi, st) = ising_state(cfg, n)?;
    let psi = match cfg.beta.finite() {
        Some(b) => classical_potential(&phi, &spec, b, &sites)?,
        None => ground_classical_potential(&st, &spec, &sites)?,
    };
    let mut t = Table::new("potential", &["sites", "config", "value"]);
    for (a, vals) in psi.terms() {
        for (idx, &v) in vals.iter().enumerate() {
            let cfg_idx = crate::spin_algebra::configurations(spec.len(), a.len()).nth(idx).expect("table size");
            t.push(vec![join_sites(a).into(), join_values(psi.spectrum(), &cfg_idx).into(), v.into()]);
        }
    }
    let mu = classical_restriction(&st, &spec, &sites)?;
    let (rebuilt, _) = gibbs_measure_from_potential(&psi, &sites)?;
    let err = mu.probs().iter().zip(rebuilt.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut c = Table::new("reconstruction", &["N", "beta", "max_abs_error"]);
    c.push(vec![n.into(), beta_cell(cfg.beta), err.into()]);
    Ok(vec![t, c])
}

fn run_betamax(cfg: &RunConfig) -> Result<Vec<Table>> {
    let phi = Interaction::transverse_ising(cfg.j, cfg.h);
    let b = beta_max(&phi, cfg.a)?;
    let mut t = Table::new("betamax", &["J", "h", "a", "beta_max", "unbounded"]);
    t.push(vec![cfg.j.into(), cfg.h.into(), cfg.a.into(), b.beta.into(), b.unbounded.into()]);
    Ok(vec![t])
}

fn run_ising_ldp(cfg: &RunConfig) -> Result<Vec<Table>> {
    let p = IsingParams::new(cfg.g.expect("validated"), 1.0)?;
    let quad = QuadratureRule::trapezoid(cfg.quadrature)?;
    let mut t = Table::new("ldp", &["n", "t", "G_n", "logG_over_n", "F"]);
    for r in ldp_table(&cfg.n, &cfg.t, &p, &quad)? {
        t.push(vec![r.n.into(), r.t.into(), r.g_n.into(), r.log_g_over_n.into(), r.f.into()]);
    }
    let mut tables = vec![t];
    if !cfg.m.is_empty() {
        let mut r = Table::new("rate", &["m", "I", "t_star", "boundary"]);
        for &m in &cfg.m {
            let v = rate_function(m, &p, &quad)?;
            r.push(vec![m.into(), v.value.into(), v.t.into(), v.boundary.into()]);
        }
        tables.push(r);
    }
    Ok(tables)
}

fn run_locality(cfg: &RunConfig) -> Result<Vec<Table>> {
    let eps = cfg.epsilon.expect("validated");
    let probes = cfg.l.iter().map(|&l| ProbeSpec::new(eps, l, cfg.buffer)).collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("locality", &["L", "N", "epsilon", "p_zero", "p_one", "gap"]);
    for r in nonlocality_scan(&probes, cfg.seed) {
        let r = r?;
        t.push(vec![r.l.into(), r.n.into(), r.epsilon.into(), r.p_zero.into(), r.p_one.into(), r.gap.into()]);
    }
    Ok(vec![t])
}

fn exp_hermitian(h: &CMatrix, beta: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigh(h);
    CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * (-beta * vals[c]).exp()) * vecs.adjoint()
}

fn operator_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn run_dyson(cfg: &RunConfig) -> Result<Vec<Table>> {
    let beta = cfg.beta.finite().expect("validated");
    let eps = cfg.coupling().expect("validated");
    let n = cfg.sites.unwrap_or(3);
    let spec = ObservableSpectrum::new(&cfg.observable_matrix()?)?;
    let model = DysonModel::ising(cfg.h, eps, spec)?;
    let lat = Lattice::chain(n, 2)?;
    let h0 = build_hamiltonian(&model.phi0, &lat)?.to_dense()?;
    let v = build_hamiltonian(&model.upsilon, &lat)?.to_dense()?;
    let exact = exp_hermitian(&(&h0 + &v), beta);
    let mut series = Table::new("dyson", &["order", "error", "bound"]);
    for order in 0..=cfg.order {
        let tr = truncated_dyson(&h0, &v, beta, order)?;
        series.push(vec![order.into(), operator_norm(&(tr.matrix - &exact)).into(), tr.bound.into()]);
    }

    let sites = lat.sites().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let diagrams = match &cfg.diagrams {
        Some(p) => Diagram::parse_list(&std::fs::read_to_string(p).map_err(|e| Error::Config(format!("key `diagrams`: {e}")))?)?,
        None => (0..cfg.samples)
            .map(|_| {
                let loops = rng.gen_range(1..=2);
                random_loop_diagram(&mut rng, beta, &sites, loops)
            })
            .collect::<Result<_>>()?,
    };
    let admissible: Vec<usize> = (0..model.spec.len()).filter(|&k| model.overlap(k) > 1e-14).collect();
    let mut fact = Table::new(
        "factorization",
        &["diagram", "order", "polymers", "density_re", "density_im", "residual", "volume_delta", "root_delta"],
    );
    for (i, d) in diagrams.iter().enumerate() {
        let x: Vec<usize> = sites.iter().map(|_| admissible[rng.gen_range(0..admissible.len())]).collect();
        let r = factorization_residual(d, &model, &sites, &x)?;
        fact.push(vec![
            i.into(),
            d.order().into(),
            r.polymers.into(),
            r.density.re.into(),
            r.density.im.into(),
            r.residual.into(),
            r.volume_delta.into(),
            r.root_delta.into(),
        ]);
    }

    let gap = 2.0 * cfg.h;
    let kp = KPParams::new(cfg.alpha1, cfg.alpha2, cfg.delta1, cfg.delta2, gap, beta, &model)?;
    let kp_sites: Vec<i64> = (0..cfg.kp_sites as i64).collect();
    let cert = kp_certificate(&kp, &model.upsilon, &kp_sites)?;
    let mut k = Table::new("kp", &["epsilon", "beta", "sites", "passes", "worst_ratio"]);
    k.push(vec![eps.into(), beta.into(), cfg.kp_sites.into(), cert.passes.into(), cert.worst_ratio().into()]);
    Ok(vec![series, fact, k])
}

fn run_fcs(cfg: &RunConfig) -> Result<Vec<Table>> {
    let model = match &cfg.model {
        Some(p) => FcsModel::from_json(&std::fs::read_to_string(p).map_err(|e| Error::Config(format!("key `model`: {e}")))?)?,
        None => FcsModel::aklt(),
    };
    let m = model.local_dim();
    let family = gell_mann(m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut corr = Table::new("correlation", &["n", "x_V", "corr"]);
    for &n in &cfg.n {
        let len = 2 * (n - 1);
        let outcomes: Vec<Vec<usize>> = match &cfg.x_v {
            Some(x) => {
                if let Some(&bad) = x.iter().find(|&&a| a > m) {
                    return Err(Error::Config(format!("key `x_V`: label {bad} exceeds m = {m}")));
                }
                vec![x.iter().map(|a| a - 1).collect()]
            }
            None => {
                let total = (m as f64).powi(len as i32);
                if total <= cfg.samples as f64 {
                    crate::spin_algebra::configurations(m, len).collect()
                } else {
                    (0..cfg.samples).map(|_| (0..len).map(|_| rng.gen_range(0..m)).collect()).collect()
                }
            }
        };
        for x in outcomes {
            let cond = Conditioning::new(n, x)?;
            let value = match best_conditioned_correlation(&model, &cond, &family, n as i64) {
                Ok(w) => w.value,
                Err(Error::SingularEvent(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            corr.push(vec![n.into(), cond.label().into(), value.into()]);
        }
    }
    let c = model.conditions();
    let mut cond = Table::new("conditions", &["m", "proportional_unitary", "normalized", "full_algebra"]);
    cond.push(vec![m.into(), c.proportional_unitary.into(), c.normalized.into(), c.full_algebra.into()]);
    let mut prod = Table::new("product", &["sites", "product_deviation"]);
    for l in 1..=3 {
        prod.push(vec![l.into(), fcs_restriction(&model, l)?.product_deviation.into()]);
    }
    Ok(vec![corr, cond, prod])
}

/// Runs one validated configuration.
pub fn run(cfg: &RunConfig, timings: bool) -> Result<Report> {
    let start = Instant::now();
    let tables = match cfg.command {
        Command::Restrict => run_restrict(cfg)?,
        Command::Potential => run_potential(cfg)?,
        Command::Betamax => run_betamax(cfg)?,
        Command::IsingLdp => run_ising_ldp(cfg)?,
        Command::Locality => run_locality(cfg)?,
        Command::DysonCheck => run_dyson(cfg)?,
        Command::Fcs => run_fcs(cfg)?,
    };
    let mut timings_ms = BTreeMap::new();
    if timings {
        timings_ms.insert("total".to_string(), start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(Report {
        command: cfg.command.name().into(),
        config_echo: serde_json::to_value(cfg).expect("config serializes"),
        tables,
        timings_ms,
    })
}

/// Parses arguments, runs, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, args) = cli.command.split();
    let result = load_config(command, args).and_then(|cfg| {
        if let Some(n) = cfg.threads {
            // a pool built earlier in the process stays in place
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        let report = run(&cfg, args.timings)?;
        emit_report(&report, cfg.format, cfg.out.as_deref())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
