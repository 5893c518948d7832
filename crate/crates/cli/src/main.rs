use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qmpso::mps::{t_max_detect, tebd_snapshots};
use qmpso::pipeline::output::{fmt_f, fmt_t, Table};
use qmpso::pipeline::{run_experiment, QmpsoSchedule, RunConfig};
use qmpso::reference::fine_trotter_snapshots;
use qmpso::{
    compose_qmpso, exact_propagate, infidelity_per_site, local_magnetization, neel_product_state, noisy_expectation_z, noisy_fidelity,
    qmpo_compile, qmps_compile, tebd_evolve_with, CompileReport, DenseHamiltonian, Init, MatrixProductState, NoiseModel, NoisyState,
    StaircaseCircuit, Statevector, SweepConfig, TebdOptions, TfimParams,
};

#[derive(Parser)]
#[command(name = "qmpso", version, about = "TEBD, QMPS/QMPO circuit compilation and noisy QMPSO experiments for the quenched Ising chain")]
struct Cli {
    /// JSON config: run-config overrides for experiments, a `model` object for the other commands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Chain length L.
    #[arg(long)]
    sites: Option<usize>,
    /// Coupling J.
    #[arg(long)]
    coupling: Option<f64>,
    /// Transverse field h.
    #[arg(long)]
    field: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    delta: f64,
    /// Start from a circuit JSON instead of identities.
    #[arg(long)]
    warm_start: Option<PathBuf>,
    /// Start from seeded random gates.
    #[arg(long)]
    random_init: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Quench the Néel state with TEBD and write the entropy trace.
    Tebd {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 8)]
        chi: usize,
        #[arg(long, default_value_t = 6.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1)]
        keep_every: usize,
        /// Entropy cut (size of the left block); half chain by default.
        #[arg(long)]
        cut: Option<usize>,
    },
    /// Compile a staircase circuit that prepares the TEBD state at time t.
    CompileQmps {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long)]
        t: f64,
        /// TEBD bond dimension; 2^layers by default.
        #[arg(long)]
        chi: Option<usize>,
    },
    /// Compile a staircase circuit that approximates the Trotter propagator at time t.
    CompileQmpo {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long)]
        t: f64,
    },
    /// Concatenate compiled QMPS and QMPO circuits into the QMPSO circuit for time t.
    Compose {
        #[arg(long)]
        qmps: PathBuf,
        #[arg(long)]
        qmpo: PathBuf,
        /// QMPO compiled for the remainder Δt, needed when t is not on the block grid.
        #[arg(long)]
        qmpo_rest: Option<PathBuf>,
        #[arg(long)]
        t_max_mps: f64,
        #[arg(long)]
        t_max_mpo: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Run a circuit on the Néel state under global depolarizing noise and compare with the reference.
    SimulateNoisy {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-3])]
        epsilon: Vec<f64>,
    },
    /// Advantage diagram (MPS vs noisy Trotter vs noisy QMPSO).
    Advantage {
        #[arg(long, value_delimiter = ',')]
        epsilon: Option<Vec<f64>>,
    },
    /// Exact-diagonalization reference: magnetization and half-chain entropy on a time grid.
    Exact {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 6.0)]
        t_final: f64,
        #[arg(long, default_value_t = 0.1)]
        t_step: f64,
    },
    /// Reproduce one figure: fig2, fig4, fig5, fig6, fig7, fig8 or fig9.
    Experiment { name: String },
}

struct Ctx {
    config: Value,
    out: PathBuf,
    seed: u64,
    seed_given: bool,
}

impl Ctx {
    fn model(&self, args: &ModelArgs) -> Result<TfimParams> {
        let mut doc = serde_json::to_value(TfimParams::critical(12, 0.01))?;
        if let Some(m) = self.config.get("model").and_then(Value::as_object) {
            for (k, v) in m {
                doc[k] = v.clone();
            }
        }
        let mut p: TfimParams = serde_json::from_value(doc).context("invalid model in config")?;
        if let Some(l) = args.sites {
            p.num_sites = l;
        }
        if let Some(j) = args.coupling {
            p.coupling = j;
        }
        if let Some(h) = args.field {
            p.field = h;
        }
        if let Some(dt) = args.dt {
            p.dt = dt;
        }
        p.validate()?;
        Ok(p)
    }

    fn sweep(&self, args: &SweepArgs, default: SweepConfig, num_sites: usize, layers: usize) -> Result<SweepConfig> {
        let mut cfg = SweepConfig { max_sweeps: args.max_sweeps.unwrap_or(default.max_sweeps), convergence_delta: args.delta, warm_start: None };
        if let Some(path) = &args.warm_start {
            cfg.warm_start = Some(read_circuit(path)?);
        } else if args.random_init {
            cfg.warm_start = Some(StaircaseCircuit::new_staircase(num_sites, layers, Init::RandomUnitary(self.seed))?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn run_config(&self, name: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::from_overrides(name, &self.config)?;
        if self.seed_given {
            cfg.seed = self.seed;
        }
        Ok(cfg)
    }

    fn dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn read_circuit(path: &Path) -> Result<StaircaseCircuit> {
    let bytes = fs::read(path).with_context(|| format!("cannot read circuit {}", path.display()))?;
    StaircaseCircuit::deserialize(&bytes).with_context(|| format!("invalid circuit file {}", path.display()))
}

fn write_circuit(dir: &Path, stem: &str, c: &StaircaseCircuit, report: Option<&CompileReport>) -> Result<()> {
    fs::write(dir.join(format!("{stem}.json")), c.serialize())?;
    if let Some(r) = report {
        fs::write(dir.join(format!("{stem}_report.json")), serde_json::to_vec_pretty(r)?)?;
        println!(
            "{stem}: fidelity {:.10} after {} sweeps (converged: {}), {} gates",
            r.final_fidelity,
            r.sweeps_used,
            r.converged,
            c.gate_count()
        );
    }
    Ok(())
}

fn write_table(dir: &Path, t: &Table) -> Result<()> {
    fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?
        }
        None => json!({}),
    };
    let ctx = Ctx { config, out: cli.out.clone(), seed: cli.seed.unwrap_or(0), seed_given: cli.seed.is_some() };

    match cli.command {
        Command::Tebd { model, chi, t_final, keep_every, cut } => {
            let p = ctx.model(&model)?;
            let psi0 = MatrixProductState::from_product(&neel_product_state(p.num_sites), chi)?;
            let res = tebd_evolve_with(&psi0, &p, t_final, &TebdOptions { keep_every, cut })?;
            let mut table = Table::new("entropy", &["t", "cut", "chi", "S_vN"]);
            for (t, s) in res.trace.times.iter().zip(&res.trace.entropy) {
                table.push(vec![fmt_t(*t), res.trace.cut.to_string(), chi.to_string(), fmt_f(*s)]);
            }
            write_table(ctx.dir()?, &table)?;
            println!("t_max = {:.2}, truncation weight = {:.3e}", t_max_detect(&res.trace, chi)?, res.truncation_weight);
        }
        Command::CompileQmps { model, sweep, layers, t, chi } => {
            let p = ctx.model(&model)?;
            let chi = chi.unwrap_or(1 << layers);
            let psi0 = MatrixProductState::from_product(&neel_product_state(p.num_sites), chi)?;
            let target = tebd_snapshots(&psi0, &p, &[t])?.pop().expect("one snapshot");
            let start = MatrixProductState::from_product(&neel_product_state(p.num_sites), 1)?;
            let cfg = ctx.sweep(&sweep, SweepConfig::qmps(), p.num_sites, layers)?;
            let (c, report) = qmps_compile(&target, &start, layers, &cfg)?;
            write_circuit(ctx.dir()?, "qmps", &c, Some(&report))?;
        }
        Command::CompileQmpo { model, sweep, layers, t } => {
            let p = ctx.model(&model)?;
            let cfg = ctx.sweep(&sweep, SweepConfig::qmpo(), p.num_sites, layers)?;
            let (c, report) = qmpo_compile(&p, t, layers, &cfg)?;
            write_circuit(ctx.dir()?, "qmpo", &c, Some(&report))?;
        }
        Command::Compose { qmps, qmpo, qmpo_rest, t_max_mps, t_max_mpo, t, dt } => {
            let qmps = read_circuit(&qmps)?;
            let qmpo = read_circuit(&qmpo)?;
            let rest = qmpo_rest.as_deref().map(read_circuit).transpose()?;
            let schedule = QmpsoSchedule {
                t_max_mps,
                t_max_mpo,
                n_l_mps: qmps.num_layers(),
                n_l_mpo: qmpo.num_layers(),
                dt,
                target_t: t,
            };
            let d = schedule.decompose()?;
            let c = compose_qmpso(&schedule, &qmps, &qmpo, rest.as_ref())?;
            write_circuit(ctx.dir()?, "qmpso", &c, None)?;
            println!("M = {}, Δt = {:.6}, gates = {}", d.m, schedule.delta_t()?, c.gate_count());
        }
        Command::SimulateNoisy { model, circuit, t, epsilon } => {
            let p = ctx.model(&model)?;
            let c = read_circuit(&circuit)?;
            if c.num_sites() != p.num_sites {
                bail!("circuit acts on {} sites but the model has L = {}", c.num_sites(), p.num_sites);
            }
            let neel = Statevector::from_product(&neel_product_state(p.num_sites))?;
            let pure = c.apply_to_statevector(&neel)?;
            let reference = fine_trotter_snapshots(&p, &[t])?.pop().expect("one snapshot");
            let mut fid = Table::new("fidelity", &["t", "epsilon", "method", "F", "infidelity_per_site"]);
            let mut mag = Table::new("magnetization", &["t", "site", "method", "z"]);
            for (i, z) in local_magnetization(&reference).iter().enumerate() {
                mag.push(vec![fmt_t(t), i.to_string(), "exact".into(), fmt_f(*z)]);
            }
            for &eps in &epsilon {
                let rho = NoisyState::new(pure.clone(), NoiseModel::new(eps)?.alpha(c.gate_count()))?;
                let f = noisy_fidelity(&rho, &reference)?;
                fid.push(vec![fmt_t(t), fmt_f(eps), "circuit".into(), fmt_f(f), fmt_f(infidelity_per_site(f, p.num_sites)?)]);
                for i in 0..p.num_sites {
                    mag.push(vec![fmt_t(t), i.to_string(), format!("circuit_eps={eps:e}"), fmt_f(noisy_expectation_z(&rho, i)?)]);
                }
                println!("epsilon {eps:e}: F = {f:.6e}");
            }
            let dir = ctx.dir()?;
            write_table(dir, &fid)?;
            write_table(dir, &mag)?;
        }
        Command::Advantage { epsilon } => {
            let mut cfg = ctx.run_config("fig6")?;
            if let Some(e) = epsilon {
                cfg.epsilons = e;
            }
            let files = run_experiment(&cfg, ctx.dir()?)?;
            println!("wrote {} files to {}", files.len(), ctx.out.display());
        }
        Command::Exact { model, t_final, t_step } => {
            let p = ctx.model(&model)?;
            let h = DenseHamiltonian::new(&p)?;
            let neel = Statevector::from_product(&neel_product_state(p.num_sites))?;
            let mut mag = Table::new("magnetization", &["t", "site", "method", "z"]);
            let mut ent = Table::new("entropy", &["t", "cut", "chi", "S_vN"]);
            let cut = p.num_sites / 2;
            let chi_exact = 1usize << cut.min(p.num_sites - cut);
            for t in qmpso::pipeline::config::grid(t_final, t_step) {
                let psi = exact_propagate(&neel, &h, t)?;
                for (i, z) in local_magnetization(&psi).iter().enumerate() {
                    mag.push(vec![fmt_t(t), i.to_string(), "exact".into(), fmt_f(*z)]);
                }
                ent.push(vec![fmt_t(t), cut.to_string(), chi_exact.to_string(), fmt_f(psi.entropy_vn(cut)?)]);
            }
            let dir = ctx.dir()?;
            write_table(dir, &mag)?;
            write_table(dir, &ent)?;
        }
        Command::Experiment { name } => {
            let cfg = ctx.run_config(&name)?;
            let files = run_experiment(&cfg, ctx.dir()?)?;
            println!("{name}: wrote {} files to {} (config {})", files.len(), ctx.out.display(), &cfg.hash()[..12]);
        }
    }
    Ok(())
}
