use std::path::PathBuf;

use clap::Args;
use driftlab::controls::{ControlFamily, ControlSignal};
use driftlab::designer::{design_mu, DesignSpec, Sign};
use driftlab::fd_model::{a1k, fd_first_second, fd_q, fd_t_star, solve_fd, FiniteModel, ModelSpec};
use driftlab::obstruction::{check_hypotheses, coercivity_constants, CouplingTable, ObstructionReport};
use driftlab::pde_sim::{drift_experiment, normalise_drift, solve_schrodinger, DriftReport, DriftSetup, GalerkinModel, WaveFunction};
use driftlab::quadform::{coercivity_sweep, ibp_expand, KernelH, PiecewisePoly, SweepConfig};
use driftlab::spectral::{Bump, DipoleMoment};
use driftlab::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_config, ControlSource, DriftConfig, MuSource, SimulateConfig};
use crate::error::CliError;
use crate::output::{json_report, num, Provenance, Table, Workdir};

/// Shared context of one invocation.
pub struct Ctx {
    pub wd: Workdir,
    /// From `DRIFTLAB_WORKERS`, which beats every other setting.
    pub env_workers: Option<usize>,
    pub flag_workers: usize,
}

impl Ctx {
    pub fn workers(&self, config: Option<usize>) -> usize {
        self.env_workers.or(config).unwrap_or(self.flag_workers).max(1)
    }
}

fn mu_arg(s: &str) -> MuSource {
    MuSource::Named(s.to_string())
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CoeffsArgs {
    /// Dipole JSON file, or `linear` for x - 1/2.
    #[arg(long)]
    pub mu: String,
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub modes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct CoeffsResult {
    report: ObstructionReport,
    hypotheses: driftlab::obstruction::HypothesisReport,
}

pub fn coeffs(ctx: &Ctx, a: &CoeffsArgs) -> Result<(), CliError> {
    let mu = mu_arg(&a.mu).load(&ctx.wd)?;
    let hypotheses = check_hypotheses(&mu, a.k, a.n, a.modes)?;
    let report = ObstructionReport::compute(&mu, a.k, a.n, a.modes)?;
    let prov = Provenance::new("coeffs", a);
    ctx.wd.write_atomic(&a.out, &json_report(&prov, &CoeffsResult { report, hypotheses }))?;
    Ok(())
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct DesignArgs {
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    /// `+` or `-`.
    #[arg(long, allow_hyphen_values = true, default_value = "+")]
    pub sign: Sign,
    #[arg(long, default_value_t = driftlab::designer::DESIGN_CUTOFF)]
    pub modes: usize,
    /// Where the dipole JSON goes.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

pub fn design(ctx: &Ctx, a: &DesignArgs) -> Result<(), CliError> {
    let mut spec = DesignSpec::new(a.k, a.n, a.sign)?;
    spec.cutoff = a.modes;
    let r = design_mu(&spec)?;
    let prov = Provenance::new("design-mu", a);
    let mut mu_json = serde_json::to_vec_pretty(&r.mu).expect("dipoles serialise");
    mu_json.push(b'\n');
    ctx.wd.write_atomic(&a.out, &mu_json)?;
    ctx.wd.write_atomic(&a.report, &json_report(&prov, &r))?;
    if !r.converged {
        return Err(CliError::Tolerance(format!(
            "design did not meet the tolerances: H1 residual {:e}, A = {:?}",
            r.h1_residual, r.a
        )));
    }
    Ok(())
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON report next to the CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn complex_cells(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

pub fn simulate(ctx: &Ctx, a: &ConfigArgs) -> Result<(), CliError> {
    let cfg: SimulateConfig = load_config(&ctx.wd, &a.config)?;
    let mu = cfg.mu.load(&ctx.wd)?;
    let model = GalerkinModel::new(&mu, cfg.modes)?;
    let u = cfg.control.sample(&ctx.wd, cfg.horizon, cfg.steps)?.scaled(cfg.eps);
    let psi0 = WaveFunction::mode(cfg.modes, cfg.initial_mode)?;
    let tr = solve_schrodinger(&model, &u, &psi0, cfg.substeps)?;
    let jmax = cfg.j_max_out.min(cfg.modes);
    let mut header = vec!["t".to_string()];
    for j in 1..=jmax {
        header.push(format!("re_c{j}"));
        header.push(format!("im_c{j}"));
    }
    let mut table = Table::new(header);
    for s in &tr.states {
        let mut row = vec![num(s.t)];
        for j in 1..=jmax {
            row.extend(complex_cells(s.coeff(j)));
        }
        table.row(row);
    }
    table.meta("norm_drift", num(tr.norm_drift));
    let prov = Provenance::new("simulate", &cfg);
    ctx.wd.write_atomic(&a.out, &table.render(&prov))?;
    if let Some(r) = &a.report {
        ctx.wd.write_atomic(r, &json_report(&prov, &tr.last()))?;
    }
    Ok(())
}

pub fn drift(ctx: &Ctx, a: &ConfigArgs) -> Result<(), CliError> {
    let cfg: DriftConfig = load_config(&ctx.wd, &a.config)?;
    let mu = cfg.mu.load(&ctx.wd)?;
    let horizon = match (cfg.horizon, cfg.t_frac) {
        (Some(h), None) => h,
        (None, Some(f)) => {
            let hyp = check_hypotheses(&mu, cfg.k, cfg.n, cfg.cutoff)?;
            if !hyp.passes() {
                return Err(CliError::Refused(format!("hypotheses fail for K = {}, n = {}", cfg.k, cfg.n)));
            }
            let table = CouplingTable::build(&mu, cfg.k, cfg.cutoff, cfg.n)?;
            f * coercivity_constants(&table, cfg.n)?.t_star
        }
        _ => return Err(CliError::Config("give exactly one of horizon and t_frac".into())),
    };
    let eps = cfg.eps_list();
    if eps.is_empty() {
        return Err(CliError::Config("eps list is empty".into()));
    }
    let v0 = cfg.control().sample(&ctx.wd, horizon, cfg.steps)?;
    let v = match cfg.drift_target {
        None => v0.clone(),
        Some(target) => {
            let e_min = eps.iter().copied().filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
            if !(target > 0.0) || !e_min.is_finite() {
                return Err(CliError::Config("drift_target needs a positive target and a positive ε".into()));
            }
            normalise_drift(&mu, (cfg.k, cfg.n, cfg.cutoff), &v0, e_min, target)?
        }
    };
    let peak = |u: &ControlSignal<f64>| u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = peak(&v) / peak(&v0);
    let model = GalerkinModel::new(&mu, cfg.modes)?;
    let setup = DriftSetup {
        k: cfg.k,
        n: cfg.n,
        cutoff: cfg.cutoff,
        substeps: cfg.substeps,
    };
    let workers = ctx.workers(cfg.workers);
    // contiguous chunks keep the row order independent of the worker count
    let chunk = eps.len().div_ceil(workers).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let parts: Vec<DriftReport> = pool.install(|| {
        eps.par_chunks(chunk)
            .map(|c| drift_experiment(&model, &setup, &v, c))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut report = parts[0].clone();
    report.rows = parts.into_iter().flat_map(|p| p.rows).collect();
    let mut table = Table::new(["eps", "r", "Qn", "un_l2sq", "psi_dev_sq", "verdict"]);
    for r in &report.rows {
        table.row(vec![
            num(r.eps),
            num(r.r),
            num(r.qn),
            num(r.un_l2sq),
            num(r.psi_dev_sq),
            r.verdict.to_string(),
        ]);
    }
    table.meta("horizon", num(report.horizon));
    table.meta("control_scale", num(scale));
    table.meta("A_n", num(report.a_n));
    table.meta("T_star", report.t_star.map_or("none".into(), num));
    let prov = Provenance::new("drift", &cfg);
    ctx.wd.write_atomic(&a.out, &table.render(&prov))?;
    if let Some(r) = &a.report {
        ctx.wd.write_atomic(r, &json_report(&prov, &report))?;
    }
    Ok(())
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CoercivityArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long = "K")]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Horizon as a fraction of `T*`.
    #[arg(long = "T-frac", default_value_t = 0.5)]
    pub t_frac: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub modes: usize,
    #[arg(long, default_value_t = 256)]
    pub steps: usize,
    #[arg(long, default_value_t = 6)]
    pub harmonics: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn coercivity(ctx: &Ctx, a: &CoercivityArgs) -> Result<(), CliError> {
    let mu = mu_arg(&a.mu).load(&ctx.wd)?;
    let table = CouplingTable::build(&mu, a.k, a.modes, a.n)?;
    let sweep = coercivity_sweep(
        &table,
        a.n,
        SweepConfig {
            trials: a.trials,
            t_frac: a.t_frac,
            seed: a.seed,
            steps: a.steps,
            harmonics: a.harmonics,
        },
    )?;
    let mut t = Table::new(["trial", "kind", "lhs", "rhs", "margin", "pass"]);
    for r in &sweep.rows {
        t.row(vec![
            r.trial.to_string(),
            r.kind.to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.margin),
            r.pass.to_string(),
        ]);
    }
    t.meta("T_star", num(sweep.t_star));
    t.meta("horizon", num(sweep.horizon));
    t.meta("A_n", num(sweep.a_n));
    t.meta("all_pass", sweep.all_pass());
    let prov = Provenance::new("coercivity", a);
    ctx.wd.write_atomic(&a.out, &t.render(&prov))?;
    if !sweep.all_pass() {
        let w = sweep.worst().expect("nonempty sweep");
        return Err(CliError::Tolerance(format!("coercivity fails on trial {} (margin {:e})", w.trial, w.margin)));
    }
    Ok(())
}

/// Control given on the command line: a family name or a CSV path.
#[derive(Args, Clone, Debug, Serialize)]
pub struct ControlArgs {
    /// `cos`, `sin`, `bump-modulated`, or a `t,u` CSV file. The default
    /// vanishes to high order at both ends, which the drift identities need.
    #[arg(long, default_value = "bump-modulated")]
    pub control: String,
    #[arg(long, default_value_t = 40.0)]
    pub omega: f64,
    /// Order of the bump-modulated family.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
}

impl ControlArgs {
    fn source(&self) -> ControlSource {
        let (omega, amplitude) = (self.omega, self.amplitude);
        match self.control.as_str() {
            "cos" => ControlSource::Family(ControlFamily::Cos { omega, amplitude }),
            "sin" => ControlSource::Family(ControlFamily::Sin { omega, amplitude }),
            "bump-modulated" => ControlSource::Family(ControlFamily::BumpModulated {
                omega,
                order: self.order,
                amplitude,
            }),
            path => ControlSource::Csv { csv: path.to_string() },
        }
    }

    fn sample(&self, wd: &Workdir, horizon: f64) -> Result<ControlSignal<f64>, CliError> {
        self.source().sample(wd, horizon, self.steps)
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct IbpArgs {
    /// Dipole file or `linear`; defaults to a two-bump fixture.
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long = "T", default_value_t = 0.01)]
    pub horizon: f64,
    #[arg(long, default_value_t = 300)]
    pub modes: usize,
    #[command(flatten)]
    pub control: ControlArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Identity residual accepted by `ibp-check`, relative to `1 + |lhs|`.
pub const IBP_TOL: f64 = 1e-8;

pub fn fixture_mu() -> DipoleMoment<f64> {
    DipoleMoment::bumps(vec![Bump::new(0.25, 0.2, 1.0), Bump::new(0.7, 0.2, -0.6)]).expect("disjoint fixture")
}

#[derive(Serialize)]
struct IbpResult {
    expansion: driftlab::quadform::IbpExpansion,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

pub fn ibp_check(ctx: &Ctx, a: &IbpArgs) -> Result<(), CliError> {
    let mu = match &a.mu {
        Some(s) => mu_arg(s).load(&ctx.wd)?,
        None => fixture_mu(),
    };
    let table = CouplingTable::build(&mu, a.k, a.modes, a.n)?;
    let h = KernelH::new(table, a.horizon)?;
    let u = a.control.sample(&ctx.wd, a.horizon)?;
    let expansion = ibp_expand(h.kernel(), &u, a.n)?;
    let residual = expansion.residual();
    let tolerance = IBP_TOL * (1.0 + expansion.lhs.norm());
    let pass = residual <= tolerance;
    let prov = Provenance::new("ibp-check", a);
    let res = IbpResult {
        expansion,
        residual,
        tolerance,
        pass,
    };
    ctx.wd.write_atomic(&a.out, &json_report(&prov, &res))?;
    if !pass {
        return Err(CliError::Tolerance(format!("identity residual {residual:e} above {tolerance:e}")));
    }
    Ok(())
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct OdeArgs {
    /// Model JSON with `h0` and `h1`; defaults to the built-in 3×3 example.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Final time; defaults to half of `T*`.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub substeps: usize,
    #[command(flatten)]
    pub control: ControlArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct OdeResult {
    model: ModelSpec,
    a1k: f64,
    t_star: f64,
    horizon: f64,
    /// `Q(v₁)` for the unscaled control.
    q: f64,
    /// `Im⟨X(T), φ_K e^{-iλ₁T}⟩`.
    r: f64,
    ratio: f64,
    x_q_explicit: Complex64,
    x_q_ode: Complex64,
}

pub fn ode_demo(ctx: &Ctx, a: &OdeArgs) -> Result<(), CliError> {
    let model = match &a.model {
        Some(p) => FiniteModel::from_spec(&load_config::<ModelSpec>(&ctx.wd, p)?)?,
        None => FiniteModel::demo(),
    };
    let k = a.k;
    let a1 = a1k(&model, k)?;
    let t_star = fd_t_star(&model, k)?;
    let horizon = match a.horizon {
        Some(h) => h,
        None if t_star.is_finite() => 0.5 * t_star,
        None => return Err(CliError::Config("T* is unbounded; pass --T".into())),
    };
    let v = a.control.sample(&ctx.wd, horizon)?;
    let u = v.scaled(a.eps);
    let tr = solve_fd(&model, &u, &model.ground(), a.substeps)?;
    let orders = fd_first_second(&model, &v, k, a.substeps)?;
    let q = fd_q(&model, k, &PiecewisePoly::linear(&v).primitive())?;
    let lam0 = model.eigenvalues()[0];
    let phis: Vec<_> = (1..=model.dim()).map(|j| model.phi(j)).collect();
    let project = |x: &driftlab::fd_model::FdTrajectory, i: usize, j: usize| -> Complex64 {
        x.states[i].iter().zip(phis[j].iter()).map(|(c, p)| c * p).sum()
    };
    let last = tr.states.len() - 1;
    let r = (project(&tr, last, k - 1) * Complex64::cis(lam0 * horizon)).im;
    let mut header = vec!["t".to_string()];
    for j in 1..=model.dim() {
        header.push(format!("re_x{j}"));
        header.push(format!("im_x{j}"));
    }
    let mut t = Table::new(header);
    for i in 0..tr.states.len() {
        let mut row = vec![num(u.time(i))];
        for j in 0..model.dim() {
            row.extend(complex_cells(project(&tr, i, j)));
        }
        t.row(row);
    }
    let res = OdeResult {
        model: model.spec(),
        a1k: a1,
        t_star,
        horizon,
        q,
        r,
        ratio: r / (a.eps * a.eps * q),
        x_q_explicit: orders.x_q,
        x_q_ode: orders.x_q_ode,
    };
    t.meta("a1K", num(res.a1k));
    t.meta("T_star", num(res.t_star));
    t.meta("horizon", num(res.horizon));
    t.meta("Q", num(res.q));
    t.meta("r", num(res.r));
    t.meta("ratio", num(res.ratio));
    let prov = Provenance::new("ode-demo", a);
    ctx.wd.write_atomic(&a.out, &t.render(&prov))?;
    if let Some(p) = &a.report {
        ctx.wd.write_atomic(p, &json_report(&prov, &res))?;
    }
    Ok(())
}
