//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use driftlab::controls::{band_limited, ControlFamily, ControlSignal};
use driftlab::designer::{design_mu, DesignResult, DesignSpec, Sign, DESIGN_CUTOFF};
use driftlab::fd_model::{a1k, ad_series, fd_first_second, fd_q, fd_t_star, gauge, required_terms, solve_fd, FiniteModel, AD_SERIES_TOL};
use driftlab::obstruction::{
    ad_matrix_element_with_scale, alpha_coeffs, bracket_a, check_hypotheses, coercivity_constants, series_a,
    CouplingTable,
};
use driftlab::pde_sim::{
    default_eps_ladder, drift_experiment, expansion_order_fit, normalise_drift, solve_schrodinger, DriftSetup, GalerkinModel,
    WaveFunction, DEFAULT_MODES,
};
use driftlab::quadform::{coercivity_sweep, ibp_expand, vandermonde_recover, KernelH, PiecewisePoly, SweepConfig};
use driftlab::spectral::{coupling_exact, Bump, DipoleMoment, Mode};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn(&mut Shared) -> Outcome,
}

/// Designs are expensive; criteria that need the same one share it.
#[derive(Default)]
struct Shared {
    k2n1: Option<Result<DesignResult, String>>,
    k2n2: Option<Result<DesignResult, String>>,
    /// Largest norm drift over every simulator run in the suite.
    norm_drift: f64,
    sim_runs: usize,
}

impl Shared {
    fn design(&mut self, n: usize) -> Result<DesignResult, String> {
        let slot = if n == 1 { &mut self.k2n1 } else { &mut self.k2n2 };
        slot.get_or_insert_with(|| {
            let spec = DesignSpec::new(2, n, Sign::Plus).map_err(|e| e.to_string())?;
            design_mu(&spec).map_err(|e| e.to_string())
        })
        .clone()
    }

    fn record_norm(&mut self, drift: f64) {
        self.norm_drift = self.norm_drift.max(drift);
        self.sim_runs += 1;
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn linear() -> DipoleMoment<f64> {
    DipoleMoment::centered_linear()
}

fn c1_anchor(_: &mut Shared) -> Outcome {
    let mu = linear();
    let h1 = coupling_exact(&mu, Mode::new(1).map_err(s)?, Mode::new(1).map_err(s)?);
    ensure(h1.abs() < 1e-10, || format!("<μφ₁,φ₁> = {h1:e}"))?;
    let table = CouplingTable::build(&mu, 1, 2000, 1).map_err(s)?;
    let a = series_a(&table, 1).map_err(s)?;
    ensure((a - 1.0).abs() < 1e-6, || format!("A¹₁ = {a}"))?;
    Ok(format!("<μφ₁,φ₁> = {h1:.1e}, A¹₁ = {a:.12}"))
}

fn random_bumps(rng: &mut ChaCha8Rng) -> DipoleMoment<f64> {
    let count = rng.gen_range(1..=3);
    let slot = 1.0 / count as f64;
    let bumps = (0..count)
        .map(|i| {
            let w = rng.gen_range(0.3..0.45) * slot;
            let c = slot * (i as f64 + 0.5) + rng.gen_range(-0.4..0.4) * (0.5 * slot - w);
            let a = rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            Bump::new(c, w, a)
        })
        .collect();
    DipoleMoment::bumps(bumps).expect("disjoint by construction")
}

fn c2_routes(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let mu = random_bumps(&mut rng);
        let k = 1 + trial % 3;
        let table = CouplingTable::build(&mu, k, 4000, 3).map_err(s)?;
        for p in 1..=3 {
            let sa = series_a(&table, p).map_err(|e| format!("trial {trial} p {p}: {e}"))?;
            let ba = bracket_a(&mu, k, p).map_err(s)?;
            let rel = (sa - ba).abs() / sa.abs().max(1.0);
            worst = worst.max(rel);
            ensure(rel <= 1e-6, || format!("trial {trial} K {k} p {p}: series {sa} vs bracket {ba}"))?;
        }
    }
    Ok(format!("60 pairs, worst relative gap {worst:.1e}"))
}

fn c3_ibp(_: &mut Shared) -> Outcome {
    let fixtures = [
        DipoleMoment::bumps(vec![Bump::new(0.25, 0.2, 1.0), Bump::new(0.7, 0.2, -0.6)]).map_err(s)?,
        DipoleMoment::bumps(vec![Bump::new(0.4, 0.3, 0.8)]).map_err(s)?,
    ];
    let horizon = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (fi, mu) in fixtures.iter().enumerate() {
        let table = CouplingTable::build(mu, 2, 300, 3).map_err(s)?;
        let h = KernelH::new(table, horizon).map_err(s)?;
        for trial in 0..50 {
            let u = band_limited(horizon, 200, 8, &mut rng).map_err(s)?;
            for n in 1..=3 {
                let e = ibp_expand(h.kernel(), &u, n).map_err(s)?;
                let rel = e.residual() / (1.0 + e.lhs.norm());
                worst = worst.max(rel);
                count += 1;
                ensure(rel < 1e-8, || format!("fixture {fi} trial {trial} n {n}: {rel:e}"))?;
            }
        }
    }
    Ok(format!("{count} expansions, worst relative residual {worst:.1e}"))
}

fn c4_coercivity(sh: &mut Shared) -> Outcome {
    let designed = sh.design(1)?;
    let tables = [
        ("x-1/2, K=1", CouplingTable::build(&linear(), 1, 2000, 1).map_err(s)?),
        ("designed, K=2", CouplingTable::build(&designed.mu, 2, DESIGN_CUTOFF, 1).map_err(s)?),
    ];
    let mut notes = Vec::new();
    for (name, table) in tables {
        let sweep = coercivity_sweep(&table, 1, SweepConfig::default()).map_err(s)?;
        let failed = sweep.rows.iter().filter(|r| !r.pass).count();
        let worst = sweep.worst().ok_or("empty sweep")?;
        let rel = worst.margin / worst.rhs;
        ensure(failed == 0, || format!("{name}: {failed} controls violate the bound"))?;
        notes.push(format!("{name}: min margin {:.3e} (relative {rel:.3})", worst.margin));
    }
    Ok(notes.join("; "))
}

fn c5_orders(_: &mut Shared) -> Outcome {
    let model = GalerkinModel::new(&linear(), DEFAULT_MODES).map_err(s)?;
    let v = ControlFamily::BumpModulated {
        omega: 40.0,
        order: 1,
        amplitude: 1.0,
    }
    .sample(0.05, 1000)
    .map_err(s)?;
    let fit = expansion_order_fit(&model, &v, &default_eps_ladder(), 1).map_err(s)?;
    for (i, sl) in fit.slopes.iter().enumerate() {
        ensure((sl - (i + 1) as f64).abs() <= 0.2, || format!("slopes {:?}", fit.slopes))?;
    }
    Ok(format!(
        "slopes {:.3} {:.3} {:.3}",
        fit.slopes[0], fit.slopes[1], fit.slopes[2]
    ))
}

/// Predicted drift at the smallest ε: well above rounding, well inside the
/// quadratic regime.
const DRIFT_TARGET: f64 = 1e-12;

fn drift_case(
    sh: &mut Shared,
    mu: &DipoleMoment<f64>,
    k: usize,
    n: usize,
    cutoff: usize,
    modes: usize,
    steps: usize,
) -> Result<String, String> {
    let table = CouplingTable::build(mu, k, cutoff, n).map_err(s)?;
    let t_star = coercivity_constants(&table, n).map_err(s)?.t_star;
    let horizon = 0.5 * t_star;
    let v = ControlFamily::BumpModulated {
        omega: 0.0,
        order: n,
        amplitude: 1.0,
    }
    .sample(horizon, steps)
    .map_err(s)?;
    let eps = default_eps_ladder();
    let v = normalise_drift(mu, (k, n, cutoff), &v, eps[0], DRIFT_TARGET).map_err(s)?;
    let model = GalerkinModel::new(mu, modes).map_err(s)?;
    let setup = DriftSetup {
        k,
        n,
        cutoff,
        substeps: 1,
    };
    let rep = drift_experiment(&model, &setup, &v, &eps).map_err(s)?;
    let small = &rep.rows[0];
    let ratio = small.ratio();
    ensure((0.9..=1.1).contains(&ratio), || format!("K={k} n={n}: ratio {ratio}"))?;
    ensure(small.verdict, || format!("K={k} n={n}: sign of r opposite to -sign(A)"))?;
    for e in [eps[0], eps[eps.len() - 1]] {
        let tr = solve_schrodinger(&model, &v.scaled(e), &WaveFunction::ground(modes), 1).map_err(s)?;
        sh.record_norm(tr.norm_drift);
    }
    Ok(format!("K={k} n={n}: ratio {ratio:.4} at ε = {:.0e}", small.eps))
}

fn c6_drift(sh: &mut Shared) -> Outcome {
    let a = drift_case(sh, &linear(), 1, 1, 2000, DEFAULT_MODES, 800)?;
    let designed = sh.design(2)?;
    let b = drift_case(sh, &designed.mu, 2, 2, DESIGN_CUTOFF, 1000, 2000)?;
    Ok(format!("{a}; {b}"))
}

fn c7_designer(sh: &mut Shared) -> Outcome {
    let mut notes = Vec::new();
    for n in [1, 2] {
        let r = sh.design(n)?;
        ensure(r.converged, || format!("n={n} did not converge"))?;
        let hyp = check_hypotheses(&r.mu, 2, n, DESIGN_CUTOFF).map_err(s)?;
        ensure(hyp.h1_residual.abs() < 1e-8, || format!("n={n}: H1 residual {:e}", hyp.h1_residual))?;
        for p in 1..n {
            ensure(hyp.a(p).abs() < 1e-8, || format!("n={n}: A^{p} = {:e}", hyp.a(p)))?;
        }
        let an = hyp.a(n);
        ensure((an - 1.0).abs() < 1e-6, || format!("n={n}: A^n = {an}"))?;
        ensure(hyp.passes(), || format!("n={n}: hypotheses fail {hyp:?}"))?;
        notes.push(format!("n={n}: A^n = {an:.9}, {} iterations", r.iterations));
    }
    Ok(notes.join("; "))
}

fn c8_finite(_: &mut Shared) -> Outcome {
    let m = FiniteModel::demo();
    let k = 2;
    let mut worst: f64 = 0.0;
    for &u1 in &[-0.4, 0.05, 0.3] {
        let terms = required_terms(&m, u1, AD_SERIES_TOL);
        let series = ad_series(&m, u1, terms).map_err(s)?;
        let g = gauge(&m, u1);
        let exact = &g * m.h0().map(|v| Complex64::new(v, 0.0)) * g.adjoint();
        let gap = (series - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    ensure(worst < 1e-12, || format!("ad series gap {worst:e}"))?;

    let u = ControlSignal::from_fn(0.05, 400, |t: f64| (80.0 * t).sin() + 0.3).map_err(s)?;
    let o = fd_first_second(&m, &u, k, 4).map_err(s)?;
    ensure(o.x_l[k - 1].norm() < 1e-12, || format!("first order on φ_K: {:e}", o.x_l[k - 1].norm()))?;

    let a = a1k(&m, k).map_err(s)?;
    let t = 0.5 * fd_t_star(&m, k).map_err(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut min_rel = f64::INFINITY;
    for trial in 0..200 {
        let sgl = band_limited(t, 200, 6, &mut rng).map_err(s)?;
        let p = PiecewisePoly::linear(&sgl);
        let q = fd_q(&m, k, &p).map_err(s)?;
        let rhs = a.abs() / 8.0 * p.product(&p).integral();
        let lhs = -a.signum() * q;
        min_rel = min_rel.min((lhs - rhs) / rhs);
        ensure(lhs >= rhs, || format!("trial {trial}: {lhs} < {rhs}"))?;
    }

    let v = ControlFamily::BumpModulated {
        omega: 0.0,
        order: 1,
        amplitude: 1.0,
    }
    .sample(t, 400)
    .map_err(s)?;
    let q = fd_q(&m, k, &PiecewisePoly::linear(&v).primitive()).map_err(s)?;
    let phi = m.phi(k);
    let lam0 = m.eigenvalues()[0];
    let mut ratios = Vec::new();
    for eps in [1e-2, 1e-3] {
        let x = solve_fd(&m, &v.scaled(eps), &m.ground(), 4).map_err(s)?;
        let last = x.states.last().ok_or("empty trajectory")?;
        let proj: Complex64 = last.iter().zip(phi.iter()).map(|(c, p)| c * p).sum();
        ratios.push((proj * Complex64::cis(lam0 * t)).im / (eps * eps * q));
    }
    let gap = (ratios[1] - 1.0).abs();
    ensure(gap < 1e-3 && gap < (ratios[0] - 1.0).abs(), || format!("drift ratios {ratios:?}"))?;
    Ok(format!(
        "ad gap {worst:.1e}, a¹_K = {a}, min coercivity margin {min_rel:.3}, drift ratios {:.6} → {:.8}",
        ratios[0], ratios[1]
    ))
}

fn c9_structure(sh: &mut Shared) -> Outcome {
    for p in 0..=10 {
        let sum = alpha_coeffs(p).alternating_sum();
        ensure(sum == 1, || format!("alternating sum {sum} at p = {p}"))?;
    }

    let mu = DipoleMoment::bumps(vec![Bump::new(0.35, 0.15, 0.8), Bump::new(0.72, 0.12, -0.5)]).map_err(s)?;
    // q ≤ 3 at the stated relative tolerance. At q = 4 the matrix element is
    // a cancellation of terms up to 1e9 times larger, so it is held to the
    // rounding floor of those terms instead.
    let mut worst: f64 = 0.0;
    let mut worst_floor: f64 = 0.0;
    for q in 0..=4 {
        for (a, b) in [(1, 2), (2, 5), (1, 4), (3, 7)] {
            let (ma, mb) = (Mode::new(a).map_err(s)?, Mode::new(b).map_err(s)?);
            let (lhs, scale) = ad_matrix_element_with_scale(&mu, q, ma, mb).map_err(s)?;
            let gap = ma.eigenvalue::<f64>() - mb.eigenvalue::<f64>();
            let rhs = (-gap).powi(q as i32) * coupling_exact(&mu, ma, mb);
            if q <= 3 {
                let rel = (lhs - rhs).abs() / rhs.abs();
                worst = worst.max(rel);
                ensure(rel < 1e-9, || format!("q={q} ({a},{b}): {lhs} vs {rhs}"))?;
            } else {
                let floor = (lhs - rhs).abs() / scale;
                worst_floor = worst_floor.max(floor);
                ensure(floor < 1e-13, || format!("q={q} ({a},{b}): {lhs} vs {rhs}, scale {scale:e}"))?;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = GalerkinModel::new(&linear(), 40).map_err(s)?;
    for _ in 0..3 {
        let u = band_limited(0.05, 400, 6, &mut rng).map_err(s)?.scaled(200.0);
        let tr = solve_schrodinger(&model, &u, &WaveFunction::ground(40), 2).map_err(s)?;
        sh.record_norm(tr.norm_drift);
    }
    ensure(sh.norm_drift < 1e-10, || format!("norm drift {:e}", sh.norm_drift))?;

    let mut vand: f64 = 0.0;
    for modes in [vec![2usize, 3], vec![2, 3, 4], vec![2, 4, 5, 7]] {
        let truth: Vec<f64> = (0..modes.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let z: Vec<Complex64> = modes
            .iter()
            .map(|&j| {
                let w = Mode::new(j).unwrap().eigenvalue::<f64>() - Mode::new(1).unwrap().eigenvalue::<f64>();
                truth
                    .iter()
                    .enumerate()
                    .map(|(p, &up)| Complex64::new(0.0, -w).powu(p as u32) * up)
                    .sum()
            })
            .collect();
        let r = vandermonde_recover(&modes, &z).map_err(s)?;
        for (got, want) in r.values.iter().zip(&truth) {
            let e = (got - want).abs();
            vand = vand.max(e);
            ensure(e < 1e-10, || format!("modes {modes:?}: {got} vs {want}"))?;
        }
    }
    Ok(format!(
        "α sums = 1 (p ≤ 10), eigen relation {worst:.1e} (q ≤ 3), {worst_floor:.1e} of scale (q = 4), norm drift {:.1e} over {} runs, Vandermonde {vand:.1e}",
        sh.norm_drift, sh.sim_runs
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "linear dipole anchor", budget: Duration::from_secs(5), run: c1_anchor },
        Criterion { id: 2, name: "series and bracket routes", budget: Duration::from_secs(120), run: c2_routes },
        Criterion { id: 3, name: "integration by parts identity", budget: Duration::from_secs(60), run: c3_ibp },
        Criterion { id: 4, name: "coercivity sweep", budget: Duration::from_secs(120), run: c4_coercivity },
        Criterion { id: 5, name: "expansion orders", budget: Duration::from_secs(300), run: c5_orders },
        Criterion { id: 6, name: "drift reproduction", budget: Duration::from_secs(600), run: c6_drift },
        Criterion { id: 7, name: "designer", budget: Duration::from_secs(1200), run: c7_designer },
        Criterion { id: 8, name: "finite-dimensional suite", budget: Duration::from_secs(120), run: c8_finite },
        Criterion { id: 9, name: "structural invariants", budget: Duration::from_secs(60), run: c9_structure },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut shared = Shared::default();
    let mut failures = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)(&mut shared);
        let took = start.elapsed();
        let over = took > c.budget;
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over budget {:?}", c.budget)),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failures += 1;
        }
        println!("criterion {} {tag} [{:.1?}] {}: {detail}", c.id, took, c.name);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
