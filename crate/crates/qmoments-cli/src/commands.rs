use qmoments::diagnostics::{decompose, delta_n, phase_structure, ComparisonSet, Decomposition, PhaseReport};
use qmoments::eom::{rhs_centroid, rhs_moments, CompiledRhs};
use qmoments::harmonic::{harmonic_stationary_classical, harmonic_stationary_quantum, stationary_exists, HarmonicKind, HarmonicSpec, Verdict};
use qmoments::integrator::{estimate_period, integrate, integrate_point, StopReason, Trajectory};
use qmoments::moments::keys;
use qmoments::oracle::{
    ground_state_grid, liouville_mc, schrodinger_grid, EnsembleSpec, GridSpec, GroundSpec, GroundState, McSeries, WavePacket,
};
use qmoments::stationary::{
    convergence_study, converged_order, fixed_point_residual, ground_energy_bounds, solve_quartic_stationary, BoundsReport,
    CutoffComparison,
};
use qmoments::inequalities::{margin_series, monitor, MonitorEntry};
use qmoments::{effective_hamiltonian, gaussian_moments, Flavor, MomentSet, PolynomialPotential, TruncationPolicy};
use serde::Serialize;
use serde_json::json;

use crate::config::{PotentialSpec, RunConfig};
use crate::error::{CliError, EXIT_NUMERICAL};
use crate::output::{num, Output};

/// Resolved configuration plus everything derived from it once.
pub struct Run {
    pub cfg: RunConfig,
    pub v: PolynomialPotential,
    /// Period of the point orbit through (q0, p0), when it has one.
    pub period: Option<f64>,
    pub out: Output,
}

fn flavor_name(f: Flavor) -> &'static str {
    match f {
        Flavor::Quantum => "quantum",
        Flavor::Classical => "classical",
    }
}

fn hbar_for(cfg: &RunConfig, f: Flavor) -> f64 {
    match f {
        Flavor::Quantum => cfg.hbar,
        Flavor::Classical => 0.0,
    }
}

impl Run {
    pub fn new(cfg: RunConfig, out: Output) -> Result<Self, CliError> {
        cfg.validate()?;
        let v = cfg.potential();
        let (q0, p0) = (cfg.initial.q0, cfg.initial.p0);
        let period = estimate_period(&v, q0, p0).ok();
        Ok(Self { cfg, v, period, out })
    }

    fn t_end(&self) -> Result<f64, CliError> {
        self.cfg.t_end.resolve(self.period)
    }

    fn dt_out(&self) -> Result<f64, CliError> {
        self.cfg.dt_out.resolve(self.period)
    }

    fn initial_state(&self, n_max: usize, flavor: Flavor) -> Result<MomentSet, CliError> {
        let cfg = &self.cfg;
        let s = match &cfg.initial.moment_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                let s = MomentSet::from_json(&text)?;
                match (s.flavor, flavor) {
                    (Flavor::Classical, Flavor::Quantum) => {
                        return Err(CliError::config("classical moment file cannot start a quantum run"))
                    }
                    (Flavor::Quantum, Flavor::Classical) => s.to_classical().with_cutoff(n_max)?,
                    _ => s.with_cutoff(n_max)?,
                }
            }
            None => {
                let mut s = gaussian_moments(cfg.width2(), cfg.hbar, n_max)?;
                s.q = cfg.initial.q0;
                s.p = cfg.initial.p0;
                if flavor == Flavor::Classical {
                    s.to_classical()
                } else {
                    s
                }
            }
        };
        if flavor == Flavor::Quantum && s.hbar <= 0.0 {
            return Err(CliError::config("quantum runs need hbar > 0"));
        }
        Ok(s)
    }

    fn hierarchy(&self, n_max: usize, flavor: Flavor, t_end: f64, dt_out: f64) -> Result<Trajectory, CliError> {
        let s = self.initial_state(n_max, flavor)?;
        Ok(integrate(&s, &self.v, TruncationPolicy::new(n_max)?, t_end, self.cfg.rtol, self.cfg.atol, dt_out)?)
    }
}

fn trajectory_columns(n_max: usize) -> Vec<String> {
    let mut c: Vec<String> = ["t", "q", "p", "H_eff"].iter().map(|s| s.to_string()).collect();
    c.extend(keys(n_max).map(|k| k.to_string()));
    c
}

fn trajectory_rows(tr: &Trajectory, n_max: usize) -> impl Iterator<Item = Vec<String>> + '_ {
    tr.times.iter().zip(&tr.states).zip(&tr.h_eff).map(move |((t, s), h)| {
        let mut r = vec![num(*t), num(s.q), num(s.p), num(*h)];
        r.extend(keys(n_max).map(|k| num(s.get(k.a, k.b))));
        r
    })
}

fn ensure_cutoffs(cutoffs: &[usize], min: usize) -> Result<(), CliError> {
    if let Some(n) = cutoffs.iter().find(|&&n| n < min) {
        let hint = if *n == 1 { " (n_max = 1 is the point trajectory, available through compare)" } else { "" };
        return Err(CliError::config(format!("cutoff {n} < {min}{hint}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    flavor: &'static str,
    n_max: usize,
    samples: usize,
    stop: StopReason,
    truncated: bool,
    t_reached: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    h_eff_drift: f64,
    /// Completed, every sample physical, and H_eff conserved to 10⁻⁶.
    stable: bool,
    first_violations: Vec<MonitorEntry>,
}

/// Status after a run whose outputs were written: 0 or the truncation code.
pub type Status = u8;

pub fn evolve(run: &mut Run) -> Result<Status, CliError> {
    ensure_cutoffs(&run.cfg.n_max, 2)?;
    let (t_end, dt_out) = (run.t_end()?, run.dt_out()?);
    let mut summaries = Vec::new();
    let mut status = 0;
    for flavor in run.cfg.flavor.flavors() {
        for &n in &run.cfg.n_max.clone() {
            let tr = run.hierarchy(n, flavor, t_end, dt_out)?;
            let name = flavor_name(flavor);
            run.out.csv(&format!("trajectory_{name}_n{n}.csv"), &trajectory_columns(n), trajectory_rows(&tr, n))?;
            let half: Vec<usize> = run.cfg.inequality_half_orders.iter().copied().filter(|&r| r >= 1 && 2 * r <= n).collect();
            let margins = margin_series(&tr, &half)?;
            run.out.csv(
                &format!("inequalities_{name}_n{n}.csv"),
                &["t".into(), "constraint_id".into(), "margin".into()],
                margins.iter().map(|(t, id, m)| vec![num(*t), id.clone(), num(*m)]),
            )?;
            let first_violations = monitor(&tr, &half, run.period.unwrap_or(f64::NAN))?;
            let drift = tr.h_eff_drift();
            let physical = tr.flags.iter().all(|f| f.even_even_ok && (flavor == Flavor::Classical || f.heisenberg_ok));
            if tr.is_truncated() {
                status = EXIT_NUMERICAL;
            }
            summaries.push(EvolveSummary {
                flavor: name,
                n_max: n,
                samples: tr.len(),
                stop: tr.stop,
                truncated: tr.is_truncated(),
                t_reached: tr.t_reached,
                accepted_steps: tr.accepted_steps,
                rejected_steps: tr.rejected_steps,
                h_eff_drift: drift,
                stable: !tr.is_truncated() && physical && drift < 1e-6,
                first_violations,
            });
        }
    }
    run.out.json(
        "evolve_summary.json",
        &json!({ "period": run.period, "t_end": t_end, "dt_out": dt_out, "runs": summaries }),
    )?;
    Ok(status)
}

#[derive(Serialize)]
struct CompareSummary {
    n_max: usize,
    gamma: Option<f64>,
    max_abs_delta_q: f64,
    max_abs_delta_p: f64,
    max_delta_sq: f64,
    phase: Option<PhaseReport>,
}

pub fn compare(run: &mut Run) -> Result<Status, CliError> {
    let cutoffs = run.cfg.n_max.clone();
    let flavors = run.cfg.flavor.flavors();
    ensure_cutoffs(&cutoffs, 1)?;
    if cutoffs.len() < 2 && flavors.len() < 2 {
        return Err(CliError::config("compare needs two cutoffs or both flavors"));
    }
    let period = run.period.ok_or_else(|| CliError::config("compare needs a periodic point orbit"))?;
    let (t_end, dt_out) = (run.t_end()?, run.dt_out()?);
    let point = integrate_point(run.cfg.initial.q0, run.cfg.initial.p0, &run.v, t_end, run.cfg.rtol, run.cfg.atol, dt_out)?;
    let mut status = 0;
    let mut runs: Vec<(Flavor, usize, Trajectory)> = Vec::new();
    for &flavor in &flavors {
        for &n in &cutoffs {
            let tr = if n == 1 { point.clone() } else { run.hierarchy(n, flavor, t_end, dt_out)? };
            if tr.is_truncated() {
                status = EXIT_NUMERICAL;
            }
            runs.push((flavor, n, tr));
        }
    }
    // every series on the grid of the shortest (a truncated run ends early)
    let len = runs.iter().map(|r| r.2.len()).chain([point.len()]).min().unwrap_or(0);
    let cut = |tr: &Trajectory| {
        let mut t = tr.clone();
        t.times.truncate(len);
        t.states.truncate(len);
        t.h_eff.truncate(len);
        t.flags.truncate(len);
        t
    };

    let mut columns = vec!["t_over_T".to_string()];
    let mut series = Vec::new();
    for &flavor in &flavors {
        let mine: Vec<&(Flavor, usize, Trajectory)> = runs.iter().filter(|r| r.0 == flavor).collect();
        for w in mine.windows(2) {
            columns.push(format!("{}_delta_{}_{}", flavor_name(flavor), w[1].1, w[0].1));
            series.push(delta_n(&cut(&w[1].2), &cut(&w[0].2))?);
        }
    }
    if flavors.len() == 2 {
        for &n in &cutoffs {
            let pick = |f: Flavor| runs.iter().find(|r| r.0 == f && r.1 == n).map(|r| cut(&r.2)).expect("run exists");
            columns.push(format!("quantum_classical_delta_{n}"));
            series.push(delta_n(&pick(Flavor::Quantum), &pick(Flavor::Classical))?);
        }
    }
    let times = &point.times[..len];
    run.out.csv(
        "delta_n.csv",
        &columns,
        (0..len).map(|i| {
            let mut r = vec![num(times[i] / period)];
            r.extend(series.iter().map(|s| num(s[i])));
            r
        }),
    )?;

    let mut summaries = Vec::new();
    if flavors.len() == 2 {
        for &n in cutoffs.iter().filter(|&&n| n >= 2) {
            let pick = |f: Flavor| runs.iter().find(|r| r.0 == f && r.1 == n).map(|r| cut(&r.2)).expect("run exists");
            let cmp = ComparisonSet::new(&cut(&point), &pick(Flavor::Classical), &pick(Flavor::Quantum), period)?;
            let d: Decomposition = decompose(&cmp);
            let cols: Vec<String> = [
                "t_over_T", "delta1_q", "delta2_q", "delta1_p", "delta2_p", "delta1_sq", "delta2_sq", "gamma_running",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            run.out.csv(
                &format!("diagnostics_n{n}.csv"),
                &cols,
                d.rows.iter().map(|r| {
                    [r.t_over_t, r.delta1_q, r.delta2_q, r.delta1_p, r.delta2_p, r.delta1_sq, r.delta2_sq, r.gamma_running]
                        .map(num)
                        .to_vec()
                }),
            )?;
            summaries.push(CompareSummary {
                n_max: n,
                gamma: d.gamma,
                max_abs_delta_q: d.max_abs_delta_q,
                max_abs_delta_p: d.max_abs_delta_p,
                max_delta_sq: d.max_delta_sq,
                phase: phase_structure(&cmp).ok(),
            });
        }
    }
    let drift: Vec<_> = runs
        .iter()
        .map(|(f, n, tr)| json!({ "flavor": flavor_name(*f), "n_max": n, "h_eff_drift": tr.h_eff_drift(), "stop": tr.stop }))
        .collect();
    run.out.json(
        "compare_summary.json",
        &json!({ "period": period, "t_end": t_end, "samples": len, "runs": drift, "diagnostics": summaries }),
    )?;
    Ok(status)
}

/// Largest |d/dt| over the centroid and every moment of order ≤ `max_order`.
fn rhs_residual(state: &MomentSet, v: &PolynomialPotential, max_order: usize) -> Result<f64, CliError> {
    let policy = TruncationPolicy::new(state.n_max)?;
    let (dq, dp) = rhs_centroid(state, v, policy);
    let rhs = CompiledRhs::for_state(state, v)?;
    let d = rhs_moments(state, &rhs)?;
    Ok(d.iter().filter(|(k, _)| k.order() <= max_order).map(|(_, x)| x.abs()).fold(dq.abs().max(dp.abs()), f64::max))
}

fn moment_table(state: &MomentSet, converged: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let cols = ["a", "b", "value", "converged"].iter().map(|s| s.to_string()).collect();
    let rows = keys(state.n_max)
        .map(|k| vec![k.a.to_string(), k.b.to_string(), num(state.get(k.a, k.b)), (k.order() <= converged).to_string()])
        .collect();
    (cols, rows)
}

pub fn stationary(run: &mut Run) -> Result<Status, CliError> {
    ensure_cutoffs(&run.cfg.n_max, 2)?;
    let st = run.cfg.stationary.clone();
    for flavor in run.cfg.flavor.flavors() {
        let hbar = hbar_for(&run.cfg, flavor);
        let name = flavor_name(flavor);
        for &n in &run.cfg.n_max.clone() {
            let file = format!("stationary_{name}_n{n}");
            let (state, converged, extra) = match &run.cfg.potential {
                PotentialSpec::Quartic { lambda } => {
                    let sol = match solve_quartic_stationary(st.energy, st.g02, *lambda, hbar, n) {
                        Ok(s) => s,
                        Err(e) => {
                            let err = CliError::from(e);
                            run.out.json(&format!("{file}.json"), &json!({ "flavor": name, "n_max": n, "valid": false, "reason": err.message }))?;
                            return Err(err);
                        }
                    };
                    let interior = n.saturating_sub(4);
                    let residual = if interior >= 2 { fixed_point_residual(&sol, interior)? } else { 0.0 };
                    let conv = st.report_order.unwrap_or_else(|| converged_order(n));
                    (sol.state, conv, json!({ "kind": "quartic", "interior_order": interior, "residual": residual }))
                }
                spec if run.v.is_quadratic() => {
                    let h = HarmonicSpec::from_potential(&run.v)?;
                    let verdict: Verdict = stationary_exists(&h, flavor);
                    if !verdict.exists || h.kind() != HarmonicKind::Oscillator {
                        run.out.json(&format!("{file}.json"), &json!({ "flavor": name, "n_max": n, "valid": false, "verdict": verdict, "potential": spec }))?;
                        return Err(CliError::invalid(format!("no stationary state: {:?}", verdict.reason)));
                    }
                    let omega = h.omega_sq.sqrt();
                    let mut s = match flavor {
                        Flavor::Quantum => harmonic_stationary_quantum(st.energy, omega, hbar, n)?,
                        Flavor::Classical => harmonic_stationary_classical(st.energy, omega, n)?,
                    };
                    // centred on the minimum of βq + ω²q²/2
                    s.q = -h.beta / h.omega_sq;
                    let residual = rhs_residual(&s, &run.v, n)?;
                    (s, st.report_order.unwrap_or(n), json!({ "kind": "harmonic", "verdict": verdict, "residual": residual }))
                }
                other => return Err(CliError::config(format!("no stationary solver for {other:?}"))),
            };
            let (cols, rows) = moment_table(&state, converged);
            run.out.csv(&format!("{file}.csv"), &cols, rows)?;
            let state_json: serde_json::Value = serde_json::from_str(&state.to_json()).expect("valid json");
            run.out.json(
                &format!("{file}.json"),
                &json!({ "flavor": name, "n_max": n, "valid": true, "energy": st.energy, "converged_order": converged, "solver": extra, "state": state_json }),
            )?;
        }
    }
    Ok(0)
}

fn quartic_lambda(run: &Run, what: &str) -> Result<f64, CliError> {
    match run.cfg.potential {
        PotentialSpec::Quartic { lambda } => Ok(lambda),
        _ => Err(CliError::config(format!("{what} needs a quartic potential"))),
    }
}

pub fn bounds(run: &mut Run) -> Result<Status, CliError> {
    let lambda = quartic_lambda(run, "bounds")?;
    let unit = (run.cfg.hbar.powi(4) * lambda).cbrt();
    let reports: Vec<BoundsReport> =
        run.cfg.bounds.orders.iter().map(|&o| ground_energy_bounds(lambda, run.cfg.hbar, o)).collect::<Result<_, _>>()?;
    run.out.json("bounds.json", &json!({ "lambda": lambda, "hbar": run.cfg.hbar, "energy_unit": unit, "intervals": reports }))?;
    Ok(0)
}

pub fn converge(run: &mut Run) -> Result<Status, CliError> {
    let lambda = quartic_lambda(run, "converge")?;
    let mut cutoffs = run.cfg.n_max.clone();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    ensure_cutoffs(&cutoffs, 2)?;
    if cutoffs.len() < 2 {
        return Err(CliError::config("converge needs at least two cutoffs"));
    }
    let st = &run.cfg.stationary;
    let study: Vec<CutoffComparison> = convergence_study(st.energy, st.g02, lambda, run.cfg.hbar, &cutoffs)?;
    let cols: Vec<String> = ["cutoff", "reference", "a", "b", "relative_difference", "agrees"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = study
        .iter()
        .flat_map(|c| {
            c.moments.iter().map(move |m| {
                vec![c.cutoff.to_string(), c.reference.to_string(), m.a.to_string(), m.b.to_string(), num(m.relative_difference), m.agrees.to_string()]
            })
        })
        .collect();
    run.out.csv("convergence.csv", &cols, rows)?;
    let ladder: Vec<_> = study
        .iter()
        .map(|c| json!({ "cutoff": c.cutoff, "reference": c.reference, "agrees_through": c.agrees_through, "first_disagreement": c.first_disagreement }))
        .collect();
    run.out.json("convergence.json", &json!({ "energy": st.energy, "g02": st.g02, "lambda": lambda, "hbar": run.cfg.hbar, "ladder": ladder }))?;
    Ok(0)
}

const ORACLE_ORDER: usize = 4;

#[derive(Serialize)]
struct OracleReport {
    n_max: usize,
    samples: usize,
    grid: Option<GridSpec>,
    q_max: f64,
    p_max: f64,
    /// max_t |q_quantum − q_grid| / q_max.
    grid_centroid_error: Option<f64>,
    grid_max_boundary: Option<f64>,
    grid_max_norm_error: Option<f64>,
    /// max over times and moments of |C_hierarchy − C_mc| / σ.
    mc_max_z: f64,
    mc_samples: usize,
    seed: u64,
    ground_state: Option<GroundState>,
    /// Ground energy in units of (ħ⁴λ)^{1/3}, for a pure quartic.
    ground_energy_scaled: Option<f64>,
}

pub fn oracle(run: &mut Run) -> Result<Status, CliError> {
    ensure_cutoffs(&run.cfg.n_max, 2)?;
    let n = run.cfg.n_max[0];
    let (t_end, dt_out) = (run.t_end()?, run.dt_out()?);
    let cfg = run.cfg.clone();
    let (q0, p0, hbar, w2) = (cfg.initial.q0, cfg.initial.p0, cfg.hbar, cfg.width2());
    if cfg.initial.moment_file.is_some() {
        return Err(CliError::config("the oracles start from the Gaussian initial state"));
    }
    let max_step = cfg.oracle.mc_max_step.resolve(run.period)?;
    let mc: McSeries = liouville_mc(&EnsembleSpec::gaussian(w2, hbar, q0, p0, cfg.oracle.mc_samples, cfg.seed), &run.v, t_end, dt_out, max_step)?;
    let classical = run.hierarchy(n, Flavor::Classical, t_end, dt_out)?;

    // orbit extent from the point trajectory
    let point = integrate_point(q0, p0, &run.v, t_end, cfg.rtol, cfg.atol, dt_out)?;
    let q_max = point.q().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(w2.sqrt());
    let p_max = point.p().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(hbar / w2.sqrt());

    let order = ORACLE_ORDER.min(n);
    let mut cols = vec!["source".to_string()];
    cols.extend(trajectory_columns(order));
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut max_z: f64 = 0.0;
    for (i, (t, s)) in mc.times.iter().zip(&mc.states).enumerate() {
        let mut r = vec!["mc".to_string(), num(*t), num(s.q), num(s.p), num(effective_hamiltonian(&s.with_cutoff(order)?, &run.v))];
        r.extend(keys(order).map(|k| num(s.get(k.a, k.b))));
        rows.push(r);
        if let Some(h) = classical.states.get(i) {
            let err = &mc.errors[i];
            let z = |x: f64, y: f64, e: f64| if e > 0.0 { (x - y).abs() / e } else { 0.0 };
            max_z = max_z.max(z(h.q, s.q, err.q)).max(z(h.p, s.p, err.p));
            for k in keys(order) {
                max_z = max_z.max(z(h.get(k.a, k.b), s.get(k.a, k.b), err.get(k.a, k.b)));
            }
        }
    }

    let mut report = OracleReport {
        n_max: n,
        samples: mc.times.len(),
        grid: None,
        q_max,
        p_max,
        grid_centroid_error: None,
        grid_max_boundary: None,
        grid_max_norm_error: None,
        mc_max_z: max_z,
        mc_samples: mc.samples,
        seed: cfg.seed,
        ground_state: None,
        ground_energy_scaled: None,
    };
    if hbar > 0.0 {
        let quantum = run.hierarchy(n, Flavor::Quantum, t_end, dt_out)?;
        let period = run.period.unwrap_or(t_end);
        let mut spec = GridSpec::for_orbit(q_max, p_max, hbar, period);
        if let Some(m) = cfg.oracle.grid_points {
            spec.points = m;
        }
        if let Some(l) = cfg.oracle.grid_half_width {
            spec.half_width = l;
        }
        if let Some(dt) = &cfg.oracle.grid_dt {
            spec.dt = dt.resolve(run.period)?;
        }
        let grid = schrodinger_grid(&spec, &run.v, &WavePacket { q0, p0, width2: w2 }, hbar, t_end, dt_out)?;
        let mut err: f64 = 0.0;
        for (i, g) in grid.samples.iter().enumerate() {
            let mut r = vec!["grid".to_string(), num(g.t), num(g.q), num(g.p), num(g.energy)];
            // only G^{m,0}, G^{1,1} and G^{0,m} are extracted from the wavefunction
            r.extend(keys(order).map(|k| match (k.a, k.b) {
                (a, 0) => num(g.momentum[a]),
                (0, b) => num(g.position[b]),
                (1, 1) => num(g.g11),
                _ => String::new(),
            }));
            rows.push(r);
            if let Some(h) = quantum.states.get(i) {
                err = err.max((h.q - g.q).abs() / q_max);
            }
        }
        report.grid_centroid_error = Some(err);
        report.grid_max_boundary = Some(grid.samples.iter().map(|g| g.boundary).fold(0.0, f64::max));
        report.grid_max_norm_error = Some(grid.samples.iter().map(|g| (g.norm - 1.0).abs()).fold(0.0, f64::max));
        report.grid = Some(spec);
        if cfg.oracle.ground_state && run.v.degree() % 2 == 0 && run.v.coefficient(run.v.degree()) > 0.0 {
            let g = ground_state_grid(&run.v, hbar, &GroundSpec::for_potential(&run.v, hbar))?;
            if let PotentialSpec::Quartic { lambda } = cfg.potential {
                report.ground_energy_scaled = Some(g.energy / (hbar.powi(4) * lambda).cbrt());
            }
            report.ground_state = Some(g);
        }
    }
    run.out.csv("oracle.csv", &cols, rows)?;
    run.out.json("oracle_report.json", &report)?;
    let status = if classical.is_truncated() { EXIT_NUMERICAL } else { 0 };
    Ok(status)
}
