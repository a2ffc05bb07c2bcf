//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! with its measurement and wall time, and exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use addm_core::addm::{
    couple_addm01, couple_addm02, cut_weight, front_cells, partition_weighted_graph, threshold_value,
    CouplingPattern, ThresholdStrategy,
};
use addm_core::assembly::{assemble, BoundaryKind, ProblemScope, Reservoir};
use addm_core::fluid::{phase_molar_density, FluidState, GAS, OIL};
use addm_core::io::{generate_case, parse_deck, simulate, Deck};
use addm_core::linalg::{gmres, GmresConfig, Ilu0Factors};
use addm_core::newton::{LinearPreconditioner, NonlinearProblem, ReservoirProblem};
use addm_core::timeloop::{Method, ReportRow, Schedule, Simulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Check {
    id: usize,
    name: &'static str,
    limit_s: Option<f64>,
}

fn run(check: Check, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let secs = t.elapsed().as_secs_f64();
    let (mut ok, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let limit = match check.limit_s {
        Some(l) => {
            if secs > l {
                ok = false;
                detail = format!("{detail}; over the time limit");
            }
            format!(" (limit {l} s)")
        }
        None => String::new(),
    };
    println!(
        "[{}] criterion {:>2} {:<28} {detail} [{secs:.1} s{limit}]",
        if ok { "PASS" } else { "FAIL" },
        check.id,
        check.name
    );
    ok
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- physics

const SMALL_BOX: &str = r#"
[grid]
dims = [5, 5, 2]
permeability = { kind = "layered", values = [150.0, 60.0] }

[fluid]
capillary = [[0.0, 0.0], [0.5, 2.0], [1.0, 6.0]]

[solver]
tiles = [1, 1]

[[wells]]
name = "INJ"
kind = "injector"
component = "gas"
cells = [[0, 0, 0]]
control = { mode = "rate", target = 40.0 }
bhp_limit = 9000.0

[[wells]]
name = "PROD"
kind = "producer"
component = "oil"
cells = [[4, 4, 0], [4, 4, 1]]
control = { mode = "rate", target = 300.0 }
bhp_limit = 500.0

[schedule]
end_time = 10.0
"#;

fn random_state(res: &Reservoir, rng: &mut ChaCha8Rng) -> FluidState {
    let n = res.grid.num_cells();
    let mut st = FluidState::uniform(n, 0.0, [0.0; 2]);
    for c in 0..n {
        let p = rng.random_range(3000.0..5000.0);
        let sg: f64 = rng.random_range(0.05..0.6);
        let pv = res.pv_ref[c] * rng.random_range(0.98..1.02);
        let (xo, _) = phase_molar_density(&res.fluid, OIL, p).unwrap();
        let (xg, _) = phase_molar_density(&res.fluid, GAS, p).unwrap();
        st.p[c] = p;
        st.n[c] = [pv * (1.0 - sg) * xo, pv * sg * xg];
    }
    st
}

/// Worst relative error of any nonzero 3×3 block against central
/// differences of the residual.
fn jacobian_error(res: &mut Reservoir, state: &FluidState, old: &FluidState, dt: f64) -> Result<f64, String> {
    res.prepare_wells(old).map_err(|e| e.to_string())?;
    let scope = ProblemScope::global(res).map_err(|e| e.to_string())?;
    let x = scope.gather(state);
    let n_old = scope.gather_moles(old);
    let sys = assemble(res, &scope, &x, &n_old, dt, true).map_err(|e| e.to_string())?;
    let dense = sys.jacobian.expect("jacobian requested").to_dense();
    let n = x.len();
    let mut fd = vec![0.0; n * n];
    for col in 0..n {
        let h = 1e-6 * x[col].abs().max(1.0);
        let mut xp = x.clone();
        xp[col] += h;
        let mut xm = x.clone();
        xm[col] -= h;
        let fp = assemble(res, &scope, &xp, &n_old, dt, false).map_err(|e| e.to_string())?.residual;
        let fm = assemble(res, &scope, &xm, &n_old, dt, false).map_err(|e| e.to_string())?.residual;
        for row in 0..n {
            fd[row * n + col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    let nb = n / 3;
    let mut worst: f64 = 0.0;
    for bi in 0..nb {
        for bj in 0..nb {
            let (mut diff, mut mag): (f64, f64) = (0.0, 0.0);
            for r in 0..3 {
                for c in 0..3 {
                    let idx = (bi * 3 + r) * n + bj * 3 + c;
                    diff = diff.max((dense[idx] - fd[idx]).abs());
                    mag = mag.max(fd[idx].abs());
                }
            }
            if mag > 1e-9 {
                worst = worst.max(diff / mag);
            } else if diff > 1e-9 {
                return Err(format!("block ({bi},{bj}) should vanish but differs by {diff:e}"));
            }
        }
    }
    Ok(worst)
}

fn criterion_1() -> Outcome {
    let deck = parse_deck(SMALL_BOX).map_err(|e| e.to_string())?;
    let mut res = deck.build_reservoir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let old = random_state(&res, &mut rng);
        let new = random_state(&res, &mut rng);
        worst = worst.max(jacobian_error(&mut res, &new, &old, 2.0)?);
    }
    ensure(worst < 1e-6, || format!("worst block error {worst:.2e} (need < 1e-6)"))?;
    Ok(format!("20 states, worst block error {worst:.2e} < 1e-6"))
}

const CLOSED_BOX: &str = r#"
[grid]
dims = [10, 10, 2]
permeability = { kind = "layered", values = [200.0, 80.0] }

[solver]
tiles = [2, 2]

[schedule]
end_time = 100.0
"#;

const BOX_WELLS: &str = r#"
[[wells]]
name = "INJ"
kind = "injector"
component = "gas"
cells = [[0, 0, 0]]
control = { mode = "rate", target = 40.0 }
bhp_limit = 10000.0

[[wells]]
name = "PROD"
kind = "producer"
component = "oil"
cells = [[9, 9, 1]]
control = { mode = "rate", target = 500.0 }
bhp_limit = 1000.0
"#;

fn box_simulator(text: &str, rtol: f64, atol: f64) -> Simulator {
    let mut deck = parse_deck(text).unwrap();
    deck.solver.method = Method::Fim;
    deck.solver.global.rtol = rtol;
    deck.solver.global.atol = atol;
    deck.solver.global.linear_rtol = Some(1e-11);
    deck.resolve().unwrap();
    let res = deck.build_reservoir().unwrap();
    let s0 = deck.initial_state(&res).unwrap();
    Simulator::new(res, s0, deck.solver).unwrap()
}

fn totals(st: &FluidState) -> [f64; 2] {
    st.n.iter().fold([0.0; 2], |acc, n| [acc[0] + n[0], acc[1] + n[1]])
}

fn accepted_step(sim: &mut Simulator, dt: f64) -> Result<[f64; 2], String> {
    let st = sim.state.clone();
    sim.res.prepare_wells(&st).map_err(|e| e.to_string())?;
    let (rep, next) = sim.advance_timestep(dt).map_err(|e| e.to_string())?;
    let next = next.ok_or_else(|| format!("step failed: {:?}", rep.global.failure))?;
    sim.stats.accumulate(&rep);
    sim.previous = std::mem::replace(&mut sim.state, next);
    Ok(rep.wells.iter().fold([0.0; 2], |acc, w| [acc[0] + w.rate[0], acc[1] + w.rate[1]]))
}

fn criterion_2() -> Outcome {
    // Closed box with gas placed under oil.
    let mut sim = box_simulator(CLOSED_BOX, 1e-8, 1e-11);
    let [nx, ny, _] = sim.res.grid.dims;
    for j in 0..ny {
        for i in (0..nx).filter(|i| (i + j) % 2 == 1) {
            let c = sim.res.grid.index(i, j, 1);
            let p = sim.state.p[c];
            let (xo, _) = phase_molar_density(&sim.res.fluid, OIL, p).unwrap();
            let (xg, _) = phase_molar_density(&sim.res.fluid, GAS, p).unwrap();
            sim.state.n[c] = [sim.res.pv_ref[c] * 0.6 * xo, sim.res.pv_ref[c] * 0.4 * xg];
        }
    }
    sim.previous = sim.state.clone();
    let start = totals(&sim.state);
    for _ in 0..50 {
        let q = accepted_step(&mut sim, 2.0)?;
        ensure(q == [0.0, 0.0], || format!("closed box reports well rates {q:?}"))?;
    }
    let end = totals(&sim.state);
    let drift = (0..2).map(|i| (end[i] - start[i]).abs() / start[i]).fold(0.0, f64::max);
    ensure(drift < 1e-10, || format!("closed-box drift {drift:.2e} (need < 1e-10)"))?;

    let mut sim = box_simulator(&format!("{CLOSED_BOX}{BOX_WELLS}"), 1e-10, 1e-13);
    let mut worst: f64 = 0.0;
    for n in 0..30 {
        let dt = if n < 5 { 1.0 } else { 4.0 };
        let before = totals(&sim.state);
        let q = accepted_step(&mut sim, dt)?;
        let after = totals(&sim.state);
        for i in 0..2 {
            let expected = -q[i] * dt;
            worst = worst.max(((after[i] - before[i]) - expected).abs() / expected.abs());
        }
    }
    ensure(worst < 1e-8, || format!("well balance error {worst:.2e} (need < 1e-8)"))?;
    Ok(format!("closed-box drift {drift:.1e} < 1e-10; well balance {worst:.1e} < 1e-8 per step"))
}

// -------------------------------------------------------------- strategies

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let (g, layout, delta, c_s, l) = common::random_instance(&mut rng);
        for k in 0..layout.n_sub {
            ensure(
                front_cells(&layout, &g, k, l, &delta, c_s) == common::front(&g, &layout, k, l, &delta, c_s),
                || format!("front_cells differs on instance {case}, subdomain {k}"),
            )?;
        }
        let p1 = couple_addm01(&layout, &g, &delta, c_s, l);
        ensure(
            common::same_partition(&p1.region_of, &common::addm01(&g, &layout, &delta, c_s, l)),
            || format!("couple_addm01 differs on instance {case}"),
        )?;
        let p2 = couple_addm02(&layout, &g, &delta, c_s);
        ensure(
            common::same_partition(&p2.region_of, &common::addm02(&g, &layout, &delta, c_s)),
            || format!("couple_addm02 differs on instance {case}"),
        )?;
    }
    let graphs = common::sweep_all_graphs(8);

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut checked, mut worst_cut, mut worst_balance) = (0, 1.0f64, 0.0f64);
    while checked < 50 {
        let n: usize = rng.random_range(4..=12);
        let k = n.div_ceil(4);
        if (n.div_ceil(k) as f64) > 1.3 * n as f64 / k as f64 {
            continue;
        }
        let g = common::random_weighted_graph(&mut rng, n);
        let Some((opt, _)) = common::exhaustive_partition(&g, k, 1.3) else {
            continue;
        };
        let labels = partition_weighted_graph(&g, k).map_err(|e| e.to_string())?;
        let mut sizes = vec![0usize; k];
        for &b in &labels {
            sizes[b] += 1;
        }
        let balance = *sizes.iter().max().unwrap() as f64 * k as f64 / n as f64;
        let cut = cut_weight(&g, &labels);
        let ratio = if opt > 0.0 { cut / opt } else if cut > 0.0 { f64::INFINITY } else { 1.0 };
        worst_cut = worst_cut.max(ratio);
        worst_balance = worst_balance.max(balance);
        checked += 1;
    }
    ensure(worst_cut <= 1.2 + 1e-12 && worst_balance <= 1.3 + 1e-12, || {
        format!("partition cut ratio {worst_cut:.3} (≤ 1.2), balance {worst_balance:.3} (≤ 1.3)")
    })?;
    Ok(format!(
        "200 coupling instances; {graphs} graphs ≤ 8 vertices; 50 partitions, cut ratio ≤ {worst_cut:.3}, balance ≤ {worst_balance:.3}"
    ))
}

fn coupled_set(p: &CouplingPattern) -> Vec<usize> {
    (0..p.region_of.len()).filter(|&k| !p.independent[k]).collect()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let mut violations = 0;
    let mut coupled = 0;
    for _ in 0..500 {
        let (g, layout, delta, c_s, _) = common::random_instance(&mut rng);
        let one = couple_addm01(&layout, &g, &delta, c_s, 1);
        let two = couple_addm02(&layout, &g, &delta, c_s);
        let s2 = coupled_set(&two);
        let s1 = coupled_set(&one);
        coupled += s1.len();
        violations += s1.iter().filter(|k| !s2.contains(k)).count();
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("500 delta fields, {coupled} coupled subdomains, 0 violations"))
}

const SHORT_RUN: &str = r#"
[grid]
dims = [8, 8, 2]
permeability = { kind = "layered", values = [300.0, 100.0] }

[[wells]]
name = "INJ"
kind = "injector"
component = "gas"
cells = [[0, 0, 0]]
control = { mode = "rate", target = 60.0 }
bhp_limit = 10000.0

[[wells]]
name = "PROD"
kind = "producer"
component = "oil"
cells = [[7, 7, 1]]
control = { mode = "rate", target = 800.0 }
bhp_limit = 1000.0

[schedule]
end_time = 12.0
report_times = [4.0]
"#;

fn short_simulator(method: Method, c_s: Option<f64>, blocks: Option<usize>) -> Simulator {
    let mut deck = parse_deck(SHORT_RUN).unwrap();
    deck.solver.method = method;
    deck.solver.c_s = c_s;
    deck.solver.blocks = blocks;
    deck.solver.dt.dt_init = 2.0;
    let res = deck.build_reservoir().unwrap();
    let s0 = deck.initial_state(&res).unwrap();
    Simulator::new(res, s0, deck.solver).unwrap()
}

fn criterion_5() -> Outcome {
    let schedule = Schedule {
        end_time: 12.0,
        report_times: vec![4.0],
    };
    let mut cddm = short_simulator(Method::Cddm, None, None);
    let base = cddm.run(&schedule, |_| {}).map_err(|e| e.to_string())?;
    let n_sub = cddm.layout.n_sub;
    for (m, k) in [(Method::Addm01, None), (Method::Addm02, None), (Method::Addm03, Some(n_sub))] {
        let mut sim = short_simulator(m, Some(f64::INFINITY), k);
        let rows = sim.run(&schedule, |_| {}).map_err(|e| e.to_string())?;
        ensure(rows == base && sim.state == cddm.state, || format!("{m} with c_S = ∞ differs from CDDM"))?;
    }

    let mut sim = short_simulator(Method::Fim, None, None);
    sim.config.local = sim.config.global;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let dt = rng.random_range(0.5..4.0);
        let st = sim.state.clone();
        sim.res.prepare_wells(&st).map_err(|e| e.to_string())?;
        let (rep, _) = sim
            .advance_with_pattern(CouplingPattern::fully_coupled(n_sub), dt)
            .map_err(|e| e.to_string())?;
        ensure(rep.converged && rep.global.iterations == 0, || {
            format!("single region needed {} global iterations at dt {dt:.3}", rep.global.iterations)
        })?;
        accepted_step(&mut sim, dt)?;
    }
    Ok(format!("c_S = ∞ bit-identical to CDDM for ADDM01/02/03 (K = {n_sub}); one region: 0 global iterations on 10 steps"))
}

// ---------------------------------------------------------- comparisons

fn case_deck(method: Method) -> Result<Deck, String> {
    let mut deck = generate_case("case1-mini:small", 7).map_err(|e| e.to_string())?;
    deck.solver.method = method;
    deck.solver.threshold = ThresholdStrategy::A;
    deck.resolve().map_err(|e| e.to_string())?;
    Ok(deck)
}

fn close(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn criterion_6(runs: &BTreeMap<&'static str, Vec<ReportRow>>) -> Outcome {
    let fim = &runs["FIM"];
    let peak = fim.iter().map(|r| r.fgpr.abs()).fold(0.0, f64::max);
    let (mut fpr_dev, mut fgpr_dev): (f64, f64) = (0.0, 0.0);
    for (name, rows) in runs {
        ensure(rows.len() == fim.len(), || format!("{name} has {} report rows, FIM {}", rows.len(), fim.len()))?;
        for (a, b) in rows.iter().zip(fim) {
            ensure(a.time == b.time, || format!("{name} reports at {} instead of {}", a.time, b.time))?;
            fpr_dev = fpr_dev.max(close(a.fpr, b.fpr, 0.0));
            fgpr_dev = fgpr_dev.max(close(a.fgpr, b.fgpr, 0.01 * peak));
        }
    }
    ensure(fpr_dev <= 5e-3 && fgpr_dev <= 5e-3, || {
        format!("largest deviation from FIM: FPR {:.3}%, FGPR {:.3}% (≤ 0.5%)", 100.0 * fpr_dev, 100.0 * fgpr_dev)
    })?;
    Ok(format!(
        "{} report times, largest deviation from FIM: FPR {:.4}%, FGPR {:.4}%",
        fim.len(),
        100.0 * fpr_dev,
        100.0 * fgpr_dev
    ))
}

fn criterion_7(runs: &BTreeMap<&'static str, Vec<ReportRow>>) -> Outcome {
    let fim = runs["FIM"].last().ok_or("empty FIM run")?;
    let addm = runs["ADDM02"].last().ok_or("empty ADDM02 run")?;
    let nr = addm.nr_iter as f64 / fim.nr_iter as f64;
    let ls = addm.ls_iter as f64 / fim.ls_iter as f64;
    let detail = format!(
        "NRiter {} vs FIM {} (reduction {:.1}%), LSiter {} vs {} (reduction {:.1}%)",
        addm.nr_iter,
        fim.nr_iter,
        100.0 * (1.0 - nr),
        addm.ls_iter,
        fim.ls_iter,
        100.0 * (1.0 - ls)
    );
    ensure(nr <= 1.0 && ls <= 1.05, || format!("{detail}; need NRiter ≤ 100% and LSiter ≤ 105% of FIM"))?;
    Ok(detail)
}

fn criterion_8() -> Outcome {
    let a = threshold_value(ThresholdStrategy::A, 3.0, None, None).map_err(|e| e.to_string())?;
    let b = threshold_value(ThresholdStrategy::B, 3.0, None, None).map_err(|e| e.to_string())?;
    ensure(a == 5e-3 && b == 1e-3, || format!("A = {a}, B = {b}"))?;
    let mut n = 2;
    for (dt_n, other) in [(4.0, 32.0), (1.0, 3.0), (0.37, 0.37), (12.5, 7.25), (1e-3, 30.0)] {
        let c = threshold_value(ThresholdStrategy::C, dt_n, None, Some(other)).map_err(|e| e.to_string())?;
        let d = threshold_value(ThresholdStrategy::D, dt_n, Some(other), None).map_err(|e| e.to_string())?;
        let want = 1e-3 * dt_n / other;
        ensure(c == want && d == want, || format!("C = {c}, D = {d}, want {want} at dt {dt_n}/{other}"))?;
        n += 2;
    }
    ensure(
        threshold_value(ThresholdStrategy::C, 1.0, Some(2.0), None).is_err()
            && threshold_value(ThresholdStrategy::D, 1.0, None, Some(2.0)).is_err(),
        || "C/D accepted a missing step size".into(),
    )?;
    Ok(format!("{n} values exact, missing inputs rejected"))
}

// ------------------------------------------------------------ linear solve

fn criterion_9() -> Outcome {
    // Region of 1000 cells of the tiny case after 80 days.
    let mut deck = generate_case("case1-mini:tiny", 7).map_err(|e| e.to_string())?;
    deck.solver.method = Method::Fim;
    deck.schedule = Schedule {
        end_time: 80.0,
        report_times: Vec::new(),
    };
    deck.resolve().map_err(|e| e.to_string())?;
    let res = deck.build_reservoir().map_err(|e| e.to_string())?;
    let s0 = deck.initial_state(&res).map_err(|e| e.to_string())?;
    let mut sim = Simulator::new(res, s0, deck.solver.clone()).map_err(|e| e.to_string())?;
    sim.run(&deck.schedule, |_| {}).map_err(|e| e.to_string())?;
    let st = sim.state.clone();
    sim.res.prepare_wells(&st).map_err(|e| e.to_string())?;
    // A region may not cut through a well, so the producer column is left out.
    let [nx, ny, _] = sim.res.grid.dims;
    let producer_column = |c: usize| c % (nx * ny) == sim.res.grid.index(nx / 2, ny / 2, 0);
    let cells: Vec<usize> = (0..sim.res.grid.num_cells()).filter(|&c| !producer_column(c)).take(1000).collect();
    let scope = ProblemScope::region(&sim.res, cells, BoundaryKind::Pressure, &st).map_err(|e| e.to_string())?;
    let dt = deck.solver.dt.dt_init;
    let problem = ReservoirProblem::new(&sim.res, &scope, scope.gather_moles(&st), dt, LinearPreconditioner::Ilu0);
    // Newton-like iterate: the old state shifted by a pressure bump.
    let mut x = scope.gather(&st);
    for v in x.iter_mut().step_by(3) {
        *v += 25.0;
    }
    let (f, jac) = problem.linearize(&x).map_err(|e| e.to_string())?;
    ensure(jac.dim() == 3000, || format!("Jacobian has {} rows", jac.dim()))?;

    let started = Instant::now();
    let ilu = Ilu0Factors::factor(&jac).map_err(|e| e.to_string())?;
    let cfg = GmresConfig {
        rtol: 1e-10,
        maxit: 3000,
        restart: 30,
    };
    let mut dx = vec![0.0; f.len()];
    let rep = gmres(&jac, &f, &ilu, &cfg, &mut dx).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let rel = rep.residual_norm / rep.rhs_norm;
    let mut last = f64::INFINITY;
    for (i, cycle) in rep.cycle_history.iter().enumerate() {
        for &r in cycle {
            // Allow rounding between the estimate and the true restart residual.
            ensure(r <= last * (1.0 + 1e-8), || format!("residual rose in cycle {i}: {r:e} after {last:e}"))?;
            last = r;
        }
    }
    ensure(rep.converged && rel < 1e-10, || format!("relative residual {rel:.2e} after {} iterations", rep.iterations))?;
    ensure(secs < 5.0, || format!("solve took {secs:.2} s"))?;
    Ok(format!(
        "3000 rows, {} iterations in {} cycles, relative residual {rel:.2e}, monotone, {secs:.2} s",
        rep.iterations,
        rep.cycle_history.len()
    ))
}

// ----------------------------------------------------------- determinism

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_addm"))
            .args(["compare", "--case", "case2-mini:tiny", "--seed", "7", "--workers", "4", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            format!("run {run} failed: {}", String::from_utf8_lossy(&status.stderr))
        })?;
        outputs.push(csv_files(&out));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    ensure(a.len() > 5, || format!("only {} CSV files written", a.len()))?;
    ensure(a.keys().eq(b.keys()), || "the two runs wrote different file sets".into())?;
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("differing files: {differing:?}"))?;
    Ok(format!("{} CSV files byte-identical across two runs", a.len()))
}

/// Criterion ids given on the command line, e.g. `-- 6 9`; none means all.
fn selected() -> Vec<usize> {
    std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect()
}

fn main() {
    let only = selected();
    let wanted = |id: usize| only.is_empty() || only.contains(&id);
    println!("acceptance");
    let mut ok = true;
    let checks: [(Check, fn() -> Outcome); 5] = [
        (Check { id: 1, name: "Jacobian vs differences", limit_s: Some(10.0) }, criterion_1),
        (Check { id: 2, name: "conservation", limit_s: Some(30.0) }, criterion_2),
        (Check { id: 3, name: "strategy oracles", limit_s: Some(60.0) }, criterion_3),
        (Check { id: 4, name: "ADDM01 within ADDM02", limit_s: None }, criterion_4),
        (Check { id: 5, name: "degeneracies", limit_s: None }, criterion_5),
    ];
    for (check, f) in checks {
        if wanted(check.id) {
            ok &= run(check, f);
        }
    }

    // Criteria 6 and 7 share the five runs on case1-mini:small.
    if wanted(6) || wanted(7) {
        ok &= comparisons(wanted(6), wanted(7));
    }
    let checks: [(Check, fn() -> Outcome); 3] = [
        (Check { id: 8, name: "threshold formulas", limit_s: None }, criterion_8),
        (Check { id: 9, name: "GMRES + ILU(0)", limit_s: None }, criterion_9),
        (Check { id: 10, name: "determinism", limit_s: None }, criterion_10),
    ];
    for (check, f) in checks {
        if wanted(check.id) {
            ok &= run(check, f);
        }
    }
    if !ok {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}

fn comparisons(six: bool, seven: bool) -> bool {
    let started = Instant::now();
    let mut runs = BTreeMap::new();
    let mut failure = None;
    for m in Method::ALL {
        match case_deck(m).and_then(|d| simulate(&d, None).map_err(|e| e.to_string())) {
            Ok(outcome) => {
                println!("  case1-mini:small {:<7} {:.1} s", m.name(), outcome.stats.total_seconds);
                runs.insert(m.name(), outcome.rows);
            }
            Err(e) => {
                failure = Some(format!("{m} failed: {e}"));
                break;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let mut ok = true;
    if six {
        ok &= run(Check { id: 6, name: "cross-method consistency", limit_s: None }, || {
            if let Some(f) = &failure {
                return Err(f.clone());
            }
            let d = criterion_6(&runs)?;
            ensure(elapsed < 600.0, || format!("{d}; five runs took {elapsed:.0} s (limit 600 s)"))?;
            Ok(format!("{d}; five runs {elapsed:.0} s < 600 s"))
        });
    }
    if seven {
        ok &= run(Check { id: 7, name: "iteration reduction", limit_s: None }, || {
            if let Some(f) = &failure {
                return Err(f.clone());
            }
            criterion_7(&runs)
        });
    }
    ok
}
