//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Pass a criterion number,
//! e.g. `cargo test --test acceptance -- 6`, to run a subset.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use dmpc::cli::{load_scenario, trace_csv};
use dmpc::consensus::{run_admm, AdmmConfig, AdmmInit};
use dmpc::costs::{CostWeights, GoalSpec};
use dmpc::dynamics::{rollout, DiscreteModel, State};
use dmpc::geometry::{
    dist_oracle, hard_certificate_value, max_certified_distance, sdf_oracle,
    DistanceThresholds, Polytope,
};
use dmpc::harness::{compare_modes, run_dmpc, RunReport, Scenario, WarmStartKind};
use dmpc::local_solver::{
    objective_gradient, objective_value, solve_local, AgentSpec, ConsensusTerms, LocalObjective, LocalProblem,
    PenaltyState, SolveMode, SolveStatus, SolverOptions,
};
use dmpc::consensus::CopyVector;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Timed {
    report: RunReport,
    seconds: f64,
}

fn timed_run(sc: &Scenario) -> Timed {
    let start = Instant::now();
    let report = run_dmpc(sc).unwrap_or_else(|e| panic!("{}: {e}", sc.name));
    Timed {
        report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn swap_2d() -> &'static Timed {
    static RUN: OnceLock<Timed> = OnceLock::new();
    RUN.get_or_init(|| timed_run(&scenario("paper_4agents_2d")))
}

fn summary(r: &RunReport) -> String {
    format!(
        "success {} steps {} min_dist {:.5} events {} mean_rounds {:.2} cost {:.4}",
        r.success, r.steps, r.min_distance, r.infeasibility_events, r.mean_rounds, r.cost
    )
}

fn random_box(rng: &mut ChaCha8Rng, n: usize) -> (DVector<f64>, DVector<f64>, Polytope) {
    let lo = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.0..1.0)));
    let hi = DVector::from_iterator(n, lo.iter().map(|l| l + rng.random_range(0.05..1.0)));
    let p = Polytope::axis_box(&lo, &hi).unwrap();
    (lo, hi, p)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_match = 0.0_f64;
    let mut worst_bound = f64::NEG_INFINITY;
    for n in [2, 3] {
        for _ in 0..1000 {
            let (lo, hi, p) = random_box(&mut rng, n);
            let s = loop {
                let s = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-3.0..3.0)));
                if (0..n).any(|d| s[d] < lo[d] || s[d] > hi[d]) {
                    break s;
                }
            };
            let truth = dist_oracle(&p, &s).unwrap();
            let (best, _) = max_certified_distance(&p, &s).unwrap();
            worst_match = worst_match.max((best - truth).abs());
            for _ in 0..5 {
                let mut lambda = DVector::from_iterator(2 * n, (0..2 * n).map(|_| rng.random_range(0.0..1.0)));
                if rng.random_bool(0.3) {
                    for v in lambda.iter_mut() {
                        if rng.random_bool(0.5) {
                            *v = 0.0;
                        }
                    }
                }
                let norm = (p.g_matrix().transpose() * &lambda).norm();
                if norm == 0.0 {
                    continue;
                }
                lambda *= rng.random_range(0.0..1.0) / norm;
                let value = hard_certificate_value(&p, &s, &lambda).unwrap();
                worst_bound = worst_bound.max(value - truth);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_match <= 1e-6 && worst_bound <= 1e-9 && secs <= 10.0,
        format!("max |certified - dist| {worst_match:.2e}, max excess of feasible certificates {worst_bound:.2e}, {secs:.2}s"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let n = 2 + i % 2;
        let (lo, hi, p) = random_box(&mut rng, n);
        let s = DVector::from_iterator(
            n,
            (0..n).map(|d| {
                let w = hi[d] - lo[d];
                rng.random_range(lo[d] - w..hi[d] + w)
            }),
        );
        let inside = (0..n).all(|d| s[d] >= lo[d] && s[d] <= hi[d]);
        let closed = if inside {
            -(0..n).map(|d| (s[d] - lo[d]).min(hi[d] - s[d])).fold(f64::INFINITY, f64::min)
        } else {
            (0..n)
                .map(|d| (s[d] - s[d].clamp(lo[d], hi[d])).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        worst = worst.max((sdf_oracle(&p, &s).unwrap() - closed).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-9 && secs <= 1.0, format!("max |sdf - closed form| {worst:.2e}, {secs:.3}s"))
}

fn agent_spec(states: Vec<State>, agent: usize, goal: &[f64], mode: SolveMode) -> AgentSpec {
    let dim = goal.len();
    AgentSpec {
        agent,
        model: DiscreteModel::double_integrator(dim, 0.1).unwrap(),
        horizon: 10,
        current_states: states,
        goal: GoalSpec::at_rest(&DVector::from_column_slice(goal)),
        weights: CostWeights::scaled(dim, 0.1, 1.0, 1.0, 100.0).unwrap(),
        delta: 0.1,
        mode,
        thresholds: DistanceThresholds::default(),
        workspace: None,
        input_bound: None,
    }
}

fn state(p: &[f64], v: &[f64]) -> State {
    DVector::from_iterator(p.len() + v.len(), p.iter().chain(v).copied())
}

/// Backward Riccati recursion for `min Σ eᵀQe + uᵀRu + e_NᵀQ_f e_N`, `e = s − g`.
fn riccati_inputs(sp: &AgentSpec) -> Vec<DVector<f64>> {
    let (a, b) = (&sp.model.a, &sp.model.b);
    let w = &sp.weights;
    let g = &sp.goal.state;
    let c = a * g - g;
    let mut p_next = w.qf.clone();
    let mut q_next = DVector::zeros(g.len());
    let mut gains = Vec::new();
    for _ in 0..sp.horizon {
        let h_inv = (&w.r + b.transpose() * &p_next * b).try_inverse().unwrap();
        let pb = &p_next * b;
        let s = &p_next - &pb * &h_inv * pb.transpose();
        let t = &q_next - &pb * &h_inv * (b.transpose() * &q_next);
        gains.push((h_inv, p_next.clone(), q_next.clone()));
        q_next = a.transpose() * (&s * &c + &t);
        p_next = &w.q + a.transpose() * &s * a;
    }
    gains.reverse();
    let mut e = sp.s0() - g;
    let mut inputs = Vec::new();
    for (h_inv, p, q) in gains {
        let z = a * &e + &c;
        let u = -(&h_inv * (b.transpose() * (&p * &z + &q)));
        e = z + b * &u;
        inputs.push(u);
    }
    inputs
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut statuses = Vec::new();
    for (s0, goal) in [
        (state(&[0.0, 0.0], &[0.0, 0.0]), vec![1.0, -0.5]),
        (state(&[0.3, -0.2], &[0.4, 0.1]), vec![-0.7, 0.9]),
        (state(&[0.0, 0.2, -0.1], &[0.0, 0.0, 0.3]), vec![0.5, 0.5, 1.0]),
    ] {
        let sp = agent_spec(vec![s0.clone()], 0, &goal, SolveMode::Hard);
        let layout = sp.layout();
        let p = LocalProblem::new(sp.clone(), ConsensusTerms::zeros(layout, 0.0)).unwrap();
        let sol = solve_local(&p, None, &SolverOptions::default()).unwrap();
        statuses.push(sol.status);
        let oracle = rollout(&sp.model, &s0, &riccati_inputs(&sp)).unwrap();
        let got = sol.v_plus.trajectory(0);
        let err: f64 = got
            .states
            .iter()
            .zip(&oracle.states)
            .chain(got.inputs.iter().zip(&oracle.inputs))
            .map(|(x, y)| (x - y).norm_squared())
            .sum();
        worst = worst.max(err.sqrt());
    }
    let secs = start.elapsed().as_secs_f64();
    let converged = statuses.iter().all(|s| *s == SolveStatus::Converged);
    verdict(
        converged && worst <= 1e-4 && secs <= 5.0,
        format!("max trajectory error {worst:.2e}, statuses {statuses:?}, {secs:.3}s"),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = SolverOptions::default().fd_step;
    let mut worst = [0.0_f64; 2];
    for (m, mode) in [SolveMode::Hard, SolveMode::Soft].into_iter().enumerate() {
        for _ in 0..50 {
            let dim = if rng.random_bool(0.5) { 2 } else { 3 };
            let states: Vec<State> = (0..3)
                .map(|_| DVector::from_iterator(2 * dim, (0..2 * dim).map(|_| rng.random_range(-1.0..1.0))))
                .collect();
            let goal: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut sp = agent_spec(states, rng.random_range(0..3), &goal, mode);
            sp.horizon = 5;
            let layout = sp.layout();
            let mut random_copy = |scale: f64| {
                let d = DVector::from_iterator(layout.len(), (0..layout.len()).map(|_| rng.random_range(-scale..scale)));
                CopyVector::from_data(layout, d).unwrap()
            };
            let consensus = ConsensusTerms {
                v_bar: random_copy(1.0),
                gamma: random_copy(0.5),
                rho: 1.0,
            };
            let p = LocalProblem::new(sp, consensus).unwrap();
            let obj = LocalObjective::new(&p);
            let mut x = DVector::from_iterator(obj.num_vars(), (0..obj.num_vars()).map(|_| rng.random_range(-1.0..1.0)));
            for i in 0..x.len() {
                if obj.lower()[i] == 0.0 {
                    x[i] = rng.random_range(0.05..1.0);
                }
            }
            let k = obj.num_constraints();
            let alm = PenaltyState {
                multipliers: DVector::from_iterator(k, (0..k).map(|_| rng.random_range(0.0..2.0))),
                penalty: 10.0,
            };
            let g = objective_gradient(&p, &x, &alm).unwrap();
            let mut fd = DVector::zeros(x.len());
            for i in 0..x.len() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (objective_value(&p, &xp, &alm).unwrap() - objective_value(&p, &xm, &alm).unwrap()) / (2.0 * h);
            }
            worst[m] = worst[m].max((&g - &fd).amax() / fd.amax().max(1.0));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst[0] <= 1e-5 && worst[1] <= 1e-5 && secs <= 30.0,
        format!(
            "max relative error hard {:.2e}, soft {:.2e} over 50 points each, {secs:.2}s",
            worst[0], worst[1]
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let cfg = AdmmConfig::default();
    let sp = agent_spec(vec![state(&[0.0, 0.0], &[0.0, 0.0])], 0, &[1.0, 0.0], SolveMode::Hard);
    let one = run_admm(&[sp.clone()], vec![None], AdmmInit::zeros(sp.layout()), &cfg).unwrap();
    let single_ok = one.rounds == 1 && one.final_residual() == 0.0 && one.converged;
    // exact single-agent optimum: no consensus terms
    let solo = |s: State, goal: &[f64]| {
        let sp = agent_spec(vec![s], 0, goal, SolveMode::Hard);
        let p = LocalProblem::new(sp.clone(), ConsensusTerms::zeros(sp.layout(), 0.0)).unwrap();
        solve_local(&p, None, &cfg.solver).unwrap().v_plus.trajectory(0)
    };

    let starts = [state(&[0.0, 0.0], &[0.0, 0.0]), state(&[0.0, 10.0], &[0.0, 0.0])];
    let goals = [[1.0, 0.0], [1.0, 10.0]];
    let specs: Vec<AgentSpec> = (0..2)
        .map(|i| agent_spec(starts.to_vec(), i, &goals[i], SolveMode::Hard))
        .collect();
    let init = AdmmInit::zeros(specs[0].layout());
    let pair = run_admm(&specs, vec![None, None], init, &cfg).unwrap();
    let mut worst = 0.0_f64;
    for i in 0..2 {
        let alone = solo(starts[i].clone(), &goals[i]);
        let joint = pair.consensus.trajectory(i);
        for (x, y) in joint
            .states
            .iter()
            .zip(&alone.states)
            .chain(joint.inputs.iter().zip(&alone.inputs))
        {
            worst = worst.max((x - y).amax());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        single_ok && pair.converged && worst <= 1e-3 && secs <= 30.0,
        format!(
            "single agent: {} round(s), residual {:.1e}; decoupled pair: {} rounds, max deviation {worst:.2e}, {secs:.2}s",
            one.rounds,
            one.final_residual(),
            pair.rounds
        ),
    )
}

fn criterion_6() -> Verdict {
    let two = swap_2d();
    let three = timed_run(&scenario("paper_4agents_3d"));
    let check = |t: &Timed, delta: f64| t.report.success && t.report.min_distance >= delta - 1e-3 && t.seconds <= 300.0;
    let sc2 = scenario("paper_4agents_2d");
    let sc3 = scenario("paper_4agents_3d");
    verdict(
        sc2.mode == SolveMode::Hard && sc3.mode == SolveMode::Hard && check(two, sc2.delta) && check(&three, sc3.delta),
        format!(
            "2D: {} ({:.1}s); 3D: {} ({:.1}s)",
            summary(&two.report),
            two.seconds,
            summary(&three.report),
            three.seconds
        ),
    )
}

fn criterion_7() -> Verdict {
    let small = swap_2d();
    let mut sc = scenario("paper_4agents_2d");
    sc.delta = 0.5;
    let large = timed_run(&sc);
    let (a, b) = (&small.report, &large.report);
    verdict(
        b.cost >= a.cost && b.min_distance >= a.min_distance - 1e-3,
        format!(
            "delta 0.1: cost {:.4} min_dist {:.4} steps {}; delta 0.5: cost {:.4} min_dist {:.4} steps {} success {}",
            a.cost, a.min_distance, a.steps, b.cost, b.min_distance, b.steps, b.success
        ),
    )
}

fn criterion_8() -> Verdict {
    let feasible = compare_modes(&scenario("swap_2agents"));
    let dense_sc = scenario("dense_2agents");
    let dense = compare_modes(&dense_sc);
    let hard_ok = feasible.hard.as_ref().is_some_and(|r| r.success && r.infeasibility_events == 0);
    let soft = feasible.soft.as_ref();
    let soft_ok = soft.is_some_and(|r| r.success && r.max_slack <= 1e-2);
    let dense_hard_fails = dense.hard_error.as_deref().is_some_and(|e| e.contains("infeasible"));
    let dense_soft = dense.soft.as_ref();
    let dense_soft_ok = dense_soft.is_some_and(|r| r.max_penetration.is_finite() && r.max_penetration <= dense_sc.delta);
    let time = |r: Option<&RunReport>| r.map_or(f64::NAN, |r| r.mean_solve_time_s);
    verdict(
        hard_ok && soft_ok && dense_hard_fails && dense_soft_ok,
        format!(
            "feasible swap: hard ok {hard_ok}, soft max slack {:.2e} success {}; dense: hard error {:?}, soft max penetration {:.4}; \
             mean solve time per step hard {:.4}s soft {:.4}s",
            soft.map_or(f64::NAN, |r| r.max_slack),
            soft.is_some_and(|r| r.success),
            dense.hard_error,
            dense_soft.map_or(f64::NAN, |r| r.max_penetration),
            time(feasible.hard.as_ref()),
            time(soft),
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["swap_2agents", "dense_2agents", "paper_4agents_2d"] {
        let mut seq = scenario(name);
        seq.admm.parallel = false;
        let mut par = seq.clone();
        par.admm.parallel = true;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = run_dmpc(&seq).unwrap();
        let b = pool.install(|| run_dmpc(&par)).unwrap();
        let same = trace_csv(&a, seq.dimension) == trace_csv(&b, par.dimension);
        pass &= same;
        details.push(format!("{name}: {}", if same { "identical" } else { "DIFFERENT" }));
    }
    verdict(pass, details.join(", "))
}

fn criterion_10() -> Verdict {
    let mut sc = scenario("paper_4agents_2d");
    assert_eq!(sc.warm_start, WarmStartKind::Rrt);
    let rrt = &swap_2d().report;
    sc.warm_start = WarmStartKind::Zero;
    let zero = timed_run(&sc).report;
    verdict(
        rrt.mean_rounds <= 1.1 * zero.mean_rounds,
        format!(
            "mean ADMM rounds per step: rrt {:.2}, zero {:.2}",
            rrt.mean_rounds, zero.mean_rounds
        ),
    )
}

fn main() {
    let filters: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("dual certificate matches distance oracle", criterion_1),
        ("signed distance oracle", criterion_2),
        ("local solver matches Riccati", criterion_3),
        ("analytic gradients", criterion_4),
        ("ADMM single and decoupled agents", criterion_5),
        ("four-agent swap in 2D and 3D", criterion_6),
        ("larger cubes cost more", criterion_7),
        ("hard versus soft constraints", criterion_8),
        ("deterministic traces", criterion_9),
        ("RRT warm start does not slow ADMM", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filters.is_empty() && !filters.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let v = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name} | {} | {:.1}s",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
