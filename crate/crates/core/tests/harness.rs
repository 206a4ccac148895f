use dmpc::cli::parse_scenario;
use dmpc::harness::{run_dmpc, sweep_delta, WarmStartKind};

fn single(goal: &str, warm: &str) -> String {
    format!(
        r#"
name = "single"
dimension = 2
max_steps = 300
seed = 1
warm_start = "{warm}"

[[agents]]
start = [0.0, 0.0]
goal = {goal}
"#
    )
}

#[test]
fn single_agent_reaches_goal_in_free_space() {
    for warm in ["zero", "rrt"] {
        let sc = parse_scenario(&single("[2.0, 0.0]", warm), "t").unwrap();
        let report = run_dmpc(&sc).unwrap();
        assert!(report.success, "{warm}: goal error {}", report.final_goal_error);
        assert!(report.steps < 300);
        assert_eq!(report.infeasibility_events, 0);
        assert!(report.min_distance.is_infinite());
        let last = report.logs.last().unwrap();
        let p = &last.states[0];
        assert!(((p[0] - 2.0).powi(2) + p[1].powi(2)).sqrt() <= sc.goal_tol_pos);
    }
}

#[test]
fn agent_at_goal_finishes_without_steps() {
    let sc = parse_scenario(&single("[0.0, 0.0]", "zero"), "t").unwrap();
    let report = run_dmpc(&sc).unwrap();
    assert!(report.success);
    assert_eq!(report.steps, 0);
    assert_eq!(report.cost, 0.0);
}

#[test]
fn reports_are_repeatable() {
    let sc = parse_scenario(&single("[1.0, 0.5]", "rrt"), "t").unwrap();
    assert_eq!(sc.warm_start, WarmStartKind::Rrt);
    let a = run_dmpc(&sc).unwrap().without_timing();
    let b = run_dmpc(&sc).unwrap().without_timing();
    assert_eq!(a, b);
}

#[test]
fn sweep_keeps_requested_order() {
    let sc = parse_scenario(&single("[0.5, 0.0]", "zero"), "t").unwrap();
    let sweep = sweep_delta(&sc, &[0.3, 0.1]);
    let deltas: Vec<f64> = sweep.entries.iter().map(|e| e.delta).collect();
    assert_eq!(deltas, vec![0.3, 0.1]);
}
