use super::*;
use crate::guidance::{desired_curve, initial_trajectory};
use crate::scenarios::preset_straight;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight scenario cut down to a short horizon with an early descent start.
fn short_scenario(t0: f64, horizon: f64) -> Scenario {
    let mut sc = preset_straight();
    sc.spec.t0 = t0;
    sc.spec.horizon = horizon;
    sc
}

fn max_diff(a: &[StateVec], b: &[StateVec]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

fn curve_defect(model: &CoupledModel, c: &Curve) -> f64 {
    (0..c.grid.len - 1)
        .map(|k| (model.step_vec(&c.states[k], &c.inputs[k], c.grid.step).unwrap() - c.states[k + 1]).amax())
        .fold(0.0, f64::max)
}

/// Tangent vector generated by input perturbation `v` through the linearised dynamics.
fn tangent(jac: &[(StateMat, crate::InputMat)], v: &[InputVec]) -> Vec<StateVec> {
    let mut z = vec![StateVec::zeros(); v.len()];
    for k in 0..v.len() - 1 {
        z[k + 1] = jac[k].0 * z[k] + jac[k].1 * v[k];
    }
    z
}

fn smooth_noise(rng: &mut ChaCha8Rng, n: usize, scale: [f64; NU]) -> Vec<InputVec> {
    let a: [f64; NU] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let w: [f64; NU] = std::array::from_fn(|_| rng.random_range(0.5..3.0));
    let p: [f64; NU] = std::array::from_fn(|_| rng.random_range(0.0..6.28));
    (0..n)
        .map(|k| {
            let t = k as f64 * 0.05;
            InputVec::from_fn(|i, _| scale[i] * a[i] * (w[i] * t + p[i]).sin())
        })
        .collect()
}

#[test]
fn projection_is_idempotent_on_trajectories() {
    let sc = short_scenario(2.0, 12.0);
    let model = sc.model();
    let grid = sc.grid(0.05);
    let traj = initial_trajectory(&sc, grid).unwrap();
    let gains = lqr_gain(&model, &traj, &LqrWeights::default()).unwrap();
    let p = project(&model, &traj.as_curve(), &gains, &traj.states[0]).unwrap();
    assert!(max_diff(&p.states, &traj.states) < 1e-8);
    let du = p.inputs.iter().zip(&traj.inputs).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    assert!(du < 1e-8, "{du}");
}

#[test]
fn projection_of_desired_curve_is_feasible() {
    let sc = preset_straight();
    let model = sc.model();
    let grid = sc.grid(0.05);
    let desired = desired_curve(&sc, grid).unwrap();
    let initial = initial_trajectory(&sc, grid).unwrap();
    assert!(curve_defect(&model, &desired) > 1e-4);
    let gains = lqr_gain(&model, &initial, &LqrWeights::default()).unwrap();
    let p = project(&model, &desired, &gains, &initial.states[0]).unwrap();
    assert!(model.max_defect(&p).unwrap() < 1e-8);
    // the closed loop follows the descent profile
    let k = grid.len - 1;
    assert!((p.states[k][2] - desired.states[k][2]).abs() < 5.0, "{}", p.states[k][2]);
}

#[test]
fn zero_gain_projection_is_open_loop() {
    let sc = short_scenario(2.0, 12.0);
    let model = sc.model();
    let grid = sc.grid(0.05);
    let desired = desired_curve(&sc, grid).unwrap();
    let x0 = sc.initial_state().unwrap();
    let p = open_loop(&model, &desired, &x0).unwrap();
    let direct = model.integrate(&x0, &desired.inputs, grid).unwrap();
    assert_eq!(p.states, direct.states);
    assert_eq!(p.inputs, desired.inputs);
}

#[test]
fn tracking_cost_is_linear_in_weights_and_zero_on_desired() {
    let sc = short_scenario(2.0, 12.0);
    let model = sc.model();
    let grid = sc.grid(0.05);
    let desired = desired_curve(&sc, grid).unwrap();
    let traj = initial_trajectory(&sc, grid).unwrap();
    let set = ConstraintSet::new(sc.limits);
    let w = Weights::default();
    let cost = |w: &Weights| total_cost(&model, &traj, &desired, w, &set, None).unwrap();
    let input_part = cost(&w.scaled(0.0, 1.0, 0.0));
    let state_part = cost(&w) - input_part;
    assert!(state_part > 0.0);
    let doubled = cost(&w.scaled(2.0, 1.0, 2.0)) - input_part;
    assert!((doubled - 2.0 * state_part).abs() <= 1e-12 * state_part.max(1.0));

    let same = traj.as_curve();
    assert_eq!(total_cost(&model, &traj, &same, &w, &set, None).unwrap(), 0.0);
}

#[test]
fn directional_derivative_matches_projected_finite_difference() {
    let sc = short_scenario(2.0, 12.0);
    let model = sc.model();
    let grid = sc.grid(0.05);
    let desired = desired_curve(&sc, grid).unwrap();
    let traj = initial_trajectory(&sc, grid).unwrap();
    let set = ConstraintSet::new(sc.limits);
    let w = Weights::default();
    let obj = Objective {
        desired: &desired,
        weights: &w,
        barrier: Some((&model, set, BarrierParams::default().stage(0))),
    };
    let gains = lqr_gain(&model, &traj, &LqrWeights::default()).unwrap();
    let jac: Vec<_> = (0..grid.len - 1)
        .map(|k| model.step_jacobians(&traj.states[k], &traj.inputs[k], grid.step).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let v = smooth_noise(&mut rng, grid.len, [0.2, 0.01, 0.02, 0.2]);
        let z = tangent(&jac, &v);
        let analytic = directional_derivative(&model, &obj, &traj.states, &traj.inputs, grid, &z, &v).unwrap();
        let j = |eps: f64| {
            let alpha: Vec<_> = traj.states.iter().zip(&z).map(|(x, d)| x + d * eps).collect();
            let mu: Vec<_> = traj.inputs.iter().zip(&v).map(|(u, d)| u + d * eps).collect();
            let (s, u) = project_rollout(&model, &alpha, &mu, &gains, &traj.states[0], grid).unwrap();
            objective_value(&obj, &s, &u, grid).unwrap()
        };
        let eps = 1e-4;
        let fd = (j(eps) - j(-eps)) / (2.0 * eps);
        let rel = (fd - analytic).abs() / analytic.abs().max(1e-12);
        assert!(rel < 1e-5, "fd {fd} analytic {analytic} rel {rel}");
    }
}

#[test]
fn search_direction_descends_on_random_trajectories() {
    let sc = short_scenario(2.0, 12.0);
    let model = sc.model();
    let grid = sc.grid(0.05);
    let desired = desired_curve(&sc, grid).unwrap();
    let base = initial_trajectory(&sc, grid).unwrap();
    let set = ConstraintSet::new(sc.limits);
    let w = Weights::default();
    let obj = Objective {
        desired: &desired,
        weights: &w,
        barrier: Some((&model, set, BarrierParams::default().stage(0))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let noise = smooth_noise(&mut rng, grid.len, [0.1, 0.005, 0.01, 0.1]);
        let inputs: Vec<_> = base.inputs.iter().zip(&noise).map(|(u, d)| u + d).collect();
        let traj = model.integrate(&base.states[0], &inputs, grid).unwrap();
        let dir = search_direction(&model, &obj, &traj.states, &traj.inputs, grid).unwrap();
        assert!(dir.slope < 0.0, "{}", dir.slope);
        let gains = lqr_from_jacobians(&dir.jacobians, &LqrWeights::default(), grid.step).unwrap();
        let j = |eps: f64| {
            let alpha: Vec<_> = traj.states.iter().zip(&dir.z).map(|(x, d)| x + d * eps).collect();
            let mu: Vec<_> = traj.inputs.iter().zip(&dir.v).map(|(u, d)| u + d * eps).collect();
            let (s, u) = project_rollout(&model, &alpha, &mu, &gains, &traj.states[0], grid).unwrap();
            objective_value(&obj, &s, &u, grid).unwrap()
        };
        let eps = 1e-6;
        assert!(j(eps) < j(0.0), "no decrease along the direction");
    }
}

#[test]
fn feasible_desired_trajectory_converges_immediately() {
    let sc = short_scenario(2.0, 12.0);
    let model = sc.model();
    let grid = sc.grid(0.05);
    let initial = initial_trajectory(&sc, grid).unwrap();
    let desired = initial.as_curve();
    let w = Weights::default();
    let obj = Objective {
        desired: &desired,
        weights: &w,
        barrier: None,
    };
    let mut traj = initial.clone();
    let mut record = StageRecord {
        stage: 0,
        mu: 0.0,
        delta: 0.0,
        initial_cost: f64::NAN,
        iterations: Vec::new(),
        outcome: StageOutcome::MaxIterations,
        final_decrement: f64::NAN,
    };
    newton_stage(&model, &obj, &mut traj, &SolverOptions::default(), 1e-6, &mut record, 0).unwrap();
    assert_eq!(record.outcome, StageOutcome::Converged);
    assert!(record.iterations.len() <= 1);
    let set = ConstraintSet::new(sc.limits);
    assert!(total_cost(&model, &traj, &desired, &w, &set, None).unwrap() < 1e-8);
}

#[test]
fn short_solve_reports_consistently() {
    let sc = short_scenario(2.0, 20.0);
    let sol = solve(&sc, &Weights::default(), &SolverOptions::default()).unwrap();
    let r = &sol.report;
    assert_eq!(r.status, SolverStatus::Converged);
    assert!(r.stages_monotone());
    assert!(r.max_defect < 1e-8);
    assert_eq!(r.stages.len(), BarrierParams::default().stages);
    assert_eq!(r.iterations, r.stages.iter().map(|s| s.iterations.len()).sum::<usize>());
    let initial_cost = total_cost(
        &sol.model,
        &sol.initial,
        &sol.desired,
        &Weights::default(),
        &ConstraintSet::new(sc.limits),
        None,
    )
    .unwrap();
    assert!(r.tracking_cost < initial_cost);
}

#[test]
fn options_reject_bad_values() {
    let mut o = SolverOptions::default();
    o.max_newton = 0;
    assert!(o.validate().is_err());
    let mut o = SolverOptions::default();
    o.step = -0.1;
    assert!(o.validate().is_err());
    let mut w = Weights::default();
    w.r[1] = 0.0;
    assert!(matches!(w.validate(), Err(Error::Validation { .. })));
}
