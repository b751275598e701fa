//! Invariant suites run by `rendezvous validate` and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::relaxed_log;
use crate::error_space::{
    equivalence_check, equivalence_check_with, error_to_inertial, inertial_to_error, rk4_step, CoupledInput,
    CoupledModel,
};
use crate::models::{air_data, trim_descent, trim_level, uav_rhs, Limits, UgvState, VehicleParams, Wind};
use crate::scenarios::{Path, Pose, Segment};
use crate::{InputMat, InputVec, Result, StateMat, StateVec, NU, NX};

/// Tolerances pinned by the invariant definitions.
pub const TRIM_TOL: f64 = 1e-6;
pub const EQUIVALENCE_TOL: f64 = 1e-6;
pub const GLUING_TOL: f64 = 1e-12;
pub const TRANSFORM_TOL: f64 = 1e-12;
pub const MIN_RK4_ORDER: f64 = 3.7;
/// Deviation a flipped lateral-error equation must at least produce to count as detected.
pub const MUTATION_MIN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Relative tolerance of the finite-difference linearization check.
    pub fd_tol: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { fd_tol: 1e-5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Measured quantity compared against the tolerance.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl SuiteResult {
    fn below(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: value.is_finite() && value < tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn above(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: value.is_finite() && value >= tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &'static str, tolerance: f64, err: crate::Error) -> Self {
        Self {
            name,
            passed: false,
            value: f64::NAN,
            tolerance,
            detail: err.to_string(),
        }
    }
}

fn suite(name: &'static str, tolerance: f64, f: impl FnOnce() -> Result<SuiteResult>) -> SuiteResult {
    f().unwrap_or_else(|e| SuiteResult::failed(name, tolerance, e))
}

pub fn run_all(opts: &ValidationOptions) -> Vec<SuiteResult> {
    vec![
        trim_fixed_points(),
        equivalence_straight(),
        equivalence_turning(opts.seed),
        equivalence_mutation(),
        linearization(opts.fd_tol, opts.seed),
        barrier_gluing(),
        transform_round_trip(opts.seed),
        rk4_order(),
    ]
}

fn wind() -> Wind {
    Wind::new(-4.33, 2.5, 0.0)
}

fn integrate_uav(x0: [f64; 7], u: [f64; 3], wind: &Wind, params: &VehicleParams, h: f64, t: f64) -> Result<Vec<[f64; 7]>> {
    let n = (t / h).round() as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(x0);
    let mut x = x0;
    for _ in 0..n {
        x = rk4_step(|_, y| uav_rhs(y, &u, wind, params), &x, h)?;
        out.push(x);
    }
    Ok(out)
}

/// Constant trim inputs hold airspeed and flight-path angle for 10 s.
pub fn trim_fixed_points() -> SuiteResult {
    suite("trim_fixed_point", TRIM_TOL, || {
        let p = VehicleParams::zagi();
        let l = Limits::appendix();
        let w = wind();
        let mut worst = 0.0f64;
        // (ground speed, flight-path angle, course) with level and descending trims
        for (v, gamma, chi) in [(18.0, 0.0, 0.785), (16.0, 0.0, 2.0), (15.0, -0.03, 0.785), (17.0, -0.05, -1.0)] {
            let (v_a, _, _) = air_data(v, chi, gamma, &w)?;
            let (u1, u3) = if gamma == 0.0 { trim_level(v_a, &p, &l)? } else { trim_descent(v_a, gamma, &p)? };
            let x0 = [0.0, 0.0, -50.0, v, gamma, chi, 0.0];
            for x in integrate_uav(x0, [u1, 0.0, u3], &w, &p, 0.01, 10.0)? {
                let (va, _, _) = air_data(x[3], x[5], x[4], &w)?;
                worst = worst.max((va - v_a).abs()).max((x[4] - gamma).abs());
            }
        }
        Ok(SuiteResult::below("trim_fixed_point", worst, TRIM_TOL, "max drift of v_a and gamma over 10 s"))
    })
}

fn trim_input(v_a: f64) -> Result<CoupledInput> {
    let (u1, u3) = trim_level(v_a, &VehicleParams::zagi(), &Limits::appendix())?;
    Ok(CoupledInput {
        thrust: u1,
        roll_rate: 0.0,
        lift_coeff: u3,
        ugv_accel: 0.0,
    })
}

fn arc_model() -> Result<CoupledModel> {
    Ok(CoupledModel::new(
        wind(),
        VehicleParams::zagi(),
        Path::new(Pose::default(), vec![Segment::arc(1000.0, 1.0 / 35.0)])?,
    ))
}

/// Coupled and decoupled models agree on a straight path under trim inputs.
pub fn equivalence_straight() -> SuiteResult {
    suite("equivalence_straight", EQUIVALENCE_TOL, || {
        let m = CoupledModel::new(
            wind(),
            VehicleParams::zagi(),
            Path::straight(Pose { x: 0.0, y: 0.0, chi: std::f64::consts::FRAC_PI_4 }, 1000.0)?,
        );
        let x0 = StateVec::from([0.0, 0.0, -50.0, 0.0, 0.0, 0.0, 0.0, 18.0, 0.0]);
        let (v_a, _, _) = air_data(18.0, std::f64::consts::FRAC_PI_4, 0.0, &m.wind)?;
        let u = trim_input(v_a)?;
        let d = equivalence_check(&m, &x0, |_| u, 10.0, 0.01)?;
        Ok(SuiteResult::below("equivalence_straight", d, EQUIVALENCE_TOL, "10 s, trim inputs"))
    })
}

fn random_signal(rng: &mut impl Rng) -> impl Fn(f64) -> CoupledInput {
    let a: [f64; 8] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    move |t: f64| CoupledInput {
        thrust: 0.9 + 0.3 * a[0] * (0.4 * t + a[1]).sin(),
        roll_rate: 0.03 * a[2] * (0.7 * t + a[3]).cos(),
        lift_coeff: 0.33 + 0.03 * a[4] * (0.3 * t).sin(),
        ugv_accel: 0.2 * a[5] + 0.1 * a[6] * (0.5 * t + a[7]).sin(),
    }
}

fn random_state(rng: &mut impl Rng) -> StateVec {
    StateVec::from([
        rng.random_range(-20.0..20.0),
        rng.random_range(-20.0..20.0),
        rng.random_range(-60.0..-20.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-0.05..0.05),
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.2..0.2),
        rng.random_range(13.0..17.0),
        rng.random_range(0.0..50.0),
    ])
}

/// Randomized initial conditions and bounded input signals on a 35 m arc.
pub fn equivalence_turning(seed: u64) -> SuiteResult {
    suite("equivalence_turning", EQUIVALENCE_TOL, || {
        let m = arc_model()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let x0 = random_state(&mut rng);
            let u = random_signal(&mut rng);
            worst = worst.max(equivalence_check(&m, &x0, u, 10.0, 0.01)?);
        }
        Ok(SuiteResult::below(
            "equivalence_turning",
            worst,
            EQUIVALENCE_TOL,
            "5 random cases, 10 s each, sigma = 1/35",
        ))
    })
}

/// A sign flip in the lateral-error rate must be caught by the equivalence check.
pub fn equivalence_mutation() -> SuiteResult {
    suite("equivalence_mutation", MUTATION_MIN, || {
        let m = arc_model()?;
        let x0 = StateVec::from([5.0, -3.0, -40.0, 0.5, -0.02, 0.1, 0.05, 10.0, 0.0]);
        let flipped = |x: &[f64; NX], u: &[f64; NU]| {
            let mut d = m.rhs(x, u)?;
            d[1] = -d[1];
            Ok(d)
        };
        let u = trim_input(15.0)?;
        let d = equivalence_check_with(flipped, &m, &x0, |_| u, 5.0, 0.01)?;
        Ok(SuiteResult::above(
            "equivalence_mutation",
            d,
            MUTATION_MIN,
            "flipped lateral error rate must deviate",
        ))
    })
}

fn fd_jacobians(m: &CoupledModel, x: &StateVec, u: &InputVec) -> Result<(StateMat, InputMat)> {
    let h = 1e-6;
    let mut a = StateMat::zeros();
    let mut b = InputMat::zeros();
    for j in 0..NX {
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        a.set_column(j, &((m.rhs_vec(&xp, u)? - m.rhs_vec(&xm, u)?) / (2.0 * h)));
    }
    for j in 0..NU {
        let (mut up, mut um) = (*u, *u);
        up[j] += h;
        um[j] -= h;
        b.set_column(j, &((m.rhs_vec(x, &up)? - m.rhs_vec(x, &um)?) / (2.0 * h)));
    }
    Ok((a, b))
}

/// Worst error of the exact Jacobians against central differences, relative
/// for entries above `1e-2` and absolute (scaled by `1e-2`) below.
pub fn linearization(fd_tol: f64, seed: u64) -> SuiteResult {
    suite("linearization", fd_tol, || {
        let m = arc_model()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let x = random_state(&mut rng);
            let u = InputVec::new(
                rng.random_range(0.0..2.0),
                rng.random_range(-0.08..0.08),
                rng.random_range(0.1..0.6),
                rng.random_range(-1.0..1.0),
            );
            let (a, b) = m.linearize(&x, &u)?;
            let (fa, fb) = fd_jacobians(&m, &x, &u)?;
            for (p, q) in a.iter().chain(b.iter()).zip(fa.iter().chain(fb.iter())) {
                worst = worst.max((p - q).abs() / p.abs().max(q.abs()).max(1e-2));
            }
        }
        Ok(SuiteResult::below(
            "linearization",
            worst,
            fd_tol,
            "50 random points, central differences with step 1e-6",
        ))
    })
}

/// Value and slope of the relaxed log barrier agree across the threshold.
pub fn barrier_gluing() -> SuiteResult {
    use num_dual::{first_derivative, second_derivative};
    let mut worst = 0.0f64;
    for delta in [1e-3, 0.01, 0.05, 0.3] {
        let below = |z: f64| {
            let r = (z - 2.0 * delta) / delta;
            0.5 * (r * r - 1.0) - delta.ln()
        };
        let (v_q, d_q) = (below(delta), -1.0 / delta);
        let (v_l, d_l) = first_derivative(|z| relaxed_log(z, delta), delta);
        let (_, _, c_l) = second_derivative(|z| relaxed_log(z, delta), delta);
        // the quadratic branch has curvature 1/delta^2 everywhere
        let c_q = 1.0 / (delta * delta);
        worst = worst
            .max((v_q - v_l).abs() / v_l.abs().max(1.0))
            .max((d_q - d_l).abs() / d_l.abs().max(1.0))
            .max((c_q - c_l).abs() / c_l.abs().max(1.0));
        // the quadratic branch itself evaluated just below the threshold
        let z = delta * (1.0 - 1e-9);
        let (v_b, _) = first_derivative(|z| relaxed_log(z, delta), z);
        worst = worst.max((v_b - below(z)).abs() / v_b.abs().max(1.0));
    }
    SuiteResult::below("barrier_gluing", worst, GLUING_TOL, "value, slope and curvature at z = delta")
}

/// Error-frame and inertial coordinates map back onto themselves.
pub fn transform_round_trip(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let g = UgvState {
            x: rng.random_range(-5000.0..5000.0),
            y: rng.random_range(-5000.0..5000.0),
            v: 15.0,
            chi: rng.random_range(-10.0..10.0),
        };
        let e = [
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..0.0),
        ];
        let back = inertial_to_error(error_to_inertial(e, &g), &g);
        let p = [g.x + e[0], g.y + e[1], e[2]];
        let fwd = error_to_inertial(inertial_to_error(p, &g), &g);
        for i in 0..3 {
            worst = worst.max((back[i] - e[i]).abs()).max((fwd[i] - p[i]).abs() / p[i].abs().max(1.0));
        }
    }
    SuiteResult::below("transform_round_trip", worst, TRANSFORM_TOL, "1000 random frames")
}

/// Observed RK4 order on a 10 s banked descent, errors measured against
/// Richardson extrapolation of the h/8 solution.
pub fn rk4_order() -> SuiteResult {
    suite("rk4_order", MIN_RK4_ORDER, || {
        let p = VehicleParams::zagi();
        let w = Wind::calm();
        let gamma = -0.04;
        let (u1, u3) = trim_descent(16.0, gamma, &p)?;
        let x0 = [0.0, 0.0, -50.0, 16.0, gamma, 0.0, 0.2];
        let end = |h: f64| -> Result<[f64; 7]> {
            Ok(*integrate_uav(x0, [u1, 0.0, u3], &w, &p, h, 10.0)?.last().expect("non-empty"))
        };
        let h = 0.2;
        let (a, b) = (end(h)?, end(h / 2.0)?);
        let (f8, f16) = (end(h / 8.0)?, end(h / 16.0)?);
        // the h/8, h/16 pair extrapolates the limit to fifth order
        let reference: [f64; 7] = std::array::from_fn(|i| f16[i] + (f16[i] - f8[i]) / 15.0);
        let err = |x: &[f64; 7]| (0..7).map(|i| (x[i] - reference[i]).abs()).fold(0.0f64, f64::max);
        let order = (err(&a) / err(&b)).log2();
        Ok(SuiteResult::above(
            "rk4_order",
            order,
            MIN_RK4_ORDER,
            format!("errors {:.3e} (h = {h}) and {:.3e} (h/2)", err(&a), err(&b)),
        ))
    })
}
