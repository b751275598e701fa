//! Desired curve construction.
//!
//! An aggressiveness index `k_aggr` in `[0, 1]` blends the gentlest descent
//! that still lands within the available space (`gamma0`) with the steepest
//! descent sustainable without negative thrust (`gamma1`). The resulting
//! constant flight-path angle fixes the rendezvous space `s_r`; a linear
//! deceleration in arc length then fixes the time parametrisation and a
//! closed-form rendezvous time.

use serde::{Deserialize, Serialize};

use crate::error_space::{Curve, Grid, Trajectory};
use crate::models::{gamma_one, trim_level, wind_triangle, Limits, VehicleParams};
use crate::scenarios::Scenario;
use crate::{Error, InputVec, Result, StateVec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousSpec {
    pub k_aggr: f64,
    /// Altitude coordinate when the manoeuvre starts (negative above ground), m.
    pub z0: f64,
    /// Maximum arc length available for the manoeuvre, m.
    pub s_f: f64,
    /// Initial ground speed, m/s.
    pub v0: f64,
    /// Ground speed at rendezvous, m/s.
    pub vf: f64,
    /// Manoeuvre start time, s.
    pub t0: f64,
    /// End of the optimisation horizon, s.
    #[serde(rename = "T")]
    pub horizon: f64,
}

impl RendezvousSpec {
    pub fn validate(&self, limits: &Limits) -> Result<()> {
        if !(0.0..=1.0).contains(&self.k_aggr) {
            return Err(Error::validation("k_aggr", "k_aggr out of [0,1]"));
        }
        if !(self.z0 < 0.0) {
            return Err(Error::validation("spec.z0", "must be negative (above ground)"));
        }
        if !(self.s_f > 0.0) {
            return Err(Error::validation("spec.s_f", "must be positive"));
        }
        if self.z0.abs() > self.s_f {
            return Err(Error::validation("spec.z0", "|z0| must not exceed s_f"));
        }
        if !(self.v0 > 0.0) {
            return Err(Error::validation("spec.v0", "must be positive"));
        }
        if !(self.vf >= limits.v_min) {
            return Err(Error::validation(
                "vf",
                format!("vf = {} is below v_min = {}", self.vf, limits.v_min),
            ));
        }
        if self.vf > self.v0 {
            return Err(Error::validation("vf", "vf must not exceed v0"));
        }
        if !(self.t0 >= 0.0) {
            return Err(Error::validation("spec.t0", "must be non-negative"));
        }
        if !(self.t0 < self.horizon) {
            return Err(Error::validation("spec.T", "horizon must end after t0"));
        }
        Ok(())
    }

    /// `t0 + 1.3 T_r^d(k_aggr = 0)`, long enough for the slowest manoeuvre.
    pub fn default_horizon(z0: f64, s_f: f64, v0: f64, vf: f64, t0: f64) -> f64 {
        let _ = z0;
        t0 + 1.3 * space_to_time(s_f, v0, vf, s_f)
    }
}

/// Shallowest descent angle that reaches the ground exactly at `s_f`.
pub fn gamma_zero(z0: f64, s_f: f64) -> Result<f64> {
    if !(s_f > 0.0) || z0.abs() > s_f {
        return Err(Error::domain(format!("arcsin(z0 / s_f) undefined for z0 = {z0}, s_f = {s_f}")));
    }
    Ok((z0 / s_f).asin())
}

pub fn desired_gamma(k_aggr: f64, gamma0: f64, gamma1: f64) -> f64 {
    k_aggr * gamma1 + (1.0 - k_aggr) * gamma0
}

/// Arc length over which a constant descent `gamma_d` removes the altitude `-z0`.
pub fn rendezvous_space(z0: f64, gamma_d: f64) -> Result<f64> {
    if !(gamma_d < 0.0) {
        return Err(Error::domain(format!("rendezvous needs a descent, got gamma_d = {gamma_d}")));
    }
    if !(z0 < 0.0) {
        return Err(Error::domain(format!("rendezvous needs z0 < 0, got {z0}")));
    }
    Ok(z0 / gamma_d.sin())
}

/// Linear deceleration from `v0` at `s = 0` to `vf` at `s = s_r`, held beyond.
pub fn desired_speed(s: f64, v0: f64, vf: f64, s_r: f64) -> f64 {
    if s >= s_r {
        vf
    } else {
        v0 + (vf - v0) * s / s_r
    }
}

/// Time to cover `s` metres of the speed profile, `∫ ds / v^d`.
pub fn space_to_time(s: f64, v0: f64, vf: f64, s_r: f64) -> f64 {
    let r = (vf - v0) * s / (s_r * v0);
    if r.abs() < 1e-10 {
        // constant-speed limit with its first-order correction
        s / v0 * (1.0 - 0.5 * r)
    } else {
        s_r / (vf - v0) * r.ln_1p()
    }
}

/// Inverse of [`space_to_time`] on `[0, s_r]`.
pub fn time_to_space(t: f64, v0: f64, vf: f64, s_r: f64) -> f64 {
    let a = (vf - v0) * t / s_r;
    if a.abs() < 1e-10 {
        v0 * t * (1.0 + 0.5 * a)
    } else {
        s_r * v0 * a.exp_m1() / (vf - v0)
    }
}

/// Closed-form desired rendezvous time `T_r^d`.
pub fn predicted_time(spec: &RendezvousSpec, params: &VehicleParams, limits: &Limits) -> Result<f64> {
    Ok(DesiredProfiles::new(spec, params, limits)?.t_r)
}

/// Space- and time-domain desired profiles for one aggressiveness index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesiredProfiles {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma_d: f64,
    pub s_r: f64,
    /// Desired rendezvous time measured from the manoeuvre start.
    pub t_r: f64,
    pub z0: f64,
    pub v0: f64,
    pub vf: f64,
    pub t0: f64,
}

impl DesiredProfiles {
    pub fn new(spec: &RendezvousSpec, params: &VehicleParams, limits: &Limits) -> Result<Self> {
        let gamma0 = gamma_zero(spec.z0, spec.s_f)?;
        let gamma1 = gamma_one(params, limits.v_max);
        let gamma_d = desired_gamma(spec.k_aggr, gamma0, gamma1);
        let s_r = rendezvous_space(spec.z0, gamma_d)?;
        let t_r = space_to_time(s_r, spec.v0, spec.vf, s_r);
        Ok(Self {
            gamma0,
            gamma1,
            gamma_d,
            s_r,
            t_r,
            z0: spec.z0,
            v0: spec.v0,
            vf: spec.vf,
            t0: spec.t0,
        })
    }

    /// Desired vertical error as a function of manoeuvre arc length.
    pub fn vertical_error(&self, s: f64) -> f64 {
        if s >= self.s_r {
            0.0
        } else {
            self.z0 - s * self.gamma_d.sin()
        }
    }

    pub fn speed(&self, s: f64) -> f64 {
        desired_speed(s, self.v0, self.vf, self.s_r)
    }

    pub fn time_of_space(&self, s: f64) -> f64 {
        if s <= self.s_r {
            space_to_time(s, self.v0, self.vf, self.s_r)
        } else {
            self.t_r + (s - self.s_r) / self.vf
        }
    }

    /// Manoeuvre arc length covered `tau` seconds after the start.
    pub fn space_of_time(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            0.0
        } else if tau <= self.t_r {
            time_to_space(tau, self.v0, self.vf, self.s_r).min(self.s_r)
        } else {
            self.s_r + self.vf * (tau - self.t_r)
        }
    }

    /// Desired `(e_z, v_G, s_G)` at absolute time `t`, including the level
    /// lead-in before `t0` and the hold after rendezvous.
    pub fn at_time(&self, t: f64) -> (f64, f64, f64) {
        if t < self.t0 {
            return (self.z0, self.v0, self.v0 * t);
        }
        let s = self.space_of_time(t - self.t0);
        (self.vertical_error(s), self.speed(s), self.v0 * self.t0 + s)
    }
}

/// Desired state-input curve on `grid`. Not dynamically feasible in general.
pub fn desired_curve(scenario: &Scenario, grid: Grid) -> Result<Curve> {
    let prof = DesiredProfiles::new(&scenario.spec, &scenario.params, &scenario.limits)?;
    let path = scenario.working_path();
    let mut states = Vec::with_capacity(grid.len);
    let mut inputs = Vec::with_capacity(grid.len);
    for t in grid.times() {
        let (e_z, v, s_g) = prof.at_time(t);
        states.push(StateVec::from([0.0, 0.0, e_z, 0.0, 0.0, 0.0, 0.0, v, s_g]));
        // level, wings-level trim at the airspeed implied by flying the path heading
        let chi = path.lookup(s_g)?.chi;
        let air = wind_triangle(v, chi, 0.0, &scenario.wind)?;
        let (u1, u3) = trim_level(air.v_a, &scenario.params, &scenario.limits)?;
        inputs.push(InputVec::new(u1, 0.0, u3, 0.0));
    }
    Ok(Curve {
        grid,
        states,
        inputs,
    })
}

/// Non-aggressive initial trajectory: the UAV holds level flight at `z0`
/// with constant course and ground speed `v0` while the UGV follows its path
/// at `v0`.
pub fn initial_trajectory(scenario: &Scenario, grid: Grid) -> Result<Trajectory> {
    let model = scenario.model();
    let x0 = scenario.initial_state()?;
    let air = wind_triangle(scenario.uav0.v, scenario.uav0.chi, scenario.uav0.gamma, &scenario.wind)?;
    let (u1, u3) = trim_level(air.v_a, &scenario.params, &scenario.limits)?;
    let inputs = vec![InputVec::new(u1, 0.0, u3, 0.0); grid.len];
    model.integrate(&x0, &inputs, grid)
}
