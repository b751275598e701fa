//! UGV paths, the two reference scenarios and JSON configuration.

mod config;
mod path;

pub use config::{load_config, load_scenario, RunConfig};
pub use path::{Path, PathPoint, Pose, Segment};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use crate::error_space::{inertial_to_error, CoupledModel, Grid};
use crate::guidance::RendezvousSpec;
use crate::models::{Limits, UavState, UgvState, VehicleParams, Wind};
use crate::{Error, Result, StateVec};

/// Extra UGV path kept beyond the nominal travel `v0 * T`.
const PATH_MARGIN: f64 = 200.0;

/// A fully resolved rendezvous problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub path: Path,
    pub wind: Wind,
    pub params: VehicleParams,
    pub limits: Limits,
    pub spec: RendezvousSpec,
    /// UAV state at `t = 0`.
    pub uav0: UavState,
    /// UGV state at `t = 0`; its pose is the path start.
    pub ugv0: UgvState,
}

fn spec_defaults(k_aggr: f64) -> RendezvousSpec {
    let (z0, s_f, v0, vf, t0) = (-50.0, 2000.0, 18.0, 13.8, 50.0);
    RendezvousSpec {
        k_aggr,
        z0,
        s_f,
        v0,
        vf,
        t0,
        horizon: RendezvousSpec::default_horizon(z0, s_f, v0, vf, t0),
    }
}

fn co_located(chi: f64, path: Path, name: &str) -> Scenario {
    let spec = spec_defaults(0.0);
    let start = path.start();
    Scenario {
        name: name.to_string(),
        path,
        wind: Wind::new(-4.33, 2.5, 0.0),
        params: VehicleParams::zagi(),
        limits: Limits::appendix(),
        spec,
        uav0: UavState {
            x: 0.0,
            y: 0.0,
            z: spec.z0,
            v: spec.v0,
            gamma: 0.0,
            chi,
            phi: 0.0,
        },
        ugv0: UgvState {
            x: start.x,
            y: start.y,
            v: spec.v0,
            chi: start.chi,
        },
    }
}

/// Straight road heading north-east, UAV above the UGV at 50 m.
pub fn preset_straight() -> Scenario {
    let path = Path::straight(
        Pose {
            x: 0.0,
            y: 0.0,
            chi: FRAC_PI_4,
        },
        5000.0,
    )
    .expect("valid preset path");
    co_located(FRAC_PI_4, path, "straight")
}

/// Length of the clothoid easing into and out of the preset turn, m.
pub const TURN_TRANSITION: f64 = 10.0;

/// 1200 m straight, 90° left turn of radius 35 m, 1200 m straight. Short
/// clothoids ease the curvature in and out so that the lateral acceleration
/// is continuous along the path; the total heading change stays 90°.
pub fn preset_turn90() -> Scenario {
    let sigma = 1.0 / 35.0;
    let path = Path::new(
        Pose::default(),
        vec![
            Segment::straight(1200.0),
            Segment::clothoid(TURN_TRANSITION, 0.0, sigma),
            Segment::arc(35.0 * FRAC_PI_2 - TURN_TRANSITION, sigma),
            Segment::clothoid(TURN_TRANSITION, sigma, 0.0),
            Segment::straight(1200.0),
        ],
    )
    .expect("valid preset path");
    co_located(0.0, path, "turn90")
}

pub fn preset(name: &str) -> Result<Scenario> {
    match name {
        "straight" => Ok(preset_straight()),
        "turn90" => Ok(preset_turn90()),
        other => Err(Error::validation(
            "scenario",
            format!("unknown preset `{other}` (expected straight or turn90)"),
        )),
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.limits.validate()?;
        self.spec.validate(&self.limits)?;
        for (key, w) in [("wind.wx", self.wind.w_x), ("wind.wy", self.wind.w_y), ("wind.wz", self.wind.w_z)] {
            if !w.is_finite() {
                return Err(Error::validation(key, "must be finite"));
            }
        }
        if self.path.length() < self.spec.s_f {
            return Err(Error::validation(
                "path.segments",
                format!("path length {:.3} m is shorter than s_f = {}", self.path.length(), self.spec.s_f),
            ));
        }
        let start = self.path.start();
        if (self.ugv0.x - start.x).abs() > 1e-9
            || (self.ugv0.y - start.y).abs() > 1e-9
            || (self.ugv0.chi - start.chi).abs() > 1e-9
        {
            return Err(Error::validation("path", "UGV must start at the path start pose"));
        }
        if !(self.uav0.v > 0.0 && self.ugv0.v > 0.0) {
            return Err(Error::validation("spec.v0", "initial speeds must be positive"));
        }
        if self.uav0.z > 0.0 {
            return Err(Error::validation("uav.z", "UAV must start above ground (z <= 0)"));
        }
        Ok(())
    }

    /// Grid covering `[0, T]` with the given step.
    pub fn grid(&self, step: f64) -> Grid {
        Grid::covering(step, self.spec.horizon)
    }

    /// Path long enough for the UGV to travel at `v0` over the whole horizon.
    pub fn working_path(&self) -> Path {
        let needed = self.spec.v0.max(self.ugv0.v) * self.spec.horizon + PATH_MARGIN;
        match self.path.extended_to(needed) {
            Some(p) => {
                log::warn!(
                    "scenario `{}`: path extended from {:.1} m to {:.1} m by a terminal straight",
                    self.name,
                    self.path.length(),
                    p.length()
                );
                p
            }
            None => self.path.clone(),
        }
    }

    pub fn model(&self) -> CoupledModel {
        CoupledModel::new(self.wind, self.params, self.working_path())
    }

    /// Error-space state at `t = 0`.
    pub fn initial_state(&self) -> Result<StateVec> {
        let e = inertial_to_error([self.uav0.x, self.uav0.y, self.uav0.z], &self.ugv0);
        Ok(StateVec::from([
            e[0],
            e[1],
            e[2],
            self.uav0.v - self.ugv0.v,
            self.uav0.gamma,
            self.uav0.chi - self.ugv0.chi,
            self.uav0.phi,
            self.ugv0.v,
            0.0,
        ]))
    }

    /// Serializable view used for manifests.
    pub fn summary(&self) -> ScenarioSummary {
        ScenarioSummary {
            name: self.name.clone(),
            path_start: self.path.start(),
            segments: self.path.segments().to_vec(),
            wind: self.wind,
            params: self.params,
            limits: self.limits,
            spec: self.spec,
            uav0: self.uav0,
            ugv0: self.ugv0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub path_start: Pose,
    pub segments: Vec<Segment>,
    pub wind: Wind,
    pub params: VehicleParams,
    pub limits: Limits,
    pub spec: RendezvousSpec,
    pub uav0: UavState,
    pub ugv0: UgvState,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn straight_preset_values() {
        let s = preset_straight();
        s.validate().unwrap();
        assert_eq!(s.spec.s_f, 2000.0);
        assert_eq!(s.wind, Wind::new(-4.33, 2.5, 0.0));
        assert_eq!(s.spec.vf, 13.8);
        assert_relative_eq!(s.spec.vf, 1.15 * s.limits.v_min, epsilon = 1e-12);
        assert_eq!((s.spec.v0, s.spec.t0, s.spec.z0), (18.0, 50.0, -50.0));
        assert_eq!((s.uav0.x, s.uav0.y, s.uav0.z), (0.0, 0.0, -50.0));
        assert_eq!(s.uav0.chi, FRAC_PI_4);
        assert_eq!(s.ugv0.chi, FRAC_PI_4);
        assert_eq!((s.uav0.gamma, s.uav0.phi), (0.0, 0.0));
    }

    #[test]
    fn turn_preset_values() {
        let s = preset_turn90();
        s.validate().unwrap();
        assert!((s.path.length() - 2464.98).abs() < 0.01);
        assert_eq!(s.path.curvature(1215.0).unwrap(), 1.0 / 35.0);
        assert!((s.path.curvature(1205.0).unwrap() - 0.5 / 35.0).abs() < 1e-15);
        let end = s.path.lookup(s.path.length()).unwrap();
        assert!((end.chi - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(s.uav0.chi, 0.0);
        assert_eq!(s.ugv0.chi, 0.0);
        assert_eq!(s.spec.s_f, 2000.0);
    }

    #[test]
    fn default_horizon_value() {
        let s = preset_straight();
        assert!((s.spec.horizon - 214.48).abs() < 0.01, "{}", s.spec.horizon);
        assert_eq!(s.grid(0.05).len, 4291);
    }

    #[test]
    fn initial_state_is_aligned() {
        for s in [preset_straight(), preset_turn90()] {
            let x = s.initial_state().unwrap();
            assert_eq!(x, StateVec::from([0.0, 0.0, -50.0, 0.0, 0.0, 0.0, 0.0, 18.0, 0.0]));
        }
    }

    #[test]
    fn working_path_covers_horizon() {
        let s = preset_turn90();
        let p = s.working_path();
        assert!(p.length() >= 18.0 * s.spec.horizon);
        assert_eq!(p.curvature(1215.0).unwrap(), 1.0 / 35.0);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("loop"), Err(Error::Validation { .. })));
    }
}
