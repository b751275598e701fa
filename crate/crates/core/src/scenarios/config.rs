//! JSON run configuration. Every section is optional; missing values fall
//! back to the selected preset and the default solver settings.

use serde::Deserialize;

use super::{preset, Path, Pose, Scenario, Segment};
use crate::constraints::BarrierParams;
use crate::guidance::RendezvousSpec;
use crate::models::{Limits, VehicleParams};
use crate::trajopt::{LqrWeights, SolverOptions, Weights};
use crate::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    scenario: Option<String>,
    k_aggr: Option<f64>,
    wind: Option<WindDoc>,
    params: Option<VehicleParams>,
    limits: Option<Limits>,
    spec: Option<SpecDoc>,
    path: Option<PathDoc>,
    uav: Option<UavDoc>,
    weights: Option<Weights>,
    solver: Option<SolverDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindDoc {
    wx: Option<f64>,
    wy: Option<f64>,
    wz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    z0: Option<f64>,
    s_f: Option<f64>,
    v0: Option<f64>,
    vf: Option<f64>,
    t0: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathDoc {
    #[serde(default)]
    start: Option<Pose>,
    segments: Vec<Segment>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UavDoc {
    x: Option<f64>,
    y: Option<f64>,
    chi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverDoc {
    max_newton: Option<usize>,
    grad_tol: Option<f64>,
    step_tol: Option<f64>,
    step: Option<f64>,
    barrier: Option<BarrierParams>,
    lqr_reg: Option<LqrWeights>,
}

/// Scenario plus optimiser settings resolved from a configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub weights: Weights,
    pub solver: SolverOptions,
}

/// Parse and validate a configuration document.
pub fn load_config(text: &str) -> Result<RunConfig> {
    let doc: Document = if text.trim().is_empty() {
        Document::default()
    } else {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
    };
    let mut sc = preset(doc.scenario.as_deref().unwrap_or("straight"))?;

    if let Some(w) = doc.wind {
        sc.wind.w_x = w.wx.unwrap_or(sc.wind.w_x);
        sc.wind.w_y = w.wy.unwrap_or(sc.wind.w_y);
        sc.wind.w_z = w.wz.unwrap_or(sc.wind.w_z);
    }
    if let Some(p) = doc.params {
        sc.params = p;
    }
    if let Some(l) = doc.limits {
        sc.limits = l;
    }
    if let Some(k) = doc.k_aggr {
        sc.spec.k_aggr = k;
    }
    if let Some(s) = doc.spec {
        let explicit_horizon = s.horizon.is_some();
        let sp = &mut sc.spec;
        sp.z0 = s.z0.unwrap_or(sp.z0);
        sp.s_f = s.s_f.unwrap_or(sp.s_f);
        sp.v0 = s.v0.unwrap_or(sp.v0);
        sp.vf = s.vf.unwrap_or(sp.vf);
        sp.t0 = s.t0.unwrap_or(sp.t0);
        sp.horizon = match s.horizon {
            Some(t) => t,
            None => default_horizon(sp),
        };
        if !explicit_horizon && !sp.horizon.is_finite() {
            return Err(Error::validation("spec", "cannot derive a horizon from these values"));
        }
    }
    if let Some(p) = doc.path {
        let start = p.start.unwrap_or(sc.path.start());
        sc.path = Path::new(start, p.segments)?;
        sc.ugv0.x = start.x;
        sc.ugv0.y = start.y;
        sc.ugv0.chi = start.chi;
        // keep the UAV co-located with the new path start unless overridden below
        sc.uav0.x = start.x;
        sc.uav0.y = start.y;
        sc.uav0.chi = start.chi;
    }
    if let Some(u) = doc.uav {
        sc.uav0.x = u.x.unwrap_or(sc.uav0.x);
        sc.uav0.y = u.y.unwrap_or(sc.uav0.y);
        sc.uav0.chi = u.chi.unwrap_or(sc.uav0.chi);
    }
    sc.uav0.z = sc.spec.z0;
    sc.uav0.v = sc.spec.v0;
    sc.ugv0.v = sc.spec.v0;
    sc.validate()?;

    let weights = doc.weights.unwrap_or_default();
    weights.validate()?;
    let mut solver = SolverOptions::default();
    if let Some(s) = doc.solver {
        solver.max_newton = s.max_newton.unwrap_or(solver.max_newton);
        solver.grad_tol = s.grad_tol.unwrap_or(solver.grad_tol);
        solver.step_tol = s.step_tol.unwrap_or(solver.step_tol);
        solver.step = s.step.unwrap_or(solver.step);
        solver.barrier = s.barrier.unwrap_or(solver.barrier);
        solver.lqr_reg = s.lqr_reg.unwrap_or(solver.lqr_reg);
    }
    solver.validate()?;
    Ok(RunConfig {
        scenario: sc,
        weights,
        solver,
    })
}

fn default_horizon(sp: &RendezvousSpec) -> f64 {
    RendezvousSpec::default_horizon(sp.z0, sp.s_f, sp.v0, sp.vf, sp.t0)
}

/// Parse a configuration document and keep only the scenario.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    Ok(load_config(text)?.scenario)
}
