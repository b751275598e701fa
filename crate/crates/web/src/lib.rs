//! WebAssembly bindings for the interactive page in `www/`: the closed-form
//! prediction table, desired descent profiles and descent trim curves.
//!
//! Each exported function returns a JSON document; the `*_data` functions
//! hold the logic and are usable from native Rust as well.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use rendezvous::guidance::{desired_curve, DesiredProfiles};
use rendezvous::models::{gamma_one, trim_descent};
use rendezvous::scenarios::{preset, Scenario};
use rendezvous::{Error, Result};

/// Samples per trim curve.
const TRIM_SAMPLES: usize = 41;
/// Coarsest grid step offered for the profile plot, s.
const MAX_PROFILE_STEP: f64 = 5.0;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PredictRow {
    pub k: f64,
    pub gamma_d_deg: f64,
    pub s_r: f64,
    pub t_r: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Profile {
    pub k: f64,
    pub t: Vec<f64>,
    /// Desired vertical error, m (negative above the UGV).
    pub e_z: Vec<f64>,
    /// Desired UGV speed, m/s.
    pub v_g: Vec<f64>,
    /// Manoeuvre start and desired rendezvous instant, s.
    pub t0: f64,
    pub t_rendezvous: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrimCurve {
    pub v_a: f64,
    pub gamma_one_deg: f64,
    pub gamma_deg: Vec<f64>,
    pub thrust: Vec<f64>,
    pub lift_coeff: Vec<f64>,
}

fn scenario(name: &str, k: f64) -> Result<Scenario> {
    let mut sc = preset(name)?;
    sc.spec.k_aggr = k;
    sc.spec.validate(&sc.limits)?;
    Ok(sc)
}

fn invalid(key: &str, msg: String) -> Error {
    Error::Validation { key: key.into(), msg }
}

fn to_json(value: &impl Serialize) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))
}

/// Closed-form descent angle, rendezvous distance and time for each index.
pub fn predict_data(name: &str, ks: &[f64]) -> Result<Vec<PredictRow>> {
    ks.iter()
        .map(|&k| {
            let sc = scenario(name, k)?;
            let p = DesiredProfiles::new(&sc.spec, &sc.params, &sc.limits)?;
            Ok(PredictRow {
                k,
                gamma_d_deg: p.gamma_d.to_degrees(),
                s_r: p.s_r,
                t_r: p.t_r,
            })
        })
        .collect()
}

/// Desired vertical error and UGV speed over the scenario horizon.
pub fn profile_data(name: &str, k: f64, step: f64) -> Result<Profile> {
    if !(step > 0.0 && step <= MAX_PROFILE_STEP) {
        return Err(invalid("step", format!("must lie in (0, {MAX_PROFILE_STEP}] s")));
    }
    let sc = scenario(name, k)?;
    let p = DesiredProfiles::new(&sc.spec, &sc.params, &sc.limits)?;
    let grid = sc.grid(step);
    let curve = desired_curve(&sc, grid)?;
    Ok(Profile {
        k,
        t: grid.times().collect(),
        e_z: curve.states.iter().map(|x| x[2]).collect(),
        v_g: curve.states.iter().map(|x| x[7]).collect(),
        t0: sc.spec.t0,
        t_rendezvous: sc.spec.t0 + p.t_r,
    })
}

/// Wings-level descent trim over `[gamma_1(v_a), 0]` at airspeed `v_a`.
pub fn trim_data(v_a: f64) -> Result<TrimCurve> {
    let sc = preset("straight")?;
    if !(v_a >= sc.limits.v_min && v_a <= sc.limits.v_max) {
        return Err(invalid(
            "v_a",
            format!("must lie in [{}, {}] m/s", sc.limits.v_min, sc.limits.v_max),
        ));
    }
    let g1 = gamma_one(&sc.params, v_a);
    let mut curve = TrimCurve {
        v_a,
        gamma_one_deg: g1.to_degrees(),
        gamma_deg: Vec::with_capacity(TRIM_SAMPLES),
        thrust: Vec::with_capacity(TRIM_SAMPLES),
        lift_coeff: Vec::with_capacity(TRIM_SAMPLES),
    };
    for i in 0..TRIM_SAMPLES {
        let gamma = g1 * (1.0 - i as f64 / (TRIM_SAMPLES - 1) as f64);
        // the steepest sample can come out a rounding error below zero thrust
        let (thrust, c_l) = trim_descent(v_a, gamma, &sc.params).or_else(|e| match e {
            Error::InfeasibleTrim(_) if i == 0 => trim_descent(v_a, gamma * (1.0 - 1e-12), &sc.params),
            e => Err(e),
        })?;
        curve.gamma_deg.push(gamma.to_degrees());
        curve.thrust.push(thrust);
        curve.lift_coeff.push(c_l);
    }
    Ok(curve)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// JSON array of `{k, gamma_d_deg, s_r, t_r}` rows.
#[wasm_bindgen]
pub fn predict(scenario: &str, ks: &[f64]) -> std::result::Result<String, JsError> {
    js(predict_data(scenario, ks).and_then(|r| to_json(&r)))
}

/// JSON object with the time grid, desired `e_z` and UGV speed.
#[wasm_bindgen]
pub fn desired_profile(scenario: &str, k: f64, step: f64) -> std::result::Result<String, JsError> {
    js(profile_data(scenario, k, step).and_then(|p| to_json(&p)))
}

/// JSON object with thrust and lift coefficient along the descent trim curve.
#[wasm_bindgen]
pub fn trim_curve(v_a: f64) -> std::result::Result<String, JsError> {
    js(trim_data(v_a).and_then(|c| to_json(&c)))
}
