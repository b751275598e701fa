//! Vehicle parameters, aerodynamics, wind triangle and the decoupled UAV/UGV
//! equations of motion.
//!
//! Conventions: inertial frame with `z` pointing down, so `z <= 0` is above
//! ground. Angles are radians. The flight-path angle `gamma` is positive when
//! climbing (`z_dot = -v sin(gamma)`).

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Airframe and environment constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// Mass, kg.
    pub m: f64,
    /// Wing area, m².
    pub s: f64,
    /// Air density, kg/m³.
    pub rho: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Zero-lift drag coefficient.
    pub c_d0: f64,
    /// Induced drag factor.
    pub k_dl: f64,
}

impl VehicleParams {
    /// "Zagi" flying wing.
    pub fn zagi() -> Self {
        Self {
            m: 1.56,
            s: 0.2589,
            rho: 1.225,
            g: 9.81,
            c_d0: 0.01631,
            k_dl: 0.04525,
        }
    }

    pub fn weight(&self) -> f64 {
        self.m * self.g
    }

    /// `½ ρ S v²`, the factor multiplying every aerodynamic coefficient.
    pub fn pressure_area<T: Scalar>(&self, v_a: T) -> T {
        v_a * v_a * (0.5 * self.rho * self.s)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("params.m", self.m),
            ("params.s", self.s),
            ("params.rho", self.rho),
            ("params.g", self.g),
            ("params.c_d0", self.c_d0),
            ("params.k_dl", self.k_dl),
        ];
        for (key, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, "must be finite and strictly positive"));
            }
        }
        Ok(())
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::zagi()
    }
}

/// State, input and docking bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    pub v_min: f64,
    pub v_max: f64,
    pub nlf_min: f64,
    pub nlf_max: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub u1_max: f64,
    pub phi_max: f64,
    pub u2_max: f64,
    pub u3_max: f64,
    /// UGV friction-circle radius, m/s².
    pub a_max: f64,
    pub ebar_x: f64,
    pub ebar_y: f64,
    pub ebar_z: f64,
    pub ebar_chi: f64,
}

impl Limits {
    pub fn appendix() -> Self {
        Self {
            v_min: 12.0,
            v_max: 20.0,
            nlf_min: 0.95,
            nlf_max: 1.05,
            gamma_min: (-6.0f64).to_radians(),
            gamma_max: 10.0f64.to_radians(),
            u1_max: 2.0,
            phi_max: 24.0f64.to_radians(),
            u2_max: 5.0f64.to_radians(),
            u3_max: 0.7,
            a_max: 3.0,
            ebar_x: 30.0,
            ebar_y: 30.0,
            ebar_z: 30.0,
            ebar_chi: 2.0f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("limits.v_min", self.v_min),
            ("limits.v_max", self.v_max),
            ("limits.nlf_min", self.nlf_min),
            ("limits.nlf_max", self.nlf_max),
            ("limits.gamma_min", self.gamma_min),
            ("limits.gamma_max", self.gamma_max),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::validation(key, "must be finite"));
            }
        }
        let positive = [
            ("limits.v_min", self.v_min),
            ("limits.u1_max", self.u1_max),
            ("limits.phi_max", self.phi_max),
            ("limits.u2_max", self.u2_max),
            ("limits.u3_max", self.u3_max),
            ("limits.a_max", self.a_max),
            ("limits.ebar_x", self.ebar_x),
            ("limits.ebar_y", self.ebar_y),
            ("limits.ebar_z", self.ebar_z),
            ("limits.ebar_chi", self.ebar_chi),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, "must be finite and strictly positive"));
            }
        }
        if self.v_min >= self.v_max {
            return Err(Error::validation("limits.v_max", "must exceed v_min"));
        }
        if self.nlf_min >= self.nlf_max {
            return Err(Error::validation("limits.nlf_max", "must exceed nlf_min"));
        }
        if !(self.gamma_min < 0.0 && self.gamma_max > 0.0) {
            return Err(Error::validation(
                "limits.gamma_min",
                "flight-path bounds must bracket zero",
            ));
        }
        Ok(())
    }
}

impl Default for Limits {
    fn default() -> Self {
        Self::appendix()
    }
}

/// Constant inertial wind velocity, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wind {
    #[serde(rename = "wx")]
    pub w_x: f64,
    #[serde(rename = "wy")]
    pub w_y: f64,
    #[serde(rename = "wz")]
    pub w_z: f64,
}

impl Wind {
    pub const fn new(w_x: f64, w_y: f64, w_z: f64) -> Self {
        Self { w_x, w_y, w_z }
    }

    pub const fn calm() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn speed(&self) -> f64 {
        (self.w_x * self.w_x + self.w_y * self.w_y + self.w_z * self.w_z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Ground speed, m/s.
    pub v: f64,
    pub gamma: f64,
    pub chi: f64,
    pub phi: f64,
}

impl UavState {
    pub fn to_array(&self) -> [f64; 7] {
        [self.x, self.y, self.z, self.v, self.gamma, self.chi, self.phi]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            v: a[3],
            gamma: a[4],
            chi: a[5],
            phi: a[6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UavInput {
    /// Thrust, N.
    pub thrust: f64,
    /// Roll rate, rad/s.
    pub roll_rate: f64,
    /// Lift coefficient.
    pub lift_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UgvState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub chi: f64,
}

/// Air-relative velocity description obtained from the wind triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirData {
    /// Airspeed, m/s.
    pub v_a: f64,
    /// Air-mass-referenced flight-path angle, rad.
    pub gamma_a: f64,
    /// Heading, rad.
    pub psi: f64,
}

/// Wind triangle: airspeed, air-relative flight-path angle and heading from the
/// ground-referenced speed, course and flight-path angle.
pub fn wind_triangle(v: f64, chi: f64, gamma: f64, wind: &Wind) -> Result<AirData> {
    let (v_a, gamma_a, psi) = air_data(v, chi, gamma, wind)?;
    Ok(AirData { v_a, gamma_a, psi })
}

/// Generic form of [`wind_triangle`] returning `(v_a, gamma_a, psi)`.
pub fn air_data<T: Scalar>(v: T, chi: T, gamma: T, wind: &Wind) -> Result<(T, T, T)> {
    if *wind == Wind::calm() && v.re() > 0.0 {
        return Ok((v, gamma, chi));
    }
    let (sc, cc) = chi.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    let along = cc * cg * wind.w_x + sc * cg * wind.w_y - sg * wind.w_z;
    let vw2 = wind.w_x * wind.w_x + wind.w_y * wind.w_y + wind.w_z * wind.w_z;
    let va2 = v * v - v * along * 2.0 + vw2;
    if !(va2.re() > 0.0) {
        return Err(Error::domain(format!(
            "airspeed vanishes (v = {}, wind = {:?})",
            v.re(),
            wind
        )));
    }
    let v_a = va2.sqrt();
    let s_ga = (v * sg + wind.w_z) / v_a;
    if s_ga.re().abs() > 1.0 {
        return Err(Error::domain("air flight-path angle argument exceeds 1"));
    }
    let gamma_a = s_ga.asin();
    let cross = (sc * (-wind.w_x) + cc * wind.w_y) / (v_a * gamma_a.cos());
    if cross.re().abs() > 1.0 {
        return Err(Error::domain("crab angle argument exceeds 1"));
    }
    let psi = chi - cross.asin();
    Ok((v_a, gamma_a, psi))
}

/// Lift and drag, N.
pub fn aero_forces(v_a: f64, lift_coeff: f64, params: &VehicleParams) -> (f64, f64) {
    lift_drag(v_a, lift_coeff, params)
}

pub(crate) fn lift_drag<T: Scalar>(v_a: T, c_l: T, params: &VehicleParams) -> (T, T) {
    let qs = params.pressure_area(v_a);
    let lift = qs * c_l;
    let drag = qs * (c_l * c_l * params.k_dl + params.c_d0);
    (lift, drag)
}

pub fn load_factor(lift: f64, params: &VehicleParams) -> f64 {
    lift / params.weight()
}

/// Right-hand side of the UAV point-mass model. State order
/// `(x, y, z, v, gamma, chi, phi)`, input order `(thrust, roll rate, C_L)`.
pub fn uav_rhs<T: Scalar>(
    x: &[T; 7],
    u: &[T; 3],
    wind: &Wind,
    params: &VehicleParams,
) -> Result<[T; 7]> {
    let [_, _, _, v, gamma, chi, phi] = *x;
    let [thrust, roll_rate, c_l] = *u;
    let (v_a, _, psi) = air_data(v, chi, gamma, wind)?;
    let (sg, cg) = gamma.sin_cos();
    if (v * cg).re() == 0.0 {
        return Err(Error::domain("course rate singular: v cos(gamma) = 0"));
    }
    let (sc, cc) = chi.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let (lift, drag) = lift_drag(v_a, c_l, params);
    let m = params.m;
    let g = params.g;
    Ok([
        v * cc * cg,
        v * sc * cg,
        -v * sg,
        (thrust - drag) / m - sg * g,
        (lift * cp / m - cg * g) / v,
        lift * sp * (chi - psi).cos() / (v * cg * m),
        roll_rate,
    ])
}

pub fn uav_dynamics(
    x: &UavState,
    u: &UavInput,
    wind: &Wind,
    params: &VehicleParams,
) -> Result<UavState> {
    let d = uav_rhs(
        &x.to_array(),
        &[u.thrust, u.roll_rate, u.lift_coeff],
        wind,
        params,
    )?;
    Ok(UavState::from_array(d))
}

/// UGV planar point mass driven by longitudinal acceleration along a path of
/// curvature `sigma`.
pub fn ugv_dynamics(x: &UgvState, accel: f64, sigma: f64) -> UgvState {
    UgvState {
        x: x.v * x.chi.cos(),
        y: x.v * x.chi.sin(),
        v: accel,
        chi: x.v * sigma,
    }
}

/// Constant inputs holding level, wings-level flight at airspeed `v_a`.
/// Returns `(thrust, C_L)`.
pub fn trim_level(v_a: f64, params: &VehicleParams, limits: &Limits) -> Result<(f64, f64)> {
    if !(v_a > 0.0) {
        return Err(Error::domain(format!("trim airspeed must be positive, got {v_a}")));
    }
    let qs = params.pressure_area(v_a);
    let c_l = params.weight() / qs;
    let thrust = qs * (params.c_d0 + params.k_dl * c_l * c_l);
    if thrust > limits.u1_max {
        return Err(Error::InfeasibleTrim(format!(
            "level trim at v_a = {v_a} needs thrust {thrust:.4} N > {}",
            limits.u1_max
        )));
    }
    if c_l > limits.u3_max {
        return Err(Error::InfeasibleTrim(format!(
            "level trim at v_a = {v_a} needs C_L {c_l:.4} > {}",
            limits.u3_max
        )));
    }
    Ok((thrust, c_l))
}

/// Constant inputs holding a wings-level glide/descent at airspeed `v_a` and
/// flight-path angle `gamma <= 0`. Returns `(thrust, C_L)`.
pub fn trim_descent(v_a: f64, gamma: f64, params: &VehicleParams) -> Result<(f64, f64)> {
    if gamma > 0.0 {
        return Err(Error::domain(format!("descent trim needs gamma <= 0, got {gamma}")));
    }
    let (thrust, c_l) = descent_trim_unchecked(v_a, gamma, params);
    if thrust < 0.0 {
        return Err(Error::InfeasibleTrim(format!(
            "descent at gamma = {:.3} deg needs negative thrust {thrust:.4} N",
            gamma.to_degrees()
        )));
    }
    Ok((thrust, c_l))
}

fn descent_trim_unchecked(v_a: f64, gamma: f64, params: &VehicleParams) -> (f64, f64) {
    let qs = params.pressure_area(v_a);
    let c_l = params.weight() * gamma.cos() / qs;
    let thrust = params.weight() * gamma.sin() + qs * (params.c_d0 + params.k_dl * c_l * c_l);
    (thrust, c_l)
}

/// Small-angle estimate of the steepest zero-thrust descent at `v_max`.
pub fn gamma_one_small_angle(params: &VehicleParams, v_max: f64) -> f64 {
    let qs = params.pressure_area(v_max);
    let c_l = params.weight() / qs;
    -(qs / params.weight()) * (params.c_d0 + params.k_dl * c_l * c_l)
}

/// Steepest constant descent angle at `v_max` that trims with zero thrust.
///
/// Starts from the small-angle closed form and polishes it with Newton's
/// method on the exact trim thrust, so that `trim_descent(v_max, gamma_one)`
/// returns zero thrust to machine precision.
pub fn gamma_one(params: &VehicleParams, v_max: f64) -> f64 {
    let w = params.weight();
    let qs = params.pressure_area(v_max);
    let c = w / qs;
    let mut gamma = gamma_one_small_angle(params, v_max);
    for _ in 0..50 {
        let (thrust, _) = descent_trim_unchecked(v_max, gamma, params);
        let slope = w * gamma.cos() - 2.0 * qs * params.k_dl * c * c * gamma.cos() * gamma.sin();
        let step = thrust / slope;
        gamma -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    gamma
}

/// Wrap an angle difference to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}
