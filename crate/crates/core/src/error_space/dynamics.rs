use nalgebra::SVector;
use num_dual::{jacobian, DualSVec64};

use super::integrate::rk4_span;
use super::{error_to_inertial, Grid, Trajectory};
use crate::models::{air_data, lift_drag, UavState, UgvState, VehicleParams, Wind};
use crate::scenarios::Path;
use crate::{Error, InputMat, InputVec, Result, Scalar, StateMat, StateVec, NU, NX};

const NZ: usize = NX + NU;
type Ad = DualSVec64<NZ>;

/// Everything the coupled dynamics depend on besides state and input.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledModel {
    pub wind: Wind,
    pub params: VehicleParams,
    pub path: Path,
}

impl CoupledModel {
    pub fn new(wind: Wind, params: VehicleParams, path: Path) -> Self {
        Self { wind, params, path }
    }

    /// Coupled UAV–UGV error dynamics.
    ///
    /// State `(e_x, e_y, e_z, e_v, e_gamma, e_chi, e_phi, v_G, s_G)`, input
    /// `(u1, u2, u3, u4)`. The crab factor of the course-error equation is
    /// `cos(chi_A - psi_A)` with `chi_A = e_chi + chi_G(s_G)`.
    pub fn rhs<T: Scalar>(&self, x: &[T; NX], u: &[T; NU]) -> Result<[T; NX]> {
        let seg = self.path.segment_at(x[8].re())?;
        self.rhs_on(seg, x, u)
    }

    /// Right-hand side with the path heading taken from segment `seg`.
    fn rhs_on<T: Scalar>(&self, seg: usize, x: &[T; NX], u: &[T; NU]) -> Result<[T; NX]> {
        let [e_x, e_y, _, e_v, e_gamma, e_chi, e_phi, v_g, s_g] = *x;
        let [thrust, roll_rate, c_l, accel] = *u;
        let v = e_v + v_g;
        if !(v.re() > 0.0) {
            return Err(Error::domain(format!("UAV ground speed e_v + v_G = {} <= 0", v.re())));
        }
        let (sg, cg) = e_gamma.sin_cos();
        if cg.re().abs() < 1e-12 {
            return Err(Error::domain("cos(e_gamma) = 0"));
        }
        let (chi_g, sigma) = self.path.heading_on(seg, s_g);
        let chi_a = e_chi + chi_g;
        let (v_a, _, psi) = air_data(v, chi_a, e_gamma, &self.wind)?;
        let (lift, drag) = lift_drag(v_a, c_l, &self.params);
        let m = self.params.m;
        let g = self.params.g;
        let (sc, cc) = e_chi.sin_cos();
        let (sp, cp) = e_phi.sin_cos();
        Ok([
            v * cc * cg - (-(e_y * sigma) + 1.0) * v_g,
            v * sc * cg - e_x * v_g * sigma,
            -v * sg,
            (thrust - drag) / m - sg * g - accel,
            (lift * cp / m - cg * g) / v,
            lift * sp * (chi_a - psi).cos() / (v * cg * m) - v_g * sigma,
            roll_rate,
            accel,
            v_g,
        ])
    }

    pub fn rhs_vec(&self, x: &StateVec, u: &InputVec) -> Result<StateVec> {
        Ok(StateVec::from(self.rhs(&(*x).into(), &(*u).into())?))
    }

    /// Continuous-time Jacobians `(df/dx, df/du)` by forward-mode differentiation.
    pub fn linearize(&self, x: &StateVec, u: &InputVec) -> Result<(StateMat, InputMat)> {
        self.rhs_vec(x, u)?;
        let (_, j) = jacobian(
            |z: SVector<Ad, NZ>| {
                let (xs, us) = split(&z);
                SVector::from(self.rhs(&xs, &us).unwrap_or([Ad::from(f64::NAN); NX]))
            },
            &join(x, u),
        );
        Ok(split_jacobian(&j))
    }

    /// One RK4 step of length `h` with the input held constant.
    ///
    /// Under a held input `s_G` is quadratic in time, so the step is split
    /// exactly where the UGV crosses a curvature jump and each piece is
    /// integrated on a smooth field.
    pub fn step<T: Scalar>(&self, x: &[T; NX], u: &[T; NU], h: f64) -> Result<[T; NX]> {
        let (s0, v, a) = (x[8], x[7], u[3]);
        let s1 = s0.re() + v.re() * h + 0.5 * a.re() * h * h;
        let mut seg = self.path.segment_at(s0.re())?;
        self.path.segment_at(s1)?;
        let last = self.path.segments().len() - 1;
        let mut y = *x;
        let mut elapsed = T::zero();
        loop {
            let (knot, next) = if s1 > s0.re() && seg < last && self.path.knot_s(seg + 1) < s1 {
                (self.path.knot_s(seg + 1), seg + 1)
            } else if s1 < s0.re() && seg > 0 && self.path.knot_s(seg) > s1 {
                (self.path.knot_s(seg), seg - 1)
            } else {
                break;
            };
            let Some(tau) = crossing_time(s0, v, a, knot, h) else {
                break;
            };
            y = rk4_span(|z| self.rhs_on(seg, z, u), &y, tau - elapsed)?;
            elapsed = tau;
            seg = next;
        }
        rk4_span(|z| self.rhs_on(seg, z, u), &y, T::from(h) - elapsed)
    }

    pub fn step_vec(&self, x: &StateVec, u: &InputVec, h: f64) -> Result<StateVec> {
        Ok(StateVec::from(self.step(&(*x).into(), &(*u).into(), h)?))
    }

    /// Jacobians of the discrete step map, exact up to round-off.
    pub fn step_jacobians(&self, x: &StateVec, u: &InputVec, h: f64) -> Result<(StateMat, InputMat)> {
        self.step_vec(x, u, h)?;
        let (_, j) = jacobian(
            |z: SVector<Ad, NZ>| {
                let (xs, us) = split(&z);
                SVector::from(self.step(&xs, &us, h).unwrap_or([Ad::from(f64::NAN); NX]))
            },
            &join(x, u),
        );
        Ok(split_jacobian(&j))
    }

    /// Roll the discrete dynamics out from `x0` with one held input per interval.
    /// `inputs` has one entry per grid node; the last one does not affect the states.
    pub fn integrate(&self, x0: &StateVec, inputs: &[InputVec], grid: Grid) -> Result<Trajectory> {
        if inputs.len() != grid.len {
            return Err(Error::solver(
                format!("{} inputs for a grid of {} nodes", inputs.len(), grid.len),
                None,
            ));
        }
        let mut states = Vec::with_capacity(grid.len);
        states.push(*x0);
        for k in 0..grid.len.saturating_sub(1) {
            let next = self
                .step_vec(&states[k], &inputs[k], grid.step)
                .map_err(|e| e.at_time(grid.time(k)))?;
            states.push(next);
        }
        Ok(Trajectory {
            grid,
            states,
            inputs: inputs.to_vec(),
            anchor: self.ugv_state(x0)?,
        })
    }

    /// Largest per-step discrepancy between stored states and a fresh RK4 step.
    pub fn max_defect(&self, traj: &Trajectory) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..traj.grid.len.saturating_sub(1) {
            let next = self.step_vec(&traj.states[k], &traj.inputs[k], traj.grid.step)?;
            worst = worst.max((next - traj.states[k + 1]).amax());
        }
        Ok(worst)
    }

    pub fn ugv_state(&self, x: &StateVec) -> Result<UgvState> {
        let p = self.path.lookup(x[8])?;
        Ok(UgvState {
            x: p.x,
            y: p.y,
            v: x[7],
            chi: p.chi,
        })
    }

    /// Inertial UAV state reconstructed from error coordinates.
    pub fn uav_state(&self, x: &StateVec) -> Result<UavState> {
        let ugv = self.ugv_state(x)?;
        let [px, py, pz] = error_to_inertial([x[0], x[1], x[2]], &ugv);
        Ok(UavState {
            x: px,
            y: py,
            z: pz,
            v: x[3] + x[7],
            gamma: x[4],
            chi: x[5] + ugv.chi,
            phi: x[6],
        })
    }

    /// Airspeed and load factor at a node.
    pub fn air_diagnostics(&self, x: &StateVec, u: &InputVec) -> Result<(f64, f64)> {
        let (chi_g, _) = self.path.heading(x[8])?;
        let (v_a, _, _) = air_data(x[3] + x[7], x[5] + chi_g, x[4], &self.wind)?;
        let (lift, _) = lift_drag(v_a, u[2], &self.params);
        Ok((v_a, lift / self.params.weight()))
    }
}

/// First `tau` in `[0, h]` with `s0 + v tau + a tau^2 / 2 = knot`.
fn crossing_time<T: Scalar>(s0: T, v: T, a: T, knot: f64, h: f64) -> Option<T> {
    let d = -s0 + knot;
    let disc = v * v + a * d * 2.0;
    if disc.re() < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let sign = if v.re() != 0.0 { v.re().signum() } else { a.re().signum() };
    let denom = v + root * sign;
    if denom.re() == 0.0 {
        return None;
    }
    let tau = d * 2.0 / denom;
    (tau.re() >= 0.0 && tau.re() <= h).then_some(tau)
}

fn join(x: &StateVec, u: &InputVec) -> SVector<f64, NZ> {
    SVector::from_iterator(x.iter().chain(u.iter()).copied())
}

fn split<T: Scalar>(z: &SVector<T, NZ>) -> ([T; NX], [T; NU]) {
    (
        std::array::from_fn(|i| z[i]),
        std::array::from_fn(|i| z[NX + i]),
    )
}

fn split_jacobian(j: &nalgebra::SMatrix<f64, NX, NZ>) -> (StateMat, InputMat) {
    (
        j.fixed_view::<NX, NX>(0, 0).into_owned(),
        j.fixed_view::<NX, NU>(0, NX).into_owned(),
    )
}
