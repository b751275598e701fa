use super::{inertial_to_error, CoupledInput, CoupledModel};
use crate::models::{uav_rhs, UgvState};
use crate::{Result, Scalar, StateVec, NU, NX};

/// Classical fourth-order Runge–Kutta step. `f` receives the stage offset
/// (`0`, `h/2`, `h/2`, `h`) and the stage state.
pub fn rk4_step<T: Scalar, const N: usize>(
    f: impl Fn(f64, &[T; N]) -> Result<[T; N]>,
    x: &[T; N],
    h: f64,
) -> Result<[T; N]> {
    let axpy = |a: f64, k: &[T; N]| -> [T; N] { std::array::from_fn(|i| x[i] + k[i] * a) };
    let k1 = f(0.0, x)?;
    let k2 = f(0.5 * h, &axpy(0.5 * h, &k1))?;
    let k3 = f(0.5 * h, &axpy(0.5 * h, &k2))?;
    let k4 = f(h, &axpy(h, &k3))?;
    Ok(std::array::from_fn(|i| {
        x[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0)
    }))
}

/// RK4 step of autonomous dynamics with a step length that may itself carry derivatives.
pub(crate) fn rk4_span<T: Scalar, const N: usize>(
    f: impl Fn(&[T; N]) -> Result<[T; N]>,
    x: &[T; N],
    h: T,
) -> Result<[T; N]> {
    let half = h * 0.5;
    let axpy = |a: T, k: &[T; N]| -> [T; N] { std::array::from_fn(|i| x[i] + k[i] * a) };
    let k1 = f(x)?;
    let k2 = f(&axpy(half, &k1))?;
    let k3 = f(&axpy(half, &k2))?;
    let k4 = f(&axpy(h, &k3))?;
    let sixth = h / 6.0;
    Ok(std::array::from_fn(|i| {
        x[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * sixth
    }))
}

/// Integrate the coupled error system and, independently, the decoupled UAV
/// and UGV models under the same input signal, map the latter into error
/// coordinates and return the largest component-wise deviation.
pub fn equivalence_check(
    model: &CoupledModel,
    x0: &StateVec,
    input: impl Fn(f64) -> CoupledInput,
    duration: f64,
    h: f64,
) -> Result<f64> {
    equivalence_check_with(|x, u| model.rhs(x, u), model, x0, input, duration, h)
}

/// [`equivalence_check`] with a caller-supplied coupled right-hand side.
pub fn equivalence_check_with(
    coupled: impl Fn(&[f64; NX], &[f64; NU]) -> Result<[f64; NX]>,
    model: &CoupledModel,
    x0: &StateVec,
    input: impl Fn(f64) -> CoupledInput,
    duration: f64,
    h: f64,
) -> Result<f64> {
    let uav0 = model.uav_state(x0)?;
    let ugv0 = model.ugv_state(x0)?;
    // UAV (x, y, z, v, gamma, chi, phi) followed by UGV (x, y, v, chi, s)
    let mut split: [f64; 12] = [
        uav0.x, uav0.y, uav0.z, uav0.v, uav0.gamma, uav0.chi, uav0.phi, ugv0.x, ugv0.y, ugv0.v,
        ugv0.chi, x0[8],
    ];
    let mut joint: [f64; NX] = (*x0).into();
    let decoupled = |t: f64, y: &[f64; 12]| -> Result<[f64; 12]> {
        let u = input(t);
        let uav: [f64; 7] = std::array::from_fn(|i| y[i]);
        let a = uav_rhs(&uav, &[u.thrust, u.roll_rate, u.lift_coeff], &model.wind, &model.params)?;
        let sigma = model.path.curvature(y[11])?;
        let (v_g, chi_g) = (y[9], y[10]);
        Ok([
            a[0],
            a[1],
            a[2],
            a[3],
            a[4],
            a[5],
            a[6],
            v_g * chi_g.cos(),
            v_g * chi_g.sin(),
            u.ugv_accel,
            v_g * sigma,
            v_g,
        ])
    };

    let steps = (duration / h).round() as usize;
    let mut worst = 0.0f64;
    for n in 0..steps {
        let t = n as f64 * h;
        joint = rk4_step(
            |dt, y| {
                let u = input(t + dt);
                coupled(y, &[u.thrust, u.roll_rate, u.lift_coeff, u.ugv_accel])
            },
            &joint,
            h,
        )?;
        split = rk4_step(|dt, y| decoupled(t + dt, y), &split, h)?;

        let ugv = UgvState {
            x: split[7],
            y: split[8],
            v: split[9],
            chi: split[10],
        };
        let e = inertial_to_error([split[0], split[1], split[2]], &ugv);
        let mapped = [
            e[0],
            e[1],
            e[2],
            split[3] - split[9],
            split[4],
            split[5] - split[10],
            split[6],
            split[9],
            split[11],
        ];
        for i in 0..NX {
            worst = worst.max((mapped[i] - joint[i]).abs());
        }
    }
    Ok(worst)
}
