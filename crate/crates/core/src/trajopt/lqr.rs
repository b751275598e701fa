use nalgebra::SMatrix;

use crate::{Error, InputMat, Result, StateMat, NU, NX};

/// Feedback gain `u = mu + K (alpha - x)`.
pub type Gain = SMatrix<f64, NU, NX>;
pub type InputWeight = SMatrix<f64, NU, NU>;

/// Time-varying discrete LQR gains for `x+ = A_k x + B_k u` with stage cost
/// `x'Q x + u'R u` and terminal weight `P_N`. Returns one gain per interval
/// followed by a zero gain for the final node, and the cost-to-go matrices.
pub fn riccati_gains(
    jac: &[(StateMat, InputMat)],
    q: &StateMat,
    r: &InputWeight,
    p_final: &StateMat,
    step: f64,
) -> Result<(Vec<Gain>, Vec<StateMat>)> {
    let n = jac.len();
    let mut gains = vec![Gain::zeros(); n + 1];
    let mut cost_to_go = vec![StateMat::zeros(); n + 1];
    let mut p = *p_final;
    cost_to_go[n] = p;
    for k in (0..n).rev() {
        let (a, b) = &jac[k];
        let pb = p * b;
        let s = r + b.transpose() * pb;
        let chol = s.cholesky().ok_or_else(|| {
            Error::solver("LQR input Hessian lost positive definiteness", Some(k as f64 * step))
        })?;
        let gain = chol.solve(&(pb.transpose() * a));
        let next = q + a.transpose() * p * (a - b * gain);
        p = 0.5 * (next + next.transpose());
        if !p.iter().all(|v| v.is_finite()) || p.amax() > 1e14 {
            return Err(Error::solver("Riccati recursion diverged", Some(k as f64 * step)));
        }
        gains[k] = gain;
        cost_to_go[k] = p;
    }
    Ok((gains, cost_to_go))
}
