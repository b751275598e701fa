use num_dual::DualNum;

/// Real or dual number usable in the model equations.
///
/// Everything that needs derivatives is written once against this trait and
/// evaluated with `f64` for values or with `num_dual` types for exact Jacobians
/// and Hessians.
pub trait Scalar: DualNum<Primitive = f64> + Copy {
    fn c(v: f64) -> Self {
        Self::from(v)
    }
}

impl<T: DualNum<Primitive = f64> + Copy> Scalar for T {}
