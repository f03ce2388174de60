use ndarray::array;

use crate::error::{RegError, Result};
use crate::state_space::StateSpaceModel;

/// Scalar model `ẋ = a x + u + w`, `y = x` with `P_c(λ) = 1/(λ − a)`.
pub fn build_toy(a: f64) -> Result<StateSpaceModel> {
    if !(a < 0.0) || !a.is_finite() {
        return Err(RegError::InvalidSpec(format!(
            "toy model needs a < 0, got {a}"
        )));
    }
    StateSpaceModel::new(
        array![[a]],
        array![[1.0]],
        array![[1.0]],
        array![[1.0]],
        None,
    )
}
