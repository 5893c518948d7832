use crate::error::{Error, Result};
use crate::tensor::{svd, ComplexTensor};

/// Unitary `U` maximising `Re Tr(E U)`: with `E = X S Y†`, `U = Y X†`.
pub fn polar_update(env: &ComplexTensor) -> Result<ComplexTensor> {
    if !env.is_square() {
        return Err(Error::dim(format!("environment must be square, got {:?}", env.shape())));
    }
    if !env.is_finite() {
        return Err(Error::Numeric("non-finite environment".into()));
    }
    let f = svd(env)?;
    f.right_vectors_conj_transposed.dagger().matmul(&f.left_vectors.dagger())
}
