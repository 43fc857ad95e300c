//! Truncated-SVD compression of 2D fields.

use crate::grid::DataCube;
use crate::linalg::{jacobi_svd, truncated_reconstruction};

use super::{BaselineError, Budget};

/// Keeps the largest feasible rank under the budget: a rank-r factor of
/// an m x n matrix stores `r (m + n + 1)` reals (both singular vectors
/// plus the value). Returns the reconstruction and the rank used.
pub fn svd_compress(cube: &DataCube, budget: Budget) -> Result<(DataCube, usize), BaselineError> {
    if cube.dims().rank() != 2 {
        return Err(BaselineError::RequiresTwoD);
    }
    let [m, n] = [cube.dims().as_slice()[0], cube.dims().as_slice()[1]];
    let allowed = budget.stored_values(m * n);
    let per_rank = m + n + 1;
    let rank = (allowed / per_rank).min(m.min(n));
    if rank < 1 {
        return Err(BaselineError::BudgetTooSmall {
            budget: allowed,
            required: per_rank,
        });
    }
    let svd = jacobi_svd(cube.values(), m, n);
    let values = truncated_reconstruction(&svd, rank);
    Ok((DataCube::from_parts(cube.dims(), values), rank))
}
