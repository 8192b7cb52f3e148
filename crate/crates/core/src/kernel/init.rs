use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

use super::Matrix;

/// Matrix with i.i.d. `N(mean, stddev²)` entries.
pub fn gaussian_init<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    mean: f64,
    stddev: f64,
    rng: &mut R,
) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimensions { rows, cols });
    }
    if !(stddev > 0.0 && stddev.is_finite() && mean.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need finite mean and positive standard deviation, got ({mean}, {stddev})"
        )));
    }
    let normal = Normal::new(mean, stddev).expect("validated above");
    let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data)
}
