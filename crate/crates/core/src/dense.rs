//! Small dense kernels shared by the geometry modules.

use crate::error::{Error, Result};
use crate::Mat;

pub(crate) fn sym(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ensure_shape(a: &Mat, rows: usize, cols: usize) -> Result<()> {
    if a.nrows() != rows || a.ncols() != cols {
        return Err(Error::Dimension {
            expected: (rows, cols),
            found: (a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

/// Horizontal concatenation `[a, b]`.
pub(crate) fn hcat(a: &Mat, b: &Mat) -> Mat {
    debug_assert_eq!(a.nrows(), b.nrows());
    let (n, p, q) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = Mat::zeros(n, p + q);
    out.columns_mut(0, p).copy_from(a);
    out.columns_mut(p, q).copy_from(b);
    out
}

/// LU factorization with a cheap singularity screen on the pivots.
#[derive(Debug)]
pub(crate) struct PivotedLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl PivotedLu {
    pub(crate) fn new(a: Mat) -> Result<Self> {
        let scale = a.amax().max(1.0);
        let lu = a.lu();
        let u = lu.u();
        let n = u.nrows();
        let tiny = scale * 1e-14 * (n.max(1) as f64);
        for i in 0..n {
            let d = u[(i, i)];
            if !d.is_finite() || d.abs() <= tiny {
                return Err(Error::StepTooLarge);
            }
        }
        Ok(Self { lu })
    }

    pub(crate) fn solve(&self, b: &Mat) -> Mat {
        // Pivots were screened in `new`, so the factor is invertible.
        self.lu.solve(b).expect("screened LU factor is invertible")
    }
}
