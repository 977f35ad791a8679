//! Dense Cholesky factorization and triangular solves, sequential so results
//! are reproducible bit for bit.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch, LltError};
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{MatMut, MatRef, Par};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};

/// Lower Cholesky factor `L` with `Σ = L Lᵀ`, column-major. Only the lower
/// triangle is meaningful.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(m: CovarianceMatrix) -> Result<Self> {
        let n = m.n();
        let mut l = m.into_vec();
        let req = cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default());
        let mut buf = MemBuffer::try_new(req).map_err(|_| Error::Allocation(req.size_bytes()))?;
        let stack = MemStack::new(&mut buf);
        let a = MatMut::from_column_major_slice_mut(&mut l, n, n);
        match cholesky_in_place(a, Default::default(), Par::Seq, stack, Default::default()) {
            Ok(_) => Ok(Cholesky { n, l }),
            Err(LltError::NonPositivePivot { index }) => Err(Error::NotPositiveDefinite(index)),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn mat(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.l, self.n, self.n)
    }

    /// `log |Σ| = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<f64>()
    }

    /// Overwrite `b` with `L⁻¹ b`.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let rhs = MatMut::from_column_major_slice_mut(b, self.n, 1);
        solve_lower_triangular_in_place(self.mat(), rhs, Par::Seq);
    }

    /// Overwrite `b` with `Σ⁻¹ b`.
    pub fn solve(&self, b: &mut [f64]) {
        self.solve_lower(b);
        let rhs = MatMut::from_column_major_slice_mut(b, self.n, 1);
        solve_upper_triangular_in_place(self.mat().transpose(), rhs, Par::Seq);
    }

    /// `L u`.
    pub fn mul_lower(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for j in 0..n {
            let uj = u[j];
            let col = &self.l[j * n..(j + 1) * n];
            for i in j..n {
                out[i] += col[i] * uj;
            }
        }
        out
    }
}
