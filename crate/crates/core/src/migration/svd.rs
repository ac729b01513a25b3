use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forward::MsrMatrix;

/// Full SVD `M = U S Vᴴ` of an MSR matrix, optionally truncated to the
/// first `M̂` singular triplets for imaging.
#[derive(Debug, Clone)]
pub struct SvdBasis {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Left singular vectors as columns.
    pub u: DMatrix<Complex64>,
    /// Right singular vectors as columns (not conjugated).
    pub v: DMatrix<Complex64>,
    pub frequency: f64,
    retained: Option<usize>,
}

impl SvdBasis {
    pub fn retained(&self) -> Option<usize> {
        self.retained
    }

    /// Fixes `M̂` explicitly.
    pub fn truncate(&mut self, count: usize) -> Result<()> {
        if count == 0 || count > self.singular_values.len() {
            return Err(Error::Usage(format!(
                "retained count must lie in 1..={}, got {count}",
                self.singular_values.len()
            )));
        }
        self.retained = Some(count);
        Ok(())
    }

    /// `Σ σ_m U_m V_mᴴ` over all terms.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.u.nrows();
        let mut out = DMatrix::zeros(n, self.v.nrows());
        for (m, &s) in self.singular_values.iter().enumerate() {
            out += self.u.column(m) * self.v.column(m).adjoint() * Complex64::from(s);
        }
        out
    }
}

/// Full SVD. Each singular pair is rotated by a common phase so that the
/// largest-magnitude entry of `U_m` is real and positive.
pub fn svd_decompose(msr: &MsrMatrix) -> Result<SvdBasis> {
    if !msr.is_finite() {
        return Err(Error::Numeric("MSR matrix has non-finite entries".into()));
    }
    if msr.dim() == 0 {
        return Err(Error::Usage("empty MSR matrix".into()));
    }
    let svd = msr
        .entries
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let mut u = svd.u.expect("left vectors requested");
    let mut v = svd.v_t.expect("right vectors requested").adjoint();
    let singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();

    for m in 0..singular_values.len() {
        let col = u.column(m);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].norm() > col[best].norm() {
                best = i;
            }
        }
        let pivot = col[best];
        if pivot.norm() == 0.0 {
            continue;
        }
        let rot = pivot.conj() / pivot.norm();
        let mut uc = u.column_mut(m);
        uc *= rot;
        let mut vc = v.column_mut(m);
        vc *= rot;
        // snap the pivot so it is exactly real
        let p = u[(best, m)];
        u[(best, m)] = Complex64::new(p.norm(), 0.0);
    }

    Ok(SvdBasis {
        singular_values,
        u,
        v,
        frequency: msr.frequency,
        retained: None,
    })
}

/// `M̂ = #{m : σ_m/σ_1 ≥ τ}`; also stores `M̂` in the basis.
pub fn significant_count(basis: &mut SvdBasis, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::config("threshold", format!("τ must lie in (0, 1), got {tau}")));
    }
    let count = count_above(&basis.singular_values, tau)?;
    basis.retained = Some(count);
    Ok(count)
}

pub(crate) fn count_above(sigma: &[f64], tau: f64) -> Result<usize> {
    let s1 = sigma.first().copied().unwrap_or(0.0);
    if !(s1 > 0.0) {
        return Err(Error::Numeric("largest singular value is zero".into()));
    }
    Ok(sigma.iter().take_while(|&&s| s / s1 >= tau).count())
}
