//! Singular-space initialization from sampled entries.
//!
//! For a mode `k`, each sample contributes the sparse matrix
//! `X_i = (d1 d2 d3) · M_k(P_{ω_i} T)`, whose only nonzero sits at the
//! unfolding position of `ω_i`. The estimator of `N = M_k(T) M_k(T)ᵀ` is the
//! U-statistic
//!
//! ```text
//! N̂ = 1/(n(n-1)) Σ_{i<j} (X_i X_jᵀ + X_j X_iᵀ)
//!   = (S Sᵀ − Σ_i X_i X_iᵀ) / (n(n-1)),        S = Σ_i X_i
//! ```
//!
//! and the second line is what gets computed: `S` has at most `n` nonzeros,
//! and each `X_i X_iᵀ` is a single diagonal entry. The subtraction is done
//! inside each column of `S`, so no cancellation against other columns
//! occurs.

use nalgebra::DMatrix;

use crate::error::{arg, Result};
use crate::grassmann::{Frame, TripleFrame};
use crate::linalg;
use crate::observations::ObservationSet;
use crate::tensor::{unfold_position, Mode};

/// `N̂` for one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondMomentEstimate {
    pub mode: Mode,
    pub matrix: DMatrix<f64>,
    pub n: usize,
}

impl SecondMomentEstimate {
    /// Columns spanning the eigenvectors of the `r` algebraically largest
    /// eigenvalues.
    ///
    /// Within a (near-)degenerate eigenvalue cluster any orthonormal basis is
    /// acceptable; compare results by subspace, not entrywise.
    pub fn top_eigenspace(&self, r: usize) -> Result<Frame> {
        let dk = self.matrix.nrows();
        if r == 0 || r > dk {
            return arg(format!("eigenspace rank must be in 1..={dk}, got {r}"));
        }
        let (_, vecs) = linalg::symmetric_eigen_desc(&self.matrix)?;
        Frame::orthonormalize(&vecs.columns(0, r).into_owned())
    }

    /// Largest eigenvalue of the estimate.
    pub fn top_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = linalg::symmetric_eigen_desc(&self.matrix)?;
        Ok(vals[0])
    }
}

/// Computes `N̂` for `mode` from the samples, counting duplicates.
pub fn second_moment_estimate(obs: &ObservationSet, mode: Mode) -> Result<SecondMomentEstimate> {
    let n = obs.len();
    if n < 2 {
        return arg("the second-moment estimate needs at least two samples");
    }
    let dims = obs.dims();
    let dk = dims[mode.index()];
    let scale = obs.volume() as f64;

    // (column, row, scaled value), sorted so that each column of S is a run.
    let mut entries: Vec<(usize, usize, f64)> = obs
        .samples()
        .iter()
        .map(|s| {
            let (row, col) = unfold_position(dims, s.index, mode);
            (col, row, scale * s.value)
        })
        .collect();
    entries.sort_by_key(|a| (a.0, a.1));

    let mut matrix = DMatrix::zeros(dk, dk);

    // S Sᵀ − Σ_i X_i X_iᵀ, one nonzero column of S at a time. A column holds
    // runs of draws per row; the run sum v_a gives the off-diagonal terms
    // v_a v_b, and the diagonal term v_a² − Σ v_i² is accumulated directly as
    // 2 Σ_{i<j} v_i v_j so that a lone draw contributes exactly zero.
    let mut column: Vec<(usize, f64, f64)> = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let col = entries[start].0;
        column.clear();
        let mut k = start;
        while k < entries.len() && entries[k].0 == col {
            let (_, row, v) = entries[k];
            match column.last_mut() {
                Some((r, sum, cross)) if *r == row => {
                    *cross += 2.0 * *sum * v;
                    *sum += v;
                }
                _ => column.push((row, v, 0.0)),
            }
            k += 1;
        }
        for (i, &(a, va, cross)) in column.iter().enumerate() {
            matrix[(a, a)] += cross;
            for &(b, vb, _) in &column[i + 1..] {
                matrix[(a, b)] += va * vb;
                matrix[(b, a)] += va * vb;
            }
        }
        start = k;
    }

    let denom = (n as f64) * (n as f64 - 1.0);
    matrix /= denom;
    Ok(SecondMomentEstimate { mode, matrix, n })
}

/// Spectral initialization: for each mode, the top-`r_k` eigenspace of `N̂`,
/// trimmed to coherence at most `3μ0`.
pub fn initialize(obs: &ObservationSet, ranks: [usize; 3], mu0: f64) -> Result<TripleFrame> {
    let raw = spectral_frames(obs, ranks)?;
    raw.trim(mu0)
}

/// The untrimmed spectral frames `(Û, V̂, Ŵ)`.
pub fn spectral_frames(obs: &ObservationSet, ranks: [usize; 3]) -> Result<TripleFrame> {
    let dims = obs.dims();
    for k in 0..3 {
        if ranks[k] == 0 || ranks[k] > dims[k] {
            return arg(format!(
                "rank {} must be in 1..={} for mode {}",
                ranks[k],
                dims[k],
                k + 1
            ));
        }
    }
    let frame = |mode: Mode| -> Result<Frame> {
        second_moment_estimate(obs, mode)?.top_eigenspace(ranks[mode.index()])
    };
    Ok(TripleFrame::new(
        frame(Mode::One)?,
        frame(Mode::Two)?,
        frame(Mode::Three)?,
    ))
}
