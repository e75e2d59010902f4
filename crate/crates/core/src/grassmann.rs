//! Orthonormal frames as points on Grassmannians.
//!
//! A [`Frame`] is a column-orthonormal `d × r` matrix standing for its column
//! span. Everything here that compares frames (distances, coherence) depends
//! only on the span, so right-multiplying a frame by an `r × r` orthogonal
//! matrix never changes a result beyond rounding.

use nalgebra::DMatrix;

use crate::error::{arg, Error, Result};
use crate::linalg;

/// Orthonormality tolerance accepted by [`Frame::new`].
pub const FRAME_TOL: f64 = 1e-10;
/// Drift level above which updated frames are re-orthonormalized.
pub const REORTH_TOL: f64 = 1e-12;
/// Singular values of tangent directions below this are treated as zero.
pub const TANGENT_ZERO: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    matrix: DMatrix<f64>,
}

impl Frame {
    /// Wraps an orthonormal matrix, rejecting anything with
    /// `‖MᵀM − I‖max > 1e-10`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (d, r) = matrix.shape();
        if r == 0 || r > d {
            return arg(format!("frame must satisfy 1 <= r <= d, got {d}x{r}"));
        }
        let defect = linalg::orthonormality_defect(&matrix);
        if !(defect <= FRAME_TOL) {
            return arg(format!("frame columns not orthonormal (defect {defect:e})"));
        }
        Ok(Self { matrix })
    }

    /// Orthonormalizes the columns of `m` (thin QR) and wraps the result.
    pub fn orthonormalize(m: &DMatrix<f64>) -> Result<Self> {
        let (d, r) = m.shape();
        if r == 0 || r > d {
            return arg(format!("frame must satisfy 1 <= r <= d, got {d}x{r}"));
        }
        Ok(Self {
            matrix: linalg::orthonormalize(m)?,
        })
    }

    /// The first `r` canonical basis vectors of `R^d`.
    pub fn canonical(d: usize, r: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, r))
    }

    /// The first `r` columns of the orthonormal DCT-II basis. Its coherence
    /// is below 2 for every `r`.
    pub fn cosine(d: usize, r: usize) -> Result<Self> {
        if r == 0 || r > d {
            return arg(format!("frame must satisfy 1 <= r <= d, got {d}x{r}"));
        }
        let df = d as f64;
        let m = DMatrix::from_fn(d, r, |i, k| {
            let scale = if k == 0 {
                (1.0 / df).sqrt()
            } else {
                (2.0 / df).sqrt()
            };
            scale * (std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / df).cos()
        });
        Self::orthonormalize(&m)
    }

    pub(crate) fn from_trusted(matrix: DMatrix<f64>) -> Self {
        debug_assert!(linalg::orthonormality_defect(&matrix) <= FRAME_TOL);
        Self { matrix }
    }

    /// Re-orthonormalizes when rounding drift exceeds [`REORTH_TOL`].
    fn settle(matrix: DMatrix<f64>) -> Result<Self> {
        if linalg::orthonormality_defect(&matrix) > REORTH_TOL {
            Self::orthonormalize(&matrix)
        } else {
            Ok(Self { matrix })
        }
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.matrix.ncols()
    }

    /// Squared norms of the rows, `‖P_X e_i‖²`.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.ambient_dim())
            .map(|i| self.matrix.row(i).norm_squared())
            .collect()
    }

    /// Coherence `μ = (d/r) max_i ‖P_X e_i‖²`, in `[1, d/r]`.
    pub fn coherence(&self) -> f64 {
        let max = self.row_norms_sq().into_iter().fold(0.0f64, f64::max);
        self.ambient_dim() as f64 / self.rank() as f64 * max
    }

    /// Projection distance `‖UUᵀ − XXᵀ‖F / √2`.
    ///
    /// Evaluated as `‖(I − XXᵀ)U‖F`, which is equal for frames of the same
    /// rank and keeps full relative accuracy for nearby subspaces.
    pub fn proj_distance(&self, other: &Frame) -> Result<f64> {
        if self.matrix.shape() != other.matrix.shape() {
            return arg(format!(
                "frame shapes differ: {:?} vs {:?}",
                self.matrix.shape(),
                other.matrix.shape()
            ));
        }
        let residual = &other.matrix - &self.matrix * (self.matrix.transpose() * &other.matrix);
        Ok(residual.norm())
    }

    /// `(I − XXᵀ) G`.
    pub fn tangent_project(&self, g: &DMatrix<f64>) -> Result<TangentDirection> {
        if g.shape() != self.matrix.shape() {
            return arg(format!(
                "direction is {}x{}, frame is {}x{}",
                g.nrows(),
                g.ncols(),
                self.ambient_dim(),
                self.rank()
            ));
        }
        let projected = g - &self.matrix * (self.matrix.transpose() * g);
        Ok(TangentDirection { matrix: projected })
    }

    /// Grassmann geodesic `H(X, D, t) = X R cos(Θt) Rᵀ + L sin(Θt) Rᵀ`
    /// where `D = L Θ Rᵀ` is the thin SVD of the tangent direction.
    pub fn geodesic(&self, dir: &TangentDirection, t: f64) -> Result<Frame> {
        let (d, r) = self.matrix.shape();
        if dir.matrix.shape() != (d, r) {
            return arg("tangent direction shape does not match frame");
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let svd = nalgebra::SVD::try_new(dir.matrix.clone(), true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("SVD of tangent direction did not converge".into()))?;
        let left = svd.u.as_ref().expect("requested U");
        let right_t = svd.v_t.as_ref().expect("requested Vᵀ");
        let k = svd.singular_values.len();
        let mut cos_part = DMatrix::zeros(k, k);
        let mut sin_part = DMatrix::zeros(k, k);
        let mut any = false;
        for i in 0..k {
            let theta = svd.singular_values[i];
            if theta < TANGENT_ZERO {
                cos_part[(i, i)] = 1.0;
                continue;
            }
            any = true;
            cos_part[(i, i)] = (theta * t).cos();
            sin_part[(i, i)] = (theta * t).sin();
        }
        if !any {
            return Ok(self.clone());
        }
        let right = right_t.transpose();
        let moved = &self.matrix * (&right * cos_part * right_t) + left * sin_part * right_t;
        Self::settle(moved)
    }

    /// Incoherence trimming.
    ///
    /// If `μ(X) ≤ 3μ0` the frame is returned unchanged. Otherwise every row
    /// with squared norm above `2μ0 r/d` is scaled down to exactly that level
    /// and the columns are re-orthonormalized by thin QR; this is repeated
    /// for at most [`TRIM_PASSES`] passes or until `μ ≤ 3μ0`.
    ///
    /// When clipping cannot reach the target (a frame concentrated on fewer
    /// than `r` rows, say), the clipped frame is blended with the cosine
    /// frame, `orth(X + ηH)`, for doubling `η` until the target is met. The
    /// cosine frame itself has coherence below 2, so this always terminates.
    pub fn trim(&self, mu0: f64) -> Result<Frame> {
        if !(mu0 >= 1.0) {
            return arg(format!("mu0 must be at least 1, got {mu0}"));
        }
        let target = 3.0 * mu0;
        if self.coherence() <= target {
            return Ok(self.clone());
        }
        let (d, r) = self.matrix.shape();
        let clip = 2.0 * mu0 * r as f64 / d as f64;
        let mut current = self.matrix.clone();
        for _ in 0..TRIM_PASSES {
            for i in 0..d {
                let sq = current.row(i).norm_squared();
                if sq > clip {
                    let s = (clip / sq).sqrt();
                    current.row_mut(i).scale_mut(s);
                }
            }
            match linalg::orthonormalize(&current) {
                Ok(q) => current = q,
                Err(_) => break,
            }
            let f = Frame::from_trusted(current.clone());
            if f.coherence() <= target {
                return Ok(f);
            }
        }

        let spread = Frame::cosine(d, r)?;
        let mut eta = 1.0 / 16.0;
        while eta <= 1e6 {
            let blended = &current + spread.matrix() * eta;
            if let Ok(q) = linalg::orthonormalize(&blended) {
                let f = Frame::from_trusted(q);
                if f.coherence() <= target {
                    return Ok(f);
                }
            }
            eta *= 2.0;
        }
        Ok(spread)
    }
}

/// Maximum clip-and-orthonormalize passes in [`Frame::trim`].
pub const TRIM_PASSES: usize = 3;

/// A horizontal tangent vector at some base frame `X` (`Xᵀ D = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct TangentDirection {
    matrix: DMatrix<f64>,
}

impl TangentDirection {
    pub fn zeros(d: usize, r: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(d, r),
        }
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * s,
        }
    }

    /// `⟨D, G⟩ = tr(DᵀG)`.
    pub fn dot(&self, other: &TangentDirection) -> f64 {
        self.matrix.dot(&other.matrix)
    }
}

/// A point on `G(d1,r1) × G(d2,r2) × G(d3,r3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleFrame {
    pub x: Frame,
    pub y: Frame,
    pub z: Frame,
}

impl TripleFrame {
    pub fn new(x: Frame, y: Frame, z: Frame) -> Self {
        Self { x, y, z }
    }

    pub fn frames(&self) -> [&Frame; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.x.ambient_dim(),
            self.y.ambient_dim(),
            self.z.ambient_dim(),
        ]
    }

    pub fn ranks(&self) -> [usize; 3] {
        [self.x.rank(), self.y.rank(), self.z.rank()]
    }

    /// Sum of the three component projection distances.
    pub fn distance(&self, other: &TripleFrame) -> Result<f64> {
        Ok(self.x.proj_distance(&other.x)?
            + self.y.proj_distance(&other.y)?
            + self.z.proj_distance(&other.z)?)
    }

    /// Largest possible [`distance`](Self::distance) to any other triple of
    /// the same shape: `Σ_k √min(r_k, d_k − r_k)`.
    pub fn diameter(&self) -> f64 {
        self.frames()
            .iter()
            .map(|f| (f.rank().min(f.ambient_dim() - f.rank()) as f64).sqrt())
            .sum()
    }

    pub fn max_coherence(&self) -> f64 {
        self.frames()
            .iter()
            .map(|f| f.coherence())
            .fold(0.0, f64::max)
    }

    /// Moves each component along its own geodesic by the common step `t`.
    pub fn geodesic(&self, dirs: &TripleTangent, t: f64) -> Result<TripleFrame> {
        Ok(TripleFrame {
            x: self.x.geodesic(&dirs.x, t)?,
            y: self.y.geodesic(&dirs.y, t)?,
            z: self.z.geodesic(&dirs.z, t)?,
        })
    }

    pub fn trim(&self, mu0: f64) -> Result<TripleFrame> {
        Ok(TripleFrame {
            x: self.x.trim(mu0)?,
            y: self.y.trim(mu0)?,
            z: self.z.trim(mu0)?,
        })
    }
}

/// Tangent directions for the three components of a [`TripleFrame`].
#[derive(Clone, Debug, PartialEq)]
pub struct TripleTangent {
    pub x: TangentDirection,
    pub y: TangentDirection,
    pub z: TangentDirection,
}

impl TripleTangent {
    pub fn zeros(dims: [usize; 3], ranks: [usize; 3]) -> Self {
        Self {
            x: TangentDirection::zeros(dims[0], ranks[0]),
            y: TangentDirection::zeros(dims[1], ranks[1]),
            z: TangentDirection::zeros(dims[2], ranks[2]),
        }
    }

    /// Frobenius norm of the stacked directions.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &TripleTangent) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y) + self.z.dot(&other.z)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x.scaled(s),
            y: self.y.scaled(s),
            z: self.z.scaled(s),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.norm() == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn coherence_extremes() {
        let e = Frame::canonical(6, 2).unwrap();
        assert!((e.coherence() - 3.0).abs() < 1e-15);
        let flat = Frame::new(col(&[0.5, 0.5, 0.5, 0.5])).unwrap();
        assert!((flat.coherence() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_rejects_non_orthonormal() {
        assert!(Frame::new(col(&[1.0, 1.0])).is_err());
        assert!(Frame::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn distance_examples() {
        let e1 = Frame::new(col(&[1.0, 0.0])).unwrap();
        let e2 = Frame::new(col(&[0.0, 1.0])).unwrap();
        assert!(e1.proj_distance(&e1).unwrap() < 1e-15);
        assert!((e1.proj_distance(&e2).unwrap() - 1.0).abs() < 1e-15);
        let tilted = Frame::new(col(&[(PI / 6.0).cos(), (PI / 6.0).sin()])).unwrap();
        assert!((e1.proj_distance(&tilted).unwrap() - 0.5).abs() < 1e-15);
        let other = Frame::canonical(3, 1).unwrap();
        assert!(e1.proj_distance(&other).is_err());
    }

    #[test]
    fn triple_distance_one_orthogonal_component() {
        let e1 = Frame::new(col(&[1.0, 0.0])).unwrap();
        let e2 = Frame::new(col(&[0.0, 1.0])).unwrap();
        let a = TripleFrame::new(e1.clone(), e1.clone(), e1.clone());
        let b = TripleFrame::new(e1.clone(), e2, e1);
        assert_eq!(a.distance(&a).unwrap(), 0.0);
        assert!((a.distance(&b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tangent_project_special_cases() {
        let x = Frame::canonical(4, 2).unwrap();
        let d = x.tangent_project(x.matrix()).unwrap();
        assert!(d.norm() < 1e-15);
        let g = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.tangent_project(&g).unwrap().matrix(), &g);
    }

    #[test]
    fn geodesic_planar_rotation() {
        let theta = 0.7;
        let x = Frame::new(col(&[1.0, 0.0])).unwrap();
        let d = x.tangent_project(&col(&[0.0, theta])).unwrap();
        let h = x.geodesic(&d, 1.0).unwrap();
        assert!((h.matrix()[(0, 0)] - theta.cos()).abs() < 1e-15);
        assert!((h.matrix()[(1, 0)] - theta.sin()).abs() < 1e-15);
        assert_eq!(x.geodesic(&d, 0.0).unwrap(), x);
        let zero = TangentDirection::zeros(2, 1);
        assert_eq!(x.geodesic(&zero, 3.0).unwrap(), x);
    }

    #[test]
    fn trim_noop_when_incoherent() {
        let f = Frame::cosine(10, 2).unwrap();
        assert!(f.coherence() <= 3.0);
        assert_eq!(f.trim(1.0).unwrap(), f);
    }

    #[test]
    fn trim_spike_frame() {
        let e1 = Frame::canonical(8, 1).unwrap();
        let t = e1.trim(1.0).unwrap();
        assert!(t.coherence() <= 3.0, "{}", t.coherence());
        assert!(linalg::orthonormality_defect(t.matrix()) <= FRAME_TOL);
    }

    #[test]
    fn trim_rejects_small_mu0() {
        let e1 = Frame::canonical(8, 1).unwrap();
        assert!(e1.trim(0.5).is_err());
    }
}
