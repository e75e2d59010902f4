//! The penalized objective `F̃ = F + G` and its Riemannian gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::grassmann::{Frame, TripleFrame, TripleTangent};
use crate::observations::{ObservationSet, RowMajorFactors};
use crate::tensor::CoreTensor;

/// Normal matrices whose smallest eigenvalue is below this fraction of the
/// largest are solved with the pseudoinverse.
pub const PINV_RCOND: f64 = 1e-12;
/// `G0` grows linearly in `z - 1` past this point.
pub const PENALTY_CLAMP: f64 = 26.0;

/// Least-squares core for fixed frames.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreSolve {
    pub core: CoreTensor,
    /// The normal matrix was (numerically) singular and the minimum-norm
    /// pseudoinverse solution was used.
    pub degenerate: bool,
}

/// Minimizes `½ Σ_i ((X,Y,Z)·C(ω_i) − T(ω_i))²` over cores `C`.
///
/// Assembles `A = Σ_i v_i v_iᵀ` and `b = Σ_i T(ω_i) v_i` with
/// `v_i = x_{i1} ⊗ y_{i2} ⊗ z_{i3}` and solves `A vec(C) = b` by Cholesky, or
/// by the eigen pseudoinverse when `λmin < 1e-12 λmax`.
pub fn solve_core(frames: &TripleFrame, obs: &ObservationSet) -> Result<CoreSolve> {
    let rows = factors(frames, obs)?;
    Ok(solve_core_rows(&rows, obs))
}

fn factors(frames: &TripleFrame, obs: &ObservationSet) -> Result<RowMajorFactors> {
    RowMajorFactors::new(
        obs.dims(),
        frames.x.matrix(),
        frames.y.matrix(),
        frames.z.matrix(),
        frames.ranks(),
    )
}

fn solve_core_rows(rows: &RowMajorFactors, obs: &ObservationSet) -> CoreSolve {
    let p: usize = rows.ranks.iter().product();
    // Upper triangle, row-major packed into a dense p×p buffer.
    let mut normal = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut v = vec![0.0; p];
    for s in obs.samples() {
        rows.kron_row(s.index, &mut v);
        for a in 0..p {
            let va = v[a];
            if va == 0.0 {
                continue;
            }
            rhs[a] += s.value * va;
            let row = &mut normal[a * p..(a + 1) * p];
            for b in a..p {
                row[b] += va * v[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            normal[a * p + b] = normal[b * p + a];
        }
    }
    let a = DMatrix::from_row_slice(p, p, &normal);
    let b = DVector::from_vec(rhs);
    let (solution, degenerate) = solve_symmetric(a, &b);
    CoreSolve {
        core: CoreTensor::new(rows.ranks, solution.as_slice().to_vec())
            .expect("core length matches ranks"),
        degenerate,
    }
}

fn solve_symmetric(a: DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let p = a.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0);
    let (lmin, lmax) = match &eig {
        Some(e) => e
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            }),
        None => (0.0, 0.0),
    };
    if lmax > 0.0 && lmin >= PINV_RCOND * lmax {
        if let Some(chol) = a.clone().cholesky() {
            return (chol.solve(b), false);
        }
    }
    let Some(eig) = eig else {
        return (DVector::zeros(p), true);
    };
    let cutoff = PINV_RCOND * lmax.max(0.0);
    let mut x = DVector::zeros(p);
    for k in 0..p {
        let lambda = eig.eigenvalues[k];
        if lambda > cutoff && lambda > 0.0 {
            let q = eig.eigenvectors.column(k);
            x += q * (q.dot(b) / lambda);
        }
    }
    (x, true)
}

/// `G0(z)`: zero up to 1, `exp((z−1)²) − 1` beyond, continued linearly past
/// `z − 1 = 26`.
pub fn penalty_g0(z: f64) -> f64 {
    let s = z - 1.0;
    if s <= 0.0 {
        0.0
    } else if s <= PENALTY_CLAMP {
        (s * s).exp_m1()
    } else {
        PENALTY_CLAMP.powi(2).exp_m1() + penalty_g0_prime(1.0 + PENALTY_CLAMP) * (s - PENALTY_CLAMP)
    }
}

/// `G0'(z) = 2(z−1) exp((z−1)²)`, constant past the clamp.
pub fn penalty_g0_prime(z: f64) -> f64 {
    let s = (z - 1.0).min(PENALTY_CLAMP);
    if s <= 0.0 {
        0.0
    } else {
        2.0 * s * (s * s).exp()
    }
}

/// `ρ Σ_rows G0(d ‖x_j‖² / (3 μ0 r))` for one frame.
pub fn frame_penalty(frame: &Frame, mu0: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let scale = frame.ambient_dim() as f64 / (3.0 * mu0 * frame.rank() as f64);
    rho * frame
        .row_norms_sq()
        .into_iter()
        .map(|sq| penalty_g0(scale * sq))
        .sum::<f64>()
}

/// Euclidean gradient of [`frame_penalty`]: row `j` is
/// `ρ G0'(z_j) (2d / (3 μ0 r)) x_j`.
pub fn frame_penalty_gradient(frame: &Frame, mu0: f64, rho: f64) -> DMatrix<f64> {
    let m = frame.matrix();
    let mut g = DMatrix::zeros(m.nrows(), m.ncols());
    if rho == 0.0 {
        return g;
    }
    let scale = frame.ambient_dim() as f64 / (3.0 * mu0 * frame.rank() as f64);
    for (j, sq) in frame.row_norms_sq().into_iter().enumerate() {
        let gp = penalty_g0_prime(scale * sq);
        if gp != 0.0 {
            let coef = rho * gp * 2.0 * scale;
            g.set_row(j, &(m.row(j) * coef));
        }
    }
    g
}

/// `G(X, Y, Z)`: the coherence penalty summed over the three frames.
pub fn penalty(frames: &TripleFrame, mu0: f64, rho: f64) -> f64 {
    frames
        .frames()
        .iter()
        .map(|f| frame_penalty(f, mu0, rho))
        .sum()
}

/// Everything known about `F̃` at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub core: CoreTensor,
    /// `F = ½ Σ_i residual_i²`.
    pub fit: f64,
    /// `G`.
    pub penalty: f64,
    /// `Â(ω_i) − T(ω_i)` in sample order.
    pub residuals: Vec<f64>,
    pub degenerate: bool,
}

impl Evaluation {
    /// `F̃ = F + G`.
    pub fn total(&self) -> f64 {
        self.fit + self.penalty
    }
}

/// The penalized completion objective for fixed data and penalty weights.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub obs: &'a ObservationSet,
    pub mu0: f64,
    pub rho: f64,
}

impl<'a> Objective<'a> {
    pub fn new(obs: &'a ObservationSet, mu0: f64, rho: f64) -> Self {
        Self { obs, mu0, rho }
    }

    pub fn evaluate(&self, frames: &TripleFrame) -> Result<Evaluation> {
        let rows = factors(frames, self.obs)?;
        let CoreSolve { core, degenerate } = solve_core_rows(&rows, self.obs);
        let residuals: Vec<f64> = self
            .obs
            .samples()
            .iter()
            .map(|s| rows.evaluate(s.index, core.values()) - s.value)
            .collect();
        let fit = 0.5 * residuals.iter().map(|r| r * r).sum::<f64>();
        Ok(Evaluation {
            core,
            fit,
            penalty: penalty(frames, self.mu0, self.rho),
            residuals,
            degenerate,
        })
    }

    /// `F̃` alone.
    pub fn value(&self, frames: &TripleFrame) -> Result<f64> {
        Ok(self.evaluate(frames)?.total())
    }

    /// Riemannian gradient of `F̃` at `frames`, given the evaluation there.
    ///
    /// With the core at its least-squares optimum, the Euclidean gradient of
    /// `F` in `X` is `M1(R) (Y ⊗ Z) M1(C)ᵀ` with `R` the sparse residual
    /// tensor (and likewise for `Y`, `Z`). The penalty row gradients are
    /// added and each block is projected onto the horizontal space.
    pub fn gradient(&self, frames: &TripleFrame, eval: &Evaluation) -> Result<TripleTangent> {
        let dims = self.obs.dims();
        let [r1, r2, r3] = frames.ranks();
        let rows = factors(frames, self.obs)?;
        let core = eval.core.values();

        let mut gx = DMatrix::zeros(dims[0], r1);
        let mut gy = DMatrix::zeros(dims[1], r2);
        let mut gz = DMatrix::zeros(dims[2], r3);
        let mut cz = vec![0.0; r1 * r2];
        let mut wx = vec![0.0; r1];
        let mut wy = vec![0.0; r2];
        let mut wz = vec![0.0; r3];

        for (s, &res) in self.obs.samples().iter().zip(&eval.residuals) {
            if res == 0.0 {
                continue;
            }
            let (xr, yr, zr) = rows.rows(s.index);
            // cz(j1, j2) = Σ_j3 C(j1, j2, j3) z_j3
            for j1 in 0..r1 {
                for j2 in 0..r2 {
                    let base = (j1 * r2 + j2) * r3;
                    cz[j1 * r2 + j2] = (0..r3).map(|j3| core[base + j3] * zr[j3]).sum();
                }
            }
            for j1 in 0..r1 {
                wx[j1] = (0..r2).map(|j2| cz[j1 * r2 + j2] * yr[j2]).sum();
            }
            for j2 in 0..r2 {
                wy[j2] = (0..r1).map(|j1| cz[j1 * r2 + j2] * xr[j1]).sum();
            }
            wz.iter_mut().for_each(|v| *v = 0.0);
            for j1 in 0..r1 {
                for j2 in 0..r2 {
                    let xy = xr[j1] * yr[j2];
                    let base = (j1 * r2 + j2) * r3;
                    for j3 in 0..r3 {
                        wz[j3] += xy * core[base + j3];
                    }
                }
            }
            let [i1, i2, i3] = s.index;
            for j in 0..r1 {
                gx[(i1, j)] += res * wx[j];
            }
            for j in 0..r2 {
                gy[(i2, j)] += res * wy[j];
            }
            for j in 0..r3 {
                gz[(i3, j)] += res * wz[j];
            }
        }

        if self.rho != 0.0 {
            gx += frame_penalty_gradient(&frames.x, self.mu0, self.rho);
            gy += frame_penalty_gradient(&frames.y, self.mu0, self.rho);
            gz += frame_penalty_gradient(&frames.z, self.mu0, self.rho);
        }

        Ok(TripleTangent {
            x: frames.x.tangent_project(&gx)?,
            y: frames.y.tangent_project(&gy)?,
            z: frames.z.tangent_project(&gz)?,
        })
    }
}

/// `F(X, Y, Z)` and the optimal core.
pub fn objective_f(frames: &TripleFrame, obs: &ObservationSet) -> Result<(f64, CoreTensor)> {
    let eval = Objective::new(obs, 1.0, 0.0).evaluate(frames)?;
    Ok((eval.fit, eval.core))
}

/// Data-driven penalty weight: `10 · n / (d1 d2 d3) · Λ̂² · ln d`, with `Λ̂²`
/// the top eigenvalue of the mode-1 second-moment estimate and
/// `d = max(d1, d2, d3)`.
pub fn auto_rho(obs: &ObservationSet) -> Result<f64> {
    if obs.len() < 2 {
        return Ok(0.0);
    }
    let lambda_sq = crate::spectral::second_moment_estimate(obs, crate::tensor::Mode::One)?
        .top_eigenvalue()?
        .max(0.0);
    let d = *obs.dims().iter().max().expect("three dims") as f64;
    Ok(10.0 * obs.len() as f64 / obs.volume() as f64 * lambda_sq * d.ln())
}
