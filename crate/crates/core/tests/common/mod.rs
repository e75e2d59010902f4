#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use tcomp::grassmann::{Frame, TripleFrame, TripleTangent};
use tcomp::observations::ObservationSet;
use tcomp::rng::Stream;
use tcomp::tensor::{unfold_position, CoreTensor, Mode, Tensor3};

pub fn gaussian_matrix(stream: &mut Stream, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| stream.normal())
}

pub fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
    let mut s = Stream::new(seed);
    Tensor3::from_fn(dims, |_, _, _| s.normal())
}

pub fn random_core(dims: [usize; 3], seed: u64) -> CoreTensor {
    CoreTensor::from_tensor(random_tensor(dims, seed))
}

pub fn random_frame(d: usize, r: usize, seed: u64) -> Frame {
    let mut s = Stream::new(seed);
    Frame::orthonormalize(&gaussian_matrix(&mut s, d, r)).unwrap()
}

pub fn random_triple(dims: [usize; 3], ranks: [usize; 3], seed: u64) -> TripleFrame {
    TripleFrame::new(
        random_frame(dims[0], ranks[0], seed.wrapping_mul(3)),
        random_frame(dims[1], ranks[1], seed.wrapping_mul(3) + 1),
        random_frame(dims[2], ranks[2], seed.wrapping_mul(3) + 2),
    )
}

/// Σ_j C(j1,j2,j3) X(i1,j1) Y(i2,j2) Z(i3,j3) by six nested loops.
pub fn naive_tucker(
    core: &Tensor3,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> Tensor3 {
    let [r1, r2, r3] = core.dims();
    Tensor3::from_fn([x.nrows(), y.nrows(), z.nrows()], |i1, i2, i3| {
        let mut acc = 0.0;
        for j1 in 0..r1 {
            for j2 in 0..r2 {
                for j3 in 0..r3 {
                    acc += core.get(j1, j2, j3) * x[(i1, j1)] * y[(i2, j2)] * z[(i3, j3)];
                }
            }
        }
        acc
    })
}

/// (1/√2)‖UUᵀ − XXᵀ‖F from explicit projectors.
pub fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * a.transpose() - b * b.transpose()).norm() / 2f64.sqrt()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// N̂ from its definition: X_i dense, all pairs i < j.
pub fn pair_sum(obs: &ObservationSet, mode: Mode) -> DMatrix<f64> {
    let dims = obs.dims();
    let dk = dims[mode.index()];
    let cols = obs.volume() / dk;
    let scale = obs.volume() as f64;
    let xs: Vec<DMatrix<f64>> = obs
        .samples()
        .iter()
        .map(|s| {
            let mut m = DMatrix::zeros(dk, cols);
            let (r, c) = unfold_position(dims, s.index, mode);
            m[(r, c)] = scale * s.value;
            m
        })
        .collect();
    let n = xs.len();
    let mut acc = DMatrix::zeros(dk, dk);
    for i in 0..n {
        for j in (i + 1)..n {
            acc += &xs[i] * xs[j].transpose() + &xs[j] * xs[i].transpose();
        }
    }
    acc / (n as f64 * (n as f64 - 1.0))
}

/// Rows x_{i1} ⊗ y_{i2} ⊗ z_{i3} in core storage order (j3 fastest).
pub fn design(frames: &TripleFrame, obs: &ObservationSet) -> DMatrix<f64> {
    let [r1, r2, r3] = frames.ranks();
    let (x, y, z) = (frames.x.matrix(), frames.y.matrix(), frames.z.matrix());
    let mut a = DMatrix::zeros(obs.len(), r1 * r2 * r3);
    for (i, s) in obs.samples().iter().enumerate() {
        let [i1, i2, i3] = s.index;
        for j1 in 0..r1 {
            for j2 in 0..r2 {
                for j3 in 0..r3 {
                    a[(i, (j1 * r2 + j2) * r3 + j3)] = x[(i1, j1)] * y[(i2, j2)] * z[(i3, j3)];
                }
            }
        }
    }
    a
}

pub fn targets(obs: &ObservationSet) -> DVector<f64> {
    DVector::from_iterator(obs.len(), obs.values())
}

/// `U` rotated towards an orthonormal `N ⊥ U` so that `d_p = δ` exactly.
pub fn perturb_to_distance(u: &Frame, n: &DMatrix<f64>, delta: f64) -> Frame {
    let r = u.rank();
    let s = delta / (r as f64).sqrt();
    let c = (1.0 - s * s).sqrt();
    Frame::new(u.matrix() * c + n * s).unwrap()
}

pub fn orthonormal_complement(u: &Frame, g: &DMatrix<f64>) -> DMatrix<f64> {
    let perp = g - u.matrix() * (u.matrix().transpose() * g);
    Frame::orthonormalize(&perp).unwrap().into_matrix()
}

/// Median; the mean of the middle pair for even lengths.
pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Projected Gaussian direction at each frame.
pub fn random_tangent(frames: &TripleFrame, seed: u64) -> TripleTangent {
    let mut s = Stream::new(seed);
    let mut one = |f: &Frame| {
        let g = gaussian_matrix(&mut s, f.ambient_dim(), f.rank());
        f.tangent_project(&g).unwrap()
    };
    TripleTangent {
        x: one(&frames.x),
        y: one(&frames.y),
        z: one(&frames.z),
    }
}

/// Random frames pulled towards the first coordinate axes, so that some rows
/// exceed the coherence threshold and the penalty is active.
pub fn spiked_triple(dims: [usize; 3], ranks: [usize; 3], seed: u64) -> TripleFrame {
    let mut s = Stream::new(seed);
    let mut one = |d: usize, r: usize| {
        let mut m = gaussian_matrix(&mut s, d, r) * 0.15;
        for j in 0..r {
            m[(j, j)] += 1.0;
        }
        Frame::orthonormalize(&m).unwrap()
    };
    TripleFrame::new(
        one(dims[0], ranks[0]),
        one(dims[1], ranks[1]),
        one(dims[2], ranks[2]),
    )
}
