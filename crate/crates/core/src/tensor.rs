//! Dense order-3 tensors: storage, unfoldings, trilinear products and norms.
//!
//! Storage is a single contiguous buffer with the last index fastest, so the
//! entry `(i1, i2, i3)` (0-based) lives at `(i1 * d2 + i2) * d3 + i3`.
//!
//! Unfoldings put the selected mode on the rows and keep the two remaining
//! indices in ascending mode order on the columns, last one fastest:
//!
//! | mode | row | column          |
//! |------|-----|-----------------|
//! | 1    | i1  | i2 * d3 + i3    |
//! | 2    | i2  | i1 * d3 + i3    |
//! | 3    | i3  | i1 * d2 + i2    |
//!
//! With this convention `M1((X, Y, Z)·C) = X · M1(C) · (Y ⊗ Z)ᵀ`,
//! `M2(..) = Y · M2(C) · (X ⊗ Z)ᵀ` and `M3(..) = Z · M3(C) · (X ⊗ Y)ᵀ`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{arg, Error, Result};
use crate::linalg;
use crate::rng::Stream;

/// One of the three tensor modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// 0-based position of the mode.
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// The two other modes, in ascending order.
    pub fn others(self) -> (Mode, Mode) {
        match self {
            Mode::One => (Mode::Two, Mode::Three),
            Mode::Two => (Mode::One, Mode::Three),
            Mode::Three => (Mode::One, Mode::Two),
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    /// Converts the 1-based mode number used in the mathematical notation.
    fn try_from(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => arg(format!("mode must be 1, 2 or 3, got {k}")),
        }
    }
}

/// Row and column of entry `idx` in the mode-`mode` unfolding.
#[inline]
pub fn unfold_position(dims: [usize; 3], idx: [usize; 3], mode: Mode) -> (usize, usize) {
    match mode {
        Mode::One => (idx[0], idx[1] * dims[2] + idx[2]),
        Mode::Two => (idx[1], idx[0] * dims[2] + idx[2]),
        Mode::Three => (idx[2], idx[0] * dims[1] + idx[1]),
    }
}

/// Dense real `d1 × d2 × d3` array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return arg(format!("tensor dims must be positive, got {dims:?}"));
        }
        let len = dims[0] * dims[1] * dims[2];
        if values.len() != len {
            return arg(format!(
                "tensor {dims:?} needs {len} values, got {}",
                values.len()
            ));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "tensor dims must be positive");
        Self {
            dims,
            values: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        let mut k = 0;
        for i1 in 0..dims[0] {
            for i2 in 0..dims[1] {
                for i3 in 0..dims[2] {
                    t.values[k] = f(i1, i2, i3);
                    k += 1;
                }
            }
        }
        t
    }

    /// The rank-one tensor `x ⊗ y ⊗ z`.
    pub fn rank_one(x: &[f64], y: &[f64], z: &[f64]) -> Self {
        Self::from_fn([x.len(), y.len(), z.len()], |i, j, k| x[i] * y[j] * z[k])
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        debug_assert!(i1 < self.dims[0] && i2 < self.dims[1] && i3 < self.dims[2]);
        (i1 * self.dims[1] + i2) * self.dims[2] + i3
    }

    /// Entry at 0-based `(i1, i2, i3)`.
    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.values[self.offset(i1, i2, i3)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: f64) {
        let o = self.offset(i1, i2, i3);
        self.values[o] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i1: usize, i2: usize, i3: usize, v: f64) {
        let o = self.offset(i1, i2, i3);
        self.values[o] += v;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dims: self.dims,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Tensor3) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    fn check_same_dims(&self, other: &Tensor3) -> Result<()> {
        if self.dims != other.dims {
            return arg(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims, other.dims
            ));
        }
        Ok(())
    }

    /// Mode-`mode` matricization.
    pub fn unfold(&self, mode: Mode) -> UnfoldedMatrix {
        let [d1, d2, d3] = self.dims;
        let rows = self.dims[mode.index()];
        let cols = self.len() / rows;
        let mut m = DMatrix::zeros(rows, cols);
        let mut k = 0;
        for i1 in 0..d1 {
            for i2 in 0..d2 {
                for i3 in 0..d3 {
                    let (r, c) = unfold_position(self.dims, [i1, i2, i3], mode);
                    m[(r, c)] = self.values[k];
                    k += 1;
                }
            }
        }
        UnfoldedMatrix { mode, matrix: m }
    }

    /// `self ×_mode m`: multiplies the mode-`mode` fibers by `m`
    /// (`m` has `dims[mode]` columns; its row count becomes the new size).
    pub fn mode_product(&self, mode: Mode, m: &DMatrix<f64>) -> Result<Tensor3> {
        let k = mode.index();
        if m.ncols() != self.dims[k] {
            return arg(format!(
                "mode-{} product needs {} columns, got {}",
                k + 1,
                self.dims[k],
                m.ncols()
            ));
        }
        let mut dims = self.dims;
        dims[k] = m.nrows();
        if dims[k] == 0 {
            return arg("mode product with an empty matrix");
        }
        let unfolded = self.unfold(mode).matrix;
        refold(&(m * unfolded), mode, dims)
    }

    /// `⟨self, other⟩ = Σ_ω self(ω) other(ω)`.
    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.frobenius_norm(),
            NormKind::Max => self.max_norm(),
        }
    }

    /// `self(u, v, w)` with one slot left open: contracts the two modes other
    /// than `free` against the corresponding vectors.
    pub fn contract_except(&self, free: Mode, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let [d1, d2, d3] = self.dims;
        let mut out = vec![0.0; self.dims[free.index()]];
        let mut k = 0;
        for i1 in 0..d1 {
            for i2 in 0..d2 {
                for i3 in 0..d3 {
                    let a = self.values[k];
                    k += 1;
                    match free {
                        Mode::One => out[i1] += a * v[i2] * w[i3],
                        Mode::Two => out[i2] += a * u[i1] * w[i3],
                        Mode::Three => out[i3] += a * u[i1] * v[i2],
                    }
                }
            }
        }
        out
    }

    /// `⟨self, u ⊗ v ⊗ w⟩`.
    pub fn rank_one_inner(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let partial = self.contract_except(Mode::Three, u, v, w);
        partial.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    /// Certified lower bound on the spectral norm
    /// `sup ⟨A, u⊗v⊗w⟩` over unit vectors, by alternating power iteration.
    ///
    /// Starts from the canonical triples that attain `‖A‖max` (signed so the
    /// starting value is `+‖A‖max`), the leading left singular vectors of the
    /// three unfoldings, and [`SPECTRAL_RESTARTS`] seeded Gaussian triples.
    /// Each sweep maximizes over one factor at a time, so the value never
    /// drops below its start and the result is at least `‖A‖max`.
    pub fn spectral_lower_bound(&self, sweeps: usize, seed: u64) -> f64 {
        let sweeps = sweeps.max(1);
        let [d1, d2, d3] = self.dims;
        let max = self.max_norm();
        if max == 0.0 {
            return 0.0;
        }

        let mut starts: Vec<[Vec<f64>; 3]> = Vec::new();
        let mut k = 0;
        'outer: for i1 in 0..d1 {
            for i2 in 0..d2 {
                for i3 in 0..d3 {
                    let a = self.values[k];
                    k += 1;
                    if a.abs() == max {
                        let mut u = vec![0.0; d1];
                        let mut v = vec![0.0; d2];
                        let mut w = vec![0.0; d3];
                        u[i1] = a.signum();
                        v[i2] = 1.0;
                        w[i3] = 1.0;
                        starts.push([u, v, w]);
                        if starts.len() >= MAX_CANONICAL_STARTS {
                            break 'outer;
                        }
                    }
                }
            }
        }

        if let Ok(hosvd) = self.leading_singular_vectors() {
            starts.push(hosvd);
        }

        let mut stream = Stream::derive(seed, 0x5EC7_0001);
        for _ in 0..SPECTRAL_RESTARTS {
            let mut draw = |n: usize| {
                let mut x: Vec<f64> = (0..n).map(|_| stream.normal()).collect();
                normalize(&mut x);
                x
            };
            let u = draw(d1);
            let v = draw(d2);
            let w = draw(d3);
            starts.push([u, v, w]);
        }

        let mut best = max;
        for [mut u, mut v, mut w] in starts {
            let mut value = self.rank_one_inner(&u, &v, &w);
            for _ in 0..sweeps {
                for mode in Mode::ALL {
                    let mut next = self.contract_except(mode, &u, &v, &w);
                    if normalize(&mut next) == 0.0 {
                        continue;
                    }
                    match mode {
                        Mode::One => u = next,
                        Mode::Two => v = next,
                        Mode::Three => w = next,
                    }
                }
                let updated = self.rank_one_inner(&u, &v, &w);
                let stalled = (updated - value).abs() <= 1e-15 * updated.abs();
                value = updated;
                if stalled {
                    break;
                }
            }
            best = best.max(value);
        }
        best
    }

    fn leading_singular_vectors(&self) -> Result<[Vec<f64>; 3]> {
        let lead = |mode: Mode| -> Result<Vec<f64>> {
            let m = self.unfold(mode).matrix;
            let gram = &m * m.transpose();
            let (_, vecs) = linalg::symmetric_eigen_desc(&gram)?;
            Ok(vecs.column(0).iter().copied().collect())
        };
        Ok([lead(Mode::One)?, lead(Mode::Two)?, lead(Mode::Three)?])
    }

    /// Multilinear ranks: for each mode, the number of singular values of the
    /// unfolding above `tol · σ_max`.
    pub fn multilinear_ranks(&self, tol: f64) -> Result<[usize; 3]> {
        if !(tol > 0.0) {
            return arg(format!("rank tolerance must be positive, got {tol}"));
        }
        let mut ranks = [0; 3];
        for mode in Mode::ALL {
            let s = linalg::singular_values(&self.unfold(mode).matrix)?;
            let top = s.first().copied().unwrap_or(0.0);
            ranks[mode.index()] = if top == 0.0 {
                0
            } else {
                s.iter().filter(|&&x| x > tol * top).count()
            };
        }
        Ok(ranks)
    }

    /// Writes the text format: a `d1 d2 d3` header line, then the values in
    /// storage order with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.dims[0], self.dims[1], self.dims[2])?;
        let mut line = String::new();
        for chunk in self.values.chunks(self.dims[2]) {
            line.clear();
            for (i, v) in chunk.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                write!(line, "{v:.16e}").expect("writing to a String cannot fail");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty tensor file".into(),
        })?;
        let header = header?;
        let dims = parse_dims(&header, 1)?;
        let expected = dims[0] * dims[1] * dims[2];
        let mut values = Vec::with_capacity(expected);
        for (ln, line) in lines {
            for tok in line?.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    message: format!("not a number: {tok:?}"),
                })?;
                values.push(v);
            }
        }
        if values.len() != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {expected} values, found {}", values.len()),
            });
        }
        Tensor3::new(dims, values)
    }
}

fn parse_dims(header: &str, line: usize) -> Result<[usize; 3]> {
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(Error::Parse {
            line,
            message: format!("expected \"d1 d2 d3\", got {header:?}"),
        });
    }
    let mut dims = [0; 3];
    for (d, t) in dims.iter_mut().zip(&toks) {
        *d = t.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad dimension {t:?}"),
        })?;
        if *d == 0 {
            return Err(Error::Parse {
                line,
                message: "dimensions must be positive".into(),
            });
        }
    }
    Ok(dims)
}

/// Cap on the number of canonical-basis starts; one suffices for the
/// `‖A‖max` guarantee, the rest only add coverage.
pub const MAX_CANONICAL_STARTS: usize = 16;
/// Number of seeded Gaussian restarts in [`Tensor3::spectral_lower_bound`].
pub const SPECTRAL_RESTARTS: usize = 8;
/// Default sweep count for [`Tensor3::spectral_lower_bound`].
pub const SPECTRAL_SWEEPS: usize = 50;
/// Default relative tolerance for [`Tensor3::multilinear_ranks`].
pub const RANK_TOL: f64 = 1e-10;

fn normalize(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Frobenius,
    Max,
}

/// A mode-`k` unfolding `M_k(A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedMatrix {
    pub mode: Mode,
    pub matrix: DMatrix<f64>,
}

impl UnfoldedMatrix {
    pub fn refold(&self, dims: [usize; 3]) -> Result<Tensor3> {
        refold(&self.matrix, self.mode, dims)
    }
}

/// Inverse of [`Tensor3::unfold`].
pub fn refold(m: &DMatrix<f64>, mode: Mode, dims: [usize; 3]) -> Result<Tensor3> {
    if dims.contains(&0) {
        return arg(format!("tensor dims must be positive, got {dims:?}"));
    }
    let rows = dims[mode.index()];
    let cols = dims[0] * dims[1] * dims[2] / rows;
    if m.shape() != (rows, cols) {
        return arg(format!(
            "mode-{} refold into {dims:?} needs a {rows}x{cols} matrix, got {}x{}",
            mode.index() + 1,
            m.nrows(),
            m.ncols()
        ));
    }
    Ok(Tensor3::from_fn(dims, |i1, i2, i3| {
        let (r, c) = unfold_position(dims, [i1, i2, i3], mode);
        m[(r, c)]
    }))
}

/// Core tensor `C ∈ R^{r1×r2×r3}` of a Tucker representation.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreTensor(Tensor3);

impl CoreTensor {
    pub fn new(dims: [usize; 3], values: Vec<f64>) -> Result<Self> {
        Tensor3::new(dims, values).map(CoreTensor)
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        CoreTensor(Tensor3::zeros(dims))
    }

    /// Superdiagonal core with the given weights.
    pub fn diagonal(weights: &[f64]) -> Self {
        let r = weights.len();
        CoreTensor(Tensor3::from_fn([r, r, r], |i, j, k| {
            if i == j && j == k {
                weights[i]
            } else {
                0.0
            }
        }))
    }

    pub fn from_tensor(t: Tensor3) -> Self {
        CoreTensor(t)
    }

    pub fn as_tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3 {
        self.0
    }
}

impl Deref for CoreTensor {
    type Target = Tensor3;

    fn deref(&self) -> &Tensor3 {
        &self.0
    }
}

/// Trilinear product `(X, Y, Z)·C = C ×₁ X ×₂ Y ×₃ Z`.
pub fn multilinear_product(
    core: &CoreTensor,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> Result<Tensor3> {
    let [r1, r2, r3] = core.dims();
    if x.ncols() != r1 || y.ncols() != r2 || z.ncols() != r3 {
        return arg(format!(
            "factor columns ({}, {}, {}) do not match core dims {:?}",
            x.ncols(),
            y.ncols(),
            z.ncols(),
            core.dims()
        ));
    }
    core.mode_product(Mode::One, x)?
        .mode_product(Mode::Two, y)?
        .mode_product(Mode::Three, z)
}

/// Columns of a matrix as owned vectors (handy for rank-one constructions).
pub fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}
