//! Uniform sampling with replacement and the sampling operator.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{arg, Error, Result};
use crate::rng::Stream;
use crate::tensor::{CoreTensor, Tensor3};

/// One observed entry: 0-based index triple and value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub index: [usize; 3],
    pub value: f64,
}

/// The sampled entries `{(ω_i, T(ω_i))}`. Duplicates are kept; every sum over
/// samples counts an entry as many times as it was drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    dims: [usize; 3],
    samples: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(dims: [usize; 3], samples: Vec<Observation>) -> Result<Self> {
        if dims.contains(&0) {
            return arg(format!("dims must be positive, got {dims:?}"));
        }
        if samples.is_empty() {
            return arg("an observation set needs at least one sample");
        }
        for s in &samples {
            if s.index.iter().zip(&dims).any(|(i, d)| i >= d) {
                return arg(format!("index {:?} outside dims {dims:?}", s.index));
            }
        }
        Ok(Self { dims, samples })
    }

    /// Draws `n` i.i.d. uniform positions of `t` from the stream seeded by `seed`.
    pub fn sample_uniform(t: &Tensor3, n: usize, seed: u64) -> Result<Self> {
        if n < 1 {
            return arg("sample size must be at least 1");
        }
        let dims = t.dims();
        let mut stream = Stream::derive(seed, 0x0B5E_0001);
        let samples = (0..n)
            .map(|_| {
                let index = [
                    stream.index(dims[0]),
                    stream.index(dims[1]),
                    stream.index(dims[2]),
                ];
                Observation {
                    index,
                    value: t.get(index[0], index[1], index[2]),
                }
            })
            .collect();
        Ok(Self { dims, samples })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `d1 · d2 · d3`.
    pub fn volume(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn samples(&self) -> &[Observation] {
        &self.samples
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    /// `A(ω_i)` for each sample, in sample order.
    pub fn project(&self, a: &Tensor3) -> Result<Vec<f64>> {
        if a.dims() != self.dims {
            return arg(format!(
                "tensor dims {:?} do not match observation dims {:?}",
                a.dims(),
                self.dims
            ));
        }
        Ok(self
            .samples
            .iter()
            .map(|s| a.get(s.index[0], s.index[1], s.index[2]))
            .collect())
    }

    /// `((X, Y, Z)·C)(ω_i)` for each sample, without forming the dense tensor.
    pub fn evaluate_tucker_at(
        &self,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        z: &DMatrix<f64>,
        core: &CoreTensor,
    ) -> Result<Vec<f64>> {
        let rows = RowMajorFactors::new(self.dims, x, y, z, core.dims())?;
        Ok(self
            .samples
            .iter()
            .map(|s| rows.evaluate(s.index, core.values()))
            .collect())
    }

    /// Text form: `d1 d2 d3 n`, then `i1 i2 i3 value` per line, 1-based.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let [d1, d2, d3] = self.dims;
        writeln!(out, "{d1} {d2} {d3} {}", self.len())?;
        for s in &self.samples {
            writeln!(
                out,
                "{} {} {} {:.16e}",
                s.index[0] + 1,
                s.index[1] + 1,
                s.index[2] + 1,
                s.value
            )?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty observation file".into(),
        })??;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                message: format!("bad header {header:?}"),
            })?;
        if head.len() != 4 {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected \"d1 d2 d3 n\", got {header:?}"),
            });
        }
        let dims = [head[0], head[1], head[2]];
        let n = head[3];
        let mut samples = Vec::with_capacity(n);
        for (k, line) in lines.enumerate() {
            let line = line?;
            let ln = k + 2;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != 4 {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("expected \"i1 i2 i3 value\", got {line:?}"),
                });
            }
            let mut index = [0usize; 3];
            for (slot, (tok, d)) in index.iter_mut().zip(toks.iter().zip(&dims)) {
                let i: usize = tok.parse().map_err(|_| Error::Parse {
                    line: ln,
                    message: format!("bad index {tok:?}"),
                })?;
                if i == 0 || i > *d {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!("index {i} outside 1..={d}"),
                    });
                }
                *slot = i - 1;
            }
            let value = toks[3].parse().map_err(|_| Error::Parse {
                line: ln,
                message: format!("bad value {:?}", toks[3]),
            })?;
            samples.push(Observation { index, value });
        }
        if samples.len() != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {n} samples, found {}", samples.len()),
            });
        }
        ObservationSet::new(dims, samples)
    }
}

/// Factor matrices copied to row-major buffers so that each sample touches
/// three contiguous rows.
pub(crate) struct RowMajorFactors {
    pub ranks: [usize; 3],
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl RowMajorFactors {
    pub fn new(
        dims: [usize; 3],
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        z: &DMatrix<f64>,
        core_dims: [usize; 3],
    ) -> Result<Self> {
        let shapes = [x.shape(), y.shape(), z.shape()];
        for k in 0..3 {
            if shapes[k] != (dims[k], core_dims[k]) {
                return arg(format!(
                    "factor {} is {}x{}, expected {}x{}",
                    k + 1,
                    shapes[k].0,
                    shapes[k].1,
                    dims[k],
                    core_dims[k]
                ));
            }
        }
        let flat = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        Ok(Self {
            ranks: core_dims,
            x: flat(x),
            y: flat(y),
            z: flat(z),
        })
    }

    #[inline]
    pub fn rows(&self, idx: [usize; 3]) -> (&[f64], &[f64], &[f64]) {
        let [r1, r2, r3] = self.ranks;
        (
            &self.x[idx[0] * r1..(idx[0] + 1) * r1],
            &self.y[idx[1] * r2..(idx[1] + 1) * r2],
            &self.z[idx[2] * r3..(idx[2] + 1) * r3],
        )
    }

    /// `Σ C(j1,j2,j3) x_{j1} y_{j2} z_{j3}` with `core` in storage order.
    #[inline]
    pub fn evaluate(&self, idx: [usize; 3], core: &[f64]) -> f64 {
        let (xr, yr, zr) = self.rows(idx);
        let mut acc = 0.0;
        let mut k = 0;
        for &a in xr {
            for &b in yr {
                let ab = a * b;
                let mut s = 0.0;
                for &c in zr {
                    s += core[k] * c;
                    k += 1;
                }
                acc += ab * s;
            }
        }
        acc
    }

    /// Writes `x ⊗ y ⊗ z` (storage order of the core) into `out`.
    #[inline]
    pub fn kron_row(&self, idx: [usize; 3], out: &mut [f64]) {
        let (xr, yr, zr) = self.rows(idx);
        let mut k = 0;
        for &a in xr {
            for &b in yr {
                let ab = a * b;
                for &c in zr {
                    out[k] = ab * c;
                    k += 1;
                }
            }
        }
    }
}
