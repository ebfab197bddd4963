//! Discrete Fourier transforms of grid functions.
//!
//! For `f` on the lattice `wZ^d` the transform is
//! `f̂(ξ) = w^d Σ_x f(x) e^{-2πi x·ξ}`, a function on the dual torus of side
//! `1/w`. Sampling it with `M` points per axis gives frequency pitch
//! `1/(M·w)`; integrals over the torus use that pitch as cell measure.
//! Padding `M >= N` keeps all samples distinct; consumers choose `M` so that
//! cyclic wraparound cannot alias the quantity they need.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, LazyLock, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{GhkError, Result};
use crate::grid::{GridFunction, MAX_DIM};
use crate::sum::pairwise_sum;

type PlanKey = (usize, bool);

static PLANS: LazyLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Cached 1-D plan; `FftPlanner` itself is not `Sync`, so plans are shared
/// behind a mutex-guarded map and used lock-free afterwards.
fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut plans = PLANS.lock().expect("fft plan cache poisoned");
    plans
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// In-place separable transform of a row-major array with shape `lens`.
pub(crate) fn fftn(data: &mut [Complex64], lens: &[usize; MAX_DIM], inverse: bool) {
    let total: usize = lens.iter().product();
    debug_assert_eq!(total, data.len());
    let mut line = Vec::new();
    for axis in 0..MAX_DIM {
        let n = lens[axis];
        if n == 1 {
            continue;
        }
        let fft = plan(n, inverse);
        let stride: usize = lens[axis + 1..].iter().product();
        let outer = total / (n * stride);
        line.resize(n, Complex64::new(0.0, 0.0));
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for j in 0..n {
                    line[j] = data[base + j * stride];
                }
                fft.process(&mut line);
                for j in 0..n {
                    data[base + j * stride] = line[j];
                }
            }
        }
    }
}

/// Zero-pads the values of `f` into a row-major array of shape `lens`.
pub(crate) fn padded(f: &GridFunction, lens: &[usize; MAX_DIM]) -> Vec<Complex64> {
    let total: usize = lens.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let b = f.bbox();
    let ext = b.ext_arr();
    for (i, &v) in f.values().iter().enumerate() {
        let mut rem = i;
        let mut local = [0usize; MAX_DIM];
        for a in (0..MAX_DIM).rev() {
            local[a] = rem % ext[a];
            rem /= ext[a];
        }
        let mut idx = 0;
        for a in 0..MAX_DIM {
            idx = idx * lens[a] + local[a];
        }
        data[idx] = Complex64::new(v, 0.0);
    }
    data
}

/// Samples of `f̂` on the dual lattice, in DFT index order per axis.
#[derive(Debug, Clone)]
pub struct Spectrum {
    dim: usize,
    lengths: [usize; MAX_DIM],
    spacing: f64,
    origin: [i64; MAX_DIM],
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths[..self.dim]
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin[..self.dim]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Frequency represented by DFT index `j` on `axis`: `j / (M·w)`.
    pub fn frequency(&self, axis: usize, j: usize) -> f64 {
        j as f64 / (self.lengths[axis] as f64 * self.spacing)
    }

    /// Measure of one frequency sample, `Π 1/(M_a·w)`.
    pub fn sample_measure(&self) -> f64 {
        self.lengths[..self.dim].iter().map(|&m| 1.0 / (m as f64 * self.spacing)).product()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(GhkError::InvalidExponent(format!("L^p norm needs p >= 1, got {p}")));
        }
        let m = self.values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if p.is_infinite() || m == 0.0 {
            return Ok(m);
        }
        let terms: Vec<f64> = self.values.iter().map(|z| (z.norm() / m).powf(p)).collect();
        Ok(m * (self.sample_measure() * pairwise_sum(&terms)).powf(1.0 / p))
    }
}

/// `f̂` sampled with `padded_len[a]` points on axis `a`.
pub fn fourier(f: &GridFunction, padded_len: &[usize]) -> Result<Spectrum> {
    let dim = f.dim();
    if padded_len.len() != dim {
        return Err(GhkError::InvalidArgument(format!(
            "{} transform lengths for dimension {dim}",
            padded_len.len()
        )));
    }
    let mut lens = [1usize; MAX_DIM];
    for a in 0..dim {
        if padded_len[a] < f.extents()[a] {
            return Err(GhkError::InvalidArgument(format!(
                "transform length {} below extent {} on axis {a}",
                padded_len[a],
                f.extents()[a]
            )));
        }
        lens[a] = padded_len[a];
    }
    let mut data = padded(f, &lens);
    fftn(&mut data, &lens, false);

    // Position the samples at x = (origin + i)·w and apply the w^d weight.
    let origin = f.bbox().lo_cell();
    let weight = f.cell_measure();
    let total = data.len();
    for (idx, z) in data.iter_mut().enumerate() {
        let mut rem = idx;
        let mut phase = 0.0;
        for a in (0..MAX_DIM).rev() {
            let j = rem % lens[a];
            rem /= lens[a];
            if origin[a] != 0 {
                let t = (origin[a].rem_euclid(lens[a] as i64) as u128 * j as u128 % lens[a] as u128) as f64;
                phase -= 2.0 * PI * t / lens[a] as f64;
            }
        }
        *z *= Complex64::from_polar(weight, phase);
    }
    debug_assert_eq!(total, data.len());
    Ok(Spectrum { dim, lengths: lens, spacing: f.spacing(), origin, values: data })
}

/// Plain cyclic autocorrelation `a(h) = Σ_y g(y) g(y+h)` (no `w` weights) for
/// every offset of the difference box, via one transform padded to `2N`.
/// Returned row-major over `g.bbox().difference_box()`.
pub(crate) fn autocorrelation_fft(g: &GridFunction) -> Vec<f64> {
    let ext = g.bbox().ext_arr();
    let mut lens = [1usize; MAX_DIM];
    for a in 0..g.dim() {
        lens[a] = 2 * ext[a];
    }
    let mut data = padded(g, &lens);
    fftn(&mut data, &lens, false);
    for z in data.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    fftn(&mut data, &lens, true);
    let total: usize = lens.iter().product();
    let scale = 1.0 / total as f64;

    let diff = g.bbox().difference_box();
    let dext = diff.ext_arr();
    let count: usize = dext.iter().product();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rem = i;
        let mut h = [0i64; MAX_DIM];
        for a in (0..MAX_DIM).rev() {
            h[a] = (rem % dext[a]) as i64 - (dext[a] as i64 - 1) / 2;
            rem /= dext[a];
        }
        // The inverse of |Ĝ|² at index j is Σ_y g(y) g(y + j) cyclically.
        let mut idx = 0usize;
        for a in 0..MAX_DIM {
            idx = idx * lens[a] + h[a].rem_euclid(lens[a] as i64) as usize;
        }
        out.push(data[idx].re * scale);
    }
    out
}
