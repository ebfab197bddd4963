//! Gowers-Host-Kra uniformity norms `‖f‖_{U(k)}` and the Gowers inner product.
//!
//! Three evaluation orders are provided:
//!
//! * `brute`: the non-inductive `(k+1)`-fold cube sum, `Θ(N^{(k+1)d})`;
//! * `rec`: the inductive shift recursion
//!   `‖f‖_{U(k+1)}^{2^{k+1}} = w^d Σ_h ‖f^h·f‖_{U(k)}^{2^k}`, bottoming out at
//!   `‖g‖_{U(2)}^4 = w^d Σ_h (∫ g^h g)^2` with all pair correlations taken from
//!   one transform padded to `2N`;
//! * `spectral` (k = 2 only): `‖f̂‖_4` on a transform padded to `3N`.

use rayon::prelude::*;
use serde::Serialize;

use crate::budget;
use crate::check::{rel_close, within, CheckParams, CheckRecord, IDENTITY_TOL, INEQUALITY_SLACK};
use crate::cube::{CubeSum, FunctionTuple};
use crate::error::{GhkError, Result};
use crate::exponents::{p_exponent, to_f64};
use crate::grid::{GridFunction, MAX_DIM};
use crate::spectrum::{autocorrelation_fft, fourier};
use crate::sum::pairwise_sum;

/// Relative magnitude below which a negative `U(k)^{2^k}` accumulation is
/// treated as cancellation noise and clamped to zero.
pub const CLAMP_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Brute,
    Rec,
    Spectral,
}

impl std::str::FromStr for Algo {
    type Err = GhkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Algo::Brute),
            "rec" => Ok(Algo::Rec),
            "spectral" => Ok(Algo::Spectral),
            other => Err(GhkError::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// A norm value with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEvaluation {
    pub k: u32,
    pub algo: Algo,
    /// `‖f‖_{U(k)}`.
    pub value: f64,
    /// `‖f‖_{U(k)}^{2^k}` (for `k = 1`, `(∫f)^2`).
    pub power: f64,
    /// Multiply-adds (brute) or transformed points plus products (rec, spectral).
    pub work: u64,
    /// Transform length per axis, where a transform was used.
    pub padding: Option<Vec<usize>>,
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > 16 {
        return Err(GhkError::InvalidArgument(format!("U(k) needs 1 <= k <= 16, got {k}")));
    }
    Ok(())
}

fn root(power: f64, k: u32) -> f64 {
    power.powf(1.0 / (1u64 << k) as f64)
}

/// Clamp-then-root rule for possibly slightly negative accumulations.
fn clamp_power(power: f64, k: u32, f: &GridFunction) -> Result<f64> {
    if power >= 0.0 {
        return Ok(power);
    }
    // Σ|terms| is the same cube sum over |f|, which is at most ‖f‖_{p_k}^{2^k}.
    let p = to_f64(p_exponent(k)?);
    let scale = f.lp_norm(p)?.powi(1 << k);
    let threshold = CLAMP_REL * scale;
    if power < -threshold {
        return Err(GhkError::NegativeAccumulation { k, value: power, threshold });
    }
    Ok(0.0)
}

/// `T_k(f_α : α ∈ V_k)` with its multiply-add count.
fn gowers_inner_with_work(fs: &FunctionTuple) -> Result<(f64, u128)> {
    if fs.vertices().is_punctured() {
        return Err(GhkError::InvalidArgument("Gowers inner product needs the full cube V_k".into()));
    }
    let f0 = fs.get(0);
    let engine = CubeSum::new(fs);
    let work = f0.len() as u128 * (engine.work_per_point() + 1);
    let inner = engine.eval_box("gowers_inner", f0.bbox())?;
    let terms: Vec<f64> = inner.iter().zip(f0.values()).map(|(s, v)| s * v).collect();
    Ok((f0.cell_measure() * pairwise_sum(&terms), work))
}

/// `T_k(f_α) = Σ_{x,h⃗} w^{(k+1)d} Π_{α ∈ V_k} f_α(x + α·h⃗)`.
pub fn gowers_inner(fs: &FunctionTuple) -> Result<f64> {
    gowers_inner_with_work(fs).map(|(v, _)| v)
}

pub fn gowers_brute_eval(f: &GridFunction, k: u32) -> Result<NormEvaluation> {
    check_k(k)?;
    let fs = FunctionTuple::all_equal(k, f, false)?;
    let (raw, work) = gowers_inner_with_work(&fs)?;
    let power = clamp_power(raw, k, f)?;
    Ok(NormEvaluation { k, algo: Algo::Brute, value: root(power, k), power, work: sat(work), padding: None })
}

pub fn gowers_norm_brute(f: &GridFunction, k: u32) -> Result<f64> {
    gowers_brute_eval(f, k).map(|e| e.value)
}

/// `‖g‖_{U(2)}^4` from the FFT autocorrelation, plus work.
fn u2_power_fft(g: &GridFunction) -> (f64, u128) {
    let a = autocorrelation_fft(g);
    let squares: Vec<f64> = a.iter().map(|x| x * x).collect();
    let w_d = g.cell_measure();
    let m: u128 = g.extents().iter().map(|&e| 2 * e as u128).product();
    let log = (128 - m.leading_zeros()) as u128;
    (w_d * w_d * w_d * pairwise_sum(&squares), 2 * m * log + a.len() as u128)
}

fn rec_power(f: &GridFunction, k: u32) -> Result<(f64, u128)> {
    match k {
        1 => {
            let i = f.integral();
            Ok((i * i, f.len() as u128))
        }
        2 => Ok(u2_power_fft(f)),
        _ => {
            let offsets: Vec<_> = f.bbox().difference_box().cells().collect();
            let parts = offsets
                .par_iter()
                .map(|v| {
                    let g = f.shift(&v[..f.dim()]).pointwise_mul(f)?;
                    rec_power(&g, k - 1)
                })
                .collect::<Result<Vec<_>>>()?;
            let powers: Vec<f64> = parts.iter().map(|p| p.0).collect();
            let work = parts.iter().map(|p| p.1 + f.len() as u128).sum();
            Ok((f.cell_measure() * pairwise_sum(&powers), work))
        }
    }
}

/// Estimated recursion work, checked against the budget before running.
fn rec_work_estimate(f: &GridFunction, k: u32) -> u128 {
    let n: u128 = f.extents().iter().map(|&e| e as u128).product();
    let shifts: u128 = f.extents().iter().map(|&e| 2 * e as u128).product();
    let base = 4 * shifts * (shifts.max(2).ilog2() as u128 + 1);
    match k {
        1 => n,
        _ => shifts.pow(k - 2) * (base + n),
    }
}

pub fn gowers_rec_eval(f: &GridFunction, k: u32) -> Result<NormEvaluation> {
    check_k(k)?;
    budget::check_work("gowers_norm_rec", rec_work_estimate(f, k))?;
    let (power, work) = rec_power(f, k)?;
    let value = if k == 1 { f.integral().abs() } else { root(power, k) };
    let padding = (k >= 2).then(|| f.extents().iter().map(|&e| 2 * e).collect());
    Ok(NormEvaluation { k, algo: Algo::Rec, value, power, work: sat(work), padding })
}

pub fn gowers_norm_rec(f: &GridFunction, k: u32) -> Result<f64> {
    gowers_rec_eval(f, k).map(|e| e.value)
}

/// `‖f‖_{U(k)}^{2^k}` by the recursion.
pub fn gowers_power(f: &GridFunction, k: u32) -> Result<f64> {
    gowers_rec_eval(f, k).map(|e| e.power)
}

pub fn gowers_spectral_eval(f: &GridFunction) -> Result<NormEvaluation> {
    let mut pad = Vec::with_capacity(MAX_DIM);
    for &e in f.extents() {
        pad.push(3 * e);
    }
    let spec = fourier(f, &pad)?;
    let value = spec.lp_norm(4.0)?;
    let m: u128 = pad.iter().map(|&x| x as u128).product();
    let work = m * ((128 - m.leading_zeros()) as u128) + m;
    Ok(NormEvaluation { k: 2, algo: Algo::Spectral, value, power: value.powi(4), work: sat(work), padding: Some(pad) })
}

/// `‖f̂‖_4 = ‖f‖_{U(2)}`.
pub fn gowers_norm_spectral_u2(f: &GridFunction) -> Result<f64> {
    gowers_spectral_eval(f).map(|e| e.value)
}

pub fn gowers_eval(f: &GridFunction, k: u32, algo: Algo) -> Result<NormEvaluation> {
    match algo {
        Algo::Brute => gowers_brute_eval(f, k),
        Algo::Rec => gowers_rec_eval(f, k),
        Algo::Spectral if k == 2 => gowers_spectral_eval(f),
        Algo::Spectral => Err(GhkError::InvalidArgument(format!("spectral algorithm only computes U(2), not U({k})"))),
    }
}

/// Cauchy-Schwarz-Gowers chain `T_k <= Π‖f_α‖_{U(k)} <= A(k)^{2^k} Π‖f_α‖_{p_k}`
/// with `A(k) = 1`. Gated on nonnegative tuples.
pub fn csg_gap(fs: &FunctionTuple) -> Result<CheckRecord> {
    let k = fs.k();
    let lhs = gowers_inner(fs)?;
    let p = to_f64(p_exponent(k)?);
    let mut rhs = 1.0;
    let mut rhs2 = 1.0;
    for f in fs.functions() {
        rhs *= gowers_norm_rec(f, k)?;
        rhs2 *= f.lp_norm(p)?;
    }
    let pass = within(lhs, rhs, INEQUALITY_SLACK) && within(rhs, rhs2, INEQUALITY_SLACK);
    Ok(CheckRecord::new("eq1.5-csg", CheckParams::of_tuple(fs), lhs, rhs)
        .with_rhs2(rhs2)
        .gate(fs.is_nonnegative(), pass))
}

/// `‖f‖_{U(k)} <= A(k)‖f‖_{p_k}` with `A(k) = 1`; gated on nonnegative `f`.
pub fn lp_bound_gap(f: &GridFunction, k: u32) -> Result<CheckRecord> {
    let lhs = gowers_norm_rec(f, k)?;
    let rhs = f.lp_norm(to_f64(p_exponent(k)?))?;
    Ok(CheckRecord::new("eq1.2-lp-bound", CheckParams::of_grid(k, f), lhs, rhs).gate(f.is_nonnegative(), within(lhs, rhs, INEQUALITY_SLACK)))
}

/// Recursive against brute-force evaluation; an identity for any signs.
pub fn oracle_gap(f: &GridFunction, k: u32) -> Result<CheckRecord> {
    let lhs = gowers_norm_rec(f, k)?;
    let rhs = gowers_norm_brute(f, k)?;
    Ok(CheckRecord::new("eq1.3-oracle", CheckParams::of_grid(k, f), lhs, rhs).gate(true, rel_close(lhs, rhs, IDENTITY_TOL)))
}

/// `‖f‖_{U(2)} = ‖f̂‖_4` against the brute-force cube sum.
pub fn spectral_gap(f: &GridFunction) -> Result<CheckRecord> {
    const TOL: f64 = 1e-8;
    let lhs = gowers_norm_spectral_u2(f)?;
    let rhs = gowers_norm_brute(f, 2)?;
    Ok(CheckRecord::new("eq1.1-spectral", CheckParams::of_grid(2, f), lhs, rhs).gate(true, rel_close(lhs, rhs, TOL)))
}

pub(crate) fn sat(x: u128) -> u64 {
    u64::try_from(x).unwrap_or(u64::MAX)
}
