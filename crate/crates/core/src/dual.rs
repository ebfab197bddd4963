//! Dual functions `D_k f` and generalized cubic convolution products
//! `D_k(f_α : α ∈ Ṽ_k)(x) = ∫ Π_{α∈Ṽ_k} f_α(x + α·h⃗) dh⃗`, with the bounds
//! they satisfy.
//!
//! Output grids live on the conservative support box from
//! [`cube_support`]: for equal input boxes `B` this is `B + B - B`, which is
//! strictly larger than `B`.

use rayon::prelude::*;

use crate::budget;
use crate::check::{rel_close, within, CheckParams, CheckRecord, FOURIER_SLACK, IDENTITY_TOL, INEQUALITY_SLACK};
use crate::cube::{cube_support, CubeSum, FunctionTuple};
use crate::error::{GhkError, Result};
use crate::exponents::exponent_triple;
use crate::gowers::gowers_power;
use crate::grid::{Cell, GridFunction, LatticeBox, MAX_DIM};
use crate::spectrum::fourier;
use crate::sum::pairwise_sum;

fn punctured_tuple(fs: &FunctionTuple) -> Result<FunctionTuple> {
    if fs.k() < 2 {
        return Err(GhkError::InvalidArgument("cubic convolution products need k >= 2".into()));
    }
    fs.without_origin()
}

/// Direct evaluation of the generalized product on its support box.
pub fn dual_brute(fs: &FunctionTuple) -> Result<GridFunction> {
    let fs = punctured_tuple(fs)?;
    let first = &fs.functions()[0];
    let Some(out) = cube_support(&fs) else {
        return Ok(first.zero_like());
    };
    budget::check_cells("dual_brute", out.len() as u128)?;
    let values = CubeSum::new(&fs).eval_box("dual_brute", &out)?;
    Ok(GridFunction::from_parts(first.spacing(), out, values))
}

fn dual_box(b: &LatticeBox) -> LatticeBox {
    b.minkowski_sum(b).minkowski_sum(&b.reflect())
}

fn rec_cost(n: u128, shifts: u128, out: u128, k: u32) -> u128 {
    if k == 2 {
        shifts * n + out * n
    } else {
        shifts * rec_cost(n, shifts, out, k - 1) + out * shifts
    }
}

/// `D_2 g(x) = w^{2d} Σ_z g(z) a(z - x)` with `a(h) = Σ_y g(y) g(y + h)`.
fn dual2(g: &GridFunction) -> GridFunction {
    let b = *g.bbox();
    let diff = b.difference_box();
    let corr: Vec<f64> = diff
        .cells()
        .map(|h| {
            let terms: Vec<f64> = b.cells().map(|y| g.at(&y) * g.at(&add(&y, &h))).collect();
            pairwise_sum(&terms)
        })
        .collect();
    let out = dual_box(&b);
    let w_d = g.cell_measure();
    let cells: Vec<Cell> = b.cells().collect();
    let values = out
        .cells()
        .map(|x| {
            let terms: Vec<f64> = cells
                .iter()
                .zip(g.values())
                .map(|(z, &gz)| match diff.index(&sub(z, &x)) {
                    Some(i) => gz * corr[i],
                    None => 0.0,
                })
                .collect();
            w_d * w_d * pairwise_sum(&terms)
        })
        .collect();
    GridFunction::from_parts(g.spacing(), out, values)
}

fn dual_rec_inner(f: &GridFunction, k: u32) -> Result<GridFunction> {
    if k == 2 {
        return Ok(dual2(f));
    }
    // D_k f(x) = w^d Σ_v f(x + v) · D_{k-1}(f^v·f)(x)
    let dim = f.dim();
    let offsets: Vec<Cell> = f.bbox().difference_box().cells().collect();
    let inner = offsets
        .par_iter()
        .map(|v| {
            let g = f.shift(&v[..dim]).pointwise_mul(f)?;
            dual_rec_inner(&g, k - 1)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = dual_box(f.bbox());
    let w_d = f.cell_measure();
    let cells: Vec<Cell> = out.cells().collect();
    let values = cells
        .par_iter()
        .map(|x| {
            let terms: Vec<f64> = offsets
                .iter()
                .zip(&inner)
                .map(|(v, dv)| {
                    let fx = f.at(&add(x, v));
                    if fx == 0.0 {
                        0.0
                    } else {
                        fx * dv.at(x)
                    }
                })
                .collect();
            w_d * pairwise_sum(&terms)
        })
        .collect();
    Ok(GridFunction::from_parts(f.spacing(), out, values))
}

/// Multiply-add estimate for [`dual_rec`].
pub fn dual_rec_work(f: &GridFunction, k: u32) -> u128 {
    let n = f.len() as u128;
    let shifts = f.bbox().difference_box().len() as u128;
    let out = dual_box(f.bbox()).len() as u128;
    rec_cost(n, shifts, out, k.max(2))
}

/// Multiply-add count for [`dual_brute`] on the equal tuple `(f, ..., f)`.
pub fn dual_brute_work(f: &GridFunction, k: u32) -> u128 {
    let out = dual_box(f.bbox()).len() as u128;
    out * (f.len() as u128).pow(k) * ((1u128 << k) - 1)
}

/// `D_k f` by peeling one cube coordinate at a time.
pub fn dual_rec(f: &GridFunction, k: u32) -> Result<GridFunction> {
    if !(2..=16).contains(&k) {
        return Err(GhkError::InvalidArgument(format!("dual_rec needs 2 <= k <= 16, got {k}")));
    }
    budget::check_cells("dual_rec", dual_box(f.bbox()).len() as u128)?;
    budget::check_work("dual_rec", dual_rec_work(f, k))?;
    dual_rec_inner(f, k)
}

/// `max_x D_k(f_α)(x) <= Π ‖f_α‖_{q_k}`; gated on nonnegative tuples.
pub fn lemma1_gap(fs: &FunctionTuple) -> Result<CheckRecord> {
    let fs = punctured_tuple(fs)?;
    let q = exponent_triple(fs.k())?.q_f64();
    let d = dual_brute(&fs)?;
    let lhs = d.max_value().max(0.0);
    let rhs = norm_product(&fs, q)?;
    Ok(CheckRecord::new("eq2.1-lemma1", CheckParams::of_tuple(&fs), lhs, rhs)
        .gate(fs.is_nonnegative(), within(lhs, rhs, INEQUALITY_SLACK)))
}

fn norm_product(fs: &FunctionTuple, p: f64) -> Result<f64> {
    fs.functions().iter().try_fold(1.0, |acc, f| Ok(acc * f.lp_norm(p)?))
}

/// Translation modulus `max_x |D(x) - D(x + v·w)|` against the majorant
/// `Σ_β ‖f_β - f_β^{v·w}‖_{q_k} Π_{γ≠β} ‖f_γ‖_{q_k}`.
pub fn continuity_modulus(fs: &FunctionTuple, v: &[i64]) -> Result<CheckRecord> {
    let fs = punctured_tuple(fs)?;
    if v.len() != fs.dim() {
        return Err(GhkError::InvalidArgument(format!("offset of length {} for dimension {}", v.len(), fs.dim())));
    }
    let q = exponent_triple(fs.k())?.q_f64();
    let d = dual_brute(&fs)?;
    let moved = d.shift(v);
    let diff = d.add(&moved.scale(-1.0))?;
    let lhs = diff.max_abs();

    let norms: Vec<f64> = fs.functions().iter().map(|f| f.lp_norm(q)).collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(norms.len());
    for (b, fb) in fs.functions().iter().enumerate() {
        let delta = fb.add(&fb.shift(v).scale(-1.0))?.lp_norm(q)?;
        let prod: f64 = norms.iter().enumerate().map(|(g, &n)| if g == b { delta } else { n }).product();
        terms.push(prod);
    }
    let rhs = pairwise_sum(&terms);
    Ok(CheckRecord::new("eq5.2-continuity", CheckParams::of_tuple(&fs), lhs, rhs)
        .gate(fs.is_nonnegative(), within(lhs, rhs, INEQUALITY_SLACK)))
}

/// `Σ_{h⃗,u⃗} w^{2kd} Π_α f¹_α(x+α·h⃗) f²_α(x+α·h⃗+α·u⃗)` by one `2k`-fold enumeration.
fn double_cube_sum(fs1: &FunctionTuple, fs2: &FunctionTuple, x: &Cell) -> f64 {
    let k = fs1.k() as usize;
    let r1: Vec<Vec<Cell>> = (0..k).map(|i| fs1.get(1 << i).bbox().cells().collect()).collect();
    let r2: Vec<Vec<Cell>> = (0..k).map(|i| fs2.get(1 << i).bbox().cells().collect()).collect();
    let mut terms = Vec::new();
    let mut hs = vec![[0i64; MAX_DIM]; k];
    let mut us = vec![[0i64; MAX_DIM]; k];
    enumerate_hu(fs1, fs2, x, &r1, &r2, 0, &mut hs, &mut us, &mut terms);
    let w = fs1.spacing().powi(fs1.dim() as i32);
    w.powi(2 * k as i32) * pairwise_sum(&terms)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_hu(
    fs1: &FunctionTuple,
    fs2: &FunctionTuple,
    x: &Cell,
    r1: &[Vec<Cell>],
    r2: &[Vec<Cell>],
    depth: usize,
    hs: &mut [Cell],
    us: &mut [Cell],
    terms: &mut Vec<f64>,
) {
    let k = hs.len();
    if depth == 2 * k {
        let mut prod = 1.0;
        for alpha in 1u32..(1 << k) {
            let mut p1 = *x;
            let mut p2 = *x;
            for i in 0..k {
                if alpha & (1 << i) != 0 {
                    for a in 0..MAX_DIM {
                        p1[a] += hs[i][a];
                        p2[a] += hs[i][a] + us[i][a];
                    }
                }
            }
            prod *= fs1.get(alpha).at(&p1) * fs2.get(alpha).at(&p2);
        }
        terms.push(prod);
        return;
    }
    if depth < k {
        // h_i such that x + h_i lies in the box of f¹_{e_i}
        for y in &r1[depth] {
            hs[depth] = sub(y, x);
            enumerate_hu(fs1, fs2, x, r1, r2, depth + 1, hs, us, terms);
        }
    } else {
        // u_i such that x + h_i + u_i lies in the box of f²_{e_i}
        let i = depth - k;
        for z in &r2[i] {
            let base = add(x, &hs[i]);
            us[i] = sub(z, &base);
            enumerate_hu(fs1, fs2, x, r1, r2, depth + 1, hs, us, terms);
        }
    }
}

/// Pointwise `D(fs1)·D(fs2)` against the double cubic sum; identity for any signs.
pub fn product_identity_gap(fs1: &FunctionTuple, fs2: &FunctionTuple) -> Result<CheckRecord> {
    let fs1 = punctured_tuple(fs1)?;
    let fs2 = punctured_tuple(fs2)?;
    if fs1.k() != fs2.k() {
        return Err(GhkError::InvalidArgument("tuples of different levels".into()));
    }
    fs1.functions()[0].check_compatible(&fs2.functions()[0])?;
    let d1 = dual_brute(&fs1)?;
    let d2 = dual_brute(&fs2)?;
    let lhs_grid = d1.pointwise_mul(&d2)?;
    let leaves: u128 = (0..fs1.k())
        .map(|i| fs1.get(1 << i).len() as u128 * fs2.get(1 << i).len() as u128)
        .product();
    let work = lhs_grid.len() as u128 * leaves * (2u128 << fs1.k());
    budget::check_work("product_identity", work)?;
    let cells: Vec<Cell> = lhs_grid.bbox().cells().collect();
    let rhs_vals: Vec<f64> = cells.par_iter().map(|x| double_cube_sum(&fs1, &fs2, x)).collect();
    let scale = lhs_grid.max_abs().max(rhs_vals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let err = lhs_grid.values().iter().zip(&rhs_vals).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let rel = if scale > 0.0 { err / scale } else { 0.0 };
    let mut rec = CheckRecord::new("eq5.4-product-identity", CheckParams::of_tuple(&fs1), rel, IDENTITY_TOL);
    rec.ratio = Some(rel / IDENTITY_TOL);
    Ok(rec.gate(true, rel <= IDENTITY_TOL))
}

/// `max_x |D(fs1)·D(fs2)| <= Π_α ‖f¹_α‖_{q_k}‖f²_α‖_{q_k}`; gated on nonnegative inputs.
pub fn product_bound_gap(fs1: &FunctionTuple, fs2: &FunctionTuple) -> Result<CheckRecord> {
    let fs1 = punctured_tuple(fs1)?;
    let fs2 = punctured_tuple(fs2)?;
    if fs1.k() != fs2.k() {
        return Err(GhkError::InvalidArgument("tuples of different levels".into()));
    }
    let q = exponent_triple(fs1.k())?.q_f64();
    let prod = dual_brute(&fs1)?.pointwise_mul(&dual_brute(&fs2)?)?;
    let lhs = prod.max_abs();
    let rhs = norm_product(&fs1, q)? * norm_product(&fs2, q)?;
    let gated = fs1.is_nonnegative() && fs2.is_nonnegative();
    Ok(CheckRecord::new("eq5.6-product-bound", CheckParams::of_tuple(&fs1), lhs, rhs).gate(gated, within(lhs, rhs, INEQUALITY_SLACK)))
}

/// `‖ĝ‖_{p_k} <= Π ‖f_α‖_{p_k}` for `g = D_k(f_α)`, `k >= 3`.
pub fn fourier_bound_gap(fs: &FunctionTuple) -> Result<CheckRecord> {
    let fs = punctured_tuple(fs)?;
    if fs.k() < 3 {
        return Err(GhkError::InvalidArgument(format!(
            "Fourier bound needs k >= 3 so that s_k <= 2, got k = {}",
            fs.k()
        )));
    }
    let p = exponent_triple(fs.k())?.p_f64();
    let g = dual_brute(&fs)?;
    let pad: Vec<usize> = g.extents().iter().map(|&e| 2 * e).collect();
    let lhs = fourier(&g, &pad)?.lp_norm(p)?;
    let rhs = norm_product(&fs, p)?;
    Ok(CheckRecord::new("eq5.7-fourier", CheckParams::of_tuple(&fs), lhs, rhs).gate(fs.is_nonnegative(), within(lhs, rhs, FOURIER_SLACK)))
}

/// `⟨f, D_k f⟩ = ‖f‖_{U(k)}^{2^k}`; an identity for signed `f` as well.
pub fn duality_identity_gap(f: &GridFunction, k: u32) -> Result<CheckRecord> {
    let lhs = f.inner(&dual_rec(f, k)?)?;
    let rhs = gowers_power(f, k)?;
    Ok(CheckRecord::new("dual-pairing", CheckParams::of_grid(k, f), lhs, rhs).gate(true, rel_close(lhs, rhs, IDENTITY_TOL)))
}

/// `D_k(t f) = t^{2^k - 1} D_k f` pointwise; records the worst relative deviation.
pub fn homogeneity_gap(f: &GridFunction, k: u32, t: f64) -> Result<CheckRecord> {
    const TOL: f64 = 1e-12;
    let base = dual_rec(f, k)?;
    let scaled = dual_rec(&f.scale(t), k)?;
    let expected = base.scale(t.powi((1 << k) - 1));
    let scale = expected.max_abs();
    let err = scaled.values().iter().zip(expected.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let rel = if scale > 0.0 { err / scale } else { err };
    let mut rec = CheckRecord::new("eq1.6-homogeneity", CheckParams::of_grid(k, f), rel, TOL);
    rec.ratio = Some(rel / TOL);
    Ok(rec.gate(true, rel <= TOL))
}

#[inline]
fn add(a: &Cell, b: &Cell) -> Cell {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn sub(a: &Cell, b: &Cell) -> Cell {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
