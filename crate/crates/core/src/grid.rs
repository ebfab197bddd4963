//! Lattice step functions with compact support.
//!
//! A [`GridFunction`] represents `f: R^d -> R` that is constant on the cells
//! `[c·w, (c+1)·w)` of the lattice `wZ^d` and vanishes outside a finite box of
//! cells. All lattice-dependent quantities (integrals, norms, pairings) are
//! Riemann sums over cells, which are exact for such functions; shifts are
//! restricted to whole lattice vectors.

use crate::budget;
use crate::error::{GhkError, Result};
use crate::sum::pairwise_sum;

pub const MAX_DIM: usize = 3;

/// Integer lattice coordinate. Axes beyond the function's dimension are 0.
pub type Cell = [i64; MAX_DIM];

/// A non-empty axis-aligned box of lattice cells `lo <= c < lo + ext`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    dim: usize,
    lo: Cell,
    ext: [usize; MAX_DIM],
}

impl LatticeBox {
    pub fn new(lo: &[i64], ext: &[usize]) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GhkError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if ext.len() != dim {
            return Err(GhkError::InvalidGrid(format!(
                "{} extents given for dimension {dim}",
                ext.len()
            )));
        }
        if ext.contains(&0) {
            return Err(GhkError::InvalidGrid("extents must be >= 1".into()));
        }
        let mut b = LatticeBox { dim, lo: [0; MAX_DIM], ext: [1; MAX_DIM] };
        b.lo[..dim].copy_from_slice(lo);
        b.ext[..dim].copy_from_slice(ext);
        Ok(b)
    }

    pub(crate) fn from_arrays(dim: usize, lo: Cell, ext: [usize; MAX_DIM]) -> Self {
        LatticeBox { dim, lo, ext }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo[..self.dim]
    }

    pub fn ext(&self) -> &[usize] {
        &self.ext[..self.dim]
    }

    pub(crate) fn lo_cell(&self) -> Cell {
        self.lo
    }

    pub(crate) fn ext_arr(&self) -> [usize; MAX_DIM] {
        self.ext
    }

    pub fn len(&self) -> usize {
        self.ext.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, c: &Cell) -> bool {
        (0..MAX_DIM).all(|a| c[a] >= self.lo[a] && c[a] < self.lo[a] + self.ext[a] as i64)
    }

    /// Row-major index of `c`, or `None` outside the box.
    #[inline]
    pub fn index(&self, c: &Cell) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..MAX_DIM {
            let off = c[a] - self.lo[a];
            if off < 0 || off >= self.ext[a] as i64 {
                return None;
            }
            idx = idx * self.ext[a] + off as usize;
        }
        Some(idx)
    }

    /// Cell at row-major position `idx`.
    #[inline]
    pub fn cell(&self, mut idx: usize) -> Cell {
        let mut c = self.lo;
        for a in (0..MAX_DIM).rev() {
            c[a] += (idx % self.ext[a]) as i64;
            idx /= self.ext[a];
        }
        c
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |i| self.cell(i))
    }

    pub fn intersect(&self, other: &LatticeBox) -> Option<LatticeBox> {
        let mut out = *self;
        for a in 0..MAX_DIM {
            let lo = self.lo[a].max(other.lo[a]);
            let hi = (self.lo[a] + self.ext[a] as i64).min(other.lo[a] + other.ext[a] as i64);
            if hi <= lo {
                return None;
            }
            out.lo[a] = lo;
            out.ext[a] = (hi - lo) as usize;
        }
        Some(out)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &LatticeBox) -> LatticeBox {
        let mut out = *self;
        for a in 0..MAX_DIM {
            let lo = self.lo[a].min(other.lo[a]);
            let hi = (self.lo[a] + self.ext[a] as i64).max(other.lo[a] + other.ext[a] as i64);
            out.lo[a] = lo;
            out.ext[a] = (hi - lo) as usize;
        }
        out
    }

    pub fn translate(&self, v: &Cell) -> LatticeBox {
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] += v[a];
        }
        out
    }

    /// Minkowski sum `{a + b}`.
    pub fn minkowski_sum(&self, other: &LatticeBox) -> LatticeBox {
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = self.lo[a] + other.lo[a];
            out.ext[a] = self.ext[a] + other.ext[a] - 1;
        }
        out
    }

    /// Reflection `{-a}`.
    pub fn reflect(&self) -> LatticeBox {
        let mut out = *self;
        for a in 0..self.dim {
            out.lo[a] = -(self.lo[a] + self.ext[a] as i64 - 1);
        }
        out
    }

    /// All lattice offsets `v` for which `self` and `self - v` overlap,
    /// i.e. the open difference box `(-N, N)` on every axis.
    pub fn difference_box(&self) -> LatticeBox {
        self.minkowski_sum(&self.reflect())
    }
}

/// A real-valued lattice step function with zero extension outside its box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    bbox: LatticeBox,
    spacing: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid from explicit row-major values, validating every invariant.
    pub fn new(spacing: f64, origin: &[i64], extents: &[usize], values: Vec<f64>) -> Result<Self> {
        let bbox = LatticeBox::new(origin, extents)?;
        Self::with_box(spacing, bbox, values)
    }

    pub fn with_box(spacing: f64, bbox: LatticeBox, values: Vec<f64>) -> Result<Self> {
        check_spacing(spacing)?;
        if values.len() != bbox.len() {
            return Err(GhkError::InvalidGrid(format!(
                "{} values for {} cells",
                values.len(),
                bbox.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GhkError::InvalidGrid("values must be finite".into()));
        }
        Ok(GridFunction { bbox, spacing, values })
    }

    pub fn zeros(spacing: f64, bbox: LatticeBox) -> Result<Self> {
        check_spacing(spacing)?;
        budget::check_cells("zeros", bbox.len() as u128)?;
        Ok(GridFunction { bbox, spacing, values: vec![0.0; bbox.len()] })
    }

    pub fn from_fn(spacing: f64, bbox: LatticeBox, f: impl Fn(&Cell) -> f64) -> Result<Self> {
        check_spacing(spacing)?;
        budget::check_cells("from_fn", bbox.len() as u128)?;
        let values = bbox.cells().map(|c| f(&c)).collect();
        Self::with_box(spacing, bbox, values)
    }

    /// Height-one indicator of the given cell box.
    pub fn indicator(spacing: f64, origin: &[i64], extents: &[usize]) -> Result<Self> {
        let bbox = LatticeBox::new(origin, extents)?;
        Self::from_fn(spacing, bbox, |_| 1.0)
    }

    /// Values already known to be finite and sized to `bbox`.
    pub(crate) fn from_parts(spacing: f64, bbox: LatticeBox, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), bbox.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        GridFunction { bbox, spacing, values }
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim
    }

    pub fn extents(&self) -> &[usize] {
        self.bbox.ext()
    }

    pub fn origin(&self) -> &[i64] {
        self.bbox.lo()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn bbox(&self) -> &LatticeBox {
        &self.bbox
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `w^d`, the Lebesgue measure of one cell.
    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    #[inline]
    pub fn at(&self, c: &Cell) -> f64 {
        match self.bbox.index(c) {
            Some(i) => self.values[i],
            None => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `op` to every value. Callers keep the result finite.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> GridFunction {
        let values: Vec<f64> = self.values.iter().map(|&v| op(v)).collect();
        GridFunction::from_parts(self.spacing, self.bbox, values)
    }

    /// `∫ f dx = w^d Σ f`.
    pub fn integral(&self) -> f64 {
        self.cell_measure() * pairwise_sum(&self.values)
    }

    /// `(w^d Σ |f|^p)^{1/p}`; `p = f64::INFINITY` gives `max |f|`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(GhkError::InvalidExponent(format!("L^p norm needs p >= 1, got {p}")));
        }
        let m = self.max_abs();
        if p.is_infinite() || m == 0.0 {
            return Ok(m);
        }
        // Factor out the maximum so large exponents neither overflow nor underflow.
        let terms: Vec<f64> = self.values.iter().map(|v| (v.abs() / m).powf(p)).collect();
        Ok(m * (self.cell_measure() * pairwise_sum(&terms)).powf(1.0 / p))
    }

    /// `f^h(x) = f(x + h)` for `h = v·w`. Only the origin moves.
    pub fn shift(&self, v: &[i64]) -> GridFunction {
        let mut neg = [0i64; MAX_DIM];
        for (a, &x) in v.iter().enumerate().take(self.dim()) {
            neg[a] = -x;
        }
        GridFunction { bbox: self.bbox.translate(&neg), spacing: self.spacing, values: self.values.clone() }
    }

    pub fn scale(&self, t: f64) -> GridFunction {
        debug_assert!(t.is_finite());
        self.map(|v| v * t)
    }

    /// Pointwise sum over the hull of both boxes.
    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        let hull = self.bbox.hull(&other.bbox);
        budget::check_cells("add", hull.len() as u128)?;
        let values = hull.cells().map(|c| self.at(&c) + other.at(&c)).collect::<Vec<_>>();
        GridFunction::with_box(self.spacing, hull, values)
    }

    /// Pointwise product over the intersection of both boxes. Disjoint boxes
    /// give the zero function on the single cell at `self`'s origin.
    pub fn pointwise_mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_compatible(other)?;
        match self.bbox.intersect(&other.bbox) {
            Some(ib) => {
                let values = ib.cells().map(|c| self.at(&c) * other.at(&c)).collect::<Vec<_>>();
                GridFunction::with_box(self.spacing, ib, values)
            }
            None => Ok(self.zero_like()),
        }
    }

    /// `⟨f, g⟩ = w^d Σ f g` over the common cells.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(match self.bbox.intersect(&other.bbox) {
            Some(ib) => {
                let terms: Vec<f64> = ib.cells().map(|c| self.at(&c) * other.at(&c)).collect();
                self.cell_measure() * pairwise_sum(&terms)
            }
            None => 0.0,
        })
    }

    /// The same function re-sampled on `bbox` (dropping anything outside).
    pub fn restrict(&self, bbox: &LatticeBox) -> GridFunction {
        let values = bbox.cells().map(|c| self.at(&c)).collect();
        GridFunction::from_parts(self.spacing, *bbox, values)
    }

    pub(crate) fn zero_like(&self) -> GridFunction {
        let bbox = LatticeBox::from_arrays(self.dim(), self.bbox.lo, [1; MAX_DIM]);
        GridFunction::from_parts(self.spacing, bbox, vec![0.0])
    }

    pub(crate) fn check_compatible(&self, other: &GridFunction) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(GhkError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        if self.spacing != other.spacing {
            return Err(GhkError::SpacingMismatch { left: self.spacing, right: other.spacing });
        }
        Ok(())
    }
}

fn check_spacing(w: f64) -> Result<()> {
    if !(w.is_finite() && w > 0.0) {
        return Err(GhkError::InvalidGrid(format!("spacing must be positive and finite, got {w}")));
    }
    Ok(())
}

/// Pads a lattice offset slice to a full [`Cell`].
pub fn cell_from(v: &[i64]) -> Cell {
    let mut c = [0i64; MAX_DIM];
    c[..v.len()].copy_from_slice(v);
    c
}
