//! Discrete cubes `V_k = {0,1}^k` and families of functions indexed by them.
//!
//! A vertex `α` is a bitmask: bit `i` set means `h_{i+1}` enters `α·h⃗`.
//! The brute-force cube engine evaluates
//! `S(x) = w^{kd} Σ_{h⃗} Π_{α ∈ Ṽ_k} f_α(x + α·h⃗)` by direct enumeration.
//! Writing `y_i = x + h_i`, each `y_i` only needs to range over the box of
//! `f_{e_i}`, and the vertex positions are `α·h⃗ + x = Σ_{i∈α} y_i - (|α|-1)x`.

use rayon::prelude::*;

use crate::budget;
use crate::error::{GhkError, Result};
use crate::grid::{Cell, GridFunction, LatticeBox, MAX_DIM};
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexSet {
    k: u32,
    punctured: bool,
}

impl VertexSet {
    pub fn new(k: u32, punctured: bool) -> Result<Self> {
        if k == 0 || k > 16 {
            return Err(GhkError::InvalidArgument(format!("cube dimension k = {k} outside 1..=16")));
        }
        Ok(VertexSet { k, punctured })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn is_punctured(&self) -> bool {
        self.punctured
    }

    pub fn len(&self) -> usize {
        (1usize << self.k) - usize::from(self.punctured)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn members(&self) -> impl Iterator<Item = u32> {
        let start = u32::from(self.punctured);
        start..(1u32 << self.k)
    }

    pub fn contains(&self, alpha: u32) -> bool {
        alpha < (1 << self.k) && !(self.punctured && alpha == 0)
    }

    fn slot(&self, alpha: u32) -> usize {
        alpha as usize - usize::from(self.punctured)
    }
}

/// `α ↦ f_α` over `V_k` or `Ṽ_k`, all on one lattice.
#[derive(Debug, Clone)]
pub struct FunctionTuple {
    vertices: VertexSet,
    funcs: Vec<GridFunction>,
}

impl FunctionTuple {
    /// `funcs[i]` belongs to the `i`-th member of `vertices` in increasing mask order.
    pub fn new(vertices: VertexSet, funcs: Vec<GridFunction>) -> Result<Self> {
        if funcs.len() != vertices.len() {
            return Err(GhkError::InvalidArgument(format!(
                "{} functions for {} vertices",
                funcs.len(),
                vertices.len()
            )));
        }
        for f in &funcs[1..] {
            funcs[0].check_compatible(f)?;
        }
        Ok(FunctionTuple { vertices, funcs })
    }

    pub fn full(k: u32, funcs: Vec<GridFunction>) -> Result<Self> {
        Self::new(VertexSet::new(k, false)?, funcs)
    }

    pub fn punctured(k: u32, funcs: Vec<GridFunction>) -> Result<Self> {
        Self::new(VertexSet::new(k, true)?, funcs)
    }

    pub fn all_equal(k: u32, f: &GridFunction, punctured: bool) -> Result<Self> {
        let vs = VertexSet::new(k, punctured)?;
        Self::new(vs, vec![f.clone(); vs.len()])
    }

    pub fn vertices(&self) -> VertexSet {
        self.vertices
    }

    pub fn k(&self) -> u32 {
        self.vertices.k
    }

    pub fn get(&self, alpha: u32) -> &GridFunction {
        assert!(self.vertices.contains(alpha), "vertex {alpha:#b} not in tuple");
        &self.funcs[self.vertices.slot(alpha)]
    }

    pub fn functions(&self) -> &[GridFunction] {
        &self.funcs
    }

    pub fn spacing(&self) -> f64 {
        self.funcs[0].spacing()
    }

    pub fn dim(&self) -> usize {
        self.funcs[0].dim()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.funcs.iter().all(GridFunction::is_nonnegative)
    }

    /// The punctured sub-tuple `(f_α : α ∈ Ṽ_k)`.
    pub fn without_origin(&self) -> Result<FunctionTuple> {
        if self.vertices.punctured {
            return Ok(self.clone());
        }
        FunctionTuple::punctured(self.k(), self.funcs[1..].to_vec())
    }

    pub fn map(&self, op: impl Fn(u32, &GridFunction) -> GridFunction) -> FunctionTuple {
        let funcs = self.vertices.members().zip(&self.funcs).map(|(a, f)| op(a, f)).collect();
        FunctionTuple { vertices: self.vertices, funcs }
    }
}

/// Conservative support box of `x ↦ S(x)` for a punctured tuple with `k >= 2`:
/// for each pair `i < j`, `x = y_i + y_j - y_{e_i+e_j}` must lie in
/// `B_{e_i} + B_{e_j} - B_{e_i+e_j}`.
pub fn cube_support(tuple: &FunctionTuple) -> Option<LatticeBox> {
    let k = tuple.k();
    assert!(k >= 2, "support box needs a pair of coordinates");
    let mut out: Option<LatticeBox> = None;
    for i in 0..k {
        for j in (i + 1)..k {
            let bi = tuple.get(1 << i).bbox();
            let bj = tuple.get(1 << j).bbox();
            let bij = tuple.get((1 << i) | (1 << j)).bbox();
            let cand = bi.minkowski_sum(bj).minkowski_sum(&bij.reflect());
            out = match out {
                None => Some(cand),
                Some(b) => Some(b.intersect(&cand)?),
            };
        }
    }
    out
}

/// Direct evaluator of `S(x)` for a tuple over `V_k` or `Ṽ_k` (vertex 0 ignored).
pub(crate) struct CubeSum<'a> {
    k: usize,
    by_mask: Vec<Option<&'a GridFunction>>,
    ranges: Vec<Vec<Cell>>,
    weight: f64,
}

impl<'a> CubeSum<'a> {
    pub(crate) fn new(tuple: &'a FunctionTuple) -> Self {
        let k = tuple.k() as usize;
        let by_mask = (0..(1u32 << k))
            .map(|a| if a == 0 { None } else { Some(tuple.get(a)) })
            .collect::<Vec<_>>();
        let ranges = (0..k).map(|i| tuple.get(1 << i).bbox().cells().collect()).collect();
        let weight = tuple.get(1).cell_measure().powi(k as i32);
        CubeSum { k, by_mask, ranges, weight }
    }

    /// Leaf count per evaluation point.
    pub(crate) fn leaves(&self) -> u128 {
        self.ranges.iter().map(|r| r.len() as u128).product()
    }

    /// Multiply-adds per evaluation point.
    pub(crate) fn work_per_point(&self) -> u128 {
        self.leaves() * ((1u128 << self.k) - 1)
    }

    pub(crate) fn eval(&self, x: &Cell, scratch: &mut Scratch) -> f64 {
        scratch.pos.resize(1 << self.k, [0; MAX_DIM]);
        scratch.bufs.resize_with(self.k, Vec::new);
        scratch.pos[0] = *x;
        self.weight * self.descend(0, 1.0, x, scratch)
    }

    fn descend(&self, depth: usize, partial: f64, x: &Cell, scratch: &mut Scratch) -> f64 {
        if depth == self.k {
            return partial;
        }
        let mut buf = std::mem::take(&mut scratch.bufs[depth]);
        buf.clear();
        let bit = 1usize << depth;
        for y in &self.ranges[depth] {
            let mut dy = [0i64; MAX_DIM];
            for a in 0..MAX_DIM {
                dy[a] = y[a] - x[a];
            }
            let mut prod = partial;
            for m in bit..(bit << 1) {
                let base = scratch.pos[m ^ bit];
                let mut p = base;
                for a in 0..MAX_DIM {
                    p[a] += dy[a];
                }
                scratch.pos[m] = p;
                prod *= self.by_mask[m].expect("nonzero vertex").at(&p);
            }
            buf.push(self.descend(depth + 1, prod, x, scratch));
        }
        let s = pairwise_sum(&buf);
        scratch.bufs[depth] = buf;
        s
    }

    /// `S` at every cell of `points`, in row-major order, evaluated in parallel.
    pub(crate) fn eval_box(&self, op: &'static str, points: &LatticeBox) -> Result<Vec<f64>> {
        budget::check_work(op, points.len() as u128 * self.work_per_point())?;
        let cells: Vec<Cell> = points.cells().collect();
        Ok(cells
            .par_iter()
            .map_init(Scratch::default, |s, x| self.eval(x, s))
            .collect())
    }
}

#[derive(Default)]
pub(crate) struct Scratch {
    pos: Vec<Cell>,
    bufs: Vec<Vec<f64>>,
}
