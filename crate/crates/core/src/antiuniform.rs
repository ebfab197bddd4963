//! Anti-uniform dual norms and the `g = D_k F + H` decomposition.
//!
//! Both dual norms are estimated from below by maximizing the Rayleigh-type
//! quotient `R(f) = ⟨g, f⟩ / N(f)` over step functions on the box of `g`
//! (optionally widened by a margin), where `N` is either `‖·‖_{U(k)}` or the
//! regularized norm `(‖f‖_{U(k)}^{2^k} + δ^{2^{k+1}}‖f‖_{p_k}^{2^k})^{1/2^k}`.
//! At `N(f) = 1` the gradient is `g - R·G(f)` with
//! `G(f) = D_k f (+ δ^{2^{k+1}}‖f‖_{p_k}^{2^k-p_k}|f|^{p_k-1}sign f)`, and this
//! same vector, extended to the whole support, is the stationarity residual.

use std::collections::VecDeque;

use serde::Serialize;

use crate::check::{rel_close, within, CheckParams, CheckRecord, INEQUALITY_SLACK};
use crate::dual::dual_rec;
use crate::error::{GhkError, Result};
use crate::exponents::exponent_triple;
use crate::gowers::gowers_power;
use crate::grid::{Cell, GridFunction, LatticeBox, MAX_DIM};
use crate::sum::pairwise_sum;

const POWER_FLOOR: f64 = 1e-300;
const ARMIJO: f64 = 1e-4;
const ROUNDOFF: f64 = 8.0 * f64::EPSILON;
const MAX_BACKTRACKS: usize = 60;
const LBFGS_MEMORY: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct AscentOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step_init: f64,
    pub backtrack: f64,
    pub seed: u64,
    /// Cells added on every side of the box of `g` for the witness domain;
    /// `None` means none for dual-norm estimates and half the largest extent
    /// for [`decompose`].
    pub margin: Option<usize>,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { max_iters: 500, rel_tol: 1e-8, step_init: 1.0, backtrack: 0.5, seed: 0, margin: None }
    }
}

impl AscentOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.rel_tol > 0.0
            && self.step_init > 0.0
            && self.backtrack > 0.0
            && self.backtrack < 1.0;
        if ok {
            Ok(())
        } else {
            Err(GhkError::InvalidArgument(format!("invalid ascent options {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualNormEstimate {
    /// Certified lower bound `⟨g, witness⟩`.
    pub value: f64,
    /// Unit vector for the constraining norm.
    pub witness: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    /// `‖g - value·G(witness)‖_{s_k}` per accepted iterate, starting with the initial point.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionNorms {
    pub f_p: f64,
    pub f_u: f64,
    pub h_s: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub f: GridFunction,
    pub h: GridFunction,
    /// `D_k F`, so that `add(dual_f, h)` reproduces the normalized input.
    pub dual_f: GridFunction,
    /// The normalized input `g / scale`.
    pub g: GridFunction,
    pub c: f64,
    pub scale: f64,
    pub delta: f64,
    pub k: u32,
    pub iterations: usize,
    pub converged: bool,
    /// Optimality residual on the witness domain.
    pub stationarity_residual: f64,
    /// `‖H‖_{s_k}` restricted to cells outside the witness domain, where `H = -D_k F`.
    pub spill: f64,
    /// Cells where no float `h` gives `fl(D_k F + h) = g`.
    pub unreachable_cells: usize,
    pub residual_history: Vec<f64>,
    pub norms: DecompositionNorms,
    pub domain: LatticeBox,
}

impl DecompositionResult {
    /// Cells where `fl(D_k F + H)` differs from the normalized input.
    pub fn reconstruction_mismatches(&self) -> usize {
        let Ok(sum) = self.dual_f.add(&self.h) else {
            return usize::MAX;
        };
        let hull = sum.bbox().hull(self.g.bbox());
        let count = hull.cells().filter(|c| sum.at(c) != self.g.at(c)).count();
        count
    }

    /// Whether `fl(D_k F + H)` equals the normalized input at every cell.
    pub fn reconstruction_exact(&self) -> bool {
        self.reconstruction_mismatches() == 0
    }

    /// The three size bounds of the decomposition as check records.
    pub fn bound_records(&self) -> Vec<CheckRecord> {
        let params = CheckParams::of_grid(self.k, &self.g);
        let d = self.delta;
        vec![
            CheckRecord::new("eq4.2-f-p", params.clone(), self.norms.f_p, 1.0 / d)
                .gate(true, self.norms.f_p <= (1.0 / d) * (1.0 + 1e-6)),
            CheckRecord::new("eq4.2-f-u", params.clone(), self.norms.f_u, 1.0).gate(true, self.norms.f_u <= 1.0 + 1e-6),
            CheckRecord::new("eq4.2-h-s", params, self.norms.h_s, d).gate(true, self.norms.h_s <= d * 1.05),
        ]
    }
}

/// Which norm constrains the witness.
#[derive(Clone, Copy)]
enum Constraint {
    Uniformity,
    Triple { delta: f64 },
}

struct Objective {
    k: u32,
    p: f64,
    s: f64,
    constraint: Constraint,
    domain: LatticeBox,
    spacing: f64,
    g: GridFunction,
    g_dom: Vec<f64>,
}

struct Eval {
    value: f64,
    norm: f64,
    /// Gradient of `R` on the domain.
    grad: Vec<f64>,
    residual: f64,
}

impl Objective {
    fn new(g: &GridFunction, k: u32, constraint: Constraint, margin: usize) -> Result<Self> {
        let t = exponent_triple(k)?;
        let dim = g.dim();
        let mut lo = [0i64; MAX_DIM];
        let mut ext = [1usize; MAX_DIM];
        for a in 0..dim {
            lo[a] = g.origin()[a] - margin as i64;
            ext[a] = g.extents()[a] + 2 * margin;
        }
        let domain = LatticeBox::from_arrays(dim, lo, ext);
        let g_dom = domain.cells().map(|c| g.at(&c)).collect();
        Ok(Objective { k, p: t.p_f64(), s: t.s_f64(), constraint, domain, spacing: g.spacing(), g: g.clone(), g_dom })
    }

    fn grid(&self, x: &[f64]) -> GridFunction {
        GridFunction::from_parts(self.spacing, self.domain, x.to_vec())
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let w_d = self.spacing.powi(self.domain.dim() as i32);
        let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        w_d * pairwise_sum(&terms)
    }

    fn reg_term(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x.abs().max(POWER_FLOOR).powf(self.p - 1.0) * x.signum()
        }
    }

    /// `N(x)^{2^k}`, `D_k x`, and the coefficient of the regularizing term.
    fn parts(&self, f: &GridFunction) -> Result<(f64, GridFunction, f64)> {
        let two_k = (1u64 << self.k) as f64;
        let d = dual_rec(f, self.k)?;
        let upow = f.inner(&d)?;
        Ok(match self.constraint {
            Constraint::Uniformity => (upow, d, 0.0),
            Constraint::Triple { delta } => {
                let lp = f.lp_norm(self.p)?;
                let c = delta.powf(2.0 * two_k);
                (upow + c * lp.powf(two_k), d, c * lp.powf(two_k - self.p))
            }
        })
    }

    fn eval(&self, x: &[f64]) -> Result<Option<Eval>> {
        let two_k = (1u64 << self.k) as f64;
        let f = self.grid(x);
        let (npow, d, reg) = self.parts(&f)?;
        if !(npow > 0.0) || !npow.is_finite() {
            return Ok(None);
        }
        let norm = npow.powf(1.0 / two_k);
        let value = self.dot(&self.g_dom, x) / norm;
        let inv = norm.powf(1.0 - two_k);
        // residual r = g - R·G(x/N) on the witness domain; the gradient is r/N
        let res: Vec<f64> = self
            .domain
            .cells()
            .zip(x.iter().zip(&self.g_dom))
            .map(|(c, (&xi, &gi))| gi - value * (d.at(&c) + reg * self.reg_term(xi)) * inv)
            .collect();
        let grad: Vec<f64> = res.iter().map(|r| r / norm).collect();
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(GhkError::NonFinite("ascent gradient"));
        }
        let residual = self.grid(&res).lp_norm(self.s)?;
        Ok(Some(Eval { value, norm, grad, residual }))
    }

    /// `f₀ = |g|^{s_k-1} sign g`, the `L^{p_k}` duality maximizer.
    fn start(&self) -> Vec<f64> {
        self.g_dom.iter().map(|&v| if v == 0.0 { 0.0 } else { v.abs().powf(self.s - 1.0) * v.signum() }).collect()
    }

    fn restrict(&self, f: &GridFunction) -> Vec<f64> {
        self.domain.cells().map(|c| f.at(&c)).collect()
    }
}

struct Trace {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    stalled: bool,
    history: Vec<f64>,
}

fn scaled(x: &[f64], t: f64) -> Vec<f64> {
    x.iter().map(|v| v * t).collect()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// Monotone L-BFGS ascent on `R`, iterates kept at `N(x) = 1`.
fn ascend(obj: &Objective, x0: Vec<f64>, opts: &AscentOptions) -> Result<Trace> {
    let Some(e0) = obj.eval(&x0)? else {
        return Err(GhkError::ZeroFunction("ascent start"));
    };
    let mut x = scaled(&x0, 1.0 / e0.norm);
    let mut cur = Eval { grad: scaled(&e0.grad, e0.norm), norm: 1.0, ..e0 };
    let mut history = vec![cur.residual];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = false;

    while iterations < opts.max_iters {
        let gnorm = obj.dot(&cur.grad, &cur.grad).sqrt();
        let xnorm = obj.dot(&x, &x).sqrt();
        if gnorm * xnorm <= opts.rel_tol * cur.value.abs() {
            converged = true;
            break;
        }

        // two-loop recursion for -R; y stores the decrease of the ascent gradient
        let mut q = cur.grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * obj.dot(s, &q);
            q = axpy(&q, -a, y);
            alphas.push(a);
        }
        let gamma = match pairs.back() {
            Some((s, y, _)) => obj.dot(s, y) / obj.dot(y, y),
            None => opts.step_init * xnorm / gnorm,
        };
        let mut dir = scaled(&q, gamma);
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * obj.dot(y, &dir);
            dir = axpy(&dir, a - b, s);
        }
        let mut slope = obj.dot(&cur.grad, &dir);
        if !(slope > 0.0) {
            pairs.clear();
            dir = scaled(&cur.grad, opts.step_init * xnorm / gnorm);
            slope = obj.dot(&cur.grad, &dir);
        }

        // backtracking: Armijo, preferring steps that also shrink the residual;
        // the plain gradient is tried before settling for an Armijo-only step
        let mut fallback: Option<(Vec<f64>, Eval)> = None;
        let mut accepted: Option<(Vec<f64>, Eval)> = None;
        let steepest = scaled(&cur.grad, opts.step_init * xnorm / gnorm);
        let steepest_slope = obj.dot(&cur.grad, &steepest);
        for (dir, slope) in [(&dir, slope), (&steepest, steepest_slope)] {
            let mut t = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let trial = axpy(&x, t, dir);
                if let Some(e) = obj.eval(&trial)? {
                    let armijo = e.value >= cur.value + ARMIJO * t * slope;
                    // at the optimum R is flat to roundoff; the residual then decides
                    let neutral = e.value >= cur.value - ROUNDOFF * cur.value.abs();
                    if (armijo || neutral) && e.residual < cur.residual {
                        accepted = Some((trial, e));
                        break;
                    }
                    if armijo && fallback.is_none() {
                        fallback = Some((trial, e));
                    }
                }
                t *= opts.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((trial, e)) = accepted.or(fallback) else {
            stalled = true;
            break;
        };
        let xn = scaled(&trial, 1.0 / e.norm);
        let gn = scaled(&e.grad, e.norm);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = cur.grad.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = obj.dot(&s, &y);
        if sy > 1e-14 * obj.dot(&s, &s).sqrt() * obj.dot(&y, &y).sqrt() {
            if pairs.len() == LBFGS_MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        cur = Eval { grad: gn, norm: 1.0, ..e };
        history.push(cur.residual);
        iterations += 1;
    }
    Ok(Trace { x, iterations, converged, stalled, history })
}

fn nonzero(g: &GridFunction) -> Result<()> {
    if g.is_zero() {
        return Err(GhkError::ZeroFunction("dual norm of the zero function"));
    }
    if g.values().iter().any(|v| !v.is_finite()) {
        return Err(GhkError::NonFinite("input values"));
    }
    Ok(())
}

fn estimate(obj: &Objective, candidates: &[GridFunction], opts: &AscentOptions) -> Result<DualNormEstimate> {
    opts.validate()?;
    let mut start = obj.start();
    let mut best = obj.eval(&start)?.map(|e| e.value).unwrap_or(f64::NEG_INFINITY);
    for c in candidates {
        let x = obj.restrict(c);
        if let Some(e) = obj.eval(&x)? {
            if e.value > best {
                best = e.value;
                start = x;
            }
        }
    }
    let trace = ascend(obj, start, opts)?;
    let witness = obj.grid(&trace.x);
    // recompute the certificate from the returned witness
    let (npow, _, _) = obj.parts(&witness)?;
    let witness = witness.scale(1.0 / npow.powf(1.0 / (1u64 << obj.k) as f64));
    let value = witness.inner(&obj.g)?;
    Ok(DualNormEstimate {
        value,
        witness,
        iterations: trace.iterations,
        converged: trace.converged,
        residual_history: trace.history,
    })
}

/// Lower bound on `‖g‖*_{U(k)} = sup ⟨g, f⟩ / ‖f‖_{U(k)}`.
pub fn dual_norm_lower(g: &GridFunction, k: u32, opts: &AscentOptions) -> Result<DualNormEstimate> {
    dual_norm_lower_with(g, k, opts, &[])
}

/// As [`dual_norm_lower`], also starting from the best of `candidates` when it beats `f₀`.
pub fn dual_norm_lower_with(g: &GridFunction, k: u32, opts: &AscentOptions, candidates: &[GridFunction]) -> Result<DualNormEstimate> {
    nonzero(g)?;
    let obj = Objective::new(g, k, Constraint::Uniformity, opts.margin.unwrap_or(0))?;
    estimate(&obj, candidates, opts)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(GhkError::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// `(‖f‖_{U(k)}^{2^k} + δ^{2^{k+1}}‖f‖_{p_k}^{2^k})^{1/2^k}`.
pub fn triple_norm(f: &GridFunction, k: u32, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let p = exponent_triple(k)?.p_f64();
    let two_k = (1u64 << k) as f64;
    let lp = f.lp_norm(p)?;
    if lp == 0.0 {
        return Ok(0.0);
    }
    // factor out ‖f‖_p so the 2^k-th powers stay in range
    let u = gowers_power(f, k)?.max(0.0).powf(1.0 / two_k) / lp;
    let inner = u.powf(two_k) + delta.powf(2.0 * two_k);
    Ok(lp * inner.powf(1.0 / two_k))
}

/// Lower bound on the dual of the regularized norm.
pub fn triple_dual_lower(g: &GridFunction, k: u32, delta: f64, opts: &AscentOptions) -> Result<DualNormEstimate> {
    check_delta(delta)?;
    nonzero(g)?;
    let obj = Objective::new(g, k, Constraint::Triple { delta }, opts.margin.unwrap_or(0))?;
    estimate(&obj, &[], opts)
}

/// An `h` within a few ulps of `g - d` with `fl(d + h) == g`. `None` when no
/// such float exists: if `|d| > 2|g|` the exact sums `d + h` can sit on a
/// coarser grid than the one `g` needs.
fn exact_residual(g: f64, d: f64) -> Option<f64> {
    const WINDOW: usize = 8;
    let h0 = g - d;
    if d + h0 == g {
        return Some(h0);
    }
    let (mut up, mut down) = (h0, h0);
    for _ in 0..WINDOW {
        up = next_up(up);
        down = next_down(down);
        for h in [up, down] {
            if d + h == g {
                return Some(h);
            }
        }
    }
    None
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Splits `g` (normalized to unit dual-norm estimate) as `D_k F + H`.
pub fn decompose(g: &GridFunction, k: u32, delta: f64, opts: &AscentOptions) -> Result<DecompositionResult> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(GhkError::InvalidArgument(format!("delta must lie in (0, 1], got {delta}")));
    }
    nonzero(g)?;
    if !g.is_nonnegative() {
        return Err(GhkError::InvalidArgument("decomposition expects a nonnegative g".into()));
    }
    let margin = opts.margin.unwrap_or_else(|| g.extents().iter().max().copied().unwrap_or(0).div_ceil(2));
    let opts = &AscentOptions { margin: Some(margin), ..opts.clone() };
    let est = dual_norm_lower(g, k, opts)?;
    let scale = est.value;
    let g_n = g.scale(1.0 / scale);

    let obj = Objective::new(&g_n, k, Constraint::Triple { delta }, margin)?;
    opts.validate()?;
    let trace = ascend(&obj, obj.start(), opts)?;
    if trace.stalled && !trace.converged {
        let last = trace.history.last().copied().unwrap_or(f64::INFINITY);
        if last > 1e-4 {
            return Err(GhkError::Divergence(format!(
                "line search failed after {} iterations with residual {last:e}",
                trace.iterations
            )));
        }
    }
    let unit = obj.grid(&trace.x);
    let (npow, _, _) = obj.parts(&unit)?;
    let unit = unit.scale(1.0 / npow.powf(1.0 / (1u64 << k) as f64));
    let c = unit.inner(&g_n)?;
    let two_k = (1u64 << k) as f64;
    let f = unit.scale(c.powf(1.0 / (two_k - 1.0)));

    let dual_f = dual_rec(&f, k)?;
    let hull = dual_f.bbox().hull(g_n.bbox());
    let mut unreachable_cells = 0;
    let h_vals = hull
        .cells()
        .map(|cell| {
            let (gv, dv) = (g_n.at(&cell), dual_f.at(&cell));
            exact_residual(gv, dv).unwrap_or_else(|| {
                unreachable_cells += 1;
                gv - dv
            })
        })
        .collect();
    let h = GridFunction::from_parts(g.spacing(), hull, h_vals);

    let t = exponent_triple(k)?;
    let (p, s) = (t.p_f64(), t.s_f64());
    let f_p = f.lp_norm(p)?;
    let f_u = gowers_power(&f, k)?.max(0.0).powf(1.0 / two_k);
    let h_s = h.lp_norm(s)?;
    let stationarity_residual = stationarity(&g_n, &f, &dual_f, &obj.domain, k, delta)?;
    let outside: Vec<f64> = h.bbox().cells().zip(h.values()).map(|(c, &v)| if obj.domain.contains(&c) { 0.0 } else { v }).collect();
    let spill = GridFunction::from_parts(g.spacing(), *h.bbox(), outside).lp_norm(s)?;

    Ok(DecompositionResult {
        f,
        h,
        dual_f,
        g: g_n,
        c,
        scale,
        delta,
        k,
        iterations: trace.iterations,
        converged: trace.converged,
        stationarity_residual,
        spill,
        unreachable_cells,
        residual_history: trace.history,
        norms: DecompositionNorms { f_p, f_u, h_s },
        domain: obj.domain,
    })
}

/// `‖g - D_k F - δ^{2^{k+1}}‖F‖_{p_k}^{2^k-p_k}|F|^{p_k-1}sign F‖_{s_k}` over `domain`.
fn stationarity(g: &GridFunction, f: &GridFunction, dual_f: &GridFunction, domain: &LatticeBox, k: u32, delta: f64) -> Result<f64> {
    let t = exponent_triple(k)?;
    let (p, s) = (t.p_f64(), t.s_f64());
    let two_k = (1u64 << k) as f64;
    let coef = delta.powf(2.0 * two_k) * f.lp_norm(p)?.powf(two_k - p);
    let vals = domain
        .cells()
        .map(|c: Cell| {
            let fx = f.at(&c);
            let reg = if fx == 0.0 { 0.0 } else { fx.abs().max(POWER_FLOOR).powf(p - 1.0) * fx.signum() };
            g.at(&c) - dual_f.at(&c) - coef * reg
        })
        .collect();
    GridFunction::from_parts(g.spacing(), *domain, vals).lp_norm(s)
}

#[derive(Debug, Clone)]
pub struct Corollary5Result {
    pub f: GridFunction,
    pub theta: f64,
    pub delta: f64,
    /// Factor applied to `φ` to bring `‖φ‖_{p_k}` down to 1 (1 when already there).
    pub phi_scale: f64,
    pub pairing: f64,
    pub f_p: f64,
    pub decomposition: DecompositionResult,
}

/// `f` with `‖f‖_{p_k} <= 1` and `⟨D_k f, φ⟩ > (θ/2)^{2^k}`, `θ = ‖φ‖_{U(k)}`.
pub fn corollary5(phi: &GridFunction, k: u32, opts: &AscentOptions) -> Result<Corollary5Result> {
    let t = exponent_triple(k)?;
    let two_k = (1u64 << k) as f64;
    let lp = phi.lp_norm(t.p_f64())?;
    let phi_scale = if lp > 1.0 { 1.0 / lp } else { 1.0 };
    let phi = phi.scale(phi_scale);
    let theta = gowers_power(&phi, k)?.max(0.0).powf(1.0 / two_k);
    if !(theta > 0.0) {
        return Err(GhkError::ZeroFunction("corollary needs ‖φ‖_U(k) > 0"));
    }
    let g = dual_rec(&phi, k)?.scale(theta.powf(1.0 - two_k));
    let delta = (theta / 2.0).min(1.0);
    let decomposition = decompose(&g, k, delta, opts)?;
    let f = decomposition.f.scale(delta);
    let pairing = dual_rec(&f, k)?.inner(&phi)?;
    let f_p = f.lp_norm(t.p_f64())?;
    Ok(Corollary5Result { f, theta, delta, phi_scale, pairing, f_p, decomposition })
}

/// `‖g‖_{s_k} <= ‖g‖*_{U(k)}` through the certified estimate; gated on nonnegative `g`.
pub fn floor_gap(g: &GridFunction, k: u32, opts: &AscentOptions) -> Result<CheckRecord> {
    let s = exponent_triple(k)?.s_f64();
    let lhs = g.lp_norm(s)?;
    let est = dual_norm_lower(g, k, opts)?;
    Ok(CheckRecord::new("eq2.3-floor", CheckParams::of_grid(k, g), lhs, est.value)
        .gate(g.is_nonnegative(), lhs <= est.value / (1.0 - 1e-9)))
}

/// `⟨D_k f, h⟩ <= ‖f‖_{U(k)}^{2^k-1}‖h‖_{U(k)}`; gated on nonnegative inputs.
pub fn pairing_gap(f: &GridFunction, h: &GridFunction, k: u32) -> Result<CheckRecord> {
    let lhs = dual_rec(f, k)?.inner(h)?;
    let two_k = (1u64 << k) as f64;
    let uf = gowers_power(f, k)?.max(0.0).powf(1.0 / two_k);
    let uh = gowers_power(h, k)?.max(0.0).powf(1.0 / two_k);
    let rhs = uf.powf(two_k - 1.0) * uh;
    let gated = f.is_nonnegative() && h.is_nonnegative();
    Ok(CheckRecord::new("eq3.1-pairing", CheckParams::of_grid(k, f), lhs, rhs).gate(gated, within(lhs, rhs, INEQUALITY_SLACK)))
}

/// `⟨D_k f, f/‖f‖_{U(k)}⟩ = ‖f‖_{U(k)}^{2^k-1}` and the estimate of `‖D_k f‖*` reaching it.
pub fn witness_gap(f: &GridFunction, k: u32, opts: &AscentOptions) -> Result<CheckRecord> {
    let two_k = (1u64 << k) as f64;
    let g = dual_rec(f, k)?;
    let u = gowers_power(f, k)?.max(0.0).powf(1.0 / two_k);
    if u == 0.0 {
        return Err(GhkError::ZeroFunction("witness check needs ‖f‖_U(k) > 0"));
    }
    let pairing = g.inner(&f.scale(1.0 / u))?;
    let target = u.powf(two_k - 1.0);
    let est = dual_norm_lower(&g, k, opts)?;
    let pass = rel_close(pairing, target, 1e-9) && est.value >= target * (1.0 - 1e-9);
    Ok(CheckRecord::new("eq3.2-witness", CheckParams::of_grid(k, f), target, est.value)
        .with_rhs2(pairing)
        .gate(true, pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gowers::gowers_norm_rec;

    fn bump() -> GridFunction {
        GridFunction::new(0.25, &[0], &[5], vec![0.2, 0.7, 1.0, 0.6, 0.1]).unwrap()
    }

    #[test]
    fn zero_input_rejected() {
        let z = bump().scale(0.0);
        let o = AscentOptions::default();
        assert!(dual_norm_lower(&z, 2, &o).is_err());
        assert!(triple_dual_lower(&z, 2, 0.5, &o).is_err());
        assert!(decompose(&bump(), 2, 0.0, &o).is_err());
        assert!(decompose(&bump(), 2, 1.5, &o).is_err());
        assert!(corollary5(&z, 2, &o).is_err());
    }

    #[test]
    fn triple_norm_basics() {
        let f = bump();
        assert_eq!(triple_norm(&f.scale(0.0), 2, 0.5).unwrap(), 0.0);
        assert!(triple_norm(&f, 2, 0.0).is_err());
        let t = triple_norm(&f, 3, 0.5).unwrap();
        assert!(gowers_norm_rec(&f, 3).unwrap() <= t);
        assert!(0.25 * f.lp_norm(2.0).unwrap() <= t);
        let t2 = triple_norm(&f.scale(-3.0), 3, 0.5).unwrap();
        assert!((t2 - 3.0 * t).abs() <= 1e-12 * t2);
    }

    #[test]
    fn dual_of_dual_function() {
        let f = bump();
        let g = dual_rec(&f, 2).unwrap();
        let u = gowers_norm_rec(&f, 2).unwrap();
        let est = dual_norm_lower(&g, 2, &AscentOptions::default()).unwrap();
        assert!(est.value >= u.powi(3) * (1.0 - 1e-9), "{} vs {}", est.value, u.powi(3));
        let s = g.lp_norm(4.0).unwrap();
        assert!(est.value >= s * (1.0 - 1e-9));
    }

    #[test]
    fn ulp_adjustment() {
        for (g, d) in [(1.0, 0.3), (0.1, 0.30000000000000004), (0.0, 2.5), (1e-3, 1e-3 + 1e-12)] {
            assert_eq!(d + exact_residual(g, d).unwrap(), g);
        }
        // sums with 7.0 live on a 2^-50 grid, so 0.1 is out of reach
        assert_eq!(exact_residual(0.1, 7.0), None);
    }
}
