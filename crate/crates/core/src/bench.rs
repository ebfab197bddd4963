//! Timing harness contrasting brute-force and recursive/spectral kernels.
//!
//! Work counts follow the complexity model: brute `U(k)` is
//! `Θ(N^{(k+1)d})`, the recursion is `Θ((2N)^d · cost(k-1))`, spectral `U(2)`
//! is `Θ(M^d log M)` with `M = 3N`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::cube::FunctionTuple;
use crate::dual::{dual_brute, dual_brute_work, dual_rec, dual_rec_work};
use crate::error::{GhkError, Result};
use crate::families::{random_function, Family};
use crate::gowers::{gowers_brute_eval, gowers_rec_eval, gowers_spectral_eval, sat};
use crate::grid::GridFunction;

pub const CSV_HEADER: &str = "kernel,N,d,median_ms,work_count";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    U2Brute,
    U2Spectral,
    U3Brute,
    U3Rec,
    D2Brute,
    D3Rec,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [Kernel::U2Brute, Kernel::U2Spectral, Kernel::U3Brute, Kernel::U3Rec, Kernel::D2Brute, Kernel::D3Rec];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::U2Brute => "u2-brute",
            Kernel::U2Spectral => "u2-spectral",
            Kernel::U3Brute => "u3-brute",
            Kernel::U3Rec => "u3-rec",
            Kernel::D2Brute => "d2-brute",
            Kernel::D3Rec => "d3-rec",
        }
    }

    /// One evaluation: a representative number and the work count.
    pub fn run(self, f: &GridFunction) -> Result<(f64, u64)> {
        match self {
            Kernel::U2Brute => gowers_brute_eval(f, 2).map(|e| (e.value, e.work)),
            Kernel::U2Spectral => gowers_spectral_eval(f).map(|e| (e.value, e.work)),
            Kernel::U3Brute => gowers_brute_eval(f, 3).map(|e| (e.value, e.work)),
            Kernel::U3Rec => gowers_rec_eval(f, 3).map(|e| (e.value, e.work)),
            Kernel::D2Brute => {
                let d = dual_brute(&FunctionTuple::all_equal(2, f, true)?)?;
                Ok((d.max_abs(), sat(dual_brute_work(f, 2))))
            }
            Kernel::D3Rec => Ok((dual_rec(f, 3)?.max_abs(), sat(dual_rec_work(f, 3)))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = GhkError;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GhkError::InvalidArgument(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub kernel: Kernel,
    pub n: usize,
    pub d: usize,
    pub median_ms: f64,
    pub work_count: u64,
    /// Kernel output, kept for cross-checks between kernels.
    pub value: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{}", self.kernel, self.n, self.d, self.median_ms, self.work_count)
    }
}

/// The fixed bench input: a seeded nonnegative sample on `[0, N)^d`, `w = 1/N`.
pub fn bench_input(n: usize, d: usize, seed: u64) -> Result<GridFunction> {
    random_function(Family::RandomNonneg, d, n, 1.0 / n as f64, seed)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Median wall time of `reps` runs of `kernel` at each size.
pub fn bench(kernel: Kernel, sizes: &[usize], d: usize, reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    let reps = reps.max(1);
    sizes
        .iter()
        .map(|&n| {
            let f = bench_input(n, d, seed)?;
            let mut times = Vec::with_capacity(reps);
            let mut out = (0.0, 0);
            for _ in 0..reps {
                let start = Instant::now();
                out = kernel.run(&f)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            Ok(BenchRow { kernel, n, d, median_ms: median(&mut times), work_count: out.1, value: out.0 })
        })
        .collect()
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}
