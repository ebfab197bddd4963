//! Seeded random test-function families on `[0, N)^d`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GhkError, Result};
use crate::exponents::exponent_triple;
use crate::grid::{GridFunction, LatticeBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    IndicatorBox,
    Tent,
    GaussianBump,
    RandomNonneg,
    RandomSigned,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::IndicatorBox, Family::Tent, Family::GaussianBump, Family::RandomNonneg, Family::RandomSigned];

    pub const NONNEGATIVE: [Family; 4] = [Family::IndicatorBox, Family::Tent, Family::GaussianBump, Family::RandomNonneg];

    pub fn name(self) -> &'static str {
        match self {
            Family::IndicatorBox => "indicator-box",
            Family::Tent => "tent",
            Family::GaussianBump => "gaussian-bump",
            Family::RandomNonneg => "random-nonneg",
            Family::RandomSigned => "random-signed",
        }
    }

    pub fn is_nonnegative(self) -> bool {
        self != Family::RandomSigned
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GhkError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GhkError::InvalidArgument(format!("unknown family '{s}'")))
    }
}

/// A function of `family` sampled on `[0, n)^d` with spacing `w`; a pure function of `seed`.
pub fn random_function(family: Family, d: usize, n: usize, w: f64, seed: u64) -> Result<GridFunction> {
    let bbox = LatticeBox::new(&vec![0; d], &vec![n; d])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    match family {
        Family::IndicatorBox => {
            let mut lo = vec![0i64; d];
            let mut hi = vec![0i64; d];
            for a in 0..d {
                let len = rng.gen_range(n.div_ceil(2)..=n);
                lo[a] = rng.gen_range(0..=(n - len)) as i64;
                hi[a] = lo[a] + len as i64;
            }
            GridFunction::from_fn(w, bbox, |c| {
                let inside = (0..d).all(|a| c[a] >= lo[a] && c[a] < hi[a]);
                f64::from(u8::from(inside))
            })
        }
        Family::Tent => {
            let centre: Vec<f64> = (0..d).map(|_| rng.gen_range(0.35..0.65) * nf).collect();
            let height = rng.gen_range(0.5..1.5);
            GridFunction::from_fn(w, bbox, |c| {
                let mut v = height;
                for a in 0..d {
                    v *= (1.0 - ((c[a] as f64 + 0.5) - centre[a]).abs() / (0.5 * nf)).max(0.0);
                }
                v
            })
        }
        Family::GaussianBump => {
            let centre: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..0.7) * nf).collect();
            let sigma = rng.gen_range(0.12..0.25) * nf;
            GridFunction::from_fn(w, bbox, |c| {
                let r2: f64 = (0..d).map(|a| ((c[a] as f64 + 0.5) - centre[a]).powi(2)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            })
        }
        Family::RandomNonneg => {
            let values = (0..bbox.len()).map(|_| rng.gen::<f64>()).collect();
            GridFunction::with_box(w, bbox, values)
        }
        Family::RandomSigned => {
            let values = (0..bbox.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            GridFunction::with_box(w, bbox, values)
        }
    }
}

/// [`random_function`] rescaled to `‖f‖_{p_k} = 1`.
pub fn random_normalized(family: Family, d: usize, n: usize, w: f64, seed: u64, k: u32) -> Result<GridFunction> {
    let f = random_function(family, d, n, w, seed)?;
    let norm = f.lp_norm(exponent_triple(k)?.p_f64())?;
    if norm == 0.0 {
        return Err(GhkError::ZeroFunction("cannot normalize a zero sample"));
    }
    Ok(f.scale(1.0 / norm))
}
