//! Exact exponent families for level `k`:
//! `p_k = 2^k/(k+1)`, `q_k = (2^k-1)/k`, `s_k = 2^k/(2^k-k-1)`.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{GhkError, Result};

pub type Rational = Ratio<i64>;

/// Largest supported level; keeps `2^k·(k+1)` well inside `i64`.
pub const MAX_K: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentTriple {
    pub k: u32,
    pub p: Rational,
    pub q: Rational,
    pub s: Rational,
}

impl ExponentTriple {
    pub fn p_f64(&self) -> f64 {
        to_f64(self.p)
    }

    pub fn q_f64(&self) -> f64 {
        to_f64(self.q)
    }

    pub fn s_f64(&self) -> f64 {
        to_f64(self.s)
    }

    /// `2^k`, the number of cube vertices.
    pub fn vertices(&self) -> u64 {
        1u64 << self.k
    }
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().expect("rational exponent fits f64")
}

/// `a/b` as `"a"` when `b = 1`, otherwise `"a/b"`.
pub fn fraction_string(r: Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn exponent_triple(k: u32) -> Result<ExponentTriple> {
    if k < 2 {
        return Err(GhkError::InvalidExponent(format!("k = {k}: s_k needs 2^k - k - 1 > 0, so k >= 2")));
    }
    if k > MAX_K {
        return Err(GhkError::InvalidExponent(format!("k = {k} above supported maximum {MAX_K}")));
    }
    let two_k = 1i64 << k;
    let k64 = k as i64;
    Ok(ExponentTriple {
        k,
        p: Rational::new(two_k, k64 + 1),
        q: Rational::new(two_k - 1, k64),
        s: Rational::new(two_k, two_k - k64 - 1),
    })
}

/// `p_k = 2^k/(k+1)` for any `k >= 1` (level 1 gives `p_1 = 1`).
pub fn p_exponent(k: u32) -> Result<Rational> {
    if k == 0 || k > MAX_K {
        return Err(GhkError::InvalidExponent(format!("k = {k} outside 1..={MAX_K}")));
    }
    Ok(Rational::new(1i64 << k, k as i64 + 1))
}

pub fn holder_conjugate(p: Rational) -> Result<Rational> {
    if p <= Rational::one() {
        return Err(GhkError::InvalidExponent(format!("Hölder conjugate needs p > 1, got {p}")));
    }
    Ok(p / (p - Rational::one()))
}

/// The constant `A(k)` in `‖f‖_{U(k)} <= A(k)‖f‖_{p_k}`; only the upper bound
/// `A(k) <= 1` is known in closed form, so that is the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityConstant {
    pub k: u32,
    pub a: f64,
}

impl UniformityConstant {
    pub fn new(k: u32, a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(GhkError::InvalidArgument(format!("A(k) must lie in (0, 1], got {a}")));
        }
        Ok(UniformityConstant { k, a })
    }

    pub fn default_for(k: u32) -> Self {
        UniformityConstant { k, a: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn listed_triples() {
        let t2 = exponent_triple(2).unwrap();
        assert_eq!((t2.p, t2.q, t2.s), (r(4, 3), r(3, 2), r(4, 1)));
        let t3 = exponent_triple(3).unwrap();
        assert_eq!((t3.p, t3.q, t3.s), (r(2, 1), r(7, 3), r(2, 1)));
        let t4 = exponent_triple(4).unwrap();
        assert_eq!((t4.p, t4.q, t4.s), (r(16, 5), r(15, 4), r(16, 11)));
    }

    #[test]
    fn small_k_rejected() {
        assert!(exponent_triple(0).is_err());
        assert!(exponent_triple(1).is_err());
        assert!(exponent_triple(MAX_K + 1).is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(holder_conjugate(r(2, 1)).unwrap(), r(2, 1));
        assert_eq!(holder_conjugate(r(4, 3)).unwrap(), r(4, 1));
        assert_eq!(holder_conjugate(r(16, 5)).unwrap(), r(16, 11));
        assert!(holder_conjugate(r(1, 1)).is_err());
        assert!(holder_conjugate(r(1, 2)).is_err());
    }

    #[test]
    fn conjugacy_and_monotonicity_over_range() {
        let mut prev = None;
        for k in 2..=20 {
            let t = exponent_triple(k).unwrap();
            assert_eq!(holder_conjugate(t.p).unwrap(), t.s, "k = {k}");
            assert_eq!(t.p.recip() + t.s.recip(), Rational::one());
            assert!(t.p >= Rational::one() && t.q >= Rational::one() && t.s >= Rational::one());
            if let Some(pp) = prev {
                assert!(t.p > pp, "p_k must increase at k = {k}");
            }
            prev = Some(t.p);
        }
    }

    #[test]
    fn fraction_strings() {
        let t3 = exponent_triple(3).unwrap();
        assert_eq!(fraction_string(t3.p), "2");
        assert_eq!(fraction_string(t3.q), "7/3");
    }

    #[test]
    fn uniformity_constant_range() {
        assert!(UniformityConstant::new(2, 0.0).is_err());
        assert!(UniformityConstant::new(2, 1.5).is_err());
        assert_eq!(UniformityConstant::default_for(3).a, 1.0);
    }
}
