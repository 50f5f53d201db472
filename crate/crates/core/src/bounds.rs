//! Achievable-rate constraints for SF relaying, evaluated exactly on a
//! binary model by enumerating the joint pmf of `(X, Y, U, V)`.
//!
//! `X ~ Bern(1/2)`, `Y = X xor E`, `U = Y xor Q`, `V = Y xor W` with
//! `E ~ Bern(rho)`, `Q ~ Bern(q)`, `W ~ Bern(delta)` mutually independent.
//! The constraints are
//!
//! ```text
//! R0 >= I(X;Y)
//! R1 >= H(X|U)      R2 >= I(Y;U)        (no side information)
//! R1 >= H(X|U,V)    R2 >= I(Y;U|V)      (side information V at the decoder)
//! ```

use crate::{Error, Result};

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
    }
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

fn xlog2x(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRegionModel {
    pub rho: f64,
    pub q: f64,
    pub delta: f64,
}

impl RateRegionModel {
    pub fn new(rho: f64, q: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("q", q), ("delta", delta)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 0.5]")));
            }
        }
        Ok(RateRegionModel { rho, q, delta })
    }
}

/// Minimum rates in bits per source symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    /// `I(X;Y)`
    pub r0_min: f64,
    /// `H(X|U)`
    pub r1_min_no_side: f64,
    /// `I(Y;U)`
    pub r2_min_no_side: f64,
    /// `H(X|U,V)`
    pub r1_min: f64,
    /// `I(Y;U|V)`
    pub r2_min: f64,
}

const X: u8 = 0b1000;
const Y: u8 = 0b0100;
const U: u8 = 0b0010;
const V: u8 = 0b0001;

/// Joint pmf over the 16 cells `(x, y, u, v)`, indexed `x<<3 | y<<2 | u<<1 | v`.
fn joint_pmf(m: &RateRegionModel) -> [f64; 16] {
    let bern = |p: f64, flip: bool| if flip { p } else { 1.0 - p };
    let mut pmf = [0.0; 16];
    for (cell, p) in pmf.iter_mut().enumerate() {
        let bit = |s: u32| (cell >> s) & 1;
        let (x, y, u, v) = (bit(3), bit(2), bit(1), bit(0));
        *p = 0.5 * bern(m.rho, x != y) * bern(m.q, u != y) * bern(m.delta, v != y);
    }
    pmf
}

/// Entropy (bits) of the marginal on the variables selected by `mask`.
fn entropy(pmf: &[f64; 16], mask: u8) -> f64 {
    if mask == 0 {
        return 0.0;
    }
    let mut marginal = [0.0f64; 16];
    for (cell, p) in pmf.iter().enumerate() {
        marginal[cell & mask as usize] += p;
    }
    -marginal.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

pub fn rate_region(model: &RateRegionModel) -> RateBounds {
    let pmf = joint_pmf(model);
    let h = |mask| entropy(&pmf, mask);
    // clamp tiny negative rounding residue
    let nn = |v: f64| v.max(0.0);
    RateBounds {
        r0_min: nn(h(X) + h(Y) - h(X | Y)),
        r1_min_no_side: nn(h(X | U) - h(U)),
        r2_min_no_side: nn(h(Y) + h(U) - h(Y | U)),
        r1_min: nn(h(X | U | V) - h(U | V)),
        r2_min: nn(h(Y | V) + h(U | V) - h(Y | U | V) - h(V)),
    }
}

impl std::fmt::Display for RateBounds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "R0 >= I(X;Y)     = {:.6}", self.r0_min)?;
        writeln!(f, "R1 >= H(X|U)     = {:.6}", self.r1_min_no_side)?;
        writeln!(f, "R2 >= I(Y;U)     = {:.6}", self.r2_min_no_side)?;
        writeln!(f, "R1 >= H(X|U,V)   = {:.6}", self.r1_min)?;
        write!(f, "R2 >= I(Y;U|V)   = {:.6}", self.r2_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(p: f64) -> f64 {
        binary_entropy(p).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(h(0.5), 1.0);
        assert_eq!(h(0.0), 0.0);
        assert_eq!(h(1.0), 0.0);
        assert!((h(0.1) - 0.46900).abs() < 1e-5);
        assert!(binary_entropy(1.2).is_err());
        assert!(binary_entropy(-0.01).is_err());
    }

    #[test]
    fn degenerate_models() {
        let b = rate_region(&RateRegionModel::new(0.0, 0.2, 0.3).unwrap());
        assert!((b.r0_min - 1.0).abs() < 1e-12);
        let b = rate_region(&RateRegionModel::new(0.2, 0.5, 0.3).unwrap());
        assert!(b.r2_min_no_side.abs() < 1e-12);
    }

    #[test]
    fn worked_example() {
        let b = rate_region(&RateRegionModel::new(0.1, 0.05, 0.1).unwrap());
        assert!((b.r0_min - (1.0 - h(0.1))).abs() < 1e-12);
        assert!((b.r0_min - 0.53100).abs() < 1e-5);
        assert!((b.r2_min_no_side - (1.0 - h(0.05))).abs() < 1e-12);
        assert!((b.r2_min_no_side - 0.71360).abs() < 1e-5);
        // X and U differ by Bern(rho * q) convolution: H(X|U) = h(rho * q)
        let conv = 0.1 * 0.95 + 0.9 * 0.05;
        assert!((b.r1_min_no_side - h(conv)).abs() < 1e-12);
        assert!(b.r1_min <= b.r1_min_no_side && b.r2_min <= b.r2_min_no_side);
    }

    #[test]
    fn useless_side_information() {
        for (rho, q) in [(0.1, 0.05), (0.3, 0.2), (0.0, 0.0), (0.5, 0.5)] {
            let b = rate_region(&RateRegionModel::new(rho, q, 0.5).unwrap());
            assert!((b.r1_min - b.r1_min_no_side).abs() < 1e-12);
            assert!((b.r2_min - b.r2_min_no_side).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(RateRegionModel::new(0.6, 0.1, 0.1).is_err());
        assert!(RateRegionModel::new(0.1, -0.1, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn side_information_never_hurts(rho in 0.0f64..=0.5, q in 0.0f64..=0.5, delta in 0.0f64..=0.5) {
            let b = rate_region(&RateRegionModel::new(rho, q, delta).unwrap());
            for v in [b.r0_min, b.r1_min_no_side, b.r2_min_no_side, b.r1_min, b.r2_min] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
            prop_assert!(b.r1_min <= b.r1_min_no_side + 1e-12);
            prop_assert!(b.r2_min <= b.r2_min_no_side + 1e-12);
        }
    }
}
