//! Normal-form arithmetic in string groups `L(p)`.
//!
//! Every element of `L(p)` is stored in its unique normal form
//! `sum l_i x_i + l c` with `0 <= l_i < p_i`, so equality of representations
//! is equality of group elements. The degree map `delta`, the functions
//! `mult` and `mu`, the distinguished elements `c` and `omega`, torsion
//! enumeration and the type trichotomy all operate on this form.

use crate::error::{Result, WplError};
use serde::{Deserialize, Serialize};

/// Default cap on `prod(p_i)` for exhaustive torsion enumeration.
pub const TORSION_CAP: u128 = 1_000_000;

/// A weight sequence `p = (p_1, ..., p_t)` with every `p_i >= 1`.
///
/// Entries equal to 1 are admitted; `canonicalize` strips them, since
/// `L(..., 1, ...)` is isomorphic to the group without that entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightSeq {
    weights: Vec<u32>,
}

impl WeightSeq {
    pub fn new(weights: Vec<u32>) -> Result<Self> {
        if weights.iter().any(|&w| w == 0) {
            return Err(WplError::Invalid("weights must be positive".into()));
        }
        Ok(WeightSeq { weights })
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Number of generators `t`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `p = lcm(p_1, ..., p_t)`, with `lcm() = 1` for the empty sequence.
    pub fn lcm(&self) -> u64 {
        self.weights
            .iter()
            .fold(1u64, |acc, &w| num_integer::lcm(acc, w as u64))
    }

    /// Product of all weights (the index of `Z c` inside `L(p)` times `p`).
    pub fn product(&self) -> u128 {
        self.weights.iter().map(|&w| w as u128).product()
    }

    /// Strip weight-1 entries; returns the canonical sequence together with
    /// the map from kept positions to original indices.
    pub fn canonicalize(&self) -> (WeightSeq, Vec<usize>) {
        let mut kept = Vec::new();
        let mut map = Vec::new();
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 1 {
                kept.push(w);
                map.push(i);
            }
        }
        (WeightSeq { weights: kept }, map)
    }

    /// Canonicalized weights sorted descending; the invariant used to decide
    /// equality of weight types up to permutation.
    pub fn canonical_multiset(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.weights.iter().copied().filter(|&w| w > 1).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }

    /// Same weight type up to permutation (after stripping 1-entries).
    pub fn same_type(&self, other: &WeightSeq) -> bool {
        self.canonical_multiset() == other.canonical_multiset()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            parent: self.clone(),
            residues: vec![0; self.len()],
            shift: 0,
        }
    }

    /// The canonical element `c = p_i x_i`.
    pub fn canonical_c(&self) -> GroupElement {
        GroupElement {
            parent: self.clone(),
            residues: vec![0; self.len()],
            shift: 1,
        }
    }

    /// Generator `x_i` (1-based index).
    pub fn generator(&self, index: usize) -> Result<GroupElement> {
        if index == 0 || index > self.len() {
            return Err(WplError::IndexOutOfRange {
                index,
                count: self.len(),
            });
        }
        let mut coeffs = vec![0i64; self.len()];
        coeffs[index - 1] = 1;
        self.element_from_raw(&coeffs, 0)
    }

    /// The dualizing element `omega = (t-2) c - sum x_i`.
    pub fn dualizing_omega(&self) -> GroupElement {
        let coeffs = vec![-1i64; self.len()];
        let t = self.len() as i64;
        self.element_from_raw(&coeffs, t - 2)
            .expect("length always matches")
    }

    /// Normal form of `sum coeffs_i x_i + shift * c`.
    pub fn element_from_raw(&self, coeffs: &[i64], shift: i64) -> Result<GroupElement> {
        if coeffs.len() != self.len() {
            return Err(WplError::LengthMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        let mut residues = vec![0u32; self.len()];
        let mut carry = shift;
        for (i, (&m, &p)) in coeffs.iter().zip(self.weights.iter()).enumerate() {
            let p = p as i64;
            let l = m.rem_euclid(p);
            let q = (m - l) / p;
            residues[i] = l as u32;
            carry += q;
        }
        Ok(GroupElement {
            parent: self.clone(),
            residues,
            shift: carry,
        })
    }

    /// All torsion elements (the kernel of `delta`), found by exhausting
    /// residue vectors and solving for the shift. Includes 0. The list has
    /// `prod(p_i) / lcm(p_i)` entries.
    pub fn torsion_subgroup(&self) -> Result<Vec<GroupElement>> {
        self.torsion_subgroup_capped(TORSION_CAP)
    }

    pub fn torsion_subgroup_capped(&self, cap: u128) -> Result<Vec<GroupElement>> {
        let prod = self.product();
        if prod > cap {
            return Err(WplError::TorsionCapExceeded(prod, cap));
        }
        let p = self.lcm() as i64;
        let mut out = Vec::new();
        let mut residues = vec![0u32; self.len()];
        loop {
            let d: i64 = residues
                .iter()
                .zip(self.weights.iter())
                .map(|(&l, &w)| l as i64 * (p / w as i64))
                .sum();
            if d % p == 0 {
                out.push(GroupElement {
                    parent: self.clone(),
                    residues: residues.clone(),
                    shift: -d / p,
                });
            }
            // next residue vector in mixed-radix order
            let mut i = 0;
            loop {
                if i == self.len() {
                    return Ok(out);
                }
                residues[i] += 1;
                if residues[i] < self.weights[i] {
                    break;
                }
                residues[i] = 0;
                i += 1;
            }
        }
    }

    /// Domestic, tubular or wild, by the sign of `delta(omega)`.
    pub fn classify_type(&self) -> GroupTypeClass {
        let d = self.dualizing_omega().delta();
        match d.cmp(&0) {
            std::cmp::Ordering::Less => GroupTypeClass::Domestic,
            std::cmp::Ordering::Equal => GroupTypeClass::Tubular,
            std::cmp::Ordering::Greater => GroupTypeClass::Wild,
        }
    }
}

/// Type of a string group, determined by the sign of `delta(omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupTypeClass {
    Domestic,
    Tubular,
    Wild,
}

impl std::fmt::Display for GroupTypeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupTypeClass::Domestic => write!(f, "domestic"),
            GroupTypeClass::Tubular => write!(f, "tubular"),
            GroupTypeClass::Wild => write!(f, "wild"),
        }
    }
}

/// An element of `L(p)` in normal form: residues `l_i` with `0 <= l_i < p_i`
/// plus the `c`-coefficient `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    parent: WeightSeq,
    residues: Vec<u32>,
    shift: i64,
}

impl GroupElement {
    pub fn parent(&self) -> &WeightSeq {
        &self.parent
    }

    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn is_zero(&self) -> bool {
        self.shift == 0 && self.residues.iter().all(|&l| l == 0)
    }

    fn check_parent(&self, other: &GroupElement) -> Result<()> {
        if self.parent != other.parent {
            return Err(WplError::ParentMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &GroupElement) -> Result<GroupElement> {
        self.check_parent(other)?;
        let coeffs: Vec<i64> = self
            .residues
            .iter()
            .zip(other.residues.iter())
            .map(|(&a, &b)| a as i64 + b as i64)
            .collect();
        self.parent
            .element_from_raw(&coeffs, self.shift + other.shift)
    }

    pub fn sub(&self, other: &GroupElement) -> Result<GroupElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GroupElement {
        let coeffs: Vec<i64> = self.residues.iter().map(|&a| -(a as i64)).collect();
        self.parent
            .element_from_raw(&coeffs, -self.shift)
            .expect("length always matches")
    }

    pub fn scalar_mul(&self, k: i64) -> GroupElement {
        let coeffs: Vec<i64> = self.residues.iter().map(|&a| k * a as i64).collect();
        self.parent
            .element_from_raw(&coeffs, k * self.shift)
            .expect("length always matches")
    }

    /// `delta(x) = sum l_i p/p_i + l p`, the degree homomorphism into `Z`.
    pub fn delta(&self) -> i64 {
        let p = self.parent.lcm() as i64;
        let res: i64 = self
            .residues
            .iter()
            .zip(self.parent.weights.iter())
            .map(|(&l, &w)| l as i64 * (p / w as i64))
            .sum();
        res + self.shift * p
    }

    /// `mult(x) = max(l + 1, 0)`, the graded dimension of the coordinate
    /// algebra in degree `x`.
    pub fn mult(&self) -> u64 {
        (self.shift + 1).max(0) as u64
    }

    /// Number of nonzero residues in the normal form.
    pub fn mu(&self) -> usize {
        self.residues.iter().filter(|&&l| l != 0).count()
    }

    /// `pi_i(x)`: the residue class `l_i mod p_i` (1-based index).
    pub fn project_component(&self, index: usize) -> Result<u32> {
        if index == 0 || index > self.parent.len() {
            return Err(WplError::IndexOutOfRange {
                index,
                count: self.parent.len(),
            });
        }
        Ok(self.residues[index - 1])
    }

    /// Additive order; `None` when the element has infinite order.
    pub fn order(&self) -> Option<u64> {
        if self.delta() != 0 {
            return None;
        }
        let mut acc = self.clone();
        let mut n = 1u64;
        while !acc.is_zero() {
            acc = acc.add(self).expect("same parent");
            n += 1;
        }
        Some(n)
    }

    /// Short display form like `x1 + 2*x3 - c`.
    pub fn display_expr(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (i, &l) in self.residues.iter().enumerate() {
            if l == 0 {
                continue;
            }
            if l == 1 {
                parts.push(format!("x{}", i + 1));
            } else {
                parts.push(format!("{}*x{}", l, i + 1));
            }
        }
        if self.shift != 0 {
            match self.shift {
                1 => parts.push("c".into()),
                -1 => parts.push("-c".into()),
                s => parts.push(format!("{}*c", s)),
            }
        }
        if parts.is_empty() {
            return "0".into();
        }
        let mut out = parts[0].clone();
        for part in &parts[1..] {
            if let Some(stripped) = part.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(part);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(w: &[u32]) -> WeightSeq {
        WeightSeq::new(w.to_vec()).unwrap()
    }

    #[test]
    fn normal_form_already_normal() {
        let p = ws(&[2, 3, 4]);
        let x = p.element_from_raw(&[1, 0, 0], 0).unwrap();
        assert_eq!(x.residues(), &[1, 0, 0]);
        assert_eq!(x.shift(), 0);
    }

    #[test]
    fn normal_form_negative_generator() {
        // -x1 = (p1 - 1) x1 - c
        let p = ws(&[2, 3, 4]);
        let x = p.element_from_raw(&[-1, 0, 0], 0).unwrap();
        assert_eq!(x.residues(), &[1, 0, 0]);
        assert_eq!(x.shift(), -1);
    }

    #[test]
    fn normal_form_torsion_element_46710() {
        // 3 x2 - 5 x4 in L(4,6,7,10) is one of the listed torsion elements
        let p = ws(&[4, 6, 7, 10]);
        let x = p.element_from_raw(&[0, 3, 0, -5], 0).unwrap();
        assert_eq!(x.residues(), &[0, 3, 0, 5]);
        assert_eq!(x.shift(), -1);
        assert_eq!(x.delta(), 0);
    }

    #[test]
    fn add_identity_and_relation() {
        let p = ws(&[2, 3, 4]);
        let x = p.element_from_raw(&[1, 2, 3], 4).unwrap();
        assert_eq!(x.add(&p.zero()).unwrap(), x);
        let x1 = p.generator(1).unwrap();
        assert_eq!(x1.add(&x1).unwrap(), p.canonical_c());
    }

    #[test]
    fn torsion_order_two_in_22() {
        // brute-force oracle: raw coefficient arithmetic then renormalize
        let p = ws(&[2, 2]);
        let g = p.element_from_raw(&[1, -1], 0).unwrap();
        let doubled = p.element_from_raw(&[2, -2], 0).unwrap();
        assert_eq!(g.scalar_mul(2), doubled);
        assert!(doubled.is_zero());
        assert_eq!(g.order(), Some(2));
    }

    #[test]
    fn omega_normal_form() {
        let p = ws(&[2, 3, 4]);
        let w = p.dualizing_omega();
        assert_eq!(w.residues(), &[1, 2, 3]);
        assert_eq!(w.shift(), -2);
    }

    #[test]
    fn omega_empty_weight_sequence() {
        let p = ws(&[]);
        let w = p.dualizing_omega();
        assert_eq!(w.shift(), -2);
        assert_eq!(w.residues().len(), 0);
    }

    #[test]
    fn omega_definition_identity() {
        for weights in [vec![2, 3, 5], vec![4, 6, 7, 10], vec![9], vec![]] {
            let p = ws(&weights);
            let t = p.len() as i64;
            let mut acc = p.dualizing_omega();
            for i in 1..=p.len() {
                acc = acc.add(&p.generator(i).unwrap()).unwrap();
            }
            acc = acc.add(&p.canonical_c().scalar_mul(-(t - 2))).unwrap();
            assert!(acc.is_zero());
        }
    }

    #[test]
    fn delta_values() {
        let p = ws(&[2, 3, 4]);
        assert_eq!(p.canonical_c().delta(), 12);
        let p = ws(&[2, 3, 5]);
        assert_eq!(p.dualizing_omega().delta(), -1);
        let p = ws(&[4, 6, 7, 10]);
        let x = p.element_from_raw(&[0, 3, 0, -5], 0).unwrap();
        assert_eq!(x.delta(), 0);
    }

    #[test]
    fn mult_values() {
        let p = ws(&[2, 3, 4]);
        assert_eq!(p.canonical_c().mult(), 2);
        assert_eq!(p.dualizing_omega().mult(), 0);
        let w3 = p
            .dualizing_omega()
            .add(&p.canonical_c().scalar_mul(3))
            .unwrap();
        assert_eq!(w3.mult(), 2);
    }

    #[test]
    fn torsion_234() {
        let p = ws(&[2, 3, 4]);
        let t = p.torsion_subgroup().unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().any(|x| x.is_zero()));
        let g = p.element_from_raw(&[1, 0, 2], -1).unwrap();
        assert!(t.contains(&g));
    }

    #[test]
    fn torsion_46710_matches_listed_elements() {
        let p = ws(&[4, 6, 7, 10]);
        let t = p.torsion_subgroup().unwrap();
        assert_eq!(t.len(), 4);
        for coeffs in [[0, 0, 0, 0], [2, -3, 0, 0], [2, 0, 0, -5], [0, 3, 0, -5]] {
            let x = p.element_from_raw(&coeffs, 0).unwrap();
            assert!(t.contains(&x), "missing {:?}", coeffs);
        }
    }

    #[test]
    fn torsion_single_weight_trivial() {
        let p = ws(&[5]);
        let t = p.torsion_subgroup().unwrap();
        assert_eq!(t.len(), 1);
        assert!(t[0].is_zero());
    }

    #[test]
    fn classify_trichotomy() {
        assert_eq!(ws(&[2, 3, 5]).classify_type(), GroupTypeClass::Domestic);
        assert_eq!(ws(&[6, 3, 2]).classify_type(), GroupTypeClass::Tubular);
        assert_eq!(ws(&[2, 2, 2, 2]).classify_type(), GroupTypeClass::Tubular);
        assert_eq!(ws(&[3, 3, 3]).classify_type(), GroupTypeClass::Tubular);
        assert_eq!(ws(&[4, 4, 2]).classify_type(), GroupTypeClass::Tubular);
        assert_eq!(ws(&[4, 6, 7, 10]).classify_type(), GroupTypeClass::Wild);
        assert_eq!(ws(&[9, 9]).classify_type(), GroupTypeClass::Domestic);
        assert_eq!(ws(&[]).classify_type(), GroupTypeClass::Domestic);
    }

    #[test]
    fn wild_46710_delta_omega() {
        let p = ws(&[4, 6, 7, 10]);
        assert_eq!(p.dualizing_omega().delta(), 563);
    }

    #[test]
    fn project_component_values() {
        let p = ws(&[2, 3]);
        assert_eq!(p.generator(1).unwrap().project_component(1).unwrap(), 1);
        assert_eq!(p.canonical_c().project_component(2).unwrap(), 0);
        let p = ws(&[2, 3, 4]);
        assert_eq!(p.dualizing_omega().project_component(3).unwrap(), 3);
        assert!(p.zero().project_component(4).is_err());
    }

    #[test]
    fn canonicalize_strips_ones() {
        let p = ws(&[1, 2, 3, 1]);
        let (canon, map) = p.canonicalize();
        assert_eq!(canon.weights(), &[2, 3]);
        assert_eq!(map, vec![1, 2]);
        assert_eq!(p.canonical_multiset(), vec![3, 2]);
    }
}
