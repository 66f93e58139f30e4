//! Finite subgroups of `L(p)` of Cyclic and Klein type.
//!
//! These are exactly the shapes that occur as kernels of admissible
//! homomorphisms: `<(p_i/n) x_i - (p_j/n) x_j>` of order `n | gcd(p_i, p_j)`,
//! and the Klein group `<(p_i/2) x_i - (p_j/2) x_j, (p_i/2) x_i - (p_k/2) x_k>`
//! when `p_i, p_j, p_k` are all even.

use crate::error::{Result, WplError};
use crate::string_group::{GroupElement, WeightSeq};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Shape tag of a finite subgroup. Indices are 1-based and strictly
/// increasing inside each variant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubgroupKind {
    Trivial,
    Cyclic { i: usize, j: usize, n: u32 },
    Klein { i: usize, j: usize, k: usize },
    Other,
}

impl SubgroupKind {
    pub fn class_label(&self, order: u64) -> String {
        match self {
            SubgroupKind::Klein { .. } => "C2xC2".to_string(),
            _ => format!("C_{}", order),
        }
    }
}

/// A finite subgroup of `L(p)` with its explicit element list (0 included),
/// sorted for deterministic output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSubgroup {
    parent: WeightSeq,
    kind: SubgroupKind,
    elements: Vec<GroupElement>,
}

fn sort_elements(elements: &mut [GroupElement]) {
    elements.sort_by(|a, b| {
        a.residues()
            .cmp(b.residues())
            .then(a.shift().cmp(&b.shift()))
    });
}

impl FiniteSubgroup {
    pub fn parent(&self) -> &WeightSeq {
        &self.parent
    }

    pub fn kind(&self) -> &SubgroupKind {
        &self.kind
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.elements.contains(x)
    }

    pub fn trivial(parent: &WeightSeq) -> FiniteSubgroup {
        FiniteSubgroup {
            parent: parent.clone(),
            kind: SubgroupKind::Trivial,
            elements: vec![parent.zero()],
        }
    }

    /// The cyclic subgroup `<(p_i/n) x_i - (p_j/n) x_j>` (1-based `i < j`).
    pub fn cyclic(parent: &WeightSeq, i: usize, j: usize, n: u32) -> Result<FiniteSubgroup> {
        let t = parent.len();
        if i == 0 || j == 0 || i >= j || j > t {
            return Err(WplError::Invalid(format!(
                "cyclic subgroup needs 1 <= i < j <= {}, got ({}, {})",
                t, i, j
            )));
        }
        let (pi, pj) = (parent.weights()[i - 1], parent.weights()[j - 1]);
        if n < 2 || num_integer::gcd(pi, pj) % n != 0 {
            return Err(WplError::Invalid(format!(
                "order {} must be >= 2 and divide gcd({}, {})",
                n, pi, pj
            )));
        }
        let mut coeffs = vec![0i64; t];
        coeffs[i - 1] = (pi / n) as i64;
        coeffs[j - 1] = -((pj / n) as i64);
        let gen = parent.element_from_raw(&coeffs, 0)?;
        let mut elements = Vec::with_capacity(n as usize);
        let mut acc = parent.zero();
        for _ in 0..n {
            elements.push(acc.clone());
            acc = acc.add(&gen)?;
        }
        debug_assert!(acc.is_zero());
        sort_elements(&mut elements);
        Ok(FiniteSubgroup {
            parent: parent.clone(),
            kind: SubgroupKind::Cyclic { i, j, n },
            elements,
        })
    }

    /// The Klein subgroup on even weights at 1-based `i < j < k`.
    pub fn klein(parent: &WeightSeq, i: usize, j: usize, k: usize) -> Result<FiniteSubgroup> {
        let t = parent.len();
        if i == 0 || i >= j || j >= k || k > t {
            return Err(WplError::Invalid(format!(
                "klein subgroup needs 1 <= i < j < k <= {}, got ({}, {}, {})",
                t, i, j, k
            )));
        }
        let w = parent.weights();
        if [i, j, k].iter().any(|&idx| w[idx - 1] % 2 != 0) {
            return Err(WplError::Invalid(
                "klein subgroup needs all three weights even".into(),
            ));
        }
        let half = |idx: usize| (w[idx - 1] / 2) as i64;
        let mut gens = Vec::new();
        for &other in &[j, k] {
            let mut coeffs = vec![0i64; t];
            coeffs[i - 1] = half(i);
            coeffs[other - 1] = -half(other);
            gens.push(parent.element_from_raw(&coeffs, 0)?);
        }
        let g1 = &gens[0];
        let g2 = &gens[1];
        let mut elements = vec![parent.zero(), g1.clone(), g2.clone(), g1.add(g2)?];
        sort_elements(&mut elements);
        Ok(FiniteSubgroup {
            parent: parent.clone(),
            kind: SubgroupKind::Klein { i, j, k },
            elements,
        })
    }

    /// Closure of a generating set under addition and negation, with the
    /// kind recognized extensionally against the Cyclic/Klein shapes.
    pub fn generated(parent: &WeightSeq, gens: &[GroupElement]) -> Result<FiniteSubgroup> {
        for g in gens {
            if g.parent() != parent {
                return Err(WplError::ParentMismatch);
            }
            if g.delta() != 0 {
                return Err(WplError::InfiniteSubgroup);
            }
        }
        let mut set: BTreeSet<(Vec<u32>, i64)> = BTreeSet::new();
        let mut elements = vec![parent.zero()];
        set.insert((vec![0; parent.len()], 0));
        let mut frontier = elements.clone();
        while let Some(x) = frontier.pop() {
            for g in gens {
                for cand in [x.add(g)?, x.sub(g)?] {
                    let key = (cand.residues().to_vec(), cand.shift());
                    if set.insert(key) {
                        elements.push(cand.clone());
                        frontier.push(cand);
                    }
                }
            }
        }
        sort_elements(&mut elements);
        let kind = recognize_kind(parent, &elements);
        Ok(FiniteSubgroup {
            parent: parent.clone(),
            kind,
            elements,
        })
    }

    /// Split `H = H1 x H2` into nontrivial factors when possible: a cyclic
    /// group of non-prime-power order splits along its smallest prime-power
    /// part, a Klein group into its two listed C2 factors.
    pub fn product_split(&self) -> Option<(FiniteSubgroup, FiniteSubgroup)> {
        match self.kind {
            SubgroupKind::Cyclic { i, j, n } => {
                let n1 = smallest_prime_power_part(n)?;
                let n2 = n / n1;
                let h1 = FiniteSubgroup::cyclic(&self.parent, i, j, n1).ok()?;
                let h2 = FiniteSubgroup::cyclic(&self.parent, i, j, n2).ok()?;
                Some((h1, h2))
            }
            SubgroupKind::Klein { i, j, k } => {
                let h1 = FiniteSubgroup::cyclic(&self.parent, i, j, 2).ok()?;
                let h2 = FiniteSubgroup::cyclic(&self.parent, i, k, 2).ok()?;
                Some((h1, h2))
            }
            _ => None,
        }
    }

    /// Generators in display form, e.g. `["x1-2*x3"]`.
    pub fn generator_exprs(&self) -> Vec<String> {
        match self.kind {
            SubgroupKind::Trivial => vec![],
            SubgroupKind::Cyclic { i, j, n } => {
                vec![cyclic_gen_expr(&self.parent, i, j, n)]
            }
            SubgroupKind::Klein { i, j, k } => vec![
                cyclic_gen_expr(&self.parent, i, j, 2),
                cyclic_gen_expr(&self.parent, i, k, 2),
            ],
            SubgroupKind::Other => self
                .elements
                .iter()
                .filter(|e| !e.is_zero())
                .map(|e| e.display_expr())
                .collect(),
        }
    }
}

fn cyclic_gen_expr(parent: &WeightSeq, i: usize, j: usize, n: u32) -> String {
    let a = parent.weights()[i - 1] / n;
    let b = parent.weights()[j - 1] / n;
    let lhs = if a == 1 {
        format!("x{}", i)
    } else {
        format!("{}*x{}", a, i)
    };
    let rhs = if b == 1 {
        format!("x{}", j)
    } else {
        format!("{}*x{}", b, j)
    };
    format!("{}-{}", lhs, rhs)
}

fn smallest_prime_power_part(n: u32) -> Option<u32> {
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut q = 1;
            while m % p == 0 {
                q *= p;
                m /= p;
            }
            // m is now the complementary coprime part
            return if m > 1 { Some(q) } else { None };
        }
        p += 1;
    }
    None // n itself is 1 or a prime (power)
}

fn recognize_kind(parent: &WeightSeq, elements: &[GroupElement]) -> SubgroupKind {
    if elements.len() == 1 {
        return SubgroupKind::Trivial;
    }
    for cand in enumerate_kernel_candidates(parent)
        .into_iter()
        .filter(|h| h.elements.len() == elements.len())
    {
        if cand.elements() == elements {
            return cand.kind;
        }
    }
    SubgroupKind::Other
}

/// All subgroups of `L(p)` of Cyclic or Klein type, preceded by the trivial
/// subgroup. Order is deterministic: cyclic by `(i, j, n)`, then Klein by
/// `(i, j, k)`.
pub fn enumerate_kernel_candidates(parent: &WeightSeq) -> Vec<FiniteSubgroup> {
    let t = parent.len();
    let w = parent.weights();
    let mut out = vec![FiniteSubgroup::trivial(parent)];
    for i in 1..=t {
        for j in (i + 1)..=t {
            let g = num_integer::gcd(w[i - 1], w[j - 1]);
            for n in 2..=g {
                if g % n == 0 {
                    out.push(
                        FiniteSubgroup::cyclic(parent, i, j, n).expect("validated divisor"),
                    );
                }
            }
        }
    }
    for i in 1..=t {
        for j in (i + 1)..=t {
            for k in (j + 1)..=t {
                if w[i - 1] % 2 == 0 && w[j - 1] % 2 == 0 && w[k - 1] % 2 == 0 {
                    out.push(FiniteSubgroup::klein(parent, i, j, k).expect("validated parity"));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(w: &[u32]) -> WeightSeq {
        WeightSeq::new(w.to_vec()).unwrap()
    }

    #[test]
    fn candidates_234() {
        let p = ws(&[2, 3, 4]);
        let subs = enumerate_kernel_candidates(&p);
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].kind(), &SubgroupKind::Trivial);
        assert_eq!(subs[1].kind(), &SubgroupKind::Cyclic { i: 1, j: 3, n: 2 });
        assert_eq!(subs[1].generator_exprs(), vec!["x1-2*x3"]);
    }

    #[test]
    fn candidates_46710() {
        let p = ws(&[4, 6, 7, 10]);
        let subs = enumerate_kernel_candidates(&p);
        // trivial + 3 cyclic pairs + 1 klein triple
        assert_eq!(subs.len(), 5);
        let kinds: Vec<&SubgroupKind> = subs.iter().map(|s| s.kind()).collect();
        assert!(kinds.contains(&&SubgroupKind::Cyclic { i: 1, j: 2, n: 2 }));
        assert!(kinds.contains(&&SubgroupKind::Cyclic { i: 1, j: 4, n: 2 }));
        assert!(kinds.contains(&&SubgroupKind::Cyclic { i: 2, j: 4, n: 2 }));
        assert!(kinds.contains(&&SubgroupKind::Klein { i: 1, j: 2, k: 4 }));
    }

    #[test]
    fn candidates_single_weight() {
        let p = ws(&[7]);
        let subs = enumerate_kernel_candidates(&p);
        assert_eq!(subs.len(), 1);
        assert!(subs[0].is_trivial());
    }

    #[test]
    fn generated_klein_2222() {
        let p = ws(&[2, 2, 2, 2]);
        let g1 = p.element_from_raw(&[1, -1, 0, 0], 0).unwrap();
        let g2 = p.element_from_raw(&[1, 0, -1, 0], 0).unwrap();
        let h = FiniteSubgroup::generated(&p, &[g1, g2]).unwrap();
        assert_eq!(h.kind(), &SubgroupKind::Klein { i: 1, j: 2, k: 3 });
        assert_eq!(h.order(), 4);
    }

    #[test]
    fn generated_empty_is_trivial() {
        let p = ws(&[2, 2]);
        let h = FiniteSubgroup::generated(&p, &[]).unwrap();
        assert!(h.is_trivial());
    }

    #[test]
    fn generated_infinite_rejected() {
        let p = ws(&[2, 2]);
        let x1 = p.generator(1).unwrap();
        assert_eq!(
            FiniteSubgroup::generated(&p, &[x1]).unwrap_err(),
            WplError::InfiniteSubgroup
        );
    }

    #[test]
    fn product_split_cyclic_six() {
        let p = ws(&[6, 6]);
        let h = FiniteSubgroup::cyclic(&p, 1, 2, 6).unwrap();
        let (h1, h2) = h.product_split().unwrap();
        assert_eq!(h1.order(), 2);
        assert_eq!(h2.order(), 3);
        assert_eq!(h1.order() * h2.order(), h.order());
        // intersection is trivial
        let common: Vec<_> = h1
            .elements()
            .iter()
            .filter(|e| h2.contains(e))
            .collect();
        assert_eq!(common.len(), 1);
    }

    #[test]
    fn product_split_klein() {
        let p = ws(&[2, 2, 2, 2]);
        let h = FiniteSubgroup::klein(&p, 1, 2, 3).unwrap();
        let (h1, h2) = h.product_split().unwrap();
        assert_eq!(h1.kind(), &SubgroupKind::Cyclic { i: 1, j: 2, n: 2 });
        assert_eq!(h2.kind(), &SubgroupKind::Cyclic { i: 1, j: 3, n: 2 });
    }

    #[test]
    fn product_split_prime_power_none() {
        let p = ws(&[4, 4]);
        let h = FiniteSubgroup::cyclic(&p, 1, 2, 4).unwrap();
        assert!(h.product_split().is_none());
        assert!(FiniteSubgroup::trivial(&p).product_split().is_none());
    }

    #[test]
    fn subgroups_are_torsion_and_closed() {
        for weights in [vec![2, 3, 4], vec![4, 6, 7, 10], vec![4, 4, 2], vec![6, 6]] {
            let p = ws(&weights);
            let torsion = p.torsion_subgroup().unwrap();
            for h in enumerate_kernel_candidates(&p) {
                for e in h.elements() {
                    assert!(torsion.contains(e));
                    assert!(h.contains(&e.neg()));
                    for f in h.elements() {
                        assert!(h.contains(&e.add(f).unwrap()));
                    }
                    if !e.is_zero() {
                        assert!(e.shift() < 0);
                        assert!(e.mu() >= 2);
                    }
                }
            }
        }
    }

    #[test]
    fn distinct_triples_distinct_subgroups() {
        let p = ws(&[4, 4, 2]);
        let subs = enumerate_kernel_candidates(&p);
        for a in 0..subs.len() {
            for b in (a + 1)..subs.len() {
                assert_ne!(subs[a].elements(), subs[b].elements());
            }
        }
    }

    #[test]
    fn cyclic_generated_by_each_order_n_element() {
        let p = ws(&[6, 6]);
        let h = FiniteSubgroup::cyclic(&p, 1, 2, 6).unwrap();
        for e in h.elements() {
            if e.order() == Some(6) {
                let regen = FiniteSubgroup::generated(&p, &[e.clone()]).unwrap();
                assert_eq!(regen.elements(), h.elements());
                assert_eq!(regen.kind(), h.kind());
            }
        }
    }
}
