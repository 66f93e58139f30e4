//! Admissible homomorphisms `pi: L(p) -> L(q)`.
//!
//! A group homomorphism is *admissible* when its image is effective (each
//! coordinate projection of the codomain is surjective on it) and the
//! mult-sum of every fiber equals the mult of its image point. Admissible
//! homomorphisms are determined by their kernels, which are finite subgroups
//! of Cyclic or Klein type; this module implements both directions:
//! verification of candidate matrices and construction from kernels,
//! together with composition, decomposition and exhaustive enumeration.

use crate::error::{Result, WplError};
use crate::string_group::{GroupElement, WeightSeq};
use crate::subgroups::{enumerate_kernel_candidates, FiniteSubgroup, SubgroupKind};
use serde_json::{json, Value};

/// A homomorphism between string groups, stored as the normal forms of the
/// generator images (the rows of the associated matrix `[A beta]`) plus the
/// image of the canonical element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringHom {
    domain: WeightSeq,
    codomain: WeightSeq,
    rows: Vec<GroupElement>,
    c_image: GroupElement,
}

impl StringHom {
    /// Build from generator images; fails unless `p_i * rows[i]` agree for
    /// all `i` (the map must send every `p_i x_i` to the same element).
    pub fn new(domain: WeightSeq, codomain: WeightSeq, rows: Vec<GroupElement>) -> Result<Self> {
        if domain.is_empty() {
            return Err(WplError::Invalid(
                "a homomorphism from L() needs an explicit image of c".into(),
            ));
        }
        let c_image = rows[0].scalar_mul(domain.weights()[0] as i64);
        Self::with_c_image(domain, codomain, rows, c_image)
    }

    /// Build with an explicit image of `c`; required when the domain has no
    /// generators, redundant (but verified) otherwise.
    pub fn with_c_image(
        domain: WeightSeq,
        codomain: WeightSeq,
        rows: Vec<GroupElement>,
        c_image: GroupElement,
    ) -> Result<Self> {
        if rows.len() != domain.len() {
            return Err(WplError::LengthMismatch {
                expected: domain.len(),
                got: rows.len(),
            });
        }
        if c_image.parent() != &codomain || rows.iter().any(|r| r.parent() != &codomain) {
            return Err(WplError::ParentMismatch);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.scalar_mul(domain.weights()[i] as i64) != c_image {
                return Err(WplError::IllDefinedHom);
            }
        }
        Ok(StringHom {
            domain,
            codomain,
            rows,
            c_image,
        })
    }

    pub fn identity(p: &WeightSeq) -> Self {
        let rows: Vec<GroupElement> = (1..=p.len()).map(|i| p.generator(i).unwrap()).collect();
        StringHom {
            domain: p.clone(),
            codomain: p.clone(),
            rows,
            c_image: p.canonical_c(),
        }
    }

    pub fn domain(&self) -> &WeightSeq {
        &self.domain
    }

    pub fn codomain(&self) -> &WeightSeq {
        &self.codomain
    }

    pub fn rows(&self) -> &[GroupElement] {
        &self.rows
    }

    pub fn c_image(&self) -> &GroupElement {
        &self.c_image
    }

    /// Linear extension to all of `L(p)`.
    pub fn eval(&self, x: &GroupElement) -> Result<GroupElement> {
        if x.parent() != &self.domain {
            return Err(WplError::ParentMismatch);
        }
        let mut acc = self.c_image.scalar_mul(x.shift());
        for (row, &l) in self.rows.iter().zip(x.residues().iter()) {
            if l != 0 {
                acc = acc.add(&row.scalar_mul(l as i64))?;
            }
        }
        Ok(acc)
    }

    /// The kernel as an explicit finite subgroup; `InfiniteKernel` when the
    /// image of `c` is torsion (rank collapse).
    pub fn kernel(&self) -> Result<FiniteSubgroup> {
        if self.c_image.delta() == 0 {
            return Err(WplError::InfiniteKernel);
        }
        let torsion = self.domain.torsion_subgroup()?;
        let elems: Vec<GroupElement> = torsion
            .into_iter()
            .filter(|y| self.eval(y).expect("same parent").is_zero())
            .collect();
        FiniteSubgroup::generated(&self.domain, &elems)
    }

    /// Effectiveness of the image: `gcd(a_1j, ..., a_tj, q_j) = 1` for every
    /// column `j`.
    pub fn is_effective(&self) -> bool {
        for (j, &qj) in self.codomain.weights().iter().enumerate() {
            let mut g = qj as u64;
            for row in &self.rows {
                g = num_integer::gcd(g, row.residues()[j] as u64);
            }
            if g != 1 {
                return false;
            }
        }
        true
    }

    /// Decide admissibility by checking the defining mult-sum identity on a
    /// finite certificate window.
    ///
    /// Along each residue class `x0 + Z c`, the fiber sum over the kernel is
    /// eventually linear in the shift `l` with slope `|K|`, while the mult of
    /// the image is eventually quasi-linear with period dividing
    /// `q = lcm(codomain)`. Matching on `[-B, B + 2q]` with
    /// `B = sum(p_i) + sum(q_j) + |K| + 2` covers the transient range plus
    /// two full periods of the settled regime, which pins both tails.
    pub fn is_admissible_window(&self) -> bool {
        if !self.is_effective() {
            return false;
        }
        if self.c_image.delta() == 0 {
            return false;
        }
        let kernel = match self.kernel() {
            Ok(k) => k,
            Err(_) => return false,
        };
        let p_sum: i64 = self.domain.weights().iter().map(|&w| w as i64).sum();
        let q_sum: i64 = self.codomain.weights().iter().map(|&w| w as i64).sum();
        let b = p_sum + q_sum + kernel.order() as i64 + 2;
        let q = self.codomain.lcm() as i64;
        let lo = -b;
        let hi = b + 2 * q;

        let t = self.domain.len();
        let mut residues = vec![0u32; t];
        loop {
            let x0 = self
                .domain
                .element_from_raw(
                    &residues.iter().map(|&r| r as i64).collect::<Vec<_>>(),
                    0,
                )
                .expect("length matches");
            // shifts of x0 + h for h in the kernel: adding l*c only moves the shift
            let kernel_shifts: Vec<i64> = kernel
                .elements()
                .iter()
                .map(|h| x0.add(h).expect("same parent").shift())
                .collect();
            let z0 = self.eval(&x0).expect("same parent");
            for l in lo..=hi {
                let lhs: i64 = kernel_shifts.iter().map(|&s| (l + s + 1).max(0)).sum();
                let rhs = shift_of_combination(&z0, &self.c_image, l) + 1;
                if lhs != rhs.max(0) {
                    return false;
                }
            }
            // next residue vector
            let mut i = 0;
            loop {
                if i == t {
                    return true;
                }
                residues[i] += 1;
                if residues[i] < self.domain.weights()[i] {
                    break;
                }
                residues[i] = 0;
                i += 1;
            }
        }
    }

    /// Decide admissibility structurally: the kernel must be of Trivial,
    /// Cyclic or Klein shape, the codomain must match the derived weight
    /// sequence, and the matrix must match the canonical generator pattern
    /// up to a weight-preserving permutation of codomain generators.
    pub fn is_admissible_structural(&self) -> bool {
        if self.c_image.delta() == 0 {
            return false;
        }
        let kernel = match self.kernel() {
            Ok(k) => k,
            Err(_) => return false,
        };
        match *kernel.kind() {
            SubgroupKind::Trivial => self.matches_generator_bijection(),
            SubgroupKind::Cyclic { i, j, n } => self.matches_canonical_pattern(&[i, j], n as u64),
            SubgroupKind::Klein { i, j, k } => self.matches_canonical_pattern(&[i, j, k], 2),
            SubgroupKind::Other => false,
        }
    }

    /// Trivial-kernel case: a weight-preserving bijection of generators.
    fn matches_generator_bijection(&self) -> bool {
        if self.c_image != self.codomain.canonical_c() {
            return false;
        }
        let qw = self.codomain.weights();
        let mut used = vec![false; qw.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let pi = self.domain.weights()[i];
            if pi == 1 {
                if row != &self.codomain.canonical_c() {
                    return false;
                }
                continue;
            }
            if row.shift() != 0 {
                return false;
            }
            let support: Vec<usize> = (0..qw.len()).filter(|&j| row.residues()[j] != 0).collect();
            if support.len() != 1 {
                return false;
            }
            let j = support[0];
            if row.residues()[j] != 1 || qw[j] != pi || used[j] {
                return false;
            }
            used[j] = true;
        }
        // every canonical codomain generator must be hit
        (0..qw.len()).all(|j| used[j] || qw[j] == 1)
    }

    /// Cyclic/Klein case. `kernel_indices` are the 1-based domain indices of
    /// the kernel; `per_index` is `n` for Cyclic and 2 for Klein, i.e. how
    /// many codomain generators each kernel index consumes is 1 resp. 2 and
    /// each satellite consumes `n` resp. 4.
    fn matches_canonical_pattern(&self, kernel_indices: &[usize], per_index: u64) -> bool {
        let kind = if kernel_indices.len() == 2 {
            SubgroupKind::Cyclic {
                i: kernel_indices[0],
                j: kernel_indices[1],
                n: per_index as u32,
            }
        } else {
            SubgroupKind::Klein {
                i: kernel_indices[0],
                j: kernel_indices[1],
                k: kernel_indices[2],
            }
        };
        let kernel = match kind {
            SubgroupKind::Cyclic { i, j, n } => FiniteSubgroup::cyclic(&self.domain, i, j, n),
            SubgroupKind::Klein { i, j, k } => FiniteSubgroup::klein(&self.domain, i, j, k),
            _ => unreachable!(),
        };
        let kernel = match kernel {
            Ok(k) => k,
            Err(_) => return false,
        };
        let derived = match derive_codomain(&self.domain, &kernel) {
            Ok(d) => d,
            Err(_) => return false,
        };
        if derived.canonical.canonical_multiset() != self.codomain.canonical_multiset() {
            return false;
        }

        let order = kernel.order();
        let satellite_copies = if kernel_indices.len() == 2 { order } else { 4 };
        let kernel_copies = if kernel_indices.len() == 2 { 1 } else { 2 };
        let qw = self.codomain.weights();
        let mut used = vec![false; qw.len()];
        for (idx0, row) in self.rows.iter().enumerate() {
            let i = idx0 + 1;
            let pi = self.domain.weights()[idx0] as u64;
            let is_kernel_index = kernel_indices.contains(&i);
            let (copies, target_weight) = if is_kernel_index {
                (kernel_copies, pi / per_index)
            } else {
                (satellite_copies, pi)
            };
            if target_weight == 1 {
                // generator images lying in Z d: shift counts the copies
                if row.mu() != 0 || row.shift() != copies as i64 {
                    return false;
                }
                continue;
            }
            if row.shift() != 0 {
                return false;
            }
            let mut hit = 0u64;
            for (j, &qj) in qw.iter().enumerate() {
                let a = row.residues()[j];
                if a == 0 {
                    continue;
                }
                if a != 1 || qj as u64 != target_weight || used[j] {
                    return false;
                }
                used[j] = true;
                hit += 1;
            }
            if hit != copies {
                return false;
            }
        }
        (0..qw.len()).all(|j| used[j] || qw[j] == 1)
    }

    /// Image of the dualizing element of the domain.
    pub fn image_of_omega(&self) -> GroupElement {
        self.eval(&self.domain.dualizing_omega())
            .expect("same parent")
    }

    /// `h2 . h1` (apply `h1` first).
    pub fn compose(h2: &StringHom, h1: &StringHom) -> Result<StringHom> {
        if h1.codomain != h2.domain {
            return Err(WplError::DomainMismatch);
        }
        let rows: Vec<GroupElement> = h1
            .rows
            .iter()
            .map(|r| h2.eval(r))
            .collect::<Result<_>>()?;
        let c_image = h2.eval(&h1.c_image)?;
        Ok(StringHom {
            domain: h1.domain.clone(),
            codomain: h2.codomain.clone(),
            rows,
            c_image,
        })
    }

    /// Matrix wire form `{domain, codomain, matrix, c_image?}` with rows
    /// `[a_i1, ..., a_is, a_{i,s+1}]`.
    pub fn to_matrix_json(&self) -> Value {
        let matrix: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut row: Vec<i64> = r.residues().iter().map(|&a| a as i64).collect();
                row.push(r.shift());
                json!(row)
            })
            .collect();
        let mut c_row: Vec<i64> = self.c_image.residues().iter().map(|&a| a as i64).collect();
        c_row.push(self.c_image.shift());
        json!({
            "domain": self.domain.weights(),
            "codomain": self.codomain.weights(),
            "matrix": matrix,
            "c_image": c_row,
        })
    }

    pub fn from_matrix_json(v: &Value) -> Result<StringHom> {
        let parse_weights = |key: &str| -> Result<WeightSeq> {
            let arr = v
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| WplError::Parse(format!("missing array field '{}'", key)))?;
            let mut w = Vec::new();
            for x in arr {
                let n = x
                    .as_u64()
                    .ok_or_else(|| WplError::Parse(format!("bad weight in '{}'", key)))?;
                w.push(n as u32);
            }
            WeightSeq::new(w)
        };
        let domain = parse_weights("domain")?;
        let codomain = parse_weights("codomain")?;
        let s = codomain.len();
        let parse_row = |row: &Value| -> Result<GroupElement> {
            let arr = row
                .as_array()
                .ok_or_else(|| WplError::Parse("matrix row must be an array".into()))?;
            if arr.len() != s + 1 {
                return Err(WplError::Parse(format!(
                    "matrix row needs {} entries (residues plus shift), got {}",
                    s + 1,
                    arr.len()
                )));
            }
            let mut ints = Vec::with_capacity(s + 1);
            for x in arr {
                ints.push(
                    x.as_i64()
                        .ok_or_else(|| WplError::Parse("matrix entries must be integers".into()))?,
                );
            }
            let shift = ints.pop().unwrap();
            codomain.element_from_raw(&ints, shift)
        };
        let matrix = v
            .get("matrix")
            .and_then(Value::as_array)
            .ok_or_else(|| WplError::Parse("missing array field 'matrix'".into()))?;
        let rows: Vec<GroupElement> = matrix.iter().map(parse_row).collect::<Result<_>>()?;
        if let Some(c_row) = v.get("c_image") {
            let c_image = parse_row(c_row)?;
            StringHom::with_c_image(domain, codomain, rows, c_image)
        } else {
            StringHom::new(domain, codomain, rows)
        }
    }

    /// Generator images in display form, `d` standing for the canonical
    /// element of the codomain.
    pub fn row_exprs(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let e = r.display_expr().replace('x', "z");
                if e == "0" {
                    e
                } else {
                    e.replace('c', "d")
                }
            })
            .collect()
    }
}

/// Result of a matrix-candidate check: both deciders plus bookkeeping.
#[derive(Debug, Clone)]
pub struct CandidateReport {
    pub well_defined: bool,
    pub window: bool,
    pub structural: bool,
}

/// Run both admissibility checkers on a raw matrix candidate; candidates
/// that are not even well defined fail both.
pub fn check_candidate(
    domain: &WeightSeq,
    codomain: &WeightSeq,
    rows_raw: &[(Vec<i64>, i64)],
    c_image_raw: Option<(Vec<i64>, i64)>,
) -> CandidateReport {
    let rows: Result<Vec<GroupElement>> = rows_raw
        .iter()
        .map(|(coeffs, shift)| codomain.element_from_raw(coeffs, *shift))
        .collect();
    let hom = rows.and_then(|rows| match c_image_raw {
        Some((coeffs, shift)) => {
            let c = codomain.element_from_raw(&coeffs, shift)?;
            StringHom::with_c_image(domain.clone(), codomain.clone(), rows, c)
        }
        None => StringHom::new(domain.clone(), codomain.clone(), rows),
    });
    match hom {
        Ok(h) => CandidateReport {
            well_defined: true,
            window: h.is_admissible_window(),
            structural: h.is_admissible_structural(),
        },
        Err(_) => CandidateReport {
            well_defined: false,
            window: false,
            structural: false,
        },
    }
}

/// The codomain weight sequence derived from a kernel, in kernel-first
/// block order: `(p_i/n, p_j/n, satellites each n times)` for Cyclic,
/// `(p_i/2 x2, p_j/2 x2, p_k/2 x2, satellites each 4 times)` for Klein.
#[derive(Debug, Clone)]
pub struct DerivedCodomain {
    /// Kernel-first weights, 1-entries retained.
    pub raw: Vec<u32>,
    /// 1-entries stripped, order preserved.
    pub canonical: WeightSeq,
    /// For each domain index (0-based): the canonical codomain generator
    /// indices (1-based) of its block; `None` marks a stripped weight-1 copy
    /// contributing `d` to the image.
    pub blocks: Vec<Vec<Option<usize>>>,
}

pub fn derive_codomain(p: &WeightSeq, h: &FiniteSubgroup) -> Result<DerivedCodomain> {
    if h.parent() != p {
        return Err(WplError::ParentMismatch);
    }
    let (kernel_indices, per_index, copies): (Vec<usize>, u32, u32) = match *h.kind() {
        SubgroupKind::Trivial => {
            let blocks: Vec<Vec<Option<usize>>> = (1..=p.len()).map(|i| vec![Some(i)]).collect();
            return Ok(DerivedCodomain {
                raw: p.weights().to_vec(),
                canonical: p.clone(),
                blocks: blocks
                    .into_iter()
                    .enumerate()
                    .map(|(i, b)| {
                        if p.weights()[i] == 1 {
                            vec![None]
                        } else {
                            b
                        }
                    })
                    .collect(),
            });
        }
        SubgroupKind::Cyclic { i, j, n } => (vec![i, j], n, n),
        SubgroupKind::Klein { i, j, k } => (vec![i, j, k], 2, 4),
        SubgroupKind::Other => return Err(WplError::UnsupportedKind),
    };
    // raw blocks, kernel indices first
    let mut raw: Vec<u32> = Vec::new();
    let mut raw_blocks: Vec<(usize, Vec<usize>)> = Vec::new(); // (domain idx, raw slots)
    for &i in &kernel_indices {
        let w = p.weights()[i - 1] / per_index;
        let mut slots = Vec::new();
        let copies_here = if kernel_indices.len() == 2 { 1 } else { 2 };
        for _ in 0..copies_here {
            slots.push(raw.len());
            raw.push(w);
        }
        raw_blocks.push((i, slots));
    }
    for i in 1..=p.len() {
        if kernel_indices.contains(&i) {
            continue;
        }
        let w = p.weights()[i - 1];
        let mut slots = Vec::new();
        for _ in 0..copies {
            slots.push(raw.len());
            raw.push(w);
        }
        raw_blocks.push((i, slots));
    }
    // canonical index per raw slot
    let mut canon_index = vec![None; raw.len()];
    let mut next = 1usize;
    for (slot, &w) in raw.iter().enumerate() {
        if w > 1 {
            canon_index[slot] = Some(next);
            next += 1;
        }
    }
    let canonical = WeightSeq::new(raw.iter().copied().filter(|&w| w > 1).collect())?;
    let mut blocks = vec![Vec::new(); p.len()];
    for (dom_idx, slots) in raw_blocks {
        blocks[dom_idx - 1] = slots.into_iter().map(|s| canon_index[s]).collect();
    }
    Ok(DerivedCodomain {
        raw,
        canonical,
        blocks,
    })
}

/// The explicit admissible homomorphism determined by a kernel of Trivial,
/// Cyclic or Klein type: each generator maps to the sum of its block in the
/// derived codomain, stripped weight-1 copies contributing `d`.
pub fn canonical_hom(p: &WeightSeq, h: &FiniteSubgroup) -> Result<StringHom> {
    let derived = derive_codomain(p, h)?;
    // Trivial kernels keep the codomain p itself (identity).
    if matches!(h.kind(), SubgroupKind::Trivial) {
        return Ok(StringHom::identity(p));
    }
    let q = derived.canonical.clone();
    let mut rows = Vec::with_capacity(p.len());
    for block in &derived.blocks {
        let mut coeffs = vec![0i64; q.len()];
        let mut shift = 0i64;
        for slot in block {
            match slot {
                Some(idx) => coeffs[idx - 1] += 1,
                None => shift += 1,
            }
        }
        rows.push(q.element_from_raw(&coeffs, shift)?);
    }
    if p.is_empty() {
        return StringHom::with_c_image(p.clone(), q.clone(), rows, q.canonical_c());
    }
    StringHom::new(p.clone(), q, rows)
}

/// One entry of the classification output: a kernel together with the
/// derived codomain and canonical homomorphism.
#[derive(Debug, Clone)]
pub struct AdmissibleRecord {
    pub kernel: FiniteSubgroup,
    pub codomain: WeightSeq,
    pub hom: StringHom,
}

impl AdmissibleRecord {
    pub fn kernel_order(&self) -> u64 {
        self.kernel.order()
    }

    pub fn class_label(&self) -> String {
        self.kernel.kind().class_label(self.kernel.order())
    }
}

/// Orbit signature of a subgroup under weight-preserving permutations of the
/// domain generators.
fn kernel_signature(p: &WeightSeq, h: &FiniteSubgroup) -> (u8, Vec<u32>, u32) {
    match *h.kind() {
        SubgroupKind::Trivial => (0, vec![], 0),
        SubgroupKind::Cyclic { i, j, n } => {
            let mut w = vec![p.weights()[i - 1], p.weights()[j - 1]];
            w.sort_unstable();
            (1, w, n)
        }
        SubgroupKind::Klein { i, j, k } => {
            let mut w = vec![
                p.weights()[i - 1],
                p.weights()[j - 1],
                p.weights()[k - 1],
            ];
            w.sort_unstable();
            (2, w, 0)
        }
        SubgroupKind::Other => (3, vec![], 0),
    }
}

/// Enumerate admissible homomorphisms out of `L(p)`: one record per kernel
/// candidate, deduplicated up to weight-preserving permutations of the
/// domain (the classification lists homomorphisms up to permutation).
/// The trivial record is the identity and comes first.
pub fn enumerate_admissible(p: &WeightSeq) -> Result<Vec<AdmissibleRecord>> {
    let mut seen = Vec::new();
    let mut out = Vec::new();
    for h in enumerate_kernel_candidates(p) {
        let sig = kernel_signature(p, &h);
        if seen.contains(&sig) {
            continue;
        }
        seen.push(sig);
        let derived = derive_codomain(p, &h)?;
        let hom = canonical_hom(p, &h)?;
        out.push(AdmissibleRecord {
            kernel: h,
            codomain: if hom.domain() == hom.codomain() {
                hom.codomain().clone()
            } else {
                derived.canonical
            },
            hom,
        });
    }
    Ok(out)
}

/// Both directions of the composite criterion: a composite of admissible
/// homomorphisms is admissible exactly when the kernel orders multiply.
pub fn kernel_orders_multiply(h2: &StringHom, h1: &StringHom) -> Result<bool> {
    let composite = StringHom::compose(h2, h1)?;
    let k1 = h1.kernel()?.order();
    let k2 = h2.kernel()?.order();
    let kc = composite.kernel()?.order();
    Ok(kc == k1 * k2)
}

/// Decompose the canonical homomorphism with kernel `H = H1 x H2` through an
/// intermediate weight sequence `r`, following the constructive proof:
/// `h1` has kernel `H1` and `h2` has kernel `h1(H) ~ H2`.
pub fn decompose(
    p: &WeightSeq,
    h: &FiniteSubgroup,
) -> Result<(WeightSeq, StringHom, StringHom)> {
    let (h1_sub, _h2_sub) = h.product_split().ok_or(WplError::NoSplit)?;
    match *h.kind() {
        SubgroupKind::Cyclic { i, j, n } => {
            let n1 = match *h1_sub.kind() {
                SubgroupKind::Cyclic { n, .. } => n,
                _ => unreachable!(),
            };
            let n2 = n / n1;
            let hom1 = canonical_hom(p, &h1_sub)?;
            let r = hom1.codomain().clone();
            let derived_r = derive_codomain(p, &h1_sub)?;
            let derived_q = derive_codomain(p, h)?;
            let q = derived_q.canonical.clone();
            // rows of h2 over the canonical r, indexed by derived_r blocks
            let mut rows = vec![None; r.len()];
            let mut set_row = |canon_idx: Option<usize>, image: GroupElement| {
                if let Some(idx) = canon_idx {
                    rows[idx - 1] = Some(image);
                }
            };
            // kernel blocks: single copy each in r and q
            for (pos, &dom) in [i, j].iter().enumerate() {
                let image = block_sum(&q, &[derived_q.blocks[dom - 1][0]]);
                set_row(derived_r.blocks[dom - 1][pos.min(0)], image);
            }
            // satellites: copy m of r maps onto the m-th n2-chunk in q
            for dom in 1..=p.len() {
                if dom == i || dom == j {
                    continue;
                }
                let q_block = &derived_q.blocks[dom - 1];
                for (m, &r_slot) in derived_r.blocks[dom - 1].iter().enumerate() {
                    let chunk = &q_block[m * n2 as usize..(m + 1) * n2 as usize];
                    let image = block_sum(&q, chunk);
                    set_row(r_slot, image);
                }
            }
            let rows: Vec<GroupElement> = rows
                .into_iter()
                .map(|r| r.ok_or_else(|| WplError::Invalid("uncovered r generator".into())))
                .collect::<Result<_>>()?;
            let hom2 = if r.is_empty() {
                StringHom::with_c_image(r.clone(), q.clone(), rows, q.canonical_c().scalar_mul(n2 as i64))?
            } else {
                StringHom::new(r.clone(), q, rows)?
            };
            Ok((r, hom1, hom2))
        }
        SubgroupKind::Klein { i, j, k } => {
            let hom1 = canonical_hom(p, &h1_sub)?; // kernel <.. i .. j ..> of order 2
            let r = hom1.codomain().clone();
            let derived_r = derive_codomain(p, &h1_sub)?;
            let derived_q = derive_codomain(p, h)?;
            let q = derived_q.canonical.clone();
            let mut rows = vec![None; r.len()];
            let mut set_row = |canon_idx: Option<usize>, image: GroupElement| {
                if let Some(idx) = canon_idx {
                    rows[idx - 1] = Some(image);
                }
            };
            // kernel indices i, j: their single r copy maps to the pair in q
            for &dom in &[i, j] {
                let image = block_sum(&q, &derived_q.blocks[dom - 1]);
                set_row(derived_r.blocks[dom - 1][0], image);
            }
            // index k: the two r copies map to the two q copies one-to-one
            for (m, &r_slot) in derived_r.blocks[k - 1].iter().enumerate() {
                let image = block_sum(&q, &[derived_q.blocks[k - 1][m]]);
                set_row(r_slot, image);
            }
            // other satellites: copy m covers the m-th pair of the 4 copies
            for dom in 1..=p.len() {
                if dom == i || dom == j || dom == k {
                    continue;
                }
                let q_block = &derived_q.blocks[dom - 1];
                for (m, &r_slot) in derived_r.blocks[dom - 1].iter().enumerate() {
                    let chunk = &q_block[m * 2..(m + 1) * 2];
                    set_row(r_slot, block_sum(&q, chunk));
                }
            }
            let rows: Vec<GroupElement> = rows
                .into_iter()
                .map(|r| r.ok_or_else(|| WplError::Invalid("uncovered r generator".into())))
                .collect::<Result<_>>()?;
            let hom2 = if r.is_empty() {
                StringHom::with_c_image(r.clone(), q.clone(), rows, q.canonical_c().scalar_mul(2))?
            } else {
                StringHom::new(r.clone(), q, rows)?
            };
            Ok((r, hom1, hom2))
        }
        _ => Err(WplError::NoSplit),
    }
}

fn block_sum(q: &WeightSeq, slots: &[Option<usize>]) -> GroupElement {
    let mut coeffs = vec![0i64; q.len()];
    let mut shift = 0i64;
    for slot in slots {
        match slot {
            Some(idx) => coeffs[idx - 1] += 1,
            None => shift += 1,
        }
    }
    q.element_from_raw(&coeffs, shift).expect("length matches")
}

/// Shift of the normal form of `z0 + l * step` without building the element.
fn shift_of_combination(z0: &GroupElement, step: &GroupElement, l: i64) -> i64 {
    let mut shift = z0.shift() + l * step.shift();
    for ((&a, &b), &q) in z0
        .residues()
        .iter()
        .zip(step.residues().iter())
        .zip(z0.parent().weights().iter())
    {
        let v = a as i64 + l * b as i64;
        shift += v.div_euclid(q as i64);
    }
    shift
}

/// Equality of homomorphisms up to a weight-preserving permutation of the
/// codomain generators.
pub fn equal_up_to_codomain_permutation(a: &StringHom, b: &StringHom) -> bool {
    if a.domain() != b.domain() {
        return false;
    }
    if a.codomain().canonical_multiset() != b.codomain().canonical_multiset() {
        return false;
    }
    let qa = a.codomain().weights();
    let qb = b.codomain().weights();
    if qa.len() != qb.len() {
        // same canonical multiset but different 1-padding: compare after
        // dropping weight-1 columns (their residues are always 0)
        return equal_after_stripping(a, b);
    }
    // group columns of b by weight, try assignments of a-columns onto them
    let mut assignment: Vec<Option<usize>> = vec![None; qa.len()];
    let mut used = vec![false; qb.len()];
    fn backtrack(
        a: &StringHom,
        b: &StringHom,
        col: usize,
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
    ) -> bool {
        let qa = a.codomain().weights();
        let qb = b.codomain().weights();
        if col == qa.len() {
            // verify all rows map correctly
            for (ra, rb) in a.rows().iter().zip(b.rows().iter()) {
                if ra.shift() != rb.shift() {
                    return false;
                }
                for (j, &v) in ra.residues().iter().enumerate() {
                    let tj = assignment[j].unwrap();
                    if rb.residues()[tj] != v {
                        return false;
                    }
                }
            }
            return a.c_image().shift() == b.c_image().shift();
        }
        for target in 0..qb.len() {
            if used[target] || qb[target] != qa[col] {
                continue;
            }
            // quick prune: column profiles must match
            let profile_ok = a
                .rows()
                .iter()
                .zip(b.rows().iter())
                .all(|(ra, rb)| ra.residues()[col] == rb.residues()[target]);
            if !profile_ok {
                continue;
            }
            assignment[col] = Some(target);
            used[target] = true;
            if backtrack(a, b, col + 1, assignment, used) {
                return true;
            }
            assignment[col] = None;
            used[target] = false;
        }
        false
    }
    backtrack(a, b, 0, &mut assignment, &mut used)
}

fn strip_weight_one_columns(h: &StringHom) -> StringHom {
    let (canon, map) = h.codomain().canonicalize();
    let rebuild = |e: &GroupElement| -> GroupElement {
        let coeffs: Vec<i64> = map.iter().map(|&j| e.residues()[j] as i64).collect();
        canon
            .element_from_raw(&coeffs, e.shift())
            .expect("length matches")
    };
    let rows = h.rows().iter().map(rebuild).collect();
    let c_image = rebuild(h.c_image());
    StringHom {
        domain: h.domain().clone(),
        codomain: canon,
        rows,
        c_image,
    }
}

fn equal_after_stripping(a: &StringHom, b: &StringHom) -> bool {
    let a = strip_weight_one_columns(a);
    let b = strip_weight_one_columns(b);
    equal_up_to_codomain_permutation(&a, &b)
}
