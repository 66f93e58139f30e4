//! The `L(p)`-graded coordinate algebra `S(p; lambda)` and compatible
//! algebra homomorphisms.
//!
//! `S(p; lambda) = k[X_1, ..., X_t] / (X_i^{p_i} - X_2^{p_2} + lambda_i X_1^{p_1})`
//! for `3 <= i <= t`, graded by `deg x_i = x_i` in `L(p)`. For `t < 2` the
//! ring is padded with weight-1 variables of degree `c` so that the slice of
//! degree `l c` always has the binomial basis. The graded dimension of the
//! slice at `x` equals `mult(x)`, with the monomial basis
//! `{x_1^{a p_1} x_2^{b p_2} x_1^{l_1} ... x_t^{l_t} : a + b = l}` as the
//! independent counting oracle.

use crate::admissible::StringHom;
use crate::error::{Result, WplError};
use crate::exact_field::{parse_expr, Expr, Scalar};
use crate::string_group::{GroupElement, WeightSeq};
use crate::subgroups::{FiniteSubgroup, SubgroupKind};
use std::collections::BTreeMap;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Parameter sequences
// ---------------------------------------------------------------------------

/// Normalized parameter sequence: `lambda_1 = infinity` and `lambda_2 = 0`
/// are implicit, `values` holds `lambda_3, ..., lambda_t` with
/// `lambda_3 = 1` enforced. Empty for `t <= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSeq {
    values: Vec<Scalar>,
}

impl ParamSeq {
    pub fn empty() -> ParamSeq {
        ParamSeq { values: Vec::new() }
    }

    /// Full list `lambda_3, ..., lambda_t` (first entry must be 1).
    pub fn new(t: usize, values: Vec<Scalar>) -> Result<ParamSeq> {
        if t <= 2 {
            if !values.is_empty() {
                return Err(WplError::InvalidParams(
                    "weight sequences with t <= 2 carry no parameters".into(),
                ));
            }
            return Ok(ParamSeq::empty());
        }
        if values.len() != t - 2 {
            return Err(WplError::InvalidParams(format!(
                "expected {} parameters (lambda_3..lambda_{}), got {}",
                t - 2,
                t,
                values.len()
            )));
        }
        if !values[0].is_one() {
            return Err(WplError::InvalidParams("lambda_3 must be 1".into()));
        }
        for v in &values {
            if v.is_zero() {
                return Err(WplError::InvalidParams("parameters must avoid 0".into()));
            }
        }
        for a in 0..values.len() {
            for b in (a + 1)..values.len() {
                if values[a].is_equal(&values[b]) {
                    return Err(WplError::InvalidParams(
                        "parameters must be pairwise distinct".into(),
                    ));
                }
            }
        }
        Ok(ParamSeq { values })
    }

    /// From the free parameters `lambda_4, ..., lambda_t` only.
    pub fn from_free(t: usize, free: Vec<Scalar>) -> Result<ParamSeq> {
        if t <= 2 {
            return ParamSeq::new(t, free);
        }
        let mut values = vec![Scalar::one()];
        values.extend(free);
        ParamSeq::new(t, values)
    }

    /// `lambda_k` for 1-based `k >= 3`.
    pub fn get(&self, k: usize) -> &Scalar {
        &self.values[k - 3]
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn free_values(&self) -> &[Scalar] {
        if self.values.is_empty() {
            &[]
        } else {
            &self.values[1..]
        }
    }
}

// ---------------------------------------------------------------------------
// Algebra context and graded polynomials
// ---------------------------------------------------------------------------

/// A coordinate algebra `S(q; mu)`: weights (1-entries allowed anywhere),
/// parameters for positions `>= 3`, and padding to at least two variables
/// when `s < 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraCtx {
    weights: WeightSeq,
    params: ParamSeq,
    nvars: usize,
}

impl AlgebraCtx {
    pub fn new(weights: WeightSeq, params: ParamSeq) -> Result<Arc<AlgebraCtx>> {
        let s = weights.len();
        if s > 2 && params.values.len() != s - 2 {
            return Err(WplError::InvalidParams(format!(
                "weight sequence of length {} needs {} parameters, got {}",
                s,
                s - 2,
                params.values.len()
            )));
        }
        if s <= 2 && !params.values.is_empty() {
            return Err(WplError::InvalidParams(
                "weight sequences with s <= 2 carry no parameters".into(),
            ));
        }
        Ok(Arc::new(AlgebraCtx {
            nvars: s.max(2),
            weights,
            params,
        }))
    }

    pub fn parameterless(weights: WeightSeq) -> Result<Arc<AlgebraCtx>> {
        if weights.len() > 2 {
            return Err(WplError::InvalidParams(
                "weight sequences with more than two entries need parameters".into(),
            ));
        }
        AlgebraCtx::new(weights, ParamSeq::empty())
    }

    pub fn weights(&self) -> &WeightSeq {
        &self.weights
    }

    pub fn params(&self) -> &ParamSeq {
        &self.params
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Weight of variable `i` (0-based); padding variables have weight 1.
    fn var_weight(&self, i: usize) -> u32 {
        if i < self.weights.len() {
            self.weights.weights()[i]
        } else {
            1
        }
    }

    fn monomial_degree(&self, exps: &[u32]) -> GroupElement {
        let mut coeffs = vec![0i64; self.weights.len()];
        let mut shift = 0i64;
        for (i, &e) in exps.iter().enumerate() {
            if i < self.weights.len() {
                coeffs[i] += e as i64;
            } else {
                shift += e as i64;
            }
        }
        self.weights
            .element_from_raw(&coeffs, shift)
            .expect("length matches")
    }

    /// Monomial basis of the slice of degree `x`.
    pub fn monomial_basis(&self, x: &GroupElement) -> Vec<Vec<u32>> {
        monomial_basis(&self.weights, x)
    }
}

/// Monomial basis of `S(p; -)_x`: the binomial family in the first two
/// variables over the fixed residue part. Its size is the independent
/// counting oracle for `mult(x)`, independent of the parameters.
pub fn monomial_basis(weights: &WeightSeq, x: &GroupElement) -> Vec<Vec<u32>> {
    assert_eq!(x.parent(), weights, "element of a different string group");
    let l = x.shift();
    if l < 0 {
        return Vec::new();
    }
    let nvars = weights.len().max(2);
    let mut base = vec![0u32; nvars];
    for (i, &r) in x.residues().iter().enumerate() {
        base[i] = r;
    }
    let w0 = if weights.is_empty() {
        1
    } else {
        weights.weights()[0]
    };
    let w1 = if weights.len() < 2 {
        1
    } else {
        weights.weights()[1]
    };
    let mut out = Vec::with_capacity(l as usize + 1);
    for a in 0..=(l as u32) {
        let b = l as u32 - a;
        let mut e = base.clone();
        e[0] += a * w0;
        e[1] += b * w1;
        out.push(e);
    }
    out
}

/// Graded dimension of the slice at `x`: equals `mult(x)`.
pub fn graded_dim(x: &GroupElement) -> u64 {
    x.mult()
}

/// A polynomial in a coordinate algebra, stored as a map from exponent
/// vectors to scalars.
#[derive(Debug, Clone)]
pub struct GradedPoly {
    ctx: Arc<AlgebraCtx>,
    terms: BTreeMap<Vec<u32>, Scalar>,
}

impl GradedPoly {
    pub fn zero(ctx: &Arc<AlgebraCtx>) -> GradedPoly {
        GradedPoly {
            ctx: ctx.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: &Arc<AlgebraCtx>, c: Scalar) -> GradedPoly {
        let mut p = GradedPoly::zero(ctx);
        if !c.is_zero() {
            p.terms.insert(vec![0; ctx.nvars], c);
        }
        p
    }

    /// Variable `z_idx` (1-based, padding variables included).
    pub fn var(ctx: &Arc<AlgebraCtx>, idx: usize) -> Result<GradedPoly> {
        if idx == 0 || idx > ctx.nvars {
            return Err(WplError::IndexOutOfRange {
                index: idx,
                count: ctx.nvars,
            });
        }
        let mut e = vec![0; ctx.nvars];
        e[idx - 1] = 1;
        let mut p = GradedPoly::zero(ctx);
        p.terms.insert(e, Scalar::one());
        Ok(p)
    }

    pub fn monomial(ctx: &Arc<AlgebraCtx>, exps: Vec<u32>, coeff: Scalar) -> Result<GradedPoly> {
        if exps.len() != ctx.nvars {
            return Err(WplError::LengthMismatch {
                expected: ctx.nvars,
                got: exps.len(),
            });
        }
        let mut p = GradedPoly::zero(ctx);
        if !coeff.is_zero() {
            p.terms.insert(exps, coeff);
        }
        Ok(p)
    }

    pub fn ctx(&self) -> &Arc<AlgebraCtx> {
        &self.ctx
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Scalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(Scalar::is_zero)
    }

    fn insert_term(terms: &mut BTreeMap<Vec<u32>, Scalar>, e: Vec<u32>, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match terms.remove(&e) {
            None => {
                terms.insert(e, c);
            }
            Some(old) => {
                let sum = old.add(&c).expect("scalar add");
                if !sum.is_zero() {
                    terms.insert(e, sum);
                }
            }
        }
    }

    pub fn add(&self, other: &GradedPoly) -> GradedPoly {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            GradedPoly::insert_term(&mut terms, e.clone(), c.clone());
        }
        GradedPoly {
            ctx: self.ctx.clone(),
            terms,
        }
    }

    pub fn sub(&self, other: &GradedPoly) -> GradedPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> GradedPoly {
        GradedPoly {
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Result<GradedPoly> {
        let mut terms = BTreeMap::new();
        for (e, v) in &self.terms {
            GradedPoly::insert_term(&mut terms, e.clone(), v.mul(c)?);
        }
        Ok(GradedPoly {
            ctx: self.ctx.clone(),
            terms,
        })
    }

    pub fn mul(&self, other: &GradedPoly) -> Result<GradedPoly> {
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                GradedPoly::insert_term(&mut terms, e, ca.mul(cb)?);
            }
        }
        Ok(GradedPoly {
            ctx: self.ctx.clone(),
            terms,
        })
    }

    pub fn pow(&self, exp: u32) -> Result<GradedPoly> {
        let mut acc = GradedPoly::constant(&self.ctx, Scalar::one());
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Degree of the polynomial; `None` for zero, error if terms have
    /// different degrees.
    pub fn degree(&self) -> Result<Option<GroupElement>> {
        let mut deg: Option<GroupElement> = None;
        for e in self.terms.keys() {
            let d = self.ctx.monomial_degree(e);
            match &deg {
                None => deg = Some(d),
                Some(existing) => {
                    if existing != &d {
                        return Err(WplError::NonHomogeneous);
                    }
                }
            }
        }
        Ok(deg)
    }

    /// Substitute `z_i^{q_i} -> z_2^{q_2} - mu_i z_1^{q_1}` for `i >= 3`
    /// until every exponent there drops below `q_i`. Idempotent; preserves
    /// the degree; the result is the unique basis representation.
    pub fn reduce(&self) -> Result<GradedPoly> {
        let ctx = &self.ctx;
        let s = ctx.weights.len();
        let mut terms = self.terms.clone();
        loop {
            let mut target: Option<(Vec<u32>, usize)> = None;
            'search: for e in terms.keys() {
                for i in 2..s {
                    if e[i] >= ctx.var_weight(i) {
                        target = Some((e.clone(), i));
                        break 'search;
                    }
                }
            }
            let Some((e, i)) = target else { break };
            let c = terms.remove(&e).expect("present");
            let qi = ctx.var_weight(i);
            let q1 = ctx.var_weight(0);
            let q2 = ctx.var_weight(1);
            let mu = ctx.params.get(i + 1).clone();
            let mut base = e.clone();
            base[i] -= qi;
            let mut with_z2 = base.clone();
            with_z2[1] += q2;
            let mut with_z1 = base;
            with_z1[0] += q1;
            GradedPoly::insert_term(&mut terms, with_z2, c.clone());
            GradedPoly::insert_term(&mut terms, with_z1, c.mul(&mu)?.neg());
        }
        Ok(GradedPoly {
            ctx: ctx.clone(),
            terms,
        })
    }

    pub fn is_zero_reduced(&self) -> Result<bool> {
        Ok(self.reduce()?.is_zero())
    }

    pub fn is_equal(&self, other: &GradedPoly) -> Result<bool> {
        self.sub(other).is_zero_reduced()
    }

    /// Image under the algebra map sending variable `i` to `images[i]`.
    pub fn substitute(
        &self,
        images: &[GradedPoly],
        target: &Arc<AlgebraCtx>,
    ) -> Result<GradedPoly> {
        let mut out = GradedPoly::zero(target);
        for (e, c) in &self.terms {
            let mut m = GradedPoly::constant(target, c.clone());
            for (i, &exp) in e.iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                let img = images.get(i).ok_or_else(|| {
                    WplError::Invalid("substitution misses an image for a used variable".into())
                })?;
                m = m.mul(&img.pow(exp)?)?;
            }
            out = out.add(&m);
        }
        Ok(out)
    }

    /// Human-readable form like `(-1/2)*z1^2 + z2^2`.
    pub fn display(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, c) in &self.terms {
            let mut factors = Vec::new();
            for (i, &exp) in e.iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                if exp == 1 {
                    factors.push(format!("z{}", i + 1));
                } else {
                    factors.push(format!("z{}^{}", i + 1, exp));
                }
            }
            let coeff = c.literal();
            let body = if factors.is_empty() {
                format!("({})", coeff)
            } else if c.is_one() {
                factors.join("*")
            } else {
                format!("({})*{}", coeff, factors.join("*"))
            };
            parts.push(body);
        }
        parts.join(" + ")
    }
}

/// Parse a polynomial in the variables `z1..` of the given algebra.
pub fn parse_poly(ctx: &Arc<AlgebraCtx>, input: &str) -> Result<GradedPoly> {
    fn eval(ctx: &Arc<AlgebraCtx>, e: &Expr) -> Result<GradedPoly> {
        match e {
            Expr::Int(n) => Ok(GradedPoly::constant(
                ctx,
                Scalar::Exact(crate::exact_field::FieldElem::from_rat(
                    crate::exact_field::Rat::from(n.clone()),
                )),
            )),
            Expr::Var(idx) => GradedPoly::var(ctx, *idx),
            Expr::Neg(a) => Ok(eval(ctx, a)?.neg()),
            Expr::Add(a, b) => Ok(eval(ctx, a)?.add(&eval(ctx, b)?)),
            Expr::Sub(a, b) => Ok(eval(ctx, a)?.sub(&eval(ctx, b)?)),
            Expr::Mul(a, b) => eval(ctx, a)?.mul(&eval(ctx, b)?),
            Expr::Div(a, b) => {
                let den = eval(ctx, b)?;
                let den_c = as_constant(&den)
                    .ok_or_else(|| WplError::Parse("division is only allowed by scalars".into()))?;
                eval(ctx, a)?.scale(&Scalar::one().div(&den_c)?)
            }
            Expr::Pow(a, k) => eval(ctx, a)?.pow(*k),
            Expr::Sqrt(a) => {
                let inner = eval(ctx, a)?;
                let c = as_constant(&inner)
                    .ok_or_else(|| WplError::Parse("sqrt is only allowed on scalars".into()))?;
                Ok(GradedPoly::constant(ctx, c.sqrt()?))
            }
        }
    }
    eval(ctx, &parse_expr(input)?)
}

fn as_constant(p: &GradedPoly) -> Option<Scalar> {
    if p.terms.is_empty() {
        return Some(Scalar::zero());
    }
    if p.terms.len() == 1 {
        let (e, c) = p.terms.iter().next().unwrap();
        if e.iter().all(|&x| x == 0) {
            return Some(c.clone());
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Compatible homomorphisms
// ---------------------------------------------------------------------------

/// A candidate algebra homomorphism compatible with a group homomorphism:
/// generator images in the codomain algebra.
#[derive(Debug, Clone)]
pub struct CompatibleHom {
    pub pi: StringHom,
    pub images: Vec<GradedPoly>,
}

impl CompatibleHom {
    pub fn new(pi: StringHom, images: Vec<GradedPoly>) -> Result<CompatibleHom> {
        if images.len() != pi.domain().len() {
            return Err(WplError::LengthMismatch {
                expected: pi.domain().len(),
                got: images.len(),
            });
        }
        Ok(CompatibleHom { pi, images })
    }

    pub fn codomain_ctx(&self) -> Result<&Arc<AlgebraCtx>> {
        self.images
            .first()
            .map(GradedPoly::ctx)
            .ok_or_else(|| WplError::Invalid("no generator images".into()))
    }

    /// Degree compatibility on generators: each image is homogeneous of
    /// degree `pi(x_i)`. This certifies compatibility on all of `L(p)`.
    pub fn check_compatible(&self) -> Result<bool> {
        for (i, img) in self.images.iter().enumerate() {
            let expected = self
                .pi
                .eval(&self.pi.domain().generator(i + 1)?)
                .expect("same parent");
            match img.reduce()?.degree()? {
                Some(d) if d == expected => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    /// The generator assignments extend to an algebra homomorphism: every
    /// defining relation of the domain maps to zero:
    /// `phi(x_i)^{p_i} - phi(x_2)^{p_2} + lambda_i phi(x_1)^{p_1} = 0`.
    pub fn check_relations(&self, domain_params: &ParamSeq) -> Result<bool> {
        let p = self.pi.domain().weights();
        let t = p.len();
        if t >= 3 && domain_params.values().len() != t - 2 {
            return Err(WplError::InvalidParams(format!(
                "domain needs {} parameters, got {}",
                t - 2,
                domain_params.values().len()
            )));
        }
        for i in 3..=t {
            let lhs = self.images[i - 1].pow(p[i - 1])?;
            let x2 = self.images[1].pow(p[1])?;
            let x1 = self.images[0].pow(p[0])?;
            let residue = lhs.sub(&x2).add(&x1.scale(domain_params.get(i))?);
            if !residue.is_zero_reduced()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Surjectivity certificate of the induced graded map on the small
    /// degree: `d` for Trivial/Cyclic kernels, `2d` for Klein kernels.
    /// Surjectivity there propagates to every degree of the image.
    pub fn check_surjective_small_degree(&self) -> Result<bool> {
        let kernel = self.pi.kernel()?;
        let codomain = self.pi.codomain().clone();
        let target = match kernel.kind() {
            SubgroupKind::Trivial | SubgroupKind::Cyclic { .. } => codomain.canonical_c(),
            SubgroupKind::Klein { .. } => codomain.canonical_c().scalar_mul(2),
            SubgroupKind::Other => return Err(WplError::UnsupportedKind),
        };
        let domain = self.pi.domain().clone();
        if domain.len() < 2 {
            return Err(WplError::UnsupportedCase(
                "surjectivity check needs at least two domain generators".into(),
            ));
        }
        let ctx = self.codomain_ctx()?.clone();
        if ctx.weights() != &codomain {
            return Err(WplError::Invalid(
                "image algebra does not match the codomain of pi".into(),
            ));
        }

        // fiber of the target degree
        let c_delta = self.pi.c_image().delta();
        if c_delta == 0 {
            return Err(WplError::InfiniteKernel);
        }
        let mut fiber = Vec::new();
        let t = domain.len();
        let mut residues = vec![0u32; t];
        loop {
            let x0 = domain
                .element_from_raw(&residues.iter().map(|&r| r as i64).collect::<Vec<_>>(), 0)
                .expect("length matches");
            let z0 = self.pi.eval(&x0).expect("same parent");
            let num = target.delta() - z0.delta();
            if num % c_delta == 0 {
                let l = num / c_delta;
                let cand = x0.add(&domain.canonical_c().scalar_mul(l)).unwrap();
                if self.pi.eval(&cand).unwrap() == target {
                    fiber.push(cand);
                }
            }
            let mut i = 0;
            loop {
                if i == t {
                    return self.rank_certificate(&ctx, &target, &fiber);
                }
                residues[i] += 1;
                if residues[i] < domain.weights()[i] {
                    break;
                }
                residues[i] = 0;
                i += 1;
            }
        }
    }

    fn rank_certificate(
        &self,
        ctx: &Arc<AlgebraCtx>,
        target: &GroupElement,
        fiber: &[GroupElement],
    ) -> Result<bool> {
        let slice = ctx.monomial_basis(target);
        let dim = slice.len();
        let col_index: BTreeMap<Vec<u32>, usize> = slice
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        for x in fiber {
            for mono in monomial_basis(self.pi.domain(), x) {
                // map the domain monomial through phi
                let mut img = GradedPoly::constant(ctx, Scalar::one());
                for (i, &e) in mono.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let gen_img = self.images.get(i).ok_or_else(|| {
                        WplError::UnsupportedCase("domain monomial uses a padding variable".into())
                    })?;
                    img = img.mul(&gen_img.pow(e)?)?;
                }
                let img = img.reduce()?;
                let mut row = vec![Scalar::zero(); dim];
                for (e, c) in img.terms() {
                    match col_index.get(e) {
                        Some(&j) => row[j] = c.clone(),
                        None => {
                            return Err(WplError::Invalid(
                                "reduced image leaves the expected slice".into(),
                            ))
                        }
                    }
                }
                rows.push(row);
            }
        }
        Ok(rank(rows)? == dim)
    }
}

/// Rank of a matrix of scalars by Gaussian elimination.
fn rank(mut rows: Vec<Vec<Scalar>>) -> Result<usize> {
    if rows.is_empty() {
        return Ok(0);
    }
    let ncols = rows[0].len();
    let mut rank = 0usize;
    for col in 0..ncols {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(p) = pivot else { continue };
        rows.swap(rank, p);
        let inv = Scalar::one().div(&rows[rank][col])?;
        for c in col..ncols {
            rows[rank][c] = rows[rank][c].mul(&inv)?;
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let delta = rows[rank][c].mul(&factor)?;
                    rows[r][c] = rows[r][c].sub(&delta)?;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    Ok(rank)
}

/// Compose compatible homomorphisms: apply `inner` first.
pub fn compose_compatible(outer: &CompatibleHom, inner: &CompatibleHom) -> Result<CompatibleHom> {
    let pi = StringHom::compose(&outer.pi, &inner.pi)?;
    let target = outer.codomain_ctx()?.clone();
    let images: Vec<GradedPoly> = inner
        .images
        .iter()
        .map(|img| img.substitute(&outer.images, &target))
        .collect::<Result<_>>()?;
    CompatibleHom::new(pi, images)
}

// ---------------------------------------------------------------------------
// Parameter permutation (transpositions)
// ---------------------------------------------------------------------------

/// The compatible homomorphism attached to the transposition `(i, j)` of
/// generators: a new normalized parameter sequence and generator images
/// with the required root coefficients, renormalized so that the third
/// parameter is 1 again.
pub fn permute_parameters(
    p: &WeightSeq,
    lambda: &ParamSeq,
    i: usize,
    j: usize,
) -> Result<(WeightSeq, ParamSeq, CompatibleHom)> {
    let t = p.len();
    if t < 3 {
        return Err(WplError::UnsupportedCase(
            "parameter permutation needs t >= 3".into(),
        ));
    }
    if i == 0 || i >= j || j > t {
        return Err(WplError::Invalid(format!(
            "transposition needs 1 <= i < j <= {}, got ({}, {})",
            t, i, j
        )));
    }
    // permuted weight sequence
    let mut q_weights = p.weights().to_vec();
    q_weights.swap(i - 1, j - 1);
    let q = WeightSeq::new(q_weights)?;

    // sigma as a map on 1-based indices
    let sigma = |k: usize| -> usize {
        if k == i {
            j
        } else if k == j {
            i
        } else {
            k
        }
    };

    // raw parameters mu~_k for k >= 3 and coefficient table for phi~
    let lam = |k: usize| -> &Scalar { lambda.get(k) };
    let mut mu_raw: Vec<Scalar> = Vec::with_capacity(t - 2);
    let mut coeff: Vec<Scalar> = vec![Scalar::one(); t]; // phi~(x_k) = coeff_k * z_{sigma(k)}
    let in_12 = |k: usize| k == 1 || k == 2;
    match (in_12(i), in_12(j)) {
        (false, false) => {
            // swap lambda_i and lambda_j
            for k in 3..=t {
                mu_raw.push(lam(sigma(k)).clone());
            }
        }
        (true, true) => {
            // (1,2): mu~_k = 1/lambda_k, coefficient (-lambda_k)^(1/p_k)
            for k in 3..=t {
                mu_raw.push(Scalar::one().div(lam(k))?);
                coeff[k - 1] = lam(k).neg().nth_root(p.weights()[k - 1])?;
            }
        }
        (true, false) => {
            if i == 2 {
                // i = 2: mu~_j = -lambda_j, mu~_k = lambda_k - lambda_j
                for k in 3..=t {
                    if k == j {
                        mu_raw.push(lam(j).neg());
                    } else {
                        mu_raw.push(lam(k).sub(lam(j))?);
                    }
                }
            } else {
                // i = 1: mu~_j = lambda_j, mu~_k = lambda_k lambda_j / (lambda_k - lambda_j)
                for k in 3..=t {
                    if k == j {
                        mu_raw.push(lam(j).clone());
                    } else {
                        let num = lam(k).mul(lam(j))?;
                        let den = lam(k).sub(lam(j))?;
                        mu_raw.push(num.div(&den)?);
                    }
                }
                // x_1 -> lambda_j^(-1/p_1) z_j, x_j -> lambda_j^(1/p_j) z_1,
                // x_k -> ((lambda_j - lambda_k)/lambda_j)^(1/p_k) z_k
                coeff[0] = Scalar::one().div(&lam(j).nth_root(p.weights()[0])?)?;
                coeff[j - 1] = lam(j).nth_root(p.weights()[j - 1])?;
                for k in 3..=t {
                    if k != j {
                        let ratio = lam(j).sub(lam(k))?.div(lam(j))?;
                        coeff[k - 1] = ratio.nth_root(p.weights()[k - 1])?;
                    }
                }
            }
        }
        (false, true) => unreachable!("i < j"),
    }

    // renormalize: mu_k = mu~_k / mu~_3 with the rescale z1 -> mu~_3^(-1/q_1) z1
    let mu3 = mu_raw[0].clone();
    let mut mu_values = Vec::with_capacity(t - 2);
    for v in &mu_raw {
        mu_values.push(v.div(&mu3)?);
    }
    let mu = ParamSeq::new(t, mu_values)?;
    let ctx = AlgebraCtx::new(q.clone(), mu.clone())?;

    let z1_scale = if mu3.is_one() {
        Scalar::one()
    } else {
        Scalar::one().div(&mu3.nth_root(q.weights()[0])?)?
    };

    // pi and phi images
    let mut rows = Vec::with_capacity(t);
    let mut images = Vec::with_capacity(t);
    for k in 1..=t {
        let target = sigma(k);
        rows.push(q.generator(target)?);
        let mut img = GradedPoly::var(&ctx, target)?.scale(&coeff[k - 1])?;
        if target == 1 {
            img = img.scale(&z1_scale)?;
        }
        images.push(img);
    }
    let pi = StringHom::new(p.clone(), q.clone(), rows)?;
    Ok((q, mu, CompatibleHom::new(pi, images)?))
}

// ---------------------------------------------------------------------------
// Constructive phi for Cyclic kernels
// ---------------------------------------------------------------------------

/// Build the codomain parameters and compatible `phi` realizing the
/// quotient by a Cyclic kernel, following the constructive proofs:
///
/// * `t <= 2`: the fixed table `(z1, z2)` / `(z1, z2)` / `(z1+z2, z1-z2)`.
/// * weight type `(2,2,2,2)` with `|H| = 2` on indices `(1,2)`: the
///   `nu = (sqrt(l)+1)/(sqrt(l)-1)` construction with `mu = nu^2`.
/// * `t >= 3` with the kernel on `(1,2)`: the generic root-splitting
///   construction `z_{i_j}^{p_i} = y - mu_{i_j} x` with the `mu_{i_j}`
///   ranging over the `n`-th roots of `lambda_i` (numeric for `n` outside
///   the quadratic fragment); kernel-index weights equal to `n` are kept as
///   weight-1 variables of the raw codomain.
/// * other kernel positions are moved to `(1,2)` by transposition
///   homomorphisms first and the results composed.
pub fn construct_cyclic_phi(
    p: &WeightSeq,
    lambda: &ParamSeq,
    h: &FiniteSubgroup,
) -> Result<(WeightSeq, ParamSeq, CompatibleHom)> {
    let (ki, kj, n) = match *h.kind() {
        SubgroupKind::Cyclic { i, j, n } => (i, j, n),
        _ => return Err(WplError::UnsupportedKind),
    };
    if h.parent() != p {
        return Err(WplError::ParentMismatch);
    }
    let t = p.len();

    if t <= 2 {
        return construct_t2(p, n);
    }

    if (ki, kj) != (1, 2) {
        // move the kernel to (1,2) by transpositions, then recurse
        let mut chain: Option<CompatibleHom> = None;
        let mut cur_p = p.clone();
        let mut cur_lambda = lambda.clone();
        let mut cur_i = ki;
        let cur_j = kj;
        let apply = |p_: &WeightSeq,
                         l_: &ParamSeq,
                         a: usize,
                         b: usize,
                         chain: &mut Option<CompatibleHom>|
         -> Result<(WeightSeq, ParamSeq)> {
            let (q_, mu_, step) = permute_parameters(p_, l_, a, b)?;
            *chain = Some(match chain.take() {
                None => step,
                Some(prev) => compose_compatible(&step, &prev)?,
            });
            Ok((q_, mu_))
        };
        if cur_i != 1 {
            let (np, nl) = apply(&cur_p, &cur_lambda, 1, cur_i, &mut chain)?;
            cur_p = np;
            cur_lambda = nl;
            cur_i = 1;
        }
        if cur_j != 2 {
            let (np, nl) = apply(&cur_p, &cur_lambda, 2, cur_j, &mut chain)?;
            cur_p = np;
            cur_lambda = nl;
        }
        let kernel = FiniteSubgroup::cyclic(&cur_p, cur_i, 2, n)?;
        let (q, mu, inner) = construct_cyclic_phi(&cur_p, &cur_lambda, &kernel)?;
        let full = match chain {
            None => inner,
            Some(prefix) => compose_compatible(&inner, &prefix)?,
        };
        return Ok((q, mu, full));
    }

    let w = p.weights();
    let (p1, p2) = (w[0], w[1]);

    // the (2,2,2,2) pattern with |H| = 2: explicit nu-construction
    if n == 2 && p1 == 2 && p2 == 2 && t == 4 && w[2] == 2 && w[3] == 2 {
        return construct_2222(p, lambda);
    }

    // generic branch: raw codomain (p1/n, p2/n, satellites x n)
    let derived = crate::admissible::derive_codomain(p, h)?;
    let q_raw = WeightSeq::new(derived.raw.clone())?;
    // parameters for raw positions >= 3: the n-th roots of each satellite
    // parameter, the first satellite contributing mu_{3_1} = 1
    let mut mu_values: Vec<Scalar> = Vec::new();
    for k in 3..=t {
        let lam_k = lambda.get(k);
        let mut roots = lam_k.all_nth_roots(n)?;
        if k == 3 {
            // lambda_3 = 1: rotate an exact 1 to the front
            let pos = roots
                .iter()
                .position(|r| r.is_one())
                .ok_or_else(|| WplError::Invalid("roots of unity miss 1".into()))?;
            roots.swap(0, pos);
            roots[0] = Scalar::one();
        }
        mu_values.extend(roots);
    }
    let mu = ParamSeq::new(q_raw.len(), mu_values)?;
    let ctx = AlgebraCtx::new(q_raw.clone(), mu.clone())?;

    // pi into the raw codomain and phi as block products, kernel-first order
    let mut slot_ranges: Vec<(usize, usize)> = vec![(0, 1), (1, 2)];
    let mut raw_slot = 2usize;
    for _ in 3..=t {
        slot_ranges.push((raw_slot, raw_slot + n as usize));
        raw_slot += n as usize;
    }
    let mut rows = Vec::with_capacity(t);
    let mut images = Vec::with_capacity(t);
    for &(lo, hi) in &slot_ranges {
        let mut coeffs = vec![0i64; q_raw.len()];
        for slot in lo..hi {
            coeffs[slot] += 1;
        }
        rows.push(q_raw.element_from_raw(&coeffs, 0)?);
        let mut img = GradedPoly::constant(&ctx, Scalar::one());
        for slot in lo..hi {
            img = img.mul(&GradedPoly::var(&ctx, slot + 1)?)?;
        }
        images.push(img);
    }
    let pi = StringHom::new(p.clone(), q_raw.clone(), rows)?;
    Ok((q_raw, mu, CompatibleHom::new(pi, images)?))
}

fn construct_t2(p: &WeightSeq, n: u32) -> Result<(WeightSeq, ParamSeq, CompatibleHom)> {
    let w = p.weights();
    if w.len() != 2 {
        return Err(WplError::UnsupportedCase(
            "cyclic kernels need two generators".into(),
        ));
    }
    let (q1, q2) = (w[0] / n, w[1] / n);
    let q = WeightSeq::new([q1, q2].iter().copied().filter(|&x| x > 1).collect())?;
    let ctx = AlgebraCtx::parameterless(q.clone())?;
    let d = q.canonical_c();
    let (rows, images) = match (q1 > 1, q2 > 1) {
        (true, true) => (
            vec![q.generator(1)?, q.generator(2)?],
            vec![GradedPoly::var(&ctx, 1)?, GradedPoly::var(&ctx, 2)?],
        ),
        (true, false) => (
            vec![q.generator(1)?, d],
            vec![GradedPoly::var(&ctx, 1)?, GradedPoly::var(&ctx, 2)?],
        ),
        (false, true) => (
            vec![d, q.generator(1)?],
            vec![GradedPoly::var(&ctx, 2)?, GradedPoly::var(&ctx, 1)?],
        ),
        (false, false) => {
            let z1 = GradedPoly::var(&ctx, 1)?;
            let z2 = GradedPoly::var(&ctx, 2)?;
            (vec![d.clone(), d], vec![z1.add(&z2), z1.sub(&z2)])
        }
    };
    let pi = StringHom::new(p.clone(), q.clone(), rows)?;
    Ok((q, ParamSeq::empty(), CompatibleHom::new(pi, images)?))
}

/// `(2,2,2,2; lambda)` with kernel `<x1 - x2>`: `mu = nu^2` with
/// `nu = (sqrt(lambda)+1)/(sqrt(lambda)-1)` and
/// `phi = (-nu z1^2 + z2^2, nu z1^2 + z2^2, 2 sqrt(nu) z1 z2, sqrt(1-lambda) z3 z4)`.
fn construct_2222(
    p: &WeightSeq,
    lambda: &ParamSeq,
) -> Result<(WeightSeq, ParamSeq, CompatibleHom)> {
    let lam = lambda.get(4).clone();
    let s = lam.sqrt()?;
    let nu = s.add(&Scalar::one())?.div(&s.sub(&Scalar::one())?)?;
    let mu_val = nu.mul(&nu)?;
    let q = p.clone();
    let mu = ParamSeq::new(4, vec![Scalar::one(), mu_val])?;
    let ctx = AlgebraCtx::new(q.clone(), mu.clone())?;

    let z1sq = GradedPoly::monomial(&ctx, vec![2, 0, 0, 0], Scalar::one())?;
    let z2sq = GradedPoly::monomial(&ctx, vec![0, 2, 0, 0], Scalar::one())?;
    let z1z2 = GradedPoly::monomial(&ctx, vec![1, 1, 0, 0], Scalar::one())?;
    let z3z4 = GradedPoly::monomial(&ctx, vec![0, 0, 1, 1], Scalar::one())?;

    let images = vec![
        z1sq.scale(&nu.neg())?.add(&z2sq),
        z1sq.scale(&nu)?.add(&z2sq),
        z1z2.scale(&nu.sqrt()?.mul(&Scalar::from_int(2))?)?,
        z3z4.scale(&Scalar::one().sub(&lam)?.sqrt()?)?,
    ];
    let d = q.canonical_c();
    let rows = vec![
        d.clone(),
        d,
        q.element_from_raw(&[1, 1, 0, 0], 0)?,
        q.element_from_raw(&[0, 0, 1, 1], 0)?,
    ];
    let pi = StringHom::new(p.clone(), q.clone(), rows)?;
    Ok((q, mu, CompatibleHom::new(pi, images)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_field::parse_field;

    fn ws(w: &[u32]) -> WeightSeq {
        WeightSeq::new(w.to_vec()).unwrap()
    }

    fn sc(s: &str) -> Scalar {
        Scalar::Exact(parse_field(s).unwrap())
    }

    fn ctx_2222(mu4: &str) -> Arc<AlgebraCtx> {
        let params = ParamSeq::new(4, vec![Scalar::one(), sc(mu4)]).unwrap();
        AlgebraCtx::new(ws(&[2, 2, 2, 2]), params).unwrap()
    }

    #[test]
    fn graded_dims() {
        let p = ws(&[2, 2, 2, 2]);
        assert_eq!(graded_dim(&p.canonical_c()), 2);
        assert_eq!(graded_dim(&p.dualizing_omega()), 0);
        let x = p.element_from_raw(&[1, 1, 0, 0], 0).unwrap();
        assert_eq!(graded_dim(&x), 1);
    }

    #[test]
    fn basis_examples() {
        let p = ws(&[2, 2, 2, 2]);
        let b = monomial_basis(&p, &p.canonical_c());
        assert_eq!(b, vec![vec![0, 2, 0, 0], vec![2, 0, 0, 0]]);
        assert!(monomial_basis(&p, &p.dualizing_omega()).is_empty());
        let b = monomial_basis(&p, &p.generator(1).unwrap());
        assert_eq!(b, vec![vec![1, 0, 0, 0]]);
    }

    #[test]
    fn basis_counts_equal_mult() {
        for weights in [vec![2, 3, 4], vec![5], vec![], vec![2, 2, 2, 2], vec![1, 3]] {
            let p = ws(&weights);
            for shift in -3..4 {
                let x = p
                    .element_from_raw(&vec![0; p.len()], shift)
                    .unwrap()
                    .add(&p.dualizing_omega())
                    .unwrap();
                assert_eq!(monomial_basis(&p, &x).len() as u64, x.mult());
            }
        }
    }

    #[test]
    fn reduce_examples() {
        // z3^2 -> z2^2 - z1^2 (mu3 = 1); z4^2 -> z2^2 - mu z1^2
        let ctx = ctx_2222("5");
        let z3sq = GradedPoly::monomial(&ctx, vec![0, 0, 2, 0], Scalar::one()).unwrap();
        let red = z3sq.reduce().unwrap();
        let expect = parse_poly(&ctx, "z2^2 - z1^2").unwrap();
        assert!(red.is_equal(&expect).unwrap());

        let z4sq = GradedPoly::monomial(&ctx, vec![0, 0, 0, 2], Scalar::one()).unwrap();
        let expect = parse_poly(&ctx, "z2^2 - 5*z1^2").unwrap();
        assert!(z4sq.reduce().unwrap().is_equal(&expect).unwrap());

        // already reduced stays put (idempotence)
        let z1z2 = parse_poly(&ctx, "z1*z2").unwrap();
        let once = z1z2.reduce().unwrap();
        let twice = once.reduce().unwrap();
        assert_eq!(once.terms().len(), twice.terms().len());
        assert!(once.is_equal(&twice).unwrap());
    }

    #[test]
    fn reduce_preserves_degree() {
        let ctx = ctx_2222("7");
        let p = GradedPoly::monomial(&ctx, vec![1, 0, 3, 0], sc("2")).unwrap();
        let before = p.degree().unwrap().unwrap();
        let after = p.reduce().unwrap().degree().unwrap().unwrap();
        assert_eq!(before, after);
    }

    fn example_ker_x1x2(lam: &str) -> (ParamSeq, CompatibleHom) {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc(lam)]).unwrap();
        let (_, _, ch) =
            construct_cyclic_phi(&p, &lambda, &FiniteSubgroup::cyclic(&p, 1, 2, 2).unwrap())
                .unwrap();
        (lambda, ch)
    }

    #[test]
    fn example_ker_x1_x2_passes_all_checks() {
        let (lambda, ch) = example_ker_x1x2("3");
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
        assert!(ch.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn example_ker_x1_x2_mu_is_nu_squared() {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("3")]).unwrap();
        let (_, mu, _) =
            construct_cyclic_phi(&p, &lambda, &FiniteSubgroup::cyclic(&p, 1, 2, 2).unwrap())
                .unwrap();
        let nu = sc("(sqrt(3)+1)/(sqrt(3)-1)");
        assert!(mu.get(4).is_equal(&nu.mul(&nu).unwrap()));
    }

    #[test]
    fn example_wrong_coefficient_fails_relations() {
        // replace 2 sqrt(nu) z1 z2 by sqrt(nu) z1 z2: relations break
        let (lambda, ch) = example_ker_x1x2("3");
        let mut images = ch.images.clone();
        images[2] = images[2].scale(&sc("1/2")).unwrap();
        let bad = CompatibleHom::new(ch.pi.clone(), images).unwrap();
        assert!(bad.check_compatible().unwrap());
        assert!(!bad.check_relations(&lambda).unwrap());
    }

    #[test]
    fn example_wrong_degree_fails_compatible() {
        let (_, ch) = example_ker_x1x2("3");
        let ctx = ch.codomain_ctx().unwrap().clone();
        let mut images = ch.images.clone();
        images[2] = parse_poly(&ctx, "z1*z3").unwrap();
        let bad = CompatibleHom::new(ch.pi.clone(), images).unwrap();
        assert!(!bad.check_compatible().unwrap());
    }

    #[test]
    fn example_rank_collapse_fails_surjectivity() {
        let (_, ch) = example_ker_x1x2("3");
        let mut images = ch.images.clone();
        images[1] = images[0].clone();
        let bad = CompatibleHom::new(ch.pi.clone(), images).unwrap();
        assert!(!bad.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn prop_2222_ker0_row_inverse_lambda() {
        // mu = 1/lambda, pi = (z2, z1, z3, z4), phi = (z2, z1, i z3, sqrt(-l) z4)
        let p = ws(&[2, 2, 2, 2]);
        let lam = "5";
        let mu = ctx_2222("1/5");
        let rows = vec![
            p.generator(2).unwrap(),
            p.generator(1).unwrap(),
            p.generator(3).unwrap(),
            p.generator(4).unwrap(),
        ];
        let pi = StringHom::new(p.clone(), p.clone(), rows).unwrap();
        let images = vec![
            parse_poly(&mu, "z2").unwrap(),
            parse_poly(&mu, "z1").unwrap(),
            parse_poly(&mu, "sqrt(-1)*z3").unwrap(),
            parse_poly(&mu, &format!("sqrt(-({}))*z4", lam)).unwrap(),
        ];
        let ch = CompatibleHom::new(pi, images).unwrap();
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc(lam)]).unwrap();
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
        assert!(ch.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn permutation_12_gives_inverse_lambda() {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("7")]).unwrap();
        let (q, mu, ch) = permute_parameters(&p, &lambda, 1, 2).unwrap();
        assert_eq!(q.weights(), &[2, 2, 2, 2]);
        assert!(mu.get(4).is_equal(&sc("1/7")));
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
        assert!(ch.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn permutation_34_gives_inverse_lambda() {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("7")]).unwrap();
        let (_, mu, ch) = permute_parameters(&p, &lambda, 3, 4).unwrap();
        assert!(mu.get(4).is_equal(&sc("1/7")));
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
    }

    #[test]
    fn permutation_23_gives_one_minus_lambda() {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("7")]).unwrap();
        let (_, mu, ch) = permute_parameters(&p, &lambda, 2, 3).unwrap();
        assert!(mu.get(4).is_equal(&sc("1-7")));
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
    }

    #[test]
    fn permutation_14_case() {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("7")]).unwrap();
        let (_, _, ch) = permute_parameters(&p, &lambda, 1, 4).unwrap();
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
        assert!(ch.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn t2_table_rows() {
        // (nq1, nq2) -> (q1, q2); (nq, n) -> (q); (n, n) -> ()
        for (p, n, expect_q) in [
            (ws(&[4, 6]), 2, vec![2u32, 3]),
            (ws(&[6, 3]), 3, vec![2]),
            (ws(&[4, 4]), 4, vec![]),
        ] {
            let h = FiniteSubgroup::cyclic(&p, 1, 2, n).unwrap();
            let (q, mu, ch) = construct_cyclic_phi(&p, &ParamSeq::empty(), &h).unwrap();
            assert_eq!(q.weights(), expect_q.as_slice());
            assert!(mu.values().is_empty());
            assert!(ch.check_compatible().unwrap());
            assert!(ch.check_relations(&ParamSeq::empty()).unwrap());
            assert!(ch.check_surjective_small_degree().unwrap());
            assert_eq!(ch.pi.kernel().unwrap().elements(), h.elements());
        }
    }

    #[test]
    fn generic_branch_2_2_2p3() {
        // (2,2,2p3) with kernel <x2 - p3 x3> routes through permutation +
        // raw codomain with a weight-1 entry
        for p3 in [2u32, 3] {
            let p = ws(&[2, 2, 2 * p3]);
            let lambda = ParamSeq::new(3, vec![Scalar::one()]).unwrap();
            let h = FiniteSubgroup::cyclic(&p, 2, 3, 2).unwrap();
            let (q, _mu, ch) = construct_cyclic_phi(&p, &lambda, &h).unwrap();
            assert_eq!(q.canonical_multiset(), vec![p3.max(2), 2, 2.min(p3)]);
            assert!(ch.check_compatible().unwrap());
            assert!(ch.check_relations(&lambda).unwrap());
            assert!(ch.check_surjective_small_degree().unwrap());
        }
    }

    #[test]
    fn generic_branch_both_weights_large() {
        // (4,6,7,10) kernel <2x1 - 3x2>: n = 2 exact roots
        let p = ws(&[4, 6, 7, 10]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("2")]).unwrap();
        let h = FiniteSubgroup::cyclic(&p, 1, 2, 2).unwrap();
        let (q, mu, ch) = construct_cyclic_phi(&p, &lambda, &h).unwrap();
        assert_eq!(q.weights(), &[2, 3, 7, 7, 10, 10]);
        assert_eq!(mu.values().len(), 4);
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
        assert!(ch.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn identity_hom_checks() {
        let p = ws(&[2, 2, 2, 2]);
        let lambda = ParamSeq::new(4, vec![Scalar::one(), sc("5")]).unwrap();
        let ctx = AlgebraCtx::new(p.clone(), lambda.clone()).unwrap();
        let images: Vec<GradedPoly> =
            (1..=4).map(|i| GradedPoly::var(&ctx, i).unwrap()).collect();
        let ch = CompatibleHom::new(StringHom::identity(&p), images).unwrap();
        assert!(ch.check_compatible().unwrap());
        assert!(ch.check_relations(&lambda).unwrap());
        assert!(ch.check_surjective_small_degree().unwrap());
    }

    #[test]
    fn param_validation() {
        assert!(ParamSeq::new(4, vec![Scalar::one(), Scalar::one()]).is_err());
        assert!(ParamSeq::new(4, vec![Scalar::one(), Scalar::zero()]).is_err());
        assert!(ParamSeq::new(4, vec![sc("2"), sc("3")]).is_err());
        assert!(ParamSeq::from_free(4, vec![sc("5")]).is_ok());
    }
}
