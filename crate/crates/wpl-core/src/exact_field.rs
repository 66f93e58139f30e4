//! Exact arithmetic in towers of quadratic extensions of the rationals.
//!
//! An element lives in `Q(sqrt(d_1), ..., sqrt(d_k))` where each radicand
//! `d_i` is an element of the tower below it and is not a square there, so
//! the `2^k` products of radicals form a basis and the zero test is exact
//! (all coordinates zero). Square roots first search for a representation
//! inside the current tower before deepening it, which keeps towers flat
//! under iterated `(x+1)/(x-1)`-style computations and detects
//! multiplicative dependencies like `sqrt(6) = sqrt(2) sqrt(3)`.
//!
//! [`BigComplex`] is a fixed-point complex backend used as the independent
//! numeric oracle and as the deterministic branch selector for roots.

use crate::error::{Result, WplError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::sync::OnceLock;

pub type Rat = BigRational;

/// Default precision (bits) of the numeric backend.
pub const APPROX_PREC: u32 = 128;
/// Zero tolerance of the numeric backend: `|x| < 2^-TOL_BITS`.
pub const TOL_BITS: u32 = 40;

const DEFAULT_DEPTH_CAP: u32 = 4;

fn depth_cap() -> u32 {
    static CAP: OnceLock<u32> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("WPL_TOWER_DEPTH")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_DEPTH_CAP)
    })
}

fn rat_i64(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// Tower
// ---------------------------------------------------------------------------

/// A multiquadratic tower: `rads[i]` holds the coordinates (length `2^i`)
/// of the `i`-th radicand over the tower formed by `rads[..i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tower {
    rads: Vec<Vec<Rat>>,
}

impl Tower {
    fn rational() -> Tower {
        Tower { rads: Vec::new() }
    }

    fn depth(&self) -> usize {
        self.rads.len()
    }

    fn radicand(&self, i: usize) -> FieldElem {
        FieldElem {
            tower: Tower {
                rads: self.rads[..i].to_vec(),
            },
            coords: self.rads[i].clone(),
        }
    }

    fn zero_coords(&self) -> Vec<Rat> {
        vec![Rat::zero(); 1 << self.depth()]
    }

    /// Coordinate multiplication at `level` (coords of length `2^level`).
    fn mul(&self, level: usize, a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        if level == 0 {
            return vec![&a[0] * &b[0]];
        }
        let h = 1 << (level - 1);
        let (a0, a1) = a.split_at(h);
        let (b0, b1) = b.split_at(h);
        let d = &self.rads[level - 1];
        let a0b0 = self.mul(level - 1, a0, b0);
        let a1b1 = self.mul(level - 1, a1, b1);
        let a1b1d = self.mul(level - 1, &a1b1, d);
        let a0b1 = self.mul(level - 1, a0, b1);
        let a1b0 = self.mul(level - 1, a1, b0);
        let mut out = Vec::with_capacity(2 * h);
        for i in 0..h {
            out.push(&a0b0[i] + &a1b1d[i]);
        }
        for i in 0..h {
            out.push(&a0b1[i] + &a1b0[i]);
        }
        out
    }

    fn inv(&self, level: usize, a: &[Rat]) -> Result<Vec<Rat>> {
        if a.iter().all(Rat::is_zero) {
            return Err(WplError::DivisionByZero);
        }
        if level == 0 {
            return Ok(vec![Rat::one() / &a[0]]);
        }
        let h = 1 << (level - 1);
        let (a0, a1) = a.split_at(h);
        if a1.iter().all(Rat::is_zero) {
            let mut out = self.inv(level - 1, a0)?;
            out.extend(vec![Rat::zero(); h]);
            return Ok(out);
        }
        // 1/(a0 + a1 r) = (a0 - a1 r) / (a0^2 - a1^2 d)
        let d = &self.rads[level - 1];
        let a0sq = self.mul(level - 1, a0, a0);
        let a1sq = self.mul(level - 1, a1, a1);
        let a1sqd = self.mul(level - 1, &a1sq, d);
        let norm: Vec<Rat> = a0sq
            .iter()
            .zip(a1sqd.iter())
            .map(|(x, y)| x - y)
            .collect();
        let inv_norm = self.inv(level - 1, &norm)?;
        let lo = self.mul(level - 1, a0, &inv_norm);
        let hi = self.mul(level - 1, a1, &inv_norm);
        let mut out = lo;
        out.extend(hi.into_iter().map(|x| -x));
        Ok(out)
    }

    /// Search for `r` with `r^2 = s` inside the tower truncated at `level`.
    fn sqrt_in(&self, level: usize, s: &[Rat]) -> Option<Vec<Rat>> {
        if s.iter().all(Rat::is_zero) {
            return Some(vec![Rat::zero(); 1 << level]);
        }
        if level == 0 {
            return rational_sqrt(&s[0]).map(|r| vec![r]);
        }
        let h = 1 << (level - 1);
        let (u, v) = s.split_at(h);
        let d = &self.rads[level - 1];
        if v.iter().all(Rat::is_zero) {
            // r in the subtower, or r = b * sqrt(d)
            if let Some(r) = self.sqrt_in(level - 1, u) {
                let mut out = r;
                out.extend(vec![Rat::zero(); h]);
                return Some(out);
            }
            // (b sqrt(d))^2 = b^2 d = u  =>  b^2 = u / d
            if let Ok(inv_d) = self.inv(level - 1, d) {
                let u_over_d = self.mul(level - 1, u, &inv_d);
                if let Some(b) = self.sqrt_in(level - 1, &u_over_d) {
                    let mut out = vec![Rat::zero(); h];
                    out.extend(b);
                    return Some(out);
                }
            }
            return None;
        }
        // r = a + b sqrt(d) with a, b != 0:
        //   a^2 + b^2 d = u, 2ab = v  =>  a^2 = (u +- sqrt(u^2 - v^2 d)) / 2
        let usq = self.mul(level - 1, u, u);
        let vsq = self.mul(level - 1, v, v);
        let vsqd = self.mul(level - 1, &vsq, d);
        let disc: Vec<Rat> = usq.iter().zip(vsqd.iter()).map(|(x, y)| x - y).collect();
        let t = self.sqrt_in(level - 1, &disc)?;
        for sign in [1i64, -1] {
            let w: Vec<Rat> = u
                .iter()
                .zip(t.iter())
                .map(|(ui, ti)| (ui + ti * rat_i64(sign, 1)) * rat_i64(1, 2))
                .collect();
            if w.iter().all(Rat::is_zero) {
                continue;
            }
            if let Some(a) = self.sqrt_in(level - 1, &w) {
                if a.iter().all(Rat::is_zero) {
                    continue;
                }
                if let Ok(inv_2a) = self.inv(
                    level - 1,
                    &a.iter().map(|x| x * rat_i64(2, 1)).collect::<Vec<_>>(),
                ) {
                    let b = self.mul(level - 1, v, &inv_2a);
                    let mut cand = a.clone();
                    cand.extend(b);
                    let sq = self.mul(level, &cand, &cand);
                    if sq.iter().zip(s.iter()).all(|(x, y)| x == y) {
                        return Some(cand);
                    }
                }
            }
        }
        None
    }

    fn approx_radicals(&self, prec: u32) -> Vec<BigComplex> {
        let mut rads: Vec<BigComplex> = Vec::with_capacity(self.depth());
        for i in 0..self.depth() {
            let d = approx_coords(i, &self.rads[i], &rads, prec);
            rads.push(d.sqrt());
        }
        rads
    }
}

/// Horner evaluation of coords at `level` against resolved radical values.
fn approx_coords(level: usize, coords: &[Rat], radicals: &[BigComplex], prec: u32) -> BigComplex {
    if level == 0 {
        return BigComplex::from_rat(&coords[0], prec);
    }
    let h = 1 << (level - 1);
    let lo = approx_coords(level - 1, &coords[..h], radicals, prec);
    let hi = approx_coords(level - 1, &coords[h..], radicals, prec);
    lo.add(&hi.mul(&radicals[level - 1]))
}

fn rational_sqrt(s: &Rat) -> Option<Rat> {
    if s.is_zero() {
        return Some(Rat::zero());
    }
    if s.is_negative() {
        return None;
    }
    let (n, d) = (s.numer(), s.denom());
    let rn = num_integer::Roots::sqrt(n);
    let rd = num_integer::Roots::sqrt(d);
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Rat::new(rn, rd))
    } else {
        None
    }
}

/// `n = m^2 * d` with `d` free of small square factors (sign kept in `d`).
fn split_square_part(n: &BigInt) -> (BigInt, BigInt) {
    let mut m = BigInt::one();
    let mut d = n.clone();
    let mut p = BigInt::from(2);
    let limit = BigInt::from(1000);
    while p <= limit {
        let psq = &p * &p;
        while (&d % &psq).is_zero() {
            d /= &psq;
            m *= &p;
        }
        p += 1;
    }
    // remaining part: try a full integer square root once
    let abs = d.abs();
    let r = num_integer::Roots::sqrt(&abs);
    if &r * &r == abs && !r.is_zero() {
        m *= &r;
        d = if d.is_negative() {
            -BigInt::one()
        } else {
            BigInt::one()
        };
    }
    (m, d)
}

// ---------------------------------------------------------------------------
// FieldElem
// ---------------------------------------------------------------------------

/// An exact element of a multiquadratic tower over the rationals.
#[derive(Debug, Clone)]
pub struct FieldElem {
    tower: Tower,
    coords: Vec<Rat>,
}

impl FieldElem {
    pub fn zero() -> FieldElem {
        FieldElem::from_rat(Rat::zero())
    }

    pub fn one() -> FieldElem {
        FieldElem::from_rat(Rat::one())
    }

    pub fn from_rat(r: Rat) -> FieldElem {
        FieldElem {
            tower: Tower::rational(),
            coords: vec![r],
        }
    }

    pub fn from_int(n: i64) -> FieldElem {
        FieldElem::from_rat(rat_i64(n, 1))
    }

    pub fn from_fraction(num: i64, den: i64) -> Result<FieldElem> {
        if den == 0 {
            return Err(WplError::DivisionByZero);
        }
        Ok(FieldElem::from_rat(rat_i64(num, den)))
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Rat::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(Rat::is_zero)
    }

    /// The rational value, when the element is rational.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.coords[1..].iter().all(Rat::is_zero) {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    /// Drop unused top radicals.
    fn pruned(mut self) -> FieldElem {
        while self.tower.depth() > 0 {
            let h = self.coords.len() / 2;
            if self.coords[h..].iter().all(Rat::is_zero) {
                self.coords.truncate(h);
                self.tower.rads.pop();
            } else {
                break;
            }
        }
        self
    }

    fn binop(
        &self,
        other: &FieldElem,
        f: impl Fn(&Tower, &[Rat], &[Rat]) -> Vec<Rat>,
    ) -> Result<FieldElem> {
        if self.tower == other.tower {
            let coords = f(&self.tower, &self.coords, &other.coords);
            return Ok(FieldElem {
                tower: self.tower.clone(),
                coords,
            }
            .pruned());
        }
        let mut target = self.tower.clone();
        let b = embed(other, &mut target)?;
        let mut a = self.coords.clone();
        a.resize(1 << target.depth(), Rat::zero());
        let coords = f(&target, &a, &b);
        Ok(FieldElem {
            tower: target,
            coords,
        }
        .pruned())
    }

    pub fn add(&self, other: &FieldElem) -> Result<FieldElem> {
        self.binop(other, |_, a, b| {
            a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
        })
    }

    pub fn sub(&self, other: &FieldElem) -> Result<FieldElem> {
        self.binop(other, |_, a, b| {
            a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
        })
    }

    pub fn neg(&self) -> FieldElem {
        FieldElem {
            tower: self.tower.clone(),
            coords: self.coords.iter().map(|x| -x).collect(),
        }
    }

    pub fn mul(&self, other: &FieldElem) -> Result<FieldElem> {
        self.binop(other, |t, a, b| t.mul(t.depth(), a, b))
    }

    pub fn div(&self, other: &FieldElem) -> Result<FieldElem> {
        if other.is_zero() {
            return Err(WplError::DivisionByZero);
        }
        let inv = FieldElem {
            tower: other.tower.clone(),
            coords: other.tower.inv(other.tower.depth(), &other.coords)?,
        };
        self.mul(&inv)
    }

    pub fn pow(&self, exp: i64) -> Result<FieldElem> {
        if exp < 0 {
            return FieldElem::one().div(self)?.pow(-exp);
        }
        let mut acc = FieldElem::one();
        let mut base = self.clone();
        let mut e = exp as u64;
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

    pub fn is_equal(&self, other: &FieldElem) -> bool {
        match self.sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// Square root: search the current tower first, then adjoin. The branch
    /// is deterministic: the returned root has positive real part in the
    /// principal embedding, ties broken by positive imaginary part.
    pub fn sqrt(&self) -> Result<FieldElem> {
        if self.is_zero() {
            return Ok(FieldElem::zero());
        }
        if let Some(r) = self.tower.sqrt_in(self.tower.depth(), &self.coords) {
            let cand = FieldElem {
                tower: self.tower.clone(),
                coords: r,
            }
            .pruned();
            return Ok(principal_branch(cand));
        }
        if let Some(r) = self.as_rational() {
            // sqrt(m^2 d / q^2) = (m/q) sqrt(d) with d square-reduced
            let scaled = r.numer() * r.denom(); // r = scaled / denom^2
            let (m, d) = split_square_part(&scaled);
            let tower = Tower {
                rads: vec![vec![Rat::from(d)]],
            };
            let coeff = Rat::new(m, r.denom().clone());
            return Ok(FieldElem {
                tower,
                coords: vec![Rat::zero(), coeff],
            });
        }
        if self.tower.depth() as u32 >= depth_cap() {
            return Err(WplError::TowerDepthExceeded(depth_cap()));
        }
        let mut tower = self.tower.clone();
        tower.rads.push(self.coords.clone());
        let mut coords = vec![Rat::zero(); 1 << tower.depth()];
        coords[1 << (tower.depth() - 1)] = Rat::one();
        Ok(FieldElem { tower, coords })
    }

    /// `n`-th root for `n` a power of two (iterated square roots); other
    /// orders are outside the exact fragment.
    pub fn nth_root(&self, n: u32) -> Result<FieldElem> {
        if n == 0 {
            return Err(WplError::Invalid("0th root".into()));
        }
        let mut k = n;
        let mut acc = self.clone();
        while k > 1 {
            if k % 2 != 0 {
                return Err(WplError::NonQuadraticRoot);
            }
            acc = acc.sqrt()?;
            k /= 2;
        }
        Ok(acc)
    }

    /// Numeric embedding under the principal branch of every radical.
    pub fn approx(&self, prec: u32) -> BigComplex {
        let radicals = self.tower.approx_radicals(prec);
        approx_coords(self.tower.depth(), &self.coords, &radicals, prec)
    }

    /// Deterministic sort key: the principal embedding compared by real
    /// part, then imaginary part.
    pub fn sort_key(&self) -> (BigInt, BigInt) {
        let a = self.approx(APPROX_PREC);
        (a.re, a.im)
    }
}

fn principal_branch(e: FieldElem) -> FieldElem {
    let prec = APPROX_PREC + 64;
    let a = e.approx(prec);
    let eps = BigInt::one() << ((prec - 80) as usize);
    if a.re > eps {
        return e;
    }
    if a.re < -eps {
        return e.neg();
    }
    if a.im >= BigInt::zero() {
        e
    } else {
        e.neg()
    }
}

/// Express `e` over `target`, extending `target` as needed.
fn embed(e: &FieldElem, target: &mut Tower) -> Result<Vec<Rat>> {
    let mut radicals: Vec<Vec<Rat>> = Vec::with_capacity(e.tower.depth());
    for i in 0..e.tower.depth() {
        let rad = e.tower.radicand(i);
        let d_coords = embed(&rad, target)?;
        let r = resolve_sqrt(target, &d_coords, &rad)?;
        radicals.push(r);
    }
    // pad everything to the final depth
    let size = 1 << target.depth();
    for r in radicals.iter_mut() {
        r.resize(size, Rat::zero());
    }
    Ok(eval_embedded(
        target,
        e.tower.depth(),
        &e.coords,
        &radicals,
    ))
}

fn eval_embedded(target: &Tower, level: usize, coords: &[Rat], radicals: &[Vec<Rat>]) -> Vec<Rat> {
    if level == 0 {
        let mut out = target.zero_coords();
        out[0] = coords[0].clone();
        return out;
    }
    let h = 1 << (level - 1);
    let lo = eval_embedded(target, level - 1, &coords[..h], radicals);
    let hi = eval_embedded(target, level - 1, &coords[h..], radicals);
    let hi_r = target.mul(target.depth(), &hi, &radicals[level - 1]);
    lo.iter().zip(hi_r.iter()).map(|(x, y)| x + y).collect()
}

/// Find the principal square root of the value with coordinates `d_coords`
/// in `target`, adjoining a new radical when no representation exists.
fn resolve_sqrt(target: &mut Tower, d_coords: &[Rat], source_rad: &FieldElem) -> Result<Vec<Rat>> {
    let mut d = d_coords.to_vec();
    d.resize(1 << target.depth(), Rat::zero());
    if let Some(r) = target.sqrt_in(target.depth(), &d) {
        // match the sign against the principal branch of the source radical
        let prec = APPROX_PREC + 64;
        let principal = source_rad.approx(prec).sqrt();
        let rad_vals = target.approx_radicals(prec);
        let found = approx_coords(target.depth(), &r, &rad_vals, prec);
        let diff_plus = found.sub(&principal).norm2();
        let diff_minus = found.neg().sub(&principal).norm2();
        if diff_plus <= diff_minus {
            return Ok(r);
        }
        return Ok(r.into_iter().map(|x| -x).collect());
    }
    if target.depth() as u32 >= depth_cap() {
        return Err(WplError::TowerDepthExceeded(depth_cap()));
    }
    target.rads.push(d);
    let mut coords = vec![Rat::zero(); 1 << target.depth()];
    coords[1 << (target.depth() - 1)] = Rat::one();
    Ok(coords)
}

// ---------------------------------------------------------------------------
// Display / parsing
// ---------------------------------------------------------------------------

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(bool, String)> = Vec::new(); // (negative, body)
        for (mask, coeff) in self.coords.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let mut factors: Vec<String> = Vec::new();
            for i in 0..self.tower.depth() {
                if mask & (1 << i) != 0 {
                    factors.push(format!("sqrt({})", self.tower.radicand(i)));
                }
            }
            let neg = coeff.is_negative();
            let abs = coeff.abs();
            let coeff_str = if abs.is_one() && !factors.is_empty() {
                String::new()
            } else if abs.denom().is_one() {
                abs.numer().to_string()
            } else {
                format!("{}/{}", abs.numer(), abs.denom())
            };
            let body = match (coeff_str.is_empty(), factors.is_empty()) {
                (true, _) => factors.join("*"),
                (false, true) => coeff_str,
                (false, false) => format!("{}*{}", coeff_str, factors.join("*")),
            };
            terms.push((neg, body));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        let mut out = String::new();
        for (i, (neg, body)) in terms.iter().enumerate() {
            if i == 0 {
                if *neg {
                    out.push('-');
                }
            } else if *neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(body);
        }
        write!(f, "{}", out)
    }
}

/// Expression AST shared by the field-literal and polynomial parsers.
#[derive(Debug, Clone)]
pub enum Expr {
    Int(BigInt),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
}

pub fn parse_expr(input: &str) -> Result<Expr> {
    let mut p = Parser {
        bytes: input.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(WplError::Parse(format!(
            "unexpected trailing input at byte {}",
            p.pos
        )));
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(WplError::Parse("expected exponent after '^'".into()));
            }
            let exp: u32 = std::str::from_utf8(&self.bytes[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| WplError::Parse("exponent out of range".into()))?;
            return Ok(Expr::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(WplError::Parse("expected ')'".into()));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: BigInt = std::str::from_utf8(&self.bytes[start..self.pos])
                    .unwrap()
                    .parse()
                    .unwrap();
                Ok(Expr::Int(n))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                match word {
                    "sqrt" => {
                        if self.peek() != Some(b'(') {
                            return Err(WplError::Parse("expected '(' after sqrt".into()));
                        }
                        self.pos += 1;
                        let e = self.expr()?;
                        if self.peek() != Some(b')') {
                            return Err(WplError::Parse("expected ')'".into()));
                        }
                        self.pos += 1;
                        Ok(Expr::Sqrt(Box::new(e)))
                    }
                    "z" | "x" => {
                        let dstart = self.pos;
                        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                        if dstart == self.pos {
                            return Err(WplError::Parse(format!(
                                "expected index after variable '{}'",
                                word
                            )));
                        }
                        let idx: usize = std::str::from_utf8(&self.bytes[dstart..self.pos])
                            .unwrap()
                            .parse()
                            .map_err(|_| WplError::Parse("variable index out of range".into()))?;
                        if idx == 0 {
                            return Err(WplError::Parse("variable indices start at 1".into()));
                        }
                        Ok(Expr::Var(idx))
                    }
                    other => Err(WplError::Parse(format!("unknown symbol '{}'", other))),
                }
            }
            other => Err(WplError::Parse(format!(
                "unexpected input {:?}",
                other.map(|c| c as char)
            ))),
        }
    }
}

/// Parse a field literal like `"(1+sqrt(-3))/2"`; variables are rejected.
pub fn parse_field(input: &str) -> Result<FieldElem> {
    fn eval(e: &Expr) -> Result<FieldElem> {
        match e {
            Expr::Int(n) => Ok(FieldElem::from_rat(Rat::from(n.clone()))),
            Expr::Var(_) => Err(WplError::Parse(
                "variables are not allowed in a field literal".into(),
            )),
            Expr::Neg(a) => Ok(eval(a)?.neg()),
            Expr::Add(a, b) => eval(a)?.add(&eval(b)?),
            Expr::Sub(a, b) => eval(a)?.sub(&eval(b)?),
            Expr::Mul(a, b) => eval(a)?.mul(&eval(b)?),
            Expr::Div(a, b) => eval(a)?.div(&eval(b)?),
            Expr::Pow(a, k) => eval(a)?.pow(*k as i64),
            Expr::Sqrt(a) => eval(a)?.sqrt(),
        }
    }
    eval(&parse_expr(input)?)
}

// ---------------------------------------------------------------------------
// BigComplex
// ---------------------------------------------------------------------------

/// Fixed-point complex number: value `(re + i im) / 2^prec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigComplex {
    pub re: BigInt,
    pub im: BigInt,
    pub prec: u32,
}

impl BigComplex {
    pub fn zero(prec: u32) -> BigComplex {
        BigComplex {
            re: BigInt::zero(),
            im: BigInt::zero(),
            prec,
        }
    }

    pub fn one(prec: u32) -> BigComplex {
        BigComplex {
            re: BigInt::one() << prec,
            im: BigInt::zero(),
            prec,
        }
    }

    pub fn from_rat(r: &Rat, prec: u32) -> BigComplex {
        BigComplex {
            re: (r.numer() << prec) / r.denom(),
            im: BigInt::zero(),
            prec,
        }
    }

    pub fn from_f64_pair(re: f64, im: f64, prec: u32) -> BigComplex {
        let scale = (1u64 << 52) as f64;
        let to_big = |x: f64| -> BigInt {
            let scaled = (x * scale).round();
            let b = BigInt::from(scaled as i128);
            if prec >= 52 {
                b << (prec - 52)
            } else {
                b >> (52 - prec)
            }
        };
        BigComplex {
            re: to_big(re),
            im: to_big(im),
            prec,
        }
    }

    fn align(&self, other: &BigComplex) -> (BigComplex, BigComplex) {
        use std::cmp::Ordering::*;
        match self.prec.cmp(&other.prec) {
            Equal => (self.clone(), other.clone()),
            Less => (self.rescale(other.prec), other.clone()),
            Greater => (self.clone(), other.rescale(self.prec)),
        }
    }

    fn rescale(&self, prec: u32) -> BigComplex {
        if prec >= self.prec {
            BigComplex {
                re: &self.re << (prec - self.prec),
                im: &self.im << (prec - self.prec),
                prec,
            }
        } else {
            BigComplex {
                re: &self.re >> (self.prec - prec),
                im: &self.im >> (self.prec - prec),
                prec,
            }
        }
    }

    pub fn add(&self, other: &BigComplex) -> BigComplex {
        let (a, b) = self.align(other);
        BigComplex {
            re: a.re + b.re,
            im: a.im + b.im,
            prec: a.prec,
        }
    }

    pub fn sub(&self, other: &BigComplex) -> BigComplex {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> BigComplex {
        BigComplex {
            re: -&self.re,
            im: -&self.im,
            prec: self.prec,
        }
    }

    pub fn mul(&self, other: &BigComplex) -> BigComplex {
        let (a, b) = self.align(other);
        BigComplex {
            re: (&a.re * &b.re - &a.im * &b.im) >> a.prec,
            im: (&a.re * &b.im + &a.im * &b.re) >> a.prec,
            prec: a.prec,
        }
    }

    pub fn div(&self, other: &BigComplex) -> Result<BigComplex> {
        let (a, b) = self.align(other);
        let den = &b.re * &b.re + &b.im * &b.im; // scale 2^(2p)
        if den.is_zero() {
            return Err(WplError::DivisionByZero);
        }
        let nre = &a.re * &b.re + &a.im * &b.im;
        let nim = &a.im * &b.re - &a.re * &b.im;
        Ok(BigComplex {
            re: (nre << a.prec) / &den,
            im: (nim << a.prec) / &den,
            prec: a.prec,
        })
    }

    /// `|z|^2` as a fixed-point real at the same precision.
    pub fn norm2(&self) -> BigInt {
        (&self.re * &self.re + &self.im * &self.im) >> self.prec
    }

    /// Principal square root (nonnegative real part; on the cut, im >= 0).
    pub fn sqrt(&self) -> BigComplex {
        let p = self.prec;
        if self.im.is_zero() {
            if self.re >= BigInt::zero() {
                return BigComplex {
                    re: num_integer::Roots::sqrt(&(&self.re << p)),
                    im: BigInt::zero(),
                    prec: p,
                };
            }
            return BigComplex {
                re: BigInt::zero(),
                im: num_integer::Roots::sqrt(&((-&self.re) << p)),
                prec: p,
            };
        }
        let norm2 = &self.re * &self.re + &self.im * &self.im; // 2^(2p)
        let r = num_integer::Roots::sqrt(&norm2); // 2^p
        let u2 = (&r + &self.re) << ((p - 1) as usize); // (r+re)/2 at 2^(2p)
        let v2 = (&r - &self.re) << ((p - 1) as usize);
        let u = num_integer::Roots::sqrt(&u2);
        let v = num_integer::Roots::sqrt(&v2);
        let v = if self.im.is_negative() { -v } else { v };
        BigComplex {
            re: u,
            im: v,
            prec: p,
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        let scale = 2f64.powi(-(self.prec as i32));
        (
            self.re.to_f64().unwrap_or(f64::NAN) * scale,
            self.im.to_f64().unwrap_or(f64::NAN) * scale,
        )
    }

    /// Principal `n`-th root by Newton iteration from an `f64` seed.
    pub fn nth_root(&self, n: u32) -> Result<BigComplex> {
        if n == 0 {
            return Err(WplError::Invalid("0th root".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        if self.is_zero(self.prec) {
            return Ok(BigComplex::zero(self.prec));
        }
        let (re, im) = self.to_f64_pair();
        let mag = re.hypot(im).powf(1.0 / n as f64);
        let ang = im.atan2(re) / n as f64;
        self.newton_root(n, mag * ang.cos(), mag * ang.sin())
    }

    /// All `n` roots of `self`, sorted by descending real then imaginary
    /// part; deterministic for a fixed precision.
    pub fn all_nth_roots(&self, n: u32) -> Result<Vec<BigComplex>> {
        let (re, im) = self.to_f64_pair();
        let mag = re.hypot(im).powf(1.0 / n as f64);
        let base = im.atan2(re) / n as f64;
        let mut out = Vec::with_capacity(n as usize);
        for k in 0..n {
            let ang = base + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            out.push(self.newton_root(n, mag * ang.cos(), mag * ang.sin())?);
        }
        out.sort_by(|a, b| b.re.cmp(&a.re).then(b.im.cmp(&a.im)));
        Ok(out)
    }

    fn newton_root(&self, n: u32, seed_re: f64, seed_im: f64) -> Result<BigComplex> {
        let mut w = BigComplex::from_f64_pair(seed_re, seed_im, self.prec);
        let n_fixed = BigComplex::from_rat(&rat_i64(n as i64, 1), self.prec);
        let n1_fixed = BigComplex::from_rat(&rat_i64(n as i64 - 1, 1), self.prec);
        for _ in 0..64 {
            let mut wpow = BigComplex::one(self.prec);
            for _ in 0..(n - 1) {
                wpow = wpow.mul(&w);
            }
            // w <- ((n-1) w + z / w^(n-1)) / n
            let next = n1_fixed.mul(&w).add(&self.div(&wpow)?).div(&n_fixed)?;
            let delta = next.sub(&w);
            w = next;
            if delta.norm2().bits() as i64 <= self.prec as i64 - 2 * TOL_BITS as i64 {
                break;
            }
        }
        Ok(w)
    }

    pub fn pow(&self, exp: i64) -> Result<BigComplex> {
        if exp < 0 {
            return BigComplex::one(self.prec).div(self)?.pow(-exp);
        }
        let mut acc = BigComplex::one(self.prec);
        let mut base = self.clone();
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// Zero within `2^-tol_bits`.
    pub fn is_zero(&self, tol_bits: u32) -> bool {
        let eps = BigInt::one() << (self.prec.saturating_sub(tol_bits)) as usize;
        self.re.abs() < eps && self.im.abs() < eps
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_f64_pair();
        if im == 0.0 {
            write!(f, "~{:.12}", re)
        } else {
            write!(f, "~({:.12}{:+.12}i)", re, im)
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar: exact value with numeric fallback
// ---------------------------------------------------------------------------

/// A field scalar: exact tower element, or a numeric value when a required
/// root leaves the quadratic fragment.
#[derive(Debug, Clone)]
pub enum Scalar {
    Exact(FieldElem),
    Approx(BigComplex),
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::Exact(FieldElem::zero())
    }

    pub fn one() -> Scalar {
        Scalar::Exact(FieldElem::one())
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::Exact(FieldElem::from_int(n))
    }

    pub fn from_fraction(num: i64, den: i64) -> Result<Scalar> {
        Ok(Scalar::Exact(FieldElem::from_fraction(num, den)?))
    }

    pub fn parse(input: &str) -> Result<Scalar> {
        Ok(Scalar::Exact(parse_field(input)?))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_approx(&self, prec: u32) -> BigComplex {
        match self {
            Scalar::Exact(e) => e.approx(prec),
            Scalar::Approx(a) => a.rescale(prec),
        }
    }

    fn promote(a: &Scalar, b: &Scalar) -> Option<(BigComplex, BigComplex)> {
        match (a, b) {
            (Scalar::Exact(_), Scalar::Exact(_)) => None,
            _ => {
                let prec = match (a, b) {
                    (Scalar::Approx(x), Scalar::Approx(y)) => x.prec.max(y.prec),
                    (Scalar::Approx(x), _) => x.prec,
                    (_, Scalar::Approx(y)) => y.prec,
                    _ => APPROX_PREC,
                };
                Some((a.to_approx(prec), b.to_approx(prec)))
            }
        }
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        match Scalar::promote(self, other) {
            None => match (self, other) {
                (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a.add(b)?)),
                _ => unreachable!(),
            },
            Some((a, b)) => Ok(Scalar::Approx(a.add(&b))),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(e) => Scalar::Exact(e.neg()),
            Scalar::Approx(a) => Scalar::Approx(a.neg()),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        match Scalar::promote(self, other) {
            None => match (self, other) {
                (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a.mul(b)?)),
                _ => unreachable!(),
            },
            Some((a, b)) => Ok(Scalar::Approx(a.mul(&b))),
        }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        if other.is_zero() {
            return Err(WplError::DivisionByZero);
        }
        match Scalar::promote(self, other) {
            None => match (self, other) {
                (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a.div(b)?)),
                _ => unreachable!(),
            },
            Some((a, b)) => Ok(Scalar::Approx(a.div(&b)?)),
        }
    }

    pub fn pow(&self, exp: i64) -> Result<Scalar> {
        match self {
            Scalar::Exact(e) => Ok(Scalar::Exact(e.pow(exp)?)),
            Scalar::Approx(a) => Ok(Scalar::Approx(a.pow(exp)?)),
        }
    }

    /// Exact square root when possible; numeric when the tower overflows.
    pub fn sqrt(&self) -> Result<Scalar> {
        match self {
            Scalar::Exact(e) => match e.sqrt() {
                Ok(r) => Ok(Scalar::Exact(r)),
                Err(WplError::TowerDepthExceeded(_)) => {
                    Ok(Scalar::Approx(e.approx(APPROX_PREC).sqrt()))
                }
                Err(err) => Err(err),
            },
            Scalar::Approx(a) => Ok(Scalar::Approx(a.sqrt())),
        }
    }

    /// `n`-th root: exact for powers of two, numeric otherwise.
    pub fn nth_root(&self, n: u32) -> Result<Scalar> {
        match self {
            Scalar::Exact(e) => match e.nth_root(n) {
                Ok(r) => Ok(Scalar::Exact(r)),
                Err(WplError::NonQuadraticRoot) | Err(WplError::TowerDepthExceeded(_)) => {
                    Ok(Scalar::Approx(e.approx(APPROX_PREC).nth_root(n)?))
                }
                Err(err) => Err(err),
            },
            Scalar::Approx(a) => Ok(Scalar::Approx(a.nth_root(n)?)),
        }
    }

    /// All `n`-th roots; exact for `n = 2` when the tower permits, numeric
    /// otherwise.
    pub fn all_nth_roots(&self, n: u32) -> Result<Vec<Scalar>> {
        if n == 1 {
            return Ok(vec![self.clone()]);
        }
        if n == 2 {
            if let Scalar::Exact(e) = self {
                if let Ok(r) = e.sqrt() {
                    return Ok(vec![Scalar::Exact(r.clone()), Scalar::Exact(r.neg())]);
                }
            }
        }
        let roots = self.to_approx(APPROX_PREC).all_nth_roots(n)?;
        Ok(roots.into_iter().map(Scalar::Approx).collect())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(e) => e.is_zero(),
            Scalar::Approx(a) => a.is_zero(TOL_BITS),
        }
    }

    pub fn is_one(&self) -> bool {
        self.sub(&Scalar::one())
            .map(|d| d.is_zero())
            .unwrap_or(false)
    }

    pub fn is_equal(&self, other: &Scalar) -> bool {
        self.sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }

    /// Deterministic sort key (principal embedding, real then imaginary).
    pub fn sort_key(&self) -> (BigInt, BigInt) {
        let a = self.to_approx(APPROX_PREC);
        (a.re, a.im)
    }

    /// Literal form: exact literal, or a `~`-prefixed decimal for numeric
    /// values.
    pub fn literal(&self) -> String {
        match self {
            Scalar::Exact(e) => e.to_string(),
            Scalar::Approx(a) => a.to_string(),
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.is_equal(other)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.literal())
    }
}
