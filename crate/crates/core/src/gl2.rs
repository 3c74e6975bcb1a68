//! Exact computations in GL2(F_l): explicit subgroup families, closures,
//! and classification of subgroups into reducible, Cartan-normalizer,
//! SL2-containing and irregular (projectively A4, S4, A5) cases.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, mod_inv, mod_mul, mod_pow};

pub const CLOSURE_CAP: usize = 30_000;
/// Smallest prime the bound machinery treats as acceptable.
pub const ACCEPTABLE_THRESHOLD: u64 = 53;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gl2Error {
    #[error("closure exceeded {0} elements")]
    SizeCapExceeded(usize),
    #[error("element set is not closed under multiplication")]
    NotClosed,
    #[error("{eps} is not a quadratic nonresidue mod {ell}")]
    InvalidEps { ell: u64, eps: u64 },
    #[error("modulus {0} must be an odd prime")]
    InvalidModulus(u64),
    #[error("determinant is zero")]
    ZeroDet,
    #[error("empty element set")]
    Empty,
}

/// `[[a, b], [c, d]]` over F_l.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
    pub ell: u64,
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]] mod {}", self.a, self.b, self.c, self.d, self.ell)
    }
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64, ell: u64) -> Self {
        let r = |x: i64| arith::reduce_i64(x, ell);
        Self { a: r(a), b: r(b), c: r(c), d: r(d), ell }
    }

    pub fn identity(ell: u64) -> Self {
        Self::new(1, 0, 0, 1, ell)
    }

    pub fn scalar(s: u64, ell: u64) -> Self {
        Self { a: s % ell, b: 0, c: 0, d: s % ell, ell }
    }

    pub fn diag(x: u64, y: u64, ell: u64) -> Self {
        Self { a: x % ell, b: 0, c: 0, d: y % ell, ell }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let l = self.ell;
        let m = |x, y| mod_mul(x, y, l);
        Self {
            a: (m(self.a, o.a) + m(self.b, o.c)) % l,
            b: (m(self.a, o.b) + m(self.b, o.d)) % l,
            c: (m(self.c, o.a) + m(self.d, o.c)) % l,
            d: (m(self.c, o.b) + m(self.d, o.d)) % l,
            ell: l,
        }
    }

    pub fn det(&self) -> u64 {
        let l = self.ell;
        (mod_mul(self.a, self.d, l) + l - mod_mul(self.b, self.c, l)) % l
    }

    pub fn trace(&self) -> u64 {
        (self.a + self.d) % self.ell
    }

    pub fn is_scalar(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d
    }

    pub fn inverse(&self) -> Option<Self> {
        let l = self.ell;
        let inv = mod_inv(self.det(), l)?;
        let neg = |x: u64| (l - x) % l;
        Some(Self {
            a: mod_mul(self.d, inv, l),
            b: mod_mul(neg(self.b), inv, l),
            c: mod_mul(neg(self.c), inv, l),
            d: mod_mul(self.a, inv, l),
            ell: l,
        })
    }

    pub fn scale(&self, s: u64) -> Self {
        let l = self.ell;
        Self {
            a: mod_mul(self.a, s, l),
            b: mod_mul(self.b, s, l),
            c: mod_mul(self.c, s, l),
            d: mod_mul(self.d, s, l),
            ell: l,
        }
    }

    /// Order of the image in PGL2(F_l).
    pub fn projective_order(&self) -> u64 {
        let mut p = *self;
        let mut k = 1;
        while !p.is_scalar() {
            p = p.mul(self);
            k += 1;
        }
        k
    }
}

/// Element `x + y s` of F_l[s]/(s^2 - eps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Fq2 {
    x: u64,
    y: u64,
}

#[derive(Debug, Clone, Copy)]
struct Quad {
    ell: u64,
    eps: u64,
}

impl Quad {
    fn new(ell: u64) -> Self {
        Self { ell, eps: arith::least_nonresidue(ell) }
    }
    fn base(&self, x: u64) -> Fq2 {
        Fq2 { x: x % self.ell, y: 0 }
    }
    fn add(&self, u: Fq2, v: Fq2) -> Fq2 {
        Fq2 { x: (u.x + v.x) % self.ell, y: (u.y + v.y) % self.ell }
    }
    fn sub(&self, u: Fq2, v: Fq2) -> Fq2 {
        let l = self.ell;
        Fq2 { x: (u.x + l - v.x) % l, y: (u.y + l - v.y) % l }
    }
    fn mul(&self, u: Fq2, v: Fq2) -> Fq2 {
        let l = self.ell;
        let m = |a, b| mod_mul(a, b, l);
        Fq2 {
            x: (m(u.x, v.x) + m(self.eps, m(u.y, v.y))) % l,
            y: (m(u.x, v.y) + m(u.y, v.x)) % l,
        }
    }
    fn is_zero(&self, u: Fq2) -> bool {
        u.x == 0 && u.y == 0
    }
    fn inv(&self, u: Fq2) -> Fq2 {
        let l = self.ell;
        let n = (mod_mul(u.x, u.x, l) + l - mod_mul(self.eps, mod_mul(u.y, u.y, l), l)) % l;
        let ni = mod_inv(n, l).expect("nonzero element of a field");
        Fq2 { x: mod_mul(u.x, ni, l), y: mod_mul((l - u.y) % l, ni, l) }
    }
    /// A square root in F_{l^2} of an element of F_l.
    fn sqrt_base(&self, v: u64) -> Fq2 {
        let l = self.ell;
        let v = v % l;
        if v == 0 {
            return self.base(0);
        }
        if arith::legendre(v, l) == 1 {
            Fq2 { x: sqrt_mod(v, l), y: 0 }
        } else {
            let w = mod_mul(v, mod_inv(self.eps, l).expect("eps is nonzero"), l);
            Fq2 { x: 0, y: sqrt_mod(w, l) }
        }
    }
}

/// Square root of a quadratic residue modulo an odd prime (Tonelli-Shanks).
pub fn sqrt_mod(n: u64, p: u64) -> u64 {
    let n = n % p;
    if n == 0 {
        return 0;
    }
    debug_assert_eq!(arith::legendre(n, p), 1);
    let (mut q, mut s) = (p - 1, 0);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = arith::least_nonresidue(p);
    let mut m = s;
    let mut c = mod_pow(z, q, p);
    let mut t = mod_pow(n, q, p);
    let mut r = mod_pow(n, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mod_mul(tt, tt, p);
            i += 1;
        }
        let b = mod_pow(c, 1 << (m - i - 1), p);
        m = i;
        c = mod_mul(b, b, p);
        t = mod_mul(t, c, p);
        r = mod_mul(r, b, p);
    }
    r
}

/// A point of P^1(F_{l^2}) in normalized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Line {
    u: Fq2,
    v: Fq2,
}

impl Line {
    fn normalized(q: &Quad, u: Fq2, v: Fq2) -> Self {
        if !q.is_zero(v) {
            Line { u: q.mul(u, q.inv(v)), v: q.base(1) }
        } else {
            Line { u: q.base(1), v: q.base(0) }
        }
    }

    fn image(&self, q: &Quad, m: &Mat2) -> Line {
        let (a, b, c, d) = (q.base(m.a), q.base(m.b), q.base(m.c), q.base(m.d));
        let u = q.add(q.mul(a, self.u), q.mul(b, self.v));
        let v = q.add(q.mul(c, self.u), q.mul(d, self.v));
        Line::normalized(q, u, v)
    }

    fn describe(&self) -> String {
        let f = |z: Fq2| if z.y == 0 { format!("{}", z.x) } else { format!("{}+{}s", z.x, z.y) };
        format!("({} : {})", f(self.u), f(self.v))
    }
}

/// Eigenlines over F_{l^2} of a non-scalar matrix (one or two).
fn eigenlines(q: &Quad, m: &Mat2) -> Vec<Line> {
    debug_assert!(!m.is_scalar());
    let l = q.ell;
    let t = m.trace();
    let disc = (mod_mul(t, t, l) + l - mod_mul(4 % l, m.det(), l)) % l;
    let root = q.sqrt_base(disc);
    let half = mod_inv(2, l).expect("odd modulus");
    let lambda1 = q.mul(q.add(q.base(t), root), q.base(half));
    let lambda2 = q.mul(q.sub(q.base(t), root), q.base(half));
    let mut out = Vec::new();
    for lam in [lambda1, lambda2] {
        let (u, v) = {
            let cand = (q.base(m.b), q.sub(lam, q.base(m.a)));
            if !q.is_zero(cand.0) || !q.is_zero(cand.1) {
                cand
            } else {
                (q.sub(lam, q.base(m.d)), q.base(m.c))
            }
        };
        let line = Line::normalized(q, u, v);
        if !out.contains(&line) {
            out.push(line);
        }
    }
    out
}

/// Subgroup generated by `generators` (the identity if the list is empty).
pub fn closure(generators: &[Mat2], ell: u64) -> Result<Vec<Mat2>, Gl2Error> {
    closure_with_cap(generators, ell, CLOSURE_CAP)
}

pub fn closure_with_cap(generators: &[Mat2], ell: u64, cap: usize) -> Result<Vec<Mat2>, Gl2Error> {
    let id = Mat2::identity(ell);
    let mut seen: HashSet<Mat2> = HashSet::from([id]);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = x.mul(g);
            if seen.insert(y) {
                if seen.len() > cap {
                    return Err(Gl2Error::SizeCapExceeded(cap));
                }
                queue.push_back(y);
            }
        }
    }
    let mut out: Vec<Mat2> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

/// Greedy generating set of the group generated by `elements`.
fn greedy_generators(elements: &[Mat2], ell: u64) -> Result<(Vec<Mat2>, Vec<Mat2>), Gl2Error> {
    let mut gens = Vec::new();
    let mut group: HashSet<Mat2> = HashSet::from([Mat2::identity(ell)]);
    for m in elements {
        if !group.contains(m) {
            gens.push(*m);
            group = closure(&gens, ell)?.into_iter().collect();
        }
    }
    let mut g: Vec<Mat2> = group.into_iter().collect();
    g.sort();
    Ok((gens, g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrregularPattern {
    A4,
    S4,
    A5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "tag", content = "pattern", rename_all = "kebab-case")]
pub enum SubgroupTag {
    Reducible,
    NormalizerNotCartan,
    #[serde(rename = "contains-sl2")]
    ContainsSL2,
    Irregular(IrregularPattern),
    CartanOnly,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgroupClass {
    pub tag: SubgroupTag,
    pub order: usize,
    pub projective_order: usize,
    pub evidence: String,
}

fn projective_stats(elements: &[Mat2]) -> BTreeMap<u64, usize> {
    let mut stats = BTreeMap::new();
    for m in elements {
        *stats.entry(m.projective_order()).or_insert(0) += 1;
    }
    stats
}

/// Classify a closed subset of GL2(F_l), l odd.
pub fn classify_subgroup(elements: &[Mat2], ell: u64) -> Result<SubgroupClass, Gl2Error> {
    if ell == 2 || !arith::is_prime(ell) {
        return Err(Gl2Error::InvalidModulus(ell));
    }
    if elements.is_empty() {
        return Err(Gl2Error::Empty);
    }
    if elements.iter().any(|m| m.det() == 0 || m.ell != ell) {
        return Err(Gl2Error::NotClosed);
    }
    let distinct: HashSet<Mat2> = elements.iter().copied().collect();
    let (gens, group) = greedy_generators(elements, ell)?;
    if group.len() != distinct.len() {
        return Err(Gl2Error::NotClosed);
    }
    let order = group.len();
    let scalars = group.iter().filter(|m| m.is_scalar()).count();
    let projective_order = order / scalars;
    let class = |tag, evidence: String| Ok(SubgroupClass { tag, order, projective_order, evidence });

    let q = Quad::new(ell);
    let Some(pivot) = gens.iter().find(|g| !g.is_scalar()) else {
        return class(SubgroupTag::Reducible, "all elements are scalar; every line is fixed".into());
    };
    for line in eigenlines(&q, pivot) {
        if gens.iter().all(|g| line.image(&q, g) == line) {
            return class(SubgroupTag::Reducible, format!("common eigenline {} over F_l^2", line.describe()));
        }
    }

    let mut tried: HashSet<(Line, Line)> = HashSet::new();
    for m in &group {
        if m.is_scalar() {
            continue;
        }
        let lines = eigenlines(&q, m);
        if lines.len() != 2 || !tried.insert((lines[0], lines[1])) {
            continue;
        }
        let (l1, l2) = (lines[0], lines[1]);
        let mut swaps = false;
        let preserved = gens.iter().all(|g| {
            let (i1, i2) = (l1.image(&q, g), l2.image(&q, g));
            if i1 == l1 && i2 == l2 {
                true
            } else if i1 == l2 && i2 == l1 {
                swaps = true;
                true
            } else {
                false
            }
        });
        if preserved {
            let pair = format!("{{{}, {}}}", l1.describe(), l2.describe());
            return if swaps {
                class(SubgroupTag::NormalizerNotCartan, format!("line pair {pair} preserved, some element swaps it"))
            } else {
                class(SubgroupTag::CartanOnly, format!("line pair {pair} fixed pointwise"))
            };
        }
    }

    let upper = Mat2::new(1, 1, 0, 1, ell);
    let lower = Mat2::new(1, 0, 1, 1, ell);
    if distinct.contains(&upper) && distinct.contains(&lower) {
        return class(SubgroupTag::ContainsSL2, "contains [[1,1],[0,1]] and [[1,0],[1,1]]".into());
    }

    let stats = projective_stats(&group);
    let orders: Vec<u64> = stats.keys().copied().collect();
    let pattern = match (projective_order, orders.as_slice()) {
        (12, [1, 2, 3]) => Some(IrregularPattern::A4),
        (24, [1, 2, 3, 4]) => Some(IrregularPattern::S4),
        (60, [1, 2, 3, 5]) => Some(IrregularPattern::A5),
        _ => None,
    };
    match pattern {
        Some(p) => class(
            SubgroupTag::Irregular(p),
            format!("projective image of order {projective_order} with element orders {orders:?}"),
        ),
        None => class(
            SubgroupTag::Other,
            format!("projective image of order {projective_order} with element orders {orders:?}"),
        ),
    }
}

/// Largest order of an element's image in PGL2(F_l); the set must be closed.
pub fn max_projective_order(elements: &[Mat2], ell: u64) -> Result<u64, Gl2Error> {
    if elements.is_empty() {
        return Err(Gl2Error::Empty);
    }
    let distinct: HashSet<Mat2> = elements.iter().copied().collect();
    let (_, group) = greedy_generators(elements, ell)?;
    if group.len() != distinct.len() {
        return Err(Gl2Error::NotClosed);
    }
    Ok(group.iter().map(Mat2::projective_order).max().unwrap_or(1))
}

/// Projective order class of a matrix read off from its trace and determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjClass {
    /// Scalar or unipotent times scalar (order 1 or l).
    OneOrEll,
    Two,
    Three,
    Four,
    Five,
    /// Order greater than 5 and not l.
    Big,
}

impl ProjClass {
    pub fn is_small(self) -> bool {
        self != ProjClass::Big
    }
}

pub fn projective_order_of_trace(t: u64, q: u64, ell: u64) -> Result<ProjClass, Gl2Error> {
    let (t, q) = (t % ell, q % ell);
    let qi = mod_inv(q, ell).ok_or(Gl2Error::ZeroDet)?;
    let u = mod_mul(mod_mul(t, t, ell), qi, ell);
    let quintic = (mod_mul(u, u, ell) + 1 + 3 * (ell - u)) % ell;
    Ok(if u == 4 % ell {
        ProjClass::OneOrEll
    } else if u == 0 {
        ProjClass::Two
    } else if u == 1 {
        ProjClass::Three
    } else if u == 2 % ell {
        ProjClass::Four
    } else if quintic == 0 {
        ProjClass::Five
    } else {
        ProjClass::Big
    })
}

/// True iff `p` is at least the acceptability threshold and unramified.
pub fn is_acceptable(p: u64, ramified: &std::collections::BTreeSet<u64>) -> bool {
    p >= ACCEPTABLE_THRESHOLD && !ramified.contains(&p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartanKind {
    Split,
    Nonsplit { eps: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupSpec {
    pub generators: Vec<Mat2>,
    pub order: u64,
}

fn check_cartan(ell: u64, kind: CartanKind) -> Result<(), Gl2Error> {
    if ell == 2 || !arith::is_prime(ell) {
        return Err(Gl2Error::InvalidModulus(ell));
    }
    if let CartanKind::Nonsplit { eps } = kind {
        if arith::legendre(eps, ell) != -1 {
            return Err(Gl2Error::InvalidEps { ell, eps });
        }
    }
    Ok(())
}

/// Generator of the nonsplit Cartan: `x + y sqrt(eps)` of order `l^2 - 1`.
fn nonsplit_generator(ell: u64, eps: u64) -> Mat2 {
    let target = ell * ell - 1;
    let primes: Vec<u64> = num_prime::nt_funcs::factorize64(target).into_keys().collect();
    for x in 0..ell {
        for y in 1..ell {
            let m = Mat2 { a: x, b: mod_mul(eps, y, ell), c: y, d: x, ell };
            if primes.iter().all(|&r| !matrix_pow(&m, target / r).eq(&Mat2::identity(ell))) {
                return m;
            }
        }
    }
    unreachable!("F_l^2 has a primitive element")
}

fn matrix_pow(m: &Mat2, mut e: u64) -> Mat2 {
    let mut acc = Mat2::identity(m.ell);
    let mut base = *m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base);
        }
        base = base.mul(&base);
        e >>= 1;
    }
    acc
}

pub fn cartan(ell: u64, kind: CartanKind) -> Result<SubgroupSpec, Gl2Error> {
    check_cartan(ell, kind)?;
    Ok(match kind {
        CartanKind::Split => {
            let g = arith::primitive_root(ell);
            SubgroupSpec { generators: vec![Mat2::diag(g, 1, ell), Mat2::diag(1, g, ell)], order: (ell - 1) * (ell - 1) }
        }
        CartanKind::Nonsplit { eps } => {
            SubgroupSpec { generators: vec![nonsplit_generator(ell, eps)], order: ell * ell - 1 }
        }
    })
}

/// Normalizer of a Cartan: adjoin the swap of the coordinate axes (split)
/// or the Galois conjugation `diag(1, -1)` (nonsplit).
pub fn cartan_normalizer(ell: u64, kind: CartanKind) -> Result<SubgroupSpec, Gl2Error> {
    let mut c = cartan(ell, kind)?;
    let extra = match kind {
        CartanKind::Split => Mat2::new(0, 1, 1, 0, ell),
        CartanKind::Nonsplit { .. } => Mat2::new(1, 0, 0, -1, ell),
    };
    c.generators.push(extra);
    c.order *= 2;
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Borel,
    SplitCartan,
    NonsplitCartan,
    SplitNormalizer,
    NonsplitNormalizer,
    Sl2,
    SquareDet,
    Gl2,
    TetrahedralLift,
    OctahedralLift,
    IcosahedralLift,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Borel,
        Family::SplitCartan,
        Family::NonsplitCartan,
        Family::SplitNormalizer,
        Family::NonsplitNormalizer,
        Family::Sl2,
        Family::SquareDet,
        Family::Gl2,
        Family::TetrahedralLift,
        Family::OctahedralLift,
        Family::IcosahedralLift,
    ];

    /// Families given by membership conditions, usable for any odd l.
    pub const PARAMETRIC: [Family; 8] = [
        Family::Borel,
        Family::SplitCartan,
        Family::NonsplitCartan,
        Family::SplitNormalizer,
        Family::NonsplitNormalizer,
        Family::Sl2,
        Family::SquareDet,
        Family::Gl2,
    ];

    pub fn expected_tag(self) -> SubgroupTag {
        match self {
            Family::Borel | Family::SplitCartan | Family::NonsplitCartan => SubgroupTag::Reducible,
            Family::SplitNormalizer | Family::NonsplitNormalizer => SubgroupTag::NormalizerNotCartan,
            Family::Sl2 | Family::SquareDet | Family::Gl2 => SubgroupTag::ContainsSL2,
            Family::TetrahedralLift => SubgroupTag::Irregular(IrregularPattern::A4),
            Family::OctahedralLift => SubgroupTag::Irregular(IrregularPattern::S4),
            Family::IcosahedralLift => SubgroupTag::Irregular(IrregularPattern::A5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Borel => "borel",
            Family::SplitCartan => "split-cartan",
            Family::NonsplitCartan => "nonsplit-cartan",
            Family::SplitNormalizer => "split-normalizer",
            Family::NonsplitNormalizer => "nonsplit-normalizer",
            Family::Sl2 => "sl2",
            Family::SquareDet => "square-det",
            Family::Gl2 => "gl2",
            Family::TetrahedralLift => "tetrahedral-lift",
            Family::OctahedralLift => "octahedral-lift",
            Family::IcosahedralLift => "icosahedral-lift",
        }
    }
}

/// A concrete subgroup of GL2(F_l) from one of the standard families.
#[derive(Debug, Clone)]
pub struct FamilyGroup {
    pub family: Family,
    pub ell: u64,
    pub eps: u64,
    pub generators: Vec<Mat2>,
    pub order: u64,
    elements: Option<Vec<Mat2>>,
}

fn quaternion_units(ell: u64) -> (Mat2, Mat2, Mat2) {
    let minus_one = ell - 1;
    let (a0, b0) = (0..ell)
        .flat_map(|a| (0..ell).map(move |b| (a, b)))
        .find(|&(a, b)| (mod_mul(a, a, ell) + mod_mul(b, b, ell)) % ell == minus_one)
        .expect("-1 is a sum of two squares mod an odd prime");
    let i = Mat2::new(0, 1, -1, 0, ell);
    let j = Mat2 { a: a0, b: b0, c: b0, d: (ell - a0) % ell, ell };
    let k = i.mul(&j);
    (i, j, k)
}

fn lin(coeffs: [(u64, &Mat2); 4], ell: u64) -> Mat2 {
    let mut out = Mat2 { a: 0, b: 0, c: 0, d: 0, ell };
    for (s, m) in coeffs {
        let t = m.scale(s);
        out = Mat2 { a: (out.a + t.a) % ell, b: (out.b + t.b) % ell, c: (out.c + t.c) % ell, d: (out.d + t.d) % ell, ell };
    }
    out
}

fn lift_generators(family: Family, ell: u64) -> Option<Vec<Mat2>> {
    let (i, j, k) = quaternion_units(ell);
    let one = Mat2::identity(ell);
    let half = mod_inv(2, ell)?;
    let neg_half = ell - half;
    let omega = lin([(neg_half, &one), (neg_half, &i), (neg_half, &j), (neg_half, &k)], ell);
    let g = Mat2::scalar(arith::primitive_root(ell), ell);
    let mut gens = vec![i, j, omega, g];
    match family {
        Family::TetrahedralLift => {}
        Family::OctahedralLift => gens.push(lin([(1, &one), (1, &i), (0, &j), (0, &k)], ell)),
        Family::IcosahedralLift => {
            if ell == 5 || arith::legendre(5, ell) != 1 {
                return None;
            }
            let r5 = sqrt_mod(5, ell);
            let phi = mod_mul((1 + r5) % ell, half, ell);
            let phi_inv = mod_inv(phi, ell)?;
            let q = lin([(mod_mul(phi, half, ell), &one), (mod_mul(phi_inv, half, ell), &i), (half, &j), (0, &k)], ell);
            gens.push(q);
        }
        _ => return None,
    }
    Some(gens)
}

impl FamilyGroup {
    /// The family's subgroup mod `l`; `None` when the family does not embed
    /// as a proper irregular subgroup (for example the icosahedral lift
    /// without a square root of 5).
    pub fn new(family: Family, ell: u64) -> Result<Option<Self>, Gl2Error> {
        if ell == 2 || !arith::is_prime(ell) {
            return Err(Gl2Error::InvalidModulus(ell));
        }
        let eps = arith::least_nonresidue(ell);
        let g = arith::primitive_root(ell);
        let upper = Mat2::new(1, 1, 0, 1, ell);
        let lower = Mat2::new(1, 0, 1, 1, ell);
        let l = ell;
        let (generators, order) = match family {
            Family::Borel => (vec![Mat2::diag(g, 1, l), Mat2::diag(1, g, l), upper], (l - 1) * (l - 1) * l),
            Family::SplitCartan => {
                let s = cartan(l, CartanKind::Split)?;
                (s.generators, s.order)
            }
            Family::NonsplitCartan => {
                let s = cartan(l, CartanKind::Nonsplit { eps })?;
                (s.generators, s.order)
            }
            Family::SplitNormalizer => {
                let s = cartan_normalizer(l, CartanKind::Split)?;
                (s.generators, s.order)
            }
            Family::NonsplitNormalizer => {
                let s = cartan_normalizer(l, CartanKind::Nonsplit { eps })?;
                (s.generators, s.order)
            }
            Family::Sl2 => (vec![upper, lower], l * (l * l - 1)),
            Family::SquareDet => (vec![upper, lower, Mat2::scalar(g, l)], l * (l * l - 1) * (l - 1) / 2),
            Family::Gl2 => (vec![upper, lower, Mat2::diag(g, 1, l)], (l * l - 1) * (l * l - l)),
            Family::TetrahedralLift | Family::OctahedralLift | Family::IcosahedralLift => {
                let Some(gens) = lift_generators(family, l) else { return Ok(None) };
                let elements = closure(&gens, l)?;
                let scalars = elements.iter().filter(|m| m.is_scalar()).count();
                let expected = match family {
                    Family::TetrahedralLift => 12,
                    Family::OctahedralLift => 24,
                    _ => 60,
                };
                if elements.len() / scalars != expected {
                    return Ok(None);
                }
                let order = elements.len() as u64;
                return Ok(Some(Self { family, ell, eps, generators: gens, order, elements: Some(elements) }));
            }
        };
        Ok(Some(Self { family, ell, eps, generators, order, elements: None }))
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        let l = self.ell;
        if m.ell != l || m.det() == 0 {
            return false;
        }
        let neg = |x: u64| (l - x) % l;
        let eps_c = mod_mul(self.eps, m.c, l);
        match self.family {
            Family::Borel => m.c == 0,
            Family::SplitCartan => m.b == 0 && m.c == 0,
            Family::NonsplitCartan => m.a == m.d && m.b == eps_c,
            Family::SplitNormalizer => (m.b == 0 && m.c == 0) || (m.a == 0 && m.d == 0),
            Family::NonsplitNormalizer => (m.a == m.d && m.b == eps_c) || (m.a == neg(m.d) && m.b == neg(eps_c)),
            Family::Sl2 => m.det() == 1,
            Family::SquareDet => arith::legendre(m.det(), l) == 1,
            Family::Gl2 => true,
            _ => self.elements.as_ref().is_some_and(|e| e.binary_search(m).is_ok()),
        }
    }

    /// Every element, by closure of the generators (small l only).
    pub fn elements(&self) -> Result<Vec<Mat2>, Gl2Error> {
        match &self.elements {
            Some(e) => Ok(e.clone()),
            None => closure(&self.generators, self.ell),
        }
    }

    fn random_unit<R: Rng>(&self, rng: &mut R) -> u64 {
        rng.gen_range(1..self.ell)
    }

    fn random_gl2<R: Rng>(&self, rng: &mut R) -> Mat2 {
        let l = self.ell;
        loop {
            let m = Mat2 { a: rng.gen_range(0..l), b: rng.gen_range(0..l), c: rng.gen_range(0..l), d: rng.gen_range(0..l), ell: l };
            if m.det() != 0 {
                return m;
            }
        }
    }

    fn random_sl2<R: Rng>(&self, rng: &mut R) -> Mat2 {
        let m = self.random_gl2(rng);
        let inv = mod_inv(m.det(), self.ell).expect("invertible");
        Mat2 { a: mod_mul(m.a, inv, self.ell), b: mod_mul(m.b, inv, self.ell), ..m }
    }

    /// A uniformly random element.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Mat2 {
        let l = self.ell;
        let nonsplit = |rng: &mut R| loop {
            let (x, y) = (rng.gen_range(0..l), rng.gen_range(0..l));
            if x != 0 || y != 0 {
                return Mat2 { a: x, b: mod_mul(self.eps, y, l), c: y, d: x, ell: l };
            }
        };
        match self.family {
            Family::Borel => Mat2 { a: self.random_unit(rng), b: rng.gen_range(0..l), c: 0, d: self.random_unit(rng), ell: l },
            Family::SplitCartan => Mat2::diag(self.random_unit(rng), self.random_unit(rng), l),
            Family::NonsplitCartan => nonsplit(rng),
            Family::SplitNormalizer => {
                let c = Mat2::diag(self.random_unit(rng), self.random_unit(rng), l);
                if rng.gen_bool(0.5) { c } else { c.mul(&Mat2::new(0, 1, 1, 0, l)) }
            }
            Family::NonsplitNormalizer => {
                let c = nonsplit(rng);
                if rng.gen_bool(0.5) { c } else { c.mul(&Mat2::new(1, 0, 0, -1, l)) }
            }
            Family::Sl2 => self.random_sl2(rng),
            Family::SquareDet => {
                let s = self.random_unit(rng);
                self.random_sl2(rng).mul(&Mat2::diag(mod_mul(s, s, l), 1, l))
            }
            Family::Gl2 => self.random_gl2(rng),
            _ => {
                let e = self.elements.as_ref().expect("lift families store their elements");
                e[rng.gen_range(0..e.len())]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn acceptability() {
        let none = Default::default();
        assert!(is_acceptable(53, &none));
        assert!(!is_acceptable(47, &none));
        assert!(!is_acceptable(53, &[53].into_iter().collect()));
    }

    #[test]
    fn cartan_orders() {
        assert_eq!(closure(&cartan(5, CartanKind::Split).unwrap().generators, 5).unwrap().len(), 16);
        assert_eq!(closure(&cartan(5, CartanKind::Nonsplit { eps: 2 }).unwrap().generators, 5).unwrap().len(), 24);
        let n = cartan_normalizer(5, CartanKind::Split).unwrap();
        assert_eq!(n.order, 32);
        assert_eq!(closure(&n.generators, 5).unwrap().len(), 32);
        assert_eq!(cartan(5, CartanKind::Nonsplit { eps: 4 }), Err(Gl2Error::InvalidEps { ell: 5, eps: 4 }));
    }

    #[test]
    fn closure_examples() {
        assert_eq!(closure(&[Mat2::identity(5)], 5).unwrap(), vec![Mat2::identity(5)]);
        let sl2 = closure(&[Mat2::new(1, 1, 0, 1, 5), Mat2::new(1, 0, 1, 1, 5)], 5).unwrap();
        assert_eq!(sl2.len(), 120);
        assert_eq!(closure(&[Mat2::diag(2, 1, 5)], 5).unwrap().len(), 4);
        let gl2_13 = FamilyGroup::new(Family::Gl2, 13).unwrap().unwrap();
        assert_eq!(gl2_13.elements().unwrap().len(), 26208);
        assert_eq!(closure_with_cap(&gl2_13.generators, 13, 1000), Err(Gl2Error::SizeCapExceeded(1000)));
    }

    #[test]
    fn classify_examples() {
        let sl2 = closure(&[Mat2::new(1, 1, 0, 1, 5), Mat2::new(1, 0, 1, 1, 5)], 5).unwrap();
        assert_eq!(classify_subgroup(&sl2, 5).unwrap().tag, SubgroupTag::ContainsSL2);
        let n = closure(&cartan_normalizer(7, CartanKind::Split).unwrap().generators, 7).unwrap();
        assert_eq!(classify_subgroup(&n, 7).unwrap().tag, SubgroupTag::NormalizerNotCartan);
        let upper: Vec<Mat2> = (1..5)
            .flat_map(|a| (0..5).flat_map(move |b| (1..5).map(move |d| Mat2::new(a, b, 0, d, 5))))
            .collect();
        assert_eq!(classify_subgroup(&upper, 5).unwrap().tag, SubgroupTag::Reducible);
        let not_closed = vec![Mat2::identity(5), Mat2::diag(2, 1, 5)];
        assert_eq!(classify_subgroup(&not_closed, 5), Err(Gl2Error::NotClosed));
        assert_eq!(classify_subgroup(&[Mat2::scalar(2, 5), Mat2::identity(5), Mat2::scalar(3, 5), Mat2::scalar(4, 5)], 5).unwrap().tag, SubgroupTag::Reducible);
    }

    #[test]
    fn max_projective_orders() {
        let scalars: Vec<Mat2> = (1..7).map(|s| Mat2::scalar(s, 7)).collect();
        assert_eq!(max_projective_order(&scalars, 7).unwrap(), 1);
        let split = closure(&cartan(53, CartanKind::Split).unwrap().generators, 53).unwrap();
        assert_eq!(max_projective_order(&split, 53).unwrap(), 52);
        let sl2 = closure(&[Mat2::new(1, 1, 0, 1, 5), Mat2::new(1, 0, 1, 1, 5)], 5).unwrap();
        assert_eq!(max_projective_order(&sl2, 5).unwrap(), 5);
    }

    #[test]
    fn trace_fingerprint_examples() {
        assert_eq!(projective_order_of_trace(0, 3, 7).unwrap(), ProjClass::Two);
        assert_eq!(projective_order_of_trace(2, 1, 7).unwrap(), ProjClass::OneOrEll);
        assert_eq!(projective_order_of_trace(3, 1, 53).unwrap(), ProjClass::Big);
        assert_eq!(projective_order_of_trace(3, 0, 53), Err(Gl2Error::ZeroDet));
        // a matrix with characteristic polynomial x^2 - 3x + 1 mod 53
        let m = Mat2::new(0, -1, 1, 3, 53);
        assert!(m.projective_order() > 5);
    }

    fn class_of(m: &Mat2) -> ProjClass {
        match m.projective_order() {
            1 => ProjClass::OneOrEll,
            o if o == m.ell => ProjClass::OneOrEll,
            2 => ProjClass::Two,
            3 => ProjClass::Three,
            4 => ProjClass::Four,
            5 => ProjClass::Five,
            _ => ProjClass::Big,
        }
    }

    #[test]
    fn trace_fingerprint_exhaustive_mod_7_and_11() {
        for ell in [7u64, 11] {
            for m in FamilyGroup::new(Family::Gl2, ell).unwrap().unwrap().elements().unwrap() {
                assert_eq!(projective_order_of_trace(m.trace(), m.det(), ell).unwrap(), class_of(&m), "{m:?}");
            }
        }
    }

    #[test]
    fn sqrt_mod_works() {
        for p in [3u64, 5, 7, 13, 17, 41, 53, 61, 97] {
            for n in 1..p {
                if arith::legendre(n, p) == 1 {
                    let r = sqrt_mod(n, p);
                    assert_eq!(mod_mul(r, r, p), n);
                }
            }
        }
    }

    #[test]
    fn families_round_trip_small_ell() {
        for ell in [5u64, 7, 11, 13] {
            for fam in Family::ALL {
                let Some(g) = FamilyGroup::new(fam, ell).unwrap() else { continue };
                let elements = g.elements().unwrap();
                assert_eq!(elements.len() as u64, g.order, "{fam:?} mod {ell}");
                assert!(elements.iter().all(|m| g.contains(m)), "{fam:?} mod {ell}");
                let c = classify_subgroup(&elements, ell).unwrap();
                assert_eq!(c.tag, fam.expected_tag(), "{fam:?} mod {ell}: {}", c.evidence);
            }
        }
    }

    #[test]
    fn lifts_embed_where_expected() {
        assert!(FamilyGroup::new(Family::IcosahedralLift, 11).unwrap().is_some());
        assert!(FamilyGroup::new(Family::IcosahedralLift, 7).unwrap().is_none());
        assert!(FamilyGroup::new(Family::IcosahedralLift, 5).unwrap().is_none());
        assert!(FamilyGroup::new(Family::IcosahedralLift, 61).unwrap().is_some());
        for ell in [5u64, 7, 11, 13] {
            assert!(FamilyGroup::new(Family::TetrahedralLift, ell).unwrap().is_some());
            assert!(FamilyGroup::new(Family::OctahedralLift, ell).unwrap().is_some());
        }
    }

    #[test]
    fn conjugation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for fam in Family::ALL {
            let Some(g) = FamilyGroup::new(fam, 7).unwrap() else { continue };
            let base = classify_subgroup(&g.elements().unwrap(), 7).unwrap();
            for _ in 0..3 {
                let h = FamilyGroup::new(Family::Gl2, 7).unwrap().unwrap().sample(&mut rng);
                let hi = h.inverse().unwrap();
                let gens: Vec<Mat2> = g.generators.iter().map(|x| h.mul(x).mul(&hi)).collect();
                let conj = closure(&gens, 7).unwrap();
                assert_eq!(classify_subgroup(&conj, 7).unwrap().tag, base.tag, "{fam:?}");
            }
        }
    }

    #[test]
    fn sl2_with_surjective_det_is_gl2() {
        for ell in [5u64, 7] {
            let g = FamilyGroup::new(Family::Gl2, ell).unwrap().unwrap();
            let e = g.elements().unwrap();
            assert_eq!(classify_subgroup(&e, ell).unwrap().tag, SubgroupTag::ContainsSL2);
            assert_eq!(e.len() as u64, (ell * ell - 1) * (ell * ell - ell));
        }
    }

    #[test]
    fn samplers_stay_in_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for ell in [53u64, 61] {
            for fam in Family::ALL {
                let Some(g) = FamilyGroup::new(fam, ell).unwrap() else { continue };
                for _ in 0..200 {
                    let m = g.sample(&mut rng);
                    assert!(g.contains(&m), "{fam:?} mod {ell}: {m:?}");
                }
            }
        }
    }
}
