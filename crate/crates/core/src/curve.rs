//! Integral Weierstrass models over Q, their standard invariants and the
//! per-prime reduction data (conductor norm `N_E`, additive count `a_E`).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("singular model: discriminant is zero")]
    SingularCurve,
    #[error("reduction type at p = {0} needs a user override (Tate's algorithm is not run at 2 and 3)")]
    MissingOverride(u64),
    #[error("invalid override at p = {p}: {reason}")]
    InvalidOverride { p: u64, reason: String },
    #[error("change of variables does not give an integral model")]
    NonIntegralTransform,
    #[error("minimal_model_at needs p >= 5, got {0}")]
    SmallPrime(u64),
    #[error("curve input: {0}")]
    Parse(String),
}

/// An integral Weierstrass model
/// `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6` with its invariants.
#[derive(Clone, PartialEq, Eq)]
pub struct CurveQ {
    ainvs: [BigInt; 5],
    b2: BigInt,
    b4: BigInt,
    b6: BigInt,
    b8: BigInt,
    c4: BigInt,
    c6: BigInt,
    disc: BigInt,
    j_num: BigInt,
    j_den: BigInt,
}

impl fmt::Debug for CurveQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CurveQ[{}]", self.id())
    }
}

impl CurveQ {
    pub fn new(ainvs: [BigInt; 5]) -> Result<Self, CurveError> {
        let [a1, a2, a3, a4, a6] = &ainvs;
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        let c4 = &b2 * &b2 - 24 * &b4;
        let b2_cubed: BigInt = &b2 * &b2 * &b2;
        let c6 = -b2_cubed + 36 * &b2 * &b4 - 216 * &b6;
        let b2b2b8: BigInt = &b2 * &b2 * &b8;
        let disc: BigInt = -b2b2b8 - 8 * &b4 * &b4 * &b4 - 27 * &b6 * &b6 + 9 * &b2 * &b4 * &b6;
        if disc.is_zero() {
            return Err(CurveError::SingularCurve);
        }
        let c4_cubed: BigInt = &c4 * &c4 * &c4;
        debug_assert_eq!(BigInt::from(1728) * &disc, &c4_cubed - &c6 * &c6);
        if BigInt::from(1728) * &disc != &c4_cubed - &c6 * &c6 {
            return Err(CurveError::SingularCurve);
        }
        let g = c4_cubed.gcd(&disc);
        let (mut j_num, mut j_den) = (&c4_cubed / &g, &disc / &g);
        if j_den.is_negative() {
            j_num = -j_num;
            j_den = -j_den;
        }
        Ok(Self { ainvs, b2, b4, b6, b8, c4, c6, disc, j_num, j_den })
    }

    pub fn from_i64(a: [i64; 5]) -> Result<Self, CurveError> {
        Self::new(a.map(BigInt::from))
    }

    pub fn ainvs(&self) -> &[BigInt; 5] {
        &self.ainvs
    }
    pub fn a1(&self) -> &BigInt {
        &self.ainvs[0]
    }
    pub fn a2(&self) -> &BigInt {
        &self.ainvs[1]
    }
    pub fn a3(&self) -> &BigInt {
        &self.ainvs[2]
    }
    pub fn a4(&self) -> &BigInt {
        &self.ainvs[3]
    }
    pub fn a6(&self) -> &BigInt {
        &self.ainvs[4]
    }
    pub fn b2(&self) -> &BigInt {
        &self.b2
    }
    pub fn b4(&self) -> &BigInt {
        &self.b4
    }
    pub fn b6(&self) -> &BigInt {
        &self.b6
    }
    pub fn b8(&self) -> &BigInt {
        &self.b8
    }
    pub fn c4(&self) -> &BigInt {
        &self.c4
    }
    pub fn c6(&self) -> &BigInt {
        &self.c6
    }
    pub fn disc(&self) -> &BigInt {
        &self.disc
    }
    /// `j = j_num / j_den` in lowest terms with `j_den > 0`.
    pub fn j_invariant(&self) -> (&BigInt, &BigInt) {
        (&self.j_num, &self.j_den)
    }

    /// Canonical identifier: the five a-invariants joined by commas.
    pub fn id(&self) -> String {
        self.ainvs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
    }

    /// a-invariants reduced into `[0, p)`.
    pub fn ainvs_mod(&self, p: u64) -> [u64; 5] {
        let m = BigInt::from(p);
        self.ainvs.clone().map(|a| a.mod_floor(&m).to_u64().expect("reduced residue fits"))
    }

    pub fn disc_mod(&self, p: u64) -> u64 {
        self.disc.mod_floor(&BigInt::from(p)).to_u64().expect("reduced residue fits")
    }

    /// Admissible change of variables `x = u^2 x' + r`, `y = u^3 y' + s u^2 x' + t`.
    /// Fails unless the new model is integral.
    pub fn transform(&self, u: &BigInt, r: &BigInt, s: &BigInt, t: &BigInt) -> Result<Self, CurveError> {
        if u.is_zero() {
            return Err(CurveError::NonIntegralTransform);
        }
        let [a1, a2, a3, a4, a6] = &self.ainvs;
        let n1 = a1 + 2 * s;
        let n2 = a2 - s * a1 + 3 * r - s * s;
        let n3 = a3 + r * a1 + 2 * t;
        let n4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t;
        let n6 = a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1;
        let mut out: [BigInt; 5] = Default::default();
        for (slot, (num, weight)) in out.iter_mut().zip([(n1, 1u32), (n2, 2), (n3, 3), (n4, 4), (n6, 6)]) {
            let den = num_traits::pow(u.clone(), weight as usize);
            let (q, rem) = num.div_rem(&den);
            if !rem.is_zero() {
                return Err(CurveError::NonIntegralTransform);
            }
            *slot = q;
        }
        Self::new(out)
    }

    /// Model with a1, a3 in {0, 1} and a2 in {-1, 0, 1}, isomorphic by a
    /// unit change of variables.
    pub fn reduced(&self) -> Self {
        let zero = BigInt::zero();
        let one = BigInt::one();
        let s = -self.a1().div_floor(&BigInt::from(2));
        let step1 = self.transform(&one, &zero, &s, &zero).expect("u = 1 is integral");
        let shifted: BigInt = step1.a2() + 1;
        let r = -shifted.div_floor(&BigInt::from(3));
        let step2 = step1.transform(&one, &r, &zero, &zero).expect("u = 1 is integral");
        let t = -step2.a3().div_floor(&BigInt::from(2));
        step2.transform(&one, &zero, &zero, &t).expect("u = 1 is integral")
    }

    /// Quadratic twist by `d` as the short model
    /// `y^2 = x^3 - 27 c4 d^2 x - 54 c6 d^3`.
    pub fn quadratic_twist(&self, d: i64) -> Result<Self, CurveError> {
        let d = BigInt::from(d);
        let a4 = -BigInt::from(27) * &self.c4 * &d * &d;
        let a6 = -BigInt::from(54) * &self.c6 * &d * &d * &d;
        Self::new([BigInt::zero(), BigInt::zero(), BigInt::zero(), a4, a6])
    }
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

fn is_p_minimal(curve: &CurveQ, p: u64) -> bool {
    valuation(curve.disc(), p) < 12 || (!curve.c4().is_zero() && valuation(curve.c4(), p) < 4)
}

/// A p-minimal model for `p >= 5`, related to the input by an admissible
/// change of variables. Models that are already p-minimal are returned as is.
pub fn minimal_model_at(curve: &CurveQ, p: u64) -> Result<CurveQ, CurveError> {
    if p < 5 {
        return Err(CurveError::SmallPrime(p));
    }
    let mut current = curve.clone();
    let mut scaled = false;
    while !is_p_minimal(&current, p) {
        let u = BigInt::from(p);
        let zero = BigInt::zero();
        current = match current.transform(&u, &zero, &zero, &zero) {
            Ok(c) => c,
            Err(_) => complete_and_scale(&current, p)?,
        };
        scaled = true;
    }
    Ok(if scaled { current.reduced() } else { current })
}

// Move a1, a2, a3 to 0 modulo p^6 with integral (r, s, t), then divide by u = p.
fn complete_and_scale(curve: &CurveQ, p: u64) -> Result<CurveQ, CurveError> {
    let modulus = num_traits::pow(BigInt::from(p), 6);
    let inv = |k: u64| -> BigInt {
        // k^{-1} mod p^6 via Fermat lift is awkward; extended gcd is simpler.
        let e = BigInt::from(k).extended_gcd(&modulus);
        e.x.mod_floor(&modulus)
    };
    let zero = BigInt::zero();
    let one = BigInt::one();
    let s = (-(curve.a1()) * inv(2)).mod_floor(&modulus);
    let c1 = curve.transform(&one, &zero, &s, &zero)?;
    let r = (-(c1.a2()) * inv(3)).mod_floor(&modulus);
    let c2 = c1.transform(&one, &r, &zero, &zero)?;
    let t = (-(c2.a3()) * inv(2)).mod_floor(&modulus);
    let c3 = c2.transform(&one, &zero, &zero, &t)?;
    c3.transform(&BigInt::from(p), &zero, &zero, &zero)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionKind {
    Good,
    #[serde(alias = "split")]
    MultiplicativeSplit,
    #[serde(alias = "nonsplit")]
    MultiplicativeNonsplit,
    Additive,
}

impl ReductionKind {
    pub fn is_multiplicative(self) -> bool {
        matches!(self, Self::MultiplicativeSplit | Self::MultiplicativeNonsplit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntrySource {
    Computed,
    UserOverride,
}

/// User-supplied reduction data at one prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionOverride {
    pub kind: ReductionKind,
    pub exp: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionEntry {
    pub p: u64,
    pub kind: ReductionKind,
    pub conductor_exponent: u32,
    pub source: EntrySource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionProfile {
    pub entries: Vec<ReductionEntry>,
    #[serde(serialize_with = "crate::report::bigint_str")]
    pub conductor: BigInt,
    pub additive_count: usize,
}

impl ReductionProfile {
    /// Primes where the reduction is not good.
    pub fn bad_primes(&self) -> Vec<u64> {
        self.entries.iter().filter(|e| e.kind != ReductionKind::Good).map(|e| e.p).collect()
    }

    pub fn additive_primes(&self) -> Vec<u64> {
        self.entries.iter().filter(|e| e.kind == ReductionKind::Additive).map(|e| e.p).collect()
    }

    pub fn kind_at(&self, p: u64) -> ReductionKind {
        self.entries.iter().find(|e| e.p == p).map_or(ReductionKind::Good, |e| e.kind)
    }
}

fn check_override(p: u64, o: &ReductionOverride) -> Result<(), CurveError> {
    let bad = |reason: &str| Err(CurveError::InvalidOverride { p, reason: reason.to_string() });
    match o.kind {
        ReductionKind::Good if o.exp != 0 => bad("good reduction needs exponent 0"),
        k if k.is_multiplicative() && o.exp != 1 => bad("multiplicative reduction needs exponent 1"),
        ReductionKind::Additive => {
            let max = match p {
                2 => 8,
                3 => 5,
                _ => 2,
            };
            if o.exp < 2 || o.exp > max {
                bad(&format!("additive reduction needs exponent in [2, {max}]"))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

/// Odd-prime reduction type from a p-minimal model (p >= 5).
fn classify_at(curve: &CurveQ, p: u64) -> Result<(ReductionKind, u32), CurveError> {
    let m = minimal_model_at(curve, p)?;
    let pm = BigInt::from(p);
    if !m.disc().mod_floor(&pm).is_zero() {
        return Ok((ReductionKind::Good, 0));
    }
    if !m.c4().mod_floor(&pm).is_zero() {
        let minus_c6 = (-m.c6()).mod_floor(&pm).to_u64().expect("residue");
        let kind = if arith::legendre(minus_c6, p) == 1 {
            ReductionKind::MultiplicativeSplit
        } else {
            ReductionKind::MultiplicativeNonsplit
        };
        return Ok((kind, 1));
    }
    Ok((ReductionKind::Additive, 2))
}

/// Primes dividing a nonzero integer.
pub fn prime_divisors(n: &BigInt) -> Vec<u64> {
    let mag: BigUint = n.magnitude().clone();
    if mag.is_one() {
        return Vec::new();
    }
    num_prime::nt_funcs::factorize(mag)
        .into_keys()
        .map(|q| q.to_u64().expect("prime factor of a discriminant fits in u64"))
        .collect()
}

/// Reduction profile over every prime dividing the model discriminant
/// plus every overridden prime. Primes 2 and 3 must be overridden when they
/// divide the discriminant.
pub fn reduction_profile(
    curve: &CurveQ,
    overrides: &BTreeMap<u64, ReductionOverride>,
) -> Result<ReductionProfile, CurveError> {
    let mut primes: Vec<u64> = prime_divisors(curve.disc());
    for (&p, o) in overrides {
        check_override(p, o)?;
        if !arith::is_prime(p) {
            return Err(CurveError::InvalidOverride { p, reason: "not a prime".into() });
        }
        if curve.disc_mod(p) != 0 && o.kind != ReductionKind::Good {
            return Err(CurveError::InvalidOverride {
                p,
                reason: "p does not divide the discriminant, so reduction is good".into(),
            });
        }
        if !primes.contains(&p) {
            primes.push(p);
        }
    }
    primes.sort_unstable();
    let mut entries = Vec::with_capacity(primes.len());
    for p in primes {
        let (kind, exp, source) = if let Some(o) = overrides.get(&p) {
            (o.kind, o.exp, EntrySource::UserOverride)
        } else if p < 5 {
            return Err(CurveError::MissingOverride(p));
        } else {
            let (k, e) = classify_at(curve, p)?;
            (k, e, EntrySource::Computed)
        };
        entries.push(ReductionEntry { p, kind, conductor_exponent: exp, source });
    }
    let conductor = entries
        .iter()
        .fold(BigInt::one(), |acc, e| acc * num_traits::pow(BigInt::from(e.p), e.conductor_exponent as usize));
    let additive_count = entries.iter().filter(|e| e.kind == ReductionKind::Additive).count();
    Ok(ReductionProfile { entries, conductor, additive_count })
}

/// Parsed curve input: a model plus optional overrides and label.
#[derive(Debug, Clone)]
pub struct CurveInput {
    pub curve: CurveQ,
    pub overrides: BTreeMap<u64, ReductionOverride>,
    pub label: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveJson {
    ainvs: Vec<serde_json::Value>,
    #[serde(default)]
    overrides: BTreeMap<String, ReductionOverride>,
    #[serde(default)]
    label: Option<String>,
}

fn parse_integer(v: &serde_json::Value, field: &str) -> Result<BigInt, CurveError> {
    let text = match v {
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::String(s) => s.trim().to_string(),
        _ => return Err(CurveError::Parse(format!("field {field}: expected an integer"))),
    };
    text.parse::<BigInt>()
        .map_err(|_| CurveError::Parse(format!("field {field}: '{text}' is not an integer")))
}

impl CurveInput {
    /// JSON object `{"ainvs": [...], "overrides": {...}, "label": ...}`.
    pub fn from_json(text: &str) -> Result<Self, CurveError> {
        let raw: CurveJson = serde_json::from_str(text).map_err(|e| {
            CurveError::Parse(format!("JSON error at line {} column {}: {e}", e.line(), e.column()))
        })?;
        if raw.ainvs.len() != 5 {
            return Err(CurveError::Parse(format!(
                "field ainvs: expected 5 entries, found {}",
                raw.ainvs.len()
            )));
        }
        let mut ainvs: [BigInt; 5] = Default::default();
        for (i, v) in raw.ainvs.iter().enumerate() {
            ainvs[i] = parse_integer(v, &format!("ainvs[{i}]"))?;
        }
        let mut overrides = BTreeMap::new();
        for (k, o) in raw.overrides {
            let p: u64 = k
                .trim()
                .parse()
                .map_err(|_| CurveError::Parse(format!("field overrides: key '{k}' is not a prime")))?;
            overrides.insert(p, o);
        }
        Ok(Self { curve: CurveQ::new(ainvs)?, overrides, label: raw.label })
    }

    /// CSV shorthand `a1,a2,a3,a4,a6`.
    pub fn from_csv(text: &str) -> Result<Self, CurveError> {
        let fields: Vec<&str> = text.trim().split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(CurveError::Parse(format!("expected 5 comma-separated integers, found {}", fields.len())));
        }
        let mut ainvs: [BigInt; 5] = Default::default();
        for (i, f) in fields.iter().enumerate() {
            ainvs[i] = f
                .parse()
                .map_err(|_| CurveError::Parse(format!("field ainvs[{i}]: '{f}' is not an integer")))?;
        }
        Ok(Self { curve: CurveQ::new(ainvs)?, overrides: BTreeMap::new(), label: None })
    }

    /// JSON when the text starts with `{`, CSV shorthand otherwise.
    pub fn parse(text: &str) -> Result<Self, CurveError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_csv(text)
        }
    }
}

/// Exact square test for integers (negative numbers are never squares).
pub fn is_square(n: &BigInt) -> bool {
    match n.sign() {
        Sign::Minus => false,
        Sign::NoSign => true,
        Sign::Plus => {
            let r = n.sqrt();
            &r * &r == *n
        }
    }
}
