//! Explicit exceptional-prime bound formulas evaluated at 256-bit precision.
//!
//! Every implied constant is supplied by a [`ConstantsProfile`]. Logs are
//! natural. Integral quantities are exact.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_prime, sieve_primes};
use crate::hp::Real;
use crate::report::{bigint_de, bigint_str};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("{0} must be positive")]
    NonpositiveInput(&'static str),
    #[error("invalid field invariants: {0}")]
    InvalidInvariants(String),
    #[error("invalid constants profile: {0}")]
    InvalidProfile(String),
    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, BoundError>;

pub const DEFAULT_PROFILE_DISCLAIMER: &str = "constants profile: the implied constants of these bounds are not known numerically; \
every value below uses user-calibratable stand-ins (default: all constants 1, reducible single-prime exponent 3)";

pub const LOGLOG_CLAMP_NOTE: &str = "log log N clamped to 1 because N < e^e";

/// Invariants of the base number field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldInvariants {
    pub degree: u32,
    pub unit_rank: u32,
    pub regulator: Real,
    #[serde(serialize_with = "bigint_str", deserialize_with = "bigint_de")]
    pub class_number: BigInt,
    #[serde(serialize_with = "bigint_str", deserialize_with = "bigint_de")]
    pub abs_disc: BigInt,
    #[serde(default)]
    pub ramified_primes: BTreeSet<u64>,
}

impl FieldInvariants {
    pub fn rationals() -> Self {
        FieldInvariants {
            degree: 1,
            unit_rank: 0,
            regulator: Real::one(),
            class_number: BigInt::one(),
            abs_disc: BigInt::one(),
            ramified_primes: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BoundError::InvalidInvariants(m));
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if !self.regulator.is_positive() {
            return bad("regulator must be positive".into());
        }
        if self.class_number < BigInt::one() {
            return bad("class number must be at least 1".into());
        }
        if self.abs_disc < BigInt::one() {
            return bad("|discriminant| must be at least 1".into());
        }
        if let Some(p) = self.ramified_primes.iter().find(|&&p| !is_prime(p)) {
            return bad(format!("ramified prime {p} is not prime"));
        }
        if self.degree == 1 && *self != Self::rationals() {
            return bad("degree 1 requires unit rank 0, regulator 1, class number 1, |discriminant| 1 and no ramified primes".into());
        }
        if self.unit_rank >= self.degree {
            return bad("unit rank must be below the degree".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inv: Self = serde_json::from_str(text).map_err(|e| BoundError::Parse(e.to_string()))?;
        inv.validate()?;
        Ok(inv)
    }

    fn log_disc(&self) -> Real {
        Real::from_bigint(&self.abs_disc).ln()
    }
}

fn one() -> Real {
    Real::one()
}

fn three() -> u32 {
    3
}

/// Numeric stand-ins for every implied constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsProfile {
    #[serde(default = "one")]
    pub chebotarev: Real,
    #[serde(default = "one")]
    pub avoidance: Real,
    #[serde(default = "one")]
    pub reducible_product: Real,
    #[serde(default = "one")]
    pub reducible_single: Real,
    #[serde(default = "three")]
    pub reducible_single_exponent: u32,
    #[serde(default = "one")]
    pub normalizer: Real,
    #[serde(default = "one")]
    pub bootstrap: Real,
    #[serde(default = "one")]
    pub effective_single: Real,
    #[serde(default = "one")]
    pub effective_product: Real,
    #[serde(default = "one")]
    pub explicit: Real,
}

impl Default for ConstantsProfile {
    fn default() -> Self {
        ConstantsProfile {
            chebotarev: one(),
            avoidance: one(),
            reducible_product: one(),
            reducible_single: one(),
            reducible_single_exponent: 3,
            normalizer: one(),
            bootstrap: one(),
            effective_single: one(),
            effective_product: one(),
            explicit: one(),
        }
    }
}

impl ConstantsProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in self.named() {
            if !c.is_positive() {
                return Err(BoundError::InvalidProfile(format!("{name} must be positive")));
            }
        }
        if !matches!(self.reducible_single_exponent, 3 | 6) {
            return Err(BoundError::InvalidProfile("reducible_single_exponent must be 3 or 6".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| BoundError::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn named(&self) -> [(&'static str, &Real); 9] {
        [
            ("chebotarev", &self.chebotarev),
            ("avoidance", &self.avoidance),
            ("reducible_product", &self.reducible_product),
            ("reducible_single", &self.reducible_single),
            ("normalizer", &self.normalizer),
            ("bootstrap", &self.bootstrap),
            ("effective_single", &self.effective_single),
            ("effective_product", &self.effective_product),
            ("explicit", &self.explicit),
        ]
    }

    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }

    pub fn with_exponent(&self, e: u32) -> Self {
        ConstantsProfile { reducible_single_exponent: e, ..self.clone() }
    }
}

fn ln_u64(n: u64) -> Real {
    Real::from_u64(n).ln()
}

fn ln_big(n: &BigInt) -> Real {
    Real::from_bigint(n).ln()
}

/// Least prime of a Frobenius class is at most `c * log_disc^2`.
pub fn chebotarev_bound(log_disc: &Real, profile: &ConstantsProfile) -> Result<Real> {
    if !log_disc.is_positive() {
        return Err(BoundError::NonpositiveInput("log discriminant"));
    }
    Ok(profile.chebotarev.mul(&log_disc.powi(2)))
}

/// Upper bound for the log discriminant of a degree-`d` auxiliary extension
/// ramified only above primes of norm dividing `6 * avoid_norm * |disc|^4`.
pub fn disc_chain_bound(d: u64, avoid_norm: &BigInt, inv: &FieldInvariants) -> Real {
    let log_disc = inv.log_disc();
    let inner = Real::from_u64(6).mul(&Real::from_bigint(avoid_norm)).mul(&Real::from_bigint(&inv.abs_disc).powi(4));
    let sum = log_disc.add(&inner.ln()).add(&Real::from_u64(inv.degree as u64).mul(&ln_u64(d)));
    Real::from_u64(6 * d).mul(&sum)
}

/// Chebotarev with avoidance of primes dividing `avoid_norm`:
/// `c * d^2 * (log N + log|disc| + degree * log d)^2`.
pub fn avoiding_chebotarev_bound(d: u64, avoid_norm: &BigInt, inv: &FieldInvariants, profile: &ConstantsProfile) -> Real {
    avoiding_chebotarev_bound_from_log(d, &ln_big(avoid_norm), inv, profile)
}

pub fn avoiding_chebotarev_bound_from_log(d: u64, log_n: &Real, inv: &FieldInvariants, profile: &ConstantsProfile) -> Real {
    let ld = if d <= 1 { Real::zero() } else { ln_u64(d) };
    let sum = log_n.add(&inv.log_disc()).add(&Real::from_u64(inv.degree as u64).mul(&ld));
    profile.avoidance.mul(&Real::from_u64(d).powi(2)).mul(&sum.powi(2))
}

/// Reducible-case bounds `(product, single)` from `log p` and `log N`.
pub fn reducible_bounds_from_logs(log_p: &Real, log_n: &Real, profile: &ConstantsProfile) -> (Real, Real) {
    let p = log_p.exp();
    let s = log_n.add(log_p);
    let product = profile.reducible_product.mul(&p.powi(36)).mul(&s.powi(12));
    let single = profile.reducible_single.mul(&p.powi(profile.reducible_single_exponent as usize)).mul(&s);
    (product, single)
}

pub fn reducible_bounds(p: u64, conductor: &BigInt, profile: &ConstantsProfile) -> (Real, Real) {
    let s = ln_big(conductor).add(&ln_u64(p));
    let pr = Real::from_u64(p);
    let product = profile.reducible_product.mul(&pr.powi(36)).mul(&s.powi(12));
    let single = profile.reducible_single.mul(&pr.powi(profile.reducible_single_exponent as usize)).mul(&s);
    (product, single)
}

/// Count bound `2^(additive + 2 * degree) * class_number` for quadratic
/// characters attached to normalizer-type exceptional primes.
pub fn normalizer_character_count(additive: u32, inv: &FieldInvariants) -> BigInt {
    (BigInt::one() << (additive as usize + 2 * inv.degree as usize)) * &inv.class_number
}

/// Exact exponent `2 - 2^(1 - d) = (2^d - 1) / 2^(d - 1)`.
pub fn span_exponent(d: u32) -> BigRational {
    assert!(d >= 1, "dimension must be at least 1");
    let two_d = BigInt::one() << d as usize;
    BigRational::new(two_d - 1, BigInt::one() << (d as usize - 1))
}

fn span_exponent_real(d: u32) -> Real {
    let r = span_exponent(d);
    Real::from_bigint(r.numer()).div(&Real::from_bigint(r.denom()))
}

/// Bound for primes whose normalizer character lies in a fixed
/// `d`-dimensional character space: `(c * 2^d * p^3 * (log N + log p))^(2 - 2^(1-d))`.
pub fn span_exceptional_bound_from_logs(d: u32, log_p: &Real, log_n: &Real, profile: &ConstantsProfile) -> Real {
    let base = profile
        .normalizer
        .mul(&Real::from_u64(2).powi(d as usize))
        .mul(&log_p.exp().powi(3))
        .mul(&log_n.add(log_p));
    base.pow(&span_exponent_real(d))
}

pub fn span_exceptional_bound(d: u32, p: u64, conductor: &BigInt, profile: &ConstantsProfile) -> Real {
    let base = profile
        .normalizer
        .mul(&Real::from_u64(2).powi(d as usize))
        .mul(&Real::from_u64(p).powi(3))
        .mul(&ln_big(conductor).add(&ln_u64(p)));
    base.pow(&span_exponent_real(d))
}

/// Cumulative sums of `log l` over primes, in increasing order.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    primes: Vec<u64>,
    /// `cumulative[i]` is the sum over `primes[..i]`.
    cumulative: Vec<Real>,
}

impl ThetaTable {
    pub fn new(limit: u64) -> Self {
        let primes = sieve_primes(limit);
        let mut cumulative = Vec::with_capacity(primes.len() + 1);
        let mut acc = Real::zero();
        cumulative.push(acc.clone());
        for &l in &primes {
            acc = acc.add(&ln_u64(l));
            cumulative.push(acc.clone());
        }
        ThetaTable { primes, cumulative }
    }

    pub fn limit_prime(&self) -> Option<u64> {
        self.primes.last().copied()
    }

    /// Sum of `log l` over primes `l < x`; `x` must not exceed the table limit + 1.
    pub fn below(&self, x: u64) -> Real {
        let k = self.primes.partition_point(|&l| l < x);
        self.cumulative[k].clone()
    }
}

/// Sum of `log l` over primes `l < x`.
pub fn theta_below(x: u64) -> Real {
    ThetaTable::new(x.saturating_sub(1)).below(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct BootResult {
    pub prime: u64,
    pub theta: Real,
    pub log_product: Real,
    pub rhs: Real,
    pub premise_holds: bool,
    /// Whether `S` contains every prime below `prime`; if so `theta <= log_product`.
    pub covers_small_primes: bool,
    pub theta_within_product: Option<bool>,
    pub implied_bound: Real,
    pub holds: bool,
}

/// Smallest acceptable prime over the rationals that is not in `s`.
pub fn smallest_acceptable_outside(s: &BTreeSet<u64>) -> u64 {
    let mut p = 53;
    while !is_prime(p) || s.contains(&p) {
        p += 1;
    }
    p
}

/// Bootstrap mechanics: if `prod S <= A p^b` then `p` is at most
/// `c * (log A + log p + 1)`.
pub fn bootstrap_check(s: &BTreeSet<u64>, a: &Real, b: &Real, profile: &ConstantsProfile) -> Result<BootResult> {
    if *a < Real::one() {
        return Err(BoundError::NonpositiveInput("log A"));
    }
    if let Some(l) = s.iter().find(|&&l| !is_prime(l)) {
        return Err(BoundError::InvalidInvariants(format!("{l} in S is not prime")));
    }
    let p = smallest_acceptable_outside(s);
    let theta = theta_below(p);
    let log_product = s.iter().fold(Real::zero(), |acc, &l| acc.add(&ln_u64(l)));
    let log_p = ln_u64(p);
    let log_a = a.ln();
    let rhs = log_a.add(&b.mul(&log_p));
    let covers = sieve_primes(p - 1).iter().all(|l| s.contains(l));
    let implied_bound = profile.bootstrap.mul(&log_a.add(&log_p).add(&Real::one()));
    Ok(BootResult {
        prime: p,
        premise_holds: log_product <= rhs,
        covers_small_primes: covers,
        theta_within_product: covers.then(|| theta <= log_product),
        holds: Real::from_u64(p) <= implied_bound,
        theta,
        log_product,
        rhs,
        implied_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveBounds {
    pub single: Real,
    pub product: Real,
    pub product_simplified: Real,
    pub loglog_clamped: bool,
}

fn clamped_loglog(log_n: &Real) -> (Real, bool) {
    if *log_n <= Real::e() {
        (Real::one(), true)
    } else {
        (log_n.ln(), false)
    }
}

pub fn effective_bounds_from_log(log_n: &Real, additive: u32, profile: &ConstantsProfile) -> EffectiveBounds {
    let (ll, clamped) = clamped_loglog(log_n);
    let four_a = Real::from_u64(4).powi(additive as usize);
    let single = profile.effective_single.mul(log_n).mul(&ll.powi(3));
    let product = profile
        .effective_product
        .mul(&four_a)
        .mul(&log_n.powi(14))
        .mul(&Real::from_u64(additive as u64).add(&ll).powi(6))
        .mul(&ll.powi(36));
    let product_simplified = profile.effective_product.mul(&four_a).mul(&log_n.powi(21));
    EffectiveBounds { single, product, product_simplified, loglog_clamped: clamped }
}

pub fn effective_bounds(conductor: &BigInt, additive: u32, profile: &ConstantsProfile) -> Result<EffectiveBounds> {
    if !conductor.is_positive() {
        return Err(BoundError::NonpositiveInput("conductor"));
    }
    Ok(effective_bounds_from_log(&ln_big(conductor), additive, profile))
}

/// Field contributions `(single, product)`:
/// `exp(c^n (R n^r + h log|D|))` and `exp(c^n (R n^r + h^2 (log|D|)^2))`.
pub fn field_constant_bounds(inv: &FieldInvariants, c_abs: &Real) -> (Real, Real) {
    let n = Real::from_u64(inv.degree as u64);
    let scale = c_abs.powi(inv.degree as usize);
    let unit_part = inv.regulator.mul(&n.powi(inv.unit_rank as usize));
    let h = Real::from_bigint(&inv.class_number);
    let ld = inv.log_disc();
    let single = scale.mul(&unit_part.add(&h.mul(&ld))).exp();
    let product = scale.mul(&unit_part.add(&h.powi(2).mul(&ld.powi(2)))).exp();
    (single, product)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplicitBounds {
    pub single: Real,
    pub product: Real,
    pub field_single: Real,
    pub field_product: Real,
    pub loglog_clamped: bool,
}

/// Bounds with the field dependence made explicit.
pub fn explicit_bounds_from_log(log_n: &Real, additive: u32, inv: &FieldInvariants, c_abs: &Real, profile: &ConstantsProfile) -> ExplicitBounds {
    let (ll, clamped) = clamped_loglog(log_n);
    let (field_single, field_product) = field_constant_bounds(inv, c_abs);
    let single = profile.explicit.mul(&log_n.mul(&ll.powi(3)).add(&field_single));
    let product = profile
        .explicit
        .mul(&Real::from_u64(4).powi(additive as usize))
        .mul(&log_n.powi(13))
        .mul(&Real::from_u64(additive as u64).add(&ll).powi(3))
        .mul(&ll.powi(36))
        .mul(&field_product);
    ExplicitBounds { single, product, field_single, field_product, loglog_clamped: clamped }
}

pub fn explicit_bounds(conductor: &BigInt, additive: u32, inv: &FieldInvariants, c_abs: &Real, profile: &ConstantsProfile) -> Result<ExplicitBounds> {
    if !conductor.is_positive() {
        return Err(BoundError::NonpositiveInput("conductor"));
    }
    Ok(explicit_bounds_from_log(&ln_big(conductor), additive, inv, c_abs, profile))
}

/// `|disc|^(3/2)`, an upper bound for the class number.
pub fn class_number_ceiling(abs_disc: &BigInt) -> Real {
    let d = Real::from_bigint(abs_disc);
    d.mul(&d.sqrt())
}

pub fn class_number_warning(inv: &FieldInvariants) -> Option<String> {
    let ceiling = class_number_ceiling(&inv.abs_disc);
    (Real::from_bigint(&inv.class_number) > ceiling).then(|| {
        format!(
            "class number {} exceeds |disc|^(3/2) = {}; the field invariants are inconsistent",
            inv.class_number,
            ceiling.to_sci_digits(12)
        )
    })
}

/// One evaluated formula.
#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub formula: String,
    pub inputs: BTreeMap<String, String>,
    pub value: String,
    pub approx: f64,
    pub exact: bool,
    pub anchor: String,
}

impl BoundEntry {
    fn real(formula: impl Into<String>, inputs: &[(&str, String)], value: &Real, anchor: &str) -> Self {
        BoundEntry {
            formula: formula.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            value: value.to_sci(),
            approx: value.to_f64(),
            exact: false,
            anchor: anchor.into(),
        }
    }

    fn integer(formula: impl Into<String>, inputs: &[(&str, String)], value: &BigInt, anchor: &str) -> Self {
        BoundEntry {
            formula: formula.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            value: value.to_string(),
            approx: value.to_f64().unwrap_or(f64::INFINITY),
            exact: true,
            anchor: anchor.into(),
        }
    }
}

fn default_p() -> u64 {
    53
}

fn default_dim() -> u64 {
    2
}

fn default_one_big() -> BigInt {
    BigInt::one()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootInput {
    #[serde(default)]
    pub primes: BTreeSet<u64>,
    #[serde(default = "one")]
    pub a: Real,
    #[serde(default = "Real::zero")]
    pub b: Real,
}

impl Default for BootInput {
    fn default() -> Self {
        BootInput { primes: BTreeSet::new(), a: Real::one(), b: Real::zero() }
    }
}

/// Inputs of the full bound ladder.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderInput {
    #[serde(default = "FieldInvariants::rationals")]
    pub invariants: FieldInvariants,
    #[serde(deserialize_with = "bigint_de")]
    pub conductor: BigInt,
    #[serde(default)]
    pub additive_count: u32,
    #[serde(default = "default_p")]
    pub p: u64,
    #[serde(default = "default_dim")]
    pub d: u64,
    #[serde(default = "default_one_big", deserialize_with = "bigint_de")]
    pub avoid_norm: BigInt,
    #[serde(default)]
    pub bootstrap: Option<BootInput>,
    #[serde(default = "one")]
    pub c_abs: Real,
}

impl LadderInput {
    pub fn for_curve(conductor: BigInt, additive_count: u32) -> Self {
        LadderInput {
            invariants: FieldInvariants::rationals(),
            conductor,
            additive_count,
            p: default_p(),
            d: default_dim(),
            avoid_norm: BigInt::one(),
            bootstrap: None,
            c_abs: Real::one(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let input: Self = serde_json::from_str(text).map_err(|e| BoundError::Parse(e.to_string()))?;
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        self.invariants.validate()?;
        if !self.conductor.is_positive() {
            return Err(BoundError::NonpositiveInput("conductor"));
        }
        if !self.avoid_norm.is_positive() {
            return Err(BoundError::NonpositiveInput("avoid_norm"));
        }
        if self.d == 0 {
            return Err(BoundError::NonpositiveInput("d"));
        }
        if !is_prime(self.p) {
            return Err(BoundError::InvalidInvariants(format!("p = {} is not prime", self.p)));
        }
        if !self.c_abs.is_positive() {
            return Err(BoundError::NonpositiveInput("c_abs"));
        }
        Ok(())
    }

    /// Largest character-space dimension evaluated:
    /// `additive + 2 * degree + ceil(log2 class_number)`.
    pub fn max_span_dim(&self) -> u32 {
        let h = &self.invariants.class_number;
        let ceil_log2 = if h.is_one() { 0 } else { (h - 1u32).bits() as u32 };
        self.additive_count + 2 * self.invariants.degree + ceil_log2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub disclaimer: &'static str,
    pub profile: ConstantsProfile,
    pub entries: Vec<BoundEntry>,
    pub bootstrap: BootResult,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn get(&self, formula: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.formula == formula)
    }
}

/// Evaluate every formula in order on one input set.
pub fn bound_ladder(input: &LadderInput, profile: &ConstantsProfile) -> Result<BoundReport> {
    input.validate()?;
    profile.validate()?;
    let inv = &input.invariants;
    let n = &input.conductor;
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    let field = [
        ("degree", inv.degree.to_string()),
        ("abs_disc", inv.abs_disc.to_string()),
    ];

    let chain = disc_chain_bound(input.d, &input.avoid_norm, inv);
    let chain_inputs = [field[0].clone(), field[1].clone(), ("d", input.d.to_string()), ("avoid_norm", input.avoid_norm.to_string())];
    entries.push(BoundEntry::real("disc_chain", &chain_inputs, &chain, "log-discriminant of the auxiliary degree-d extension"));
    let cheb = chebotarev_bound(&chain, profile)?;
    entries.push(BoundEntry::real(
        "chebotarev",
        &[("log_disc", chain.to_sci()), ("constant", profile.chebotarev.to_sci())],
        &cheb,
        "effective Chebotarev under GRH: least Frobenius prime <= c (log disc)^2",
    ));
    let ceb = avoiding_chebotarev_bound(input.d, &input.avoid_norm, inv, profile);
    entries.push(BoundEntry::real("chebotarev_avoiding", &chain_inputs, &ceb, "Chebotarev with avoidance of primes dividing N"));

    let p_inputs = [("p", input.p.to_string()), ("conductor", n.to_string())];
    for e in [3u32, 6] {
        let (product, single) = reducible_bounds(input.p, n, &profile.with_exponent(e));
        if e == 3 {
            entries.push(BoundEntry::real("reducible_product", &p_inputs, &product, "product of reducible exceptional primes <= c p^36 (log N + log p)^12"));
        }
        let mut inputs = p_inputs.to_vec();
        inputs.push(("exponent", e.to_string()));
        entries.push(BoundEntry::real(format!("reducible_single_p{e}"), &inputs, &single, "single reducible exceptional prime <= c p^e (log N + log p)"));
    }

    let count = normalizer_character_count(input.additive_count, inv);
    entries.push(BoundEntry::integer(
        "normalizer_characters",
        &[("additive_count", input.additive_count.to_string()), field[0].clone(), ("class_number", inv.class_number.to_string())],
        &count,
        "number of candidate normalizer characters <= 2^(a + 2n) h",
    ));
    for d in 1..=input.max_span_dim() {
        let v = span_exceptional_bound(d, input.p, n, profile);
        let ex = span_exponent(d);
        entries.push(BoundEntry::real(
            format!("span_exceptional_d{d}"),
            &[("d", d.to_string()), ("exponent", format!("{}/{}", ex.numer(), ex.denom())), p_inputs[0].clone(), p_inputs[1].clone()],
            &v,
            "primes with character in a d-dimensional space: product <= (c 2^d p^3 (log N + log p))^(2 - 2^(1-d))",
        ));
    }

    let boot_in = input.bootstrap.clone().unwrap_or_default();
    let boot = bootstrap_check(&boot_in.primes, &boot_in.a, &boot_in.b, profile)?;
    entries.push(BoundEntry::real(
        "bootstrap_implied",
        &[("prime", boot.prime.to_string()), ("a", boot_in.a.to_sci()), ("b", boot_in.b.to_sci())],
        &boot.implied_bound,
        "smallest acceptable prime outside S is <= c (log A + log p + 1)",
    ));

    let eff = effective_bounds(n, input.additive_count, profile)?;
    let eff_inputs = [("conductor", n.to_string()), ("additive_count", input.additive_count.to_string())];
    entries.push(BoundEntry::real("effective_single", &eff_inputs, &eff.single, "any exceptional prime <= c log N (log log N)^3"));
    entries.push(BoundEntry::real(
        "effective_product",
        &eff_inputs,
        &eff.product,
        "product of exceptional primes <= c 4^a (log N)^14 (a + log log N)^6 (log log N)^36",
    ));
    entries.push(BoundEntry::real("effective_product_simplified", &eff_inputs, &eff.product_simplified, "product of exceptional primes <= c 4^a (log N)^21"));

    let exp = explicit_bounds(n, input.additive_count, inv, &input.c_abs, profile)?;
    let mut exp_inputs = eff_inputs.to_vec();
    exp_inputs.extend([("c_abs", input.c_abs.to_sci()), field[0].clone(), field[1].clone()]);
    entries.push(BoundEntry::real("field_single", &exp_inputs, &exp.field_single, "exp(c^n (R n^r + h log|D|))"));
    entries.push(BoundEntry::real("field_product", &exp_inputs, &exp.field_product, "exp(c^n (R n^r + h^2 (log|D|)^2))"));
    entries.push(BoundEntry::real("explicit_single", &exp_inputs, &exp.single, "any exceptional prime <= c (log N (log log N)^3 + field_single)"));
    entries.push(BoundEntry::real(
        "explicit_product",
        &exp_inputs,
        &exp.product,
        "product of exceptional primes <= c 4^a (log N)^13 (a + log log N)^3 (log log N)^36 field_product",
    ));

    let ceiling = class_number_ceiling(&inv.abs_disc);
    entries.push(BoundEntry::real("class_number_ceiling", &[field[1].clone()], &ceiling, "class number <= |disc|^(3/2)"));
    warnings.extend(class_number_warning(inv));
    if eff.loglog_clamped {
        warnings.push(LOGLOG_CLAMP_NOTE.into());
    }
    Ok(BoundReport { disclaimer: DEFAULT_PROFILE_DISCLAIMER, profile: profile.clone(), entries, bootstrap: boot, warnings })
}
