//! Frobenius traces by point counting over prime fields, trace tables,
//! the twelfth Adams operation and two-curve trace comparisons.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith;
use crate::curve::{minimal_model_at, CurveError, CurveQ, ReductionProfile};

pub mod cache;

pub const DEFAULT_POINT_COUNT_LIMIT: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrobError {
    #[error("p = {0} is a prime of bad reduction for this model")]
    BadReduction(u64),
    #[error("p = {p} exceeds the point-counting limit {limit}")]
    PrimeTooLarge { p: u64, limit: u64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("Weil bound violated at p = {p}: a_p = {a}")]
    WeilViolation { p: u64, a: i64 },
    #[error("trace table covers p <= {have}, comparison needs {need}")]
    InsufficientTable { have: u64, need: u64 },
    #[error("records are at different primes ({0} and {1})")]
    PrimeMismatch(u64, u64),
    #[error("trace cache {path}: {reason}")]
    Cache { path: String, reason: String },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrobeniusRecord {
    pub p: u64,
    pub a_p: i64,
}

impl FrobeniusRecord {
    pub fn new(p: u64, a_p: i64) -> Result<Self, FrobError> {
        if (a_p as i128) * (a_p as i128) > 4 * p as i128 {
            return Err(FrobError::WeilViolation { p, a: a_p });
        }
        Ok(Self { p, a_p })
    }

    pub fn poly(&self) -> FrobPoly {
        FrobPoly { trace: BigInt::from(self.a_p), norm: BigInt::from(self.p) }
    }
}

/// `x^2 - trace * x + norm`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrobPoly {
    #[serde(serialize_with = "crate::report::bigint_str")]
    pub trace: BigInt,
    #[serde(serialize_with = "crate::report::bigint_str")]
    pub norm: BigInt,
}

impl FrobPoly {
    pub fn new(trace: BigInt, norm: BigInt) -> Option<Self> {
        (norm.is_positive() && &trace * &trace <= BigInt::from(4) * &norm).then_some(Self { trace, norm })
    }
}

/// Power sums `s_k = alpha^k + beta^k` of the roots, for `k = 0..=n`.
pub fn power_sums(a: &BigInt, q: &BigInt, n: usize) -> Vec<BigInt> {
    let mut s = Vec::with_capacity(n + 1);
    s.push(BigInt::from(2));
    if n >= 1 {
        s.push(a.clone());
    }
    for k in 2..=n {
        let next = a * &s[k - 1] - q * &s[k - 2];
        s.push(next);
    }
    s
}

/// Twelfth Adams operation: the polynomial whose roots are the twelfth
/// powers of the roots of `poly`.
pub fn adams12(poly: &FrobPoly) -> FrobPoly {
    let s = power_sums(&poly.trace, &poly.norm, 12);
    FrobPoly { trace: s[12].clone(), norm: num_traits::pow(poly.norm.clone(), 12) }
}

/// Frobenius trace of a curve at a prime of good reduction for the given model.
pub fn count_points(curve: &CurveQ, p: u64) -> Result<FrobeniusRecord, FrobError> {
    count_points_with_limit(curve, p, DEFAULT_POINT_COUNT_LIMIT)
}

pub fn count_points_with_limit(curve: &CurveQ, p: u64, limit: u64) -> Result<FrobeniusRecord, FrobError> {
    if !arith::is_prime(p) {
        return Err(FrobError::NotPrime(p));
    }
    if p > limit {
        return Err(FrobError::PrimeTooLarge { p, limit });
    }
    if curve.disc_mod(p) == 0 {
        return Err(FrobError::BadReduction(p));
    }
    let [a1, a2, a3, a4, a6] = curve.ainvs_mod(p);
    let a = if p == 2 {
        let mut affine = 0i64;
        for x in 0..2u64 {
            for y in 0..2u64 {
                let lhs = (y * y + a1 * x * y + a3 * y) % 2;
                let rhs = (x * x * x + a2 * x * x + a4 * x + a6) % 2;
                if lhs == rhs {
                    affine += 1;
                }
            }
        }
        3 - (affine + 1)
    } else {
        let chi = arith::quadratic_character_table(p);
        let four = 4 % p;
        let mut sum = 0i64;
        for x in 0..p {
            let f = ((x * x % p + a2 * x) % p * x + a4 * x + a6) % p;
            let h = (a1 * x + a3) % p;
            let d = (h * h + four * f) % p;
            sum += chi[d as usize] as i64;
        }
        -sum
    };
    FrobeniusRecord::new(p, a)
}

/// Good-reduction traces of one curve for every prime up to `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceTable {
    pub curve_id: String,
    pub bound: u64,
    pub records: Vec<FrobeniusRecord>,
    /// Primes up to `bound` with bad reduction.
    pub bad_primes: BTreeSet<u64>,
    /// Good primes in {2, 3} whose model is not minimal there; no trace is available.
    pub skipped_primes: BTreeSet<u64>,
}

impl TraceTable {
    pub fn get(&self, p: u64) -> Option<i64> {
        self.records.binary_search_by_key(&p, |r| r.p).ok().map(|i| self.records[i].a_p)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// How a prime up to the bound is handled when building a table.
#[derive(Debug, Clone)]
enum PrimePlan {
    Count(u64),
    CountMinimal(u64, CurveQ),
    Bad(u64),
    Skip(u64),
}

fn plan_primes(curve: &CurveQ, profile: &ReductionProfile, bound: u64) -> Result<Vec<PrimePlan>, FrobError> {
    let bad: BTreeSet<u64> = profile.bad_primes().into_iter().collect();
    let mut plans = Vec::new();
    for p in arith::sieve_primes(bound) {
        if bad.contains(&p) {
            plans.push(PrimePlan::Bad(p));
        } else if curve.disc_mod(p) != 0 {
            plans.push(PrimePlan::Count(p));
        } else if p >= 5 {
            plans.push(PrimePlan::CountMinimal(p, minimal_model_at(curve, p)?));
        } else {
            plans.push(PrimePlan::Skip(p));
        }
    }
    Ok(plans)
}

fn run_plans(curve: &CurveQ, plans: &[PrimePlan], limit: u64) -> Result<Vec<FrobeniusRecord>, FrobError> {
    plans
        .par_iter()
        .filter_map(|plan| match plan {
            PrimePlan::Count(p) => Some(count_points_with_limit(curve, *p, limit)),
            PrimePlan::CountMinimal(p, m) => Some(count_points_with_limit(m, *p, limit)),
            _ => None,
        })
        .collect()
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Build the trace table for all primes `<= bound`, counting with `jobs`
/// worker threads. The result does not depend on `jobs`.
pub fn build_trace_table(
    curve: &CurveQ,
    profile: &ReductionProfile,
    bound: u64,
    jobs: usize,
) -> Result<TraceTable, FrobError> {
    build_trace_table_from(curve, profile, bound, jobs, Vec::new(), 0)
}

pub(crate) fn build_trace_table_from(
    curve: &CurveQ,
    profile: &ReductionProfile,
    bound: u64,
    jobs: usize,
    known: Vec<FrobeniusRecord>,
    known_through: u64,
) -> Result<TraceTable, FrobError> {
    let plans = plan_primes(curve, profile, bound)?;
    let (mut bad_primes, mut skipped_primes) = (BTreeSet::new(), BTreeSet::new());
    let mut pending = Vec::new();
    for plan in plans {
        match plan {
            PrimePlan::Bad(p) => {
                bad_primes.insert(p);
            }
            PrimePlan::Skip(p) => {
                skipped_primes.insert(p);
            }
            PrimePlan::Count(p) | PrimePlan::CountMinimal(p, _) if p <= known_through => {}
            other => pending.push(other),
        }
    }
    let fresh = in_pool(jobs, || run_plans(curve, &pending, DEFAULT_POINT_COUNT_LIMIT))?;
    let mut records: Vec<FrobeniusRecord> = known.into_iter().filter(|r| r.p <= bound).collect();
    for r in &records {
        if bad_primes.contains(&r.p) || skipped_primes.contains(&r.p) {
            return Err(FrobError::BadReduction(r.p));
        }
    }
    records.extend(fresh);
    records.sort_by_key(|r| r.p);
    records.dedup_by_key(|r| r.p);
    Ok(TraceTable { curve_id: curve.id(), bound, records, bad_primes, skipped_primes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    Plain,
    Adams12,
}

/// Trace difference at one prime: `a - a'` (plain) or `s12 - s12'` (Adams).
pub fn trace_difference(a: i64, b: i64, p: u64, mode: CompareMode) -> BigInt {
    match mode {
        CompareMode::Plain => BigInt::from(a) - BigInt::from(b),
        CompareMode::Adams12 => {
            let q = BigInt::from(p);
            let sa = adams12(&FrobPoly { trace: BigInt::from(a), norm: q.clone() }).trace;
            let sb = adams12(&FrobPoly { trace: BigInt::from(b), norm: q }).trace;
            sa - sb
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum DistinguishingResult {
    Found {
        p: u64,
        a_first: i64,
        a_second: i64,
        #[serde(serialize_with = "crate::report::bigint_str")]
        difference: BigInt,
        #[serde(serialize_with = "crate::report::bigint_str")]
        abs_difference: BigInt,
    },
    NotFound {
        primes_checked: usize,
    },
}

/// Smallest common good prime `<= bound` at which the two curves' Frobenius
/// polynomials (plain or after the Adams operation) differ.
pub fn compare_traces(
    first: &TraceTable,
    second: &TraceTable,
    mode: CompareMode,
    bound: u64,
) -> Result<DistinguishingResult, FrobError> {
    for t in [first, second] {
        if t.bound < bound {
            return Err(FrobError::InsufficientTable { have: t.bound, need: bound });
        }
    }
    let mut checked = 0;
    let mut j = 0;
    for r in first.records.iter().take_while(|r| r.p <= bound) {
        while j < second.records.len() && second.records[j].p < r.p {
            j += 1;
        }
        let Some(s) = second.records.get(j).filter(|s| s.p == r.p) else { continue };
        checked += 1;
        let difference = trace_difference(r.a_p, s.a_p, r.p, mode);
        if !difference.is_zero() {
            return Ok(DistinguishingResult::Found {
                p: r.p,
                a_first: r.a_p,
                a_second: s.a_p,
                abs_difference: difference.abs(),
                difference,
            });
        }
    }
    Ok(DistinguishingResult::NotFound { primes_checked: checked })
}

/// Divisibility certificate at one prime. In plain mode the difference
/// `A` satisfies `|A| <= 4 sqrt(p)`; in Adams mode `B` satisfies `|B| <= 4 p^6`.
/// A modulus larger than that bound dividing the difference forces it to vanish.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CongruenceCert {
    pub p: u64,
    pub mode: CompareMode,
    #[serde(serialize_with = "crate::report::bigint_str")]
    pub difference: BigInt,
    /// Textual form of the size bound on the difference.
    pub bound: String,
    pub within_bound: bool,
    pub clause: String,
}

impl CongruenceCert {
    /// True iff `modulus` exceeds the size bound, so `modulus | difference`
    /// can only happen when the difference is 0.
    pub fn exceeds_bound(&self, modulus: &BigInt) -> bool {
        match self.mode {
            CompareMode::Plain => modulus.is_positive() && modulus * modulus > BigInt::from(16 * self.p),
            CompareMode::Adams12 => *modulus > BigInt::from(4) * num_traits::pow(BigInt::from(self.p), 6),
        }
    }

    /// The certificate's clause applied to a concrete modulus: whenever the
    /// modulus divides the difference and exceeds the bound, the difference is 0.
    pub fn clause_holds_for(&self, modulus: &BigInt) -> bool {
        let divides = !modulus.is_zero() && (&self.difference % modulus).is_zero();
        !(divides && self.exceeds_bound(modulus)) || self.difference.is_zero()
    }
}

pub fn congruence_certificate(
    first: &FrobeniusRecord,
    second: &FrobeniusRecord,
    mode: CompareMode,
) -> Result<CongruenceCert, FrobError> {
    if first.p != second.p {
        return Err(FrobError::PrimeMismatch(first.p, second.p));
    }
    let p = first.p;
    let difference = trace_difference(first.a_p, second.a_p, p, mode);
    let (bound, within_bound, clause) = match mode {
        CompareMode::Plain => (
            format!("4*sqrt({p})"),
            &difference * &difference <= BigInt::from(16 * p),
            "any l dividing A with l > 4*sqrt(p) forces A = 0; so l <= |A| <= 4*sqrt(p) whenever A != 0".to_string(),
        ),
        CompareMode::Adams12 => {
            let b = BigInt::from(4) * num_traits::pow(BigInt::from(p), 6);
            (
                format!("4*{p}^6 = {b}"),
                difference.abs() <= b,
                "any R dividing B with R > 4*p^6 forces B = 0; so R_E <= |B| whenever B != 0".to_string(),
            )
        }
    };
    Ok(CongruenceCert { p, mode, difference, bound, within_bound, clause })
}
