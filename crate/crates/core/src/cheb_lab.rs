//! Least primes in Frobenius classes of abelian extensions of Q, measured
//! against the `(log disc)^2` envelope. Results are empirical.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{gcd_u64, is_fundamental_discriminant, kronecker, sieve_primes, totient};
use crate::hp::Real;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChebError {
    #[error("no prime in the target class of {field} below {bound}")]
    NotFoundWithinBound { field: String, bound: u64 },
    #[error("{0} is not a fundamental discriminant other than 1")]
    NotFundamental(i64),
    #[error("target must be +1 or -1, got {0}")]
    BadTarget(i64),
    #[error("modulus must be at least 3, got {0}")]
    BadModulus(u64),
    #[error("residue {r} is not coprime to {m}")]
    NotCoprime { r: u64, m: u64 },
    #[error("no data")]
    EmptyData,
    #[error("re-scan failed for {field}: {reason}")]
    Rescan { field: String, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, ChebError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFamily {
    Quadratic,
    Cyclotomic,
}

/// Least prime realizing one Frobenius class.
#[derive(Debug, Clone, Serialize)]
pub struct LeastPrimeDatum {
    pub family: FieldFamily,
    /// Fundamental discriminant or cyclotomic conductor.
    pub field_id: i64,
    /// Kronecker value for quadratic fields, residue class for cyclotomic ones.
    pub target: i64,
    pub least_prime: u64,
    pub log_disc: Real,
    pub ratio: Real,
}

impl LeastPrimeDatum {
    fn new(family: FieldFamily, field_id: i64, target: i64, least_prime: u64, log_disc: Real) -> Self {
        let ratio = Real::from_u64(least_prime).div(&log_disc.powi(2));
        LeastPrimeDatum { family, field_id, target, least_prime, log_disc, ratio }
    }

    fn label(&self) -> String {
        match self.family {
            FieldFamily::Quadratic => format!("Q(sqrt({}))", self.field_id),
            FieldFamily::Cyclotomic => format!("Q(zeta_{})", self.field_id),
        }
    }

    /// Whether `p` is unramified and lies in the target class.
    fn in_class(&self, p: u64) -> Option<bool> {
        match self.family {
            FieldFamily::Quadratic => {
                let k = kronecker(self.field_id, p as i64);
                (k != 0).then_some(k as i64 == self.target)
            }
            FieldFamily::Cyclotomic => {
                let m = self.field_id as u64;
                (!m.is_multiple_of(p)).then_some(p % m == self.target as u64)
            }
        }
    }

    /// The class condition holds at `least_prime` and fails at every smaller unramified prime.
    pub fn rescan(&self) -> Result<()> {
        let fail = |reason: String| Err(ChebError::Rescan { field: self.label(), reason });
        if self.in_class(self.least_prime) != Some(true) {
            return fail(format!("{} is not in the target class", self.least_prime));
        }
        for p in sieve_primes(self.least_prime - 1) {
            if self.in_class(p) == Some(true) {
                return fail(format!("smaller prime {p} is in the target class"));
            }
        }
        Ok(())
    }
}

fn check_target(target: i64) -> Result<()> {
    if target != 1 && target != -1 {
        return Err(ChebError::BadTarget(target));
    }
    Ok(())
}

fn quadratic_from_primes(d: i64, target: i64, primes: &[u64], bound: u64) -> Result<LeastPrimeDatum> {
    let p = primes
        .iter()
        .copied()
        .find(|&p| kronecker(d, p as i64) as i64 == target)
        .ok_or_else(|| ChebError::NotFoundWithinBound { field: format!("Q(sqrt({d}))"), bound })?;
    Ok(LeastPrimeDatum::new(FieldFamily::Quadratic, d, target, p, Real::from_u64(d.unsigned_abs()).ln()))
}

/// Least prime `p` not dividing `d` with `(d/p) = target`.
pub fn least_prime_quadratic(d: i64, target: i64, sieve_bound: u64) -> Result<LeastPrimeDatum> {
    if d == 1 || !is_fundamental_discriminant(d) {
        return Err(ChebError::NotFundamental(d));
    }
    check_target(target)?;
    quadratic_from_primes(d, target, &sieve_primes(sieve_bound), sieve_bound)
}

/// Least prime `p = r (mod m)`. The log discriminant is the proxy `phi(m) log m`.
pub fn least_prime_cyclotomic(m: u64, r: u64, sieve_bound: u64) -> Result<LeastPrimeDatum> {
    if m < 3 {
        return Err(ChebError::BadModulus(m));
    }
    let r = r % m;
    if gcd_u64(r, m) != 1 {
        return Err(ChebError::NotCoprime { r, m });
    }
    let p = sieve_primes(sieve_bound)
        .into_iter()
        .find(|&p| p % m == r)
        .ok_or_else(|| ChebError::NotFoundWithinBound { field: format!("Q(zeta_{m})"), bound: sieve_bound })?;
    let log_disc = Real::from_u64(totient(m)).mul(&Real::from_u64(m).ln());
    Ok(LeastPrimeDatum::new(FieldFamily::Cyclotomic, m as i64, r as i64, p, log_disc))
}

/// Fundamental discriminants `D != 1` with `|D| <= max_abs`, ascending.
pub fn fundamental_discriminants(max_abs: u64) -> Vec<i64> {
    let m = max_abs as i64;
    (-m..=m).filter(|&d| d != 1 && is_fundamental_discriminant(d)).collect()
}

/// Least inert and least split prime for every fundamental `|D| <= max_abs`.
/// Output order is by `D`, inert before split, for any `jobs`.
pub fn quadratic_sweep(max_abs: u64, sieve_bound: u64, jobs: usize) -> Result<Vec<LeastPrimeDatum>> {
    let primes = sieve_primes(sieve_bound);
    let discs = fundamental_discriminants(max_abs);
    let run = || -> Result<Vec<LeastPrimeDatum>> {
        let per_disc: Vec<Result<[LeastPrimeDatum; 2]>> = discs
            .par_iter()
            .map(|&d| {
                let inert = quadratic_from_primes(d, -1, &primes, sieve_bound)?;
                let split = quadratic_from_primes(d, 1, &primes, sieve_bound)?;
                inert.rescan()?;
                split.rescan()?;
                Ok([inert, split])
            })
            .collect();
        let mut out = Vec::with_capacity(2 * per_disc.len());
        for pair in per_disc {
            out.extend(pair?);
        }
        Ok(out)
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ChebError::Pool(e.to_string()))?
        .install(run)
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub label: &'static str,
    pub count: usize,
    pub max_ratio: Real,
    pub max_field: i64,
    pub max_target: i64,
    pub max_prime: u64,
    pub p50: Real,
    pub p90: Real,
    pub p99: Real,
}

pub const EMPIRICAL_LABEL: &str = "empirical: least prime / (log disc)^2 over the data; not a proven constant";

/// Maximum and nearest-rank percentiles of the ratios.
pub fn envelope_report(data: &[LeastPrimeDatum]) -> Result<Envelope> {
    if data.is_empty() {
        return Err(ChebError::EmptyData);
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| {
        data[i].ratio.partial_cmp(&data[j].ratio).expect("ratios are finite").then(i.cmp(&j))
    });
    let rank = |q: usize| -> Real {
        let k = (q * data.len()).div_ceil(100).max(1);
        data[order[k - 1]].ratio.clone()
    };
    let top = &data[*order.last().expect("nonempty")];
    let max_ratio = top.ratio.clone();
    Ok(Envelope {
        label: EMPIRICAL_LABEL,
        count: data.len(),
        max_ratio,
        max_field: top.field_id,
        max_target: top.target,
        max_prime: top.least_prime,
        p50: rank(50),
        p90: rank(90),
        p99: rank(99),
    })
}

/// `D,target,least_prime,ratio` lines with a header.
pub fn to_csv(data: &[LeastPrimeDatum]) -> String {
    let mut out = String::from("D,target,least_prime,ratio\n");
    for d in data {
        writeln!(out, "{},{},{},{}", d.field_id, d.target, d.least_prime, d.ratio.to_sci()).expect("writing to a String");
    }
    out
}
