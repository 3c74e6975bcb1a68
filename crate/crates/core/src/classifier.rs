//! Witness-based classification of mod-l images from Frobenius data.
//!
//! Every input is a stream of `(prime, trace mod l, det mod l)` samples:
//! from a curve's trace table (`det = p`) or synthesized from a subgroup of
//! GL2(F_l). A `Surjective` verdict is a proof; every other verdict is a
//! heuristic label.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, mod_mul};
use crate::curve::{is_square, CurveQ};
use crate::frobenius::TraceTable;
use crate::gl2::{projective_order_of_trace, FamilyGroup, Mat2, ProjClass};

/// Fewer samples than this leave the character search underdetermined.
pub const MIN_CHARACTER_SAMPLES: usize = 30;
pub const ZERO_TRACE_WINDOW: (f64, f64) = (0.35, 0.65);
/// Largest share of order-1-or-l fingerprints an irregular image can show.
pub const IRREGULAR_MAX_UNIPOTENT_SHARE: f64 = 1.0 / 6.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("no usable samples for l = {0}")]
    EmptyTable(u64),
    #[error("l = {0} is not prime")]
    NotPrime(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrobSample {
    pub prime: u64,
    pub trace: u64,
    pub det: u64,
}

/// Samples `(a_p mod l, p mod l)` for every good `p != l` in the table.
pub fn samples_from_table(table: &TraceTable, ell: u64) -> Vec<FrobSample> {
    table
        .records
        .iter()
        .filter(|r| r.p != ell)
        .map(|r| FrobSample { prime: r.p, trace: arith::reduce_i64(r.a_p, ell), det: r.p % ell })
        .collect()
}

fn disc_mod(s: &FrobSample, ell: u64) -> u64 {
    let t2 = mod_mul(s.trace, s.trace, ell);
    (t2 + ell - mod_mul(4 % ell, s.det, ell)) % ell
}

fn quadratic_class(v: u64, ell: u64) -> i32 {
    if ell == 2 {
        return if v == 0 { 0 } else { 1 };
    }
    arith::legendre(v, ell)
}

/// Smallest-prime witnesses and counts for one `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessSet {
    pub ell: u64,
    pub sampled: usize,
    /// Discriminant a nonzero nonsquare, trace nonzero.
    pub w_irred: Option<u64>,
    /// Discriminant a nonzero square, trace nonzero.
    pub w_split: Option<u64>,
    /// Projective order above 5 and not l.
    pub w_bigorder: Option<u64>,
    /// Prime at which the determinants seen so far generate F_l^*.
    pub w_det: Option<u64>,
    pub zero_trace_primes: usize,
    pub disc_zero: usize,
    pub disc_square: usize,
    pub disc_nonsquare: usize,
    pub fingerprints: BTreeMap<ProjClass, usize>,
}

impl WitnessSet {
    pub fn zero_trace_fraction(&self) -> f64 {
        if self.sampled == 0 {
            0.0
        } else {
            self.zero_trace_primes as f64 / self.sampled as f64
        }
    }
}

fn discrete_logs(ell: u64) -> Vec<u64> {
    let g = arith::primitive_root(ell);
    let mut logs = vec![0u64; ell as usize];
    let mut x = 1u64;
    for k in 0..ell - 1 {
        logs[x as usize] = k;
        x = mod_mul(x, g, ell);
    }
    logs
}

pub fn collect_witnesses(samples: &[FrobSample], ell: u64) -> Result<WitnessSet, ClassifyError> {
    if !arith::is_prime(ell) {
        return Err(ClassifyError::NotPrime(ell));
    }
    let samples: Vec<&FrobSample> = samples.iter().filter(|s| s.det % ell != 0).collect();
    if samples.is_empty() {
        return Err(ClassifyError::EmptyTable(ell));
    }
    let logs = discrete_logs(ell);
    let mut det_gcd = ell - 1;
    let mut w = WitnessSet {
        ell,
        sampled: samples.len(),
        w_irred: None,
        w_split: None,
        w_bigorder: None,
        w_det: (ell == 2).then(|| samples[0].prime),
        zero_trace_primes: 0,
        disc_zero: 0,
        disc_square: 0,
        disc_nonsquare: 0,
        fingerprints: BTreeMap::new(),
    };
    for s in samples {
        let (t, d) = (s.trace % ell, s.det % ell);
        let disc = disc_mod(s, ell);
        let class = quadratic_class(disc, ell);
        match class {
            0 => w.disc_zero += 1,
            1 => w.disc_square += 1,
            _ => w.disc_nonsquare += 1,
        }
        if t == 0 {
            w.zero_trace_primes += 1;
        } else if class == -1 && w.w_irred.is_none() {
            w.w_irred = Some(s.prime);
        } else if class == 1 && w.w_split.is_none() {
            w.w_split = Some(s.prime);
        }
        let fp = projective_order_of_trace(t, d, ell).expect("det is nonzero");
        *w.fingerprints.entry(fp).or_insert(0) += 1;
        if fp == ProjClass::Big && w.w_bigorder.is_none() {
            w.w_bigorder = Some(s.prime);
        }
        if w.w_det.is_none() {
            det_gcd = arith::gcd_u64(det_gcd, logs[d as usize]);
            if det_gcd == 1 {
                w.w_det = Some(s.prime);
            }
        }
    }
    Ok(w)
}

/// True only when the witnesses prove the image is all of GL2(F_l), l >= 5.
///
/// A nonsquare discriminant with nonzero trace rules out split Cartan
/// normalizers and Borel subgroups, a nonzero square one rules out nonsplit
/// Cartan normalizers, a projective order above 5 rules out the irregular
/// images, so the image contains SL2; a full determinant finishes the proof.
pub fn certify_surjective(w: &WitnessSet) -> bool {
    w.ell >= 5 && w.w_irred.is_some() && w.w_split.is_some() && w.w_bigorder.is_some() && w.w_det.is_some()
}

/// Every characteristic polynomial splits mod `l` (discriminant a square, possibly 0).
pub fn detect_reducible(samples: &[FrobSample], ell: u64) -> Result<bool, ClassifyError> {
    Ok(collect_witnesses(samples, ell)?.disc_nonsquare == 0)
}

/// Quadratic character identified by its fundamental discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuadraticCharacter {
    pub discriminant: i64,
}

impl QuadraticCharacter {
    pub fn new(d: i64) -> Option<Self> {
        arith::is_fundamental_discriminant(d).then_some(Self { discriminant: d })
    }

    pub fn eval(&self, p: u64) -> i32 {
        arith::kronecker(self.discriminant, p as i64)
    }

    /// Product character, reduced to its fundamental discriminant.
    pub fn mul(&self, other: &Self) -> Self {
        Self { discriminant: arith::fundamental_discriminant_of(self.discriminant * other.discriminant) }
    }
}

/// Nontrivial characters unramified outside the given primes (and infinity).
pub fn character_search_space(primes: &[u64]) -> Vec<QuadraticCharacter> {
    let mut basis: Vec<i64> = Vec::new();
    for &p in primes {
        basis.extend(arith::prime_discriminants(p));
    }
    let mut out = BTreeSet::new();
    for mask in 1u64..(1 << basis.len()) {
        let mut d = 1i64;
        for (i, &b) in basis.iter().enumerate() {
            if mask >> i & 1 == 1 {
                d = arith::fundamental_discriminant_of(d * b);
            }
        }
        if d != 1 {
            out.insert(d);
        }
    }
    out.into_iter().map(|d| QuadraticCharacter { discriminant: d }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CharacterOutcome {
    Found { character: QuadraticCharacter },
    /// No additive primes, so only the trivial character is allowed.
    NoCandidates,
    NoMatch,
    Ambiguous { candidates: Vec<QuadraticCharacter> },
    Underdetermined { sampled: usize },
}

impl CharacterOutcome {
    pub fn character(&self) -> Option<QuadraticCharacter> {
        match self {
            CharacterOutcome::Found { character } => Some(*character),
            _ => None,
        }
    }
}

/// Search for the character cutting out the Cartan inside its normalizer:
/// a candidate `D` passes when every sampled `p` with `(D/p) = -1` has
/// trace 0 mod `l`, and at least one such `p` was sampled.
pub fn extract_normalizer_character(samples: &[FrobSample], ell: u64, additive_primes: &[u64]) -> CharacterOutcome {
    let space = character_search_space(additive_primes);
    if space.is_empty() {
        return CharacterOutcome::NoCandidates;
    }
    if samples.len() < MIN_CHARACTER_SAMPLES {
        return CharacterOutcome::Underdetermined { sampled: samples.len() };
    }
    let passing: Vec<QuadraticCharacter> = space
        .into_iter()
        .filter(|chi| {
            let mut inert = 0;
            for s in samples {
                if s.prime == ell {
                    continue;
                }
                match chi.eval(s.prime) {
                    -1 if s.trace % ell != 0 => return false,
                    -1 => inert += 1,
                    _ => {}
                }
            }
            inert > 0
        })
        .collect();
    match passing.len() {
        0 => CharacterOutcome::NoMatch,
        1 => CharacterOutcome::Found { character: passing[0] },
        _ => CharacterOutcome::Ambiguous { candidates: passing },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Surjective,
    ReducibleCandidate,
    NormalizerCandidate,
    IrregularCandidate,
    Undetermined,
}

impl Verdict {
    pub fn is_candidate(self) -> bool {
        self != Verdict::Surjective
    }
}

/// Certificates used only for l = 2 and l = 3.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SmallEllWitness {
    /// l = 2: a prime with odd trace (Frobenius of order 3).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub odd_trace_prime: Option<u64>,
    /// l = 2: the discriminant is not a rational square.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_nonsquare: Option<bool>,
    /// l = 3: a prime where the 3-division polynomial has exactly one root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub three_cycle_prime: Option<u64>,
    /// l = 3: a prime `p = 2 mod 3` with `a_p` prime to 3.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub four_cycle_prime: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImageEntry {
    pub ell: u64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub character: Option<QuadraticCharacter>,
    pub witnesses: WitnessSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub character_search: Option<CharacterOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_ell: Option<SmallEllWitness>,
    pub notes: Vec<String>,
}

const HEURISTIC_NOTE: &str = "candidate verdicts are heuristic; raise the trace bound to gather more witnesses";

/// Classification for `l >= 5` from a sample stream. Checks run in the
/// order surjective, normalizer, irregular, split reducible, nonsplit reducible.
pub fn classify_samples(samples: &[FrobSample], ell: u64, additive_primes: &[u64]) -> Result<ImageEntry, ClassifyError> {
    let w = collect_witnesses(samples, ell)?;
    let mut entry = ImageEntry {
        ell,
        verdict: Verdict::Undetermined,
        character: None,
        witnesses: w.clone(),
        character_search: None,
        small_ell: None,
        notes: Vec::new(),
    };
    if certify_surjective(&w) {
        entry.verdict = Verdict::Surjective;
        return Ok(entry);
    }
    entry.notes.push(HEURISTIC_NOTE.to_string());
    let frac = w.zero_trace_fraction();
    if (ZERO_TRACE_WINDOW.0..=ZERO_TRACE_WINDOW.1).contains(&frac) {
        let outcome = extract_normalizer_character(samples, ell, additive_primes);
        let chi = outcome.character();
        entry.character_search = Some(outcome);
        if let Some(chi) = chi {
            entry.verdict = Verdict::NormalizerCandidate;
            entry.character = Some(chi);
            entry.notes.push(format!("zero-trace fraction {frac:.3} lies in the normalizer window"));
            return Ok(entry);
        }
    }
    let small = w.fingerprints.keys().all(|c| c.is_small());
    let unipotent = *w.fingerprints.get(&ProjClass::OneOrEll).unwrap_or(&0) as f64 / w.sampled as f64;
    if small && unipotent <= IRREGULAR_MAX_UNIPOTENT_SHARE {
        entry.verdict = Verdict::IrregularCandidate;
        entry.notes.push("every projective order fingerprint is at most 5".into());
        return Ok(entry);
    }
    if w.disc_nonsquare == 0 {
        entry.verdict = Verdict::ReducibleCandidate;
        entry.notes.push("every Frobenius characteristic polynomial splits mod l".into());
        return Ok(entry);
    }
    if w.disc_square == 0 {
        entry.verdict = Verdict::ReducibleCandidate;
        entry.notes.push("no discriminant is a nonzero square: nonsplit Cartan pattern, reducible over F_l^2".into());
        return Ok(entry);
    }
    Ok(entry)
}

fn psi3_single_root(curve: &CurveQ, p: u64) -> bool {
    let m = BigInt::from(p);
    let r = |n: &BigInt| -> u64 {
        use num_integer::Integer;
        use num_traits::ToPrimitive;
        n.mod_floor(&m).to_u64().expect("residue")
    };
    let (b2, b4, b6, b8) = (r(curve.b2()), r(curve.b4()), r(curve.b6()), r(curve.b8()));
    let coeffs = [3 % p, b2, mod_mul(3, b4, p), mod_mul(3, b6, p), b8];
    let mut roots = 0;
    for x in 0..p {
        let v = coeffs.iter().fold(0u64, |acc, &c| (mod_mul(acc, x, p) + c) % p);
        if v == 0 {
            roots += 1;
            if roots > 1 {
                return false;
            }
        }
    }
    roots == 1
}

fn classify_two(curve: &CurveQ, samples: &[FrobSample], w: WitnessSet) -> ImageEntry {
    let odd = samples.iter().find(|s| s.trace % 2 == 1).map(|s| s.prime);
    let nonsquare = !is_square(curve.disc());
    let witness = SmallEllWitness { odd_trace_prime: odd, disc_nonsquare: Some(nonsquare), ..Default::default() };
    let (verdict, note) = match odd {
        Some(_) if nonsquare => (Verdict::Surjective, "an order-3 Frobenius and a nonsquare discriminant force image S3"),
        None => (Verdict::ReducibleCandidate, "every sampled a_p is even"),
        Some(_) => (Verdict::Undetermined, "discriminant is a square: image inside the cyclic subgroup of order 3"),
    };
    ImageEntry {
        ell: 2,
        verdict,
        character: None,
        witnesses: w,
        character_search: None,
        small_ell: Some(witness),
        notes: vec![note.to_string()],
    }
}

fn classify_three(curve: &CurveQ, samples: &[FrobSample], w: WitnessSet) -> ImageEntry {
    let three = samples.iter().map(|s| s.prime).find(|&p| p >= 5 && psi3_single_root(curve, p));
    let four = samples.iter().find(|s| s.prime % 3 == 2 && s.trace % 3 != 0).map(|s| s.prime);
    let witness = SmallEllWitness { three_cycle_prime: three, four_cycle_prime: four, ..Default::default() };
    let (verdict, note) = if three.is_some() && four.is_some() {
        (Verdict::Surjective, "projective image contains a 3-cycle and a 4-cycle, hence PGL2(F_3), hence GL2(F_3)")
    } else if w.disc_nonsquare == 0 {
        (Verdict::ReducibleCandidate, "every Frobenius characteristic polynomial splits mod 3")
    } else {
        (Verdict::Undetermined, HEURISTIC_NOTE)
    };
    ImageEntry {
        ell: 3,
        verdict,
        character: None,
        witnesses: w,
        character_search: None,
        small_ell: Some(witness),
        notes: vec![note.to_string()],
    }
}

/// Classify the mod-`l` image of a curve from its trace table.
pub fn classify(curve: &CurveQ, table: &TraceTable, ell: u64, additive_primes: &[u64]) -> Result<ImageEntry, ClassifyError> {
    let samples = samples_from_table(table, ell);
    match ell {
        2 => Ok(classify_two(curve, &samples, collect_witnesses(&samples, 2)?)),
        3 => Ok(classify_three(curve, &samples, collect_witnesses(&samples, 3)?)),
        _ => classify_samples(&samples, ell, additive_primes),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImageReport {
    pub curve: String,
    pub scan_bound: u64,
    pub trace_bound: u64,
    pub entries: Vec<ImageEntry>,
}

impl ImageReport {
    pub fn candidates(&self) -> Vec<&ImageEntry> {
        self.entries.iter().filter(|e| e.verdict.is_candidate()).collect()
    }
}

/// Classify every prime `l <= scan_bound`; entries are in increasing `l`.
pub fn classify_curve(
    curve: &CurveQ,
    table: &TraceTable,
    additive_primes: &[u64],
    scan_bound: u64,
) -> Result<ImageReport, ClassifyError> {
    let ells = arith::sieve_primes(scan_bound);
    let entries = ells
        .par_iter()
        .map(|&ell| classify(curve, table, ell, additive_primes))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageReport { curve: curve.id(), scan_bound, trace_bound: table.bound, entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotInSpan {
    pub ell: u64,
    pub character: QuadraticCharacter,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VExceptional {
    pub groups: BTreeMap<i64, Vec<u64>>,
    pub not_in_span: Vec<NotInSpan>,
}

/// All characters in the span of `basis`, including the trivial one.
pub fn character_span(basis: &[QuadraticCharacter]) -> BTreeSet<i64> {
    let mut span = BTreeSet::from([1i64]);
    for b in basis {
        let next: Vec<i64> = span.iter().map(|&d| arith::fundamental_discriminant_of(d * b.discriminant)).collect();
        span.extend(next);
    }
    span
}

/// Group normalizer-type primes by their character when it lies in the
/// span of `basis`; the rest are listed as not in the span.
pub fn v_exceptional_bookkeeping(report: &ImageReport, basis: &[QuadraticCharacter]) -> VExceptional {
    let span = character_span(basis);
    let mut out = VExceptional::default();
    for e in &report.entries {
        if e.verdict != Verdict::NormalizerCandidate {
            continue;
        }
        let Some(chi) = e.character else { continue };
        if span.contains(&chi.discriminant) {
            out.groups.entry(chi.discriminant).or_default().push(e.ell);
        } else {
            out.not_in_span.push(NotInSpan { ell: e.ell, character: chi });
        }
    }
    out
}

/// Sample streams synthesized from subgroups of GL2(F_l), used as an oracle
/// for the classifier.
pub mod synthetic {
    use super::*;
    use crate::gl2::Family;

    /// Character planted on normalizer streams.
    pub const PLANTED_DISCRIMINANT: i64 = -4;
    pub const PLANTED_ADDITIVE: [u64; 1] = [2];

    fn is_normalizer(f: Family) -> bool {
        matches!(f, Family::SplitNormalizer | Family::NonsplitNormalizer)
    }

    fn in_cartan(g: &FamilyGroup, m: &Mat2) -> bool {
        let cartan_family = match g.family {
            Family::SplitNormalizer => Family::SplitCartan,
            _ => Family::NonsplitCartan,
        };
        FamilyGroup::new(cartan_family, g.ell).ok().flatten().is_some_and(|c| c.contains(m))
    }

    /// Attach primes `3, 5, 7, ...` (skipping `l`) to the matrices in order.
    /// For normalizer groups, Cartan elements go to primes with
    /// `(-4/p) = 1` and the other coset to primes with `(-4/p) = -1`.
    pub fn stream(group: &FamilyGroup, matrices: &[Mat2]) -> Vec<FrobSample> {
        let ell = group.ell;
        let sample = |p: u64, m: &Mat2| FrobSample { prime: p, trace: m.trace(), det: m.det() };
        let mut primes = (3u64..).filter(|&p| p != ell && arith::is_prime(p));
        if !is_normalizer(group.family) {
            return matrices.iter().map(|m| sample(primes.next().expect("infinitely many primes"), m)).collect();
        }
        let (mut inner, mut outer): (Vec<Mat2>, Vec<Mat2>) = matrices.iter().partition(|m| in_cartan(group, m));
        inner.reverse();
        outer.reverse();
        let mut out = Vec::with_capacity(matrices.len());
        while !inner.is_empty() || !outer.is_empty() {
            let p = primes.next().expect("infinitely many primes");
            let queue = if arith::kronecker(PLANTED_DISCRIMINANT, p as i64) == -1 { &mut outer } else { &mut inner };
            if let Some(m) = queue.pop() {
                out.push(sample(p, &m));
            }
        }
        out
    }

    /// Stream of every element of the group (small `l`).
    pub fn exhaustive_stream(group: &FamilyGroup) -> Result<Vec<FrobSample>, crate::gl2::Gl2Error> {
        Ok(stream(group, &group.elements()?))
    }

    /// Stream of `n` uniform samples.
    pub fn sampled_stream<R: Rng>(group: &FamilyGroup, n: usize, rng: &mut R) -> Vec<FrobSample> {
        let matrices: Vec<Mat2> = (0..n).map(|_| group.sample(rng)).collect();
        stream(group, &matrices)
    }

    /// Verdict a correct classifier should give on a full stream of the family.
    pub fn expected_verdict(family: Family) -> Verdict {
        match family {
            Family::Gl2 => Verdict::Surjective,
            Family::Borel | Family::SplitCartan | Family::NonsplitCartan => Verdict::ReducibleCandidate,
            Family::SplitNormalizer | Family::NonsplitNormalizer => Verdict::NormalizerCandidate,
            Family::TetrahedralLift | Family::OctahedralLift | Family::IcosahedralLift => Verdict::IrregularCandidate,
            Family::Sl2 | Family::SquareDet => Verdict::Undetermined,
        }
    }

    pub fn classify_stream(samples: &[FrobSample], ell: u64) -> Result<ImageEntry, ClassifyError> {
        classify_samples(samples, ell, &PLANTED_ADDITIVE)
    }
}
