//! End-to-end commands: curve analysis, trace comparison, the bound ladder,
//! the Chebotarev sweep and the GL2 self-test.

use std::path::PathBuf;

use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::arith::prime_discriminants;
use crate::bounds::{self, BoundError, BoundReport, ConstantsProfile, LadderInput};
use crate::cheb_lab::{self, ChebError, Envelope, LeastPrimeDatum};
use crate::classifier::{
    self, v_exceptional_bookkeeping, ClassifyError, ImageReport, QuadraticCharacter,
    VExceptional, Verdict,
};
use crate::curve::{reduction_profile, CurveError, CurveInput, CurveQ, ReductionProfile};
use crate::frobenius::{self, cache, CompareMode, CongruenceCert, DistinguishingResult, FrobError, TraceTable};
use crate::gl2::{classify_subgroup, Family, FamilyGroup, Gl2Error, SubgroupTag};
use crate::hp::Real;

pub const MIN_TRACE_BOUND: u64 = 100;
pub const MIN_SCAN_BOUND: u64 = 37;
pub const DEFAULT_TRACE_BOUND: u64 = 10_000;
/// Automatic scan bounds are never taken below this.
pub const AUTO_SCAN_FLOOR: u64 = 100;
/// Automatic scan bounds are capped here.
pub const AUTO_SCAN_CAP: u64 = 100_000;

#[derive(Debug, Error)]
pub enum Error {
    #[error("curve: {0}")]
    Curve(#[from] CurveError),
    #[error("frobenius: {0}")]
    Frobenius(#[from] FrobError),
    #[error("classifier: {0}")]
    Classify(#[from] ClassifyError),
    #[error("bounds: {0}")]
    Bounds(#[from] BoundError),
    #[error("cheb-lab: {0}")]
    Cheb(#[from] ChebError),
    #[error("gl2: {0}")]
    Gl2(#[from] Gl2Error),
    #[error("config: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Exit status class: 2 for bad input, 3 for a broken internal invariant.
impl Error {
    pub fn exit_code(&self) -> i32 {
        let input = match self {
            Error::Curve(_) | Error::Bounds(_) | Error::Config(_) => true,
            Error::Frobenius(e) => matches!(e, FrobError::Cache { .. } | FrobError::PrimeTooLarge { .. } | FrobError::Curve(_)),
            Error::Cheb(e) => !matches!(e, ChebError::Rescan { .. } | ChebError::Pool(_)),
            Error::Classify(_) | Error::Gl2(_) | Error::Invariant(_) => false,
        };
        if input {
            2
        } else {
            3
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "policy", content = "bound", rename_all = "kebab-case")]
pub enum ScanPolicy {
    /// `ceil(effective single-prime bound)` clamped to `[100, 100000]`.
    Auto,
    Fixed(u64),
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub trace_bound: u64,
    pub scan: ScanPolicy,
    pub profile: ConstantsProfile,
    pub jobs: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            trace_bound: DEFAULT_TRACE_BOUND,
            scan: ScanPolicy::Auto,
            profile: ConstantsProfile::default(),
            jobs: 1,
            cache_dir: None,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trace_bound < MIN_TRACE_BOUND {
            return Err(Error::Config(format!("trace bound must be at least {MIN_TRACE_BOUND}")));
        }
        if let ScanPolicy::Fixed(b) = self.scan {
            if b < MIN_SCAN_BOUND {
                return Err(Error::Config(format!("scan bound must be at least {MIN_SCAN_BOUND}")));
            }
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        self.profile.validate()?;
        Ok(())
    }
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub ainvs: Vec<String>,
    pub b2: String,
    pub b4: String,
    pub b6: String,
    pub b8: String,
    pub c4: String,
    pub c6: String,
    pub disc: String,
    pub j_num: String,
    pub j_den: String,
}

impl CurveSummary {
    pub fn new(curve: &CurveQ, label: Option<String>) -> Self {
        let (jn, jd) = curve.j_invariant();
        CurveSummary {
            id: curve.id(),
            label,
            ainvs: curve.ainvs().iter().map(|a| a.to_string()).collect(),
            b2: curve.b2().to_string(),
            b4: curve.b4().to_string(),
            b6: curve.b6().to_string(),
            b8: curve.b8().to_string(),
            c4: curve.c4().to_string(),
            c6: curve.c6().to_string(),
            disc: curve.disc().to_string(),
            j_num: jn.to_string(),
            j_den: jd.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSummary {
    pub bound: u64,
    pub good_primes: usize,
    pub bad_primes: Vec<u64>,
    pub skipped_primes: Vec<u64>,
}

impl TableSummary {
    fn new(t: &TraceTable) -> Self {
        TableSummary {
            bound: t.bound,
            good_primes: t.len(),
            bad_primes: t.bad_primes.iter().copied().collect(),
            skipped_primes: t.skipped_primes.iter().copied().collect(),
        }
    }
}

/// One bound comparison under the active profile.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub formula: String,
    pub bound: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateEntry {
    pub ell: u64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub character: Option<QuadraticCharacter>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub curve: CurveSummary,
    pub reduction: ReductionProfile,
    pub trace_table: TableSummary,
    pub scan_policy: ScanPolicy,
    pub scan_bound: u64,
    pub scan_notes: Vec<String>,
    pub image: ImageReport,
    pub candidates: Vec<CandidateEntry>,
    #[serde(serialize_with = "crate::report::bigint_str")]
    pub candidate_product: BigInt,
    pub product_comparisons: Vec<Comparison>,
    pub normalizer_characters: VExceptional,
    pub profile: ConstantsProfile,
    pub disclaimer: &'static str,
    pub bounds: BoundReport,
}

impl AnalysisReport {
    pub fn candidate_ells(&self) -> Vec<u64> {
        self.candidates.iter().map(|c| c.ell).collect()
    }
}

fn compare(formula: &str, value: &Real, bound: &Real) -> Comparison {
    Comparison { formula: formula.into(), bound: bound.to_sci(), holds: value <= bound }
}

/// Trace table for `curve`, through the cache when a directory is given.
pub fn trace_table(curve: &CurveQ, profile: &ReductionProfile, bound: u64, jobs: usize, cache_dir: Option<&PathBuf>) -> Result<TraceTable> {
    Ok(match cache_dir {
        Some(dir) => cache::build_trace_table_cached(curve, profile, bound, jobs, dir)?,
        None => frobenius::build_trace_table(curve, profile, bound, jobs)?,
    })
}

pub fn analyze(input: &CurveInput, config: &AnalysisConfig) -> Result<AnalysisReport> {
    config.validate()?;
    in_pool(config.jobs, || analyze_inner(input, config))?
}

fn analyze_inner(input: &CurveInput, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let curve = &input.curve;
    let reduction = reduction_profile(curve, &input.overrides)?;
    let additive = reduction.additive_primes();
    let a_count = reduction.additive_count as u32;
    let ladder = bounds::bound_ladder(&LadderInput::for_curve(reduction.conductor.clone(), a_count), &config.profile)?;
    let eff = bounds::effective_bounds(&reduction.conductor, a_count, &config.profile)?;
    let exp = bounds::explicit_bounds(&reduction.conductor, a_count, &bounds::FieldInvariants::rationals(), &Real::one(), &config.profile)?;

    let mut scan_notes = Vec::new();
    let scan_bound = match config.scan {
        ScanPolicy::Fixed(b) => b,
        ScanPolicy::Auto => {
            let raw = eff.single.ceil_u64().unwrap_or(u64::MAX);
            if raw > AUTO_SCAN_CAP {
                scan_notes.push(format!("effective single-prime bound exceeds {AUTO_SCAN_CAP}; scan capped there"));
            }
            raw.clamp(AUTO_SCAN_FLOOR, AUTO_SCAN_CAP)
        }
    };
    if scan_bound > config.trace_bound {
        scan_notes.push("scan bound exceeds the trace bound; large l see few samples and stay undetermined".into());
    }

    let table = trace_table(curve, &reduction, config.trace_bound, config.jobs, config.cache_dir.as_ref())?;
    let image = classifier::classify_curve(curve, &table, &additive, scan_bound)?;
    if image.entries.iter().any(|e| e.verdict == Verdict::Surjective && e.ell >= 5 && e.witnesses.w_det.is_none()) {
        return Err(Error::Invariant("surjective verdict without a determinant witness".into()));
    }

    let mut candidates = Vec::new();
    let mut product = BigInt::one();
    for e in image.candidates() {
        product *= e.ell;
        let l = Real::from_u64(e.ell);
        candidates.push(CandidateEntry {
            ell: e.ell,
            verdict: e.verdict,
            character: e.character,
            comparisons: vec![compare("effective_single", &l, &eff.single), compare("explicit_single", &l, &exp.single)],
        });
    }
    let pr = Real::from_bigint(&product);
    let product_comparisons = vec![
        compare("effective_product", &pr, &eff.product),
        compare("effective_product_simplified", &pr, &eff.product_simplified),
        compare("explicit_product", &pr, &exp.product),
    ];
    let basis: Vec<QuadraticCharacter> =
        additive.iter().flat_map(|&p| prime_discriminants(p)).filter_map(QuadraticCharacter::new).collect();
    let normalizer_characters = v_exceptional_bookkeeping(&image, &basis);

    Ok(AnalysisReport {
        curve: CurveSummary::new(curve, input.label.clone()),
        reduction,
        trace_table: TableSummary::new(&table),
        scan_policy: config.scan,
        scan_bound,
        scan_notes,
        image,
        candidates,
        candidate_product: product,
        product_comparisons,
        normalizer_characters,
        profile: config.profile.clone(),
        disclaimer: bounds::DEFAULT_PROFILE_DISCLAIMER,
        bounds: ladder,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeResult {
    pub mode: CompareMode,
    pub result: DistinguishingResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CongruenceCert>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub first: String,
    pub second: String,
    pub bound: u64,
    pub results: Vec<ModeResult>,
}

/// Compare two curves' Frobenius data in each requested mode.
pub fn compare_curves(
    first: &CurveInput,
    second: &CurveInput,
    modes: &[CompareMode],
    bound: u64,
    jobs: usize,
    cache_dir: Option<&PathBuf>,
) -> Result<CompareReport> {
    if bound < 2 {
        return Err(Error::Config("comparison bound must be at least 2".into()));
    }
    let tables = [first, second]
        .into_iter()
        .map(|c| {
            let prof = reduction_profile(&c.curve, &c.overrides)?;
            trace_table(&c.curve, &prof, bound, jobs, cache_dir)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut results = Vec::new();
    for &mode in modes {
        let result = frobenius::compare_traces(&tables[0], &tables[1], mode, bound)?;
        let certificate = match &result {
            DistinguishingResult::Found { p, a_first, a_second, .. } => {
                let ra = frobenius::FrobeniusRecord::new(*p, *a_first)?;
                let rb = frobenius::FrobeniusRecord::new(*p, *a_second)?;
                Some(frobenius::congruence_certificate(&ra, &rb, mode)?)
            }
            DistinguishingResult::NotFound { .. } => None,
        };
        if certificate.as_ref().is_some_and(|c| !c.within_bound) {
            return Err(Error::Invariant("trace difference exceeds its size bound".into()));
        }
        results.push(ModeResult { mode, result, certificate });
    }
    Ok(CompareReport { first: first.curve.id(), second: second.curve.id(), bound, results })
}

pub fn bound_report(input: &LadderInput, profile: &ConstantsProfile) -> Result<BoundReport> {
    Ok(bounds::bound_ladder(input, profile)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChebReport {
    pub quadratic_range: u64,
    pub sieve_bound: u64,
    pub envelope: Envelope,
    pub data: Vec<LeastPrimeDatum>,
}

pub fn cheb_sweep(quadratic_range: u64, sieve_bound: u64, jobs: usize) -> Result<ChebReport> {
    if quadratic_range < 3 {
        return Err(Error::Config("quadratic range must be at least 3".into()));
    }
    let data = cheb_lab::quadratic_sweep(quadratic_range, sieve_bound, jobs)?;
    let envelope = cheb_lab::envelope_report(&data)?;
    Ok(ChebReport { quadratic_range, sieve_bound, envelope, data })
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestRow {
    pub ell: u64,
    pub family: Family,
    pub order: usize,
    pub tag: SubgroupTag,
    pub expected_tag: SubgroupTag,
    pub verdict: Verdict,
    pub expected_verdict: Verdict,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub ells: Vec<u64>,
    pub rows: Vec<SelftestRow>,
    pub skipped: Vec<String>,
    pub all_pass: bool,
}

/// Classify every family subgroup both structurally and from its full
/// `(trace, det)` stream, and compare with the family's expected labels.
pub fn gl2_selftest(ells: &[u64], jobs: usize) -> Result<SelftestReport> {
    use rayon::prelude::*;
    for &l in ells {
        if l < 5 || !crate::arith::is_prime(l) {
            return Err(Error::Config(format!("self-test needs primes l >= 5, got {l}")));
        }
    }
    let cases: Vec<(u64, Family)> = ells.iter().flat_map(|&l| Family::ALL.into_iter().map(move |f| (l, f))).collect();
    let run = || -> Result<Vec<(u64, Family, Option<SelftestRow>)>> {
        cases
            .par_iter()
            .map(|&(ell, family)| {
                let Some(group) = FamilyGroup::new(family, ell)? else { return Ok((ell, family, None)) };
                let elements = group.elements()?;
                let class = classify_subgroup(&elements, ell)?;
                let stream = classifier::synthetic::exhaustive_stream(&group)?;
                let verdict = classifier::synthetic::classify_stream(&stream, ell)?.verdict;
                let expected_verdict = classifier::synthetic::expected_verdict(family);
                Ok((
                    ell,
                    family,
                    Some(SelftestRow {
                        ell,
                        family,
                        order: elements.len(),
                        tag: class.tag,
                        expected_tag: family.expected_tag(),
                        verdict,
                        expected_verdict,
                        pass: class.tag == family.expected_tag() && verdict == expected_verdict,
                    }),
                ))
            })
            .collect()
    };
    let outcomes = in_pool(jobs, run)??;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (ell, family, row) in outcomes {
        match row {
            Some(r) => rows.push(r),
            None => skipped.push(format!("{} does not embed mod {ell}", family.name())),
        }
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(SelftestReport { ells: ells.to_vec(), rows, skipped, all_pass })
}
