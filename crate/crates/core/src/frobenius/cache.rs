//! Append-only on-disk trace cache.
//!
//! One file per curve model, `traces-<hash>.csv`:
//!
//! ```text
//! # curve:0,0,1,-1,0
//! 2,-2
//! 3,-3
//! # through:10000
//! ```
//!
//! `# through:N` marks that every good prime up to `N` is present. Writers
//! hold an exclusive lock and append whole lines in one write; a reader
//! ignores a trailing line without its newline. Any other malformed line is
//! an error for the whole file.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{build_trace_table_from, FrobError, FrobeniusRecord, TraceTable};
use crate::curve::{CurveQ, ReductionProfile};

pub const CACHE_DIR_ENV: &str = "EXC_CACHE_DIR";

/// Cache directory from the environment, if set and nonempty.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn cache_path(dir: &Path, curve: &CurveQ) -> PathBuf {
    let digest = Sha256::digest(curve.id().as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("traces-{hex}.csv"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CachedTraces {
    pub records: Vec<FrobeniusRecord>,
    /// Every good prime up to this bound is recorded.
    pub through: u64,
}

fn corrupt(path: &Path, reason: impl Into<String>) -> FrobError {
    FrobError::Cache { path: path.display().to_string(), reason: reason.into() }
}

fn parse(path: &Path, curve: &CurveQ, text: &str) -> Result<CachedTraces, FrobError> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines().enumerate();
    let mut out = CachedTraces::default();
    match lines.next() {
        None => return Ok(out),
        Some((_, header)) => {
            let expected = format!("# curve:{}", curve.id());
            if header.trim_end() != expected {
                return Err(corrupt(path, format!("header '{header}' does not match '{expected}'")));
            }
        }
    }
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim_end();
        if let Some(rest) = line.strip_prefix("# through:") {
            let n: u64 = rest.parse().map_err(|_| corrupt(path, format!("line {lineno}: bad marker")))?;
            if n < out.through || out.records.last().is_some_and(|r| r.p > n) {
                return Err(corrupt(path, format!("line {lineno}: marker out of order")));
            }
            out.through = n;
            continue;
        }
        let (p, a) = line
            .split_once(',')
            .and_then(|(p, a)| Some((p.trim().parse::<u64>().ok()?, a.trim().parse::<i64>().ok()?)))
            .ok_or_else(|| corrupt(path, format!("line {lineno}: expected 'p,a_p', found '{line}'")))?;
        if p <= out.through || out.records.last().is_some_and(|r| r.p >= p) {
            return Err(corrupt(path, format!("line {lineno}: prime {p} out of order")));
        }
        if !crate::arith::is_prime(p) {
            return Err(corrupt(path, format!("line {lineno}: {p} is not prime")));
        }
        let rec = FrobeniusRecord::new(p, a).map_err(|e| corrupt(path, format!("line {lineno}: {e}")))?;
        out.records.push(rec);
    }
    Ok(out)
}

/// Read the cache for `curve`; a missing file is an empty cache.
pub fn load(dir: &Path, curve: &CurveQ) -> Result<CachedTraces, FrobError> {
    let path = cache_path(dir, curve);
    match fs::read_to_string(&path) {
        Ok(text) => parse(&path, curve, &text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(CachedTraces::default()),
        Err(e) => Err(corrupt(&path, e.to_string())),
    }
}

/// Append records above the file's current coverage, then a coverage marker.
pub fn append(dir: &Path, curve: &CurveQ, records: &[FrobeniusRecord], through: u64) -> Result<(), FrobError> {
    let path = cache_path(dir, curve);
    let io = |e: std::io::Error| corrupt(&path, e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    let mut file: File = OpenOptions::new().create(true).read(true).append(true).open(&path).map_err(io)?;
    file.lock().map_err(io)?;
    let mut text = String::new();
    file.seek(SeekFrom::Start(0)).map_err(io)?;
    file.read_to_string(&mut text).map_err(io)?;
    let current = parse(&path, curve, &text)?;
    if current.through >= through {
        return Ok(());
    }
    let complete_len = text.rfind('\n').map_or(0, |i| i + 1);
    if complete_len < text.len() {
        file.set_len(complete_len as u64).map_err(io)?;
    }
    let mut chunk = String::new();
    if complete_len == 0 {
        chunk.push_str(&format!("# curve:{}\n", curve.id()));
    }
    let floor = current.through.max(current.records.last().map_or(0, |r| r.p));
    for r in records.iter().filter(|r| r.p > floor && r.p <= through) {
        chunk.push_str(&format!("{},{}\n", r.p, r.a_p));
    }
    chunk.push_str(&format!("# through:{through}\n"));
    file.write_all(chunk.as_bytes()).map_err(io)?;
    file.flush().map_err(io)?;
    file.unlock().map_err(io)?;
    Ok(())
}

/// Trace table backed by the cache in `dir`: reuse recorded traces, count
/// the rest and append them.
pub fn build_trace_table_cached(
    curve: &CurveQ,
    profile: &ReductionProfile,
    bound: u64,
    jobs: usize,
    dir: &Path,
) -> Result<TraceTable, FrobError> {
    let cached = load(dir, curve)?;
    let through = cached.through.min(bound);
    let table = build_trace_table_from(curve, profile, bound, jobs, cached.records, through)?;
    if cached.through < bound {
        append(dir, curve, &table.records, bound)?;
    }
    Ok(table)
}
