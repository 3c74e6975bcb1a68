//! Plain-text renderings of the reports.

use std::fmt::Write;

use exc_core::bounds::{BoundReport, ConstantsProfile};
use exc_core::cheb_lab::Envelope;
use exc_core::frobenius::{CompareMode, DistinguishingResult};
use exc_core::gl2::SubgroupTag;
use exc_core::pipeline::{AnalysisReport, CompareReport, SelftestReport};

fn kebab<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

fn tag_name(tag: &SubgroupTag) -> String {
    match tag {
        SubgroupTag::Irregular(p) => format!("irregular-{}", kebab(p)),
        other => kebab(other).trim_matches(|c| c == '{' || c == '}').replace("\"tag\":", "").replace('"', ""),
    }
}

fn profile_block(out: &mut String, profile: &ConstantsProfile, disclaimer: &str) {
    let _ = writeln!(out, "constants profile{}:", if profile.is_default() { " (default)" } else { "" });
    for (name, c) in profile.named() {
        let _ = writeln!(out, "  {name:<26} {}", c.to_sci_digits(12));
    }
    let _ = writeln!(out, "  {:<26} {}", "reducible_single_exponent", profile.reducible_single_exponent);
    let _ = writeln!(out, "note: {disclaimer}");
}

pub fn analysis(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "curve       [{}]{}", r.curve.id, r.curve.label.as_ref().map(|l| format!("  {l}")).unwrap_or_default());
    let _ = writeln!(out, "disc        {}", r.curve.disc);
    let _ = writeln!(out, "j           {}/{}", r.curve.j_num, r.curve.j_den);
    let _ = writeln!(out, "conductor   {}  (additive primes: {})", r.reduction.conductor, r.reduction.additive_count);
    for e in &r.reduction.entries {
        let _ = writeln!(out, "  p = {:<6} {:<24} exponent {}", e.p, kebab(&e.kind), e.conductor_exponent);
    }
    let _ = writeln!(out, "traces      {} good primes up to {}", r.trace_table.good_primes, r.trace_table.bound);
    let _ = writeln!(out, "scan        l <= {}", r.scan_bound);
    for n in &r.scan_notes {
        let _ = writeln!(out, "  note: {n}");
    }
    let _ = writeln!(out, "\n{:<6} verdict", "l");
    for e in &r.image.entries {
        let _ = writeln!(out, "{:<6} {}", e.ell, kebab(&e.verdict));
    }
    let _ = writeln!(out);
    if r.candidates.is_empty() {
        let _ = writeln!(out, "candidates  none");
    }
    for c in &r.candidates {
        let chi = c.character.map(|x| format!("  character {}", x.discriminant)).unwrap_or_default();
        let _ = writeln!(out, "candidate   l = {} {}{}", c.ell, kebab(&c.verdict), chi);
        for cmp in &c.comparisons {
            let _ = writeln!(out, "  l <= {:<28} {:<5} ({})", cmp.formula, cmp.holds, cmp.bound);
        }
    }
    let _ = writeln!(out, "product     {}", r.candidate_product);
    for cmp in &r.product_comparisons {
        let _ = writeln!(out, "  product <= {:<28} {:<5} ({})", cmp.formula, cmp.holds, cmp.bound);
    }
    let _ = writeln!(out);
    profile_block(&mut out, &r.profile, r.disclaimer);
    out
}

pub fn comparison(r: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "first   [{}]\nsecond  [{}]\nbound   {}", r.first, r.second, r.bound);
    for m in &r.results {
        let mode = match m.mode {
            CompareMode::Plain => "plain",
            CompareMode::Adams12 => "adams12",
        };
        match &m.result {
            DistinguishingResult::Found { p, a_first, a_second, difference, .. } => {
                let _ = writeln!(out, "{mode:<8} p = {p}: a_p {a_first} vs {a_second}, difference {difference}");
            }
            DistinguishingResult::NotFound { primes_checked } => {
                let _ = writeln!(out, "{mode:<8} no difference at {primes_checked} common good primes");
            }
        }
        if let Some(c) = &m.certificate {
            let _ = writeln!(out, "         |difference| <= {}: {}", c.bound, c.within_bound);
            let _ = writeln!(out, "         {}", c.clause);
        }
    }
    out
}

pub fn bounds(r: &BoundReport) -> String {
    let mut out = String::new();
    let width = r.entries.iter().map(|e| e.formula.len()).max().unwrap_or(0);
    for e in &r.entries {
        let value = if e.exact { e.value.clone() } else { format!("{:.12e}", e.approx) };
        let _ = writeln!(out, "{:<width$}  {:<20}  {}", e.formula, value, e.anchor);
    }
    let b = &r.bootstrap;
    let _ = writeln!(
        out,
        "\nbootstrap: p = {}, theta(p) = {}, premise {}, p <= implied bound: {}",
        b.prime,
        b.theta.to_sci_digits(12),
        b.premise_holds,
        b.holds
    );
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let _ = writeln!(out);
    profile_block(&mut out, &r.profile, r.disclaimer);
    out
}

pub fn envelope(e: &Envelope) -> String {
    format!(
        "# {}\n# data points: {}  max ratio {} at D = {} (target {}, p = {})\n# p50 {}  p90 {}  p99 {}\n",
        e.label,
        e.count,
        e.max_ratio.to_sci_digits(12),
        e.max_field,
        e.max_target,
        e.max_prime,
        e.p50.to_sci_digits(8),
        e.p90.to_sci_digits(8),
        e.p99.to_sci_digits(8)
    )
}

pub fn selftest(r: &SelftestReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<5} {:<20} {:>6}  {:<24} {:<22} pass", "l", "family", "order", "tag", "verdict");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "{:<5} {:<20} {:>6}  {:<24} {:<22} {}",
            row.ell,
            row.family.name(),
            row.order,
            tag_name(&row.tag),
            kebab(&row.verdict),
            row.pass
        );
    }
    for s in &r.skipped {
        let _ = writeln!(out, "skipped: {s}");
    }
    let _ = writeln!(out, "all pass: {}", r.all_pass);
    out
}
