//! Batch verification runner over the built-in catalog.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use glob::Pattern;
use rayon::prelude::*;
use serde::Serialize;

use parahyper::catalog::{load_builtin, CatalogEntry, RunSettings, Suite};
use parahyper::report::{Bound, Residual, Verdict};

/// Seed used when neither `--seed` nor `PARAHYPER_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no catalog entry matches `{pattern}`; available: {}", available.join(", "))]
    CaseNotFound { pattern: String, available: Vec<String> },
    #[error(transparent)]
    Core(#[from] parahyper::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub const EXIT_CODE: i32 = 2;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Glob patterns on entry ids; empty selects everything.
    pub cases: Vec<String>,
    /// Suites to run; empty selects each entry's own suites.
    pub suites: Vec<Suite>,
    pub settings: RunSettings,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut settings = RunSettings::default();
        settings.plan.seed = DEFAULT_SEED;
        Self {
            cases: Vec::new(),
            suites: Vec::new(),
            settings,
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.settings
            .plan
            .validate()
            .and_then(|_| self.settings.scheme.validate())
            .map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        let t = &self.settings.tol;
        let all = [
            t.exact,
            t.algebra,
            t.first_derivative,
            t.connection,
            t.nested,
            t.integrable,
            t.bracket,
            t.witness,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CliError::InvalidConfig("tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}

/// One graded identity of one (entry, suite) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub entry: String,
    pub suite: Suite,
    pub identity: String,
    pub anchor: String,
    pub residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub verdict: Verdict,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Row {
    fn new(entry: &str, suite: Suite, r: Residual) -> Self {
        let verdict = r.verdict();
        Self {
            entry: entry.to_string(),
            suite,
            identity: r.identity,
            anchor: r.anchor,
            residual: r.value,
            threshold: r.threshold,
            bound: r.bound,
            verdict,
            samples: r.samples,
            note: r.note,
        }
    }

    /// A computation that raised an error counts as a failed identity.
    fn error(entry: &str, suite: Suite, e: &parahyper::Error) -> Self {
        Self {
            entry: entry.to_string(),
            suite,
            identity: "computation".into(),
            anchor: "check ran to completion".into(),
            residual: f64::NAN,
            threshold: 0.0,
            bound: Bound::AtMost,
            verdict: Verdict::Fail,
            samples: 0,
            note: Some(e.to_string()),
        }
    }
}

/// Per-pair timing, kept out of the JSON so reports stay reproducible.
#[derive(Debug, Clone)]
pub struct PairTiming {
    pub entry: String,
    pub suite: Suite,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub rows: Vec<Row>,
    pub timings: Vec<PairTiming>,
}

impl RunOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failures().next().is_some())
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct ConfigEcho<'a> {
            cases: &'a [String],
            suites: &'a [Suite],
            settings: &'a RunSettings,
        }
        #[derive(Serialize)]
        struct Document<'a> {
            version: u32,
            seed: u64,
            config: ConfigEcho<'a>,
            reports: &'a [Row],
        }
        let doc = Document {
            version: 1,
            seed: self.config.settings.plan.seed,
            config: ConfigEcho {
                cases: &self.config.cases,
                suites: &self.config.suites,
                settings: &self.config.settings,
            },
            reports: &self.rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.timings {
            let rows: Vec<&Row> = self.rows.iter().filter(|r| r.entry == t.entry && r.suite == t.suite).collect();
            let failed = rows.iter().any(|r| r.verdict == Verdict::Fail);
            let _ = writeln!(
                out,
                "{} {} / {} ({:.2?})",
                if failed { "FAIL" } else { "ok  " },
                t.entry,
                t.suite,
                t.elapsed
            );
            for r in rows {
                let cmp = match r.bound {
                    Bound::AtMost => format!("<= {:.1e}", r.threshold),
                    Bound::AtLeast => format!(">= {:.1e}", r.threshold),
                    Bound::Informational => "info".to_string(),
                };
                let _ = write!(
                    out,
                    "    {:<4} {:<70} {:>10.3e} {:>10} n={}",
                    verdict_label(r.verdict),
                    r.identity,
                    r.residual,
                    cmp,
                    r.samples
                );
                if let Some(n) = &r.note {
                    let _ = write!(out, "  [{n}]");
                }
                out.push('\n');
            }
        }
        let total = self.rows.len();
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{} pairs, {} identities, {} failed (seed {})",
            self.timings.len(),
            total,
            failed,
            self.config.settings.plan.seed
        );
        out
    }
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Skip => "skip",
    }
}

/// Entries selected by the case patterns; no patterns selects everything.
pub fn select<'a>(catalog: &'a [CatalogEntry], config: &RunConfig) -> Result<Vec<&'a CatalogEntry>, CliError> {
    let mut patterns = Vec::new();
    for c in &config.cases {
        let p = Pattern::new(c).map_err(|e| CliError::InvalidConfig(format!("bad case pattern `{c}`: {e}")))?;
        patterns.push((c.as_str(), p));
    }
    let mut chosen = BTreeSet::new();
    if patterns.is_empty() {
        chosen.extend(catalog.iter().map(|e| e.id.as_str()));
    }
    for (text, p) in &patterns {
        let hits: Vec<&str> = catalog
            .iter()
            .filter(|e| p.matches(&e.id))
            .map(|e| e.id.as_str())
            .collect();
        if hits.is_empty() {
            return Err(CliError::CaseNotFound {
                pattern: text.to_string(),
                available: catalog.iter().map(|e| e.id.clone()).collect(),
            });
        }
        chosen.extend(hits);
    }
    Ok(catalog.iter().filter(|e| chosen.contains(e.id.as_str())).collect())
}

/// Runs the selected (entry, suite) pairs and collects sorted rows.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let catalog = load_builtin(&config.settings)?;
    run_entries(&catalog, config)
}

/// Like [`run`], over an explicit set of entries.
pub fn run_entries(catalog: &[CatalogEntry], config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let entries = select(catalog, config)?;
    let pairs: Vec<(&CatalogEntry, Suite)> = entries
        .iter()
        .flat_map(|e| {
            e.suites()
                .into_iter()
                .filter(|s| config.suites.is_empty() || config.suites.contains(s))
                .map(move |s| (*e, s))
        })
        .collect();
    if pairs.is_empty() {
        return Err(CliError::InvalidConfig(
            "none of the selected suites applies to the selected cases".into(),
        ));
    }
    let settings = config.settings;
    let work = |(e, s): &(&CatalogEntry, Suite)| {
        let start = Instant::now();
        let rows = match e.run(*s, &settings) {
            Ok(Some(report)) => report.items.into_iter().map(|r| Row::new(&e.id, *s, r)).collect(),
            Ok(None) => Vec::new(),
            Err(err) => vec![Row::error(&e.id, *s, &err)],
        };
        (
            rows,
            PairTiming {
                entry: e.id.clone(),
                suite: *s,
                elapsed: start.elapsed(),
            },
        )
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<(Vec<Row>, PairTiming)> = pool.install(|| pairs.par_iter().map(work).collect());

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (r, t) in results {
        rows.extend(r);
        timings.push(t);
    }
    rows.sort_by(|a, b| (&a.entry, a.suite, &a.identity).cmp(&(&b.entry, b.suite, &b.identity)));
    timings.sort_by(|a, b| (&a.entry, a.suite).cmp(&(&b.entry, b.suite)));
    Ok(RunOutcome {
        config: config.clone(),
        rows,
        timings,
    })
}

/// One line per catalog entry: id, dimension, suites and annotation.
pub fn list_text(catalog: &[CatalogEntry]) -> String {
    let mut out = String::new();
    for e in catalog {
        let suites: Vec<&str> = e.suites().iter().map(|s| s.name()).collect();
        let _ = writeln!(
            out,
            "{:<22} dim {:>2}  [{}]  {}",
            e.id,
            e.dim,
            suites.join(","),
            e.annotation
        );
    }
    out
}
