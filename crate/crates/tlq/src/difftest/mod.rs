//! Differential testing: random programs run directly and through their
//! translation, normaliser and join checks against brute-force oracles,
//! and campaign bookkeeping with JUnit output.

pub mod check;
pub mod gen;
pub mod shrink;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use tlq_core::interp::{Coverage, LINQ_RULES, TRANSACTION_RULES, VALID_RULES};
use tlq_core::model::{Database, Schema, Term, Time};
use tlq_core::surface::{print_program, Decl, SourceProgram};
use tlq_core::typecheck::Dialect;

use crate::engine::Store;
use gen::sub_seed;

/// One program with everything needed to run it.
#[derive(Clone, Debug)]
pub struct Trial {
    pub seed: u64,
    pub check: &'static str,
    pub schema: Schema,
    pub db: Database,
    pub clock: Time,
    pub term: Term,
    pub dialect: Dialect,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrialStats {
    pub coverage: Coverage,
    pub aborted: bool,
    /// Generated candidates discarded as ill-typed before this trial.
    pub rejected: usize,
}

/// A failing input, minimised where possible, ready to reproduce.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counterexample {
    pub seed: u64,
    pub check: &'static str,
    /// Source text with table declarations, accepted by the parser.
    pub program: String,
    /// The starting database in snapshot format.
    pub db: String,
    pub clock: Option<Time>,
    pub reason: String,
}

impl Counterexample {
    pub fn new(trial: &Trial, reason: String) -> Counterexample {
        let mut decls: Vec<Decl> = trial
            .schema
            .tables
            .iter()
            .map(|(name, schema)| Decl::Table {
                name: name.clone(),
                schema: schema.clone(),
            })
            .collect();
        decls.push(Decl::Main(trial.term.clone()));
        let store = Store {
            schema: trial.schema.clone(),
            db: trial.db.clone(),
            clock: None,
        };
        Counterexample {
            seed: trial.seed,
            check: trial.check,
            program: print_program(&SourceProgram { decls }),
            db: store.to_json().to_string(),
            clock: Some(trial.clock),
            reason,
        }
    }
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} seed {}: {}", self.check, self.seed, self.reason)?;
        if let Some(c) = self.clock {
            writeln!(f, "clock: {c}")?;
        }
        if !self.program.is_empty() {
            writeln!(f, "program:\n{}", self.program.trim_end())?;
        }
        if !self.db.is_empty() {
            write!(f, "database:\n{}", self.db.trim_end())?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Match(TrialStats),
    Mismatch(Box<Counterexample>),
}

/// Which property a campaign exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    TheoremT,
    TheoremV,
    Normalizer,
    Join,
    Soundness,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::TheoremT,
        Check::TheoremV,
        Check::Normalizer,
        Check::Join,
        Check::Soundness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::TheoremT => "theorem-t",
            Check::TheoremV => "theorem-v",
            Check::Normalizer => "normalizer",
            Check::Join => "join",
            Check::Soundness => "soundness",
        }
    }

    pub fn run(self, seed: u64) -> Verdict {
        match self {
            Check::TheoremT => check::check_theorem_t(seed),
            Check::TheoremV => check::check_theorem_v(seed),
            Check::Normalizer => check::check_normalizer(seed),
            Check::Join => check::check_join_oracle(seed),
            Check::Soundness => check::check_soundness(seed),
        }
    }

    /// Rules the campaign is expected to exercise.
    pub fn expected_rules(self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = LINQ_RULES.to_vec();
        match self {
            Check::TheoremT => out.extend(TRANSACTION_RULES),
            Check::TheoremV => out.extend(VALID_RULES),
            Check::Soundness => {
                out.extend(TRANSACTION_RULES);
                out.extend(VALID_RULES);
            }
            Check::Normalizer | Check::Join => out.clear(),
        }
        out
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Check, String> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub check: Check,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
}

/// Seed of the `i`th trial. Trial 0 of a seed-0 campaign is the worked
/// example for the theorem checks.
pub fn trial_seed(base: u64, i: u64) -> u64 {
    if base == 0 && i == 0 {
        0
    } else {
        sub_seed(base, i).max(1)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CampaignReport {
    pub check: Option<Check>,
    pub trials: u64,
    pub matched: u64,
    pub aborted: u64,
    pub rejected: u64,
    pub mismatches: Vec<Counterexample>,
    pub coverage: Coverage,
    pub elapsed: Duration,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// Expected rules that never fired.
    pub fn missing_rules(&self) -> Vec<&'static str> {
        let Some(check) = self.check else {
            return Vec::new();
        };
        check
            .expected_rules()
            .into_iter()
            .filter(|r| self.coverage.get(r).copied().unwrap_or(0) == 0)
            .collect()
    }

    /// Fraction of generated candidates that failed to typecheck.
    pub fn rejection_rate(&self) -> f64 {
        let total = self.trials + self.rejected;
        if total == 0 {
            0.0
        } else {
            self.rejected as f64 / total as f64
        }
    }

    fn absorb(&mut self, v: Verdict) {
        self.trials += 1;
        match v {
            Verdict::Match(s) => {
                self.matched += 1;
                self.aborted += u64::from(s.aborted);
                self.rejected += s.rejected as u64;
                for (k, n) in s.coverage {
                    *self.coverage.entry(k).or_default() += n;
                }
            }
            Verdict::Mismatch(c) => self.mismatches.push(*c),
        }
    }

    pub fn summary(&self) -> String {
        let name = self.check.map_or("campaign", Check::name);
        let mut s = format!(
            "{name}: {} trials, {} matched, {} mismatched, {} aborted, {:.1}% rejected, {:.2}s",
            self.trials,
            self.matched,
            self.mismatches.len(),
            self.aborted,
            100.0 * self.rejection_rate(),
            self.elapsed.as_secs_f64()
        );
        let missing = self.missing_rules();
        if !missing.is_empty() {
            let _ = write!(s, "\nrules never exercised: {}", missing.join(", "));
        }
        s
    }

    /// JUnit XML with one test case per mismatch plus one for the campaign.
    pub fn junit(&self) -> String {
        let name = self.check.map_or("campaign", Check::name);
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<testsuite name=\"difftest.{}\" tests=\"{}\" failures=\"{}\" time=\"{:.3}\">",
            xml_escape(name),
            self.trials,
            self.mismatches.len(),
            self.elapsed.as_secs_f64()
        );
        let _ = writeln!(
            out,
            "  <testcase classname=\"difftest.{0}\" name=\"{0}: {1} trials\"/>",
            xml_escape(name),
            self.trials
        );
        for m in &self.mismatches {
            let _ = writeln!(
                out,
                "  <testcase classname=\"difftest.{}\" name=\"seed {}\">",
                xml_escape(name),
                m.seed
            );
            let first = m.reason.lines().next().unwrap_or("");
            let _ = writeln!(
                out,
                "    <failure message=\"{}\">{}</failure>",
                xml_escape(first),
                xml_escape(&m.to_string())
            );
            out.push_str("  </testcase>\n");
        }
        out.push_str("</testsuite>\n");
        out
    }
}

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\n' | '\t' | '\r') => {
                let _ = write!(out, "&#{};", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// Runs `trials` trials across `threads` workers. Results do not depend on
/// the thread count: each trial's seed is fixed by its index and the
/// verdicts are merged in index order.
pub fn run_campaign(cfg: &CampaignConfig) -> CampaignReport {
    let started = Instant::now();
    let threads = cfg.threads.max(1).min(cfg.trials.max(1) as usize);
    let mut verdicts: Vec<(u64, Verdict)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                scope.spawn(move || {
                    (w as u64..cfg.trials)
                        .step_by(threads)
                        .map(|i| (i, cfg.check.run(trial_seed(cfg.seed, i))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("difftest worker panicked"))
            .collect()
    });
    verdicts.sort_by_key(|(i, _)| *i);
    let mut report = CampaignReport {
        check: Some(cfg.check),
        ..CampaignReport::default()
    };
    for (_, v) in verdicts {
        report.absorb(v);
    }
    report.elapsed = started.elapsed();
    report
}

/// Labels of the expected rules, for display.
pub fn rule_names(rules: &[&'static str]) -> BTreeSet<&'static str> {
    rules.iter().copied().collect()
}
