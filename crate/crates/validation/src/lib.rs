//! A tiny runner for long acceptance checks: each check reports a verdict
//! and a one-line detail, and the suite prints one line per check.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

/// Outcome of one check, with its wall time.
#[derive(Debug, Clone)]
pub struct Record {
    pub name: String,
    pub verdict: Verdict,
    pub elapsed: Duration,
}

/// Runs checks in order. Positional command-line arguments act as substring
/// filters on check names; flags are ignored.
pub struct Suite {
    filters: Vec<String>,
    records: Vec<Record>,
}

impl Suite {
    pub fn from_args() -> Self {
        Suite {
            filters: std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect(),
            records: Vec::new(),
        }
    }

    pub fn selected(&self, name: &str) -> bool {
        self.filters.is_empty() || self.filters.iter().any(|f| name.contains(f.as_str()))
    }

    /// Runs `check` unless filtered out. Errors and panics count as failures.
    pub fn run<F>(&mut self, name: &str, check: F) -> Option<&Record>
    where
        F: FnOnce() -> Result<Verdict, String>,
    {
        if !self.selected(name) {
            return None;
        }
        let start = Instant::now();
        let verdict = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => Verdict::new(false, format!("error: {e}")),
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Verdict::new(false, format!("panic: {msg}"))
            }
        };
        let record = Record {
            name: name.to_string(),
            verdict,
            elapsed: start.elapsed(),
        };
        println!("{}", line(&record));
        self.records.push(record);
        self.records.last()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn finish(self) -> ExitCode {
        let failed = self.records.iter().filter(|r| !r.verdict.passed).count();
        println!(
            "\nacceptance: {} passed, {} failed",
            self.records.len() - failed,
            failed
        );
        if failed == 0 {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

pub fn line(record: &Record) -> String {
    format!(
        "{} {} [{:.1} s] {}",
        if record.verdict.passed { "PASS" } else { "FAIL" },
        record.name,
        record.elapsed.as_secs_f64(),
        record.verdict.detail
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_and_panics_fail() {
        let mut suite = Suite {
            filters: vec![],
            records: vec![],
        };
        suite.run("ok", || Ok(Verdict::new(true, "fine")));
        suite.run("err", || Err("boom".into()));
        suite.run("panic", || panic!("bang"));
        let passed: Vec<bool> = suite.records().iter().map(|r| r.verdict.passed).collect();
        assert_eq!(passed, [true, false, false]);
        assert!(suite.records()[2].verdict.detail.contains("bang"));
    }

    #[test]
    fn filters_select_by_substring() {
        let suite = Suite {
            filters: vec!["box".into()],
            records: vec![],
        };
        assert!(suite.selected("2 box resonance"));
        assert!(!suite.selected("1 homogeneous"));
    }
}
