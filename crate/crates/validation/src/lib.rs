//! Scorecard used by the `acceptance` test target.
//!
//! Every criterion prints exactly one `[AC-n] PASS|FAIL ...` line. Soft
//! findings are folded into the detail text of their criterion and never
//! affect the exit status.

use std::process::ExitCode;
use std::time::{Duration, Instant};

#[derive(Debug, Default)]
pub struct Scorecard {
    failed: Vec<String>,
    total: usize,
}

impl Scorecard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records and prints one criterion.
    pub fn record(&mut self, id: &str, passed: bool, detail: impl AsRef<str>) {
        self.total += 1;
        let verdict = if passed { "PASS" } else { "FAIL" };
        println!("[{id}] {verdict} {}", detail.as_ref());
        if !passed {
            self.failed.push(id.to_string());
        }
    }

    pub fn failures(&self) -> &[String] {
        &self.failed
    }

    pub fn finish(self) -> ExitCode {
        if self.failed.is_empty() {
            println!("acceptance: {}/{} criteria passed", self.total, self.total);
            ExitCode::SUCCESS
        } else {
            println!(
                "acceptance: {}/{} criteria passed; failing: {}",
                self.total - self.failed.len(),
                self.total,
                self.failed.join(", ")
            );
            ExitCode::FAILURE
        }
    }
}

/// Runs `f` and returns its value with the elapsed wall-clock time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}
