// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::formal::Counterexample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCode {
    ExpectMismatch,
    GuaranteeViolated,
    LogicMismatch,
    IndeterminateLevel,
    Counterexample,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    /// Action path, e.g. `root[2].body[0]`.
    pub path: String,
    pub code: FailureCode,
    pub signal: Option<String>,
    pub observed: Option<String>,
    pub expected: Option<String>,
    /// Simulation time in half clock periods.
    pub time: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: u64,
    pub signal: String,
    pub value: String,
}

/// Outcome of running a program on any target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestReport {
    pub target: String,
    pub verdict: Verdict,
    /// Target-specific status, e.g. `proved` or `no-cex-up-to-bound`.
    pub status: Option<String>,
    pub failures: Vec<Failure>,
    pub errors: Vec<String>,
    pub prints: String,
    pub actions_executed: u64,
    pub seed: Option<u64>,
    pub trace: Vec<TraceEvent>,
    pub counterexample: Option<Counterexample>,
}

impl TestReport {
    pub fn new(target: &str) -> TestReport {
        TestReport {
            target: target.to_string(),
            verdict: Verdict::Pass,
            status: None,
            failures: Vec::new(),
            errors: Vec::new(),
            prints: String::new(),
            actions_executed: 0,
            seed: None,
            trace: Vec::new(),
            counterexample: None,
        }
    }

    /// Recompute the verdict: pass iff no failures and no errors.
    pub fn finish(mut self) -> TestReport {
        self.verdict = if !self.errors.is_empty() {
            Verdict::Error
        } else if !self.failures.is_empty() {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
