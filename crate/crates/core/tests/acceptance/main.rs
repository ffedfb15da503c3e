//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.

mod ablation;
mod determinism;
mod family;
mod gradients;
mod lemma;
mod normalization;
mod propositions;
mod ranking;

use std::process::ExitCode;
use std::time::Instant;

pub type Error = Box<dyn std::error::Error>;

/// Outcome of one criterion: whether it holds and a one-line summary of the
/// measured values.
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = fn() -> Result<Verdict, Error>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("family_end_to_end", family::run),
        ("loss_zero_soundness", propositions::run),
        ("disjoint_measure_lemma", lemma::run),
        ("gradient_checks", gradients::run),
        ("normalization", normalization::run),
        ("synthetic_subsumption_ranking", ranking::run),
        ("ablation_consistency", ablation::run),
        ("determinism", determinism::run),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let verdict = run().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name} ({secs:.2}s): {}", verdict.detail);
        if !verdict.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
