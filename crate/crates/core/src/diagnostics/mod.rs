//! Executable stability checks: dominance predicates, growth and factor-norm
//! bounds, modification-free thresholds, and BEAM conditioning bounds.

mod dominance;
mod growth;
mod modified;

pub use dominance::{
    block_col_margins, block_dominance, block_row_margins, col_margins, dominance,
    h_matrix_tau_max, modification_free_bound, row_margins, scaled_dominance, BlockDominance,
    DominanceReport, ModFreeBound, PointwiseDominance,
};
pub use growth::{
    check_beam_growth, check_factor_bounds, check_growth_bounds, check_interlacing,
    growth_trace_norms, Factorization,
};
pub use modified::{determinant_bounds, psi_and_capacitance, zielke_growth_check, PsiReport};

use serde::Serialize;

/// Relative slack allowed on the measured side of every comparison.
pub const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured <= bound·(1 + SLACK)`.
    AtMost,
    /// Both sides are natural logarithms; `measured <= bound + ln(1 + SLACK)`.
    LogAtMost,
    /// `|measured − bound| <= tol·|bound|`.
    Close { tol: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub comparison: Comparison,
    pub satisfied: bool,
    /// Free-form description of the run (matrix, blocking, threshold).
    pub context: String,
}

impl BoundCheck {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::build(name, measured, bound, Comparison::AtMost)
    }

    pub fn log_at_most(name: impl Into<String>, log_measured: f64, log_bound: f64) -> Self {
        Self::build(name, log_measured, log_bound, Comparison::LogAtMost)
    }

    pub fn close(name: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        Self::build(name, measured, expected, Comparison::Close { tol })
    }

    fn build(name: impl Into<String>, measured: f64, bound: f64, comparison: Comparison) -> Self {
        let satisfied = match comparison {
            Comparison::AtMost => measured <= bound * (1.0 + SLACK),
            Comparison::LogAtMost => measured <= bound + SLACK.ln_1p(),
            Comparison::Close { tol } => (measured - bound).abs() <= tol * bound.abs(),
        };
        Self {
            name: name.into(),
            measured,
            bound,
            comparison,
            satisfied,
            context: String::new(),
        }
    }
}

/// A check that could not be evaluated.
#[derive(Clone, Debug, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub checks: Vec<BoundCheck>,
    pub skipped: Vec<Skipped>,
}

impl CheckReport {
    pub fn push(&mut self, c: BoundCheck) {
        self.checks.push(c);
    }

    pub fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.skipped.push(Skipped {
            name: name.into(),
            reason: reason.into(),
        });
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
        self.skipped.extend(other.skipped);
    }

    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }

    pub fn find(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn with_context(mut self, ctx: &str) -> Self {
        for c in &mut self.checks {
            c.context = ctx.to_string();
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_is_relative() {
        assert!(BoundCheck::at_most("x", 1.0 + 1e-10, 1.0).satisfied);
        assert!(!BoundCheck::at_most("x", 1.0 + 1e-8, 1.0).satisfied);
        assert!(BoundCheck::log_at_most("x", 700.0, 700.0).satisfied);
        assert!(BoundCheck::close("x", 64.0 * (1.0 + 1e-9), 64.0, 1e-8).satisfied);
        assert!(!BoundCheck::close("x", 63.0, 64.0, 1e-8).satisfied);
        assert!(!BoundCheck::at_most("x", f64::NAN, 1.0).satisfied);
    }

    #[test]
    fn report_bookkeeping() {
        let mut r = CheckReport::default();
        r.push(BoundCheck::at_most("a", 1.0, 2.0));
        r.skip("b", "not traced");
        assert!(r.all_satisfied());
        r.push(BoundCheck::at_most("c", 3.0, 2.0));
        assert_eq!(r.failures().count(), 1);
        let r = r.with_context("ctx");
        assert_eq!(r.find("c").unwrap().context, "ctx");
    }
}
