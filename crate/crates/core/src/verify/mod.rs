//! Verification engine: residuals of the commutator identities, operator
//! norm bounds, best constants of the relative bounds and the coupling sweep.
//!
//! Every check reports a [`CheckResult`] whose pass flag depends only on
//! `(kind, measured, bound, tolerance)`.

use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Error;
use crate::linalg::{norm, LinearOperator, C64, ZERO};
use crate::rng;

pub mod bounds;
pub mod composite;
pub mod export;
pub mod fock_checks;
pub mod physics;
pub mod report;
pub mod suite;
pub mod sweep;

pub use crate::linalg::krylov::{operator_norm, NormEstimate};
pub use bounds::{relative_bound_constants, reverse_bound_constants, step2_lower_bound, BoundEstimate, BoundKind, Step2Estimate};
pub use report::Report;
pub use suite::{run_checks, spectrum, SpectrumReport};
pub use sweep::{coupling_sweep, SweepReport, SweepRow};

/// How `measured` is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `measured ≤ tolerance`.
    Residual,
    /// `measured ≤ bound + tolerance`.
    AtMost,
    /// `measured ≥ bound − tolerance`.
    AtLeast,
}

impl CheckKind {
    pub fn passes(self, measured: f64, bound: f64, tolerance: f64) -> bool {
        if !measured.is_finite() {
            return false;
        }
        match self {
            CheckKind::Residual => measured <= tolerance,
            CheckKind::AtMost => measured <= bound + tolerance,
            CheckKind::AtLeast => measured >= bound - tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub family: String,
    /// The identity or inequality being checked.
    pub identity: String,
    pub kind: CheckKind,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub safe_sector: String,
    pub passed: bool,
    pub wall_time_s: f64,
    pub details: Value,
}

impl From<CheckResult> for Vec<CheckResult> {
    fn from(c: CheckResult) -> Self {
        vec![c]
    }
}

/// Accumulates the context of one check until its outcome is known.
pub struct Check {
    name: String,
    family: String,
    identity: String,
    safe_sector: String,
    details: Map<String, Value>,
    start: Instant,
}

impl Check {
    pub fn new(family: &str, name: impl Into<String>, identity: &str) -> Self {
        Check {
            name: name.into(),
            family: family.into(),
            identity: identity.into(),
            safe_sector: "all".into(),
            details: Map::new(),
            start: Instant::now(),
        }
    }

    pub fn safe(mut self, sector: impl Into<String>) -> Self {
        self.safe_sector = sector.into();
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.details.insert(key.into(), v);
    }

    fn finish(self, kind: CheckKind, measured: f64, bound: f64, tolerance: f64) -> CheckResult {
        CheckResult {
            passed: kind.passes(measured, bound, tolerance),
            name: self.name,
            family: self.family,
            identity: self.identity,
            kind,
            measured,
            bound,
            tolerance,
            safe_sector: self.safe_sector,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            details: Value::Object(self.details),
        }
    }

    pub fn residual(self, measured: f64, tolerance: f64) -> CheckResult {
        self.finish(CheckKind::Residual, measured, 0.0, tolerance)
    }

    pub fn at_most(self, measured: f64, bound: f64, tolerance: f64) -> CheckResult {
        self.finish(CheckKind::AtMost, measured, bound, tolerance)
    }

    pub fn at_least(self, measured: f64, bound: f64, tolerance: f64) -> CheckResult {
        self.finish(CheckKind::AtLeast, measured, bound, tolerance)
    }

    /// A check whose computation itself failed.
    pub fn error(mut self, err: &Error) -> CheckResult {
        self.detail("error", err.to_string());
        self.finish(CheckKind::Residual, f64::NAN, 0.0, 0.0)
    }
}

/// Unwraps a computation inside a check body, turning errors into a failed
/// result.
#[macro_export]
#[doc(hidden)]
macro_rules! try_check {
    ($check:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return $check.error(&err).into(),
        }
    };
}

/// `count` seeded Gaussian vectors, each passed through `project` when given.
pub fn probes(
    seed: u64,
    label: &str,
    dim: usize,
    count: usize,
    project: Option<&dyn LinearOperator>,
) -> Vec<Vec<C64>> {
    let mut r = rng::stream(seed, label);
    (0..count)
        .map(|_| {
            let v = rng::complex_gaussian(&mut r, dim);
            match project {
                Some(p) => p.apply_vec(&v),
                None => v,
            }
        })
        .collect()
}

/// `max ‖(L − R)ψ‖ / ‖ψ‖` over the probes.
pub fn max_residual(lhs: &dyn LinearOperator, rhs: &dyn LinearOperator, probes: &[Vec<C64>]) -> f64 {
    probes
        .iter()
        .map(|psi| {
            let n = norm(psi);
            if n == 0.0 {
                return 0.0;
            }
            let a = lhs.apply_vec(psi);
            let b = rhs.apply_vec(psi);
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            d / n
        })
        .fold(0.0, f64::max)
}

/// `max ‖(L − R)ψ‖ / ‖Lψ‖` over the probes.
pub fn max_relative_residual(lhs: &dyn LinearOperator, rhs: &dyn LinearOperator, probes: &[Vec<C64>]) -> f64 {
    probes
        .iter()
        .map(|psi| {
            let a = lhs.apply_vec(psi);
            let b = rhs.apply_vec(psi);
            let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            let n = norm(&a);
            if n == 0.0 {
                d
            } else {
                d / n
            }
        })
        .fold(0.0, f64::max)
}

/// Zero operator of a given dimension.
pub struct ZeroOp(pub usize);

impl LinearOperator for ZeroOp {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, _x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y)
    }
}

/// Relative disagreement `|a − b| / max(|a|, |b|, floor)`.
pub fn relative_gap(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_is_a_function_of_the_numbers() {
        assert!(CheckKind::Residual.passes(1e-13, 0.0, 1e-12));
        assert!(!CheckKind::Residual.passes(f64::NAN, 0.0, 1e-12));
        assert!(CheckKind::AtMost.passes(2.0, 2.0, 0.0));
        assert!(!CheckKind::AtMost.passes(2.1, 2.0, 1e-10));
        assert!(CheckKind::AtLeast.passes(1e-3, 1e-6, 0.0));
        assert!(!CheckKind::AtLeast.passes(1e-13, 1e-6, 0.0));
    }

    #[test]
    fn check_records_outcome() {
        let mut c = Check::new("ccr", "x", "[a,a*]=1").safe("≤ N−2");
        c.detail("samples", 3);
        let r = c.residual(1e-14, 1e-12);
        assert!(r.passed);
        assert_eq!(r.details["samples"], 3);
        assert_eq!(r.safe_sector, "≤ N−2");
    }
}
