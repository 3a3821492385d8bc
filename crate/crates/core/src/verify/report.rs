//! Run report: the resolved configuration, every check result and the
//! optional sweep, rendered as JSON, an aligned text table and CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{Model, RunConfig};
use crate::one_particle::Vec3;

use super::sweep::SweepReport;
use super::CheckResult;

const SCOPE_NOTES: &[&str] = &[
    "Nelson commutator theorem, closedness and form-core statements are not tested: they concern unbounded operators",
    "the coupling sweep is a finite-dimensional analogy probe for graph-norm equivalence, not a self-adjointness test",
    "the rescaling-by-conjugation reduction is not implemented",
    "polarization frames are a gauge choice; the frame used is recorded under `modes`",
];

#[derive(Debug, Clone, Serialize)]
pub struct ModeRecord {
    pub momentum: Vec3,
    pub omega: f64,
    pub weight: f64,
    pub polarizations: Vec<Vec3>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FamilySummary {
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub families: BTreeMap<String, FamilySummary>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    pub dims: BTreeMap<String, usize>,
    pub modes: Vec<ModeRecord>,
    pub scope_notes: Vec<String>,
    pub summary: Summary,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepReport>,
}

impl Report {
    pub fn new(model: &Model, mut checks: Vec<CheckResult>, sweep: Option<SweepReport>) -> Self {
        if let Some(s) = &sweep {
            checks.extend(s.checks.iter().cloned());
        }
        let grid = &model.modes;
        let modes = (0..grid.modes())
            .map(|m| ModeRecord {
                momentum: *grid.momentum(m),
                omega: grid.dispersion(m),
                weight: grid.weight(m),
                polarizations: (0..grid.polarization_count())
                    .filter_map(|l| grid.polarization(m, l).copied())
                    .collect(),
            })
            .collect();
        let mut dims = BTreeMap::new();
        dims.insert("fock".into(), model.space.fock.dim());
        dims.insert("spinless".into(), model.space.dim());
        dims.insert("pauli_fierz".into(), model.spin_space.dim());
        let mut families: BTreeMap<String, FamilySummary> = BTreeMap::new();
        for c in &checks {
            let f = families.entry(c.family.clone()).or_default();
            if c.passed {
                f.passed += 1;
            } else {
                f.failed += 1;
            }
        }
        let passed = checks.iter().filter(|c| c.passed).count();
        Report {
            version: env!("CARGO_PKG_VERSION").into(),
            config: model.config.clone(),
            dims,
            modes,
            scope_notes: SCOPE_NOTES.iter().map(|s| s.to_string()).collect(),
            summary: Summary {
                total: checks.len(),
                passed,
                failed: checks.len() - passed,
                families,
                wall_time_s: checks.iter().map(|c| c.wall_time_s).sum(),
            },
            checks,
            sweep,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check with aligned columns.
    pub fn table(&self) -> String {
        table(&self.checks)
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.3e}")
    }
}

pub fn table(checks: &[CheckResult]) -> String {
    let header = ["status", "family", "check", "measured", "bound", "tol", "sector"];
    let rows: Vec<[String; 7]> = checks
        .iter()
        .map(|c| {
            [
                if c.passed { "PASS" } else { "FAIL" }.to_string(),
                c.family.clone(),
                c.name.clone(),
                fmt_num(c.measured),
                fmt_num(c.bound),
                fmt_num(c.tolerance),
                c.safe_sector.clone(),
            ]
        })
        .collect();
    let mut width = header.map(|h| h.chars().count());
    for r in &rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - cell.chars().count();
            if (3..6).contains(&i) {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            } else {
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, &header.map(String::from));
    for r in &rows {
        line(&mut out, r);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(out, "{passed}/{} checks passed", checks.len());
    out
}

fn csv_num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "inf".into(),
    }
}

/// `e,C1,C2,D1,D2,ground_energy,b_step2`, one row per coupling; a missing
/// constant is written as `inf`.
pub fn sweep_csv(sweep: &SweepReport) -> String {
    let mut out = String::from("e,C1,C2,D1,D2,ground_energy,b_step2\n");
    for r in &sweep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.e,
            csv_num(r.c1),
            csv_num(r.c2),
            csv_num(r.d1),
            csv_num(r.d2),
            r.ground_energy.map_or("nan".into(), |g| format!("{}", g.value)),
            r.step2.b,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Check;

    #[test]
    fn table_is_aligned() {
        let checks = vec![
            Check::new("ccr", "a", "x").residual(1e-14, 1e-12),
            Check::new("norm_bounds", "longer_name", "y").at_most(3.0, 2.0, 0.0),
        ];
        let t = table(&checks);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("PASS"));
        assert!(lines[2].starts_with("FAIL"));
        let col = lines[0].find("check").unwrap();
        assert_eq!(lines[2].find("longer_name"), Some(col));
        assert_eq!(lines[3], "1/2 checks passed");
    }
}
