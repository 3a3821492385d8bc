//! Acceptance criteria on the desk model, one PASS/FAIL line each.
//!
//! Tolerances, sample counts and runtime limits are pinned here rather than
//! read from the library defaults.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pfcert::config::{Model, RunConfig};
use pfcert::verify::{self, report, CheckResult, SweepReport};

const SWEEP_E: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

fn pinned() -> RunConfig {
    let mut c = RunConfig::default();
    let t = &mut c.tolerances;
    t.exact = 1e-12;
    t.resolvent = 1e-10;
    t.iterative = 1e-8;
    t.ta_identity = 1e-11;
    t.resubstitution_slack = 1e-9;
    t.bound = 1e-10;
    t.noncommuting_floor = 1e-6;
    t.finite_difference = 1e-8;
    let k = &mut c.checks;
    k.samples = 50;
    k.bound_samples = 20;
    k.probes = 100;
    k.form_pairs = 50;
    k.resubstitution_probes = 200;
    k.alphas = vec![0.1, 1.0, 10.0];
    k.sweep_e = SWEEP_E.to_vec();
    k.kato.oracle_points = 16;
    c.fock.check_n_max = 5;
    c
}

fn model(families: &[&str]) -> Model {
    let mut c = pinned();
    c.only = families.iter().map(|s| s.to_string()).collect();
    c.build().expect("desk model builds")
}

struct Outcome {
    passed: bool,
    summary: String,
}

fn from_checks(checks: &[CheckResult], extra: impl FnOnce(&[CheckResult]) -> Result<(), String>) -> Outcome {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let worst = checks
        .iter()
        .filter(|c| c.kind == verify::CheckKind::Residual)
        .map(|c| c.measured)
        .fold(0.0f64, f64::max);
    let extra = extra(checks);
    let passed = failed.is_empty() && !checks.is_empty() && extra.is_ok();
    let mut summary = format!("{} checks, worst residual {worst:.2e}", checks.len());
    if !failed.is_empty() {
        summary.push_str(&format!("; failed: {}", failed.join(", ")));
    }
    if let Err(e) = extra {
        summary.push_str(&format!("; {e}"));
    }
    Outcome { passed, summary }
}

fn require(checks: &[CheckResult], names: &[&str]) -> Result<(), String> {
    for n in names {
        if !checks.iter().any(|c| c.name.starts_with(n)) {
            return Err(format!("missing check {n}"));
        }
    }
    Ok(())
}

fn family(families: &[&str], names: &'static [&'static str]) -> Outcome {
    let checks = verify::run_checks(&model(families));
    from_checks(&checks, |c| require(c, names))
}

fn sweep_outcome(sweep: &SweepReport, repeat_csv: &str) -> Outcome {
    let csv = report::sweep_csv(sweep);
    from_checks(&sweep.checks, |_| {
        if sweep.rows.len() != SWEEP_E.len() {
            return Err(format!("{} rows", sweep.rows.len()));
        }
        if sweep.rows.iter().any(|r| r.c1.is_none() || r.d1.is_none()) {
            return Err("a constant is infinite".into());
        }
        if csv != repeat_csv {
            return Err("CSV differs between identical runs".into());
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let mut sweep: Option<SweepReport> = None;
    let criteria: Vec<(&str, Duration, Box<dyn FnOnce(&mut Option<SweepReport>) -> Outcome>)> = vec![
        (
            "1 CCR and field commutators",
            Duration::from_secs(10),
            Box::new(|_| family(&["ccr"], &["ccr_mixed", "field_commutator", "composite_field_commutator"])),
        ),
        (
            "2 field-energy commutators",
            Duration::from_secs(10),
            Box::new(|_| family(&["field_energy"], &["field_energy_commutator", "composite_field_energy_commutator"])),
        ),
        (
            "3 field norm bounds",
            Duration::from_secs(30),
            Box::new(|_| {
                family(
                    &["norm_bounds"],
                    &["field_bound", "quadratic_field_bound", "single_mode_dense_oracle", "annihilation_bound"],
                )
            }),
        ),
        (
            "4 Leibniz rule",
            Duration::from_secs(30),
            Box::new(|_| family(&["leibniz"], &["leibniz_rule", "coupling_derivative_fd"])),
        ),
        (
            "5 resolvent identities",
            Duration::from_secs(60),
            Box::new(|_| family(&["resolvent"], &["e_identity", "double_commutator", "f_alpha", "form_identity"])),
        ),
        (
            "6 T_A identity",
            Duration::from_secs(30),
            Box::new(|_| family(&["ta_identity"], &["ta_explicit", "ta_expansion", "ta_quadratic_form"])),
        ),
        (
            "7 relative-bound constants",
            Duration::from_secs(300),
            Box::new(|_| {
                family(
                    &["relative_bound"],
                    &["free_case_constants", "relative_constant_dense_oracle", "relative_resubstitution"],
                )
            }),
        ),
        (
            "8 coupling sweep",
            Duration::from_secs(600),
            Box::new(|slot| {
                let m = model(&[]);
                let first = verify::coupling_sweep(&m, &SWEEP_E).expect("sweep runs");
                let second = verify::coupling_sweep(&m, &SWEEP_E).expect("sweep runs");
                let out = sweep_outcome(&first, &report::sweep_csv(&second));
                *slot = Some(first);
                out
            }),
        ),
        (
            "9 non-commuting components",
            Duration::from_secs(30),
            Box::new(|_| family(&["noncommuting"], &["noncommuting_asymmetric", "noncommuting_symmetric"])),
        ),
        (
            "10 Pauli-Fierz operator and Coulomb bound",
            Duration::from_secs(300),
            Box::new(|slot| {
                let mut checks = verify::run_checks(&model(&["pauli_fierz", "kato"]));
                if let Some(s) = slot.as_ref() {
                    checks.extend(s.checks.iter().filter(|c| c.name.starts_with("ground_energy")).cloned());
                }
                from_checks(&checks, |c| {
                    require(c, &["hamiltonian_hermitian", "ground_energy", "kato_monotone", "kato_dense_oracle"])?;
                    if slot.is_none() {
                        return Err("no sweep ground energies".into());
                    }
                    Ok(())
                })
            }),
        ),
    ];

    let mut all = true;
    for (name, limit, run) in criteria {
        let t = Instant::now();
        let out = run(&mut sweep);
        let elapsed = t.elapsed();
        let ok = out.passed && elapsed <= limit;
        all &= ok;
        println!(
            "{} criterion {name}: {} ({:.1}s of {}s)",
            if ok { "PASS" } else { "FAIL" },
            out.summary,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
