//! Matrix exports as `row col re im` triplets and the sampled potential as
//! little-endian `f64` pairs in row-major grid order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Model;
use crate::error::{Error, Result};
use crate::fock::{self, FockBasis};
use crate::linalg::{dense, LinearOperator, C64};
use crate::one_particle::OneParticleVector;
use crate::particle::write_binary;
use crate::pauli_fierz::assemble_ta;

use super::physics::hamiltonian;

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExportManifest {
    pub written: Vec<String>,
    /// Operators not written, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::param("out", format!("{}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| io(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

/// Nonzero entries of `op` in row-major order.
pub fn write_dense_triplets(op: &dyn LinearOperator, limit: usize, mut w: impl Write) -> Result<()> {
    let m = dense::materialize(op, limit)?;
    let map = |e| Error::Breakdown(format!("write failed: {e}"));
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if v != C64::new(0.0, 0.0) {
                writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im).map_err(map)?;
            }
        }
    }
    w.flush().map_err(map)
}

/// Coupling vector of the exported `a*(h)` and `φ(h)`: the form factor on
/// every slot.
pub fn export_vector(model: &Model) -> OneParticleVector {
    let g = &model.modes;
    OneParticleVector::new((0..g.slots()).map(|s| model.form_factor[g.slot_mode(s)]).collect())
}

pub fn export_all(model: &Model, dir: &Path) -> Result<ExportManifest> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut manifest = ExportManifest::default();
    let cfg = &model.config;
    let basis = FockBasis::new(model.modes.slots(), cfg.fock.n_max, cfg.budget.composite)?;
    let h = export_vector(model);
    let fock_ops = [
        ("fock_field_energy.txt", fock::field_energy(&basis, &model.modes)?),
        ("fock_number.txt", fock::number_operator(&basis)),
        ("fock_creation.txt", fock::creation(&basis, &model.modes, &h)?),
        ("fock_field.txt", fock::field(&basis, &model.modes, &h)?),
    ];
    for (name, op) in &fock_ops {
        let (path, w) = create(dir, name)?;
        op.matrix().write_triplets(w).map_err(|e| io(&path, e))?;
        manifest.written.push(name.to_string());
    }

    let limit = cfg.budget.dense;
    let ta = assemble_ta(&model.space, &model.profiles, cfg.checks.coupling)?;
    let pf = hamiltonian(model, 1.0, true)?;
    let composite: [(&str, &dyn LinearOperator); 2] = [("ta.txt", &ta.explicit), ("pauli_fierz.txt", &pf)];
    for (name, op) in composite {
        if op.dim() > limit {
            manifest
                .skipped
                .push((name.into(), format!("dimension {} exceeds the dense budget {limit}", op.dim())));
            continue;
        }
        let (_, w) = create(dir, name)?;
        write_dense_triplets(op, limit, w)?;
        manifest.written.push(name.into());
    }

    match &model.potential {
        Some(v) => {
            let (path, w) = create(dir, "potential.bin")?;
            let values: Vec<C64> = v.iter().map(|x| C64::new(*x, 0.0)).collect();
            write_binary(&values, w).map_err(|e| io(&path, e))?;
            manifest.written.push("potential.bin".into());
        }
        None => manifest.skipped.push(("potential.bin".into(), "no potential configured".into())),
    }
    Ok(manifest)
}
