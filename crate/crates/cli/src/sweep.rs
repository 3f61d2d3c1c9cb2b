//! Grid sweeps: one output file per (ξ, N, k) cell and a JSON manifest.
//!
//! The manifest is rewritten after every finished cell. On a rerun with the
//! same settings, cells the manifest lists as done (and whose files exist)
//! are skipped, so an interrupted sweep resumes where it stopped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands;
use crate::config::Params;
use crate::output::{write_atomic, GENERATOR};
use crate::{usage, Command, CsoArgs, Report, RmsArgs, SweepArgs, SweepKind};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub xi: f64,
    pub n: usize,
    pub k: usize,
    pub file: String,
    /// `done`, `invalid` (parameters outside a module's domain) or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub kind: String,
    pub quad_tol: f64,
    pub seed: u64,
    pub format: String,
    /// Every other setting shared by the cells.
    pub parameters: BTreeMap<String, String>,
    pub cells: Vec<CellRecord>,
}

impl Manifest {
    fn same_settings(&self, other: &Manifest) -> bool {
        self.generator == other.generator
            && self.kind == other.kind
            && self.quad_tol.to_bits() == other.quad_tol.to_bits()
            && self.seed == other.seed
            && self.format == other.format
            && self.parameters == other.parameters
    }

    fn sort(&mut self) {
        self.cells.sort_by(|a, b| {
            (a.xi, a.n, a.k)
                .partial_cmp(&(b.xi, b.n, b.k))
                .expect("grid values are finite")
        });
    }
}

fn cell_name(kind: SweepKind, n: usize, k: usize, xi: f64, ext: &str) -> String {
    let kind = format!("{kind:?}").to_lowercase();
    format!("{kind}_n{n}_k{k}_xi{xi}.{ext}")
}

pub fn run(args: &SweepArgs, p: &Params) -> Result<Report> {
    let dir = p
        .out
        .clone()
        .ok_or_else(|| usage("sweep needs --out <directory>"))?;
    let xis = p.xi_values.clone().unwrap_or_else(|| vec![p.xi()]);
    let ns = p.n_values.clone().unwrap_or_else(|| vec![p.n()]);
    let ks = p.k_values.clone().unwrap_or_else(|| vec![p.k()]);
    if xis.is_empty() || ns.is_empty() || ks.is_empty() {
        return Err(usage("sweep grid is empty"));
    }
    if xis.iter().any(|x| !x.is_finite()) {
        return Err(usage("grid values of xi must be finite"));
    }
    std::fs::create_dir_all(&dir)?;
    let format = p.format();

    let shared = Params {
        xi: None,
        n: None,
        k: None,
        xi_values: None,
        n_values: None,
        k_values: None,
        quad_tol: None,
        seed: None,
        format: None,
        ..p.clone()
    };
    let mut manifest = Manifest {
        generator: GENERATOR.to_string(),
        kind: format!("{:?}", args.kind).to_lowercase(),
        quad_tol: p.quad_tol(),
        seed: p.seed(),
        format: format.extension().to_string(),
        parameters: shared.provenance().into_iter().collect(),
        cells: Vec::new(),
    };
    let manifest_path = dir.join(MANIFEST);
    let previous = if args.fresh {
        None
    } else {
        std::fs::read_to_string(&manifest_path)
            .ok()
            .and_then(|text| serde_json::from_str::<Manifest>(&text).ok())
            .filter(|m| m.same_settings(&manifest))
    };

    let mut todo = Vec::new();
    for &xi in &xis {
        for &n in &ns {
            for &k in &ks {
                let file = cell_name(args.kind, n, k, xi, format.extension());
                let done = previous.as_ref().and_then(|m| {
                    m.cells.iter().find(|c| {
                        c.xi.to_bits() == xi.to_bits() && c.n == n && c.k == k && c.file == file
                    })
                });
                match done {
                    Some(c) if c.status == "done" && dir.join(&c.file).is_file() => {
                        manifest.cells.push(c.clone())
                    }
                    _ => todo.push((xi, n, k, file)),
                }
            }
        }
    }
    let skipped = manifest.cells.len();
    let state = Mutex::new(manifest);

    todo.par_iter().try_for_each(|(xi, n, k, file)| -> Result<()> {
        let cell_params = Params {
            xi: Some(*xi),
            n: Some(*n),
            k: Some(*k),
            xi_values: None,
            n_values: None,
            k_values: None,
            out: None,
            ..p.clone()
        };
        let (status, error) = run_cell(args.kind, &cell_params, &dir.join(file));
        let mut m = state.lock().expect("manifest lock poisoned");
        m.cells.push(CellRecord {
            xi: *xi,
            n: *n,
            k: *k,
            file: file.clone(),
            status: status.to_string(),
            error,
        });
        m.sort();
        write_atomic(&manifest_path, &(serde_json::to_string_pretty(&*m)? + "\n"))?;
        Ok(())
    })?;

    let mut manifest = state.into_inner().expect("manifest lock poisoned");
    manifest.sort();
    write_atomic(&manifest_path, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;

    let failed = manifest.cells.iter().filter(|c| c.status == "failed").count();
    let mut report = Report {
        written: todo
            .iter()
            .map(|(_, _, _, f)| dir.join(f))
            .filter(|p| p.is_file())
            .collect(),
        skipped,
    };
    report.written.push(manifest_path);
    eprintln!(
        "sweep: {} cells computed, {} resumed, {} failed",
        todo.len(),
        skipped,
        failed
    );
    if failed > 0 {
        return Err(anyhow!("{failed} sweep cells failed; see {}", dir.join(MANIFEST).display()));
    }
    Ok(report)
}

fn run_cell(kind: SweepKind, p: &Params, path: &Path) -> (&'static str, Option<String>) {
    let command = match kind {
        SweepKind::Modes => Command::Modes,
        SweepKind::Cso => Command::Cso(CsoArgs::default()),
        SweepKind::Rms => Command::Rms(RmsArgs::default()),
    };
    match commands::execute(&command, p) {
        Ok((doc, _)) => match write_atomic(path, &doc.render(p.format())) {
            Ok(()) => ("done", None),
            Err(e) => ("failed", Some(e.to_string())),
        },
        Err(e) => {
            let msg = format!("{e:#}");
            if crate::exit_code(&e) == 2 {
                ("invalid", Some(msg))
            } else {
                ("failed", Some(msg))
            }
        }
    }
}

/// Files a manifest lists as complete.
pub fn completed_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    Ok(manifest
        .cells
        .iter()
        .filter(|c| c.status == "done")
        .map(|c| dir.join(&c.file))
        .collect())
}
