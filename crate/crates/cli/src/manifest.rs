//! Instance bundles: a directory holding the defining matrices in MatrixMarket
//! format next to a `manifest.json` describing how they were produced.
//!
//! GEVP bundles contain `a.mtx` and `m.mtx`; CCA bundles contain `cx.mtx`,
//! `cy.mtx` and `cxy.mtx`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gstiefel_core::problems::{CcaInstance, GevpInstance};
use serde::{Deserialize, Serialize};

use crate::mtx::{read_mtx, write_mtx};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum Manifest {
    Gevp {
        /// `diag`, `random` or `user`.
        kind: String,
        n: usize,
        p: usize,
        seed: Option<u64>,
    },
    Cca {
        m: usize,
        n: usize,
        p: usize,
        samples: Option<usize>,
        seed: Option<u64>,
        /// Diagonal of the weight matrix `N`.
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub enum Bundle {
    Gevp(GevpInstance),
    Cca(CcaInstance),
}

pub fn save_gevp(dir: &Path, inst: &GevpInstance, kind: &str, seed: Option<u64>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_mtx(&dir.join("a.mtx"), inst.a())?;
    write_mtx(&dir.join("m.mtx"), inst.m())?;
    let manifest = Manifest::Gevp {
        kind: kind.to_owned(),
        n: inst.n(),
        p: inst.p(),
        seed,
    };
    write_manifest(dir, &manifest)
}

pub fn save_cca(dir: &Path, inst: &CcaInstance, samples: Option<usize>, seed: Option<u64>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_mtx(&dir.join("cx.mtx"), inst.cx())?;
    write_mtx(&dir.join("cy.mtx"), inst.cy())?;
    write_mtx(&dir.join("cxy.mtx"), inst.cxy())?;
    let (m, n) = inst.dims();
    let manifest = Manifest::Cca {
        m,
        n,
        p: inst.p(),
        samples,
        seed,
        weights: inst.weights().to_vec(),
    };
    write_manifest(dir, &manifest)
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_bundle(dir: &Path) -> Result<(Manifest, Bundle)> {
    let manifest = read_manifest(dir)?;
    let bundle = match &manifest {
        Manifest::Gevp { n, p, .. } => {
            let inst = GevpInstance::new(read_mtx(&dir.join("a.mtx"))?, read_mtx(&dir.join("m.mtx"))?, *p)?;
            if inst.n() != *n {
                bail!("manifest says n = {n}, matrices are {}×{}", inst.n(), inst.n());
            }
            Bundle::Gevp(inst)
        }
        Manifest::Cca { m, n, weights, .. } => {
            let inst = CcaInstance::new(
                read_mtx(&dir.join("cx.mtx"))?,
                read_mtx(&dir.join("cy.mtx"))?,
                read_mtx(&dir.join("cxy.mtx"))?,
                weights.clone(),
            )?;
            if inst.dims() != (*m, *n) {
                bail!("manifest says (m, n) = ({m}, {n}), matrices give {:?}", inst.dims());
            }
            Bundle::Cca(inst)
        }
    };
    Ok((manifest, bundle))
}
