//! File formats: structure constants, paths and path families, fixed-point
//! models, polytopes and torus lattices.

use nalgebra::Matrix2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use symdesk_core::dh::{FixedPoint, HamiltonianS1Model, Polytope};
use symdesk_core::lie::{LieAlgebra, MatrixRealization};
use symdesk_core::path::{GridPath, PathFamily};
use symdesk_core::spectral::FlatTorusSpec;

use crate::error::CliError;
use crate::output::{f, OutputDir, Table};

pub const FAMILY_MANIFEST: &str = "family.json";

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: path.display().to_string(),
        message: format!("field `{}`: {}", e.path(), e.inner()),
    })
}

fn invalid(path: &Path, err: symdesk_core::Error) -> CliError {
    CliError::Schema { path: path.display().to_string(), message: err.to_string() }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub dim: usize,
    pub label: String,
    /// `[i, j, k, value]` with zero-based `i < j`.
    pub c: Vec<(usize, usize, usize, f64)>,
}

pub fn load_algebra(path: &Path) -> Result<LieAlgebra, CliError> {
    let file: AlgebraFile = read_json(path)?;
    for (n, &(i, j, _, _)) in file.c.iter().enumerate() {
        if i >= j {
            return Err(CliError::Schema {
                path: path.display().to_string(),
                message: format!("field `c[{n}]`: entries must have i < j, got ({i}, {j})"),
            });
        }
    }
    LieAlgebra::new(file.dim, &file.label, &file.c).map_err(|e| invalid(path, e))
}

/// A standard algebra by label, or the contents of a structure-constant file
/// (which has no matrix realization).
pub fn resolve_algebra(
    label: Option<&str>,
    file: Option<&Path>,
) -> Result<(Arc<LieAlgebra>, Option<MatrixRealization>), CliError> {
    match (label, file) {
        (Some(_), Some(_)) => Err(CliError::config("give either --algebra or --constants, not both")),
        (_, Some(p)) => Ok((Arc::new(load_algebra(p)?), None)),
        (l, None) => {
            let (a, r) = LieAlgebra::standard(l.unwrap_or("so3"))?;
            Ok((a, Some(r)))
        }
    }
}

pub fn path_table(path: &GridPath) -> Table {
    let n = path.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut t = Table::new(&header_refs);
    let steps = path.steps();
    for k in 0..=steps {
        let mut row = vec![f(k as f64 / steps as f64)];
        row.extend(path.at(k).iter().map(|&x| f(x)));
        t.push(row);
    }
    t
}

pub fn load_path(path: &Path, algebra: Arc<LieAlgebra>) -> Result<GridPath, CliError> {
    let schema = |message: String| CliError::Schema { path: path.display().to_string(), message };
    let mut reader = csv::Reader::from_path(path).map_err(|e| schema(e.to_string()))?;
    let header = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    let n = algebra.dim();
    let expected: Vec<String> = std::iter::once("t".to_string()).chain((1..=n).map(|i| format!("x{i}"))).collect();
    if header.iter().ne(expected.iter().map(|s| s.as_str())) {
        return Err(schema(format!("header must be {}", expected.join(","))));
    }
    let mut ts = Vec::new();
    let mut samples = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| schema(e.to_string()))?;
        let line = row + 2;
        let mut vals = Vec::with_capacity(n + 1);
        for (col, cell) in rec.iter().enumerate() {
            vals.push(cell.trim().parse::<f64>().map_err(|e| schema(format!("line {line}, column {}: {e}", col + 1)))?);
        }
        ts.push(vals[0]);
        samples.extend_from_slice(&vals[1..]);
    }
    if ts.len() < 2 {
        return Err(schema("a path needs at least two rows".to_string()));
    }
    let steps = ts.len() - 1;
    for (k, &t) in ts.iter().enumerate() {
        if (t - k as f64 / steps as f64).abs() > 1e-12 {
            return Err(schema(format!("line {}: t = {t} is not on the uniform grid", k + 2)));
        }
    }
    GridPath::new(algebra, steps, samples).map_err(|e| invalid(path, e))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyManifest {
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub algebra: String,
}

pub fn family_file(j: usize) -> String {
    format!("path_{j:04}.csv")
}

/// Writes `family` under `subdir` of the output directory.
pub fn write_family(out: &mut OutputDir, subdir: &str, family: &PathFamily) -> Result<(), CliError> {
    let first = &family.paths()[0];
    let manifest = json!({"S": family.s_steps(), "N": first.steps(), "algebra": first.algebra().label()});
    out.write_json(&format!("{subdir}/{FAMILY_MANIFEST}"), &manifest)?;
    for (j, p) in family.paths().iter().enumerate() {
        out.write_csv(&format!("{subdir}/{}", family_file(j)), &path_table(p))?;
    }
    Ok(())
}

pub fn load_family(dir: &Path) -> Result<PathFamily, CliError> {
    let m: FamilyManifest = read_json(&dir.join(FAMILY_MANIFEST))?;
    let (alg, _) = LieAlgebra::standard(&m.algebra).map_err(|e| invalid(&dir.join(FAMILY_MANIFEST), e))?;
    let mut paths = Vec::with_capacity(m.s + 1);
    for j in 0..=m.s {
        let p = load_path(&dir.join(family_file(j)), alg.clone())?;
        if p.steps() != m.n {
            return Err(CliError::Schema {
                path: dir.join(family_file(j)).display().to_string(),
                message: format!("expected N = {}, found {}", m.n, p.steps()),
            });
        }
        paths.push(p);
    }
    PathFamily::new(paths).map_err(|e| invalid(dir, e))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub value: f64,
    pub weights: Vec<i64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub halfdim: usize,
    pub label: String,
    pub points: Vec<PointFile>,
}

impl ModelFile {
    pub fn points(&self) -> Vec<FixedPoint> {
        self.points.iter().map(|p| FixedPoint::new(p.value, p.weights.clone())).collect()
    }
}

pub fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    read_json(path)
}

pub fn load_model(path: &Path) -> Result<HamiltonianS1Model, CliError> {
    let m = read_model(path)?;
    HamiltonianS1Model::new(m.halfdim, &m.label, m.points()).map_err(|e| invalid(path, e))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeFile {
    pub vertices: Vec<Vec<f64>>,
}

pub fn load_polytope(path: &Path) -> Result<Polytope, CliError> {
    let p: PolytopeFile = read_json(path)?;
    let dims: Vec<usize> = p.vertices.iter().map(|v| v.len()).collect();
    let result = match dims.first() {
        Some(1) if dims.iter().all(|&d| d == 1) && p.vertices.len() == 2 => {
            Polytope::segment(p.vertices[0][0], p.vertices[1][0])
        }
        Some(2) if dims.iter().all(|&d| d == 2) => Polytope::polygon(p.vertices.iter().map(|v| [v[0], v[1]]).collect()),
        _ => {
            return Err(CliError::Schema {
                path: path.display().to_string(),
                message: "vertices must be two 1-vectors or at least three 2-vectors".to_string(),
            })
        }
    };
    result.map_err(|e| invalid(path, e))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TorusFile {
    /// Rows of the lattice matrix; its columns are the basis of `Γ`.
    pub lattice: [[f64; 2]; 2],
}

pub fn load_torus(path: &Path) -> Result<FlatTorusSpec, CliError> {
    let t: TorusFile = read_json(path)?;
    let l = t.lattice;
    FlatTorusSpec::new(Matrix2::new(l[0][0], l[0][1], l[1][0], l[1][1])).map_err(|e| invalid(path, e))
}
