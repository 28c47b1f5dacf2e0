//! Reading and writing systems: Matrix Market blocks with a JSON manifest,
//! or a single JSON file of dense arrays.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precond::BlockStrategy;
use crate::system::{Dims, DoubleSaddleSystem};

const BLOCK_KEYS: [&str; 5] = ["a", "b", "c", "d", "e"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFiles {
    pub a: PathBuf,
    pub b: PathBuf,
    pub c: PathBuf,
    pub d: PathBuf,
    pub e: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dims: Dims,
    /// Block file paths, relative to the manifest's directory.
    pub blocks: BlockFiles,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseSystem {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str, path: &Path) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::parse(path, format!("block {name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl DenseSystem {
    pub fn from_system(s: &DoubleSaddleSystem) -> Self {
        Self {
            a: matrix_to_rows(s.a()),
            b: matrix_to_rows(s.b()),
            c: matrix_to_rows(s.c()),
            d: matrix_to_rows(s.d()),
            e: matrix_to_rows(s.e()),
        }
    }

    pub fn to_system(&self, path: &Path) -> Result<DoubleSaddleSystem> {
        let blocks = [&self.a, &self.b, &self.c, &self.d, &self.e];
        let mut mats = BLOCK_KEYS
            .iter()
            .zip(blocks)
            .map(|(k, rows)| rows_to_matrix(rows, k, path))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let mut next = || mats.next().expect("five blocks");
        DoubleSaddleSystem::new(next(), next(), next(), next(), next())
    }
}

/// Matrix Market text for a dense matrix, coordinate format, nonzeros only.
pub fn matrix_market_string(m: &DMatrix<f64>) -> String {
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nnz);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
            }
        }
    }
    out
}

pub fn write_matrix_market(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, matrix_market_string(m))?;
    Ok(())
}

/// Parses coordinate (real, integer or pattern; general or symmetric) and
/// array (real; general or symmetric) Matrix Market files.
pub fn parse_matrix_market(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let err = |msg: String| Error::parse(path, msg);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err("empty file".into()))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(err(format!("bad header line: {header}")));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(format!("unsupported format {other}"))),
    };
    let pattern = match h[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" if coordinate => true,
        other => return Err(err(format!("unsupported field {other}"))),
    };
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(format!("unsupported symmetry {other}"))),
    };
    let mut data = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = data.next().ok_or_else(|| err("missing size line".into()))?;
    let size: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(format!("bad size token {t}"))))
        .collect::<Result<_>>()?;
    let num = |t: &str| t.parse::<f64>().map_err(|_| err(format!("bad number {t}")));

    if coordinate {
        let [rows, cols, nnz] = size[..] else {
            return Err(err(format!("coordinate size line needs 3 values: {size_line}")));
        };
        let mut m = DMatrix::zeros(rows, cols);
        let mut seen = 0;
        for line in data {
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() < if pattern { 2 } else { 3 } {
                return Err(err(format!("short entry line: {line}")));
            }
            let i: usize = tok[0].parse().map_err(|_| err(format!("bad row index {}", tok[0])))?;
            let j: usize = tok[1].parse().map_err(|_| err(format!("bad column index {}", tok[1])))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(err(format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            let v = if pattern { 1.0 } else { num(tok[2])? };
            m[(i - 1, j - 1)] += v;
            if symmetric && i != j {
                m[(j - 1, i - 1)] += v;
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(err(format!("expected {nnz} entries, found {seen}")));
        }
        Ok(m)
    } else {
        let [rows, cols] = size[..] else {
            return Err(err(format!("array size line needs 2 values: {size_line}")));
        };
        let values: Vec<f64> = data.flat_map(str::split_whitespace).map(num).collect::<Result<_>>()?;
        let mut m = DMatrix::zeros(rows, cols);
        if symmetric {
            let mut it = values.iter();
            for j in 0..cols {
                for i in j..rows {
                    let v = *it.next().ok_or_else(|| err("too few array entries".into()))?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        } else {
            if values.len() != rows * cols {
                return Err(err(format!("expected {} array entries, found {}", rows * cols, values.len())));
            }
            m = DMatrix::from_column_slice(rows, cols, &values);
        }
        Ok(m)
    }
}

pub fn read_matrix_market(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text, path)
}

/// Writes `A.mtx` … `E.mtx` and `manifest.json` into `dir`, returning the
/// manifest path.
pub fn write_manifest(dir: &Path, system: &DoubleSaddleSystem, description: Option<String>) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let blocks = [system.a(), system.b(), system.c(), system.d(), system.e()];
    for (key, m) in BLOCK_KEYS.iter().zip(blocks) {
        write_matrix_market(&dir.join(format!("{}.mtx", key.to_ascii_uppercase())), m)?;
    }
    let manifest = Manifest {
        dims: system.dims(),
        blocks: BlockFiles {
            a: "A.mtx".into(),
            b: "B.mtx".into(),
            c: "C.mtx".into(),
            d: "D.mtx".into(),
            e: "E.mtx".into(),
        },
        description,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

pub fn write_dense_json(path: &Path, system: &DoubleSaddleSystem) -> Result<()> {
    fs::write(path, serde_json::to_string(&DenseSystem::from_system(system))? + "\n")?;
    Ok(())
}

/// Loads either a manifest (has a `blocks` key) or a dense all-in-one file.
pub fn load_system(path: &Path) -> Result<DoubleSaddleSystem> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    if value.get("blocks").is_some() {
        let manifest: Manifest = serde_json::from_value(value).map_err(|e| Error::parse(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let files = &manifest.blocks;
        let read = |p: &PathBuf| read_matrix_market(&base.join(p));
        let system = DoubleSaddleSystem::new(
            read(&files.a)?,
            read(&files.b)?,
            read(&files.c)?,
            read(&files.d)?,
            read(&files.e)?,
        )?;
        if system.dims() != manifest.dims {
            return Err(Error::parse(
                path,
                format!("manifest dims {:?} disagree with blocks {:?}", manifest.dims, system.dims()),
            ));
        }
        Ok(system)
    } else {
        let dense: DenseSystem = serde_json::from_value(value).map_err(|e| Error::parse(path, e.to_string()))?;
        dense.to_system(path)
    }
}

/// Paths of user-supplied approximations to `A`, `S1` and `S2`; a missing
/// entry means the exact block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserPreconditionerFile {
    #[serde(default)]
    pub a: Option<PathBuf>,
    #[serde(default)]
    pub s1: Option<PathBuf>,
    #[serde(default)]
    pub s2: Option<PathBuf>,
}

/// Reads a user preconditioner description; relative paths are resolved
/// against the file's directory.
pub fn load_user_preconditioner(path: &Path) -> Result<[BlockStrategy; 3]> {
    let text = fs::read_to_string(path)?;
    let spec: UserPreconditionerFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let block = |p: &Option<PathBuf>| -> Result<BlockStrategy> {
        match p {
            None => Ok(BlockStrategy::Exact),
            Some(p) => Ok(BlockStrategy::User(read_matrix_market(&base.join(p))?)),
        }
    };
    Ok([block(&spec.a)?, block(&spec.s1)?, block(&spec.s2)?])
}
