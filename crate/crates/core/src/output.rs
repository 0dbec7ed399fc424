//! Run artifacts: CSV tables, VTK snapshots and a hashed manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::experiments::RunRecord;
use crate::mesh::Mesh;

/// Writes files into one directory and records each in `manifest.txt`.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.files.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(path)
    }

    /// Writes `manifest.txt`: one `<sha256>  <file>` line per artifact, in
    /// name order.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.files.sort();
        let mut s = String::new();
        for (name, hash) in &self.files {
            let _ = writeln!(s, "{hash}  {name}");
        }
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// VTK legacy ASCII unstructured grid with nodal scalars `u` and `v`.
pub fn vtk_snapshot(mesh: &Mesh, t: f64, u: &[f64], v: &[f64]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nsnapshot t={t}\nASCII\nDATASET POLYDATA");
    let _ = writeln!(s, "POINTS {} double", mesh.num_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "POLYGONS {} {}", mesh.num_triangles(), 4 * mesh.num_triangles());
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.num_nodes());
    for (name, values) in [("u", u), ("v", v)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in values {
            let _ = writeln!(s, "{x}");
        }
    }
    s
}

/// Nodal table `x,y,u,v`.
pub fn nodal_csv(mesh: &Mesh, u: &[f64], v: &[f64]) -> String {
    let mut s = String::from("x,y,u,v\n");
    for ((p, a), b) in mesh.nodes.iter().zip(u).zip(v) {
        let _ = writeln!(s, "{},{},{a},{b}", p[0], p[1]);
    }
    s
}

/// Time series `t,activated_fraction,components`.
pub fn record_csv(record: &RunRecord) -> String {
    let mut s = String::from("t,activated_fraction,components\n");
    for ((t, f), c) in record.times.iter().zip(&record.activated_fraction).zip(&record.component_count) {
        let _ = writeln!(s, "{t:.6},{f:.6},{c}");
    }
    s
}
