//! Field output: legacy ASCII VTK snapshots and the per-step CSV of
//! diagnostics. Formatting is fixed at 9 significant digits so identical
//! runs produce byte-identical files.

use crate::diagnostics::{csv_row, EnergyReport, CSV_HEADER};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::potential_solver::Potentials;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

fn fmt9(v: f64) -> String {
    format!("{v:.9e}")
}

/// Write the bulk fields `phi` and `mu` as a legacy ASCII VTK unstructured
/// grid of triangles.
pub fn write_vtk(mesh: &Mesh, phi: &[f64], pots: &Potentials, path: &Path) -> Result<()> {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nphase field snapshot\nASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} 0", fmt9(p[0]), fmt9(p[1]));
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.cells.len(), 4 * mesh.cells.len());
    for c in &mesh.cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.cells.len());
    for _ in &mesh.cells {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
    s.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    for v in phi {
        let _ = writeln!(s, "{}", fmt9(*v));
    }
    s.push_str("SCALARS mu double 1\nLOOKUP_TABLE default\n");
    for v in &pots.p {
        let _ = writeln!(s, "{}", fmt9(*v));
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Write the boundary potential `mu_gamma` as a second VTK file over the
/// boundary polyline.
pub fn write_boundary_vtk(mesh: &Mesh, pots: &Potentials, path: &Path) -> Result<()> {
    let nb = mesh.n_boundary_vertices;
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nboundary snapshot\nASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nb} double");
    for p in &mesh.vertices[..nb] {
        let _ = writeln!(s, "{} {} 0", fmt9(p[0]), fmt9(p[1]));
    }
    let _ = writeln!(
        s,
        "CELLS {} {}",
        mesh.boundary_faces.len(),
        3 * mesh.boundary_faces.len()
    );
    for f in &mesh.boundary_faces {
        let _ = writeln!(s, "2 {} {}", f[0], f[1]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.boundary_faces.len());
    for _ in &mesh.boundary_faces {
        s.push_str("3\n"); // VTK_LINE
    }
    let _ = writeln!(s, "POINT_DATA {nb}");
    s.push_str("SCALARS mu_gamma double 1\nLOOKUP_TABLE default\n");
    for v in &pots.p_gamma {
        let _ = writeln!(s, "{}", fmt9(*v));
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Streaming CSV writer for per-step diagnostics.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write_step(
        &mut self,
        step: usize,
        time: f64,
        newton_iters: usize,
        report: &EnergyReport,
    ) -> Result<()> {
        writeln!(self.out, "{}", csv_row(step, time, newton_iters, report))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
