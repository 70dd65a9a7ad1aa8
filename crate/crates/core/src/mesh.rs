//! 2D simplicial meshes with an induced boundary partition.
//!
//! Vertices are numbered boundary-first: every vertex with index below
//! `n_boundary_vertices` lies on the boundary, all others are strictly
//! interior. The loader renumbers arbitrary input meshes into this
//! convention and records the permutation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mesh {
    /// 2D vertex coordinates, boundary vertices first.
    pub vertices: Vec<[f64; 2]>,
    /// Triangles as vertex-index triples, positively oriented.
    pub cells: Vec<[usize; 3]>,
    /// Boundary edges as vertex-index pairs.
    pub boundary_faces: Vec<[usize; 2]>,
    /// Number of boundary vertices (all have index below this count).
    pub n_boundary_vertices: usize,
    /// Maximum cell diameter.
    pub h_max: f64,
}

/// What the loader did to the raw input.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    /// `permutation[old_index] = new_index`; identity when the input was
    /// already boundary-first.
    pub permutation: Vec<usize>,
    pub renumbered: bool,
    /// Cells whose orientation was flipped to positive signed area.
    pub reoriented_cells: Vec<usize>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.vertices.len() - self.n_boundary_vertices
    }

    pub fn cell_area(&self, index: usize) -> Result<f64> {
        let cell = self.cells.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.cells.len(),
        })?;
        Ok(signed_area(
            self.vertices[cell[0]],
            self.vertices[cell[1]],
            self.vertices[cell[2]],
        ))
    }

    pub fn boundary_face_length(&self, index: usize) -> Result<f64> {
        let face = self.boundary_faces.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.boundary_faces.len(),
        })?;
        let a = self.vertices[face[0]];
        let b = self.vertices[face[1]];
        Ok(((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt())
    }

    /// Shape-regularity constant max over cells of diam(K) / (2 * inradius).
    pub fn shape_regularity(&self) -> f64 {
        let mut worst = 0.0f64;
        for cell in &self.cells {
            let (a, b, c) = (
                self.vertices[cell[0]],
                self.vertices[cell[1]],
                self.vertices[cell[2]],
            );
            let la = dist(b, c);
            let lb = dist(a, c);
            let lc = dist(a, b);
            let area = signed_area(a, b, c);
            let inradius = 2.0 * area / (la + lb + lc);
            let diam = la.max(lb).max(lc);
            worst = worst.max(diam / (2.0 * inradius));
        }
        worst
    }

    /// Write the mesh in the `chmesh 2d` ASCII format (boundary-first).
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("chmesh 2d\n");
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e}", v[0], v[1]);
        }
        let _ = writeln!(out, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
        }
        let _ = writeln!(out, "boundary {}", self.boundary_faces.len());
        for f in &self.boundary_faces {
            let _ = writeln!(out, "{} {}", f[0], f[1]);
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Load and validate a mesh from the `chmesh 2d` format.
pub fn load_mesh(path: &Path) -> Result<(Mesh, LoadReport)> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

/// Parse the `chmesh 2d` ASCII format, validate, and renumber boundary-first.
pub fn parse_mesh(text: &str) -> Result<(Mesh, LoadReport)> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut pos = 0usize;

    let err = |line: usize, message: &str| Error::MeshParse {
        line,
        message: message.to_string(),
    };

    let next_line = |pos: &mut usize, what: &str| -> Result<(usize, &str)> {
        let item = lines
            .get(*pos)
            .copied()
            .ok_or_else(|| err(0, &format!("unexpected end of file, expected {what}")))?;
        *pos += 1;
        Ok(item)
    };

    let (ln, header) = next_line(&mut pos, "header")?;
    if header != "chmesh 2d" {
        return Err(err(ln, "expected header 'chmesh 2d'"));
    }

    let expect_count = |pos: &mut usize, keyword: &str| -> Result<usize> {
        let (ln, l) = next_line(pos, &format!("'{keyword} N' line"))?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(err(ln, &format!("expected '{keyword} N' line")));
        }
        parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(ln, &format!("bad count in '{keyword}' line")))
    };

    let nv = expect_count(&mut pos, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next_line(&mut pos, "vertex coordinates")?;
        let vals: Vec<f64> = l.split_whitespace().filter_map(|s| s.parse().ok()).collect();
        if vals.len() != 2 {
            return Err(err(ln, "expected 'x y'"));
        }
        vertices.push([vals[0], vals[1]]);
    }

    let nc = expect_count(&mut pos, "cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = next_line(&mut pos, "cell vertex indices")?;
        let vals: Vec<usize> = l.split_whitespace().filter_map(|s| s.parse().ok()).collect();
        if vals.len() != 3 || vals.iter().any(|&i| i >= nv) {
            return Err(err(ln, "expected 'i j k' with valid vertex indices"));
        }
        cells.push([vals[0], vals[1], vals[2]]);
    }

    let nb = expect_count(&mut pos, "boundary")?;
    let mut boundary_faces = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next_line(&mut pos, "boundary face indices")?;
        let vals: Vec<usize> = l.split_whitespace().filter_map(|s| s.parse().ok()).collect();
        if vals.len() != 2 || vals.iter().any(|&i| i >= nv) {
            return Err(err(ln, "expected 'i j' with valid vertex indices"));
        }
        boundary_faces.push([vals[0], vals[1]]);
    }

    build_mesh(vertices, cells, boundary_faces)
}

/// Validate raw connectivity and construct a boundary-first Mesh.
pub fn build_mesh(
    vertices: Vec<[f64; 2]>,
    mut cells: Vec<[usize; 3]>,
    boundary_faces: Vec<[usize; 2]>,
) -> Result<(Mesh, LoadReport)> {
    let mut report = LoadReport::default();

    // Orientation: flip cells with negative signed area; reject degenerate.
    for (ci, cell) in cells.iter_mut().enumerate() {
        let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
        let scale = vertices[cell[0]]
            .iter()
            .chain(&vertices[cell[1]])
            .chain(&vertices[cell[2]])
            .fold(1.0f64, |m, &v| m.max(v.abs()));
        if area.abs() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateCell { cell: ci });
        }
        if area < 0.0 {
            cell.swap(1, 2);
            report.reoriented_cells.push(ci);
        }
    }

    // Nonobtuseness: all interior angles <= 90 degrees.
    for (ci, cell) in cells.iter().enumerate() {
        let pts = [vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]];
        let mut worst = 0.0f64;
        for k in 0..3 {
            let p = pts[k];
            let q = pts[(k + 1) % 3];
            let r = pts[(k + 2) % 3];
            let u = [q[0] - p[0], q[1] - p[1]];
            let v = [r[0] - p[0], r[1] - p[1]];
            let cosang = (u[0] * v[0] + u[1] * v[1])
                / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
            worst = worst.max(cosang.clamp(-1.0, 1.0).acos());
        }
        if worst > std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::ObtuseCell {
                cell: ci,
                angle_deg: worst.to_degrees(),
            });
        }
    }

    // Each boundary face must be an edge of exactly one cell.
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for cell in &cells {
        for k in 0..3 {
            let (a, b) = (cell[k], cell[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }
    for (fi, face) in boundary_faces.iter().enumerate() {
        let key = (face[0].min(face[1]), face[0].max(face[1]));
        if edge_count.get(&key) != Some(&1) {
            return Err(Error::DanglingBoundaryFace { face: fi });
        }
    }
    // Conversely, every cell edge shared by just one cell must be listed.
    let listed: std::collections::HashSet<(usize, usize)> = boundary_faces
        .iter()
        .map(|f| (f[0].min(f[1]), f[0].max(f[1])))
        .collect();
    for (&(a, b), &count) in &edge_count {
        if count == 1 && !listed.contains(&(a, b)) {
            return Err(Error::UncoveredBoundaryEdge(a, b));
        }
    }

    // Boundary-first renumbering.
    let n = vertices.len();
    let mut on_boundary = vec![false; n];
    for face in &boundary_faces {
        on_boundary[face[0]] = true;
        on_boundary[face[1]] = true;
    }
    let n_boundary = on_boundary.iter().filter(|&&b| b).count();
    let mut perm = vec![0usize; n];
    let mut next_b = 0usize;
    let mut next_i = n_boundary;
    for (old, &b) in on_boundary.iter().enumerate() {
        if b {
            perm[old] = next_b;
            next_b += 1;
        } else {
            perm[old] = next_i;
            next_i += 1;
        }
    }
    let renumbered = perm.iter().enumerate().any(|(i, &p)| i != p);

    let mut new_vertices = vec![[0.0; 2]; n];
    for (old, &newi) in perm.iter().enumerate() {
        new_vertices[newi] = vertices[old];
    }
    let new_cells: Vec<[usize; 3]> = cells
        .iter()
        .map(|c| [perm[c[0]], perm[c[1]], perm[c[2]]])
        .collect();
    let new_faces: Vec<[usize; 2]> = boundary_faces
        .iter()
        .map(|f| [perm[f[0]], perm[f[1]]])
        .collect();

    let mut h_max = 0.0f64;
    for cell in &new_cells {
        let pts = [
            new_vertices[cell[0]],
            new_vertices[cell[1]],
            new_vertices[cell[2]],
        ];
        for k in 0..3 {
            h_max = h_max.max(dist(pts[k], pts[(k + 1) % 3]));
        }
    }

    report.permutation = perm;
    report.renumbered = renumbered;
    Ok((
        Mesh {
            vertices: new_vertices,
            cells: new_cells,
            boundary_faces: new_faces,
            n_boundary_vertices: n_boundary,
            h_max,
        },
        report,
    ))
}

/// Structured triangulation of the unit square with n cells per side,
/// each grid square cut along the same diagonal. All angles are 45 or 90
/// degrees, so (S1)/(S2) hold by construction.
pub fn structured_unit_square(n: usize) -> Mesh {
    assert!(n >= 1);
    let np = n + 1;
    let mut vertices = Vec::with_capacity(np * np);
    let mut grid_index = vec![vec![0usize; np]; np];

    // boundary vertices first, walking the boundary counterclockwise
    let h = 1.0 / n as f64;
    let push = |ix: usize, iy: usize, vertices: &mut Vec<[f64; 2]>, grid: &mut Vec<Vec<usize>>| {
        grid[ix][iy] = vertices.len();
        vertices.push([ix as f64 * h, iy as f64 * h]);
    };
    for ix in 0..n {
        push(ix, 0, &mut vertices, &mut grid_index);
    }
    for iy in 0..n {
        push(n, iy, &mut vertices, &mut grid_index);
    }
    for ix in (1..=n).rev() {
        push(ix, n, &mut vertices, &mut grid_index);
    }
    for iy in (1..=n).rev() {
        push(0, iy, &mut vertices, &mut grid_index);
    }
    let n_boundary = vertices.len();
    for ix in 1..n {
        for iy in 1..n {
            push(ix, iy, &mut vertices, &mut grid_index);
        }
    }

    let mut cells = Vec::with_capacity(2 * n * n);
    for ix in 0..n {
        for iy in 0..n {
            let v00 = grid_index[ix][iy];
            let v10 = grid_index[ix + 1][iy];
            let v01 = grid_index[ix][iy + 1];
            let v11 = grid_index[ix + 1][iy + 1];
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }

    let mut boundary_faces = Vec::with_capacity(4 * n);
    for k in 0..n_boundary {
        boundary_faces.push([k, (k + 1) % n_boundary]);
    }

    Mesh {
        vertices,
        cells,
        boundary_faces,
        n_boundary_vertices: n_boundary,
        h_max: std::f64::consts::SQRT_2 / n as f64,
    }
}

/// Evaluate a P1 function given on `structured_unit_square(n_coarse)` at
/// the vertices of a finer structured mesh. When the fine subdivision is a
/// multiple of the coarse one the meshes are nested (same diagonal
/// direction), so this reproduces the coarse function exactly.
pub fn interpolate_structured(coarse: &[f64], n_coarse: usize, fine_mesh: &Mesh) -> Vec<f64> {
    let mesh_c = structured_unit_square(n_coarse);
    assert_eq!(coarse.len(), mesh_c.n_vertices());
    let np = n_coarse + 1;
    let mut grid = vec![0.0f64; np * np];
    for (v, &val) in mesh_c.vertices.iter().zip(coarse) {
        let i = (v[0] * n_coarse as f64).round() as usize;
        let j = (v[1] * n_coarse as f64).round() as usize;
        grid[j * np + i] = val;
    }
    let at = |i: usize, j: usize| grid[j * np + i];
    fine_mesh
        .vertices
        .iter()
        .map(|p| {
            let x = (p[0] * n_coarse as f64).clamp(0.0, n_coarse as f64);
            let y = (p[1] * n_coarse as f64).clamp(0.0, n_coarse as f64);
            let i = (x.floor() as usize).min(n_coarse - 1);
            let j = (y.floor() as usize).min(n_coarse - 1);
            let (fx, fy) = (x - i as f64, y - j as f64);
            // the cell diagonal runs from (i, j) to (i+1, j+1)
            if fx >= fy {
                at(i, j) * (1.0 - fx) + at(i + 1, j) * (fx - fy) + at(i + 1, j + 1) * fy
            } else {
                at(i, j) * (1.0 - fy) + at(i, j + 1) * (fy - fx) + at(i + 1, j + 1) * fx
            }
        })
        .collect()
}
