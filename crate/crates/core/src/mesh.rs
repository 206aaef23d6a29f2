//! Conforming triangulations of the unit square with full cell/facet/vertex
//! connectivity.
//!
//! Local numbering: facet `i` of a cell is the edge opposite its local vertex
//! `i`. Interior facets are oriented from the lower-numbered cell (`left`) to
//! the higher-numbered one (`right`); the jump of a broken field across a
//! facet is `v|left - v|right`.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::Point;

/// Cells with signed area at or below this are rejected.
pub const MIN_CELL_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub coords: Point,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: usize,
    /// Counterclockwise.
    pub vertex_ids: [usize; 3],
    /// `facet_ids[i]` is opposite `vertex_ids[i]`.
    pub facet_ids: [usize; 3],
    pub area: f64,
    /// Longest edge.
    pub diameter: f64,
    pub inradius: f64,
}

impl Cell {
    /// Shape ratio `h / rho`.
    pub fn sigma(&self) -> f64 {
        self.diameter / self.inradius
    }

    /// Local position of `facet` in this cell, if it is one of its facets.
    pub fn local_facet(&self, facet: usize) -> Option<usize> {
        self.facet_ids.iter().position(|&f| f == facet)
    }

    pub fn local_vertex(&self, vertex: usize) -> Option<usize> {
        self.vertex_ids.iter().position(|&v| v == vertex)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub id: usize,
    pub vertex_ids: [usize; 2],
    pub left_cell: usize,
    pub right_cell: Option<usize>,
    /// Unit normal, outward from `left_cell`.
    pub normal: Point,
    pub barycenter: Point,
    pub length: f64,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.right_cell.is_none()
    }

    /// `+1` when `cell` is the left cell, `-1` when it is the right cell.
    pub fn orientation_in(&self, cell: usize) -> f64 {
        if cell == self.left_cell {
            1.0
        } else {
            debug_assert_eq!(self.right_cell, Some(cell));
            -1.0
        }
    }
}

/// `x = B x_hat + b`, mapping the reference triangle (0,0),(1,0),(0,1) onto a
/// cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    /// Row-major: `matrix[r][c]`.
    pub matrix: [[f64; 2]; 2],
    pub offset: Point,
    pub det: f64,
}

impl AffineMap {
    pub fn from_vertices(p: [Point; 3]) -> Self {
        let matrix = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
        AffineMap {
            matrix,
            offset: p[0],
            det,
        }
    }

    pub fn apply(&self, xr: Point) -> Point {
        let m = &self.matrix;
        [
            m[0][0] * xr[0] + m[0][1] * xr[1] + self.offset[0],
            m[1][0] * xr[0] + m[1][1] * xr[1] + self.offset[1],
        ]
    }

    /// `B^{-1}`, row-major.
    pub fn inverse_matrix(&self) -> [[f64; 2]; 2] {
        let m = &self.matrix;
        let inv = 1.0 / self.det;
        [
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ]
    }

    pub fn inverse(&self, x: Point) -> Point {
        let c = self.inverse_matrix();
        let d = [x[0] - self.offset[0], x[1] - self.offset[1]];
        [
            c[0][0] * d[0] + c[0][1] * d[1],
            c[1][0] * d[0] + c[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient: `B^{-T} g`.
    pub fn push_gradient(&self, g: Point) -> Point {
        let c = self.inverse_matrix();
        [c[0][0] * g[0] + c[1][0] * g[1], c[0][1] * g[0] + c[1][1] * g[1]]
    }

    pub fn mul_vec(&self, v: Point) -> Point {
        let m = &self.matrix;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub h_max: f64,
    /// Structured spacing `1/n`; equals `h_max` for meshes built from raw data.
    pub h_grid: f64,
    /// Largest shape ratio `h / rho` over cells.
    pub sigma: f64,
    /// Largest number of cells sharing one vertex.
    pub n_theta: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub cells: Vec<Cell>,
    pub facets: Vec<Facet>,
    vertex_cells: Vec<Vec<usize>>,
    maps: Vec<AffineMap>,
    h_grid: Option<f64>,
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Mesh {
    /// Builds the connectivity of a triangulation. Cells are reoriented to be
    /// counterclockwise; degenerate cells are an error.
    pub fn from_raw(coords: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let mut cells = Vec::with_capacity(triangles.len());
        let mut maps = Vec::with_capacity(triangles.len());
        let mut vertex_cells = vec![Vec::new(); coords.len()];

        for (id, tri) in triangles.iter().enumerate() {
            let mut v = *tri;
            for &k in &v {
                if k >= coords.len() {
                    return Err(Error::Config(format!(
                        "cell {id} references vertex {k} out of {}",
                        coords.len()
                    )));
                }
            }
            let mut map = AffineMap::from_vertices([coords[v[0]], coords[v[1]], coords[v[2]]]);
            if map.det < 0.0 {
                v.swap(1, 2);
                map = AffineMap::from_vertices([coords[v[0]], coords[v[1]], coords[v[2]]]);
            }
            let area = 0.5 * map.det;
            if !(area > MIN_CELL_AREA) {
                return Err(Error::DegenerateCell { cell: id, area });
            }
            let edges = [
                dist(coords[v[1]], coords[v[2]]),
                dist(coords[v[2]], coords[v[0]]),
                dist(coords[v[0]], coords[v[1]]),
            ];
            let perimeter: f64 = edges.iter().sum();
            let diameter = edges.iter().cloned().fold(0.0, f64::max);
            for &k in &v {
                vertex_cells[k].push(id);
            }
            cells.push(Cell {
                id,
                vertex_ids: v,
                facet_ids: [usize::MAX; 3],
                area,
                diameter,
                inradius: 2.0 * area / perimeter,
            });
            maps.push(map);
        }

        let mut facets: Vec<Facet> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for cell in cells.iter_mut() {
            for i in 0..3 {
                let a = cell.vertex_ids[(i + 1) % 3];
                let b = cell.vertex_ids[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let fid = match lookup.get(&key) {
                    Some(&fid) => {
                        let f = &mut facets[fid];
                        if f.right_cell.is_some() {
                            return Err(Error::Config(format!(
                                "facet ({a},{b}) shared by more than two cells"
                            )));
                        }
                        f.right_cell = Some(cell.id);
                        fid
                    }
                    None => {
                        let fid = facets.len();
                        let (pa, pb) = (coords[a], coords[b]);
                        let length = dist(pa, pb);
                        // counterclockwise cell: (pb - pa) rotated clockwise points out
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        facets.push(Facet {
                            id: fid,
                            vertex_ids: [a, b],
                            left_cell: cell.id,
                            right_cell: None,
                            normal,
                            barycenter: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                            length,
                        });
                        lookup.insert(key, fid);
                        fid
                    }
                };
                cell.facet_ids[i] = fid;
            }
        }

        let mut boundary = vec![false; coords.len()];
        for f in facets.iter().filter(|f| f.is_boundary()) {
            boundary[f.vertex_ids[0]] = true;
            boundary[f.vertex_ids[1]] = true;
        }
        let vertices = coords
            .into_iter()
            .enumerate()
            .map(|(id, coords)| Vertex {
                id,
                coords,
                boundary: boundary[id],
            })
            .collect();

        Ok(Mesh {
            vertices,
            cells,
            facets,
            vertex_cells,
            maps,
            h_grid: None,
        })
    }

    /// Uniform `n x n` grid of the unit square, every square split along the
    /// diagonal from `(i/n, j/n)` to `((i+1)/n, (j+1)/n)`.
    pub fn structured_unit_square(n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::Config("grid resolution must be at least 1".into()));
        }
        let h = 1.0 / n as f64;
        let mut coords = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                // exact endpoints so boundary tests hold bitwise
                let x = if i == n { 1.0 } else { i as f64 * h };
                let y = if j == n { 1.0 } else { j as f64 * h };
                coords.push([x, y]);
            }
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut tris = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
        let mut mesh = Mesh::from_raw(coords, tris)?;
        mesh.h_grid = Some(h);
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn affine_map(&self, cell: usize) -> &AffineMap {
        &self.maps[cell]
    }

    pub fn inverse_map(&self, cell: usize, x: Point) -> Point {
        self.maps[cell].inverse(x)
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 3] {
        let v = self.cells[cell].vertex_ids;
        [
            self.vertices[v[0]].coords,
            self.vertices[v[1]].coords,
            self.vertices[v[2]].coords,
        ]
    }

    /// Cells containing vertex `v`, in increasing order.
    pub fn cells_of_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Outward normal of the facet opposite local vertex `i`, scaled by the
    /// facet length.
    pub fn scaled_normal(&self, cell: usize, i: usize) -> Point {
        let c = &self.cells[cell];
        let f = &self.facets[c.facet_ids[i]];
        let s = f.orientation_in(cell) * f.length;
        [s * f.normal[0], s * f.normal[1]]
    }

    /// Barycentric coordinates of `x` with respect to `cell`, through
    /// `lambda_j = (x_j - x) . S_j / (2 |K|)` with `x_j` the barycenter of the
    /// facet opposite vertex `j` and `S_j` its scaled outward normal.
    pub fn barycentric_coords(&self, cell: usize, x: Point) -> [f64; 3] {
        let c = &self.cells[cell];
        let scale = 1.0 / (2.0 * c.area);
        std::array::from_fn(|j| {
            let xj = self.facets[c.facet_ids[j]].barycenter;
            let s = self.scaled_normal(cell, j);
            scale * ((xj[0] - x[0]) * s[0] + (xj[1] - x[1]) * s[1])
        })
    }

    pub fn stats(&self) -> MeshStats {
        let h_max = self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max);
        let sigma = self.cells.iter().map(Cell::sigma).fold(0.0, f64::max);
        let n_theta = self.vertex_cells.iter().map(Vec::len).max().unwrap_or(0);
        MeshStats {
            h_max,
            h_grid: self.h_grid.unwrap_or(h_max),
            sigma,
            n_theta,
        }
    }

    /// Plain-text export: `vertices V cells C`, then `x y` lines, then `i j k`
    /// lines, floats with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "vertices {} cells {}", self.num_vertices(), self.num_cells())?;
        for v in &self.vertices {
            writeln!(w, "{:.16e} {:.16e}", v.coords[0], v.coords[1])?;
        }
        for c in &self.cells {
            let [a, b, k] = c.vertex_ids;
            writeln!(w, "{a} {b} {k}")?;
        }
        Ok(())
    }

    pub fn read_text(text: &str) -> Result<Mesh> {
        let bad = |msg: &str| Error::Config(format!("mesh file: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty"))?
            .split_whitespace()
            .collect();
        if header.len() != 4 || header[0] != "vertices" || header[2] != "cells" {
            return Err(bad("expected `vertices <V> cells <C>` header"));
        }
        let nv: usize = header[1].parse().map_err(|_| bad("vertex count"))?;
        let nc: usize = header[3].parse().map_err(|_| bad("cell count"))?;
        let mut coords = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = lines.next().ok_or_else(|| bad("missing vertex line"))?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| bad("vertex coordinates"))?;
            if xs.len() != 2 {
                return Err(bad("vertex line needs two values"));
            }
            coords.push([xs[0], xs[1]]);
        }
        let mut tris = Vec::with_capacity(nc);
        for _ in 0..nc {
            let l = lines.next().ok_or_else(|| bad("missing cell line"))?;
            let ks: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| bad("cell indices"))?;
            if ks.len() != 3 {
                return Err(bad("cell line needs three indices"));
            }
            tris.push([ks[0], ks[1], ks[2]]);
        }
        Mesh::from_raw(coords, tris)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn smallest_meshes_have_expected_counts() {
        let m = Mesh::structured_unit_square(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells(), m.num_facets()), (4, 2, 5));
        assert_eq!(m.facets.iter().filter(|f| f.is_boundary()).count(), 4);

        let m = Mesh::structured_unit_square(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells(), m.num_facets()), (9, 8, 16));
        assert_eq!(m.facets.iter().filter(|f| !f.is_boundary()).count(), 8);
    }

    #[test]
    fn grid_step_matches_resolution() {
        let m = Mesh::structured_unit_square(20).unwrap();
        let s = m.stats();
        assert_eq!(s.h_grid, 5.0e-2);
        assert!(close(s.h_max, 2f64.sqrt() / 20.0, 1e-15));
        assert!(s.h_max >= s.h_grid);
    }

    #[test]
    fn euler_relation_and_areas() {
        for n in [1, 2, 3, 7, 12] {
            let m = Mesh::structured_unit_square(n).unwrap();
            let euler = m.num_vertices() as i64 - m.num_facets() as i64 + m.num_cells() as i64;
            assert_eq!(euler, 1);
            let total: f64 = m.cells.iter().map(|c| c.area).sum();
            assert!(close(total, 1.0, 1e-12));
        }
    }

    #[test]
    fn facet_cell_incidence() {
        let m = Mesh::structured_unit_square(5).unwrap();
        let mut count = vec![0; m.num_facets()];
        for c in &m.cells {
            for &f in &c.facet_ids {
                count[f] += 1;
            }
        }
        for f in &m.facets {
            assert_eq!(count[f.id], if f.is_boundary() { 1 } else { 2 });
            if let Some(r) = f.right_cell {
                assert!(f.left_cell < r);
            }
        }
    }

    #[test]
    fn facet_normals_are_unit_and_orthogonal() {
        let m = Mesh::structured_unit_square(4).unwrap();
        for f in &m.facets {
            let n = f.normal;
            assert!(close(n[0].hypot(n[1]), 1.0, 1e-14));
            let a = m.vertices[f.vertex_ids[0]].coords;
            let b = m.vertices[f.vertex_ids[1]].coords;
            let t = [b[0] - a[0], b[1] - a[1]];
            assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-14);
            if f.is_boundary() {
                // outward from the unit square
                let mid = f.barycenter;
                let probe = [mid[0] + 1e-3 * n[0], mid[1] + 1e-3 * n[1]];
                assert!(probe[0] < 0.0 || probe[0] > 1.0 || probe[1] < 0.0 || probe[1] > 1.0);
            }
        }
    }

    #[test]
    fn scaled_normals_close_each_cell() {
        let m = Mesh::structured_unit_square(6).unwrap();
        for c in 0..m.num_cells() {
            let s: Point = (0..3).fold([0.0, 0.0], |acc, i| {
                let n = m.scaled_normal(c, i);
                [acc[0] + n[0], acc[1] + n[1]]
            });
            assert!(s[0].abs() < 1e-13 && s[1].abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_flags_match_coordinates() {
        let m = Mesh::structured_unit_square(5).unwrap();
        for v in &m.vertices {
            let [x, y] = v.coords;
            let on = x.abs() < 1e-14 || y.abs() < 1e-14 || (x - 1.0).abs() < 1e-14 || (y - 1.0).abs() < 1e-14;
            assert_eq!(on, v.boundary);
        }
    }

    #[test]
    fn barycentric_coordinates() {
        let m = Mesh::structured_unit_square(3).unwrap();
        for c in 0..m.num_cells() {
            let p = m.cell_points(c);
            let g = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            for l in m.barycentric_coords(c, g) {
                assert!(close(l, 1.0 / 3.0, 1e-13));
            }
            let l = m.barycentric_coords(c, p[0]);
            assert!(close(l[0], 1.0, 1e-13) && l[1].abs() < 1e-13 && l[2].abs() < 1e-13);
            let mid = [(p[0][0] + p[1][0]) / 2.0, (p[0][1] + p[1][1]) / 2.0];
            let l = m.barycentric_coords(c, mid);
            assert!(close(l[0], 0.5, 1e-13) && close(l[1], 0.5, 1e-13) && l[2].abs() < 1e-13);
            // agrees with the inverse affine map
            let x = [0.3 * p[0][0] + 0.5 * p[1][0] + 0.2 * p[2][0], 0.3 * p[0][1] + 0.5 * p[1][1] + 0.2 * p[2][1]];
            let xr = m.inverse_map(c, x);
            let l = m.barycentric_coords(c, x);
            assert!(close(l[1], xr[0], 1e-13) && close(l[2], xr[1], 1e-13));
            assert!(close(l.iter().sum::<f64>(), 1.0, 1e-13));
        }
    }

    #[test]
    fn affine_maps() {
        let id = AffineMap::from_vertices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(id.matrix, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(id.offset, [0.0, 0.0]);
        assert_eq!(id.det, 1.0);

        let m = Mesh::from_raw(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.affine_map(0).det, 2.0);
        assert_eq!(m.cells[0].area, 1.0);

        let m = Mesh::structured_unit_square(4).unwrap();
        for c in 0..m.num_cells() {
            let map = m.affine_map(c);
            assert!(close(map.det.abs() / m.cells[c].area, 2.0, 2e-13));
            let p = m.cell_points(c);
            let refs = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
            for k in 0..3 {
                let xr = map.inverse(p[k]);
                assert!(close(xr[0], refs[k][0], 1e-13) && close(xr[1], refs[k][1], 1e-13));
                let x = map.apply(refs[k]);
                assert!(close(x[0], p[k][0], 1e-13) && close(x[1], p[k][1], 1e-13));
            }
            let x = [0.37, 0.61];
            let back = map.apply(map.inverse(x));
            assert!(close(back[0], x[0], 1e-13) && close(back[1], x[1], 1e-13));
        }
    }

    #[test]
    fn shape_statistics() {
        let m = Mesh::from_raw(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let expected = 2f64.sqrt() / (1.0 - 1.0 / 2f64.sqrt());
        assert!(close(m.cells[0].sigma(), expected, 1e-12));
        assert!(close(expected, 4.828427, 1e-6));

        assert_eq!(Mesh::structured_unit_square(1).unwrap().stats().n_theta, 2);
        for n in [2, 3, 8] {
            let s = Mesh::structured_unit_square(n).unwrap().stats();
            assert_eq!(s.n_theta, 6);
            assert!(s.sigma > 2.0);
        }
    }

    #[test]
    fn degenerate_cells_are_rejected() {
        let r = Mesh::from_raw(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(r, Err(Error::DegenerateCell { cell: 0, .. })));
        assert!(Mesh::structured_unit_square(0).is_err());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let m = Mesh::from_raw(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        assert!(m.affine_map(0).det > 0.0);
    }

    #[test]
    fn text_export_round_trip() {
        let m = Mesh::structured_unit_square(3).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("vertices 16 cells 18\n"));
        let back = Mesh::read_text(&text).unwrap();
        assert_eq!(back.num_facets(), m.num_facets());
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert_eq!(a.coords, b.coords);
        }
    }
}
