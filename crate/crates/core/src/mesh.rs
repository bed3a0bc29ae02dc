//! Structured triangulations of axis-aligned rectangles.
//!
//! Every grid cell is split along its lower-left to upper-right diagonal, so
//! the element layout (and therefore every discretization-error constant) is
//! reproducible. Boundary edges are stored in the counterclockwise order of
//! their owning triangle, which makes `(dy, -dx) / len` the outward normal.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::output::fmt_number;

pub type Point = [f64; 2];

/// Default |u·n| threshold below which an edge counts as no-flow.
pub const TAG_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Inflow,
    Outflow,
    NoFlow,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Inflow => "inflow",
            BoundaryTag::Outflow => "outflow",
            BoundaryTag::NoFlow => "noflow",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    pub triangle: usize,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    h: f64,
}

impl Mesh {
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Largest edge length over the whole triangulation.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self, tri: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[tri];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [p0, p1, p2] = self.vertices(tri);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn edge_endpoints(&self, edge: &BoundaryEdge) -> [Point; 2] {
        [self.nodes[edge.nodes[0]], self.nodes[edge.nodes[1]]]
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        let [a, b] = self.edge_endpoints(edge);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Outward unit normal of a boundary edge.
    pub fn edge_normal(&self, edge: &BoundaryEdge) -> Point {
        let [a, b] = self.edge_endpoints(edge);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    }

    pub fn edge_midpoint(&self, edge: &BoundaryEdge) -> Point {
        let [a, b] = self.edge_endpoints(edge);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn edges_tagged(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Nodes incident to at least one edge carrying `tag`, sorted.
    pub fn nodes_on(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges_tagged(tag)
            .flat_map(|e| e.nodes)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Tag implied for `edge` by the sign of `u·n` at its midpoint.
    pub fn classify_edge<F>(&self, edge: &BoundaryEdge, u: F, tol: f64) -> BoundaryTag
    where
        F: Fn(Point) -> Point,
    {
        let n = self.edge_normal(edge);
        let v = u(self.edge_midpoint(edge));
        let flux = v[0] * n[0] + v[1] * n[1];
        if flux < -tol {
            BoundaryTag::Inflow
        } else if flux > tol {
            BoundaryTag::Outflow
        } else {
            BoundaryTag::NoFlow
        }
    }

    /// Relabel every boundary edge by the sign of `u·n` at its midpoint.
    pub fn tag_boundary<F>(mut self, u: F, tol: f64) -> Mesh
    where
        F: Fn(Point) -> Point,
    {
        for i in 0..self.boundary_edges.len() {
            self.boundary_edges[i].tag = self.classify_edge(&self.boundary_edges[i], &u, tol);
        }
        self
    }

    /// Index of the first boundary edge whose tag disagrees with `u`.
    pub fn first_mistagged_edge<F>(&self, u: F, tol: f64) -> Option<usize>
    where
        F: Fn(Point) -> Point,
    {
        self.boundary_edges
            .iter()
            .position(|e| self.classify_edge(e, &u, tol) != e.tag)
    }

    /// Check the structural invariants; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.nodes.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(format!("triangle {t} references a missing node"));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(format!("triangle {t} is not counterclockwise"));
            }
        }
        let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                owners.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut boundary_count = 0;
        let mut h: f64 = 0.0;
        for (&(a, b), tris) in &owners {
            let (pa, pb) = (self.nodes[a], self.nodes[b]);
            h = h.max((pb[0] - pa[0]).hypot(pb[1] - pa[1]));
            match tris.len() {
                1 => boundary_count += 1,
                2 => {}
                k => return Err(format!("edge ({a}, {b}) shared by {k} triangles")),
            }
        }
        if boundary_count != self.boundary_edges.len() {
            return Err(format!(
                "{} edges have one owner but {} boundary edges are listed",
                boundary_count,
                self.boundary_edges.len()
            ));
        }
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            if a >= n || b >= n {
                return Err("boundary edge references a missing node".into());
            }
            match owners.get(&(a.min(b), a.max(b))) {
                Some(t) if t.len() == 1 && t[0] == e.triangle => {}
                _ => return Err(format!("boundary edge ({a}, {b}) has the wrong owner")),
            }
        }
        if (h - self.h).abs() > 1e-14 * h.max(1.0) {
            return Err(format!("stored h = {} but longest edge is {}", self.h, h));
        }
        Ok(())
    }

    /// Dump `nodes.csv`, `tris.csv` and `bedges.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut w = csv::Writer::from_path(dir.join("nodes.csv"))?;
        w.write_record(["id", "x", "y"])?;
        for (i, p) in self.nodes.iter().enumerate() {
            w.write_record([i.to_string(), fmt_number(p[0]), fmt_number(p[1])])?;
        }
        w.flush().map_err(|e| Error::io(dir.join("nodes.csv"), e))?;

        let mut w = csv::Writer::from_path(dir.join("tris.csv"))?;
        w.write_record(["id", "n0", "n1", "n2"])?;
        for (i, t) in self.triangles.iter().enumerate() {
            w.write_record([
                i.to_string(),
                t[0].to_string(),
                t[1].to_string(),
                t[2].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir.join("tris.csv"), e))?;

        let mut w = csv::Writer::from_path(dir.join("bedges.csv"))?;
        w.write_record(["n0", "n1", "tag"])?;
        for e in &self.boundary_edges {
            w.write_record([
                e.nodes[0].to_string(),
                e.nodes[1].to_string(),
                e.tag.as_str().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir.join("bedges.csv"), e))?;
        Ok(())
    }
}

/// Uniform `nx × ny` grid on `[0, lx] × [0, ly]`, two triangles per cell.
///
/// Boundary edges come back tagged `NoFlow`; call [`Mesh::tag_boundary`] once
/// the velocity is known.
pub fn build_rect_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh(format!("cell counts must be positive (nx={nx}, ny={ny})")));
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::Mesh(format!("extents must be positive (lx={lx}, ly={ly})")));
    }
    let dx = lx / nx as f64;
    let dy = ly / ny as f64;
    let stride = nx + 1;
    let id = |i: usize, j: usize| j * stride + i;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Pin the far edges exactly to the extents.
            let x = if i == nx { lx } else { i as f64 * dx };
            let y = if j == ny { ly } else { j as f64 * dy };
            nodes.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let cell_tri = |i: usize, j: usize| 2 * (j * nx + i);
    for j in 0..ny {
        for i in 0..nx {
            let (n00, n10, n01, n11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    let edge = |a, b, triangle| BoundaryEdge {
        nodes: [a, b],
        tag: BoundaryTag::NoFlow,
        triangle,
    };
    for i in 0..nx {
        boundary_edges.push(edge(id(i, 0), id(i + 1, 0), cell_tri(i, 0)));
    }
    for j in 0..ny {
        boundary_edges.push(edge(id(nx, j), id(nx, j + 1), cell_tri(nx - 1, j)));
    }
    for i in (0..nx).rev() {
        boundary_edges.push(edge(id(i + 1, ny), id(i, ny), cell_tri(i, ny - 1) + 1));
    }
    for j in (0..ny).rev() {
        boundary_edges.push(edge(id(0, j + 1), id(0, j), cell_tri(0, j) + 1));
    }

    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
        h: dx.hypot(dy),
    })
}
