//! One-dimensional meshes and nodal fields.
//!
//! Solutions, barriers, and right-hand sides all live on a shared
//! strictly increasing node set. Meshes carry boundary layers graded
//! log-uniformly toward degenerate endpoints so that fields behaving
//! like `dist^beta` stay resolved on a relative scale.

use crate::error::{Error, Result};
use std::sync::Arc;

const FINEST_OFFSET_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config("mesh needs at least 2 nodes".into()));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::Config(format!(
                    "mesh nodes not strictly increasing near {:.6e}",
                    w[0]
                )));
            }
        }
        Ok(Mesh { nodes })
    }

    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Self::boundary_layer(lo, hi, cells, None, None)
    }

    /// Mesh on `[lo, hi]` with `cells` cells and optional graded layers.
    ///
    /// A layer of the given width at an endpoint receives 40% of the cell
    /// budget (35% each when both ends are graded), distributed
    /// log-uniformly down to an offset of `1e-12 * width`.
    pub fn boundary_layer(
        lo: f64,
        hi: f64,
        cells: usize,
        left_layer: Option<f64>,
        right_layer: Option<f64>,
    ) -> Result<Self> {
        let span = hi - lo;
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::Config(format!("bad mesh interval [{lo}, {hi}]")));
        }
        let cells = cells.max(8);
        let both = left_layer.is_some() && right_layer.is_some();
        let share = if both { 0.35 } else { 0.40 };
        let layer_cells = ((cells as f64 * share) as usize).max(4);

        let mut nodes: Vec<f64> = Vec::with_capacity(cells + 2);
        nodes.push(lo);
        nodes.push(hi);

        let mut used = 0usize;
        if let Some(w) = left_layer {
            let w = w.min(span * 0.45);
            for j in 0..layer_cells {
                let frac = FINEST_OFFSET_FRACTION.powf(1.0 - j as f64 / layer_cells as f64);
                nodes.push(lo + w * frac);
            }
            nodes.push(lo + w);
            used += layer_cells + 1;
        }
        if let Some(w) = right_layer {
            let w = w.min(span * 0.45);
            for j in 0..layer_cells {
                let frac = FINEST_OFFSET_FRACTION.powf(1.0 - j as f64 / layer_cells as f64);
                nodes.push(hi - w * frac);
            }
            nodes.push(hi - w);
            used += layer_cells + 1;
        }

        let interior = cells.saturating_sub(used).max(4);
        let (int_lo, int_hi) = (
            lo + left_layer.map_or(0.0, |w| w.min(span * 0.45)),
            hi - right_layer.map_or(0.0, |w| w.min(span * 0.45)),
        );
        for k in 1..interior {
            nodes.push(int_lo + (int_hi - int_lo) * k as f64 / interior as f64);
        }

        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        dedupe(&mut nodes, span);
        Mesh::from_nodes(nodes)
    }

    /// Insert `x` as a node. A strict-interior neighbor within a quarter
    /// of the containing cell is shifted onto `x` instead, so insertion
    /// never creates a sliver cell.
    pub fn insert(&mut self, x: f64) {
        let span = self.span();
        match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).unwrap())
        {
            Ok(_) => {}
            Err(i) => {
                let near = |n: f64| (n - x).abs() <= 1e-14 * span;
                if (i > 0 && near(self.nodes[i - 1])) || (i < self.nodes.len() && near(self.nodes[i]))
                {
                    return;
                }
                if i == 0 || i == self.nodes.len() {
                    self.nodes.insert(i, x);
                    return;
                }
                let gap = self.nodes[i] - self.nodes[i - 1];
                if i > 1 && x - self.nodes[i - 1] < 0.25 * gap {
                    self.nodes[i - 1] = x;
                } else if i + 1 < self.nodes.len() && self.nodes[i] - x < 0.25 * gap {
                    self.nodes[i] = x;
                } else {
                    self.nodes.insert(i, x);
                }
            }
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn span(&self) -> f64 {
        self.hi() - self.lo()
    }

    /// Index of the cell containing `x` (clamped to the boundary cells).
    pub fn cell_of(&self, x: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.nodes.len() - 2),
            Err(0) => 0,
            Err(i) if i >= self.nodes.len() => self.nodes.len() - 2,
            Err(i) => i - 1,
        }
    }
}

fn dedupe(nodes: &mut Vec<f64>, span: f64) {
    let tol = 1e-15 * span;
    let mut out = Vec::with_capacity(nodes.len());
    for &x in nodes.iter() {
        match out.last() {
            Some(&prev) if x - prev <= tol => {}
            _ => out.push(x),
        }
    }
    *nodes = std::mem::take(&mut out);
}

/// Nodal scalar field over a shared mesh.
#[derive(Debug, Clone)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    /// Flux exponent of the operator this field belongs to.
    pub p: f64,
    /// Short provenance tag for reports (weight family, construction).
    pub label: String,
    /// Geometry the mesh coordinate refers to, when known.
    pub geom: Option<crate::geometry::DomainGeometry>,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>, p: f64, label: impl Into<String>) -> Result<Self> {
        if mesh.len() < 3 {
            return Err(Error::Config("field needs at least 3 nodes".into()));
        }
        if values.len() != mesh.len() {
            return Err(Error::Config(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "non-finite field value at node {:.6e}",
                mesh.nodes()[bad]
            )));
        }
        Ok(Field {
            mesh,
            values,
            p,
            label: label.into(),
            geom: None,
        })
    }

    pub fn with_geom(mut self, geom: crate::geometry::DomainGeometry) -> Self {
        self.geom = Some(geom);
        self
    }

    pub fn from_fn(
        mesh: Arc<Mesh>,
        f: impl Fn(f64) -> f64,
        p: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&x| f(x)).collect();
        Field::new(mesh, values, p, label)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh> {
        Arc::clone(&self.mesh)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Piecewise-linear evaluation, clamped to the mesh interval.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.mesh.nodes();
        if x <= n[0] {
            return self.values[0];
        }
        if x >= n[n.len() - 1] {
            return self.values[n.len() - 1];
        }
        let i = self.mesh.cell_of(x);
        let s = (x - n[i]) / (n[i + 1] - n[i]);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    pub fn zero_boundary(&self, tol: f64) -> bool {
        self.values[0].abs() <= tol && self.values[self.values.len() - 1].abs() <= tol
    }

    /// `self + scale * other`; the meshes must be the same node set.
    pub fn axpy(&self, scale: f64, other: &Field) -> Result<Field> {
        if self.mesh.nodes() != other.mesh.nodes() {
            return Err(Error::Config("field mesh mismatch".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Field::new(Arc::clone(&self.mesh), values, self.p, self.label.clone())
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mesh_nodes() {
        let m = Mesh::uniform(0.0, 1.0, 10).unwrap();
        assert_eq!(m.lo(), 0.0);
        assert_eq!(m.hi(), 1.0);
        assert!(m.len() >= 11);
    }

    #[test]
    fn boundary_layer_resolves_small_offsets() {
        let m = Mesh::boundary_layer(0.0, 1.0, 200, Some(0.4), Some(0.4)).unwrap();
        let first_gap = m.nodes()[1] - m.nodes()[0];
        assert!(first_gap < 1e-10, "first gap {first_gap:.3e}");
        let last_gap = m.hi() - m.nodes()[m.len() - 2];
        assert!(last_gap < 1e-10);
    }

    #[test]
    fn insert_snaps_and_dedupes() {
        let mut m = Mesh::uniform(0.0, 1.0, 4).unwrap();
        let before = m.len();
        m.insert(0.5);
        assert_eq!(m.len(), before, "0.5 already a node");
        m.insert(0.333);
        assert_eq!(m.len(), before + 1);
        assert!(m.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cell_lookup() {
        let m = Mesh::from_nodes(vec![0.0, 0.1, 0.5, 1.0]).unwrap();
        assert_eq!(m.cell_of(0.05), 0);
        assert_eq!(m.cell_of(0.3), 1);
        assert_eq!(m.cell_of(0.99), 2);
        assert_eq!(m.cell_of(-1.0), 0);
        assert_eq!(m.cell_of(2.0), 2);
    }

    #[test]
    fn field_interpolation_and_norms() {
        let mesh = Arc::new(Mesh::from_nodes(vec![0.0, 0.5, 1.0]).unwrap());
        let f = Field::new(mesh, vec![0.0, 2.0, 0.0], 2.0, "hat").unwrap();
        assert_eq!(f.eval(0.25), 1.0);
        assert_eq!(f.sup_norm(), 2.0);
        assert!(f.zero_boundary(0.0));
    }

    #[test]
    fn field_rejects_non_finite() {
        let mesh = Arc::new(Mesh::from_nodes(vec![0.0, 0.5, 1.0]).unwrap());
        let r = Field::new(mesh, vec![0.0, f64::NAN, 0.0], 2.0, "bad");
        assert!(r.is_err());
    }
}
