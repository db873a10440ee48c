use crate::error::{Error, Result};
use std::io::Write;

/// Node coordinates; the second component is 0 on interval meshes.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { a: f64, b: f64, c: f64, d: f64 },
}

impl Domain {
    pub fn unit_interval() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    /// `[-1, 1]²`
    pub fn symmetric_square() -> Self {
        Domain::Rectangle {
            a: -1.0,
            b: 1.0,
            c: -1.0,
            d: 1.0,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { a, b, c, d } => (b - a) * (d - c),
        }
    }

    /// Length of the shortest side.
    pub fn side(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { a, b, c, d } => (b - a).min(d - c),
        }
    }
}

/// Uniform mesh of an interval or a structured triangulation of a rectangle.
///
/// Rectangles are split into `n × n` cells, each cut along the diagonal from
/// its lower-left to its upper-right corner into two counterclockwise
/// triangles. On non-square rectangles `h` is the larger cell leg.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain,
    pub n_per_side: usize,
    pub h: f64,
    pub nodes: Vec<Point>,
    /// Vertex indices: pairs in 1D, triples in 2D.
    pub elements: Vec<Vec<usize>>,
    /// Interior degree-of-freedom index per node, `None` on the boundary.
    pub interior_index: Vec<Option<usize>>,
    /// Node index per interior degree of freedom.
    pub interior_nodes: Vec<usize>,
}

impl Mesh {
    pub fn new(domain: Domain, n_per_side: usize) -> Result<Self> {
        if n_per_side < 2 {
            return Err(Error::Domain(format!("need at least 2 cells per side, got {n_per_side}")));
        }
        let n = n_per_side;
        let mut nodes = Vec::new();
        let mut elements = Vec::new();
        let mut boundary = Vec::new();
        let h;
        match domain {
            Domain::Interval { a, b } => {
                if !(b > a) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::Domain(format!("degenerate interval [{a}, {b}]")));
                }
                h = (b - a) / n as f64;
                for i in 0..=n {
                    let x = if i == n { b } else { a + i as f64 * h };
                    nodes.push([x, 0.0]);
                    boundary.push(i == 0 || i == n);
                }
                for i in 0..n {
                    elements.push(vec![i, i + 1]);
                }
            }
            Domain::Rectangle { a, b, c, d } => {
                if !(b > a && d > c) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
                    return Err(Error::Domain(format!("degenerate rectangle [{a}, {b}]×[{c}, {d}]")));
                }
                let hx = (b - a) / n as f64;
                let hy = (d - c) / n as f64;
                h = hx.max(hy);
                for j in 0..=n {
                    let y = if j == n { d } else { c + j as f64 * hy };
                    for i in 0..=n {
                        let x = if i == n { b } else { a + i as f64 * hx };
                        nodes.push([x, y]);
                        boundary.push(i == 0 || i == n || j == 0 || j == n);
                    }
                }
                let id = |i: usize, j: usize| j * (n + 1) + i;
                for j in 0..n {
                    for i in 0..n {
                        let (p00, p10, p01, p11) =
                            (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                        elements.push(vec![p00, p10, p11]);
                        elements.push(vec![p00, p11, p01]);
                    }
                }
            }
        }
        let mut interior_index = Vec::with_capacity(nodes.len());
        let mut interior_nodes = Vec::new();
        for (k, &on_boundary) in boundary.iter().enumerate() {
            if on_boundary {
                interior_index.push(None);
            } else {
                interior_index.push(Some(interior_nodes.len()));
                interior_nodes.push(k);
            }
        }
        Ok(Self {
            domain,
            n_per_side,
            h,
            nodes,
            elements,
            interior_index,
            interior_nodes,
        })
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Signed length (1D) or area (2D) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        let v = &self.elements[e];
        match v.len() {
            2 => self.nodes[v[1]][0] - self.nodes[v[0]][0],
            _ => {
                let [x0, y0] = self.nodes[v[0]];
                let [x1, y1] = self.nodes[v[1]];
                let [x2, y2] = self.nodes[v[2]];
                0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
            }
        }
    }

    /// Interior-node values of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.interior_nodes.iter().map(|&k| f(self.nodes[k])).collect()
    }

    /// Node whose coordinates equal `p` up to `1e-12·h`.
    pub fn find_node(&self, p: Point) -> Option<usize> {
        let tol = 1e-12 * self.h;
        self.nodes
            .iter()
            .position(|q| (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol)
    }

    /// `index, x, y, interior` rows; `interior` is -1 on the boundary.
    pub fn write_nodes_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,x,y,interior")?;
        for (k, p) in self.nodes.iter().enumerate() {
            let dof = self.interior_index[k].map_or(-1, |i| i as i64);
            writeln!(out, "{k},{:.16e},{:.16e},{dof}", p[0], p[1])?;
        }
        Ok(())
    }

    /// `element, v0, v1[, v2]` rows.
    pub fn write_elements_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if self.dimension() == 1 {
            writeln!(out, "element,v0,v1")?;
        } else {
            writeln!(out, "element,v0,v1,v2")?;
        }
        for (e, v) in self.elements.iter().enumerate() {
            let cols: Vec<String> = v.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{e},{}", cols.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = Mesh::new(Domain::unit_interval(), 4).unwrap();
        assert_eq!(m.nodes.len(), 5);
        assert_eq!(m.n_interior(), 3);
        assert_eq!(m.h, 0.25);
        assert_eq!(m.interior_index[0], None);
        assert_eq!(m.interior_index[1], Some(0));
    }

    #[test]
    fn square_counts_and_area() {
        let m = Mesh::new(Domain::symmetric_square(), 4).unwrap();
        assert_eq!(m.nodes.len(), 25);
        assert_eq!(m.n_interior(), 9);
        assert_eq!(m.elements.len(), 32);
        let total: f64 = (0..m.elements.len()).map(|e| m.element_measure(e)).sum();
        assert!((total - 4.0).abs() < 1e-12 * 4.0);
        assert!((0..m.elements.len()).all(|e| m.element_measure(e) > 0.0));
    }

    #[test]
    fn degenerate_domains_are_rejected() {
        assert!(Mesh::new(Domain::Interval { a: 1.0, b: 1.0 }, 4).is_err());
        assert!(Mesh::new(
            Domain::Rectangle {
                a: 0.0,
                b: 1.0,
                c: 2.0,
                d: 2.0
            },
            4
        )
        .is_err());
        assert!(Mesh::new(Domain::unit_interval(), 1).is_err());
    }

    #[test]
    fn origin_is_a_node_of_even_square_meshes() {
        let m = Mesh::new(Domain::symmetric_square(), 8).unwrap();
        let k = m.find_node([0.0, 0.0]).unwrap();
        assert!(m.interior_index[k].is_some());
        assert!(Mesh::new(Domain::symmetric_square(), 7)
            .unwrap()
            .find_node([0.0, 0.0])
            .is_none());
    }

    #[test]
    fn csv_export() {
        let m = Mesh::new(Domain::symmetric_square(), 2).unwrap();
        let mut buf = Vec::new();
        m.write_elements_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().nth(1), Some("0,0,1,4"));
        let mut buf = Vec::new();
        m.write_nodes_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
    }
}
