use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Undirected graph with an edge `{i, j}` whenever `Â_ij` or `Â_ji` is nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub labels: Vec<String>,
    /// `(i, j)` with `i < j`, in lexicographic order.
    pub edges: Vec<(usize, usize)>,
    /// Entries of `Â` above the threshold, diagonal included.
    pub nonzeros: usize,
    /// `nonzeros / p²`
    pub sparsity: f64,
}

pub fn export_dependency_graph(a_hat: &Matrix, zeta: f64, labels: &[String]) -> Result<DependencyGraph> {
    let p = a_hat.nrows();
    if !a_hat.is_square() || labels.len() != p {
        return Err(Error::Dimension(format!(
            "{} labels for a {}×{} matrix",
            labels.len(),
            a_hat.nrows(),
            a_hat.ncols()
        )));
    }
    let on = |i: usize, j: usize| a_hat[(i, j)].abs() > zeta;
    let edges = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .filter(|&(i, j)| on(i, j) || on(j, i))
        .collect();
    let nonzeros = a_hat.iter().filter(|v| v.abs() > zeta).count();
    Ok(DependencyGraph {
        labels: labels.to_vec(),
        edges,
        nonzeros,
        sparsity: if p == 0 { 0.0 } else { nonzeros as f64 / (p * p) as f64 },
    })
}

fn dot_id(label: &str) -> String {
    format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
}

impl DependencyGraph {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph dependencies {\n");
        for label in &self.labels {
            out.push_str(&format!("  {};\n", dot_id(label)));
        }
        for &(i, j) in &self.edges {
            out.push_str(&format!("  {} -- {};\n", dot_id(&self.labels[i]), dot_id(&self.labels[j])));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(["source", "target"]).map_err(io)?;
        for &(i, j) in &self.edges {
            w.write_record([&self.labels[i], &self.labels[j]]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn diagonal_has_no_edges() {
        let g = export_dependency_graph(&Matrix::identity(3, 3), 0.0, &labels(3)).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.nonzeros, 3);
        assert!((g.sparsity - 3.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn one_pair_one_edge() {
        let mut a = Matrix::identity(3, 3);
        a[(2, 0)] = 0.4;
        a[(0, 2)] = -0.1;
        let g = export_dependency_graph(&a, 1e-6, &labels(3)).unwrap();
        assert_eq!(g.edges, vec![(0, 2)]);
        assert_eq!(g.to_csv().unwrap(), "source,target\ns0,s2\n");
        assert!(g.to_dot().contains("\"s0\" -- \"s2\";"));
        assert!(export_dependency_graph(&a, 0.0, &labels(2)).is_err());
    }
}
