//! External clustering scores from the contingency table of two labelings.
//!
//! Degenerate labelings follow the usual scikit-learn conventions: a single
//! cluster on both sides (or all singletons on both sides) scores ARI 1, and a
//! zero-entropy class side makes homogeneity 1.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringScores {
    pub ari: f64,
    /// Mutual information normalized by the arithmetic mean of the two entropies.
    pub nmi: f64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub fms: f64,
}

/// Contingency counts `n_ij` with row sums `a_i` (true) and column sums `b_j` (predicted).
struct Contingency {
    cells: Vec<u64>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

fn contingency<T: Eq + Hash + Copy>(truth: &[T], pred: &[T]) -> Contingency {
    fn index<T: Eq + Hash + Copy>(labels: &[T]) -> (Vec<usize>, usize) {
        let mut ids = HashMap::new();
        let codes = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(*l).or_insert(next)
            })
            .collect();
        (codes, ids.len())
    }
    let (t, nt) = index(truth);
    let (p, np) = index(pred);
    let mut cells = vec![0u64; nt * np];
    let mut rows = vec![0u64; nt];
    let mut cols = vec![0u64; np];
    for (&i, &j) in t.iter().zip(&p) {
        cells[i * np + j] += 1;
        rows[i] += 1;
        cols[j] += 1;
    }
    Contingency {
        cells,
        rows,
        cols,
        n: truth.len() as u64,
    }
}

fn pairs(m: u64) -> f64 {
    (m * m.saturating_sub(1) / 2) as f64
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn clustering_metrics<T: Eq + Hash + Copy>(truth: &[T], pred: &[T]) -> Result<ClusteringScores> {
    if truth.len() != pred.len() {
        return Err(Error::validation(format!(
            "label vectors differ in length: {} vs {}",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::validation("need at least one labeled point"));
    }
    let c = contingency(truth, pred);
    let n = c.n as f64;

    let sum_cells: f64 = c.cells.iter().map(|&m| pairs(m)).sum();
    let sum_rows: f64 = c.rows.iter().map(|&m| pairs(m)).sum();
    let sum_cols: f64 = c.cols.iter().map(|&m| pairs(m)).sum();
    let total = pairs(c.n);

    let trivial = c.rows.len() == c.cols.len()
        && (c.rows.len() == 1 || c.rows.len() as u64 == c.n);
    let ari = if trivial || total == 0.0 {
        1.0
    } else {
        let expected = sum_rows * sum_cols / total;
        let max_index = 0.5 * (sum_rows + sum_cols);
        if max_index == expected {
            1.0
        } else {
            (sum_cells - expected) / (max_index - expected)
        }
    };

    let h_true = entropy(&c.rows, n);
    let h_pred = entropy(&c.cols, n);
    let np = c.cols.len();
    let mut mi = 0.0;
    for (i, &a) in c.rows.iter().enumerate() {
        for (j, &b) in c.cols.iter().enumerate() {
            let m = c.cells[i * np + j];
            if m > 0 {
                let m = m as f64;
                mi += m / n * (n * m / (a as f64 * b as f64)).ln();
            }
        }
    }
    let mi = mi.max(0.0);

    let homogeneity = if h_true == 0.0 { 1.0 } else { mi / h_true };
    let completeness = if h_pred == 0.0 { 1.0 } else { mi / h_pred };
    let v_measure = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    let nmi = if h_true == 0.0 && h_pred == 0.0 {
        1.0
    } else {
        mi / (0.5 * (h_true + h_pred))
    };
    let fms = if sum_cells == 0.0 {
        0.0
    } else {
        sum_cells / (sum_rows * sum_cols).sqrt()
    };

    Ok(ClusteringScores {
        ari,
        nmi: nmi.min(1.0),
        homogeneity: homogeneity.min(1.0),
        completeness: completeness.min(1.0),
        v_measure: v_measure.min(1.0),
        fms,
    })
}
