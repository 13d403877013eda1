//! Cholesky factorization with deterministic dropping of collinear columns.

/// Relative pivot below which a column counts as linearly dependent on earlier ones.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Lower-triangular factor of the Gram submatrix over `kept` columns.
#[derive(Debug, Clone)]
pub(crate) struct PivotedCholesky {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// Row-major `kept.len() x kept.len()` lower-triangular factor.
    l: Vec<f64>,
}

impl PivotedCholesky {
    /// Factorizes the symmetric PSD matrix `gram` (row-major, `k x k`), visiting
    /// columns in index order and dropping any whose residual pivot is negligible.
    /// Earlier (smaller-index) columns are always preferred.
    pub fn new(gram: &[f64], k: usize) -> Self {
        let mut kept: Vec<usize> = Vec::with_capacity(k);
        let mut dropped = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
        for c in 0..k {
            let diag = gram[c * k + c];
            let mut row = Vec::with_capacity(kept.len() + 1);
            for (i, &ki) in kept.iter().enumerate() {
                let s: f64 = (0..i).map(|m| row[m] * rows[i][m]).sum();
                row.push((gram[c * k + ki] - s) / rows[i][i]);
            }
            let pivot = diag - row.iter().map(|v| v * v).sum::<f64>();
            if diag <= 0.0 || pivot <= RANK_TOL * diag {
                dropped.push(c);
                continue;
            }
            row.push(pivot.sqrt());
            rows.push(row);
            kept.push(c);
        }
        let m = kept.len();
        let mut l = vec![0.0; m * m];
        for (i, row) in rows.iter().enumerate() {
            l[i * m..i * m + row.len()].copy_from_slice(row);
        }
        PivotedCholesky { kept, dropped, l }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.rank() + j]
    }

    /// Solves `G x = b` on the kept subsystem (`b` indexed like `kept`).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.rank();
        let mut z = vec![0.0; m];
        for i in 0..m {
            let s: f64 = (0..i).map(|j| self.at(i, j) * z[j]).sum();
            z[i] = (b[i] - s) / self.at(i, i);
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let s: f64 = ((i + 1)..m).map(|j| self.at(j, i) * x[j]).sum();
            x[i] = (z[i] - s) / self.at(i, i);
        }
        x
    }

    /// Diagonal of the inverse of the kept subsystem.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let m = self.rank();
        let mut diag = vec![0.0; m];
        // Column j of L^{-1}; (G^{-1})_{jj} = sum_i (L^{-1})_{ij}^2.
        for j in 0..m {
            let mut col = vec![0.0; m];
            col[j] = 1.0 / self.at(j, j);
            for i in (j + 1)..m {
                let s: f64 = (j..i).map(|t| self.at(i, t) * col[t]).sum();
                col[i] = -s / self.at(i, i);
            }
            diag[j] = col[j..].iter().map(|v| v * v).sum();
        }
        diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let g = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let chol = PivotedCholesky::new(&g, 3);
        assert!(chol.dropped.is_empty());
        let x = chol.solve(&[1.0, 2.0, 3.0]);
        for r in 0..3 {
            let lhs: f64 = (0..3).map(|c| g[r * 3 + c] * x[c]).sum();
            assert!((lhs - [1.0, 2.0, 3.0][r]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_diagonal_matches_explicit_inverse() {
        // [[2, 1], [1, 3]]^{-1} = [[3, -1], [-1, 2]] / 5
        let chol = PivotedCholesky::new(&[2.0, 1.0, 1.0, 3.0], 2);
        let d = chol.inverse_diagonal();
        assert!((d[0] - 0.6).abs() < 1e-14);
        assert!((d[1] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn drops_duplicate_column_keeping_first() {
        // Columns 0 and 2 identical.
        let g = [2.0, 1.0, 2.0, 1.0, 3.0, 1.0, 2.0, 1.0, 2.0];
        let chol = PivotedCholesky::new(&g, 3);
        assert_eq!(chol.kept, vec![0, 1]);
        assert_eq!(chol.dropped, vec![2]);
    }
}
