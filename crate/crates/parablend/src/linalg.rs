//! Small dense linear algebra used by the Newton solvers.

use crate::jets::Jet;

/// LU factorisation with partial pivoting of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl Lu {
    pub fn factor(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        let mut lu: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let mut pivots: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for col in 0..n {
            let (p, best) = (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= 1e-300 * scale || !best.is_finite() {
                return None;
            }
            if p != col {
                for j in 0..n {
                    lu.swap(p * n + j, col * n + j);
                }
                pivots.swap(p, col);
            }
            let piv = lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / piv;
                lu[r * n + col] = f;
                if f != 0.0 {
                    for j in col + 1..n {
                        lu[r * n + j] -= f * lu[col * n + j];
                    }
                }
            }
        }
        Some(Self { n, lu, pivots })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.pivots.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Solve coefficient-wise for a right-hand side of jets.
    pub fn solve_jets(&self, rhs: &[Jet]) -> Vec<Jet> {
        let len = rhs[0].len();
        let mut out: Vec<Jet> = rhs.iter().map(|j| j.scale(0.0)).collect();
        for c in 0..len {
            let col: Vec<f64> = rhs.iter().map(|j| j.taylor()[c]).collect();
            let sol = self.solve(&col);
            for (o, v) in out.iter_mut().zip(sol) {
                o.taylor_mut()[c] = v;
            }
        }
        out
    }
}

pub type Mat2 = [[f64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat2_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_identity() -> Mat2 {
    [[1.0, 0.0], [0.0, 1.0]]
}

/// Eigenvalues of a real 2×2 matrix as `(re, im)` pairs.
pub fn mat2_eigenvalues(a: &Mat2) -> [(f64, f64); 2] {
    let tr = a[0][0] + a[1][1];
    let det = mat2_det(a);
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Avoid cancellation for the smaller root.
        let big = 0.5 * tr + s.copysign(tr);
        let small = if big != 0.0 { det / big } else { 0.5 * tr - s };
        [(big, 0.0), (small, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(0.5 * tr, s), (0.5 * tr, -s)]
    }
}

/// Coefficients of the least-squares polynomial of degree `deg` through `(t_i, ·)`,
/// returned as a `(deg + 1) × n` pseudo-inverse.
pub fn polyfit_operator(nodes: &[f64], deg: usize) -> Option<Vec<Vec<f64>>> {
    let n = nodes.len();
    let m = deg + 1;
    let normal: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| nodes.iter().map(|t| t.powi((i + j) as i32)).sum()).collect())
        .collect();
    let lu = Lu::factor(&normal)?;
    let mut op = vec![vec![0.0; n]; m];
    for (c, t) in nodes.iter().enumerate() {
        let rhs: Vec<f64> = (0..m).map(|i| t.powi(i as i32)).collect();
        let col = lu.solve(&rhs);
        for i in 0..m {
            op[i][c] = col[i];
        }
    }
    Some(op)
}

/// Chebyshev points of the first kind on `[-1, 1]`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_permuted_system() {
        let m = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let lu = Lu::factor(&m).unwrap();
        let x = lu.solve(&[5.0, 3.0, 6.0]);
        for (row, b) in m.iter().zip([5.0, 3.0, 6.0]) {
            let v: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((v - b).abs() < 1e-12);
        }
        assert!(Lu::factor(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }

    #[test]
    fn polyfit_reproduces_cubic() {
        let nodes = chebyshev_nodes(9);
        let op = polyfit_operator(&nodes, 5).unwrap();
        let vals: Vec<f64> = nodes.iter().map(|t| 1.0 - 2.0 * t + 0.5 * t * t * t).collect();
        let coeffs: Vec<f64> = op.iter().map(|r| r.iter().zip(&vals).map(|(a, b)| a * b).sum()).collect();
        let expected = [1.0, -2.0, 0.0, 0.5, 0.0, 0.0];
        for (c, e) in coeffs.iter().zip(expected) {
            assert!((c - e).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let ev = mat2_eigenvalues(&[[16.0, 3.0], [0.0, 1e-6]]);
        assert_eq!(ev[0], (16.0, 0.0));
        assert!((ev[1].0 - 1e-6).abs() < 1e-20);
    }
}
