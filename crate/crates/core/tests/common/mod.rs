//! Shared helpers for the integration suites: a from-scratch batch
//! posterior solver used as the independent oracle against the
//! incremental implementation.

use gp_threds::kernel::KernelSpec;

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Deliberately a different algorithm from the production path.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot_row);
        let pivot = m[col][col];
        assert!(pivot.abs() > 1e-300, "singular system");
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row][col] / pivot;
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

/// Batch posterior mean and standard deviation, computed directly from
/// the closed-form expressions with an explicit system solve.
pub fn batch_posterior(
    kernel: &KernelSpec,
    lambda: f64,
    xs: &[Vec<f64>],
    ys: &[f64],
    probe: &[f64],
) -> (f64, f64) {
    let t = xs.len();
    if t == 0 {
        return (0.0, kernel.eval(probe, probe).unwrap().sqrt());
    }
    let mut gram = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in 0..t {
            gram[i][j] = kernel.eval(&xs[i], &xs[j]).unwrap();
        }
        gram[i][i] += lambda;
    }
    let kvec: Vec<f64> = xs.iter().map(|x| kernel.eval(x, probe).unwrap()).collect();
    let z = solve_dense(&gram, ys);
    let w = solve_dense(&gram, &kvec);
    let mu: f64 = kvec.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
    let var = kernel.eval(probe, probe).unwrap()
        - kvec.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>();
    (mu, var.max(0.0).sqrt())
}
