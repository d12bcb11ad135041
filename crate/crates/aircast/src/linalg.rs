//! Small dense linear-algebra helpers shared by the regression-based
//! modules. Sizes here are tiny (tens of columns), so plain row-major
//! `Vec<Vec<f64>>` with Gaussian elimination is plenty.

/// Gram matrix XᵀX of a row-major design.
pub fn gram(design: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = design.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; k]; k];
    for row in design {
        for i in 0..k {
            for j in i..k {
                out[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            out[i][j] = out[j][i];
        }
    }
    out
}

/// Xᵀy of a row-major design against a response vector.
pub fn gram_vec(design: &[Vec<f64>], response: &[f64]) -> Vec<f64> {
    let k = design.first().map_or(0, Vec::len);
    let mut out = vec![0.0; k];
    for (row, &y) in design.iter().zip(response) {
        for i in 0..k {
            out[i] += row[i] * y;
        }
    }
    out
}

/// X·b for a row-major design.
pub fn mat_vec(design: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    design
        .iter()
        .map(|row| row.iter().zip(b).map(|(x, c)| x * c).sum())
        .collect()
}

/// Solves A·x = b by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot collapses relative to the matrix scale.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return None;
    }
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Inverse of a symmetric positive-(semi)definite matrix by solving
/// against each basis vector. `None` when singular.
pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(a.to_vec(), e)?;
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Cholesky solve for a symmetric positive-definite system.
/// Returns `None` if the factorization breaks down.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // forward then back substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solve_recovers_known_solution() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let x = solve(a.clone(), vec![1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(a, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn cholesky_matches_gaussian_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..8);
            let m: Vec<Vec<f64>> = (0..n + 2)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut a = gram(&m);
            for i in 0..n {
                a[i][i] += 0.5; // keep it comfortably PD
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x1 = solve(a.clone(), b.clone()).unwrap();
            let x2 = cholesky_solve(&a, &b).unwrap();
            for (u, v) in x1.iter().zip(&x2) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn invert_times_matrix_is_identity() {
        let a = vec![vec![2.0, 0.5, 0.0], vec![0.5, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a[i][k] * inv[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10);
            }
        }
    }
}
