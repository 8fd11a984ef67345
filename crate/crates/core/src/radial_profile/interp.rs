//! Local polynomial interpolation on scattered 1D nodes.

/// Derivative weights of the interpolating polynomial through `nodes`,
/// evaluated at `z`, for derivative orders `0..=max_order`.
///
/// `weights[k][j]` multiplies the sample at `nodes[j]` to give the k-th
/// derivative. This is Fornberg's recursion, so it handles non-uniform nodes.
pub fn fornberg_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Value and first three derivatives of the local interpolant.
pub fn local_derivatives(z: f64, nodes: &[f64], values: &[f64]) -> [f64; 4] {
    let w = fornberg_weights(z, nodes, 3);
    let mut out = [0.0; 4];
    for (k, row) in w.iter().enumerate() {
        out[k] = row.iter().zip(values).map(|(a, b)| a * b).sum();
    }
    out
}

/// First index of a window of `width` consecutive entries of `nodes`
/// (sorted ascending) that brackets `z` as centrally as possible.
pub fn window_start(nodes: &[f64], z: f64, width: usize) -> usize {
    let n = nodes.len();
    debug_assert!(width <= n);
    let upper = nodes.partition_point(|&x| x <= z);
    let left = upper.saturating_sub(1);
    let half = (width - 1) / 2;
    left.saturating_sub(half).min(n - width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials_up_to_degree() {
        let nodes = [0.0, 0.3, 0.7, 1.2, 1.3, 2.0];
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.1 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x - 0.5 * x.powi(4);
        let d2p = |x: f64| 3.0 * x - 2.0 * x.powi(3);
        let d3p = |x: f64| 3.0 - 6.0 * x * x;
        let vals: Vec<f64> = nodes.iter().map(|&x| p(x)).collect();
        for &z in &[0.1, 0.55, 1.25, 1.9] {
            let d = local_derivatives(z, &nodes, &vals);
            assert!((d[0] - p(z)).abs() < 1e-12);
            assert!((d[1] - dp(z)).abs() < 1e-10);
            assert!((d[2] - d2p(z)).abs() < 1e-9);
            assert!((d[3] - d3p(z)).abs() < 1e-8);
        }
    }

    #[test]
    fn window_is_clamped_to_table() {
        let nodes: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(window_start(&nodes, -1.0, 4), 0);
        assert_eq!(window_start(&nodes, 4.5, 4), 3);
        assert_eq!(window_start(&nodes, 9.5, 4), 6);
    }
}
