//! Finite-difference weights on the uniform node lattice.

/// Weights of the `order`-th derivative at `z` from values at `nodes` (Fornberg's recursion).
pub(crate) fn fornberg(order: usize, z: f64, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// One node's stencil: weights applied to `values[start..start + weights.len()]`.
#[derive(Clone, Debug)]
pub(crate) struct Stencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

/// Second-order accurate stencils for every node of an axis with `n` nodes and spacing `h`.
/// Interior nodes use the symmetric central stencil; nodes closer to the ends than its
/// half-width use the one-sided `order + 2` point stencil anchored at the boundary.
pub(crate) fn axis_stencils(order: usize, n: usize, h: f64) -> Vec<Stencil> {
    if order == 0 {
        return (0..n).map(|i| Stencil { start: i, weights: vec![1.0] }).collect();
    }
    let half = order.div_ceil(2);
    let scale = h.powi(order as i32);
    let central: Vec<f64> = {
        let offsets: Vec<f64> = (0..=2 * half).map(|k| k as f64 - half as f64).collect();
        fornberg(order, 0.0, &offsets).into_iter().map(|w| w / scale).collect()
    };
    let width = order + 2;
    (0..n)
        .map(|i| {
            if i >= half && i + half < n {
                Stencil { start: i - half, weights: central.clone() }
            } else {
                let start = if i < half { 0 } else { n - width };
                let offsets: Vec<f64> = (0..width).map(|k| (start + k) as f64).collect();
                let weights = fornberg(order, i as f64, &offsets).into_iter().map(|w| w / scale).collect();
                Stencil { start, weights }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn central_weights() {
        assert!(approx(&fornberg(1, 0.0, &[-1.0, 0.0, 1.0]), &[-0.5, 0.0, 0.5]));
        assert!(approx(&fornberg(2, 0.0, &[-1.0, 0.0, 1.0]), &[1.0, -2.0, 1.0]));
        assert!(approx(&fornberg(3, 0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]), &[-0.5, 1.0, 0.0, -1.0, 0.5]));
        assert!(approx(&fornberg(4, 0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0]), &[1.0, -4.0, 6.0, -4.0, 1.0]));
    }

    #[test]
    fn one_sided_weights() {
        assert!(approx(&fornberg(1, 0.0, &[0.0, 1.0, 2.0]), &[-1.5, 2.0, -0.5]));
        assert!(approx(&fornberg(2, 0.0, &[0.0, 1.0, 2.0, 3.0]), &[2.0, -5.0, 4.0, -1.0]));
        assert!(approx(&fornberg(4, 0.0, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]), &[3.0, -14.0, 26.0, -24.0, 11.0, -2.0]));
    }

    #[test]
    fn stencils_are_exact_on_low_degree_polynomials() {
        let (n, h) = (41, 0.1);
        let xs: Vec<f64> = (0..n).map(|i| -2.0 + h * i as f64).collect();
        for order in 1..=4 {
            let st = axis_stencils(order, n, h);
            for degree in 0..=order + 1 {
                let vals: Vec<f64> = xs.iter().map(|x| x.powi(degree as i32)).collect();
                for (i, s) in st.iter().enumerate() {
                    let d: f64 = s.weights.iter().enumerate().map(|(k, w)| w * vals[s.start + k]).sum();
                    let exact = if degree < order {
                        0.0
                    } else {
                        let f: f64 = ((degree - order + 1)..=degree).map(|m| m as f64).product();
                        f * xs[i].powi((degree - order) as i32)
                    };
                    assert!((d - exact).abs() < 1e-6 * exact.abs().max(1.0), "order {order} degree {degree} node {i}");
                }
            }
        }
    }
}
