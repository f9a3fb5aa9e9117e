//! Fixed-step classical Runge-Kutta integration backward in time, plus the
//! midpoint interpolation used for tabulated inputs.

use crate::error::{Error, Result};

/// Stage position inside the interval `[nodes[k], nodes[k+1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Left,
    Mid,
    Right,
}

/// Integrates `dy/dt = -F(t, y)` backward from `y(nodes.last()) = terminal`.
///
/// `rhs(k, stage, y)` returns `F` on interval `k` at the given stage. Values
/// whose magnitude exceeds `ceiling` abort with `BlowUp`; `node_offset` turns
/// local indices into grid indices for the error.
pub(crate) fn rk4_backward<const D: usize>(
    nodes: &[f64],
    terminal: [f64; D],
    ceiling: f64,
    node_offset: usize,
    mut rhs: impl FnMut(usize, Stage, &[f64; D]) -> Result<[f64; D]>,
) -> Result<Vec<[f64; D]>> {
    let n = nodes.len() - 1;
    let mut ys = vec![[0.0; D]; n + 1];
    ys[n] = terminal;
    let shift = |y: &[f64; D], k: &[f64; D], w: f64| {
        let mut out = *y;
        for (o, kk) in out.iter_mut().zip(k) {
            *o += w * kk;
        }
        out
    };
    for k in (0..n).rev() {
        let h = nodes[k + 1] - nodes[k];
        let y = ys[k + 1];
        let k1 = rhs(k, Stage::Right, &y)?;
        let k2 = rhs(k, Stage::Mid, &shift(&y, &k1, 0.5 * h))?;
        let k3 = rhs(k, Stage::Mid, &shift(&y, &k2, 0.5 * h))?;
        let k4 = rhs(k, Stage::Left, &shift(&y, &k3, h))?;
        let mut next = y;
        for d in 0..D {
            next[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        if next.iter().any(|v| !v.is_finite() || v.abs() > ceiling) {
            return Err(Error::BlowUp {
                node: node_offset + k,
                ceiling,
            });
        }
        ys[k] = next;
    }
    Ok(ys)
}

/// Value midway between nodes `i` and `i + 1` of a uniformly tabulated
/// curve, by cubic Lagrange interpolation through the four nearest nodes
/// (quadratic when only three exist).
pub(crate) fn midpoint(values: &[f64], i: usize) -> f64 {
    let n = values.len() - 1;
    debug_assert!(i < n);
    let v = |j: usize| values[j];
    if n == 1 {
        return 0.5 * (v(0) + v(1));
    }
    if n == 2 {
        return if i == 0 {
            0.375 * v(0) + 0.75 * v(1) - 0.125 * v(2)
        } else {
            -0.125 * v(0) + 0.75 * v(1) + 0.375 * v(2)
        };
    }
    if i == 0 {
        0.3125 * v(0) + 0.9375 * v(1) - 0.3125 * v(2) + 0.0625 * v(3)
    } else if i == n - 1 {
        0.0625 * v(n - 3) - 0.3125 * v(n - 2) + 0.9375 * v(n - 1) + 0.3125 * v(n)
    } else {
        (-v(i - 1) + 9.0 * v(i) + 9.0 * v(i + 1) - v(i + 2)) / 16.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order_on_exponential() {
        // dy/dt = y  ->  -F = y, F = -y; y(1) = 1, y(0) = e^{-1}
        let err = |n: usize| {
            let nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let ys = rk4_backward(&nodes, [1.0], 1e9, 0, |_, _, y| Ok([-y[0]])).unwrap();
            (ys[0][0] - (-1.0f64).exp()).abs()
        };
        let order = (err(10) / err(20)).log2();
        assert!(order > 3.9, "order {order}");
    }

    #[test]
    fn midpoint_is_exact_on_cubics() {
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x - 0.3 * x * x * x;
        let vals: Vec<f64> = (0..=6).map(|i| f(i as f64)).collect();
        for i in 0..6 {
            assert!((midpoint(&vals, i) - f(i as f64 + 0.5)).abs() < 1e-12);
        }
        let q = |x: f64| 2.0 + x - x * x;
        let vals: Vec<f64> = (0..=2).map(|i| q(i as f64)).collect();
        assert!((midpoint(&vals, 0) - q(0.5)).abs() < 1e-14);
        assert!((midpoint(&vals, 1) - q(1.5)).abs() < 1e-14);
    }

    #[test]
    fn blow_up_is_reported() {
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let r = rk4_backward(&nodes, [1.0], 10.0, 0, |_, _, y| Ok([y[0] * y[0] * 100.0]));
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
