//! Quadrature rules: composite Gauss–Legendre and the periodic trapezoid.

use gauss_quad::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of an `order`-point Gauss–Legendre rule on `[-1, 1]`,
/// sorted by node.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
    let mut nw: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    nw.sort_by(|a, b| a.0.total_cmp(&b.0));
    nw
}

/// Composite rule on `[a, b]` with `panels` equal panels of `order` nodes.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(order);
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in &base {
            out.push((lo + 0.5 * w * (x + 1.0), 0.5 * w * wt));
        }
    }
    out
}

/// Composite Gauss–Legendre on `[a, b]` with panel width at most `max_width`.
pub fn composite_gauss_width(a: f64, b: f64, max_width: f64, order: usize) -> Vec<(f64, f64)> {
    let panels = ((b - a).abs() / max_width).ceil().max(1.0) as usize;
    composite_gauss(a, b, panels, order)
}

/// Periodic trapezoid rule on `[0, 2π)`: nodes `2πj/N`, weights `2π/N`.
///
/// Exact for trigonometric polynomials of degree `< N`.
pub fn periodic_trapezoid(n: usize) -> Vec<(f64, f64)> {
    let w = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|j| (j as f64 * w, w)).collect()
}

/// Default node count for the periodic rule: next power of two at least
/// `2·width + 1`.
pub fn default_trapezoid_nodes(support_width: usize) -> usize {
    (2 * support_width + 1).next_power_of_two()
}
