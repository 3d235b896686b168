//! Composite Gauss-Legendre rules on uniform panels.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Result, WitnessError};

/// Points per panel.
pub const PANEL_ORDER: usize = 16;

/// Hard limit on panel doublings before declaring non-convergence.
const MAX_PANELS: usize = 1 << 16;

fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut pairs = GaussLegendre::new(PANEL_ORDER)
            .expect("panel order is at least 2")
            .into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Quadrature nodes and weights for `[a, b]` split into `panels` equal panels.
#[derive(Debug, Clone, PartialEq)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Nodes {
    pub fn panels(a: f64, b: f64, panels: usize) -> Self {
        let rule = reference_rule();
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut x = Vec::with_capacity(panels * rule.len());
        let mut w = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let lo = a + width * p as f64;
            let half = 0.5 * width;
            let mid = lo + half;
            for &(t, wt) in rule {
                x.push(mid + half * t);
                w.push(half * wt);
            }
        }
        Nodes { x, w }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Number of panels needed so none is wider than `max_width`.
pub fn panel_count(a: f64, b: f64, max_width: f64) -> usize {
    if !(max_width > 0.0) || !(b > a) {
        return 1;
    }
    (((b - a) / max_width).ceil() as usize).clamp(1, MAX_PANELS)
}

/// Result of an adaptive integration with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Integrates a scalar quantity computed from a node set, doubling the panel
/// count until two successive estimates agree to `abs_tol`.
///
/// `eval` maps a node set to the integral approximation on those nodes; this
/// lets callers integrate vector-valued or double integrals with the same
/// refinement loop.
pub fn refine<F>(start_panels: usize, abs_tol: f64, mut eval: F) -> Result<Estimate>
where
    F: FnMut(usize) -> f64,
{
    let mut panels = start_panels.max(1);
    let mut coarse = eval(panels);
    loop {
        let fine_panels = panels * 2;
        let fine = eval(fine_panels);
        let error = (fine - coarse).abs();
        if error <= abs_tol || error <= 1e-14 * fine.abs() {
            return Ok(Estimate {
                value: fine,
                error,
                panels: fine_panels,
            });
        }
        if fine_panels >= MAX_PANELS {
            return Err(WitnessError::Numerical(format!(
                "quadrature did not converge: {fine_panels} panels, \
                 estimate {fine:.6e}, error estimate {error:.3e} > tolerance {abs_tol:.3e}"
            )));
        }
        panels = fine_panels;
        coarse = fine;
    }
}

/// Adaptive panel integration of a scalar function.
pub fn integrate<F>(f: F, a: f64, b: f64, max_panel_width: f64, abs_tol: f64) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let start = panel_count(a, b, max_panel_width);
    refine(start, abs_tol, |panels| {
        let nodes = Nodes::panels(a, b, panels);
        nodes.x.iter().zip(&nodes.w).map(|(&x, &w)| w * f(x)).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let est = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 10.0, 1e-14).unwrap();
        assert!((est.value - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let k = 200.0;
        let est = integrate(|x| (k * x).sin().powi(2), 0.0, 1.0, 0.01, 1e-12).unwrap();
        let exact = 0.5 - (2.0 * k).sin() / (4.0 * k);
        assert!((est.value - exact).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x| x, 1.0, 1.0, 0.1, 1e-12).unwrap().value, 0.0);
    }

    #[test]
    fn nodes_sum_to_length() {
        let n = Nodes::panels(-1.5, 2.0, 7);
        assert_eq!(n.len(), 7 * PANEL_ORDER);
        assert!((n.w.iter().sum::<f64>() - 3.5).abs() < 1e-13);
    }
}
