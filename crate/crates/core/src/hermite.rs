//! Normalized Hermite functions in oscillator units.
//!
//! `psi_n(xi) = (2^n n! sqrt(pi))^{-1/2} H_n(xi) exp(-xi^2 / 2)` is generated with
//! the three-term recurrence
//!
//! ```text
//! psi_{n+1} = xi sqrt(2 / (n + 1)) psi_n - sqrt(n / (n + 1)) psi_{n-1}
//! ```
//!
//! The Gaussian prefactor is carried as a separate logarithmic scale so the
//! recurrence neither underflows far from the origin nor overflows for large n.

const RESCALE_ABOVE: f64 = 1e150;
const RESCALE_BY: f64 = 1e-150;
// ln(1e150)
const LN_RESCALE: f64 = 345.387_763_949_106_9;

/// Recurrence state for a single abscissa.
#[derive(Debug, Clone, Copy)]
struct Cursor {
    xi: f64,
    prev: f64,
    cur: f64,
    log_scale: f64,
    factor: f64,
}

impl Cursor {
    fn new(xi: f64) -> Self {
        let log_scale = -0.5 * xi * xi - 0.25 * std::f64::consts::PI.ln();
        Cursor {
            xi,
            prev: 0.0,
            cur: 1.0,
            log_scale,
            factor: log_scale.exp(),
        }
    }

    #[inline]
    fn value(&self) -> f64 {
        self.cur * self.factor
    }

    /// Advances from psi_n to psi_{n+1}.
    #[inline]
    fn step(&mut self, n: usize) {
        let np1 = (n + 1) as f64;
        let next = self.xi * (2.0 / np1).sqrt() * self.cur - (n as f64 / np1).sqrt() * self.prev;
        self.prev = self.cur;
        self.cur = next;
        if self.cur.abs() > RESCALE_ABOVE {
            self.prev *= RESCALE_BY;
            self.cur *= RESCALE_BY;
            self.log_scale += LN_RESCALE;
            self.factor = self.log_scale.exp();
        }
    }
}

/// Returns `psi_0(xi), ..., psi_{count-1}(xi)`.
pub fn hermite_functions(xi: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut c = Cursor::new(xi);
    for n in 0..count {
        out.push(c.value());
        c.step(n);
    }
    out
}

/// Returns `psi_n(xi)`.
pub fn hermite_function(n: usize, xi: f64) -> f64 {
    let mut c = Cursor::new(xi);
    for k in 0..n {
        c.step(k);
    }
    c.value()
}

/// Generates Hermite function values for a fixed set of abscissae in blocks of
/// consecutive orders, so large mode counts never need a full
/// `modes x points` table in memory.
#[derive(Debug, Clone)]
pub struct HermiteStream {
    cursors: Vec<Cursor>,
    order: usize,
}

impl HermiteStream {
    pub fn new(xi: &[f64]) -> Self {
        HermiteStream {
            cursors: xi.iter().map(|&x| Cursor::new(x)).collect(),
            order: 0,
        }
    }

    /// Order of the next row that `next_block` will emit.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Fills `out` (row-major, `rows x points`) with the next `rows` orders.
    pub fn next_block(&mut self, rows: usize, out: &mut [f64]) {
        let points = self.cursors.len();
        debug_assert_eq!(out.len(), rows * points);
        for r in 0..rows {
            let n = self.order + r;
            let row = &mut out[r * points..(r + 1) * points];
            for (slot, c) in row.iter_mut().zip(self.cursors.iter_mut()) {
                *slot = c.value();
                c.step(n);
            }
        }
        self.order += rows;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders_match_closed_forms() {
        let pi4 = std::f64::consts::PI.powf(-0.25);
        for &x in &[-2.0, -0.3, 0.0, 0.7, 3.1] {
            let g = (-0.5 * x * x as f64).exp();
            let v = hermite_functions(x, 4);
            assert!((v[0] - pi4 * g).abs() < 1e-15);
            assert!((v[1] - pi4 * 2f64.sqrt() * x * g).abs() < 1e-15);
            assert!((v[2] - pi4 * (2.0 * x * x - 1.0) / 2f64.sqrt() * g).abs() < 1e-15);
            let h3 = 8.0 * x * x * x - 12.0 * x;
            assert!((v[3] - pi4 * h3 / 48f64.sqrt() * g).abs() < 1e-14);
        }
    }

    #[test]
    fn parity() {
        for n in [0usize, 1, 7, 50, 301] {
            let a = hermite_function(n, 1.3);
            let b = hermite_function(n, -1.3);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - sign * b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn far_tail_does_not_underflow_for_high_orders() {
        // Classical turning point of n = 5000 is sqrt(10001) ~ 100; at xi = 60
        // psi_0 underflows but psi_5000 is order one.
        let v = hermite_function(5000, 60.0);
        assert!(v.is_finite());
        assert!(v.abs() > 1e-6);
        // Beyond the turning point the function decays.
        assert!(hermite_function(5000, 130.0).abs() < 1e-20);
    }

    #[test]
    fn very_high_order_is_finite_and_bounded() {
        let bound = 1.1 * std::f64::consts::PI.powf(-0.25);
        for &x in &[0.0, 0.5, 50.0, 200.0, 316.0, 320.0] {
            let v = hermite_function(50_000, x);
            assert!(v.is_finite());
            assert!(v.abs() <= bound);
        }
    }

    #[test]
    fn stream_matches_pointwise() {
        let xs = [-4.0, -0.5, 0.0, 1.25, 9.0];
        let mut s = HermiteStream::new(&xs);
        let mut block = vec![0.0; 3 * xs.len()];
        s.next_block(3, &mut block);
        let mut block2 = vec![0.0; 4 * xs.len()];
        s.next_block(4, &mut block2);
        assert_eq!(s.order(), 7);
        for (j, &x) in xs.iter().enumerate() {
            let v = hermite_functions(x, 7);
            for n in 0..3 {
                assert_eq!(block[n * xs.len() + j], v[n]);
            }
            for n in 3..7 {
                assert_eq!(block2[(n - 3) * xs.len() + j], v[n]);
            }
        }
    }
}
