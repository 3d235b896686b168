//! One-dimensional eigenbases along a single axis.
//!
//! Every supported trap is separable, so region functionals for slab regions
//! reduce to integrals over one axis. `AxisBasis` describes that axis:
//! eigenfunctions, energies, and overlap integrals on sub-intervals.

use std::f64::consts::PI;

use crate::constants::HBAR;
use crate::error::{Result, WitnessError};
use crate::hermite::{hermite_function, hermite_functions};
use crate::quadrature::{self, Nodes};

/// A closed interval `[lo, hi]` along one axis, in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(WitnessError::Domain(format!(
                "invalid interval [{lo:e}, {hi:e}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Mirror image about `center`.
    pub fn reflect(&self, center: f64) -> Interval {
        Interval {
            lo: 2.0 * center - self.hi,
            hi: 2.0 * center - self.lo,
        }
    }
}

/// Eigenbasis of a single axis.
///
/// Quantum numbers follow the physical convention: `n >= 1` for the hard-wall
/// well, `n >= 0` for the oscillator and for the Neumann well (whose `n = 0`
/// mode is the flat mode `1/sqrt(L)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisBasis {
    /// Infinite square well on `[0, L]`: `sqrt(2/L) sin(n pi x / L)`.
    Well { length: f64, mass: f64 },
    /// Harmonic oscillator centred at the origin.
    Harmonic { omega: f64, mass: f64 },
    /// Hard box with Neumann walls: `1/sqrt(L)` and `sqrt(2/L) cos(n pi x / L)`.
    /// Supplies the flat single-mode kernel of a uniform condensate.
    NeumannWell { length: f64, mass: f64 },
}

impl AxisBasis {
    pub fn validate(&self) -> Result<()> {
        let (scale, mass) = match *self {
            AxisBasis::Well { length, mass } | AxisBasis::NeumannWell { length, mass } => {
                (length, mass)
            }
            AxisBasis::Harmonic { omega, mass } => (omega, mass),
        };
        if !(scale.is_finite() && scale > 0.0) {
            return Err(WitnessError::Domain(format!(
                "axis length/frequency must be positive, got {scale:e}"
            )));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(WitnessError::Domain(format!(
                "mass must be positive, got {mass:e}"
            )));
        }
        Ok(())
    }

    pub fn first_qn(&self) -> u32 {
        match self {
            AxisBasis::Well { .. } => 1,
            AxisBasis::Harmonic { .. } | AxisBasis::NeumannWell { .. } => 0,
        }
    }

    pub fn check_qn(&self, qn: u32) -> Result<()> {
        if qn < self.first_qn() {
            return Err(WitnessError::Domain(format!(
                "quantum number {qn} invalid for {self:?} (minimum {})",
                self.first_qn()
            )));
        }
        Ok(())
    }

    /// Closed-form eigenvalue, J.
    pub fn energy(&self, qn: u32) -> f64 {
        let n = qn as f64;
        match *self {
            AxisBasis::Well { length, mass } | AxisBasis::NeumannWell { length, mass } => {
                HBAR * HBAR * PI * PI * n * n / (2.0 * mass * length * length)
            }
            AxisBasis::Harmonic { omega, .. } => HBAR * omega * (n + 0.5),
        }
    }

    /// Excitation energy above the axis ground state, J.
    pub fn excitation(&self, qn: u32) -> f64 {
        let n = qn as f64;
        match *self {
            AxisBasis::Well { length, mass } => {
                HBAR * HBAR * PI * PI * (n * n - 1.0) / (2.0 * mass * length * length)
            }
            AxisBasis::NeumannWell { length, mass } => {
                HBAR * HBAR * PI * PI * n * n / (2.0 * mass * length * length)
            }
            AxisBasis::Harmonic { omega, .. } => HBAR * omega * n,
        }
    }

    /// Oscillator length `sqrt(hbar / (m omega))`, or the box length.
    pub fn length_scale(&self) -> f64 {
        match *self {
            AxisBasis::Well { length, .. } | AxisBasis::NeumannWell { length, .. } => length,
            AxisBasis::Harmonic { omega, mass } => (HBAR / (mass * omega)).sqrt(),
        }
    }

    /// Finite support of the eigenfunctions, if any.
    pub fn domain(&self) -> Option<Interval> {
        match *self {
            AxisBasis::Well { length, .. } | AxisBasis::NeumannWell { length, .. } => {
                Some(Interval { lo: 0.0, hi: length })
            }
            AxisBasis::Harmonic { .. } => None,
        }
    }

    pub fn center(&self) -> f64 {
        match self.domain() {
            Some(d) => 0.5 * (d.lo + d.hi),
            None => 0.0,
        }
    }

    pub fn has_closed_form_overlaps(&self) -> bool {
        !matches!(self, AxisBasis::Harmonic { .. })
    }

    /// Half the local oscillation wavelength of mode `qn`; used as the panel
    /// width cap for quadrature.
    pub fn half_wavelength(&self, qn: u32) -> f64 {
        match *self {
            AxisBasis::Well { length, .. } | AxisBasis::NeumannWell { length, .. } => {
                length / (qn.max(1) as f64)
            }
            AxisBasis::Harmonic { .. } => {
                // local wavenumber at the trap centre is sqrt(2n+1) / a
                0.5 * 2.0 * PI * self.length_scale() / (2.0 * qn as f64 + 1.0).sqrt()
            }
        }
    }

    /// Eigenfunction value, units m^{-1/2}. Zero outside a finite domain.
    pub fn eval(&self, qn: u32, x: f64) -> f64 {
        match *self {
            AxisBasis::Well { length, .. } => {
                if !(0.0..=length).contains(&x) {
                    return 0.0;
                }
                (2.0 / length).sqrt() * (qn as f64 * PI * x / length).sin()
            }
            AxisBasis::NeumannWell { length, .. } => {
                if !(0.0..=length).contains(&x) {
                    return 0.0;
                }
                if qn == 0 {
                    1.0 / length.sqrt()
                } else {
                    (2.0 / length).sqrt() * (qn as f64 * PI * x / length).cos()
                }
            }
            AxisBasis::Harmonic { .. } => {
                let a = self.length_scale();
                hermite_function(qn as usize, x / a) / a.sqrt()
            }
        }
    }

    /// Values of the first `count` eigenfunctions (starting at `first_qn`) at `x`.
    pub fn eval_all(&self, count: usize, x: f64) -> Vec<f64> {
        match *self {
            AxisBasis::Harmonic { .. } => {
                let a = self.length_scale();
                let norm = 1.0 / a.sqrt();
                let mut v = hermite_functions(x / a, count);
                v.iter_mut().for_each(|e| *e *= norm);
                v
            }
            _ => {
                let q0 = self.first_qn();
                (0..count).map(|i| self.eval(q0 + i as u32, x)).collect()
            }
        }
    }

    /// `int_a^b phi_n phi_l dx`.
    ///
    /// Closed-form antiderivatives for the wells; adaptive panel Gauss-Legendre
    /// for the oscillator.
    pub fn overlap(&self, qn_a: u32, qn_b: u32, interval: Interval, abs_tol: f64) -> Result<f64> {
        self.check_qn(qn_a)?;
        self.check_qn(qn_b)?;
        match *self {
            AxisBasis::Well { length, .. } | AxisBasis::NeumannWell { length, .. } => {
                let iv = clip(interval, length);
                if iv.hi <= iv.lo {
                    return Ok(0.0);
                }
                let (n, l) = (qn_a.max(qn_b), qn_a.min(qn_b));
                Ok(box_overlap(self, n, l, iv.lo / length, iv.hi / length))
            }
            AxisBasis::Harmonic { .. } => {
                if interval.hi <= interval.lo {
                    return Ok(0.0);
                }
                let width = self.half_wavelength(qn_a.max(qn_b));
                let est = quadrature::integrate(
                    |x| self.eval(qn_a, x) * self.eval(qn_b, x),
                    interval.lo,
                    interval.hi,
                    width,
                    abs_tol,
                )?;
                Ok(est.value)
            }
        }
    }

    /// `int_a^b phi_n dx` for the first `count` modes, in closed form where
    /// available.
    pub fn mode_integrals(&self, count: usize, interval: Interval) -> Option<Vec<f64>> {
        let (length, neumann) = match *self {
            AxisBasis::Well { length, .. } => (length, false),
            AxisBasis::NeumannWell { length, .. } => (length, true),
            AxisBasis::Harmonic { .. } => return None,
        };
        let iv = clip(interval, length);
        let q0 = self.first_qn();
        if iv.hi <= iv.lo {
            return Some(vec![0.0; count]);
        }
        let (ta, tb) = (PI * iv.lo / length, PI * iv.hi / length);
        let amp = (2.0 / length).sqrt() * length / PI;
        Some(
            (0..count)
                .map(|i| {
                    let n = (q0 + i as u32) as f64;
                    let (mid, half) = (0.5 * n * (ta + tb), 0.5 * n * (tb - ta));
                    if neumann {
                        if n == 0.0 {
                            iv.length() / length.sqrt()
                        } else {
                            // sin(n tb) - sin(n ta)
                            amp / n * 2.0 * mid.cos() * half.sin()
                        }
                    } else {
                        // cos(n ta) - cos(n tb)
                        amp / n * 2.0 * mid.sin() * half.sin()
                    }
                })
                .collect(),
        )
    }

    /// Quadrature nodes covering `interval` fine enough for products of the
    /// first `count` modes.
    pub fn nodes_for(&self, interval: Interval, count: usize, refinement: usize) -> Nodes {
        let iv = match self.domain() {
            Some(d) => clip(interval, d.hi),
            None => interval,
        };
        let top = self.first_qn() + count.saturating_sub(1) as u32;
        let panels = quadrature::panel_count(iv.lo, iv.hi, self.half_wavelength(top));
        Nodes::panels(iv.lo, iv.hi, panels * refinement.max(1))
    }
}

fn clip(iv: Interval, length: f64) -> Interval {
    Interval {
        lo: iv.lo.clamp(0.0, length),
        hi: iv.hi.clamp(0.0, length),
    }
}

/// Overlap of two box modes on `[u_a L, u_b L]`, `n >= l`.
fn box_overlap(basis: &AxisBasis, n: u32, l: u32, ua: f64, ub: f64) -> f64 {
    let neumann = matches!(basis, AxisBasis::NeumannWell { .. });
    // sin(k pi ub) - sin(k pi ua), stable for short intervals
    let dsin = |k: f64| 2.0 * (0.5 * k * PI * (ua + ub)).cos() * (0.5 * k * PI * (ub - ua)).sin();
    let (nf, lf) = (n as f64, l as f64);
    if neumann && l == 0 {
        if n == 0 {
            return ub - ua;
        }
        return 2f64.sqrt() * dsin(nf) / (nf * PI);
    }
    let sign = if neumann { 1.0 } else { -1.0 };
    if n == l {
        (ub - ua) + sign * dsin(2.0 * nf) / (2.0 * nf * PI)
    } else {
        (dsin(nf - lf) / (nf - lf) + sign * dsin(nf + lf) / (nf + lf)) / PI
    }
}
