//! Trap geometries, single-particle modes and their truncation.

use arrayvec::ArrayVec;

use crate::basis::{AxisBasis, Interval};
use crate::constants::K_B;
use crate::error::{Result, WitnessError};
use crate::thermal::GasSpec;

/// Default hard cap on the number of individually enumerated modes.
pub const DEFAULT_MODE_CAP: usize = 10_000_000;

/// Quantum numbers of a mode, one per axis.
pub type QuantumNumbers = ArrayVec<u32, 3>;

/// Trapping potential.
///
/// Hard-wall domains are `[0, L]` per axis; harmonic traps are centred at the
/// origin. For the cigar trap axis 0 is the long (axial) axis and axes 1 and 2
/// are the tight perpendicular axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrapSpec {
    Uniform1D { length: f64 },
    UniformBox3D { lx: f64, ly: f64, lz: f64 },
    Harmonic1D { omega: f64 },
    HarmonicCigar3D { omega_ax: f64, omega_per: f64 },
}

impl TrapSpec {
    pub fn cube(length: f64) -> Self {
        TrapSpec::UniformBox3D {
            lx: length,
            ly: length,
            lz: length,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            TrapSpec::Uniform1D { .. } | TrapSpec::Harmonic1D { .. } => 1,
            TrapSpec::UniformBox3D { .. } | TrapSpec::HarmonicCigar3D { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params: ArrayVec<(&str, f64), 3> = match *self {
            TrapSpec::Uniform1D { length } => [("length", length)].into_iter().collect(),
            TrapSpec::UniformBox3D { lx, ly, lz } => {
                [("lx", lx), ("ly", ly), ("lz", lz)].into_iter().collect()
            }
            TrapSpec::Harmonic1D { omega } => [("omega", omega)].into_iter().collect(),
            TrapSpec::HarmonicCigar3D {
                omega_ax,
                omega_per,
            } => [("omega_ax", omega_ax), ("omega_per", omega_per)]
                .into_iter()
                .collect(),
        };
        for (name, v) in params {
            if !(v.is_finite() && v > 0.0) {
                return Err(WitnessError::Domain(format!(
                    "trap parameter {name} must be positive, got {v:e}"
                )));
            }
        }
        Ok(())
    }

    /// Per-axis eigenbases for a particle of the given mass.
    pub fn axis_bases(&self, mass: f64) -> ArrayVec<AxisBasis, 3> {
        let well = |length| AxisBasis::Well { length, mass };
        let osc = |omega| AxisBasis::Harmonic { omega, mass };
        match *self {
            TrapSpec::Uniform1D { length } => [well(length)].into_iter().collect(),
            TrapSpec::UniformBox3D { lx, ly, lz } => {
                [well(lx), well(ly), well(lz)].into_iter().collect()
            }
            TrapSpec::Harmonic1D { omega } => [osc(omega)].into_iter().collect(),
            TrapSpec::HarmonicCigar3D {
                omega_ax,
                omega_per,
            } => [osc(omega_ax), osc(omega_per), osc(omega_per)]
                .into_iter()
                .collect(),
        }
    }

    pub fn axis_basis(&self, axis: usize, mass: f64) -> Result<AxisBasis> {
        self.axis_bases(mass).get(axis).copied().ok_or_else(|| {
            WitnessError::Domain(format!(
                "axis {axis} out of range for a {}-dimensional trap",
                self.dims()
            ))
        })
    }
}

/// A single-particle eigenmode.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub qn: QuantumNumbers,
    /// Eigenvalue, J.
    pub energy: f64,
}

/// Energy-ordered truncation of the single-particle spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub gas: GasSpec,
    /// Ascending in energy; ties ordered lexicographically by quantum numbers.
    pub modes: Vec<Mode>,
    /// Upper bound on the total Bose occupation of every excluded mode.
    pub truncation_tail_bound: f64,
    /// Largest excitation energy above the ground mode that was kept, J.
    pub cutoff_excitation: f64,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.modes[0].energy
    }
}

fn check_qn(trap: &TrapSpec, bases: &[AxisBasis], qn: &[u32]) -> Result<()> {
    if qn.len() != bases.len() {
        return Err(WitnessError::Domain(format!(
            "expected {} quantum numbers for {trap:?}, got {}",
            bases.len(),
            qn.len()
        )));
    }
    bases.iter().zip(qn).try_for_each(|(b, &n)| b.check_qn(n))
}

/// Sum of per-axis energies taken in ascending order, so permutations of the
/// same quantum numbers give bit-identical totals.
fn sorted_sum(mut parts: ArrayVec<f64, 3>) -> f64 {
    parts.sort_by(f64::total_cmp);
    parts.iter().sum()
}

/// Closed-form eigenvalue of mode `qn`, J.
pub fn mode_energy(trap: &TrapSpec, mass: f64, qn: &[u32]) -> Result<f64> {
    trap.validate()?;
    if !(mass > 0.0) {
        return Err(WitnessError::Domain(format!("mass must be positive, got {mass:e}")));
    }
    let bases = trap.axis_bases(mass);
    check_qn(trap, &bases, qn)?;
    Ok(sorted_sum(
        bases.iter().zip(qn).map(|(b, &n)| b.energy(n)).collect(),
    ))
}

/// Eigenfunction amplitude at `position`, m^{-d/2}. Zero outside a hard-wall
/// domain.
pub fn eval_eigenfunction(trap: &TrapSpec, mass: f64, qn: &[u32], position: &[f64]) -> Result<f64> {
    let bases = trap.axis_bases(mass);
    check_qn(trap, &bases, qn)?;
    if position.len() != bases.len() {
        return Err(WitnessError::Domain(format!(
            "expected a {}-component position",
            bases.len()
        )));
    }
    Ok(bases
        .iter()
        .zip(qn)
        .zip(position)
        .map(|((b, &n), &x)| b.eval(n, x))
        .product())
}

/// `int phi_k phi_l` over the slab `interval` along `axis` (full extent along
/// the other axes, where orthonormality contributes Kronecker deltas).
pub fn region_overlap(
    trap: &TrapSpec,
    mass: f64,
    qn_a: &[u32],
    qn_b: &[u32],
    interval: Interval,
    axis: usize,
) -> Result<f64> {
    region_overlap_with_tol(trap, mass, qn_a, qn_b, interval, axis, 1e-12)
}

pub fn region_overlap_with_tol(
    trap: &TrapSpec,
    mass: f64,
    qn_a: &[u32],
    qn_b: &[u32],
    interval: Interval,
    axis: usize,
    abs_tol: f64,
) -> Result<f64> {
    let bases = trap.axis_bases(mass);
    check_qn(trap, &bases, qn_a)?;
    check_qn(trap, &bases, qn_b)?;
    let basis = trap.axis_basis(axis, mass)?;
    if interval.hi <= interval.lo {
        return Err(WitnessError::Domain(format!(
            "overlap interval must have lo < hi, got [{:e}, {:e}]",
            interval.lo, interval.hi
        )));
    }
    if let Some(d) = basis.domain() {
        if !d.contains(&interval) {
            return Err(WitnessError::Domain(format!(
                "interval [{:e}, {:e}] leaves the domain [0, {:e}]",
                interval.lo, interval.hi, d.hi
            )));
        }
    }
    let transverse_equal = (0..bases.len())
        .filter(|&i| i != axis)
        .all(|i| qn_a[i] == qn_b[i]);
    if !transverse_equal {
        return Ok(0.0);
    }
    basis.overlap(qn_a[axis], qn_b[axis], interval, abs_tol)
}

/// `sum_n exp(-c * excitation(n))` over one axis, `c` in 1/J.
pub(crate) fn axis_boltzmann_sum(basis: &AxisBasis, c: f64) -> f64 {
    match *basis {
        AxisBasis::Harmonic { .. } => {
            let gap = basis.excitation(1);
            1.0 / -(-c * gap).exp_m1()
        }
        _ => {
            let q0 = basis.first_qn();
            let mut sum = 0.0;
            for n in q0.. {
                let t = (-c * basis.excitation(n)).exp();
                sum += t;
                if t < 1e-18 * sum {
                    break;
                }
            }
            sum
        }
    }
}

/// Natural log of a rigorous bound on the total Bose occupation of modes with
/// excitation above `u / beta`, valid for any chemical potential below the
/// ground energy. `ln_axis_sums(s)` must return `sum_i ln Theta_i((1 - s) beta)`.
pub(crate) fn ln_tail_bound<F: Fn(f64) -> f64>(u: f64, ln_axis_sums: &F) -> f64 {
    // occupation <= exp(-beta d) / (1 - exp(-u)) for d > u/beta, then a
    // Chernoff split exp(-beta d) <= exp(-s u) exp(-(1-s) beta d).
    let geometric = -(-(-u).exp_m1()).ln();
    (1..20)
        .map(|k| {
            let s = k as f64 * 0.05;
            -s * u + ln_axis_sums(s) + geometric
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest reduced cutoff `u = beta * Delta` whose tail bound is below `budget`.
pub(crate) fn cutoff_for_budget<F: Fn(f64) -> f64>(budget: f64, ln_axis_sums: F) -> (f64, f64) {
    let target = budget.ln();
    let mut hi = 1.0;
    while ln_tail_bound(hi, &ln_axis_sums) > target {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ln_tail_bound(mid, &ln_axis_sums) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (hi, ln_tail_bound(hi, &ln_axis_sums).exp())
}

/// Modes below a cutoff chosen so the excluded Bose weight is provably below
/// `tail_tolerance * N`.
pub fn enumerate_modes(gas: &GasSpec, temperature: f64, tail_tolerance: f64) -> Result<ModeSet> {
    enumerate_modes_capped(gas, temperature, tail_tolerance, DEFAULT_MODE_CAP)
}

pub fn enumerate_modes_capped(
    gas: &GasSpec,
    temperature: f64,
    tail_tolerance: f64,
    cap: usize,
) -> Result<ModeSet> {
    gas.validate()?;
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(WitnessError::Domain(format!(
            "temperature must be finite and non-negative, got {temperature:e}"
        )));
    }
    if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
        return Err(WitnessError::Domain(format!(
            "tail tolerance must lie in (0, 1), got {tail_tolerance:e}"
        )));
    }
    let bases = gas.trap.axis_bases(gas.mass);
    let ground: QuantumNumbers = bases.iter().map(|b| b.first_qn()).collect();
    let ground_energy = sorted_sum(bases.iter().map(|b| b.energy(b.first_qn())).collect());

    if temperature == 0.0 {
        return Ok(ModeSet {
            gas: gas.clone(),
            modes: vec![Mode {
                qn: ground,
                energy: ground_energy,
            }],
            truncation_tail_bound: 0.0,
            cutoff_excitation: 0.0,
        });
    }

    let beta = 1.0 / (K_B * temperature);
    let budget = tail_tolerance * gas.particles as f64;
    let (u, bound) = cutoff_for_budget(budget, |s| {
        bases
            .iter()
            .map(|b| axis_boltzmann_sum(b, (1.0 - s) * beta).ln())
            .sum()
    });
    let cutoff = u / beta;

    let count = count_modes(&bases, cutoff, cap);
    if count > cap {
        return Err(WitnessError::Resource(format!(
            "mode cutoff at {u:.2} k_B T keeps more than {cap} modes; \
             relax the tail tolerance or raise the mode cap"
        )));
    }

    let mut modes = Vec::with_capacity(count);
    visit_modes(&bases, cutoff, &mut |qn| {
        let energy = sorted_sum(bases.iter().zip(qn).map(|(b, &n)| b.energy(n)).collect());
        modes.push(Mode {
            qn: qn.iter().copied().collect(),
            energy,
        });
        true
    });
    modes.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.qn.cmp(&b.qn)));

    Ok(ModeSet {
        gas: gas.clone(),
        modes,
        truncation_tail_bound: bound,
        cutoff_excitation: cutoff,
    })
}

fn count_modes(bases: &[AxisBasis], cutoff: f64, cap: usize) -> usize {
    let mut count = 0usize;
    visit_modes(bases, cutoff, &mut |_| {
        count += 1;
        count <= cap
    });
    count
}

/// Calls `f` for every quantum-number tuple with total excitation `<= cutoff`.
/// Stops early when `f` returns false.
fn visit_modes(bases: &[AxisBasis], cutoff: f64, f: &mut dyn FnMut(&[u32]) -> bool) {
    fn rec(
        bases: &[AxisBasis],
        depth: usize,
        budget: f64,
        qn: &mut [u32; 3],
        f: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        let b = &bases[depth];
        let mut n = b.first_qn();
        loop {
            let ex = b.excitation(n);
            if ex > budget {
                return true;
            }
            qn[depth] = n;
            let keep_going = if depth + 1 == bases.len() {
                f(&qn[..bases.len()])
            } else {
                rec(bases, depth + 1, budget - ex, qn, f)
            };
            if !keep_going {
                return false;
            }
            n += 1;
        }
    }
    let mut qn = [0u32; 3];
    // small slack so modes sitting exactly on the cutoff are not lost to rounding
    rec(bases, 0, cutoff * (1.0 + 1e-12), &mut qn, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{HBAR, RB87_MASS};
    use std::f64::consts::PI;

    const L: f64 = 1e-6;

    fn e1(length: f64) -> f64 {
        HBAR * HBAR * PI * PI / (2.0 * RB87_MASS * length * length)
    }

    #[test]
    fn well_ground_energy() {
        let e = mode_energy(&TrapSpec::Uniform1D { length: L }, RB87_MASS, &[1]).unwrap();
        assert!((e - e1(L)).abs() < 1e-15 * e);
    }

    #[test]
    fn harmonic_zero_point_energy() {
        let w = 2.0 * PI * 100.0;
        let e = mode_energy(&TrapSpec::Harmonic1D { omega: w }, RB87_MASS, &[0]).unwrap();
        assert!((e - 0.5 * HBAR * w).abs() < 1e-15 * e);
    }

    #[test]
    fn cube_mode_energy_is_sum_of_squares() {
        let e = mode_energy(&TrapSpec::cube(L), RB87_MASS, &[1, 2, 2]).unwrap();
        assert!((e - 9.0 * e1(L)).abs() < 1e-14 * e);
        // permutations are bit-identical
        let e2 = mode_energy(&TrapSpec::cube(L), RB87_MASS, &[2, 1, 2]).unwrap();
        assert_eq!(e, e2);
    }

    #[test]
    fn invalid_quantum_numbers() {
        assert!(matches!(
            mode_energy(&TrapSpec::Uniform1D { length: L }, RB87_MASS, &[0]),
            Err(WitnessError::Domain(_))
        ));
        assert!(matches!(
            mode_energy(&TrapSpec::cube(L), RB87_MASS, &[1, 1]),
            Err(WitnessError::Domain(_))
        ));
    }

    #[test]
    fn eigenfunction_examples() {
        let t = TrapSpec::Uniform1D { length: L };
        let v = eval_eigenfunction(&t, RB87_MASS, &[1], &[L / 2.0]).unwrap();
        assert!((v - (2.0 / L).sqrt()).abs() < 1e-12 * v);
        let node = eval_eigenfunction(&t, RB87_MASS, &[2], &[L / 2.0]).unwrap();
        assert!(node.abs() < 1e-9 * v);
        assert_eq!(eval_eigenfunction(&t, RB87_MASS, &[1], &[-1e-9]).unwrap(), 0.0);

        let w = 2.0 * PI * 50.0;
        let h = TrapSpec::Harmonic1D { omega: w };
        let g = eval_eigenfunction(&h, RB87_MASS, &[0], &[0.0]).unwrap();
        let expect = (RB87_MASS * w / (PI * HBAR)).powf(0.25);
        assert!((g - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn slab_overlap_is_kronecker_in_transverse_axes() {
        let t = TrapSpec::cube(L);
        let iv = Interval::new(0.0, L / 3.0).unwrap();
        let s = region_overlap(&t, RB87_MASS, &[1, 2, 3], &[1, 2, 3], iv, 0).unwrap();
        assert!((s - (1.0 / 3.0 - 3f64.sqrt() / (4.0 * PI))).abs() < 1e-13);
        let z = region_overlap(&t, RB87_MASS, &[1, 2, 3], &[1, 3, 3], iv, 0).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn overlap_rejects_bad_intervals() {
        let t = TrapSpec::Uniform1D { length: L };
        let bad = Interval { lo: 0.5 * L, hi: 0.5 * L };
        assert!(region_overlap(&t, RB87_MASS, &[1], &[1], bad, 0).is_err());
        let outside = Interval::new(0.5 * L, 1.5 * L).unwrap();
        assert!(region_overlap(&t, RB87_MASS, &[1], &[1], outside, 0).is_err());
    }

    #[test]
    fn zero_temperature_keeps_only_ground_mode() {
        let gas = GasSpec::new(TrapSpec::cube(L), 1000, RB87_MASS).unwrap();
        let set = enumerate_modes(&gas, 0.0, 1e-6).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.modes[0].qn.as_slice(), &[1, 1, 1]);
    }

    #[test]
    fn well_enumeration_is_sorted_and_grows_like_sqrt_cutoff() {
        let gas = GasSpec::new(TrapSpec::Uniform1D { length: L }, 100, RB87_MASS).unwrap();
        let t = 2.0 * e1(L) / K_B;
        let set = enumerate_modes(&gas, t, 1e-6).unwrap();
        assert!(set.modes.windows(2).all(|w| w[0].energy < w[1].energy));
        let n_top = set.modes.last().unwrap().qn[0] as f64;
        let e_star = set.cutoff_excitation + e1(L);
        assert!((n_top - (e_star / e1(L)).sqrt()).abs() <= 1.0);
    }

    #[test]
    fn cube_enumeration_ties_are_lexicographic() {
        let gas = GasSpec::new(TrapSpec::cube(L), 1000, RB87_MASS).unwrap();
        let t = 20.0 * e1(L) / K_B;
        let set = enumerate_modes(&gas, t, 1e-3).unwrap();
        for w in set.modes.windows(2) {
            assert!(w[0].energy <= w[1].energy);
            if w[0].energy == w[1].energy {
                assert!(w[0].qn < w[1].qn);
            }
        }
        let first: Vec<_> = set.modes[1..4].iter().map(|m| m.qn.to_vec()).collect();
        assert_eq!(first, vec![vec![1, 1, 2], vec![1, 2, 1], vec![2, 1, 1]]);
    }

    #[test]
    fn cap_triggers_resource_error() {
        let gas = GasSpec::new(TrapSpec::cube(L), 1000, RB87_MASS).unwrap();
        let t = 400.0 * e1(L) / K_B;
        let err = enumerate_modes_capped(&gas, t, 1e-6, 1000).unwrap_err();
        assert!(matches!(err, WitnessError::Resource(_)));
    }
}
