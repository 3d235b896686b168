//! Bose-Einstein occupations at fixed mean particle number.
//!
//! The chemical potential is fitted grand-canonically so that the truncated
//! Bose sum reproduces `N`. Internally the solver works with the reduced gap
//! `y = (E_0 - mu) / k_B T > 0`, which stays well conditioned deep in the
//! condensed phase where `mu` sits within `k_B T / N` of the ground energy.

use std::collections::BTreeMap;

use crate::basis::AxisBasis;
use crate::constants::{HBAR, K_B, RB87_MASS, ZETA_3, ZETA_3_2};
use crate::error::{Result, WitnessError};
use crate::modes::{self, ModeSet, TrapSpec};

/// The physical system: trap, particle number and atomic mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GasSpec {
    pub trap: TrapSpec,
    pub particles: u64,
    /// kg
    pub mass: f64,
}

impl GasSpec {
    pub fn new(trap: TrapSpec, particles: u64, mass: f64) -> Result<Self> {
        let gas = GasSpec {
            trap,
            particles,
            mass,
        };
        gas.validate()?;
        Ok(gas)
    }

    /// Rubidium-87 gas.
    pub fn rb87(trap: TrapSpec, particles: u64) -> Result<Self> {
        Self::new(trap, particles, RB87_MASS)
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        if self.particles < 1 {
            return Err(WitnessError::Domain("particle number must be >= 1".into()));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(WitnessError::Domain(format!(
                "mass must be positive, got {:e}",
                self.mass
            )));
        }
        Ok(())
    }

    pub fn ground_energy(&self) -> f64 {
        self.trap
            .axis_bases(self.mass)
            .iter()
            .map(|b| b.energy(b.first_qn()))
            .sum()
    }
}

/// Normalized occupation probabilities `P_k = n_k / N` over a [`ModeSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalWeights {
    /// K
    pub temperature: f64,
    /// Chemical potential, J. Equal to the ground energy at `T = 0`.
    pub mu_c: f64,
    /// Aligned with `ModeSet::modes`; sums to one.
    pub weights: Vec<f64>,
    pub condensate_fraction: f64,
    /// Bound on the discarded Bose weight as a fraction of `N`.
    pub dropped_tail: f64,
}

/// Occupation probabilities marginalized onto a single axis.
///
/// `weights[i]` belongs to axis quantum number `basis.first_qn() + i`. For slab
/// regions this carries all the information any region functional needs,
/// because transverse overlaps are Kronecker deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialWeights {
    pub basis: AxisBasis,
    pub weights: Vec<f64>,
    pub temperature: f64,
    pub mu_c: f64,
    /// Weight of the full (all-axes) ground mode.
    pub condensate_fraction: f64,
    pub dropped_tail: f64,
}

impl AxialWeights {
    /// Pure ground-state kernel of `basis`.
    pub fn ground_state(basis: AxisBasis) -> Self {
        AxialWeights {
            basis,
            weights: vec![1.0],
            temperature: 0.0,
            mu_c: basis.energy(basis.first_qn()),
            condensate_fraction: 1.0,
            dropped_tail: 0.0,
        }
    }

    /// Arbitrary synthetic weights, renormalized to unit sum.
    pub fn synthetic(basis: AxisBasis, weights: Vec<f64>) -> Result<Self> {
        basis.validate()?;
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(WitnessError::Domain(
                "synthetic weights must be non-empty, finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(WitnessError::Domain("synthetic weights sum to zero".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(AxialWeights {
            basis,
            condensate_fraction: weights[0],
            weights,
            temperature: f64::NAN,
            mu_c: f64::NAN,
            dropped_tail: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn top_qn(&self) -> u32 {
        self.basis.first_qn() + self.weights.len().saturating_sub(1) as u32
    }
}

/// How transverse quantum numbers are folded onto the analysis axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransverseReduction {
    /// Slabs spanning the full transverse extent; exact by orthonormality.
    #[default]
    Slab,
    /// Transverse coordinates pinned at the trap centre, then renormalized.
    CentreSlice,
}

/// Numerical settings for [`axial_occupations`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialOptions {
    pub tail_tolerance: f64,
    pub rel_tol: f64,
    pub reduction: TransverseReduction,
    /// Cap on retained axial modes.
    pub mode_cap: usize,
}

impl Default for AxialOptions {
    fn default() -> Self {
        AxialOptions {
            tail_tolerance: 1e-10,
            rel_tol: 1e-12,
            reduction: TransverseReduction::Slab,
            mode_cap: modes::DEFAULT_MODE_CAP,
        }
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(WitnessError::Domain(format!(
            "temperature must be finite and non-negative, got {t:e}"
        )));
    }
    Ok(())
}

/// Finds the reduced gap `y > 0` with `count(y) = n`.
///
/// `count` returns the particle count and its derivative in `y`; the count
/// must be strictly decreasing and include a ground term `1 / (e^y - 1)` so
/// that `y = ln(1 + 1/n)` brackets from below. Newton steps in `ln y` are
/// safeguarded by bisection on the maintained bracket.
fn solve_gap<F: Fn(f64) -> (f64, f64)>(count: F, n: f64, rel_tol: f64) -> Result<f64> {
    let mut lo = (1.0 / n).ln_1p();
    let (c_lo, _) = count(lo);
    if c_lo < n * (1.0 - 1e-15) {
        return Err(WitnessError::Numerical(format!(
            "chemical potential bracket failed at the lower end: N({lo:e}) = {c_lo:e} < {n:e}"
        )));
    }
    if (c_lo - n).abs() <= rel_tol * n {
        return Ok(lo);
    }
    let mut hi = 2.0 * lo;
    let mut guard = 0;
    while count(hi).0 > n {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(WitnessError::Numerical(
                "chemical potential bracket failed at the upper end".into(),
            ));
        }
    }
    let mut y = (lo * hi).sqrt();
    for _ in 0..200 {
        let (c, dc) = count(y);
        if !(c.is_finite() && dc.is_finite()) {
            return Err(WitnessError::Numerical(format!(
                "non-finite particle count at reduced gap {y:e}"
            )));
        }
        if (c - n).abs() <= rel_tol * n {
            return Ok(y);
        }
        if c > n {
            lo = y;
        } else {
            hi = y;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            return Ok(y);
        }
        // f(s) = ln c - ln n with s = ln y, f'(s) = y c'(y) / c
        let slope = y * dc / c;
        let step = if slope < 0.0 {
            y * (-(c / n).ln() / slope).exp()
        } else {
            f64::NAN
        };
        y = if step > lo && step < hi {
            step
        } else {
            (lo * hi).sqrt()
        };
    }
    Err(WitnessError::Numerical(format!(
        "chemical potential did not converge; bracket [{lo:e}, {hi:e}]"
    )))
}

/// Groups equal energies of an energy-sorted mode list into
/// `(reduced excitation, multiplicity)` levels.
fn levels(set: &ModeSet, beta: f64) -> Vec<(f64, f64)> {
    let e0 = set.ground_energy();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut last = f64::NAN;
    for m in &set.modes {
        if m.energy == last {
            out.last_mut().expect("previous level").1 += 1.0;
        } else {
            out.push((beta * (m.energy - e0), 1.0));
            last = m.energy;
        }
    }
    out
}

#[inline]
fn bose(x: f64) -> f64 {
    1.0 / x.exp_m1()
}

fn solve_gap_for_set(gas: &GasSpec, t: f64, set: &ModeSet, rel_tol: f64) -> Result<f64> {
    if set.is_empty() {
        return Err(WitnessError::Domain("mode set is empty".into()));
    }
    if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
        return Err(WitnessError::Domain(format!(
            "relative tolerance must lie in (0, 1e-3], got {rel_tol:e}"
        )));
    }
    let beta = 1.0 / (K_B * t);
    let lv = levels(set, beta);
    solve_gap(
        |y| {
            lv.iter().fold((0.0, 0.0), |(c, d), &(x, g)| {
                let b = bose(y + x);
                (c + g * b, d - g * b * (1.0 + b))
            })
        },
        gas.particles as f64,
        rel_tol,
    )
}

/// Chemical potential (J) at which the Bose sum over `modes` equals `N`.
pub fn solve_chemical_potential(gas: &GasSpec, temperature: f64, modes: &ModeSet, rel_tol: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if temperature == 0.0 {
        return Err(WitnessError::Domain(
            "chemical potential is undefined at T = 0; use occupations directly".into(),
        ));
    }
    let y = solve_gap_for_set(gas, temperature, modes, rel_tol)?;
    Ok(modes.ground_energy() - y * K_B * temperature)
}

/// Normalized Bose weights over `modes`.
pub fn occupations(gas: &GasSpec, temperature: f64, modes: &ModeSet) -> Result<ThermalWeights> {
    occupations_with_tol(gas, temperature, modes, 1e-12)
}

pub fn occupations_with_tol(
    gas: &GasSpec,
    temperature: f64,
    modes: &ModeSet,
    rel_tol: f64,
) -> Result<ThermalWeights> {
    check_temperature(temperature)?;
    if modes.is_empty() {
        return Err(WitnessError::Domain("mode set is empty".into()));
    }
    let n = gas.particles as f64;
    if temperature == 0.0 {
        let mut weights = vec![0.0; modes.len()];
        weights[0] = 1.0;
        return Ok(ThermalWeights {
            temperature,
            mu_c: modes.ground_energy(),
            weights,
            condensate_fraction: 1.0,
            dropped_tail: 0.0,
        });
    }
    let y = solve_gap_for_set(gas, temperature, modes, rel_tol)?;
    let beta = 1.0 / (K_B * temperature);
    let e0 = modes.ground_energy();
    let raw: Vec<f64> = modes
        .modes
        .iter()
        .map(|m| bose(y + beta * (m.energy - e0)))
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|r| r / total).collect();
    Ok(ThermalWeights {
        temperature,
        mu_c: e0 - y / beta,
        condensate_fraction: weights[0],
        weights,
        dropped_tail: modes.truncation_tail_bound / n,
    })
}

/// Semiclassical condensation temperature, K.
pub fn critical_temperature(gas: &GasSpec) -> Result<f64> {
    gas.validate()?;
    let n = gas.particles as f64;
    match gas.trap {
        TrapSpec::HarmonicCigar3D {
            omega_ax,
            omega_per,
        } => {
            let omega_bar = (omega_ax * omega_per * omega_per).cbrt();
            Ok(HBAR * omega_bar * (n / ZETA_3).cbrt() / K_B)
        }
        TrapSpec::Harmonic1D { omega } => Ok(HBAR * omega * n / (K_B * (2.0 * n).ln())),
        TrapSpec::UniformBox3D { lx, ly, lz } => {
            let density = n / (lx * ly * lz);
            Ok(2.0 * std::f64::consts::PI * HBAR * HBAR / (gas.mass * K_B)
                * (density / ZETA_3_2).powf(2.0 / 3.0))
        }
        TrapSpec::Uniform1D { .. } => Err(WitnessError::Domain(
            "no condensation temperature for a one-dimensional box".into(),
        )),
    }
}

/// Sums the weights of all modes sharing each quantum number along `axis`.
pub fn marginalize_axis(weights: &ThermalWeights, modes: &ModeSet, axis: usize) -> Result<AxialWeights> {
    if weights.weights.len() != modes.len() {
        return Err(WitnessError::Precondition(format!(
            "weights ({}) not aligned with mode set ({})",
            weights.weights.len(),
            modes.len()
        )));
    }
    let gas = &modes.gas;
    let basis = gas.trap.axis_basis(axis, gas.mass)?;
    let q0 = basis.first_qn();
    let top = modes.modes.iter().map(|m| m.qn[axis]).max().unwrap_or(q0);
    let mut q = vec![0.0; (top - q0 + 1) as usize];
    for (m, &p) in modes.modes.iter().zip(&weights.weights) {
        q[(m.qn[axis] - q0) as usize] += p;
    }
    Ok(AxialWeights {
        basis,
        weights: q,
        temperature: weights.temperature,
        mu_c: weights.mu_c,
        condensate_fraction: weights.condensate_fraction,
        dropped_tail: weights.dropped_tail,
    })
}

/// Per-axis Boltzmann factors with the marginal weight of each level: 1 for
/// slabs, `|phi_n(centre)|^2` (m^-1) for the centre slice.
struct AxisTable {
    /// `beta * excitation(n)` for retained n.
    x: Vec<f64>,
    centre_density: Vec<f64>,
}

impl AxisTable {
    fn new(basis: &AxisBasis, beta: f64, limit: f64, reduction: TransverseReduction) -> Self {
        let q0 = basis.first_qn();
        let mut x = Vec::new();
        for n in q0.. {
            let xi = beta * basis.excitation(n);
            if xi > limit && !x.is_empty() {
                break;
            }
            x.push(xi);
        }
        let centre_density = match reduction {
            TransverseReduction::Slab => vec![1.0; x.len()],
            TransverseReduction::CentreSlice => basis
                .eval_all(x.len(), basis.center())
                .into_iter()
                .map(|v| v * v)
                .collect(),
        };
        AxisTable { x, centre_density }
    }
}

/// Transverse spectrum folded for the axial Bose sum: low levels explicitly,
/// the remainder as Boltzmann series coefficients.
struct TransverseSpectrum {
    /// (beta * excitation, degeneracy, marginal weight)
    explicit: Vec<(f64, f64, f64)>,
    /// j-th Boltzmann coefficients of the non-explicit remainder, j = 1..
    tail_degeneracy: Vec<f64>,
    tail_marginal: Vec<f64>,
    /// j-th Boltzmann coefficients of the whole transverse spectrum.
    full_degeneracy: Vec<f64>,
    full_marginal: Vec<f64>,
}

/// Transverse levels below this reduced excitation are summed exactly.
const EXPLICIT_SPLIT: f64 = 1.0;
/// Axial offsets beyond this use the pure Boltzmann series.
const SERIES_SWITCH: f64 = 1.0;
const SERIES_TERMS: usize = 64;
/// Reduced excitation beyond which transverse Boltzmann factors are dropped.
const TRANSVERSE_LIMIT: f64 = 745.0;

impl TransverseSpectrum {
    fn trivial() -> Self {
        TransverseSpectrum {
            explicit: vec![(0.0, 1.0, 1.0)],
            tail_degeneracy: Vec::new(),
            tail_marginal: Vec::new(),
            full_degeneracy: vec![1.0; SERIES_TERMS],
            full_marginal: vec![1.0; SERIES_TERMS],
        }
    }

    fn new(bases: &[AxisBasis], beta: f64, reduction: TransverseReduction) -> Self {
        if bases.is_empty() {
            return Self::trivial();
        }
        let tables: Vec<AxisTable> = bases
            .iter()
            .map(|b| AxisTable::new(b, beta, TRANSVERSE_LIMIT, reduction))
            .collect();
        let marginal = |t: &AxisTable, i: usize| t.centre_density[i];

        // Explicit levels keyed by the exact reduced excitation bits.
        let mut explicit: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
        let mut push = |x: f64, g: f64, w: f64| {
            let e = explicit.entry(x.to_bits()).or_insert((x, 0.0, 0.0));
            e.1 += g;
            e.2 += w;
        };
        // Tail coefficients: sum over non-explicit tuples of weight * exp(-j x).
        let mut tail_g = vec![0.0; SERIES_TERMS];
        let mut tail_w = vec![0.0; SERIES_TERMS];

        match tables.as_slice() {
            [a] => {
                for i in 0..a.x.len() {
                    let (x, w) = (a.x[i], marginal(a, i));
                    if x < EXPLICIT_SPLIT {
                        push(x, 1.0, w);
                    } else {
                        for j in 0..SERIES_TERMS {
                            let f = (-(j as f64 + 1.0) * x).exp();
                            tail_g[j] += f;
                            tail_w[j] += w * f;
                        }
                    }
                }
            }
            [a, b] => {
                // Suffix sums over the second axis for every j, summed from the
                // top so small tails keep full relative precision.
                let nb = b.x.len();
                let mut suffix_g = vec![0.0; SERIES_TERMS * (nb + 1)];
                let mut suffix_w = vec![0.0; SERIES_TERMS * (nb + 1)];
                for j in 0..SERIES_TERMS {
                    let row = j * (nb + 1);
                    for k in (0..nb).rev() {
                        let f = (-(j as f64 + 1.0) * b.x[k]).exp();
                        suffix_g[row + k] = suffix_g[row + k + 1] + f;
                        suffix_w[row + k] = suffix_w[row + k + 1] + marginal(b, k) * f;
                    }
                }
                for i in 0..a.x.len() {
                    let (xa, wa) = (a.x[i], marginal(a, i));
                    // first index on axis b that leaves the explicit set
                    let mut start = 0;
                    while start < nb && xa + b.x[start] < EXPLICIT_SPLIT {
                        let x = sorted_pair_sum(xa, b.x[start]);
                        push(x, 1.0, wa * marginal(b, start));
                        start += 1;
                    }
                    for j in 0..SERIES_TERMS {
                        let fa = (-(j as f64 + 1.0) * xa).exp();
                        if fa == 0.0 {
                            break;
                        }
                        let row = j * (nb + 1);
                        tail_g[j] += fa * suffix_g[row + start];
                        tail_w[j] += wa * fa * suffix_w[row + start];
                    }
                }
            }
            _ => unreachable!("at most two transverse axes"),
        }
        let explicit: Vec<(f64, f64, f64)> = explicit.into_values().collect();
        let mut full_g = tail_g.clone();
        let mut full_w = tail_w.clone();
        for j in 0..SERIES_TERMS {
            for &(x, g, w) in &explicit {
                let f = (-(j as f64 + 1.0) * x).exp();
                full_g[j] += g * f;
                full_w[j] += w * f;
            }
        }
        TransverseSpectrum {
            explicit,
            tail_degeneracy: tail_g,
            tail_marginal: tail_w,
            full_degeneracy: full_g,
            full_marginal: full_w,
        }
    }

    /// `sum_t g_t exp(-x_t)`: transverse Boltzmann sum at `beta`.
    fn boltzmann_sum(&self) -> f64 {
        self.full_degeneracy[0]
    }

    /// Bose occupation summed over transverse states at reduced axial offset
    /// `x`, returned as (particle count, its derivative in `x`, marginal
    /// weight).
    fn occupation(&self, x: f64) -> (f64, f64, f64) {
        let r = (-x).exp();
        if x >= SERIES_SWITCH {
            return Self::series(r, &self.full_degeneracy, &self.full_marginal, (0.0, 0.0, 0.0));
        }
        let mut acc = (0.0, 0.0, 0.0);
        for &(xt, g, wt) in &self.explicit {
            let b = bose(x + xt);
            acc.0 += g * b;
            acc.1 -= g * b * (1.0 + b);
            acc.2 += wt * b;
        }
        Self::series(r, &self.tail_degeneracy, &self.tail_marginal, acc)
    }

    fn series(r: f64, tg: &[f64], tw: &[f64], mut acc: (f64, f64, f64)) -> (f64, f64, f64) {
        let mut rj = 1.0;
        for (j, (g, w)) in tg.iter().zip(tw).enumerate() {
            rj *= r;
            let dn = rj * g;
            acc.0 += dn;
            acc.1 -= (j as f64 + 1.0) * dn;
            acc.2 += rj * w;
            if dn <= 1e-17 * acc.0 {
                break;
            }
        }
        acc
    }
}

fn sorted_pair_sum(a: f64, b: f64) -> f64 {
    if a <= b {
        a + b
    } else {
        b + a
    }
}

/// Axial marginal occupations computed without enumerating transverse modes.
///
/// Equivalent to [`enumerate_modes`](crate::modes::enumerate_modes) +
/// [`occupations`] + [`marginalize_axis`], but the transverse spectrum is
/// folded into per-axial-mode Bose sums, so the cost scales with the number of
/// axial modes rather than with the full three-dimensional mode count.
pub fn axial_occupations(
    gas: &GasSpec,
    temperature: f64,
    axis: usize,
    opts: &AxialOptions,
) -> Result<AxialWeights> {
    gas.validate()?;
    check_temperature(temperature)?;
    if !(opts.tail_tolerance > 0.0 && opts.tail_tolerance < 1.0) {
        return Err(WitnessError::Domain(format!(
            "tail tolerance must lie in (0, 1), got {:e}",
            opts.tail_tolerance
        )));
    }
    let bases = gas.trap.axis_bases(gas.mass);
    let basis = gas.trap.axis_basis(axis, gas.mass)?;
    if temperature == 0.0 {
        let mut w = AxialWeights::ground_state(basis);
        w.mu_c = gas.ground_energy();
        return Ok(w);
    }
    let transverse: Vec<AxisBasis> = bases
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, b)| *b)
        .collect();
    let beta = 1.0 / (K_B * temperature);
    let n_total = gas.particles as f64;
    let spectrum = TransverseSpectrum::new(&transverse, beta, opts.reduction);

    // Axial cutoff from a bound valid for every admissible chemical potential:
    // occupation(n) <= Z_t exp(-x_n) / (1 - exp(-x_n)).
    let z_t = spectrum.boltzmann_sum();
    let budget = opts.tail_tolerance * n_total;
    let q0 = basis.first_qn();
    let mut xs = Vec::new();
    let mut bound = f64::INFINITY;
    for n in q0.. {
        let x = beta * basis.excitation(n);
        xs.push(x);
        if xs.len() > opts.mode_cap {
            return Err(WitnessError::Resource(format!(
                "more than {} axial modes needed for tail tolerance {:e}; \
                 relax the tolerance or raise the mode cap",
                opts.mode_cap, opts.tail_tolerance
            )));
        }
        let next = beta * basis.excitation(n + 1);
        bound = z_t * axial_tail(&basis, beta, n + 1) / -(-next).exp_m1();
        if bound < budget {
            break;
        }
    }

    let count = |y: f64| {
        xs.iter().fold((0.0, 0.0), |(c, d), &x| {
            let o = spectrum.occupation(y + x);
            (c + o.0, d + o.1)
        })
    };
    let y = solve_gap(count, n_total, opts.rel_tol)?;

    let occ: Vec<(f64, f64, f64)> = xs.iter().map(|&x| spectrum.occupation(y + x)).collect();
    let total_w: f64 = occ.iter().map(|o| o.2).sum();
    let weights: Vec<f64> = occ.iter().map(|o| o.2 / total_w).collect();
    let total_n: f64 = occ.iter().map(|o| o.0).sum();
    Ok(AxialWeights {
        basis,
        weights,
        temperature,
        mu_c: gas.ground_energy() - y / beta,
        condensate_fraction: bose(y) / total_n,
        dropped_tail: bound / n_total,
    })
}

/// `sum_{n >= from} exp(-beta excitation(n))` along an axis.
fn axial_tail(basis: &AxisBasis, beta: f64, from: u32) -> f64 {
    match basis {
        AxisBasis::Harmonic { .. } => {
            let b = beta * basis.excitation(1);
            (-b * from as f64).exp() / -(-b).exp_m1()
        }
        _ => {
            let mut sum = 0.0;
            for n in from.. {
                let t = (-beta * basis.excitation(n)).exp();
                sum += t;
                if t <= 1e-18 * sum || t == 0.0 {
                    break;
                }
            }
            sum
        }
    }
}
