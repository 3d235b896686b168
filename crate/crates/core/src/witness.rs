//! Entanglement witnesses between spatial regions, finite-N classification,
//! and the derived temperature and partition solvers.

use crate::basis::Interval;
use crate::coherence::{
    self, CoherenceFunctionals, CoherenceOptions, DetectorProfile, DiagonalConvention,
    SlabPartition, TripartiteMatrix,
};
use crate::error::{Result, WitnessError};
use crate::thermal::{self, AxialOptions, AxialWeights, GasSpec};

/// Largest `|p_A - p_B|` accepted by the symmetric witnesses.
pub const SYMMETRY_TOL: f64 = 1e-6;
/// Particle numbers above this use the large-N sign test.
pub const LARGE_N: u64 = 1000;
const PURITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Entangled,
    CoexistenceZone,
    Undetected,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Entangled => "entangled",
            Classification::CoexistenceZone => "coexistence-zone",
            Classification::Undetected => "undetected",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteReport {
    pub functionals: CoherenceFunctionals,
    pub e_witness: f64,
    pub e_od: f64,
    /// `sum_i p_i^2 + 2 I_AB`, with the within-region integrals replaced by
    /// squared probabilities.
    pub mu_paper: f64,
    /// `p_C^2 + I_AA + I_BB + 2 I_AB`.
    pub mu_exact: f64,
    pub mu_r_paper: f64,
    pub mu_r_exact: f64,
    /// Two-mode linear mixedness `2 (1 - mu_exact)`.
    pub linear_mixedness: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripartiteReport {
    pub matrix: TripartiteMatrix,
    pub w_witness: f64,
    /// Region lengths A, B, C in metres.
    pub lengths: [f64; 3],
}

impl TripartiteReport {
    pub fn convention(&self) -> DiagonalConvention {
        self.matrix.convention
    }

    pub fn probabilities(&self) -> [f64; 3] {
        self.matrix.probabilities
    }
}

/// Options shared by the temperature-dependent drivers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub axial: AxialOptions,
    pub coherence: CoherenceOptions,
}

fn symmetric_probability(f: &CoherenceFunctionals) -> Result<f64> {
    if (f.p_a - f.p_b).abs() > SYMMETRY_TOL {
        return Err(WitnessError::Precondition(format!(
            "p_A = {:.9} and p_B = {:.9} differ by more than {SYMMETRY_TOL:e}; the symmetric \
             witness does not apply, use finite_n_classification with separate reduced purities",
            f.p_a, f.p_b
        )));
    }
    Ok(0.5 * (f.p_a + f.p_b))
}

/// Bipartite purity witness and purities for equal-probability regions.
pub fn bipartite_witness(
    w: &AxialWeights,
    particles: u64,
    a: Interval,
    b: Interval,
    profile: &DetectorProfile,
    opts: &CoherenceOptions,
) -> Result<BipartiteReport> {
    let f = coherence::bipartite_functionals(w, a, b, profile, opts)?;
    bipartite_from_functionals(f, particles)
}

/// Assembles a [`BipartiteReport`] from precomputed functionals.
pub fn bipartite_from_functionals(f: CoherenceFunctionals, particles: u64) -> Result<BipartiteReport> {
    let p = symmetric_probability(&f)?;
    let blind = p * (1.0 - 2.0 * p);
    let mu_paper = 2.0 * p * p + f.p_c * f.p_c + 2.0 * f.i_ab;
    let mu_exact = f.p_c * f.p_c + f.i_aa + f.i_bb + 2.0 * f.i_ab;
    let mu_r_paper = (1.0 - p) * (1.0 - p) + p * p;
    let mu_r_exact = (1.0 - p) * (1.0 - p) + 0.5 * (f.i_aa + f.i_bb);
    let classification = finite_n_classification(mu_paper, mu_r_paper, mu_r_paper, particles)?;
    Ok(BipartiteReport {
        functionals: f,
        e_witness: -blind + f.i_ab,
        e_od: f.o_d * f.o_d - blind,
        mu_paper,
        mu_exact,
        mu_r_paper,
        mu_r_exact,
        linear_mixedness: 2.0 * (1.0 - mu_exact),
        classification,
    })
}

/// `O_D^2 - p (1 - 2p)`.
pub fn od_witness(w: &AxialWeights, a: Interval, b: Interval, profile: &DetectorProfile) -> Result<f64> {
    let p_a = coherence::region_probability(w, a)?;
    let p_b = coherence::region_probability(w, b)?;
    if (p_a - p_b).abs() > SYMMETRY_TOL {
        return Err(WitnessError::Precondition(format!(
            "p_A = {p_a:.9} and p_B = {p_b:.9} differ by more than {SYMMETRY_TOL:e}"
        )));
    }
    let p = 0.5 * (p_a + p_b);
    let o = coherence::detector_overlap(w, a, b, profile)?;
    Ok(o * o - p * (1.0 - 2.0 * p))
}

fn check_purity(name: &str, mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(WitnessError::Domain(format!("{name} = {mu:e} is not in (0, 1]")));
    }
    if mu > 1.0 + PURITY_SLACK {
        return Err(WitnessError::InconsistentState(format!(
            "{name} = {mu:.12} exceeds 1"
        )));
    }
    Ok(mu.min(1.0))
}

/// Classifies a global/reduced purity triple for `n` independent particles.
///
/// Purities are raised to the N-th power (in logarithms), then compared with
/// the Gaussian-state purity bounds. Between the lower bound and the largest
/// purity a separable state can have, entangled and separable states coexist.
/// Above `LARGE_N` particles with equal reduced purities the band has
/// collapsed and the rule becomes the sign of `mu - mu_r`.
pub fn finite_n_classification(mu: f64, mu_a: f64, mu_b: f64, n: u64) -> Result<Classification> {
    let mu = check_purity("global purity", mu)?;
    let mu_a = check_purity("reduced purity of A", mu_a)?;
    let mu_b = check_purity("reduced purity of B", mu_b)?;
    if n < 1 {
        return Err(WitnessError::Domain("particle number must be >= 1".into()));
    }
    if n > LARGE_N && mu_a == mu_b {
        return Ok(if mu - mu_a > 0.0 {
            Classification::Entangled
        } else {
            Classification::Undetected
        });
    }
    let nf = n as f64;
    let g = nf * mu.ln();
    // a >= b
    let (a, b) = {
        let (x, y) = (nf * mu_a.ln(), nf * mu_b.ln());
        if x >= y { (x, y) } else { (y, x) }
    };
    // ln of xy / sqrt(x^2 + y^2 - x^2 y^2) with x = e^a, y = e^b
    let lower = a + b - 0.5 * (2.0 * a + (1.0 + (2.0 * (b - a)).exp() - (2.0 * b).exp()).ln());
    // ln of xy / (xy + |x - y|)
    let upper = a + b - (a + ((b).exp() - (b - a).exp_m1()).ln());
    // ln of xy / (x + y - xy), the largest separable purity
    let separable = a + b - (a + (1.0 + (b - a).exp() - b.exp()).ln());
    if g > upper + PURITY_SLACK {
        return Err(WitnessError::InconsistentState(format!(
            "global purity {mu:.12} violates the physicality bound for reduced purities \
             ({mu_a:.12}, {mu_b:.12}) at N = {n}"
        )));
    }
    Ok(if g > lower {
        Classification::Entangled
    } else if g > separable {
        Classification::CoexistenceZone
    } else {
        Classification::Undetected
    })
}

/// `W = sum_ij R_ij - 2` over a tiling partition.
pub fn tripartite_witness(
    w: &AxialWeights,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
) -> Result<TripartiteReport> {
    let matrix = coherence::tripartite_matrix(w, partition, profile, convention)?;
    let total: f64 = matrix.r.iter().flatten().sum();
    Ok(TripartiteReport {
        matrix,
        w_witness: total - 2.0,
        lengths: partition.lengths(),
    })
}

/// Axial weights of `gas` at `temperature` along `axis`.
pub fn weights_at(gas: &GasSpec, temperature: f64, axis: usize, opts: &EvalOptions) -> Result<AxialWeights> {
    thermal::axial_occupations(gas, temperature, axis, &opts.axial)
}

/// Tripartite witness of `gas` at `temperature`.
pub fn tripartite_at(
    gas: &GasSpec,
    temperature: f64,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
    opts: &EvalOptions,
) -> Result<TripartiteReport> {
    let w = weights_at(gas, temperature, partition.axis, opts)?;
    tripartite_witness(&w, partition, profile, convention)
}

/// Bipartite report of `gas` at `temperature` for slabs `a`, `b` along `axis`.
#[allow(clippy::too_many_arguments)]
pub fn bipartite_at(
    gas: &GasSpec,
    temperature: f64,
    axis: usize,
    a: Interval,
    b: Interval,
    profile: &DetectorProfile,
    opts: &EvalOptions,
) -> Result<BipartiteReport> {
    let w = weights_at(gas, temperature, axis, opts)?;
    bipartite_witness(&w, gas.particles, a, b, profile, &opts.coherence)
}

/// Default bracket for the entanglement extinction search.
pub fn default_bracket(gas: &GasSpec) -> Result<(f64, f64)> {
    Ok((1e-9, 1.5 * thermal::critical_temperature(gas)?))
}

pub const DEFAULT_TMAX_TOL: f64 = 0.1e-9;

/// Bisection for the temperature where `w_of_t` changes sign from positive to
/// non-positive.
pub fn bisect_sign_change<F>(mut w_of_t: F, bracket: (f64, f64), abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = bracket;
    if !(abs_tol > 0.0) {
        return Err(WitnessError::Domain(format!("tolerance must be positive, got {abs_tol:e}")));
    }
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(WitnessError::Domain(format!(
            "temperature bracket ({lo:e}, {hi:e}) is not ordered"
        )));
    }
    let w_lo = w_of_t(lo)?;
    let w_hi = w_of_t(hi)?;
    if !(w_lo > 0.0 && w_hi <= 0.0) {
        return Err(WitnessError::Bracket {
            t_low: lo,
            t_high: hi,
            w_low: w_lo,
            w_high: w_hi,
        });
    }
    while hi - lo > abs_tol {
        let mid = 0.5 * (lo + hi);
        if w_of_t(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let below = (t - 2.0 * abs_tol).max(bracket.0);
    let above = (t + 2.0 * abs_tol).min(bracket.1);
    let (wb, wa) = (w_of_t(below)?, w_of_t(above)?);
    if !(wb > 0.0 && wa <= 0.0) {
        return Err(WitnessError::Numerical(format!(
            "witness is not monotone near T = {t:e} K: W({below:e}) = {wb:e}, W({above:e}) = {wa:e}"
        )));
    }
    Ok(t)
}

/// Highest temperature with `W > 0` for a fixed partition.
pub fn tmax_bisection(
    gas: &GasSpec,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
    bracket: (f64, f64),
    abs_tol: f64,
    opts: &EvalOptions,
) -> Result<f64> {
    bisect_sign_change(
        |t| Ok(tripartite_at(gas, t, partition, profile, convention, opts)?.w_witness),
        bracket,
        abs_tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub index: usize,
    pub lengths: [f64; 3],
    pub probabilities: [f64; 3],
    pub w_witness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Index into `rows` of the first maximum of the objective.
    pub argmax: usize,
}

fn first_max<I: Iterator<Item = f64>>(values: I) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Tripartite witness over a grid of `(L_A, L_B)` pairs tiling `domain`, in
/// grid order.
pub fn partition_scan(
    w: &AxialWeights,
    axis: usize,
    domain: Interval,
    grid: &[(f64, f64)],
    profile: &DetectorProfile,
    convention: DiagonalConvention,
) -> Result<ScanResult> {
    if grid.is_empty() {
        return Err(WitnessError::Domain("scan grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (index, &(l_a, l_b)) in grid.iter().enumerate() {
        let part = SlabPartition::tiling(axis, domain, l_a, l_b)?;
        let r = tripartite_witness(w, &part, profile, convention)?;
        rows.push(ScanRow {
            index,
            lengths: r.lengths,
            probabilities: r.probabilities(),
            w_witness: r.w_witness,
        });
    }
    let argmax = first_max(rows.iter().map(|r| r.w_witness));
    Ok(ScanResult { rows, argmax })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmaxRow {
    pub index: usize,
    pub lengths: [f64; 3],
    /// Zero when the partition is not entangled at the bracket's low end.
    pub t_max: f64,
    /// Region probabilities at `t_max` (at the low end when `t_max = 0`).
    pub probabilities: [f64; 3],
    pub w_at_low: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmaxScan {
    pub rows: Vec<TmaxRow>,
    pub argmax: usize,
}

/// `T_max` for one partition; rows whose witness is already non-positive at the
/// bracket's low end report `T_max = 0`.
#[allow(clippy::too_many_arguments)]
pub fn tmax_row(
    gas: &GasSpec,
    index: usize,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
    bracket: (f64, f64),
    abs_tol: f64,
    opts: &EvalOptions,
) -> Result<TmaxRow> {
    let low = tripartite_at(gas, bracket.0, partition, profile, convention, opts)?;
    if low.w_witness <= 0.0 {
        return Ok(TmaxRow {
            index,
            lengths: low.lengths,
            t_max: 0.0,
            probabilities: low.probabilities(),
            w_at_low: low.w_witness,
        });
    }
    let t = tmax_bisection(gas, partition, profile, convention, bracket, abs_tol, opts)?;
    let at = tripartite_at(gas, t, partition, profile, convention, opts)?;
    Ok(TmaxRow {
        index,
        lengths: at.lengths,
        t_max: t,
        probabilities: at.probabilities(),
        w_at_low: low.w_witness,
    })
}

/// `T_max` over a grid of `(L_A, L_B)` pairs tiling `domain`.
#[allow(clippy::too_many_arguments)]
pub fn tmax_scan(
    gas: &GasSpec,
    axis: usize,
    domain: Interval,
    grid: &[(f64, f64)],
    profile: &DetectorProfile,
    convention: DiagonalConvention,
    bracket: (f64, f64),
    abs_tol: f64,
    opts: &EvalOptions,
) -> Result<TmaxScan> {
    if grid.is_empty() {
        return Err(WitnessError::Domain("scan grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (index, &(l_a, l_b)) in grid.iter().enumerate() {
        let part = SlabPartition::tiling(axis, domain, l_a, l_b)?;
        rows.push(tmax_row(gas, index, &part, profile, convention, bracket, abs_tol, opts)?);
    }
    Ok(TmaxScan {
        argmax: first_max(rows.iter().map(|r| r.t_max)),
        rows,
    })
}

/// Finds the argmax row of a list of `T_max` rows.
pub fn tmax_argmax(rows: &[TmaxRow]) -> usize {
    first_max(rows.iter().map(|r| r.t_max))
}
