//! The normalized one-body density matrix along the analysis axis and its
//! region functionals.
//!
//! With axial weights `Q_n` the kernel is `rho(x, x') = sum_n Q_n phi_n(x) phi_n(x')`.
//! Region probabilities, squared-coherence integrals and detector overlaps all
//! reduce to contractions of `Q` with per-region mode vectors or overlap
//! matrices.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock, RwLock};

use ndarray::{linalg::general_mat_mul, Array2};

use crate::basis::{AxisBasis, Interval};
use crate::error::{Result, WitnessError};
use crate::hermite::HermiteStream;
use crate::quadrature::{panel_count, Nodes};
use crate::thermal::AxialWeights;

/// Weighting function defining one detector mode per region.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DetectorProfile {
    /// `g = 1 / sqrt(|X|)` on the region.
    #[default]
    UniformNormalized,
    /// `g = 1` on the region; not unit-norm.
    Indicator,
    /// Piecewise-linear shape over region-relative coordinates `u in [0, 1]`,
    /// rescaled to unit norm on each region.
    TabulatedNormalized(Vec<(f64, f64)>),
}

impl DetectorProfile {
    pub fn validate(&self) -> Result<()> {
        if let DetectorProfile::TabulatedNormalized(pts) = self {
            if pts.len() < 2 {
                return Err(WitnessError::Domain(
                    "tabulated profile needs at least two points".into(),
                ));
            }
            if pts.iter().any(|(u, g)| !(u.is_finite() && g.is_finite())) {
                return Err(WitnessError::Domain("tabulated profile has non-finite entries".into()));
            }
            if pts[0].0 != 0.0 || pts[pts.len() - 1].0 != 1.0 {
                return Err(WitnessError::Domain(
                    "tabulated profile must span u = 0 to u = 1".into(),
                ));
            }
            if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(WitnessError::Domain(
                    "tabulated profile abscissae must increase strictly".into(),
                ));
            }
            if tabulated_norm(pts) <= 0.0 {
                return Err(WitnessError::Domain("tabulated profile is identically zero".into()));
            }
        }
        Ok(())
    }

    pub fn is_normalized(&self) -> bool {
        !matches!(self, DetectorProfile::Indicator)
    }

    pub fn name(&self) -> &'static str {
        match self {
            DetectorProfile::UniformNormalized => "uniform-normalized",
            DetectorProfile::Indicator => "indicator",
            DetectorProfile::TabulatedNormalized(_) => "tabulated-normalized",
        }
    }
}

/// `int_0^1 g(u)^2 du` for a piecewise-linear table.
fn tabulated_norm(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2)
        .map(|w| {
            let (u0, g0) = w[0];
            let (u1, g1) = w[1];
            (u1 - u0) * (g0 * g0 + g0 * g1 + g1 * g1) / 3.0
        })
        .sum()
}

fn interpolate(pts: &[(f64, f64)], u: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 <= u).clamp(1, pts.len() - 1);
    let (u0, g0) = pts[i - 1];
    let (u1, g1) = pts[i];
    g0 + (g1 - g0) * (u - u0) / (u1 - u0)
}

/// Diagonal entries of the tripartite detector matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalConvention {
    /// `R_ii = sum_n Q_n c_i(n)^2`, the literal detector-mode projection.
    StrictProjection,
    /// `R_ii = p_i`.
    #[default]
    Population,
}

impl DiagonalConvention {
    pub fn name(&self) -> &'static str {
        match self {
            DiagonalConvention::StrictProjection => "strict-projection",
            DiagonalConvention::Population => "population",
        }
    }
}

/// Evaluation route for squared-coherence integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Overlap matrices up to `crossover` modes, direct quadrature above.
    #[default]
    Auto,
    OverlapMatrix,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceOptions {
    pub abs_tol: f64,
    pub crossover: usize,
    pub strategy: Strategy,
}

impl Default for CoherenceOptions {
    fn default() -> Self {
        CoherenceOptions {
            abs_tol: 1e-12,
            crossover: 3000,
            strategy: Strategy::Auto,
        }
    }
}

/// Region labels along one axis.
///
/// Two-region partitions leave `C` implicit as the complement. Three-region
/// partitions tile `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabPartition {
    pub axis: usize,
    pub a: Interval,
    pub b: Interval,
    pub c: Option<Interval>,
    pub domain: Interval,
}

impl SlabPartition {
    /// Disjoint `A` and `B` with the complement as `C`.
    pub fn pair(axis: usize, a: Interval, b: Interval, domain: Interval) -> Result<Self> {
        if a.overlaps(&b) {
            return Err(WitnessError::Domain(format!(
                "regions overlap: [{:e}, {:e}] and [{:e}, {:e}]",
                a.lo, a.hi, b.lo, b.hi
            )));
        }
        Ok(SlabPartition {
            axis,
            a,
            b,
            c: None,
            domain,
        })
    }

    /// `A = [lo, lo + l_a]`, `B` next to it with length `l_b`, `C` the rest of
    /// `domain`.
    pub fn tiling(axis: usize, domain: Interval, l_a: f64, l_b: f64) -> Result<Self> {
        let len = domain.length();
        if !(l_a >= 0.0 && l_b >= 0.0 && l_a + l_b <= len * (1.0 + 1e-12)) {
            return Err(WitnessError::Domain(format!(
                "region lengths {l_a:e} + {l_b:e} do not fit in a domain of length {len:e}"
            )));
        }
        let ab = (domain.lo + l_a).min(domain.hi);
        let bc = (ab + l_b).min(domain.hi);
        Ok(SlabPartition {
            axis,
            a: Interval { lo: domain.lo, hi: ab },
            b: Interval { lo: ab, hi: bc },
            c: Some(Interval { lo: bc, hi: domain.hi }),
            domain,
        })
    }

    pub fn regions(&self) -> Option<[Interval; 3]> {
        self.c.map(|c| [self.a, self.b, c])
    }

    pub fn lengths(&self) -> [f64; 3] {
        [
            self.a.length(),
            self.b.length(),
            self.c.map_or(self.domain.length() - self.a.length() - self.b.length(), |c| {
                c.length()
            }),
        ]
    }

    /// Mirror image about `center`, with region order reversed for tilings.
    pub fn reflect(&self, center: f64) -> SlabPartition {
        match self.c {
            Some(c) => SlabPartition {
                axis: self.axis,
                a: c.reflect(center),
                b: self.b.reflect(center),
                c: Some(self.a.reflect(center)),
                domain: self.domain.reflect(center),
            },
            None => SlabPartition {
                axis: self.axis,
                a: self.b.reflect(center),
                b: self.a.reflect(center),
                c: None,
                domain: self.domain.reflect(center),
            },
        }
    }

    /// Checks that a three-region partition tiles its domain.
    pub fn check_tiling(&self) -> Result<[Interval; 3]> {
        let r = self.regions().ok_or_else(|| {
            WitnessError::Precondition("a three-region tiling is required".into())
        })?;
        let tol = 1e-12 * self.domain.length().max(f64::MIN_POSITIVE);
        let joins = [
            (self.domain.lo, r[0].lo),
            (r[0].hi, r[1].lo),
            (r[1].hi, r[2].lo),
            (r[2].hi, self.domain.hi),
        ];
        if joins.iter().any(|(u, v)| (u - v).abs() > tol) || r.iter().any(|iv| iv.hi < iv.lo) {
            return Err(WitnessError::Precondition(
                "regions A, B, C do not tile the domain".into(),
            ));
        }
        Ok(r)
    }
}

/// Finite axis used for tilings: the box itself, or for the oscillator a
/// symmetric window of eight widths (the larger of the cloud radius and the
/// oscillator length), widened to clear the top mode's turning point.
pub fn analysis_domain(w: &AxialWeights) -> Interval {
    match w.basis.domain() {
        Some(d) => d,
        None => {
            let a = w.basis.length_scale();
            let q0 = w.basis.first_qn();
            let x2: f64 = w
                .weights
                .iter()
                .enumerate()
                .map(|(i, q)| q * a * a * ((q0 as usize + i) as f64 + 0.5))
                .sum();
            // the top mode's turning point can lie beyond the rms width when
            // the weights fall steeply
            let turning = (2.0 * w.top_qn() as f64 + 1.0).sqrt() * a + 8.0 * a;
            let half = (8.0 * x2.sqrt().max(a)).max(turning);
            Interval { lo: -half, hi: half }
        }
    }
}

/// Region probabilities and coherence integrals for a pair of regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceFunctionals {
    pub p_a: f64,
    pub p_b: f64,
    pub p_c: f64,
    pub i_ab: f64,
    pub i_aa: f64,
    pub i_bb: f64,
    pub o_d: f64,
    pub profile_normalized: bool,
}

/// The 3x3 detector matrix with the region probabilities it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripartiteMatrix {
    pub r: [[f64; 3]; 3],
    pub probabilities: [f64; 3],
    pub convention: DiagonalConvention,
}

/// `rho(r, r')`, units 1/m.
pub fn one_body_kernel(w: &AxialWeights, r: f64, rp: f64) -> f64 {
    let fr = w.basis.eval_all(w.len(), r);
    let frp = w.basis.eval_all(w.len(), rp);
    // sum in a fixed order on (min, max) so the kernel is exactly symmetric
    let (u, v) = if r <= rp { (&fr, &frp) } else { (&frp, &fr) };
    w.weights
        .iter()
        .zip(u.iter().zip(v))
        .map(|(q, (a, b))| q * a * b)
        .sum()
}

fn check_region(basis: &AxisBasis, iv: Interval) -> Result<Interval> {
    let iv = Interval::new(iv.lo, iv.hi)?;
    if let Some(d) = basis.domain() {
        let tol = 1e-12 * d.length();
        if iv.lo < d.lo - tol || iv.hi > d.hi + tol {
            return Err(WitnessError::Domain(format!(
                "region [{:e}, {:e}] leaves the domain [{:e}, {:e}]",
                iv.lo, iv.hi, d.lo, d.hi
            )));
        }
        return Ok(Interval {
            lo: iv.lo.clamp(d.lo, d.hi),
            hi: iv.hi.clamp(d.lo, d.hi),
        });
    }
    Ok(iv)
}

/// `p_X = sum_n Q_n int_X phi_n^2`.
pub fn region_probability(w: &AxialWeights, iv: Interval) -> Result<f64> {
    let iv = check_region(&w.basis, iv)?;
    let diag = diagonal_overlaps(&w.basis, iv, w.len())?;
    Ok(dot(&w.weights, &diag))
}

/// `O_D = int_A int_B g(r) g(r') rho(r, r')`.
pub fn detector_overlap(w: &AxialWeights, a: Interval, b: Interval, profile: &DetectorProfile) -> Result<f64> {
    profile.validate()?;
    let a = check_region(&w.basis, a)?;
    let b = check_region(&w.basis, b)?;
    let ca = detector_integrals(&w.basis, a, w.len(), profile)?;
    let cb = detector_integrals(&w.basis, b, w.len(), profile)?;
    Ok(w.weights
        .iter()
        .zip(ca.iter().zip(cb.iter()))
        .map(|(q, (x, y))| q * x * y)
        .sum())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `int_X int_Y rho(r, r')^2`.
pub fn coherence_integral(w: &AxialWeights, x: Interval, y: Interval, opts: &CoherenceOptions) -> Result<f64> {
    let x = check_region(&w.basis, x)?;
    let y = check_region(&w.basis, y)?;
    if x.length() == 0.0 || y.length() == 0.0 {
        return Ok(0.0);
    }
    // order the pair so the result is exactly symmetric in (X, Y)
    let (x, y) = if (x.lo, x.hi) <= (y.lo, y.hi) { (x, y) } else { (y, x) };
    let use_overlap = match opts.strategy {
        Strategy::OverlapMatrix => true,
        Strategy::Direct => false,
        Strategy::Auto => w.len() <= opts.crossover,
    };
    if use_overlap {
        coherence_by_overlaps(w, x, y, opts.abs_tol)
    } else {
        coherence_direct(w, x, y, opts.abs_tol)
    }
}

/// Region functionals for the pair `(A, B)`; `C` is the complement.
pub fn bipartite_functionals(
    w: &AxialWeights,
    a: Interval,
    b: Interval,
    profile: &DetectorProfile,
    opts: &CoherenceOptions,
) -> Result<CoherenceFunctionals> {
    profile.validate()?;
    if a.overlaps(&b) {
        return Err(WitnessError::Domain("regions A and B overlap".into()));
    }
    let p_a = region_probability(w, a)?;
    let p_b = region_probability(w, b)?;
    Ok(CoherenceFunctionals {
        p_a,
        p_b,
        p_c: 1.0 - p_a - p_b,
        i_ab: coherence_integral(w, a, b, opts)?,
        i_aa: coherence_integral(w, a, a, opts)?,
        i_bb: coherence_integral(w, b, b, opts)?,
        o_d: detector_overlap(w, a, b, profile)?,
        profile_normalized: profile.is_normalized(),
    })
}

/// The 3x3 detector matrix over a tiling partition.
///
/// For the oscillator, probability outside the finite analysis domain is
/// assigned half to each outer region.
pub fn tripartite_matrix(
    w: &AxialWeights,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
) -> Result<TripartiteMatrix> {
    profile.validate()?;
    let regions = partition.check_tiling()?;
    let mut c = Vec::with_capacity(3);
    let mut p = [0.0; 3];
    for (i, iv) in regions.iter().enumerate() {
        let iv = check_region(&w.basis, *iv)?;
        c.push(detector_integrals(&w.basis, iv, w.len(), profile)?);
        p[i] = dot(&w.weights, &diagonal_overlaps(&w.basis, iv, w.len())?);
    }
    if w.basis.domain().is_none() {
        let outside = 0.5 * (1.0 - p.iter().sum::<f64>());
        p[0] += outside;
        p[2] += outside;
    }
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = w
                .weights
                .iter()
                .zip(c[i].iter().zip(c[j].iter()))
                .map(|(q, (x, y))| q * x * y)
                .sum();
            r[i][j] = v;
            r[j][i] = v;
        }
        if convention == DiagonalConvention::Population {
            r[i][i] = p[i];
        }
    }
    Ok(TripartiteMatrix {
        r,
        probabilities: p,
        convention,
    })
}

// ---------------------------------------------------------------------------
// Mode values at quadrature nodes

enum ModeStream<'a> {
    Hermite { stream: HermiteStream, norm: f64 },
    Direct { basis: &'a AxisBasis, x: Vec<f64>, next: u32 },
}

impl<'a> ModeStream<'a> {
    fn new(basis: &'a AxisBasis, x: &[f64]) -> Self {
        match basis {
            AxisBasis::Harmonic { .. } => {
                let a = basis.length_scale();
                let xi: Vec<f64> = x.iter().map(|v| v / a).collect();
                ModeStream::Hermite {
                    stream: HermiteStream::new(&xi),
                    norm: 1.0 / a.sqrt(),
                }
            }
            _ => ModeStream::Direct {
                basis,
                x: x.to_vec(),
                next: basis.first_qn(),
            },
        }
    }

    /// Next `rows` modes, row-major `rows x points`.
    fn next_block(&mut self, rows: usize, out: &mut [f64]) {
        match self {
            ModeStream::Hermite { stream, norm } => {
                stream.next_block(rows, out);
                out.iter_mut().for_each(|v| *v *= *norm);
            }
            ModeStream::Direct { basis, x, next } => {
                let points = x.len();
                for r in 0..rows {
                    let qn = *next + r as u32;
                    for (slot, &xv) in out[r * points..(r + 1) * points].iter_mut().zip(x.iter()) {
                        *slot = basis.eval(qn, xv);
                    }
                }
                *next += rows as u32;
            }
        }
    }

    fn skip(&mut self, rows: usize, scratch: &mut Vec<f64>) {
        match self {
            ModeStream::Hermite { stream, .. } => {
                let points = scratch.len() / MODE_BLOCK.max(1);
                let mut left = rows;
                while left > 0 {
                    let r = left.min(MODE_BLOCK);
                    stream.next_block(r, &mut scratch[..r * points]);
                    left -= r;
                }
            }
            ModeStream::Direct { next, .. } => *next += rows as u32,
        }
    }
}

/// Nodes on `iv`, broken at `knots`, with panels no wider than
/// `max_width / refinement`.
fn region_nodes(iv: Interval, knots: &[f64], max_width: f64, refinement: usize) -> Nodes {
    let mut cuts = vec![iv.lo];
    cuts.extend(knots.iter().copied().filter(|&k| k > iv.lo && k < iv.hi));
    cuts.push(iv.hi);
    let mut nodes = Nodes {
        x: Vec::new(),
        w: Vec::new(),
    };
    for c in cuts.windows(2) {
        if c[1] <= c[0] {
            continue;
        }
        let part = Nodes::panels(c[0], c[1], panel_count(c[0], c[1], max_width) * refinement);
        nodes.x.extend(part.x);
        nodes.w.extend(part.w);
    }
    nodes
}

/// Modes per deterministic quadrature block.
const MODE_BLOCK: usize = 256;
const MAX_REFINEMENT: usize = 1 << 10;

/// `int_X f(x) phi_n(x) dx` (or `phi_n^2` when `square`) for modes in
/// fixed blocks; node density depends only on the block, so every entry is
/// independent of how many modes were requested.
fn quadrature_vector(
    basis: &AxisBasis,
    iv: Interval,
    count: usize,
    profile: Option<&dyn Fn(f64) -> f64>,
    knots: &[f64],
) -> Result<Vec<f64>> {
    let blocks = count.div_ceil(MODE_BLOCK);
    let mut out = Vec::with_capacity(blocks * MODE_BLOCK);
    let q0 = basis.first_qn();
    for b in 0..blocks {
        let k0 = b * MODE_BLOCK;
        let top = q0 + (k0 + MODE_BLOCK - 1) as u32;
        let width = basis.half_wavelength(top);
        let eval = |refinement: usize| -> Vec<f64> {
            let nodes = region_nodes(iv, knots, width, refinement);
            let g = nodes.len();
            let mut stream = ModeStream::new(basis, &nodes.x);
            let mut buf = vec![0.0; MODE_BLOCK * g];
            stream.skip(k0, &mut buf);
            stream.next_block(MODE_BLOCK, &mut buf);
            let fw: Vec<f64> = match profile {
                Some(f) => nodes.x.iter().zip(&nodes.w).map(|(x, w)| w * f(*x)).collect(),
                None => nodes.w.clone(),
            };
            (0..MODE_BLOCK)
                .map(|r| {
                    let row = &buf[r * g..(r + 1) * g];
                    match profile {
                        Some(_) => dot(row, &fw),
                        None => row.iter().zip(&fw).map(|(v, w)| w * v * v).sum(),
                    }
                })
                .collect()
        };
        let mut refinement = 1;
        let mut coarse = eval(refinement);
        loop {
            let fine = eval(2 * refinement);
            let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = fine
                .iter()
                .zip(&coarse)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if err <= 1e-12 * scale || err == 0.0 {
                out.extend(fine);
                break;
            }
            refinement *= 2;
            if refinement >= MAX_REFINEMENT {
                return Err(WitnessError::Numerical(format!(
                    "mode integrals on [{:e}, {:e}] did not converge: block {b}, \
                     {refinement}x refinement, error {err:.3e} at scale {scale:.3e}",
                    iv.lo, iv.hi
                )));
            }
            coarse = fine;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Write-once cache of per-region mode vectors

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum VectorKind {
    Diagonal,
    Integral,
    Tabulated(Vec<(u64, u64)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct VectorKey {
    basis: (u8, u64, u64),
    lo: u64,
    hi: u64,
    kind: VectorKind,
}

fn basis_key(basis: &AxisBasis) -> (u8, u64, u64) {
    match *basis {
        AxisBasis::Well { length, mass } => (0, length.to_bits(), mass.to_bits()),
        AxisBasis::Harmonic { omega, mass } => (1, omega.to_bits(), mass.to_bits()),
        AxisBasis::NeumannWell { length, mass } => (2, length.to_bits(), mass.to_bits()),
    }
}

type VectorCache = RwLock<HashMap<VectorKey, Arc<Vec<f64>>>>;

fn cache() -> &'static VectorCache {
    static CACHE: OnceLock<VectorCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

const CACHE_ENTRIES: usize = 4096;

/// Returns at least `count` entries, computing and publishing on a miss.
/// Concurrent misses may compute the same vector twice; results are equal.
fn cached<F>(key: VectorKey, count: usize, compute: F) -> Result<Arc<Vec<f64>>>
where
    F: FnOnce(usize) -> Result<Vec<f64>>,
{
    if let Some(v) = cache().read().expect("cache lock").get(&key) {
        if v.len() >= count {
            return Ok(v.clone());
        }
    }
    let v = Arc::new(compute(count.div_ceil(MODE_BLOCK) * MODE_BLOCK)?);
    let mut map = cache().write().expect("cache lock");
    if map.len() >= CACHE_ENTRIES {
        map.clear();
    }
    let slot = map.entry(key).or_insert_with(|| v.clone());
    if slot.len() < v.len() {
        *slot = v.clone();
    }
    Ok(v)
}

/// Drops all cached mode vectors.
pub fn clear_cache() {
    cache().write().expect("cache lock").clear();
}

fn key_for(basis: &AxisBasis, iv: Interval, kind: VectorKind) -> VectorKey {
    VectorKey {
        basis: basis_key(basis),
        lo: iv.lo.to_bits(),
        hi: iv.hi.to_bits(),
        kind,
    }
}

/// `S^X_nn = int_X phi_n^2` for the first `count` modes.
pub fn diagonal_overlaps(basis: &AxisBasis, iv: Interval, count: usize) -> Result<Arc<Vec<f64>>> {
    if iv.length() == 0.0 {
        return Ok(Arc::new(vec![0.0; count]));
    }
    let key = key_for(basis, iv, VectorKind::Diagonal);
    cached(key, count, |n| {
        if basis.has_closed_form_overlaps() {
            let q0 = basis.first_qn();
            (0..n as u32).map(|i| basis.overlap(q0 + i, q0 + i, iv, 0.0)).collect()
        } else {
            quadrature_vector(basis, iv, n, None, &[])
        }
    })
}

/// Detector-mode amplitudes `c_X(n) = int_X g phi_n` for the first `count`
/// modes.
pub fn detector_integrals(
    basis: &AxisBasis,
    iv: Interval,
    count: usize,
    profile: &DetectorProfile,
) -> Result<Arc<Vec<f64>>> {
    let len = iv.length();
    if len == 0.0 {
        return Ok(Arc::new(vec![0.0; count]));
    }
    match profile {
        DetectorProfile::UniformNormalized | DetectorProfile::Indicator => {
            let raw = cached(key_for(basis, iv, VectorKind::Integral), count, |n| {
                match basis.mode_integrals(n, iv) {
                    Some(v) => Ok(v),
                    None => quadrature_vector(basis, iv, n, Some(&|_| 1.0), &[]),
                }
            })?;
            if matches!(profile, DetectorProfile::Indicator) {
                return Ok(raw);
            }
            let g = 1.0 / len.sqrt();
            Ok(Arc::new(raw.iter().map(|v| v * g).collect()))
        }
        DetectorProfile::TabulatedNormalized(pts) => {
            let kind = VectorKind::Tabulated(
                pts.iter().map(|(u, g)| (u.to_bits(), g.to_bits())).collect(),
            );
            let scale = 1.0 / (len * tabulated_norm(pts)).sqrt();
            let knots: Vec<f64> = pts.iter().map(|(u, _)| iv.lo + u * len).collect();
            cached(key_for(basis, iv, kind), count, |n| {
                let g = |x: f64| scale * interpolate(pts, ((x - iv.lo) / len).clamp(0.0, 1.0));
                quadrature_vector(basis, iv, n, Some(&g), &knots)
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Squared-coherence integrals

/// Refines `eval(refinement)` by doubling until successive values agree.
fn refine_scalar<F: FnMut(usize) -> f64>(abs_tol: f64, what: &str, mut eval: F) -> Result<f64> {
    let mut refinement = 1;
    let mut coarse = eval(refinement);
    loop {
        let fine = eval(2 * refinement);
        let err = (fine - coarse).abs();
        if err <= abs_tol || err <= 1e-13 * fine.abs() {
            return Ok(fine);
        }
        refinement *= 2;
        if refinement >= MAX_REFINEMENT {
            return Err(WitnessError::Numerical(format!(
                "{what} did not converge: {refinement}x panel refinement, \
                 estimate {fine:.6e}, error estimate {err:.3e} > {abs_tol:.3e}"
            )));
        }
        coarse = fine;
    }
}

fn overlap_matrix(basis: &AxisBasis, iv: Interval, count: usize, refinement: usize) -> Array2<f64> {
    let mut s = Array2::zeros((count, count));
    if basis.has_closed_form_overlaps() {
        let q0 = basis.first_qn();
        for n in 0..count {
            for l in n..count {
                let v = basis
                    .overlap(q0 + n as u32, q0 + l as u32, iv, 0.0)
                    .expect("valid quantum numbers");
                s[[n, l]] = v;
                s[[l, n]] = v;
            }
        }
        return s;
    }
    // wavelength-wide panels at the coarsest level; refinement halves them
    let top = basis.first_qn() + count as u32 - 1;
    let nodes = region_nodes(iv, &[], 2.0 * basis.half_wavelength(top), refinement);
    let g = nodes.len();
    let mut phi = vec![0.0; count * g];
    ModeStream::new(basis, &nodes.x).next_block(count, &mut phi);
    let phi = Array2::from_shape_vec((count, g), phi).expect("shape");
    let mut weighted = phi.clone();
    for mut row in weighted.rows_mut() {
        row.iter_mut().zip(&nodes.w).for_each(|(v, w)| *v *= w);
    }
    general_mat_mul(1.0, &weighted, &phi.t(), 0.0, &mut s);
    s
}

fn contract(q: &[f64], sx: &Array2<f64>, sy: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for (n, qn) in q.iter().enumerate() {
        let row: f64 = q
            .iter()
            .enumerate()
            .map(|(l, ql)| ql * sx[[n, l]] * sy[[n, l]])
            .sum();
        total += qn * row;
    }
    total
}

fn coherence_by_overlaps(w: &AxialWeights, x: Interval, y: Interval, abs_tol: f64) -> Result<f64> {
    let k = w.len();
    if w.basis.has_closed_form_overlaps() {
        let sx = overlap_matrix(&w.basis, x, k, 1);
        let sy = if x == y { sx.clone() } else { overlap_matrix(&w.basis, y, k, 1) };
        return Ok(contract(&w.weights, &sx, &sy));
    }
    refine_scalar(abs_tol, "overlap-matrix coherence integral", |r| {
        let sx = overlap_matrix(&w.basis, x, k, r);
        if x == y {
            contract(&w.weights, &sx, &sx)
        } else {
            contract(&w.weights, &sx, &overlap_matrix(&w.basis, y, k, r))
        }
    })
}

/// Rows of X nodes per kernel tile.
const TILE: usize = 512;

/// `sum_ij wx_i wy_j rho(x_i, y_j)^2` with the kernel assembled tile by tile as
/// `Phi_X^T diag(Q) Phi_Y`, streaming modes in blocks.
fn direct_sum(w: &AxialWeights, nx: &Nodes, ny: &Nodes) -> f64 {
    let k = w.len();
    let gy = ny.len();
    let mut total = 0.0;
    let mut fx_buf = vec![0.0; MODE_BLOCK * TILE];
    let mut fy_buf = vec![0.0; MODE_BLOCK * gy];
    for (tx, tw) in nx.x.chunks(TILE).zip(nx.w.chunks(TILE)) {
        let gx = tx.len();
        let mut rho = Array2::<f64>::zeros((gx, gy));
        let mut sx = ModeStream::new(&w.basis, tx);
        let mut sy = ModeStream::new(&w.basis, &ny.x);
        let mut k0 = 0;
        while k0 < k {
            let rows = (k - k0).min(MODE_BLOCK);
            sx.next_block(rows, &mut fx_buf[..rows * gx]);
            sy.next_block(rows, &mut fy_buf[..rows * gy]);
            for r in 0..rows {
                let q = w.weights[k0 + r];
                fx_buf[r * gx..(r + 1) * gx].iter_mut().for_each(|v| *v *= q);
            }
            let fx = ndarray::ArrayView2::from_shape((rows, gx), &fx_buf[..rows * gx]).expect("shape");
            let fy = ndarray::ArrayView2::from_shape((rows, gy), &fy_buf[..rows * gy]).expect("shape");
            general_mat_mul(1.0, &fx.t(), &fy, 1.0, &mut rho);
            k0 += rows;
        }
        for (i, wi) in tw.iter().enumerate() {
            let row = rho.row(i);
            let s: f64 = row.iter().zip(&ny.w).map(|(v, wj)| wj * v * v).sum();
            total += wi * s;
        }
    }
    total
}

fn coherence_direct(w: &AxialWeights, x: Interval, y: Interval, abs_tol: f64) -> Result<f64> {
    let top = w.top_qn();
    let width = 2.0 * w.basis.half_wavelength(top);
    refine_scalar(abs_tol, "direct coherence integral", |r| {
        let nx = region_nodes(x, &[], width, r);
        let ny = region_nodes(y, &[], width, r);
        direct_sum(w, &nx, &ny)
    })
}

/// Content hash of a weight vector, for callers that key their own caches.
pub fn weights_fingerprint(w: &AxialWeights) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    basis_key(&w.basis).hash(&mut h);
    for q in &w.weights {
        q.to_bits().hash(&mut h);
    }
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RB87_MASS;
    use std::f64::consts::PI;

    const L: f64 = 1e-6;

    fn well() -> AxisBasis {
        AxisBasis::Well { length: L, mass: RB87_MASS }
    }

    fn flat() -> AxialWeights {
        AxialWeights::synthetic(AxisBasis::NeumannWell { length: L, mass: RB87_MASS }, vec![1.0])
            .unwrap()
    }

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a * L, b * L).unwrap()
    }

    #[test]
    fn ground_kernel_peak_and_symmetry() {
        let w = AxialWeights::ground_state(well());
        assert!((one_body_kernel(&w, 0.5 * L, 0.5 * L) - 2.0 / L).abs() < 1e-9 / L);
        let a = one_body_kernel(&w, 0.1 * L, 0.7 * L);
        let b = one_body_kernel(&w, 0.7 * L, 0.1 * L);
        assert_eq!(a, b);
        let expect = 2.0 / L * (0.1 * PI).sin() * (0.7 * PI).sin();
        assert!((a - expect).abs() < 1e-12 / L);
    }

    #[test]
    fn well_third_probability() {
        let w = AxialWeights::ground_state(well());
        let p = region_probability(&w, iv(0.0, 1.0 / 3.0)).unwrap();
        assert!((p - (1.0 / 3.0 - 3f64.sqrt() / (4.0 * PI))).abs() < 1e-12);
        assert!((region_probability(&w, iv(0.0, 1.0)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_mode_functionals() {
        let w = flat();
        let o = CoherenceOptions::default();
        let p = region_probability(&w, iv(0.0, 1.0 / 3.0)).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-14);
        let i = coherence_integral(&w, iv(0.0, 0.25), iv(0.5, 0.75), &o).unwrap();
        assert!((i - 1.0 / 16.0).abs() < 1e-14);
        let od = detector_overlap(&w, iv(0.0, 0.25), iv(0.5, 0.75), &DetectorProfile::default())
            .unwrap();
        assert!((od - 0.25).abs() < 1e-14);
    }

    #[test]
    fn well_halves_detector_overlap() {
        let w = AxialWeights::ground_state(well());
        let od = detector_overlap(&w, iv(0.0, 0.5), iv(0.5, 1.0), &DetectorProfile::default())
            .unwrap();
        assert!((od - 4.0 / (PI * PI)).abs() < 1e-13);
    }

    #[test]
    fn pure_state_full_domain_purity() {
        let w = AxialWeights::ground_state(well());
        let i = coherence_integral(&w, iv(0.0, 1.0), iv(0.0, 1.0), &Default::default()).unwrap();
        assert!((i - 1.0).abs() < 1e-13);
        let z = coherence_integral(&w, iv(0.0, 0.5), iv(0.7, 0.7), &Default::default()).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn equal_thirds_closed_form_rows() {
        let w = AxialWeights::ground_state(well());
        let part = SlabPartition::tiling(0, iv(0.0, 1.0), L / 3.0, L / 3.0).unwrap();
        let m = tripartite_matrix(&w, &part, &DetectorProfile::default(), DiagonalConvention::StrictProjection)
            .unwrap();
        let c = [6f64.sqrt() / (2.0 * PI), 6f64.sqrt() / PI, 6f64.sqrt() / (2.0 * PI)];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.r[i][j] - c[i] * c[j]).abs() < 1e-12, "{i}{j}");
            }
        }
    }

    fn thermal_well(k: usize) -> AxialWeights {
        let w: Vec<f64> = (0..k).map(|i| (-0.3 * i as f64).exp()).collect();
        AxialWeights::synthetic(well(), w).unwrap()
    }

    fn thermal_oscillator(k: usize) -> AxialWeights {
        let b = AxisBasis::Harmonic { omega: 2.0 * PI * 100.0, mass: RB87_MASS };
        let w: Vec<f64> = (0..k).map(|i| (-0.05 * i as f64).exp()).collect();
        AxialWeights::synthetic(b, w).unwrap()
    }

    #[test]
    fn strategies_agree() {
        let over = CoherenceOptions { strategy: Strategy::OverlapMatrix, ..Default::default() };
        let direct = CoherenceOptions { strategy: Strategy::Direct, ..Default::default() };
        let w = thermal_well(60);
        for (x, y) in [(iv(0.0, 0.3), iv(0.4, 0.9)), (iv(0.1, 0.45), iv(0.1, 0.45))] {
            let a = coherence_integral(&w, x, y, &over).unwrap();
            let b = coherence_integral(&w, x, y, &direct).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} {b}");
        }
        let h = thermal_oscillator(150);
        let s = h.basis.length_scale();
        let x = Interval::new(-3.0 * s, -0.2 * s).unwrap();
        let y = Interval::new(0.2 * s, 2.0 * s).unwrap();
        let a = coherence_integral(&h, x, y, &over).unwrap();
        let b = coherence_integral(&h, x, y, &direct).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} {b}");
    }

    #[test]
    fn oscillator_probabilities_tile() {
        let h = thermal_oscillator(200);
        let d = analysis_domain(&h);
        let part = SlabPartition::tiling(0, d, 0.3 * d.length(), 0.25 * d.length()).unwrap();
        let m = tripartite_matrix(&h, &part, &DetectorProfile::default(), DiagonalConvention::Population)
            .unwrap();
        assert!((m.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let r = part.regions().unwrap();
        let direct: f64 = r.iter().map(|iv| region_probability(&h, *iv).unwrap()).sum();
        assert!((direct - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_flat_matches_uniform() {
        let w = thermal_well(40);
        let tab = DetectorProfile::TabulatedNormalized(vec![(0.0, 2.0), (0.4, 2.0), (1.0, 2.0)]);
        let a = detector_overlap(&w, iv(0.05, 0.3), iv(0.6, 0.8), &tab).unwrap();
        let b = detector_overlap(&w, iv(0.05, 0.3), iv(0.6, 0.8), &DetectorProfile::default())
            .unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn invalid_profiles_rejected() {
        let bad = [
            vec![(0.0, 1.0)],
            vec![(0.0, 1.0), (0.5, 1.0)],
            vec![(0.0, 1.0), (0.5, 1.0), (0.5, 1.0), (1.0, 1.0)],
            vec![(0.0, 0.0), (1.0, 0.0)],
        ];
        for pts in bad {
            assert!(DetectorProfile::TabulatedNormalized(pts).validate().is_err());
        }
    }

    #[test]
    fn regions_outside_box_rejected() {
        let w = AxialWeights::ground_state(well());
        assert!(region_probability(&w, iv(-0.1, 0.5)).is_err());
        assert!(region_probability(&w, iv(0.5, 1.2)).is_err());
    }

    #[test]
    fn cached_vectors_do_not_depend_on_request_size() {
        let h = thermal_oscillator(10);
        let x = Interval::new(0.1e-6, 0.9e-6).unwrap();
        clear_cache();
        let small = diagonal_overlaps(&h.basis, x, 10).unwrap();
        clear_cache();
        let big = diagonal_overlaps(&h.basis, x, 900).unwrap();
        assert_eq!(&small[..10], &big[..10]);
    }

    #[test]
    fn tiling_rejects_oversized_regions() {
        assert!(SlabPartition::tiling(0, iv(0.0, 1.0), 0.7 * L, 0.4 * L).is_err());
        let p = SlabPartition::tiling(0, iv(0.0, 1.0), 0.2 * L, 0.3 * L).unwrap();
        assert!(p.check_tiling().is_ok());
        let r = p.reflect(0.5 * L);
        assert!(r.check_tiling().is_ok());
        assert!((r.lengths()[0] - 0.5 * L).abs() < 1e-18);
    }
}
