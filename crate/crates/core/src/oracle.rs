//! Brute-force recomputation of every region functional on uniform grids.
//!
//! Kernels are assembled by direct mode summation at grid points and
//! integrated with the trapezoid rule, so agreement with the Gauss-Legendre
//! fast path is evidence rather than shared bias. Purities come from an
//! explicitly assembled block density matrix: the vacuum weight `p_C` next to
//! the one-particle kernel on `A u B`.

use ndarray::Array2;

use crate::basis::Interval;
use crate::coherence::{
    analysis_domain, CoherenceFunctionals, DetectorProfile, DiagonalConvention, SlabPartition,
};
use crate::error::{Result, WitnessError};
use crate::thermal::AxialWeights;

/// Points per shortest mode wavelength below which a grid is rejected.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 8.0;

/// Uniform grid over the analysis domain with the sampled modes and kernel.
#[derive(Debug, Clone)]
pub struct GridDiscretization {
    pub weights: AxialWeights,
    pub domain: Interval,
    /// m
    pub spacing: f64,
    pub points: Vec<f64>,
    /// modes x points
    pub mode_values: Array2<f64>,
    /// points x points
    pub kernel: Array2<f64>,
    /// Extrapolation levels over spacings `h, h/2, ..., h/2^levels`: 0 is
    /// the plain trapezoid rule, 1 is Richardson, more is Romberg.
    pub levels: usize,
}

impl GridDiscretization {
    /// Grid of `points` equally spaced nodes spanning the analysis domain.
    pub fn new(weights: &AxialWeights, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(WitnessError::Domain("a grid needs at least two points".into()));
        }
        let domain = analysis_domain(weights);
        let spacing = domain.length() / (points - 1) as f64;
        let wavelength = 2.0 * weights.basis.half_wavelength(weights.top_qn());
        if spacing * MIN_POINTS_PER_WAVELENGTH > wavelength * (1.0 + 1e-12) {
            return Err(WitnessError::Resolution(format!(
                "grid spacing {spacing:.3e} m gives {:.2} points per shortest wavelength \
                 {wavelength:.3e} m; at least {MIN_POINTS_PER_WAVELENGTH} needed",
                wavelength / spacing
            )));
        }
        let xs: Vec<f64> = (0..points)
            .map(|i| if i == points - 1 { domain.hi } else { domain.lo + spacing * i as f64 })
            .collect();
        let mode_values = sample_modes(weights, &xs);
        let kernel = kernel_block(weights, &mode_values, &mode_values);
        Ok(GridDiscretization {
            weights: weights.clone(),
            domain,
            spacing,
            points: xs,
            mode_values,
            kernel,
            levels: 0,
        })
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.levels = on as usize;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    /// Spacing in units of the domain length.
    pub fn relative_spacing(&self) -> f64 {
        self.spacing / self.domain.length()
    }

    /// Trapezoid trace of the sampled kernel over the whole grid.
    pub fn trace(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * self.spacing * self.kernel[[i, i]]
            })
            .sum()
    }

    /// Evaluates `f(h)` at the grid spacing, extrapolated if enabled.
    fn at_spacing<F: Fn(Spacing) -> f64>(&self, f: F) -> f64 {
        romberg(&self.spacings().map(f).collect::<Vec<_>>())
    }

    fn spacings(&self) -> impl Iterator<Item = Spacing> + '_ {
        (0..=self.levels).map(|k| Spacing {
            base: self.spacing,
            level: k as u32,
        })
    }
}

/// Target spacing `base` refined `level` times. Each region picks its node
/// count at `base` and doubles it per level, so steps halve exactly as the
/// extrapolation assumes.
#[derive(Debug, Clone, Copy)]
struct Spacing {
    base: f64,
    level: u32,
}

/// Romberg extrapolation of trapezoid values at successively halved spacings.
fn romberg(values: &[f64]) -> f64 {
    let mut row = values.to_vec();
    for j in 1..values.len() {
        let factor = 4f64.powi(j as i32) - 1.0;
        for k in (j..values.len()).rev() {
            row[k] += (row[k] - row[k - 1]) / factor;
        }
    }
    row[values.len() - 1]
}

fn sample_modes(w: &AxialWeights, xs: &[f64]) -> Array2<f64> {
    let k = w.len();
    let mut m = Array2::zeros((k, xs.len()));
    for (j, &x) in xs.iter().enumerate() {
        for (i, v) in w.basis.eval_all(k, x).into_iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    m
}

/// `rho(x_i, y_j) = sum_n Q_n phi_n(x_i) phi_n(y_j)`.
fn kernel_block(w: &AxialWeights, fx: &Array2<f64>, fy: &Array2<f64>) -> Array2<f64> {
    let mut scaled = fx.clone();
    for (mut row, q) in scaled.rows_mut().into_iter().zip(&w.weights) {
        row.iter_mut().for_each(|v| *v *= q);
    }
    scaled.t().dot(fy)
}

/// Uniform trapezoid grid on `iv` with spacing at most `h`, endpoints included.
struct RegionGrid {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl RegionGrid {
    fn new(iv: Interval, h: Spacing) -> Self {
        let len = iv.length();
        if len <= 0.0 {
            return RegionGrid {
                x: Vec::new(),
                w: Vec::new(),
            };
        }
        let n = ((len / h.base).ceil() as usize).max(1) << h.level;
        let step = len / n as f64;
        // pin the last node so it cannot round past a hard wall
        let x = (0..=n)
            .map(|i| if i == n { iv.hi } else { iv.lo + step * i as f64 })
            .collect();
        let w = (0..=n)
            .map(|i| if i == 0 || i == n { 0.5 * step } else { step })
            .collect();
        RegionGrid { x, w }
    }
}

fn profile_values(profile: &DetectorProfile, iv: Interval, xs: &[f64]) -> Vec<f64> {
    let len = iv.length();
    match profile {
        DetectorProfile::UniformNormalized => vec![1.0 / len.sqrt(); xs.len()],
        DetectorProfile::Indicator => vec![1.0; xs.len()],
        DetectorProfile::TabulatedNormalized(pts) => {
            let norm: f64 = pts
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[0].1 * w[0].1 + w[0].1 * w[1].1 + w[1].1 * w[1].1) / 3.0)
                .sum();
            let scale = 1.0 / (len * norm).sqrt();
            xs.iter()
                .map(|&x| {
                    let u = ((x - iv.lo) / len).clamp(0.0, 1.0);
                    let i = pts.partition_point(|p| p.0 <= u).clamp(1, pts.len() - 1);
                    let (u0, g0) = pts[i - 1];
                    let (u1, g1) = pts[i];
                    scale * (g0 + (g1 - g0) * (u - u0) / (u1 - u0))
                })
                .collect()
        }
    }
}

fn region_probability_at(w: &AxialWeights, iv: Interval, h: Spacing) -> f64 {
    let g = RegionGrid::new(iv, h);
    g.x.iter()
        .zip(&g.w)
        .map(|(&x, wt)| {
            let phi = w.basis.eval_all(w.len(), x);
            wt * w.weights.iter().zip(&phi).map(|(q, f)| q * f * f).sum::<f64>()
        })
        .sum()
}

/// `sum_ij wx_i wy_j gx_i gy_j rho(x_i, y_j)^power`.
fn double_sum(w: &AxialWeights, x: Interval, y: Interval, h: Spacing, gx: Option<&DetectorProfile>, power: i32) -> f64 {
    let rx = RegionGrid::new(x, h);
    let ry = RegionGrid::new(y, h);
    if rx.x.is_empty() || ry.x.is_empty() {
        return 0.0;
    }
    let k = kernel_block(w, &sample_modes(w, &rx.x), &sample_modes(w, &ry.x));
    let (px, py) = match gx {
        Some(p) => (profile_values(p, x, &rx.x), profile_values(p, y, &ry.x)),
        None => (vec![1.0; rx.x.len()], vec![1.0; ry.x.len()]),
    };
    let mut total = 0.0;
    for i in 0..rx.x.len() {
        let mut row = 0.0;
        for j in 0..ry.x.len() {
            row += ry.w[j] * py[j] * k[[i, j]].powi(power);
        }
        total += rx.w[i] * px[i] * row;
    }
    total
}

fn check(grid: &GridDiscretization, regions: &[Interval]) -> Result<()> {
    let d = grid.domain;
    let tol = 1e-12 * d.length();
    for iv in regions {
        Interval::new(iv.lo, iv.hi)?;
        if iv.lo < d.lo - tol || iv.hi > d.hi + tol {
            return Err(WitnessError::Domain(format!(
                "region [{:e}, {:e}] leaves the grid domain [{:e}, {:e}]",
                iv.lo, iv.hi, d.lo, d.hi
            )));
        }
    }
    Ok(())
}

pub fn oracle_region_probability(grid: &GridDiscretization, x: Interval) -> Result<f64> {
    check(grid, &[x])?;
    Ok(grid.at_spacing(|h| region_probability_at(&grid.weights, x, h)))
}

/// Trapezoid double sum of `rho^2` over `X x Y`.
pub fn oracle_coherence_integral(grid: &GridDiscretization, x: Interval, y: Interval) -> Result<f64> {
    check(grid, &[x, y])?;
    Ok(grid.at_spacing(|h| double_sum(&grid.weights, x, y, h, None, 2)))
}

/// Trapezoid double sum of `g(x) g(y) rho(x, y)` over `A x B`.
pub fn oracle_detector_overlap(
    grid: &GridDiscretization,
    a: Interval,
    b: Interval,
    profile: &DetectorProfile,
) -> Result<f64> {
    profile.validate()?;
    check(grid, &[a, b])?;
    if a.length() == 0.0 || b.length() == 0.0 {
        return Ok(0.0);
    }
    Ok(grid.at_spacing(|h| double_sum(&grid.weights, a, b, h, Some(profile), 1)))
}

/// Parts of the grid domain outside `A u B`.
fn complement(domain: Interval, a: Interval, b: Interval) -> Vec<Interval> {
    let (first, second) = if a.lo <= b.lo { (a, b) } else { (b, a) };
    [
        (domain.lo, first.lo),
        (first.hi, second.lo),
        (second.hi, domain.hi),
    ]
    .into_iter()
    .filter(|(lo, hi)| hi > lo)
    .map(|(lo, hi)| Interval { lo, hi })
    .collect()
}

/// Purities and trace of the explicitly assembled two-region state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePurities {
    pub mu_exact: f64,
    /// Reduced purity of region A, `(1 - p_A)^2 + I_AA`.
    pub mu_a_exact: f64,
    pub trace: f64,
    pub p_a: f64,
    pub p_b: f64,
    /// From its own trapezoid sum over the complement of `A u B`.
    pub p_c: f64,
}

fn purities_at(w: &AxialWeights, domain: Interval, a: Interval, b: Interval, h: Spacing) -> OraclePurities {
    let ga = RegionGrid::new(a, h);
    let gb = RegionGrid::new(b, h);
    let nodes: Vec<f64> = ga.x.iter().chain(&gb.x).copied().collect();
    let weights: Vec<f64> = ga.w.iter().chain(&gb.w).copied().collect();
    let na = ga.x.len();
    let n = nodes.len();
    let f = sample_modes(w, &nodes);
    let k = kernel_block(w, &f, &f);
    // M = W^1/2 K W^1/2 is the one-particle block in a discrete orthonormal basis
    let sw: Vec<f64> = weights.iter().map(|v| v.sqrt()).collect();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = sw[i] * k[[i, j]] * sw[j];
        }
    }
    let p_c: f64 = complement(domain, a, b)
        .into_iter()
        .map(|iv| region_probability_at(w, iv, h))
        .sum();
    let p_a: f64 = (0..na).map(|i| m[[i, i]]).sum();
    let p_b: f64 = (na..n).map(|i| m[[i, i]]).sum();
    let frob_aa: f64 = m.slice(ndarray::s![..na, ..na]).iter().map(|v| v * v).sum();
    let frob: f64 = m.iter().map(|v| v * v).sum();
    OraclePurities {
        mu_exact: p_c * p_c + frob,
        mu_a_exact: (1.0 - p_a) * (1.0 - p_a) + frob_aa,
        trace: p_c + p_a + p_b,
        p_a,
        p_b,
        p_c,
    }
}

pub fn oracle_bipartite_purities(grid: &GridDiscretization, a: Interval, b: Interval) -> Result<OraclePurities> {
    check(grid, &[a, b])?;
    if a.overlaps(&b) {
        return Err(WitnessError::Domain("regions A and B overlap".into()));
    }
    let levels: Vec<OraclePurities> = grid
        .spacings()
        .map(|h| purities_at(&grid.weights, grid.domain, a, b, h))
        .collect();
    let ex = |f: fn(&OraclePurities) -> f64| romberg(&levels.iter().map(f).collect::<Vec<_>>());
    Ok(OraclePurities {
        mu_exact: ex(|p| p.mu_exact),
        mu_a_exact: ex(|p| p.mu_a_exact),
        trace: ex(|p| p.trace),
        p_a: ex(|p| p.p_a),
        p_b: ex(|p| p.p_b),
        p_c: ex(|p| p.p_c),
    })
}

/// Every pair functional recomputed on the grid; `p_C` from the complement.
pub fn oracle_functionals(
    grid: &GridDiscretization,
    a: Interval,
    b: Interval,
    profile: &DetectorProfile,
) -> Result<CoherenceFunctionals> {
    let p = oracle_bipartite_purities(grid, a, b)?;
    Ok(CoherenceFunctionals {
        p_a: p.p_a,
        p_b: p.p_b,
        p_c: p.p_c,
        i_ab: oracle_coherence_integral(grid, a, b)?,
        i_aa: oracle_coherence_integral(grid, a, a)?,
        i_bb: oracle_coherence_integral(grid, b, b)?,
        o_d: oracle_detector_overlap(grid, a, b, profile)?,
        profile_normalized: profile.is_normalized(),
    })
}

/// Detector matrix and probabilities recomputed on the grid.
pub fn oracle_tripartite_matrix(
    grid: &GridDiscretization,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
) -> Result<([[f64; 3]; 3], [f64; 3])> {
    profile.validate()?;
    let regions = partition.check_tiling()?;
    check(grid, &regions)?;
    let mut p = [0.0; 3];
    for (i, iv) in regions.iter().enumerate() {
        p[i] = oracle_region_probability(grid, *iv)?;
    }
    if grid.weights.basis.domain().is_none() {
        let outside = 0.5 * (1.0 - p.iter().sum::<f64>());
        p[0] += outside;
        p[2] += outside;
    }
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = if i == j && convention == DiagonalConvention::Population {
                p[i]
            } else {
                oracle_detector_overlap(grid, regions[i], regions[j], profile)?
            };
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok((r, p))
}

/// `W = sum_ij R_ij - 2` from the grid.
pub fn oracle_tripartite_witness(
    grid: &GridDiscretization,
    partition: &SlabPartition,
    profile: &DetectorProfile,
    convention: DiagonalConvention,
) -> Result<f64> {
    let (r, _) = oracle_tripartite_matrix(grid, partition, profile, convention)?;
    Ok(r.iter().flatten().sum::<f64>() - 2.0)
}
