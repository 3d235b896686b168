use std::f64::consts::PI;

use spatial_witness::coherence::{self, analysis_domain};
use spatial_witness::constants::RB87_MASS;
use spatial_witness::oracle::{self, GridDiscretization};
use spatial_witness::thermal::{self, axial_occupations, critical_temperature, occupations};
use spatial_witness::witness::{self, default_bracket, tmax_row, DEFAULT_TMAX_TOL};
use spatial_witness::{
    AxialOptions, AxialWeights, AxisBasis, CoherenceOptions, DetectorProfile, DiagonalConvention,
    EvalOptions, GasSpec, Interval, SlabPartition, TrapSpec, WitnessError,
};

const NK: f64 = 1e-9;
const BOX: f64 = 8.18e-6;

fn cigar() -> GasSpec {
    let trap = TrapSpec::HarmonicCigar3D {
        omega_ax: 2.0 * PI * 13.0,
        omega_per: 2.0 * PI * 140.0,
    };
    GasSpec::rb87(trap, 4_000_000).unwrap()
}

fn box_gas(n: u64) -> GasSpec {
    GasSpec::rb87(TrapSpec::cube(BOX), n).unwrap()
}

#[test]
fn box_condensate_fraction_follows_semiclassical_law() {
    let gas = box_gas(30_000);
    let tc = critical_temperature(&gas).unwrap();
    let w = axial_occupations(&gas, 100.0 * NK, 0, &AxialOptions::default()).unwrap();
    // Hard walls remove low-lying states relative to the bulk density of
    // states, so the finite gas condenses more than the bulk law predicts.
    let expected = 1.0 - (100.0 * NK / tc).powf(1.5);
    assert!((expected - 0.77).abs() <= 0.03);
    let excess = w.condensate_fraction - expected;
    assert!(excess > 0.0 && excess <= 0.06, "{} vs {expected}", w.condensate_fraction);
    let half = axial_occupations(&gas, 0.5 * tc, 0, &AxialOptions::default()).unwrap();
    assert!(half.condensate_fraction > 0.6);
}

#[test]
fn critical_temperatures() {
    let tc = critical_temperature(&cigar()).unwrap();
    assert!((tc / (440.0 * NK) - 1.0).abs() <= 0.05);
    let tc = critical_temperature(&box_gas(30_000)).unwrap();
    assert!((tc / (270.0 * NK) - 1.0).abs() <= 0.05);
}

#[test]
fn cigar_axial_cutoff_spans_the_thermal_scale() {
    let t = 440.0 * NK;
    let w = axial_occupations(&cigar(), t, 0, &AxialOptions::default()).unwrap();
    let ratio = spatial_witness::constants::K_B * t / (spatial_witness::constants::HBAR * 2.0 * PI * 13.0);
    assert!(w.top_qn() as f64 >= ratio, "top {} vs {ratio}", w.top_qn());
    assert!(w.dropped_tail <= 1e-10);
    assert!((w.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn enumeration_past_the_cap_is_a_resource_error() {
    let opts = AxialOptions { mode_cap: 10, ..Default::default() };
    let err = axial_occupations(&cigar(), 200.0 * NK, 0, &opts).unwrap_err();
    assert!(matches!(err, WitnessError::Resource(_)), "{err}");
}

#[test]
fn axial_route_matches_full_enumeration() {
    let gas = GasSpec::rb87(TrapSpec::UniformBox3D { lx: 2e-6, ly: 1.5e-6, lz: 1e-6 }, 300).unwrap();
    for t in [20.0 * NK, 80.0 * NK] {
        let modes = spatial_witness::modes::enumerate_modes(&gas, t, 1e-12).unwrap();
        let full = occupations(&gas, t, &modes).unwrap();
        for axis in 0..3 {
            let m = thermal::marginalize_axis(&full, &modes, axis).unwrap();
            let fast = axial_occupations(&gas, t, axis, &AxialOptions { tail_tolerance: 1e-12, ..Default::default() }).unwrap();
            for (i, q) in m.weights.iter().enumerate() {
                let f = fast.weights.get(i).copied().unwrap_or(0.0);
                assert!((q - f).abs() <= 1e-9, "axis {axis} index {i}: {q} vs {f}");
            }
        }
    }
}

/// Witnesses at fixed reference partitions do not grow with temperature.
#[test]
fn witnesses_fall_with_temperature_at_reference_configurations() {
    let gas = cigar();
    let tc = critical_temperature(&gas).unwrap();
    let a = Interval::new(-92.5e-9 - 350e-9, -92.5e-9).unwrap();
    let b = Interval::new(92.5e-9, 92.5e-9 + 350e-9).unwrap();
    let opts = EvalOptions::default();
    // The thin gapped slabs never detect; E only climbs towards zero.
    let e: Vec<f64> = (0..=12)
        .map(|k| witness::bipartite_at(&gas, 0.1 * k as f64 * tc, 0, a, b, &DetectorProfile::default(), &opts).unwrap().e_witness)
        .collect();
    assert!(e.iter().all(|&v| v < 0.0), "{e:?}");
    assert!(e.windows(2).all(|p| p[1] >= p[0] - 1e-12), "{e:?}");

    let gas = box_gas(30_000);
    let tc = critical_temperature(&gas).unwrap();
    let d = Interval::new(0.0, BOX).unwrap();
    let part = SlabPartition::tiling(0, d, 0.4 * BOX, 0.2 * BOX).unwrap();
    let w: Vec<f64> = (0..=12)
        .map(|k| {
            witness::tripartite_at(&gas, 0.1 * k as f64 * tc, &part, &DetectorProfile::default(), DiagonalConvention::Population, &opts)
                .unwrap()
                .w_witness
        })
        .collect();
    assert!(w.windows(2).all(|p| p[1] <= p[0] + 1e-12), "{w:?}");
    assert!((w[12] + 1.0).abs() < 0.5, "high-temperature W = {}", w[12]);
}

#[test]
fn box_tmax_below_tc_and_falls_with_n() {
    let d = Interval::new(0.0, BOX).unwrap();
    let part = SlabPartition::tiling(0, d, 0.4 * BOX, 0.2 * BOX).unwrap();
    let opts = EvalOptions::default();
    let at = |n: u64| {
        let gas = box_gas(n);
        let r = tmax_row(&gas, 0, &part, &DetectorProfile::default(), DiagonalConvention::Population, default_bracket(&gas).unwrap(), DEFAULT_TMAX_TOL, &opts).unwrap();
        (r.t_max, critical_temperature(&gas).unwrap())
    };
    let (t, tc) = at(30_000);
    assert!(t > 0.0 && t < tc);
    assert!((0.6..=0.85).contains(&(t / tc)), "{}", t / tc);
    let (t_half, _) = at(15_000);
    assert!(t_half < t);
}

#[test]
fn unentangled_partition_has_no_bracket() {
    let gas = box_gas(30_000);
    let d = Interval::new(0.0, BOX).unwrap();
    let part = SlabPartition::tiling(0, d, 0.8 * BOX, 0.1 * BOX).unwrap();
    let err = witness::tmax_bisection(
        &gas,
        &part,
        &DetectorProfile::default(),
        DiagonalConvention::StrictProjection,
        default_bracket(&gas).unwrap(),
        DEFAULT_TMAX_TOL,
        &EvalOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, WitnessError::Bracket { .. }), "{err}");
}

#[test]
fn zero_temperature_purity() {
    let w = AxialWeights::ground_state(AxisBasis::Well { length: 1e-6, mass: RB87_MASS });
    let opts = CoherenceOptions::default();
    let p = DetectorProfile::default();
    let half = |lo, hi| Interval::new(lo, hi).unwrap();
    let tiled = witness::bipartite_witness(&w, 1000, half(0.0, 0.5e-6), half(0.5e-6, 1e-6), &p, &opts).unwrap();
    assert!((tiled.mu_exact - 1.0).abs() <= 1e-10);
    assert!((tiled.mu_exact - tiled.mu_paper).abs() <= 1e-10);
    let gapped = witness::bipartite_witness(&w, 1000, half(0.1e-6, 0.4e-6), half(0.6e-6, 0.9e-6), &p, &opts).unwrap();
    assert!(gapped.functionals.p_c > 0.0 && gapped.mu_exact < 1.0);
    assert!((gapped.mu_exact - gapped.mu_paper).abs() <= 1e-10);
}

#[test]
fn equal_thirds_well_against_oracle() {
    let w = AxialWeights::ground_state(AxisBasis::Well { length: BOX, mass: RB87_MASS });
    let part = SlabPartition::tiling(0, Interval::new(0.0, BOX).unwrap(), BOX / 3.0, BOX / 3.0).unwrap();
    let grid = GridDiscretization::new(&w, 601).unwrap().with_levels(2);
    let p = DetectorProfile::default();
    let strict = witness::tripartite_witness(&w, &part, &p, DiagonalConvention::StrictProjection).unwrap();
    assert!((strict.w_witness - (24.0 / (PI * PI) - 2.0)).abs() <= 1e-10);
    assert!((strict.w_witness - 0.4323).abs() <= 1e-3);
    let o = oracle::oracle_tripartite_witness(&grid, &part, &p, DiagonalConvention::StrictProjection).unwrap();
    assert!((o - strict.w_witness).abs() <= 1e-6 * strict.w_witness);
    let pop = witness::tripartite_witness(&w, &part, &p, DiagonalConvention::Population).unwrap();
    assert!((pop.w_witness - 0.5203).abs() <= 1e-3);
    assert!((strict.matrix.r[0][1] - 3.0 / (PI * PI)).abs() <= 1e-10);
}

#[test]
fn oracle_extrapolation_converges() {
    let gas = GasSpec::rb87(TrapSpec::Harmonic1D { omega: 2.0 * PI * 100.0 }, 100).unwrap();
    let w = axial_occupations(&gas, 30.0 * NK, 0, &AxialOptions::default()).unwrap();
    let d = analysis_domain(&w);
    let a = Interval::new(d.lo + 0.3 * d.length(), d.lo + 0.45 * d.length()).unwrap();
    let b = Interval::new(d.lo + 0.5 * d.length(), d.lo + 0.62 * d.length()).unwrap();
    let exact = coherence::coherence_integral(&w, a, b, &CoherenceOptions::default()).unwrap();
    let err = |levels| {
        let g = GridDiscretization::new(&w, 1201).unwrap().with_levels(levels);
        (oracle::oracle_coherence_integral(&g, a, b).unwrap() - exact).abs() / exact
    };
    let (e0, e1, e2) = (err(0), err(1), err(2));
    assert!(e1 < e0 && e2 < e1, "{e0:e} {e1:e} {e2:e}");
    assert!(e2 <= 1e-8, "{e2:e}");
}

#[test]
fn caching_is_invisible() {
    let gas = GasSpec::rb87(TrapSpec::Harmonic1D { omega: 2.0 * PI * 80.0 }, 500).unwrap();
    let w = axial_occupations(&gas, 50.0 * NK, 0, &AxialOptions::default()).unwrap();
    let d = analysis_domain(&w);
    let part = SlabPartition::tiling(0, d, 0.45 * d.length(), 0.1 * d.length()).unwrap();
    let p = DetectorProfile::TabulatedNormalized(vec![(0.0, 1.0), (0.5, 1.5), (1.0, 1.0)]);
    let first = witness::tripartite_witness(&w, &part, &p, DiagonalConvention::Population).unwrap();
    let warm = witness::tripartite_witness(&w, &part, &p, DiagonalConvention::Population).unwrap();
    coherence::clear_cache();
    let cold = witness::tripartite_witness(&w, &part, &p, DiagonalConvention::Population).unwrap();
    assert_eq!(first, warm);
    assert_eq!(first, cold);
}
