use proptest::prelude::*;
use spatial_witness::coherence::{self, analysis_domain, one_body_kernel};
use spatial_witness::constants::{K_B, RB87_MASS};
use spatial_witness::modes::{enumerate_modes, region_overlap};
use spatial_witness::thermal::{self, marginalize_axis, occupations};
use spatial_witness::witness;
use spatial_witness::{
    AxialWeights, AxisBasis, CoherenceOptions, DetectorProfile, DiagonalConvention, GasSpec,
    Interval, SlabPartition, Strategy as Path, TrapSpec,
};

fn small_gas() -> impl Strategy<Value = GasSpec> {
    prop_oneof![
        (1e-6..2e-5f64).prop_map(|length| TrapSpec::Uniform1D { length }),
        (50.0..2000.0f64).prop_map(|omega| TrapSpec::Harmonic1D { omega }),
        (2e-6..5e-6f64, 2e-6..5e-6f64, 2e-6..5e-6f64)
            .prop_map(|(lx, ly, lz)| TrapSpec::UniformBox3D { lx, ly, lz }),
    ]
    .prop_flat_map(|trap| (Just(trap), 1u64..5000))
    .prop_map(|(trap, n)| GasSpec::rb87(trap, n).unwrap())
}

fn basis() -> impl Strategy<Value = AxisBasis> {
    prop_oneof![
        (1e-6..1e-5f64).prop_map(|length| AxisBasis::Well { length, mass: RB87_MASS }),
        (1e-6..1e-5f64).prop_map(|length| AxisBasis::NeumannWell { length, mass: RB87_MASS }),
        (50.0..2000.0f64).prop_map(|omega| AxisBasis::Harmonic { omega, mass: RB87_MASS }),
    ]
}

/// Axial weights with geometric decay and a boosted ground mode.
fn weights() -> impl Strategy<Value = AxialWeights> {
    (basis(), 1usize..60, 0.05..1.0f64, 1.0..20.0f64).prop_map(|(b, k, decay, boost)| {
        let mut q: Vec<f64> = (0..k).map(|n| (-(n as f64) / (decay * k as f64)).exp()).collect();
        q[0] *= boost;
        AxialWeights::synthetic(b, q).unwrap()
    })
}

/// Two disjoint intervals in the analysis domain, from four sorted fractions.
fn pair(w: &AxialWeights, f: [f64; 4]) -> (Interval, Interval) {
    let mut f = f;
    f.sort_by(f64::total_cmp);
    let d = analysis_domain(w);
    let at = |u: f64| d.lo + u * d.length();
    (Interval::new(at(f[0]), at(f[1])).unwrap(), Interval::new(at(f[2]), at(f[3])).unwrap())
}

fn mirrored(w: &AxialWeights, gap: f64, len: f64) -> (Interval, Interval) {
    let d = analysis_domain(w);
    let c = w.basis.center();
    let half = 0.5 * d.length();
    let g = gap * half;
    let l = len * (half - g);
    (Interval::new(c - g - l, c - g).unwrap(), Interval::new(c + g, c + g + l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chemical_potential_reproduces_particle_number(gas in small_gas(), t in 1e-9..4e-7f64) {
        let modes = enumerate_modes(&gas, t, 1e-10).unwrap();
        let mu = thermal::solve_chemical_potential(&gas, t, &modes, 1e-12).unwrap();
        prop_assert!(mu < modes.ground_energy());
        let n: f64 = modes.modes.iter().map(|m| 1.0 / (((m.energy - mu) / (K_B * t)).exp_m1())).sum();
        prop_assert!((n / gas.particles as f64 - 1.0).abs() <= 1e-9, "N = {n}");
    }

    #[test]
    fn condensate_fraction_falls_with_temperature(gas in small_gas(), t in 1e-9..3e-7f64) {
        let f = |t: f64| {
            let m = enumerate_modes(&gas, t, 1e-10).unwrap();
            occupations(&gas, t, &m).unwrap().condensate_fraction
        };
        prop_assert!(f(1.5 * t) <= f(t) + 1e-12);
    }

    #[test]
    fn weights_normalized_and_marginals_preserve_totals(gas in small_gas(), t in 1e-9..3e-7f64) {
        let m = enumerate_modes(&gas, t, 1e-10).unwrap();
        let w = occupations(&gas, t, &m).unwrap();
        prop_assert!((w.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.weights.windows(2).all(|p| p[1] <= p[0] + 1e-15));
        for axis in 0..gas.trap.dims() {
            let q = marginalize_axis(&w, &m, axis).unwrap();
            prop_assert!((q.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn overlaps_are_additive(b in basis(), n in 0u32..30, l in 0u32..30, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let d = analysis_domain(&AxialWeights::ground_state(b));
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        let (x0, x1, x2) = (d.lo, d.lo + u * d.length(), d.lo + v * d.length());
        let (n, l) = (n + b.first_qn(), l + b.first_qn());
        let whole = b.overlap(n, l, Interval::new(x0, x2).unwrap(), 1e-13).unwrap();
        let parts = b.overlap(n, l, Interval::new(x0, x1).unwrap(), 1e-13).unwrap()
            + b.overlap(n, l, Interval::new(x1, x2).unwrap(), 1e-13).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-10);
    }

    #[test]
    fn kernel_is_symmetric(w in weights(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let d = analysis_domain(&w);
        let (x, y) = (d.lo + u * d.length(), d.lo + v * d.length());
        prop_assert_eq!(one_body_kernel(&w, x, y), one_body_kernel(&w, y, x));
    }

    #[test]
    fn pair_functional_bounds(w in weights(), f in proptest::array::uniform4(0.0..1.0f64), indicator in any::<bool>()) {
        let (a, b) = pair(&w, f);
        let profile = if indicator { DetectorProfile::Indicator } else { DetectorProfile::UniformNormalized };
        let r = coherence::bipartite_functionals(&w, a, b, &profile, &CoherenceOptions::default()).unwrap();
        prop_assert!((r.p_a + r.p_b + r.p_c - 1.0).abs() <= 1e-10);
        prop_assert!(r.i_ab >= -1e-14 && r.i_ab <= r.p_a * r.p_b + 1e-12);
        prop_assert!(r.i_aa <= r.p_a * r.p_a + 1e-12);
        prop_assert!(r.i_bb <= r.p_b * r.p_b + 1e-12);
        if !indicator {
            prop_assert!(r.o_d * r.o_d <= r.i_ab + 1e-12);
        }
    }

    #[test]
    fn witness_orderings(w in weights(), gap in 0.0..0.5f64, len in 0.05..0.95f64, n in 1u64..100_000) {
        let (a, b) = mirrored(&w, gap, len);
        let r = witness::bipartite_witness(&w, n, a, b, &DetectorProfile::default(), &CoherenceOptions::default()).unwrap();
        prop_assert!(r.e_od <= r.e_witness + 1e-10);
        prop_assert!(r.mu_exact <= r.mu_paper + 1e-12);
        prop_assert!(r.mu_r_exact <= r.mu_r_paper + 1e-12);
        if r.classification == witness::Classification::Entangled && n > witness::LARGE_N {
            prop_assert!(r.e_witness > 0.0);
        }
    }

    #[test]
    fn mirror_symmetry(w in weights(), f in proptest::array::uniform4(0.0..1.0f64), fa in 0.05..0.6f64, fb in 0.05..0.3f64) {
        let c = w.basis.center();
        let (a, b) = pair(&w, f);
        let opts = CoherenceOptions::default();
        let p = DetectorProfile::default();
        let x = coherence::bipartite_functionals(&w, a, b, &p, &opts).unwrap();
        let y = coherence::bipartite_functionals(&w, b.reflect(c), a.reflect(c), &p, &opts).unwrap();
        prop_assert!((x.i_ab - y.i_ab).abs() <= 1e-10);
        prop_assert!((x.o_d - y.o_d).abs() <= 1e-10);
        let d = analysis_domain(&w);
        let part = SlabPartition::tiling(0, d, fa * d.length(), fb * d.length()).unwrap();
        for conv in [DiagonalConvention::Population, DiagonalConvention::StrictProjection] {
            let w1 = witness::tripartite_witness(&w, &part, &p, conv).unwrap().w_witness;
            let w2 = witness::tripartite_witness(&w, &part.reflect(c), &p, conv).unwrap().w_witness;
            prop_assert!((w1 - w2).abs() <= 1e-10);
        }
    }

    #[test]
    fn strategies_agree(w in weights(), f in proptest::array::uniform4(0.0..1.0f64)) {
        let (a, b) = pair(&w, f);
        let at = |strategy| {
            let o = CoherenceOptions { strategy, ..Default::default() };
            coherence::coherence_integral(&w, a, b, &o).unwrap()
        };
        let (x, y) = (at(Path::OverlapMatrix), at(Path::Direct));
        prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-6), "{x:e} vs {y:e}");
    }
}

#[test]
fn slab_overlap_orthonormal_in_box() {
    let trap = TrapSpec::cube(3e-6);
    let full = Interval::new(0.0, 3e-6).unwrap();
    for (a, b, want) in [([1, 1, 1], [1, 1, 1], 1.0), ([1, 2, 1], [1, 3, 1], 0.0), ([4, 2, 2], [4, 2, 2], 1.0)] {
        let v = region_overlap(&trap, RB87_MASS, &a, &b, full, 0).unwrap();
        assert!((v - want).abs() <= 1e-10, "{a:?} {b:?}: {v}");
    }
}
