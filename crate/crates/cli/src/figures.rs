//! Built-in configurations reproducing the reference figures as tables.

use std::f64::consts::PI;

use spatial_witness::witness;
use spatial_witness::{DetectorProfile, DiagonalConvention, Interval};

use crate::config::{
    AnalysisConfig, AnalysisKind, GasConfig, NumericsConfig, OutputConfig, PartitionConfig,
    RunConfig, SweepConfig, SweepParameter, TrapConfig,
};
use crate::error::CliError;
use crate::run::{self, TRIPARTITE_COLUMNS};
use crate::table::{Cell, Table};

pub const FIGURES: &[&str] = &["fig1", "fig3", "fig4", "fig5"];

/// Elongated harmonic trap of the coherence figures.
pub fn cigar_gas() -> GasConfig {
    GasConfig {
        trap: TrapConfig::Cigar3d {
            omega_ax: 2.0 * PI * 13.0,
            omega_per: 2.0 * PI * 140.0,
        },
        n: 4_000_000,
        mass: spatial_witness::constants::RB87_MASS,
    }
}

pub const SLAB_LENGTH: f64 = 350e-9;
pub const SEPARATIONS: [f64; 3] = [185e-9, 325e-9, 600e-9];
/// Side of the cubic box; the stated "818" is read as 8.18 um.
pub const BOX_LENGTH: f64 = 8.18e-6;
pub const BOX_N: u64 = 30_000;
/// Partition grid step as a fraction of the box side.
pub const GRID_STEP: f64 = 0.02;

pub fn box_gas(n: u64) -> GasConfig {
    GasConfig {
        trap: TrapConfig::Box3d {
            lx: BOX_LENGTH,
            ly: BOX_LENGTH,
            lz: BOX_LENGTH,
        },
        n,
        mass: spatial_witness::constants::RB87_MASS,
    }
}

fn grid(step: f64, last: f64) -> Vec<f64> {
    let n = (last / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Bipartite slab configuration of the coherence figures.
pub fn slab_config(separation: f64, temperatures: Vec<f64>) -> RunConfig {
    RunConfig {
        gas: cigar_gas(),
        analysis: AnalysisConfig {
            kind: AnalysisKind::Bipartite,
            axis: 0,
            partition: Some(PartitionConfig::Gap {
                length: SLAB_LENGTH,
                gap: separation,
                center: None,
            }),
            profile: Default::default(),
            convention: Default::default(),
            temperature: 0.0,
            centre_slice: false,
        },
        sweep: Some(SweepConfig {
            parameter: SweepParameter::Temperature,
            values: temperatures,
        }),
        numerics: NumericsConfig::default(),
        output: OutputConfig::default(),
    }
}

fn slab_figure(temperatures: Vec<f64>, threads: Option<usize>) -> Result<Table, CliError> {
    let mut out: Option<Table> = None;
    for dz in SEPARATIONS {
        let mut t = run::run(&slab_config(dz, temperatures.clone()), threads)?;
        t.columns.push("gap_m".into());
        for r in &mut t.rows {
            r.push(Cell::Float(dz));
        }
        match &mut out {
            None => out = Some(t),
            Some(o) => o.rows.extend(t.rows),
        }
    }
    let mut t = out.expect("three separations");
    t.metadata.insert(
        "note".into(),
        "E is the purity witness, not a negativity".into(),
    );
    t.metadata.insert("L_A_m".into(), format!("{SLAB_LENGTH:e}"));
    t.metadata.insert("L_B_m".into(), format!("{SLAB_LENGTH:e}"));
    Ok(t)
}

/// Zero-temperature well: W over every `(L_A, L_B)` on the grid with all
/// three regions non-empty.
fn well_scan() -> Result<Table, CliError> {
    let gas = box_gas(BOX_N).spec()?;
    let basis = gas.trap.axis_basis(0, gas.mass)?;
    let w = spatial_witness::AxialWeights::ground_state(basis);
    let domain = Interval::new(0.0, BOX_LENGTH)?;
    let steps = (1.0 / GRID_STEP).round() as usize;
    let mut pairs = Vec::new();
    for i in 1..steps {
        for j in 1..steps - i {
            pairs.push((i as f64 * GRID_STEP * BOX_LENGTH, j as f64 * GRID_STEP * BOX_LENGTH));
        }
    }
    let mut table = Table::new(TRIPARTITE_COLUMNS);
    table.columns.push("argmax".into());
    for conv in [DiagonalConvention::Population, DiagonalConvention::StrictProjection] {
        let scan = witness::partition_scan(&w, 0, domain, &pairs, &DetectorProfile::default(), conv)?;
        for r in &scan.rows {
            let mut row = vec![Cell::Float(0.0)];
            row.extend(r.lengths.iter().chain(&r.probabilities).map(|&v| Cell::Float(v)));
            row.push(Cell::Float(r.w_witness));
            row.push(Cell::Text(conv.name().into()));
            row.push(Cell::Int((r.index == scan.argmax) as u64));
            table.rows.push(row);
        }
    }
    table.metadata.insert("analysis".into(), "scan".into());
    table.metadata.insert("L_m".into(), format!("{BOX_LENGTH:e}"));
    Ok(table)
}

/// T_max against L_B with L_A = L_C in the box.
pub fn box_tmax_config(n: u64, fractions: Vec<f64>) -> RunConfig {
    RunConfig {
        gas: box_gas(n),
        analysis: AnalysisConfig {
            kind: AnalysisKind::Tmax,
            axis: 0,
            partition: Some(PartitionConfig::TilingFraction { f_a: 0.4, f_b: 0.2 }),
            profile: Default::default(),
            convention: Default::default(),
            temperature: 0.0,
            centre_slice: false,
        },
        sweep: Some(SweepConfig {
            parameter: SweepParameter::LengthB,
            values: fractions,
        }),
        numerics: NumericsConfig::default(),
        output: OutputConfig::default(),
    }
}

pub fn box_fractions() -> Vec<f64> {
    let steps = (1.0 / GRID_STEP).round() as usize;
    (1..steps - 1).map(|i| i as f64 * GRID_STEP).collect()
}

pub fn reproduce(name: &str, threads: Option<usize>) -> Result<Table, CliError> {
    let mut t = match name {
        "fig1" => slab_figure(grid(25e-9, 500e-9), threads)?,
        "fig3" => slab_figure(grid(10e-9, 200e-9), threads)?,
        "fig4" => well_scan()?,
        "fig5" => run::run(&box_tmax_config(BOX_N, box_fractions()), threads)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown figure '{other}', expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    t.metadata.insert("figure".into(), name.into());
    Ok(t)
}
