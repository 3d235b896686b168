//! Sweep orchestration.
//!
//! Sweep points are independent jobs on a rayon pool; rows are merged by grid
//! index, so output never depends on completion order or thread count.

use rayon::prelude::*;
use spatial_witness::coherence::{analysis_domain, SlabPartition};
use spatial_witness::oracle::{self, GridDiscretization, MIN_POINTS_PER_WAVELENGTH};
use spatial_witness::thermal::{self, AxialWeights};
use spatial_witness::witness::{self, TmaxRow};
use spatial_witness::{
    BipartiteReport, EvalOptions, GasSpec, Interval, TripartiteReport, WitnessError,
};

use crate::config::{AnalysisKind, PartitionConfig, RunConfig, SweepParameter};
use crate::error::CliError;
use crate::table::{Cell, Table};

pub const BIPARTITE_COLUMNS: &[&str] = &[
    "T_K", "p_A", "p_B", "p_C", "I_AB", "O_D", "E", "E_OD", "mu_paper", "mu_exact",
    "mu_r_paper", "mu_r_exact", "classification",
];
pub const TRIPARTITE_COLUMNS: &[&str] =
    &["T_K", "L_A_m", "L_B_m", "L_C_m", "P_A", "P_B", "P_C", "W", "convention"];
pub const TMAX_COLUMNS: &[&str] = &[
    "N", "L_A_m", "L_B_m", "L_C_m", "T_max_K", "T_C_K", "T_max_over_T_C", "P_A", "P_B", "P_C",
    "W_low", "convention", "argmax",
];
pub const TC_COLUMNS: &[&str] = &["N", "T_C_K"];
pub const VALIDATE_COLUMNS: &[&str] = &["T_K", "quantity", "fast", "oracle", "rel_diff", "pass"];

/// Relative tolerance of `validate`, with differences measured against
/// `max(|oracle|, VALIDATE_FLOOR)`.
pub const VALIDATE_TOL: f64 = 1e-6;
pub const VALIDATE_FLOOR: f64 = 1e-3;

pub fn bipartite_row(r: &BipartiteReport, temperature: f64) -> Vec<Cell> {
    let f = &r.functionals;
    vec![
        Cell::Float(temperature),
        Cell::Float(f.p_a),
        Cell::Float(f.p_b),
        Cell::Float(f.p_c),
        Cell::Float(f.i_ab),
        Cell::Float(f.o_d),
        Cell::Float(r.e_witness),
        Cell::Float(r.e_od),
        Cell::Float(r.mu_paper),
        Cell::Float(r.mu_exact),
        Cell::Float(r.mu_r_paper),
        Cell::Float(r.mu_r_exact),
        Cell::Text(r.classification.name().into()),
    ]
}

pub fn tripartite_row(r: &TripartiteReport, temperature: f64) -> Vec<Cell> {
    let p = r.probabilities();
    vec![
        Cell::Float(temperature),
        Cell::Float(r.lengths[0]),
        Cell::Float(r.lengths[1]),
        Cell::Float(r.lengths[2]),
        Cell::Float(p[0]),
        Cell::Float(p[1]),
        Cell::Float(p[2]),
        Cell::Float(r.w_witness),
        Cell::Text(r.convention().name().into()),
    ]
}

fn tmax_cells(r: &TmaxRow, n: u64, tc: f64, convention: &str, argmax: bool) -> Vec<Cell> {
    vec![
        Cell::Int(n),
        Cell::Float(r.lengths[0]),
        Cell::Float(r.lengths[1]),
        Cell::Float(r.lengths[2]),
        Cell::Float(r.t_max),
        Cell::Float(tc),
        Cell::Float(r.t_max / tc),
        Cell::Float(r.probabilities[0]),
        Cell::Float(r.probabilities[1]),
        Cell::Float(r.probabilities[2]),
        Cell::Float(r.w_at_low),
        Cell::Text(convention.into()),
        Cell::Int(argmax as u64),
    ]
}

/// One sweep point after substituting the swept value into the base config.
#[derive(Debug, Clone)]
struct Point {
    gas: GasSpec,
    temperature: f64,
    partition: Option<PartitionConfig>,
    /// Swept length of B for tilings; A and C share the rest.
    length_b: Option<f64>,
}

fn points(cfg: &RunConfig) -> Result<Vec<Point>, CliError> {
    let base = Point {
        gas: cfg.gas.spec()?,
        temperature: cfg.analysis.temperature,
        partition: cfg.analysis.partition.clone(),
        length_b: None,
    };
    let Some(sweep) = &cfg.sweep else {
        return Ok(vec![base]);
    };
    Ok(sweep
        .values
        .iter()
        .map(|&v| {
            let mut p = base.clone();
            match sweep.parameter {
                SweepParameter::Temperature => p.temperature = v,
                SweepParameter::N => p.gas.particles = v as u64,
                SweepParameter::Gap => {
                    if let Some(PartitionConfig::Gap { gap, .. }) = &mut p.partition {
                        *gap = v;
                    }
                }
                SweepParameter::LengthB => p.length_b = Some(v),
            }
            p
        })
        .collect())
}

fn pair_regions(p: &Point, axis: usize) -> Result<(Interval, Interval), CliError> {
    let basis = p.gas.trap.axis_basis(axis, p.gas.mass)?;
    match p.partition.as_ref() {
        Some(&PartitionConfig::Slabs { a, b }) => {
            Ok((Interval::new(a[0], a[1])?, Interval::new(b[0], b[1])?))
        }
        Some(&PartitionConfig::Gap { length, gap, center }) => {
            let c = center.unwrap_or(basis.center());
            let h = 0.5 * gap;
            Ok((
                Interval::new(c - h - length, c - h)?,
                Interval::new(c + h, c + h + length)?,
            ))
        }
        _ => Err(CliError::Config("analysis.partition: a slabs or gap partition is required".into())),
    }
}

fn tiling(p: &Point, axis: usize, domain: Interval) -> Result<SlabPartition, CliError> {
    let len = domain.length();
    let (l_a, l_b) = match (p.partition.as_ref(), p.length_b) {
        (Some(&PartitionConfig::Tiling { l_a, l_b }), None) => (l_a, l_b),
        (Some(&PartitionConfig::TilingFraction { f_a, f_b }), None) => (f_a * len, f_b * len),
        (Some(PartitionConfig::Tiling { .. }), Some(b)) => (0.5 * (len - b), b),
        (Some(PartitionConfig::TilingFraction { .. }), Some(b)) => (0.5 * (1.0 - b) * len, b * len),
        _ => {
            return Err(CliError::Config(
                "analysis.partition: a tiling partition is required".into(),
            ))
        }
    };
    Ok(SlabPartition::tiling(axis, domain, l_a, l_b)?)
}

fn threads_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Io(e.to_string()))
}

/// Runs every point in parallel and concatenates the rows in grid order; the
/// first failing point by index determines the error.
fn parallel_rows<F>(pts: &[Point], threads: Option<usize>, f: F) -> Result<Vec<Vec<Cell>>, CliError>
where
    F: Fn(usize, &Point) -> Result<Vec<Vec<Cell>>, CliError> + Sync,
{
    let pool = threads_pool(threads)?;
    let results: Vec<Result<Vec<Vec<Cell>>, CliError>> =
        pool.install(|| pts.par_iter().enumerate().map(|(i, p)| f(i, p)).collect());
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn weights(p: &Point, axis: usize, opts: &EvalOptions) -> Result<AxialWeights, WitnessError> {
    witness::weights_at(&p.gas, p.temperature, axis, opts)
}

/// Appends the swept value as a trailing column when it is not already
/// visible in the fixed columns.
fn sweep_column(cfg: &RunConfig, table: &mut Table, pts: &[Point], per_point: usize) {
    let Some(s) = &cfg.sweep else { return };
    let visible = match cfg.analysis.kind {
        AnalysisKind::Bipartite | AnalysisKind::Od | AnalysisKind::Validate => {
            s.parameter == SweepParameter::Temperature
        }
        AnalysisKind::Tripartite | AnalysisKind::Scan => {
            matches!(s.parameter, SweepParameter::Temperature | SweepParameter::LengthB)
        }
        AnalysisKind::Tmax | AnalysisKind::Tc => {
            matches!(s.parameter, SweepParameter::N | SweepParameter::LengthB)
        }
    };
    if visible {
        return;
    }
    table.columns.push(s.parameter.column().to_string());
    for (i, row) in table.rows.iter_mut().enumerate() {
        let p = &pts[i / per_point.max(1)];
        row.push(match s.parameter {
            SweepParameter::N => Cell::Int(p.gas.particles),
            _ => Cell::Float(s.values[i / per_point.max(1)]),
        });
    }
}

/// Executes a configuration and returns the result table.
pub fn run(cfg: &RunConfig, threads: Option<usize>) -> Result<Table, CliError> {
    cfg.validate()?;
    let opts = cfg.eval_options();
    let axis = cfg.analysis.axis;
    let profile = cfg.analysis.profile.profile();
    let convention = cfg.analysis.convention.convention();
    let pts = points(cfg)?;
    let threads = threads.or(cfg.numerics.threads);
    let mut table;
    let mut per_point = 1;
    match cfg.analysis.kind {
        AnalysisKind::Tc => {
            table = Table::new(TC_COLUMNS);
            table.rows = parallel_rows(&pts, threads, |_, p| {
                let tc = thermal::critical_temperature(&p.gas)?;
                Ok(vec![vec![Cell::Int(p.gas.particles), Cell::Float(tc)]])
            })?;
        }
        AnalysisKind::Bipartite | AnalysisKind::Od => {
            table = Table::new(BIPARTITE_COLUMNS);
            table.rows = parallel_rows(&pts, threads, |_, p| {
                let (a, b) = pair_regions(p, axis)?;
                let w = weights(p, axis, &opts)?;
                let r = witness::bipartite_witness(&w, p.gas.particles, a, b, &profile, &opts.coherence)?;
                Ok(vec![bipartite_row(&r, p.temperature)])
            })?;
        }
        AnalysisKind::Tripartite => {
            table = Table::new(TRIPARTITE_COLUMNS);
            table.rows = parallel_rows(&pts, threads, |_, p| {
                let w = weights(p, axis, &opts)?;
                let part = tiling(p, axis, analysis_domain(&w))?;
                let r = witness::tripartite_witness(&w, &part, &profile, convention)?;
                Ok(vec![tripartite_row(&r, p.temperature)])
            })?;
        }
        AnalysisKind::Scan => {
            table = Table::new(TRIPARTITE_COLUMNS);
            table.columns.push("argmax".into());
            let w = weights(&pts[0], axis, &opts)?;
            let domain = analysis_domain(&w);
            let mut rows = parallel_rows(&pts, threads, |_, p| {
                let part = tiling(p, axis, domain)?;
                let r = witness::tripartite_witness(&w, &part, &profile, convention)?;
                Ok(vec![tripartite_row(&r, p.temperature)])
            })?;
            let wcol = 7;
            let best = argmax_of(&rows, wcol);
            for (i, r) in rows.iter_mut().enumerate() {
                r.push(Cell::Int((i == best) as u64));
            }
            describe_argmax(&mut table, &rows[best], "W");
            table.rows = rows;
        }
        AnalysisKind::Tmax => {
            table = Table::new(TMAX_COLUMNS);
            let tol = cfg.numerics.tmax_tol;
            let results: Vec<(TmaxRow, u64, f64)> = {
                let pool = threads_pool(threads)?;
                let out: Vec<Result<(TmaxRow, u64, f64), CliError>> = pool.install(|| {
                    pts.par_iter()
                        .enumerate()
                        .map(|(i, p)| {
                            let tc = thermal::critical_temperature(&p.gas)?;
                            let bracket = match cfg.numerics.bracket {
                                Some([lo, hi]) => (lo, hi),
                                None => witness::default_bracket(&p.gas)?,
                            };
                            let domain = match p.gas.trap.axis_basis(axis, p.gas.mass)?.domain() {
                                Some(d) => d,
                                None => analysis_domain(&weights(
                                    &Point { temperature: bracket.1, ..p.clone() },
                                    axis,
                                    &opts,
                                )?),
                            };
                            let part = tiling(p, axis, domain)?;
                            let row = witness::tmax_row(
                                &p.gas, i, &part, &profile, convention, bracket, tol, &opts,
                            )?;
                            Ok((row, p.gas.particles, tc))
                        })
                        .collect()
                });
                out.into_iter().collect::<Result<_, _>>()?
            };
            let rows: Vec<TmaxRow> = results.iter().map(|r| r.0).collect();
            let best = witness::tmax_argmax(&rows);
            table.rows = results
                .iter()
                .enumerate()
                .map(|(i, (r, n, tc))| tmax_cells(r, *n, *tc, convention.name(), i == best))
                .collect();
            let best_row = table.rows[best].clone();
            describe_argmax(&mut table, &best_row, "T_max");
        }
        AnalysisKind::Validate => {
            table = Table::new(VALIDATE_COLUMNS);
            let points_override = cfg.numerics.oracle_points;
            let rows = parallel_rows(&pts, threads, |_, p| {
                validate_point(cfg, p, points_override, &opts)
            })?;
            per_point = if pts.is_empty() { 1 } else { rows.len() / pts.len() };
            table.rows = rows;
        }
    }
    sweep_column(cfg, &mut table, &pts, per_point);
    table.metadata.insert("analysis".into(), cfg.analysis.kind.name().into());
    table.metadata.insert("profile".into(), profile.name().into());
    table.metadata.insert("convention".into(), convention.name().into());
    if let Ok(tc) = thermal::critical_temperature(&pts[0].gas) {
        table.metadata.insert("T_C_K".into(), format!("{tc:.6e}"));
    }
    if cfg.analysis.kind == AnalysisKind::Validate {
        let failures = table
            .rows
            .iter()
            .filter(|r| matches!(r.last(), Some(Cell::Text(s)) if s == "false"))
            .count();
        table.metadata.insert("failures".into(), failures.to_string());
    }
    Ok(table)
}

fn as_f64(c: &Cell) -> f64 {
    match c {
        Cell::Float(v) => *v,
        Cell::Int(v) => *v as f64,
        Cell::Text(_) => f64::NAN,
    }
}

fn argmax_of(rows: &[Vec<Cell>], col: usize) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, r) in rows.iter().enumerate() {
        let v = as_f64(&r[col]);
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn describe_argmax(table: &mut Table, row: &[Cell], what: &str) {
    let text: Vec<String> = table
        .columns
        .iter()
        .zip(row)
        .map(|(c, v)| format!("{c}={}", v.render(6)))
        .collect();
    table.metadata.insert(format!("argmax_{what}"), text.join(" "));
}

fn rel_diff(fast: f64, oracle: f64) -> f64 {
    (fast - oracle).abs() / oracle.abs().max(VALIDATE_FLOOR)
}

fn grid_points(w: &AxialWeights, requested: Option<usize>) -> usize {
    if let Some(n) = requested {
        return n;
    }
    let d = analysis_domain(w).length();
    let wavelength = 2.0 * w.basis.half_wavelength(w.top_qn());
    let needed = (2.0 * MIN_POINTS_PER_WAVELENGTH * d / wavelength).ceil() as usize + 1;
    needed.clamp(401, 4001)
}

fn validate_point(
    cfg: &RunConfig,
    p: &Point,
    requested: Option<usize>,
    opts: &EvalOptions,
) -> Result<Vec<Vec<Cell>>, CliError> {
    let axis = cfg.analysis.axis;
    let profile = cfg.analysis.profile.profile();
    let convention = cfg.analysis.convention.convention();
    let w = weights(p, axis, opts)?;
    let grid = GridDiscretization::new(&w, grid_points(&w, requested))?.with_richardson(true);
    let mut checks: Vec<(String, f64, f64)> = Vec::new();
    match &p.partition {
        Some(PartitionConfig::Slabs { .. } | PartitionConfig::Gap { .. }) => {
            let (a, b) = pair_regions(p, axis)?;
            let fast = spatial_witness::coherence::bipartite_functionals(&w, a, b, &profile, &opts.coherence)?;
            let slow = oracle::oracle_functionals(&grid, a, b, &profile)?;
            let pur = oracle::oracle_bipartite_purities(&grid, a, b)?;
            let mu_fast = fast.p_c * fast.p_c + fast.i_aa + fast.i_bb + 2.0 * fast.i_ab;
            let mu_a_fast = (1.0 - fast.p_a).powi(2) + fast.i_aa;
            checks.extend([
                ("p_A".to_string(), fast.p_a, slow.p_a),
                ("p_B".into(), fast.p_b, slow.p_b),
                ("p_C".into(), fast.p_c, slow.p_c),
                ("I_AB".into(), fast.i_ab, slow.i_ab),
                ("I_AA".into(), fast.i_aa, slow.i_aa),
                ("I_BB".into(), fast.i_bb, slow.i_bb),
                ("O_D".into(), fast.o_d, slow.o_d),
                ("mu_exact".into(), mu_fast, pur.mu_exact),
                ("mu_A_exact".into(), mu_a_fast, pur.mu_a_exact),
                ("trace".into(), 1.0, pur.trace),
            ]);
            if (fast.p_a - fast.p_b).abs() <= witness::SYMMETRY_TOL {
                let rf = witness::bipartite_from_functionals(fast, p.gas.particles)?;
                let ro = witness::bipartite_from_functionals(slow, p.gas.particles)?;
                checks.push(("E".into(), rf.e_witness, ro.e_witness));
                checks.push(("E_OD".into(), rf.e_od, ro.e_od));
                checks.push(("mu_paper".into(), rf.mu_paper, ro.mu_paper));
            }
        }
        Some(_) => {
            let part = tiling(p, axis, analysis_domain(&w))?;
            let fast = witness::tripartite_witness(&w, &part, &profile, convention)?;
            let (r, probs) = oracle::oracle_tripartite_matrix(&grid, &part, &profile, convention)?;
            for i in 0..3 {
                checks.push((format!("P_{}", ["A", "B", "C"][i]), fast.probabilities()[i], probs[i]));
                for j in i..3 {
                    checks.push((format!("R_{i}{j}"), fast.matrix.r[i][j], r[i][j]));
                }
            }
            let w_or = r.iter().flatten().sum::<f64>() - 2.0;
            checks.push(("W".into(), fast.w_witness, w_or));
        }
        None => {
            return Err(CliError::Config("analysis.partition: required for 'validate'".into()));
        }
    }
    Ok(checks
        .into_iter()
        .map(|(name, f, o)| {
            let d = rel_diff(f, o);
            vec![
                Cell::Float(p.temperature),
                Cell::Text(name),
                Cell::Float(f),
                Cell::Float(o),
                Cell::Float(d),
                Cell::Text((d <= VALIDATE_TOL).to_string()),
            ]
        })
        .collect())
}
