use std::cmp::Ordering;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nested_rectangles_problem, NmfError};
use crate::hierarchy::{build_lp, HierarchySpec, Variant};
use crate::lp::{LpStatus, Solver};

pub const CSV_HEADER: [&str; 8] = ["a", "b", "level", "variant", "pi", "family", "status", "solve_seconds"];

/// Verdict of one hierarchy level at one `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub a: f64,
    pub b: f64,
    pub level: usize,
    pub variant: String,
    pub pi: String,
    pub family: String,
    pub status: LpStatus,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    pub spec: HierarchySpec,
    pub grid: usize,
    pub bisect_tol: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl ScanConfig {
    pub fn new(spec: HierarchySpec) -> Self {
        ScanConfig { spec, grid: 64, bisect_tol: 1e-3, workers: 0 }
    }
}

fn pi_label(spec: &HierarchySpec) -> String {
    match spec.variant {
        Variant::Plus => "none".to_string(),
        Variant::Polarized(pi) => pi.to_string(),
    }
}

/// Solves the level-`n` relaxation for `M(a, b)` at rank 3.
pub fn check_point(a: f64, b: f64, spec: &HierarchySpec, solver: &Solver) -> Result<RegionRecord, NmfError> {
    let problem = nested_rectangles_problem(a, b)?;
    let built = build_lp(&problem, spec)?;
    let start = Instant::now();
    let outcome = solver.solve(&built.lp)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    if let Some(d) = &outcome.diagnostic {
        log::debug!("({a}, {b}) level {}: {d}", spec.level);
    }
    Ok(RegionRecord {
        a,
        b,
        level: spec.level,
        variant: spec.variant.label().to_string(),
        pi: pi_label(spec),
        family: spec.family.to_string(),
        status: outcome.status,
        solve_seconds,
    })
}

fn by_point(x: &RegionRecord, y: &RegionRecord) -> Ordering {
    x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b))
}

/// Classifies a `grid × grid` lattice of `[0, 1]²`, then for each `a` refines
/// the feasible/infeasible boundary in `b`.
///
/// A column whose grid verdicts switch once from feasible to infeasible is
/// bisected down to `bisect_tol`. A column that flips back is instead
/// refined exhaustively over the disputed interval. Unknown verdicts end a
/// bisection. Records come back sorted by `(a, b)`.
pub fn scan_region(config: &ScanConfig, solver: &Solver) -> Result<Vec<RegionRecord>, NmfError> {
    let ScanConfig { spec, grid, bisect_tol, workers } = *config;
    if grid < 2 || !(bisect_tol > 0.0) {
        return Err(NmfError::InvalidScan);
    }
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| NmfError::Io(std::io::Error::other(e)))?;
    let axis: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();

    let coarse: Vec<RegionRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, b)| check_point(a, b, &spec, solver))
            .collect::<Result<_, _>>()
    })?;

    let refined: Vec<Vec<RegionRecord>> = pool.install(|| {
        coarse
            .par_chunks(grid)
            .map(|column| refine_column(column, &spec, grid, bisect_tol, solver))
            .collect::<Result<_, _>>()
    })?;

    let mut records = coarse;
    records.extend(refined.into_iter().flatten());
    records.sort_by(by_point);
    records.dedup_by(|x, y| by_point(x, y) == Ordering::Equal);
    Ok(records)
}

fn refine_column(
    column: &[RegionRecord],
    spec: &HierarchySpec,
    grid: usize,
    tol: f64,
    solver: &Solver,
) -> Result<Vec<RegionRecord>, NmfError> {
    let a = column[0].a;
    let last_feasible = column.iter().rposition(|r| r.status == LpStatus::Feasible);
    let first_infeasible = column.iter().position(|r| r.status == LpStatus::Infeasible);
    let (Some(lf), Some(fi)) = (last_feasible, first_infeasible) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    if lf < fi {
        let (mut lo, mut hi) = (column[lf].b, column[fi].b);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let rec = check_point(a, mid, spec, solver)?;
            let status = rec.status;
            out.push(rec);
            match status {
                LpStatus::Feasible => lo = mid,
                LpStatus::Infeasible => hi = mid,
                LpStatus::Unknown => break,
            }
        }
    } else {
        log::warn!("verdicts at a = {a} are not monotone in b; refining exhaustively");
        let lo = column[fi.saturating_sub(1)].b;
        let hi = column[(lf + 1).min(column.len() - 1)].b;
        let step = tol.max((hi - lo) / grid as f64);
        let mut b = lo + step;
        while b < hi {
            out.push(check_point(a, b, spec, solver)?);
            b += step;
        }
    }
    Ok(out)
}

/// Writes records as CSV with a fixed header, in the given order.
pub fn write_region_csv(records: &[RegionRecord], path: &Path) -> Result<(), NmfError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(a: f64, b: f64, status: LpStatus) -> RegionRecord {
        RegionRecord {
            a,
            b,
            level: 2,
            variant: "plus".into(),
            pi: "none".into(),
            family: "lite".into(),
            status,
            solve_seconds: 0.5,
        }
    }

    #[test]
    fn csv_header_only_and_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        write_region_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "a,b,level,variant,pi,family,status,solve_seconds\n");

        let p = dir.path().join("one.csv");
        write_region_csv(&[record(0.25, 1.0, LpStatus::Infeasible)], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "0.25,1.0,2,plus,none,lite,infeasible,0.5");
    }

    #[test]
    fn rejects_bad_scan_config() {
        let solver = Solver::default();
        let mut c = ScanConfig::new(HierarchySpec::plus(1));
        c.grid = 1;
        assert!(matches!(scan_region(&c, &solver), Err(NmfError::InvalidScan)));
        c.grid = 2;
        c.bisect_tol = 0.0;
        assert!(matches!(scan_region(&c, &solver), Err(NmfError::InvalidScan)));
    }
}
