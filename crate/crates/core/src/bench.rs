//! Monte Carlo comparison of the estimators on synthetic unit-square
//! scenarios.
//!
//! Each placement draws `M` anchors and a target uniformly in `[0, 1]^2` km.
//! Each outlier list is a random ordered set of `M / 2` anchor indices; a cell
//! with `L` outliers corrupts the first `L` of them, so the outlier set grows
//! by inclusion as `L` increases. Measurements are
//! `y_m = | ||x* - a_m|| + sigma_m z_m |` with standard normal `z_m` and
//! `sigma_m` the inlier or outlier deviation.
//!
//! Randomness comes from ChaCha12 streams keyed by `(seed, purpose, indices)`,
//! so every draw is reproducible on its own and adding methods or cells never
//! shifts another cell's data. The normals `z_m` are keyed by
//! `(placement, list, L)` and shared across outlier deviations, which makes
//! the `L = 0` cells independent of `sigma_O`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{gd_rls, srls, GD_DEFAULT_GRAD_TOL, GD_DEFAULT_MAX_ITERS};
use crate::error::{Error, Result};
use crate::scenario::{Estimate, Point2, Scenario};
use crate::solver::rpte;

pub const TRIALS_HEADER: &str = "placement,list,L,sigma_o_km,method,x_km,y_km,error_m,time_s";
pub const SUMMARY_HEADER: &str = "L,sigma_o_km,method,trials,failed,mean_error_m,mean_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rpte,
    Srls,
    Gd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Rpte, Method::Srls, Method::Gd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rpte => "rpte",
            Method::Srls => "srls",
            Method::Gd => "gd",
        }
    }

    pub fn run(self, scenario: &Scenario, grid: usize) -> Result<Estimate> {
        match self {
            Method::Rpte => rpte(scenario, grid),
            Method::Srls => srls(scenario),
            Method::Gd => Ok(gd_rls(scenario, GD_DEFAULT_MAX_ITERS, GD_DEFAULT_GRAD_TOL)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (expected rpte, srls or gd)")))
    }
}

/// Monte Carlo sweep settings. JSON field names match the serde renames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(rename = "M")]
    pub anchors: usize,
    #[serde(rename = "L_values")]
    pub outlier_counts: Vec<usize>,
    /// Inlier noise deviation, km.
    pub sigma_inlier: f64,
    /// Outlier noise deviations, km.
    pub sigma_outlier_grid: Vec<f64>,
    pub n_placements: usize,
    pub n_outlier_lists: usize,
    #[serde(rename = "grid_G")]
    pub grid: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            anchors: 10,
            outlier_counts: (0..=5).collect(),
            sigma_inlier: 0.05,
            sigma_outlier_grid: vec![0.5, 0.75, 1.0, 1.5, 2.0, 2.5],
            n_placements: 20,
            n_outlier_lists: 10,
            grid: 20,
            seed: 20_231_017,
            methods: Method::ALL.to_vec(),
        }
    }
}

impl BenchConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Size of each outlier list.
    pub fn list_len(&self) -> usize {
        self.anchors / 2
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.anchors < 2 {
            return fail(format!("M must be at least 2, got {}", self.anchors));
        }
        if self.outlier_counts.is_empty() {
            return fail("L_values is empty".into());
        }
        if let Some(l) = self.outlier_counts.iter().find(|&&l| l > self.list_len()) {
            return fail(format!("L = {l} exceeds the outlier list length M/2 = {}", self.list_len()));
        }
        if !(self.sigma_inlier > 0.0 && self.sigma_inlier.is_finite()) {
            return fail(format!("sigma_inlier must be positive, got {}", self.sigma_inlier));
        }
        if self.sigma_outlier_grid.is_empty() {
            return fail("sigma_outlier_grid is empty".into());
        }
        if let Some(s) = self.sigma_outlier_grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return fail(format!("outlier sigmas must be positive, got {s}"));
        }
        if self.n_placements == 0 || self.n_outlier_lists == 0 {
            return fail("n_placements and n_outlier_lists must be at least 1".into());
        }
        if self.grid < 2 {
            return fail(format!("grid_G must be at least 2, got {}", self.grid));
        }
        if self.methods.is_empty() {
            return fail("methods is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Placement = 1,
    OutlierList = 2,
    Noise = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha12 keyed by `seed`, on a stream id derived from purpose and indices.
fn substream(seed: u64, purpose: Purpose, indices: &[u64]) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let stream = indices
        .iter()
        .fold(splitmix64(purpose as u64), |acc, &i| splitmix64(acc ^ i));
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Anchors and target for one placement.
pub fn placement(cfg: &BenchConfig, placement: usize) -> (Vec<Point2>, Point2) {
    let mut rng = substream(cfg.seed, Purpose::Placement, &[placement as u64]);
    let mut draw = || Point2::new(rng.random::<f64>(), rng.random::<f64>());
    let anchors = (0..cfg.anchors).map(|_| draw()).collect();
    let truth = draw();
    (anchors, truth)
}

/// The ordered outlier index list for one placement and list index.
pub fn outlier_list(cfg: &BenchConfig, placement: usize, list: usize) -> Vec<usize> {
    let mut rng = substream(cfg.seed, Purpose::OutlierList, &[placement as u64, list as u64]);
    index::sample(&mut rng, cfg.anchors, cfg.list_len()).into_vec()
}

/// Builds the scenario for one cell, returning it with the true target.
pub fn generate_scenario(
    cfg: &BenchConfig,
    placement_idx: usize,
    list_idx: usize,
    outliers: usize,
    sigma_outlier: f64,
) -> Result<(Scenario, Point2)> {
    if outliers > cfg.list_len() {
        return Err(Error::Config(format!(
            "L = {outliers} exceeds the outlier list length M/2 = {}",
            cfg.list_len()
        )));
    }
    let (anchors, truth) = placement(cfg, placement_idx);
    let corrupted = &outlier_list(cfg, placement_idx, list_idx)[..outliers];
    let mut rng = substream(
        cfg.seed,
        Purpose::Noise,
        &[placement_idx as u64, list_idx as u64, outliers as u64],
    );
    let measurements = anchors
        .iter()
        .enumerate()
        .map(|(m, a)| {
            let z: f64 = rng.sample(StandardNormal);
            let sigma = if corrupted.contains(&m) {
                sigma_outlier
            } else {
                cfg.sigma_inlier
            };
            (truth.distance(*a) + sigma * z).abs()
        })
        .collect();
    Ok((Scenario::new(anchors, measurements, outliers)?, truth))
}

/// One method run on one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub placement: usize,
    pub list: usize,
    pub outliers: usize,
    pub sigma_outlier: f64,
    pub method: Method,
    pub estimate: Option<Point2>,
    /// Distance from the truth in metres.
    pub error_m: Option<f64>,
    pub wall_time_s: f64,
    pub failure: Option<String>,
}

/// Runs every `(placement, list, L, sigma_O, method)` cell.
///
/// Records come back in exactly that nesting order whatever the scheduling.
/// A method that fails on a trial yields a record with `failure` set.
pub fn run_monte_carlo(cfg: &BenchConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_placements)
        .flat_map(|p| (0..cfg.n_outlier_lists).map(move |l| (p, l)))
        .collect();
    let per_job: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(placement, list)| run_job(cfg, placement, list))
        .collect::<Result<_>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

fn run_job(cfg: &BenchConfig, placement: usize, list: usize) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::with_capacity(
        cfg.outlier_counts.len() * cfg.sigma_outlier_grid.len() * cfg.methods.len(),
    );
    for &outliers in &cfg.outlier_counts {
        for &sigma_outlier in &cfg.sigma_outlier_grid {
            let (scenario, truth) = generate_scenario(cfg, placement, list, outliers, sigma_outlier)?;
            for &method in &cfg.methods {
                let start = Instant::now();
                let result = method.run(&scenario, cfg.grid);
                let wall_time_s = start.elapsed().as_secs_f64();
                let (estimate, error_m, failure) = match result {
                    Ok(e) => (Some(e.point), Some(1000.0 * e.point.distance(truth)), None),
                    Err(err) => (None, None, Some(err.to_string())),
                };
                out.push(TrialRecord {
                    placement,
                    list,
                    outliers,
                    sigma_outlier,
                    method,
                    estimate,
                    error_m,
                    wall_time_s,
                    failure,
                });
            }
        }
    }
    Ok(out)
}

/// Mean error of one `(L, sigma_O, method)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub outliers: usize,
    pub sigma_outlier: f64,
    pub method: Method,
    pub trials: usize,
    pub failed: usize,
    /// Mean over successful trials; NaN when every trial failed.
    pub mean_error_m: f64,
    pub mean_time_s: f64,
}

/// Groups records by `(L, sigma_O, method)` in first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut index: HashMap<(usize, u64, Method), usize> = HashMap::new();
    let mut rows: Vec<(SummaryRow, f64)> = Vec::new();
    for r in records {
        let key = (r.outliers, r.sigma_outlier.to_bits(), r.method);
        let slot = *index.entry(key).or_insert_with(|| {
            rows.push((
                SummaryRow {
                    outliers: r.outliers,
                    sigma_outlier: r.sigma_outlier,
                    method: r.method,
                    trials: 0,
                    failed: 0,
                    mean_error_m: 0.0,
                    mean_time_s: 0.0,
                },
                0.0,
            ));
            rows.len() - 1
        });
        let (row, error_sum) = &mut rows[slot];
        row.trials += 1;
        row.mean_time_s += r.wall_time_s;
        match r.error_m {
            Some(e) => *error_sum += e,
            None => row.failed += 1,
        }
    }
    rows.into_iter()
        .map(|(mut row, error_sum)| {
            let ok = row.trials - row.failed;
            row.mean_error_m = if ok == 0 { f64::NAN } else { error_sum / ok as f64 };
            row.mean_time_s /= row.trials as f64;
            row
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trials_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> std::io::Result<()> {
    writeln!(out, "{TRIALS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.placement,
            r.list,
            r.outliers,
            r.sigma_outlier,
            r.method,
            opt(r.estimate.map(|p| p.x)),
            opt(r.estimate.map(|p| p.y)),
            opt(r.error_m),
            r.wall_time_s,
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.outliers, r.sigma_outlier, r.method, r.trials, r.failed, r.mean_error_m, r.mean_time_s
        )?;
    }
    Ok(())
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub trials_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub summary: Vec<SummaryRow>,
}

/// Writes `trials.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn emit_report(records: &[TrialRecord], dir: impl AsRef<Path>) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::domain("no trial records to report"));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = summarize(records);

    let trials_csv = dir.join("trials.csv");
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, records).map_err(|e| Error::io(&trials_csv, e))?;
    std::fs::write(&trials_csv, buf).map_err(|e| Error::io(&trials_csv, e))?;

    let summary_csv = dir.join("summary.csv");
    let mut buf = Vec::new();
    write_summary_csv(&mut buf, &summary).map_err(|e| Error::io(&summary_csv, e))?;
    std::fs::write(&summary_csv, buf).map_err(|e| Error::io(&summary_csv, e))?;

    Ok(Report {
        trials_csv,
        summary_csv,
        summary,
    })
}

/// Fixed-width text table of a summary, one row per cell.
pub fn format_summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:>3} {:>8} {:>6} {:>7} {:>6} {:>12} {:>12}\n",
        "L", "sigma_O", "method", "trials", "failed", "mean_err_m", "mean_time_s"
    );
    for r in rows {
        s.push_str(&format!(
            "{:>3} {:>8} {:>6} {:>7} {:>6} {:>12.2} {:>12.6}\n",
            r.outliers, r.sigma_outlier, r.method, r.trials, r.failed, r.mean_error_m, r.mean_time_s
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            anchors: 6,
            outlier_counts: vec![0, 1, 3],
            sigma_outlier_grid: vec![1.0, 2.0],
            n_placements: 2,
            n_outlier_lists: 2,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn config_json_names() {
        let cfg: BenchConfig = serde_json::from_str(
            r#"{"M": 8, "L_values": [0, 2], "sigma_inlier": 0.01, "sigma_outlier_grid": [1.0],
                "n_placements": 3, "n_outlier_lists": 4, "grid_G": 11, "seed": 7,
                "methods": ["rpte", "gd"]}"#,
        )
        .unwrap();
        assert_eq!(cfg.anchors, 8);
        assert_eq!(cfg.grid, 11);
        assert_eq!(cfg.methods, vec![Method::Rpte, Method::Gd]);
        cfg.validate().unwrap();
        let partial: BenchConfig = serde_json::from_str(r#"{"seed": 3}"#).unwrap();
        assert_eq!(partial.anchors, 10);
        assert!(serde_json::from_str::<BenchConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small();
        cfg.outlier_counts = vec![4];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(matches!(generate_scenario(&cfg, 0, 0, 4, 1.0), Err(Error::Config(_))));
        let mut cfg = small();
        cfg.sigma_inlier = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.n_placements = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic_and_nonnegative() {
        let cfg = small();
        let (a, ta) = generate_scenario(&cfg, 1, 1, 3, 2.0).unwrap();
        let (b, tb) = generate_scenario(&cfg, 1, 1, 3, 2.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert!(a.measurements().iter().all(|&y| y >= 0.0));
        assert!(a.anchors().iter().chain([&ta]).all(|p| (0.0..1.0).contains(&p.x) && (0.0..1.0).contains(&p.y)));
        let other_seed = BenchConfig { seed: cfg.seed + 1, ..cfg.clone() };
        assert_ne!(generate_scenario(&other_seed, 1, 1, 3, 2.0).unwrap().0, a);
    }

    #[test]
    fn inlier_cells_ignore_outlier_sigma() {
        let cfg = small();
        let (a, _) = generate_scenario(&cfg, 0, 1, 0, 0.5).unwrap();
        let (b, _) = generate_scenario(&cfg, 0, 1, 0, 2.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_noise_gives_exact_ranges() {
        let cfg = BenchConfig { sigma_inlier: 0.0, ..small() };
        let (s, truth) = generate_scenario(&cfg, 0, 0, 0, 1.0).unwrap();
        for (a, y) in s.ranged_anchors() {
            assert_eq!(y, truth.distance(a));
        }
    }

    #[test]
    fn outlier_sets_nest() {
        let cfg = BenchConfig { anchors: 10, ..small() };
        for p in 0..3 {
            for l in 0..3 {
                let list = outlier_list(&cfg, p, l);
                assert_eq!(list.len(), 5);
                let mut sorted = list.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), 5);
                for k in 0..5 {
                    assert!(list[..k].iter().all(|i| list[..k + 1].contains(i)));
                }
            }
        }
    }

    #[test]
    fn outliers_hit_listed_anchors_only() {
        // With a tiny inlier sigma the inlier residuals stay small, while at
        // least one listed anchor moves by far more.
        let cfg = BenchConfig { sigma_inlier: 1e-9, anchors: 10, ..small() };
        let (s, truth) = generate_scenario(&cfg, 0, 0, 3, 1.0).unwrap();
        let list = outlier_list(&cfg, 0, 0);
        for (m, (a, y)) in s.ranged_anchors().enumerate() {
            if !list[..3].contains(&m) {
                assert!((y - truth.distance(a)).abs() < 1e-7);
            }
        }
        assert!(list[..3]
            .iter()
            .any(|&m| (s.measurements()[m] - truth.distance(s.anchors()[m])).abs() > 1e-3));
    }

    #[test]
    fn record_count_and_order() {
        let cfg = BenchConfig {
            outlier_counts: vec![1],
            sigma_outlier_grid: vec![1.0],
            methods: vec![Method::Srls],
            ..small()
        };
        let records = run_monte_carlo(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        let ids: Vec<(usize, usize)> = records.iter().map(|r| (r.placement, r.list)).collect();
        assert_eq!(ids, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert!(records.iter().all(|r| r.error_m.unwrap() >= 0.0));
    }

    #[test]
    fn summary_means() {
        let records = run_monte_carlo(&small()).unwrap();
        let rows = summarize(&records);
        assert_eq!(rows.len(), 3 * 2 * 3);
        for row in &rows {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.outliers == row.outliers && r.sigma_outlier == row.sigma_outlier && r.method == row.method)
                .map(|r| r.error_m.unwrap())
                .collect();
            assert_eq!(errs.len(), row.trials);
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            assert!((row.mean_error_m - mean).abs() <= 1e-12 * mean.abs());
        }
        let table = format_summary_table(&rows);
        assert_eq!(table.lines().count(), rows.len() + 1);
    }

    #[test]
    fn failed_trials_are_rows() {
        let records = vec![TrialRecord {
            placement: 0,
            list: 0,
            outliers: 0,
            sigma_outlier: 1.0,
            method: Method::Srls,
            estimate: None,
            error_m: None,
            wall_time_s: 0.5,
            failure: Some("collinear".into()),
        }];
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &records).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap(), "0,0,0,1,srls,,,,0.5");
        let rows = summarize(&records);
        assert_eq!(rows[0].failed, 1);
        assert!(rows[0].mean_error_m.is_nan());
    }
}
