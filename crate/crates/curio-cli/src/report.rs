//! Ablation, horizon-sweep and model-error reports over experiment outputs.

use crate::config::RunConfig;
use crate::runner::{
    final_window_mean, read_metrics_column, run_experiment, ExperimentOutput, FINAL_WINDOW,
};
use crate::HarnessError;
use curio_rl::Algo;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct CellResult {
    pub algo: Algo,
    pub cmc: bool,
    pub dir: PathBuf,
    /// Final-window mean extrinsic return per seed.
    pub finals: Vec<f64>,
    pub median_final: f64,
    pub mean_final: f64,
    pub std_final: f64,
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cell_name(algo: Algo, cmc: bool) -> String {
    let algo = match algo {
        Algo::Ddpg => "ddpg",
        Algo::Cacla => "cacla",
    };
    format!("{algo}_{}", if cmc { "cmc" } else { "baseline" })
}

fn summarize_cell(
    algo: Algo,
    cmc: bool,
    dir: PathBuf,
    output: &ExperimentOutput,
) -> CellResult {
    let finals: Vec<f64> = output
        .per_seed
        .iter()
        .map(|(_, o)| final_window_mean(&o.metrics, FINAL_WINDOW))
        .collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let var = finals.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / finals.len() as f64;
    CellResult {
        algo,
        cmc,
        dir,
        median_final: median(&finals),
        mean_final: mean,
        std_final: var.sqrt(),
        finals,
    }
}

/// Runs {ddpg, cacla} x {cmc on, off} on the configured env/reward and emits
/// `ablation.csv` with final returns and a win/loss ordering by median.
pub fn ablation_matrix(
    base: &RunConfig,
    seeds: &[u64],
    out_dir: &Path,
    max_parallel: usize,
) -> Result<Vec<CellResult>, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut cells = Vec::new();
    for algo in [Algo::Ddpg, Algo::Cacla] {
        for cmc in [false, true] {
            let mut cfg = base.clone();
            cfg.algo = algo;
            cfg.cmc = cmc;
            let dir = out_dir.join(cell_name(algo, cmc));
            let output = run_experiment(&cfg, seeds, &dir, max_parallel)?;
            cells.push(summarize_cell(algo, cmc, dir, &output));
        }
    }

    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        cells[b]
            .median_final
            .partial_cmp(&cells[a].median_final)
            .expect("finite metrics")
    });
    let mut rank = vec![0usize; cells.len()];
    for (place, idx) in order.iter().enumerate() {
        rank[*idx] = place + 1;
    }

    let mut out = String::from("algo,cmc,median_final,mean_final,std_final,rank\n");
    for (i, c) in cells.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell_name(c.algo, false).split('_').next().expect("name"),
            u8::from(c.cmc),
            c.median_final,
            c.mean_final,
            c.std_final,
            rank[i]
        ));
    }
    std::fs::write(out_dir.join("ablation.csv"), out)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(cells)
}

#[derive(Debug, Clone)]
pub struct HorizonResult {
    pub horizon: usize,
    pub dir: PathBuf,
    pub finals: Vec<f64>,
    pub median_final: f64,
    pub mean_final: f64,
}

/// One aggregate per planning horizon (meta-controller forced on) and a
/// `sweep.csv` table of final returns per horizon.
pub fn horizon_sweep(
    base: &RunConfig,
    horizons: &[usize],
    seeds: &[u64],
    out_dir: &Path,
    max_parallel: usize,
) -> Result<Vec<HorizonResult>, HarnessError> {
    if !base.cmc {
        return Err(HarnessError::Config(
            "horizon sweep requires cmc enabled in the base config".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut rows = Vec::new();
    for &h in horizons {
        let mut cfg = base.clone();
        cfg.horizon = h;
        let dir = out_dir.join(format!("h{h}"));
        let output = run_experiment(&cfg, seeds, &dir, max_parallel)?;
        let finals: Vec<f64> = output
            .per_seed
            .iter()
            .map(|(_, o)| final_window_mean(&o.metrics, FINAL_WINDOW))
            .collect();
        rows.push(HorizonResult {
            horizon: h,
            dir,
            median_final: median(&finals),
            mean_final: finals.iter().sum::<f64>() / finals.len() as f64,
            finals,
        });
    }
    let mut out = String::from("horizon,median_final,mean_final\n");
    for r in &rows {
        out.push_str(&format!("{},{},{}\n", r.horizon, r.median_final, r.mean_final));
    }
    std::fs::write(out_dir.join("sweep.csv"), out).map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(rows)
}

/// Min-max normalizes one run's per-episode model error to [0, 1]
/// (a degenerate range collapses to 0).
pub fn normalize_curve(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo).is_finite() || hi - lo <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Reads `mean_e_prd` from each seed's metrics.csv under `cell_dir`,
/// normalizes each run to [0, 1], averages across seeds and writes
/// `error_curve.csv` (episode, normalized mean error).
pub fn model_error_report(cell_dir: &Path, out_path: &Path) -> Result<Vec<f64>, HarnessError> {
    let mut seed_dirs: Vec<PathBuf> = std::fs::read_dir(cell_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", cell_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("seed"))
        })
        .collect();
    seed_dirs.sort();
    if seed_dirs.is_empty() {
        return Err(HarnessError::Report(format!(
            "no seed directories under {}",
            cell_dir.display()
        )));
    }

    let mut curves = Vec::new();
    for dir in &seed_dirs {
        let values = read_metrics_column(&dir.join("metrics.csv"), "mean_e_prd")?;
        curves.push(normalize_curve(&values));
    }
    let episodes = curves[0].len();
    for c in &curves {
        if c.len() != episodes {
            return Err(HarnessError::Report(
                "seed runs disagree on episode count".into(),
            ));
        }
    }
    let averaged: Vec<f64> = (0..episodes)
        .map(|e| curves.iter().map(|c| c[e]).sum::<f64>() / curves.len() as f64)
        .collect();

    let mut out = String::from("episode,norm_error\n");
    for (e, v) in averaged.iter().enumerate() {
        out.push_str(&format!("{e},{v}\n"));
    }
    std::fs::write(out_path, out).map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(averaged)
}
