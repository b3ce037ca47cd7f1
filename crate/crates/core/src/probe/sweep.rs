use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::probe::{train_probe, ProbeConfig, TrainedProbe, TrainingSet};

pub const LEARNING_RATES: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lr: f64,
    /// NaN when the run diverged.
    pub dev_metric: f64,
    pub test_metric: f64,
    pub steps: usize,
    pub seed: u64,
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best: TrainedProbe,
    pub best_index: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best_index]
    }

    pub fn to_tsv(&self) -> String {
        sweep_table_tsv(&self.rows)
    }
}

pub fn sweep_table_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lr\tdev_metric\ttest_metric\tsteps\tseed\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:e}\t{}\t{}\t{}\t{}",
            r.lr, r.dev_metric, r.test_metric, r.steps, r.seed
        );
    }
    out
}

/// Index of the best non-diverged row; ties go to the lower learning rate.
pub fn select_best(rows: &[SweepRow], higher_is_better: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        if row.diverged || !row.dev_metric.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &rows[b];
                let better = if higher_is_better {
                    row.dev_metric > cur.dev_metric
                } else {
                    row.dev_metric < cur.dev_metric
                };
                let tie_lower = row.dev_metric == cur.dev_metric && row.lr < cur.lr;
                if better || tie_lower {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Trains one probe per rate in [`LEARNING_RATES`] (runs in parallel, each
/// deterministic), selects by dev metric and reports the selected test metric.
pub fn lr_sweep<F>(
    task: &str,
    train: &TrainingSet,
    base: &ProbeConfig,
    higher_is_better: bool,
    evaluate: F,
) -> Result<SweepOutcome>
where
    F: Fn(&TrainedProbe, EvalSplit) -> Result<f64> + Sync,
{
    let runs: Vec<Result<Option<(TrainedProbe, f64, f64)>>> = LEARNING_RATES
        .par_iter()
        .map(|&lr| {
            let config = ProbeConfig {
                learning_rate: lr,
                ..base.clone()
            };
            match train_probe(task, train, &config) {
                Ok(probe) => {
                    let dev = evaluate(&probe, EvalSplit::Dev)?;
                    let test = evaluate(&probe, EvalSplit::Test)?;
                    Ok(Some((probe, dev, test)))
                }
                Err(Error::Diverged { step, loss }) => {
                    log::warn!("{task}: lr {lr:e} diverged at step {step} (loss {loss})");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(LEARNING_RATES.len());
    let mut probes = Vec::with_capacity(LEARNING_RATES.len());
    for (&lr, run) in LEARNING_RATES.iter().zip(runs) {
        let run = run?;
        let (dev, test) = run.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.1, r.2));
        rows.push(SweepRow {
            lr,
            dev_metric: dev,
            test_metric: test,
            steps: base.train_steps,
            seed: base.seed,
            diverged: run.is_none(),
        });
        probes.push(run.map(|r| r.0));
    }
    let best_index = select_best(&rows, higher_is_better).ok_or(Error::AllDiverged)?;
    let best = probes[best_index].take().expect("selected run exists");
    Ok(SweepOutcome {
        best,
        best_index,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lr: f64, dev: f64, diverged: bool) -> SweepRow {
        SweepRow {
            lr,
            dev_metric: dev,
            test_metric: dev,
            steps: 10,
            seed: 0,
            diverged,
        }
    }

    #[test]
    fn five_rates() {
        assert_eq!(LEARNING_RATES.len(), 5);
    }

    #[test]
    fn diverged_rate_is_skipped() {
        let rows = vec![
            row(1e-2, f64::NAN, true),
            row(1e-3, 0.2, false),
            row(1e-4, 0.05, false),
            row(1e-5, 0.3, false),
        ];
        assert_eq!(select_best(&rows, false), Some(2));
    }

    #[test]
    fn ties_pick_lower_rate() {
        let rows = vec![row(1e-2, 0.8, false), row(1e-3, 0.8, false), row(1e-4, 0.7, false)];
        assert_eq!(select_best(&rows, true), Some(1));
    }

    #[test]
    fn all_diverged_selects_nothing() {
        assert_eq!(select_best(&[row(1e-2, f64::NAN, true)], true), None);
    }

    #[test]
    fn tsv_header() {
        let tsv = sweep_table_tsv(&[row(1e-3, 0.5, false)]);
        assert!(tsv.starts_with("lr\tdev_metric\ttest_metric\tsteps\tseed\n1e-3\t0.5"));
    }
}
