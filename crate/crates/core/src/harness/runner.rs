//! Trial execution.

use std::time::Instant;

use rayon::prelude::*;

use super::cache::target_values;
use super::config::{ExperimentConfig, Method};
use super::metrics::{relative_error, ErrorNorm};
use super::record::{ExperimentOutput, RecordRow, TrialFailure};
use crate::error::{Error, Result};
use crate::poly_basis::{CoefVector, Points};
use crate::rng::{child_rng, child_seed};
use crate::sampling::Grid;
use crate::sr_lasso::{cs_approximate, cs_index_set};
use crate::test_functions::Target;
use crate::weighted_ls::als_run;

/// The sampling grid, the optional evaluation grid and target values on both.
pub struct Prepared {
    pub target: Target,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub eval: Option<(Grid, Vec<f64>)>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let target = Target::parse(&config.function, config.dim)?;
        let cache = config.cache_dir.as_deref();
        let grid = Grid::draw(config.dim, config.grid_size, config.family, child_seed(config.seed, "grid", 0))?;
        let values = target_values(&target, &grid, cache)?;
        let eval = match config.error_grid_seed {
            Some(seed) => {
                let g = Grid::draw(config.dim, config.grid_size, config.family, seed)?;
                let v = target_values(&target, &g, cache)?;
                Some((g, v))
            }
            None => None,
        };
        Ok(Self {
            target,
            grid,
            values,
            eval,
        })
    }

    /// The grid and values errors are measured on.
    pub fn error_grid(&self) -> (&Grid, &[f64]) {
        match &self.eval {
            Some((g, v)) => (g, v),
            None => (&self.grid, &self.values),
        }
    }
}

/// Runs every trial of `config`.
///
/// Each trial draws from its own stream derived from the master seed and
/// the trial index, and rows are merged in `(trial, step)` order, so the
/// output does not depend on the number of worker threads. Trial errors are
/// recorded as failures; only configuration and setup errors are returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let prepared = Prepared::new(config)?;
    run_prepared(config, &prepared)
}

pub fn run_prepared(config: &ExperimentConfig, prepared: &Prepared) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results: Vec<(Vec<RecordRow>, Vec<TrialFailure>)> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| match config.method {
                Method::Als => als_trial(config, prepared, t),
                Method::Cs | Method::CsChristoffel => cs_trial(config, prepared, t),
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        failures.extend(f);
    }
    Ok(ExperimentOutput {
        config: config.clone(),
        rows,
        failures,
    })
}

fn als_trial(config: &ExperimentConfig, p: &Prepared, trial: usize) -> (Vec<RecordRow>, Vec<TrialFailure>) {
    let mut rng = child_rng(config.seed, "trial", trial as u64);
    let eval = p.eval.as_ref().map(|(g, v)| (g, v.as_slice()));
    let outcome = als_run(&p.grid, &p.values, &config.als_config(), &mut rng, eval);
    let rows: Vec<RecordRow> = outcome
        .trace
        .steps
        .iter()
        .enumerate()
        .map(|(step, s)| RecordRow {
            trial,
            step,
            m: s.m,
            n: s.n,
            error_l2: s.error_l2,
            error_linf: s.error_linf,
            cond: s.result.condition_number,
            kappa: s.kappa,
            wall_time_ms: if config.timing { s.elapsed_ms } else { 0.0 },
        })
        .collect();
    let failures = outcome
        .failure
        .map(|e| TrialFailure {
            trial,
            step: rows.len(),
            message: e.to_string(),
        })
        .into_iter()
        .collect();
    (rows, failures)
}

fn cs_trial(config: &ExperimentConfig, p: &Prepared, trial: usize) -> (Vec<RecordRow>, Vec<TrialFailure>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let fail = |step: usize, e: Error| TrialFailure {
        trial,
        step,
        message: e.to_string(),
    };
    let cs = config.cs_config().expect("CS method");
    let set = match cs_index_set(cs.budget, config.dim) {
        Ok(s) => s,
        Err(e) => return (rows, vec![fail(0, e)]),
    };
    let kappa = cs.family.kappa(&set);
    let trial_seed = child_seed(config.seed, "trial", trial as u64);
    let (eval_grid, reference) = p.error_grid();
    let start = Instant::now();
    for (step, &m) in config.m_schedule.iter().enumerate() {
        let mut rng = child_rng(trial_seed, "cs-step", step as u64);
        let solved = cs_approximate(&p.grid, &p.values, &cs, m, &mut rng).and_then(|res| {
            let nonzero = CoefVector::from_pairs(
                res.coefficients
                    .iter()
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(nu, c)| (nu.clone(), c)),
            )?;
            let approx = nonzero.eval_many(cs.family, Points::new(eval_grid.raw(), eval_grid.dim())?)?;
            Ok((
                relative_error(&approx, reference, ErrorNorm::L2)?,
                relative_error(&approx, reference, ErrorNorm::Linf)?,
                res.support_condition,
            ))
        });
        match solved {
            Ok((error_l2, error_linf, cond)) => rows.push(RecordRow {
                trial,
                step,
                m,
                n: set.len(),
                error_l2,
                error_linf,
                cond,
                kappa,
                wall_time_ms: if config.timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                },
            }),
            Err(e) => failures.push(fail(step, e)),
        }
    }
    (rows, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::record::OutputFormat;
    use crate::weighted_ls::AlsSampling;

    fn small_als(sampling: AlsSampling) -> ExperimentConfig {
        let mut c = ExperimentConfig::als("f1", 3, sampling, 120);
        c.trials = 3;
        c.grid_size = 2_000;
        c.seed = 9;
        c
    }

    #[test]
    fn als_rows_are_nested_and_ordered() {
        let mut c = small_als(AlsSampling::NearOptimal);
        c.trials = 1;
        c.max_m = None;
        c.max_steps = Some(3);
        let out = run_experiment(&c).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.rows.len(), 3);
        for w in out.rows.windows(2) {
            assert!(w[1].n > w[0].n);
            assert_eq!(w[1].step, w[0].step + 1);
        }
        for r in &out.rows {
            assert!(r.cond >= 1.0 && r.kappa >= r.n as f64 && r.error_l2 >= 0.0);
            assert_eq!(r.wall_time_ms, 0.0);
        }
    }

    #[test]
    fn output_is_independent_of_thread_count() {
        for mut c in [small_als(AlsSampling::MonteCarlo), small_als(AlsSampling::NearOptimal)] {
            c.threads = Some(1);
            let one = run_experiment(&c).unwrap().to_bytes(OutputFormat::Csv).unwrap();
            c.threads = Some(4);
            let four = run_experiment(&c).unwrap().to_bytes(OutputFormat::Csv).unwrap();
            assert_eq!(one, four);
        }
        let mut c = ExperimentConfig::cs("f1", 2, Method::Cs, vec![20, 40]);
        c.trials = 2;
        c.grid_size = 1_000;
        c.cs_budget = 40;
        c.threads = Some(1);
        let one = run_experiment(&c).unwrap();
        c.threads = Some(3);
        let three = run_experiment(&c).unwrap();
        assert_eq!(one.rows, three.rows);
        assert_eq!(one.rows.len(), 4);
    }

    #[test]
    fn seeds_change_rows_and_trials_differ() {
        let c = small_als(AlsSampling::MonteCarlo);
        let a = run_experiment(&c).unwrap();
        let mut c2 = c.clone();
        c2.seed += 1;
        let b = run_experiment(&c2).unwrap();
        assert_ne!(a.rows, b.rows);
        let t0: Vec<f64> = a.trial_rows(0).map(|r| r.error_l2).collect();
        let t1: Vec<f64> = a.trial_rows(1).map(|r| r.error_l2).collect();
        assert_ne!(t0, t1);
    }

    #[test]
    fn held_out_grid_changes_errors_only() {
        let mut c = small_als(AlsSampling::NearOptimal);
        c.trials = 1;
        let shared = run_experiment(&c).unwrap();
        c.error_grid_seed = Some(4242);
        let held = run_experiment(&c).unwrap();
        assert_eq!(shared.rows.len(), held.rows.len());
        for (a, b) in shared.rows.iter().zip(&held.rows) {
            assert_eq!((a.m, a.n, a.cond.to_bits()), (b.m, b.n, b.cond.to_bits()));
            assert_ne!(a.error_l2, b.error_l2);
        }
    }

    #[test]
    fn cs_rows_follow_schedule() {
        let mut c = ExperimentConfig::cs("f1", 2, Method::CsChristoffel, vec![15, 30, 60]);
        c.trials = 1;
        c.grid_size = 1_000;
        c.cs_budget = 30;
        let out = run_experiment(&c).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        let ms: Vec<usize> = out.rows.iter().map(|r| r.m).collect();
        assert_eq!(ms, vec![15, 30, 60]);
        for r in &out.rows {
            assert!(r.cond >= 1.0 && r.kappa >= r.n as f64);
        }
        assert!(out.rows[2].error_l2 < out.rows[0].error_l2);
    }

    #[test]
    fn config_errors_are_returned() {
        let mut c = small_als(AlsSampling::MonteCarlo);
        c.trials = 0;
        assert!(run_experiment(&c).unwrap_err().is_config());
    }

    #[test]
    fn per_trial_failures_are_recorded() {
        // A grid of 30 points cannot support near-optimal sampling once the
        // basis outgrows it; every trial fails at some step, and the rows
        // before it are kept.
        let mut c = ExperimentConfig::als("f1", 4, AlsSampling::NearOptimal, 30);
        c.grid_size = 30;
        c.trials = 2;
        c.max_m = None;
        c.max_steps = Some(40);
        let out = run_experiment(&c).unwrap();
        assert!(out.all_trials_failed(), "{:?}", out.failures);
        assert!(!out.rows.is_empty());
        for f in &out.failures {
            assert_eq!(f.step, out.trial_rows(f.trial).count());
        }
    }

    #[test]
    fn timing_is_opt_in() {
        let mut c = small_als(AlsSampling::MonteCarlo);
        c.trials = 1;
        c.timing = true;
        let out = run_experiment(&c).unwrap();
        let times: Vec<f64> = out.rows.iter().map(|r| r.wall_time_ms).collect();
        assert!(times.windows(2).all(|w| w[1] >= w[0]));
        assert!(times.last().unwrap() > &0.0);
    }
}
