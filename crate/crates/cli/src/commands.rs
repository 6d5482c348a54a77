//! The five subcommands: train, sample, evaluate, task1, report.

use std::io::Write;
use std::path::Path;

use levelset::active::SelectionStrategy;
use levelset::diverse::{diversity, DiversityKernel};
use levelset::harness::{
    aggregate_metrics, run_sampler_once, run_task1_seed, MetricsAggregate, SamplerMetrics,
    Task1Config, Task1Outcome,
};
use levelset::seed::derive_rng;
use levelset::space::ParameterSpace;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::output::{data_file, ensure_dir, fmt_f64, join_f64, Provenance, VERSION};
use crate::pipeline::{
    build_set, buffer_config, make_stream, train, ModelFile, TAG_BUILD, TAG_EVAL, TAG_SAMPLE,
};

pub fn cmd_train(
    cfg: &ExperimentConfig,
    seed: u64,
    out: &Path,
    strategy: SelectionStrategy,
) -> anyhow::Result<()> {
    ensure_dir(out)?;
    let prov = Provenance {
        config_hash: cfg.hash(),
        seed,
    };
    let (d_theta, d_alpha) = cfg.task.dims();
    let (_task, run) = train(cfg, seed, strategy)?;

    // Dataset file.
    let theta_cols: Vec<String> = (1..=d_theta).map(|i| format!("theta_{i}")).collect();
    let alpha_cols: Vec<String> = (1..=d_alpha).map(|i| format!("alpha_{i}")).collect();
    let columns = format!("{},{},y", theta_cols.join(","), alpha_cols.join(","));
    let (mut w, path) = data_file(out, "dataset.csv", &prov, columns.trim_matches(',').replace(",,", ",").as_str())?;
    run.dataset.write_delimited(&mut w, d_theta, d_alpha)?;
    w.flush()?;
    eprintln!("wrote {}", path.display());

    // Model file.
    let model = ModelFile::new(&prov.config_hash, seed, d_theta, d_alpha, &run);
    let model_path = out.join("model.json");
    model.save(&model_path)?;
    eprintln!("wrote {}", model_path.display());

    // Per-step training log.
    let mut cols = vec!["step".to_string()];
    cols.extend(theta_cols);
    cols.extend(alpha_cols);
    cols.extend(["y".into(), "acquisition".into(), "refit_lml".into()]);
    let (mut w, path) = data_file(out, "train_log.csv", &prov, &cols.join(","))?;
    for (i, s) in run.steps.iter().enumerate() {
        let acq = s.acquisition.map(fmt_f64).unwrap_or_default();
        let lml = s.refit_lml.map(fmt_f64).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            i,
            join_f64(&s.theta),
            join_f64(&s.alpha),
            fmt_f64(s.y),
            acq,
            lml
        )?;
    }
    w.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_sample(
    model_path: &Path,
    context: &[f64],
    sampler: &str,
    count: usize,
    quantile: f64,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    ensure_dir(out)?;
    let model_file = ModelFile::load(model_path)?;
    if context.len() != model_file.d_alpha {
        anyhow::bail!(
            "context has {} entries, the model expects {}",
            context.len(),
            model_file.d_alpha
        );
    }
    let prov = Provenance {
        config_hash: model_file.config_hash.clone(),
        seed,
    };
    let model = model_file.posterior()?;
    let set = build_set(model, context.to_vec(), quantile, seed, TAG_BUILD)?;

    let theta_cols: Vec<String> = (1..=model_file.d_theta)
        .map(|i| format!("theta_{i}"))
        .collect();
    let diverse = sampler == "diverse";
    let mut cols = vec!["index".to_string()];
    cols.extend(theta_cols);
    cols.extend(["phi".into(), "member".into()]);
    if diverse {
        cols.push("diversity".into());
    }
    let (mut w, path) = data_file(out, "samples.csv", &prov, &cols.join(","))?;

    let mut stream = make_stream(sampler, set.clone(), Default::default(), seed, TAG_SAMPLE)?;
    let mut yielded: Vec<Vec<f64>> = Vec::with_capacity(count);
    let ref_kernel = DiversityKernel::reference(model_file.d_theta);
    for i in 0..count {
        let theta = stream.next_sample()?;
        let phi = set.phi(&theta);
        let member = set.membership(&theta) as u8;
        yielded.push(theta.clone());
        if diverse {
            let d = diversity(&yielded, &ref_kernel)?;
            writeln!(
                w,
                "{},{},{},{},{}",
                i,
                join_f64(&theta),
                fmt_f64(phi),
                member,
                fmt_f64(d)
            )?;
        } else {
            writeln!(w, "{},{},{},{}", i, join_f64(&theta), fmt_f64(phi), member)?;
        }
    }
    w.flush()?;
    eprintln!(
        "wrote {} ({} membership calls)",
        path.display(),
        stream.status().membership_calls
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub runs: usize,
    pub failed_runs: usize,
    pub capped_runs: usize,
    pub fp_rate: (f64, f64),
    pub t50_calls: (f64, f64),
    pub n5: (f64, f64),
    pub diversity5: (f64, f64),
    pub reward: (f64, f64),
}

impl MethodReport {
    fn from_aggregate(method: &str, agg: &MetricsAggregate) -> Self {
        MethodReport {
            method: method.into(),
            runs: agg.runs,
            failed_runs: agg.failed_runs,
            capped_runs: agg.capped_runs,
            fp_rate: agg.fp_rate,
            t50_calls: agg.t50_calls,
            n5: agg.n5,
            diversity5: agg.diversity5,
            reward: agg.reward,
        }
    }
}

pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    seed: u64,
    out: &Path,
    jobs: usize,
) -> anyhow::Result<()> {
    ensure_dir(out)?;
    let prov = Provenance {
        config_hash: cfg.hash(),
        seed,
    };
    let (task, run) = train(cfg, seed, SelectionStrategy::Straddle)?;
    let model = levelset::gp::posterior_with_mean(&run.dataset, &run.fitted.spec, run.prior_mean)?;
    let (_, d_alpha) = cfg.task.dims();
    let buffer = buffer_config(cfg);
    let seeds: Vec<u64> = (0..cfg.harness.seeds as u64).collect();

    let run_unit = |method: &str, unit: u64| -> Option<SamplerMetrics> {
        // Context, set, and stream all derive from (root seed, unit).
        let mut ctx_rng = derive_rng(seed, TAG_EVAL | (unit << 8) | 1);
        let context: Vec<f64> = ParameterSpace::sample_unit(d_alpha, &mut ctx_rng);
        let set = build_set(
            model.clone(),
            context.clone(),
            cfg.sampler.quantile,
            seed,
            TAG_EVAL | (unit << 8) | 2,
        )
        .ok()?;
        let method_tag = match method {
            "rejection" => 3u64,
            "adaptive" => 4,
            _ => 5,
        };
        let mut stream = make_stream(
            method,
            set,
            buffer,
            seed,
            TAG_EVAL | (unit << 8) | method_tag,
        )
        .ok()?;
        run_sampler_once(stream.as_mut(), &task, &context, cfg.harness.gamma).ok()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let mut reports = Vec::new();
    let mut wall_log = String::new();
    for method in &cfg.sampler.samplers {
        let started = std::time::Instant::now();
        let per_seed: Vec<Option<SamplerMetrics>> = pool.install(|| {
            use rayon::prelude::*;
            seeds.par_iter().map(|&u| run_unit(method, u)).collect()
        });
        let agg = aggregate_metrics(&per_seed);
        wall_log.push_str(&format!(
            "{method}: mean T50 wall {}s over {} runs (total {:.2}s)\n",
            fmt_f64(agg.t50_seconds.0),
            agg.runs - agg.failed_runs,
            started.elapsed().as_secs_f64()
        ));
        reports.push(MethodReport::from_aggregate(method, &agg));
    }

    // Tabular metrics (wall-clock numbers go to the log, not here).
    let (mut w, path) = data_file(out, "metrics.csv", &prov, "method,metric,mean,sd")?;
    for r in &reports {
        let rows: [(&str, (f64, f64)); 5] = [
            ("fp_rate", r.fp_rate),
            ("t50_calls", r.t50_calls),
            ("n5", r.n5),
            ("diversity5", r.diversity5),
            ("reward", r.reward),
        ];
        for (metric, (mean, sd)) in rows {
            writeln!(w, "{},{},{},{}", r.method, metric, fmt_f64(mean), fmt_f64(sd))?;
        }
        writeln!(
            w,
            "{},runs,{},{}",
            r.method,
            r.runs - r.failed_runs,
            r.capped_runs
        )?;
    }
    w.flush()?;
    eprintln!("wrote {}", path.display());

    let report = MetricsReport {
        version: VERSION.into(),
        config_hash: prov.config_hash.clone(),
        seed,
        seeds,
        methods: reports,
    };
    let json_path = out.join("metrics.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    eprintln!("wrote {}", json_path.display());

    std::fs::write(out.join("evaluate.log"), wall_log)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Task1Report {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub optimal_reward: f64,
    /// Mean over seeds per (method, tasks_trained).
    pub curve: Vec<Task1CurvePoint>,
    pub final_inverse_length_scales: Vec<(u64, Vec<f64>)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Task1CurvePoint {
    pub method: String,
    pub tasks_trained: usize,
    pub mean_reward: f64,
    pub mean_samples_to_success: f64,
    pub success_rate: f64,
}

pub fn cmd_task1(
    cfg: &ExperimentConfig,
    seed: u64,
    out: &Path,
    jobs: usize,
) -> anyhow::Result<()> {
    ensure_dir(out)?;
    let prov = Provenance {
        config_hash: cfg.hash(),
        seed,
    };
    let t1 = Task1Config {
        training_tasks: cfg.harness.training_tasks,
        test_tasks: cfg.harness.test_tasks,
        epsilon: cfg.harness.epsilon,
        gamma: cfg.harness.gamma,
        attempt_cap: cfg.harness.attempt_cap,
        eval_every: cfg.harness.eval_every,
        seeds: (0..cfg.harness.seeds as u64).collect(),
        buffer: buffer_config(cfg),
        quantile: cfg.sampler.quantile,
        train_budget: cfg.learner.budget,
        kernel_kind: cfg.learner.kernel,
        noise_std: cfg.task.noise_std,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let outcomes: Vec<Task1Outcome> = pool.install(|| {
        use rayon::prelude::*;
        t1.seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| run_task1_seed(&t1, seed, i, s))
            .collect::<levelset::Result<Vec<_>>>()
    })?;
    let outcome = Task1Outcome::merge(outcomes);

    // Raw curve rows.
    let d_theta = 2usize;
    let l_cols: Vec<String> = (1..=d_theta).map(|i| format!("l_{i}")).collect();
    let cols = format!(
        "seed,method,tasks_trained,mean_reward,mean_samples_to_success,success_rate,{}",
        l_cols.join(",")
    );
    let (mut w, path) = data_file(out, "task1_curve.csv", &prov, &cols)?;
    for r in &outcome.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.seed,
            r.method.name(),
            r.tasks_trained,
            fmt_f64(r.mean_reward),
            fmt_f64(r.mean_samples_to_success),
            fmt_f64(r.success_rate),
            join_f64(&r.kernel_snapshot)
        )?;
    }
    w.flush()?;
    eprintln!("wrote {}", path.display());

    // Audit log.
    let (mut w, path) = data_file(
        out,
        "task1_audit.csv",
        &prov,
        "seed,task_index,attempts,kernel_updates,solved",
    )?;
    for a in &outcome.audit {
        writeln!(
            w,
            "{},{},{},{},{}",
            a.seed, a.task_index, a.attempts, a.kernel_updates, a.solved as u8
        )?;
    }
    w.flush()?;
    eprintln!("wrote {}", path.display());

    // Aggregated learning curve.
    let mut points: Vec<Task1CurvePoint> = Vec::new();
    let mut keys: Vec<(String, usize)> = outcome
        .rows
        .iter()
        .map(|r| (r.method.name().to_string(), r.tasks_trained))
        .collect();
    keys.sort();
    keys.dedup();
    for (method, tasks_trained) in keys {
        let rows: Vec<_> = outcome
            .rows
            .iter()
            .filter(|r| r.method.name() == method && r.tasks_trained == tasks_trained)
            .collect();
        let n = rows.len() as f64;
        points.push(Task1CurvePoint {
            method,
            tasks_trained,
            mean_reward: rows.iter().map(|r| r.mean_reward).sum::<f64>() / n,
            mean_samples_to_success: rows
                .iter()
                .map(|r| r.mean_samples_to_success)
                .sum::<f64>()
                / n,
            success_rate: rows.iter().map(|r| r.success_rate).sum::<f64>() / n,
        });
    }
    let report = Task1Report {
        version: VERSION.into(),
        config_hash: prov.config_hash.clone(),
        seed,
        optimal_reward: levelset::harness::task1_optimal_reward(cfg.harness.gamma),
        curve: points,
        final_inverse_length_scales: outcome.final_kernels.clone(),
    };
    let json_path = out.join("task1.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    eprintln!("wrote {}", json_path.display());
    Ok(())
}

pub fn cmd_report(out: &Path) -> anyhow::Result<()> {
    let mut printed = false;
    let metrics_path = out.join("metrics.json");
    if metrics_path.exists() {
        let report: MetricsReport =
            serde_json::from_str(&std::fs::read_to_string(&metrics_path)?)?;
        println!(
            "sampler metrics  (v{}, config {}, seed {}, {} runs)",
            report.version,
            report.config_hash,
            report.seed,
            report.seeds.len()
        );
        println!(
            "{:<12} {:>16} {:>16} {:>14} {:>16} {:>14}",
            "method", "FP", "T50 calls", "N5", "diversity5", "reward"
        );
        for m in &report.methods {
            println!(
                "{:<12} {:>7.3} ± {:>5.3} {:>9.1} ± {:>4.1} {:>7.2} ± {:>4.2} {:>9.2} ± {:>4.2} {:>7.3} ± {:>4.3}",
                m.method,
                m.fp_rate.0,
                m.fp_rate.1,
                m.t50_calls.0,
                m.t50_calls.1,
                m.n5.0,
                m.n5.1,
                m.diversity5.0,
                m.diversity5.1,
                m.reward.0,
                m.reward.1
            );
        }
        printed = true;
    }
    let task1_path = out.join("task1.json");
    if task1_path.exists() {
        let report: Task1Report = serde_json::from_str(&std::fs::read_to_string(&task1_path)?)?;
        println!(
            "\nkernel-learning curve  (v{}, config {}, seed {}; optimal J = {:.3})",
            report.version, report.config_hash, report.seed, report.optimal_reward
        );
        println!(
            "{:<16} {:>8} {:>10} {:>12} {:>10}",
            "method", "tasks", "mean J", "samples", "success"
        );
        for p in &report.curve {
            println!(
                "{:<16} {:>8} {:>10.3} {:>12.2} {:>10.2}",
                p.method, p.tasks_trained, p.mean_reward, p.mean_samples_to_success, p.success_rate
            );
        }
        printed = true;
    }
    if !printed {
        anyhow::bail!(
            "no metrics.json or task1.json under {}; run evaluate or task1 first",
            out.display()
        );
    }
    Ok(())
}
