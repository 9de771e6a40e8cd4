use anyhow::{bail, Context, Result};
use coopbatch_core::analysis::{
    concavity_check, cost_estimate, verify_seed_set, work_curve, CostParams, LayerSizes, Mode,
    Stage,
};
use coopbatch_core::cache::{
    run_dependent_experiment, steady_miss_rate, ExperimentConfig, MinibatchSchedule, ScheduleMode,
};
use coopbatch_core::coop::{
    coop_sample, coop_train_step, indep_sample, indep_train_step, synthetic_labels, FeatureStore,
    GcnModel, StepMetrics, TrainInputs,
};
use coopbatch_core::graph::{generate_powerlaw, load_graph, save_csr, save_edge_list};
use coopbatch_core::partition::{cross_edge_ratio, partition};
use coopbatch_core::rng::{mix, VariateSource};
use coopbatch_core::samplers::sample_seed_vertices;
use coopbatch_core::{Graph, PartitionMap, SamplerConfig, VertexId};

use crate::args::*;
use crate::output::Table;
use crate::row;

/// What a successful command reports back to `main`.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A check the command was asked to perform failed.
    CheckFailed,
}

pub fn execute(cli: Cli) -> Result<Status> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => generate(a, seed),
        Command::Curve(a) => curve(a, seed),
        Command::Run(a) => run(a, seed),
        Command::Cache(a) => cache(a, seed),
        Command::Verify(a) => verify(a, seed),
        Command::Cost(a) => cost(a, seed),
        Command::Partition(a) => partition_cmd(a, seed),
    }
}

fn load(args: &GraphArgs, seed: u64) -> Result<(Graph, String)> {
    match (&args.graph, &args.generate) {
        (Some(path), _) => {
            let g = load_graph(path, args.num_vertices)
                .with_context(|| format!("cannot load {}", path.display()))?;
            Ok((g, format!("file:{}", path.display())))
        }
        (None, Some(spec)) => {
            let g = generate_powerlaw(spec.n, spec.deg, spec.skew, seed)?;
            let g = if spec.directed {
                g
            } else {
                g.make_undirected()
            };
            Ok((
                g,
                format!(
                    "powerlaw:n={},deg={},skew={},directed={}",
                    spec.n, spec.deg, spec.skew, spec.directed
                ),
            ))
        }
        (None, None) => bail!("either --graph or --generate is required"),
    }
}

fn describe(t: &mut Table, command: &str, seed: u64, source: &str, g: &Graph) {
    t.meta("command", command)
        .meta("seed", seed)
        .meta("graph", source)
        .meta("num_vertices", g.num_vertices())
        .meta("num_edges", g.num_edges());
}

fn describe_sampler(t: &mut Table, cfg: &SamplerConfig, layers: usize) {
    t.meta("sampler", cfg.kind)
        .meta("fanout", cfg.fanout)
        .meta("layers", layers)
        .meta("rw_length", cfg.rw_length)
        .meta("rw_restart", cfg.rw_restart)
        .meta("rw_walks", cfg.rw_walks);
}

fn checked_sampler(a: &SamplerArgs) -> Result<SamplerConfig> {
    let cfg = a.config();
    cfg.validate()?;
    if a.layers == 0 {
        bail!("--layers must be at least 1");
    }
    Ok(cfg)
}

fn generate(a: GenerateArgs, seed: u64) -> Result<Status> {
    let g = generate_powerlaw(a.n, a.deg, a.skew, seed)?;
    let g = if a.directed { g } else { g.make_undirected() };
    if a.binary {
        save_csr(&g, &a.out)?;
    } else {
        save_edge_list(&g, &a.out)?;
    }
    println!(
        "wrote {} vertices, {} edges to {}",
        g.num_vertices(),
        g.num_edges(),
        a.out.display()
    );
    Ok(Status::Ok)
}

fn curve(a: CurveArgs, seed: u64) -> Result<Status> {
    let (g, source) = load(&a.graph, seed)?;
    let cfg = checked_sampler(&a.sampler)?;
    let l = a.sampler.layers;
    let c = work_curve(&g, &cfg, &a.batch_sizes, a.trials, l, seed, a.seed_mode)?;
    let mut t = Table::new([
        "batch_size".to_string(),
        format!("mean_s{l}"),
        format!("se_s{l}"),
        "work_per_seed".into(),
        "work_per_seed_se".into(),
    ]);
    describe(&mut t, "curve", seed, &source, &g);
    describe_sampler(&mut t, &cfg, l);
    t.meta("trials", a.trials).meta("seed_mode", a.seed_mode);
    for p in &c.points {
        t.row(row![
            p.batch_size,
            p.mean,
            p.se,
            p.work_per_seed,
            p.work_per_seed_se
        ]);
    }
    t.write_atomic(&a.csv)?;

    let mono = c.monotonicity_violations();
    let concave = if c.points.len() >= 3 {
        Some(concavity_check(&c)?)
    } else {
        None
    };
    println!("monotonicity violations: {}", mono.len());
    if let Some(r) = &concave {
        println!("concavity violations: {}", r.violations.len());
    }
    let failed = !mono.is_empty() || concave.is_some_and(|r| !r.passed());
    Ok(if a.check && failed {
        Status::CheckFailed
    } else {
        Status::Ok
    })
}

/// Splits a global batch into `parts` contiguous local batches.
fn split_even(seeds: &[VertexId], parts: usize) -> Vec<Vec<VertexId>> {
    let chunk = seeds.len().div_ceil(parts).max(1);
    let mut out: Vec<Vec<VertexId>> = seeds.chunks(chunk).map(<[VertexId]>::to_vec).collect();
    out.resize(parts, Vec::new());
    out
}

fn metric_rows(t: &mut Table, step: usize, mode: &str, m: &StepMetrics) {
    for r in &m.rows {
        t.row(row![
            step,
            mode,
            r.pe,
            r.layer,
            r.s_l,
            r.s_tilde_l,
            r.e_l,
            r.comm_vertices,
            r.feat_bytes,
            m.loss
        ]);
    }
}

fn run(a: RunArgs, seed: u64) -> Result<Status> {
    let (g, source) = load(&a.graph, seed)?;
    let cfg = checked_sampler(&a.sampler)?;
    let parts = a.partition.parts as usize;
    let pm = partition(&g, parts, a.partition.partitioner.into(), seed)?;
    let mut store = FeatureStore::synthetic(g.num_vertices(), a.dim, mix(seed, &[1]))
        .with_bytes_per_scalar(a.bytes_per_scalar);
    let labels = synthetic_labels(g.num_vertices(), a.classes, mix(seed, &[2]));
    let mut dims = vec![a.classes];
    dims.extend(std::iter::repeat_n(a.dim, a.sampler.layers));
    let mut model = GcnModel::init(&dims, mix(seed, &[3]))?;
    let mut schedule = MinibatchSchedule::new(
        ScheduleMode::Smoothed,
        a.kappa,
        a.batch,
        g.num_vertices(),
        seed,
    )?;
    let mode = match a.mode {
        RunMode::Coop => "coop",
        RunMode::Indep => "indep",
    };

    let mut t = Table::new([
        "step",
        "mode",
        "pe",
        "layer",
        "s_l",
        "s_tilde_l",
        "e_l",
        "comm_vertices",
        "feat_bytes",
        "loss",
    ]);
    describe(&mut t, "run", seed, &source, &g);
    describe_sampler(&mut t, &cfg, a.sampler.layers);
    t.meta("mode", mode)
        .meta("parts", parts)
        .meta(
            "partitioner",
            Into::<coopbatch_core::partition::Partitioner>::into(a.partition.partitioner),
        )
        .meta("batch", a.batch)
        .meta("steps", a.steps)
        .meta("kappa", a.kappa)
        .meta("dim", a.dim)
        .meta("classes", a.classes)
        .meta("lr", a.lr)
        .meta("bytes_per_scalar", a.bytes_per_scalar);

    let mut last = 0.0;
    for step in 0..a.steps {
        let (seeds, source) = schedule.next_batch()?;
        let inputs = TrainInputs {
            graph: &g,
            sampler: &cfg,
            source,
            model: &model,
            labels: &labels,
        };
        let out = match a.mode {
            RunMode::Coop => coop_train_step(&inputs, &pm, &pm.split_by_owner(&seeds), &mut store)?,
            RunMode::Indep => indep_train_step(&inputs, &split_even(&seeds, parts), &mut store)?,
        };
        metric_rows(&mut t, step, mode, &out.metrics);
        model.sgd_step(&out.grads, a.lr)?;
        last = out.loss;
    }
    t.write_atomic(&a.csv)?;
    println!(
        "steps: {}  final loss: {last:.6}  feature bytes: {}",
        a.steps,
        store.bytes_loaded()
    );
    Ok(Status::Ok)
}

fn cache(a: CacheArgs, seed: u64) -> Result<Status> {
    let (g, source) = load(&a.graph, seed)?;
    let cfg = checked_sampler(&a.sampler)?;
    let warmup = a.warmup.unwrap_or(a.steps / 5);
    let exp = ExperimentConfig {
        sampler: cfg,
        num_layers: a.sampler.layers,
        capacity: a.capacity,
        steps: a.steps,
        warmup,
        row_bytes: (a.dim * a.bytes_per_scalar) as u64,
    };
    let mut schedule = MinibatchSchedule::new(a.mode, a.kappa, a.batch, g.num_vertices(), seed)?;
    let rows = run_dependent_experiment(&g, &mut schedule, &exp)?;
    let mut t = Table::new([
        "step",
        "warmup",
        "seeds",
        "input_vertices",
        "hits",
        "misses",
        "miss_rate",
        "bytes",
    ]);
    describe(&mut t, "cache", seed, &source, &g);
    describe_sampler(&mut t, &cfg, a.sampler.layers);
    t.meta("mode", a.mode)
        .meta("kappa", a.kappa)
        .meta("capacity", a.capacity)
        .meta("batch", a.batch)
        .meta("steps", a.steps)
        .meta("warmup", warmup)
        .meta("dim", a.dim)
        .meta("bytes_per_scalar", a.bytes_per_scalar);
    for r in &rows {
        t.row(row![
            r.step,
            r.warmup,
            r.seeds,
            r.input_vertices,
            r.hits,
            r.misses,
            r.miss_rate,
            r.bytes
        ]);
    }
    t.write_atomic(&a.csv)?;
    println!("steady-state miss rate: {:.6}", steady_miss_rate(&rows));
    Ok(Status::Ok)
}

fn verify(a: VerifyArgs, seed: u64) -> Result<Status> {
    let (g, source) = load(&a.graph, seed)?;
    if a.n == 0 || a.n > g.num_vertices() {
        bail!("--n must be in 1..={}", g.num_vertices());
    }
    let mut t = Table::new([
        "trial",
        "seeds",
        "size",
        "loo_sizes",
        "t",
        "t2",
        "loo_t",
        "removal",
        "monotone",
        "pair",
    ]);
    describe(&mut t, "verify", seed, &source, &g);
    t.meta("n", a.n).meta("l", a.l).meta("trials", a.trials);
    let mut violations = [0usize; 3];
    for trial in 0..a.trials {
        let seeds = sample_seed_vertices(g.num_vertices(), a.n, mix(seed, &[trial as u64]))?;
        let c = verify_seed_set(&g, &seeds, a.l)?;
        let holds = c.holds();
        for (v, ok) in violations.iter_mut().zip(holds) {
            *v += usize::from(!ok);
        }
        let ids: Vec<String> = seeds.iter().map(u32::to_string).collect();
        t.row(row![
            trial,
            ids.join(" "),
            c.size,
            c.loo_sizes,
            c.t,
            c.t2,
            c.loo_t,
            holds[0],
            holds[1],
            holds[2]
        ]);
    }
    if let Some(path) = &a.csv {
        t.write_atomic(path)?;
    }
    println!(
        "trials: {}  violations: removal={} monotone={} pair={}",
        a.trials, violations[0], violations[1], violations[2]
    );
    Ok(if violations == [0; 3] {
        Status::Ok
    } else {
        Status::CheckFailed
    })
}

fn mean_sizes(all: &[LayerSizes]) -> LayerSizes {
    let k = all.len() as f64;
    let avg = |f: fn(&LayerSizes) -> &Vec<f64>| -> Vec<f64> {
        let len = f(&all[0]).len();
        (0..len)
            .map(|i| all.iter().map(|s| f(s)[i]).sum::<f64>() / k)
            .collect()
    };
    LayerSizes {
        s: avg(|s| &s.s),
        s_tilde: avg(|s| &s.s_tilde),
        e: avg(|s| &s.e),
    }
}

fn cost(a: CostArgs, seed: u64) -> Result<Status> {
    let (g, source) = load(&a.graph, seed)?;
    let cfg = checked_sampler(&a.sampler)?;
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let parts = a.partition.parts as usize;
    let pm = partition(&g, parts, a.partition.partitioner.into(), seed)?;
    let c = a.c.unwrap_or_else(|| cross_edge_ratio(&g, &pm));
    let l = a.sampler.layers;
    let (mut indep, mut coop) = (Vec::new(), Vec::new());
    for trial in 0..a.trials as u64 {
        let seeds = sample_seed_vertices(g.num_vertices(), a.batch, mix(seed, &[trial]))?;
        let src = VariateSource::plain(mix(seed, &[trial, 1]));
        let cs = coop_sample(&g, &pm, &pm.split_by_owner(&seeds), l, &cfg, &src)?;
        coop.push(LayerSizes::from_metrics(&StepMetrics::for_coop(&cs, 0)));
        let is = indep_sample(&g, &split_even(&seeds, parts), l, &cfg, &src)?;
        indep.push(LayerSizes::from_metrics(&StepMetrics::for_indep(&is, 0)));
    }
    let (indep, coop) = (mean_sizes(&indep), mean_sizes(&coop));
    let params = CostParams {
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        c,
        d: a.d,
        rho: a.rho,
        model_cost: a.model_cost,
        parts,
    };
    let report = cost_estimate(&params, &indep, &coop)?;

    let mut t = Table::new(["stage", "mode", "modeled_time"]);
    describe(&mut t, "cost", seed, &source, &g);
    describe_sampler(&mut t, &cfg, l);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.1}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    t.meta("parts", parts)
        .meta("batch", a.batch)
        .meta("trials", a.trials)
        .meta("alpha", a.alpha)
        .meta("beta", a.beta)
        .meta("gamma", a.gamma)
        .meta("c", c)
        .meta("d", a.d)
        .meta("rho", a.rho)
        .meta("model_cost", a.model_cost)
        .meta("indep_s", fmt(&indep.s))
        .meta("indep_e", fmt(&indep.e))
        .meta("coop_s", fmt(&coop.s))
        .meta("coop_s_tilde", fmt(&coop.s_tilde))
        .meta("coop_e", fmt(&coop.e));
    for stage in Stage::ALL {
        for mode in [Mode::Independent, Mode::Cooperative] {
            t.row(row![stage, mode, report.get(stage, mode)]);
        }
    }
    for mode in [Mode::Independent, Mode::Cooperative] {
        t.row(row!["total", mode, report.total(mode)]);
    }
    t.write_atomic(&a.csv)?;
    println!(
        "modeled total: indep {:.3e} s, coop {:.3e} s (c = {c:.4})",
        report.total(Mode::Independent),
        report.total(Mode::Cooperative)
    );
    Ok(Status::Ok)
}

fn partition_cmd(a: PartitionArgs, seed: u64) -> Result<Status> {
    let (g, source) = load(&a.graph, seed)?;
    let kind = a.partition.partitioner.into();
    let pm: PartitionMap = partition(&g, a.partition.parts as usize, kind, seed)?;
    let c = cross_edge_ratio(&g, &pm);
    let mut t = Table::new(["vertex", "part"]);
    describe(&mut t, "partition", seed, &source, &g);
    t.meta("parts", a.partition.parts)
        .meta("partitioner", kind)
        .meta("cross_edge_ratio", c);
    for (v, p) in pm.owners().iter().enumerate() {
        t.row(row![v, p]);
    }
    t.write_atomic(&a.csv)?;
    println!("cross-edge ratio: {c:.6}");
    Ok(Status::Ok)
}
