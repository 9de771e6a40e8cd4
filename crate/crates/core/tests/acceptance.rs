//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails. Every statistic is recomputed here from
//! raw library outputs; library-side verdicts are only cross-checked.

use std::cell::RefCell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coopbatch_core::analysis::{
    concavity_check, mean_se, verify_identities, verify_seed_set, work_curve, SeedMode, WorkCurve,
};
use coopbatch_core::cache::{
    neighborhood_drift, run_dependent_experiment, steady_miss_rate, ExperimentConfig,
    MinibatchSchedule, ScheduleMode,
};
use coopbatch_core::coop::{
    coop_sample, coop_train_step, gcn_backward, gcn_forward, indep_sample, softmax_cross_entropy,
    synthetic_labels, Activation, FeatureMatrix, FeatureStore, GcnModel, StepMetrics, TrainInputs,
};
use coopbatch_core::graph::generate_powerlaw;
use coopbatch_core::partition::{cross_edge_ratio, partition_locality, partition_random};
use coopbatch_core::rng::{hash_uniform, interp_variate, phi, std_normal};
use coopbatch_core::samplers::{
    expand, rw_visit_counts, sample_labor0, sample_ns, sample_seed_vertices,
};
use coopbatch_core::{
    BipartiteBlock, Graph, Kappa, PartitionMap, SamplerConfig, SamplerKind, SeedSchedule,
    VariateSource, VertexId,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// 10^5 vertices, symmetrized, average degree close to 50.
fn benchmark_graph() -> Graph {
    generate_powerlaw(100_000, 25.0, 0.6, 1)
        .expect("valid generator parameters")
        .make_undirected()
}

const CURVE_SIZES: [usize; 8] = [64, 128, 256, 512, 1024, 2048, 4096, 8192];

/// Pooled standard error of a difference of two independent means.
fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

// ---------------------------------------------------------------- 1

/// `S^l` of `seeds` by repeated relaxation over in-edges.
fn closure(g: &Graph, seeds: &[VertexId], layers: usize) -> Vec<bool> {
    let mut cur = vec![false; g.num_vertices()];
    for &s in seeds {
        cur[s as usize] = true;
    }
    for _ in 0..layers {
        let mut next = cur.clone();
        for (v, _) in cur.iter().enumerate().filter(|(_, &b)| b) {
            for &t in g.in_neighbors(v as VertexId) {
                next[t as usize] = true;
            }
        }
        cur = next;
    }
    cur
}

/// `(|S^l|, |T_l|, |T2_l|)` straight from the definitions.
fn oracle_sizes(g: &Graph, seeds: &[VertexId], layers: usize) -> (usize, usize, usize) {
    let size = closure(g, seeds, layers).iter().filter(|&&b| b).count();
    let mut counts = vec![0usize; g.num_vertices()];
    for &s in seeds {
        for (c, r) in counts.iter_mut().zip(closure(g, &[s], layers)) {
            *c += r as usize;
        }
    }
    let t = counts.iter().filter(|&&c| c == 1).count();
    let t2 = counts.iter().filter(|&&c| c == 2).count();
    (size, t, t2)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut sets, mut violations, mut mismatches) = (0usize, 0usize, 0usize);
    for gi in 0..100u64 {
        let n_v = rng.random_range(8..=32usize);
        let deg = rng.random_range(1.0..4.0);
        let directed = lib(generate_powerlaw(n_v, deg, 0.5, gi))?;
        let g = if gi % 2 == 0 {
            directed
        } else {
            directed.make_undirected()
        };
        for n in 2..=4usize {
            for l in 1..=3usize {
                let report = lib(verify_identities(
                    &g,
                    n,
                    l,
                    4,
                    gi * 97 + (n * 10 + l) as u64,
                ))?;
                violations += report.violations.iter().sum::<usize>();
                sets += report.trials;
                for trial in 0..3u64 {
                    let seeds = lib(sample_seed_vertices(n_v, n, rng.random()))?;
                    let check = lib(verify_seed_set(&g, &seeds, l))?;
                    let (size, t, t2) = oracle_sizes(&g, &seeds, l);
                    let (mut loo_sizes, mut loo_t) = (0, 0);
                    for i in 0..n {
                        let mut rest = seeds.clone();
                        rest.remove(i);
                        let (s, t, _) = oracle_sizes(&g, &rest, l);
                        loo_sizes += s;
                        loo_t += t;
                    }
                    if (check.size, check.loo_sizes, check.t, check.t2, check.loo_t)
                        != (size, loo_sizes, t, t2, loo_t)
                    {
                        mismatches += 1;
                    }
                    let removal = n * size == loo_sizes + t;
                    let monotone = size * (n - 1) <= loo_sizes;
                    let pair = t + loo_t == n * t + 2 * t2;
                    violations += [removal, monotone, pair].iter().filter(|&&ok| !ok).count();
                    sets += 1;
                    let _ = trial;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(violations == 0, || {
        format!("{violations} identity violations")
    })?;
    ensure(mismatches == 0, || {
        format!("{mismatches} seed sets where library sizes differ from the oracle")
    })?;
    ensure(elapsed <= Duration::from_secs(60), || {
        format!("runtime {elapsed:.1?} exceeds 60 s")
    })?;
    Ok(format!(
        "{sets} seed sets on 100 graphs, 0 violations, oracle agrees ({elapsed:.1?})"
    ))
}

// ---------------------------------------------------------------- 2, 3

fn criterion_2(g: &Graph, curves: &RefCell<Vec<(SamplerKind, WorkCurve)>>) -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for kind in SamplerKind::SAMPLED {
        let t = Instant::now();
        let curve = lib(work_curve(
            g,
            &SamplerConfig::new(kind),
            &CURVE_SIZES,
            50,
            3,
            2024,
            SeedMode::Node,
        ))?;
        let pts = &curve.points;
        for (i, w) in pts.windows(2).enumerate() {
            let rise = w[1].work_per_seed - w[0].work_per_seed;
            if rise > pooled(w[0].work_per_seed_se, w[1].work_per_seed_se) {
                failures.push(format!(
                    "{kind} rises between b={} and b={}",
                    w[0].batch_size, w[1].batch_size
                ));
            }
            if curve.monotonicity_violations().contains(&i)
                != (rise > pooled(w[0].work_per_seed_se, w[1].work_per_seed_se))
            {
                failures.push(format!("{kind} library verdict differs at index {i}"));
            }
        }
        notes.push(format!(
            "{kind} {:.1}->{:.1} ({:.0?})",
            pts[0].work_per_seed,
            pts[pts.len() - 1].work_per_seed,
            t.elapsed()
        ));
        curves.borrow_mut().push((kind, curve));
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        failures.push(format!("runtime {elapsed:.0?} exceeds 10 min"));
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "work per seed nonincreasing over 2^6..2^13: {} (total {elapsed:.0?})",
        notes.join(", ")
    ))
}

fn criterion_3(curves: &RefCell<Vec<(SamplerKind, WorkCurve)>>) -> Outcome {
    let curves = curves.borrow();
    ensure(curves.len() == 3, || "work curves unavailable".into())?;
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for (kind, curve) in curves.iter() {
        let pts = &curve.points;
        let mut worst = f64::NEG_INFINITY;
        for w in pts.windows(3) {
            let (x0, x1, x2) = (
                w[0].batch_size as f64,
                w[1].batch_size as f64,
                w[2].batch_size as f64,
            );
            // Second divided difference f[x0, x1, x2] as a linear combination.
            let c = [
                2.0 / ((x1 - x0) * (x2 - x0)),
                -2.0 / ((x1 - x0) * (x2 - x1)),
                2.0 / ((x2 - x1) * (x2 - x0)),
            ];
            let d2: f64 = c.iter().zip(w).map(|(c, p)| c * p.mean).sum();
            let se = c
                .iter()
                .zip(w)
                .map(|(c, p)| (c * p.se).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(if se > 0.0 {
                d2 / se
            } else {
                d2.signum() * f64::INFINITY
            });
            if d2 > 2.0 * se {
                failures.push(format!("{kind} convex at b={}", w[1].batch_size));
            }
        }
        let report = lib(concavity_check(curve))?;
        if report.passed() != failures.iter().all(|f| !f.starts_with(kind.name())) {
            failures.push(format!("{kind} library verdict differs"));
        }
        notes.push(format!("{kind} max d2/se {worst:.1}"));
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!(
        "all second differences <= 2 s.e.: {}",
        notes.join(", ")
    ))
}

// ---------------------------------------------------------------- 4

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Relative deviation of `a` from the reference `b`, scaled by `b`'s largest entry.
fn rel_dev(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = max_abs(b).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
}

/// Loss and weight gradients of one batch on one PE, assembled from the
/// layer primitives without any cooperative machinery.
fn single_pe_reference(
    g: &Graph,
    seeds: &[VertexId],
    cfg: &SamplerConfig,
    source: &VariateSource,
    model: &GcnModel,
    store: &FeatureStore,
    labels: &[usize],
) -> Result<(f64, Vec<Array2<f64>>), String> {
    let layers = model.num_layers();
    let stack = lib(expand(g, seeds, layers, cfg, source))?;
    let blocks = stack.blocks();
    let mut inputs: Vec<FeatureMatrix> = Vec::with_capacity(layers);
    let mut h = lib(store.peek(stack.input_vertices()))?;
    for l in (0..layers).rev() {
        ensure(h.ids() == blocks[l].src_vertices(), || {
            format!("layer {l} row order")
        })?;
        let out = lib(gcn_forward(
            &blocks[l],
            &h,
            &model.weights()[l],
            model.activation(l),
        ))?;
        inputs.push(h);
        h = out;
    }
    inputs.reverse();
    let y: Vec<usize> = h.ids().iter().map(|&v| labels[v as usize]).collect();
    let (loss_sum, mut grad) = lib(softmax_cross_entropy(h.values(), &y, seeds.len() as f64))?;
    let mut grads = vec![Array2::zeros((0, 0)); layers];
    for l in 0..layers {
        let (gi, gw) = lib(gcn_backward(
            &blocks[l],
            &inputs[l],
            &model.weights()[l],
            model.activation(l),
            &grad,
        ))?;
        grads[l] = gw;
        grad = gi;
    }
    Ok((loss_sum / seeds.len() as f64, grads))
}

fn criterion_4(g: &Graph) -> Outcome {
    let n = g.num_vertices();
    let mut worst_rel = 0.0f64;
    let mut compared = 0usize;
    for parts in [2usize, 4, 8] {
        let pm = lib(partition_random(n, parts, 40 + parts as u64))?;
        for kind in SamplerKind::ALL {
            let (b, layers) = if kind == SamplerKind::Full {
                (16, 2)
            } else {
                (1024, 3)
            };
            let cfg = SamplerConfig::new(kind);
            let source = VariateSource::plain(7_000 + parts as u64);
            let global = lib(sample_seed_vertices(n, b, 90 + parts as u64))?;
            let per_pe = pm.split_by_owner(&global);
            let coop = lib(coop_sample(g, &pm, &per_pe, layers, &cfg, &source))?;
            let union: Vec<VertexId> = per_pe.concat();
            let single = lib(expand(g, &union, layers, &cfg, &source))?;
            for l in 0..=layers {
                let mut got: Vec<VertexId> = coop
                    .stacks
                    .iter()
                    .flat_map(|s| s.owned(l).iter().copied())
                    .collect();
                got.sort_unstable();
                let mut want = single.layer_vertices(l).to_vec();
                want.sort_unstable();
                ensure(got == want, || {
                    format!("P={parts} {kind}: layer {l} vertex multisets differ")
                })?;
            }
            for l in 0..layers {
                let coop_edges: usize = coop.stacks.iter().map(|s| s.blocks()[l].num_edges()).sum();
                ensure(coop_edges == single.blocks()[l].num_edges(), || {
                    format!("P={parts} {kind}: layer {l} edge counts differ")
                })?;
            }
        }
        for kind in [SamplerKind::Full, SamplerKind::Labor0] {
            let (b, dims): (usize, &[usize]) = if kind == SamplerKind::Full {
                (16, &[4, 8, 8])
            } else {
                (256, &[4, 8, 8, 8])
            };
            let cfg = SamplerConfig::new(kind);
            let model = lib(GcnModel::init(dims, 5 + parts as u64))?;
            let mut store = FeatureStore::synthetic(n, 8, 6);
            let labels = synthetic_labels(n, 4, 7);
            let inputs = TrainInputs {
                graph: g,
                sampler: &cfg,
                source: VariateSource::plain(8_000 + parts as u64),
                model: &model,
                labels: &labels,
            };
            let global = lib(sample_seed_vertices(n, b, 300 + parts as u64))?;
            let per_pe = pm.split_by_owner(&global);
            let union = per_pe.concat();
            let coop = lib(coop_train_step(&inputs, &pm, &per_pe, &mut store))?;
            let (loss, grads) =
                single_pe_reference(g, &union, &cfg, &inputs.source, &model, &store, &labels)?;
            let loss_rel = (coop.loss - loss).abs() / loss.abs().max(1e-300);
            worst_rel = worst_rel.max(loss_rel);
            for (a, b) in coop.grads.iter().zip(&grads) {
                ensure(a.dim() == b.dim(), || "gradient shapes differ".into())?;
                worst_rel = worst_rel.max(rel_dev(a, b));
            }
            compared += 1;
        }
    }
    ensure(worst_rel <= 1e-5, || {
        format!("max relative deviation {worst_rel:.2e} exceeds 1e-5")
    })?;
    Ok(format!(
        "union property exact for 4 samplers at P=2,4,8; {compared} train steps within {worst_rel:.1e} relative"
    ))
}

// ---------------------------------------------------------------- 5

fn split_even(seeds: &[VertexId], parts: usize) -> Vec<Vec<VertexId>> {
    let chunk = seeds.len().div_ceil(parts);
    seeds.chunks(chunk).map(<[VertexId]>::to_vec).collect()
}

struct WorkStats {
    e2: (f64, f64),
    s3: (f64, f64),
    edges: (f64, f64),
}

fn work_stats(samples: &[(f64, f64, f64)]) -> WorkStats {
    let col = |f: fn(&(f64, f64, f64)) -> f64| mean_se(&samples.iter().map(f).collect::<Vec<_>>());
    WorkStats {
        e2: col(|s| s.0),
        s3: col(|s| s.1),
        edges: col(|s| s.2),
    }
}

/// Per-PE means of `|E^2_p|`, `|S^3_p|` and `Σ_l |E^l_p|`.
fn per_pe(m: &StepMetrics) -> (f64, f64, f64) {
    let p = m.num_parts() as f64;
    (
        m.edges_at(2) as f64 / p,
        m.vertices_at(3) as f64 / p,
        m.total_edges() as f64 / p,
    )
}

fn criterion_5(g: &Graph) -> Outcome {
    let n = g.num_vertices();
    let cfg = SamplerConfig::new(SamplerKind::Labor0);
    let mut ratios = Vec::new();
    let mut at4 = None;
    for parts in [2usize, 4, 8] {
        let pm = lib(partition_random(n, parts, 500 + parts as u64))?;
        let (mut coop_s, mut indep_s) = (Vec::new(), Vec::new());
        for trial in 0..50u64 {
            let key = 10_000 * parts as u64 + trial;
            let global = lib(sample_seed_vertices(n, 4096, key))?;
            let source = VariateSource::plain(key ^ 0xABCD);
            let coop = lib(coop_sample(
                g,
                &pm,
                &pm.split_by_owner(&global),
                3,
                &cfg,
                &source,
            ))?;
            coop_s.push(per_pe(&StepMetrics::for_coop(&coop, 0)));
            let indep = lib(indep_sample(
                g,
                &split_even(&global, parts),
                3,
                &cfg,
                &source,
            ))?;
            indep_s.push(per_pe(&StepMetrics::for_indep(&indep, 0)));
        }
        let (c, i) = (work_stats(&coop_s), work_stats(&indep_s));
        ratios.push((parts, c.edges.0 / i.edges.0, c.s3.0 / i.s3.0));
        if parts == 4 {
            at4 = Some((c, i));
        }
    }
    let (c, i) = at4.expect("P=4 evaluated");
    let gap_e = (i.e2.0 - c.e2.0) / pooled(i.e2.1, c.e2.1);
    let gap_s = (i.s3.0 - c.s3.0) / pooled(i.s3.1, c.s3.1);
    ensure(gap_e >= 2.0 && gap_s >= 2.0, || {
        format!("P=4 separation E2 {gap_e:.1} s.e., S3 {gap_s:.1} s.e.")
    })?;
    let decreasing = ratios
        .windows(2)
        .all(|w| w[1].1 < w[0].1 && w[1].2 < w[0].2);
    let shown: Vec<String> = ratios
        .iter()
        .map(|(p, e, s)| format!("P={p} edges {e:.3} S3 {s:.3}"))
        .collect();
    ensure(decreasing, || {
        format!("coop/indep ratios not decreasing: {}", shown.join(", "))
    })?;
    Ok(format!(
        "P=4 E2 {:.0} vs {:.0} ({gap_e:.0} s.e.), S3 {:.0} vs {:.0} ({gap_s:.0} s.e.); ratios {}",
        c.e2.0,
        i.e2.0,
        c.s3.0,
        i.s3.0,
        shown.join(", ")
    ))
}

// ---------------------------------------------------------------- 6

/// Ring lattice with two neighbors per side plus random chords, under a
/// random relabeling so that vertex ids carry no locality.
fn connected_fixture(seed: u64) -> Result<Graph, String> {
    let n = 2_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut label: Vec<VertexId> = (0..n).collect();
    for i in (1..label.len()).rev() {
        label.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for v in 0..n {
        for off in [1, 2] {
            edges.push((label[v as usize], label[((v + off) % n) as usize]));
        }
    }
    for _ in 0..100 {
        edges.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    edges.retain(|(a, b)| a != b);
    Ok(lib(Graph::from_edges(n as usize, &edges))?.make_undirected())
}

/// Cross-edge ratio counted edge by edge.
fn oracle_cross_ratio(g: &Graph, pm: &PartitionMap) -> f64 {
    let (mut cross, mut total) = (0usize, 0usize);
    for (t, s) in g.edges() {
        total += 1;
        cross += (pm.owner(t) != pm.owner(s)) as usize;
    }
    cross as f64 / total as f64
}

fn criterion_6(g: &Graph) -> Outcome {
    let mut notes = Vec::new();
    for parts in [2usize, 4, 8] {
        let pm = lib(partition_random(g.num_vertices(), parts, 60 + parts as u64))?;
        let c = oracle_cross_ratio(g, &pm);
        ensure((c - cross_edge_ratio(g, &pm)).abs() < 1e-12, || {
            "library ratio differs".into()
        })?;
        let want = (parts - 1) as f64 / parts as f64;
        ensure((c - want).abs() <= 0.01, || {
            format!("P={parts}: c={c:.4}, expected {want:.4}")
        })?;
        notes.push(format!("P={parts} c={c:.4}"));
    }
    let mut wins = 0;
    for seed in 0..10u64 {
        let fixture = connected_fixture(seed)?;
        let local = lib(partition_locality(&fixture, 4))?;
        let random = lib(partition_random(fixture.num_vertices(), 4, seed))?;
        if oracle_cross_ratio(&fixture, &local) < oracle_cross_ratio(&fixture, &random) {
            wins += 1;
        }
    }
    ensure(wins >= 6, || {
        format!("locality better on only {wins}/10 fixtures")
    })?;
    Ok(format!(
        "{}; locality better on {wins}/10 fixtures",
        notes.join(", ")
    ))
}

// ---------------------------------------------------------------- 7

fn criterion_7(g: &Graph) -> Outcome {
    let n = g.num_vertices();
    let exp = ExperimentConfig {
        sampler: SamplerConfig::new(SamplerKind::Labor0).with_fanout(5),
        num_layers: 2,
        capacity: n / 10,
        steps: 50,
        warmup: 10,
        row_bytes: 4,
    };
    let kappas = ["1", "4", "16", "64", "256", "inf"];
    let mut rates = Vec::new();
    for k in kappas {
        let kappa: Kappa = lib(k.parse())?;
        let per_trial: Vec<f64> = (0..50u64)
            .map(|trial| {
                let mut sched = lib(MinibatchSchedule::new(
                    ScheduleMode::Smoothed,
                    kappa,
                    64,
                    n,
                    trial,
                ))?;
                Ok(steady_miss_rate(&lib(run_dependent_experiment(
                    g, &mut sched, &exp,
                ))?))
            })
            .collect::<Result<_, String>>()?;
        rates.push(mean_se(&per_trial));
    }
    let shown: Vec<String> = kappas
        .iter()
        .zip(&rates)
        .map(|(k, (m, se))| format!("{k}:{m:.3}±{se:.3}"))
        .collect();
    for (i, w) in rates.windows(2).enumerate() {
        ensure(w[1].0 - w[0].0 <= pooled(w[0].1, w[1].1), || {
            format!(
                "miss rate rises from kappa {} to {}: {}",
                kappas[i],
                kappas[i + 1],
                shown.join(" ")
            )
        })?;
    }
    let reduction = rates[0].0 / rates[rates.len() - 1].0;
    ensure(reduction >= 1.5, || {
        format!(
            "kappa 1 -> inf reduction {reduction:.2}x below 1.5x: {}",
            shown.join(" ")
        )
    })?;

    // Frozen neighborhoods: the same seeds sample the same stacks one and
    // two epochs later.
    let b = 64;
    let epoch = n.div_ceil(b);
    let fixed = lib(sample_seed_vertices(n, 256, 77))?;
    let mut sched = lib(MinibatchSchedule::new(
        ScheduleMode::Smoothed,
        Kappa::Infinite,
        b,
        n,
        5,
    ))?;
    let mut stacks = Vec::new();
    for step in 0..=2 * epoch {
        let (_, source) = lib(sched.next_batch())?;
        if step % epoch == 0 {
            stacks.push(lib(expand(g, &fixed, 3, &exp.sampler, &source))?);
        }
    }
    ensure(
        stacks.len() == 3 && stacks[0] == stacks[1] && stacks[1] == stacks[2],
        || "kappa=inf stacks differ across epochs".into(),
    )?;
    Ok(format!(
        "{}; {reduction:.2}x reduction; kappa=inf stacks identical over 2 epochs",
        shown.join(" ")
    ))
}

// ---------------------------------------------------------------- 8

fn ks_statistic(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        d.max(x - i as f64 / n).max((i + 1) as f64 / n - x)
    })
}

fn criterion_8(g: &Graph) -> Outcome {
    let (z1, z2) = (0x5EED_0001u64, 0x5EED_0002u64);
    let samples = 100_000u64;
    let critical = 1.628 / (samples as f64).sqrt();
    let mut worst = 0.0f64;
    for c in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let xs: Vec<f64> = (0..samples)
            .map(|i| lib(interp_variate(z1, z2, c, &[i])))
            .collect::<Result<_, String>>()?;
        let d = ks_statistic(xs);
        ensure(d < critical, || {
            format!("c={c}: KS {d:.5} >= {critical:.5}")
        })?;
        worst = worst.max(d);
    }
    for i in 0..10_000u64 {
        let at0 = lib(interp_variate(z1, z2, 0.0, &[i]))?;
        let at1 = lib(interp_variate(z1, z2, 1.0, &[i]))?;
        ensure(at0 == lib(phi(std_normal(z1, &[i])))?, || {
            format!("c=0 endpoint differs at id {i}")
        })?;
        ensure(at1 == lib(phi(std_normal(z2, &[i])))?, || {
            format!("c=1 endpoint differs at id {i}")
        })?;
    }
    let vertices = lib(sample_seed_vertices(g.num_vertices(), 2_000, 88))?;
    let cfg = SamplerConfig::new(SamplerKind::Labor0);
    let schedule = SeedSchedule::new(lib(Kappa::finite(64))?, 99);
    let distances = [1u64, 2, 4, 8, 16, 32, 64];
    let drift: Vec<f64> = distances
        .iter()
        .map(|&d| lib(neighborhood_drift(g, &vertices, &cfg, schedule, d)))
        .collect::<Result<_, String>>()?;
    ensure(
        drift.windows(2).all(|w| w[1] >= w[0]) && drift[0] < drift[drift.len() - 1],
        || format!("drift not monotone: {drift:?}"),
    )?;
    let shown: Vec<String> = distances
        .iter()
        .zip(&drift)
        .map(|(d, j)| format!("{d}:{j:.3}"))
        .collect();
    Ok(format!(
        "max KS {worst:.5} < {critical:.5}; endpoints exact; drift {}",
        shown.join(" ")
    ))
}

// ---------------------------------------------------------------- 9

/// Reservoir inclusion counts over `epochs` fresh sources, tested with the
/// Pearson statistic rescaled for exactly-`k` draws without replacement,
/// which is asymptotically chi-square with `d - 1` degrees of freedom.
fn ns_chi_square(g: &Graph, s: VertexId, k: usize, epochs: u64) -> Result<(f64, f64), String> {
    let nbrs = g.in_neighbors(s);
    let d = nbrs.len();
    let mut counts = vec![0u64; g.num_vertices()];
    for e in 0..epochs {
        let block = lib(sample_ns(g, &[s], k, &VariateSource::plain(e * 31 + 17)))?;
        for &t in &block.neighbor_lists()[0] {
            counts[t as usize] += 1;
        }
    }
    let p = k as f64 / d as f64;
    let expected = epochs as f64 * p;
    let pearson: f64 = nbrs
        .iter()
        .map(|&t| (counts[t as usize] as f64 - expected).powi(2) / expected)
        .sum();
    let stat = pearson * (d - 1) as f64 / (d as f64 * (1.0 - p));
    let critical = lib(ChiSquared::new((d - 1) as f64))?.inverse_cdf(0.99);
    Ok((stat, critical))
}

/// Expected visits per walk from `s` to every vertex: the first step follows
/// row `s` of the transition matrix `p_mat`, later steps restart from row `s`
/// with probability `restart`.
fn rw_expected(p_mat: &[[f64; 4]; 4], s: usize, length: usize, restart: f64) -> [f64; 4] {
    let mut q = p_mat[s];
    let mut total = q;
    for _ in 1..length {
        let mut next = [0.0; 4];
        for (t, n) in next.iter_mut().enumerate() {
            let carried: f64 = (0..4).map(|v| q[v] * p_mat[v][t]).sum();
            *n = restart * p_mat[s][t] + (1.0 - restart) * carried;
        }
        q = next;
        for t in 0..4 {
            total[t] += q[t];
        }
    }
    total
}

fn criterion_9(g: &Graph) -> Outcome {
    // NS: a 40-leaf star and a benchmark vertex of moderate degree.
    let star_edges: Vec<_> = (1..=40u32).map(|t| (t, 0)).collect();
    let star = lib(Graph::from_edges(41, &star_edges))?;
    let mut ns_notes = Vec::new();
    let mid = (0..g.num_vertices() as VertexId)
        .find(|&v| (40..=60).contains(&g.degree(v)))
        .ok_or("no benchmark vertex of degree 40..60")?;
    for (graph, s, epochs) in [(&star, 0, 20_000u64), (g, mid, 10_000)] {
        let (stat, critical) = ns_chi_square(graph, s, 10, epochs)?;
        ensure(stat < critical, || {
            format!("NS chi-square {stat:.1} >= {critical:.1}")
        })?;
        ns_notes.push(format!("{stat:.1}<{critical:.1}"));
    }

    // LABOR-0: every kept edge satisfies the predicate and every edge that
    // satisfies it is kept.
    let k = 10;
    let variate = |t: VertexId| hash_uniform(4242, &[t as u64]);
    let seeds = lib(sample_seed_vertices(g.num_vertices(), 3_000, 3))?;
    let block = lib(sample_labor0(g, &seeds, k, variate))?;
    for (s, got) in block.dst_vertices().iter().zip(block.neighbor_lists()) {
        let nbrs = g.in_neighbors(*s);
        let threshold = k as f64 / nbrs.len() as f64;
        let mut want: Vec<VertexId> = nbrs
            .iter()
            .copied()
            .filter(|&t| nbrs.len() <= k || variate(t) <= threshold)
            .collect();
        let mut got = got;
        want.sort_unstable();
        got.sort_unstable();
        ensure(got == want, || {
            format!("LABOR-0 neighborhood of {s} breaks the predicate")
        })?;
    }

    // RW on a weighted 4-vertex chain 0 -2- 1 -1- 2 -3- 3.
    let chain = lib(Graph::from_weighted_edges(
        4,
        &[
            (0, 1, 2.0),
            (1, 0, 2.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (2, 3, 3.0),
            (3, 2, 3.0),
        ],
    ))?;
    let p_mat = [
        [0.0, 1.0, 0.0, 0.0],
        [2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0],
        [0.0, 0.25, 0.0, 0.75],
        [0.0, 0.0, 1.0, 0.0],
    ];
    // Hand-computed rows of P + P^2 for two-step walks without restart.
    let hand: [[f64; 4]; 4] = [
        [2.0 / 3.0, 1.0, 1.0 / 3.0, 0.0],
        [2.0 / 3.0, 2.0 / 3.0 + 1.0 / 12.0, 1.0 / 3.0, 0.25],
        [1.0 / 6.0, 0.25, 1.0 / 12.0 + 0.75, 0.75],
        [0.0, 0.25, 1.0, 0.75],
    ];
    let walks = 20_000;
    let mut worst = 0.0f64;
    for (length, restart) in [(2usize, 0.0), (3, 0.5)] {
        let cfg = SamplerConfig {
            kind: SamplerKind::Rw,
            fanout: 4,
            rw_length: length,
            rw_restart: restart,
            rw_walks: walks,
        };
        for (s, hand_row) in hand.iter().enumerate() {
            let expected = rw_expected(&p_mat, s, length, restart);
            if length == 2 {
                for (e, h) in expected.iter().zip(hand_row) {
                    ensure((e - h).abs() < 1e-12, || {
                        format!("transition oracle disagrees with hand row {s}")
                    })?;
                }
            }
            let mut freq = [0.0; 4];
            for (t, c) in rw_visit_counts(
                &chain,
                s as VertexId,
                &cfg,
                &VariateSource::plain(31 + s as u64),
            ) {
                freq[t as usize] = c as f64 / walks as f64;
            }
            for t in (0..4).filter(|&t| t != s) {
                let dev = (freq[t] - expected[t]).abs();
                worst = worst.max(dev);
                ensure(dev <= 0.03, || {
                    format!(
                        "RW o={length} p={restart} s={s} t={t}: {:.4} vs {:.4}",
                        freq[t], expected[t]
                    )
                })?;
            }
        }
    }
    Ok(format!(
        "NS chi-square {}; LABOR-0 predicate exact on {} destinations; RW max deviation {worst:.4}",
        ns_notes.join(", "),
        block.num_dst()
    ))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let eps = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let num_dst = rng.random_range(1..=4usize);
        let dst: Vec<VertexId> = (0..num_dst as VertexId).collect();
        let src: Vec<VertexId> = (0..4).collect();
        let num_edges = rng.random_range(1..=8usize);
        let edges: Vec<(u32, u32)> = (0..num_edges)
            .map(|_| {
                (
                    rng.random_range(0..4u32),
                    rng.random_range(0..num_dst as u32),
                )
            })
            .collect();
        let block = lib(BipartiteBlock::from_parts(0, dst, src.clone(), edges))?;
        let (d_in, d_out) = (rng.random_range(1..=4usize), rng.random_range(1..=4usize));
        let mut normal = |rows: usize, cols: usize| {
            Array2::from_shape_simple_fn((rows, cols), || {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                (-2.0 * (1.0 - u).ln()).sqrt() * (std::f64::consts::TAU * v).cos()
            })
        };
        let h = normal(4, d_in);
        let w = normal(d_in, d_out);
        let upstream = normal(num_dst, d_out);
        let act = if trial % 2 == 0 {
            Activation::Tanh
        } else {
            Activation::Identity
        };
        let objective = |h: &Array2<f64>, w: &Array2<f64>| -> Result<f64, String> {
            let fm = lib(FeatureMatrix::new(src.clone(), h.clone()))?;
            Ok((lib(gcn_forward(&block, &fm, w, act))?.values() * &upstream).sum())
        };
        let fm = lib(FeatureMatrix::new(src.clone(), h.clone()))?;
        let (gh, gw) = lib(gcn_backward(&block, &fm, &w, act, &upstream))?;
        for idx in ndarray::indices(h.raw_dim()) {
            let (mut plus, mut minus) = (h.clone(), h.clone());
            plus[idx] += eps;
            minus[idx] -= eps;
            let fd = (objective(&plus, &w)? - objective(&minus, &w)?) / (2.0 * eps);
            worst = worst.max(rel(fd, gh[idx]));
        }
        for idx in ndarray::indices(w.raw_dim()) {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus[idx] += eps;
            minus[idx] -= eps;
            let fd = (objective(&h, &plus)? - objective(&h, &minus)?) / (2.0 * eps);
            worst = worst.max(rel(fd, gw[idx]));
        }
    }
    ensure(worst <= 1e-4, || {
        format!("max relative error {worst:.2e} exceeds 1e-4")
    })?;
    Ok(format!("20 random blocks, max relative error {worst:.2e}"))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let bench = benchmark_graph();
    println!(
        "benchmark graph: {} vertices, {} edges, max degree {}",
        bench.num_vertices(),
        bench.num_edges(),
        bench.max_degree()
    );
    let curves = RefCell::new(Vec::new());
    let criteria: Vec<Criterion<'_>> = vec![
        ("exact identities on small graphs", Box::new(criterion_1)),
        (
            "work per seed nonincreasing in batch size",
            Box::new(|| criterion_2(&bench, &curves)),
        ),
        (
            "expected input layer concave in batch size",
            Box::new(|| criterion_3(&curves)),
        ),
        ("cooperative exactness", Box::new(|| criterion_4(&bench))),
        (
            "cooperative work reduction",
            Box::new(|| criterion_5(&bench)),
        ),
        ("cross-edge ratio", Box::new(|| criterion_6(&bench))),
        (
            "dependent-batch cache locality",
            Box::new(|| criterion_7(&bench)),
        ),
        ("smoothed variates", Box::new(|| criterion_8(&bench))),
        ("sampler conformance", Box::new(|| criterion_9(&bench))),
        ("GCN backward vs finite differences", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
