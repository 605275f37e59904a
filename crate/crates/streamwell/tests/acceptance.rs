//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamwell::bench::{run_bench, BenchConfig};
use streamwell::formats::embedding::{read_embedding_text, write_embedding_text};
use streamwell::formats::scores::{parse_frame_file, write_frame_file};
use streamwell_core::embedding::ConceptEmbeddings;
use streamwell_core::evaluation::{
    ap_at_t, evaluate, sweep_memory, tap, zap_events, zap_events_in, zap_precision, SweepResult,
    ZapEvent,
};
use streamwell_core::scoring::{rank_streams, score_instant};
use streamwell_core::simulation::{synth_generate, synthetic_embedding};
use streamwell_core::{
    EmbeddingTable, EvalMode, MemoryCandidate, MethodKind, PoolMode, PoolWindow, PreparedQuery,
    Query, RelevanceMatrix, RetrievalMethod, Retriever, ScoredStream, SimilarityVector, StreamSet,
    SynthSpec, WellState,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{what}: got {got}, want {want} (tol {tol})"))
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn softmax_stream(rng: &mut ChaCha8Rng, t: usize, c: usize) -> Vec<Vec<f64>> {
    (0..t)
        .map(|_| {
            let e: Vec<f64> = (0..c).map(|_| (6.0 * rng.gen::<f64>()).exp()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn metric_exactness() -> Outcome {
    let start = Instant::now();
    let r = ["A", "B", "C"];
    close(ap_at_t(&r, &["A"]).unwrap().unwrap(), 1.0, 1e-9, "AP{A}")?;
    close(ap_at_t(&r, &["B"]).unwrap().unwrap(), 0.5, 1e-9, "AP{B}")?;
    close(ap_at_t(&r, &["B", "C"]).unwrap().unwrap(), 7.0 / 12.0, 1e-9, "AP{B,C}")?;
    close(tap(&[Some(1.0), Some(0.5)], &[true, true]).unwrap(), 0.75, 1e-9, "TAP")?;
    close(
        tap(&[Some(1.0), None, Some(0.5)], &[true, false, true]).unwrap(),
        0.75,
        1e-9,
        "masked TAP",
    )?;
    let trace = zap_events(&["A", "A", "A"], &[true, true, false]).unwrap();
    ensure(
        trace.events == [ZapEvent::GoodZap, ZapEvent::RemainRelevant, ZapEvent::BadZap],
        || format!("zap events {:?}", trace.events),
    )?;
    close(zap_precision(&trace, &[true; 3]).unwrap(), 2.0 / 3.0, 1e-9, "ZP")?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("AP 0.5 and 7/12, TAP 0.75, ZP 2/3".into())
}

/// From-scratch unrolling of the well recurrence up to step `t`.
fn unrolled_well(frames: &[Vec<f64>], t: usize, m: usize, beta: f64) -> Vec<f64> {
    let a = (m - 1) as f64 / m as f64;
    (0..frames[0].len())
        .map(|i| {
            let (mut best, mut suffix, mut decay) = (0.0f64, 0.0f64, 1.0f64);
            for j in (0..=t).rev() {
                suffix += decay * (frames[j][i] / m as f64 - beta);
                decay *= a;
                best = best.max(suffix);
            }
            best
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn recurrence_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = 20;
    let frames = softmax_stream(&mut rng, 10_000, c);
    let beta = 1.0 / c as f64;
    let mut worst = 0.0f64;
    for m in [2, 25, 300] {
        let mut well = WellState::new(m, beta, c).unwrap();
        for (t, f) in frames.iter().enumerate() {
            well.update(f).unwrap();
            if t % 499 == 0 || t == frames.len() - 1 {
                worst = worst.max(max_diff(well.w(), &unrolled_well(&frames, t, m, beta)));
            }
        }
    }
    ensure(worst <= 1e-9, || format!("well deviates by {worst:e}"))?;

    let pool_frames = &frames[..1000];
    let mut worst_pool = 0.0f64;
    for m in [1, 4, 25, 200] {
        for mode in [PoolMode::Mean, PoolMode::Max] {
            let mut window = PoolWindow::bounded(m, mode, c).unwrap();
            for t in 0..pool_frames.len() {
                let got = window.update(&pool_frames[t]).unwrap().to_vec();
                let span = &pool_frames[(t + 1).saturating_sub(m)..=t];
                let want: Vec<f64> = (0..c)
                    .map(|i| match mode {
                        PoolMode::Mean => span.iter().map(|f| f[i]).sum::<f64>() / span.len() as f64,
                        PoolMode::Max => span.iter().map(|f| f[i]).fold(f64::MIN, f64::max),
                    })
                    .collect();
                worst_pool = worst_pool.max(max_diff(&got, &want));
            }
        }
    }
    ensure(worst_pool <= 1e-9, || format!("pooling deviates by {worst_pool:e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("well max diff {worst:.1e}, pooling max diff {worst_pool:.1e}"))
}

fn degeneracies() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = 30;
    let frames = softmax_stream(&mut rng, 500, c);
    let beta = 1.0 / c as f64;
    let mut mean = PoolWindow::bounded(1, PoolMode::Mean, c).unwrap();
    let mut max = PoolWindow::bounded(1, PoolMode::Max, c).unwrap();
    let mut well = WellState::new(1, beta, c).unwrap();
    for f in &frames {
        ensure(mean.update(f).unwrap() == &f[..], || "m=1 mean pooling differs from the frame".into())?;
        ensure(max.update(f).unwrap() == &f[..], || "m=1 max pooling differs from the frame".into())?;
        well.update(f).unwrap();
        let want: Vec<f64> = f.iter().map(|x| (x - beta).max(0.0)).collect();
        ensure(well.w() == &want[..], || "m=1 well differs from max(x - beta, 0)".into())?;
    }
    for m in [1, 5, 25, 1000] {
        let mut w = WellState::with_default_beta(m, c).unwrap();
        let uniform = vec![1.0 / c as f64; c];
        for _ in 0..5000 {
            w.update(&uniform).unwrap();
        }
        ensure(w.w().iter().all(|&v| v == 0.0), || format!("uniform input leaves mass in the m={m} well"))?;
    }
    Ok("m=1 pooling and welling exact; uniform input keeps the well at zero".into())
}

struct DriftSet {
    set: StreamSet,
    validation: Vec<PreparedQuery>,
    test: Vec<PreparedQuery>,
}

fn drift_set() -> DriftSet {
    let spec = SynthSpec {
        streams: 50,
        concepts: 50,
        frames: 3600,
        topic_min: 200,
        topic_max: 600,
        strength: 0.6,
        noise: 0.1,
        fps: 2.0,
        seed: 7,
    };
    let set = synth_generate(&spec).expect("drift set");
    let table = synthetic_embedding(set.lexicon()).expect("embedding");
    let concepts = ConceptEmbeddings::new(&table, set.lexicon());
    let (mut validation, mut test) = (Vec::new(), Vec::new());
    for (i, name) in set.lexicon().names().iter().enumerate() {
        let q = Query::parse(name).unwrap();
        let prepared = PreparedQuery::new(q.normalized(), concepts.similarity(&q).unwrap().0);
        if i % 5 == 0 {
            validation.push(prepared);
        } else {
            test.push(prepared);
        }
    }
    DriftSet { set, validation, test }
}

const SWEEP: [MemoryCandidate; 7] = [
    MemoryCandidate::Frames(1),
    MemoryCandidate::Frames(5),
    MemoryCandidate::Frames(15),
    MemoryCandidate::Frames(25),
    MemoryCandidate::Frames(50),
    MemoryCandidate::Frames(200),
    MemoryCandidate::Full,
];

fn sweep(d: &DriftSet, kind: MethodKind) -> SweepResult {
    sweep_memory(&d.set, &d.validation, &RetrievalMethod::new(kind), &SWEEP).expect("sweep")
}

fn long_stream_pattern(d: &DriftSet, well_sweep: &SweepResult, start: Instant) -> Outcome {
    let m_star = match well_sweep.m_star {
        MemoryCandidate::Frames(m) => m,
        MemoryCandidate::Full => d.set.horizon(),
    };
    let well = evaluate(
        &d.set,
        &RetrievalMethod::new(MethodKind::Well).with_m(m_star),
        &d.test,
        EvalMode::Both,
    )
    .expect("well evaluation");
    let full = evaluate(&d.set, &RetrievalMethod::new(MethodKind::FullMean), &d.test, EvalMode::Both)
        .expect("full-history evaluation");
    let (wt, wz) = (well.mean_tap.unwrap(), well.mean_zp.unwrap());
    let (ft, fz) = (full.mean_tap.unwrap(), full.mean_zp.unwrap());
    let detail = format!(
        "welling m*={m_star}: TAP {wt:.4} ZP {wz:.4}; full mean: TAP {ft:.4} ZP {fz:.4}; ratios {:.2} / {:.2}",
        wt / ft,
        wz / fz
    );
    ensure(wt >= 1.5 * ft && wz >= 1.5 * fz, || detail.clone())?;
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(detail)
}

fn interior(result: &SweepResult) -> Result<String, String> {
    let tap_of = |c: MemoryCandidate| result.rows.iter().find(|r| r.candidate == c).unwrap().mean_tap;
    let best = tap_of(result.m_star);
    let table: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("{}:{:.4}", r.candidate, r.mean_tap))
        .collect();
    let detail = format!("m*={} [{}]", result.m_star, table.join(" "));
    let ok = best > tap_of(MemoryCandidate::Frames(1)) && best > tap_of(MemoryCandidate::Full);
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn sweep_shape(well_sweep: &SweepResult, mean_sweep: &SweepResult) -> Outcome {
    let w = interior(well_sweep).map_err(|e| format!("welling: {e}"))?;
    let m = interior(mean_sweep).map_err(|e| format!("mean pooling: {e}"))?;
    Ok(format!("welling {w}; mean pooling {m}"))
}

fn ranking_invariances() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..10_000 {
        let c = rng.gen_range(1..40);
        let n = rng.gen_range(1..30);
        let s: Vec<f64> = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = SimilarityVector::new(s).unwrap();
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let reprs: Vec<Vec<f64>> = (0..n).map(|_| (0..c).map(|_| rng.gen::<f64>()).collect()).collect();
        let order = |sv: &SimilarityVector| -> Vec<String> {
            let scored = reprs
                .iter()
                .enumerate()
                .map(|(i, r)| ScoredStream::new(format!("s{i:02}"), score_instant(sv, r).unwrap()))
                .collect();
            rank_streams(scored).unwrap().into_iter().map(|x| x.stream).collect()
        };
        ensure(order(&s) == order(&s.scaled(scale)), || format!("trial {trial}: scaling by {scale} reorders"))?;
    }

    let (c, n, steps) = (16, 8, 1000);
    let streams: Vec<_> = (0..n).map(|_| softmax_stream(&mut rng, steps, c)).collect();
    let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let queries: Vec<PreparedQuery> = (0..4)
        .map(|q| {
            let v = (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect();
            PreparedQuery::new(format!("q{q}"), SimilarityVector::new(v).unwrap())
        })
        .collect();
    let method = RetrievalMethod::new(MethodKind::MaxWell).with_m(10);
    let mut retriever = Retriever::new(method, c, &id_refs, queries).unwrap();
    let mut last = vec![f64::NEG_INFINITY; n * 4];
    for t in 0..steps {
        for (s, f) in streams.iter().enumerate() {
            retriever.observe(s, t, &f[t]).unwrap();
        }
        for q in 0..4 {
            for s in 0..n {
                let now = retriever.score(s, q).unwrap();
                ensure(now >= last[q * n + s], || format!("max-well score fell at t={t}"))?;
                last[q * n + s] = now;
            }
        }
    }
    Ok("10,000 scaling trials keep order; max-well scores non-decreasing".into())
}

/// Zap events written straight from the rules, independently of the library.
fn prose_zaps(watched: &[usize], relevant: impl Fn(usize, usize) -> bool) -> (Vec<u8>, usize, usize) {
    // 0 good zap, 1 bad zap, 2 stay relevant, 3 stay irrelevant
    let mut prev: (Option<usize>, bool) = (None, false);
    let mut events = Vec::with_capacity(watched.len());
    let (mut good, mut stay) = (0, 0);
    for (t, &s) in watched.iter().enumerate() {
        let rel = relevant(s, t);
        let event = if prev.0 != Some(s) || prev.1 != rel {
            if !prev.1 && rel {
                good += 1;
                0
            } else {
                1
            }
        } else if rel {
            stay += 1;
            2
        } else {
            3
        };
        events.push(event);
        prev = (Some(s), rel);
    }
    (events, good, stay)
}

fn code(e: ZapEvent) -> u8 {
    match e {
        ZapEvent::GoodZap => 0,
        ZapEvent::BadZap => 1,
        ZapEvent::RemainRelevant => 2,
        ZapEvent::RemainIrrelevant => 3,
    }
}

fn zap_oracle() -> Outcome {
    let mut checked = 0u64;
    for streams in 1..=4usize {
        for steps in 1..=6usize {
            let patterns = 1u32 << (streams * steps);
            let sequences = streams.pow(steps as u32);
            let exhaustive = patterns as usize * sequences <= 1 << 18;
            for bits in 0..patterns {
                let y: Vec<Vec<bool>> = (0..streams)
                    .map(|s| (0..steps).map(|t| bits >> (s * steps + t) & 1 == 1).collect())
                    .collect();
                let matrix = RelevanceMatrix::new(y.clone());
                let y_any: Vec<bool> = (0..steps).map(|t| y.iter().any(|r| r[t])).collect();
                let relevant_steps = y_any.iter().filter(|&&b| b).count();
                let indices: Vec<usize> = if exhaustive {
                    (0..sequences).collect()
                } else {
                    vec![(bits as usize).wrapping_mul(2_654_435_761) % sequences]
                };
                for mut index in indices {
                    let watched: Vec<usize> = (0..steps)
                        .map(|_| {
                            let s = index % streams;
                            index /= streams;
                            s
                        })
                        .collect();
                    let trace = zap_events_in(&watched, &matrix).unwrap();
                    let (events, good, stay) = prose_zaps(&watched, |s, t| y[s][t]);
                    let got: Vec<u8> = trace.events.iter().map(|&e| code(e)).collect();
                    ensure(got == events, || format!("watched {watched:?} y {y:?}: {got:?} vs {events:?}"))?;
                    if relevant_steps > 0 {
                        let zp = zap_precision(&trace, &y_any).unwrap();
                        let want = (good + stay) as f64 / relevant_steps as f64;
                        ensure(zp == want, || format!("ZP {zp} vs {want}"))?;
                    }
                    checked += 1;
                }
            }
        }
    }
    for steps in 2..=100usize {
        let mut flags = vec![false; steps];
        flags[0] = true;
        let trace = zap_events(&vec![0usize; steps], &flags).unwrap();
        close(zap_precision(&trace, &vec![true; steps]).unwrap(), 1.0 / steps as f64, 1e-12, "pathology ZP")?;
    }
    Ok(format!("{checked} (pattern, watched) cases match; relevant-once pathology scores 1/T"))
}

fn complexity() -> Outcome {
    let cfg = BenchConfig {
        n_list: vec![100, 200],
        concepts: 1000,
        terms: 2,
        reps: 21,
        steps_per_rep: 40,
        ..BenchConfig::default()
    };
    let rows = run_bench(&cfg).map_err(|e| e.to_string())?;
    let (t100, t200) = (rows[0].median_step_seconds, rows[1].median_step_seconds);
    let ratio = t200 / t100;
    let detail = format!(
        "C={} l={}: n=100 {:.1} us/step, n=200 {:.1} us/step, ratio {ratio:.2}",
        rows[0].concepts,
        rows[0].terms,
        t100 * 1e6,
        t200 * 1e6
    );
    ensure(ratio <= 2.5, || detail.clone())?;
    // Real time at 2 fps leaves half a second per timestep.
    ensure(t100 <= 0.5, || detail.clone())?;
    Ok(detail)
}

fn format_round_trips() -> Outcome {
    let spec = SynthSpec {
        streams: 5,
        concepts: 40,
        frames: 200,
        ..SynthSpec::default()
    };
    let set = synth_generate(&spec).map_err(|e| e.to_string())?;
    let c = set.lexicon().len();
    for s in set.streams() {
        let mut first = Vec::new();
        write_frame_file(s.id(), s.meta.fps, s.provenance, c, &s.frames, &mut first).unwrap();
        let parsed = parse_frame_file(&first[..], set.lexicon()).map_err(|e| e.to_string())?;
        let mut second = Vec::new();
        write_frame_file(&parsed.meta.stream_id, parsed.meta.fps, parsed.provenance, c, &parsed.frames, &mut second)
            .unwrap();
        ensure(first == second, || format!("score file of {} changed on round trip", s.id()))?;
        ensure(parsed.frames == s.frames, || format!("frames of {} changed", s.id()))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut table = EmbeddingTable::new(50).unwrap();
    let mut words: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
    words.shuffle(&mut rng);
    for w in &words {
        let v: Vec<f64> = (0..50).map(|_| rng.gen_range(-3.0..3.0)).collect();
        table.insert(w, &v).unwrap();
    }
    let mut first = Vec::new();
    write_embedding_text(&table, &mut first).unwrap();
    let (parsed, _) = read_embedding_text(&first[..]).map_err(|e| e.to_string())?;
    let mut second = Vec::new();
    write_embedding_text(&parsed, &mut second).unwrap();
    ensure(first == second, || "embedding file changed on round trip".into())?;
    ensure(parsed == table, || "embedding values changed".into())?;
    Ok(format!("{} score files and a {}x{} embedding table byte-identical", set.len(), table.len(), table.dim()))
}

fn report(n: usize, name: &str, outcome: Outcome, failures: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS criterion {n}: {name} ({detail})"),
        Err(detail) => {
            *failures += 1;
            println!("FAIL criterion {n}: {name} ({detail})");
        }
    }
}

fn main() -> ExitCode {
    let mut failures = 0;
    report(1, "metric exactness", metric_exactness(), &mut failures);
    report(2, "recurrence oracle", recurrence_oracle(), &mut failures);
    report(3, "degeneracies", degeneracies(), &mut failures);

    let start = Instant::now();
    let drift = drift_set();
    let well_sweep = sweep(&drift, MethodKind::Well);
    report(4, "long-stream pattern", long_stream_pattern(&drift, &well_sweep, start), &mut failures);
    let mean_sweep = sweep(&drift, MethodKind::MpMean);
    report(5, "memory sweep shape", sweep_shape(&well_sweep, &mean_sweep), &mut failures);

    report(6, "ranking invariances", ranking_invariances(), &mut failures);
    report(7, "zap accounting oracle", zap_oracle(), &mut failures);
    report(8, "complexity", complexity(), &mut failures);
    report(9, "format round trips", format_round_trips(), &mut failures);

    if failures == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
