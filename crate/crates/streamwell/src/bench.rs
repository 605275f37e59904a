//! Per-timestep scoring cost as the number of concurrent streams grows.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use streamwell_core::embedding::ConceptEmbeddings;
use streamwell_core::simulation::concept_name;
use streamwell_core::{ConceptLexicon, EmbeddingTable, Error, PreparedQuery, Query, RetrievalMethod, Retriever};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub concepts: usize,
    /// Number of terms in the benchmark query.
    pub terms: usize,
    pub reps: usize,
    /// Timesteps timed together in one repetition.
    pub steps_per_rep: usize,
    pub method: RetrievalMethod,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_list: vec![100, 200],
            concepts: 1000,
            terms: 2,
            reps: 15,
            steps_per_rep: 20,
            method: RetrievalMethod::new(streamwell_core::MethodKind::Well).with_m(25),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub concepts: usize,
    pub terms: usize,
    pub reps: usize,
    pub method: String,
    /// Median wall-clock seconds to update all streams and rank them for
    /// one query at one timestep.
    pub median_step_seconds: f64,
    pub min_step_seconds: f64,
    pub max_step_seconds: f64,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str =
        "n,concepts,terms,reps,method,median_step_seconds,min_step_seconds,max_step_seconds";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{:e}",
            self.n,
            self.concepts,
            self.terms,
            self.reps,
            self.method,
            self.median_step_seconds,
            self.min_step_seconds,
            self.max_step_seconds
        )
    }
}

fn random_softmax(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    // Peaked like a classifier output: a few dominant concepts.
    let mut v: Vec<f64> = (0..c).map(|_| rng.gen::<f64>().powi(8)).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
    v
}

fn bench_query(cfg: &BenchConfig, rng: &mut ChaCha8Rng) -> Result<PreparedQuery, Error> {
    let lexicon = ConceptLexicon::new((0..cfg.concepts).map(concept_name))?;
    let dim = 32;
    let mut table = EmbeddingTable::new(dim)?;
    let mut v = vec![0.0; dim];
    let terms: Vec<String> = (0..cfg.terms).map(|i| format!("term{i}")).collect();
    for word in lexicon.names().iter().chain(&terms) {
        v.iter_mut().for_each(|x| *x = rng.gen::<f64>() - 0.5);
        table.insert(word, &v)?;
    }
    let query = Query::parse(&terms.join(" "))?;
    let (similarity, _) = ConceptEmbeddings::new(&table, &lexicon).similarity(&query)?;
    Ok(PreparedQuery::new(query.normalized(), similarity))
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
    if cfg.n_list.is_empty() || cfg.n_list.contains(&0) {
        return Err(Error::InvalidParameter("stream counts must be >= 1".into()));
    }
    if cfg.concepts == 0 || cfg.terms == 0 || cfg.reps == 0 || cfg.steps_per_rep == 0 {
        return Err(Error::InvalidParameter(
            "concepts, terms, reps and steps must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let query = bench_query(cfg, &mut rng)?;
    let pool: Vec<Vec<f64>> = (0..64).map(|_| random_softmax(&mut rng, cfg.concepts)).collect();
    let warmup = 5;
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let ids: Vec<String> = (0..n).map(|i| format!("s{i:05}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let mut retriever = Retriever::new(cfg.method.clone(), cfg.concepts, &id_refs, vec![query.clone()])?;
        let live: Vec<usize> = (0..n).collect();
        let mut ranked = Vec::with_capacity(n);
        let mut t = 0usize;
        let mut step = |retriever: &mut Retriever, t: usize| -> Result<(), Error> {
            for s in 0..n {
                retriever.observe(s, t, &pool[(s * 31 + t) % pool.len()])?;
            }
            retriever.rank(0, &live, &mut ranked)
        };
        for _ in 0..warmup {
            step(&mut retriever, t)?;
            t += 1;
        }
        let mut times = Vec::with_capacity(cfg.reps);
        for _ in 0..cfg.reps {
            let start = Instant::now();
            for _ in 0..cfg.steps_per_rep {
                step(&mut retriever, t)?;
                t += 1;
            }
            times.push(start.elapsed().as_secs_f64() / cfg.steps_per_rep as f64);
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            n,
            concepts: cfg.concepts,
            terms: cfg.terms,
            reps: cfg.reps,
            method: cfg.method.kind.to_string(),
            median_step_seconds: times[times.len() / 2],
            min_step_seconds: times[0],
            max_step_seconds: times[times.len() - 1],
        });
    }
    Ok(rows)
}
