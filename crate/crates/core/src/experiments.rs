//! Seeded experiment harness.
//!
//! Every experiment is a sweep of one configuration key over a grid of
//! values. For each seed the harness draws `k_patterns` random patterns,
//! writes them in order into a fresh store and recalls every one of them at
//! each grid point. A store is only rebuilt when the grid key changes
//! something that writing depends on, so sweeps over cue strength or cue
//! noise probe a single store per seed.
//!
//! Seeds are independent jobs and run on a dedicated thread pool. Every
//! random stream is derived from the seed and the job coordinates, so
//! reports are identical across runs and thread counts apart from the
//! wall-clock columns.

use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{new_field, InitMode};
use crate::io::{Provenance, ReportRow};
use crate::memory::{crosstalk_matrix, mean_abs_crosstalk, MemoryStore, NetParams};
use crate::pattern::Pattern;
use crate::{rng_from_seed, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Overprinting,
    NoiseSweep,
    ThresholdSweep,
    SizeSweep,
    GammaSweep,
    /// Sweep of an arbitrary configuration key.
    Sweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Overprinting,
        ExperimentKind::NoiseSweep,
        ExperimentKind::ThresholdSweep,
        ExperimentKind::SizeSweep,
        ExperimentKind::GammaSweep,
        ExperimentKind::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Overprinting => "overprinting",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::ThresholdSweep => "threshold_sweep",
            ExperimentKind::SizeSweep => "size_sweep",
            ExperimentKind::GammaSweep => "gamma_sweep",
            ExperimentKind::Sweep => "sweep",
        }
    }

    /// Config key swept by default.
    pub fn default_param(self) -> Option<&'static str> {
        match self {
            ExperimentKind::Overprinting | ExperimentKind::NoiseSweep => Some("experiment.noise"),
            ExperimentKind::ThresholdSweep => Some("recall.cue_strength"),
            ExperimentKind::SizeSweep => Some("lattice.size"),
            ExperimentKind::GammaSweep => Some("dynamics.gamma"),
            ExperimentKind::Sweep => None,
        }
    }

    /// Kind implied by sweeping `param` (short names accepted).
    pub fn for_param(param: &str) -> (ExperimentKind, String) {
        let key = match param {
            "noise" => "experiment.noise",
            "cue_strength" | "c" => "recall.cue_strength",
            "size" | "L" => "lattice.size",
            "gamma" => "dynamics.gamma",
            other => other,
        };
        let kind = match key {
            "experiment.noise" => ExperimentKind::NoiseSweep,
            "recall.cue_strength" => ExperimentKind::ThresholdSweep,
            "lattice.size" => ExperimentKind::SizeSweep,
            "dynamics.gamma" => ExperimentKind::GammaSweep,
            _ => ExperimentKind::Sweep,
        };
        (kind, key.to_string())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation("experiment", format!("unknown kind `{s}`")))
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(skip)]
    pub config: RunConfig,
    pub k_patterns: usize,
    pub seeds: Vec<u64>,
    pub grid: Grid,
    /// Worker threads; 0 picks the rayon default.
    pub jobs: usize,
}

impl ExperimentSpec {
    /// Spec with the kind's default grid and `n_seeds` consecutive seeds
    /// starting at `base_seed`.
    pub fn new(kind: ExperimentKind, config: RunConfig, base_seed: u64) -> Result<Self> {
        let param = kind
            .default_param()
            .ok_or_else(|| Error::validation("sweep", "a generic sweep needs an explicit parameter"))?;
        let values = match kind {
            ExperimentKind::Overprinting => vec![0.0, config.experiment.noise],
            ExperimentKind::NoiseSweep => vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.4],
            ExperimentKind::ThresholdSweep => (0..=10).map(|i| f64::from(i) / 5.0).collect(),
            ExperimentKind::SizeSweep => vec![6.0, 10.0, 20.0],
            ExperimentKind::GammaSweep => vec![0.0, 0.1, 0.2, 0.5, 1.0],
            ExperimentKind::Sweep => unreachable!(),
        };
        Self::with_grid(kind, config, base_seed, param, values)
    }

    pub fn with_grid(
        kind: ExperimentKind,
        config: RunConfig,
        base_seed: u64,
        param: &str,
        values: Vec<f64>,
    ) -> Result<Self> {
        let seeds = (0..config.experiment.n_seeds as u64).map(|i| base_seed.wrapping_add(i)).collect();
        let spec = ExperimentSpec {
            kind,
            k_patterns: config.experiment.k_patterns,
            config,
            seeds,
            grid: Grid { param: param.to_string(), values },
            jobs: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::validation("seeds", "must not be empty"));
        }
        if self.k_patterns == 0 {
            return Err(Error::validation("experiment.k_patterns", "must be >= 1"));
        }
        if self.grid.values.is_empty() || self.grid.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("grid", "values must be finite and non-empty"));
        }
        if self.kind == ExperimentKind::GammaSweep && !self.grid.values.contains(&0.0) {
            return Err(Error::validation("grid", "a gamma sweep must include 0"));
        }
        for &v in &self.grid.values {
            self.config_at(v)?;
        }
        Ok(())
    }

    fn config_at(&self, value: f64) -> Result<RunConfig> {
        self.config.with_override(&self.grid.param, &format_value(value))
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Outcome of recalling one stored pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryOutcome {
    pub index: usize,
    /// Whether the pattern made it into the store.
    pub stored: bool,
    pub selected: Option<usize>,
    /// Probe overlap of the recalled state with this memory.
    pub overlap: Option<f64>,
    /// Code of the stored record; `None` if the write did not persist.
    pub m_code: Option<f64>,
    pub success: bool,
    /// Failure reported by recall, if any.
    pub error: Option<String>,
    /// Order parameter along the recall run.
    pub m_trajectory: Vec<f64>,
    pub wall_ms: f64,
}

/// Results for one (seed, grid point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub seed: u64,
    pub grid_index: usize,
    pub grid_value: f64,
    /// Fraction of patterns correctly selected.
    pub retrieval_accuracy: f64,
    pub first_written_success: bool,
    pub memories: Vec<MemoryOutcome>,
    pub crosstalk_mean: f64,
    pub writes_attempted: usize,
    pub writes_persisted: usize,
    pub mean_fidelity: f64,
    pub min_persistence_overlap: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedAudit {
    pub seed: u64,
    pub writes: usize,
    pub recalls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub value: f64,
    pub n_seeds: usize,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub first_written_rate: f64,
    pub persistence_rate: f64,
    pub mean_fidelity: f64,
    pub mean_crosstalk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub config: String,
    pub records: Vec<PointRecord>,
    pub audit: Vec<SeedAudit>,
    pub wall_ms: f64,
}

/// JSON summary written next to the CSV report.
#[derive(Debug, Clone, Serialize)]
pub struct Summary<'a> {
    pub provenance: Provenance,
    pub kind: ExperimentKind,
    pub grid_param: &'a str,
    pub config: &'a str,
    pub points: Vec<PointSummary>,
    /// Threshold sweeps: first cue strength with mean accuracy above 0.5.
    pub empirical_threshold: Option<f64>,
    /// Gamma sweeps: grid values where most writes failed to persist.
    pub persistence_failure_dominant: Vec<f64>,
    /// Number of grid steps where the headline rate decreases.
    pub monotone_violations: usize,
    pub audit: &'a [SeedAudit],
    pub records: &'a [PointRecord],
}

pub fn run_overprinting(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::Overprinting)?;
    run_experiment(spec)
}

pub fn run_noise_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::NoiseSweep)?;
    run_experiment(spec)
}

pub fn run_threshold_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::ThresholdSweep)?;
    run_experiment(spec)
}

pub fn run_size_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::SizeSweep)?;
    run_experiment(spec)
}

pub fn run_gamma_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    expect_kind(spec, ExperimentKind::GammaSweep)?;
    run_experiment(spec)
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::validation("experiment", format!("expected a {kind} spec, got {}", spec.kind)));
    }
    Ok(())
}

/// Run any spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let configs = spec.grid.values.iter().map(|&v| spec.config_at(v)).collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::validation("jobs", e.to_string()))?;
    let start = Instant::now();
    let per_seed: Vec<Result<(Vec<PointRecord>, SeedAudit)>> =
        pool.install(|| spec.seeds.par_iter().map(|&seed| run_seed(spec, &configs, seed)).collect());

    let mut records = Vec::new();
    let mut audit = Vec::new();
    for r in per_seed {
        let (points, a) = r?;
        records.extend(points);
        audit.push(a);
    }
    records.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.grid_index.cmp(&b.grid_index)));
    audit.sort_by_key(|a| a.seed);
    Ok(ExperimentReport {
        spec: spec.clone(),
        config: spec.config.echo(),
        records,
        audit,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// splitmix64 finalizer, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, tags: &[u64]) -> SimRng {
    rng_from_seed(tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ t)))
}

struct BuiltStore {
    key: (crate::lattice::LatticeConfig, NetParams, usize),
    store: MemoryStore,
    patterns: Vec<Pattern>,
    record_of: Vec<Option<usize>>,
    fidelities: Vec<f64>,
    min_persistence: f64,
}

fn build_store(cfg: &RunConfig, k: usize, seed: u64) -> Result<BuiltStore> {
    let size = cfg.lattice.size();
    let mut pattern_rng = stream(seed, &[1, size as u64]);
    let patterns: Vec<Pattern> = (0..k).map(|_| Pattern::random(size, &mut pattern_rng)).collect();
    let mut rng = stream(seed, &[2]);
    let mut store = MemoryStore::new(cfg.lattice, cfg.params)?;
    let mut field = new_field(cfg.lattice, InitMode::NormalRandom, rng.next_u64())?;
    let mut record_of = Vec::with_capacity(k);
    let mut fidelities = Vec::with_capacity(k);
    let mut min_persistence = f64::INFINITY;
    for p in &patterns {
        let outcome = store.try_write(p, &field, &mut rng)?;
        fidelities.push(outcome.fidelity);
        min_persistence = min_persistence.min(outcome.persistence_overlap);
        if outcome.persisted {
            record_of.push(Some(store.len()));
            store.commit(&outcome)?;
            field = outcome.field;
        } else {
            record_of.push(None);
        }
    }
    Ok(BuiltStore { key: store_key(cfg, k), store, patterns, record_of, fidelities, min_persistence })
}

/// What a store depends on: everything except the recall settings.
fn store_key(cfg: &RunConfig, k: usize) -> (crate::lattice::LatticeConfig, NetParams, usize) {
    let mut params = cfg.params;
    params.recall = Default::default();
    (cfg.lattice, params, k)
}

fn run_seed(spec: &ExperimentSpec, configs: &[RunConfig], seed: u64) -> Result<(Vec<PointRecord>, SeedAudit)> {
    let k = spec.k_patterns;
    let mut built: Option<BuiltStore> = None;
    let mut audit = SeedAudit { seed, writes: 0, recalls: 0 };
    let mut points = Vec::with_capacity(configs.len());
    for (gi, (cfg, &value)) in configs.iter().zip(&spec.grid.values).enumerate() {
        let point_start = Instant::now();
        if built.as_ref().is_none_or(|b| b.key != store_key(cfg, k)) {
            built = Some(build_store(cfg, k, seed)?);
            audit.writes += k;
        }
        let b = built.as_ref().expect("store built above");
        let mut memories = Vec::with_capacity(k);
        for (mi, pattern) in b.patterns.iter().enumerate() {
            let mut rng = stream(seed, &[3, gi as u64, mi as u64]);
            let cue = pattern.with_flips(cfg.experiment.noise, &mut rng);
            let t = Instant::now();
            let mut outcome = MemoryOutcome {
                index: mi,
                stored: b.record_of[mi].is_some(),
                selected: None,
                overlap: None,
                m_code: b.record_of[mi].map(|r| b.store.records()[r].code.value),
                success: false,
                error: None,
                m_trajectory: Vec::new(),
                wall_ms: 0.0,
            };
            match (b.record_of[mi], b.store.is_empty()) {
                (_, true) => outcome.error = Some(Error::EmptyStore.to_string()),
                (target, false) => {
                    audit.recalls += 1;
                    match b.store.recall(&cue, &cfg.params.recall, &mut rng) {
                        Ok(r) => {
                            outcome.selected = Some(r.selected);
                            outcome.overlap = target.map(|t| r.overlaps[t]);
                            outcome.success = target == Some(r.selected);
                            outcome.m_trajectory = r.trajectory.m_values.iter().map(|m| m.value).collect();
                        }
                        Err(e @ (Error::BelowThreshold { .. } | Error::Ambiguous { .. })) => {
                            outcome.error = Some(e.to_string());
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            outcome.wall_ms = t.elapsed().as_secs_f64() * 1e3;
            memories.push(outcome);
        }
        let hits = memories.iter().filter(|m| m.success).count();
        points.push(PointRecord {
            seed,
            grid_index: gi,
            grid_value: value,
            retrieval_accuracy: hits as f64 / k as f64,
            first_written_success: memories[0].success,
            memories,
            crosstalk_mean: mean_abs_crosstalk(&crosstalk_matrix(&b.store)),
            writes_attempted: k,
            writes_persisted: b.record_of.iter().flatten().count(),
            mean_fidelity: b.fidelities.iter().sum::<f64>() / k as f64,
            min_persistence_overlap: b.min_persistence,
            wall_ms: point_start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok((points, audit))
}

impl ExperimentReport {
    /// Aggregates per grid point, in grid order.
    pub fn point_summaries(&self) -> Vec<PointSummary> {
        self.spec
            .grid
            .values
            .iter()
            .enumerate()
            .map(|(gi, &value)| {
                let pts: Vec<&PointRecord> = self.records.iter().filter(|r| r.grid_index == gi).collect();
                let n = pts.len().max(1) as f64;
                let mean = |f: &dyn Fn(&PointRecord) -> f64| pts.iter().map(|p| f(p)).sum::<f64>() / n;
                let writes: usize = pts.iter().map(|p| p.writes_attempted).sum();
                let persisted: usize = pts.iter().map(|p| p.writes_persisted).sum();
                PointSummary {
                    value,
                    n_seeds: pts.len(),
                    mean_accuracy: mean(&|p| p.retrieval_accuracy),
                    min_accuracy: pts.iter().map(|p| p.retrieval_accuracy).fold(f64::INFINITY, f64::min),
                    first_written_rate: mean(&|p| f64::from(u8::from(p.first_written_success))),
                    persistence_rate: if writes == 0 { 0.0 } else { persisted as f64 / writes as f64 },
                    mean_fidelity: mean(&|p| p.mean_fidelity),
                    mean_crosstalk: mean(&|p| p.crosstalk_mean),
                }
            })
            .collect()
    }

    /// Rate the monotonicity statistic is computed on: persistence for gamma
    /// sweeps, retrieval accuracy otherwise.
    fn headline(&self, points: &[PointSummary]) -> Vec<f64> {
        match self.spec.kind {
            ExperimentKind::GammaSweep => points.iter().map(|p| p.persistence_rate).collect(),
            _ => points.iter().map(|p| p.mean_accuracy).collect(),
        }
    }

    pub fn summary(&self, provenance: Provenance) -> Summary<'_> {
        let points = self.point_summaries();
        let headline = self.headline(&points);
        let empirical_threshold = match self.spec.kind {
            ExperimentKind::ThresholdSweep => points.iter().find(|p| p.mean_accuracy > 0.5).map(|p| p.value),
            _ => None,
        };
        let persistence_failure_dominant = match self.spec.kind {
            ExperimentKind::GammaSweep => points.iter().filter(|p| p.persistence_rate < 0.5).map(|p| p.value).collect(),
            _ => Vec::new(),
        };
        Summary {
            provenance,
            kind: self.spec.kind,
            grid_param: &self.spec.grid.param,
            config: &self.config,
            monotone_violations: monotone_violations(&headline),
            points,
            empirical_threshold,
            persistence_failure_dominant,
            audit: &self.audit,
            records: &self.records,
        }
    }

    /// One row per seed, grid point and memory.
    pub fn rows(&self) -> Vec<ReportRow> {
        self.records
            .iter()
            .flat_map(|p| {
                p.memories.iter().map(move |m| ReportRow {
                    kind: self.spec.kind.name().to_string(),
                    seed: p.seed,
                    grid_param: self.spec.grid.param.clone(),
                    grid_value: p.grid_value,
                    memory_index: m.index,
                    selected: m.selected,
                    overlap: m.overlap,
                    m_code: m.m_code,
                    success: m.success,
                    wall_ms: m.wall_ms,
                })
            })
            .collect()
    }

    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> ExperimentReport {
        let mut out = self.clone();
        out.wall_ms = 0.0;
        for p in &mut out.records {
            p.wall_ms = 0.0;
            for m in &mut p.memories {
                m.wall_ms = 0.0;
            }
        }
        out
    }
}

/// Number of adjacent grid steps where `rates` decreases.
pub fn monotone_violations(rates: &[f64]) -> usize {
    rates.windows(2).filter(|w| w[1] < w[0]).count()
}
