//! Writing and recalling memories.
//!
//! A memory is a recorded ground-state configuration of the net together with
//! its order parameter (the memory's code). Records are kept as separate
//! snapshots and never modified once appended, so a later write cannot
//! overprint an earlier one. Shared Hebbian weights and the recall dynamics
//! are where memories still interact.
//!
//! Both writing and recalling run the same hybrid loop. For each annealing
//! rung the field is evolved under the input, its `|psi_u|^2 - |psi_d|^2`
//! sign is read off as the unit states, the units get heat-bath sweeps at the
//! rung temperature, and the field is then polarized to the updated unit
//! states. Each unit also feels its own field magnetization through
//! `self_feedback`, which is what lets a written state survive once the input
//! is removed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::annealing::{energy, glauber_sweep, AnnealSchedule, SpinState, Weights};
use crate::dynamics::{Connectivity, DynamicsParams, ExternalField, Propagator, Trajectory};
use crate::error::{Error, Result};
use crate::field::{align_to_pattern, binarize, new_field, DoubletField, InitMode, OrderParameter};
use crate::lattice::LatticeConfig;
use crate::pattern::Pattern;

/// Minimum overlap with the snapshot after the input is removed.
pub const PERSISTENCE_OVERLAP: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WriteParams {
    /// Input field amplitude.
    pub b0: f64,
    /// Hebbian learning rate.
    pub eta: f64,
    pub w_max: f64,
}

impl Default for WriteParams {
    fn default() -> Self {
        WriteParams { b0: 1.0, eta: 0.01, w_max: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecallParams {
    /// Cue field amplitude in units of `b0`.
    pub cue_strength: f64,
    /// Minimum cue energy per site `cue_strength * b0` needed to start recall.
    pub eps_thr: f64,
    /// Minimum lead of the best probe overlap over the runner-up.
    pub ambiguity_margin: f64,
}

impl Default for RecallParams {
    fn default() -> Self {
        RecallParams { cue_strength: 1.0, eps_thr: 0.1, ambiguity_margin: 0.05 }
    }
}

impl RecallParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cue_strength.is_finite() && self.cue_strength >= 0.0) {
            return Err(Error::validation("recall.cue_strength", "must be >= 0"));
        }
        if !(self.eps_thr.is_finite() && self.eps_thr >= 0.0) {
            return Err(Error::validation("recall.eps_thr", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.ambiguity_margin) {
            return Err(Error::validation("recall.ambiguity_margin", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Everything the write and recall loops need besides the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetParams {
    pub dynamics: DynamicsParams,
    pub anneal: AnnealSchedule,
    pub write: WriteParams,
    pub recall: RecallParams,
    /// Coupling of a unit to its own field magnetization.
    pub self_feedback: f64,
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            dynamics: DynamicsParams::default(),
            anneal: AnnealSchedule::default(),
            write: WriteParams::default(),
            recall: RecallParams::default(),
            self_feedback: 0.15,
        }
    }
}

impl NetParams {
    pub fn validate(&self) -> Result<()> {
        self.dynamics.validate()?;
        if self.dynamics.n_steps == 0 {
            return Err(Error::validation("dynamics.n_steps", "must be >= 1"));
        }
        self.anneal.validate()?;
        let w = &self.write;
        if !(w.b0.is_finite() && w.b0 > 0.0) {
            return Err(Error::validation("write.b0", "must be positive"));
        }
        if !(w.eta.is_finite() && w.eta >= 0.0) {
            return Err(Error::validation("write.eta", "must be >= 0"));
        }
        if !(w.w_max.is_finite() && w.w_max >= 0.0) {
            return Err(Error::validation("write.w_max", "must be >= 0"));
        }
        self.recall.validate()?;
        if !(self.self_feedback.is_finite() && self.self_feedback >= 0.0) {
            return Err(Error::validation("hybrid.self_feedback", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRecord {
    /// Order parameter of the snapshot.
    pub code: OrderParameter,
    pub snapshot: Pattern,
    /// Probe copy read during recall; equal to `snapshot` when written.
    pub mirror: Pattern,
    pub written_at: usize,
}

impl MemoryRecord {
    pub fn new(snapshot: Pattern, written_at: usize) -> Self {
        MemoryRecord { code: OrderParameter::of_pattern(&snapshot), mirror: snapshot.clone(), snapshot, written_at }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryStore {
    lattice: LatticeConfig,
    params: NetParams,
    weights: Weights,
    records: Vec<MemoryRecord>,
}

/// Result of a write attempt that has not been committed to the store.
#[derive(Debug, Clone)]
pub struct WriteOutcome {
    pub record: MemoryRecord,
    /// Net field after input removal.
    pub field: DoubletField,
    pub weights: Weights,
    pub persisted: bool,
    pub persistence_overlap: f64,
    /// Fraction of sites where the snapshot agrees with the written pattern.
    pub fidelity: f64,
    pub trajectory: Trajectory,
    pub energy_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RecallResult {
    pub selected: usize,
    pub code: OrderParameter,
    pub pattern: Pattern,
    /// Probe overlap of the annealed state with every record's mirror.
    pub overlaps: Vec<f64>,
    pub trajectory: Trajectory,
    /// Net field after condensation into the selected memory.
    pub field: DoubletField,
}

struct HybridRun {
    field: DoubletField,
    spins: SpinState,
    trajectory: Trajectory,
    energy_trace: Vec<f64>,
}

impl MemoryStore {
    pub fn new(lattice: LatticeConfig, params: NetParams) -> Result<Self> {
        params.validate()?;
        Ok(MemoryStore { weights: Weights::zeros(&lattice), lattice, params, records: Vec::new() })
    }

    /// Rebuild a store from its parts, checking record invariants.
    pub fn from_parts(
        lattice: LatticeConfig,
        params: NetParams,
        weights: Weights,
        records: Vec<MemoryRecord>,
    ) -> Result<Self> {
        params.validate()?;
        if weights.bonds().n_sites() != lattice.n_sites() {
            return Err(Error::Shape { expected: lattice.size(), found: "weights for another lattice".into() });
        }
        for (i, r) in records.iter().enumerate() {
            r.snapshot.check_size(lattice.size())?;
            r.mirror.check_size(lattice.size())?;
            if r.written_at != i {
                return Err(Error::validation("records", format!("record {i} has written_at {}", r.written_at)));
            }
            if r.code != OrderParameter::of_pattern(&r.snapshot) {
                return Err(Error::validation("records", format!("record {i} code does not match its snapshot")));
            }
        }
        Ok(MemoryStore { lattice, params, weights, records })
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    pub fn params(&self) -> &NetParams {
        &self.params
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Weiss constant implied by the weights: mean over sites of each site's
    /// mean connection strength.
    pub fn derived_gamma(&self) -> f64 {
        self.weights.mean_connection_strength()
    }

    /// Run a write without touching the store.
    pub fn try_write<R: Rng + ?Sized>(&self, pattern: &Pattern, field: &DoubletField, rng: &mut R) -> Result<WriteOutcome> {
        pattern.check_size(self.lattice.size())?;
        if field.config().size() != self.lattice.size() {
            return Err(Error::Shape {
                expected: self.lattice.size(),
                found: format!("{0}x{0} field", field.config().size()),
            });
        }
        let p = &self.params;
        let input = ExternalField::from_pattern(pattern, p.write.b0);
        let run = self.hybrid_anneal(field.clone(), &self.weights, &input, rng)?;

        let snapshot = run.spins.pattern();
        let fidelity = snapshot.agreement(pattern)?;
        let record = MemoryRecord::new(snapshot, self.records.len());

        let mut weights = self.weights.clone();
        weights.hebbian_update(&record.snapshot.spins(), p.write.eta, p.write.w_max);

        // Input removed: free evolution, then a settling pass at t_min.
        let zero = ExternalField::zeros(&self.lattice);
        let propagator = self.propagator(&weights)?;
        let free = propagator.advance(&run.field, &zero)?;
        let mut spins = SpinState::new(&self.lattice, binarize(&free).spins(), weights.clone())?;
        let bias = self.feedback_bias(&free, &zero);
        for _ in 0..p.anneal.sweeps_per_temp {
            glauber_sweep(&mut spins, &bias, p.dynamics.gamma, p.anneal.t_min, rng)?;
        }
        let settled = spins.pattern();
        let field = align_to_pattern(&free, &settled)?;
        let persistence_overlap = settled.overlap(&record.snapshot)?;

        Ok(WriteOutcome {
            record,
            field,
            weights,
            persisted: persistence_overlap >= PERSISTENCE_OVERLAP,
            persistence_overlap,
            fidelity,
            trajectory: run.trajectory,
            energy_trace: run.energy_trace,
        })
    }

    /// Append a write outcome produced by [`MemoryStore::try_write`] on the
    /// current store state.
    pub fn commit(&mut self, outcome: &WriteOutcome) -> Result<()> {
        if outcome.record.written_at != self.records.len() {
            return Err(Error::validation(
                "write",
                format!("outcome was computed for index {} but store holds {}", outcome.record.written_at, self.records.len()),
            ));
        }
        self.records.push(outcome.record.clone());
        self.weights = outcome.weights.clone();
        Ok(())
    }

    /// Record `pattern` as a new memory, starting from the net state `field`.
    /// Returns the new record and the net field after the input is removed.
    /// The store is left unchanged on error.
    pub fn write<R: Rng + ?Sized>(
        &mut self,
        pattern: &Pattern,
        field: &DoubletField,
        rng: &mut R,
    ) -> Result<(MemoryRecord, DoubletField)> {
        let outcome = self.try_write(pattern, field, rng)?;
        if !outcome.persisted {
            return Err(Error::PersistenceFailure { overlap: outcome.persistence_overlap, required: PERSISTENCE_OVERLAP });
        }
        self.commit(&outcome)?;
        Ok((outcome.record, outcome.field))
    }

    /// Recall the memory closest to `cue`.
    pub fn recall<R: Rng + ?Sized>(&self, cue: &Pattern, params: &RecallParams, rng: &mut R) -> Result<RecallResult> {
        if self.records.is_empty() {
            return Err(Error::EmptyStore);
        }
        params.validate()?;
        cue.check_size(self.lattice.size())?;

        let energy = params.cue_strength * self.params.write.b0;
        if energy < params.eps_thr {
            return Err(Error::BelowThreshold { energy, threshold: params.eps_thr });
        }

        let input = ExternalField::from_pattern(cue, energy);
        let start = new_field(self.lattice, InitMode::NormalRandom, rng.gen())?;
        let run = self.hybrid_anneal(start, &self.weights, &input, rng)?;

        let overlaps = self
            .records
            .iter()
            .map(|r| mirror_overlap(&run.spins, r))
            .collect::<Result<Vec<_>>>()?;
        let mut ranked: Vec<usize> = (0..overlaps.len()).collect();
        ranked.sort_by(|&a, &b| overlaps[b].abs().total_cmp(&overlaps[a].abs()).then(a.cmp(&b)));
        let best = ranked[0];
        let runner_up = ranked.get(1).map_or(0.0, |&k| overlaps[k].abs());
        let lead = overlaps[best].abs() - runner_up;
        if lead < params.ambiguity_margin {
            return Err(Error::Ambiguous { best, lead, margin: params.ambiguity_margin });
        }

        let record = &self.records[best];
        let field = new_field(self.lattice, InitMode::FromPattern(&record.snapshot), 0)?;
        Ok(RecallResult {
            selected: best,
            code: record.code,
            pattern: record.snapshot.clone(),
            overlaps,
            trajectory: run.trajectory,
            field,
        })
    }

    fn propagator(&self, weights: &Weights) -> Result<Propagator> {
        let connectivity = Connectivity::from_potential(&self.lattice, weights.site_potential())?;
        Propagator::new(self.lattice, self.params.dynamics, &connectivity)
    }

    /// Input field plus each unit's own field magnetization.
    fn feedback_bias(&self, field: &DoubletField, input: &ExternalField) -> ExternalField {
        let mut bias = input.clone();
        for (site, bz) in bias.bz.iter_mut().enumerate() {
            *bz += self.params.self_feedback * field.site_mz(site);
        }
        bias
    }

    fn hybrid_anneal<R: Rng + ?Sized>(
        &self,
        mut field: DoubletField,
        weights: &Weights,
        input: &ExternalField,
        rng: &mut R,
    ) -> Result<HybridRun> {
        let p = &self.params;
        let propagator = self.propagator(weights)?;
        let rung_time = p.dynamics.dt * p.dynamics.n_steps as f64;

        let mut trajectory = Trajectory::default();
        trajectory.record(0.0, &field);
        let mut spins = SpinState::new(&self.lattice, binarize(&field).spins(), weights.clone())?;
        let mut energy_trace = Vec::with_capacity(p.anneal.n_rungs());

        for (k, t) in p.anneal.temperatures().into_iter().enumerate() {
            field = propagator.advance(&field, input)?;
            spins.spins = binarize(&field).spins();
            let bias = self.feedback_bias(&field, input);
            let mut acc = 0.0;
            for _ in 0..p.anneal.sweeps_per_temp {
                glauber_sweep(&mut spins, &bias, p.dynamics.gamma, t, rng)?;
                acc += energy(&spins, &bias, p.dynamics.gamma);
            }
            energy_trace.push(acc / p.anneal.sweeps_per_temp as f64);
            field = align_to_pattern(&field, &spins.pattern())?;
            trajectory.record((k + 1) as f64 * rung_time, &field);
        }
        Ok(HybridRun { field, spins, trajectory, energy_trace })
    }
}

/// `q = (1/N) Σ s (2 mirror - 1)`.
pub fn mirror_overlap(state: &SpinState, record: &MemoryRecord) -> Result<f64> {
    record.mirror.check_size(state.size())?;
    let sum: i64 = state
        .spins
        .iter()
        .zip(record.mirror.bits())
        .map(|(&s, &m)| i64::from(s) * (2 * i64::from(m) - 1))
        .sum();
    Ok(sum as f64 / state.n_sites() as f64)
}

/// Pairwise snapshot overlaps; unit diagonal.
pub fn crosstalk_matrix(store: &MemoryStore) -> Vec<Vec<f64>> {
    let records = store.records();
    records
        .iter()
        .map(|a| {
            records
                .iter()
                .map(|b| a.snapshot.overlap(&b.snapshot).expect("records share the store lattice"))
                .collect()
        })
        .collect()
}

/// Mean absolute off-diagonal entry; zero for a single memory.
pub fn mean_abs_crosstalk(matrix: &[Vec<f64>]) -> f64 {
    let k = matrix.len();
    if k < 2 {
        return 0.0;
    }
    let total: f64 = (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| matrix[i][j].abs()).sum();
    total / (k * (k - 1)) as f64
}
