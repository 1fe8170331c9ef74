//! Stochastic unit updates and simulated annealing.
//!
//! Units are spins `s = ±1` (on/off) coupled through non-negative weights on
//! nearest-neighbor bonds, an external field `b_z` and the Weiss mean field
//! `gamma * mean(s)`. The local field on a site is
//!
//! ```text
//! h_i = b_z(i) + gamma * mean(s) + Σ_j w_ij s_j
//! ```
//!
//! and the heat-bath update sets `s_i = +1` with probability
//! `fermi(-2 h_i, T) = 1 / (1 + exp(-2 h_i / T))`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::ExternalField;
use crate::error::{Error, Result};
use crate::lattice::{Bonds, LatticeConfig};
use crate::pattern::Pattern;

/// Fermi occupation `1 / (1 + exp(e / t))`.
pub fn fermi(e: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidTemperature(t));
    }
    let x = e / t;
    Ok(if x >= 0.0 {
        let z = (-x).exp();
        z / (1.0 + z)
    } else {
        1.0 / (1.0 + x.exp())
    })
}

/// Geometric ladder `t0, t0*alpha, ...`; the last rung is clamped to `t_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub alpha: f64,
    pub t_min: f64,
    pub sweeps_per_temp: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule { t0: 2.0, alpha: 0.9, t_min: 0.01, sweeps_per_temp: 5 }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::validation("anneal.t0", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("anneal.alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t0) {
            return Err(Error::validation("anneal.t_min", "must satisfy 0 < t_min < t0"));
        }
        if self.sweeps_per_temp == 0 {
            return Err(Error::validation("anneal.sweeps_per_temp", "must be >= 1"));
        }
        Ok(())
    }

    /// `ceil(log(t_min / t0) / log(alpha))`.
    pub fn n_rungs(&self) -> usize {
        ((self.t_min / self.t0).ln() / self.alpha.ln()).ceil().max(1.0) as usize
    }

    pub fn temperatures(&self) -> Vec<f64> {
        let n = self.n_rungs();
        (0..n)
            .map(|k| if k + 1 == n { self.t_min } else { (self.t0 * self.alpha.powi(k as i32)).max(self.t_min) })
            .collect()
    }
}

/// Connection strengths on the nearest-neighbor bonds of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    bonds: Bonds,
    values: Vec<f64>,
}

impl Weights {
    pub fn zeros(config: &LatticeConfig) -> Self {
        Self::uniform(config, 0.0)
    }

    pub fn uniform(config: &LatticeConfig, w: f64) -> Self {
        let bonds = Bonds::new(config);
        let values = vec![w; bonds.len()];
        Weights { bonds, values }
    }

    pub fn bonds(&self) -> &Bonds {
        &self.bonds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.bonds.find(a, b).map(|i| self.values[i])
    }

    pub fn set(&mut self, a: usize, b: usize, w: f64) -> Result<()> {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::validation("weights", format!("weight must be finite and >= 0, got {w}")));
        }
        let bond = self
            .bonds
            .find(a, b)
            .ok_or_else(|| Error::validation("weights", format!("sites {a} and {b} are not nearest neighbors")))?;
        self.values[bond] = w;
        Ok(())
    }

    /// `w <- clip(w + eta * s_a * s_b, 0, w_max)` on every bond.
    pub fn hebbian_update(&mut self, spins: &[i8], eta: f64, w_max: f64) {
        for (w, &(a, b)) in self.values.iter_mut().zip(self.bonds.pairs()) {
            let delta = eta * f64::from(spins[a] * spins[b]);
            *w = (*w + delta).clamp(0.0, w_max);
        }
    }

    /// Per-site connectivity potential `Σ_j w_ij / max_degree`.
    pub fn site_potential(&self) -> Vec<f64> {
        let degree = self.bonds.max_degree().max(1) as f64;
        (0..self.n_sites())
            .map(|s| self.bonds.neighbors(s).iter().map(|&(_, b)| self.values[b]).sum::<f64>() / degree)
            .collect()
    }

    /// Mean over sites of the mean weight on each site's bonds.
    pub fn mean_connection_strength(&self) -> f64 {
        let n = self.n_sites();
        let total: f64 = (0..n)
            .map(|s| {
                let nb = self.bonds.neighbors(s);
                if nb.is_empty() {
                    0.0
                } else {
                    nb.iter().map(|&(_, b)| self.values[b]).sum::<f64>() / nb.len() as f64
                }
            })
            .sum();
        total / n as f64
    }

    fn n_sites(&self) -> usize {
        self.bonds.n_sites()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    size: usize,
    pub spins: Vec<i8>,
    pub weights: Weights,
}

impl SpinState {
    pub fn new(config: &LatticeConfig, spins: Vec<i8>, weights: Weights) -> Result<Self> {
        if spins.len() != config.n_sites() {
            return Err(Error::Shape { expected: config.size(), found: format!("{} spins", spins.len()) });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::validation("spins", "entries must be +1 or -1"));
        }
        if weights.bonds.n_sites() != config.n_sites() {
            return Err(Error::Shape { expected: config.size(), found: "weights for another lattice".into() });
        }
        Ok(SpinState { size: config.size(), spins, weights })
    }

    pub fn from_pattern(config: &LatticeConfig, pattern: &Pattern, weights: Weights) -> Result<Self> {
        pattern.check_size(config.size())?;
        Self::new(config, pattern.spins(), weights)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn pattern(&self) -> Pattern {
        Pattern::from_spins(self.size, &self.spins).expect("spin grid matches its own size")
    }

    pub fn mean_spin(&self) -> f64 {
        self.spin_sum() as f64 / self.n_sites() as f64
    }

    fn spin_sum(&self) -> i64 {
        self.spins.iter().map(|&s| i64::from(s)).sum()
    }

    fn coupling_field(&self, site: usize) -> f64 {
        self.weights
            .bonds
            .neighbors(site)
            .iter()
            .map(|&(nb, bond)| self.weights.values[bond] * f64::from(self.spins[nb]))
            .sum()
    }
}

/// Local field `h` on a site.
pub fn local_field(state: &SpinState, site: usize, b_z: f64, gamma: f64) -> f64 {
    b_z + gamma * state.mean_spin() + state.coupling_field(site)
}

/// Energy increase `2 s h` from flipping the spin at `site`.
pub fn local_gap(state: &SpinState, site: usize, b_z: f64, gamma: f64) -> f64 {
    2.0 * f64::from(state.spins[site]) * local_field(state, site, b_z, gamma)
}

/// `E = -Σ b s - Σ_bonds w s s - gamma (Σ s)^2 / 2N`, i.e. `-Σ s (h + b) / 2`
/// with each pair interaction counted once.
pub fn energy(state: &SpinState, b_ext: &ExternalField, gamma: f64) -> f64 {
    let n = state.n_sites() as f64;
    let field: f64 = state.spins.iter().zip(&b_ext.bz).map(|(&s, b)| f64::from(s) * b).sum();
    let pairs: f64 = state
        .weights
        .bonds
        .pairs()
        .iter()
        .zip(&state.weights.values)
        .map(|(&(a, b), w)| w * f64::from(state.spins[a] * state.spins[b]))
        .sum();
    let total = state.spin_sum() as f64;
    -field - pairs - gamma * total * total / (2.0 * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    RowMajor,
    /// Fresh random permutation each sweep.
    Random,
}

/// One heat-bath pass over all sites in row-major order.
pub fn glauber_sweep<R: Rng + ?Sized>(
    state: &mut SpinState,
    b_ext: &ExternalField,
    gamma: f64,
    t: f64,
    rng: &mut R,
) -> Result<()> {
    glauber_sweep_ordered(state, b_ext, gamma, t, SweepOrder::RowMajor, rng)
}

pub fn glauber_sweep_ordered<R: Rng + ?Sized>(
    state: &mut SpinState,
    b_ext: &ExternalField,
    gamma: f64,
    t: f64,
    order: SweepOrder,
    rng: &mut R,
) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidTemperature(t));
    }
    if b_ext.size() != state.size {
        return Err(Error::Shape { expected: state.size, found: format!("{0}x{0} field", b_ext.size()) });
    }
    let n = state.n_sites();
    let inv_n = 1.0 / n as f64;
    let mut sum = state.spin_sum();
    let mut visit = |site: usize, state: &mut SpinState, rng: &mut R| -> Result<()> {
        let h = b_ext.bz[site] + gamma * sum as f64 * inv_n + state.coupling_field(site);
        let p_up = fermi(-2.0 * h, t)?;
        let new = if rng.gen::<f64>() < p_up { 1 } else { -1 };
        sum += i64::from(new - state.spins[site]);
        state.spins[site] = new;
        Ok(())
    };
    match order {
        SweepOrder::RowMajor => {
            for site in 0..n {
                visit(site, state, rng)?;
            }
        }
        SweepOrder::Random => {
            let mut sites: Vec<usize> = (0..n).collect();
            sites.shuffle(rng);
            for site in sites {
                visit(site, state, rng)?;
            }
        }
    }
    Ok(())
}

/// Run the full schedule. Returns the final state and, per rung, the mean
/// energy over that rung's sweeps.
pub fn anneal<R: Rng + ?Sized>(
    mut state: SpinState,
    b_ext: &ExternalField,
    gamma: f64,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> Result<(SpinState, Vec<f64>)> {
    schedule.validate()?;
    let mut trace = Vec::with_capacity(schedule.n_rungs());
    for t in schedule.temperatures() {
        let mut acc = 0.0;
        for _ in 0..schedule.sweeps_per_temp {
            glauber_sweep(&mut state, b_ext, gamma, t, rng)?;
            acc += energy(&state, b_ext, gamma);
        }
        trace.push(acc / schedule.sweeps_per_temp as f64);
    }
    Ok((state, trace))
}
