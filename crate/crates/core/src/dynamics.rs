//! Time evolution of the doublet field under the lattice Pauli equation
//!
//! ```text
//! i dpsi/dt = [ -k ∇² + mu sigma·B_total ] psi,   B_total = B_ext + gamma <m>
//! ```
//!
//! where `<m>` is the net magnetization (Bragg-Williams mean field). The mean
//! field depends on `psi` bilinearly, so the equation is nonlinear; it is
//! frozen for the duration of one step and refreshed between steps.
//!
//! Each step is a Strang splitting: a half step of the local spin rotation,
//! a full kinetic step, another half spin rotation. The spin rotations are
//! exact 2×2 exponentials. The kinetic part acts on the u and d components
//! separately and is advanced with the Cayley transform
//! `(1 + i dt/2 K)^-1 (1 - i dt/2 K)`, which is unitary for the real
//! symmetric hopping operator `K`. Both pieces conserve the total norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{net_magnetization, order_parameter, DoubletField, Magnetization, OrderParameter};
use crate::lattice::LatticeConfig;
use crate::pattern::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub dt: f64,
    /// Coefficient of the discrete Laplacian (hbar^2 / 2m).
    pub kinetic_coeff: f64,
    /// Magnetic moment coupling.
    pub mu: f64,
    /// Weiss constant.
    pub gamma: f64,
    pub n_steps: usize,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams { dt: 0.01, kinetic_coeff: 1.0, mu: 1.0, gamma: 0.2, n_steps: 10 }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation("dynamics.dt", "must be positive"));
        }
        if !(self.kinetic_coeff.is_finite() && self.kinetic_coeff > 0.0) {
            return Err(Error::validation("dynamics.kinetic_coeff", "must be positive"));
        }
        if !self.mu.is_finite() {
            return Err(Error::validation("dynamics.mu", "must be finite"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::validation("dynamics.gamma", "must be >= 0"));
        }
        Ok(())
    }

    /// Largest admissible `dt` for a given peak input field strength.
    pub fn stability_bound(&self, config: &LatticeConfig, b_max: f64) -> f64 {
        let kinetic = 4.0 * self.kinetic_coeff / (config.spacing() * config.spacing());
        0.1 / (kinetic + self.mu.abs() * (b_max + self.gamma))
    }
}

/// Magnetic field per site, three real grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalField {
    size: usize,
    pub bx: Vec<f64>,
    pub by: Vec<f64>,
    pub bz: Vec<f64>,
}

impl ExternalField {
    pub fn new(config: &LatticeConfig, bx: Vec<f64>, by: Vec<f64>, bz: Vec<f64>) -> Result<Self> {
        let n = config.n_sites();
        for grid in [&bx, &by, &bz] {
            if grid.len() != n {
                return Err(Error::Shape { expected: config.size(), found: format!("{} values", grid.len()) });
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("external_field", "entries must be finite"));
            }
        }
        Ok(ExternalField { size: config.size(), bx, by, bz })
    }

    pub fn zeros(config: &LatticeConfig) -> Self {
        Self::uniform(config, [0.0; 3])
    }

    pub fn uniform(config: &LatticeConfig, b: [f64; 3]) -> Self {
        let n = config.n_sites();
        ExternalField { size: config.size(), bx: vec![b[0]; n], by: vec![b[1]; n], bz: vec![b[2]; n] }
    }

    /// `b_z = +b0` on "on" sites and `-b0` on "off" sites.
    pub fn from_pattern(pattern: &Pattern, b0: f64) -> Self {
        let n = pattern.n_sites();
        ExternalField {
            size: pattern.size(),
            bx: vec![0.0; n],
            by: vec![0.0; n],
            bz: pattern.bits().iter().map(|&b| if b == 1 { b0 } else { -b0 }).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn at(&self, site: usize) -> [f64; 3] {
        [self.bx[site], self.by[site], self.bz[site]]
    }

    pub fn b_max(&self) -> f64 {
        (0..self.bx.len())
            .map(|s| {
                let [x, y, z] = self.at(s);
                (x * x + y * y + z * z).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn check(&self, config: &LatticeConfig) -> Result<()> {
        if self.size != config.size() {
            return Err(Error::Shape { expected: config.size(), found: format!("{0}x{0} field", self.size) });
        }
        Ok(())
    }
}

/// Samples of the macroscopic observables along a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub m_values: Vec<OrderParameter>,
    pub norms: Vec<f64>,
    pub net_mags: Vec<Magnetization>,
}

impl Trajectory {
    pub fn record(&mut self, t: f64, field: &DoubletField) {
        self.times.push(t);
        self.m_values.push(order_parameter(field));
        self.norms.push(total_norm(field));
        self.net_mags.push(net_magnetization(field));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Five-point stencil `(sum of neighbors - 4 center) / spacing^2`. On open
/// boundaries a missing neighbor takes the center value (zero flux).
pub fn laplacian(grid: &[f64], config: &LatticeConfig) -> Result<Vec<f64>> {
    if grid.len() != config.n_sites() {
        return Err(Error::Shape { expected: config.size(), found: format!("{} values", grid.len()) });
    }
    let inv_a2 = 1.0 / (config.spacing() * config.spacing());
    Ok((0..grid.len())
        .map(|site| {
            let center = grid[site];
            let sum: f64 = config.stencil(site).iter().map(|nb| nb.map_or(center, |j| grid[j])).sum();
            (sum - 4.0 * center) * inv_a2
        })
        .collect())
}

/// `B_ext + gamma * <m>`, the Weiss term identical at every site.
pub fn effective_field(field: &DoubletField, b_ext: &ExternalField, gamma: f64) -> Result<ExternalField> {
    b_ext.check(field.config())?;
    let m = net_magnetization(field);
    let mut out = b_ext.clone();
    if gamma != 0.0 {
        out.bx.iter_mut().for_each(|b| *b += gamma * m.mx);
        out.by.iter_mut().for_each(|b| *b += gamma * m.my);
        out.bz.iter_mut().for_each(|b| *b += gamma * m.mz);
    }
    Ok(out)
}

pub fn total_norm(field: &DoubletField) -> f64 {
    (0..field.n_sites()).map(|s| field.site_norm(s)).sum()
}

/// Per-site connectivity potential scaling the kinetic coupling. A bond
/// between sites i and j hops with strength `k (V_i + V_j) / 2`, which keeps
/// the kinetic operator symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    potential: Vec<f64>,
}

impl Connectivity {
    pub fn uniform(config: &LatticeConfig) -> Self {
        Connectivity { potential: vec![1.0; config.n_sites()] }
    }

    pub fn from_potential(config: &LatticeConfig, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != config.n_sites() {
            return Err(Error::Shape { expected: config.size(), found: format!("{} values", potential.len()) });
        }
        if potential.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation("connectivity", "potential must be finite and >= 0"));
        }
        Ok(Connectivity { potential })
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }
}

const CAYLEY_TOL: f64 = 1e-15;
const CAYLEY_MAX_ITER: usize = 200;

/// Integrator bound to one lattice, parameter set and connectivity.
#[derive(Debug, Clone)]
pub struct Propagator {
    config: LatticeConfig,
    params: DynamicsParams,
    /// Hopping strength per stencil slot; zero for missing or self links.
    hopping: Vec<[(usize, f64); 4]>,
    diagonal: Vec<f64>,
    has_hopping: bool,
}

impl Propagator {
    pub fn new(config: LatticeConfig, params: DynamicsParams, connectivity: &Connectivity) -> Result<Self> {
        params.validate()?;
        let v = connectivity.potential();
        if v.len() != config.n_sites() {
            return Err(Error::Shape { expected: config.size(), found: format!("{} values", v.len()) });
        }
        let scale = params.kinetic_coeff / (config.spacing() * config.spacing());
        let mut hopping = Vec::with_capacity(v.len());
        let mut diagonal = Vec::with_capacity(v.len());
        for site in 0..v.len() {
            let mut slots = [(site, 0.0); 4];
            for (slot, nb) in slots.iter_mut().zip(config.stencil(site)) {
                if let Some(j) = nb.filter(|&j| j != site) {
                    *slot = (j, scale * 0.5 * (v[site] + v[j]));
                }
            }
            diagonal.push(slots.iter().map(|&(_, c)| c).sum());
            hopping.push(slots);
        }
        let has_hopping = diagonal.iter().any(|&d| d != 0.0);
        Ok(Propagator { config, params, hopping, diagonal, has_hopping })
    }

    pub fn uniform(config: LatticeConfig, params: DynamicsParams) -> Result<Self> {
        Self::new(config, params, &Connectivity::uniform(&config))
    }

    pub fn params(&self) -> &DynamicsParams {
        &self.params
    }

    fn check_inputs(&self, field: &DoubletField, b_ext: &ExternalField) -> Result<()> {
        if field.config().size() != self.config.size() {
            return Err(Error::Shape {
                expected: self.config.size(),
                found: format!("{0}x{0} field", field.config().size()),
            });
        }
        b_ext.check(&self.config)?;
        let bound = self.params.stability_bound(&self.config, b_ext.b_max());
        if self.params.dt > bound {
            return Err(Error::UnstableStep { dt: self.params.dt, bound });
        }
        Ok(())
    }

    pub fn step(&self, field: &DoubletField, b_ext: &ExternalField) -> Result<DoubletField> {
        self.check_inputs(field, b_ext)?;
        Ok(self.step_unchecked(field, b_ext))
    }

    /// Apply `p.n_steps` steps, sampling observables at t = 0 and then every
    /// `record_every` steps.
    pub fn evolve(
        &self,
        field: &DoubletField,
        b_ext: &ExternalField,
        record_every: usize,
    ) -> Result<(DoubletField, Trajectory)> {
        if record_every == 0 {
            return Err(Error::validation("record_every", "must be >= 1"));
        }
        self.check_inputs(field, b_ext)?;
        let mut traj = Trajectory::default();
        traj.record(0.0, field);
        let mut current = field.clone();
        for k in 1..=self.params.n_steps {
            current = self.step_unchecked(&current, b_ext);
            if k % record_every == 0 {
                traj.record(k as f64 * self.params.dt, &current);
            }
        }
        Ok((current, traj))
    }

    /// `n_steps` steps without recording.
    pub fn advance(&self, field: &DoubletField, b_ext: &ExternalField) -> Result<DoubletField> {
        self.check_inputs(field, b_ext)?;
        let mut current = field.clone();
        for _ in 0..self.params.n_steps {
            current = self.step_unchecked(&current, b_ext);
        }
        Ok(current)
    }

    fn step_unchecked(&self, field: &DoubletField, b_ext: &ExternalField) -> DoubletField {
        let p = &self.params;
        let m = net_magnetization(field);
        let weiss = [p.gamma * m.mx, p.gamma * m.my, p.gamma * m.mz];
        let n = field.n_sites();

        let mut u: Vec<Complex64> = Vec::with_capacity(n);
        let mut d: Vec<Complex64> = Vec::with_capacity(n);
        for site in 0..n {
            let (a, b) = field.spinor(site);
            u.push(a);
            d.push(b);
        }

        self.spin_rotation(&mut u, &mut d, b_ext, weiss, 0.5 * p.dt);
        if self.has_hopping {
            u = self.cayley(&u);
            d = self.cayley(&d);
        }
        self.spin_rotation(&mut u, &mut d, b_ext, weiss, 0.5 * p.dt);

        let mut out = DoubletField::zeros(*field.config());
        for site in 0..n {
            out.set_spinor(site, u[site], d[site]);
        }
        out
    }

    /// Exact `exp(-i tau mu sigma·B)` at every site.
    fn spin_rotation(&self, u: &mut [Complex64], d: &mut [Complex64], b_ext: &ExternalField, weiss: [f64; 3], tau: f64) {
        for site in 0..u.len() {
            let [bx, by, bz] = b_ext.at(site);
            let (bx, by, bz) = (bx + weiss[0], by + weiss[1], bz + weiss[2]);
            let b = (bx * bx + by * by + bz * bz).sqrt();
            if b == 0.0 {
                continue;
            }
            let (nx, ny, nz) = (bx / b, by / b, bz / b);
            let (s, c) = (self.params.mu * b * tau).sin_cos();
            let (a, e) = (u[site], d[site]);
            u[site] = Complex64::new(c, -s * nz) * a + Complex64::new(-s * ny, -s * nx) * e;
            d[site] = Complex64::new(s * ny, -s * nx) * a + Complex64::new(c, s * nz) * e;
        }
    }

    fn apply_hopping(&self, psi: &[Complex64], site: usize) -> Complex64 {
        self.hopping[site].iter().map(|&(j, c)| psi[j] * c).sum()
    }

    /// Solve `(1 + i a K) x = (1 - i a K) psi` with `a = dt / 2` by Jacobi
    /// iteration. `K = D - H` is diagonally dominant, so the iteration
    /// contracts with factor at most `aD / sqrt(1 + (aD)^2)`.
    fn cayley(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let ia = Complex64::new(0.0, 0.5 * self.params.dt);
        let rhs: Vec<Complex64> = (0..psi.len())
            .map(|i| psi[i] - ia * (psi[i] * self.diagonal[i] - self.apply_hopping(psi, i)))
            .collect();
        let inv: Vec<Complex64> =
            self.diagonal.iter().map(|&d| (Complex64::new(1.0, 0.0) + ia * d).inv()).collect();
        let scale = rhs.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let tol = CAYLEY_TOL * CAYLEY_TOL * scale;
        let mut x = rhs.clone();
        let mut next = vec![Complex64::new(0.0, 0.0); psi.len()];
        for _ in 0..CAYLEY_MAX_ITER {
            let mut delta: f64 = 0.0;
            for i in 0..psi.len() {
                let v = (rhs[i] + ia * self.apply_hopping(&x, i)) * inv[i];
                delta = delta.max((v - x[i]).norm_sqr());
                next[i] = v;
            }
            std::mem::swap(&mut x, &mut next);
            if delta <= tol {
                break;
            }
        }
        x
    }
}

/// One step with uniform connectivity.
pub fn step(field: &DoubletField, b_ext: &ExternalField, params: &DynamicsParams) -> Result<DoubletField> {
    Propagator::uniform(*field.config(), *params)?.step(field, b_ext)
}

/// `params.n_steps` steps with uniform connectivity.
pub fn evolve(
    field: &DoubletField,
    b_ext: &ExternalField,
    params: &DynamicsParams,
    record_every: usize,
) -> Result<(DoubletField, Trajectory)> {
    Propagator::uniform(*field.config(), *params)?.evolve(field, b_ext, record_every)
}
