//! The doublet field `psi = (psi_u, psi_d)` on the lattice and its
//! observables: local and net magnetization, the order parameter
//! `M = |n_u - n_d| / 2`, binarization and global SU(2) rotations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;
use crate::pattern::Pattern;
use crate::rng_from_seed;

/// Four real component grids, row-major, one entry per site.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubletField {
    config: LatticeConfig,
    pub(crate) re_u: Vec<f64>,
    pub(crate) im_u: Vec<f64>,
    pub(crate) re_d: Vec<f64>,
    pub(crate) im_d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Magnetization {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl Magnetization {
    pub fn new(mx: f64, my: f64, mz: f64) -> Self {
        Magnetization { mx, my, mz }
    }

    /// Bilinear `(2 Re(u* d), 2 Im(u* d), |u|^2 - |d|^2)` of one spinor.
    pub fn of_spinor(u: Complex64, d: Complex64) -> Self {
        let cross = u.conj() * d;
        Magnetization { mx: 2.0 * cross.re, my: 2.0 * cross.im, mz: u.norm_sqr() - d.norm_sqr() }
    }

    pub fn length(&self) -> f64 {
        (self.mx * self.mx + self.my * self.my + self.mz * self.mz).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Magnetization { mx: k * self.mx, my: k * self.my, mz: k * self.mz }
    }
}

/// Order parameter `M = |n_u - n_d| / 2` with the underlying site counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    pub value: f64,
    pub n_u: usize,
    pub n_d: usize,
}

impl OrderParameter {
    pub fn from_counts(n_u: usize, n_d: usize) -> Self {
        OrderParameter { value: 0.5 * n_u.abs_diff(n_d) as f64, n_u, n_d }
    }

    pub fn of_pattern(pattern: &Pattern) -> Self {
        let n_u = pattern.count_on();
        Self::from_counts(n_u, pattern.n_sites() - n_u)
    }

    pub fn n_sites(&self) -> usize {
        self.n_u + self.n_d
    }

    /// `M = 0`: the information-free state.
    pub fn is_normal(&self) -> bool {
        self.n_u == self.n_d
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InitMode<'a> {
    /// Independent unit spinors, uniform on the Bloch sphere, with a random
    /// global phase per site.
    NormalRandom,
    /// `(1, 0)` where the bit is on, `(0, 1)` where it is off.
    FromPattern(&'a Pattern),
}

pub fn new_field(config: LatticeConfig, mode: InitMode<'_>, seed: u64) -> Result<DoubletField> {
    let mut field = DoubletField::zeros(config);
    match mode {
        InitMode::NormalRandom => {
            let mut rng = rng_from_seed(seed);
            for site in 0..config.n_sites() {
                let cos_theta: f64 = 1.0 - 2.0 * rng.gen::<f64>();
                let phi = 2.0 * PI * rng.gen::<f64>();
                let chi = 2.0 * PI * rng.gen::<f64>();
                let half = 0.5 * cos_theta.clamp(-1.0, 1.0).acos();
                let u = Complex64::from_polar(half.cos(), chi);
                let d = Complex64::from_polar(half.sin(), chi + phi);
                field.set_spinor(site, u, d);
            }
        }
        InitMode::FromPattern(pattern) => {
            pattern.check_size(config.size())?;
            for (site, &bit) in pattern.bits().iter().enumerate() {
                if bit == 1 {
                    field.re_u[site] = 1.0;
                } else {
                    field.re_d[site] = 1.0;
                }
            }
        }
    }
    Ok(field)
}

impl DoubletField {
    pub fn zeros(config: LatticeConfig) -> Self {
        let n = config.n_sites();
        DoubletField {
            config,
            re_u: vec![0.0; n],
            im_u: vec![0.0; n],
            re_d: vec![0.0; n],
            im_d: vec![0.0; n],
        }
    }

    /// Same spinor at every site.
    pub fn uniform(config: LatticeConfig, u: Complex64, d: Complex64) -> Self {
        let mut field = Self::zeros(config);
        for site in 0..config.n_sites() {
            field.set_spinor(site, u, d);
        }
        field
    }

    /// Build from the four component grids. Each must hold `L*L` finite values.
    pub fn from_components(
        config: LatticeConfig,
        re_u: Vec<f64>,
        im_u: Vec<f64>,
        re_d: Vec<f64>,
        im_d: Vec<f64>,
    ) -> Result<Self> {
        let n = config.n_sites();
        for grid in [&re_u, &im_u, &re_d, &im_d] {
            if grid.len() != n {
                return Err(Error::Shape {
                    expected: config.size(),
                    found: format!("{} values", grid.len()),
                });
            }
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("field", "component values must be finite"));
            }
        }
        Ok(DoubletField { config, re_u, im_u, re_d, im_d })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn n_sites(&self) -> usize {
        self.re_u.len()
    }

    pub fn components(&self) -> [&[f64]; 4] {
        [&self.re_u, &self.im_u, &self.re_d, &self.im_d]
    }

    pub fn spinor(&self, site: usize) -> (Complex64, Complex64) {
        (
            Complex64::new(self.re_u[site], self.im_u[site]),
            Complex64::new(self.re_d[site], self.im_d[site]),
        )
    }

    pub fn set_spinor(&mut self, site: usize, u: Complex64, d: Complex64) {
        self.re_u[site] = u.re;
        self.im_u[site] = u.im;
        self.re_d[site] = d.re;
        self.im_d[site] = d.im;
    }

    pub fn site_norm(&self, site: usize) -> f64 {
        let (u, d) = self.spinor(site);
        u.norm_sqr() + d.norm_sqr()
    }

    pub fn site_mz(&self, site: usize) -> f64 {
        let (u, d) = self.spinor(site);
        u.norm_sqr() - d.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|g| g.iter().all(|v| v.is_finite()))
    }

    /// Largest elementwise difference over all four component grids.
    pub fn max_abs_diff(&self, other: &DoubletField) -> f64 {
        self.components()
            .iter()
            .zip(other.components())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn local_magnetization(field: &DoubletField, row: usize, col: usize) -> Result<Magnetization> {
    let site = field.config.index(row, col)?;
    let (u, d) = field.spinor(site);
    Ok(Magnetization::of_spinor(u, d))
}

/// Mean of the local magnetization over all sites.
pub fn net_magnetization(field: &DoubletField) -> Magnetization {
    let n = field.n_sites();
    let mut sum = Magnetization::default();
    for site in 0..n {
        let (u, d) = field.spinor(site);
        let m = Magnetization::of_spinor(u, d);
        sum.mx += m.mx;
        sum.my += m.my;
        sum.mz += m.mz;
    }
    sum.scaled(1.0 / n as f64)
}

/// Sites with `mz >= 0` count as u, the rest as d.
pub fn order_parameter(field: &DoubletField) -> OrderParameter {
    let n_u = (0..field.n_sites()).filter(|&s| field.site_mz(s) >= 0.0).count();
    OrderParameter::from_counts(n_u, field.n_sites() - n_u)
}

pub fn binarize(field: &DoubletField) -> Pattern {
    Pattern::from_fn(field.config.size(), |r, c| field.site_mz(r * field.config.size() + c) >= 0.0)
}

/// Rotate each site's spinor so that its u/d classification matches
/// `pattern`, keeping the site norm and the phase of the dominant component.
/// Sites that already agree are fully polarized the same way.
pub fn align_to_pattern(field: &DoubletField, pattern: &Pattern) -> Result<DoubletField> {
    pattern.check_size(field.config.size())?;
    let mut out = field.clone();
    for (site, &bit) in pattern.bits().iter().enumerate() {
        let (u, d) = field.spinor(site);
        let rho = u.norm_sqr() + d.norm_sqr();
        let dominant = if u.norm_sqr() >= d.norm_sqr() { u } else { d };
        let phase = if dominant.norm() > 0.0 { dominant / dominant.norm() } else { Complex64::new(1.0, 0.0) };
        let amp = phase * rho.sqrt();
        let zero = Complex64::new(0.0, 0.0);
        if bit == 1 {
            out.set_spinor(site, amp, zero);
        } else {
            out.set_spinor(site, zero, amp);
        }
    }
    Ok(out)
}

/// A 2×2 unitary matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    m: [[Complex64; 2]; 2],
}

const SU2_TOL: f64 = 1e-12;

impl Su2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - Complex64::new(1.0, 0.0)).norm() > SU2_TOL {
            return Err(Error::InvalidRotation(format!("determinant {det} != 1")));
        }
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - Complex64::new(expected, 0.0)).norm() > SU2_TOL {
                    return Err(Error::InvalidRotation("matrix is not unitary".into()));
                }
            }
        }
        Ok(Su2 { m })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Su2 { m: [[one, zero], [zero, one]] }
    }

    /// `cos(a/2) I - i sin(a/2) n·sigma`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidRotation("rotation axis must be non-zero".into()));
        }
        let [nx, ny, nz] = axis.map(|a| a / len);
        let (s, c) = (0.5 * angle).sin_cos();
        Su2::new([
            [Complex64::new(c, -s * nz), Complex64::new(-s * ny, -s * nx)],
            [Complex64::new(s * ny, -s * nx), Complex64::new(c, s * nz)],
        ])
    }

    /// `i sigma_x`: swaps u and d up to a global phase.
    pub fn flip() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let zero = Complex64::new(0.0, 0.0);
        Su2 { m: [[zero, i], [i, zero]] }
    }

    /// Haar-random element from a uniformly sampled unit quaternion.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let a = (1.0 - u1).sqrt() * (2.0 * PI * u2).sin();
        let b = (1.0 - u1).sqrt() * (2.0 * PI * u2).cos();
        let c = u1.sqrt() * (2.0 * PI * u3).sin();
        let d = u1.sqrt() * (2.0 * PI * u3).cos();
        Su2 { m: [[Complex64::new(a, b), Complex64::new(c, d)], [Complex64::new(-c, d), Complex64::new(a, -b)]] }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn apply(&self, u: Complex64, d: Complex64) -> (Complex64, Complex64) {
        (self.m[0][0] * u + self.m[0][1] * d, self.m[1][0] * u + self.m[1][1] * d)
    }
}

pub fn su2_rotate(field: &DoubletField, rotation: &Su2) -> DoubletField {
    let mut out = field.clone();
    for site in 0..field.n_sites() {
        let (u, d) = field.spinor(site);
        let (u2, d2) = rotation.apply(u, d);
        out.set_spinor(site, u2, d2);
    }
    out
}
