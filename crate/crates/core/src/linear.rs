//! Linear optics of the stack: scalar 2×2 transfer matrices for the classical
//! pump and for intensity transmission.
//!
//! In medium `l` a scalar field is `F e^{ik(z-z_ref)} + B e^{-ik(z-z_ref)}` with
//! `z_ref` from [`Structure::z_ref`]. Continuity of E gives `F + B` and
//! continuity of H gives `n (F - B)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cmatrix::{C64, ONE, ZERO};
use crate::constants::{omega_from_wavelength, C, EPS0, MU0};
use crate::error::{Error, Result};
use crate::modes::{Dir, Pol};
use crate::structure::Structure;

/// Spectral support of the Gaussian pump in units of σ; the amplitude is set
/// to zero beyond it (relative level below e^{-72}).
pub const PUMP_SUPPORT_SIGMAS: f64 = 12.0;

type M2 = [[C64; 2]; 2];

fn m2_mul(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn m2_apply(a: &M2, v: [C64; 2]) -> [C64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

/// Interface matrix carrying (F, B) from a medium of index `n1` to one of
/// index `n2` at their common boundary.
fn interface(n1: f64, n2: f64) -> M2 {
    let p = C64::new((n2 + n1) / (2.0 * n2), 0.0);
    let m = C64::new((n2 - n1) / (2.0 * n2), 0.0);
    [[p, m], [m, p]]
}

fn propagate(k: f64, len: f64) -> M2 {
    [[C64::from_polar(1.0, k * len), ZERO], [ZERO, C64::from_polar(1.0, -k * len)]]
}

/// Refractive indices of all media `0..=N+1` at `omega`.
pub fn indices(structure: &Structure, omega: f64) -> Result<Vec<f64>> {
    (0..structure.n_media())
        .map(|l| structure.medium(l).refractive_index(omega))
        .collect()
}

/// Transfer matrix from medium 0 at `z_1` to medium N+1 at `z_{N+1}`.
fn total_transfer(structure: &Structure, ns: &[f64], omega: f64) -> M2 {
    let n = structure.n_layers();
    let mut m: M2 = [[ONE, ZERO], [ZERO, ONE]];
    for l in 1..=n + 1 {
        m = m2_mul(&interface(ns[l - 1], ns[l]), &m);
        if l <= n {
            m = m2_mul(&propagate(omega / C * ns[l], structure.length(l)), &m);
        }
    }
    m
}

/// Linear response of the stack at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    /// Amplitude transmission coefficient.
    pub t: C64,
    /// Amplitude reflection coefficient.
    pub r: C64,
    /// Intensity transmission `|t|² n_out / n_in`.
    pub transmittance: f64,
    /// Intensity reflection `|r|²`.
    pub reflectance: f64,
}

/// Transmission and reflection for light incident from the left (`Dir::F`)
/// or from the right (`Dir::B`). Materials are isotropic, so the result does
/// not depend on polarization.
pub fn linear_transmission(structure: &Structure, omega: f64, side: Dir) -> Result<Transmission> {
    let ns = indices(structure, omega)?;
    let m = total_transfer(structure, &ns, omega);
    let (n_in, n_out) = (ns[0], ns[ns.len() - 1]);
    match side {
        Dir::F => {
            // [t, 0] = M [1, r]
            let r = -m[1][0] / m[1][1];
            let t = m[0][0] + m[0][1] * r;
            Ok(Transmission {
                t,
                r,
                transmittance: t.norm_sqr() * n_out / n_in,
                reflectance: r.norm_sqr(),
            })
        }
        Dir::B => {
            // [r, 1] = M [0, t]
            let t = ONE / m[1][1];
            let r = m[0][1] * t;
            Ok(Transmission {
                t,
                r,
                transmittance: t.norm_sqr() * n_in / n_out,
                reflectance: r.norm_sqr(),
            })
        }
    }
}

/// Classical Gaussian pump pulse incident at normal incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    /// Central angular frequency, rad/s.
    pub omega0: f64,
    /// Spectral width σ of the amplitude `exp(-(ω-ω0)²/(2σ²))`, rad/s.
    pub sigma: f64,
    /// Pulse energy per unit transverse area, J/m².
    pub energy_per_area: f64,
    pub polarization: Pol,
    /// `F`: incident from the left, `B`: from the right.
    pub side: Dir,
}

impl PumpSpec {
    pub fn new(omega0: f64, sigma: f64, energy_per_area: f64, polarization: Pol, side: Dir) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidPump(format!("omega0 = {omega0}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidPump(format!("sigma = {sigma}")));
        }
        if !(energy_per_area > 0.0 && energy_per_area.is_finite()) {
            return Err(Error::InvalidPump(format!("energy per area = {energy_per_area}")));
        }
        Ok(PumpSpec {
            omega0,
            sigma,
            energy_per_area,
            polarization,
            side,
        })
    }

    /// Pump from its central wavelength and intensity-spectrum FWHM in
    /// wavelength, both in metres.
    pub fn from_wavelength(
        lambda0: f64,
        fwhm_lambda: f64,
        energy_per_area: f64,
        polarization: Pol,
        side: Dir,
    ) -> Result<Self> {
        if !(lambda0 > 0.0 && fwhm_lambda > 0.0) {
            return Err(Error::InvalidPump("wavelength and width must be positive".into()));
        }
        let omega0 = omega_from_wavelength(lambda0);
        let d_omega = 2.0 * PI * C * fwhm_lambda / (lambda0 * lambda0);
        // |A|² = exp(-(ω-ω0)²/σ²) has FWHM 2σ sqrt(ln 2)
        let sigma = d_omega / (2.0 * std::f64::consts::LN_2.sqrt());
        Self::new(omega0, sigma, energy_per_area, polarization, side)
    }

    /// Intensity FWHM of the transform-limited pulse in time, s.
    pub fn duration_fwhm(&self) -> f64 {
        // |E(t)|² ∝ exp(-σ² t²)
        2.0 * std::f64::consts::LN_2.sqrt() / self.sigma
    }

    pub fn in_support(&self, omega: f64) -> bool {
        (omega - self.omega0).abs() <= PUMP_SUPPORT_SIGMAS * self.sigma
    }

    /// Incident spectral amplitude, V/m per (rad/s):
    /// `sqrt(sqrt(µ0/(ε0 π)) E/(π σ)) exp(-(ω-ω0)²/(2σ²))`.
    ///
    /// With this normalization `(ε0 c / 2) ∫|E⁺(t)|² dt = E` in vacuum,
    /// where `E⁺(t) = ∫ A(ω) e^{-iωt} dω`.
    pub fn input_amplitude(&self, omega: f64) -> f64 {
        if !self.in_support(omega) {
            return 0.0;
        }
        let pre = ((MU0 / (EPS0 * PI)).sqrt() * self.energy_per_area / (PI * self.sigma)).sqrt();
        let x = (omega - self.omega0) / self.sigma;
        pre * (-0.5 * x * x).exp()
    }
}

/// Pump amplitudes `(F, B)` in every medium at every grid frequency,
/// referenced to [`Structure::z_ref`]. Only the pump polarization is nonzero.
#[derive(Debug, Clone)]
pub struct PumpField {
    pub spec: PumpSpec,
    pub grid: Vec<f64>,
    /// `amps[l][j]` = (F, B) in medium `l` at `grid[j]`.
    amps: Vec<Vec<[C64; 2]>>,
    /// `index[l][j]` = n of medium `l` at `grid[j]` (0 outside the pump support).
    index: Vec<Vec<f64>>,
}

impl PumpField {
    pub fn n_media(&self) -> usize {
        self.amps.len()
    }

    /// Amplitude of direction `g` and polarization `pol` in medium `l`.
    pub fn amplitude(&self, l: usize, g: Dir, pol: Pol, j: usize) -> C64 {
        if pol != self.spec.polarization {
            return ZERO;
        }
        self.amps[l][j][g.index()]
    }

    /// Signed wave number of direction `g` in medium `l` at `grid[j]`.
    pub fn wavenumber(&self, l: usize, g: Dir, j: usize) -> f64 {
        g.sign() * self.grid[j] / C * self.index[l][j]
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.index[0][j] > 0.0
    }

    /// Total field and `(1/(ik0)) dE/dz` (∝ H) at position `z` inside medium `l`.
    pub fn field_at(&self, structure: &Structure, l: usize, z: f64, j: usize) -> (C64, C64) {
        let [f, b] = self.amps[l][j];
        let n = self.index[l][j];
        let k = self.grid[j] / C * n;
        let d = z - structure.z_ref(l);
        let ef = f * C64::from_polar(1.0, k * d);
        let eb = b * C64::from_polar(1.0, -k * d);
        (ef + eb, (ef - eb) * n)
    }

    /// Largest relative mismatch of E and H across any boundary and frequency.
    pub fn continuity_residual(&self, structure: &Structure) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.grid.len() {
            if !self.is_active(j) {
                continue;
            }
            for l in 1..=structure.n_layers() + 1 {
                let z = structure.z(l);
                let (e1, h1) = self.field_at(structure, l - 1, z, j);
                let (e2, h2) = self.field_at(structure, l, z, j);
                let scale = e1.norm().max(h1.norm()).max(e2.norm()).max(h2.norm());
                if scale > 0.0 {
                    worst = worst.max((e1 - e2).norm() / scale).max((h1 - h2).norm() / scale);
                }
            }
        }
        worst
    }
}

/// Propagates the pump through the stack at every grid frequency. Frequencies
/// outside the pump support carry zero amplitude and are never evaluated.
pub fn propagate_pump(structure: &Structure, spec: &PumpSpec, grid: &[f64]) -> Result<PumpField> {
    let nm = structure.n_media();
    let per_freq: Vec<(Vec<[C64; 2]>, Vec<f64>)> = grid
        .par_iter()
        .map(|&w| -> Result<_> {
            if !spec.in_support(w) {
                return Ok((vec![[ZERO, ZERO]; nm], vec![0.0; nm]));
            }
            let ns = indices(structure, w)?;
            let m = total_transfer(structure, &ns, w);
            let a0 = C64::new(spec.input_amplitude(w), 0.0);
            let start = match spec.side {
                Dir::F => [a0, -m[1][0] / m[1][1] * a0],
                Dir::B => [ZERO, a0 / m[1][1]],
            };
            let mut amps = Vec::with_capacity(nm);
            amps.push(start);
            let mut v = start;
            for l in 1..nm {
                v = m2_apply(&interface(ns[l - 1], ns[l]), v);
                amps.push(v);
                if l < nm - 1 {
                    v = m2_apply(&propagate(w / C * ns[l], structure.length(l)), v);
                }
            }
            if spec.side == Dir::B {
                // remove round-off in the prescribed zero input and exact incident value
                amps[nm - 1][1] = a0;
            } else {
                amps[nm - 1][1] = ZERO;
            }
            Ok((amps, ns))
        })
        .collect::<Result<_>>()?;
    let mut amps = vec![Vec::with_capacity(grid.len()); nm];
    let mut index = vec![Vec::with_capacity(grid.len()); nm];
    for (a, n) in per_freq {
        for l in 0..nm {
            amps[l].push(a[l]);
            index[l].push(n[l]);
        }
    }
    Ok(PumpField {
        spec: *spec,
        grid: grid.to_vec(),
        amps,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialModel;
    use crate::structure::{Layer, Structure};
    use std::sync::Arc;

    fn stack(ns: &[f64], lens_nm: &[f64], amb: (f64, f64)) -> Structure {
        let layers = ns
            .iter()
            .zip(lens_nm)
            .map(|(&n, &l)| Layer {
                material: Arc::new(MaterialModel::constant(format!("n{n}"), n)),
                length: l * 1e-9,
                poling: 1.0,
            })
            .collect();
        Structure::new(
            Arc::new(MaterialModel::constant("in", amb.0)),
            Arc::new(MaterialModel::constant("out", amb.1)),
            layers,
        )
        .unwrap()
    }

    fn w400() -> f64 {
        omega_from_wavelength(400e-9)
    }

    #[test]
    fn single_interface_fresnel() {
        // a layer index-matched to the output ambient acts as one interface
        let s = stack(&[2.0], &[50.0], (1.0, 2.0));
        let tr = linear_transmission(&s, w400(), Dir::F).unwrap();
        assert!((tr.r - C64::new(-1.0 / 3.0, 0.0)).norm() < 1e-14);
        assert!((tr.reflectance - 1.0 / 9.0).abs() < 1e-14);
        assert!((tr.transmittance + tr.reflectance - 1.0).abs() < 1e-14);
        assert!((tr.t.norm() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn matched_stack_is_transparent() {
        let s = stack(&[1.5, 1.5, 1.5], &[30.0, 40.0, 50.0], (1.5, 1.5));
        let tr = linear_transmission(&s, w400(), Dir::F).unwrap();
        assert!((tr.transmittance - 1.0).abs() < 1e-14);
        assert!(tr.reflectance < 1e-28);
    }

    #[test]
    fn energy_and_reciprocity() {
        let s = stack(&[2.3, 1.4, 2.3, 1.7], &[61.0, 13.0, 44.0, 90.0], (1.0, 1.33));
        for j in 0..20 {
            let w = w400() * (0.3 + 0.05 * j as f64);
            let f = linear_transmission(&s, w, Dir::F).unwrap();
            let b = linear_transmission(&s, w, Dir::B).unwrap();
            assert!((f.transmittance + f.reflectance - 1.0).abs() < 1e-12);
            assert!((b.transmittance + b.reflectance - 1.0).abs() < 1e-12);
            assert!((f.transmittance - b.transmittance).abs() < 1e-12);
        }
    }

    #[test]
    fn pump_amplitude_fluence() {
        let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap();
        // (ε0 c/2) ∫|E⁺(t)|² dt = (ε0 c/2) 2π ∫|A(ω)|² dω
        let n = 20001;
        let lo = p.omega0 - 11.0 * p.sigma;
        let dw = 22.0 * p.sigma / (n - 1) as f64;
        let s: f64 = (0..n)
            .map(|i| p.input_amplitude(lo + i as f64 * dw).powi(2))
            .sum::<f64>()
            * dw;
        let fluence = 0.5 * EPS0 * C * 2.0 * PI * s;
        assert!((fluence / 1e3 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pump_duration_near_33fs() {
        let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap();
        let t = p.duration_fwhm();
        assert!(t > 33e-15 && t < 34e-15, "{t}");
    }

    #[test]
    fn pump_in_uniform_stack_only_accumulates_phase() {
        let s = stack(&[1.5, 1.5], &[40.0, 70.0], (1.5, 1.5));
        let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap();
        let grid = vec![p.omega0, p.omega0 + p.sigma];
        let f = propagate_pump(&s, &p, &grid).unwrap();
        for j in 0..2 {
            let a0 = p.input_amplitude(grid[j]);
            let k = grid[j] / C * 1.5;
            for l in 0..4 {
                let want = a0 * C64::from_polar(1.0, k * s.z_ref(l));
                assert!((f.amplitude(l, Dir::F, Pol::Y, j) - want).norm() < 1e-12 * a0);
                assert!(f.amplitude(l, Dir::B, Pol::Y, j).norm() < 1e-12 * a0);
            }
            assert_eq!(f.amplitude(1, Dir::F, Pol::X, j), ZERO);
        }
    }

    #[test]
    fn pump_continuity_and_side() {
        let s = stack(&[2.5, 2.1, 2.5, 2.1, 2.5], &[60.0, 13.0, 60.0, 13.0, 60.0], (1.0, 1.0));
        for side in [Dir::F, Dir::B] {
            let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, side).unwrap();
            let grid: Vec<f64> = (0..9).map(|i| p.omega0 + (i as f64 - 4.0) * p.sigma).collect();
            let f = propagate_pump(&s, &p, &grid).unwrap();
            assert!(f.continuity_residual(&s) < 1e-12);
            let n = s.n_media() - 1;
            for j in 0..grid.len() {
                match side {
                    Dir::F => assert_eq!(f.amplitude(n, Dir::B, Pol::Y, j), ZERO),
                    Dir::B => assert_eq!(f.amplitude(0, Dir::F, Pol::Y, j), ZERO),
                }
            }
        }
    }

    #[test]
    fn outside_support_is_zero_and_unevaluated() {
        // an index model that would fail far from the pump is never queried
        let s = stack(&[2.0], &[10.0], (1.0, 1.0));
        let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap();
        let f = propagate_pump(&s, &p, &[p.omega0 * 3.0]).unwrap();
        assert!(!f.is_active(0));
        assert_eq!(f.amplitude(1, Dir::F, Pol::Y, 0), ZERO);
    }
}
