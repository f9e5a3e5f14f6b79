//! Frequency basis, per-photon amplitudes, nonlinear coupling and the
//! per-layer phase functions Φ with their projections onto the basis.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cmatrix::{CMatrix, C64, ZERO};
use crate::constants::{C, EPS0, HBAR};
use crate::error::{Error, Result};
use crate::linear::PumpField;
use crate::materials::MaterialModel;
use crate::modes::{Dir, Field, Mode, Pol};
use crate::structure::Structure;

/// Below this |Δk (z - z_a)| the phase function switches to its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Uniform top-hat frequency bins. Basis function k is `1/sqrt(Δω_k)` on bin k
/// and zero elsewhere, so the basis is orthonormal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    edges: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl SpectralBasis {
    pub fn uniform(omega_min: f64, omega_max: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidBasis("need at least one bin".into()));
        }
        if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
            return Err(Error::InvalidBasis(format!(
                "window [{omega_min:e}, {omega_max:e}] rad/s"
            )));
        }
        let d = (omega_max - omega_min) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|k| omega_min + k as f64 * d).collect();
        edges[bins] = omega_max;
        let centers = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        let widths = edges.windows(2).map(|e| e[1] - e[0]).collect();
        Ok(SpectralBasis {
            edges,
            centers,
            widths,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn omega_min(&self) -> f64 {
        self.edges[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Nominal (uniform) bin width.
    pub fn spacing(&self) -> f64 {
        (self.omega_max() - self.omega_min()) / self.len() as f64
    }

    /// Value of basis function `k` at `omega`. Bins are half-open `[lo, hi)`
    /// except the last, which includes its upper edge.
    pub fn value(&self, k: usize, omega: f64) -> f64 {
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        let last = k + 1 == self.len();
        if omega >= lo && (omega < hi || (last && omega == hi)) {
            1.0 / self.widths[k].sqrt()
        } else {
            0.0
        }
    }
}

/// Pump frequencies `ω_s + ω_i` at all signal/idler bin-centre pairs.
///
/// For equal uniform spacings the sums collapse onto `K_s + K_i - 1` points
/// indexed by `k + n`; otherwise every pair gets its own grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrid {
    omegas: Vec<f64>,
    collapsed: bool,
    idler_bins: usize,
}

impl PairGrid {
    pub fn new(signal: &SpectralBasis, idler: &SpectralBasis) -> Self {
        let ds = signal.spacing();
        let di = idler.spacing();
        let collapsed = (ds - di).abs() <= 1e-12 * ds;
        let omegas = if collapsed {
            let base = signal.centers()[0] + idler.centers()[0];
            (0..signal.len() + idler.len() - 1)
                .map(|j| base + j as f64 * ds)
                .collect()
        } else {
            let mut v = Vec::with_capacity(signal.len() * idler.len());
            for &ws in signal.centers() {
                for &wi in idler.centers() {
                    v.push(ws + wi);
                }
            }
            v
        };
        PairGrid {
            omegas,
            collapsed,
            idler_bins: idler.len(),
        }
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Grid index of signal bin `k` and idler bin `n`.
    pub fn index(&self, k: usize, n: usize) -> usize {
        if self.collapsed {
            k + n
        } else {
            k * self.idler_bins + n
        }
    }
}

/// Signal and idler bases plus the transverse area used for τ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSetup {
    pub signal: SpectralBasis,
    pub idler: SpectralBasis,
    pub pairs: PairGrid,
    /// Transverse area A in m².
    pub area: f64,
}

impl SpectralSetup {
    pub fn new(signal: SpectralBasis, idler: SpectralBasis, area: f64) -> Result<Self> {
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::InvalidBasis(format!("area {area}")));
        }
        let pairs = PairGrid::new(&signal, &idler);
        Ok(SpectralSetup {
            signal,
            idler,
            pairs,
            area,
        })
    }

    /// Same window `[lo, hi]·ω_p⁰` and bin count for both photons.
    pub fn symmetric(omega_p0: f64, lo: f64, hi: f64, bins: usize, area: f64) -> Result<Self> {
        let b = SpectralBasis::uniform(lo * omega_p0, hi * omega_p0, bins)?;
        Self::new(b.clone(), b, area)
    }

    pub fn basis(&self, field: Field) -> &SpectralBasis {
        match field {
            Field::Signal => &self.signal,
            Field::Idler => &self.idler,
        }
    }
}

/// Field amplitude per photon, `sqrt(ħω / (4π ε0 c n(ω) A))`, in V/m·sqrt(s).
pub fn photon_amplitude_tau(material: &MaterialModel, omega: f64, area: f64) -> Result<f64> {
    let n = material.refractive_index(omega)?;
    Ok((HBAR * omega / (4.0 * PI * EPS0 * C * n * area)).sqrt())
}

/// Nonlinear coupling `T_g^{αβγ}` of layer `l`, in 1/m:
/// `(4iπ ε0 A/ħ) τ_s τ_i χ_eff (poling) A_{p,g}^{(l)*}(ω_s + ω_i)`.
///
/// `j` is the pump-grid index of `ω_s + ω_i`.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_coupling(
    structure: &Structure,
    pump: &PumpField,
    layer: usize,
    g: Dir,
    gamma: Pol,
    alpha: Pol,
    beta: Pol,
    omega_s: f64,
    omega_i: f64,
    j: usize,
    area: f64,
) -> Result<C64> {
    debug_assert!(
        (pump.grid[j] - omega_s - omega_i).abs() <= 1e-9 * pump.grid[j],
        "pump grid point does not match ω_s + ω_i"
    );
    let material = structure.medium(layer);
    let chi = material.chi2_effective(gamma, alpha, beta) * structure.poling(layer);
    let ap = pump.amplitude(layer, g, gamma, j);
    if chi == 0.0 || ap == ZERO {
        return Ok(ZERO);
    }
    let ts = photon_amplitude_tau(material, omega_s, area)?;
    let ti = photon_amplitude_tau(material, omega_i, area)?;
    Ok(C64::new(0.0, 4.0 * PI * EPS0 * area / HBAR) * ts * ti * chi * ap.conj())
}

/// Inputs of the phase function of one field ("own") coupled to its partner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInputs {
    /// Propagation direction of the own field.
    pub own_dir: Dir,
    /// Coupling T_g for g = F, B.
    pub t: [C64; 2],
    /// Signed pump wave numbers for g = F, B.
    pub k_pump: [f64; 2],
    /// Signed wave number of the own field.
    pub k_own: f64,
    /// Signed wave number of the partner field.
    pub k_partner: f64,
    /// Layer thickness.
    pub length: f64,
}

/// Φ and ∂Φ/∂z at `u = z - z_a`, where `z_a` is the left boundary for a
/// forward own field and the right boundary for a backward one:
///
/// `Φ = i[±1] Σ_g T_g e^{-iφ_g} (e^{-iΔk_g u} - 1)/Δk_g`, `Δk_g = k_pg - k_own - k_partner`,
/// `φ_g = 0` (forward) or `(k_pg - k_partner) L` (backward).
pub fn phase_pair(p: &PhaseInputs, u: f64) -> (C64, C64) {
    let sign = p.own_dir.sign();
    let mut phi = ZERO;
    let mut dphi = ZERO;
    for g in 0..2 {
        if p.t[g] == ZERO {
            continue;
        }
        let dk = p.k_pump[g] - p.k_own - p.k_partner;
        let ph = match p.own_dir {
            Dir::F => 0.0,
            Dir::B => (p.k_pump[g] - p.k_partner) * p.length,
        };
        let pre = p.t[g] * C64::from_polar(1.0, -ph);
        let x = dk * u;
        // (e^{-iΔk u} - 1)/Δk
        let ratio = if x.abs() < SERIES_THRESHOLD {
            C64::new(-dk * u * u / 2.0, -u)
        } else {
            // e^{-ix} - 1 = -2i sin(x/2) e^{-ix/2}, free of cancellation
            C64::new(0.0, -2.0 * (0.5 * x).sin()) * C64::from_polar(1.0, -0.5 * x) / dk
        };
        phi += C64::i() * sign * pre * ratio;
        dphi += sign * pre * C64::from_polar(1.0, -x);
    }
    (phi, dphi)
}

/// Which boundary of a layer a block refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Left,
    Right,
}

/// Key of one coupling block: own-field mode and partner-field mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockKey {
    pub own: Mode,
    pub partner: Mode,
    pub edge: Edge,
}

/// Projected phase functions of one layer for one field: `λ_E` (dimensionless)
/// and `λ_H` (1/m) blocks with rows over own-field bins and columns over
/// partner bins. Only channels with nonzero coupling are stored.
#[derive(Debug, Clone)]
pub struct CouplingBlocks {
    pub layer: usize,
    pub field: Field,
    pub blocks: BTreeMap<BlockKey, (CMatrix, CMatrix)>,
}

impl CouplingBlocks {
    pub fn get(&self, own: Mode, partner: Mode, edge: Edge) -> Option<&(CMatrix, CMatrix)> {
        self.blocks.get(&BlockKey { own, partner, edge })
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Per-layer data needed to evaluate Φ at bin centres.
pub struct LayerCoupling<'a> {
    structure: &'a Structure,
    pump: &'a PumpField,
    setup: &'a SpectralSetup,
    layer: usize,
    /// Signed |k| of signal and idler at bin centres (forward sign).
    ks: Vec<f64>,
    ki: Vec<f64>,
}

impl<'a> LayerCoupling<'a> {
    pub fn new(
        structure: &'a Structure,
        pump: &'a PumpField,
        setup: &'a SpectralSetup,
        layer: usize,
    ) -> Result<Self> {
        if layer == 0 || layer > structure.n_layers() {
            return Err(Error::InvalidStructure(format!("no coupling in medium {layer}")));
        }
        let m = structure.medium(layer);
        let ks = setup
            .signal
            .centers()
            .iter()
            .map(|&w| m.wavenumber(w, Dir::F))
            .collect::<Result<_>>()?;
        let ki = setup
            .idler
            .centers()
            .iter()
            .map(|&w| m.wavenumber(w, Dir::F))
            .collect::<Result<_>>()?;
        Ok(LayerCoupling {
            structure,
            pump,
            setup,
            layer,
            ks,
            ki,
        })
    }

    /// True if some pump direction couples signal pol `alpha` and idler pol `beta`.
    pub fn channel_active(&self, alpha: Pol, beta: Pol) -> bool {
        let gamma = self.pump.spec.polarization;
        self.structure.medium(self.layer).chi2_effective(gamma, alpha, beta) != 0.0
    }

    /// Phase-function inputs for signal bin `k`, idler bin `n`, with the own
    /// field `field` in mode `own` and the partner in mode `partner`.
    pub fn inputs(&self, field: Field, own: Mode, partner: Mode, k: usize, n: usize) -> Result<PhaseInputs> {
        let (s_mode, i_mode) = match field {
            Field::Signal => (own, partner),
            Field::Idler => (partner, own),
        };
        let gamma = self.pump.spec.polarization;
        let ws = self.setup.signal.centers()[k];
        let wi = self.setup.idler.centers()[n];
        let j = self.setup.pairs.index(k, n);
        let mut t = [ZERO; 2];
        let mut k_pump = [0.0; 2];
        if self.pump.is_active(j) {
            for g in Dir::ALL {
                t[g.index()] = nonlinear_coupling(
                    self.structure,
                    self.pump,
                    self.layer,
                    g,
                    gamma,
                    s_mode.pol,
                    i_mode.pol,
                    ws,
                    wi,
                    j,
                    self.setup.area,
                )?;
                k_pump[g.index()] = self.pump.wavenumber(self.layer, g, j);
            }
        }
        let ks = s_mode.dir.sign() * self.ks[k];
        let ki = i_mode.dir.sign() * self.ki[n];
        let (k_own, k_partner) = match field {
            Field::Signal => (ks, ki),
            Field::Idler => (ki, ks),
        };
        Ok(PhaseInputs {
            own_dir: own.dir,
            t,
            k_pump,
            k_own,
            k_partner,
            length: self.structure.length(self.layer),
        })
    }

    /// Φ and ∂Φ/∂z at absolute position `z` inside the layer.
    pub fn phase_functions(
        &self,
        field: Field,
        own: Mode,
        partner: Mode,
        k: usize,
        n: usize,
        z: f64,
    ) -> Result<(C64, C64)> {
        let p = self.inputs(field, own, partner, k, n)?;
        let za = self.z_a(own.dir);
        Ok(phase_pair(&p, z - za))
    }

    /// Reference point of the own field: left boundary (F) or right boundary (B).
    pub fn z_a(&self, dir: Dir) -> f64 {
        match dir {
            Dir::F => self.structure.z(self.layer),
            Dir::B => self.structure.z(self.layer + 1),
        }
    }

    pub fn signal_k(&self) -> &[f64] {
        &self.ks
    }

    pub fn idler_k(&self) -> &[f64] {
        &self.ki
    }
}

/// Projects Φ* and ∂Φ*/∂z of `layer` onto the top-hat bases at both layer
/// edges: `λ[k, n] = Φ*(ω_k, ω_n) sqrt(Δω_k Δω_n)` with midpoint evaluation.
pub fn project_to_basis(
    structure: &Structure,
    pump: &PumpField,
    setup: &SpectralSetup,
    layer: usize,
    field: Field,
) -> Result<CouplingBlocks> {
    let lc = LayerCoupling::new(structure, pump, setup, layer)?;
    let (own_basis, partner_basis) = match field {
        Field::Signal => (&setup.signal, &setup.idler),
        Field::Idler => (&setup.idler, &setup.signal),
    };
    let mut keys = Vec::new();
    for own in Mode::ALL {
        for partner in Mode::ALL {
            let (a, b) = match field {
                Field::Signal => (own.pol, partner.pol),
                Field::Idler => (partner.pol, own.pol),
            };
            if !lc.channel_active(a, b) {
                continue;
            }
            for edge in [Edge::Left, Edge::Right] {
                keys.push(BlockKey { own, partner, edge });
            }
        }
    }
    let ko = own_basis.len();
    let kp = partner_basis.len();
    let built: Vec<(BlockKey, (CMatrix, CMatrix))> = keys
        .par_iter()
        .map(|&key| -> Result<_> {
            let z = match key.edge {
                Edge::Left => structure.z(layer),
                Edge::Right => structure.z(layer + 1),
            };
            let mut le = CMatrix::zeros(ko, kp);
            let mut lh = CMatrix::zeros(ko, kp);
            for r in 0..ko {
                for c in 0..kp {
                    let (k, n) = match field {
                        Field::Signal => (r, c),
                        Field::Idler => (c, r),
                    };
                    let (phi, dphi) = lc.phase_functions(field, key.own, key.partner, k, n, z)?;
                    let w = (own_basis.widths()[r] * partner_basis.widths()[c]).sqrt();
                    le[(r, c)] = phi.conj() * w;
                    lh[(r, c)] = dphi.conj() * w;
                }
            }
            Ok((key, (le, lh)))
        })
        .collect::<Result<_>>()?;
    Ok(CouplingBlocks {
        layer,
        field,
        blocks: built.into_iter().collect(),
    })
}
