//! Brute-force reference for the first-order pair amplitude.
//!
//! For every frequency pair the zeroth-order partner photon is propagated
//! with its own 2×2 matching, and the emitted photon is found by marching the
//! driven coupled-amplitude equations
//!
//! `a_F' = ik a_F + S(z)`, `a_B' = -ik a_B - S(z)`,
//! `S(z) = κ E_p(z) conj(u(z))`
//!
//! through every layer with a fixed-step midpoint rule. At each boundary the
//! electric field `(a_F + a_B)/sqrt(n)` and its derivative are matched, and a
//! shooting step enforces zero incoming amplitude on both sides. Nothing here
//! uses the closed-form phase functions or any of the block matrices.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cmatrix::{CMatrix, C64, ONE, ZERO};
use crate::constants::{C, EPS0, HBAR};
use crate::error::{Error, Result};
use crate::linear::PumpField;
use crate::modes::{Dir, Field, Mode, Pol};
use crate::spectral::SpectralSetup;
use crate::structure::Structure;

/// Finest step must not exceed the thinnest layer divided by this.
pub const MIN_STEPS_PER_LAYER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Steps across the thinnest layer at the coarsest level.
    pub steps_per_min_layer: usize,
    /// Number of halvings combined by Richardson extrapolation (1 = none).
    pub levels: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            steps_per_min_layer: 32,
            levels: 3,
        }
    }
}

/// Kernel of one output mode against one partner input mode, sampled at bin
/// centres: rows over output-photon bins, columns over partner bins.
pub type Kernel = CMatrix;

/// First-order emission kernels of both photons plus the linear scattering.
#[derive(Debug, Clone)]
pub struct ReferenceKernels {
    /// Signal output `(a, α)` against idler input `(g, β)`: coefficient of
    /// the input idler creation operator.
    pub signal: BTreeMap<(Mode, Mode), Kernel>,
    /// Idler output `(b, β)` against signal input `(d, δ)`.
    pub idler: BTreeMap<(Mode, Mode), Kernel>,
    /// Linear photon-amplitude scattering per field: `(out dir, in dir)` →
    /// per-bin coefficient, identical for both polarizations.
    pub linear_signal: BTreeMap<(Dir, Dir), Vec<C64>>,
    pub linear_idler: BTreeMap<(Dir, Dir), Vec<C64>>,
    /// Largest change between the two finest extrapolated estimates,
    /// relative to the largest kernel entry.
    pub error_estimate: f64,
}

/// Photon amplitudes `(a_F, a_B)` referenced to the left edge of a medium.
type Pair = [C64; 2];

struct Media {
    n: Vec<f64>,
    k: Vec<f64>,
    z_left: Vec<f64>,
    len: Vec<f64>,
}

fn media(structure: &Structure, omega: f64) -> Result<Media> {
    let nm = structure.n_media();
    let mut n = Vec::with_capacity(nm);
    let mut k = Vec::with_capacity(nm);
    let mut z_left = Vec::with_capacity(nm);
    let mut len = Vec::with_capacity(nm);
    for l in 0..nm {
        let ni = structure.medium(l).refractive_index(omega)?;
        n.push(ni);
        k.push(omega * ni / C);
        z_left.push(structure.z_ref(l));
        len.push(structure.length(l));
    }
    Ok(Media { n, k, z_left, len })
}

/// Matches E ∝ (a_F + a_B)/√n and E' ∝ ik(a_F - a_B)/√n from medium `n1`
/// into medium `n2` (same frequency, no source at the plane).
fn cross(a: Pair, n1: f64, k1: f64, n2: f64, k2: f64) -> Pair {
    let e = (a[0] + a[1]) / n1.sqrt();
    let d = C64::new(0.0, k1) * (a[0] - a[1]) / n1.sqrt();
    let sum = e * n2.sqrt();
    let diff = d * n2.sqrt() / C64::new(0.0, k2);
    [(sum + diff) * 0.5, (sum - diff) * 0.5]
}

fn free(a: Pair, k: f64, len: f64) -> Pair {
    [a[0] * C64::from_polar(1.0, k * len), a[1] * C64::from_polar(1.0, -k * len)]
}

/// Zeroth-order photon amplitudes in every medium for unit input from side
/// `input` (F: from the left at z_1, B: from the right at z_{N+1}), plus the
/// two output amplitudes `(F at z_{N+1}, B at z_1)`.
fn linear_mode(m: &Media, input: Dir) -> (Vec<Pair>, Pair) {
    let nm = m.n.len();
    let run = |start: Pair| -> Vec<Pair> {
        let mut out = Vec::with_capacity(nm);
        let mut a = start;
        out.push(a);
        for l in 1..nm {
            a = cross(free(a, m.k[l - 1], m.len[l - 1]), m.n[l - 1], m.k[l - 1], m.n[l], m.k[l]);
            out.push(a);
        }
        out
    };
    // two independent starts in medium 0, combined to meet the end conditions
    let p = run([ONE, ZERO]);
    let q = run([ZERO, ONE]);
    let pb = p[nm - 1][1];
    let qb = q[nm - 1][1];
    let (alpha, beta) = match input {
        // a_F(0) = 1, a_B(N+1) = 0
        Dir::F => (ONE, -pb / qb),
        // a_F(0) = 0, a_B(N+1) = 1
        Dir::B => (ZERO, ONE / qb),
    };
    let amps: Vec<Pair> = (0..nm)
        .map(|l| [alpha * p[l][0] + beta * q[l][0], alpha * p[l][1] + beta * q[l][1]])
        .collect();
    let out = [amps[nm - 1][0], amps[0][1]];
    (amps, out)
}

fn eval(a: Pair, k: f64, u: f64) -> C64 {
    a[0] * C64::from_polar(1.0, k * u) + a[1] * C64::from_polar(1.0, -k * u)
}

/// Everything the march needs for one (output ω, partner ω) pair.
struct Drive<'a> {
    own: &'a Media,
    partner_amps: &'a [Pair],
    partner: &'a Media,
    /// κ per medium (zero for linear media).
    kappa: Vec<C64>,
    pump: &'a PumpField,
    structure: &'a Structure,
    j: usize,
}

impl Drive<'_> {
    fn source(&self, l: usize, z: f64) -> C64 {
        if self.kappa[l] == ZERO {
            return ZERO;
        }
        let ep = self.pump.field_at(self.structure, l, z, self.j).0;
        let u = eval(self.partner_amps[l], self.partner.k[l], z - self.partner.z_left[l]);
        self.kappa[l] * ep * u.conj()
    }

    fn rhs(&self, l: usize, z: f64, y: Pair, driven: bool) -> Pair {
        let k = self.own.k[l];
        let s = if driven { self.source(l, z) } else { ZERO };
        [C64::new(0.0, k) * y[0] + s, C64::new(0.0, -k) * y[1] - s]
    }

    /// Marches from medium 0 at z_1 with amplitudes `start` (values at z_1)
    /// to medium N+1 at z_{N+1}; returns the amplitudes there.
    fn march(&self, start: Pair, steps: &[usize], driven: bool) -> Pair {
        let nm = self.own.n.len();
        let mut y = start;
        for l in 1..nm {
            // cross boundary l (between media l-1 and l) at z_l
            let zb = self.structure.z(l);
            let y_left = y;
            let d_left = self.rhs(l - 1, zb, y_left, driven);
            let (n1, n2) = (self.own.n[l - 1], self.own.n[l]);
            let e = (y_left[0] + y_left[1]) / n1.sqrt();
            let de = (d_left[0] + d_left[1]) / n1.sqrt();
            // on the right: a_F + a_B = √n2 e and ik(a_F - a_B) + (source part of the
            // derivative) = √n2 de
            let src = self.rhs(l, zb, [ZERO, ZERO], driven);
            let sum = e * n2.sqrt();
            let diff = (de * n2.sqrt() - (src[0] + src[1])) / C64::new(0.0, self.own.k[l]);
            y = [(sum + diff) * 0.5, (sum - diff) * 0.5];
            if l == nm - 1 {
                break;
            }
            let len = self.own.len[l];
            let m = steps[l];
            let h = len / m as f64;
            for i in 0..m {
                let z = zb + i as f64 * h;
                let k1 = self.rhs(l, z, y, driven);
                let mid = [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)];
                let k2 = self.rhs(l, z + h / 2.0, mid, driven);
                y = [y[0] + k2[0] * h, y[1] + k2[1] * h];
            }
        }
        y
    }

    /// Output amplitudes `(F at z_{N+1}, B at z_1)` of the emitted photon.
    fn emitted(&self, steps: &[usize]) -> Pair {
        let part = self.march([ZERO, ZERO], steps, true);
        let hom = self.march([ZERO, ONE], steps, false);
        let x = -part[1] / hom[1];
        [part[0] + x * hom[0], x]
    }
}

fn richardson(levels: &[Pair]) -> (Pair, f64) {
    let mut table: Vec<Vec<Pair>> = vec![levels.to_vec()];
    let mut factor = 4.0;
    while table.last().unwrap().len() > 1 {
        let prev = table.last().unwrap();
        let next: Vec<Pair> = prev
            .windows(2)
            .map(|w| {
                [
                    (w[1][0] * factor - w[0][0]) / (factor - 1.0),
                    (w[1][1] * factor - w[0][1]) / (factor - 1.0),
                ]
            })
            .collect();
        table.push(next);
        factor *= 4.0;
    }
    let best = table.last().unwrap()[0];
    // difference between the last two finest estimates of the previous column
    let err = if table.len() >= 2 {
        let col = &table[table.len() - 2];
        let a = col[col.len() - 1];
        ((best[0] - a[0]).norm()).max((best[1] - a[1]).norm())
    } else {
        0.0
    };
    (best, err)
}

fn photon_tau(n: f64, omega: f64, area: f64) -> f64 {
    (HBAR * omega / (4.0 * PI * EPS0 * C * n * area)).sqrt()
}

/// Reference first-order kernels for every output/input mode combination.
pub fn reference_kernels(
    structure: &Structure,
    pump: &PumpField,
    setup: &SpectralSetup,
    opts: &OracleOptions,
) -> Result<ReferenceKernels> {
    let l_min = structure.min_layer_length();
    if opts.steps_per_min_layer < MIN_STEPS_PER_LAYER {
        return Err(Error::StepTooCoarse {
            step: l_min / opts.steps_per_min_layer.max(1) as f64,
            limit: l_min / MIN_STEPS_PER_LAYER as f64,
        });
    }
    let levels = opts.levels.max(1);
    let nm = structure.n_media();
    let h0 = l_min / opts.steps_per_min_layer as f64;
    let base_steps: Vec<usize> = (0..nm)
        .map(|l| ((structure.length(l) / h0).ceil() as usize).max(1))
        .collect();
    let step_levels: Vec<Vec<usize>> = (0..levels)
        .map(|lv| base_steps.iter().map(|s| s << lv).collect())
        .collect();

    let ks = setup.signal.len();
    let ki = setup.idler.len();
    let sig_media: Vec<Media> = setup.signal.centers().iter().map(|&w| media(structure, w)).collect::<Result<_>>()?;
    let idl_media: Vec<Media> = setup.idler.centers().iter().map(|&w| media(structure, w)).collect::<Result<_>>()?;
    let sig_modes: Vec<[(Vec<Pair>, Pair); 2]> = sig_media
        .iter()
        .map(|m| [linear_mode(m, Dir::F), linear_mode(m, Dir::B)])
        .collect();
    let idl_modes: Vec<[(Vec<Pair>, Pair); 2]> = idl_media
        .iter()
        .map(|m| [linear_mode(m, Dir::F), linear_mode(m, Dir::B)])
        .collect();

    let gamma = pump.spec.polarization;
    let mut pol_pairs = Vec::new();
    for a in Pol::ALL {
        for b in Pol::ALL {
            if (1..=structure.n_layers()).any(|l| structure.medium(l).chi2_effective(gamma, a, b) != 0.0) {
                pol_pairs.push((a, b));
            }
        }
    }

    // one task per (signal bin, idler bin); each yields both photons' kernels
    type Entry = (Field, Mode, Mode, usize, usize, C64, f64);
    let tasks: Vec<(usize, usize)> = (0..ks).flat_map(|k| (0..ki).map(move |n| (k, n))).collect();
    let results: Vec<Vec<Entry>> = tasks
        .par_iter()
        .map(|&(k, n)| -> Result<Vec<Entry>> {
            let ws = setup.signal.centers()[k];
            let wi = setup.idler.centers()[n];
            let j = setup.pairs.index(k, n);
            let mut out = Vec::new();
            for &(alpha, beta) in &pol_pairs {
                let kappa: Vec<C64> = (0..nm)
                    .map(|l| {
                        let chi = structure.medium(l).chi2_effective(gamma, alpha, beta) * structure.poling(l);
                        if chi == 0.0 || !pump.is_active(j) {
                            return ZERO;
                        }
                        let ts = photon_tau(sig_media[k].n[l], ws, setup.area);
                        let ti = photon_tau(idl_media[n].n[l], wi, setup.area);
                        C64::new(0.0, -4.0 * PI * EPS0 * setup.area / HBAR) * ts * ti * chi
                    })
                    .collect();
                for field in [Field::Signal, Field::Idler] {
                    let (own, partner, pmodes, own_pol, partner_pol) = match field {
                        Field::Signal => (&sig_media[k], &idl_media[n], &idl_modes[n], alpha, beta),
                        Field::Idler => (&idl_media[n], &sig_media[k], &sig_modes[k], beta, alpha),
                    };
                    for g in Dir::ALL {
                        let drive = Drive {
                            own,
                            partner_amps: &pmodes[g.index()].0,
                            partner,
                            kappa: kappa.clone(),
                            pump,
                            structure,
                            j,
                        };
                        let lv: Vec<Pair> = step_levels.iter().map(|s| drive.emitted(s)).collect();
                        let (best, err) = richardson(&lv);
                        let in_mode = Mode::new(g, partner_pol);
                        for a in Dir::ALL {
                            let v = best[a.index()];
                            out.push((field, Mode::new(a, own_pol), in_mode, k, n, v, err));
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut signal: BTreeMap<(Mode, Mode), Kernel> = BTreeMap::new();
    let mut idler: BTreeMap<(Mode, Mode), Kernel> = BTreeMap::new();
    let mut max_err: f64 = 0.0;
    let mut max_val: f64 = 0.0;
    for (field, om, im, k, n, v, err) in results.into_iter().flatten() {
        max_err = max_err.max(err);
        max_val = max_val.max(v.norm());
        match field {
            Field::Signal => signal.entry((om, im)).or_insert_with(|| CMatrix::zeros(ks, ki))[(k, n)] = v,
            Field::Idler => idler.entry((om, im)).or_insert_with(|| CMatrix::zeros(ki, ks))[(n, k)] = v,
        }
    }
    let linear = |modes: &[[(Vec<Pair>, Pair); 2]]| {
        let mut m = BTreeMap::new();
        for input in Dir::ALL {
            for output in Dir::ALL {
                let v: Vec<C64> = modes.iter().map(|md| md[input.index()].1[output.index()]).collect();
                m.insert((output, input), v);
            }
        }
        m
    };
    Ok(ReferenceKernels {
        signal,
        idler,
        linear_signal: linear(&sig_modes),
        linear_idler: linear(&idl_modes),
        error_estimate: if max_val > 0.0 { max_err / max_val } else { 0.0 },
    })
}

impl ReferenceKernels {
    /// Two-photon amplitude of channel `(signal out, idler out)`, symmetrized
    /// over the two photon branches exactly as the pipeline does.
    pub fn pair_amplitude(&self, s_out: Mode, i_out: Mode) -> CMatrix {
        let ks = self.linear_signal[&(Dir::F, Dir::F)].len();
        let ki = self.linear_idler[&(Dir::F, Dir::F)].len();
        let mut phi = CMatrix::zeros(ks, ki);
        // signal branch: emitted signal from idler input g, idler linearly scattered g → b
        for g in Dir::ALL {
            let in_i = Mode::new(g, i_out.pol);
            if let Some(kern) = self.signal.get(&(s_out, in_i)) {
                let lin = &self.linear_idler[&(i_out.dir, g)];
                for k in 0..ks {
                    for n in 0..ki {
                        phi[(k, n)] += 0.5 * kern[(k, n)] * lin[n];
                    }
                }
            }
        }
        // idler branch: emitted idler from signal input d, signal scattered d → a
        for d in Dir::ALL {
            let in_s = Mode::new(d, s_out.pol);
            if let Some(kern) = self.idler.get(&(i_out, in_s)) {
                let lin = &self.linear_signal[&(s_out.dir, d)];
                for k in 0..ks {
                    for n in 0..ki {
                        phi[(k, n)] += 0.5 * kern[(n, k)] * lin[k];
                    }
                }
            }
        }
        phi
    }
}

/// Total first-order two-photon amplitude of one channel, per (rad/s)².
pub fn reference_pair_amplitude(
    structure: &Structure,
    pump: &PumpField,
    setup: &SpectralSetup,
    s_out: Mode,
    i_out: Mode,
    opts: &OracleOptions,
) -> Result<CMatrix> {
    Ok(reference_kernels(structure, pump, setup, opts)?.pair_amplitude(s_out, i_out))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linear::{propagate_pump, PumpSpec};
    use crate::materials::{MaterialModel, PolTriple};
    use crate::structure::Layer;

    fn stack() -> Structure {
        let a = Arc::new(MaterialModel::constant("a", 2.3).with_chi2(PolTriple::new(Pol::Y, Pol::X, Pol::Y), 1e-12));
        let b = Arc::new(MaterialModel::constant("b", 1.6));
        let air = Arc::new(MaterialModel::constant("air", 1.0));
        let layer = |m: &Arc<MaterialModel>, len: f64| Layer {
            material: m.clone(),
            length: len,
            poling: 1.0,
        };
        Structure::new(air.clone(), air, vec![layer(&a, 50e-9), layer(&b, 20e-9)]).unwrap()
    }

    #[test]
    fn linear_modes_conserve_photons() {
        let s = stack();
        let m = media(&s, 2.5e15).unwrap();
        for input in Dir::ALL {
            let (amps, out) = linear_mode(&m, input);
            assert!((out[0].norm_sqr() + out[1].norm_sqr() - 1.0).abs() < 1e-13);
            // incoming amplitudes are the prescribed ones
            let (inc_l, inc_r) = (amps[0][0], amps[amps.len() - 1][1]);
            let expect = if input == Dir::F { (ONE, ZERO) } else { (ZERO, ONE) };
            assert!((inc_l - expect.0).norm() < 1e-13 && (inc_r - expect.1).norm() < 1e-13);
        }
    }

    #[test]
    fn richardson_removes_even_orders() {
        // f(h) = 1 + h² + h⁴ sampled at h, h/2, h/4 is recovered exactly
        let f = |h: f64| C64::new(1.0 + h * h + h.powi(4), 0.0);
        let lv: Vec<Pair> = [0.4, 0.2, 0.1].iter().map(|&h| [f(h), f(h) * 2.0]).collect();
        let (best, err) = richardson(&lv);
        assert!((best[0] - 1.0).norm() < 1e-13);
        assert!((best[1] - 2.0).norm() < 1e-13);
        assert!(err > 0.0);
    }

    #[test]
    fn too_few_steps_rejected() {
        let s = stack();
        let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap();
        let setup = SpectralSetup::symmetric(p.omega0, 0.4, 0.6, 2, 1.0).unwrap();
        let pump = propagate_pump(&s, &p, setup.pairs.omegas()).unwrap();
        let opts = OracleOptions {
            steps_per_min_layer: 4,
            levels: 2,
        };
        assert!(matches!(
            reference_kernels(&s, &pump, &setup, &opts),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn refinement_converges() {
        let s = stack();
        let p = PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap();
        let setup = SpectralSetup::symmetric(p.omega0, 0.4, 0.6, 2, 1.0).unwrap();
        let pump = propagate_pump(&s, &p, setup.pairs.omegas()).unwrap();
        let run = |levels| {
            reference_kernels(&s, &pump, &setup, &OracleOptions { steps_per_min_layer: 16, levels }).unwrap()
        };
        let best = run(3);
        assert!(best.error_estimate < 1e-6, "{}", best.error_estimate);
        let a = best.pair_amplitude(Mode::new(Dir::F, Pol::X), Mode::new(Dir::F, Pol::Y));
        let b = run(2).pair_amplitude(Mode::new(Dir::F, Pol::X), Mode::new(Dir::F, Pol::Y));
        assert!(a.max_abs() > 0.0);
        assert!(a.rel_diff(&b).unwrap() < 1e-4);
    }
}
