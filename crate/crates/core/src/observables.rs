//! Measurable quantities derived from the emission operators: two-photon
//! amplitudes, joint and marginal densities, pair counts, the surface/volume
//! ratios and temporal profiles.

use std::f64::consts::PI;

use crate::cmatrix::{CMatrix, C64};
use crate::emission::{Contribution, EmissionOperators, SuperLayout};
use crate::error::{Error, Result};
use crate::modes::{Channel, Field};
use crate::spectral::{SpectralBasis, SpectralSetup};

/// η_s is reported only where the volume marginal exceeds this fraction of
/// its maximum.
pub const ETA_RELATIVE_FLOOR: f64 = 1e-12;

/// Real array over (signal bin, idler bin), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn map(a: &CMatrix, f: impl Fn(C64) -> f64) -> Grid2 {
        Grid2 {
            rows: a.rows(),
            cols: a.cols(),
            data: a.as_slice().iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Complex amplitude over (ω_s bin, ω_i bin), per (rad/s), sampled at bin
/// centres.
#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    pub channel: Channel,
    /// `None` for the total amplitude.
    pub contribution: Option<Contribution>,
    pub values: CMatrix,
}

/// The two photon branches of one contribution: the signal emitted against
/// the scattered idler, and the idler emitted against the scattered signal.
#[derive(Debug, Clone)]
pub struct BranchAmplitudes {
    pub channel: Channel,
    pub contribution: Contribution,
    pub signal_branch: CMatrix,
    pub idler_branch: CMatrix,
}

impl BranchAmplitudes {
    /// Symmetrized amplitude `(φ_s + φ_i)/2`.
    pub fn amplitude(&self) -> CMatrix {
        let mut a = self.signal_branch.add(&self.idler_branch).expect("same shape");
        a = a.scale(C64::new(0.5, 0.0));
        a
    }

    /// `max|φ_s - φ_i| / max|φ|`, zero when both vanish. Exchange of the two
    /// creation operators must not matter, so this measures how well the
    /// discretized operators commute.
    pub fn commutator_residual(&self) -> f64 {
        let d = self.signal_branch.sub(&self.idler_branch).expect("same shape").max_abs();
        let s = self.signal_branch.max_abs().max(self.idler_branch.max_abs());
        if s == 0.0 {
            0.0
        } else {
            d / s
        }
    }
}

fn bin_scale(setup: &SpectralSetup) -> CMatrix {
    let ws = setup.signal.widths();
    let wi = setup.idler.widths();
    CMatrix::from_fn(ws.len(), wi.len(), |k, n| C64::new(1.0 / (ws[k] * wi[n]).sqrt(), 0.0))
}

fn hadamard(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)] * b[(r, c)])
}

/// Contracts 𝓖^w and 𝓕 over the shared input channels for one output
/// channel, returning both branches per (rad/s)².
///
/// `φ_s[k,n] = Σ_{g,γ,n'} G[s_{aα,k}, i†_{gγ,n'}] F_i[i_{bβ,n}, i_{gγ,n'}]`,
/// `φ_i[k,n] = Σ_{d,δ,k'} F_s[s_{aα,k}, s_{dδ,k'}] conj(G[i†_{bβ,n}, s_{dδ,k'}])`,
/// where `F_i` is the conjugate of the `i†` block of 𝓕.
pub fn branch_amplitudes(
    em: &EmissionOperators,
    setup: &SpectralSetup,
    w: Contribution,
    channel: Channel,
) -> Result<BranchAmplitudes> {
    let lay: SuperLayout = em.layout;
    if lay.signal_bins != setup.signal.len() || lay.idler_bins != setup.idler.len() {
        return Err(Error::DimensionMismatch("emission operators built on another basis".into()));
    }
    let g = em.g(w);
    let f = &em.f_linear;
    let (ks, ki) = (lay.signal_bins, lay.idler_bins);
    let blk = |m: &CMatrix, rf: Field, rs: usize, cf: Field, cs: usize| {
        m.block(lay.index(rf, rs, 0), lay.index(cf, cs, 0), lay.bins(rf), lay.bins(cf))
    };
    let a = channel.signal.slot();
    let b = channel.idler.slot();
    let mut phi_s = CMatrix::zeros(ks, ki);
    let mut phi_i = CMatrix::zeros(ks, ki);
    for slot in 0..4 {
        let gb = blk(g, Field::Signal, a, Field::Idler, slot);
        if gb.nnz() > 0 {
            let fi = blk(f, Field::Idler, b, Field::Idler, slot).conj();
            phi_s.add_assign(&gb.matmul(&fi.transpose())?)?;
        }
        let gi = blk(g, Field::Idler, b, Field::Signal, slot);
        if gi.nnz() > 0 {
            let fs = blk(f, Field::Signal, a, Field::Signal, slot);
            phi_i.add_assign(&fs.matmul(&gi.conj().transpose())?)?;
        }
    }
    let scale = bin_scale(setup);
    Ok(BranchAmplitudes {
        channel,
        contribution: w,
        signal_branch: hadamard(&phi_s, &scale),
        idler_branch: hadamard(&phi_i, &scale),
    })
}

/// Joint photon-number densities of one channel, in s² (per (rad/s)² per
/// unit transverse area used for the coupling).
#[derive(Debug, Clone)]
pub struct JointDensity {
    pub channel: Channel,
    pub n_v: Grid2,
    pub n_s: Grid2,
    pub n_i: Grid2,
    pub n_sv: Grid2,
}

/// Builds `n^V = |φ^V|²`, `n^S = |φ^S|²`, `n^I = 2 Re(φ^{V*} φ^S)` and
/// `n^SV = n^V + n^S + n^I` from the symmetrized branch amplitudes.
pub fn joint_density(v: &BranchAmplitudes, s: &BranchAmplitudes) -> JointDensity {
    assert_eq!(v.channel, s.channel, "branches of different channels");
    let pv = v.amplitude();
    let ps = s.amplitude();
    let n_v = Grid2::map(&pv, |x| x.norm_sqr());
    let n_s = Grid2::map(&ps, |x| x.norm_sqr());
    let cross = CMatrix::from_fn(pv.rows(), pv.cols(), |r, c| pv[(r, c)].conj() * ps[(r, c)]);
    let n_i = Grid2::map(&cross, |x| 2.0 * x.re);
    let mut n_sv = Grid2::zeros(pv.rows(), pv.cols());
    for i in 0..n_sv.data.len() {
        n_sv.data[i] = n_v.data[i] + n_s.data[i] + n_i.data[i];
    }
    // the total must also be the squared modulus of the total amplitude
    for r in 0..pv.rows() {
        for c in 0..pv.cols() {
            let direct = (pv[(r, c)] + ps[(r, c)]).norm_sqr();
            let scale = n_v.get(r, c) + n_s.get(r, c);
            assert!(
                (direct - n_sv.get(r, c)).abs() <= 1e-12 * scale + f64::MIN_POSITIVE,
                "decomposition identity violated at ({r}, {c})"
            );
        }
    }
    JointDensity {
        channel: v.channel,
        n_v,
        n_s,
        n_i,
        n_sv,
    }
}

/// Marginals, counts and ratios of one channel.
#[derive(Debug, Clone)]
pub struct Marginals {
    /// Signal marginals n_s(ω_s) in s (per rad/s), per contribution.
    pub n_s_v: Vec<f64>,
    pub n_s_s: Vec<f64>,
    pub n_s_i: Vec<f64>,
    pub n_s_sv: Vec<f64>,
    /// Pair numbers per transverse area of the coupling (1 m² by default).
    pub count_v: f64,
    pub count_s: f64,
    pub count_i: f64,
    pub count_sv: f64,
    /// `n_s^S / n_s^V` where the volume marginal is above the relative floor.
    pub eta_s: Vec<Option<f64>>,
    /// `N^S / N^V`, absent when there is no volume emission.
    pub ratio_r: Option<f64>,
}

impl Marginals {
    /// Counts per mm² for a coupling area of `area` m².
    pub fn per_mm2(count: f64, area: f64) -> f64 {
        count / area * 1e-6
    }
}

/// Bin-sum quadrature of the joint density over the idler, then the signal.
pub fn marginals_and_counts(jd: &JointDensity, signal: &SpectralBasis, idler: &SpectralBasis) -> Marginals {
    let marg = |g: &Grid2| -> Vec<f64> {
        (0..g.rows)
            .map(|k| (0..g.cols).map(|n| g.get(k, n) * idler.widths()[n]).sum())
            .collect()
    };
    let total = |m: &[f64]| -> f64 { m.iter().zip(signal.widths()).map(|(a, w)| a * w).sum() };
    let n_s_v = marg(&jd.n_v);
    let n_s_s = marg(&jd.n_s);
    let n_s_i = marg(&jd.n_i);
    let n_s_sv = marg(&jd.n_sv);
    let count_v = total(&n_s_v);
    let count_s = total(&n_s_s);
    let floor = ETA_RELATIVE_FLOOR * n_s_v.iter().cloned().fold(0.0, f64::max);
    let eta_s = n_s_v
        .iter()
        .zip(&n_s_s)
        .map(|(&v, &s)| if v > floor && v > 0.0 { Some(s / v) } else { None })
        .collect();
    Marginals {
        count_i: total(&n_s_i),
        count_sv: total(&n_s_sv),
        ratio_r: if count_v > 0.0 { Some(count_s / count_v) } else { None },
        eta_s,
        n_s_v,
        n_s_s,
        n_s_i,
        n_s_sv,
        count_v,
        count_s,
    }
}

/// Total two-photon amplitude `φ^V + φ^S` of one channel.
pub fn two_photon_amplitude(v: &BranchAmplitudes, s: &BranchAmplitudes) -> JointSpectralAmplitude {
    assert_eq!(v.channel, s.channel, "branches of different channels");
    JointSpectralAmplitude {
        channel: v.channel,
        contribution: None,
        values: v.amplitude().add(&s.amplitude()).expect("same shape"),
    }
}

/// Uniform time axis. `points` samples cover `[center - span/2, center + span/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub points: usize,
    pub span: f64,
    pub center: f64,
}

impl TimeGrid {
    /// One alias period `2π/Δω` of the basis with `points` samples.
    pub fn alias_period(signal: &SpectralBasis, idler: &SpectralBasis, points: usize) -> Self {
        let dw = signal.spacing().max(idler.spacing());
        TimeGrid {
            points,
            span: 2.0 * PI / dw,
            center: 0.0,
        }
    }

    pub fn step(&self) -> f64 {
        self.span / self.points as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let t0 = self.center - 0.5 * self.span;
        (0..self.points).map(|i| t0 + i as f64 * self.step()).collect()
    }
}

/// Temporal joint density `p(t_s, t_i)` and signal flux `p_s(t_s)`.
#[derive(Debug, Clone)]
pub struct TemporalProfile {
    pub times: Vec<f64>,
    pub dt: f64,
    /// `p[t_s][t_i]` row-major, normalized so that Σ p dt² = 1.
    pub joint: Grid2,
    pub flux: Vec<f64>,
    /// Σ|φ̃|² dt² / (2π)², equal to Σ|φ|² Δω_s Δω_i on an alias-free grid.
    pub time_norm: f64,
    pub spectral_norm: f64,
}

fn check_grid(basis: &SpectralBasis, grid: &TimeGrid) -> Result<()> {
    let period = 2.0 * PI / basis.spacing();
    if grid.span > period * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "time window {:.3e} s exceeds the alias period {:.3e} s of the frequency bins",
            grid.span, period
        )));
    }
    let bandwidth = basis.omega_max() - basis.omega_min();
    if grid.step() > 2.0 * PI / bandwidth * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "time step {:.3e} s does not resolve the {:.3e} rad/s band",
            grid.step(),
            bandwidth
        )));
    }
    Ok(())
}

/// `φ̃(t_s, t_i) = Σ_k Σ_n φ[k,n] e^{-iω_k t_s - iω_n t_i} Δω_k Δω_n` on the
/// given grid, then normalized to a probability density.
pub fn temporal_profiles(
    phi: &CMatrix,
    signal: &SpectralBasis,
    idler: &SpectralBasis,
    grid: &TimeGrid,
) -> Result<TemporalProfile> {
    check_grid(signal, grid)?;
    check_grid(idler, grid)?;
    let times = grid.times();
    let m = times.len();
    let kernel = |basis: &SpectralBasis| {
        CMatrix::from_fn(m, basis.len(), |t, k| {
            C64::from_polar(basis.widths()[k], -basis.centers()[k] * times[t])
        })
    };
    let es = kernel(signal);
    let ei = kernel(idler);
    let amp = es.matmul(phi)?.matmul(&ei.transpose())?;
    let dt = grid.step();
    let mut joint = Grid2::map(&amp, |x| x.norm_sqr());
    let raw: f64 = joint.data.iter().sum::<f64>() * dt * dt;
    let spectral_norm: f64 = (0..phi.rows())
        .flat_map(|k| (0..phi.cols()).map(move |n| (k, n)))
        .map(|(k, n)| phi[(k, n)].norm_sqr() * signal.widths()[k] * idler.widths()[n])
        .sum();
    if raw <= 0.0 {
        return Err(Error::NoPeak);
    }
    joint.data.iter_mut().for_each(|v| *v /= raw);
    let flux = (0..m).map(|t| (0..m).map(|u| joint.get(t, u)).sum::<f64>() * dt).collect();
    Ok(TemporalProfile {
        times,
        dt,
        joint,
        flux,
        time_norm: raw / (4.0 * PI * PI),
        spectral_norm,
    })
}

/// Result of a half-maximum width measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Width {
    pub fwhm: f64,
    pub peak_x: f64,
    pub peak_y: f64,
    /// Strongest local maximum outside the main lobe, as `(x, y)`.
    pub secondary: Option<(f64, f64)>,
}

/// Full width at half maximum of the global peak with linear interpolation
/// of both half-maximum crossings.
pub fn width_fwhm(x: &[f64], y: &[f64]) -> Result<Width> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::NoPeak);
    }
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(ymax.is_finite() && ymax > 0.0 && ymax > ymin) {
        return Err(Error::NoPeak);
    }
    let half = 0.5 * ymax;
    let mut left = None;
    for i in (0..imax).rev() {
        if y[i] <= half {
            let t = (half - y[i]) / (y[i + 1] - y[i]);
            left = Some((i, x[i] + t * (x[i + 1] - x[i])));
            break;
        }
    }
    let mut right = None;
    for i in imax + 1..y.len() {
        if y[i] <= half {
            let t = (y[i - 1] - half) / (y[i - 1] - y[i]);
            right = Some((i, x[i - 1] + t * (x[i] - x[i - 1])));
            break;
        }
    }
    let ((li, xl), (ri, xr)) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::NoPeak),
    };
    let mut secondary: Option<(f64, f64)> = None;
    for i in 1..y.len() - 1 {
        if (i <= li || i >= ri) && y[i] > y[i - 1] && y[i] >= y[i + 1]
            && secondary.is_none_or(|(_, s)| y[i] > s) {
                secondary = Some((x[i], y[i]));
            }
    }
    Ok(Width {
        fwhm: xr - xl,
        peak_x: x[imax],
        peak_y: ymax,
        secondary,
    })
}

/// Every observable of one channel.
#[derive(Debug, Clone)]
pub struct ChannelObservables {
    pub volume: BranchAmplitudes,
    pub surface: BranchAmplitudes,
    pub density: JointDensity,
    pub marginals: Marginals,
    pub total: JointSpectralAmplitude,
}

/// Branches, densities, marginals and total amplitude of one channel.
pub fn channel_observables(
    em: &EmissionOperators,
    setup: &SpectralSetup,
    channel: Channel,
) -> Result<ChannelObservables> {
    let volume = branch_amplitudes(em, setup, Contribution::V, channel)?;
    let surface = branch_amplitudes(em, setup, Contribution::S, channel)?;
    let density = joint_density(&volume, &surface);
    let marginals = marginals_and_counts(&density, &setup.signal, &setup.idler);
    let total = two_photon_amplitude(&volume, &surface);
    Ok(ChannelObservables {
        volume,
        surface,
        density,
        marginals,
        total,
    })
}
