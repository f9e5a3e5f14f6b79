//! `simulate`: one structure, every requested channel, spectra, counts and
//! temporal profiles.

use rayon::prelude::*;
use serde::Serialize;
use spdc_core::{
    linear_transmission, temporal_profiles, width_fwhm, Channel, ChannelObservables, CMatrix, Simulation,
    SpectralSetup, TemporalProfile, TimeGrid,
};

use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::output::{fmt_num, OutDir};

/// Pair numbers per mm² for the coupling area of the basis (1 m²).
const PER_MM2: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub n_v_per_mm2: f64,
    pub n_s_per_mm2: f64,
    pub n_i_per_mm2: f64,
    pub n_sv_per_mm2: f64,
    /// N^S / N^V, absent without volume emission.
    pub ratio_r: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TemporalSummary {
    pub time_points: usize,
    pub time_step_s: f64,
    pub window_s: f64,
    /// Peak positions of the signal fluxes, s.
    pub flux_peak_v_s: Option<f64>,
    pub flux_peak_s_s: Option<f64>,
    pub flux_peak_sv_s: Option<f64>,
    /// FWHM of the complete-process signal flux, s.
    pub flux_fwhm_sv_s: Option<f64>,
    /// FWHM in t_s of the complete-process joint density at the idler time
    /// of its maximum, s.
    pub conditional_fwhm_sv_s: Option<f64>,
    pub parseval_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSummary {
    pub channel: String,
    pub no_emission: bool,
    pub counts: Counts,
    /// Densities at ω_s = ω_i closest to ω_p⁰/2, s².
    pub central_n_v: f64,
    pub central_n_s: f64,
    pub central_n_sv: f64,
    pub max_n_sv: f64,
    /// Largest relative difference between the two photon branches of the
    /// total amplitude.
    pub branch_residual: f64,
    pub temporal: Option<TemporalSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub version: String,
    pub config_hash: String,
    pub seedless: bool,
    pub layers: usize,
    pub total_length_nm: f64,
    pub pump_omega0_rad_per_s: f64,
    pub pump_transmittance: f64,
    pub bins: usize,
    pub window: [f64; 2],
    pub channels: Vec<ChannelSummary>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

struct ChannelResult {
    channel: Channel,
    obs: ChannelObservables,
    temporal: Option<[TemporalProfile; 3]>,
    temporal_error: Option<String>,
}

fn emits(obs: &ChannelObservables) -> bool {
    obs.density.n_v.max() > 0.0 || obs.density.n_s.max() > 0.0
}

pub(crate) fn time_grid(setup: &SpectralSetup, duration: f64, points: usize) -> TimeGrid {
    let mut g = TimeGrid::alias_period(&setup.signal, &setup.idler, points);
    // ±10 pump durations unless the bin spacing aliases earlier
    g.span = g.span.min(20.0 * duration);
    g
}

fn peak_time(p: &TemporalProfile) -> Option<f64> {
    width_fwhm(&p.times, &p.flux).ok().map(|w| w.peak_x)
}

fn conditional_width(p: &TemporalProfile) -> Option<f64> {
    let (imax, _) = p
        .joint
        .data
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let col = imax % p.joint.cols;
    let slice: Vec<f64> = (0..p.joint.rows).map(|r| p.joint.get(r, col)).collect();
    width_fwhm(&p.times, &slice).ok().map(|w| w.fwhm)
}

pub fn run(cfg: &LoadedConfig, seedless: bool) -> CliResult<SimulateSummary> {
    let c = &cfg.config;
    let structure = cfg.structure()?;
    let pump = c.pump.spec()?;
    let setup = c.basis.setup(&pump)?;
    let channels = c.simulate.channels()?;
    let mut sim = Simulation::new(structure.clone(), pump, setup.clone());
    sim.options = c.simulate.emission_options();
    sim.channels = channels.clone();
    let out = sim.run()?;
    let grid = time_grid(&setup, pump.duration_fwhm(), c.simulate.time_points);

    let results: Vec<ChannelResult> = channels
        .par_iter()
        .map(|ch| {
            let obs = out.channels[ch].clone();
            let (temporal, temporal_error) = if emits(&obs) {
                let amp = |m: &CMatrix| temporal_profiles(m, &setup.signal, &setup.idler, &grid);
                match (amp(&obs.volume.amplitude()), amp(&obs.surface.amplitude()), amp(&obs.total.values)) {
                    (Ok(v), Ok(s), Ok(t)) => (Some([v, s, t]), None),
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => (None, Some(e.to_string())),
                }
            } else {
                (None, None)
            };
            ChannelResult {
                channel: *ch,
                obs,
                temporal,
                temporal_error,
            }
        })
        .collect();

    let dir = OutDir::create(&c.out_dir)?;
    let mut files = Vec::new();
    let mut warnings = out.emission.warnings.clone();
    let mut summaries = Vec::new();
    let k = setup.signal.len();
    let centre = k / 2;
    for r in &results {
        let tag = r.channel.to_string();
        let d = &r.obs.density;
        let m = &r.obs.marginals;
        let emitting = emits(&r.obs);
        let (ws, wi) = (setup.signal.centers(), setup.idler.centers());
        let joint_rows = (0..k).flat_map(|a| {
            (0..wi.len()).map(move |b| {
                vec![
                    ws[a],
                    wi[b],
                    d.n_v.get(a, b),
                    d.n_s.get(a, b),
                    d.n_i.get(a, b),
                    d.n_sv.get(a, b),
                ]
            })
        });
        let header = [
            "omega_s_rad_per_s",
            "omega_i_rad_per_s",
            "n_V_s2",
            "n_S_s2",
            "n_I_s2",
            "n_SV_s2",
        ];
        let name = format!("joint_{tag}.csv");
        if emitting {
            dir.csv(&name, &header, joint_rows)?;
        } else {
            dir.csv(&name, &header, std::iter::empty::<Vec<f64>>())?;
        }
        files.push(name);

        let marg: Vec<Vec<String>> = if emitting {
            (0..k)
                .map(|a| {
                    vec![
                        fmt_num(setup.signal.centers()[a]),
                        fmt_num(m.n_s_v[a]),
                        fmt_num(m.n_s_s[a]),
                        fmt_num(m.n_s_i[a]),
                        fmt_num(m.n_s_sv[a]),
                        m.eta_s[a].map(fmt_num).unwrap_or_default(),
                    ]
                })
                .collect()
        } else {
            Vec::new()
        };
        let name = format!("marginal_{tag}.csv");
        dir.csv_text(
            &name,
            &["omega_s_rad_per_s", "n_s_V_s", "n_s_S_s", "n_s_I_s", "n_s_SV_s", "eta_s"],
            &marg,
        )?;
        files.push(name);

        if emitting {
            let name = format!("profile_{tag}.csv");
            let rows = (0..k).map(|a| {
                let b = k - 1 - a;
                vec![
                    setup.signal.centers()[a] / pump.omega0,
                    d.n_v.get(a, b),
                    d.n_s.get(a, b),
                    d.n_sv.get(a, b),
                ]
            });
            dir.csv(&name, &["omega_s_over_omega_p", "n_V_s2", "n_S_s2", "n_SV_s2"], rows)?;
            files.push(name);
        }

        let temporal = match &r.temporal {
            Some([v, s, t]) => {
                let name = format!("flux_{tag}.csv");
                let rows = (0..t.times.len()).map(|i| vec![t.times[i], v.flux[i], s.flux[i], t.flux[i]]);
                dir.csv(&name, &["t_s_s", "p_s_V_per_s", "p_s_S_per_s", "p_s_SV_per_s"], rows)?;
                files.push(name);
                let name = format!("temporal_{tag}.csv");
                let stride = c.simulate.joint_time_stride;
                let idx: Vec<usize> = (0..t.times.len()).step_by(stride).collect();
                let rows = idx
                    .iter()
                    .flat_map(|&a| idx.iter().map(move |&b| vec![t.times[a], t.times[b], t.joint.get(a, b)]));
                dir.csv(&name, &["t_s_s", "t_i_s", "p_SV_per_s2"], rows)?;
                files.push(name);
                Some(TemporalSummary {
                    time_points: t.times.len(),
                    time_step_s: t.dt,
                    window_s: grid.span,
                    flux_peak_v_s: peak_time(v),
                    flux_peak_s_s: peak_time(s),
                    flux_peak_sv_s: peak_time(t),
                    flux_fwhm_sv_s: width_fwhm(&t.times, &t.flux).ok().map(|w| w.fwhm),
                    conditional_fwhm_sv_s: conditional_width(t),
                    parseval_relative_error: (t.time_norm - t.spectral_norm).abs() / t.spectral_norm,
                })
            }
            None => None,
        };
        if let Some(e) = &r.temporal_error {
            warnings.push(format!("{tag}: temporal profile skipped: {e}"));
        }
        let residual = {
            let v = &r.obs.volume;
            let s = &r.obs.surface;
            let sig = v.signal_branch.add(&s.signal_branch)?;
            let idl = v.idler_branch.add(&s.idler_branch)?;
            let scale = sig.max_abs().max(idl.max_abs());
            if scale > 0.0 {
                sig.sub(&idl)?.max_abs() / scale
            } else {
                0.0
            }
        };
        summaries.push(ChannelSummary {
            channel: tag,
            no_emission: !emitting,
            counts: Counts {
                n_v_per_mm2: m.count_v * PER_MM2,
                n_s_per_mm2: m.count_s * PER_MM2,
                n_i_per_mm2: m.count_i * PER_MM2,
                n_sv_per_mm2: m.count_sv * PER_MM2,
                ratio_r: m.ratio_r,
            },
            central_n_v: d.n_v.get(centre, k - 1 - centre),
            central_n_s: d.n_s.get(centre, k - 1 - centre),
            central_n_sv: d.n_sv.get(centre, k - 1 - centre),
            max_n_sv: d.n_sv.max(),
            branch_residual: residual,
            temporal,
        });
    }
    let t = linear_transmission(&structure, pump.omega0, pump.side)?;
    let summary = SimulateSummary {
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seedless,
        layers: structure.n_layers(),
        total_length_nm: structure.total_length() * 1e9,
        pump_omega0_rad_per_s: pump.omega0,
        pump_transmittance: t.transmittance,
        bins: k,
        window: [c.basis.window_lo, c.basis.window_hi],
        channels: summaries,
        warnings,
        files: {
            files.push("summary.json".into());
            files
        },
    };
    dir.json("summary.json", &summary)?;
    Ok(summary)
}

/// Pair numbers of one channel for a structure, used by scans.
pub fn counts_for(
    structure: &spdc_core::Structure,
    pump: &spdc_core::PumpSpec,
    setup: &SpectralSetup,
    channel: Channel,
    options: spdc_core::EmissionOptions,
) -> CliResult<Counts> {
    let mut sim = Simulation::new(structure.clone(), *pump, setup.clone());
    sim.options = options;
    sim.channels = vec![channel];
    let out = sim.run()?;
    let m = &out.channels[&channel].marginals;
    Ok(Counts {
        n_v_per_mm2: m.count_v * PER_MM2,
        n_s_per_mm2: m.count_s * PER_MM2,
        n_i_per_mm2: m.count_i * PER_MM2,
        n_sv_per_mm2: m.count_sv * PER_MM2,
        ratio_r: m.ratio_r,
    })
}
