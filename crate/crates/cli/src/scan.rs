//! `transmission-map` and `scan`: pump transmittance over a grid of the two
//! thicknesses of a bilayer period, transmission-ridge tracking and pair
//! numbers along the ridges.

use rayon::prelude::*;
use serde::Serialize;
use spdc_core::{linear_transmission, Channel, LayerSpec, PumpSpec, SpectralSetup, Structure, StructureSpec};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_num, OutDir};
use crate::simulate::{counts_for, Counts};

/// Largest |T + R - 1| accepted for a cell to count as converged.
const ENERGY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionMap {
    pub l1_nm: Vec<f64>,
    pub l2_nm: Vec<f64>,
    /// `t_p[i][j]` at `(l1_nm[i], l2_nm[j])`.
    pub t_p: Vec<Vec<f64>>,
    /// Cells whose energy balance missed the tolerance.
    pub flagged: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RidgeStatus {
    Complete,
    /// The nearest maximum in the next row was more than the allowed jump
    /// away, or another ridge claimed it.
    RidgeLost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgePoint {
    pub l1_nm: f64,
    pub l2_nm: f64,
    pub t_p: f64,
    pub counts: Option<Counts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ridge {
    pub id: usize,
    pub status: RidgeStatus,
    /// l1 of the first row the ridge could not be continued into.
    pub lost_at_l1_nm: Option<f64>,
    /// Grid cells `(l1 index, l2 index)` along the ridge.
    pub cells: Vec<(usize, usize)>,
    pub points: Vec<RidgePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub version: String,
    pub config_hash: String,
    pub channel: String,
    pub map: TransmissionMap,
    pub ridges: Vec<Ridge>,
}

fn linspace(r: [f64; 2], n: usize) -> Vec<f64> {
    (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect()
}

/// The config structure with the two layers of its period set to `l1`, `l2`.
pub fn bilayer_with(spec: &StructureSpec, l1: f64, l2: f64) -> CliResult<StructureSpec> {
    if spec.layers.len() != 2 {
        return Err(CliError::Config(format!(
            "scan needs a two-layer period, the structure has {}",
            spec.layers.len()
        )));
    }
    let mut s = spec.clone();
    s.layers = vec![
        LayerSpec {
            length_nm: l1,
            ..spec.layers[0].clone()
        },
        LayerSpec {
            length_nm: l2,
            ..spec.layers[1].clone()
        },
    ];
    Ok(s)
}

/// Pump transmittance over the grid. Cells are evaluated in `order` (a
/// permutation of the flattened cell indices) when given; the result does
/// not depend on it.
pub fn transmission_map(cfg: &LoadedConfig, order: Option<&[usize]>) -> CliResult<TransmissionMap> {
    let c = &cfg.config;
    let spec = c
        .structure
        .as_ref()
        .ok_or_else(|| CliError::Config("scan needs a structure".into()))?;
    let pump = c.pump.spec()?;
    let l1 = linspace(c.scan.l1_range_nm, c.scan.l1_points);
    let l2 = linspace(c.scan.l2_range_nm, c.scan.l2_points);
    let n2 = l2.len();
    let total = l1.len() * n2;
    let idx: Vec<usize> = match order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (0..total).collect::<Vec<_>>() {
                return Err(CliError::Config("cell order is not a permutation".into()));
            }
            o.to_vec()
        }
        None => (0..total).collect(),
    };
    let cells: Vec<(usize, f64, bool)> = idx
        .par_iter()
        .map(|&cell| -> CliResult<_> {
            let (i, j) = (cell / n2, cell % n2);
            let s = bilayer_with(spec, l1[i], l2[j])?.resolve(&cfg.library)?;
            let t = linear_transmission(&s, pump.omega0, pump.side)?;
            let ok = (t.transmittance + t.reflectance - 1.0).abs() <= ENERGY_TOLERANCE;
            Ok((cell, t.transmittance, ok))
        })
        .collect::<CliResult<_>>()?;
    let mut t_p = vec![vec![0.0; n2]; l1.len()];
    let mut flagged = Vec::new();
    let mut by_cell = cells;
    by_cell.sort_by_key(|c| c.0);
    for (cell, t, ok) in by_cell {
        t_p[cell / n2][cell % n2] = t;
        if !ok {
            flagged.push((cell / n2, cell % n2));
        }
    }
    Ok(TransmissionMap {
        l1_nm: l1,
        l2_nm: l2,
        t_p,
        flagged,
    })
}

fn row_maxima(row: &[f64]) -> Vec<usize> {
    (1..row.len() - 1)
        .filter(|&j| row[j] > row[j - 1] && row[j] >= row[j + 1])
        .collect()
}

/// Nearest-maximum continuation from every local maximum of the first row.
pub fn track_ridges(map: &TransmissionMap, max_jump: usize) -> Vec<Ridge> {
    let first = row_maxima(&map.t_p[0]);
    let mut ridges: Vec<Ridge> = first
        .iter()
        .enumerate()
        .map(|(id, &j)| Ridge {
            id,
            status: RidgeStatus::Complete,
            lost_at_l1_nm: None,
            cells: vec![(0, j)],
            points: Vec::new(),
        })
        .collect();
    for i in 1..map.l1_nm.len() {
        let maxima = row_maxima(&map.t_p[i]);
        // proposed continuation of every live ridge: (ridge, target, distance)
        let mut proposals: Vec<(usize, usize, usize)> = Vec::new();
        for (r, ridge) in ridges.iter_mut().enumerate() {
            if ridge.status != RidgeStatus::Complete {
                continue;
            }
            let last = ridge.cells.last().unwrap().1;
            let best = maxima.iter().map(|&m| (m.abs_diff(last), m)).min();
            match best {
                Some((d, m)) if d <= max_jump => proposals.push((r, m, d)),
                _ => {
                    ridge.status = RidgeStatus::RidgeLost;
                    ridge.lost_at_l1_nm = Some(map.l1_nm[i]);
                }
            }
        }
        // two ridges reaching the same maximum merge; the farther one is lost
        proposals.sort_by_key(|&(r, m, d)| (m, d, r));
        let mut taken: Option<usize> = None;
        for (r, m, _) in proposals {
            if taken == Some(m) {
                ridges[r].status = RidgeStatus::RidgeLost;
                ridges[r].lost_at_l1_nm = Some(map.l1_nm[i]);
            } else {
                ridges[r].cells.push((i, m));
                taken = Some(m);
            }
        }
    }
    ridges
}

pub fn run_scan(cfg: &LoadedConfig, with_counts: bool, order: Option<&[usize]>) -> CliResult<ScanResult> {
    let c = &cfg.config;
    let map = transmission_map(cfg, order)?;
    let channel: Channel = c
        .scan
        .channel
        .parse()
        .map_err(|e| CliError::Config(format!("scan.channel: {e}")))?;
    let mut ridges = if c.scan.ridges || with_counts {
        track_ridges(&map, c.scan.max_jump)
    } else {
        Vec::new()
    };
    let pump: PumpSpec = c.pump.spec()?;
    let setup = SpectralSetup::symmetric(pump.omega0, c.basis.window_lo, c.basis.window_hi, c.scan.bins, 1.0)?;
    let spec = c.structure.as_ref().expect("checked by transmission_map");
    let opts = c.simulate.emission_options();
    for ridge in &mut ridges {
        let pts: Vec<RidgePoint> = ridge
            .cells
            .par_iter()
            .map(|&(i, j)| -> CliResult<RidgePoint> {
                let (l1, l2) = (map.l1_nm[i], map.l2_nm[j]);
                let counts = if with_counts {
                    let s: Structure = bilayer_with(spec, l1, l2)?.resolve(&cfg.library)?;
                    Some(counts_for(&s, &pump, &setup, channel, opts)?)
                } else {
                    None
                };
                Ok(RidgePoint {
                    l1_nm: l1,
                    l2_nm: l2,
                    t_p: map.t_p[i][j],
                    counts,
                })
            })
            .collect::<CliResult<_>>()?;
        ridge.points = pts;
    }
    Ok(ScanResult {
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        channel: channel.to_string(),
        map,
        ridges,
    })
}

pub fn write_map(dir: &OutDir, map: &TransmissionMap) -> CliResult<()> {
    let mut rows = Vec::with_capacity(map.l1_nm.len() * map.l2_nm.len());
    for (i, &a) in map.l1_nm.iter().enumerate() {
        for (j, &b) in map.l2_nm.iter().enumerate() {
            let ok = !map.flagged.contains(&(i, j));
            rows.push(vec![fmt_num(a), fmt_num(b), fmt_num(map.t_p[i][j]), ok.to_string()]);
        }
    }
    dir.csv_text("transmission_map.csv", &["l1_nm", "l2_nm", "T_p", "converged"], &rows)?;
    Ok(())
}

pub fn write_scan(dir: &OutDir, scan: &ScanResult) -> CliResult<()> {
    write_map(dir, &scan.map)?;
    let mut rows = Vec::new();
    for r in &scan.ridges {
        for p in &r.points {
            let c = p.counts.as_ref();
            let f = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            rows.push(vec![
                r.id.to_string(),
                fmt_num(p.l1_nm),
                fmt_num(p.l2_nm),
                fmt_num(p.t_p),
                f(c.map(|c| c.n_v_per_mm2)),
                f(c.map(|c| c.n_s_per_mm2)),
                f(c.map(|c| c.n_sv_per_mm2)),
                f(c.and_then(|c| c.ratio_r)),
                match r.status {
                    RidgeStatus::Complete => "complete".into(),
                    RidgeStatus::RidgeLost => "ridge-lost".into(),
                },
            ]);
        }
    }
    dir.csv_text(
        "ridges.csv",
        &[
            "ridge",
            "l1_nm",
            "l2_nm",
            "T_p",
            "N_V_per_mm2",
            "N_S_per_mm2",
            "N_SV_per_mm2",
            "R",
            "status",
        ],
        &rows,
    )?;
    dir.json("scan.json", scan)?;
    Ok(())
}
