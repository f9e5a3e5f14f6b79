//! A single nonlinear layer embedded in an index-matched ambient has no
//! reflections, so the first-order amplitude along ω_s + ω_i = ω_p⁰ is the
//! phase-matching sinc times the slowly varying prefactor.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::*;
use spdc_core::constants::C;
use spdc_core::*;

fn dispersive(chi: f64) -> MaterialModel {
    let disp = Dispersion::Sellmeier {
        a0: 3.6,
        terms: vec![SellmeierTerm { b: 1.75, c_um2: 0.065 }],
    };
    let mut pol = BTreeMap::new();
    if chi != 0.0 {
        pol.insert(PolTriple::new(Pol::Y, Pol::X, Pol::Y), chi);
    }
    MaterialModel::new("gan-like", disp, Some((1.5e14, 6e15)), pol).unwrap()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn check(sig: Dir, idl: Dir, length_nm: f64) -> f64 {
    let m = Arc::new(dispersive(3e-12));
    let amb = Arc::new(dispersive(0.0).linear_copy("ambient"));
    let s = Structure::new(amb.clone(), amb, vec![layer(&m, length_nm, 1.0)]).unwrap();
    let p = pump();
    let k = 32;
    let setup = SpectralSetup::symmetric(p.omega0, 0.3, 0.7, k, 1.0).unwrap();
    let em = emission(&s, &p, &setup, &EmissionOptions::default());
    let ch = Channel::new(Mode::new(sig, Pol::X), Mode::new(idl, Pol::Y));
    let phi = channel_observables(&em, &setup, ch).unwrap().total.values;
    let wn = |w: f64| m.refractive_index(w).unwrap() * w / C;
    let len = length_nm * 1e-9;
    let mut ratios = Vec::new();
    let mut lo = f64::INFINITY;
    for a in 0..k {
        let b = k - 1 - a;
        let ws = setup.signal.centers()[a];
        let wi = setup.idler.centers()[b];
        let wp = ws + wi;
        let dk = wn(wp) - sig.sign() * wn(ws) - idl.sign() * wn(wi);
        // |κ| ∝ sqrt(ω_s ω_i / (n_s n_i)); the pump amplitude is fixed on this line
        let n = |w: f64| m.refractive_index(w).unwrap();
        let pre = (ws * wi / (n(ws) * n(wi))).sqrt();
        let expect = pre * len * sinc(dk * len / 2.0).abs();
        ratios.push(phi[(a, b)].norm() / expect);
        lo = lo.min(sinc(dk * len / 2.0).abs());
    }
    // the sinc must actually vary across the window for the check to bite
    assert!(lo < 0.9, "phase mismatch too small to test: {lo}");
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ratios.iter().map(|r| (r / mean - 1.0).abs()).fold(0.0, f64::max)
}

#[test]
fn co_propagating_pairs_follow_sinc() {
    for len in [1500.0, 4000.0] {
        let dev = check(Dir::F, Dir::F, len);
        assert!(dev < 1e-6, "L = {len} nm: {dev:e}");
    }
}

#[test]
fn counter_propagating_pairs_follow_sinc() {
    for (s, i) in [(Dir::F, Dir::B), (Dir::B, Dir::F), (Dir::B, Dir::B)] {
        let dev = check(s, i, 700.0);
        assert!(dev < 1e-6, "{s:?}{i:?}: {dev:e}");
    }
}
