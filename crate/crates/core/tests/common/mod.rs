#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdc_core::*;

pub fn air() -> Arc<MaterialModel> {
    Arc::new(MaterialModel::constant("air", 1.0))
}

pub fn nonlinear(name: &str, n: f64, chi: &[(Pol, Pol, Pol, f64)]) -> Arc<MaterialModel> {
    let mut m = MaterialModel::constant(name, n);
    for &(p, s, i, v) in chi {
        m = m.with_chi2(PolTriple::new(p, s, i), v);
    }
    Arc::new(m)
}

pub fn layer(m: &Arc<MaterialModel>, nm: f64, poling: f64) -> Layer {
    Layer {
        material: m.clone(),
        length: nm * 1e-9,
        poling,
    }
}

/// Four-layer stack with two nonlinear materials, a poling flip and cross
/// polarization terms.
pub fn four_layers() -> Structure {
    let a = nonlinear("a", 2.3, &[(Pol::Y, Pol::X, Pol::Y, 2.7e-12), (Pol::Y, Pol::Y, Pol::X, 1.1e-12)]);
    let b = nonlinear("b", 1.9, &[(Pol::Y, Pol::X, Pol::Y, -0.8e-12)]);
    Structure::new(
        air(),
        air(),
        vec![layer(&a, 60.0, 1.0), layer(&b, 13.0, 1.0), layer(&a, 45.0, -1.0), layer(&b, 20.0, 1.0)],
    )
    .unwrap()
}

pub fn pump() -> PumpSpec {
    PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).unwrap()
}

pub fn setup(bins: usize) -> SpectralSetup {
    SpectralSetup::symmetric(pump().omega0, 0.3, 0.7, bins, 1.0).unwrap()
}

pub fn emission(s: &Structure, p: &PumpSpec, setup: &SpectralSetup, opts: &EmissionOptions) -> EmissionOperators {
    let field = propagate_pump(s, p, setup.pairs.omegas()).unwrap();
    let ctx = MatrixContext::new(s, setup, &field).unwrap();
    ctx.total_emission_g(opts).unwrap()
}

/// Largest entry difference relative to the largest entry of either matrix.
pub fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    let s = a.max_abs().max(b.max_abs());
    if s == 0.0 {
        0.0
    } else {
        a.sub(b).unwrap().max_abs() / s
    }
}

/// Draws a random stack from a seed: 1 to `max_layers` layers, constant
/// indices in [1.3, 2.6], thicknesses in [5, 120] nm and random χ⁽²⁾ signs.
pub fn random_stack(seed: u64, max_layers: usize) -> Structure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = move || rng.gen::<f64>();
    let n = 1 + (next() * max_layers as f64) as usize % max_layers;
    let mut layers = Vec::with_capacity(n);
    for i in 0..n {
        let idx = 1.3 + 1.3 * next();
        let chi = if next() < 0.7 {
            vec![
                (Pol::Y, Pol::X, Pol::Y, (next() - 0.5) * 4e-12),
                (Pol::Y, Pol::Y, Pol::X, (next() - 0.5) * 4e-12),
                (Pol::Y, Pol::Y, Pol::Y, (next() - 0.5) * 4e-12),
            ]
        } else {
            Vec::new()
        };
        let m = nonlinear(&format!("m{i}"), idx, &chi);
        let poling = if next() < 0.5 { 1.0 } else { -1.0 };
        layers.push(layer(&m, 5.0 + 115.0 * next(), poling));
    }
    let out = Arc::new(MaterialModel::constant("out", 1.0 + 0.6 * next()));
    Structure::new(air(), out, layers).unwrap()
}
