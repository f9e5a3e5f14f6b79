//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use spdc_core::{Dir, Layer, MaterialModel, Pol, PolTriple, PumpSpec, SpectralSetup, Structure};

/// `(a, b)^periods` of constant-index materials in air, `a` nonlinear.
pub fn bilayer(periods: usize) -> Structure {
    let air = Arc::new(MaterialModel::constant("air", 1.0));
    let a = Arc::new(
        MaterialModel::constant("a", 2.4)
            .with_chi2(PolTriple::new(Pol::Y, Pol::X, Pol::Y), 5e-12)
            .with_chi2(PolTriple::new(Pol::Y, Pol::Y, Pol::X), 5e-12),
    );
    let b = Arc::new(MaterialModel::constant("b", 2.1));
    let layers = (0..periods)
        .flat_map(|_| {
            [
                Layer {
                    material: a.clone(),
                    length: 60e-9,
                    poling: 1.0,
                },
                Layer {
                    material: b.clone(),
                    length: 13e-9,
                    poling: 1.0,
                },
            ]
        })
        .collect();
    Structure::new(air.clone(), air, layers).expect("valid stack")
}

pub fn pump() -> PumpSpec {
    PumpSpec::from_wavelength(400e-9, 7e-9, 1e3, Pol::Y, Dir::F).expect("valid pump")
}

pub fn setup(bins: usize) -> SpectralSetup {
    SpectralSetup::symmetric(pump().omega0, 0.05, 0.95, bins, 1.0).expect("valid window")
}
