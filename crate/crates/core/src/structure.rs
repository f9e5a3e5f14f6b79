//! Layered structure: ordered layers between two semi-infinite ambient media.
//!
//! Media are indexed `0..=N+1`: 0 is the input ambient, `1..=N` the layers and
//! `N+1` the output ambient. Boundary `l` (1-based, `1..=N+1`) sits at `z_l`
//! between media `l-1` and `l`, with `z_1 = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{MaterialLibrary, MaterialModel};

/// One layer as written in a config file. Lengths are in nanometres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub material: String,
    pub length_nm: f64,
    /// Sign of χ⁽²⁾ in this layer, +1 or -1.
    #[serde(default = "default_poling")]
    pub poling: i8,
}

fn default_poling() -> i8 {
    1
}

/// Config-level description: a period of layers repeated `repeat` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub ambient_in: String,
    pub ambient_out: String,
    #[serde(default = "default_repeat")]
    pub repeat: usize,
    pub layers: Vec<LayerSpec>,
}

fn default_repeat() -> usize {
    1
}

impl StructureSpec {
    /// Alternating two-material stack `(a, b)^periods`.
    pub fn bilayer(
        ambient: &str,
        a: (&str, f64),
        b: (&str, f64),
        periods: usize,
    ) -> StructureSpec {
        StructureSpec {
            ambient_in: ambient.into(),
            ambient_out: ambient.into(),
            repeat: periods,
            layers: vec![
                LayerSpec {
                    material: a.0.into(),
                    length_nm: a.1,
                    poling: 1,
                },
                LayerSpec {
                    material: b.0.into(),
                    length_nm: b.1,
                    poling: 1,
                },
            ],
        }
    }

    pub fn resolve(&self, lib: &MaterialLibrary) -> Result<Structure> {
        if self.repeat == 0 {
            return Err(Error::InvalidStructure("repeat must be >= 1".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len() * self.repeat);
        for _ in 0..self.repeat {
            for l in &self.layers {
                if l.poling != 1 && l.poling != -1 {
                    return Err(Error::InvalidStructure(format!(
                        "poling sign must be +1 or -1, got {}",
                        l.poling
                    )));
                }
                layers.push(Layer {
                    material: lib.get(&l.material)?,
                    length: l.length_nm * 1e-9,
                    poling: l.poling as f64,
                });
            }
        }
        Structure::new(lib.get(&self.ambient_in)?, lib.get(&self.ambient_out)?, layers)
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub material: Arc<MaterialModel>,
    /// Thickness in metres.
    pub length: f64,
    /// ±1.
    pub poling: f64,
}

/// Validated stack with derived boundary positions.
#[derive(Debug, Clone)]
pub struct Structure {
    ambient_in: Arc<MaterialModel>,
    ambient_out: Arc<MaterialModel>,
    layers: Vec<Layer>,
    z: Vec<f64>,
}

impl Structure {
    pub fn new(
        ambient_in: Arc<MaterialModel>,
        ambient_out: Arc<MaterialModel>,
        layers: Vec<Layer>,
    ) -> Result<Structure> {
        if layers.is_empty() {
            return Err(Error::InvalidStructure("at least one layer required".into()));
        }
        for (side, m) in [("input", &ambient_in), ("output", &ambient_out)] {
            if m.is_nonlinear() {
                return Err(Error::InvalidStructure(format!(
                    "{side} ambient `{}` must be linear",
                    m.name()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.length > 0.0 && l.length.is_finite()) {
                return Err(Error::InvalidStructure(format!(
                    "layer {} has non-positive length {}",
                    i + 1,
                    l.length
                )));
            }
            if l.poling != 1.0 && l.poling != -1.0 {
                return Err(Error::InvalidStructure(format!(
                    "layer {} has poling {}",
                    i + 1,
                    l.poling
                )));
            }
        }
        let mut z = Vec::with_capacity(layers.len() + 1);
        z.push(0.0);
        for l in &layers {
            let last = *z.last().unwrap();
            z.push(last + l.length);
        }
        Ok(Structure {
            ambient_in,
            ambient_out,
            layers,
            z,
        })
    }

    /// Number of layers N.
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Number of media including both ambients, N + 2.
    pub fn n_media(&self) -> usize {
        self.layers.len() + 2
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn ambient_in(&self) -> &Arc<MaterialModel> {
        &self.ambient_in
    }

    pub fn ambient_out(&self) -> &Arc<MaterialModel> {
        &self.ambient_out
    }

    /// Material of medium `l` in `0..=N+1`.
    pub fn medium(&self, l: usize) -> &MaterialModel {
        let n = self.layers.len();
        match l {
            0 => &self.ambient_in,
            _ if l <= n => &self.layers[l - 1].material,
            _ if l == n + 1 => &self.ambient_out,
            _ => panic!("medium index {l} out of range 0..={}", n + 1),
        }
    }

    /// Thickness of medium `l`; zero for the ambients.
    pub fn length(&self, l: usize) -> f64 {
        if l == 0 || l > self.layers.len() {
            0.0
        } else {
            self.layers[l - 1].length
        }
    }

    /// Poling sign of medium `l`; zero for the ambients.
    pub fn poling(&self, l: usize) -> f64 {
        if l == 0 || l > self.layers.len() {
            0.0
        } else {
            self.layers[l - 1].poling
        }
    }

    /// Position of boundary `l` in `1..=N+1`.
    pub fn z(&self, l: usize) -> f64 {
        assert!(l >= 1 && l <= self.layers.len() + 1, "boundary {l} out of range");
        self.z[l - 1]
    }

    /// Reference position of amplitudes in medium `l`: its left boundary, and
    /// `z_1` for the input ambient.
    pub fn z_ref(&self, l: usize) -> f64 {
        self.z(l.max(1))
    }

    pub fn total_length(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn min_layer_length(&self) -> f64 {
        self.layers.iter().map(|l| l.length).fold(f64::INFINITY, f64::min)
    }

    /// Medium index containing `z` (boundaries belong to the right medium).
    pub fn medium_at(&self, z: f64) -> usize {
        if z < 0.0 {
            return 0;
        }
        self.z.iter().rposition(|&zb| z >= zb).unwrap_or(0) + 1
    }

    /// Splits layer `l` (1-based) into two pieces of the same material at
    /// `fraction` of its thickness. Adds a fictitious boundary.
    pub fn split_layer(&self, l: usize, fraction: f64) -> Result<Structure> {
        if l == 0 || l > self.layers.len() {
            return Err(Error::InvalidStructure(format!("cannot split medium {l}")));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidStructure(format!("split fraction {fraction}")));
        }
        let mut layers = self.layers.clone();
        let orig = layers[l - 1].clone();
        let first = orig.length * fraction;
        layers[l - 1].length = first;
        layers.insert(
            l,
            Layer {
                length: orig.length - first,
                ..orig
            },
        );
        Structure::new(self.ambient_in.clone(), self.ambient_out.clone(), layers)
    }

    /// Copy with χ⁽²⁾ removed from every layer except those listed.
    pub fn keep_nonlinear_only(&self, keep: &[usize]) -> Result<Structure> {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                if keep.contains(&(i + 1)) || !l.material.is_nonlinear() {
                    l.clone()
                } else {
                    Layer {
                        material: Arc::new(l.material.linear_copy(l.material.name())),
                        ..l.clone()
                    }
                }
            })
            .collect();
        Structure::new(self.ambient_in.clone(), self.ambient_out.clone(), layers)
    }

    pub fn is_linear(&self) -> bool {
        self.layers.iter().all(|l| !l.material.is_nonlinear())
    }
}
