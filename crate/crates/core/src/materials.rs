//! Lossless dielectric materials: dispersion and contracted second-order susceptibility.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::{omega_from_wavelength, wavelength_from_omega, C};
use crate::error::{Error, Result};
use crate::modes::{Dir, Pol};

/// One resonance term `b * λ² / (λ² - c)` with λ in µm and `c` in µm².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierTerm {
    pub b: f64,
    pub c_um2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Dispersion {
    Constant { n: f64 },
    /// n² = a0 + Σ b λ²/(λ² − c)
    Sellmeier { a0: f64, terms: Vec<SellmeierTerm> },
}

impl Dispersion {
    fn n_squared(&self, omega: f64) -> f64 {
        match self {
            Dispersion::Constant { n } => n * n,
            Dispersion::Sellmeier { a0, terms } => {
                let lam_um = wavelength_from_omega(omega) * 1e6;
                let l2 = lam_um * lam_um;
                a0 + terms.iter().map(|t| t.b * l2 / (l2 - t.c_um2)).sum::<f64>()
            }
        }
    }
}

/// Polarization triple (pump; signal, idler) keying a contracted χ⁽²⁾ coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolTriple {
    pub pump: Pol,
    pub signal: Pol,
    pub idler: Pol,
}

impl PolTriple {
    pub fn new(pump: Pol, signal: Pol, idler: Pol) -> Self {
        PolTriple { pump, signal, idler }
    }
}

impl fmt::Display for PolTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}{}", self.pump, self.signal, self.idler)
    }
}

impl FromStr for PolTriple {
    type Err = Error;

    /// Parses `"y;xy"` as pump y, signal x, idler y.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            what: "polarization triple".into(),
            msg: format!("expected `p;si` with letters x|y, got `{s}`"),
        };
        let (p, si) = s.trim().split_once(';').ok_or_else(bad)?;
        let p: Vec<char> = p.trim().chars().collect();
        let si: Vec<char> = si.trim().chars().collect();
        if p.len() != 1 || si.len() != 2 {
            return Err(bad());
        }
        Ok(PolTriple {
            pump: Pol::from_char(p[0]).ok_or_else(bad)?,
            signal: Pol::from_char(si[0]).ok_or_else(bad)?,
            idler: Pol::from_char(si[1]).ok_or_else(bad)?,
        })
    }
}

/// Frequency-dependent refractive index plus χ⁽²⁾ coefficients of one material.
///
/// Immutable after construction. `chi2` values are the scalar contraction
/// `χ⁽²⁾ : e_p e_s e_i` (m/V), assumed constant over the simulation window.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    name: String,
    dispersion: Dispersion,
    window: Option<(f64, f64)>,
    chi2: BTreeMap<PolTriple, f64>,
}

impl MaterialModel {
    /// Builds and validates a material. `window` is (omega_min, omega_max) in rad/s.
    pub fn new(
        name: impl Into<String>,
        dispersion: Dispersion,
        window: Option<(f64, f64)>,
        chi2: BTreeMap<PolTriple, f64>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidMaterial {
            name: name.clone(),
            reason,
        };
        if let Some((lo, hi)) = window {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(invalid(format!("bad window [{lo:e}, {hi:e}]")));
            }
        }
        for (pol, d) in &chi2 {
            if !d.is_finite() {
                return Err(invalid(format!("non-finite chi2 for {pol}")));
            }
        }
        match &dispersion {
            Dispersion::Constant { n } => {
                if !(n.is_finite() && *n >= 1.0) {
                    return Err(invalid(format!("constant index {n} < 1")));
                }
            }
            Dispersion::Sellmeier { a0, terms } => {
                if !a0.is_finite() || terms.iter().any(|t| !t.b.is_finite() || !t.c_um2.is_finite()) {
                    return Err(invalid("non-finite Sellmeier coefficient".into()));
                }
                let has_poles = terms.iter().any(|t| t.b != 0.0 && t.c_um2 > 0.0);
                let Some((lo, hi)) = window else {
                    if has_poles {
                        return Err(invalid("Sellmeier model with resonances needs a validity window".into()));
                    }
                    return Self::finish(name, dispersion, window, chi2);
                };
                let lam_lo = wavelength_from_omega(hi) * 1e6;
                let lam_hi = wavelength_from_omega(lo) * 1e6;
                for t in terms.iter().filter(|t| t.b != 0.0 && t.c_um2 > 0.0) {
                    let pole = t.c_um2.sqrt();
                    if pole >= lam_lo && pole <= lam_hi {
                        return Err(invalid(format!("Sellmeier pole at {pole} µm inside window")));
                    }
                }
                // log-spaced sweep for n >= 1 over the window
                let samples = 2000;
                for j in 0..=samples {
                    let w = lo * (hi / lo).powf(j as f64 / samples as f64);
                    let n2 = dispersion.n_squared(w);
                    if !(n2.is_finite() && n2 >= 1.0) {
                        return Err(invalid(format!("n² = {n2} < 1 at omega {w:e}")));
                    }
                }
            }
        }
        Self::finish(name, dispersion, window, chi2)
    }

    fn finish(
        name: String,
        dispersion: Dispersion,
        window: Option<(f64, f64)>,
        chi2: BTreeMap<PolTriple, f64>,
    ) -> Result<Self> {
        Ok(MaterialModel {
            name,
            dispersion,
            window,
            chi2,
        })
    }

    /// Linear, non-dispersive material. Panics if `n < 1`.
    pub fn constant(name: impl Into<String>, n: f64) -> Self {
        Self::new(name, Dispersion::Constant { n }, None, BTreeMap::new())
            .expect("constant index must be >= 1")
    }

    /// Returns a copy carrying the given χ⁽²⁾ entry.
    pub fn with_chi2(mut self, pol: PolTriple, value: f64) -> Self {
        self.chi2.insert(pol, value);
        self
    }

    /// Returns a copy with all χ⁽²⁾ entries removed.
    pub fn linear_copy(&self, name: impl Into<String>) -> Self {
        MaterialModel {
            name: name.into(),
            dispersion: self.dispersion.clone(),
            window: self.window,
            chi2: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dispersion(&self) -> &Dispersion {
        &self.dispersion
    }

    pub fn window(&self) -> Option<(f64, f64)> {
        self.window
    }

    pub fn chi2_entries(&self) -> &BTreeMap<PolTriple, f64> {
        &self.chi2
    }

    pub fn is_nonlinear(&self) -> bool {
        self.chi2.values().any(|&d| d != 0.0)
    }

    pub fn check_window(&self, omega: f64) -> Result<()> {
        let ok = omega.is_finite()
            && omega > 0.0
            && self.window.is_none_or(|(lo, hi)| omega >= lo && omega <= hi);
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                material: self.name.clone(),
                omega,
            })
        }
    }

    /// Refractive index n(ω).
    pub fn refractive_index(&self, omega: f64) -> Result<f64> {
        self.check_window(omega)?;
        Ok(self.dispersion.n_squared(omega).sqrt())
    }

    /// Signed wave number ±(ω/c) n(ω): + for forward, − for backward.
    pub fn wavenumber(&self, omega: f64, dir: Dir) -> Result<f64> {
        Ok(dir.sign() * omega / C * self.refractive_index(omega)?)
    }

    /// Contracted χ⁽²⁾ coefficient, 0 when the triple is absent.
    pub fn chi2_effective(&self, pump: Pol, signal: Pol, idler: Pol) -> f64 {
        self.chi2
            .get(&PolTriple::new(pump, signal, idler))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chi2Entry {
    pub pol: String,
    #[serde(rename = "d_m_per_V")]
    pub d_m_per_v: f64,
}

/// On-disk description of a material.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub name: String,
    pub dispersion: Dispersion,
    /// Validity window as vacuum wavelengths in µm, `[min, max]`.
    #[serde(default)]
    pub window_um: Option<[f64; 2]>,
    #[serde(default)]
    pub chi2: Vec<Chi2Entry>,
    /// Free-text provenance of the data.
    #[serde(default)]
    pub source: Option<String>,
}

impl MaterialEntry {
    pub fn build(&self) -> Result<MaterialModel> {
        let window = self
            .window_um
            .map(|[lmin, lmax]| (omega_from_wavelength(lmax * 1e-6), omega_from_wavelength(lmin * 1e-6)));
        let mut chi2 = BTreeMap::new();
        for e in &self.chi2 {
            chi2.insert(e.pol.parse::<PolTriple>()?, e.d_m_per_v);
        }
        MaterialModel::new(self.name.clone(), self.dispersion.clone(), window, chi2)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    material: Vec<MaterialEntry>,
}

/// Named collection of materials.
#[derive(Debug, Clone, Default)]
pub struct MaterialLibrary {
    materials: BTreeMap<String, Arc<MaterialModel>>,
}

impl MaterialLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, material: MaterialModel) {
        self.materials
            .insert(material.name().to_string(), Arc::new(material));
    }

    pub fn get(&self, name: &str) -> Result<Arc<MaterialModel>> {
        self.materials
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }

    /// Parses a TOML document with `[[material]]` tables.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: MaterialFile = toml::from_str(s).map_err(|e| Error::Parse {
            what: "materials TOML".into(),
            msg: e.to_string(),
        })?;
        Self::from_entries(&file.material)
    }

    /// Parses a JSON document `{"material": [...]}`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: MaterialFile = serde_json::from_str(s).map_err(|e| Error::Parse {
            what: "materials JSON".into(),
            msg: e.to_string(),
        })?;
        Self::from_entries(&file.material)
    }

    pub fn from_entries(entries: &[MaterialEntry]) -> Result<Self> {
        let mut lib = MaterialLibrary::new();
        for e in entries {
            if lib.materials.contains_key(&e.name) {
                return Err(Error::InvalidMaterial {
                    name: e.name.clone(),
                    reason: "duplicate name".into(),
                });
            }
            lib.insert(e.build()?);
        }
        Ok(lib)
    }

    /// Loads a `.toml` or `.json` materials file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gan() -> MaterialModel {
        MaterialEntry {
            name: "GaN".into(),
            dispersion: Dispersion::Sellmeier {
                a0: 3.6,
                terms: vec![
                    SellmeierTerm { b: 1.75, c_um2: 0.256 * 0.256 },
                    SellmeierTerm { b: 4.1, c_um2: 17.86 * 17.86 },
                ],
            },
            window_um: Some([0.35, 10.0]),
            chi2: vec![],
            source: None,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn constant_model() {
        let m = MaterialModel::constant("c", 2.0);
        assert_eq!(m.refractive_index(1.234e15).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_sellmeier_is_sqrt_a0() {
        let m = MaterialModel::new(
            "deg",
            Dispersion::Sellmeier {
                a0: 5.0,
                terms: vec![SellmeierTerm { b: 0.0, c_um2: 0.1 }],
            },
            None,
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(m.refractive_index(3e15).unwrap(), 5f64.sqrt());
    }

    #[test]
    fn gan_at_400nm_matches_direct_formula() {
        let m = gan();
        let w = omega_from_wavelength(400e-9);
        let l2: f64 = 0.4 * 0.4;
        let direct = (3.6 + 1.75 * l2 / (l2 - 0.065536) + 4.1 * l2 / (l2 - 17.86 * 17.86)).sqrt();
        assert!((m.refractive_index(w).unwrap() - direct).abs() < 1e-13);
        assert!((direct - 2.5617).abs() < 1e-3);
    }

    #[test]
    fn out_of_window_is_error() {
        let m = gan();
        let w = omega_from_wavelength(300e-9);
        assert!(matches!(m.refractive_index(w), Err(Error::OutOfWindow { .. })));
        assert!(m.refractive_index(-1.0).is_err());
    }

    #[test]
    fn wavenumber_signs() {
        let m = MaterialModel::constant("c", 2.0);
        let w = 2.0 * PI * C / 400e-9;
        let kf = m.wavenumber(w, Dir::F).unwrap();
        let kb = m.wavenumber(w, Dir::B).unwrap();
        assert!((kf - 2.0 * PI * 2.0 / 400e-9).abs() / kf < 1e-14);
        assert!((kf - 3.1416e7).abs() < 1e3);
        assert_eq!(kf, -kb);
        let vac = MaterialModel::constant("vac", 1.0);
        let k = vac.wavenumber(w, Dir::F).unwrap();
        assert!((k - 2.0 * PI / 400e-9).abs() / k < 1e-14);
    }

    #[test]
    fn chi2_lookup() {
        let m = MaterialModel::constant("lin", 1.5);
        assert_eq!(m.chi2_effective(Pol::Y, Pol::X, Pol::Y), 0.0);
        let d = 3.3e-12;
        let m = m.with_chi2("y;xy".parse().unwrap(), d);
        assert_eq!(m.chi2_effective(Pol::Y, Pol::X, Pol::Y), d);
        assert_eq!(m.chi2_effective(Pol::X, Pol::X, Pol::X), 0.0);
    }

    #[test]
    fn pole_inside_window_rejected() {
        let e = MaterialEntry {
            name: "bad".into(),
            dispersion: Dispersion::Sellmeier {
                a0: 2.0,
                terms: vec![SellmeierTerm { b: 1.0, c_um2: 1.0 }],
            },
            window_um: Some([0.5, 2.0]),
            chi2: vec![],
            source: None,
        };
        assert!(matches!(e.build(), Err(Error::InvalidMaterial { .. })));
    }

    #[test]
    fn index_below_one_rejected() {
        assert!(MaterialModel::new("x", Dispersion::Constant { n: 0.9 }, None, BTreeMap::new()).is_err());
    }

    #[test]
    fn toml_and_json_load() {
        let toml_src = r#"
            [[material]]
            name = "A"
            dispersion = { type = "constant", n = 2.0 }
            chi2 = [{ pol = "y;xy", d_m_per_V = 1e-12 }]

            [[material]]
            name = "B"
            dispersion = { type = "sellmeier", a0 = 4.0, terms = [] }
        "#;
        let lib = MaterialLibrary::from_toml_str(toml_src).unwrap();
        assert_eq!(lib.get("A").unwrap().chi2_effective(Pol::Y, Pol::X, Pol::Y), 1e-12);
        assert_eq!(lib.get("B").unwrap().refractive_index(1e15).unwrap(), 2.0);
        let json_src = r#"{"material":[{"name":"A","dispersion":{"type":"constant","n":1.5}}]}"#;
        let lib = MaterialLibrary::from_json_str(json_src).unwrap();
        assert_eq!(lib.get("A").unwrap().refractive_index(1e15).unwrap(), 1.5);
        assert!(lib.get("Z").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let src = r#"
            [[material]]
            name = "A"
            colour = "red"
            dispersion = { type = "constant", n = 2.0 }
        "#;
        assert!(MaterialLibrary::from_toml_str(src).is_err());
    }

    #[test]
    fn pol_triple_parse() {
        let t: PolTriple = "y;xy".parse().unwrap();
        assert_eq!(t, PolTriple::new(Pol::Y, Pol::X, Pol::Y));
        assert_eq!(t.to_string(), "y;xy");
        assert!("yxy".parse::<PolTriple>().is_err());
        assert!("y;xz".parse::<PolTriple>().is_err());
    }
}
