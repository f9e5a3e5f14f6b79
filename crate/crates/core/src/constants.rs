//! CODATA 2018 physical constants in SI units.

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;

/// Bundle of the constants for code that wants to pass them around explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub hbar: f64,
    pub eps0: f64,
    pub mu0: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        c: C,
        hbar: HBAR,
        eps0: EPS0,
        mu0: MU0,
    };

    /// Vacuum impedance sqrt(mu0/eps0), ohms.
    pub fn impedance(&self) -> f64 {
        (self.mu0 / self.eps0).sqrt()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Angular frequency (rad/s) of a vacuum wavelength given in meters.
pub fn omega_from_wavelength(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * C / lambda
}

/// Vacuum wavelength (m) of an angular frequency in rad/s.
pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * C / omega
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_speed_consistent_with_eps0_mu0() {
        let c = 1.0 / (EPS0 * MU0).sqrt();
        assert!(((c - C) / C).abs() < 1e-9);
    }

    #[test]
    fn wavelength_roundtrip() {
        let w = omega_from_wavelength(400e-9);
        assert!((wavelength_from_omega(w) - 400e-9).abs() < 1e-22);
    }
}
