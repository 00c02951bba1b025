//! Symmetry classes, ensemble specifications and the random-matrix
//! constructors for effective Hamiltonians and quantum maps.

mod hamiltonian;
mod map;
mod sampling;

pub use hamiltonian::{
    build_hamiltonian, build_p_basis, coupling_gamma, hamiltonian_parts, EffectiveHamiltonian,
    HamiltonianParts,
};
pub use map::{build_quantum_map, gamma_tilde, sqrt_coupling, QuantumMap};
pub use sampling::{
    sample_antisym, sample_antisym_with, sample_circular, sample_circular_with, sample_goe,
    sample_goe_with, sample_gue, sample_gue_with, CircularKind,
};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HermitianPart {
    O,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AntihermitianPart {
    /// `X = mu * 1`.
    OUniform,
    /// `iX = -A` with `A` real antisymmetric.
    AAntisym,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeReversal {
    PT,
    PTTprime,
}

/// The five constructible combinations of hermitian part, antihermitian part
/// and generalized time reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// OO. PT and PTT' coincide here.
    OO,
    UO,
    UOprime,
    OA,
    OAprime,
}

impl SymmetryClass {
    pub const ALL: [SymmetryClass; 5] = [
        SymmetryClass::OO,
        SymmetryClass::UO,
        SymmetryClass::UOprime,
        SymmetryClass::OA,
        SymmetryClass::OAprime,
    ];

    pub fn from_parts(h: HermitianPart, x: AntihermitianPart, t: TimeReversal) -> Result<Self> {
        use AntihermitianPart::*;
        use HermitianPart::*;
        use TimeReversal::*;
        match (h, x, t) {
            (O, OUniform, _) => Ok(SymmetryClass::OO),
            (U, OUniform, PT) => Ok(SymmetryClass::UO),
            (U, OUniform, PTTprime) => Ok(SymmetryClass::UOprime),
            (O, AAntisym, PT) => Ok(SymmetryClass::OA),
            (O, AAntisym, PTTprime) => Ok(SymmetryClass::OAprime),
            (U, AAntisym, _) => Err(Error::Unconstructible(
                "UA classes are not among the supported ensembles".into(),
            )),
        }
    }

    pub fn hermitian_part(self) -> HermitianPart {
        match self {
            SymmetryClass::UO | SymmetryClass::UOprime => HermitianPart::U,
            _ => HermitianPart::O,
        }
    }

    pub fn antihermitian_part(self) -> AntihermitianPart {
        match self {
            SymmetryClass::OA | SymmetryClass::OAprime => AntihermitianPart::AAntisym,
            _ => AntihermitianPart::OUniform,
        }
    }

    pub fn time_reversal(self) -> TimeReversal {
        match self {
            SymmetryClass::UOprime | SymmetryClass::OAprime => TimeReversal::PTTprime,
            _ => TimeReversal::PT,
        }
    }

    /// Short label, e.g. `UO'`.
    pub fn label(self) -> &'static str {
        match self {
            SymmetryClass::OO => "OO",
            SymmetryClass::UO => "UO",
            SymmetryClass::UOprime => "UO'",
            SymmetryClass::OA => "OA",
            SymmetryClass::OAprime => "OA'",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            SymmetryClass::OO => 1,
            SymmetryClass::UO => 2,
            SymmetryClass::UOprime => 3,
            SymmetryClass::OA => 4,
            SymmetryClass::OAprime => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Gaussian,
    Circular,
}

/// One statistical ensemble: symmetry class, family and `(M, N, T, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub class: SymmetryClass,
    pub family: Family,
    /// Modes per resonator.
    pub m: usize,
    /// Open channels in the interface.
    pub n: usize,
    /// Interface transparency.
    pub t: f64,
    /// Amplification / absorption rate.
    pub mu: f64,
}

impl EnsembleSpec {
    pub fn new(class: SymmetryClass, family: Family, m: usize, n: usize, t: f64, mu: f64) -> Result<Self> {
        let spec = EnsembleSpec { class, family, m, n, t, mu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(class: SymmetryClass, m: usize, n: usize, t: f64, mu: f64) -> Result<Self> {
        Self::new(class, Family::Gaussian, m, n, t, mu)
    }

    pub fn circular(class: SymmetryClass, m: usize, n: usize, t: f64, mu: f64) -> Result<Self> {
        Self::new(class, Family::Circular, m, n, t, mu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Domain("M must be positive".into()));
        }
        if self.n > self.m {
            return Err(Error::Domain(format!("N = {} exceeds M = {}", self.n, self.m)));
        }
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::Domain(format!("T = {} out of [0,1]", self.t)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu = {} must be finite and nonnegative", self.mu)));
        }
        if self.family == Family::Circular && self.class.antihermitian_part() == AntihermitianPart::AAntisym {
            return Err(Error::Unconstructible(
                "circular family requires uniform amplification (O antihermitian part)".into(),
            ));
        }
        if self.class.antihermitian_part() == AntihermitianPart::AAntisym && self.m < 2 && self.mu > 0.0 {
            return Err(Error::Domain("antisymmetric part needs M >= 2 when mu > 0".into()));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        EnsembleSpec { mu, ..self }
    }

    pub fn with_t(self, t: f64) -> Self {
        EnsembleSpec { t, ..self }
    }

    pub fn with_n(self, n: usize) -> Self {
        EnsembleSpec { n, ..self }
    }

    pub fn with_m(self, m: usize) -> Self {
        EnsembleSpec { m, ..self }
    }

    pub fn alpha(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn scales(&self) -> ScalesReport {
        ScalesReport::new(self)
    }

    /// Stable tag mixed into per-sample seeds.
    pub fn seed_tag(&self) -> u64 {
        let family = match self.family {
            Family::Gaussian => 0x47,
            Family::Circular => 0x43,
        };
        (family << 8) | self.class.tag()
    }

    /// Conventional ensemble name such as `GOOE` or `CUOE'`.
    pub fn ensemble_name(&self) -> String {
        let f = match self.family {
            Family::Gaussian => 'G',
            Family::Circular => 'C',
        };
        let (body, prime) = match self.class {
            SymmetryClass::OO => ("OO", ""),
            SymmetryClass::UO => ("UO", ""),
            SymmetryClass::UOprime => ("UO", "'"),
            SymmetryClass::OA => ("OA", ""),
            SymmetryClass::OAprime => ("OA", "'"),
        };
        format!("{f}{body}E{prime}")
    }
}

/// Parsed form of an ensemble name like `GOOE`, `GUOE'` or `COOE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleName {
    pub class: SymmetryClass,
    pub family: Family,
}

impl FromStr for EnsembleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        let (core, prime) = if let Some(rest) = trimmed.strip_suffix('\'') {
            (rest, true)
        } else if let Some(rest) = trimmed.strip_suffix("prime") {
            (rest, true)
        } else if let Some(rest) = trimmed.strip_suffix('p') {
            (rest, true)
        } else {
            (trimmed, false)
        };
        let upper = core.to_ascii_uppercase();
        let bad = || Error::Domain(format!("unknown ensemble name {s:?}"));
        let bytes = upper.as_bytes();
        if bytes.len() != 4 || bytes[3] != b'E' {
            return Err(bad());
        }
        let family = match bytes[0] {
            b'G' => Family::Gaussian,
            b'C' => Family::Circular,
            _ => return Err(bad()),
        };
        let class = match (&upper[1..3], prime) {
            ("OO", _) => SymmetryClass::OO,
            ("UO", false) => SymmetryClass::UO,
            ("UO", true) => SymmetryClass::UOprime,
            ("OA", false) => SymmetryClass::OA,
            ("OA", true) => SymmetryClass::OAprime,
            _ => return Err(bad()),
        };
        if family == Family::Circular && class.antihermitian_part() == AntihermitianPart::AAntisym {
            return Err(Error::Unconstructible(format!("{s}: circular A-type ensembles are not defined")));
        }
        Ok(EnsembleName { class, family })
    }
}

impl fmt::Display for EnsembleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spec = EnsembleSpec { class: self.class, family: self.family, m: 1, n: 0, t: 0.0, mu: 0.0 };
        f.write_str(&spec.ensemble_name())
    }
}

/// Characteristic energy and coupling scales of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalesReport {
    /// Mean level spacing of one resonator.
    pub delta: f64,
    /// Thouless energy `N T delta / 2 pi`.
    pub e_thouless: f64,
    /// `sqrt(N) delta / 2 pi`.
    pub mu_o: f64,
    /// `sqrt(M) delta / 2 pi`.
    pub mu_a: f64,
    pub t_o: f64,
    pub t_a: f64,
    pub alpha: f64,
    /// Map time step; 1 for the circular family, unused otherwise.
    pub tau: f64,
}

impl ScalesReport {
    pub fn new(spec: &EnsembleSpec) -> Self {
        let m = spec.m as f64;
        let n = spec.n as f64;
        let delta = match spec.family {
            Family::Gaussian => PI / m,
            Family::Circular => 2.0 * PI / m,
        };
        let (t_o, t_a) = if spec.n == 0 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (1.0 / n, 1.0 / (n * n))
        };
        ScalesReport {
            delta,
            e_thouless: n * spec.t * delta / (2.0 * PI),
            mu_o: n.sqrt() * delta / (2.0 * PI),
            mu_a: m.sqrt() * delta / (2.0 * PI),
            t_o,
            t_a,
            alpha: n / m,
            tau: 1.0,
        }
    }

    /// The natural unit `mu_0` for the class: `mu_O` for uniform
    /// amplification, `mu_A` for antisymmetric.
    pub fn mu_zero(&self, class: SymmetryClass) -> f64 {
        match class.antihermitian_part() {
            AntihermitianPart::OUniform => self.mu_o,
            AntihermitianPart::AAntisym => self.mu_a,
        }
    }
}

impl fmt::Display for ScalesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Delta    = {:.6e}", self.delta)?;
        writeln!(f, "E_T      = {:.6e}", self.e_thouless)?;
        writeln!(f, "mu_O     = {:.6e}", self.mu_o)?;
        writeln!(f, "mu_A     = {:.6e}", self.mu_a)?;
        writeln!(f, "T_O      = {:.6e}", self.t_o)?;
        writeln!(f, "T_A      = {:.6e}", self.t_a)?;
        write!(f, "alpha    = {:.6}", self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_five_classes_constructible() {
        use AntihermitianPart::*;
        use HermitianPart::*;
        use TimeReversal::*;
        let mut ok = 0;
        for h in [O, U] {
            for x in [OUniform, AAntisym] {
                for t in [PT, PTTprime] {
                    if SymmetryClass::from_parts(h, x, t).is_ok() {
                        ok += 1;
                    }
                }
            }
        }
        // OO counted twice (PT == PTT')
        assert_eq!(ok, 6);
        assert_eq!(SymmetryClass::from_parts(O, OUniform, PTTprime).unwrap(), SymmetryClass::OO);
        assert!(SymmetryClass::from_parts(U, AAntisym, PT).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::gaussian(SymmetryClass::OO, 10, 11, 0.5, 0.1).is_err());
        assert!(EnsembleSpec::gaussian(SymmetryClass::OO, 10, 2, 1.5, 0.1).is_err());
        assert!(EnsembleSpec::gaussian(SymmetryClass::OO, 10, 2, 0.5, -0.1).is_err());
        assert!(EnsembleSpec::circular(SymmetryClass::OA, 10, 2, 0.5, 0.1).is_err());
        assert!(EnsembleSpec::circular(SymmetryClass::UOprime, 10, 2, 0.5, 0.1).is_ok());
        assert!(EnsembleSpec::gaussian(SymmetryClass::OA, 1, 1, 0.5, 0.1).is_err());
        assert!(EnsembleSpec::gaussian(SymmetryClass::OA, 1, 1, 0.5, 0.0).is_ok());
    }

    #[test]
    fn ensemble_names_round_trip() {
        for name in ["GOOE", "GUOE", "GUOE'", "GOAE", "GOAE'", "COOE", "CUOE", "CUOE'"] {
            let parsed: EnsembleName = name.parse().unwrap();
            assert_eq!(parsed.to_string(), name);
        }
        assert_eq!("guoep".parse::<EnsembleName>().unwrap().class, SymmetryClass::UOprime);
        assert!("COAE".parse::<EnsembleName>().is_err());
        assert!("GXXE".parse::<EnsembleName>().is_err());
        assert!("".parse::<EnsembleName>().is_err());
    }

    #[test]
    fn gaussian_scales() {
        let s = EnsembleSpec::gaussian(SymmetryClass::OO, 400, 80, 1.0, 0.1).unwrap().scales();
        assert!((s.e_thouless - 0.1).abs() < 1e-15);
        assert!((s.delta - PI / 400.0).abs() < 1e-15);
        let s = EnsembleSpec::gaussian(SymmetryClass::OO, 200, 40, 1.0, 0.0).unwrap().scales();
        // sqrt(40) * (pi/200) / (2 pi) = sqrt(40)/400
        assert!((s.mu_o - 0.015_811_388_300_841_896).abs() < 1e-15);
        assert!((s.t_o - 0.025).abs() < 1e-15);
        assert!((s.t_a - 6.25e-4).abs() < 1e-18);
    }

    #[test]
    fn circular_scales() {
        let s = EnsembleSpec::circular(SymmetryClass::OO, 200, 40, 1.0, 0.0).unwrap().scales();
        assert!((s.e_thouless - 0.2).abs() < 1e-15);
        assert!((s.delta - 2.0 * PI / 200.0).abs() < 1e-15);
        assert_eq!(s.tau, 1.0);
    }

    #[test]
    fn mu_a_is_independent_of_n() {
        let a = EnsembleSpec::gaussian(SymmetryClass::OA, 200, 20, 0.5, 0.0).unwrap().scales();
        let b = EnsembleSpec::gaussian(SymmetryClass::OA, 200, 80, 0.5, 0.0).unwrap().scales();
        assert_eq!(a.mu_zero(SymmetryClass::OA), b.mu_zero(SymmetryClass::OA));
        assert_ne!(a.mu_zero(SymmetryClass::OO), b.mu_zero(SymmetryClass::OO));
    }
}
