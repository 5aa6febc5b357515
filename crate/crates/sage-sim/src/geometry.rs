//! Coupling graphs for the supported qubit encodings and the exchange/field
//! values living on them.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An unordered pair of 1-indexed spin sites. Always stored with the lower
/// index first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Bond(u8, u8);

impl Bond {
    pub fn new(i: u8, j: u8) -> Result<Self> {
        if i == j {
            return Err(Error::Geometry(format!("self-bond on site {i}")));
        }
        if i == 0 || j == 0 {
            return Err(Error::Geometry("sites are 1-indexed".into()));
        }
        Ok(if i < j { Bond(i, j) } else { Bond(j, i) })
    }

    pub fn sites(&self) -> (u8, u8) {
        (self.0, self.1)
    }
}

impl fmt::Display for Bond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

impl Serialize for Bond {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bond {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let (a, b) = text
            .split_once('-')
            .ok_or_else(|| D::Error::custom(format!("bond must look like \"1-2\", got {text:?}")))?;
        let i: u8 = a.trim().parse().map_err(D::Error::custom)?;
        let j: u8 = b.trim().parse().map_err(D::Error::custom)?;
        Bond::new(i, j).map_err(D::Error::custom)
    }
}

/// Which encoded-qubit layout a coupling graph implements.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Four spins in a T shape: core spin 1 bonded to 2, 3, 4.
    SageT,
    /// Three spins on a triangle, all pairs bonded.
    TriageTriangle,
    /// Three spins in a line: bonds 1-2 and 2-3.
    EoLinear,
    /// Two T-shaped blocks (spins 1-4 and 5-8) plus one interqubit bond.
    SagePair8Dot,
    /// Four spins with all-to-all connectivity.
    Box4Dot,
}

impl Encoding {
    pub fn label(&self) -> &'static str {
        match self {
            Encoding::SageT => "sage_t",
            Encoding::TriageTriangle => "triage_triangle",
            Encoding::EoLinear => "eo_linear",
            Encoding::SagePair8Dot => "sage_pair_8dot",
            Encoding::Box4Dot => "box_4dot",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sage_t" | "sage" => Ok(Encoding::SageT),
            "triage_triangle" | "triage" => Ok(Encoding::TriageTriangle),
            "eo_linear" | "eo" => Ok(Encoding::EoLinear),
            "sage_pair_8dot" | "sage_pair" => Ok(Encoding::SagePair8Dot),
            "box_4dot" | "box" => Ok(Encoding::Box4Dot),
            other => Err(Error::Geometry(format!("unknown encoding {other:?}"))),
        }
    }
}

/// A labeled coupling graph: which spin pairs carry a tunable exchange, plus
/// the encoding the graph implements.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DeviceGeometry {
    pub n_spins: usize,
    pub bonds: Vec<Bond>,
    pub encoding: Encoding,
    /// Human-readable description of which sector eigenstates form the qubit
    /// subspace.
    pub computational_labels: String,
}

fn bondset(pairs: &[(u8, u8)]) -> Vec<Bond> {
    pairs
        .iter()
        .map(|&(i, j)| Bond::new(i, j).expect("static bond table"))
        .collect()
}

impl DeviceGeometry {
    /// T-shaped four-spin layout: core spin 1 exchange-coupled to 2, 3 and 4.
    pub fn sage_t() -> Self {
        DeviceGeometry {
            n_spins: 4,
            bonds: bondset(&[(1, 2), (1, 3), (1, 4)]),
            encoding: Encoding::SageT,
            computational_labels: "|0> = |S12 S34>, |1> = singlet-singlet partner in S=Sz=0".into(),
        }
    }

    /// Triangular three-spin layout with all three bonds present.
    pub fn triage_triangle() -> Self {
        DeviceGeometry {
            n_spins: 3,
            bonds: bondset(&[(1, 2), (1, 3), (2, 3)]),
            encoding: Encoding::TriageTriangle,
            computational_labels: "|0> = |S12>|up>, |1> = S=1/2 partner in Sz=+1/2".into(),
        }
    }

    /// Linear three-spin layout with bonds 1-2 and 2-3.
    pub fn eo_linear() -> Self {
        DeviceGeometry {
            n_spins: 3,
            bonds: bondset(&[(1, 2), (2, 3)]),
            encoding: Encoding::EoLinear,
            computational_labels: "|0> = |S12>|up>, |1> = S=1/2 partner in Sz=+1/2".into(),
        }
    }

    /// Four spins with all six bonds available.
    pub fn box_4dot() -> Self {
        DeviceGeometry {
            n_spins: 4,
            bonds: bondset(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]),
            encoding: Encoding::Box4Dot,
            computational_labels: "|0>, |1> of the S=Sz=0 subspace".into(),
        }
    }

    /// Two T-shaped blocks on spins 1-4 and 5-8, joined by a single interqubit
    /// bond. The bond must connect a site in 1..=4 to a site in 5..=8.
    pub fn sage_pair_8dot(interqubit: Bond) -> Result<Self> {
        let (i, j) = interqubit.sites();
        if !(1..=4).contains(&i) || !(5..=8).contains(&j) {
            return Err(Error::Geometry(format!(
                "interqubit bond {interqubit} must connect spins 1-4 to spins 5-8"
            )));
        }
        let mut bonds = bondset(&[(1, 2), (1, 3), (1, 4), (5, 6), (5, 7), (5, 8)]);
        bonds.push(interqubit);
        Ok(DeviceGeometry {
            n_spins: 8,
            bonds,
            encoding: Encoding::SagePair8Dot,
            computational_labels: "|ab> = |a>_{1-4} x |b>_{5-8}, a,b in {0,1}".into(),
        })
    }

    pub fn from_encoding(encoding: Encoding) -> Result<Self> {
        match encoding {
            Encoding::SageT => Ok(Self::sage_t()),
            Encoding::TriageTriangle => Ok(Self::triage_triangle()),
            Encoding::EoLinear => Ok(Self::eo_linear()),
            Encoding::Box4Dot => Ok(Self::box_4dot()),
            Encoding::SagePair8Dot => Self::sage_pair_8dot(Bond::new(2, 6)?),
        }
    }

    /// The single bond connecting the two blocks of an 8-dot pair.
    pub fn interqubit_bond(&self) -> Option<Bond> {
        if self.encoding != Encoding::SagePair8Dot {
            return None;
        }
        self.bonds
            .iter()
            .copied()
            .find(|b| b.sites().0 <= 4 && b.sites().1 >= 5)
    }

    pub fn has_bond(&self, bond: Bond) -> bool {
        self.bonds.contains(&bond)
    }

    /// Checks the structural invariants: indices in range, no duplicates, and
    /// the encoding-specific bond sets.
    pub fn validate(&self) -> Result<()> {
        for b in &self.bonds {
            let (i, j) = b.sites();
            if usize::from(j) > self.n_spins {
                return Err(Error::Geometry(format!(
                    "bond {b} outside of 1..={}",
                    self.n_spins
                )));
            }
            let _ = i;
        }
        let mut sorted = self.bonds.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.bonds.len() {
            return Err(Error::Geometry("duplicate bonds".into()));
        }
        let expect = |pairs: &[(u8, u8)], n: usize| -> Result<()> {
            let want = bondset(pairs);
            let mut got = self.bonds.clone();
            got.sort();
            let mut want_sorted = want;
            want_sorted.sort();
            if self.n_spins != n || got != want_sorted {
                return Err(Error::Geometry(format!(
                    "{:?} requires bonds {:?} on {} spins",
                    self.encoding, pairs, n
                )));
            }
            Ok(())
        };
        match self.encoding {
            Encoding::SageT => expect(&[(1, 2), (1, 3), (1, 4)], 4),
            Encoding::TriageTriangle => expect(&[(1, 2), (1, 3), (2, 3)], 3),
            Encoding::EoLinear => expect(&[(1, 2), (2, 3)], 3),
            Encoding::Box4Dot => expect(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)], 4),
            Encoding::SagePair8Dot => {
                let inter: Vec<Bond> = self
                    .bonds
                    .iter()
                    .copied()
                    .filter(|b| b.sites().0 <= 4 && b.sites().1 >= 5)
                    .collect();
                if self.n_spins != 8 || inter.len() != 1 {
                    return Err(Error::Geometry(
                        "8-dot pair requires exactly one interqubit bond".into(),
                    ));
                }
                let intra: Vec<Bond> = self
                    .bonds
                    .iter()
                    .copied()
                    .filter(|b| !inter.contains(b))
                    .collect();
                let mut want = bondset(&[(1, 2), (1, 3), (1, 4), (5, 6), (5, 7), (5, 8)]);
                want.sort();
                let mut got = intra;
                got.sort();
                if got != want {
                    return Err(Error::Geometry(
                        "8-dot pair requires two T-shaped blocks on spins 1-4 and 5-8".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Exchange strengths (MHz) on bonds and field offsets (kHz) on sites.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct CouplingSet {
    pub j_mhz: BTreeMap<Bond, f64>,
    pub h_khz: BTreeMap<u8, f64>,
}

impl CouplingSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// All geometry bonds set to the same exchange, no field offsets.
    pub fn uniform_exchange(geometry: &DeviceGeometry, j_mhz: f64) -> Self {
        CouplingSet {
            j_mhz: geometry.bonds.iter().map(|&b| (b, j_mhz)).collect(),
            h_khz: BTreeMap::new(),
        }
    }

    pub fn with_j(mut self, bond: Bond, j_mhz: f64) -> Self {
        self.j_mhz.insert(bond, j_mhz);
        self
    }

    pub fn with_h(mut self, site: u8, h_khz: f64) -> Self {
        self.h_khz.insert(site, h_khz);
        self
    }

    pub fn j(&self, bond: Bond) -> f64 {
        self.j_mhz.get(&bond).copied().unwrap_or(0.0)
    }

    pub fn h(&self, site: u8) -> f64 {
        self.h_khz.get(&site).copied().unwrap_or(0.0)
    }

    /// Largest absolute coupling in MHz (fields converted from kHz).
    pub fn max_scale_mhz(&self) -> f64 {
        let j = self.j_mhz.values().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = self.h_khz.values().fold(0.0f64, |m, v| m.max(v.abs() * 1e-3));
        j.max(h)
    }

    /// Every key must live on the geometry, and exchange must be non-negative.
    pub fn validate_for(&self, geometry: &DeviceGeometry) -> Result<()> {
        for (bond, j) in &self.j_mhz {
            if !geometry.has_bond(*bond) {
                return Err(Error::Couplings(format!("bond {bond} not in geometry")));
            }
            if *j < 0.0 {
                return Err(Error::Couplings(format!("negative exchange on {bond}: {j}")));
            }
        }
        for site in self.h_khz.keys() {
            if *site == 0 || usize::from(*site) > geometry.n_spins {
                return Err(Error::Couplings(format!("site {site} not in geometry")));
            }
        }
        Ok(())
    }
}
