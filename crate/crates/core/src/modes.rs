//! Small enums labelling field modes: which field, which direction, which polarization.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
}

impl Pol {
    pub const ALL: [Pol; 2] = [Pol::X, Pol::Y];

    pub fn index(self) -> usize {
        match self {
            Pol::X => 0,
            Pol::Y => 1,
        }
    }

    pub fn from_char(c: char) -> Option<Pol> {
        match c {
            'x' | 'X' => Some(Pol::X),
            'y' | 'Y' => Some(Pol::Y),
            _ => None,
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::X => "x",
            Pol::Y => "y",
        })
    }
}

/// Propagation direction along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    #[serde(rename = "F")]
    F,
    #[serde(rename = "B")]
    B,
}

impl Dir {
    pub const ALL: [Dir; 2] = [Dir::F, Dir::B];

    /// +1 for forward, -1 for backward.
    pub fn sign(self) -> f64 {
        match self {
            Dir::F => 1.0,
            Dir::B => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Dir::F => 0,
            Dir::B => 1,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::F => "F",
            Dir::B => "B",
        })
    }
}

/// Down-converted field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "s")]
    Signal,
    #[serde(rename = "i")]
    Idler,
}

impl Field {
    pub fn partner(self) -> Field {
        match self {
            Field::Signal => Field::Idler,
            Field::Idler => Field::Signal,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Field::Signal => 0,
            Field::Idler => 1,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Signal => "s",
            Field::Idler => "i",
        })
    }
}

/// One (direction, polarization) slot. Slot order inside a field block is Fx, Bx, Fy, By.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub dir: Dir,
    pub pol: Pol,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode { dir: Dir::F, pol: Pol::X },
        Mode { dir: Dir::B, pol: Pol::X },
        Mode { dir: Dir::F, pol: Pol::Y },
        Mode { dir: Dir::B, pol: Pol::Y },
    ];

    pub fn new(dir: Dir, pol: Pol) -> Self {
        Mode { dir, pol }
    }

    pub fn slot(self) -> usize {
        self.pol.index() * 2 + self.dir.index()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.dir, self.pol)
    }
}

/// Output channel of a photon pair: signal mode and idler mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Channel {
    pub signal: Mode,
    pub idler: Mode,
}

impl Channel {
    pub fn new(signal: Mode, idler: Mode) -> Self {
        Channel { signal, idler }
    }

    pub fn all() -> impl Iterator<Item = Channel> {
        Mode::ALL
            .into_iter()
            .flat_map(|s| Mode::ALL.into_iter().map(move |i| Channel::new(s, i)))
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}_{}{}",
            self.signal.dir, self.idler.dir, self.signal.pol, self.idler.pol
        )
    }
}

impl FromStr for Mode {
    type Err = Error;

    /// Parses `Fx`, `By`, ...
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse {
            what: "mode".into(),
            msg: format!("expected F|B followed by x|y, got `{s}`"),
        };
        let mut it = s.chars();
        let dir = match it.next() {
            Some('F') => Dir::F,
            Some('B') => Dir::B,
            _ => return Err(bad()),
        };
        let pol = it.next().and_then(Pol::from_char).ok_or_else(bad)?;
        if it.next().is_some() {
            return Err(bad());
        }
        Ok(Mode::new(dir, pol))
    }
}

impl FromStr for Channel {
    type Err = Error;

    /// Parses the display form `FF_xy`: signal and idler directions, then
    /// signal and idler polarizations.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::Parse {
            what: "channel".into(),
            msg: format!("expected e.g. `FF_xy`, got `{s}`"),
        };
        let (dirs, pols) = s.split_once('_').ok_or_else(bad)?;
        let d: Vec<char> = dirs.chars().collect();
        let p: Vec<char> = pols.chars().collect();
        if d.len() != 2 || p.len() != 2 {
            return Err(bad());
        }
        let signal = format!("{}{}", d[0], p[0]).parse::<Mode>().map_err(|_| bad())?;
        let idler = format!("{}{}", d[1], p[1]).parse::<Mode>().map_err(|_| bad())?;
        Ok(Channel::new(signal, idler))
    }
}
