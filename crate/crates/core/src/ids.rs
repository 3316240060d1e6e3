//! Identifiers and the directed links that message reservations are made on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Discrete time, in whole time units.
pub type Time = u64;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            /// Accepts both the bare number and the prefixed form (`3`, `ES3`).
            fn from_str(s: &str) -> Result<Self, Error> {
                let s = s.trim();
                let digits = s.strip_prefix($prefix).unwrap_or(s);
                digits
                    .parse::<u32>()
                    .map($name)
                    .map_err(|_| Error::parse(format!(concat!("invalid ", stringify!($name), " `{}`"), s)))
            }
        }
    };
}

id_type!(
    /// Task identifier, unique within one application model.
    TaskId,
    ""
);
id_type!(
    /// End system (processing node) identifier.
    EsId,
    "ES"
);
id_type!(
    /// Router identifier.
    RouterId,
    "R"
);

/// A vertex of the network: either an end system or a router.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    Es(EsId),
    Router(RouterId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Es(es) => es.fmt(f),
            Node::Router(r) => r.fmt(f),
        }
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s.starts_with("ES") {
            s.parse().map(Node::Es)
        } else if s.starts_with('R') {
            s.parse().map(Node::Router)
        } else {
            Err(Error::parse(format!("invalid node `{s}` (expected ES<n> or R<n>)")))
        }
    }
}

/// One directed hop between two adjacent nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub from: Node,
    pub to: Node,
}

impl Link {
    pub fn new(from: Node, to: Node) -> Self {
        Link { from, to }
    }

    pub fn touches_es(&self, es: EsId) -> bool {
        self.from == Node::Es(es) || self.to == Node::Es(es)
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (from, to) =
            s.split_once("->").ok_or_else(|| Error::parse(format!("invalid link `{s}` (expected A->B)")))?;
        Ok(Link::new(from.parse()?, to.parse()?))
    }
}
