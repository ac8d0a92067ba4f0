//! JSON files: networks and amplitude lists.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, RingMatrix};
use crate::network::{CodingNetwork, Link, NodeSpec, PortRef};
use crate::state::{QuditState, StateError};

pub const FORMAT_VERSION: u32 = 1;

/// Amplitude lists whose norm is further than this from 1 draw a warning.
pub const NORM_WARNING: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0} (expected 1)")]
    Version(u32),
    #[error("node {node}: {source}")]
    Matrix { node: String, source: LinalgError },
    #[error("node {node}: rows of different lengths")]
    Ragged { node: String },
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub matrix: Vec<Vec<i64>>,
    /// Number of in-ports; only needed when the matrix has no rows.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inputs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub d: u64,
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub links: Vec<(String, usize, String, usize)>,
    pub inputs: Vec<(String, usize)>,
    pub outputs: Vec<(String, usize)>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl NetworkFile {
    pub fn from_network(net: &CodingNetwork) -> Self {
        Self {
            version: FORMAT_VERSION,
            d: net.modulus,
            nodes: net
                .nodes
                .iter()
                .map(|n| NodeEntry {
                    id: n.id.clone(),
                    matrix: n.matrix.to_rows().into_iter().map(|r| r.into_iter().map(|v| v as i64).collect()).collect(),
                    inputs: (n.matrix.rows() == 0).then_some(n.matrix.cols()),
                })
                .collect(),
            links: net
                .links
                .iter()
                .map(|l| (l.from.node.clone(), l.from.port, l.to.node.clone(), l.to.port))
                .collect(),
            inputs: net.inputs.iter().map(|p| (p.node.clone(), p.port)).collect(),
            outputs: net.outputs.iter().map(|p| (p.node.clone(), p.port)).collect(),
        }
    }

    /// Build the network. Entries are reduced mod `d`; structural checks are
    /// left to [`CodingNetwork::validate`].
    pub fn into_network(self) -> Result<CodingNetwork, FormatError> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Version(self.version));
        }
        let d = self.d;
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| {
                let cols = n.matrix.first().map_or(n.inputs.unwrap_or(0), Vec::len);
                if n.matrix.iter().any(|r| r.len() != cols) {
                    return Err(FormatError::Ragged { node: n.id });
                }
                match RingMatrix::from_rows(d, &n.matrix, cols) {
                    Ok(matrix) => Ok(NodeSpec { id: n.id, matrix }),
                    Err(source) => Err(FormatError::Matrix { node: n.id, source }),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CodingNetwork {
            modulus: d,
            nodes,
            links: self.links.iter().map(|(f, fp, t, tp)| Link::new(f, *fp, t, *tp)).collect(),
            inputs: self.inputs.into_iter().map(|(n, p)| PortRef::new(n, p)).collect(),
            outputs: self.outputs.into_iter().map(|(n, p)| PortRef::new(n, p)).collect(),
        })
    }
}

pub fn parse_network(text: &str) -> Result<CodingNetwork, FormatError> {
    serde_json::from_str::<NetworkFile>(text)?.into_network()
}

pub fn network_to_json(net: &CodingNetwork) -> String {
    serde_json::to_string_pretty(&NetworkFile::from_network(net)).expect("networks always serialize")
}

/// A parsed amplitude list and, when it had to be renormalized, its original norm.
#[derive(Debug, Clone)]
pub struct LoadedState {
    pub state: QuditState,
    pub renormalized_from: Option<f64>,
}

/// Parse `[[re, im], ...]` listing `d^k` amplitudes in basis order.
pub fn parse_amplitudes(text: &str, d: usize) -> Result<LoadedState, FormatError> {
    let pairs: Vec<(f64, f64)> = serde_json::from_str(text)?;
    let amps: Vec<Complex64> = pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let state = QuditState::from_amplitudes(d, amps)?;
    let renormalized_from = ((norm - 1.0).abs() > NORM_WARNING).then_some(norm);
    Ok(LoadedState { state, renormalized_from })
}

pub fn amplitudes_to_json(state: &QuditState) -> String {
    let pairs: Vec<(f64, f64)> = state.amplitudes().iter().map(|a| (a.re, a.im)).collect();
    serde_json::to_string(&pairs).expect("amplitudes always serialize")
}
