//! Cellular network topology.
//!
//! A network is a set of cells, each holding one base station (QBS) and any
//! number of clients (QNC). Clients have a quantum link only to their own
//! cell's base station; base stations of adjacent cells are joined by
//! inter-cell fiber. Classical connectivity is assumed full-mesh unless a
//! topology file narrows it.
//!
//! Topologies load from a versioned TOML description; see `configs/` for
//! worked files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adversary::InterceptResendConfig;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

pub const TOPOLOGY_SCHEMA_VERSION: u32 = 1;

/// Maximum inter-cell fiber length; beyond this the link budget of today's
/// hardware does not close.
pub const MAX_INTER_QBS_KM: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub String);

impl CellId {
    pub fn new(id: impl Into<String>) -> Self {
        CellId(id.into())
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CellId {
    fn from(s: &str) -> Self {
        CellId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Qnc,
    Qbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub cell: CellId,
}

/// A fiber between two nodes, with its channel model and an optional tap.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLink {
    pub a: NodeId,
    pub b: NodeId,
    pub channel: ChannelParams,
    pub adversary: Option<InterceptResendConfig>,
}

impl QuantumLink {
    /// Stable label for transcripts: the two endpoint ids in sorted order.
    pub fn label(&self) -> String {
        let (x, y) = ordered(&self.a, &self.b);
        format!("{x}~{y}")
    }
}

pub(crate) fn ordered<'a>(a: &'a NodeId, b: &'a NodeId) -> (&'a NodeId, &'a NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub qbs: NodeId,
    pub qncs: BTreeSet<NodeId>,
}

/// Immutable, validated network description.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    cells: BTreeMap<CellId, Cell>,
    nodes: BTreeMap<NodeId, Node>,
    links: BTreeMap<(NodeId, NodeId), QuantumLink>,
    classical: Option<BTreeSet<(NodeId, NodeId)>>,
}

impl Topology {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    /// A single cell holding two clients behind one base station; the plain
    /// three-party layout.
    pub fn single_cell(channel: ChannelParams) -> Topology {
        Topology::builder()
            .cell("cell-1", "qbs-1", ["alice", "bob"])
            .quantum_link("alice", "qbs-1", channel.clone(), None)
            .quantum_link("bob", "qbs-1", channel, None)
            .build()
            .expect("single cell is valid")
    }

    /// A linear chain of `n_cells` cells with one client at each end and the
    /// same channel on every fiber. Cells are `cell-1..cell-n`, base
    /// stations `qbs-1..qbs-n`, clients `alice` and `bob`.
    pub fn linear_chain(n_cells: usize, channel: ChannelParams) -> Topology {
        assert!(n_cells >= 1, "a chain needs at least one cell");
        let mut b = Topology::builder();
        for i in 1..=n_cells {
            let cell = format!("cell-{i}");
            let qbs = format!("qbs-{i}");
            let qncs: Vec<String> = match (i, n_cells) {
                (1, 1) => vec!["alice".into(), "bob".into()],
                (1, _) => vec!["alice".into()],
                (i, n) if i == n => vec!["bob".into()],
                _ => vec![],
            };
            b = b.cell(cell, qbs, qncs);
        }
        b = b.quantum_link("alice", "qbs-1", channel.clone(), None);
        b = b.quantum_link("bob", format!("qbs-{n_cells}"), channel.clone(), None);
        for i in 1..n_cells {
            b = b.quantum_link(
                format!("qbs-{i}"),
                format!("qbs-{}", i + 1),
                channel.clone(),
                None,
            );
        }
        b.build().expect("linear chain is valid")
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    pub fn node(&self, id: &NodeId) -> Result<&Node> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn cell(&self, id: &CellId) -> Result<&Cell> {
        self.cells
            .get(id)
            .ok_or_else(|| Error::InvalidTopology(format!("unknown cell {id}")))
    }

    pub fn qbs_of_cell(&self, id: &CellId) -> Result<&NodeId> {
        Ok(&self.cell(id)?.qbs)
    }

    pub fn quantum_link(&self, a: &NodeId, b: &NodeId) -> Result<&QuantumLink> {
        let (x, y) = ordered(a, b);
        self.links
            .get(&(x.clone(), y.clone()))
            .ok_or_else(|| Error::InvalidTopology(format!("no quantum link between {a} and {b}")))
    }

    pub fn links(&self) -> impl Iterator<Item = &QuantumLink> {
        self.links.values()
    }

    /// Base stations adjacent to `qbs` over inter-cell fiber, sorted by id.
    pub fn qbs_neighbors(&self, qbs: &NodeId) -> Vec<&NodeId> {
        let mut out = Vec::new();
        for link in self.links.values() {
            let other = if &link.a == qbs {
                &link.b
            } else if &link.b == qbs {
                &link.a
            } else {
                continue;
            };
            if matches!(self.nodes.get(other).map(|n| n.kind), Some(NodeKind::Qbs)) {
                out.push(other);
            }
        }
        out.sort();
        out
    }

    /// True when the pair may talk classically. Full mesh unless narrowed.
    pub fn classically_connected(&self, a: &NodeId, b: &NodeId) -> bool {
        match &self.classical {
            None => true,
            Some(set) => {
                let (x, y) = ordered(a, b);
                set.contains(&(x.clone(), y.clone()))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        for cell in self.cells.values() {
            let qbs = self.nodes.get(&cell.qbs).ok_or_else(|| {
                Error::InvalidTopology(format!("cell {} names missing QBS {}", cell.id, cell.qbs))
            })?;
            if qbs.kind != NodeKind::Qbs || qbs.cell != cell.id {
                return Err(Error::InvalidTopology(format!(
                    "node {} is not the QBS of cell {}",
                    cell.qbs, cell.id
                )));
            }
        }
        for link in self.links.values() {
            let a = self.node(&link.a)?;
            let b = self.node(&link.b)?;
            link.channel.validate()?;
            if let Some(adv) = &link.adversary {
                adv.validate()?;
            }
            match (a.kind, b.kind) {
                (NodeKind::Qnc, NodeKind::Qnc) => {
                    return Err(Error::InvalidTopology(format!(
                        "clients {} and {} cannot share a quantum link",
                        a.id, b.id
                    )));
                }
                (NodeKind::Qnc, NodeKind::Qbs) | (NodeKind::Qbs, NodeKind::Qnc) => {
                    let (qnc, qbs) = if a.kind == NodeKind::Qnc {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    let home = &self.cells[&qnc.cell].qbs;
                    if home != &qbs.id {
                        return Err(Error::InvalidTopology(format!(
                            "client {} may only link to its cell's QBS {home}, not {}",
                            qnc.id, qbs.id
                        )));
                    }
                }
                (NodeKind::Qbs, NodeKind::Qbs) => {
                    if a.cell == b.cell {
                        return Err(Error::InvalidTopology(format!(
                            "cell {} has two base stations",
                            a.cell
                        )));
                    }
                    if link.channel.length_km > MAX_INTER_QBS_KM {
                        return Err(Error::InvalidTopology(format!(
                            "inter-cell fiber {} is {} km, beyond the {MAX_INTER_QBS_KM} km bound",
                            link.label(),
                            link.channel.length_km
                        )));
                    }
                }
            }
        }
        if let Some(classical) = &self.classical {
            for (a, b) in classical {
                self.node(a)?;
                self.node(b)?;
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Topology> {
        let file: TopologyFile = toml::from_str(text)
            .map_err(|e| Error::InvalidTopology(format!("topology parse error: {e}")))?;
        if file.schema_version != TOPOLOGY_SCHEMA_VERSION {
            return Err(Error::InvalidTopology(format!(
                "unsupported topology schema_version {} (expected {TOPOLOGY_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let mut builder = Topology::builder();
        for cell in file.cells {
            builder = builder.cell(cell.id, cell.qbs, cell.qncs);
        }
        for link in file.quantum_links {
            builder = builder.quantum_link(link.a, link.b, link.channel, link.adversary);
        }
        if let Some(pairs) = file.classical_links {
            builder = builder.classical_links(
                pairs
                    .into_iter()
                    .map(|p| (NodeId::new(p.a), NodeId::new(p.b))),
            );
        }
        builder.build()
    }

    pub fn to_toml_string(&self) -> String {
        let file = TopologyFile {
            schema_version: TOPOLOGY_SCHEMA_VERSION,
            cells: self
                .cells
                .values()
                .map(|c| CellEntry {
                    id: c.id.0.clone(),
                    qbs: c.qbs.0.clone(),
                    qncs: c.qncs.iter().map(|q| q.0.clone()).collect(),
                })
                .collect(),
            quantum_links: self
                .links
                .values()
                .map(|l| LinkEntry {
                    a: l.a.0.clone(),
                    b: l.b.0.clone(),
                    channel: l.channel.clone(),
                    adversary: l.adversary,
                })
                .collect(),
            classical_links: self.classical.as_ref().map(|set| {
                set.iter()
                    .map(|(a, b)| PairEntry {
                        a: a.0.clone(),
                        b: b.0.clone(),
                    })
                    .collect()
            }),
        };
        toml::to_string(&file).expect("topology serializes")
    }
}

#[derive(Default)]
pub struct TopologyBuilder {
    cells: Vec<(String, String, Vec<String>)>,
    links: Vec<(String, String, ChannelParams, Option<InterceptResendConfig>)>,
    classical: Option<BTreeSet<(NodeId, NodeId)>>,
}

impl TopologyBuilder {
    pub fn cell(
        mut self,
        id: impl Into<String>,
        qbs: impl Into<String>,
        qncs: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        self.cells.push((
            id.into(),
            qbs.into(),
            qncs.into_iter().map(Into::into).collect(),
        ));
        self
    }

    pub fn quantum_link(
        mut self,
        a: impl Into<String>,
        b: impl Into<String>,
        channel: ChannelParams,
        adversary: Option<InterceptResendConfig>,
    ) -> Self {
        self.links.push((a.into(), b.into(), channel, adversary));
        self
    }

    pub fn classical_links(mut self, pairs: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let set = self.classical.get_or_insert_with(BTreeSet::new);
        for (a, b) in pairs {
            let (x, y) = ordered(&a, &b);
            set.insert((x.clone(), y.clone()));
        }
        self
    }

    pub fn build(self) -> Result<Topology> {
        let mut cells = BTreeMap::new();
        let mut nodes: BTreeMap<NodeId, Node> = BTreeMap::new();
        for (cell_id, qbs, qncs) in self.cells {
            let cell_id = CellId::new(cell_id);
            let qbs_id = NodeId::new(qbs);
            if nodes.contains_key(&qbs_id) {
                return Err(Error::InvalidTopology(format!(
                    "node {qbs_id} declared more than once"
                )));
            }
            nodes.insert(
                qbs_id.clone(),
                Node {
                    id: qbs_id.clone(),
                    kind: NodeKind::Qbs,
                    cell: cell_id.clone(),
                },
            );
            let mut members = BTreeSet::new();
            for qnc in qncs {
                let qnc_id = NodeId::new(qnc);
                if nodes.contains_key(&qnc_id) {
                    return Err(Error::InvalidTopology(format!(
                        "node {qnc_id} declared more than once"
                    )));
                }
                nodes.insert(
                    qnc_id.clone(),
                    Node {
                        id: qnc_id.clone(),
                        kind: NodeKind::Qnc,
                        cell: cell_id.clone(),
                    },
                );
                members.insert(qnc_id);
            }
            if cells
                .insert(
                    cell_id.clone(),
                    Cell {
                        id: cell_id.clone(),
                        qbs: qbs_id,
                        qncs: members,
                    },
                )
                .is_some()
            {
                return Err(Error::InvalidTopology(format!(
                    "cell {cell_id} declared more than once"
                )));
            }
        }
        let mut links = BTreeMap::new();
        for (a, b, channel, adversary) in self.links {
            let a = NodeId::new(a);
            let b = NodeId::new(b);
            if a == b {
                return Err(Error::InvalidTopology(format!("{a} cannot link to itself")));
            }
            let (x, y) = ordered(&a, &b);
            let key = (x.clone(), y.clone());
            if links
                .insert(
                    key,
                    QuantumLink {
                        a: a.clone(),
                        b: b.clone(),
                        channel,
                        adversary,
                    },
                )
                .is_some()
            {
                return Err(Error::InvalidTopology(format!(
                    "duplicate quantum link between {a} and {b}"
                )));
            }
        }
        let topology = Topology {
            cells,
            nodes,
            links,
            classical: self.classical,
        };
        topology.validate()?;
        Ok(topology)
    }
}

// --- file format ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    schema_version: u32,
    #[serde(default)]
    cells: Vec<CellEntry>,
    #[serde(default)]
    quantum_links: Vec<LinkEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classical_links: Option<Vec<PairEntry>>,
}

#[derive(Serialize, Deserialize)]
struct CellEntry {
    id: String,
    qbs: String,
    #[serde(default)]
    qncs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LinkEntry {
    a: String,
    b: String,
    channel: ChannelParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    adversary: Option<InterceptResendConfig>,
}

#[derive(Serialize, Deserialize)]
struct PairEntry {
    a: String,
    b: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch() -> ChannelParams {
        ChannelParams::ideal()
    }

    #[test]
    fn linear_chain_layout() {
        let t = Topology::linear_chain(3, ch());
        assert_eq!(t.cells().count(), 3);
        let alice = t.node(&"alice".into()).unwrap();
        assert_eq!(alice.kind, NodeKind::Qnc);
        assert_eq!(alice.cell, "cell-1".into());
        assert!(t.quantum_link(&"qbs-1".into(), &"qbs-2".into()).is_ok());
        assert!(t.quantum_link(&"qbs-1".into(), &"qbs-3".into()).is_err());
        assert_eq!(
            t.qbs_neighbors(&"qbs-2".into()),
            vec![&NodeId::new("qbs-1"), &NodeId::new("qbs-3")]
        );
    }

    #[test]
    fn rejects_client_linked_to_foreign_qbs() {
        let err = Topology::builder()
            .cell("c1", "q1", ["alice"])
            .cell("c2", "q2", ["bob"])
            .quantum_link("alice", "q2", ch(), None)
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::InvalidTopology(_)), "{err}");
    }

    #[test]
    fn rejects_client_to_client_links() {
        let err = Topology::builder()
            .cell("c1", "q1", ["alice", "bob"])
            .quantum_link("alice", "bob", ch(), None)
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::InvalidTopology(_)));
    }

    #[test]
    fn rejects_overlong_inter_cell_fiber() {
        let long = ChannelParams {
            length_km: 120.0,
            ..ch()
        };
        let err = Topology::builder()
            .cell("c1", "q1", Vec::<String>::new())
            .cell("c2", "q2", Vec::<String>::new())
            .quantum_link("q1", "q2", long, None)
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("beyond"), "{err}");
    }

    #[test]
    fn rejects_duplicate_nodes_and_cells() {
        assert!(Topology::builder()
            .cell("c1", "q1", ["alice"])
            .cell("c2", "q1", Vec::<String>::new())
            .build()
            .is_err());
        assert!(Topology::builder()
            .cell("c1", "q1", ["alice", "alice"])
            .build()
            .is_err());
    }

    #[test]
    fn toml_round_trip_preserves_the_topology() {
        let t = Topology::linear_chain(3, ChannelParams::reference_25km());
        let text = t.to_toml_string();
        let back = Topology::from_toml_str(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn toml_schema_version_is_enforced() {
        let t = Topology::linear_chain(2, ch());
        let text = t
            .to_toml_string()
            .replace("schema_version = 1", "schema_version = 9");
        assert!(Topology::from_toml_str(&text).is_err());
    }

    #[test]
    fn classical_connectivity_defaults_to_full_mesh() {
        let t = Topology::linear_chain(2, ch());
        assert!(t.classically_connected(&"alice".into(), &"bob".into()));
        let narrowed = Topology::builder()
            .cell("c1", "q1", ["alice"])
            .quantum_link("alice", "q1", ch(), None)
            .classical_links([(NodeId::new("alice"), NodeId::new("q1"))])
            .build()
            .unwrap();
        assert!(narrowed.classically_connected(&"alice".into(), &"q1".into()));
        assert!(!narrowed.classically_connected(&"alice".into(), &"zz".into()));
    }
}
