//! Multi-node network model: nodes holding qubit states, links carrying a
//! channel and a noise model, and one EPR source node.
//!
//! Link channels act once, when [`distribute_epr`] hands out a pair; the
//! link's Lindblad model then drives the endpoint states over time in
//! [`link_fidelity_test`].

use std::collections::HashSet;

use serde::Deserialize;

use crate::batch::{self, Execution};
use crate::dynamics::{self, LindbladModel, TdSample, TimeGrid};
use crate::error::{Error, Result};
use crate::metrics::{self, TdBand};
use crate::qstate::{self, DensityMatrix, QuantumChannel};
use crate::random;
use crate::scenario::{at, ChannelSpec, NoiseSpec, StateSpec};

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub state: DensityMatrix,
    pub position: [f64; 2],
    /// Noise acting on the node's own state; used for the EPR source
    /// self-fidelity diagnostic.
    pub noise: Option<LindbladModel>,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub id: String,
    pub a: String,
    pub b: String,
    pub channel: QuantumChannel,
    pub model: LindbladModel,
}

impl Link {
    fn joins(&self, x: &str, y: &str) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    epr_source: String,
}

impl Network {
    /// Checks that ids are unique, link endpoints exist and dimensions
    /// agree along every link.
    pub fn new(nodes: Vec<Node>, links: Vec<Link>, epr_source: impl Into<String>) -> Result<Self> {
        let epr_source = epr_source.into();
        let mut seen = HashSet::new();
        for n in &nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(Error::InvalidPair(format!("duplicate node id `{}`", n.id)));
            }
        }
        if !seen.contains(epr_source.as_str()) {
            return Err(Error::UnknownNode(epr_source));
        }
        let mut link_ids = HashSet::new();
        for l in &links {
            if !link_ids.insert(l.id.as_str()) {
                return Err(Error::InvalidPair(format!("duplicate link id `{}`", l.id)));
            }
            if l.a == l.b {
                return Err(Error::InvalidPair(format!("link `{}` joins `{}` to itself", l.id, l.a)));
            }
            let dim = l.model.dim();
            for end in [&l.a, &l.b] {
                let node = nodes
                    .iter()
                    .find(|n| &n.id == end)
                    .ok_or_else(|| Error::UnknownNode(end.clone()))?;
                qstate::ensure_dim(dim, node.state.dim())?;
            }
            qstate::ensure_dim(dim, l.channel.input_dim())?;
        }
        Ok(Self { nodes, links, epr_source })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn epr_source(&self) -> &str {
        &self.epr_source
    }

    pub fn node(&self, id: &str) -> Result<&Node> {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    fn node_mut(&mut self, id: &str) -> Result<&mut Node> {
        self.nodes
            .iter_mut()
            .find(|n| n.id == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn link(&self, id: &str) -> Result<&Link> {
        self.links
            .iter()
            .find(|l| l.id == id)
            .ok_or_else(|| Error::UnknownLink(id.to_string()))
    }

    /// Channel between the EPR source and `node`; identity for the source itself
    /// or when no such link exists.
    fn source_channel(&self, node: &str) -> QuantumChannel {
        if node == self.epr_source {
            return QuantumChannel::identity(2);
        }
        self.links
            .iter()
            .find(|l| l.joins(&self.epr_source, node))
            .map(|l| l.channel.clone())
            .unwrap_or_else(|| QuantumChannel::identity(2))
    }
}

/// Scenario description of a network.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub epr_source: String,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub position: [f64; 2],
    /// Defaults to `zero`.
    pub state: Option<StateSpec>,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    /// Defaults to `"<a>-<b>"`.
    pub id: Option<String>,
    pub a: String,
    pub b: String,
    /// Defaults to the identity channel.
    pub channel: Option<ChannelSpec>,
    /// Defaults to no noise.
    pub noise: Option<NoiseSpec>,
}

impl LinkSpec {
    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| format!("{}-{}", self.a, self.b))
    }
}

/// Validates a scenario description and builds the network. Random node
/// states draw from a stream derived from `seed` and the node's index.
pub fn build_network(spec: &NetworkSpec, seed: u64) -> Result<Network> {
    let mut ids = HashSet::new();
    let mut nodes = Vec::with_capacity(spec.nodes.len());
    for (i, ns) in spec.nodes.iter().enumerate() {
        let field = format!("network.nodes[{i}]");
        if ns.id.is_empty() {
            return Err(Error::spec(format!("{field}.id"), "must not be empty"));
        }
        if !ids.insert(ns.id.as_str()) {
            return Err(Error::spec(format!("{field}.id"), format!("duplicate node id `{}`", ns.id)));
        }
        if ns.position.iter().any(|x| !x.is_finite()) {
            return Err(Error::spec(format!("{field}.position"), "coordinates must be finite"));
        }
        let mut rng = random::seeded(batch::item_seed(seed, i));
        let state = match &ns.state {
            Some(s) => s.resolve(&format!("{field}.state"), 2, &mut rng)?,
            None => DensityMatrix::basis(2, 0),
        };
        if state.dim() != 2 {
            return Err(Error::spec(format!("{field}.state"), format!("network nodes hold qubits, got dim {}", state.dim())));
        }
        let noise = ns.noise.as_ref().map(|n| n.build(&format!("{field}.noise"))).transpose()?;
        nodes.push(Node {
            id: ns.id.clone(),
            state,
            position: ns.position,
            noise,
        });
    }
    if !ids.contains(spec.epr_source.as_str()) {
        return Err(Error::spec("network.epr_source", format!("unknown node id `{}`", spec.epr_source)));
    }
    let mut link_ids = HashSet::new();
    let mut links = Vec::with_capacity(spec.links.len());
    for (i, ls) in spec.links.iter().enumerate() {
        let field = format!("network.links[{i}]");
        for (end, name) in [(&ls.a, "a"), (&ls.b, "b")] {
            if !ids.contains(end.as_str()) {
                return Err(Error::spec(format!("{field}.{name}"), format!("unknown node id `{end}`")));
            }
        }
        if ls.a == ls.b {
            return Err(Error::spec(field, format!("link joins `{}` to itself", ls.a)));
        }
        let id = ls.id();
        if !link_ids.insert(id.clone()) {
            return Err(Error::spec(format!("{field}.id"), format!("duplicate link id `{id}`")));
        }
        let channel = match &ls.channel {
            Some(c) => c.build(&format!("{field}.channel"))?,
            None => QuantumChannel::identity(2),
        };
        let model = ls.noise.clone().unwrap_or_default().build(&format!("{field}.noise"))?;
        links.push(Link {
            id,
            a: ls.a.clone(),
            b: ls.b.clone(),
            channel,
            model,
        });
    }
    Network::new(nodes, links, spec.epr_source.clone()).map_err(at("network"))
}

/// Hands out Φ⁺ to `a` and `b`, each half passing through the channel that
/// links its endpoint to the EPR source. Stores the marginals on the nodes
/// and returns the joint state.
pub fn distribute_epr(net: &mut Network, a: &str, b: &str) -> Result<DensityMatrix> {
    if a == b {
        return Err(Error::InvalidPair(format!("`{a}` paired with itself")));
    }
    net.node(a)?;
    net.node(b)?;
    let (ca, cb) = (net.source_channel(a), net.source_channel(b));
    for c in [&ca, &cb] {
        qstate::ensure_dim(2, c.input_dim())?;
    }
    let joint = ca.tensor(&cb).apply(&qstate::epr_pair())?;
    net.node_mut(a)?.state = qstate::partial_trace(&joint, &[2, 2], &[0])?;
    net.node_mut(b)?.state = qstate::partial_trace(&joint, &[2, 2], &[1])?;
    Ok(joint)
}

#[derive(Debug, Clone)]
pub struct Supernode {
    pub nearest: String,
    pub farthest: String,
    /// ½ρ_near + ½ρ_far
    pub state: DensityMatrix,
}

/// Ranks non-source nodes by Euclidean distance from the EPR source (ties
/// broken by id) and mixes the nearest and farthest states 50/50.
pub fn supernode_pairing(net: &Network) -> Result<Supernode> {
    let source = net.node(&net.epr_source)?;
    let dist = |n: &Node| (n.position[0] - source.position[0]).hypot(n.position[1] - source.position[1]);
    let mut ranked: Vec<(f64, &Node)> = net
        .nodes
        .iter()
        .filter(|n| n.id != net.epr_source)
        .map(|n| (dist(n), n))
        .collect();
    if ranked.len() < 2 {
        return Err(Error::TooFewNodes { found: ranked.len() });
    }
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.id.cmp(&y.1.id)));
    let (near, far) = (ranked[0].1, ranked[ranked.len() - 1].1);
    let state = DensityMatrix::mixture(&[(0.5, &near.state), (0.5, &far.state)])?;
    Ok(Supernode {
        nearest: near.id.clone(),
        farthest: far.id.clone(),
        state,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRow {
    pub t: f64,
    pub trace_distance: f64,
    pub band: TdBand,
    pub fidelity: f64,
    pub fvdg_low: f64,
    pub fvdg_high: f64,
    /// √TD
    pub published_f_lower: f64,
    /// √(1 − TD)
    pub published_f_upper: f64,
}

impl LinkRow {
    fn from_sample(s: &TdSample) -> Result<Self> {
        let (fvdg_low, fvdg_high) = metrics::fvdg_bounds(s.fidelity.clamp(0.0, 1.0))?;
        let (published_f_lower, published_f_upper) = metrics::published_fidelity_bounds(s.trace_distance)?;
        Ok(Self {
            t: s.t,
            trace_distance: s.trace_distance,
            band: s.band,
            fidelity: s.fidelity,
            fvdg_low,
            fvdg_high,
            published_f_lower,
            published_f_upper,
        })
    }

    /// How far TD leaves the interval `[fvdg_low, fvdg_high]`; ≤ 0 when inside.
    pub fn sandwich_violation(&self) -> f64 {
        (self.fvdg_low - self.trace_distance).max(self.trace_distance - self.fvdg_high)
    }
}

#[derive(Debug, Clone)]
pub struct LinkReport {
    pub link_id: String,
    pub rows: Vec<LinkRow>,
}

impl LinkReport {
    pub fn from_samples(link_id: String, samples: &[TdSample]) -> Result<Self> {
        let rows = samples.iter().map(LinkRow::from_sample).collect::<Result<_>>()?;
        Ok(Self { link_id, rows })
    }

    pub fn max_sandwich_violation(&self) -> f64 {
        self.rows.iter().map(LinkRow::sandwich_violation).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Trace distance and fidelity between the link's endpoint states, both
/// evolving under the link's noise model.
pub fn link_fidelity_test(net: &Network, link_id: &str, grid: &TimeGrid) -> Result<LinkReport> {
    let link = net.link(link_id)?;
    let (a, b) = (net.node(&link.a)?, net.node(&link.b)?);
    let samples = dynamics::td_trajectory(&a.state, &b.state, &link.model, grid)?;
    LinkReport::from_samples(link.id.clone(), &samples)
}

/// The supernode state, passed once through `channel`, compared against the
/// EPR source state with both evolving under `model`.
pub fn supernode_link_test(
    net: &Network,
    supernode: &Supernode,
    channel: &QuantumChannel,
    model: &LindbladModel,
    grid: &TimeGrid,
) -> Result<LinkReport> {
    let source = net.node(&net.epr_source)?;
    let sent = channel.apply(&supernode.state)?;
    let samples = dynamics::td_trajectory(&sent, &source.state, model, grid)?;
    LinkReport::from_samples("supernode".to_string(), &samples)
}

#[derive(Debug, Clone)]
pub struct NetworkReport {
    pub times: Vec<f64>,
    /// Arithmetic mean of the per-link Uhlmann fidelities.
    pub aggregate: Vec<f64>,
    pub links: Vec<LinkReport>,
    /// F(ρ_source(0), ρ_source(t)) under the source's own noise.
    pub source_fidelity: Vec<f64>,
}

/// Runs [`link_fidelity_test`] on every link (concurrently when enabled)
/// and averages the fidelities.
pub fn network_fidelity(net: &Network, grid: &TimeGrid) -> Result<NetworkReport> {
    if net.links.is_empty() {
        return Err(Error::TooFewLinks { required: 1, found: 0 });
    }
    let (links, source_fidelity) = batch::join(
        || {
            batch::try_map_indexed(net.links.len(), Execution::Auto, |i| {
                link_fidelity_test(net, &net.links[i].id, grid)
            })
        },
        || source_self_fidelity(net, grid),
    );
    let (links, source_fidelity) = (links?, source_fidelity?);
    let times = grid.times();
    let aggregate = (0..times.len())
        .map(|k| links.iter().map(|l| l.rows[k].fidelity).sum::<f64>() / links.len() as f64)
        .collect();
    Ok(NetworkReport {
        times,
        aggregate,
        links,
        source_fidelity,
    })
}

fn source_self_fidelity(net: &Network, grid: &TimeGrid) -> Result<Vec<f64>> {
    let source = net.node(&net.epr_source)?;
    match &source.noise {
        None => Ok(vec![1.0; grid.steps() + 1]),
        Some(model) => dynamics::lindblad_evolve(&source.state, model, grid)?
            .states
            .iter()
            .map(|s| metrics::uhlmann_fidelity(&source.state, s))
            .collect(),
    }
}
