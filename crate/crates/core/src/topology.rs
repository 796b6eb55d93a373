//! Wavelength planning for an N-user star network and the passive router that
//! realises it.
//!
//! Every unordered pair of users owns one wavelength through the central
//! router. Treating users as vertices and pairs as edges, a valid plan is a
//! proper edge colouring of the complete graph K_n: edges meeting at a vertex
//! must differ, since the multiplexer at that port can carry each wavelength
//! only once. K_n needs n - 1 colours for even n and n for odd n.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Largest insertion loss accepted for a router channel, in dB.
pub const MAX_INSERTION_LOSS_DB: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("insufficient channels: plan needs {needed} wavelengths, grid has {available}")]
    InsufficientChannels { needed: usize, available: usize },
    #[error("invalid router parameter: {0}")]
    InvalidRouter(String),
    #[error("self-route requested for node {0}")]
    SelfRoute(usize),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("plan is not a proper colouring: {0}")]
    ImproperPlan(String),
}

/// A network user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub index: usize,
    pub label: String,
}

impl NodeId {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self {
            index,
            label: label.into(),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Unordered pair of distinct node indices, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePair {
    lo: usize,
    hi: usize,
}

impl NodePair {
    /// Returns `None` when `a == b`.
    pub fn new(a: usize, b: usize) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(Self { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn contains(&self, node: usize) -> bool {
        self.lo == node || self.hi == node
    }
}

impl fmt::Display for NodePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// A wavelength channel: colour index within the plan and its grid wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelIndex {
    pub color: usize,
    pub wavelength_nm: f64,
}

/// Colour count the edge-colouring theorem prescribes for K_n.
pub fn chromatic_index(n_users: usize) -> usize {
    if n_users % 2 == 0 {
        n_users - 1
    } else {
        n_users
    }
}

/// Assignment of a colour to each unordered node pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WavelengthPlan {
    n_users: usize,
    assignment: BTreeMap<NodePair, usize>,
}

impl WavelengthPlan {
    /// Builds a plan from an explicit assignment without checking it; use
    /// [`validate_plan`] to inspect the result.
    pub fn from_assignment(
        n_users: usize,
        assignment: impl IntoIterator<Item = (NodePair, usize)>,
    ) -> Self {
        Self {
            n_users,
            assignment: assignment.into_iter().collect(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn color(&self, a: usize, b: usize) -> Option<usize> {
        NodePair::new(a, b).and_then(|p| self.assignment.get(&p).copied())
    }

    /// Edges in ascending pair order.
    pub fn edges(&self) -> impl Iterator<Item = (NodePair, usize)> + '_ {
        self.assignment.iter().map(|(p, c)| (*p, *c))
    }

    pub fn colors(&self) -> BTreeSet<usize> {
        self.assignment.values().copied().collect()
    }

    pub fn n_colors(&self) -> usize {
        self.colors().len()
    }

    /// Colours used on edges incident to `node`.
    pub fn port_colors(&self, node: usize) -> BTreeSet<usize> {
        self.edges()
            .filter(|(p, _)| p.contains(node))
            .map(|(_, c)| c)
            .collect()
    }
}

/// Proper edge colouring of K_n by the circle method.
///
/// For even n, node n - 1 sits at the centre and the others on a circle; in
/// round r the centre meets node r and node (r + k) meets node (r - k) modulo
/// n - 1. Each round is a perfect matching and gets its own colour. Odd n is
/// coloured as K_{n+1} with the phantom node's edges removed, so in every round
/// one real node idles.
pub fn color_complete_graph(n_users: usize) -> Result<WavelengthPlan, TopologyError> {
    if n_users < 2 {
        return Err(TopologyError::InvalidNetwork(format!(
            "a network needs at least 2 users, got {n_users}"
        )));
    }
    let even = if n_users % 2 == 0 { n_users } else { n_users + 1 };
    let ring = even - 1;
    let centre = even - 1;
    let mut assignment = BTreeMap::new();
    for round in 0..ring {
        let mut add = |a: usize, b: usize| {
            // Edges to the phantom node (index n_users when n is odd) are dropped.
            if a < n_users && b < n_users {
                let pair = NodePair::new(a, b).expect("circle method pairs distinct nodes");
                assignment.insert(pair, round);
            }
        };
        add(centre, round);
        for k in 1..even / 2 {
            add((round + k) % ring, (round + ring - k) % ring);
        }
    }
    Ok(WavelengthPlan {
        n_users,
        assignment,
    })
}

/// One defect found by [`validate_plan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanViolation {
    /// Two edges at `vertex` share `color`.
    SharedColor {
        vertex: usize,
        color: usize,
        first: NodePair,
        second: NodePair,
    },
    MissingPair(NodePair),
    NodeOutOfRange(NodePair),
    ColorCount { expected: usize, found: usize },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::SharedColor {
                vertex,
                color,
                first,
                second,
            } => write!(
                f,
                "vertex {vertex}: edges {first} and {second} both use colour {color}"
            ),
            PlanViolation::MissingPair(p) => write!(f, "pair {p} has no channel"),
            PlanViolation::NodeOutOfRange(p) => write!(f, "pair {p} names a node outside the network"),
            PlanViolation::ColorCount { expected, found } => {
                write!(f, "plan uses {found} colours, theorem requires {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<PlanViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Reports every same-coloured edge pair meeting at a vertex, every missing or
/// out-of-range pair, and a colour count that differs from the theorem.
pub fn validate_plan(plan: &WavelengthPlan) -> ValidationReport {
    let n = plan.n_users;
    let mut violations = Vec::new();

    for (pair, _) in plan.edges() {
        if pair.hi >= n {
            violations.push(PlanViolation::NodeOutOfRange(pair));
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let pair = NodePair { lo: a, hi: b };
            if !plan.assignment.contains_key(&pair) {
                violations.push(PlanViolation::MissingPair(pair));
            }
        }
    }
    for vertex in 0..n {
        let mut seen: BTreeMap<usize, NodePair> = BTreeMap::new();
        for (pair, color) in plan.edges().filter(|(p, _)| p.contains(vertex)) {
            if let Some(first) = seen.get(&color) {
                violations.push(PlanViolation::SharedColor {
                    vertex,
                    color,
                    first: *first,
                    second: pair,
                });
            } else {
                seen.insert(color, pair);
            }
        }
    }
    if n >= 2 {
        let expected = chromatic_index(n);
        let found = plan.n_colors();
        if found != expected {
            violations.push(PlanViolation::ColorCount { expected, found });
        }
    }
    ValidationReport { violations }
}

/// How isolation matrix entries relate to the router's end-to-end suppression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsolationBasis {
    /// Entries are single-multiplexer figures. A leaked photon is rejected at
    /// both the source and destination multiplexer, so the router suppresses
    /// it by twice the entry.
    PerWdm,
    /// Entries were measured across the whole router and apply as-is.
    Measured,
}

/// Inputs to [`build_router_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct RouterParams {
    /// Channel wavelengths in nm, strictly increasing; colour c uses grid[c].
    pub grid_nm: Vec<f64>,
    pub adjacent_isolation_db: f64,
    pub nonadjacent_isolation_db: f64,
    /// Per-colour through loss in dB.
    pub insertion_loss_db: Vec<f64>,
    /// Measured `[input][output]` matrix over grid positions, replacing the
    /// adjacency defaults when present. Diagonal entries are through losses.
    pub measured_isolation_db: Option<Vec<Vec<f64>>>,
}

impl RouterParams {
    /// 30 dB adjacent and 45 dB non-adjacent per-multiplexer isolation.
    pub fn with_defaults(grid_nm: Vec<f64>, insertion_loss_db: Vec<f64>) -> Self {
        Self {
            grid_nm,
            adjacent_isolation_db: 30.0,
            nonadjacent_isolation_db: 45.0,
            insertion_loss_db,
            measured_isolation_db: None,
        }
    }
}

/// The passive quantum router: port channel sets and the channel isolation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterSpec {
    plan: WavelengthPlan,
    channels: Vec<ChannelIndex>,
    ports: Vec<BTreeSet<usize>>,
    isolation_db: Vec<Vec<f64>>,
    insertion_loss_db: Vec<f64>,
    basis: IsolationBasis,
}

pub fn build_router_spec(
    plan: &WavelengthPlan,
    params: &RouterParams,
) -> Result<RouterSpec, TopologyError> {
    let grid = &params.grid_nm;
    let needed = plan.colors().last().map_or(0, |c| c + 1);
    if grid.len() < needed {
        return Err(TopologyError::InsufficientChannels {
            needed,
            available: grid.len(),
        });
    }
    if grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(TopologyError::InvalidRouter(
            "wavelengths must be positive".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TopologyError::InvalidRouter(
            "grid wavelengths must be strictly increasing".into(),
        ));
    }
    let adjacent = params.adjacent_isolation_db;
    let nonadjacent = params.nonadjacent_isolation_db;
    if !(adjacent > 0.0 && nonadjacent > 0.0) {
        return Err(TopologyError::InvalidRouter(
            "isolation values must be positive".into(),
        ));
    }
    let report = validate_plan(plan);
    if let Some(v) = report
        .violations
        .iter()
        .find(|v| !matches!(v, PlanViolation::ColorCount { .. }))
    {
        return Err(TopologyError::ImproperPlan(v.to_string()));
    }

    let n_channels = grid.len();
    if params.insertion_loss_db.len() != n_channels {
        return Err(TopologyError::InvalidRouter(format!(
            "{} insertion losses for {} channels",
            params.insertion_loss_db.len(),
            n_channels
        )));
    }
    for (c, loss) in params.insertion_loss_db.iter().enumerate() {
        if !(*loss > 0.0 && *loss < MAX_INSERTION_LOSS_DB) {
            return Err(TopologyError::InvalidRouter(format!(
                "insertion loss {loss} dB on channel {c} outside (0, {MAX_INSERTION_LOSS_DB})"
            )));
        }
    }

    let (isolation_db, basis) = match &params.measured_isolation_db {
        Some(m) => {
            if m.len() != n_channels || m.iter().any(|row| row.len() != n_channels) {
                return Err(TopologyError::InvalidRouter(format!(
                    "measured isolation matrix must be {n_channels}x{n_channels}"
                )));
            }
            for i in 0..n_channels {
                if (m[i][i] - params.insertion_loss_db[i]).abs() > 1e-9 {
                    return Err(TopologyError::InvalidRouter(format!(
                        "measured through loss {} dB on channel {i} disagrees with insertion loss {} dB",
                        m[i][i], params.insertion_loss_db[i]
                    )));
                }
                for j in 0..n_channels {
                    if i != j && m[i][j] < adjacent {
                        return Err(TopologyError::InvalidRouter(format!(
                            "isolation {} dB from channel {i} to {j} is below the adjacent floor {adjacent} dB",
                            m[i][j]
                        )));
                    }
                }
            }
            (m.clone(), IsolationBasis::Measured)
        }
        None => {
            let m = (0..n_channels)
                .map(|i| {
                    (0..n_channels)
                        .map(|j| match i.abs_diff(j) {
                            0 => params.insertion_loss_db[i],
                            1 => adjacent,
                            _ => nonadjacent,
                        })
                        .collect()
                })
                .collect();
            (m, IsolationBasis::PerWdm)
        }
    };

    let channels = grid
        .iter()
        .enumerate()
        .map(|(color, &wavelength_nm)| ChannelIndex {
            color,
            wavelength_nm,
        })
        .collect();
    let ports = (0..plan.n_users()).map(|n| plan.port_colors(n)).collect();
    Ok(RouterSpec {
        plan: plan.clone(),
        channels,
        ports,
        isolation_db,
        insertion_loss_db: params.insertion_loss_db.clone(),
        basis,
    })
}

impl RouterSpec {
    pub fn plan(&self) -> &WavelengthPlan {
        &self.plan
    }

    pub fn n_ports(&self) -> usize {
        self.ports.len()
    }

    pub fn channels(&self) -> &[ChannelIndex] {
        &self.channels
    }

    pub fn channel(&self, color: usize) -> Option<ChannelIndex> {
        self.channels.get(color).copied()
    }

    /// Channels multiplexed at a node's port.
    pub fn port_channels(&self, node: usize) -> Option<Vec<ChannelIndex>> {
        self.ports
            .get(node)
            .map(|set| set.iter().map(|&c| self.channels[c]).collect())
    }

    pub fn port_has(&self, node: usize, color: usize) -> bool {
        self.ports.get(node).is_some_and(|s| s.contains(&color))
    }

    /// Matrix entry for light entering on `input` and leaving on `output`, dB.
    pub fn isolation_db(&self, input: usize, output: usize) -> Option<f64> {
        self.isolation_db.get(input)?.get(output).copied()
    }

    pub fn isolation_matrix(&self) -> &[Vec<f64>] {
        &self.isolation_db
    }

    pub fn insertion_loss_db(&self, color: usize) -> Option<f64> {
        self.insertion_loss_db.get(color).copied()
    }

    pub fn basis(&self) -> IsolationBasis {
        self.basis
    }

    /// Suppression of `input`-channel light leaking into the `output` channel
    /// path across the whole router, dB.
    pub fn router_suppression_db(&self, input: usize, output: usize) -> Option<f64> {
        let entry = self.isolation_db(input, output)?;
        if input == output {
            return Some(entry);
        }
        Some(match self.basis {
            IsolationBasis::PerWdm => 2.0 * entry,
            IsolationBasis::Measured => entry,
        })
    }

    /// Whether two grid positions are neighbours.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a.abs_diff(b) == 1
    }
}

/// One element of a routed path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathElement {
    /// Access fibre between a node and the router.
    Fiber { node: usize },
    /// The multiplexer at a node's router port.
    Wdm { port: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub channel: ChannelIndex,
    pub path: Vec<PathElement>,
}

impl Route {
    pub fn wdm_hops(&self) -> usize {
        self.path
            .iter()
            .filter(|e| matches!(e, PathElement::Wdm { .. }))
            .count()
    }
}

/// Path from `src` to `dst`: source fibre, source-port multiplexer,
/// destination-port multiplexer, destination fibre.
pub fn route(spec: &RouterSpec, src: usize, dst: usize) -> Result<Route, TopologyError> {
    let n = spec.n_ports();
    for node in [src, dst] {
        if node >= n {
            return Err(TopologyError::UnknownNode(node));
        }
    }
    if src == dst {
        return Err(TopologyError::SelfRoute(src));
    }
    let color = spec
        .plan
        .color(src, dst)
        .ok_or_else(|| TopologyError::ImproperPlan(format!("no channel for {src}-{dst}")))?;
    Ok(Route {
        channel: spec.channels[color],
        path: vec![
            PathElement::Fiber { node: src },
            PathElement::Wdm { port: src },
            PathElement::Wdm { port: dst },
            PathElement::Fiber { node: dst },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: usize, b: usize) -> NodePair {
        NodePair::new(a, b).unwrap()
    }

    /// Independent check: compares every pair of edges directly.
    fn brute_force_proper(plan: &WavelengthPlan) -> bool {
        let edges: Vec<_> = plan.edges().collect();
        for (i, (p, c)) in edges.iter().enumerate() {
            for (q, d) in &edges[i + 1..] {
                let share = p.contains(q.lo()) || p.contains(q.hi());
                if share && c == d {
                    return false;
                }
            }
        }
        edges.len() == plan.n_users() * (plan.n_users() - 1) / 2
    }

    #[test]
    fn four_users_three_channels() {
        let plan = color_complete_graph(4).unwrap();
        assert_eq!(plan.n_colors(), 3);
        let ab = plan.color(0, 1).unwrap();
        let ac = plan.color(0, 2).unwrap();
        let ad = plan.color(0, 3).unwrap();
        assert!(ab != ac && ac != ad && ab != ad);
        assert!(validate_plan(&plan).is_ok());
    }

    #[test]
    fn two_users_single_channel() {
        let plan = color_complete_graph(2).unwrap();
        assert_eq!(plan.n_colors(), 1);
        assert_eq!(plan.edges().count(), 1);
    }

    #[test]
    fn five_users_five_channels() {
        let plan = color_complete_graph(5).unwrap();
        assert_eq!(plan.n_colors(), 5);
        assert!(brute_force_proper(&plan));
    }

    #[test]
    fn fewer_than_two_users_rejected() {
        assert!(matches!(
            color_complete_graph(1),
            Err(TopologyError::InvalidNetwork(_))
        ));
        assert!(color_complete_graph(0).is_err());
    }

    #[test]
    fn sweep_is_proper_and_deterministic() {
        for n in 2..=64 {
            let plan = color_complete_graph(n).unwrap();
            assert!(brute_force_proper(&plan), "n = {n}");
            assert!(validate_plan(&plan).is_ok(), "n = {n}");
            assert_eq!(plan.n_colors(), chromatic_index(n));
            assert_eq!(plan, color_complete_graph(n).unwrap());
            for node in 0..n {
                assert_eq!(plan.port_colors(node).len(), n - 1);
            }
        }
    }

    #[test]
    fn shared_colour_is_reported_at_vertex() {
        let plan = WavelengthPlan::from_assignment(
            4,
            [
                (pair(0, 1), 0),
                (pair(0, 2), 0),
                (pair(0, 3), 2),
                (pair(1, 2), 2),
                (pair(1, 3), 1),
                (pair(2, 3), 1),
            ],
        );
        let report = validate_plan(&plan);
        assert!(!report.is_ok());
        assert!(report.violations.iter().any(|v| matches!(
            v,
            PlanViolation::SharedColor { vertex: 0, color: 0, .. }
        )));
    }

    #[test]
    fn missing_pair_and_colour_count_reported() {
        let plan = WavelengthPlan::from_assignment(3, [(pair(0, 1), 0), (pair(1, 2), 1)]);
        let report = validate_plan(&plan);
        assert!(report.violations.contains(&PlanViolation::MissingPair(pair(0, 2))));
        assert!(report
            .violations
            .contains(&PlanViolation::ColorCount { expected: 3, found: 2 }));
    }

    fn table_ii() -> Vec<Vec<f64>> {
        // grid order 1510, 1530, 1550; rows are inputs
        vec![
            vec![1.76, 44.80, 51.01],
            vec![43.75, 2.27, 44.59],
            vec![43.35, 38.66, 2.45],
        ]
    }

    #[test]
    fn measured_matrix_is_used_verbatim() {
        let plan = color_complete_graph(4).unwrap();
        let mut params = RouterParams::with_defaults(
            vec![1510.0, 1530.0, 1550.0],
            vec![1.76, 2.27, 2.45],
        );
        params.measured_isolation_db = Some(table_ii());
        let spec = build_router_spec(&plan, &params).unwrap();
        assert_eq!(spec.isolation_db(2, 1), Some(38.66));
        assert_eq!(spec.router_suppression_db(2, 1), Some(38.66));
        assert_eq!(spec.basis(), IsolationBasis::Measured);
    }

    #[test]
    fn default_isolation_by_adjacency() {
        let plan = color_complete_graph(4).unwrap();
        let params =
            RouterParams::with_defaults(vec![1510.0, 1530.0, 1550.0], vec![1.76, 2.27, 2.45]);
        let spec = build_router_spec(&plan, &params).unwrap();
        let m = spec.isolation_matrix();
        assert_eq!(m[0][1], 30.0);
        assert_eq!(m[1][2], 30.0);
        assert_eq!(m[0][2], 45.0);
        assert_eq!(m[2][0], 45.0);
        assert_eq!(m[1][1], 2.27);
        assert_eq!(spec.router_suppression_db(0, 1), Some(60.0));
        for node in 0..4 {
            assert_eq!(spec.port_channels(node).unwrap().len(), 3);
        }
    }

    #[test]
    fn small_grid_rejected() {
        let plan = color_complete_graph(4).unwrap();
        let params = RouterParams::with_defaults(vec![1530.0, 1550.0], vec![2.0, 2.0]);
        assert_eq!(
            build_router_spec(&plan, &params),
            Err(TopologyError::InsufficientChannels {
                needed: 3,
                available: 2
            })
        );
    }

    #[test]
    fn bad_router_parameters_rejected() {
        let plan = color_complete_graph(4).unwrap();
        let grid = vec![1510.0, 1530.0, 1550.0];
        let mut p = RouterParams::with_defaults(grid.clone(), vec![1.0, 6.0, 1.0]);
        assert!(build_router_spec(&plan, &p).is_err());
        p = RouterParams::with_defaults(vec![1550.0, 1530.0, 1510.0], vec![1.0; 3]);
        assert!(build_router_spec(&plan, &p).is_err());
        p = RouterParams::with_defaults(grid.clone(), vec![1.0; 3]);
        p.adjacent_isolation_db = 0.0;
        assert!(build_router_spec(&plan, &p).is_err());
        p = RouterParams::with_defaults(grid, vec![1.76, 2.27, 2.45]);
        let mut m = table_ii();
        m[0][1] = 12.0;
        p.measured_isolation_db = Some(m);
        assert!(build_router_spec(&plan, &p).is_err());
    }

    #[test]
    fn alice_to_bob_crosses_two_multiplexers() {
        let plan = color_complete_graph(4).unwrap();
        let params =
            RouterParams::with_defaults(vec![1510.0, 1530.0, 1550.0], vec![1.0, 1.0, 1.0]);
        let spec = build_router_spec(&plan, &params).unwrap();
        let r = route(&spec, 0, 1).unwrap();
        assert_eq!(r.channel.color, plan.color(0, 1).unwrap());
        assert_eq!(
            r.path,
            vec![
                PathElement::Fiber { node: 0 },
                PathElement::Wdm { port: 0 },
                PathElement::Wdm { port: 1 },
                PathElement::Fiber { node: 1 },
            ]
        );
        assert_eq!(route(&spec, 0, 0), Err(TopologyError::SelfRoute(0)));
        assert_eq!(route(&spec, 0, 9), Err(TopologyError::UnknownNode(9)));
        for s in 0..4 {
            for d in (0..4).filter(|&d| d != s) {
                assert_eq!(route(&spec, s, d).unwrap().wdm_hops(), 2);
            }
        }
    }
}
