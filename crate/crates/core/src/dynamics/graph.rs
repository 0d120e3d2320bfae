use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// An undirected edge with its transposition rate `α(e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub rate: f64,
}

/// Sites of a triangular-lattice parallelogram in axial coordinates `(i, j)`,
/// site index `j * width + i`, embedded in the plane at
/// `x = i − j/2`, `y = j·√3/2`. Adjacent sites differ by one of
/// `(±1, 0)`, `(0, ±1)`, `±(1, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeGeometry {
    pub width: usize,
    pub height: usize,
    /// Interaction radius in lattice spacings.
    pub radius: f64,
    /// Every nonzero offset within `radius`, both orientations.
    pub offsets: Vec<(i32, i32)>,
}

impl RangeGeometry {
    pub fn new(width: usize, height: usize, radius: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("range geometry needs positive width and height"));
        }
        if !(radius >= 1.0 && radius.is_finite()) {
            return Err(invalid(format!("interaction radius {radius} must be at least 1")));
        }
        Ok(Self {
            width,
            height,
            radius,
            offsets: disk_offsets(radius),
        })
    }

    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn coords(&self, site: usize) -> (i32, i32) {
        ((site % self.width) as i32, (site / self.width) as i32)
    }

    #[inline]
    pub fn site(&self, i: i32, j: i32) -> Option<usize> {
        (i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height)
            .then(|| j as usize * self.width + i as usize)
    }

    #[inline]
    pub fn shifted(&self, site: usize, (di, dj): (i32, i32)) -> Option<usize> {
        let (i, j) = self.coords(site);
        self.site(i + di, j + dj)
    }
}

/// Squared Euclidean length of an axial offset.
#[inline]
pub fn axial_norm2(di: i32, dj: i32) -> i64 {
    let (a, b) = (di as i64, dj as i64);
    a * a - a * b + b * b
}

/// Plane position of an axial site.
pub fn axial_position(i: i32, j: i32) -> (f64, f64) {
    (i as f64 - j as f64 / 2.0, j as f64 * 3f64.sqrt() / 2.0)
}

fn disk_offsets(radius: f64) -> Vec<(i32, i32)> {
    let r2 = radius * radius + 1e-9;
    let reach = (2.0 * radius).ceil() as i32 + 1;
    let mut out = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            if (di, dj) != (0, 0) && (axial_norm2(di, dj) as f64) <= r2 {
                out.push((di, dj));
            }
        }
    }
    out
}

/// How the edges of a graph are stored. Dense families keep an implicit
/// description so that sampling and rate queries stay cheap.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeSet {
    Explicit(Vec<Edge>),
    /// Every pair, all at the same rate.
    Complete { rate: f64 },
    /// Every pair of parallelogram sites within the geometry's radius.
    Range { geometry: Arc<RangeGeometry>, rate: f64 },
}

/// A vertex set with rate-weighted edges: the pair `(G, α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsGraph {
    vertices: usize,
    edges: EdgeSet,
    family: String,
    params: BTreeMap<String, String>,
}

impl DynamicsGraph {
    /// A graph from an explicit edge list.
    pub fn from_edges(vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertices == 0 {
            return Err(invalid("graph needs at least one vertex"));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u == e.v {
                return Err(invalid(format!("self-loop at vertex {}", e.u)));
            }
            if e.u >= vertices || e.v >= vertices {
                return Err(invalid(format!("edge ({}, {}) outside {vertices} vertices", e.u, e.v)));
            }
            if !(e.rate > 0.0 && e.rate.is_finite()) {
                return Err(invalid(format!("edge ({}, {}) has rate {}", e.u, e.v, e.rate)));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(invalid(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        Ok(Self {
            vertices,
            edges: EdgeSet::Explicit(edges),
            family: "custom".into(),
            params: BTreeMap::new(),
        })
    }

    fn with_meta(mut self, family: &str, params: &[(&str, String)]) -> Self {
        self.family = family.into();
        self.params = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        self
    }

    /// `K_n` with every edge at rate `1/n`.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("complete graph needs n >= 2"));
        }
        Ok(Self {
            vertices: n,
            edges: EdgeSet::Complete { rate: 1.0 / n as f64 },
            family: String::new(),
            params: BTreeMap::new(),
        }
        .with_meta("complete", &[("n", n.to_string())]))
    }

    /// The path `1 − 2 − ⋯ − n` at rate 1/2.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("path graph needs n >= 2"));
        }
        let edges = (0..n - 1).map(|u| Edge { u, v: u + 1, rate: 0.5 }).collect();
        Ok(Self::from_edges(n, edges)?.with_meta("path", &[("n", n.to_string())]))
    }

    /// The `side × side` nearest-neighbour box at rate 1/4; vertex `y·side + x`.
    pub fn grid2d(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(invalid("grid needs side >= 2"));
        }
        let mut edges = Vec::with_capacity(2 * side * (side - 1));
        for y in 0..side {
            for x in 0..side {
                let u = y * side + x;
                if x + 1 < side {
                    edges.push(Edge { u, v: u + 1, rate: 0.25 });
                }
                if y + 1 < side {
                    edges.push(Edge { u, v: u + side, rate: 0.25 });
                }
            }
        }
        Ok(Self::from_edges(side * side, edges)?.with_meta("grid2d", &[("side", side.to_string())]))
    }

    /// `m` disjoint edges `{2k, 2k+1}` at rate 1.
    pub fn isolated_edges(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("isolated edges need m >= 1"));
        }
        let edges = (0..m).map(|k| Edge { u: 2 * k, v: 2 * k + 1, rate: 1.0 }).collect();
        Ok(Self::from_edges(2 * m, edges)?.with_meta("isolated_edges", &[("edges", m.to_string())]))
    }

    /// Medium-range dynamics on the `side × side` triangular rhombus: every
    /// pair within Euclidean distance `side^alpha` at rate `side^(−2 alpha)`.
    pub fn medium_range(side: usize, alpha: f64) -> Result<Self> {
        if side < 2 {
            return Err(invalid("medium-range patch needs side >= 2"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("medium-range exponent {alpha} must lie in (0, 1)")));
        }
        let s = side as f64;
        let geometry = RangeGeometry::new(side, side, s.powf(alpha))?;
        Ok(Self::range(geometry, s.powf(-2.0 * alpha))?.with_meta(
            "medium_range",
            &[("side", side.to_string()), ("alpha", alpha.to_string())],
        ))
    }

    /// All pairs of a parallelogram within the geometry's radius, at `rate`.
    pub fn range(geometry: RangeGeometry, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!("range rate {rate} must be positive")));
        }
        Ok(Self {
            vertices: geometry.sites(),
            edges: EdgeSet::Range {
                geometry: Arc::new(geometry),
                rate,
            },
            family: "range".into(),
            params: BTreeMap::new(),
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    pub fn edge_set(&self) -> &EdgeSet {
        &self.edges
    }

    /// The common rate if this is a complete graph.
    pub fn complete_rate(&self) -> Option<f64> {
        match self.edges {
            EdgeSet::Complete { rate } => Some(rate),
            _ => None,
        }
    }

    /// Every edge once, in a fixed order.
    pub fn edges(&self) -> Box<dyn Iterator<Item = Edge> + '_> {
        match &self.edges {
            EdgeSet::Explicit(list) => Box::new(list.iter().copied()),
            &EdgeSet::Complete { rate } => {
                let n = self.vertices;
                Box::new((0..n).flat_map(move |u| (u + 1..n).map(move |v| Edge { u, v, rate })))
            }
            EdgeSet::Range { geometry, rate } => {
                let rate = *rate;
                let forward: Vec<(i32, i32)> = geometry
                    .offsets
                    .iter()
                    .copied()
                    .filter(|&(di, dj)| dj > 0 || (dj == 0 && di > 0))
                    .collect();
                Box::new((0..geometry.sites()).flat_map(move |u| {
                    let targets: Vec<usize> =
                        forward.iter().filter_map(|&d| geometry.shifted(u, d)).collect();
                    targets.into_iter().map(move |v| Edge { u, v, rate })
                }))
            }
        }
    }

    pub fn edge_count(&self) -> usize {
        match &self.edges {
            EdgeSet::Explicit(list) => list.len(),
            EdgeSet::Complete { .. } => self.vertices * (self.vertices - 1) / 2,
            EdgeSet::Range { .. } => self.edges().count(),
        }
    }

    /// `R = Σ_e α(e)`, the rate of the superposed clock.
    pub fn total_rate(&self) -> f64 {
        match &self.edges {
            EdgeSet::Complete { rate } => rate * (self.vertices * (self.vertices - 1) / 2) as f64,
            _ => self.edges().map(|e| e.rate).sum(),
        }
    }

    /// `Σ_{e∋v} α(e)` for every vertex.
    pub fn vertex_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.vertices];
        match &self.edges {
            EdgeSet::Complete { rate } => out.fill(rate * (self.vertices - 1) as f64),
            EdgeSet::Range { geometry, rate } => {
                for (v, r) in out.iter_mut().enumerate() {
                    let deg = geometry.offsets.iter().filter(|&&d| geometry.shifted(v, d).is_some()).count();
                    *r = deg as f64 * rate;
                }
            }
            EdgeSet::Explicit(list) => {
                for e in list {
                    out[e.u] += e.rate;
                    out[e.v] += e.rate;
                }
            }
        }
        out
    }

    /// `max_v Σ_{e∋v} α(e)`.
    pub fn max_vertex_rate(&self) -> f64 {
        self.vertex_rates().into_iter().fold(0.0, f64::max)
    }

    /// The rate assumption `α ≤ 1/maxdeg`, generalized to per-vertex total rate at most 1.
    pub fn assumption_ok(&self) -> bool {
        self.max_vertex_rate() <= 1.0 + 1e-12
    }

    /// Edge list as CSV `u,v,rate`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "u,v,rate")?;
        for e in self.edges() {
            writeln!(w, "{},{},{}", e.u, e.v, e.rate)?;
        }
        Ok(())
    }
}

/// Named graph families, as they appear in configuration files, e.g.
/// `{"family": "complete", "n": 8}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { n: usize },
    Path { n: usize },
    Grid2d { side: usize },
    IsolatedEdges { edges: usize },
    MediumRange { side: usize, alpha: f64 },
}

impl GraphSpec {
    pub fn build(&self) -> Result<DynamicsGraph> {
        match *self {
            Self::Complete { n } => DynamicsGraph::complete(n),
            Self::Path { n } => DynamicsGraph::path(n),
            Self::Grid2d { side } => DynamicsGraph::grid2d(side),
            Self::IsolatedEdges { edges } => DynamicsGraph::isolated_edges(edges),
            Self::MediumRange { side, alpha } => DynamicsGraph::medium_range(side, alpha),
        }
    }
}

/// Graph family used by sweeps, sized to the function's bit count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    Complete,
    Path,
    Grid2d,
    IsolatedEdges,
}

impl GraphFamily {
    /// The member of the family on exactly `n` vertices.
    pub fn for_width(self, n: usize) -> Result<DynamicsGraph> {
        match self {
            Self::Complete => DynamicsGraph::complete(n),
            Self::Path => DynamicsGraph::path(n),
            Self::Grid2d => {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    return Err(invalid(format!("grid2d needs a square vertex count, got {n}")));
                }
                DynamicsGraph::grid2d(side)
            }
            Self::IsolatedEdges => {
                if n % 2 != 0 {
                    return Err(invalid(format!("isolated edges need an even vertex count, got {n}")));
                }
                DynamicsGraph::isolated_edges(n / 2)
            }
        }
    }
}

/// Build a graph from a family name and a JSON parameter object.
pub fn graph_build(name: &str, params: &serde_json::Value) -> Result<DynamicsGraph> {
    const FAMILIES: [&str; 5] = ["complete", "path", "grid2d", "isolated_edges", "medium_range"];
    if !FAMILIES.contains(&name) {
        return Err(Error::UnknownFamily {
            kind: "graph",
            name: name.to_string(),
        });
    }
    let mut obj = match params {
        serde_json::Value::Object(m) => m.clone(),
        serde_json::Value::Null => serde_json::Map::new(),
        other => return Err(invalid(format!("parameters must be an object, got {other}"))),
    };
    obj.insert("family".into(), name.into());
    let spec: GraphSpec =
        serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| invalid(format!("{name}: {e}")))?;
    spec.build()
}
