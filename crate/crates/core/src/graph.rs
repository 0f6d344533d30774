//! Static directed scale-free network and elite identification.
//!
//! An edge `u -> v` means content flows from `u` to `v`: `u` is in the
//! in-neighborhood of `v`, and `v` sees what `u` reshares.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = u32;

/// Rejected draws allowed per requested edge before generation gives up.
pub const REJECTION_BUDGET_PER_EDGE: u64 = 100;

/// Default power-law exponent for both in- and out-degree.
pub const DEFAULT_GAMMA: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_gamma")]
    pub gamma_in: f64,
    #[serde(default = "default_gamma")]
    pub gamma_out: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

impl GraphSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        GraphSpec {
            n,
            m,
            gamma_in: DEFAULT_GAMMA,
            gamma_out: DEFAULT_GAMMA,
            seed,
        }
    }

    /// Largest number of edges a simple digraph on `n` vertices can hold.
    pub fn max_edges(n: usize) -> u128 {
        let n = n as u128;
        n * n.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("graph needs n >= 2, got n={}", self.n)));
        }
        if self.n > Vertex::MAX as usize {
            return Err(Error::Config(format!("n={} exceeds the vertex id range", self.n)));
        }
        let cap = Self::max_edges(self.n);
        if self.m as u128 > cap {
            return Err(Error::Config(format!(
                "m={} exceeds the {cap} edges of a simple digraph on n={} vertices",
                self.m, self.n
            )));
        }
        for (name, g) in [("gamma_in", self.gamma_in), ("gamma_out", self.gamma_out)] {
            if !(g.is_finite() && g > 2.0) {
                return Err(Error::Config(format!("{name} must be finite and > 2, got {g}")));
            }
        }
        Ok(())
    }
}

/// Immutable simple digraph with dense vertex ids `0..n`.
///
/// Both out- and in-adjacency are stored in compressed form so that cascade
/// delivery (out-edges) and neighborhood queries (in-edges) are slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
    out_offsets: Vec<usize>,
    out_targets: Vec<Vertex>,
    in_offsets: Vec<usize>,
    in_sources: Vec<Vertex>,
}

impl DirectedGraph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints. Adjacency lists keep edge-list order.
    pub fn from_edges(n: usize, edges: Vec<(Vertex, Vertex)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in &edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::VertexOutOfRange { vertex: w as usize, n });
                }
            }
            if u == v {
                return Err(Error::Config(format!("self-loop on vertex {u}")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::Config(format!("duplicate edge {u} -> {v}")));
            }
        }
        Ok(Self::from_edges_unchecked(n, edges))
    }

    fn from_edges_unchecked(n: usize, edges: Vec<(Vertex, Vertex)>) -> Self {
        let (out_offsets, out_targets) = compress(n, edges.iter().map(|&(u, v)| (u, v)));
        let (in_offsets, in_sources) = compress(n, edges.iter().map(|&(u, v)| (v, u)));
        DirectedGraph {
            n,
            edges,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn out_neighbors(&self, v: Vertex) -> &[Vertex] {
        let v = v as usize;
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    /// In-neighborhood of `v`: every `u` with an edge `u -> v`.
    pub fn in_neighbors(&self, v: Vertex) -> Result<&[Vertex]> {
        let i = v as usize;
        if i >= self.n {
            return Err(Error::VertexOutOfRange { vertex: i, n: self.n });
        }
        Ok(&self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]])
    }

    pub fn in_degree(&self, v: Vertex) -> usize {
        let v = v as usize;
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    pub fn out_degree(&self, v: Vertex) -> usize {
        let v = v as usize;
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        self.in_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.out_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Writes the edge-list text format: `n m` header, then `source target`
    /// per line.
    pub fn write_edge_list<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.n, self.edges.len())?;
        let mut line = String::with_capacity(24);
        for &(u, v) in &self.edges {
            line.clear();
            let _ = writeln!(line, "{u} {v}");
            out.write_all(line.as_bytes())?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_edge_list(file).map_err(|e| Error::io(path, e))
    }

    pub fn read_edge_list<R: Read>(input: R, origin: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let reader = BufReader::new(input);
        let mut lines = reader.lines().enumerate();
        let (n, m) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(parse_err(1, "missing `n m` header".into()));
            };
            let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (n, m) = parse_pair::<usize>(&line).map_err(|msg| parse_err(i + 1, msg))?;
            break (n, m);
        };
        let mut edges = Vec::with_capacity(m);
        for (i, line) in lines {
            let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let pair = parse_pair::<Vertex>(&line).map_err(|msg| parse_err(i + 1, msg))?;
            edges.push(pair);
        }
        if edges.len() != m {
            return Err(parse_err(
                1,
                format!("header declares {m} edges, found {}", edges.len()),
            ));
        }
        Self::from_edges(n, edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_edge_list(file, &path.display().to_string())
    }
}

fn parse_pair<T: std::str::FromStr>(line: &str) -> std::result::Result<(T, T), String> {
    let mut it = line.split_ascii_whitespace();
    let mut next = || {
        it.next()
            .ok_or_else(|| format!("expected two integers, got {line:?}"))?
            .parse::<T>()
            .map_err(|_| format!("expected two integers, got {line:?}"))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(format!("expected two integers, got {line:?}"));
    }
    Ok((a, b))
}

fn compress(n: usize, pairs: impl Iterator<Item = (Vertex, Vertex)> + Clone) -> (Vec<usize>, Vec<Vertex>) {
    let mut offsets = vec![0usize; n + 1];
    for (a, _) in pairs.clone() {
        offsets[a as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut items = vec![0; offsets[n]];
    for (a, b) in pairs {
        let slot = &mut cursor[a as usize];
        items[*slot] = b;
        *slot += 1;
    }
    (offsets, items)
}

/// Static-model generator.
///
/// Vertex `i` (1-indexed) gets source weight `i^-1/(gamma_out-1)`; target
/// weights `j^-1/(gamma_in-1)` are dealt out through a seeded permutation so
/// that hub in- and out-degree are uncorrelated. Endpoints are drawn
/// independently in proportion to the weights; self-loops and duplicates
/// are rejected until `m` edges exist or the rejection budget
/// (`REJECTION_BUDGET_PER_EDGE * m`) runs out.
pub fn generate_scale_free(spec: &GraphSpec) -> Result<DirectedGraph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let source_weights = power_weights(n, spec.gamma_out);
    let mut target_weights = power_weights(n, spec.gamma_in);
    target_weights.shuffle(&mut rng);

    let sources = WeightedIndex::new(&source_weights).map_err(|e| Error::Generation(format!("source weights: {e}")))?;
    let targets = WeightedIndex::new(&target_weights).map_err(|e| Error::Generation(format!("target weights: {e}")))?;

    let budget = REJECTION_BUDGET_PER_EDGE.saturating_mul(spec.m as u64);
    let mut rejections = 0u64;
    let mut present: HashSet<u64> = HashSet::with_capacity(spec.m);
    let mut edges = Vec::with_capacity(spec.m);
    while edges.len() < spec.m {
        let u = sources.sample(&mut rng) as u64;
        let v = targets.sample(&mut rng) as u64;
        if u == v || !present.insert(u * n as u64 + v) {
            rejections += 1;
            if rejections > budget {
                return Err(Error::Generation(format!(
                    "rejection budget of {budget} draws exhausted after placing {} of {} edges",
                    edges.len(),
                    spec.m
                )));
            }
            continue;
        }
        edges.push((u as Vertex, v as Vertex));
    }
    Ok(DirectedGraph::from_edges_unchecked(n, edges))
}

fn power_weights(n: usize, gamma: f64) -> Vec<f64> {
    let mu = 1.0 / (gamma - 1.0);
    (1..=n).map(|i| (i as f64).powf(-mu)).collect()
}

/// Nearest-rank 90th percentile: the value at rank `ceil(0.9 n)` of the
/// ascending-sorted input.
pub fn p90_nearest_rank(values: &[usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = (9 * sorted.len()).div_ceil(10);
    Some(sorted[rank - 1])
}

/// Indices whose degree is strictly above the nearest-rank 90th percentile.
pub fn elites_from_degrees(degrees: &[usize]) -> Option<Vec<Vertex>> {
    let q90 = p90_nearest_rank(degrees)?;
    Some(
        degrees
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d > q90)
            .map(|(v, _)| v as Vertex)
            .collect(),
    )
}

/// Elite vertices: in-degree strictly above the nearest-rank 90th percentile
/// of the in-degree multiset. Returned in ascending vertex order.
pub fn elite_set(g: &DirectedGraph) -> Result<Vec<Vertex>> {
    elites_from_degrees(&g.in_degrees()).ok_or_else(|| Error::Empty("elite set of an empty graph".into()))
}

/// Least-squares slope of log density against log degree over the upper
/// degree decade `[k_max / 10, k_max]`.
///
/// Degrees in the decade are grouped into `bins` logarithmic bins; each
/// non-empty bin contributes its count divided by its integer width, placed
/// at the bin's geometric centre. Returns `None` when fewer than three bins
/// are populated.
pub fn upper_decade_slope(degrees: &[usize], bins: usize) -> Option<f64> {
    let k_max = *degrees.iter().max()? as f64;
    let lo = k_max / 10.0;
    if lo < 1.0 || bins < 3 {
        return None;
    }
    let log_lo = lo.ln();
    let step = (k_max.ln() - log_lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &k in degrees {
        let k = k as f64;
        if k < lo {
            continue;
        }
        let b = (((k.ln() - log_lo) / step) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut points = Vec::new();
    for (b, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let left = (log_lo + step * b as f64).exp();
        let right = (log_lo + step * (b + 1) as f64).exp();
        let width = (right.floor() - left.ceil() + 1.0).max(1.0);
        points.push(((left * right).sqrt().ln(), (c as f64 / width).ln()));
    }
    if points.len() < 3 {
        return None;
    }
    Some(least_squares_slope(&points))
}

/// Accepted range for the upper-decade slope of a generated graph with
/// exponents near 2.5, and the bin count used to measure it.
pub const TAIL_SLOPE_RANGE: (f64, f64) = (-3.2, -1.8);
pub const TAIL_SLOPE_BINS: usize = 10;

/// Upper-decade slopes of the in- and out-degree distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSlopes {
    pub in_degree: Option<f64>,
    pub out_degree: Option<f64>,
}

impl TailSlopes {
    pub fn of(g: &DirectedGraph) -> Self {
        TailSlopes {
            in_degree: upper_decade_slope(&g.in_degrees(), TAIL_SLOPE_BINS),
            out_degree: upper_decade_slope(&g.out_degrees(), TAIL_SLOPE_BINS),
        }
    }

    /// Both slopes exist and lie in [`TAIL_SLOPE_RANGE`].
    pub fn within_range(&self) -> bool {
        let (lo, hi) = TAIL_SLOPE_RANGE;
        [self.in_degree, self.out_degree]
            .iter()
            .all(|s| s.is_some_and(|s| (lo..=hi).contains(&s)))
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infeasible_edge_count_is_config_error() {
        let err = generate_scale_free(&GraphSpec::new(10, 100, 1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert_eq!(GraphSpec::max_edges(10), 90);
        assert!(generate_scale_free(&GraphSpec::new(10, 90, 1)).is_ok());
    }

    #[test]
    fn bad_exponent_rejected() {
        let mut spec = GraphSpec::new(10, 10, 1);
        spec.gamma_in = 2.0;
        assert!(matches!(generate_scale_free(&spec), Err(Error::Config(_))));
        spec.gamma_in = f64::NAN;
        assert!(generate_scale_free(&spec).is_err());
        assert!(GraphSpec::new(1, 0, 0).validate().is_err());
    }

    #[test]
    fn two_vertex_complete_digraph() {
        let g = generate_scale_free(&GraphSpec::new(2, 2, 7)).unwrap();
        let mut e = g.edges().to_vec();
        e.sort();
        assert_eq!(e, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn in_neighbors_by_definition() {
        let g = DirectedGraph::from_edges(3, vec![(0, 2), (1, 2)]).unwrap();
        let mut n2 = g.in_neighbors(2).unwrap().to_vec();
        n2.sort();
        assert_eq!(n2, vec![0, 1]);
        assert!(g.in_neighbors(0).unwrap().is_empty());
        assert!(matches!(
            g.in_neighbors(3),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
    }

    #[test]
    fn from_edges_rejects_non_simple() {
        assert!(DirectedGraph::from_edges(3, vec![(1, 1)]).is_err());
        assert!(DirectedGraph::from_edges(3, vec![(0, 1), (0, 1)]).is_err());
        assert!(DirectedGraph::from_edges(3, vec![(0, 5)]).is_err());
    }

    #[test]
    fn elite_nearest_rank_example() {
        let degrees = [1, 1, 1, 1, 1, 1, 1, 1, 1, 10];
        assert_eq!(p90_nearest_rank(&degrees), Some(1));
        assert_eq!(elites_from_degrees(&degrees).unwrap(), vec![9]);
        assert_eq!(p90_nearest_rank(&[]), None);
    }

    #[test]
    fn elite_set_on_hub_graph() {
        // vertex 9 is fed by every other vertex; the rest sit on a cycle
        let mut edges: Vec<_> = (0..9u32).map(|v| ((v + 1) % 9, v)).collect();
        edges.extend((0..9u32).map(|u| (u, 9)));
        let g = DirectedGraph::from_edges(10, edges).unwrap();
        assert_eq!(elite_set(&g).unwrap(), vec![9]);
    }

    #[test]
    fn elite_empty_on_ties() {
        // directed cycle: every in-degree is 1
        let edges = (0..10u32).map(|v| (v, (v + 1) % 10)).collect();
        let g = DirectedGraph::from_edges(10, edges).unwrap();
        assert!(elite_set(&g).unwrap().is_empty());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = generate_scale_free(&GraphSpec::new(50, 300, 3)).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("50 300\n"));
        assert!(!text.contains('\r'));
        let back = DirectedGraph::read_edge_list(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edge_list_header_mismatch() {
        let err = DirectedGraph::read_edge_list("3 2\n0 1\n".as_bytes(), "x").unwrap_err();
        assert!(err.to_string().contains("declares 2 edges"), "{err}");
        assert!(DirectedGraph::read_edge_list("3 1\n0 q\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        // counts proportional to k^-2.5 on k in 100..=1000
        let mut degrees = Vec::new();
        for k in 100usize..=1000 {
            let c = (1e9 * (k as f64).powf(-2.5)).round() as usize;
            degrees.extend(std::iter::repeat_n(k, c));
        }
        let s = upper_decade_slope(&degrees, 10).unwrap();
        assert!((s + 2.5).abs() < 0.1, "slope {s}");
    }
}
