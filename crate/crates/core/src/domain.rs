//! Unit-cube geometry, point containers and the seeded random stream.
//!
//! Point sets are stored flat (row-major, `n * dim` coordinates) so the
//! energy loops stay cache friendly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, KqError, Result};

/// Points closer than this are treated as duplicates when sampling.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// The integration region `[0,1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainBox {
    dim: usize,
}

impl DomainBox {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Euclidean diagonal of the cube, `sqrt(d)`.
    pub fn diameter(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|&c| (0.0..=1.0).contains(&c))
    }
}

/// An ordered list of points of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    dim: usize,
    coords: Vec<f64>,
}

impl NodeSet {
    /// Builds a node set from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be at least 1");
        }
        if coords.len() % dim != 0 {
            return invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            ));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return invalid(format!("non-finite coordinate {bad}"));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return invalid(format!("point {i} has dimension {}, expected {dim}", p.len()));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "pushed point has the wrong dimension");
        self.coords.extend_from_slice(p);
    }

    /// Returns a copy with the points reordered as `perm[k]`-th point first.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &k in perm {
            coords.extend_from_slice(self.point(k));
        }
        Self { dim: self.dim, coords }
    }

    /// Checks the node-set invariants against `domain`: containment and
    /// pairwise distinctness.
    pub fn validate(&self, domain: &DomainBox) -> Result<()> {
        if self.dim != domain.dim() {
            return invalid(format!(
                "node dimension {} does not match domain dimension {}",
                self.dim,
                domain.dim()
            ));
        }
        for (i, p) in self.iter().enumerate() {
            if !domain.contains(p) {
                return invalid(format!("point {i} lies outside the unit cube"));
            }
        }
        self.ensure_distinct()
    }

    pub fn ensure_distinct(&self) -> Result<()> {
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if dist2(self.point(i), self.point(j)) == 0.0 {
                    return Err(KqError::Singularity { i, j });
                }
            }
        }
        Ok(())
    }
}

/// Nodes paired with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: NodeSet,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: NodeSet, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return invalid(format!("{} weights for {} nodes", weights.len(), nodes.len()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return invalid("weights must be finite");
        }
        Ok(Self { nodes, weights })
    }

    /// The equal-weight rule `w_i = 1/N`.
    pub fn equal_weights(nodes: NodeSet) -> Self {
        let n = nodes.len();
        let w = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self {
            nodes,
            weights: vec![w; n],
        }
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule to an integrand.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Deterministic random stream.
///
/// Backed by ChaCha8 (`rand_chacha` 0.3) seeded with `seed_from_u64`; floats
/// are drawn with `rand` 0.8's `Standard` distribution (53 random mantissa
/// bits in `[0,1)`). Both crates guarantee value stability of these streams
/// across platforms within their major versions.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream for parallel work, derived from this seed.
    pub fn split(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Self { seed: self.seed, inner }
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// `n` i.i.d. uniform points in the cube.
pub fn sample_uniform(domain: &DomainBox, n: usize, rng: &mut SeededRng) -> Result<NodeSet> {
    sample_box(domain.dim(), 0.0, 1.0, n, rng)
}

/// `n` i.i.d. uniform points in `[lo, hi)^dim`. A point within
/// [`DUPLICATE_TOL`] of an earlier one is redrawn.
pub fn sample_box(dim: usize, lo: f64, hi: f64, n: usize, rng: &mut SeededRng) -> Result<NodeSet> {
    if n == 0 {
        return invalid("cannot sample zero points");
    }
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(lo < hi) {
        return invalid(format!("empty sampling box [{lo}, {hi})"));
    }
    let mut nodes = NodeSet {
        dim,
        coords: Vec::with_capacity(n * dim),
    };
    let mut p = vec![0.0; dim];
    while nodes.len() < n {
        for c in p.iter_mut() {
            *c = rng.uniform_in(lo, hi);
        }
        let dup = nodes.iter().any(|q| dist2(q, &p) <= DUPLICATE_TOL * DUPLICATE_TOL);
        if !dup {
            nodes.push(&p);
        }
    }
    Ok(nodes)
}

pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist2(x, y).sqrt()
}

/// Smallest Euclidean distance between two distinct entries of `nodes`.
pub fn min_pairwise_distance(nodes: &NodeSet) -> Result<f64> {
    if nodes.len() < 2 {
        return invalid("minimum distance needs at least two points");
    }
    let mut best = f64::INFINITY;
    for i in 0..nodes.len() {
        let xi = nodes.point(i);
        for j in i + 1..nodes.len() {
            best = best.min(dist2(xi, nodes.point(j)));
        }
    }
    Ok(best.sqrt())
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x1,...,xd` header then one point per row.
pub fn write_nodes_csv<W: Write>(nodes: &NodeSet, mut out: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=nodes.dim()).map(|k| format!("x{k}")).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for p in nodes.iter() {
        line.clear();
        for (k, c) in p.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "{}", fmt_f64(*c));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_nodes_csv<R: BufRead>(input: R) -> Result<NodeSet> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| KqError::Parse(e.to_string()))?,
        None => return Err(KqError::Parse("empty node file".into())),
    };
    let dim = header.split(',').count();
    for (k, name) in header.split(',').enumerate() {
        if name.trim() != format!("x{}", k + 1) {
            return Err(KqError::Parse(format!("unexpected header column '{name}'")));
        }
    }
    let mut coords = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| KqError::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != dim {
            return Err(KqError::Parse(format!(
                "row {} has {} columns, expected {dim}",
                row + 1,
                vals.len()
            )));
        }
        for v in vals {
            coords.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| KqError::Parse(format!("row {}: {e}", row + 1)))?,
            );
        }
    }
    NodeSet::from_flat(dim, coords)
}

/// Writes a `w` header then one weight per row.
pub fn write_weights_csv<W: Write>(weights: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "w")?;
    for w in weights {
        writeln!(out, "{}", fmt_f64(*w))?;
    }
    Ok(())
}

pub fn read_weights_csv<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (row, line) in input.lines().enumerate() {
        let line = line.map_err(|e| KqError::Parse(e.to_string()))?;
        let line = line.trim();
        if row == 0 {
            if line != "w" {
                return Err(KqError::Parse(format!("unexpected weights header '{line}'")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse::<f64>()
                .map_err(|e| KqError::Parse(format!("row {row}: {e}")))?,
        );
    }
    Ok(out)
}
