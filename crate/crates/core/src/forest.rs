//! Structural queries on oriented forests and finite-volume component properties.

use thiserror::Error;

use crate::graph::{Graph, VertexId};
use crate::wilson::{OrientedForest, PartialForest};

/// Dense component labels `0..c`, numbered by smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    label: Vec<usize>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    members: Vec<VertexId>,
}

impl ComponentLabeling {
    pub fn label(&self, v: VertexId) -> usize {
        self.label[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.label
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, c: usize) -> usize {
        self.sizes[c]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Members of component `c` in increasing id order.
    pub fn members(&self, c: usize) -> &[VertexId] {
        &self.members[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn same(&self, a: VertexId, b: VertexId) -> bool {
        self.label[a] == self.label[b]
    }

    /// Pairwise distinct components.
    pub fn all_distinct(&self, u: &[VertexId]) -> bool {
        u.iter()
            .enumerate()
            .all(|(i, &a)| u[i + 1..].iter().all(|&b| self.label[a] != self.label[b]))
    }
}

/// Component labels by root finding with memoized roots.
pub fn components(f: &OrientedForest) -> ComponentLabeling {
    let n = f.vertex_count();
    let mut root = vec![usize::MAX; n];
    let mut chain = Vec::new();
    for v in 0..n {
        let mut w = v;
        while root[w] == usize::MAX {
            chain.push(w);
            match f.parent_vertex(w) {
                Some(p) => w = p,
                None => {
                    root[w] = w;
                    break;
                }
            }
        }
        let r = root[w];
        for x in chain.drain(..) {
            root[x] = r;
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut root_label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for v in 0..n {
        let r = root[v];
        if root_label[r] == usize::MAX {
            root_label[r] = sizes.len();
            sizes.push(0);
        }
        label[v] = root_label[r];
        sizes[label[v]] += 1;
    }
    let mut offsets = Vec::with_capacity(sizes.len() + 1);
    offsets.push(0);
    for &s in &sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let mut fill = offsets.clone();
    let mut members = vec![0; n];
    for v in 0..n {
        members[fill[label[v]]] = v;
        fill[label[v]] += 1;
    }
    ComponentLabeling {
        label,
        sizes,
        offsets,
        members,
    }
}

/// `v`, its parent, and so on up to the root.
pub fn future(f: &OrientedForest, v: VertexId) -> Vec<VertexId> {
    let mut out = vec![v];
    let mut w = v;
    while let Some(p) = f.parent_vertex(w) {
        out.push(p);
        w = p;
    }
    out
}

/// Children lists and past sizes for every vertex at once.
#[derive(Clone, Debug)]
pub struct Pasts {
    offsets: Vec<usize>,
    children: Vec<VertexId>,
    size: Vec<usize>,
}

impl Pasts {
    pub fn new(f: &OrientedForest) -> Self {
        let n = f.vertex_count();
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            if let Some(p) = f.parent_vertex(v) {
                offsets[p + 1] += 1;
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut children = vec![0; offsets[n]];
        for v in 0..n {
            if let Some(p) = f.parent_vertex(v) {
                children[fill[p]] = v;
                fill[p] += 1;
            }
        }
        // Roots first, then breadth-first; reversed, every vertex follows its children.
        let mut order: Vec<VertexId> = (0..n).filter(|&v| f.is_root(v)).collect();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            order.extend_from_slice(&children[offsets[v]..offsets[v + 1]]);
        }
        let mut size = vec![1usize; n];
        for &v in order.iter().rev() {
            if let Some(p) = f.parent_vertex(v) {
                size[p] += size[v];
            }
        }
        Pasts {
            offsets,
            children,
            size,
        }
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn size(&self, v: VertexId) -> usize {
        self.size[v]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.size
    }

    /// The past of `v`, including `v`.
    pub fn past(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = vec![v];
        let mut head = 0;
        while head < out.len() {
            let w = out[head];
            head += 1;
            out.extend_from_slice(self.children(w));
        }
        out
    }

    /// Fraction of vertices whose past has more than `s` vertices.
    pub fn tail_fraction(&self, s: usize) -> f64 {
        if self.size.is_empty() {
            return 0.0;
        }
        self.size.iter().filter(|&&k| k > s).count() as f64 / self.size.len() as f64
    }
}

pub fn past(f: &OrientedForest, v: VertexId) -> Vec<VertexId> {
    Pasts::new(f).past(v)
}

/// The union of the futures of all vertices outside the graph-distance ball
/// `B(u1, radius)`, with the forest structure restricted to it.
///
/// The sink of `g`, if any, is never in a ball, so it always belongs.
pub fn f_sub_r(f: &OrientedForest, g: &Graph, u1: VertexId, radius: usize) -> PartialForest {
    let ball = g.ball_mask(u1, radius);
    let n = f.vertex_count();
    let mut support = vec![false; n];
    for (v, &inside) in ball.iter().enumerate() {
        if inside {
            continue;
        }
        let mut w = v;
        while !support[w] {
            support[w] = true;
            match f.parent_vertex(w) {
                Some(p) => w = p,
                None => break,
            }
        }
    }
    PartialForest::restrict(f, support).expect("unions of futures are closed under parents")
}

/// Whether the vertices of `u` lie in pairwise distinct components of `f`.
pub fn distinct_components(f: &OrientedForest, u: &[VertexId]) -> bool {
    let roots: Vec<VertexId> = u.iter().map(|&v| f.root_of(v)).collect();
    roots
        .iter()
        .enumerate()
        .all(|(i, a)| !roots[i + 1..].contains(a))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    Full,
    /// The central sub-box whose side is `fraction` of the labeled extent.
    InnerBox { fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CustomPredicate {
    AlwaysTrue,
    AlwaysFalse,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PropertyKind {
    /// For each `i < j`: at least `threshold` vertices of `K(u_i)` inside the
    /// window have a neighbor in `K(u_j)`.
    AdjacencyCount { threshold: usize, window: Window },
    /// Every `K(u_i)` has at least `min_size` vertices.
    ComponentSize { min_size: usize },
    Custom(CustomPredicate),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertySpec {
    pub arity: usize,
    pub kind: PropertyKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum PropertyError {
    #[error("property arity must be at least 1")]
    ZeroArity,
    #[error("property has arity {expected} but {found} vertices were given")]
    Arity { expected: usize, found: usize },
    #[error("window fraction must be positive, got {0}")]
    BadWindow(f64),
    #[error("inner-box windows need lattice coordinates on the graph")]
    Unlabeled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    /// The requested window reached past the graph and was clamped.
    pub window_clamped: bool,
}

/// A property bound to a graph, with its window precomputed.
#[derive(Clone, Debug)]
pub struct PropertyEvaluator<'g> {
    spec: PropertySpec,
    g: &'g Graph,
    window: Vec<bool>,
    clamped: bool,
}

impl<'g> PropertyEvaluator<'g> {
    pub fn new(spec: PropertySpec, g: &'g Graph) -> Result<Self, PropertyError> {
        if spec.arity == 0 {
            return Err(PropertyError::ZeroArity);
        }
        let (window, clamped) = match spec.kind {
            PropertyKind::AdjacencyCount { window, .. } => window_mask(g, window)?,
            _ => (Vec::new(), false),
        };
        Ok(PropertyEvaluator {
            spec,
            g,
            window,
            clamped,
        })
    }

    pub fn spec(&self) -> &PropertySpec {
        &self.spec
    }

    pub fn window(&self) -> &[bool] {
        &self.window
    }

    pub fn eval(&self, labels: &ComponentLabeling, u: &[VertexId]) -> Result<Verdict, PropertyError> {
        if u.len() != self.spec.arity {
            return Err(PropertyError::Arity {
                expected: self.spec.arity,
                found: u.len(),
            });
        }
        let holds = match self.spec.kind {
            PropertyKind::Custom(CustomPredicate::AlwaysTrue) => true,
            PropertyKind::Custom(CustomPredicate::AlwaysFalse) => false,
            PropertyKind::ComponentSize { min_size } => u.iter().all(|&v| labels.size(labels.label(v)) >= min_size),
            PropertyKind::AdjacencyCount { threshold, .. } => (0..u.len()).all(|i| {
                (i + 1..u.len()).all(|j| self.adjacency_count(labels, u[i], u[j], threshold) >= threshold)
            }),
        };
        Ok(Verdict {
            holds,
            window_clamped: self.clamped,
        })
    }

    /// Vertices of `K(a)` in the window with a neighbor in `K(b)`, counted up to `stop`.
    fn adjacency_count(&self, labels: &ComponentLabeling, a: VertexId, b: VertexId, stop: usize) -> usize {
        if stop == 0 {
            return 0;
        }
        let target = labels.label(b);
        let mut count = 0;
        for &x in labels.members(labels.label(a)) {
            if self.window[x] && self.g.neighbors(x).iter().any(|&(y, _)| labels.label(y) == target) {
                count += 1;
                if count == stop {
                    break;
                }
            }
        }
        count
    }
}

pub fn eval_property(
    spec: &PropertySpec,
    g: &Graph,
    f: &OrientedForest,
    u: &[VertexId],
) -> Result<Verdict, PropertyError> {
    PropertyEvaluator::new(*spec, g)?.eval(&components(f), u)
}

fn window_mask(g: &Graph, window: Window) -> Result<(Vec<bool>, bool), PropertyError> {
    let n = g.vertex_count();
    let fraction = match window {
        Window::Full => return Ok((vec![true; n], false)),
        Window::InnerBox { fraction } => fraction,
    };
    if fraction.is_nan() || fraction <= 0.0 {
        return Err(PropertyError::BadWindow(fraction));
    }
    let labels = g.labels().ok_or(PropertyError::Unlabeled)?;
    let clamped = fraction > 1.0;
    let fraction = fraction.min(1.0);
    let dim = labels.dim();
    let mut lo = vec![i32::MAX; dim];
    let mut hi = vec![i32::MIN; dim];
    for v in 0..n {
        if let Some(x) = labels.get(v) {
            for j in 0..dim {
                lo[j] = lo[j].min(x[j]);
                hi[j] = hi[j].max(x[j]);
            }
        }
    }
    // Equal margins on both sides keep the window symmetric under reflections.
    let bounds: Vec<(i32, i32)> = (0..dim)
        .map(|j| {
            let extent = (hi[j] - lo[j] + 1) as f64;
            let margin = ((1.0 - fraction) * extent / 2.0).floor() as i32;
            (lo[j] + margin, hi[j] - margin)
        })
        .collect();
    let mask = (0..n)
        .map(|v| match labels.get(v) {
            Some(x) => x.iter().zip(&bounds).all(|(&c, &(a, b))| a <= c && c <= b),
            None => false,
        })
        .collect();
    Ok((mask, clamped))
}
