use super::{DisjointSets, EdgeId, Graph, GraphError, Labels, VertexId};

/// A graph derived from `base` by merging vertex classes and dropping edges.
///
/// Derived vertices are numbered by the smallest base vertex of their class.
#[derive(Clone, Debug)]
pub struct Quotient<'g> {
    base: &'g Graph,
    derived: Graph,
    projection: Vec<VertexId>,
    section: Vec<VertexId>,
    edge_map: Vec<Option<EdgeId>>,
    edge_origin: Vec<EdgeId>,
    disconnected: bool,
}

impl<'g> Quotient<'g> {
    pub fn base(&self) -> &'g Graph {
        self.base
    }

    pub fn derived(&self) -> &Graph {
        &self.derived
    }

    /// `π`: base vertex to derived vertex.
    pub fn project(&self, v: VertexId) -> VertexId {
        self.projection[v]
    }

    /// `π⁻¹`: one representative base vertex of a derived vertex.
    pub fn representative(&self, v: VertexId) -> VertexId {
        self.section[v]
    }

    /// The derived edge a base edge became, if it survived.
    pub fn derived_edge(&self, e: EdgeId) -> Option<EdgeId> {
        self.edge_map[e]
    }

    /// The base edge a derived edge came from.
    pub fn base_edge(&self, e: EdgeId) -> EdgeId {
        self.edge_origin[e]
    }

    /// Set when contraction and deletion left the derived graph disconnected.
    pub fn is_disconnected(&self) -> bool {
        self.disconnected
    }
}

/// Merges vertices by `class_root` (any representative per class), dropping
/// every edge in `dropped`. Edges outside `dropped` keep their multiplicity,
/// including any self-loops the merge creates.
fn build<'g>(base: &'g Graph, class_root: &[usize], dropped: &[bool], sink: Option<VertexId>) -> Quotient<'g> {
    let n = base.vertex_count();
    let mut class_id = vec![usize::MAX; n];
    let mut projection = vec![0; n];
    let mut section = Vec::new();
    for v in 0..n {
        let root = class_root[v];
        if class_id[root] == usize::MAX {
            class_id[root] = section.len();
            section.push(v);
        }
        projection[v] = class_id[root];
    }
    let mut edge_map = vec![None; base.edge_count()];
    let mut edge_origin = Vec::new();
    let mut edges = Vec::new();
    for (e, &(u, v)) in base.edges().iter().enumerate() {
        if dropped[e] {
            continue;
        }
        edge_map[e] = Some(edges.len());
        edge_origin.push(e);
        edges.push((projection[u], projection[v]));
    }
    let mut class_size = vec![0usize; section.len()];
    for &p in &projection {
        class_size[p] += 1;
    }
    let mut derived = Graph::from_edges(section.len(), edges).expect("projected endpoints are in range");
    if let Some(base_labels) = base.labels() {
        let mut labels = Labels::new(base_labels.dim(), section.len());
        for (c, &rep) in section.iter().enumerate() {
            if class_size[c] == 1 {
                if let Some(x) = base_labels.get(rep) {
                    labels.set(c, x);
                }
            }
        }
        derived = derived.with_labels(labels);
    }
    derived = derived.with_sink(sink.map(|s| projection[s]));
    let disconnected = !derived.is_connected();
    Quotient {
        base,
        derived,
        projection,
        section,
        edge_map,
        edge_origin,
        disconnected,
    }
}

/// Contracts every edge of `contract` and deletes every edge of `delete`.
///
/// Contracted edges vanish (they would be self-loops); other edges whose
/// endpoints end up merged are kept as self-loops. A disconnected result is
/// reported through [`Quotient::is_disconnected`], not as an error.
pub fn contract_and_delete<'g>(
    g: &'g Graph,
    contract: &[EdgeId],
    delete: &[EdgeId],
) -> Result<Quotient<'g>, GraphError> {
    let mut in_contract = vec![false; g.edge_count()];
    for &e in contract {
        g.check_edge(e)?;
        in_contract[e] = true;
    }
    let mut dropped = in_contract.clone();
    for &e in delete {
        g.check_edge(e)?;
        if in_contract[e] {
            return Err(GraphError::ContractDeleteOverlap(e));
        }
        dropped[e] = true;
    }
    let mut sets = DisjointSets::new(g.vertex_count());
    for &e in contract {
        let (u, v) = g.endpoints(e);
        sets.union(u, v);
    }
    let class_root: Vec<usize> = (0..g.vertex_count()).map(|v| sets.find(v)).collect();
    Ok(build(g, &class_root, &dropped, g.sink()))
}

/// Merges `boundary` into a single vertex that becomes the sink of the
/// derived graph. Edges between two boundary vertices disappear.
pub fn wire_boundary<'g>(g: &'g Graph, boundary: &[VertexId]) -> Result<Quotient<'g>, GraphError> {
    let Some(&first) = boundary.first() else {
        return Err(GraphError::EmptyBoundary);
    };
    let mut on_boundary = vec![false; g.vertex_count()];
    for &v in boundary {
        g.check_vertex(v)?;
        on_boundary[v] = true;
    }
    let class_root: Vec<usize> = (0..g.vertex_count())
        .map(|v| if on_boundary[v] { first } else { v })
        .collect();
    let dropped: Vec<bool> = g
        .edges()
        .iter()
        .map(|&(u, v)| on_boundary[u] && on_boundary[v])
        .collect();
    Ok(build(g, &class_root, &dropped, Some(first)))
}
