use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, Labels, VertexId};

/// Largest supported `d * log2(L)`; keeps `L^d` well inside `u32`.
pub const MAX_LATTICE_BITS: f64 = 32.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Torus,
    Wired,
    Free,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Torus => "torus",
            Boundary::Wired => "wired",
            Boundary::Free => "free",
        })
    }
}

/// A `side^dimension` box of `Z^d` with a boundary condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub dimension: usize,
    pub side: usize,
    pub boundary: Boundary,
}

impl BoxSpec {
    pub fn new(dimension: usize, side: usize, boundary: Boundary) -> Self {
        BoxSpec {
            dimension,
            side,
            boundary,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let fail = |reason| GraphError::UnsupportedLattice {
            dimension: self.dimension,
            side: self.side,
            reason,
        };
        if self.dimension == 0 {
            return Err(fail("dimension must be at least 1"));
        }
        if self.side < 2 {
            return Err(fail("side must be at least 2"));
        }
        if self.dimension as f64 * (self.side as f64).log2() > MAX_LATTICE_BITS {
            return Err(fail("side^dimension overflows the vertex id range"));
        }
        Ok(())
    }

    /// Number of lattice sites, `side^dimension`.
    pub fn site_count(&self) -> usize {
        self.side.pow(self.dimension as u32)
    }

    /// Vertex count of the realized graph, including the wired boundary vertex.
    pub fn vertex_count(&self) -> usize {
        self.site_count() + usize::from(self.boundary == Boundary::Wired)
    }

    /// The boundary vertex of the wired box; it is always the last id.
    pub fn sink(&self) -> Option<VertexId> {
        (self.boundary == Boundary::Wired).then(|| self.site_count())
    }

    pub fn coords_of(&self, v: VertexId) -> Vec<i32> {
        let mut rest = v;
        (0..self.dimension)
            .map(|_| {
                let x = rest % self.side;
                rest /= self.side;
                x as i32
            })
            .collect()
    }

    pub fn index_of(&self, coords: &[i32]) -> Option<VertexId> {
        if coords.len() != self.dimension {
            return None;
        }
        let mut id = 0usize;
        for &x in coords.iter().rev() {
            if x < 0 || x as usize >= self.side {
                return None;
            }
            id = id * self.side + x as usize;
        }
        Some(id)
    }

    /// The site nearest the geometric center, `floor((side - 1) / 2)` in every coordinate.
    pub fn center(&self) -> Vec<i32> {
        vec![((self.side - 1) / 2) as i32; self.dimension]
    }
}

/// Realizes a box as a graph.
///
/// Sites are numbered `sum x_j side^j`. The torus wraps around (side 2 gives
/// parallel edges), the free box has no wraparound, and the wired box adds
/// one extra vertex, last in id order, joined to each face site once per
/// missing lattice neighbor.
pub fn make_box(spec: &BoxSpec) -> Result<Graph, GraphError> {
    spec.validate()?;
    let d = spec.dimension;
    let side = spec.side;
    let sites = spec.site_count();
    let sink = spec.sink();
    let mut edges = Vec::with_capacity(d * sites + 2 * d * side.pow(d as u32 - 1));
    let mut labels = Labels::new(d, spec.vertex_count());
    let mut stride = vec![1usize; d];
    for j in 1..d {
        stride[j] = stride[j - 1] * side;
    }
    for v in 0..sites {
        let coords = spec.coords_of(v);
        for j in 0..d {
            let x = coords[j] as usize;
            if x + 1 < side {
                edges.push((v, v + stride[j]));
            } else {
                match spec.boundary {
                    Boundary::Torus => edges.push((v, v - (side - 1) * stride[j])),
                    Boundary::Wired => edges.push((v, sink.unwrap())),
                    Boundary::Free => {}
                }
            }
            if x == 0 && spec.boundary == Boundary::Wired {
                edges.push((v, sink.unwrap()));
            }
        }
        labels.set(v, &coords);
    }
    Ok(Graph::from_edges(spec.vertex_count(), edges)?
        .with_labels(labels)
        .with_sink(sink))
}
