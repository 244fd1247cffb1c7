//! Ideal triangulations as hexagons glued along red sides.
//!
//! Each face is a hexagon with cyclic side order `r0 b0 r1 b1 r2 b2`. The red
//! sides are matched in pairs by a fixed-point-free involution (the gluing);
//! everything else is derived from it:
//!
//! * edges are the matched pairs, indexed by their smaller side;
//! * the black side `b_k` of face `f` (the arc `(f, k)`) is adjacent to red
//!   slots `k` and `k + 1` and opposite slot `k + 2`;
//! * boundary components are the cycles of `succ(f, k) = gluing(f, k + 1)`,
//!   indexed by their smallest arc.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::error::Side;
use crate::error::{Error, Result};

#[inline]
fn side_index(side: Side) -> usize {
    3 * side.face + side.slot
}

#[inline]
fn side_at(index: usize) -> Side {
    Side::new(index / 3, index % 3)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceComplex {
    num_faces: usize,
    /// `mate[3f + k]` is the side glued to `(f, k)`.
    mate: Vec<usize>,
    /// Side pairs, smaller side first, sorted ascending.
    edges: Vec<[usize; 2]>,
    edge_of_side: Vec<usize>,
    component_of_arc: Vec<usize>,
    /// Arcs of each boundary component, in successor order starting from the
    /// smallest arc.
    cycles: Vec<Vec<usize>>,
    endpoints: Vec<[usize; 2]>,
}

impl SurfaceComplex {
    /// Validates a gluing and derives edges, boundary cycles and endpoints.
    pub fn build(num_faces: usize, pairs: &[(Side, Side)]) -> Result<Self> {
        if num_faces < 2 || num_faces % 2 != 0 {
            return Err(Error::InvalidFaceCount(num_faces));
        }
        let num_sides = 3 * num_faces;
        let mut mate = vec![usize::MAX; num_sides];
        for &(p, q) in pairs {
            for s in [p, q] {
                if s.face >= num_faces || s.slot > 2 {
                    return Err(Error::SideOutOfRange(s));
                }
            }
            if p == q {
                return Err(Error::SelfPairedSide(p));
            }
            let (ip, iq) = (side_index(p), side_index(q));
            for (i, s) in [(ip, p), (iq, q)] {
                if mate[i] != usize::MAX {
                    return Err(Error::DuplicateSide(s));
                }
            }
            mate[ip] = iq;
            mate[iq] = ip;
        }
        if let Some(i) = mate.iter().position(|&m| m == usize::MAX) {
            return Err(Error::UnmatchedSide(side_at(i)));
        }
        Ok(Self::derive(num_faces, mate))
    }

    fn derive(num_faces: usize, mate: Vec<usize>) -> Self {
        let num_sides = mate.len();

        let mut edges = Vec::with_capacity(num_sides / 2);
        let mut edge_of_side = vec![0; num_sides];
        for (i, &m) in mate.iter().enumerate() {
            if i < m {
                edge_of_side[i] = edges.len();
                edge_of_side[m] = edges.len();
                edges.push([i, m]);
            }
        }

        // Arc (f, k) continues across red side (f, k + 1) into arc gluing(f, k + 1).
        let succ = |arc: usize| mate[3 * (arc / 3) + (arc + 1) % 3];
        let mut component_of_arc = vec![usize::MAX; num_sides];
        let mut cycles = Vec::new();
        for start in 0..num_sides {
            if component_of_arc[start] != usize::MAX {
                continue;
            }
            let id = cycles.len();
            let mut cycle = Vec::new();
            let mut arc = start;
            while component_of_arc[arc] == usize::MAX {
                component_of_arc[arc] = id;
                cycle.push(arc);
                arc = succ(arc);
            }
            debug_assert_eq!(arc, start, "successor map must be a permutation");
            cycles.push(cycle);
        }

        let endpoints = edges
            .iter()
            .map(|&[s, _]| {
                let (f, k) = (s / 3, s % 3);
                [
                    component_of_arc[s],
                    component_of_arc[3 * f + (k + 2) % 3],
                ]
            })
            .collect();

        let cx = SurfaceComplex {
            num_faces,
            mate,
            edges,
            edge_of_side,
            component_of_arc,
            cycles,
            endpoints,
        };
        debug_assert!(cx.endpoints_consistent());
        cx
    }

    /// Two hexagons glued into a sphere with three holes.
    pub fn pair_of_pants() -> Self {
        let s = Side::new;
        Self::build(
            2,
            &[
                (s(0, 0), s(1, 0)),
                (s(0, 1), s(1, 2)),
                (s(0, 2), s(1, 1)),
            ],
        )
        .expect("pair of pants gluing is valid")
    }

    /// Two hexagons glued slot-to-slot into a torus with one hole.
    pub fn one_holed_torus() -> Self {
        let s = Side::new;
        Self::build(
            2,
            &[
                (s(0, 0), s(1, 0)),
                (s(0, 1), s(1, 1)),
                (s(0, 2), s(1, 2)),
            ],
        )
        .expect("one-holed torus gluing is valid")
    }

    /// A uniformly random perfect matching of the `3F` red sides.
    pub fn random(num_faces: usize, seed: u64) -> Result<Self> {
        if num_faces < 2 || num_faces % 2 != 0 {
            return Err(Error::InvalidFaceCount(num_faces));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sides: Vec<usize> = (0..3 * num_faces).collect();
        sides.shuffle(&mut rng);
        let mut mate = vec![0; sides.len()];
        for pair in sides.chunks_exact(2) {
            mate[pair[0]] = pair[1];
            mate[pair[1]] = pair[0];
        }
        Ok(Self::derive(num_faces, mate))
    }

    pub fn num_faces(&self) -> usize {
        self.num_faces
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_components(&self) -> usize {
        self.cycles.len()
    }

    pub fn num_arcs(&self) -> usize {
        3 * self.num_faces
    }

    /// χ = F − E for the hexagonal cell structure (`−F/2`).
    pub fn euler_characteristic(&self) -> i64 {
        -(self.num_faces as i64) / 2
    }

    pub fn gluing(&self, side: Side) -> Side {
        side_at(self.mate[side_index(side)])
    }

    /// The two sides of edge `e`, smaller first.
    pub fn edge_sides(&self, e: usize) -> (Side, Side) {
        let [p, q] = self.edges[e];
        (side_at(p), side_at(q))
    }

    /// Edge index of red slot `slot` on `face`.
    pub fn edge_at(&self, face: usize, slot: usize) -> usize {
        self.edge_of_side[3 * face + slot % 3]
    }

    /// The boundary components joined by edge `e`; equal when the edge has
    /// both ends on one component.
    pub fn edge_endpoints(&self, e: usize) -> [usize; 2] {
        self.endpoints[e]
    }

    pub fn component_of_arc(&self, face: usize, slot: usize) -> usize {
        self.component_of_arc[3 * face + slot % 3]
    }

    /// Arcs of boundary component `i` as `(face, slot)` pairs.
    pub fn boundary_cycle(&self, i: usize) -> Vec<Side> {
        self.cycles[i].iter().map(|&a| side_at(a)).collect()
    }

    pub fn boundary_cycle_lengths(&self) -> Vec<usize> {
        self.cycles.iter().map(Vec::len).collect()
    }

    /// All gluing pairs in canonical edge order.
    pub fn gluing_pairs(&self) -> Vec<(Side, Side)> {
        (0..self.num_edges()).map(|e| self.edge_sides(e)).collect()
    }

    fn endpoints_consistent(&self) -> bool {
        self.edges.iter().all(|&[p, q]| {
            let (f, k) = (p / 3, p % 3);
            let (g, j) = (q / 3, q % 3);
            self.component_of_arc[3 * f + (k + 2) % 3] == self.component_of_arc[q]
                && self.component_of_arc[p] == self.component_of_arc[3 * g + (j + 2) % 3]
        })
    }

    /// Re-checks every structural invariant of the derived data.
    pub fn validate(&self) -> bool {
        let n = self.mate.len();
        let involution = self
            .mate
            .iter()
            .enumerate()
            .all(|(i, &m)| m < n && m != i && self.mate[m] == i);
        let mut seen = vec![false; n];
        for cycle in &self.cycles {
            for &a in cycle {
                if seen[a] {
                    return false;
                }
                seen[a] = true;
            }
        }
        involution
            && seen.iter().all(|&s| s)
            && self.cycles.iter().all(|c| !c.is_empty())
            && 2 * self.edges.len() == 3 * self.num_faces
            && self.num_faces % 2 == 0
            && self.endpoints_consistent()
    }

    pub fn to_file(&self) -> SurfaceFile {
        SurfaceFile {
            num_faces: self.num_faces,
            gluing: self
                .gluing_pairs()
                .into_iter()
                .map(|(p, q)| [[p.face, p.slot], [q.face, q.slot]])
                .collect(),
        }
    }
}

/// On-disk form: `{"num_faces": F, "gluing": [[[f,k],[f2,j]], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub num_faces: usize,
    pub gluing: Vec<[[usize; 2]; 2]>,
}

impl TryFrom<SurfaceFile> for SurfaceComplex {
    type Error = Error;

    fn try_from(file: SurfaceFile) -> Result<Self> {
        let pairs: Vec<(Side, Side)> = file
            .gluing
            .iter()
            .map(|[p, q]| (Side::new(p[0], p[1]), Side::new(q[0], q[1])))
            .collect();
        SurfaceComplex::build(file.num_faces, &pairs)
    }
}
