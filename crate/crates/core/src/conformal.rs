//! Discrete hyperbolic metrics under vertex scaling.
//!
//! A conformal factor `w` assigns one real to each boundary component and
//! rescales a background metric `l̃` edge by edge:
//!
//! ```text
//! cosh(l_e / 2) = exp(w_i + w_j) · cosh(l̃_e / 2)
//! ```
//!
//! where `i`, `j` are the components joined by `e`. The factor is admissible
//! iff every right-hand side exceeds 1, i.e. `w_i + w_j + ln cosh(l̃_e/2) > 0`
//! for all edges. The boundary lengths `K` are the generalized curvature,
//! and `Δ = ∂K/∂w` is the discrete Laplacian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::SurfaceComplex;
use crate::error::{Error, Result};
use crate::hexagon::{self, MAX_SIDE};

pub type LaplacianMatrix = DMatrix<f64>;

/// `ln cosh x` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Reference edge lengths `l̃`, one per canonical edge index.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundMetric {
    lengths: Vec<f64>,
    half_ln_cosh: Vec<f64>,
}

impl BackgroundMetric {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        for (edge, &value) in lengths.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidEdgeLength { edge, value });
            }
            if value > MAX_SIDE {
                return Err(Error::EdgeOverflow {
                    edge,
                    length: value,
                });
            }
        }
        let half_ln_cosh = lengths.iter().map(|&l| ln_cosh(l / 2.0)).collect();
        Ok(BackgroundMetric {
            lengths,
            half_ln_cosh,
        })
    }

    /// Every edge gets the same length.
    pub fn uniform(num_edges: usize, length: f64) -> Result<Self> {
        Self::new(vec![length; num_edges])
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    fn check(&self, cx: &SurfaceComplex) -> Result<()> {
        check_len("background metric", cx.num_edges(), self.lengths.len())
    }
}

/// One real per boundary component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConformalFactor(pub Vec<f64>);

impl ConformalFactor {
    pub fn zeros(n: usize) -> Self {
        ConformalFactor(vec![0.0; n])
    }

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                what: "w",
                index,
                value,
            });
        }
        Ok(ConformalFactor(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<DVector<f64>> for ConformalFactor {
    fn from(v: DVector<f64>) -> Self {
        ConformalFactor(v.iter().copied().collect())
    }
}

/// Boundary-component lengths `K` (or a target `K̄`), all positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurvatureVector(pub Vec<f64>);

impl CurvatureVector {
    /// Rejects any entry that is not finite and strictly positive.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveEntry {
                what: "K_bar",
                index,
                value,
            });
        }
        Ok(CurvatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `‖self − other‖∞`.
    pub fn max_abs_diff(&self, other: &CurvatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Slack `w_i + w_j + ln cosh(l̃_e/2)` of each edge constraint.
pub fn edge_margins(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<Vec<f64>> {
    bg.check(cx)?;
    check_len("conformal factor", cx.num_components(), w.len())?;
    Ok((0..cx.num_edges())
        .map(|e| {
            let [i, j] = cx.edge_endpoints(e);
            w.0[i] + w.0[j] + bg.half_ln_cosh[e]
        })
        .collect())
}

/// Minimum edge slack; `w` is admissible iff this is positive.
pub fn boundary_margin(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<f64> {
    Ok(edge_margins(w, bg, cx)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Returns the boundary margin, or an error naming the first violated edge.
pub fn check_admissible(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<f64> {
    let margins = edge_margins(w, bg, cx)?;
    if let Some((edge, &margin)) = margins.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
        return Err(Error::Inadmissible { edge, margin });
    }
    Ok(margins.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn is_admissible(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> bool {
    matches!(boundary_margin(w, bg, cx), Ok(m) if m > 0.0)
}

/// Edge lengths of the vertex-scaled metric `w * l̃`.
pub fn scale_metric(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<Vec<f64>> {
    edge_margins(w, bg, cx)?
        .into_iter()
        .enumerate()
        .map(|(edge, margin)| {
            if !(margin > 0.0) {
                return Err(Error::Inadmissible { edge, margin });
            }
            // 2 arccosh(e^m) = 2 (m + ln(1 + sqrt(1 − e^{−2m})))
            let length = 2.0 * (margin + (-(-2.0 * margin).exp_m1()).sqrt().ln_1p());
            if !(length <= MAX_SIDE) {
                return Err(Error::EdgeOverflow { edge, length });
            }
            Ok(length)
        })
        .collect()
}

fn check_lengths(lengths: &[f64], cx: &SurfaceComplex) -> Result<()> {
    check_len("edge lengths", cx.num_edges(), lengths.len())?;
    for (edge, &value) in lengths.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidEdgeLength { edge, value });
        }
    }
    Ok(())
}

/// Sides of the hexagon seen from arc `(face, slot)`: the two adjacent red
/// sides, then the opposite one.
fn arc_sides(lengths: &[f64], cx: &SurfaceComplex, face: usize, slot: usize) -> ([usize; 3], [f64; 3]) {
    let edges = [
        cx.edge_at(face, slot),
        cx.edge_at(face, slot + 1),
        cx.edge_at(face, slot + 2),
    ];
    (edges, edges.map(|e| lengths[e]))
}

/// Boundary-component lengths of the hyperbolic surface with edge lengths `lengths`.
pub fn curvature(lengths: &[f64], cx: &SurfaceComplex) -> Result<CurvatureVector> {
    check_lengths(lengths, cx)?;
    let mut k = vec![0.0; cx.num_components()];
    for face in 0..cx.num_faces() {
        for slot in 0..3 {
            let (_, [a, b, c]) = arc_sides(lengths, cx, face, slot);
            k[cx.component_of_arc(face, slot)] += hexagon::arc_length(a, b, c)?;
        }
    }
    Ok(CurvatureVector(k))
}

/// `K(w * l̃)`.
pub fn curvature_at(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<CurvatureVector> {
    curvature(&scale_metric(w, bg, cx)?, cx)
}

/// `∂l_e/∂w_i = 2 coth(l_e/2)` for each endpoint occurrence of `i`.
pub fn edge_length_derivative(length: f64) -> Result<f64> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidEdgeLength {
            edge: usize::MAX,
            value: length,
        });
    }
    Ok(2.0 / (length / 2.0).tanh())
}

/// The Jacobian `Δ[i][j] = ∂K_i/∂w_j`, assembled face by face.
pub fn laplacian(w: &ConformalFactor, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<LaplacianMatrix> {
    let lengths = scale_metric(w, bg, cx)?;
    let dl = lengths
        .iter()
        .map(|&l| edge_length_derivative(l))
        .collect::<Result<Vec<_>>>()?;

    let n = cx.num_components();
    let mut delta = DMatrix::zeros(n, n);
    for face in 0..cx.num_faces() {
        for slot in 0..3 {
            let row = cx.component_of_arc(face, slot);
            let (edges, [a, b, c]) = arc_sides(&lengths, cx, face, slot);
            let partials = hexagon::arc_length_partials(a, b, c)?;
            for (&e, &p) in edges.iter().zip(&partials) {
                // a self-edge lands on the same column twice
                for col in cx.edge_endpoints(e) {
                    delta[(row, col)] += p * dl[e];
                }
            }
        }
    }
    Ok(delta)
}

/// `‖A − Aᵀ‖∞ / ‖A‖∞` (max row sum norm).
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let inf_norm = |a: &DMatrix<f64>| {
        a.row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let norm = inf_norm(m);
    if norm == 0.0 {
        return 0.0;
    }
    inf_norm(&(m - m.transpose())) / norm
}
