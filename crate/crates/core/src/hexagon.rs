//! Trigonometry of hyperbolic right-angled hexagons.
//!
//! A right-angled hexagon is determined by three pairwise non-adjacent side
//! lengths. Given the two sides `a`, `b` adjacent to a third side (the arc)
//! and the side `c` opposite it, the cosine law reads
//!
//! ```text
//! cosh θ = (cosh a · cosh b + cosh c) / (sinh a · sinh b)
//! ```
//!
//! Every positive triple is realizable, so there is no triangle inequality.

use crate::error::{Error, HexSide, Result};

/// Largest accepted side length. `cosh` overflows a double just past 710.
pub const MAX_SIDE: f64 = 700.0;

/// Three alternating sides of a right-angled hexagon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexSides {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HexSides {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        validate_sides(a, b, c)
    }

    pub fn arc_length(&self) -> Result<f64> {
        arc_length(self.a, self.b, self.c)
    }

    pub fn arc_length_partials(&self) -> Result<[f64; 3]> {
        arc_length_partials(self.a, self.b, self.c)
    }
}

/// Accepts iff all three sides are finite and strictly positive (and below
/// [`MAX_SIDE`]).
pub fn validate_sides(a: f64, b: f64, c: f64) -> Result<HexSides> {
    for (side, value) in [(HexSide::A, a), (HexSide::B, b), (HexSide::C, c)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidSide { side, value });
        }
        if value > MAX_SIDE {
            return Err(Error::SideTooLarge {
                side,
                value,
                limit: MAX_SIDE,
            });
        }
    }
    Ok(HexSides { a, b, c })
}

/// `cosh θ - 1` and `sinh θ`, computed without forming `cosh θ` itself.
///
/// `cosh θ - 1 = (cosh(a - b) + cosh c) / (sinh a · sinh b)` has no
/// cancellation, which keeps `θ` accurate when it is small.
fn cosh_minus_one_and_sinh(s: &HexSides) -> Result<(f64, f64)> {
    let (sa, sb) = (s.a.sinh(), s.b.sinh());
    let xm1 = (s.a - s.b).cosh() / sa / sb + s.c.cosh() / sa / sb;
    if !xm1.is_finite() {
        return Err(Error::ArcOverflow(s.a, s.b, s.c));
    }
    let sinh = xm1.sqrt() * (xm1 + 2.0).sqrt();
    Ok((xm1, sinh))
}

/// Length of the arc between the red sides `a` and `b`, opposite `c`.
pub fn arc_length(a: f64, b: f64, c: f64) -> Result<f64> {
    let sides = validate_sides(a, b, c)?;
    let (xm1, sinh) = cosh_minus_one_and_sinh(&sides)?;
    // arccosh(1 + x) = log1p(x + sqrt(x (x + 2)))
    Ok((xm1 + sinh).ln_1p())
}

/// Partial derivatives `(∂θ/∂a, ∂θ/∂b, ∂θ/∂c)` of [`arc_length`], by implicit
/// differentiation of the cosine law.
pub fn arc_length_partials(a: f64, b: f64, c: f64) -> Result<[f64; 3]> {
    let sides = validate_sides(a, b, c)?;
    let (_, sinh_theta) = cosh_minus_one_and_sinh(&sides)?;
    if !(sinh_theta.is_normal()) {
        return Err(Error::PrecisionLoss(a, b, c));
    }

    let (sa, sb, sc) = (a.sinh(), b.sinh(), c.sinh());
    let (ca, cb, cc) = (a.cosh(), b.cosh(), c.cosh());

    // ∂(cosh θ)/∂a = -(cosh b + cosh a cosh c) / (sinh² a sinh b)
    let dx_da = -((cb / sb) / sa / sa + (cc / sa) * ((ca / sa) / sb));
    let dx_db = -((ca / sa) / sb / sb + (cc / sb) * ((cb / sb) / sa));
    let dx_dc = sc / sa / sb;

    let partials = [
        dx_da / sinh_theta,
        dx_db / sinh_theta,
        dx_dc / sinh_theta,
    ];
    if partials.iter().any(|p| !p.is_finite()) {
        return Err(Error::ArcOverflow(a, b, c));
    }
    Ok(partials)
}
