use std::f64::consts::PI;

use super::NetworkError;

/// `cos·p + sin·q ≤ rhs`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub cos: f64,
    pub sin: f64,
    pub rhs: f64,
}

impl HalfPlane {
    pub fn eval(&self, p: f64, q: f64) -> f64 {
        self.cos * p + self.sin * q
    }
}

/// Half-planes of the regular `sides`-gon inscribed in the disk of radius
/// `s_max`, with facet normals at angles `(2s − 1)π/S`.
pub fn polygon_halfplanes(sides: usize, s_max: f64) -> Result<Vec<HalfPlane>, NetworkError> {
    if sides < 3 {
        return Err(NetworkError::TooFewSides(sides));
    }
    let n = sides as f64;
    let rhs = (PI / n).cos() * s_max;
    Ok((1..=sides)
        .map(|s| {
            let a = (2.0 * s as f64 - 1.0) * PI / n;
            HalfPlane {
                cos: a.cos(),
                sin: a.sin(),
                rhs,
            }
        })
        .collect())
}
