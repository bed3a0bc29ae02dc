//! Quadrature rules on the reference triangle (barycentric points, weights
//! summing to one) and on edges (parameter in [0, 1], weights summing to one).

pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Edge-midpoint rule, exact for quadratics.
pub const MIDPOINT3: TriangleRule = TriangleRule {
    points: &[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const A1: f64 = 0.445_948_490_915_964_9;
const B1: f64 = 1.0 - 2.0 * A1;
const W1: f64 = 0.223_381_589_678_011_47;
const A2: f64 = 0.091_576_213_509_770_74;
const B2: f64 = 1.0 - 2.0 * A2;
const W2: f64 = 0.109_951_743_655_321_87;

/// Six-point symmetric rule, exact for quartics.
pub const DEGREE4: TriangleRule = TriangleRule {
    points: &[
        [A1, A1, B1],
        [A1, B1, A1],
        [B1, A1, A1],
        [A2, A2, B2],
        [A2, B2, A2],
        [B2, A2, A2],
    ],
    weights: &[W1, W1, W1, W2, W2, W2],
};

const G: f64 = 0.211_324_865_405_187_1; // (1 − 1/√3) / 2

/// Two-point Gauss–Legendre on [0, 1], exact for cubics.
pub const GAUSS2: [(f64, f64); 2] = [(G, 0.5), (1.0 - G, 0.5)];
