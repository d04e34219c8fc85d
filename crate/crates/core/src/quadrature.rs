//! Symmetric triangle rules and a graded variant for point singularities.

use crate::geometry::Point2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Three interior points, exact for quadratics.
    Degree2,
    /// Seven points, exact for quintics.
    Degree5,
}

const D2: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

// a = (6 -+ sqrt 15) / 21, w = (155 -+ sqrt 15) / 1200
const A1: f64 = 0.101_286_507_323_456_34;
const W1: f64 = 0.125_939_180_544_827_15;
const A2: f64 = 0.470_142_064_105_115_1;
const W2: f64 = 0.132_394_152_788_506_16;

const D5: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, A1, 1.0 - 2.0 * A1], W1),
    ([A1, 1.0 - 2.0 * A1, A1], W1),
    ([1.0 - 2.0 * A1, A1, A1], W1),
    ([A2, A2, 1.0 - 2.0 * A2], W2),
    ([A2, 1.0 - 2.0 * A2, A2], W2),
    ([1.0 - 2.0 * A2, A2, A2], W2),
];

fn tri_area(t: &[Point2; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(t[2] - t[0]).abs()
}

/// `∫_T f` for the triangle `t`.
pub fn integrate<F: FnMut(Point2) -> f64>(t: [Point2; 3], rule: Rule, mut f: F) -> f64 {
    let pts: &[([f64; 3], f64)] = match rule {
        Rule::Degree2 => &D2,
        Rule::Degree5 => &D5,
    };
    let mut s = 0.0;
    for (b, w) in pts {
        let p = Point2::new(
            b[0] * t[0].x + b[1] * t[1].x + b[2] * t[2].x,
            b[0] * t[0].y + b[1] * t[1].y + b[2] * t[2].y,
        );
        s += w * f(p);
    }
    s * tri_area(&t)
}

/// Like [`integrate`], but refines `levels` times toward vertex `t[0]`:
/// each level integrates the trapezoid away from it and recurses on the
/// half-size corner triangle.
pub fn integrate_graded<F: FnMut(Point2) -> f64>(t: [Point2; 3], levels: u32, rule: Rule, mut f: F) -> f64 {
    let [s, mut a, mut b] = t;
    let mut total = 0.0;
    for _ in 0..levels {
        let a2 = s.midpoint(a);
        let b2 = s.midpoint(b);
        total += integrate([a2, a, b], rule, &mut f);
        total += integrate([a2, b, b2], rule, &mut f);
        a = a2;
        b = b2;
    }
    total + integrate([s, a, b], rule, &mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tri() -> [Point2; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    // ∫ x^a y^b over the unit right triangle = a! b! / (a + b + 2)!
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn rules_are_exact_to_their_degree() {
        for (rule, deg) in [(Rule::Degree2, 2), (Rule::Degree5, 5)] {
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let got = integrate(tri(), rule, |p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    assert_relative_eq!(got, monomial_exact(a, b), max_relative = 1e-14);
                }
            }
        }
    }

    #[test]
    fn rule_constants() {
        let s = 15f64.sqrt();
        assert_relative_eq!(A1, (6.0 - s) / 21.0, epsilon = 1e-17);
        assert_relative_eq!(A2, (6.0 + s) / 21.0, epsilon = 1e-17);
        assert_relative_eq!(W1, (155.0 - s) / 1200.0, epsilon = 1e-17);
        assert_relative_eq!(W2, (155.0 + s) / 1200.0, epsilon = 1e-17);
    }

    #[test]
    fn graded_rule_is_exact_on_polynomials() {
        let got = integrate_graded(tri(), 4, Rule::Degree5, |p| p.x * p.x * p.y + 1.0);
        assert_relative_eq!(got, monomial_exact(2, 1) + 0.5, max_relative = 1e-14);
    }

    #[test]
    fn graded_rule_improves_singular_integral() {
        // ∫ r^(-2/3) over the quarter disc sector triangle is approximated
        // better with grading.
        let f = |p: Point2| p.norm().powf(-2.0 / 3.0);
        let fine = integrate_graded(tri(), 30, Rule::Degree5, f);
        let plain = (integrate(tri(), Rule::Degree5, f) - fine).abs();
        let graded = (integrate_graded(tri(), 4, Rule::Degree5, f) - fine).abs();
        assert!(graded < plain / 4.0, "{graded} vs {plain}");
    }
}
