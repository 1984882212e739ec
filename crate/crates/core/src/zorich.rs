//! The cube-chart Zorich map.
//!
//! The chart `g` sends the cube `[-π/2, π/2]^{n-1}` onto the closed upper
//! half of S^{n-1}:
//!
//! ```text
//! g(x̄) = ( x̄ · sin M(x̄) / |x̄| ,  cos M(x̄) ),   M(x̄) = max |x_i|
//! ```
//!
//! Reflecting in the cube faces (each reflection also reflects the sphere in
//! the equatorial hyperplane) extends `g` to `h` on all of R^{n-1}, and the
//! Zorich map is `Z(x) = e^{x_n} h(x̄)`. The fundamental set is
//!
//! ```text
//! B = ( [-π/2, π/2]^{n-1}  ∪  (π/2, 3π/2) × (-π/2, π/2)^{n-2} ) × R
//! ```
//!
//! whose first box covers the closed upper hemisphere and whose second box
//! covers the open lower one. Points on the equator always live in the first
//! box.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecgeom::Vector;

/// Which box of the fundamental set a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sheet {
    /// `[-π/2, π/2]^{n-1} × R`, mapped to the closed upper half-space.
    First,
    /// `(π/2, 3π/2) × (-π/2, π/2)^{n-2} × R`, mapped to the open lower half-space.
    Second,
}

/// Chart coordinates in the cube `[-π/2, π/2]^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint(Vec<f64>);

impl ChartPoint {
    pub fn try_new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("chart needs n - 1 ≥ 2 coordinates".into()));
        }
        if coords.iter().any(|c| !c.is_finite() || c.abs() > FRAC_PI_2) {
            return Err(Error::InvalidInput(format!(
                "chart point {coords:?} outside [-π/2, π/2]^(n-1)"
            )));
        }
        Ok(ChartPoint(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// A point of the fundamental set B.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalPoint {
    coords: Vector,
}

impl FundamentalPoint {
    /// Accepts exactly the points of B; anything else needs [`canonicalize`].
    pub fn try_new(coords: Vector) -> Result<Self> {
        if coords.dim() < 3 || !coords.is_finite() {
            return Err(Error::InvalidInput(
                "fundamental points need n ≥ 3 finite coordinates".into(),
            ));
        }
        if sheet_of(coords.head()).is_none() {
            return Err(Error::NotInFundamentalSet);
        }
        Ok(FundamentalPoint { coords })
    }

    /// Internal constructor for coordinates already known to lie in B.
    pub(crate) fn from_trusted(coords: Vector) -> Self {
        debug_assert!(
            sheet_of(coords.head()).is_some(),
            "not in B: {coords:?}"
        );
        FundamentalPoint { coords }
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    pub fn into_vector(self) -> Vector {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }

    pub fn height(&self) -> f64 {
        self.coords.last()
    }

    pub fn sheet(&self) -> Sheet {
        sheet_of(self.coords.head()).unwrap_or(Sheet::First)
    }

    /// The chart coordinates of the equivalent first-box point, i.e. with the
    /// second box folded back by `x₁ ↦ π - x₁`.
    pub fn folded_chart(&self) -> Vec<f64> {
        let mut c = self.coords.head().to_vec();
        if self.sheet() == Sheet::Second {
            c[0] = PI - c[0];
        }
        c
    }
}

fn sheet_of(chart: &[f64]) -> Option<Sheet> {
    if chart.iter().all(|c| c.abs() <= FRAC_PI_2) {
        return Some(Sheet::First);
    }
    let first_ok = chart[0] > FRAC_PI_2 && chart[0] < 3.0 * FRAC_PI_2;
    if first_ok && chart[1..].iter().all(|c| c.abs() < FRAC_PI_2) {
        return Some(Sheet::Second);
    }
    None
}

/// Max-norm M(x̄) of chart coordinates.
pub fn chart_max(chart: &[f64]) -> f64 {
    chart.iter().fold(0.0, |m, c| m.max(c.abs()))
}

fn euclid(chart: &[f64]) -> f64 {
    Vector::new(chart.to_vec()).norm()
}

/// g on cube coordinates; returns the point of S^{n-1} as a vector of length
/// `chart.len() + 1`.
pub(crate) fn chart_g(chart: &[f64]) -> Vector {
    let n = chart.len() + 1;
    let r = euclid(chart);
    if r == 0.0 {
        return Vector::basis(n, n - 1);
    }
    let m = chart_max(chart);
    let s = m.sin() / r;
    let mut out: Vec<f64> = chart.iter().map(|c| c * s).collect();
    out.push(m.cos());
    Vector::new(out)
}

/// The chart g: cube → closed upper half-sphere.
pub fn sphere_chart(p: &ChartPoint) -> Vector {
    chart_g(p.coords())
}

/// Folds arbitrary chart coordinates into the cube by the reflection group.
/// Returns the cube point and whether an odd number of face reflections was
/// used (odd ⇒ the image lies in the lower hemisphere).
pub fn reduce_chart(chart: &[f64]) -> (Vec<f64>, bool) {
    let mut odd = false;
    let reduced = chart
        .iter()
        .map(|&c| {
            let mut r = c - TAU * ((c + FRAC_PI_2) / TAU).floor();
            if r >= 3.0 * FRAC_PI_2 {
                r -= TAU;
            }
            if r < -FRAC_PI_2 {
                r += TAU;
            }
            if r > FRAC_PI_2 {
                odd = !odd;
                r = PI - r;
            }
            r.clamp(-FRAC_PI_2, FRAC_PI_2)
        })
        .collect();
    (reduced, odd)
}

/// h: the reflection extension of g to all of R^{n-1}.
pub fn chart_h(chart: &[f64]) -> Vector {
    let (reduced, odd) = reduce_chart(chart);
    let mut p = chart_g(&reduced);
    if odd {
        let n = p.dim();
        p[n - 1] = -p[n - 1];
    }
    p
}

/// Z(x) = e^{x_n} h(x̄) for any x in R^n.
pub fn zorich_map(x: &Vector) -> Vector {
    chart_h(x.head()).scale(x.last().exp())
}

/// Z restricted to the fundamental set.
pub fn zorich_forward(x: &FundamentalPoint) -> Vector {
    let c = x.coords();
    let mut p = chart_g(&x.folded_chart());
    if x.sheet() == Sheet::Second {
        let n = p.dim();
        p[n - 1] = -p[n - 1];
    }
    p.scale(c.last().exp())
}

/// Z^{-1}: R^n \ {0} → B.
pub fn zorich_inverse(y: &Vector) -> Result<FundamentalPoint> {
    let n = y.dim();
    if n < 3 || !y.is_finite() {
        return Err(Error::InvalidInput("need a finite point with n ≥ 3".into()));
    }
    let r = y.norm();
    if r == 0.0 {
        return Err(Error::OutsideRange);
    }
    let w = y.scale(1.0 / r);
    let wn = w[n - 1];
    let wbar = &w.as_slice()[..n - 1];
    let wbar_norm = euclid(wbar);
    let m = wbar_norm.atan2(wn.abs());
    let mut chart: Vec<f64> = if wbar_norm == 0.0 {
        vec![0.0; n - 1]
    } else {
        let wmax = chart_max(wbar);
        wbar.iter().map(|c| m * c / wmax).collect()
    };
    if wn < 0.0 && m < FRAC_PI_2 {
        chart[0] = PI - chart[0];
        if !(chart[0] > FRAC_PI_2 && chart[0] < 3.0 * FRAC_PI_2) {
            // rounding pushed us onto the boundary of the second box
            chart[0] = PI - chart[0];
            chart.push(r.ln());
            return Ok(canonicalize(&Vector::new(chart)));
        }
    }
    chart.push(r.ln());
    Ok(FundamentalPoint::from_trusted(Vector::new(chart)))
}

/// The representative in B of the class of `x` under the reflection group.
///
/// Points already in B are returned unchanged. On the quotient boundary the
/// first box wins (`x₁ = 3π/2` wraps to `-π/2`).
pub fn canonicalize(x: &Vector) -> FundamentalPoint {
    if sheet_of(x.head()).is_some() {
        return FundamentalPoint::from_trusted(x.clone());
    }
    let (mut chart, odd) = reduce_chart(x.head());
    if odd && chart_max(&chart) < FRAC_PI_2 {
        chart[0] = PI - chart[0];
    }
    chart.push(x.last());
    FundamentalPoint::from_trusted(Vector::new(chart))
}

/// Distance in the quotient R^n / ∼: the minimum Euclidean distance from `a`
/// to any representative of `b` adjacent to B.
pub fn quotient_distance(a: &FundamentalPoint, b: &FundamentalPoint) -> f64 {
    let ac = a.coords();
    let bc = b.coords();
    let (reduced, _) = reduce_chart(bc.head());
    let on_equator = chart_max(&reduced) >= FRAC_PI_2 - 1e-12;

    // best squared distance with even / odd number of reflections so far
    let mut best = [0.0_f64, f64::INFINITY];
    for (ai, bi) in ac.head().iter().zip(bc.head()) {
        let mut same = f64::INFINITY;
        let mut refl = f64::INFINITY;
        for k in [-1.0, 0.0, 1.0] {
            same = same.min((ai - (bi + TAU * k)).powi(2));
            refl = refl.min((ai - (PI - bi + TAU * k)).powi(2));
        }
        best = [
            (best[0] + same).min(best[1] + refl),
            (best[1] + same).min(best[0] + refl),
        ];
    }
    let chart_sq = if on_equator { best[0].min(best[1]) } else { best[0] };
    (chart_sq + (ac.last() - bc.last()).powi(2)).sqrt()
}

/// The Zorich transform f̃ = Z^{-1} ∘ f ∘ Z evaluated at `x`.
pub fn transform_eval<F>(f: F, x: &FundamentalPoint) -> Result<FundamentalPoint>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let y = f(&zorich_forward(x))?;
    if y.norm() == 0.0 {
        return Err(Error::TransformUndefined);
    }
    zorich_inverse(&y)
}

/// A random point of B: either box with equal probability, height uniform in
/// `heights`.
pub fn sample_fundamental<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    heights: std::ops::Range<f64>,
) -> FundamentalPoint {
    let mut c: Vec<f64> = (0..n - 1)
        .map(|_| rng.gen_range(-FRAC_PI_2..FRAC_PI_2))
        .collect();
    if rng.gen_bool(0.5) {
        c[0] = PI - c[0];
    }
    c.push(rng.gen_range(heights));
    FundamentalPoint::from_trusted(Vector::new(c))
}

/// max over `samples` points of B of the quotient distance between
/// `(f∘g)~(x)` and `f̃(g̃(x))`.
pub fn composition_residual<F, G>(f: F, g: G, n: usize, samples: usize, seed: u64) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Vector>,
    G: Fn(&Vector) -> Result<Vector>,
{
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = sample_fundamental(&mut rng, n, -2.0..2.0);
        let composed = transform_eval(|y: &Vector| f(&g(y)?), &x)?;
        let stepwise = transform_eval(&f, &transform_eval(&g, &x)?)?;
        worst = worst.max(quotient_distance(&composed, &stepwise));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fp(v: Vec<f64>) -> FundamentalPoint {
        FundamentalPoint::try_new(Vector::new(v)).unwrap()
    }

    #[test]
    fn chart_center_and_face() {
        let north = sphere_chart(&ChartPoint::try_new(vec![0.0, 0.0]).unwrap());
        assert_eq!(north, Vector::new(vec![0.0, 0.0, 1.0]));
        let p = sphere_chart(&ChartPoint::try_new(vec![FRAC_PI_2, 0.0, 0.0]).unwrap());
        assert!(p.dist(&Vector::basis(4, 0)) < 1e-16);
        assert!(ChartPoint::try_new(vec![2.0, 0.0]).is_err());
    }

    #[test]
    fn forward_examples() {
        let y = zorich_forward(&fp(vec![0.0, 0.0, 2f64.ln()]));
        assert!(y.dist(&Vector::new(vec![0.0, 0.0, 2.0])) < 1e-15);
        let y = zorich_forward(&fp(vec![FRAC_PI_2, 0.0, 0.0, 0.0]));
        assert!(y.dist(&Vector::basis(4, 0)) < 1e-16);
        let south = fp(vec![PI, 0.0, 0.0]);
        assert_eq!(south.sheet(), Sheet::Second);
        assert_eq!(zorich_forward(&south), Vector::new(vec![0.0, 0.0, -1.0]));
    }

    #[test]
    fn inverse_examples() {
        let x = zorich_inverse(&Vector::new(vec![0.0, 0.0, 1f64.exp()])).unwrap();
        assert!(x.coords().dist(&Vector::new(vec![0.0, 0.0, 1.0])) < 1e-15);
        let x = zorich_inverse(&Vector::basis(3, 0)).unwrap();
        assert!(x.coords().dist(&Vector::new(vec![FRAC_PI_2, 0.0, 0.0])) < 1e-15);
        assert_eq!(x.sheet(), Sheet::First);
        let x = zorich_inverse(&Vector::new(vec![0.0, 0.0, -3.0])).unwrap();
        assert_eq!(x.sheet(), Sheet::Second);
        assert!((x.coords()[0] - PI).abs() < 1e-15);
        assert_eq!(zorich_inverse(&Vector::zeros(3)), Err(Error::OutsideRange));
    }

    #[test]
    fn roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 3..=5 {
            for _ in 0..2000 {
                let y = Vector::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());
                let x = zorich_inverse(&y).unwrap();
                let back = zorich_forward(&x);
                assert!(back.dist(&y) <= 1e-12 * y.norm());
                // and the other direction on interior points
                let z = zorich_inverse(&back).unwrap();
                assert!(z.coords().dist(x.coords()) < 1e-9);
            }
        }
    }

    #[test]
    fn membership() {
        assert!(FundamentalPoint::try_new(Vector::new(vec![2.0, 0.3, 0.0])).is_ok());
        assert_eq!(
            FundamentalPoint::try_new(Vector::new(vec![2.0, FRAC_PI_2, 0.0])),
            Err(Error::NotInFundamentalSet)
        );
        assert_eq!(
            FundamentalPoint::try_new(Vector::new(vec![3.0 * FRAC_PI_2, 0.0, 0.0])),
            Err(Error::NotInFundamentalSet)
        );
    }

    #[test]
    fn canonicalize_examples() {
        let inside = Vector::new(vec![0.3, -1.2, 0.7]);
        assert_eq!(canonicalize(&inside).coords(), &inside);
        let second = Vector::new(vec![PI + 0.1, 0.0, 0.0]);
        let c = canonicalize(&second);
        assert_eq!(c.coords(), &second);
        assert_eq!(c.sheet(), Sheet::Second);

        let far = Vector::new(vec![TAU - 0.2, 0.0, 0.0]);
        let c = canonicalize(&far);
        assert!(zorich_forward(&c).dist(&zorich_map(&far)) <= 1e-12);
        assert!((c.coords()[0] + 0.2).abs() < 1e-12);

        let wrap = canonicalize(&Vector::new(vec![3.0 * FRAC_PI_2, 0.2, 1.0]));
        assert_eq!(wrap.sheet(), Sheet::First);
        assert!((wrap.coords()[0] + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn canonicalize_preserves_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=5 {
            for _ in 0..2000 {
                let x = Vector::new((0..n).map(|_| rng.gen_range(-9.0..9.0)).collect());
                let c = canonicalize(&x);
                let y = zorich_map(&x);
                assert!(zorich_forward(&c).dist(&y) <= 1e-12 * y.norm());
            }
        }
    }

    #[test]
    fn quotient_distance_across_the_equator() {
        // just above and just below the equator near the x₂ = π/2 face
        let a = fp(vec![0.4, FRAC_PI_2 - 1e-3, 0.0]);
        let b = zorich_inverse(&Vector::new(vec![
            zorich_forward(&a)[0],
            zorich_forward(&a)[1],
            -zorich_forward(&a)[2],
        ]))
        .unwrap();
        assert_eq!(b.sheet(), Sheet::Second);
        assert!(a.coords().dist(b.coords()) > 1.0);
        assert!(quotient_distance(&a, &b) < 3e-3);
        assert_eq!(quotient_distance(&a, &a), 0.0);
    }

    #[test]
    fn transform_of_scalings() {
        let x = fp(vec![0.3, -0.5, 0.25]);
        let id = transform_eval(|y: &Vector| Ok(y.clone()), &x).unwrap();
        assert!(quotient_distance(&id, &x) < 1e-12);
        let dbl = transform_eval(|y: &Vector| Ok(y.scale(2.0)), &x).unwrap();
        assert!((dbl.coords()[2] - 0.25 - 2f64.ln()).abs() < 1e-12);
        assert!((dbl.coords()[0] - 0.3).abs() < 1e-12);
        assert_eq!(
            transform_eval(|y: &Vector| Ok(y.scale(0.0)), &x),
            Err(Error::TransformUndefined)
        );
    }

    #[test]
    fn composition_of_scalings() {
        let r = composition_residual(
            |y: &Vector| Ok(y.scale(1.7)),
            |y: &Vector| Ok(y.scale(0.3)),
            4,
            500,
            2,
        )
        .unwrap();
        assert!(r <= 1e-12, "{r}");
        let r = composition_residual(|y: &Vector| Ok(y.clone()), |y: &Vector| Ok(y.clone()), 3, 100, 2)
            .unwrap();
        assert!(r <= 1e-12);
    }
}
