//! Monic cubics of the form arising from the 3×3 energy-estimate matrix
//! `[[a, b, 0], [b, -d, c], [0, c, e]]` and their sign-classified roots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `λ³ + c2 λ² + c1 λ + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicPoly {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedRoots {
    pub neg: f64,
    pub pos_min: f64,
    pub pos_max: f64,
}

impl ClassifiedRoots {
    pub fn as_array(&self) -> [f64; 3] {
        [self.neg, self.pos_min, self.pos_max]
    }
}

impl CubicPoly {
    pub fn new(c2: f64, c1: f64, c0: f64) -> Self {
        Self { c2, c1, c0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        ((x + self.c2) * x + self.c1) * x + self.c0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (3.0 * x + 2.0 * self.c2) * x + self.c1
    }

    /// Characteristic polynomial `det(λI - P)` of
    /// `P = [[a, b, 0], [b, -d, c], [0, c, e]]`.
    pub fn from_params(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<Self> {
        cubic_from_params(a, b, c, d, e)
    }

    pub fn solve(&self) -> Result<ClassifiedRoots> {
        solve_classified(self)
    }
}

pub fn cubic_from_params(a: f64, b: f64, c: f64, d: f64, e: f64) -> Result<CubicPoly> {
    if ![a, b, c, d, e].iter().all(|v| v.is_finite()) {
        return Err(Error::Parameter("cubic parameters must be finite".into()));
    }
    if a <= 0.0 {
        return Err(Error::Parameter(format!("a > 0 violated (a = {a})")));
    }
    if d < 0.0 {
        return Err(Error::Parameter(format!("d >= 0 violated (d = {d})")));
    }
    if e < 0.0 {
        return Err(Error::Parameter(format!("e >= 0 violated (e = {e})")));
    }
    let s1 = d + b * b / a;
    if s1 <= 0.0 {
        return Err(Error::Parameter(format!("s1 = d + b^2/a > 0 violated (s1 = {s1})")));
    }
    let s2 = e + c * c / s1;
    if s2 <= 0.0 {
        return Err(Error::Parameter(format!("s2 = e + c^2/s1 > 0 violated (s2 = {s2})")));
    }
    Ok(CubicPoly {
        c2: d - a - e,
        c1: a * e - a * d - d * e - b * b - c * c,
        c0: a * d * e + a * c * c + b * b * e,
    })
}

/// One Newton step, kept only if it does not increase the residual.
fn polish(poly: &CubicPoly, x: f64) -> f64 {
    let fx = poly.eval(x);
    let dfx = poly.derivative(x);
    if fx == 0.0 || dfx == 0.0 || !dfx.is_finite() {
        return x;
    }
    let y = x - fx / dfx;
    if y.is_finite() && poly.eval(y).abs() <= fx.abs() {
        y
    } else {
        x
    }
}

/// All three real roots in ascending order, by the trigonometric method.
/// Fails when the discriminant says two roots are complex.
pub fn real_roots(poly: &CubicPoly) -> Result<[f64; 3]> {
    let CubicPoly { c2, c1, c0 } = *poly;
    if ![c2, c1, c0].iter().all(|v| v.is_finite()) {
        return Err(Error::Classification("non-finite coefficients".into()));
    }
    // depressed form t³ + p t + q with λ = t - c2/3
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let scale = c2.abs().max(c1.abs().sqrt()).max(c0.abs().cbrt()).max(f64::MIN_POSITIVE);

    let mut roots = if p.abs() <= 1e-14 * scale * scale {
        // triple root (or nearly so)
        let t = -q.cbrt();
        [t, t, t]
    } else {
        if p > 0.0 {
            return Err(Error::Classification(format!(
                "cubic {poly:?} has a single real root (p = {p:e} > 0)"
            )));
        }
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = 3.0 * q / (p * m);
        // |arg| slightly above 1 is round-off at a double root
        if arg.abs() > 1.0 + 1e-8 {
            return Err(Error::Classification(format!(
                "cubic {poly:?} has complex roots (acos argument {arg})"
            )));
        }
        let theta = arg.clamp(-1.0, 1.0).acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        [m * theta.cos(), m * (theta - tau).cos(), m * (theta - 2.0 * tau).cos()]
    };
    for r in roots.iter_mut() {
        *r = polish(poly, *r - shift);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

pub fn solve_classified(poly: &CubicPoly) -> Result<ClassifiedRoots> {
    let [neg, pos_min, pos_max] = real_roots(poly)?;
    if !(neg < 0.0 && pos_min > 0.0) {
        return Err(Error::Classification(format!(
            "roots {neg}, {pos_min}, {pos_max} do not split as one negative and two positive"
        )));
    }
    Ok(ClassifiedRoots {
        neg,
        pos_min,
        pos_max,
    })
}

/// Roots of `λ³ - λ² - 2λ + 1` (parameters `a = b = c = 1`, `d = e = 0`),
/// the universal endpoints of the exactly preconditioned spectrum.
pub fn zeta() -> ClassifiedRoots {
    solve_classified(&CubicPoly::new(-1.0, -2.0, 1.0)).expect("reference cubic has three real roots")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_of_reference_cubics() {
        assert_eq!(cubic_from_params(1.0, 1.0, 1.0, 0.0, 0.0).unwrap(), CubicPoly::new(-1.0, -2.0, 1.0));
        assert_eq!(cubic_from_params(2.0, 1.0, 1.0, 0.0, 0.0).unwrap(), CubicPoly::new(-2.0, -2.0, 2.0));
    }

    #[test]
    fn zeta_values() {
        let z = zeta();
        assert!((z.neg + 1.2470).abs() < 1e-4);
        assert!((z.pos_min - 0.4450).abs() < 1e-4);
        assert!((z.pos_max - 1.8019).abs() < 1e-4);
    }

    #[test]
    fn factored_cubic_is_exact() {
        let r = solve_classified(&CubicPoly::new(-2.0, -1.0, 2.0)).unwrap();
        assert_eq!(r.as_array(), [-1.0, 1.0, 2.0]);
    }

    #[test]
    fn negative_root_of_three_term_cubic() {
        let r = solve_classified(&CubicPoly::new(0.0, -3.0, 1.0)).unwrap();
        assert!((r.neg + 1.8794).abs() < 1e-4);
    }

    #[test]
    fn parameter_errors_name_the_condition() {
        let msg = |r: Result<CubicPoly>| r.unwrap_err().to_string();
        assert!(msg(cubic_from_params(0.0, 1.0, 1.0, 0.0, 0.0)).contains("a > 0"));
        assert!(msg(cubic_from_params(1.0, 1.0, 1.0, -1.0, 0.0)).contains("d >= 0"));
        assert!(msg(cubic_from_params(1.0, 1.0, 1.0, 0.0, -1.0)).contains("e >= 0"));
        assert!(msg(cubic_from_params(1.0, 0.0, 1.0, 0.0, 0.0)).contains("s1"));
        assert!(msg(cubic_from_params(1.0, 1.0, 0.0, 0.0, 0.0)).contains("s2"));
    }

    #[test]
    fn complex_or_wrong_signs_rejected() {
        // λ³ + λ has roots 0, ±i
        assert!(matches!(solve_classified(&CubicPoly::new(0.0, 1.0, 0.0)), Err(Error::Classification(_))));
        // (λ-1)(λ-2)(λ-3): all positive
        assert!(matches!(solve_classified(&CubicPoly::new(-6.0, 11.0, -6.0)), Err(Error::Classification(_))));
    }

    #[test]
    fn double_positive_root() {
        // (λ+1)(λ-1)²
        let r = solve_classified(&CubicPoly::new(-1.0, -1.0, 1.0)).unwrap();
        assert!((r.neg + 1.0).abs() < 1e-12);
        assert!((r.pos_min - 1.0).abs() < 1e-7 && (r.pos_max - 1.0).abs() < 1e-7);
    }
}
