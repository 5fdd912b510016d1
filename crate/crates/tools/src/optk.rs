//! Search for the reciprocal-seed constants minimising the integrated squared
//! relative error e²(k1, k2) = ∫ (x·f(x) − 1)² dx over [1/2, 1], where f is the
//! cubic seed polynomial.

/// Absolute tolerance of the quadrature.
pub const QUAD_TOL: f64 = 1e-12;
/// Simplex size at which the local search stops.
pub const PARAM_TOL: f64 = 1e-10;
pub const START: (f64, f64) = (1.5, 1.0);
const MAX_ITERATIONS: usize = 20_000;
const MAX_DEPTH: u32 = 48;

/// Seed polynomial 4k1k2 − 4(k1² + k2)x + 8k1x² − 4x³.
pub fn seed(x: f64, k1: f64, k2: f64) -> f64 {
    4.0 * k1 * k2 - 4.0 * (k1 * k1 + k2) * x + 8.0 * k1 * x * x - 4.0 * x * x * x
}

/// Relative error of the seed against 1/x.
pub fn relative_error(x: f64, k1: f64, k2: f64) -> f64 {
    x * seed(x, k1, k2) - 1.0
}

/// Adaptive Simpson integration of `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

pub fn squared_error(k1: f64, k2: f64) -> f64 {
    integrate(|x| relative_error(x, k1, k2).powi(2), 0.5, 1.0, QUAD_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub point: [f64; 2],
    pub value: f64,
    pub iterations: usize,
}

/// Nelder–Mead with standard coefficients; stops once every vertex lies within
/// `xtol` of the best one (max-norm) or after `max_iter` iterations.
pub fn nelder_mead(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], step: f64, xtol: f64, max_iter: usize) -> Minimum {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut values = simplex.map(&f);
    let mut iterations = 0;
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while iterations < max_iter {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let spread = simplex[1..]
            .iter()
            .map(|v| (v[0] - simplex[0][0]).abs().max((v[1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if spread < xtol {
            break;
        }
        iterations += 1;
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            (simplex[2], values[2]) = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < values[1] {
            (simplex[2], values[2]) = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < values[2] {
                let c = lerp(centroid, reflected, 0.5);
                (c, f(c))
            } else {
                let c = lerp(centroid, simplex[2], 0.5);
                (c, f(c))
            };
            if fc < values[2].min(fr) {
                (simplex[2], values[2]) = (contracted, fc);
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap_or(0);
    Minimum { point: simplex[best], value: values[best], iterations }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptkReport {
    pub k1: f64,
    pub k2: f64,
    pub squared_error: f64,
    pub start_squared_error: f64,
    pub iterations: usize,
    /// e² at caller-supplied comparison constants and the relative improvement in percent.
    pub baseline: Option<Baseline>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baseline {
    pub k1: f64,
    pub k2: f64,
    pub squared_error: f64,
    pub improvement_percent: f64,
}

pub fn optimize(baseline: Option<(f64, f64)>) -> OptkReport {
    let m = nelder_mead(|k| squared_error(k[0], k[1]), [START.0, START.1], 0.05, PARAM_TOL, MAX_ITERATIONS);
    let baseline = baseline.map(|(k1, k2)| {
        let e = squared_error(k1, k2);
        Baseline { k1, k2, squared_error: e, improvement_percent: 100.0 * (e - m.value) / e }
    });
    OptkReport {
        k1: m.point[0],
        k2: m.point[1],
        squared_error: m.value,
        start_squared_error: squared_error(START.0, START.1),
        iterations: m.iterations,
        baseline,
    }
}

impl std::fmt::Display for OptkReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "k1 = {:.16}", self.k1)?;
        writeln!(f, "k2 = {:.16}", self.k2)?;
        writeln!(f, "e2(k1, k2) = {:.12e}", self.squared_error)?;
        writeln!(f, "e2 at start ({}, {}) = {:.12e}", START.0, START.1, self.start_squared_error)?;
        writeln!(f, "iterations = {}", self.iterations)?;
        if let Some(b) = &self.baseline {
            writeln!(
                f,
                "baseline ({}, {}): e2 = {:.12e}, improvement {:.1}%",
                b.k1, b.k2, b.squared_error, b.improvement_percent
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, 0.5, 1.0, 1e-13);
        let exact = (1.0 - 0.5f64.powi(8)) / 8.0 - (1.0 - 0.125);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let m = nelder_mead(|p| (p[0] - 0.3).powi(2) + 10.0 * (p[1] + 2.0).powi(2), [0.0, 0.0], 0.1, 1e-10, 10_000);
        assert!((m.point[0] - 0.3).abs() < 1e-9 && (m.point[1] + 2.0).abs() < 1e-9, "{m:?}");
    }
}
