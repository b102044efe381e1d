//! Small numerical solvers: bracketed root finding, box-constrained
//! Nelder–Mead, box-constrained Levenberg–Marquardt, and Halton points for
//! spreading multi-start seeds.

use crate::error::{Error, Result};

/// Finds a root of `f` in `[lo, hi]` by the Illinois variant of regula falsi.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them be zero).
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::numerical(
            "find_root",
            format!("no sign change on [{lo}, {hi}]: f = {fa:e}, {fb:e}"),
        ));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        // Fall back to bisection if the secant step left the bracket.
        let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
        let fc = f(c)?;
        if fc == 0.0 || (b - a).abs() < xtol {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < xtol {
            return Ok(0.5 * (a + b));
        }
    }
    Err(Error::numerical(
        "find_root",
        format!("bracket [{a}, {b}] did not shrink below {xtol:e}"),
    ))
}

/// Axis-aligned box `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Argument("bounds need equal, non-zero lengths".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Argument(format!("inverted bounds {lower:?} / {upper:?}")));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, t)| self.lower[i] + t * self.width(i))
            .collect()
    }

    pub fn on_boundary(&self, x: &[f64], rel_tol: f64) -> bool {
        x.iter().enumerate().any(|(i, &v)| {
            let tol = rel_tol * self.width(i).max(f64::MIN_POSITIVE);
            (v - self.lower[i]).abs() <= tol || (self.upper[i] - v).abs() <= tol
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 2000,
            diameter_tol: 1e-9,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Nelder–Mead simplex search in which every trial vertex is clamped into
/// `bounds`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut start = x0.to_vec();
    bounds.clamp(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(&start);
    simplex.push((start.clone(), v0));
    for i in 0..n {
        let mut p = start.clone();
        let step = opts.initial_step * bounds.width(i);
        // Step away from whichever face is nearer so the vertex stays distinct.
        if p[i] + step <= bounds.upper[i] {
            p[i] += step;
        } else {
            p[i] -= step;
        }
        bounds.clamp(&mut p);
        let v = eval(&p);
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| distance(p, &simplex[0].0))
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            bounds.clamp(&mut p);
            p
        };

        let reflected = along(1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let p = along(0.5);
            let v = eval(&p);
            (p, v)
        } else {
            let p = along(-0.5);
            let v = eval(&p);
            (p, v)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            bounds.clamp(&mut p);
            let v = eval(&p);
            *vertex = (p, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the sum of squared residuals drops below this.
    pub cost_tol: f64,
    /// Stop when a step changes no coordinate by more than this (relative).
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            cost_tol: 1e-26,
            step_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmSolution {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solves `A x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. `a` is row-major `n × n`.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (t, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *t -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Levenberg–Marquardt least squares with a forward-difference Jacobian and
/// iterates clamped into `bounds`.
pub fn levenberg_marquardt<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &LmOptions) -> Result<LmSolution>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut r = f(&x)?;
    let mut cost = cost_of(&r);
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iterations && cost > opts.cost_tol {
        iterations += 1;
        let m = r.len();
        let mut jac = vec![vec![0.0; n]; m];
        for j in 0..n {
            let mut h = 1e-7 * x[j].abs().max(1e-2);
            let mut xp = x.clone();
            if xp[j] + h > bounds.upper[j] {
                h = -h;
            }
            xp[j] += h;
            let rp = f(&xp)?;
            for i in 0..m {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..n {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for (a, row) in damped.iter_mut().enumerate() {
                row[a] += mu * jtj[a][a].max(1e-12);
            }
            let Some(delta) = solve_dense(damped, jtr.iter().map(|v| -v).collect()) else {
                mu *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            bounds.clamp(&mut trial);
            let step = trial
                .iter()
                .zip(&x)
                .map(|(t, v)| (t - v).abs() / v.abs().max(1.0))
                .fold(0.0, f64::max);
            let trial_r = match f(&trial) {
                Ok(v) => v,
                Err(_) => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial_cost = cost_of(&trial_r);
            if trial_cost < cost {
                x = trial;
                r = trial_r;
                cost = trial_cost;
                mu = (mu / 3.0).max(1e-12);
                improved = step > opts.step_tol;
                break;
            }
            mu *= 4.0;
            if step <= opts.step_tol {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(LmSolution {
        x,
        residuals: r,
        cost,
        iterations,
    })
}

/// `index`-th element (1-based works best) of the van der Corput sequence in
/// `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut value = 0.0;
    while index > 0 {
        f /= base as f64;
        value += f * (index % base) as f64;
        index /= base;
    }
    value
}

/// The first `count` Halton points in `dim` dimensions (bases 2, 3, 5, ...),
/// starting at index 1.
pub fn halton_points(count: usize, dim: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    assert!(dim <= PRIMES.len(), "halton_points supports up to 8 dimensions");
    (1..=count as u64)
        .map(|i| PRIMES[..dim].iter().map(|&p| halton(i, p)).collect())
        .collect()
}
