//! One-dimensional quadrature rules used throughout the crate.
//!
//! Gauss–Legendre rules are generated by Newton iteration on the Legendre
//! recurrence and cached per order. The adaptive integrator is a
//! Gauss–Kronrod (7, 15) pair with recursive bisection, vector valued so
//! that several integrands sharing one expensive evaluation can be
//! integrated together.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Cached rule of order `n`.
    pub fn of_order(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of [`integrate_adaptive`].
#[derive(Debug, Clone)]
pub struct AdaptiveResult {
    pub values: Vec<f64>,
    /// Estimated absolute error, max-norm over components.
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Adaptive Gauss–Kronrod integration of a vector-valued integrand over
/// `[a, b]`. `f(t, out)` must overwrite all `dim` entries of `out`.
/// Subdivision stops when the summed error estimate falls below
/// `abs_tol`, or after `max_depth` bisections of any interval.
pub fn integrate_adaptive<F>(f: &F, dim: usize, a: f64, b: f64, abs_tol: f64, max_depth: u32) -> AdaptiveResult
where
    F: Fn(f64, &mut [f64]),
{
    let mut values = vec![0.0; dim];
    let mut error = 0.0;
    let mut evaluations = 0;
    let mut converged = true;
    let mut stack = vec![(a, b, 0u32, abs_tol)];
    let mut scratch = Scratch::new(dim);
    while let Some((lo, hi, depth, tol)) = stack.pop() {
        let err = kronrod_15(f, lo, hi, &mut scratch);
        evaluations += 15;
        if err <= tol || depth >= max_depth || (hi - lo).abs() < 1e-14 * (b - a).abs() {
            if err > tol {
                converged = false;
            }
            for (v, k) in values.iter_mut().zip(&scratch.kronrod) {
                *v += k;
            }
            error += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1, 0.5 * tol));
            stack.push((lo, mid, depth + 1, 0.5 * tol));
        }
    }
    AdaptiveResult {
        values,
        error,
        evaluations,
        converged,
    }
}

struct Scratch {
    buf: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            buf: vec![0.0; dim],
            kronrod: vec![0.0; dim],
            gauss: vec![0.0; dim],
        }
    }
}

fn kronrod_15<F>(f: &F, a: f64, b: f64, s: &mut Scratch) -> f64
where
    F: Fn(f64, &mut [f64]),
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    s.kronrod.iter_mut().for_each(|v| *v = 0.0);
    s.gauss.iter_mut().for_each(|v| *v = 0.0);
    f(mid, &mut s.buf);
    for d in 0..s.buf.len() {
        s.kronrod[d] += WGK[7] * s.buf[d];
        s.gauss[d] += WG[3] * s.buf[d];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        for t in [mid - dx, mid + dx] {
            f(t, &mut s.buf);
            for d in 0..s.buf.len() {
                s.kronrod[d] += WGK[j] * s.buf[d];
                if j % 2 == 1 {
                    s.gauss[d] += WG[j / 2] * s.buf[d];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..s.kronrod.len() {
        s.kronrod[d] *= half;
        s.gauss[d] *= half;
        err = err.max((s.kronrod[d] - s.gauss[d]).abs());
    }
    err
}
