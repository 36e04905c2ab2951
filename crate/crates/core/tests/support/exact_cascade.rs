//! Event-tree enumeration of the trigger cascade in exact rational
//! arithmetic. Written independently of the library's float code.

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Terminal surviving sets (labels of the original states) with their
/// exact probabilities. `couplings` must be symmetric with zero diagonal.
pub fn exact_cascade(couplings: &[Vec<Q>], weights: &[Q]) -> BTreeMap<Vec<usize>, Q> {
    let labels: Vec<usize> = (0..weights.len()).collect();
    let mut out = BTreeMap::new();
    expand(couplings, weights, &labels, &Q::one(), &mut out);
    out
}

fn expand(e: &[Vec<Q>], w: &[Q], labels: &[usize], scale: &Q, out: &mut BTreeMap<Vec<usize>, Q>) {
    let n = w.len();
    let mut total = Q::zero();
    for i in 0..n {
        for j in 0..n {
            total += &e[i][j] * &w[j];
        }
    }
    if total.is_zero() {
        *out.entry(labels.to_vec()).or_insert_with(Q::zero) += scale;
        return;
    }
    for i in 0..n {
        for j in 0..n {
            let rate = &e[i][j] * &w[j];
            if rate.is_zero() {
                continue;
            }
            let p = scale * &rate / &total;
            // Survivors: the target and everything uncoupled from it.
            let keep: Vec<usize> = (0..n).filter(|&m| m == j || e[m][j].is_zero()).collect();
            let mut nw: Vec<Q> = keep.iter().map(|&m| w[m].clone()).collect();
            let jpos = keep.iter().position(|&m| m == j).unwrap();
            for k in 0..n {
                if k != i && k != j && !e[k][j].is_zero() {
                    nw[jpos] += &w[k];
                }
            }
            let shares: Vec<Q> = keep.iter().map(|&m| &e[i][m] * &w[m]).collect();
            let share_total: Q = shares.iter().fold(Q::zero(), |a, b| a + b);
            for (x, s) in nw.iter_mut().zip(&shares) {
                *x += &w[i] * s / &share_total;
            }
            let sum: Q = nw.iter().fold(Q::zero(), |a, b| a + b);
            let nw: Vec<Q> = nw.into_iter().map(|x| x / &sum).collect();
            let sub: Vec<Vec<Q>> = keep.iter().map(|&a| keep.iter().map(|&b| e[a][b].clone()).collect()).collect();
            let sub_labels: Vec<usize> = keep.iter().map(|&m| labels[m]).collect();
            let coupled = keep.len() > 1 && sub.iter().flatten().any(|x| !x.is_zero());
            if coupled {
                expand(&sub, &nw, &sub_labels, &p, out);
            } else {
                *out.entry(sub_labels).or_insert_with(Q::zero) += p;
            }
        }
    }
}

pub fn to_f64(x: &Q) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap()
}
