use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use super::legendre::gauss_legendre;
use crate::error::{MzError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Tensor Gauss-Legendre on `[-1, 1]^d` (unit weight, mass `2^d`).
    GaussLegendre,
    /// Tensor Gauss-Hermite under the standard normal (mass 1).
    GaussHermiteTensor,
    /// Smolyak combination of univariate Gauss-Hermite rules.
    SmolyakGaussHermite,
}

impl FromStr for QuadratureKind {
    type Err = MzError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss-legendre" => Ok(Self::GaussLegendre),
            "gauss-hermite-tensor" | "tensor" => Ok(Self::GaussHermiteTensor),
            "smolyak-gauss-hermite" | "smolyak" => Ok(Self::SmolyakGaussHermite),
            other => Err(MzError::Config(format!("unsupported quadrature kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub(crate) fn from_parts(kind: QuadratureKind, dim: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(nodes.len(), dim * weights.len());
        Self { kind, dim, nodes, weights }
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, q: usize) -> &[f64] {
        &self.nodes[q * self.dim..(q + 1) * self.dim]
    }

    pub fn nodes_flat(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|q| self.weights[q] * f(self.node(q))).sum()
    }
}

/// Probabilists' Gauss-Hermite rule for the standard normal density:
/// nodes ascending and exactly symmetric, weights summing to one.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut x: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut h = vec![0.0; n + 1];
    let hermite = |z: f64, h: &mut [f64]| {
        h[0] = 1.0;
        h[1] = z;
        for k in 1..n {
            let kf = k as f64;
            h[k + 1] = (z * h[k] - kf.sqrt() * h[k - 1]) / (kf + 1.0).sqrt();
        }
    };
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = x[i];
        for _ in 0..4 {
            hermite(z, &mut h);
            let step = h[n] / ((n as f64).sqrt() * h[n - 1]);
            z -= step;
            if step.abs() < 1e-16 * (1.0 + z.abs()) {
                break;
            }
        }
        hermite(z, &mut h);
        x[i] = z;
        w[i] = 1.0 / (n as f64 * h[n - 1] * h[n - 1]);
    }
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let xm = 0.5 * (x[j] - x[i]);
        let wm = 0.5 * (w[i] + w[j]);
        x[i] = -xm;
        x[j] = xm;
        w[i] = wm;
        w[j] = wm;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn tensor(kind: QuadratureKind, dim: usize, x: &[f64], w: &[f64]) -> QuadratureRule {
    let n = x.len();
    let total = n.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut wt = 1.0;
        for &i in &idx {
            nodes.push(x[i]);
            wt *= w[i];
        }
        weights.push(wt);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
    QuadratureRule::from_parts(kind, dim, nodes, weights)
}

/// Univariate growth of the Smolyak construction: level `l` uses `2l + 1`
/// Gauss-Hermite points, so consecutive levels share the centre node.
fn smolyak_points(level: usize) -> usize {
    2 * level + 1
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn smolyak(dim: usize, level: usize) -> QuadratureRule {
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..=level).map(|l| gauss_hermite(smolyak_points(l))).collect();
    let mut acc: BTreeMap<Vec<u64>, f64> = BTreeMap::new();

    // multi-indices l ∈ N^dim with max(0, level-dim+1) ≤ |l| ≤ level
    let mut l = vec![0usize; dim];
    loop {
        let s: usize = l.iter().sum();
        if s <= level && level - s < dim {
            let j = level - s;
            let coef = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(dim - 1, j);
            let sizes: Vec<usize> = l.iter().map(|&li| rules[li].0.len()).collect();
            let total: usize = sizes.iter().product();
            let mut idx = vec![0usize; dim];
            for _ in 0..total {
                let mut key = Vec::with_capacity(dim);
                let mut wt = coef;
                for d in 0..dim {
                    let (x, w) = &rules[l[d]];
                    // +0.0 normalizes -0.0
                    key.push(order_key(x[idx[d]] + 0.0));
                    wt *= w[idx[d]];
                }
                *acc.entry(key).or_insert(0.0) += wt;
                for d in (0..dim).rev() {
                    idx[d] += 1;
                    if idx[d] < sizes[d] {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        }
        // next multi-index with |l| ≤ level
        let mut d = dim;
        loop {
            if d == 0 {
                let mut nodes = Vec::with_capacity(acc.len() * dim);
                let mut weights = Vec::with_capacity(acc.len());
                for (key, w) in acc {
                    if w == 0.0 {
                        continue;
                    }
                    nodes.extend(key.iter().map(|&k| from_order_key(k)));
                    weights.push(w);
                }
                return QuadratureRule::from_parts(QuadratureKind::SmolyakGaussHermite, dim, nodes, weights);
            }
            d -= 1;
            l[d] += 1;
            if l.iter().sum::<usize>() <= level {
                break;
            }
            l[d] = 0;
        }
    }
}

/// Monotone bit mapping so that the BTreeMap iterates nodes in numeric order.
fn order_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_order_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// Builds a rule. `level_or_points` is the points per dimension for the
/// tensor kinds and the Smolyak level otherwise.
pub fn quadrature(kind: QuadratureKind, dim: usize, level_or_points: usize) -> Result<QuadratureRule> {
    if dim == 0 {
        return Err(MzError::Config("quadrature dimension must be at least 1".into()));
    }
    if level_or_points == 0 {
        return Err(MzError::Config("quadrature level/points must be at least 1".into()));
    }
    Ok(match kind {
        QuadratureKind::GaussLegendre => {
            let (x, w) = gauss_legendre(level_or_points);
            tensor(kind, dim, &x, &w)
        }
        QuadratureKind::GaussHermiteTensor => {
            let (x, w) = gauss_hermite(level_or_points);
            tensor(kind, dim, &x, &w)
        }
        QuadratureKind::SmolyakGaussHermite => smolyak(dim, level_or_points),
    })
}

/// `Σ_q w_q f(x_q) g(x_q)`; `arity` is the number of coordinates `f` and `g` read.
pub fn inner_product(
    rule: &QuadratureRule,
    arity: usize,
    f: impl Fn(&[f64]) -> f64,
    g: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if arity != rule.dim() {
        return Err(MzError::Arity { rule: rule.dim(), function: arity });
    }
    Ok(rule.integrate(|x| f(x) * g(x)))
}
