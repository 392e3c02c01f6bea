use super::quadrature::{QuadratureKind, QuadratureRule};
use crate::error::{MzError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    exponents: Vec<usize>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<usize>) -> Self {
        Self { exponents }
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    pub fn order(&self) -> usize {
        self.exponents.iter().sum()
    }
}

/// All multi-indices over `dim` coordinates with total order at most `p`,
/// graded by order; within an order the first coordinate varies slowest,
/// largest exponent first.
pub fn total_degree_set(dim: usize, p: usize) -> Vec<MultiIndex> {
    fn fill(prefix: &mut Vec<usize>, remaining_dims: usize, budget: usize, out: &mut Vec<MultiIndex>) {
        if remaining_dims == 1 {
            prefix.push(budget);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=budget).rev() {
            prefix.push(e);
            fill(prefix, remaining_dims - 1, budget - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    for order in 0..=p {
        fill(&mut Vec::with_capacity(dim), dim, order, &mut out);
    }
    out
}

/// Independent Gaussian product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl GaussianMeasure {
    pub fn new(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(MzError::Measure(format!(
                "{} means but {} variances",
                means.len(),
                variances.len()
            )));
        }
        if means.is_empty() {
            return Err(MzError::Measure("empty measure".into()));
        }
        if let Some((i, v)) = variances.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(MzError::Measure(format!("variance {v} at coordinate {i} is not positive")));
        }
        Ok(Self { means, variances })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn std(&self, i: usize) -> f64 {
        self.variances[i].sqrt()
    }

    /// Marginal over the first `n` coordinates.
    pub fn leading(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dim() {
            return Err(MzError::Measure(format!("cannot restrict {}-dim measure to {n}", self.dim())));
        }
        Self::new(self.means[..n].to_vec(), self.variances[..n].to_vec())
    }

    /// Maps a standard-normal rule onto this measure (`x = mean + σ z`).
    pub fn transform(&self, rule: &QuadratureRule) -> Result<QuadratureRule> {
        match rule.kind() {
            QuadratureKind::GaussHermiteTensor | QuadratureKind::SmolyakGaussHermite => {}
            k => return Err(MzError::Config(format!("{k:?} rule is not a Gaussian rule"))),
        }
        if rule.dim() != self.dim() {
            return Err(MzError::Arity { rule: rule.dim(), function: self.dim() });
        }
        let sig: Vec<f64> = (0..self.dim()).map(|i| self.std(i)).collect();
        let nodes = rule
            .nodes_flat()
            .chunks(rule.dim())
            .flat_map(|z| z.iter().enumerate().map(|(i, z)| self.means[i] + sig[i] * z).collect::<Vec<_>>())
            .collect();
        Ok(QuadratureRule::from_parts(rule.kind(), rule.dim(), nodes, rule.weights().to_vec()))
    }
}

/// Tensor-product Hermite polynomials, orthonormal under a Gaussian measure.
#[derive(Debug, Clone)]
pub struct HermiteBasisSet {
    measure: GaussianMeasure,
    indices: Vec<MultiIndex>,
    max_order: usize,
}

/// Normalized probabilists' Hermite values `He_n(z)/√n!` for `n = 0..=p`.
fn normalized_hermite(p: usize, z: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if p >= 1 {
        out[1] = z;
    }
    for n in 1..p {
        let nf = n as f64;
        out[n + 1] = (z * out[n] - nf.sqrt() * out[n - 1]) / (nf + 1.0).sqrt();
    }
}

impl HermiteBasisSet {
    pub fn new(measure: GaussianMeasure, p: usize) -> Self {
        let indices = total_degree_set(measure.dim(), p);
        Self { measure, indices, max_order: p }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub fn measure(&self) -> &GaussianMeasure {
        &self.measure
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn univariate(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| {
                let z = (x[i] - self.measure.means[i]) / self.measure.std(i);
                let mut h = vec![0.0; self.max_order + 1];
                normalized_hermite(self.max_order, z, &mut h);
                h
            })
            .collect()
    }

    /// `h^ν(x)` for every index in the set; `x` holds at least `dim()` coordinates.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let uni = self.univariate(x);
        for (o, idx) in out.iter_mut().zip(&self.indices) {
            *o = idx.exponents.iter().enumerate().map(|(i, &e)| uni[i][e]).product();
        }
    }

    /// Values plus the gradient `∂h^ν/∂x_i`, stored row-major as `grad[ν * dim + i]`.
    pub fn eval_with_gradient(&self, x: &[f64], vals: &mut [f64], grad: &mut [f64]) {
        let d = self.dim();
        let uni = self.univariate(x);
        // d/dx [He_n(z)/√n!] = √n · He_{n-1}(z)/√(n-1)! / σ
        let duni: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let s = self.measure.std(i);
                (0..=self.max_order)
                    .map(|n| if n == 0 { 0.0 } else { (n as f64).sqrt() * uni[i][n - 1] / s })
                    .collect()
            })
            .collect();
        for (nu, idx) in self.indices.iter().enumerate() {
            let e = &idx.exponents;
            vals[nu] = (0..d).map(|i| uni[i][e[i]]).product();
            for i in 0..d {
                let mut g = duni[i][e[i]];
                for (k, &ek) in e.iter().enumerate() {
                    if k != i {
                        g *= uni[k][ek];
                    }
                }
                grad[nu * d + i] = g;
            }
        }
    }
}
