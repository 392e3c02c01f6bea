use std::io::Write;

use super::legendre::{gauss_legendre, LegendreFamily};
use crate::error::Result;

/// Entries below this magnitude are stored as exact zeros.
const ZERO_CUTOFF: f64 = 1e-14;

/// How the triple product is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleConvention {
    /// `e_{ijk} = E[φ_i φ_j φ_k]`, fully symmetric.
    ENormalized,
    /// `c_{lmr} = E[φ_l φ_m φ_r] / E[φ_r²]`, symmetric in `(l, m)` only.
    CRatio,
}

/// Dense `(M+1)³` triple product tensor with exact zeros where the
/// Legendre selection rule forbids coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleTensor {
    size: usize,
    convention: TripleConvention,
    data: Vec<f64>,
}

/// Dense `(M+1)⁴` quadruple product tensor `E[φ_a φ_b φ_c φ_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTensor {
    size: usize,
    data: Vec<f64>,
}

/// Legendre triple product selection rule: nonzero only when the indices
/// satisfy the triangle inequality and have even sum.
pub fn triple_allowed(l: usize, m: usize, r: usize) -> bool {
    (l + m + r) % 2 == 0 && l + m >= r && l + r >= m && m + r >= l
}

fn clean(v: f64) -> f64 {
    if v.abs() < ZERO_CUTOFF {
        0.0
    } else {
        v
    }
}

/// Values of `φ_n` at quadrature nodes, together with half-weights.
fn tabulate(family: &LegendreFamily, max: usize, npts: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let fam = LegendreFamily::new(max, family.normalization);
    let (x, w) = gauss_legendre(npts);
    let phi = x.iter().map(|&xi| fam.eval_all(xi)).collect();
    (phi, w.iter().map(|w| 0.5 * w).collect())
}

pub fn triple_tensor(family: &LegendreFamily, max: usize, convention: TripleConvention) -> TripleTensor {
    let size = max + 1;
    // exact for degree 3·max
    let npts = (3 * max + 2).div_ceil(2).max(1);
    let (phi, w) = tabulate(family, max, npts);
    let fam = LegendreFamily::new(max, family.normalization);
    let mut data = vec![0.0; size * size * size];
    // integrate sorted index triples once so permuted entries are bitwise equal
    for i in 0..size {
        for j in i..size {
            for k in j..size {
                if !triple_allowed(i, j, k) {
                    continue;
                }
                let mut s = 0.0;
                for (p, wq) in phi.iter().zip(&w) {
                    s += wq * p[i] * p[j] * p[k];
                }
                for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
                    let v = match convention {
                        TripleConvention::ENormalized => s,
                        TripleConvention::CRatio => s / fam.norm_sq(c),
                    };
                    data[(a * size + b) * size + c] = clean(v);
                }
            }
        }
    }
    TripleTensor { size, convention, data }
}

pub fn quad_tensor(family: &LegendreFamily, max: usize) -> QuadTensor {
    let size = max + 1;
    let npts = (4 * max + 2).div_ceil(2).max(1);
    let (phi, w) = tabulate(family, max, npts);
    let mut data = vec![0.0; size.pow(4)];
    for a in 0..size {
        for b in a..size {
            for c in b..size {
                for d in c..size {
                    if (a + b + c + d) % 2 == 1 {
                        continue;
                    }
                    let mut s = 0.0;
                    for (p, wq) in phi.iter().zip(&w) {
                        s += wq * p[a] * p[b] * p[c] * p[d];
                    }
                    let s = clean(s);
                    for perm in permutations4([a, b, c, d]) {
                        data[((perm[0] * size + perm[1]) * size + perm[2]) * size + perm[3]] = s;
                    }
                }
            }
        }
    }
    QuadTensor { size, data }
}

impl TripleTensor {
    /// Number of indices per axis (`M + 1`).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn convention(&self) -> TripleConvention {
        self.convention
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.size + j) * self.size + k]
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let n = self.size;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(idx, &v)| (idx / (n * n), (idx / n) % n, idx % n, v))
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// CSV with header `i,j,k,value`, one row per nonzero entry.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "k", "value"])?;
        for (i, j, k, v) in self.nonzeros() {
            out.write_record([i.to_string(), j.to_string(), k.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl QuadTensor {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.size;
        self.data[((a * n + b) * n + c) * n + d]
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// CSV with header `i,j,k,l,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.size;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "k", "l", "value"])?;
        for (idx, &v) in self.data.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (a, b, c, d) = (idx / (n * n * n), (idx / (n * n)) % n, (idx / n) % n, idx % n);
            out.write_record([
                a.to_string(),
                b.to_string(),
                c.to_string(),
                d.to_string(),
                v.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn permutations4(v: [usize; 4]) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    if i != j && i != k && i != l && j != k && j != l && k != l {
                        out.push([v[i], v[j], v[k], v[l]]);
                    }
                }
            }
        }
    }
    out
}
