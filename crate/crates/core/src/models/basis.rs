use rand::Rng;
use rand_distr::StandardNormal;

use crate::group::FiniteGroup;
use crate::spectral::circulant_from_filter;

/// Fixed matrices `B_0..B_{|G|-1}` (each `|G| x |G|`) whose learned linear
/// combination forms a weight-shared first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SharingBasis {
    order: usize,
    /// `data[(k * n + row) * n + col] = B_k[row][col]`
    data: Vec<f64>,
    circulant: bool,
}

impl SharingBasis {
    /// `B_k = circulant(delta_k)`; reproduces group convolution exactly.
    pub fn circulant(group: &FiniteGroup) -> Self {
        let n = group.order();
        let mut data = Vec::with_capacity(n * n * n);
        for k in 0..n {
            let mut delta = vec![0.0; n];
            delta[k] = 1.0;
            data.extend(circulant_from_filter(group, &delta).expect("length matches"));
        }
        SharingBasis {
            order: n,
            data,
            circulant: true,
        }
    }

    /// Takes `|G|` dense row-major matrices laid out back to back.
    pub fn from_dense(order: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == order * order * order && data.iter().all(|v| v.is_finite())).then_some(
            SharingBasis {
                order,
                data,
                circulant: false,
            },
        )
    }

    /// For every row index `l` the rows `{b_{k,l}}_k` form a random
    /// orthonormal basis of `R^{|G|}`.
    pub fn random_orthonormal_rows<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Self {
        let n = order;
        let mut data = vec![0.0; n * n * n];
        for l in 0..n {
            let q = random_orthogonal(n, rng);
            for k in 0..n {
                data[(k * n + l) * n..(k * n + l + 1) * n].copy_from_slice(&q[k * n..(k + 1) * n]);
            }
        }
        SharingBasis {
            order,
            data,
            circulant: false,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_circulant(&self) -> bool {
        self.circulant
    }

    pub fn matrix(&self, k: usize) -> &[f64] {
        let n = self.order;
        &self.data[k * n * n..(k + 1) * n * n]
    }

    /// Row `l` of `B_k`.
    pub fn row(&self, k: usize, l: usize) -> &[f64] {
        let n = self.order;
        &self.data[(k * n + l) * n..(k * n + l + 1) * n]
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// `sum_k coeffs[k] B_k`, row-major.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let nn = self.order * self.order;
        let mut out = vec![0.0; nn];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &b) in out.iter_mut().zip(&self.data[k * nn..(k + 1) * nn]) {
                *o += c * b;
            }
        }
        out
    }
}

/// Gaussian matrix orthonormalized row by row (modified Gram-Schmidt).
pub(crate) fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut q: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        let mut ok = true;
        for i in 0..n {
            for j in 0..i {
                let dot: f64 = (0..n).map(|t| q[i * n + t] * q[j * n + t]).sum();
                for t in 0..n {
                    q[i * n + t] -= dot * q[j * n + t];
                }
            }
            let norm = (0..n).map(|t| q[i * n + t].powi(2)).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for t in 0..n {
                q[i * n + t] /= norm;
            }
        }
        if ok {
            return q;
        }
    }
}
