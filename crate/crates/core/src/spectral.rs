//! Harmonic analysis on finite abelian groups.
//!
//! The unitary transform is `F[k][p] = psi_k(p) / sqrt(|G|)` where, on `C_N`,
//! `psi_k(p) = exp(-2 pi i k p / N)`. Products use products of characters and
//! the abelian dihedral groups `D_1`, `D_2` use sign characters.
//!
//! Group convolution in this crate is a cross-correlation, so the circulant
//! `W` with `W x = w * x` satisfies `W = F^* diag(lambda) F` with
//! `lambda = sqrt(|G|) * conj(F) w` (note the conjugate). Consequently
//! `sum_k |lambda_k|^2 = |G| * |w|^2`.

use num_complex::Complex64;
use thiserror::Error;

use crate::group::{FiniteGroup, GroupKind, GroupRef};

/// Default magnitude below which a coefficient counts as zero.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("abelian-only operation requested on non-abelian group {0}")]
    NotAbelian(String),
    #[error("no character table available for group {0}")]
    Unsupported(String),
    #[error("length mismatch: expected {expected}, found {found}")]
    Length { expected: usize, found: usize },
    #[error("filter is zero above tolerance {0}")]
    ZeroFilter(f64),
}

#[derive(Debug, Clone)]
pub struct FourierBasis {
    group: GroupRef,
    /// Row-major `|G| x |G|`, row `k` = normalized character `psi_k`.
    f: Vec<Complex64>,
    /// `conj_index[k]` is the frequency whose character is `conj(psi_k)`.
    conj_index: Vec<usize>,
}

fn characters(kind: &GroupKind, order: usize) -> Option<Vec<Vec<Complex64>>> {
    match kind {
        GroupKind::Cyclic(n) => {
            let n = *n;
            Some(
                (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|p| {
                                let angle =
                                    -2.0 * std::f64::consts::PI * ((k * p) % n) as f64 / n as f64;
                                Complex64::from_polar(1.0, angle)
                            })
                            .collect()
                    })
                    .collect(),
            )
        }
        GroupKind::Dihedral(n) if *n <= 2 => {
            let n = *n;
            let sign = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
            // psi_{a,b}(s^f r^i) = (-1)^{a f} (-1)^{b i}
            Some(
                (0..2 * n)
                    .map(|k| {
                        let (a, b) = (k / n, k % n);
                        (0..2 * n)
                            .map(|e| {
                                let (f, i) = (e / n, e % n);
                                Complex64::new(sign(a * f) * sign(b * i), 0.0)
                            })
                            .collect()
                    })
                    .collect(),
            )
        }
        GroupKind::Product(a, b) => {
            let na = kind_order(a)?;
            let nb = kind_order(b)?;
            debug_assert_eq!(na * nb, order);
            let ca = characters(a, na)?;
            let cb = characters(b, nb)?;
            Some(
                (0..order)
                    .map(|k| {
                        (0..order)
                            .map(|p| ca[k / nb][p / nb] * cb[k % nb][p % nb])
                            .collect()
                    })
                    .collect(),
            )
        }
        _ => None,
    }
}

fn kind_order(kind: &GroupKind) -> Option<usize> {
    match kind {
        GroupKind::Cyclic(n) => Some(*n),
        GroupKind::Dihedral(n) => Some(2 * n),
        GroupKind::Product(a, b) => Some(kind_order(a)? * kind_order(b)?),
        GroupKind::Table(_) => None,
    }
}

impl FourierBasis {
    pub fn new(group: GroupRef) -> Result<Self, SpectralError> {
        if !group.is_abelian() {
            return Err(SpectralError::NotAbelian(group.spec_string()));
        }
        let n = group.order();
        let chars = characters(group.kind(), n)
            .ok_or_else(|| SpectralError::Unsupported(group.spec_string()))?;
        let scale = 1.0 / (n as f64).sqrt();
        let f: Vec<Complex64> = chars.iter().flatten().map(|c| c * scale).collect();
        let conj_index = (0..n)
            .map(|k| {
                (0..n)
                    .find(|&j| (0..n).all(|p| (chars[j][p] - chars[k][p].conj()).norm() < 1e-9))
                    .expect("character group is closed under conjugation")
            })
            .collect();
        Ok(FourierBasis {
            group,
            f,
            conj_index,
        })
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    /// Normalized transform matrix entry `F[k][p]`.
    #[inline]
    pub fn entry(&self, k: usize, p: usize) -> Complex64 {
        self.f[k * self.order() + p]
    }

    /// Unnormalized character value `psi_k(p)`.
    pub fn character(&self, k: usize, p: usize) -> Complex64 {
        self.entry(k, p) * (self.order() as f64).sqrt()
    }

    pub fn conj_index(&self, k: usize) -> usize {
        self.conj_index[k]
    }

    fn check_len(&self, len: usize) -> Result<(), SpectralError> {
        if len == self.order() {
            Ok(())
        } else {
            Err(SpectralError::Length {
                expected: self.order(),
                found: len,
            })
        }
    }

    /// `x_hat = F x`.
    pub fn fourier(&self, x: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check_len(x.len())?;
        let n = self.order();
        Ok((0..n)
            .map(|k| {
                self.f[k * n..(k + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn fourier_real(&self, x: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check_len(x.len())?;
        Ok(self.fourier_real_unchecked(x))
    }

    pub(crate) fn fourier_real_unchecked(&self, x: &[f64]) -> Vec<Complex64> {
        let n = self.order();
        (0..n)
            .map(|k| {
                self.f[k * n..(k + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `x = F^* x_hat`.
    pub fn inverse(&self, xh: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check_len(xh.len())?;
        Ok(self.inverse_unchecked(xh))
    }

    pub(crate) fn inverse_unchecked(&self, xh: &[Complex64]) -> Vec<Complex64> {
        let n = self.order();
        (0..n)
            .map(|p| (0..n).map(|k| self.f[k * n + p].conj() * xh[k]).sum())
            .collect()
    }

    /// Eigenvalues of the circulant of `w`: `lambda = sqrt(|G|) conj(F) w`.
    pub fn diagonalize_circulant(&self, w: &[f64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check_len(w.len())?;
        let n = self.order();
        let s = (n as f64).sqrt();
        Ok((0..n)
            .map(|k| {
                self.f[k * n..(k + 1) * n]
                    .iter()
                    .zip(w)
                    .map(|(a, &b)| a.conj() * b)
                    .sum::<Complex64>()
                    * s
            })
            .collect())
    }

    /// Inverse of [`Self::diagonalize_circulant`]: `w = F^T lambda / sqrt(|G|)`.
    ///
    /// The imaginary part vanishes exactly in exact arithmetic when `lambda`
    /// is hermitian; it is returned so callers can check the residue.
    pub fn filter_from_eigenvalues(&self, lambda: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check_len(lambda.len())?;
        let n = self.order();
        let s = 1.0 / (n as f64).sqrt();
        Ok((0..n)
            .map(|p| (0..n).map(|k| self.f[k * n + p] * lambda[k]).sum::<Complex64>() * s)
            .collect())
    }

    /// `F^* diag(lambda) F` as a dense complex matrix.
    pub fn reconstruct(&self, lambda: &[Complex64]) -> Result<Vec<Complex64>, SpectralError> {
        self.check_len(lambda.len())?;
        let n = self.order();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = (0..n)
                    .map(|k| self.f[k * n + r].conj() * lambda[k] * self.f[k * n + c])
                    .sum();
            }
        }
        Ok(out)
    }

    /// Whether `coeffs[conj(k)] = conj(coeffs[k])` for all `k`.
    pub fn is_hermitian(&self, coeffs: &[Complex64], tol: f64) -> bool {
        coeffs.len() == self.order()
            && (0..self.order()).all(|k| (coeffs[self.conj_index[k]] - coeffs[k].conj()).norm() <= tol)
    }

    /// Nearest hermitian vector: averages each pair `(k, conj(k))`.
    pub fn hermitian_part(&self, coeffs: &mut [Complex64]) {
        for k in 0..self.order() {
            let j = self.conj_index[k];
            if j < k {
                continue;
            }
            let avg = (coeffs[k] + coeffs[j].conj()) * 0.5;
            coeffs[k] = avg;
            coeffs[j] = avg.conj();
        }
    }

    /// Spatial and spectral support sizes of a filter.
    pub fn uncertainty_check(&self, w: &[f64], tol: f64) -> Result<UncertaintyReport, SpectralError> {
        self.check_len(w.len())?;
        let spatial = support_size(w.iter().copied(), tol);
        if spatial == 0 {
            return Err(SpectralError::ZeroFilter(tol));
        }
        let spectral = support_size(self.fourier_real_unchecked(w).iter().map(|c| c.norm()), tol);
        let product = spatial * spectral;
        Ok(UncertaintyReport {
            spatial,
            spectral,
            product,
            holds: product >= self.order(),
        })
    }
}

/// A filter in the frequency domain, one coefficient per character.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    pub coeffs: Vec<Complex64>,
    pub hermitian: bool,
}

impl SpectralFilter {
    /// The spectral form of a real spatial filter; always hermitian.
    pub fn from_spatial(basis: &FourierBasis, w: &[f64]) -> Result<Self, SpectralError> {
        Ok(SpectralFilter {
            coeffs: basis.diagonalize_circulant(w)?,
            hermitian: true,
        })
    }

    pub fn to_spatial(&self, basis: &FourierBasis) -> Result<Vec<f64>, SpectralError> {
        Ok(basis
            .filter_from_eigenvalues(&self.coeffs)?
            .into_iter()
            .map(|c| c.re)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UncertaintyReport {
    pub spatial: usize,
    pub spectral: usize,
    pub product: usize,
    pub holds: bool,
}

/// Number of entries with magnitude strictly above `tol`.
pub fn support_size(values: impl IntoIterator<Item = f64>, tol: f64) -> usize {
    values.into_iter().filter(|v| v.abs() > tol).count()
}

/// Dense `W` with `W x = w * x`: `W[g][h] = w(g^{-1} h)`.
pub fn circulant_from_filter(group: &FiniteGroup, w: &[f64]) -> Result<Vec<f64>, SpectralError> {
    let n = group.order();
    if w.len() != n {
        return Err(SpectralError::Length {
            expected: n,
            found: w.len(),
        });
    }
    let mut out = vec![0.0; n * n];
    for g in 0..n {
        let gi = group.inv(g);
        for h in 0..n {
            out[g * n + h] = w[group.mul(gi, h)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(spec: &str) -> FourierBasis {
        FourierBasis::new(parse_group(spec).unwrap()).unwrap()
    }

    fn re(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn c2_transform_example() {
        let b = basis("c2");
        let xh = b.fourier_real(&[3.0, 1.0]).unwrap();
        let s2 = 2f64.sqrt();
        assert!((xh[0] - Complex64::new(2.0 * s2, 0.0)).norm() < 1e-14);
        assert!((xh[1] - Complex64::new(s2, 0.0)).norm() < 1e-14);
        assert!(b.fourier_real(&[0.0, 0.0]).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn non_abelian_rejected() {
        let err = FourierBasis::new(parse_group("d3").unwrap()).unwrap_err();
        assert!(matches!(err, SpectralError::NotAbelian(_)));
    }

    #[test]
    fn cyclic_entries_match_formula() {
        let b = basis("c8");
        let e = b.entry(3, 5);
        let angle = -2.0 * std::f64::consts::PI * 15.0 / 8.0;
        assert!((e - Complex64::from_polar(1.0 / 8f64.sqrt(), angle)).norm() < 1e-14);
        for p in 0..8 {
            assert!((b.entry(0, p).re - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn characters_are_homomorphisms() {
        for spec in ["c1", "c5", "c8", "d1", "d2", "c2xc4", "c4xc4", "d2xc3"] {
            let b = basis(spec);
            let g = b.group().clone();
            let n = g.order();
            for k in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        let lhs = b.character(k, g.mul(p, q));
                        let rhs = b.character(k, p) * b.character(k, q);
                        assert!((lhs - rhs).norm() < 1e-12, "{spec} k={k}");
                    }
                }
                let j = b.conj_index(k);
                assert_eq!(b.conj_index(j), k);
            }
        }
    }

    #[test]
    fn circulant_delta_and_example() {
        let g = parse_group("c4").unwrap();
        let w = circulant_from_filter(&g, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(w[r * 4 + c], if r == c { 1.0 } else { 0.0 });
            }
        }
        let w = circulant_from_filter(&g, &[1.0, 2.0, 0.0, 0.0]).unwrap();
        let col0: Vec<f64> = (0..4).map(|r| w[r * 4]).collect();
        assert_eq!(col0, vec![1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn eigenvalue_convention_pins_on_c4() {
        let b = basis("c4");
        let w = [1.0, 2.0, 0.0, 0.0];
        let lam = b.diagonalize_circulant(&w).unwrap();
        let dense = circulant_from_filter(b.group(), &w).unwrap();
        let rec = b.reconstruct(&lam).unwrap();
        let err: f64 = rec
            .iter()
            .zip(&dense)
            .map(|(a, &d)| (a - d).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10, "{err}");

        // the unconjugated candidate does not reconstruct W
        let wrong: Vec<Complex64> = lam.iter().map(|c| c.conj()).collect();
        let rec = b.reconstruct(&wrong).unwrap();
        let err: f64 = rec
            .iter()
            .zip(&dense)
            .map(|(a, &d)| (a - d).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err > 1.0);
    }

    #[test]
    fn delta_has_unit_spectrum() {
        let b = basis("c8");
        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        for c in b.diagonalize_circulant(&d).unwrap() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_round_trip_to_filter() {
        let b = basis("c2xc4");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = SpectralFilter::from_spatial(&b, &w).unwrap();
        assert!(b.is_hermitian(&f.coeffs, 1e-12));
        let back = b.filter_from_eigenvalues(&f.coeffs).unwrap();
        for (a, &e) in back.iter().zip(&w) {
            assert!((a.re - e).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
        let _ = re(&w);
    }

    #[test]
    fn hermitian_part_is_projection() {
        let b = basis("c8");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut c: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        b.hermitian_part(&mut c);
        assert!(b.is_hermitian(&c, 0.0));
        let before = c.clone();
        b.hermitian_part(&mut c);
        assert_eq!(before, c);
    }

    #[test]
    fn support_threshold_semantics() {
        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        assert_eq!(support_size(d.iter().copied(), 1e-9), 1);
        assert_eq!(support_size(vec![0.0; 5], 1e-9), 0);
        assert_eq!(support_size([1e-12, 0.5, -0.3], 1e-9), 2);
    }

    #[test]
    fn uncertainty_equality_cases() {
        let b = basis("c8");
        let mut d = vec![0.0; 8];
        d[0] = 1.0;
        let r = b.uncertainty_check(&d, 1e-9).unwrap();
        assert_eq!((r.spatial, r.spectral, r.product, r.holds), (1, 8, 8, true));
        let r = b.uncertainty_check(&[0.7; 8], 1e-9).unwrap();
        assert_eq!((r.spatial, r.spectral, r.product, r.holds), (8, 1, 8, true));
        assert!(matches!(
            b.uncertainty_check(&[0.0; 8], 1e-9),
            Err(SpectralError::ZeroFilter(_))
        ));
    }

    #[test]
    fn uncertainty_random_c16() {
        let b = basis("c16");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let w: Vec<f64> = (0..16)
                .map(|_| if rng.random_bool(0.3) { rng.random_range(-1.0..1.0) } else { 0.0 })
                .collect();
            if w.iter().all(|&v| v == 0.0) {
                continue;
            }
            assert!(b.uncertainty_check(&w, 1e-9).unwrap().holds);
        }
    }
}
