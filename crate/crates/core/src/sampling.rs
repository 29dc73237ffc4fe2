//! Seeded generation of probes, unimodular scalars and structured matrices.
//!
//! A single experiment seed fans out into independent sub-seeds through
//! [`derive_seed`], so every random quantity in a run is reproducible
//! bit-for-bit from one 64-bit number.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;

/// Named sub-seed streams.
pub mod stream {
    pub const PROBES: u64 = 1;
    pub const MU: u64 = 2;
    pub const UNITARY: u64 = 3;
    pub const SKEW: u64 = 4;
    pub const PERTURB_F: u64 = 5;
    pub const PERTURB_H: u64 = 6;
    pub const AXIOMS: u64 = 7;
    pub const CERTIFY: u64 = 8;
    pub const TRIPLES: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for `stream` under the experiment seed `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_mul(0x2545_f491_4f6c_dd1d)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with real and imaginary parts drawn uniformly from `[-1, 1]`.
pub fn random_matrix<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(dim, |_, _| {
        Complex::new(
            T::lit(rng.gen_range(-1.0..=1.0)),
            T::lit(rng.gen_range(-1.0..=1.0)),
        )
    })
}

pub fn random_matrices<T: Scalar>(seed: u64, dim: usize, count: usize) -> Vec<ComplexMatrix<T>> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| random_matrix(&mut rng, dim)).collect()
}

/// `count` log-spaced norms covering `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![(lo * hi).sqrt()],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// Seeded random directions rescaled to log-spaced spectral norms in `[lo, hi]`.
pub fn probe_set<T: Scalar>(seed: u64, dim: usize, count: usize, lo: f64, hi: f64) -> Vec<ComplexMatrix<T>> {
    let mut rng = rng_from_seed(seed);
    log_spaced(lo, hi, count)
        .into_iter()
        .map(|target| {
            let x: ComplexMatrix<T> = loop {
                let x = random_matrix(&mut rng, dim);
                if x.norm() > T::zero() {
                    break x;
                }
            };
            x.scale_real(T::lit(target) / x.norm())
        })
        .collect()
}

/// Seeded points on the unit circle.
pub fn unimodular_samples<T: Scalar>(seed: u64, count: usize) -> Vec<Complex<T>> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let t = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
            Complex::new(t.cos(), t.sin())
        })
        .collect()
}

/// `count` equally spaced points `e^{2πik/count + iφ₀}` with a fixed offset.
pub fn unimodular_grid<T: Scalar>(count: usize) -> Vec<Complex<T>> {
    (0..count)
        .map(|k| {
            let t = T::lit(std::f64::consts::TAU * k as f64 / count as f64 + 0.1);
            Complex::new(t.cos(), t.sin())
        })
        .collect()
}

/// Unitary matrix from modified Gram–Schmidt on the columns of a random matrix.
pub fn random_unitary<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix<T> {
    loop {
        let m: ComplexMatrix<T> = random_matrix(rng, dim);
        if let Some(q) = orthonormalize_columns(&m) {
            return q;
        }
    }
}

/// Orthonormalizes the columns of `m`; `None` if they are numerically dependent.
pub fn orthonormalize_columns<T: Scalar>(m: &ComplexMatrix<T>) -> Option<ComplexMatrix<T>> {
    let n = m.dim();
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| (0..n).map(|i| m[(i, j)]).collect()).collect();
    for j in 0..n {
        for k in 0..j {
            let proj = (0..n).fold(Complex::<T>::zero(), |acc, i| acc + cols[k][i].conj() * cols[j][i]);
            let (done, rest) = cols.split_at_mut(j);
            for (c, v) in rest[0].iter_mut().zip(&done[k]) {
                *c = *c - proj * *v;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if norm <= T::lit(1e-6) {
            return None;
        }
        cols[j].iter_mut().for_each(|z| *z = *z / norm);
    }
    Some(ComplexMatrix::from_fn(n, |i, j| cols[j][i]))
}

/// Skew-adjoint `a = (b − b*)/2` rescaled to spectral norm `target`.
pub fn random_skew_adjoint<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize, target: T) -> ComplexMatrix<T> {
    loop {
        let b: ComplexMatrix<T> = random_matrix(rng, dim);
        let a = (&b - &b.adjoint()).scale_real(T::lit(0.5));
        let na = a.norm();
        if na > T::lit(1e-6) {
            return a.scale_real(target / na);
        }
    }
}
