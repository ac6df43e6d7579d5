//! Seeded sampling of Haar unitaries, orbit states and random designs.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(seed, stream)`, so parallel loops can hand each sample its own stream and
//! stay bitwise reproducible regardless of scheduling.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_map, CMatrix};
use crate::measurement::{Povm, VonNeumannFamily};

/// Independent generator for sample `stream` under `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n×n` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag R` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre(n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(values[i], 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// `U·diag(spectrum)·U*` for a Haar unitary `U`.
pub fn orbit_state<R: Rng + ?Sized>(spectrum: &[f64], rng: &mut R) -> CMatrix {
    let u = haar_unitary(spectrum.len(), rng);
    &u * diag_real(spectrum) * u.adjoint()
}

/// Haar-random pure state as a density matrix.
pub fn pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut spectrum = vec![0.0; n];
    spectrum[0] = 1.0;
    orbit_state(&spectrum, rng)
}

/// Random full-rank `k`-outcome POVM: Wishart elements `A_i = G_iG_i*`
/// normalized as `S^{-1/2}A_iS^{-1/2}` with `S = ΣA_i`.
pub fn random_povm<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Povm {
    let raw: Vec<CMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(n, rng);
            &g * g.adjoint()
        })
        .collect();
    normalize_elements(n, raw)
}

/// `S^{-1/2}A_iS^{-1/2}` with `S = ΣA_i`; the result sums to the identity.
pub fn normalize_elements(n: usize, raw: Vec<CMatrix>) -> Povm {
    let mut s = CMatrix::zeros(n, n);
    for a in &raw {
        s += a;
    }
    let s_inv_half = hermitian_map(&s, |x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt());
    let elements = raw.iter().map(|a| &s_inv_half * a * &s_inv_half).collect();
    Povm { dim: n, elements }
}

/// `d` effects `U_i·diag(spectrum)·U_i*` with independent Haar `U_i`.
pub fn random_family<R: Rng + ?Sized>(spectrum: &[f64], d: usize, rng: &mut R) -> VonNeumannFamily {
    let effects = (0..d).map(|_| orbit_state(spectrum, rng)).collect();
    VonNeumannFamily { dim: spectrum.len(), effects }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs_entry, trace};
    use crate::measurement::validate_povm;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_for(7, 0);
        for n in 2..5 {
            let u = haar_unitary(n, &mut rng);
            assert!(max_abs_entry(&(&u * u.adjoint() - identity(n))) < 1e-12);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = haar_unitary(3, &mut rng_for(1, 5));
        let b = haar_unitary(3, &mut rng_for(1, 5));
        let c = haar_unitary(3, &mut rng_for(1, 6));
        assert_eq!(a, b);
        assert!(max_abs_entry(&(a - c)) > 1e-3);
    }

    #[test]
    fn haar_first_row_modulus_has_uniform_mean() {
        // |U_00|² is Beta(1, n−1) under Haar measure, mean 1/n.
        let n = 3;
        let mut rng = rng_for(11, 0);
        let samples = 20_000;
        let mean: f64 =
            (0..samples).map(|_| haar_unitary(n, &mut rng)[(0, 0)].norm_sqr()).sum::<f64>() / samples as f64;
        // sd of Beta(1,2) is sqrt(1/18); 5 standard errors
        assert!((mean - 1.0 / 3.0).abs() < 5.0 * (1.0f64 / 18.0).sqrt() / (samples as f64).sqrt());
    }

    #[test]
    fn random_povm_is_valid() {
        let mut rng = rng_for(3, 0);
        let p = random_povm(3, 9, &mut rng);
        assert!(validate_povm(&p).is_empty());
    }

    #[test]
    fn orbit_state_keeps_spectrum() {
        let mut rng = rng_for(4, 0);
        let rho = orbit_state(&[0.5, 0.3, 0.2], &mut rng);
        assert!((trace(&rho).re - 1.0).abs() < 1e-12);
        let ev = crate::linalg::eigvalsh(&rho);
        for (a, b) in ev.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
