//! Statevector machinery for fidelity estimation.
//!
//! Real vectors are amplitude encoded into `n`-qubit states. The SWAP test is
//! simulated gate by gate on a `2n + 1` qubit register: Hadamard on the
//! ancilla, a controlled swap of the two data registers, a second Hadamard,
//! then the ancilla's marginal `Pr(0) = 1/2 + |<psi|phi>|^2 / 2` is read out
//! either exactly or through binomially sampled shots.
//!
//! QRAM access is modelled by its measurement statistics: measuring `M`
//! copies of the uniform superposition over `N` stored records is the same as
//! drawing `M` indices uniformly with replacement.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Inputs with a smaller L2 norm are rejected by [`amplitude_encode`].
pub const MIN_ENCODABLE_NORM: f64 = 1e-12;

const NORM_TOLERANCE: f64 = 1e-9;

/// Normalized pure state over `2^n` basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
    source_dim: usize,
    /// Every amplitude has a zero imaginary part.
    real: bool,
}

impl QuantumState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidState(format!(
                "amplitude vector length {len} is not a power of two"
            )));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sqr} differs from 1"
            )));
        }
        let real = amplitudes.iter().all(|a| a.im == 0.0);
        Ok(QuantumState {
            amplitudes,
            source_dim: len,
            real,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Dimension of the encoded vector before zero padding.
    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn n_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Encode `x` as `x / ||x||`, zero padded to the next power of two.
pub fn amplitude_encode(x: &[f64]) -> Result<QuantumState> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > MIN_ENCODABLE_NORM) {
        return Err(Error::Unencodable { norm });
    }
    let len = x.len().next_power_of_two();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
    for (a, v) in amplitudes.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    Ok(QuantumState {
        amplitudes,
        source_dim: x.len(),
        real: true,
    })
}

/// Scalar type of a [`StateVector`]. Real amplitudes suffice for circuits
/// made of real gates acting on real states.
pub trait Amplitude:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + std::ops::MulAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn norm_sqr(&self) -> f64;
}

impl Amplitude for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn norm_sqr(&self) -> f64 {
        self * self
    }
}

impl Amplitude for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn norm_sqr(&self) -> f64 {
        Complex64::norm_sqr(self)
    }
}

/// Dense statevector over a fixed number of qubits. Qubit `q` is bit `q` of
/// the basis index.
#[derive(Debug, Clone)]
pub struct StateVector<A = Complex64> {
    amps: Vec<A>,
    n_qubits: usize,
}

impl<A: Amplitude> StateVector<A> {
    /// Product state `|a_{m-1}> ... |a_1> |a_0>` of the given registers,
    /// register 0 occupying the lowest qubits.
    pub fn product(registers: &[&[A]]) -> Self {
        let len: usize = registers.iter().map(|r| r.len()).product();
        let mut amps = vec![A::ZERO; len];
        amps[0] = A::ONE;
        let mut filled = 1;
        let mut n_qubits = 0;
        for reg in registers {
            debug_assert!(reg.len().is_power_of_two());
            // Fill from the top block down so the prefix is read before it is overwritten.
            for (r, &amp) in reg.iter().enumerate().skip(1).rev() {
                let (src, dst) = amps.split_at_mut(r * filled);
                for (d, &a) in dst[..filled].iter_mut().zip(&src[..filled]) {
                    *d = a * amp;
                }
            }
            for a in &mut amps[..filled] {
                *a *= reg[0];
            }
            filled *= reg.len();
            n_qubits += reg.len().trailing_zeros() as usize;
        }
        StateVector { amps, n_qubits }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[A] {
        &self.amps
    }

    pub fn hadamard(&mut self, q: usize) {
        let bit = 1usize << q;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        if bit == 1 {
            for pair in self.amps.chunks_exact_mut(2) {
                let (x, y) = (pair[0], pair[1]);
                pair[0] = (x + y) * s;
                pair[1] = (x - y) * s;
            }
            return;
        }
        for block in self.amps.chunks_exact_mut(2 * bit) {
            let (lo, hi) = block.split_at_mut(bit);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * s;
                *b = (x - y) * s;
            }
        }
    }

    /// Fredkin gate: swap qubits `a` and `b` when `control` is 1.
    pub fn controlled_swap(&mut self, control: usize, a: usize, b: usize) {
        assert!(
            control != a && control != b && a != b,
            "controlled swap needs three distinct qubits"
        );
        let (lo, hi) = (a.min(b), a.max(b));
        if control < lo {
            self.controlled_swap_blocked(control, lo, hi);
            return;
        }
        let (cbit, abit, bbit) = (1usize << control, 1usize << a, 1usize << b);
        let mut fixed = [control, a, b];
        fixed.sort_unstable();
        // Enumerate only the basis states with control = 1, a = 1, b = 0.
        for m in 0..self.amps.len() >> 3 {
            let mut i = m;
            for &q in &fixed {
                i = ((i >> q) << (q + 1)) | (i & ((1 << q) - 1));
            }
            let i = i | cbit | abit;
            self.amps.swap(i, i ^ abit ^ bbit);
        }
    }

    /// Controlled swap with `control < lo < hi`: pairs `(lo=1, hi=0)` with
    /// `(lo=0, hi=1)` block by block.
    fn controlled_swap_blocked(&mut self, control: usize, lo: usize, hi: usize) {
        let (cbit, lbit, hbit) = (1usize << control, 1usize << lo, 1usize << hi);
        for block in self.amps.chunks_exact_mut(2 * hbit) {
            let (h0, h1) = block.split_at_mut(hbit);
            for (l0, l1) in h0
                .chunks_exact_mut(2 * lbit)
                .zip(h1.chunks_exact_mut(2 * lbit))
            {
                let (x, y) = (&mut l0[lbit..], &mut l1[..lbit]);
                for (cx, cy) in x
                    .chunks_exact_mut(2 * cbit)
                    .zip(y.chunks_exact_mut(2 * cbit))
                {
                    cx[cbit..].swap_with_slice(&mut cy[cbit..]);
                }
            }
        }
    }

    /// Probability of measuring qubit `q` in `|0>`.
    pub fn prob_zero(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        if bit == 1 {
            return self
                .amps
                .chunks_exact(2)
                .map(|pair| pair[0].norm_sqr())
                .sum();
        }
        self.amps
            .chunks_exact(2 * bit)
            .map(|block| block[..bit].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Number of SWAP-test shots, or the exact ancilla marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shots {
    Exact,
    Sampled(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    /// Estimated `|<psi|phi>|^2`, in `[0, 1]`.
    pub value: f64,
    pub shots: Shots,
    /// Ancilla `Pr(0)`: exact marginal, or the observed frequency in sampled mode.
    pub prob_zero: f64,
}

/// Ancilla `Pr(0)` after evolving the SWAP-test circuit on `|0>|psi>|phi>`.
pub fn swap_test_prob_zero(psi: &QuantumState, phi: &QuantumState) -> Result<f64> {
    let n = psi.n_qubits();
    if n != phi.n_qubits() {
        return Err(Error::RegisterMismatch {
            left: n,
            right: phi.n_qubits(),
        });
    }
    if psi.real && phi.real {
        let re = |s: &QuantumState| s.amplitudes.iter().map(|a| a.re).collect::<Vec<f64>>();
        return Ok(run_swap_test(&[1.0, 0.0], &re(psi), &re(phi), n));
    }
    let ancilla = [Complex64::ONE, Complex64::ZERO];
    Ok(run_swap_test(
        &ancilla,
        psi.amplitudes(),
        phi.amplitudes(),
        n,
    ))
}

/// Ancilla on qubit 0, `psi` on qubits `1..=n`, `phi` on `n+1..=2n`.
fn run_swap_test<A: Amplitude>(ancilla: &[A], psi: &[A], phi: &[A], n: usize) -> f64 {
    let mut sv = StateVector::product(&[ancilla, psi, phi]);
    sv.hadamard(0);
    for t in 0..n {
        sv.controlled_swap(0, 1 + t, 1 + n + t);
    }
    sv.hadamard(0);
    sv.prob_zero(0)
}

pub fn swap_test_exact(psi: &QuantumState, phi: &QuantumState) -> Result<FidelityEstimate> {
    let p0 = swap_test_prob_zero(psi, phi)?;
    Ok(FidelityEstimate {
        value: (2.0 * p0 - 1.0).clamp(0.0, 1.0),
        shots: Shots::Exact,
        prob_zero: p0,
    })
}

/// Sample `shots` ancilla measurements and estimate `F = 2 * freq0 - 1`,
/// clamped to `[0, 1]`.
pub fn swap_test_sampled<R: Rng + ?Sized>(
    psi: &QuantumState,
    phi: &QuantumState,
    shots: u32,
    rng: &mut R,
) -> Result<FidelityEstimate> {
    if shots == 0 {
        return Err(Error::InvalidParameter(
            "SWAP test needs at least one shot".into(),
        ));
    }
    let p0 = swap_test_prob_zero(psi, phi)?.clamp(0.0, 1.0);
    let zeros = Binomial::new(u64::from(shots), p0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    let freq = zeros as f64 / f64::from(shots);
    Ok(FidelityEstimate {
        value: (2.0 * freq - 1.0).clamp(0.0, 1.0),
        shots: Shots::Sampled(shots),
        prob_zero: freq,
    })
}

/// Fidelity of two prepared states under the given shot policy.
pub fn fidelity<R: Rng + ?Sized>(
    psi: &QuantumState,
    phi: &QuantumState,
    shots: Shots,
    rng: &mut R,
) -> Result<f64> {
    Ok(match shots {
        Shots::Exact => swap_test_exact(psi, phi)?.value,
        Shots::Sampled(s) => swap_test_sampled(psi, phi, s, rng)?.value,
    })
}

/// `1 - |<x|c>|^2` between the amplitude encodings of `x` and `c`.
pub fn fidelity_distance<R: Rng + ?Sized>(
    x: &[f64],
    c: &[f64],
    shots: Shots,
    rng: &mut R,
) -> Result<f64> {
    let (sx, sc) = (amplitude_encode(x)?, amplitude_encode(c)?);
    Ok(1.0 - fidelity(&sx, &sc, shots, rng)?)
}

/// Indices of `M` measurements of the uniform superposition over `N` records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapSample {
    pub indices: Vec<usize>,
}

impl BootstrapSample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn qram_bootstrap<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<BootstrapSample> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if m == 0 {
        return Err(Error::InvalidParameter(
            "bootstrap sample size must be >= 1".into(),
        ));
    }
    Ok(BootstrapSample {
        indices: (0..m).map(|_| rng.random_range(0..n)).collect(),
    })
}
