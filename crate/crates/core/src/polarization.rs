//! Two-photon polarization algebra: states, per-arm Jones operators,
//! analyzer projection and single-arm reduced density matrices.
//!
//! Basis order is fixed as `(HH, HV, VH, VV)`; the first letter is the
//! signal photon and the second the idler, so the amplitude of
//! `|s i⟩` lives at index `2·s + i` with `H = 0`, `V = 1`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Complex amplitude.
pub type ComplexAmp<T> = Complex<T>;

/// Linear polarization eigenstate of one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    H = 0,
    V = 1,
}

/// Which photon of the pair an operator or partial trace refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Signal,
    Idler,
}

/// Two-photon basis kets in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    HH = 0,
    HV = 1,
    VH = 2,
    VV = 3,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::HH, Basis::HV, Basis::VH, Basis::VV];

    pub fn new(signal: Pol, idler: Pol) -> Self {
        Self::ALL[2 * signal as usize + idler as usize]
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn signal(self) -> Pol {
        if self.index() < 2 {
            Pol::H
        } else {
            Pol::V
        }
    }

    pub fn idler(self) -> Pol {
        if self.index().is_multiple_of(2) {
            Pol::H
        } else {
            Pol::V
        }
    }
}

/// Tolerance used for normalization and unitarity flags: `1e-12`, widened
/// to a few ulps for low-precision scalars.
pub fn flag_tolerance<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

fn all_finite<T: Scalar>(z: &[Complex<T>]) -> bool {
    z.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Pure polarization state of a photon pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState<T> {
    amp: [Complex<T>; 4],
    normalized: bool,
}

impl<T: Scalar> TwoPhotonState<T> {
    /// Builds a state from amplitudes in `(HH, HV, VH, VV)` order. The
    /// normalized flag is set when `Σ|aᵢ|² = 1` to within tolerance.
    pub fn from_amplitudes(amp: [Complex<T>; 4]) -> Result<Self> {
        if !all_finite(&amp) {
            return Err(Error::InvalidData("non-finite state amplitude".into()));
        }
        let norm_sq: T = amp.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, x| s + x);
        Ok(Self {
            amp,
            normalized: (norm_sq - T::one()).abs() <= flag_tolerance(),
        })
    }

    /// Product state `|signal⟩ ⊗ |idler⟩`.
    pub fn product(signal: [Complex<T>; 2], idler: [Complex<T>; 2]) -> Result<Self> {
        let mut amp = [Complex::new(T::zero(), T::zero()); 4];
        for s in 0..2 {
            for i in 0..2 {
                amp[2 * s + i] = signal[s] * idler[i];
            }
        }
        Self::from_amplitudes(amp)
    }

    /// Basis ket `|signal idler⟩`.
    pub fn basis(signal: Pol, idler: Pol) -> Self {
        let mut amp = [Complex::new(T::zero(), T::zero()); 4];
        amp[Basis::new(signal, idler).index()] = Complex::new(T::one(), T::zero());
        Self {
            amp,
            normalized: true,
        }
    }

    #[inline]
    pub fn amp(&self, ket: Basis) -> Complex<T> {
        self.amp[ket.index()]
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<T>; 4] {
        &self.amp
    }

    pub fn norm_sq(&self) -> T {
        self.amp.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, x| s + x)
    }

    #[inline]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Returns the renormalized state. Fails on the zero vector.
    pub fn renormalized(&self) -> Result<Self> {
        let n = self.norm_sq().sqrt();
        if n <= T::zero() {
            return Err(Error::InvalidData("cannot renormalize the zero state".into()));
        }
        let mut amp = self.amp;
        for a in amp.iter_mut() {
            *a = *a / n;
        }
        Ok(Self {
            amp,
            normalized: true,
        })
    }

    /// `|⟨self|other⟩|² / (‖self‖²‖other‖²)`; 1 when the two agree up to a
    /// global phase and scale.
    pub fn overlap(&self, other: &Self) -> T {
        let inner = self
            .amp
            .iter()
            .zip(other.amp.iter())
            .fold(Complex::new(T::zero(), T::zero()), |s, (a, b)| s + a.conj() * b);
        inner.norm_sqr() / (self.norm_sq() * other.norm_sq())
    }
}

/// 2×2 complex matrix acting on one photon's `(H, V)` amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator<T> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> JonesOperator<T> {
    pub fn new(m: [[Complex<T>; 2]; 2]) -> Result<Self> {
        if !all_finite(&m[0]) || !all_finite(&m[1]) {
            return Err(Error::InvalidData("non-finite Jones matrix entry".into()));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self::diag(Complex::new(T::one(), T::zero()), Complex::new(T::one(), T::zero()))
    }

    pub fn diag(h: Complex<T>, v: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[h, z], [z, v]] }
    }

    /// Global phase `e^{iφ}·I`.
    pub fn phase(phi: T) -> Self {
        let p = Complex::from_polar(T::one(), phi);
        Self::diag(p, p)
    }

    /// Projector onto linear polarization at `theta` from H.
    pub fn linear_polarizer(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        let e = |x: T| Complex::new(x, T::zero());
        Self {
            m: [[e(c * c), e(c * s)], [e(c * s), e(s * s)]],
        }
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    #[inline]
    pub fn matrix(&self) -> &[[Complex<T>; 2]; 2] {
        &self.m
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        let mut m = self.m;
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * c;
            }
        }
        Self { m }
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[Complex::new(T::zero(), T::zero()); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self { m }
    }

    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `‖U†U − I‖_max ≤ tol`.
    pub fn is_unitary(&self, tol: T) -> bool {
        for r in 0..2 {
            for c in 0..2 {
                let g = self.m[0][r].conj() * self.m[0][c] + self.m[1][r].conj() * self.m[1][c];
                let target = if r == c { T::one() } else { T::zero() };
                if (g - Complex::new(target, T::zero())).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Reduced 2×2 density matrix of one photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2<T> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> DensityMatrix2<T> {
    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        (self.m[0][1] - self.m[1][0].conj()).norm() <= tol
            && self.m[0][0].im.abs() <= tol
            && self.m[1][1].im.abs() <= tol
    }

    /// Eigenvalues `(λ_min, λ_max)` of the Hermitian part.
    pub fn eigenvalues(&self) -> (T, T) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = (self.m[0][1] + self.m[1][0].conj()) * T::half();
        let mean = (a + d) * T::half();
        let gap = (((a - d) * T::half()).powi(2) + b.norm_sqr()).sqrt();
        (mean - gap, mean + gap)
    }

    /// Max-norm distance to `other`.
    pub fn distance(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn maximally_mixed() -> Self {
        let h = Complex::new(T::half(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[h, z], [z, h]] }
    }

    /// Degree of polarization `|λ_max − λ_min| / tr`; 0 for unpolarized light.
    pub fn degree_of_polarization(&self) -> T {
        let (lo, hi) = self.eigenvalues();
        (hi - lo) / self.trace().re
    }
}

/// The type-II source state `(|HV⟩ + |VH⟩)/√2`.
pub fn entangled_state<T: Scalar>() -> TwoPhotonState<T> {
    let r = T::FRAC_1_SQRT_2();
    let z = Complex::new(T::zero(), T::zero());
    let a = Complex::new(r, T::zero());
    TwoPhotonState {
        amp: [z, a, a, z],
        normalized: true,
    }
}

/// `(op_signal ⊗ op_idler)·state`. The result keeps the normalized flag only
/// when the input was normalized and both operators are unitary.
pub fn apply_local<T: Scalar>(
    state: &TwoPhotonState<T>,
    op_signal: &JonesOperator<T>,
    op_idler: &JonesOperator<T>,
) -> TwoPhotonState<T> {
    let a = &op_signal.m;
    let b = &op_idler.m;
    let mut out = [Complex::new(T::zero(), T::zero()); 4];
    for s in 0..2 {
        for i in 0..2 {
            let mut acc = Complex::new(T::zero(), T::zero());
            for s2 in 0..2 {
                for i2 in 0..2 {
                    acc = acc + a[s][s2] * b[i][i2] * state.amp[2 * s2 + i2];
                }
            }
            out[2 * s + i] = acc;
        }
    }
    let tol = flag_tolerance();
    TwoPhotonState {
        amp: out,
        normalized: state.normalized && op_signal.is_unitary(tol) && op_idler.is_unitary(tol),
    }
}

/// Joint detection amplitude `(⟨θ₁| ⊗ ⟨θ₂|)·state` with `⟨θ| = (cos θ, sin θ)`;
/// `theta1` analyzes the signal photon, `theta2` the idler.
pub fn coincidence_amplitude<T: Scalar>(state: &TwoPhotonState<T>, theta1: T, theta2: T) -> Complex<T> {
    let (s1, c1) = theta1.sin_cos();
    let (s2, c2) = theta2.sin_cos();
    let p1 = [c1, s1];
    let p2 = [c2, s2];
    let mut acc = Complex::new(T::zero(), T::zero());
    for s in 0..2 {
        for i in 0..2 {
            acc = acc + state.amp[2 * s + i] * (p1[s] * p2[i]);
        }
    }
    acc
}

/// Partial trace over the arm not named by `arm`.
pub fn reduced_density<T: Scalar>(state: &TwoPhotonState<T>, arm: Arm) -> Result<DensityMatrix2<T>> {
    if !state.normalized {
        return Err(Error::NotNormalized {
            norm_sq: state.norm_sq().as_f64(),
        });
    }
    let a = &state.amp;
    let at = |kept: usize, traced: usize| match arm {
        Arm::Signal => a[2 * kept + traced],
        Arm::Idler => a[2 * traced + kept],
    };
    let mut m = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = (0..2).fold(Complex::new(T::zero(), T::zero()), |s, k| s + at(r, k) * at(c, k).conj());
        }
    }
    Ok(DensityMatrix2 { m })
}
