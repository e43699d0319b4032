//! Ground-truth sample descriptions and their reflection coefficients.
//!
//! `tan ψ` is the ratio of the p- and s-intensity reflectances, so the
//! amplitude ratio entering the coincidence amplitude is `β = √(tan ψ)`.
//! The conventional amplitude-ratio angle is available as
//! [`SampleParams::standard_psi`] (`atan β`).
//!
//! Fresnel coefficients follow the convention in which `r_p` and `r_s` have
//! opposite signs at normal incidence. Complex indices use `N = n + iκ`
//! with `κ ≥ 0` for absorbing media; the normal wavevector component
//! `N cos θ_t` is taken on the branch with non-negative imaginary part.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::polarization::JonesOperator;
use crate::scalar::{wrap_pi, Scalar};

/// Ellipsometric angles of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams<T> {
    psi: T,
    delta: T,
}

impl<T: Scalar> SampleParams<T> {
    /// `psi` must lie strictly inside `(0, π/2)`; `delta` is wrapped to `(−π, π]`.
    pub fn new(psi: T, delta: T) -> Result<Self> {
        if !psi.is_finite() || psi <= T::zero() || psi >= T::FRAC_PI_2() {
            return Err(invalid("psi", format!("{psi} rad is outside (0, pi/2)")));
        }
        if !delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        Ok(Self {
            psi,
            delta: wrap_pi(delta),
        })
    }

    pub fn from_degrees(psi_deg: T, delta_deg: T) -> Result<Self> {
        Self::new(psi_deg.to_radians(), delta_deg.to_radians())
    }

    /// From the amplitude ratio `β > 0`.
    pub fn from_beta(beta: T, delta: T) -> Result<Self> {
        if !beta.is_finite() || beta <= T::zero() {
            return Err(invalid("beta", format!("{beta} must be positive and finite")));
        }
        Self::new((beta * beta).atan(), delta)
    }

    /// Perfect mirror: `β = 1`, `Δ = 0`.
    pub fn mirror() -> Self {
        Self {
            psi: T::FRAC_PI_4(),
            delta: T::zero(),
        }
    }

    #[inline]
    pub fn psi(&self) -> T {
        self.psi
    }

    #[inline]
    pub fn delta(&self) -> T {
        self.delta
    }

    #[inline]
    pub fn beta(&self) -> T {
        self.psi.tan().sqrt()
    }

    /// Amplitude-ratio angle `atan β` used by conventional ellipsometry.
    pub fn standard_psi(&self) -> T {
        self.beta().atan()
    }
}

/// Idler-side action of the sample, `diag(β e^{iΔ}, 1)` on `(H, V)`. The
/// V coefficient is normalized to 1; absolute reflectance belongs to `C`.
pub fn sample_jones<T: Scalar>(params: &SampleParams<T>) -> JonesOperator<T> {
    JonesOperator::diag(
        Complex::from_polar(params.beta(), params.delta()),
        Complex::new(T::one(), T::zero()),
    )
}

/// Amplitude reflection coefficients for p (H) and s (V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPair<T> {
    pub r_p: Complex<T>,
    pub r_s: Complex<T>,
}

impl<T: Scalar> ReflectionPair<T> {
    /// The coefficient pair `(β e^{iΔ}, 1)` that carries `params`.
    pub fn from_params(params: &SampleParams<T>) -> Self {
        Self {
            r_p: Complex::from_polar(params.beta(), params.delta()),
            r_s: Complex::new(T::one(), T::zero()),
        }
    }
}

/// One homogeneous film layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer<T> {
    pub index: Complex<T>,
    /// Physical thickness in meters.
    pub thickness: T,
}

/// Ambient / layers / substrate stack illuminated at one wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmStack<T> {
    wavelength: T,
    incidence_angle: T,
    n_ambient: T,
    layers: Vec<Layer<T>>,
    n_substrate: Complex<T>,
}

impl<T: Scalar> FilmStack<T> {
    pub fn new(
        wavelength: T,
        incidence_angle: T,
        n_ambient: T,
        layers: Vec<Layer<T>>,
        n_substrate: Complex<T>,
    ) -> Result<Self> {
        if !wavelength.is_finite() || wavelength <= T::zero() {
            return Err(invalid("wavelength", "must be positive"));
        }
        check_ambient_and_angle(n_ambient, incidence_angle)?;
        for layer in &layers {
            if !layer.thickness.is_finite() || layer.thickness < T::zero() {
                return Err(invalid("thickness", "layer thickness must be >= 0"));
            }
            if !layer.index.re.is_finite() || !layer.index.im.is_finite() {
                return Err(invalid("layer index", "must be finite"));
            }
        }
        if !n_substrate.re.is_finite() || !n_substrate.im.is_finite() {
            return Err(invalid("n_substrate", "must be finite"));
        }
        Ok(Self {
            wavelength,
            incidence_angle,
            n_ambient,
            layers,
            n_substrate,
        })
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    pub fn incidence_angle(&self) -> T {
        self.incidence_angle
    }

    pub fn n_ambient(&self) -> T {
        self.n_ambient
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn n_substrate(&self) -> Complex<T> {
        self.n_substrate
    }
}

fn check_ambient_and_angle<T: Scalar>(n_ambient: T, angle: T) -> Result<()> {
    if !n_ambient.is_finite() || n_ambient <= T::zero() {
        return Err(invalid("n_ambient", "must be positive"));
    }
    if !angle.is_finite() || angle < T::zero() {
        return Err(invalid("incidence_angle", "must be >= 0"));
    }
    if angle >= T::FRAC_PI_2() {
        return Err(Error::GrazingIncidence { angle: angle.as_f64() });
    }
    Ok(())
}

/// `N cos θ` inside a medium of index `n`, for tangential invariant
/// `n_ambient sin θ_0`, on the decaying branch.
fn normal_component<T: Scalar>(n: Complex<T>, tangential: T) -> Complex<T> {
    let k = (n * n - Complex::new(tangential * tangential, T::zero())).sqrt();
    if k.im < T::zero() || (k.im == T::zero() && k.re < T::zero()) {
        -k
    } else {
        k
    }
}

/// Single-interface coefficients from medium `i` into medium `j`.
fn interface<T: Scalar>(n_i: Complex<T>, k_i: Complex<T>, n_j: Complex<T>, k_j: Complex<T>) -> ReflectionPair<T> {
    let r_s = (k_i - k_j) / (k_i + k_j);
    let a = n_j * n_j * k_i;
    let b = n_i * n_i * k_j;
    ReflectionPair {
        r_p: (a - b) / (a + b),
        r_s,
    }
}

/// Fresnel reflection at a single ambient/substrate interface.
pub fn fresnel_interface<T: Scalar>(n_ambient: T, n_substrate: Complex<T>, angle: T) -> Result<ReflectionPair<T>> {
    check_ambient_and_angle(n_ambient, angle)?;
    let tangential = n_ambient * angle.sin();
    let n0 = Complex::new(n_ambient, T::zero());
    Ok(interface(
        n0,
        normal_component(n0, tangential),
        n_substrate,
        normal_component(n_substrate, tangential),
    ))
}

/// Reflection of a multilayer stack by the Airy recursion, folding layers
/// from the substrate up toward the ambient.
pub fn film_stack_reflectance<T: Scalar>(stack: &FilmStack<T>) -> ReflectionPair<T> {
    let tangential = stack.n_ambient * stack.incidence_angle.sin();
    let mut media: Vec<Complex<T>> = Vec::with_capacity(stack.layers.len() + 2);
    media.push(Complex::new(stack.n_ambient, T::zero()));
    media.extend(stack.layers.iter().map(|l| l.index));
    media.push(stack.n_substrate);
    let k: Vec<Complex<T>> = media.iter().map(|&n| normal_component(n, tangential)).collect();

    let last = media.len() - 1;
    let mut r = interface(media[last - 1], k[last - 1], media[last], k[last]);
    for j in (1..last).rev() {
        let layer = &stack.layers[j - 1];
        let phase = k[j] * (T::TAU() * layer.thickness / stack.wavelength);
        let prop = (Complex::new(T::zero(), T::two()) * phase).exp();
        let top = interface(media[j - 1], k[j - 1], media[j], k[j]);
        r = ReflectionPair {
            r_p: airy(top.r_p, r.r_p, prop),
            r_s: airy(top.r_s, r.r_s, prop),
        };
    }
    r
}

fn airy<T: Scalar>(r_top: Complex<T>, r_below: Complex<T>, prop: Complex<T>) -> Complex<T> {
    let rb = r_below * prop;
    (r_top + rb) / (Complex::new(T::one(), T::zero()) + r_top * rb)
}

/// `tan ψ = |r_p|²/|r_s|²`, `Δ = arg r_p − arg r_s` wrapped to `(−π, π]`.
pub fn psi_delta_from_coeffs<T: Scalar>(pair: &ReflectionPair<T>) -> Result<SampleParams<T>> {
    let rp = pair.r_p.norm_sqr();
    let rs = pair.r_s.norm_sqr();
    if rs == T::zero() {
        return Err(Error::VNullSample);
    }
    if rp == T::zero() {
        return Err(Error::DegeneratePsi);
    }
    let psi = (rp / rs).atan();
    let delta = wrap_pi(pair.r_p.arg() - pair.r_s.arg());
    SampleParams::new(psi, delta)
}
