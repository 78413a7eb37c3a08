//! Exact algebra between Beltrami pairs `(μ, ν)` and conductivity matrices,
//! and the sharp ellipticity-constant formulas relating them.
//!
//! The two directions are
//!
//! ```text
//! μ = (σ₂₂ − σ₁₁ − i(σ₁₂ + σ₂₁)) / (1 + Tr σ + det σ)
//! ν = (1 − det σ + i(σ₁₂ − σ₂₁)) / (1 + Tr σ + det σ)
//! ```
//!
//! and its algebraic inverse (see [`sigma_from_beltrami`]). A conductivity is
//! elliptic with constants `(α, β)` when `σξ·ξ ≥ α|ξ|²` and `σ⁻¹ξ·ξ ≥ β⁻¹|ξ|²`.

mod tau_oracle;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2;

pub use tau_oracle::{compare_tau_bounds, tau_ellipticity_bound, TauBound, TauComparison, TauMinimizer, TauMode};

/// Relative tolerance below which `|1+ν|² − |μ|²` counts as collapsed.
pub const DEGENERATE_DENOMINATOR_TOL: f64 = 1e-14;

/// Complex dilatations of the first-order system `F_z̄ = μ F_z + ν conj(F_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiPair {
    pub mu: Complex64,
    pub nu: Complex64,
}

impl BeltramiPair {
    /// Checked constructor; requires `|μ| + |ν| < 1`.
    pub fn new(mu: Complex64, nu: Complex64) -> Result<Self> {
        let pair = BeltramiPair { mu, nu };
        let s = pair.dilatation_sum();
        if !s.is_finite() || s >= 1.0 {
            return Err(Error::DegeneratePair(format!("|mu|+|nu| = {s} is not below 1")));
        }
        Ok(pair)
    }

    pub const ZERO: BeltramiPair = BeltramiPair { mu: Complex64::new(0.0, 0.0), nu: Complex64::new(0.0, 0.0) };

    /// `|μ| + |ν|`.
    pub fn dilatation_sum(&self) -> f64 {
        self.mu.norm() + self.nu.norm()
    }

    pub fn max_abs_diff(&self, other: &BeltramiPair) -> f64 {
        let d = [
            (self.mu.re - other.mu.re).abs(),
            (self.mu.im - other.mu.im).abs(),
            (self.nu.re - other.nu.re).abs(),
            (self.nu.im - other.nu.im).abs(),
        ];
        d.into_iter().fold(0.0, f64::max)
    }
}

/// A real 2×2 conductivity whose symmetric part and whose inverse's
/// symmetric part are both positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat2", into = "Mat2")]
pub struct Conductivity(Mat2);

impl Conductivity {
    pub fn new(m: Mat2) -> Result<Self> {
        check_elliptic(&m)?;
        Ok(Conductivity(m))
    }

    pub const IDENTITY: Conductivity = Conductivity(Mat2::IDENTITY);

    pub fn entries(&self) -> Mat2 {
        self.0
    }

    /// Best constants `(α, β)`; see [`ellipticity_constants`].
    pub fn constants(&self) -> (f64, f64) {
        best_constants(&self.0)
    }
}

impl TryFrom<Mat2> for Conductivity {
    type Error = Error;
    fn try_from(m: Mat2) -> Result<Self> {
        Conductivity::new(m)
    }
}

impl From<Conductivity> for Mat2 {
    fn from(c: Conductivity) -> Mat2 {
        c.0
    }
}

/// Summary of the ellipticity of a coefficient in both conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub alpha: f64,
    pub beta: f64,
    /// Beltrami distortion `K ≥ 1`.
    pub k_beltrami: f64,
    /// `λ = √(α/β)` after normalization.
    pub lambda: f64,
    /// Astala's critical exponent `2K/(K−1)`, `+∞` when `K = 1`.
    pub p_sup: f64,
}

pub(crate) fn check_elliptic(m: &Mat2) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::NotElliptic("non-finite entries".into()));
    }
    let (lo, _) = m.symmetric_eigenvalues();
    if lo <= 0.0 {
        return Err(Error::NotElliptic(format!("symmetric part has eigenvalue {lo:e} <= 0")));
    }
    let inv = m.inverse().ok_or_else(|| Error::NotElliptic("singular matrix".into()))?;
    let (lo_inv, _) = inv.symmetric_eigenvalues();
    if lo_inv <= 0.0 {
        return Err(Error::NotElliptic(format!("symmetric part of the inverse has eigenvalue {lo_inv:e} <= 0")));
    }
    Ok(())
}

fn best_constants(m: &Mat2) -> (f64, f64) {
    let (alpha, _) = m.symmetric_eigenvalues();
    // inverse exists for an elliptic matrix
    let (inv_lo, _) = m.inverse().map(|i| i.symmetric_eigenvalues()).unwrap_or((0.0, 0.0));
    (alpha, 1.0 / inv_lo)
}

/// Conductivity of a Beltrami pair.
///
/// ```text
///       1      ⎡ |1−μ|²−|ν|²     2 Im(ν−μ)   ⎤
/// σ = ───── ·  ⎢                              ⎥ ,   d = |1+ν|² − |μ|²
///       d      ⎣ −2 Im(ν+μ)     |1+μ|²−|ν|²  ⎦
/// ```
pub fn sigma_from_beltrami(pair: &BeltramiPair) -> Result<Conductivity> {
    let BeltramiPair { mu, nu } = *pair;
    if pair.dilatation_sum() >= 1.0 {
        return Err(Error::DegeneratePair(format!("|mu|+|nu| = {} is not below 1", pair.dilatation_sum())));
    }
    let one = Complex64::new(1.0, 0.0);
    let d = (one + nu).norm_sqr() - mu.norm_sqr();
    let scale = (one + nu).norm_sqr() + mu.norm_sqr();
    if d <= DEGENERATE_DENOMINATOR_TOL * scale {
        return Err(Error::DegeneratePair(format!("denominator |1+nu|^2-|mu|^2 = {d:e} collapsed")));
    }
    let m = Mat2::new(
        ((one - mu).norm_sqr() - nu.norm_sqr()) / d,
        2.0 * (nu - mu).im / d,
        -2.0 * (nu + mu).im / d,
        ((one + mu).norm_sqr() - nu.norm_sqr()) / d,
    );
    Conductivity::new(m)
}

/// Complex dilatations of a conductivity.
pub fn beltrami_from_sigma(sigma: &Conductivity) -> BeltramiPair {
    beltrami_from_matrix(&sigma.0)
}

pub(crate) fn beltrami_from_matrix(s: &Mat2) -> BeltramiPair {
    let [[s11, s12], [s21, s22]] = s.0;
    let det = s.det();
    let d = 1.0 + s11 + s22 + det;
    BeltramiPair {
        mu: Complex64::new((s22 - s11) / d, -(s12 + s21) / d),
        nu: Complex64::new((1.0 - det) / d, (s12 - s21) / d),
    }
}

/// Validates a raw matrix and converts it; the error names the failing positivity test.
pub fn beltrami_from_matrix_checked(m: &Mat2) -> Result<BeltramiPair> {
    let s = Conductivity::new(*m)?;
    Ok(beltrami_from_sigma(&s))
}

/// Best ellipticity constants: `α = λ_min(sym σ)` and `1/β = λ_min(sym σ⁻¹)`.
pub fn ellipticity_constants(sigma: &Conductivity) -> (f64, f64) {
    best_constants(&sigma.0)
}

/// Smallest `K ≥ 1` with `|μ|+|ν| ≤ (K−1)/(K+1)`.
pub fn k_of_beltrami(pair: &BeltramiPair) -> Result<f64> {
    let s = pair.dilatation_sum();
    if s >= 1.0 {
        return Err(Error::DegeneratePair(format!("|mu|+|nu| = {s} is not below 1")));
    }
    Ok((1.0 + s) / (1.0 - s))
}

/// Beltrami distortion guaranteed for `σ ∈ M(λ, 1/λ)`.
///
/// General (possibly non-symmetric) σ: `(1 + √(1−λ²))/λ`; symmetric σ: `1/λ`.
pub fn k_from_lambda(lambda: f64, symmetric_only: bool) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1]")));
    }
    if symmetric_only {
        Ok(1.0 / lambda)
    } else {
        Ok((1.0 + (1.0 - lambda * lambda).sqrt()) / lambda)
    }
}

/// Higher-integrability exponent for σ-harmonic functions with constants `(α, β)`.
pub fn astala_exponent(alpha: f64, beta: f64) -> Result<EllipticityReport> {
    if !(alpha > 0.0 && beta.is_finite() && alpha <= beta) {
        return Err(Error::Domain(format!("need 0 < alpha <= beta, got ({alpha}, {beta})")));
    }
    let ratio = beta / alpha;
    let k = ratio.sqrt() + (ratio - 1.0).sqrt();
    Ok(EllipticityReport { alpha, beta, k_beltrami: k, lambda: (alpha / beta).sqrt(), p_sup: p_sup_of(k) })
}

/// `2K/(K−1)`, or `+∞` at `K = 1`.
pub fn p_sup_of(k: f64) -> f64 {
    if k <= 1.0 {
        f64::INFINITY
    } else {
        2.0 * k / (k - 1.0)
    }
}

/// Rescales `σ` into `M(λ, 1/λ)` with `λ = √(α/β)`.
///
/// σ-harmonic functions are invariant under positive scalings of σ; the
/// factor `1/√(αβ)` is the one that balances the two constants, giving
/// `α̃ = 1/β̃ = √(α/β)`.
pub fn normalize_sigma(sigma: &Conductivity) -> (Conductivity, f64) {
    let (alpha, beta) = ellipticity_constants(sigma);
    let scale = 1.0 / (alpha * beta).sqrt();
    (Conductivity(sigma.0.scale(scale)), scale)
}

/// `[[λ, ±√(1−λ²)], [∓√(1−λ²), λ]]`, the matrices of `M(λ, 1/λ)` with the
/// largest dilatation `|μ| + |ν|`.
pub fn extremal_conductivity(lambda: f64, positive_skew: bool) -> Result<Conductivity> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain(format!("λ = {lambda} outside (0, 1]")));
    }
    let b = (1.0 - lambda * lambda).sqrt() * if positive_skew { 1.0 } else { -1.0 };
    Conductivity::new(Mat2::new(lambda, b, -b, lambda))
}

/// Full report for a conductivity: its best constants, the Beltrami `K` of
/// its dilatations and the Astala exponent of the normalized coefficient.
pub fn ellipticity_report(sigma: &Conductivity) -> EllipticityReport {
    let (alpha, beta) = ellipticity_constants(sigma);
    let pair = beltrami_from_sigma(sigma);
    let k = k_of_beltrami(&pair).unwrap_or(f64::INFINITY);
    EllipticityReport { alpha, beta, k_beltrami: k, lambda: (alpha / beta).sqrt(), p_sup: p_sup_of(k) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S3: f64 = 1.732_050_807_568_877_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hall_half() -> Mat2 {
        Mat2::new(0.5, S3 / 2.0, -S3 / 2.0, 0.5)
    }

    #[test]
    fn zero_pair_is_identity() {
        let s = sigma_from_beltrami(&BeltramiPair::ZERO).unwrap();
        assert_eq!(s.entries(), Mat2::IDENTITY);
        assert_eq!(beltrami_from_sigma(&Conductivity::IDENTITY), BeltramiPair::ZERO);
    }

    #[test]
    fn extremal_hall_matrix() {
        let pair = BeltramiPair::new(c(0.0, 0.0), c(0.0, S3 / 3.0)).unwrap();
        let s = sigma_from_beltrami(&pair).unwrap();
        assert!(s.entries().max_abs_diff(&hall_half()) < 1e-15);

        let back = beltrami_from_sigma(&Conductivity::new(hall_half()).unwrap());
        assert!(back.max_abs_diff(&pair) < 1e-15);
        let k = 2.0 + S3;
        assert!((back.dilatation_sum() - (k - 1.0) / (k + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn isotropic_two() {
        let pair = BeltramiPair::new(c(0.0, 0.0), c(-1.0 / 3.0, 0.0)).unwrap();
        let s = sigma_from_beltrami(&pair).unwrap();
        assert!(s.entries().max_abs_diff(&Mat2::diag(2.0, 2.0)) < 1e-15);
        let back = beltrami_from_sigma(&Conductivity::new(Mat2::diag(2.0, 2.0)).unwrap());
        assert!(back.max_abs_diff(&pair) < 1e-16);
    }

    #[test]
    fn best_constants_examples() {
        assert_eq!(ellipticity_constants(&Conductivity::IDENTITY), (1.0, 1.0));
        let (a, b) = ellipticity_constants(&Conductivity::new(Mat2::diag(2.0, 3.0)).unwrap());
        assert!((a - 2.0).abs() < 1e-15 && (b - 3.0).abs() < 1e-14);
        let (a, b) = ellipticity_constants(&Conductivity::new(hall_half()).unwrap());
        assert!((a - 0.5).abs() < 1e-15 && (b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_elliptic_rejected() {
        assert!(matches!(Conductivity::new(Mat2::diag(1.0, -1.0)), Err(Error::NotElliptic(_))));
        assert!(Conductivity::new(Mat2::new(0.0, 1.0, -1.0, 0.0)).is_err());
        assert!(BeltramiPair::new(c(0.6, 0.0), c(0.0, 0.4)).is_err());
        let p = BeltramiPair { mu: c(0.7, 0.0), nu: c(-0.3, 0.0) };
        assert!(matches!(sigma_from_beltrami(&p), Err(Error::DegeneratePair(_))));
    }

    #[test]
    fn k_formulas() {
        assert_eq!(k_of_beltrami(&BeltramiPair::ZERO).unwrap(), 1.0);
        let half = BeltramiPair::new(c(0.25, 0.0), c(0.0, 0.25)).unwrap();
        assert!((k_of_beltrami(&half).unwrap() - 3.0).abs() < 1e-15);
        let p = BeltramiPair::new(c(0.0, 0.0), c(0.0, S3 / 3.0)).unwrap();
        assert!((k_of_beltrami(&p).unwrap() - (2.0 + S3)).abs() < 1e-14);

        assert_eq!(k_from_lambda(1.0, false).unwrap(), 1.0);
        assert_eq!(k_from_lambda(1.0, true).unwrap(), 1.0);
        assert!((k_from_lambda(0.5, false).unwrap() - (2.0 + S3)).abs() < 1e-15);
        assert_eq!(k_from_lambda(0.5, true).unwrap(), 2.0);
        assert!(k_from_lambda(0.0, false).is_err());
        assert!(k_from_lambda(1.5, true).is_err());
    }

    #[test]
    fn astala_examples() {
        let r = astala_exponent(1.0, 1.0).unwrap();
        assert_eq!(r.k_beltrami, 1.0);
        assert!(r.p_sup.is_infinite());
        for (a, b) in [(0.5, 2.0), (1.0, 4.0)] {
            let r = astala_exponent(a, b).unwrap();
            assert!((r.k_beltrami - (2.0 + S3)).abs() < 1e-14);
            assert!((r.p_sup - (1.0 + S3)).abs() < 1e-14);
        }
        assert!(astala_exponent(2.0, 1.0).is_err());
        assert!(astala_exponent(0.0, 1.0).is_err());
    }

    #[test]
    fn normalization_examples() {
        let (s, scale) = normalize_sigma(&Conductivity::IDENTITY);
        assert_eq!((s.entries(), scale), (Mat2::IDENTITY, 1.0));

        let (s, scale) = normalize_sigma(&Conductivity::new(Mat2::diag(1.0, 4.0)).unwrap());
        assert_eq!(scale, 0.5);
        assert!(s.entries().max_abs_diff(&Mat2::diag(0.5, 2.0)) < 1e-15);
        let (a, b) = ellipticity_constants(&s);
        assert!((a - 0.5).abs() < 1e-15 && (b - 2.0).abs() < 1e-14);

        // already balanced: α = 1/2, β = 2
        let (s, scale) = normalize_sigma(&Conductivity::new(hall_half()).unwrap());
        assert!((scale - 1.0).abs() < 1e-14);
        let (a, b) = ellipticity_constants(&s);
        assert!((a - 0.5).abs() < 1e-14 && (b - 2.0).abs() < 1e-13);
    }

    fn arb_pair(max_sum: f64) -> impl Strategy<Value = BeltramiPair> {
        (0.0..max_sum, 0.0..1.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(
            move |(s, split, a1, a2)| BeltramiPair {
                mu: Complex64::from_polar(s * split, a1),
                nu: Complex64::from_polar(s * (1.0 - split), a2),
            },
        )
    }

    proptest! {
        #[test]
        fn roundtrip_pair(p in arb_pair(0.95)) {
            let s = sigma_from_beltrami(&p).unwrap();
            let back = beltrami_from_sigma(&s);
            prop_assert!(back.max_abs_diff(&p) < 1e-12);
        }

        #[test]
        fn forward_constants_bounded_by_k(
            split in 0.0..1.0f64, a1 in 0.0..std::f64::consts::TAU, a2 in 0.0..std::f64::consts::TAU,
            k in 1.0..20.0f64,
        ) {
            let s = (k - 1.0) / (k + 1.0);
            let p = BeltramiPair { mu: Complex64::from_polar(s * split, a1), nu: Complex64::from_polar(s * (1.0 - split), a2) };
            let sigma = sigma_from_beltrami(&p).unwrap();
            let (alpha, beta) = ellipticity_constants(&sigma);
            prop_assert!(alpha >= 1.0 / k - 1e-10);
            prop_assert!(beta <= k + 1e-10);
        }

        #[test]
        fn backward_k_bounded(lambda in 0.05..1.0f64, t in 0.0..1.0f64, angle in 0.0..std::f64::consts::TAU, skew in -1.0..1.0f64) {
            // random matrix in M(λ, 1/λ): symmetric part with spectrum in [λ, 1/λ]
            // plus a skew part, rescaled until both constants fit
            let (c, s) = (angle.cos(), angle.sin());
            let e1 = lambda + t * (1.0 / lambda - lambda);
            let rot = Mat2::new(c, -s, s, c);
            let sym = rot * Mat2::diag(lambda, e1) * rot.transpose();
            let m = sym + Mat2::new(0.0, skew, -skew, 0.0);
            let sigma = Conductivity::new(m).unwrap();
            let (alpha, beta) = ellipticity_constants(&sigma);
            prop_assume!(alpha >= lambda - 1e-15 && beta <= 1.0 / lambda + 1e-12);
            let k = k_of_beltrami(&beltrami_from_sigma(&sigma)).unwrap();
            prop_assert!(k <= k_from_lambda(lambda, false).unwrap() + 1e-10);
        }

        #[test]
        fn astala_scale_invariant(a in 0.01..10.0f64, r in 1.0..50.0f64, c in 0.01..100.0f64) {
            let r1 = astala_exponent(a, a * r).unwrap();
            let r2 = astala_exponent(c * a, c * a * r).unwrap();
            prop_assert!((r1.k_beltrami - r2.k_beltrami).abs() <= 1e-12 * r1.k_beltrami);
            prop_assert!((r1.p_sup - r2.p_sup).abs() <= 1e-12 * r1.p_sup.max(1.0) || r1.p_sup == r2.p_sup);
        }
    }

    #[test]
    fn forward_equality_cases() {
        // ν real positive attains α = 1/K, ν real negative attains β = K; σ symmetric in both
        for k in [1.5, 2.0, 5.0] {
            let s = (k - 1.0) / (k + 1.0);
            let plus = sigma_from_beltrami(&BeltramiPair { mu: c(0.0, 0.0), nu: c(s, 0.0) }).unwrap();
            let minus = sigma_from_beltrami(&BeltramiPair { mu: c(0.0, 0.0), nu: c(-s, 0.0) }).unwrap();
            assert!((ellipticity_constants(&plus).0 - 1.0 / k).abs() < 1e-12);
            assert!((ellipticity_constants(&minus).1 - k).abs() < 1e-12);
            assert_eq!(plus.entries().skew(), 0.0);
            assert_eq!(minus.entries().skew(), 0.0);
        }
    }

    #[test]
    fn backward_near_equality_for_extremal_matrices() {
        for lambda in [0.2f64, 0.5, 0.9] {
            let b = (1.0 - lambda * lambda).sqrt();
            for sign in [1.0, -1.0] {
                let s = Conductivity::new(Mat2::new(lambda, sign * b, -sign * b, lambda)).unwrap();
                let k = k_of_beltrami(&beltrami_from_sigma(&s)).unwrap();
                assert!((k - k_from_lambda(lambda, false).unwrap()).abs() < 1e-10 * k);
            }
        }
    }
}
