//! Exact Gaussian moments `∫ v₁^a v₂^b v₃^c |v|^{2k} μ(v) dv` and the
//! hydrodynamic test-function constants built from them.

use std::f64::consts::PI;

/// `∫_ℝ x^n e^{−x²/2} dx`.
pub fn gaussian_moment_1d(n: u32) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    // √(2π)·(n−1)!!
    let mut m = (2.0 * PI).sqrt();
    let mut k = n as i64 - 1;
    while k > 1 {
        m *= k as f64;
        k -= 2;
    }
    m
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫ v₁^{e₀} v₂^{e₁} v₃^{e₂} |v|^{2k} μ(v) dv` with `μ = e^{−|v|²/2}`,
/// by multinomial expansion of `|v|^{2k}` into products of 1-D moments.
pub fn gaussian_moment(exponents: [u32; 3], radial_power: u32) -> f64 {
    let k = radial_power;
    let mut total = 0.0;
    for i in 0..=k {
        for j in 0..=(k - i) {
            let l = k - i - j;
            let coef = binomial(k, i) * binomial(k - i, j);
            total += coef
                * gaussian_moment_1d(exponents[0] + 2 * i)
                * gaussian_moment_1d(exponents[1] + 2 * j)
                * gaussian_moment_1d(exponents[2] + 2 * l);
        }
    }
    total
}

/// `β_c` with `∫(|v|² − β_c) v_i² μ = 0`.
pub fn beta_c() -> f64 {
    gaussian_moment([2, 0, 0], 1) / gaussian_moment([2, 0, 0], 0)
}

/// `β_b` with `∫(v_i² − β_b) μ = 0`.
pub fn beta_b() -> f64 {
    gaussian_moment([2, 0, 0], 0) / gaussian_moment([0, 0, 0], 0)
}

/// `β_a` with `∫(|v|² − β_a)(|v|² − 3) v_i² μ = 0`.
pub fn beta_a() -> f64 {
    let num = gaussian_moment([2, 0, 0], 2) - 3.0 * gaussian_moment([2, 0, 0], 1);
    let den = gaussian_moment([2, 0, 0], 1) - 3.0 * gaussian_moment([2, 0, 0], 0);
    num / den
}

/// `A = ∫(|v|² − β_c) v_i² (|v|² − 3)/√6 μ dv`.
pub fn constant_a() -> f64 {
    let b = beta_c();
    (gaussian_moment([2, 0, 0], 2) - (3.0 + b) * gaussian_moment([2, 0, 0], 1)
        + 3.0 * b * gaussian_moment([2, 0, 0], 0))
        / 6f64.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use gauss_quad::GaussHermite;
    use std::num::NonZeroUsize;

    /// Tensor Gauss–Hermite oracle for `∫ p(v) μ(v) dv`.
    fn hermite<F: Fn(f64, f64, f64) -> f64>(p: F) -> f64 {
        let gh = GaussHermite::new(NonZeroUsize::new(12).unwrap());
        let s = 2f64.sqrt();
        let mut total = 0.0;
        for (x, wx) in gh.iter() {
            for (y, wy) in gh.iter() {
                for (z, wz) in gh.iter() {
                    total += wx * wy * wz * p(s * x, s * y, s * z);
                }
            }
        }
        total * s * s * s
    }

    #[test]
    fn moments_match_hermite_oracle() {
        for (e, k) in [
            ([0, 0, 0], 0),
            ([2, 0, 0], 1),
            ([2, 2, 0], 0),
            ([4, 0, 2], 2),
            ([1, 0, 0], 1),
        ] {
            let oracle = hermite(|x, y, z| {
                x.powi(e[0] as i32)
                    * y.powi(e[1] as i32)
                    * z.powi(e[2] as i32)
                    * (x * x + y * y + z * z).powi(k as i32)
            });
            let exact = gaussian_moment(e, k);
            assert!(
                (oracle - exact).abs() <= 1e-10 * exact.abs().max(1.0),
                "{e:?} {k}"
            );
        }
        assert_relative_eq!(
            gaussian_moment([0, 0, 0], 0),
            (2.0 * PI).powf(1.5),
            max_relative = 1e-15
        );
    }

    #[test]
    fn hydrodynamic_constants() {
        assert_relative_eq!(beta_c(), 5.0, max_relative = 1e-15);
        assert_relative_eq!(beta_b(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(beta_a(), 10.0, max_relative = 1e-15);
        assert_relative_eq!(
            constant_a(),
            30.0 / (3.0 * 6f64.sqrt()) * (2.0 * PI).powf(1.5),
            max_relative = 1e-14
        );
        // ∫(v₁² − β_b) v₁² μ = 2(2π)^{3/2}
        assert_relative_eq!(
            gaussian_moment([4, 0, 0], 0) - beta_b() * gaussian_moment([2, 0, 0], 0),
            2.0 * (2.0 * PI).powf(1.5),
            max_relative = 1e-14
        );
    }
}
