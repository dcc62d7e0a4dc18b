//! Small numeric helpers shared by the filters and the mixture model.

/// Coefficients of `q` in `exp(r) ~ 1 + r q(r)` on `|r| <= ln2/2`, highest
/// degree first. A Chebyshev fit of `(exp(r) - 1) / r`; the relative error of
/// the whole approximation stays under 4e-14.
const EXP_COEFFS: [f64; 9] = [
    2.762_510_200_538_810_8e-6,
    2.487_616_402_262_596_7e-5,
    1.984_120_875_699_232e-4,
    1.388_882_167_763_036_2e-3,
    8.333_333_353_717_156e-3,
    4.166_666_689_095_7e-2,
    1.666_666_666_664_830_3e-1,
    4.999_999_999_979_793_4e-1,
    1.0,
];

/// `exp(x)` for `x <= 0`, written so it vectorizes: Cody-Waite reduction to
/// `|r| <= ln2/2` and a degree-9 polynomial. Inputs under -708 are clamped
/// (the result is then ~1e-308).
#[inline(always)]
pub(crate) fn exp_nonpositive(x: f64) -> f64 {
    const SHIFT: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let x = x.clamp(-708.0, 0.0);
    let shifted = x * std::f64::consts::LOG2_E + SHIFT;
    let n = shifted - SHIFT;
    let r = (x - n * LN2_HI) - n * LN2_LO;
    let mut p = EXP_COEFFS[0];
    for c in &EXP_COEFFS[1..] {
        p = p * r + c;
    }
    p = p * r + 1.0;
    let exponent = shifted
        .to_bits()
        .wrapping_sub(SHIFT.to_bits())
        .wrapping_add(1023)
        << 52;
    p * f64::from_bits(exponent)
}

/// Four-lane AVX2 counterparts of the scalar helpers.
#[cfg(target_arch = "x86_64")]
pub(crate) mod x86 {
    use std::arch::x86_64::*;

    /// True when the CPU can run the functions in this module.
    pub(crate) fn available() -> bool {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
    }

    use super::EXP_COEFFS;

    /// Lane-wise [`super::exp_nonpositive`]. Lanes must already be `<= 0`;
    /// unlike the scalar version this one only clamps from below.
    #[inline]
    #[target_feature(enable = "avx2,fma")]
    pub(crate) fn exp_nonpositive(x: __m256d) -> __m256d {
        const SHIFT: f64 = 6_755_399_441_055_744.0;
        const LN2_HI: f64 = 6.931_471_803_691_238e-1;
        const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
        let x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
        let shift = _mm256_set1_pd(SHIFT);
        let shifted = _mm256_fmadd_pd(x, _mm256_set1_pd(std::f64::consts::LOG2_E), shift);
        let n = _mm256_sub_pd(shifted, shift);
        let r = _mm256_fnmadd_pd(n, _mm256_set1_pd(LN2_HI), x);
        let r = _mm256_fnmadd_pd(n, _mm256_set1_pd(LN2_LO), r);
        let mut p = _mm256_set1_pd(EXP_COEFFS[0]);
        for c in &EXP_COEFFS[1..] {
            p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(*c));
        }
        p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
        let bits = _mm256_sub_epi64(_mm256_castpd_si256(shifted), _mm256_castpd_si256(shift));
        let scale = _mm256_slli_epi64::<52>(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)));
        _mm256_mul_pd(p, _mm256_castsi256_pd(scale))
    }

    #[inline]
    #[target_feature(enable = "avx2,fma")]
    pub(crate) fn to_array(v: __m256d) -> [f64; 4] {
        let mut out = [0.0; 4];
        // SAFETY: `out` holds exactly four f64.
        unsafe { _mm256_storeu_pd(out.as_mut_ptr(), v) };
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exp_matches_std() {
        let mut x = -708.0;
        while x <= 0.0 {
            let rel = (exp_nonpositive(x) - x.exp()).abs() / x.exp();
            assert!(rel < 1e-13, "x={x} rel={rel}");
            x += 0.0137;
        }
        assert_eq!(exp_nonpositive(0.0), 1.0);
        assert!(exp_nonpositive(-1e6) < 1e-300);
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn vector_exp_matches_scalar() {
        if !x86::available() {
            return;
        }
        // SAFETY: feature support checked above.
        unsafe {
            use std::arch::x86_64::_mm256_setr_pd;
            for base in [-700.0, -30.5, -1.0, -1e-3] {
                let got = x86::to_array(x86::exp_nonpositive(_mm256_setr_pd(base, base / 2.0, base / 3.0, 0.0)));
                for (g, x) in got.iter().zip([base, base / 2.0, base / 3.0, 0.0]) {
                    assert!((g - x.exp()).abs() <= 1e-13 * x.exp());
                }
            }
        }
    }
}
