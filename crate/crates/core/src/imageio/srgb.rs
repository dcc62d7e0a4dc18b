//! The sRGB transfer curve (IEC 61966-2-1).

/// Encoded value in `[0, 1]` to linear light.
#[inline]
pub fn to_linear(encoded: f64) -> f64 {
    if encoded <= 0.04045 {
        encoded / 12.92
    } else {
        ((encoded + 0.055) / 1.055).powf(2.4)
    }
}

/// Linear light to encoded value. Input is clipped to `[0, 1]` first.
#[inline]
pub fn to_encoded(linear: f64) -> f64 {
    let c = linear.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Quantizes linear light to an integer code in `0..=max_code`.
#[inline]
pub fn quantize(linear: f64, max_code: u32) -> u32 {
    (to_encoded(linear) * max_code as f64).round() as u32
}
