use crate::error::{Error, Result};
use crate::numerics::{dft2, idft2_complex, signed_frequency, FeatureStack, Field2D};

/// Low-band indicator `χ_low` on the DFT grid; the high band is `1 − χ_low`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMask {
    mask: Field2D,
}

impl FrequencyMask {
    /// Hard radial mask: 1 where `√(u² + v²) ≤ cutoff` (cycles/pixel), else 0.
    pub fn radial(height: usize, width: usize, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "cutoff must lie in (0, 0.5] cycles/pixel, got {cutoff}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimension(format!("{height}x{width}")));
        }
        let mask = Field2D::from_fn(height, width, |u, v| {
            let fu = signed_frequency(u, height);
            let fv = signed_frequency(v, width);
            if fu.hypot(fv) <= cutoff {
                1.0
            } else {
                0.0
            }
        });
        Ok(FrequencyMask { mask })
    }

    /// Wraps an arbitrary mask after checking range and the negation symmetry
    /// `χ(u, v) = χ(−u, −v)` that keeps filtered real fields real.
    pub fn from_field(mask: Field2D) -> Result<Self> {
        if mask.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("mask values must lie in [0, 1]".into()));
        }
        let (h, w) = mask.dims();
        for u in 0..h {
            for v in 0..w {
                if mask.get(u, v) != mask.get((h - u) % h, (w - v) % w) {
                    return Err(Error::InvalidArgument(format!(
                        "mask is not symmetric under frequency negation at bin ({u}, {v})"
                    )));
                }
            }
        }
        Ok(FrequencyMask { mask })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }

    pub fn low(&self) -> &Field2D {
        &self.mask
    }

    pub fn high(&self) -> Field2D {
        self.mask.map(|m| 1.0 - m)
    }
}

/// Splits each channel into `(F⁻¹[χ_low F̂], F⁻¹[(1 − χ_low) F̂])`.
///
/// # Panics
/// Panics if an inverse transform leaves an imaginary part above
/// `1e-10 · max(1, max|F|)`, which a validated mask cannot produce.
pub fn frequency_split(input: &FeatureStack, mask: &FrequencyMask) -> Result<(FeatureStack, FeatureStack)> {
    if input.dims() != mask.dims() {
        return Err(Error::DimensionMismatch(format!(
            "features {:?} vs mask {:?}",
            input.dims(),
            mask.dims()
        )));
    }
    let high_mask = mask.high();
    let mut low = Vec::with_capacity(input.num_channels());
    let mut high = Vec::with_capacity(input.num_channels());
    for ch in input.iter() {
        let spec = dft2(ch);
        let scale = ch.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        low.push(real_part(ch.dims(), idft2_complex(&spec.mul_real(mask.low())), scale));
        high.push(real_part(ch.dims(), idft2_complex(&spec.mul_real(&high_mask)), scale));
    }
    Ok((FeatureStack::new(low)?, FeatureStack::new(high)?))
}

fn real_part((h, w): (usize, usize), data: Vec<num_complex::Complex64>, scale: f64) -> Field2D {
    let worst = data.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    assert!(
        worst <= 1e-10 * scale,
        "imaginary residue {worst:e} after masking; mask is not Hermitian-symmetric"
    );
    Field2D::from_vec(h, w, data.into_iter().map(|z| z.re).collect()).expect("dims are positive")
}
