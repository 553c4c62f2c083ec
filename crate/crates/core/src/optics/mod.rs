//! Forward model of the screen → wall → camera channel and its regularized
//! inverse.
//!
//! `apply_transfer` runs, in order: luminance attenuation, viewpoint warp,
//! diffuse Gaussian blur (width grows linearly with distance), inverse-square
//! radiometric falloff, camera response `v^(1/gamma)`, optional speckle
//! (multiplicative) noise, additive Gaussian noise, and a clamp at zero.
//!
//! The blur is circular: the PSF lives on the periodic grid, so the blur
//! preserves total energy exactly and is diagonal in the Fourier domain.

mod channel;
mod psf;
mod warp;

pub use channel::LinearChannel;
pub use psf::{gaussian_psf, GaussianBlur};
pub use warp::{geometric_warp, warp_with_homography, Homography, Pose, SparseWarp, MAX_ANGLE_DEG};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Field2D, Rng};

/// Ψ output range.
pub const INVERSE_CLAMP: (f64, f64) = (0.0, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    /// Blur standard deviation in pixels at `base_distance_m`.
    pub psf_sigma: f64,
    pub albedo: f64,
    pub base_distance_m: f64,
    pub distance_m: f64,
    pub brightness_offset_nits: f64,
    pub gamma: f64,
    pub noise_sigma: f64,
    /// Std of unit-mean multiplicative noise; 0 disables it.
    pub speckle_contrast: f64,
    pub pose: Pose,
    pub screen_max_nits: f64,
    pub noise_seed: u64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            psf_sigma: 1.0,
            albedo: 1.0,
            base_distance_m: 2.0,
            distance_m: 2.0,
            brightness_offset_nits: 0.0,
            gamma: 1.0,
            noise_sigma: 0.0,
            speckle_contrast: 0.0,
            pose: Pose::default(),
            screen_max_nits: 300.0,
            noise_seed: 0,
        }
    }
}

impl OpticsConfig {
    /// Every stage reduced to the identity.
    pub fn identity() -> Self {
        OpticsConfig {
            psf_sigma: 0.0,
            ..OpticsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite, got {v}")))
            }
        };
        finite("psf_sigma", self.psf_sigma)?;
        finite("albedo", self.albedo)?;
        finite("base_distance_m", self.base_distance_m)?;
        finite("distance_m", self.distance_m)?;
        finite("brightness_offset_nits", self.brightness_offset_nits)?;
        finite("gamma", self.gamma)?;
        finite("noise_sigma", self.noise_sigma)?;
        finite("speckle_contrast", self.speckle_contrast)?;
        finite("screen_max_nits", self.screen_max_nits)?;
        if self.psf_sigma < 0.0 {
            return Err(Error::config("psf_sigma", "must be ≥ 0"));
        }
        if !(self.albedo > 0.0 && self.albedo <= 1.0) {
            return Err(Error::config(
                "albedo",
                format!("must lie in (0, 1], got {}", self.albedo),
            ));
        }
        if self.base_distance_m <= 0.0 {
            return Err(Error::config("base_distance_m", "must be > 0"));
        }
        if self.distance_m <= 0.0 {
            return Err(Error::config("distance_m", "must be > 0"));
        }
        if self.brightness_offset_nits < 0.0 {
            return Err(Error::config("brightness_offset_nits", "must be ≥ 0"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::config("gamma", "must be > 0"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::config("noise_sigma", "must be ≥ 0"));
        }
        if self.speckle_contrast < 0.0 {
            return Err(Error::config("speckle_contrast", "must be ≥ 0"));
        }
        if self.screen_max_nits <= 0.0 {
            return Err(Error::config("screen_max_nits", "must be > 0"));
        }
        self.pose.validate().map_err(|e| Error::config("pose", e.to_string()))
    }

    /// Blur width at the configured distance.
    pub fn effective_sigma(&self) -> f64 {
        self.psf_sigma * self.distance_m / self.base_distance_m
    }

    /// Radiometric factor `albedo · (d₀ / d)²`.
    pub fn radiometric_scale(&self) -> f64 {
        let ratio = self.base_distance_m / self.distance_m;
        self.albedo * ratio * ratio
    }

    /// Luminance left after the brightness reduction, normalized units.
    pub fn attenuate(&self, radiance: f64) -> f64 {
        if self.brightness_offset_nits == 0.0 {
            return radiance.max(0.0);
        }
        (radiance * self.screen_max_nits - self.brightness_offset_nits).max(0.0) / self.screen_max_nits
    }
}

/// Source radiance in `[0, 1]`, where 1 is `screen_max_nits`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenImage {
    radiance: Field2D,
}

impl ScreenImage {
    /// Clamps into `[0, 1]`; non-finite values are rejected.
    pub fn new(radiance: Field2D) -> Result<Self> {
        if !radiance.is_finite() {
            return Err(Error::InvalidArgument("screen radiance must be finite".into()));
        }
        Ok(ScreenImage {
            radiance: radiance.clamp(0.0, 1.0),
        })
    }

    pub fn radiance(&self) -> &Field2D {
        &self.radiance
    }

    pub fn into_field(self) -> Field2D {
        self.radiance
    }
}

/// Camera measurement of the wall, nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct WallObservation {
    irradiance: Field2D,
}

impl WallObservation {
    pub fn new(irradiance: Field2D) -> Result<Self> {
        if !irradiance.is_finite() || irradiance.min() < 0.0 {
            return Err(Error::InvalidArgument(
                "observation must be finite and nonnegative".into(),
            ));
        }
        Ok(WallObservation { irradiance })
    }

    pub fn irradiance(&self) -> &Field2D {
        &self.irradiance
    }

    pub fn into_field(self) -> Field2D {
        self.irradiance
    }
}

/// Simulates one camera capture of `screen`. Noise draws come from `rng`.
pub fn apply_transfer(screen: &ScreenImage, cfg: &OpticsConfig, rng: &mut Rng) -> Result<WallObservation> {
    cfg.validate()?;
    let (h, w) = screen.radiance.dims();
    let lum = screen.radiance.map(|v| cfg.attenuate(v));
    let warped = geometric_warp(&lum, &cfg.pose)?;
    let blurred = GaussianBlur::new(h, w, cfg.effective_sigma()).apply(&warped);
    let scale = cfg.radiometric_scale();
    let inv_gamma = 1.0 / cfg.gamma;
    let mut out = blurred.map(|v| {
        let v = (scale * v).max(0.0);
        if cfg.gamma == 1.0 {
            v
        } else {
            v.powf(inv_gamma)
        }
    });
    if cfg.speckle_contrast > 0.0 {
        for v in out.data_mut() {
            *v *= 1.0 + rng.normal(0.0, cfg.speckle_contrast);
        }
    }
    if cfg.noise_sigma > 0.0 {
        for v in out.data_mut() {
            *v += rng.normal(0.0, cfg.noise_sigma);
        }
    }
    out.map_inplace(|v| v.max(0.0));
    WallObservation::new(out)
}

/// [`apply_transfer`] with noise seeded from `cfg.noise_seed`.
pub fn observe(screen: &ScreenImage, cfg: &OpticsConfig) -> Result<WallObservation> {
    apply_transfer(screen, cfg, &mut Rng::new(cfg.noise_seed))
}

/// Regularized inverse Ψ: undoes the camera response, the radiometric scale,
/// the blur (Wiener filter `H / (H² + reg_eps)`) and the viewpoint warp, then
/// clamps to `[0, 2]`. The brightness reduction is not undone.
pub fn apply_inverse_approx(obs: &WallObservation, cfg: &OpticsConfig, reg_eps: f64) -> Result<Field2D> {
    let (lo, hi) = INVERSE_CLAMP;
    Ok(LinearChannel::new(cfg, obs.irradiance.dims(), reg_eps)?
        .inverse_linear(&linearize(obs.irradiance(), cfg))
        .clamp(lo, hi))
}

/// Undoes the camera response: `v ↦ v^gamma`.
pub fn linearize(obs: &Field2D, cfg: &OpticsConfig) -> Field2D {
    if cfg.gamma == 1.0 {
        obs.clone()
    } else {
        obs.map(|v| v.max(0.0).powf(cfg.gamma))
    }
}
