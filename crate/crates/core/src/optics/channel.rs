use super::{GaussianBlur, Homography, OpticsConfig, SparseWarp};
use crate::error::{Error, Result};
use crate::numerics::Field2D;

/// The linear part of the forward model, `Φ_L x = s · B(W x)`, acting on
/// attenuated radiance and producing linearized (response-inverted)
/// observations. `W` is the viewpoint warp, `B` the circular blur and `s`
/// the radiometric scale.
#[derive(Debug, Clone)]
pub struct LinearChannel {
    dims: (usize, usize),
    blur: GaussianBlur,
    scale: f64,
    warp: Option<SparseWarp>,
    unwarp: Option<SparseWarp>,
    psi_eps: f64,
}

impl LinearChannel {
    /// `psi_eps` is the Wiener regularizer used by [`LinearChannel::inverse_linear`].
    pub fn new(cfg: &OpticsConfig, dims: (usize, usize), psi_eps: f64) -> Result<Self> {
        cfg.validate()?;
        if !(psi_eps > 0.0 && psi_eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Wiener regularizer must be positive, got {psi_eps}"
            )));
        }
        let (h, w) = dims;
        if h == 0 || w == 0 {
            return Err(Error::InvalidDimension(format!("{h}x{w}")));
        }
        let (warp, unwarp) = if cfg.pose.is_identity() {
            (None, None)
        } else {
            let hom = Homography::from_pose(&cfg.pose, h, w)?;
            (
                Some(SparseWarp::push_forward(&hom, h, w)?),
                Some(SparseWarp::push_forward(&hom.inverse()?, h, w)?),
            )
        };
        Ok(LinearChannel {
            dims,
            blur: GaussianBlur::new(h, w, cfg.effective_sigma()),
            scale: cfg.radiometric_scale(),
            warp,
            unwarp,
            psi_eps,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn blur(&self) -> &GaussianBlur {
        &self.blur
    }

    pub fn psi_eps(&self) -> f64 {
        self.psi_eps
    }

    /// True when `Φ_L` is diagonalized by the 2D DFT (no warp).
    pub fn is_circulant(&self) -> bool {
        self.warp.is_none()
    }

    pub fn forward(&self, x: &Field2D) -> Field2D {
        let warped = match &self.warp {
            Some(w) => w.apply(x),
            None => x.clone(),
        };
        self.blur.apply(&warped).scale(self.scale)
    }

    /// `Φ_Lᵀ v = Wᵀ B (s v)`; the blur is symmetric.
    pub fn adjoint(&self, v: &Field2D) -> Field2D {
        let blurred = self.blur.apply(&v.scale(self.scale));
        match &self.warp {
            Some(w) => w.apply_transpose(&blurred),
            None => blurred,
        }
    }

    /// `Φ_Lᵀ Φ_L x`.
    pub fn normal(&self, x: &Field2D) -> Field2D {
        self.adjoint(&self.forward(x))
    }

    /// Unclamped Ψ on linearized data: divide by `s`, Wiener-deconvolve,
    /// map back to the reference view.
    pub fn inverse_linear(&self, y_lin: &Field2D) -> Field2D {
        let unscaled = y_lin.scale(1.0 / self.scale);
        let deblurred = self.blur.wiener(&unscaled, self.psi_eps);
        match &self.unwarp {
            Some(u) => u.apply(&deblurred),
            None => deblurred,
        }
    }
}
