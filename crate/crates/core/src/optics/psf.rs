use crate::numerics::{dft2, idft2, Field2D};

/// Gaussian point spread function on the periodic `height × width` grid,
/// centred at `(0, 0)` with wrapped distances and normalized to unit sum.
///
/// `sigma == 0` gives the unit impulse.
pub fn gaussian_psf(height: usize, width: usize, sigma: f64) -> Field2D {
    let mut psf = Field2D::zeros(height, width);
    if sigma <= 0.0 {
        psf.set(0, 0, 1.0);
        return psf;
    }
    let wrap = |k: usize, n: usize| -> f64 {
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    };
    let two_s2 = 2.0 * sigma * sigma;
    for r in 0..height {
        let dy = wrap(r, height);
        for c in 0..width {
            let dx = wrap(c, width);
            psf.set(r, c, (-(dx * dx + dy * dy) / two_s2).exp());
        }
    }
    let total = psf.sum();
    psf.map_inplace(|v| v / total);
    psf
}

/// Circular Gaussian blur applied through its optical transfer function.
///
/// The PSF is real and even on the periodic grid, so its transfer function
/// is real and the blur is self-adjoint.
#[derive(Debug, Clone)]
pub struct GaussianBlur {
    sigma: f64,
    /// `None` for the identity (`sigma == 0`).
    otf: Option<Field2D>,
}

impl GaussianBlur {
    pub fn new(height: usize, width: usize, sigma: f64) -> Self {
        let otf = (sigma > 0.0).then(|| {
            let spec = dft2(&gaussian_psf(height, width, sigma));
            let (h, w) = spec.dims();
            Field2D::from_vec(h, w, spec.data().iter().map(|z| z.re).collect()).expect("psf dims are positive")
        });
        GaussianBlur { sigma, otf }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_identity(&self) -> bool {
        self.otf.is_none()
    }

    /// Transfer function values, one real gain per frequency bin.
    pub fn transfer(&self) -> Option<&Field2D> {
        self.otf.as_ref()
    }

    pub fn apply(&self, field: &Field2D) -> Field2D {
        match &self.otf {
            None => field.clone(),
            Some(otf) => idft2(&dft2(field).mul_real(otf)),
        }
    }

    /// Wiener deconvolution `H / (H² + eps)` (H real).
    pub fn wiener(&self, field: &Field2D, eps: f64) -> Field2D {
        match &self.otf {
            None => field.clone(),
            Some(otf) => {
                let gain = otf.map(|h| h / (h * h + eps));
                idft2(&dft2(field).mul_real(&gain))
            }
        }
    }

    /// Applies an arbitrary real spectral gain `g(H)` built from the
    /// transfer function.
    pub fn filter_with(&self, field: &Field2D, gain: impl Fn(f64) -> f64) -> Field2D {
        match &self.otf {
            None => field.map(|v| gain(1.0) * v),
            Some(otf) => idft2(&dft2(field).mul_real(&otf.map(gain))),
        }
    }
}
