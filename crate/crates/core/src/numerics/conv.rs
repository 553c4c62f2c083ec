use super::Field2D;
use crate::error::{Error, Result};

/// Maps a possibly out-of-range index into `[0, n)` by mirror reflection about
/// the edge samples without repeating them (`… 2 1 | 0 1 2 … n-1 | n-2 …`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Same-size 2D convolution with reflective boundary handling.
///
/// `out[y, x] = Σ_{i,j} k[i, j] · f[y + r_y − i, x + r_x − j]`, i.e. a true
/// convolution (kernel flipped), with the kernel centre at `(r_y, r_x)`.
pub fn convolve2(field: &Field2D, kernel: &Field2D) -> Result<Field2D> {
    let (kh, kw) = kernel.dims();
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::InvalidKernel(format!(
            "kernel must be odd-sized in both dimensions, got {kh}x{kw}"
        )));
    }
    let (h, w) = field.dims();
    let (ry, rx) = ((kh / 2) as isize, (kw / 2) as isize);

    // Precompute reflected column indices once per kernel column offset.
    let col_map: Vec<Vec<usize>> = (0..kw)
        .map(|j| (0..w).map(|x| reflect_index(x as isize + rx - j as isize, w)).collect())
        .collect();

    let mut out = Field2D::zeros(h, w);
    for y in 0..h {
        let out_row = &mut out.data_mut()[y * w..(y + 1) * w];
        for i in 0..kh {
            let src_row = field.row(reflect_index(y as isize + ry - i as isize, h));
            for (j, cols) in col_map.iter().enumerate() {
                let k = kernel.get(i, j);
                if k == 0.0 {
                    continue;
                }
                for (o, &sx) in out_row.iter_mut().zip(cols) {
                    *o += k * src_row[sx];
                }
            }
        }
    }
    Ok(out)
}

// First difference along one axis: central inside, first-order one-sided at
// the two ends. Exact for functions linear along that axis.
fn diff_axis(field: &Field2D, along_rows: bool) -> Field2D {
    let (h, w) = field.dims();
    Field2D::from_fn(h, w, |r, c| {
        let (i, n) = if along_rows { (c, w) } else { (r, h) };
        let at = |k: usize| {
            if along_rows {
                field.get(r, k)
            } else {
                field.get(k, c)
            }
        };
        if n == 1 {
            0.0
        } else if i == 0 {
            at(1) - at(0)
        } else if i == n - 1 {
            at(n - 1) - at(n - 2)
        } else {
            0.5 * (at(i + 1) - at(i - 1))
        }
    })
}

/// Mixed second derivative `∂²f / ∂x∂y` with `x` the column axis.
///
/// Computed as the composition of two first-difference operators. At
/// interior points this is the standard four-point stencil
/// `(f[y+1,x+1] − f[y+1,x−1] − f[y−1,x+1] + f[y−1,x−1]) / 4`; on the border
/// rows/columns the first difference along the affected axis is one-sided
/// (forward on the first index, backward on the last).
pub fn mixed_second_derivative(field: &Field2D) -> Result<Field2D> {
    let (h, w) = field.dims();
    if h < 3 || w < 3 {
        return Err(Error::InvalidDimension(format!(
            "mixed derivative needs at least 3x3, got {h}x{w}"
        )));
    }
    Ok(diff_axis(&diff_axis(field, true), false))
}

/// Central-difference gradient `(∂f/∂x, ∂f/∂y)`, one-sided on the borders.
pub fn grad_components(field: &Field2D) -> Result<(Field2D, Field2D)> {
    let (h, w) = field.dims();
    if h < 2 || w < 2 {
        return Err(Error::InvalidDimension(format!(
            "gradient needs at least 2x2, got {h}x{w}"
        )));
    }
    Ok((diff_axis(field, true), diff_axis(field, false)))
}

/// Pointwise gradient magnitude `sqrt(gx² + gy²)`.
pub fn grad_magnitude(field: &Field2D) -> Result<Field2D> {
    let (gx, gy) = grad_components(field)?;
    Ok(gx.zip_map(&gy, |a, b| a.hypot(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn conv_oracle(f: &Field2D, k: &Field2D) -> Field2D {
        // Explicit padding into a larger buffer, then a plain nested loop.
        let (h, w) = f.dims();
        let (kh, kw) = k.dims();
        let (ry, rx) = (kh / 2, kw / 2);
        let mirror = |i: isize, n: usize| -> usize {
            let mut i = i;
            while i < 0 || i >= n as isize {
                if i < 0 {
                    i = -i;
                }
                if i >= n as isize {
                    i = 2 * (n as isize - 1) - i;
                }
            }
            i as usize
        };
        let ph = h + 2 * ry;
        let pw = w + 2 * rx;
        let padded = Field2D::from_fn(ph, pw, |r, c| {
            f.get(mirror(r as isize - ry as isize, h), mirror(c as isize - rx as isize, w))
        });
        Field2D::from_fn(h, w, |y, x| {
            let mut acc = 0.0;
            for i in 0..kh {
                for j in 0..kw {
                    acc += k.get(kh - 1 - i, kw - 1 - j) * padded.get(y + i, x + j);
                }
            }
            acc
        })
    }

    #[test]
    fn reflect_index_mirrors_without_repeating_edges() {
        let got: Vec<usize> = (-3..8).map(|i| reflect_index(i, 5)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect_index(-4, 1), 0);
    }

    #[test]
    fn identity_kernel() {
        let mut rng = Rng::new(1);
        let f = rng.uniform_field(5, 6, -1.0, 1.0);
        let out = convolve2(&f, &Field2D::filled(1, 1, 1.0)).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn impulse_reproduces_kernel() {
        let mut f = Field2D::zeros(7, 7);
        f.set(3, 3, 1.0);
        let k = Field2D::from_fn(3, 3, |r, c| (r * 3 + c + 1) as f64);
        let out = convolve2(&f, &k).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(out.get(2 + r, 2 + c), k.get(r, c));
            }
        }
        assert_eq!(out.sum(), k.sum());
    }

    #[test]
    fn even_kernel_rejected() {
        let f = Field2D::zeros(4, 4);
        let err = convolve2(&f, &Field2D::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::InvalidKernel(_)));
    }

    #[test]
    fn matches_padded_oracle() {
        let mut rng = Rng::new(42);
        for _ in 0..10 {
            let f = rng.uniform_field(6, 6, -1.0, 1.0);
            let k = rng.uniform_field(3, 3, -1.0, 1.0);
            let fast = convolve2(&f, &k).unwrap();
            let slow = conv_oracle(&f, &k);
            assert!(fast.max_abs_diff(&slow) < 1e-12);
        }
        // Kernel larger than the field exercises repeated reflection.
        let f = rng.uniform_field(3, 4, -1.0, 1.0);
        let k = rng.uniform_field(7, 9, -1.0, 1.0);
        assert!(convolve2(&f, &k).unwrap().max_abs_diff(&conv_oracle(&f, &k)) < 1e-12);
    }

    #[test]
    fn mixed_derivative_of_xy_is_one() {
        let f = Field2D::from_fn(6, 7, |y, x| (x * y) as f64);
        let d = mixed_second_derivative(&f).unwrap();
        for y in 0..6 {
            for x in 0..7 {
                assert!((d.get(y, x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixed_derivative_of_x2y2() {
        // Symbolically: central differences give ∂x(x²y²) = 2xy², then
        // ∂y(2xy²) = 4xy, exactly, at interior points.
        let f = Field2D::from_fn(7, 7, |y, x| ((x * x) * (y * y)) as f64);
        let d = mixed_second_derivative(&f).unwrap();
        for &(y, x) in &[(1usize, 1usize), (2, 3), (5, 4)] {
            assert_eq!(d.get(y, x), (4 * x * y) as f64);
        }
    }

    #[test]
    fn mixed_derivative_annihilates_affine() {
        let f = Field2D::from_fn(5, 8, |y, x| 0.3 - 1.7 * x as f64 + 2.5 * y as f64);
        let d = mixed_second_derivative(&f).unwrap();
        assert!(d.data().iter().all(|v| v.abs() < 1e-12));
        assert!(mixed_second_derivative(&Field2D::zeros(2, 5)).is_err());
    }

    #[test]
    fn gradient_of_ramp() {
        let f = Field2D::from_fn(5, 5, |_, x| x as f64);
        let g = grad_magnitude(&f).unwrap();
        assert!(g.data().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let c = grad_magnitude(&Field2D::filled(4, 4, 2.0)).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
        assert!(grad_magnitude(&Field2D::zeros(1, 4)).is_err());
    }

    #[test]
    fn gradient_matches_stencil_oracle() {
        let mut rng = Rng::new(5);
        let f = rng.uniform_field(6, 5, -1.0, 1.0);
        let g = grad_magnitude(&f).unwrap();
        let (h, w) = f.dims();
        for y in 0..h {
            for x in 0..w {
                let gx = match x {
                    0 => f.get(y, 1) - f.get(y, 0),
                    _ if x == w - 1 => f.get(y, x) - f.get(y, x - 1),
                    _ => (f.get(y, x + 1) - f.get(y, x - 1)) / 2.0,
                };
                let gy = match y {
                    0 => f.get(1, x) - f.get(0, x),
                    _ if y == h - 1 => f.get(y, x) - f.get(y - 1, x),
                    _ => (f.get(y + 1, x) - f.get(y - 1, x)) / 2.0,
                };
                assert!((g.get(y, x) - (gx * gx + gy * gy).sqrt()).abs() < 1e-14);
            }
        }
    }
}
