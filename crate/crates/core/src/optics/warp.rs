//! Planar-wall viewpoint changes as 3×3 homographies.
//!
//! Pixel coordinates are `(x, y) = (col, row)`. The reference view looks
//! straight at the wall along +z with a pinhole of focal length
//! `max(height, width)` pixels and principal point at the image centre
//! `((W − 1) / 2, (H − 1) / 2)`; the wall is the plane `z = 1`.
//!
//! * Camera rotation: roll turns the image about its centre; pitch and yaw
//!   tilt the view, which keeps the centre fixed and foreshortens through
//!   the projective row `(tan yaw, tan pitch, 1)` in normalized coordinates.
//! * Orbital motion: the camera moves on a horizontal / vertical arc around
//!   the wall point on the optical axis while keeping that point centred,
//!   which shifts the camera centre and foreshortens the wall patch.
//!
//! An orbited camera with rotation `R` and centre `C` sees the wall through
//! `K · R · (I − C nᵀ) · K⁻¹` with `n = (0, 0, 1)`; the tilt and roll are
//! applied after it in normalized coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bilinear_taps, Field2D};

pub const MAX_ANGLE_DEG: f64 = 45.0;

/// Camera pose relative to the frontal reference view, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pose {
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub roll_deg: f64,
    pub horiz_arc_deg: f64,
    pub vert_arc_deg: f64,
}

impl Pose {
    pub fn rotation(pitch_deg: f64, yaw_deg: f64, roll_deg: f64) -> Self {
        Pose {
            pitch_deg,
            yaw_deg,
            roll_deg,
            ..Pose::default()
        }
    }

    pub fn orbit(horiz_arc_deg: f64, vert_arc_deg: f64) -> Self {
        Pose {
            horiz_arc_deg,
            vert_arc_deg,
            ..Pose::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        self.angles().iter().all(|&a| a == 0.0)
    }

    fn angles(&self) -> [f64; 5] {
        [
            self.pitch_deg,
            self.yaw_deg,
            self.roll_deg,
            self.horiz_arc_deg,
            self.vert_arc_deg,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 5] = ["pitch_deg", "yaw_deg", "roll_deg", "horiz_arc_deg", "vert_arc_deg"];
        for (name, a) in NAMES.iter().zip(self.angles()) {
            if !a.is_finite() || a.abs() > MAX_ANGLE_DEG {
                return Err(Error::InvalidPose(format!(
                    "{name} = {a} outside [-{MAX_ANGLE_DEG}, {MAX_ANGLE_DEG}] degrees"
                )));
            }
        }
        Ok(())
    }
}

type Mat3 = [[f64; 3]; 3];

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn rot_x(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn rot_y(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rot_z(t: f64) -> Mat3 {
    let (s, c) = t.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Projective map between pixel grids, acting on homogeneous `(x, y, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Mat3);

impl Homography {
    pub const IDENTITY: Homography = Homography([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Map from reference-view pixels to camera pixels for `pose`.
    pub fn from_pose(pose: &Pose, height: usize, width: usize) -> Result<Self> {
        pose.validate()?;
        let f = height.max(width) as f64;
        let cx = (width as f64 - 1.0) / 2.0;
        let cy = (height as f64 - 1.0) / 2.0;
        let k = [[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]];
        let k_inv = [[1.0 / f, 0.0, -cx / f], [0.0, 1.0 / f, -cy / f], [0.0, 0.0, 1.0]];

        let orbit = matmul(
            &rot_x(-pose.vert_arc_deg.to_radians()),
            &rot_y(pose.horiz_arc_deg.to_radians()),
        );
        // Camera centre: one wall-distance back from (0, 0, 1) along the
        // orbited optical axis (third row of the world→camera rotation).
        let centre = [-orbit[2][0], -orbit[2][1], 1.0 - orbit[2][2]];
        let tilt = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [pose.yaw_deg.to_radians().tan(), pose.pitch_deg.to_radians().tan(), 1.0],
        ];
        let turn = matmul(&rot_z(pose.roll_deg.to_radians()), &tilt);
        let r = matmul(&turn, &orbit);
        // I − C nᵀ with n = e_z only touches the third column.
        let plane = [
            [1.0, 0.0, -centre[0]],
            [0.0, 1.0, -centre[1]],
            [0.0, 0.0, 1.0 - centre[2]],
        ];
        Ok(Homography(matmul(&k, &matmul(&r, &matmul(&plane, &k_inv)))))
    }

    pub fn compose(&self, then: &Homography) -> Homography {
        Homography(matmul(&then.0, &self.0))
    }

    pub fn inverse(&self) -> Result<Homography> {
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::InvalidPose("singular homography".into()));
        }
        let mut inv = adj;
        inv.iter_mut().flatten().for_each(|v| *v /= det);
        Ok(Homography(inv))
    }

    /// Applies the map to `(x, y)`; `None` when the point maps behind the
    /// camera or to infinity.
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let m = &self.0;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w <= 1e-12 {
            return None;
        }
        Some((
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        ))
    }
}

/// Precomputed bilinear resampling `out[p] = Σ w · in[q]`, stored as a
/// sparse matrix so the forward map and its exact transpose share weights.
#[derive(Debug, Clone)]
pub struct SparseWarp {
    height: usize,
    width: usize,
    /// Row `p` of the matrix: `offsets[p]..offsets[p + 1]` into `taps`.
    offsets: Vec<usize>,
    taps: Vec<(usize, f64)>,
}

impl SparseWarp {
    /// Resampling that produces `out(p) = in(H⁻¹ p)`, i.e. pushes the image
    /// forward through `h`. Pixels whose preimage leaves the frame are 0.
    pub fn push_forward(h: &Homography, height: usize, width: usize) -> Result<Self> {
        let back = h.inverse()?;
        let mut offsets = Vec::with_capacity(height * width + 1);
        let mut taps = Vec::with_capacity(4 * height * width);
        offsets.push(0);
        for r in 0..height {
            for c in 0..width {
                if let Some((x, y)) = back.apply(c as f64, r as f64) {
                    taps.extend(bilinear_taps(height, width, y, x));
                }
                offsets.push(taps.len());
            }
        }
        Ok(SparseWarp {
            height,
            width,
            offsets,
            taps,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn apply(&self, field: &Field2D) -> Field2D {
        assert_eq!(field.dims(), self.dims(), "warp dimension mismatch");
        let src = field.data();
        let data = self
            .offsets
            .windows(2)
            .map(|w| self.taps[w[0]..w[1]].iter().map(|&(q, wt)| wt * src[q]).sum())
            .collect();
        Field2D::from_vec(self.height, self.width, data).expect("warp dims are positive")
    }

    /// Exact transpose of [`SparseWarp::apply`].
    pub fn apply_transpose(&self, field: &Field2D) -> Field2D {
        assert_eq!(field.dims(), self.dims(), "warp dimension mismatch");
        let mut out = Field2D::zeros(self.height, self.width);
        let dst = out.data_mut();
        for (p, w) in self.offsets.windows(2).enumerate() {
            let v = field.data()[p];
            for &(q, wt) in &self.taps[w[0]..w[1]] {
                dst[q] += wt * v;
            }
        }
        out
    }

    /// 1 where the output pixel has full in-frame support, else 0.
    pub fn coverage(&self) -> Field2D {
        let data = self
            .offsets
            .windows(2)
            .map(|w| self.taps[w[0]..w[1]].iter().map(|&(_, wt)| wt).sum())
            .collect();
        Field2D::from_vec(self.height, self.width, data).expect("warp dims are positive")
    }
}

/// Resamples `field` as seen from `pose`. The identity pose returns the input
/// unchanged (bit-identical).
pub fn geometric_warp(field: &Field2D, pose: &Pose) -> Result<Field2D> {
    pose.validate()?;
    if pose.is_identity() {
        return Ok(field.clone());
    }
    let (h, w) = field.dims();
    let hom = Homography::from_pose(pose, h, w)?;
    Ok(SparseWarp::push_forward(&hom, h, w)?.apply(field))
}

/// Warps through an explicit homography (reference → output pixels).
pub fn warp_with_homography(field: &Field2D, hom: &Homography) -> Result<Field2D> {
    let (h, w) = field.dims();
    Ok(SparseWarp::push_forward(hom, h, w)?.apply(field))
}
