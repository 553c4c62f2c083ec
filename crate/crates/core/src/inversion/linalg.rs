use crate::numerics::{Field2D, Rng};

pub const POWER_ITERATIONS: usize = 50;

const POWER_SEED: u64 = 0x9e37_79b9;

/// Dominant eigenvalue magnitude of a linear operator on `dims`-shaped
/// fields, from a fixed seeded start vector and [`POWER_ITERATIONS`]
/// iterations.
pub fn power_method(dims: (usize, usize), op: impl Fn(&Field2D) -> Field2D) -> f64 {
    let mut v = Rng::new(POWER_SEED).uniform_field(dims.0, dims.1, 0.5, 1.5);
    let n = v.norm();
    v.map_inplace(|a| a / n);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = op(&v);
        estimate = w.norm();
        if estimate == 0.0 {
            return 0.0;
        }
        v = w.scale(1.0 / estimate);
    }
    estimate
}

/// `iters` steps of conjugate gradients on `A x = b` for symmetric positive
/// definite `A`, warm-started at `x0`.
pub fn conjugate_gradient(op: impl Fn(&Field2D) -> Field2D, b: &Field2D, x0: &Field2D, iters: usize) -> Field2D {
    let mut x = x0.clone();
    let mut r = b.sub(&op(&x));
    let mut p = r.clone();
    let mut rr = r.norm_sq();
    for _ in 0..iters {
        if rr == 0.0 {
            break;
        }
        let ap = op(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_next = r.norm_sq();
        let beta = rr_next / rr;
        p = r.zip_map(&p, |ri, pi| ri + beta * pi);
        rr = rr_next;
    }
    x
}
