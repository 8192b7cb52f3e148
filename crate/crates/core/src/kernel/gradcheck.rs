//! Central finite differences for checking analytic gradients.

/// Step used for central differences in gradient checks.
pub const GRADCHECK_STEP: f64 = 1e-5;

/// Magnitudes below this are compared absolutely: central differences carry
/// roughly `eps * |loss| / h` (about 1e-11) of round-off, which would swamp a
/// relative comparison of near-zero gradients.
const RELATIVE_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Numerical gradient of `loss` with respect to every entry of every tensor
/// exposed by `tensors`, in the same order. Entries are restored exactly after
/// being probed.
pub fn finite_difference<M, T, L>(model: &mut M, h: f64, mut tensors: T, loss: L) -> Vec<Vec<f64>>
where
    T: for<'a> FnMut(&'a mut M) -> Vec<&'a mut [f64]>,
    L: Fn(&M) -> f64,
{
    let shapes: Vec<usize> = tensors(model).iter().map(|t| t.len()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (t, &len) in shapes.iter().enumerate() {
        let mut grads = Vec::with_capacity(len);
        for k in 0..len {
            let original = tensors(model)[t][k];
            tensors(model)[t][k] = original + h;
            let plus = loss(model);
            tensors(model)[t][k] = original - h;
            let minus = loss(model);
            tensors(model)[t][k] = original;
            grads.push((plus - minus) / (2.0 * h));
        }
        out.push(grads);
    }
    out
}
