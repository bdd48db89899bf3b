use super::Real;

/// Predictions are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

fn clamp_prob<T: Real>(p: T) -> T {
    let eps = T::of_f64(PROB_CLAMP);
    p.max(eps).min(T::one() - eps)
}

/// Binary cross-entropy `-[t ln p + (1-t) ln(1-p)]`.
pub fn bce_loss<T: Real>(pred: T, target: T) -> T {
    let p = clamp_prob(pred);
    -(target * p.ln() + (T::one() - target) * (T::one() - p).ln())
}

/// `dL/dp` at the clamped prediction.
pub fn bce_grad<T: Real>(pred: T, target: T) -> T {
    let p = clamp_prob(pred);
    (p - target) / (p * (T::one() - p))
}

/// `dL/dz` for `p = sigmoid(z)`, i.e. `p - t`. Used through the network
/// head; it stays informative when the clamp would saturate `dL/dp`.
pub fn bce_logit_grad<T: Real>(pred: T, target: T) -> T {
    pred - target
}
