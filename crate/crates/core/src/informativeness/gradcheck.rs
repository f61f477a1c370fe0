use rand::seq::SliceRandom;

use super::network::CnnModel;
use crate::error::Result;
use crate::seed;
use crate::text::CharSequence;

pub const DEFAULT_GRADCHECK_SAMPLES: usize = 240;

#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    /// Parameter index with the largest error.
    pub worst_parameter: usize,
    pub checked: usize,
}

impl GradientCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// Compare back-propagated gradients with central differences.
pub fn gradient_check(model: &CnnModel, chars: &CharSequence, class: usize, epsilon: f64) -> Result<GradientCheck> {
    gradient_check_with(model, chars, class, epsilon, DEFAULT_GRADCHECK_SAMPLES, None, 0)
}

/// As [`gradient_check`], with the sample size and seed exposed. `flip_tensor`
/// negates the analytic gradient of one parameter tensor (by position in
/// [`CnnModel::parameter_tensors`]) to confirm the check can fail.
pub fn gradient_check_with(
    model: &CnnModel,
    chars: &CharSequence,
    class: usize,
    epsilon: f64,
    samples: usize,
    flip_tensor: Option<usize>,
    seed: u64,
) -> Result<GradientCheck> {
    let mut analytic = model.gradient(chars, class, 1.0)?;
    let tensors = model.parameter_tensors();
    if let Some(t) = flip_tensor {
        for g in &mut analytic[tensors[t].range()] {
            *g = -*g;
        }
    }
    // Smallest tensors first so their unused share passes to larger ones.
    // Within a tensor, parameters with a non-zero gradient are preferred;
    // weights for characters absent from the input are exactly zero.
    let mut rng = seed::rng(seed::derive_seed(seed, "gradcheck"));
    let mut order: Vec<usize> = (0..tensors.len()).collect();
    order.sort_by_key(|&t| (tensors[t].len(), t));
    let mut remaining = samples;
    let mut indices = Vec::new();
    for (pos, &t) in order.iter().enumerate() {
        let range = tensors[t].range();
        let take = (remaining / (order.len() - pos)).max(1).min(range.len());
        remaining = remaining.saturating_sub(take);
        let (mut active, mut idle): (Vec<usize>, Vec<usize>) = range.partition(|&i| analytic[i] != 0.0);
        active.shuffle(&mut rng);
        idle.shuffle(&mut rng);
        let from_active = take.min(active.len()).max(take.saturating_sub(idle.len()));
        indices.extend(active.into_iter().take(from_active));
        indices.extend(idle.into_iter().take(take - from_active));
    }
    indices.sort_unstable();
    let mut probe = model.clone();
    let mut result = GradientCheck {
        max_relative_error: 0.0,
        worst_parameter: 0,
        checked: indices.len(),
    };
    for i in indices {
        let orig = probe.params[i];
        probe.params[i] = orig + epsilon;
        let up = probe.loss(chars, class, 1.0)?;
        probe.params[i] = orig - epsilon;
        let down = probe.loss(chars, class, 1.0)?;
        probe.params[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if err > result.max_relative_error {
            result.max_relative_error = err;
            result.worst_parameter = i;
        }
    }
    Ok(result)
}
