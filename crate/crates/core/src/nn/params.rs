//! Named access to parameter tensors.
//!
//! Everything that owns trainable tensors exposes them as `(name, tensor)`
//! pairs in a stable order, which is what the optimizer, the gradient checker
//! and the checkpoint format key on.

use super::layers::{Conv1d, Dense, FeedForward, Lstm};
use super::tensor::Tensor;

/// A fixed, ordered collection of named parameter tensors.
///
/// Implementations must return the same names in the same order from both
/// methods, and the order must not change over the life of the value.
pub trait ParamSet {
    fn params(&self) -> Vec<(String, &Tensor)>;
    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)>;

    /// Total number of scalar parameters.
    fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }
}

/// Prepend `prefix.` to every name in a parameter listing.
pub fn with_prefix<'a>(
    prefix: &str,
    items: Vec<(String, &'a Tensor)>,
) -> Vec<(String, &'a Tensor)> {
    items
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}

/// Mutable counterpart of [`with_prefix`].
pub fn with_prefix_mut<'a>(
    prefix: &str,
    items: Vec<(String, &'a mut Tensor)>,
) -> Vec<(String, &'a mut Tensor)> {
    items
        .into_iter()
        .map(|(n, t)| (format!("{prefix}.{n}"), t))
        .collect()
}

impl ParamSet for Dense {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("weights".to_string(), &self.weights),
            ("bias".to_string(), &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("weights".to_string(), &mut self.weights),
            ("bias".to_string(), &mut self.bias),
        ]
    }
}

impl ParamSet for Conv1d {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("kernels".to_string(), &self.kernels),
            ("bias".to_string(), &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("kernels".to_string(), &mut self.kernels),
            ("bias".to_string(), &mut self.bias),
        ]
    }
}

impl ParamSet for Lstm {
    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("w_input".to_string(), &self.w_input),
            ("w_recurrent".to_string(), &self.w_recurrent),
            ("bias".to_string(), &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        vec![
            ("w_input".to_string(), &mut self.w_input),
            ("w_recurrent".to_string(), &mut self.w_recurrent),
            ("bias".to_string(), &mut self.bias),
        ]
    }
}

impl ParamSet for FeedForward {
    fn params(&self) -> Vec<(String, &Tensor)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| with_prefix(&format!("layers.{i}"), l.params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(i, l)| with_prefix_mut(&format!("layers.{i}"), l.params_mut()))
            .collect()
    }
}
