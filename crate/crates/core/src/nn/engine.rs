use super::{MlpConfig, ParameterSet, SdfEvaluation, SpaceTimePoint, INPUT_DIM};
use crate::{Result, Vec3};
use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array2, ArrayView2, ArrayViewMut2, Axis, Zip};
use rayon::prelude::*;

/// Samples per evaluation chunk.
pub(crate) const CHUNK: usize = 256;

/// Column blocks per sample when tangents are carried: the value and one
/// directional derivative per input axis.
pub(crate) const FULL_BLOCKS: usize = 1 + INPUT_DIM;

/// Recorded activations of one batched forward pass.
///
/// Columns are block-major: block `b` holds columns `b*n .. (b+1)*n`, where
/// block 0 carries values and block `1 + k` the derivative along input `k`.
pub(crate) struct Trace {
    n: usize,
    blocks: usize,
    /// Input of every hidden layer, `fan_in x blocks*n`.
    inputs: Vec<Array2<f64>>,
    /// ReLU masks of the value block, `width x n`.
    masks: Vec<Array2<f64>>,
    last_hidden: Array2<f64>,
    output: Array2<f64>,
}

fn input_matrix(points: &[[f64; INPUT_DIM]], blocks: usize) -> Array2<f64> {
    let n = points.len();
    let mut x = Array2::zeros((INPUT_DIM, blocks * n));
    for (i, p) in points.iter().enumerate() {
        for (k, &v) in p.iter().enumerate() {
            x[[k, i]] = v;
        }
    }
    for k in 0..blocks.saturating_sub(1) {
        x.slice_mut(s![k, (k + 1) * n..(k + 2) * n]).fill(1.0);
    }
    x
}

fn apply_mask(z: &mut Array2<f64>, mask: &Array2<f64>, n: usize, blocks: usize) {
    for b in 0..blocks {
        let mut block = z.slice_mut(s![.., b * n..(b + 1) * n]);
        block *= mask;
    }
}

/// One hidden layer: affine map (bias on the value block only), then ReLU
/// masks taken from the value block applied to every block.
fn hidden_layer(
    layer: &super::Layer,
    input: &Array2<f64>,
    n: usize,
    blocks: usize,
) -> (Array2<f64>, Array2<f64>) {
    let mut z = layer.weight.dot(input);
    {
        let mut values = z.slice_mut(s![.., 0..n]);
        values += &layer.bias.view().insert_axis(Axis(1));
    }
    let mask = z
        .slice(s![.., 0..n])
        .mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    apply_mask(&mut z, &mask, n, blocks);
    (z, mask)
}

fn layer_input(config: &MlpConfig, index: usize, prev: Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    if index + 1 == config.skip_layer_index {
        concatenate(Axis(0), &[prev.view(), x.view()]).expect("row counts agree")
    } else {
        prev
    }
}

impl Trace {
    pub(crate) fn record(
        params: &ParameterSet,
        config: &MlpConfig,
        points: &[[f64; INPUT_DIM]],
        with_tangents: bool,
    ) -> Self {
        let n = points.len();
        let blocks = if with_tangents { FULL_BLOCKS } else { 1 };
        let x = input_matrix(points, blocks);
        let layers = params.layers();
        let (hidden, out_layer) = layers.split_at(layers.len() - 1);

        let mut inputs = Vec::with_capacity(hidden.len());
        let mut masks = Vec::with_capacity(hidden.len());
        let mut h = x.clone();
        for (i, layer) in hidden.iter().enumerate() {
            let input = layer_input(config, i, h, &x);
            let (z, mask) = hidden_layer(layer, &input, n, blocks);
            inputs.push(input);
            masks.push(mask);
            h = z;
        }
        let out = &out_layer[0];
        let mut output = out.weight.dot(&h);
        {
            let mut values = output.slice_mut(s![.., 0..n]);
            values += out.bias[0];
        }
        Self {
            n,
            blocks,
            inputs,
            masks,
            last_hidden: h,
            output,
        }
    }

    pub(crate) fn value(&self, i: usize) -> f64 {
        self.output[[0, i]]
    }

    /// Derivative of sample `i` along input axis `k`.
    pub(crate) fn tangent(&self, i: usize, k: usize) -> f64 {
        debug_assert!(self.blocks == FULL_BLOCKS);
        self.output[[0, (k + 1) * self.n + i]]
    }

    /// Reverse sweep. `seed` holds the loss adjoint of every output column
    /// (same block layout as the trace); parameter adjoints are added into
    /// `grad`, laid out like [`ParameterSet::to_flat`].
    pub(crate) fn backward(
        &self,
        params: &ParameterSet,
        config: &MlpConfig,
        seed: ArrayView2<'_, f64>,
        grad: &mut [f64],
    ) {
        let n = self.n;
        let layers = params.layers();
        let offsets = params.flat_offsets();
        let out_index = layers.len() - 1;
        let out = &layers[out_index];

        let width = config.width;
        let off = offsets[out_index];
        {
            let mut gw = ArrayViewMut2::from_shape((1, width), &mut grad[off..off + width])
                .expect("output weight block");
            general_mat_mul(1.0, &seed, &self.last_hidden.t(), 1.0, &mut gw);
        }
        grad[off + width] += seed.slice(s![0, 0..n]).sum();

        // outer product w_out^T * seed
        let mut adj = out.weight.t().dot(&seed);

        for i in (0..out_index).rev() {
            let layer = &layers[i];
            apply_mask(&mut adj, &self.masks[i], n, self.blocks);
            let (fan_out, fan_in) = layer.weight.dim();
            let off = offsets[i];
            {
                let mut gw = ArrayViewMut2::from_shape(
                    (fan_out, fan_in),
                    &mut grad[off..off + fan_out * fan_in],
                )
                .expect("weight block");
                general_mat_mul(1.0, &adj, &self.inputs[i].t(), 1.0, &mut gw);
            }
            let gb = &mut grad[off + fan_out * fan_in..off + fan_out * fan_in + fan_out];
            for (dst, row) in gb.iter_mut().zip(adj.slice(s![.., 0..n]).rows()) {
                *dst += row.sum();
            }
            if i > 0 {
                let input_adj = layer.weight.t().dot(&adj);
                let prev_width = if i + 1 == config.skip_layer_index {
                    fan_in - INPUT_DIM
                } else {
                    fan_in
                };
                adj = if prev_width == fan_in {
                    input_adj
                } else {
                    input_adj.slice(s![0..prev_width, ..]).to_owned()
                };
            }
        }
    }
}

/// Network values only, no trace retained.
fn forward_values(params: &ParameterSet, config: &MlpConfig, points: &[[f64; INPUT_DIM]]) -> Vec<f64> {
    let n = points.len();
    let x = input_matrix(points, 1);
    let layers = params.layers();
    let (hidden, out_layer) = layers.split_at(layers.len() - 1);
    let mut h = x.clone();
    for (i, layer) in hidden.iter().enumerate() {
        let input = layer_input(config, i, h, &x);
        let mut z = layer.weight.dot(&input);
        Zip::from(&mut z)
            .and_broadcast(&layer.bias.view().insert_axis(Axis(1)))
            .for_each(|z, &b| *z = (*z + b).max(0.0));
        h = z;
    }
    let out = &out_layer[0];
    let output = out.weight.dot(&h);
    (0..n).map(|i| output[[0, i]] + out.bias[0]).collect()
}

/// Evaluates `f` at one space-time point.
pub fn forward(params: &ParameterSet, config: &MlpConfig, p: &SpaceTimePoint) -> Result<f64> {
    params.check(config)?;
    Ok(forward_values(params, config, &[p.to_array()])[0])
}

/// Evaluates `f` together with its exact input gradient at one point.
pub fn forward_with_input_grad(
    params: &ParameterSet,
    config: &MlpConfig,
    p: &SpaceTimePoint,
) -> Result<SdfEvaluation> {
    params.check(config)?;
    let trace = Trace::record(params, config, &[p.to_array()], true);
    Ok(SdfEvaluation {
        value: trace.value(0),
        grad_x: Vec3::new(trace.tangent(0, 0), trace.tangent(0, 1), trace.tangent(0, 2)),
        grad_t: trace.tangent(0, 3),
    })
}

/// Evaluates `f` at many points. Chunks run in parallel; the result order
/// matches the input order and each value is independent of the chunking.
pub fn evaluate_batch(
    params: &ParameterSet,
    config: &MlpConfig,
    points: &[[f64; INPUT_DIM]],
) -> Result<Vec<f64>> {
    params.check(config)?;
    let chunks: Vec<Vec<f64>> = points
        .par_chunks(CHUNK)
        .map(|chunk| forward_values(params, config, chunk))
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Smallest |pre-activation| over all hidden units at `p`; used to keep
/// finite-difference probes away from ReLU kinks.
pub fn min_abs_preactivation(
    params: &ParameterSet,
    config: &MlpConfig,
    p: &SpaceTimePoint,
) -> Result<f64> {
    params.check(config)?;
    let x = input_matrix(&[p.to_array()], 1);
    let layers = params.layers();
    let mut h = x.clone();
    let mut min = f64::INFINITY;
    for (i, layer) in layers[..layers.len() - 1].iter().enumerate() {
        let input = layer_input(config, i, h, &x);
        let mut z = layer.weight.dot(&input);
        z.column_mut(0).zip_mut_with(&layer.bias, |z, b| *z += b);
        min = z.iter().fold(min, |m, v| m.min(v.abs()));
        h = z.mapv(|v| v.max(0.0));
    }
    Ok(min)
}
