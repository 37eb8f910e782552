use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Mean squared error and its gradient with respect to `pred`.
///
/// With a weight mask (entries in `{0, 1}`) the mean runs over selected
/// entries only and ignored entries get a zero gradient.
pub fn mse_loss(pred: &Matrix, target: &Matrix, mask: Option<&Matrix>) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape {
            context: "mse_loss (pred vs target)",
            left: pred.shape(),
            right: target.shape(),
        });
    }
    if let Some(m) = mask {
        if m.shape() != pred.shape() {
            return Err(Error::Shape {
                context: "mse_loss (pred vs mask)",
                left: pred.shape(),
                right: m.shape(),
            });
        }
    }
    let weight = |i: usize| mask.map_or(1.0, |m| m.as_slice()[i]);
    let count: f64 = match mask {
        Some(m) => m.as_slice().iter().sum(),
        None => pred.as_slice().len() as f64,
    };
    if count <= 0.0 {
        return Err(Error::DegenerateMask);
    }
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut sum = 0.0;
    for (i, (g, (p, t))) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(pred.as_slice().iter().zip(target.as_slice()))
        .enumerate()
    {
        let w = weight(i);
        let d = p - t;
        sum += w * d * d;
        *g = 2.0 * w * d / count;
    }
    Ok((sum / count, grad))
}
