use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Result of n-th max pooling: one value per filter column and the row it
/// came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled<T> {
    pub values: Tensor<T>,
    pub argrows: Vec<usize>,
    rows: usize,
}

impl<T: Scalar> Pooled<T> {
    pub fn input_rows(&self) -> usize {
        self.rows
    }
}

/// Per column of `c` (`[M, K]`), the `n`-th largest value over rows where
/// `mask` is true. Ties go to the smaller row index; `n = 1` is max pooling.
pub fn nth_max_pool<T: Scalar>(c: &Tensor<T>, n: usize, mask: &[bool]) -> Result<Pooled<T>> {
    if c.rank() != 2 || mask.len() != c.shape()[0] {
        return Err(Error::Dimension {
            op: "nth_max_pool",
            left: c.shape().to_vec(),
            right: vec![mask.len()],
        });
    }
    let (m, k) = (c.shape()[0], c.shape()[1]);
    let real: Vec<usize> = (0..m).filter(|&r| mask[r]).collect();
    if n == 0 || n > real.len() {
        return Err(Error::arg(format!("n = {n} outside [1, {}] real rows", real.len())));
    }
    let data = c.data();
    let mut values = Vec::with_capacity(k);
    let mut argrows = Vec::with_capacity(k);
    let mut order = real.clone();
    for col in 0..k {
        order.copy_from_slice(&real);
        // stable sort keeps ascending row order among equal values
        order.sort_by(|&a, &b| data[b * k + col].partial_cmp(&data[a * k + col]).unwrap_or(std::cmp::Ordering::Equal));
        let row = order[n - 1];
        values.push(data[row * k + col]);
        argrows.push(row);
    }
    Ok(Pooled { values: Tensor::vector(values)?, argrows, rows: m })
}

/// Routes each column gradient to the row that supplied the pooled value.
pub fn nth_max_pool_backward<T: Scalar>(pooled: &Pooled<T>, dvalues: &Tensor<T>) -> Result<Tensor<T>> {
    let k = pooled.argrows.len();
    if dvalues.shape() != [k] {
        return Err(Error::Dimension {
            op: "nth_max_pool backward",
            left: dvalues.shape().to_vec(),
            right: vec![k],
        });
    }
    let mut dc = Tensor::zeros(&[pooled.rows, k]);
    for (col, (&row, &g)) in pooled.argrows.iter().zip(dvalues.data()).enumerate() {
        dc.data_mut()[row * k + col] += g;
    }
    Ok(dc)
}
