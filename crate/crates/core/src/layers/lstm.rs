use super::glorot;
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, sigmoid, ParamId, ParamStore, Rng, Scalar, Tensor};

/// Single-direction LSTM with fused gate parameters.
///
/// `w` is `[4H, in]`, `u` is `[4H, H]` and `b` is `[4H]`, with gate blocks in
/// the order input, forget, candidate, output:
///
/// ```text
/// i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
/// g = tanh(W_g x + U_g h + b_g) o = σ(W_o x + U_o h + b_o)
/// c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
/// ```
#[derive(Debug, Clone)]
pub struct Lstm {
    w: ParamId,
    u: ParamId,
    b: ParamId,
    in_dim: usize,
    hidden: usize,
}

#[derive(Debug, Clone)]
pub struct LstmOutput<T> {
    /// Hidden state at every step, `[T, H]`.
    pub hidden: Tensor<T>,
    pub h_last: Vec<T>,
    pub c_last: Vec<T>,
}

/// Per-step activations kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    x: Tensor<T>,
    h0: Vec<T>,
    c0: Vec<T>,
    /// `[T, 4H]` post-activation gates.
    gates: Vec<T>,
    /// `[T, H]` cell states.
    cells: Vec<T>,
    hidden: Vec<T>,
}

impl Lstm {
    /// Registers `{prefix}.w`, `{prefix}.u` and `{prefix}.b`. Weights are
    /// Glorot-uniform, the forget-gate bias is 1 and other biases are 0.
    pub fn new<T: Scalar>(
        params: &mut ParamStore<T>,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if in_dim == 0 || hidden == 0 {
            return Err(Error::arg(format!("lstm needs positive sizes, got in={in_dim} H={hidden}")));
        }
        let w = params.register(format!("{prefix}.w"), glorot(&[4 * hidden, in_dim], in_dim, 4 * hidden, rng))?;
        let u = params.register(format!("{prefix}.u"), glorot(&[4 * hidden, hidden], hidden, 4 * hidden, rng))?;
        let mut bias = Tensor::zeros(&[4 * hidden]);
        for v in &mut bias.data_mut()[hidden..2 * hidden] {
            *v = T::one();
        }
        let b = params.register(format!("{prefix}.b"), bias)?;
        Ok(Lstm { w, u, b, in_dim, hidden })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn param_ids(&self) -> [ParamId; 3] {
        [self.w, self.u, self.b]
    }

    /// Runs over every row of `x` (`[T, in]`) from a zero state, or from
    /// `init = (h0, c0)` when given.
    pub fn forward<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        x: &Tensor<T>,
        init: Option<(&[T], &[T])>,
    ) -> Result<(LstmOutput<T>, LstmCache<T>)> {
        if x.rank() != 2 || x.shape()[1] != self.in_dim {
            return Err(Error::Dimension {
                op: "lstm",
                left: x.shape().to_vec(),
                right: vec![0, self.in_dim],
            });
        }
        let h = self.hidden;
        let (h0, c0) = match init {
            Some((h0, c0)) => {
                if h0.len() != h || c0.len() != h {
                    return Err(Error::Dimension {
                        op: "lstm initial state",
                        left: vec![h0.len(), c0.len()],
                        right: vec![h, h],
                    });
                }
                (h0.to_vec(), c0.to_vec())
            }
            None => (vec![T::zero(); h], vec![T::zero(); h]),
        };
        let steps = x.shape()[0];
        let w = params.get(self.w).data();
        let u = params.get(self.u).data();
        let b = params.get(self.b).data();
        let mut gates = Vec::with_capacity(steps * 4 * h);
        let mut cells = Vec::with_capacity(steps * h);
        let mut hidden = Vec::with_capacity(steps * h);
        let mut z = vec![T::zero(); 4 * h];
        for t in 0..steps {
            let xt = x.row(t);
            let hp = if t == 0 { &h0[..] } else { &hidden[(t - 1) * h..t * h] };
            for (r, zr) in z.iter_mut().enumerate() {
                *zr = dot(&w[r * self.in_dim..(r + 1) * self.in_dim], xt) + dot(&u[r * h..(r + 1) * h], hp) + b[r];
            }
            for (r, &zr) in z.iter().enumerate() {
                gates.push(if (2 * h..3 * h).contains(&r) { zr.tanh() } else { sigmoid(zr) });
            }
            let gt = &gates[t * 4 * h..];
            for j in 0..h {
                let cp = if t == 0 { c0[j] } else { cells[(t - 1) * h + j] };
                let c = gt[h + j] * cp + gt[j] * gt[2 * h + j];
                cells.push(c);
                hidden.push(gt[3 * h + j] * c.tanh());
            }
        }
        let out = LstmOutput {
            hidden: Tensor::new(vec![steps, h], hidden.clone())?,
            h_last: hidden[(steps - 1) * h..].to_vec(),
            c_last: cells[(steps - 1) * h..].to_vec(),
        };
        Ok((out, LstmCache { x: x.clone(), h0, c0, gates, cells, hidden }))
    }

    /// Backpropagation through time from gradients on every hidden state
    /// (`[T, H]`). Returns `dL/dx`.
    pub fn backward<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: LstmCache<T>,
        dhidden: &Tensor<T>,
        grads: &mut ParamStore<T>,
    ) -> Result<Tensor<T>> {
        Ok(self.backward_impl(params, cache, dhidden, grads, true)?.expect("input gradient requested"))
    }

    /// Like [`Lstm::backward`] without the input gradient.
    pub fn backward_params<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: LstmCache<T>,
        dhidden: &Tensor<T>,
        grads: &mut ParamStore<T>,
    ) -> Result<()> {
        self.backward_impl(params, cache, dhidden, grads, false).map(|_| ())
    }

    fn backward_impl<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: LstmCache<T>,
        dhidden: &Tensor<T>,
        grads: &mut ParamStore<T>,
        want_input: bool,
    ) -> Result<Option<Tensor<T>>> {
        let h = self.hidden;
        let steps = cache.x.shape()[0];
        if dhidden.shape() != [steps, h] {
            return Err(Error::Dimension {
                op: "lstm backward",
                left: dhidden.shape().to_vec(),
                right: vec![steps, h],
            });
        }
        let w = params.get(self.w).data();
        let u = params.get(self.u).data();
        let mut dw = std::mem::replace(grads.get_mut(self.w), Tensor::zeros(&[1]));
        let mut du = std::mem::replace(grads.get_mut(self.u), Tensor::zeros(&[1]));
        let mut db = std::mem::replace(grads.get_mut(self.b), Tensor::zeros(&[1]));
        let mut dx = if want_input { Some(Tensor::zeros(cache.x.shape())) } else { None };

        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        let mut dz = vec![T::zero(); 4 * h];
        for t in (0..steps).rev() {
            let gt = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
            let hp = if t == 0 { &cache.h0[..] } else { &cache.hidden[(t - 1) * h..t * h] };
            let one = T::one();
            for j in 0..h {
                let (i, f, g, o) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
                let c = cache.cells[t * h + j];
                let cp = if t == 0 { cache.c0[j] } else { cache.cells[(t - 1) * h + j] };
                let tc = c.tanh();
                let dh = dhidden.data()[t * h + j] + dh_next[j];
                let dc = dh * o * (one - tc * tc) + dc_next[j];
                dz[j] = dc * g * i * (one - i);
                dz[h + j] = dc * cp * f * (one - f);
                dz[2 * h + j] = dc * i * (one - g * g);
                dz[3 * h + j] = dh * tc * o * (one - o);
                dc_next[j] = dc * f;
            }
            let xt = cache.x.row(t);
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            for (r, &g) in dz.iter().enumerate() {
                db.data_mut()[r] += g;
                axpy(g, xt, &mut dw.data_mut()[r * self.in_dim..(r + 1) * self.in_dim]);
                axpy(g, hp, &mut du.data_mut()[r * h..(r + 1) * h]);
                axpy(g, &u[r * h..(r + 1) * h], &mut dh_next);
                if let Some(dx) = dx.as_mut() {
                    axpy(g, &w[r * self.in_dim..(r + 1) * self.in_dim], dx.row_mut(t));
                }
            }
        }
        *grads.get_mut(self.w) = dw;
        *grads.get_mut(self.u) = du;
        *grads.get_mut(self.b) = db;
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::testutil::*;

    fn layer(in_dim: usize, h: usize, seed: u64) -> (ParamStore<f64>, Lstm) {
        let mut p = ParamStore::new();
        let l = Lstm::new(&mut p, "lstm", in_dim, h, &mut Rng::new(seed)).unwrap();
        (p, l)
    }

    #[test]
    fn init_shapes_and_forget_bias() {
        let (p, l) = layer(3, 2, 0);
        assert_eq!(p.get(l.w).shape(), &[8, 3]);
        assert_eq!(p.get(l.u).shape(), &[8, 2]);
        assert_eq!(p.get(l.b).data(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_weights_stay_at_zero() {
        let (mut p, l) = layer(3, 4, 0);
        p.fill_zero();
        let x = random_tensor(&[5, 3], 1.0, &mut Rng::new(1));
        let (out, cache) = l.forward(&p, &x, None).unwrap();
        assert!(out.hidden.data().iter().all(|&v| v == 0.0));
        assert!(cache.cells.iter().all(|&v| v == 0.0));
        for t in 0..5 {
            let g = &cache.gates[t * 16..(t + 1) * 16];
            assert!(g[..8].iter().chain(&g[12..]).all(|&v| v == 0.5));
            assert!(g[8..12].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn scalar_single_step_by_hand() {
        let (mut p, l) = layer(1, 1, 0);
        // gate order i, f, g, o
        *p.get_mut(l.w) = Tensor::from_f64(vec![4, 1], &[0.5, -0.3, 0.8, 0.1]).unwrap();
        *p.get_mut(l.b) = Tensor::from_f64(vec![4], &[0.1, 1.0, -0.2, 0.05]).unwrap();
        let x = Tensor::from_f64(vec![1, 1], &[0.7]).unwrap();
        let (out, _) = l.forward(&p, &x, None).unwrap();
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let i = sig(0.5 * 0.7 + 0.1);
        let g = (0.8 * 0.7 - 0.2f64).tanh();
        let o = sig(0.1 * 0.7 + 0.05);
        let c = i * g;
        let h = o * c.tanh();
        assert!((out.c_last[0] - c).abs() < 1e-12);
        assert!((out.h_last[0] - h).abs() < 1e-12);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        let (mut p, l) = layer(2, 3, 0);
        p.fill_zero();
        for v in &mut p.get_mut(l.b).data_mut()[3..6] {
            *v = 10.0;
        }
        let c0 = [0.4, -0.7, 0.2];
        let x = random_tensor(&[4, 2], 1.0, &mut Rng::new(2));
        let (out, cache) = l.forward(&p, &x, Some((&[0.0; 3], &c0))).unwrap();
        for t in 0..4 {
            for j in 0..3 {
                assert!((cache.cells[t * 3 + j] - c0[j]).abs() < 1e-3 * (t + 1) as f64);
            }
        }
        assert_eq!(out.c_last.len(), 3);
    }

    #[test]
    fn hidden_values_bounded() {
        let (p, l) = layer(4, 5, 3);
        let x = random_tensor(&[6, 4], 20.0, &mut Rng::new(3));
        let (out, _) = l.forward(&p, &x, None).unwrap();
        assert!(out.hidden.data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn bad_initial_state() {
        let (p, l) = layer(2, 3, 0);
        let x = Tensor::zeros(&[2, 2]);
        assert!(l.forward(&p, &x, Some((&[0.0; 2], &[0.0; 3]))).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20 {
            let mut rng = Rng::new(200 + seed);
            let steps = 1 + rng.below(6);
            let (d, h) = (1 + rng.below(6), 1 + rng.below(6));
            let (mut p, l) = layer(d, h, seed);
            p.register("input", random_tensor(&[steps, d], 1.0, &mut rng)).unwrap();
            let proj = random_tensor(&[steps, h], 1.0, &mut rng);
            let h0: Vec<f64> = (0..h).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
            let c0: Vec<f64> = (0..h).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
            let report = check(&mut p, |p| {
                let (out, cache) = l.forward(p, p.by_name("input").unwrap(), Some((&h0, &c0)))?;
                let mut g = p.zeros_like();
                let dx = l.backward(p, cache, &proj, &mut g)?;
                *g.by_name_mut("input").unwrap() = dx;
                Ok((weighted_sum(&out.hidden, &proj), g))
            });
            assert!(report.passed, "seed {seed}: {:?}", report.worst());
        }
    }
}
