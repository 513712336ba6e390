//! LSTM cell with optional forget gate and optional memory-to-gate
//! connections.
//!
//! For input item `x_t` (one-hot, so every `W^x·` product is a row lookup):
//!
//! ```text
//! i_t = σ([W^mi m_{t-1}] + W^xi x_t + b^i)
//! f_t = σ([W^mf m_{t-1}] + W^xf x_t + b^f)      (f_t = 1 without forget gate)
//! m_t = i_t ⊙ (W^xm x_t) + f_t ⊙ m_{t-1} + b^m
//! o_t = σ([W^mo m_t] + W^xo x_t + b^o)
//! e_t = o_t ⊙ σ(m_t)
//! ```
//!
//! Bracketed terms exist only with memory-to-gate connections. There is no
//! tanh anywhere: the candidate is the raw projection and the memory is
//! squashed by the logistic function.

use rand::Rng;

use super::matrix::{axpy, dot, sigmoid, Mat, RowGrads};
use crate::error::{Error, Result};

/// Architecture of the path LSTM.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmSpec {
    /// Size of the path-item vocabulary.
    pub input_dim: usize,
    /// Width of the memory and output state.
    pub embed_dim: usize,
    pub use_forget_gate: bool,
    pub memory_to_gates: bool,
}

impl LstmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.embed_dim == 0 {
            return Err(Error::Config(format!(
                "LSTM dimensions must be positive (input {}, embedding {})",
                self.input_dim, self.embed_dim
            )));
        }
        Ok(())
    }
}

/// Weights of the cell. Input matrices are `input_dim × embed_dim` (row per
/// vocabulary item); memory matrices are `embed_dim × embed_dim` and act as
/// `W m`; biases are `1 × embed_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w_xi: Mat,
    pub w_xf: Option<Mat>,
    pub w_xm: Mat,
    pub w_xo: Mat,
    pub w_mi: Option<Mat>,
    pub w_mf: Option<Mat>,
    pub w_mo: Option<Mat>,
    pub b_i: Mat,
    pub b_f: Option<Mat>,
    pub b_m: Mat,
    pub b_o: Mat,
}

impl LstmParams {
    pub fn zeros(spec: &LstmSpec) -> Self {
        let (v, e) = (spec.input_dim, spec.embed_dim);
        let forget = spec.use_forget_gate;
        let m2g = spec.memory_to_gates;
        LstmParams {
            w_xi: Mat::zeros(v, e),
            w_xf: forget.then(|| Mat::zeros(v, e)),
            w_xm: Mat::zeros(v, e),
            w_xo: Mat::zeros(v, e),
            w_mi: m2g.then(|| Mat::zeros(e, e)),
            w_mf: (m2g && forget).then(|| Mat::zeros(e, e)),
            w_mo: m2g.then(|| Mat::zeros(e, e)),
            b_i: Mat::zeros(1, e),
            b_f: forget.then(|| Mat::zeros(1, e)),
            b_m: Mat::zeros(1, e),
            b_o: Mat::zeros(1, e),
        }
    }

    pub fn uniform<R: Rng>(spec: &LstmSpec, scale: f64, rng: &mut R) -> Self {
        let mut params = Self::zeros(spec);
        for (_, m) in params.arrays_mut() {
            *m = Mat::uniform(m.rows(), m.cols(), scale, rng);
        }
        params
    }

    /// Parameter arrays in a fixed order, absent ones skipped.
    pub fn arrays(&self) -> Vec<(&'static str, &Mat)> {
        let mut out = vec![("lstm.w_xi", &self.w_xi)];
        if let Some(m) = &self.w_xf {
            out.push(("lstm.w_xf", m));
        }
        out.push(("lstm.w_xm", &self.w_xm));
        out.push(("lstm.w_xo", &self.w_xo));
        for (name, m) in [
            ("lstm.w_mi", &self.w_mi),
            ("lstm.w_mf", &self.w_mf),
            ("lstm.w_mo", &self.w_mo),
        ] {
            if let Some(m) = m {
                out.push((name, m));
            }
        }
        out.push(("lstm.b_i", &self.b_i));
        if let Some(m) = &self.b_f {
            out.push(("lstm.b_f", m));
        }
        out.push(("lstm.b_m", &self.b_m));
        out.push(("lstm.b_o", &self.b_o));
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        let mut out = vec![("lstm.w_xi", &mut self.w_xi)];
        if let Some(m) = &mut self.w_xf {
            out.push(("lstm.w_xf", m));
        }
        out.push(("lstm.w_xm", &mut self.w_xm));
        out.push(("lstm.w_xo", &mut self.w_xo));
        for (name, m) in [
            ("lstm.w_mi", &mut self.w_mi),
            ("lstm.w_mf", &mut self.w_mf),
            ("lstm.w_mo", &mut self.w_mo),
        ] {
            if let Some(m) = m {
                out.push((name, m));
            }
        }
        out.push(("lstm.b_i", &mut self.b_i));
        if let Some(m) = &mut self.b_f {
            out.push(("lstm.b_f", m));
        }
        out.push(("lstm.b_m", &mut self.b_m));
        out.push(("lstm.b_o", &mut self.b_o));
        out
    }

    /// Check that the arrays match `spec`.
    pub fn check_shapes(&self, spec: &LstmSpec) -> Result<()> {
        let expected = LstmParams::zeros(spec);
        let ours = self.arrays();
        let theirs = expected.arrays();
        if ours.len() != theirs.len()
            || ours
                .iter()
                .zip(&theirs)
                .any(|((a, m), (b, n))| a != b || m.shape() != n.shape())
        {
            return Err(Error::Shape(format!(
                "LSTM parameters do not match specification {spec:?}"
            )));
        }
        Ok(())
    }
}

/// Per-step activations kept for backpropagation.
#[derive(Clone, Debug)]
struct Step {
    input: usize,
    m_prev: Vec<f64>,
    i: Vec<f64>,
    f: Option<Vec<f64>>,
    candidate: Vec<f64>,
    m: Vec<f64>,
    o: Vec<f64>,
    squashed: Vec<f64>,
}

/// Activations of a forward pass.
#[derive(Clone, Debug)]
pub struct LstmCache {
    steps: Vec<Step>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Gradients with the same layout as [`LstmParams`]. Input matrices only
/// carry the rows touched by the sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmGrads {
    pub w_xi: RowGrads,
    pub w_xf: Option<RowGrads>,
    pub w_xm: RowGrads,
    pub w_xo: RowGrads,
    pub w_mi: Option<Mat>,
    pub w_mf: Option<Mat>,
    pub w_mo: Option<Mat>,
    pub b_i: Mat,
    pub b_f: Option<Mat>,
    pub b_m: Mat,
    pub b_o: Mat,
}

impl LstmGrads {
    fn zeros(spec: &LstmSpec) -> Self {
        let e = spec.embed_dim;
        let forget = spec.use_forget_gate;
        let m2g = spec.memory_to_gates;
        LstmGrads {
            w_xi: RowGrads::default(),
            w_xf: forget.then(RowGrads::default),
            w_xm: RowGrads::default(),
            w_xo: RowGrads::default(),
            w_mi: m2g.then(|| Mat::zeros(e, e)),
            w_mf: (m2g && forget).then(|| Mat::zeros(e, e)),
            w_mo: m2g.then(|| Mat::zeros(e, e)),
            b_i: Mat::zeros(1, e),
            b_f: forget.then(|| Mat::zeros(1, e)),
            b_m: Mat::zeros(1, e),
            b_o: Mat::zeros(1, e),
        }
    }

    /// `params += scale · self`
    pub fn apply(&self, params: &mut LstmParams, scale: f64) {
        self.w_xi.apply(&mut params.w_xi, scale);
        if let (Some(g), Some(p)) = (&self.w_xf, &mut params.w_xf) {
            g.apply(p, scale);
        }
        self.w_xm.apply(&mut params.w_xm, scale);
        self.w_xo.apply(&mut params.w_xo, scale);
        for (g, p) in [
            (&self.w_mi, &mut params.w_mi),
            (&self.w_mf, &mut params.w_mf),
            (&self.w_mo, &mut params.w_mo),
            (&self.b_f, &mut params.b_f),
        ] {
            if let (Some(g), Some(p)) = (g, p) {
                p.add_scaled(scale, g);
            }
        }
        params.b_i.add_scaled(scale, &self.b_i);
        params.b_m.add_scaled(scale, &self.b_m);
        params.b_o.add_scaled(scale, &self.b_o);
    }

    /// Gradient with respect to each one-hot input vector, in sequence
    /// order. Path items are not trainable inputs, so nothing consumes this
    /// during training.
    pub fn input_gradients(&self, params: &LstmParams) -> Vec<Vec<f64>> {
        let steps = self.w_xi.rows.len();
        let mut out = vec![vec![0.0; params.w_xi.rows()]; steps];
        let mut pairs: Vec<(&RowGrads, &Mat)> = vec![
            (&self.w_xi, &params.w_xi),
            (&self.w_xm, &params.w_xm),
            (&self.w_xo, &params.w_xo),
        ];
        if let (Some(g), Some(w)) = (&self.w_xf, &params.w_xf) {
            pairs.push((g, w));
        }
        for (g, w) in pairs {
            for (k, (_, row_grad)) in g.rows.iter().enumerate() {
                let dx = &mut out[steps - 1 - k];
                for (v, slot) in dx.iter_mut().enumerate() {
                    *slot += dot(row_grad, w.row(v));
                }
            }
        }
        out
    }

    /// Dense arrays in the order of [`LstmParams::arrays`].
    pub fn dense_arrays(&self, spec: &LstmSpec) -> Vec<(&'static str, Mat)> {
        let (v, e) = (spec.input_dim, spec.embed_dim);
        let mut out = vec![("lstm.w_xi", self.w_xi.to_dense(v, e))];
        if let Some(g) = &self.w_xf {
            out.push(("lstm.w_xf", g.to_dense(v, e)));
        }
        out.push(("lstm.w_xm", self.w_xm.to_dense(v, e)));
        out.push(("lstm.w_xo", self.w_xo.to_dense(v, e)));
        for (name, m) in [
            ("lstm.w_mi", &self.w_mi),
            ("lstm.w_mf", &self.w_mf),
            ("lstm.w_mo", &self.w_mo),
        ] {
            if let Some(m) = m {
                out.push((name, m.clone()));
            }
        }
        out.push(("lstm.b_i", self.b_i.clone()));
        if let Some(m) = &self.b_f {
            out.push(("lstm.b_f", m.clone()));
        }
        out.push(("lstm.b_m", self.b_m.clone()));
        out.push(("lstm.b_o", self.b_o.clone()));
        out
    }
}

/// Run the cell over `sequence` from a zero memory state and return the
/// final output `e_n` together with the activations.
pub fn lstm_forward(
    spec: &LstmSpec,
    params: &LstmParams,
    sequence: &[usize],
) -> Result<(Vec<f64>, LstmCache)> {
    if sequence.is_empty() {
        return Err(Error::Shape("empty path sequence".into()));
    }
    if let Some(&bad) = sequence.iter().find(|&&x| x >= spec.input_dim) {
        return Err(Error::Shape(format!(
            "path item index {} out of range for vocabulary of {}",
            bad, spec.input_dim
        )));
    }

    let e = spec.embed_dim;
    let mut steps = Vec::with_capacity(sequence.len());
    let mut m_prev = vec![0.0; e];

    for &x in sequence {
        let mut a_i = params.b_i.row(0).to_vec();
        axpy(1.0, params.w_xi.row(x), &mut a_i);
        if let Some(w) = &params.w_mi {
            w.mul_vec_add(&m_prev, &mut a_i);
        }
        let i: Vec<f64> = a_i.into_iter().map(sigmoid).collect();

        let f = match (&params.w_xf, &params.b_f) {
            (Some(w_xf), Some(b_f)) => {
                let mut a_f = b_f.row(0).to_vec();
                axpy(1.0, w_xf.row(x), &mut a_f);
                if let Some(w) = &params.w_mf {
                    w.mul_vec_add(&m_prev, &mut a_f);
                }
                Some(a_f.into_iter().map(sigmoid).collect::<Vec<f64>>())
            }
            _ => None,
        };

        let candidate = params.w_xm.row(x).to_vec();
        let b_m = params.b_m.row(0);
        let m: Vec<f64> = (0..e)
            .map(|k| {
                let keep = f.as_ref().map_or(1.0, |f| f[k]);
                i[k] * candidate[k] + keep * m_prev[k] + b_m[k]
            })
            .collect();

        let mut a_o = params.b_o.row(0).to_vec();
        axpy(1.0, params.w_xo.row(x), &mut a_o);
        if let Some(w) = &params.w_mo {
            w.mul_vec_add(&m, &mut a_o);
        }
        let o: Vec<f64> = a_o.into_iter().map(sigmoid).collect();
        let squashed: Vec<f64> = m.iter().map(|&v| sigmoid(v)).collect();

        let next = m.clone();
        steps.push(Step {
            input: x,
            m_prev,
            i,
            f,
            candidate,
            m,
            o,
            squashed,
        });
        m_prev = next;
    }

    let last = steps.last().unwrap();
    let out = last
        .o
        .iter()
        .zip(&last.squashed)
        .map(|(o, s)| o * s)
        .collect();
    Ok((out, LstmCache { steps }))
}

/// Backpropagation through time from a gradient on the final output.
pub fn lstm_backward(
    spec: &LstmSpec,
    params: &LstmParams,
    cache: &LstmCache,
    grad_output: &[f64],
) -> Result<LstmGrads> {
    let e = spec.embed_dim;
    if grad_output.len() != e {
        return Err(Error::Shape(format!(
            "output gradient has {} components, embedding has {}",
            grad_output.len(),
            e
        )));
    }
    let mut grads = LstmGrads::zeros(spec);
    // gradient flowing into m_t from later steps
    let mut dm_next = vec![0.0; e];

    for (t, step) in cache.steps.iter().enumerate().rev() {
        let last = t + 1 == cache.steps.len();
        // every input-matrix gradient gets exactly one row per step, pushed
        // from the last step backwards
        let mut dm = dm_next.clone();
        let mut da_o = vec![0.0; e];
        if last {
            for k in 0..e {
                let de = grad_output[k];
                let s = step.squashed[k];
                let o = step.o[k];
                dm[k] += de * o * s * (1.0 - s);
                da_o[k] = de * s * o * (1.0 - o);
            }
        }
        grads.w_xo.push(step.input, da_o.clone());
        axpy(1.0, &da_o, grads.b_o.row_mut(0));
        if let (Some(g), Some(w)) = (&mut grads.w_mo, &params.w_mo) {
            g.add_outer(&da_o, &step.m);
            w.tmul_vec_add(&da_o, &mut dm);
        }

        // m_t = i ⊙ c + f ⊙ m_{t-1} + b^m
        axpy(1.0, &dm, grads.b_m.row_mut(0));
        let mut dm_prev = vec![0.0; e];
        let mut dc = vec![0.0; e];
        let mut da_i = vec![0.0; e];
        let mut da_f = step.f.as_ref().map(|_| vec![0.0; e]);
        for k in 0..e {
            let i = step.i[k];
            dc[k] = dm[k] * i;
            da_i[k] = dm[k] * step.candidate[k] * i * (1.0 - i);
            match (&step.f, &mut da_f) {
                (Some(f), Some(da_f)) => {
                    dm_prev[k] = dm[k] * f[k];
                    da_f[k] = dm[k] * step.m_prev[k] * f[k] * (1.0 - f[k]);
                }
                _ => dm_prev[k] = dm[k],
            }
        }
        grads.w_xm.push(step.input, dc.clone());

        grads.w_xi.push(step.input, da_i.clone());
        axpy(1.0, &da_i, grads.b_i.row_mut(0));
        if let (Some(g), Some(w)) = (&mut grads.w_mi, &params.w_mi) {
            g.add_outer(&da_i, &step.m_prev);
            w.tmul_vec_add(&da_i, &mut dm_prev);
        }

        if let Some(da_f) = da_f {
            if let Some(g) = &mut grads.w_xf {
                g.push(step.input, da_f.clone());
            }
            if let Some(b) = &mut grads.b_f {
                axpy(1.0, &da_f, b.row_mut(0));
            }
            if let (Some(g), Some(w)) = (&mut grads.w_mf, &params.w_mf) {
                g.add_outer(&da_f, &step.m_prev);
                w.tmul_vec_add(&da_f, &mut dm_prev);
            }
        }
        dm_next = dm_prev;
    }

    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(forget: bool, m2g: bool) -> LstmSpec {
        LstmSpec {
            input_dim: 7,
            embed_dim: 4,
            use_forget_gate: forget,
            memory_to_gates: m2g,
        }
    }

    /// Straight-line scalar evaluation of the recurrences, written without
    /// any of the vector helpers used by the cell.
    fn scalar_reference(spec: &LstmSpec, p: &LstmParams, seq: &[usize]) -> Vec<f64> {
        let e = spec.embed_dim;
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut m = vec![0.0; e];
        let mut out = vec![0.0; e];
        for &x in seq {
            let mut m_new = vec![0.0; e];
            let mut i = vec![0.0; e];
            let mut f = vec![1.0; e];
            for j in 0..e {
                let mut a = p.w_xi.get(x, j) + p.b_i.get(0, j);
                if let Some(w) = &p.w_mi {
                    for k in 0..e {
                        a += w.get(j, k) * m[k];
                    }
                }
                i[j] = sig(a);
                if spec.use_forget_gate {
                    let mut a =
                        p.w_xf.as_ref().unwrap().get(x, j) + p.b_f.as_ref().unwrap().get(0, j);
                    if let Some(w) = &p.w_mf {
                        for k in 0..e {
                            a += w.get(j, k) * m[k];
                        }
                    }
                    f[j] = sig(a);
                }
            }
            for j in 0..e {
                m_new[j] = i[j] * p.w_xm.get(x, j) + f[j] * m[j] + p.b_m.get(0, j);
            }
            for j in 0..e {
                let mut a = p.w_xo.get(x, j) + p.b_o.get(0, j);
                if let Some(w) = &p.w_mo {
                    for k in 0..e {
                        a += w.get(j, k) * m_new[k];
                    }
                }
                out[j] = sig(a) * sig(m_new[j]);
            }
            m = m_new;
        }
        out
    }

    #[test]
    fn zero_params_give_quarter() {
        for forget in [true, false] {
            let s = spec(forget, true);
            let p = LstmParams::zeros(&s);
            let (e, _) = lstm_forward(&s, &p, &[3]).unwrap();
            assert!(e.iter().all(|&v| v == 0.25), "{e:?}");
        }
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (forget, m2g) in [(true, true), (true, false), (false, true), (false, false)] {
            let s = spec(forget, m2g);
            let p = LstmParams::uniform(&s, 0.8, &mut rng);
            let seq = [1, 4, 4, 0, 6, 2];
            let (e, cache) = lstm_forward(&s, &p, &seq).unwrap();
            assert_eq!(cache.len(), 6);
            let reference = scalar_reference(&s, &p, &seq);
            for (a, b) in e.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_sequences() {
        let s = spec(true, true);
        let p = LstmParams::zeros(&s);
        assert!(lstm_forward(&s, &p, &[]).is_err());
        assert!(lstm_forward(&s, &p, &[7]).is_err());
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = spec(true, true);
        let p = LstmParams::uniform(&s, 0.5, &mut rng);
        let (_, cache) = lstm_forward(&s, &p, &[1, 2, 3]).unwrap();
        let g = lstm_backward(&s, &p, &cache, &[0.0; 4]).unwrap();
        for (_, m) in g.dense_arrays(&s) {
            assert!(m.data().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn no_forget_gate_has_no_forget_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = spec(false, true);
        let p = LstmParams::uniform(&s, 0.5, &mut rng);
        let (_, cache) = lstm_forward(&s, &p, &[1, 2]).unwrap();
        let g = lstm_backward(&s, &p, &cache, &[1.0; 4]).unwrap();
        assert!(g.b_f.is_none() && g.w_xf.is_none() && g.w_mf.is_none());
        assert!(p.b_f.is_none());
    }

    #[test]
    fn backward_rejects_wrong_width() {
        let s = spec(true, false);
        let p = LstmParams::zeros(&s);
        let (_, cache) = lstm_forward(&s, &p, &[1]).unwrap();
        assert!(lstm_backward(&s, &p, &cache, &[1.0; 3]).is_err());
    }
}
