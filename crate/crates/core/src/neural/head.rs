//! Hidden ReLU layer over binary features and the path embedding, followed
//! by a softmax output layer.
//!
//! ```text
//! h   = max(0, W^Bh B + W^eh e_n + b^h)
//! z_c = W^es_c e_n + W^hs_c h + b^s_c
//! s   = softmax(z)
//! ```

use rand::Rng;

use super::matrix::{axpy, dot, softmax, Mat, RowGrads};
use crate::error::{Error, Result};

/// Output-side parameters of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHead {
    /// `binary_dim × hidden_dim`, one row per binary feature.
    pub w_bh: Mat,
    /// `embed_dim × hidden_dim`
    pub w_eh: Mat,
    pub b_h: Mat,
    /// `classes × embed_dim`
    pub w_es: Mat,
    /// `classes × hidden_dim`
    pub w_hs: Mat,
    pub b_s: Mat,
}

impl DenseHead {
    pub fn zeros(binary_dim: usize, embed_dim: usize, hidden_dim: usize, classes: usize) -> Self {
        DenseHead {
            w_bh: Mat::zeros(binary_dim, hidden_dim),
            w_eh: Mat::zeros(embed_dim, hidden_dim),
            b_h: Mat::zeros(1, hidden_dim),
            w_es: Mat::zeros(classes, embed_dim),
            w_hs: Mat::zeros(classes, hidden_dim),
            b_s: Mat::zeros(1, classes),
        }
    }

    pub fn uniform<R: Rng>(
        binary_dim: usize,
        embed_dim: usize,
        hidden_dim: usize,
        classes: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut head = Self::zeros(binary_dim, embed_dim, hidden_dim, classes);
        for (_, m) in head.arrays_mut() {
            *m = Mat::uniform(m.rows(), m.cols(), scale, rng);
        }
        head
    }

    pub fn binary_dim(&self) -> usize {
        self.w_bh.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.w_eh.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_bh.cols()
    }

    pub fn classes(&self) -> usize {
        self.w_es.rows()
    }

    pub fn arrays(&self) -> Vec<(&'static str, &Mat)> {
        vec![
            ("head.w_bh", &self.w_bh),
            ("head.w_eh", &self.w_eh),
            ("head.b_h", &self.b_h),
            ("head.w_es", &self.w_es),
            ("head.w_hs", &self.w_hs),
            ("head.b_s", &self.b_s),
        ]
    }

    pub fn arrays_mut(&mut self) -> Vec<(&'static str, &mut Mat)> {
        vec![
            ("head.w_bh", &mut self.w_bh),
            ("head.w_eh", &mut self.w_eh),
            ("head.b_h", &mut self.b_h),
            ("head.w_es", &mut self.w_es),
            ("head.w_hs", &mut self.w_hs),
            ("head.b_s", &mut self.b_s),
        ]
    }
}

/// Inverted-dropout scale factors (0 or `1/(1-d)`) for the embedding and
/// hidden vectors where they enter the output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask {
    pub embed: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl DropoutMask {
    pub fn sample<R: Rng>(embed_dim: usize, hidden_dim: usize, rate: f64, rng: &mut R) -> Self {
        let keep = 1.0 / (1.0 - rate);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                .collect()
        };
        let embed = draw(embed_dim);
        let hidden = draw(hidden_dim);
        DropoutMask { embed, hidden }
    }
}

/// Result of [`head_forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct HeadOutput {
    /// Hidden activations before dropout.
    pub hidden: Vec<f64>,
    /// Class distribution.
    pub probs: Vec<f64>,
}

fn check_features(head: &DenseHead, features: &[u32]) -> Result<()> {
    match features.iter().find(|&&f| f as usize >= head.binary_dim()) {
        Some(f) => Err(Error::Shape(format!(
            "binary feature {} out of range for {} features",
            f,
            head.binary_dim()
        ))),
        None => Ok(()),
    }
}

fn masked(values: &[f64], mask: Option<&[f64]>) -> Vec<f64> {
    match mask {
        Some(m) => values.iter().zip(m).map(|(v, k)| v * k).collect(),
        None => values.to_vec(),
    }
}

pub fn head_forward(
    head: &DenseHead,
    embedding: &[f64],
    features: &[u32],
    dropout: Option<&DropoutMask>,
) -> Result<HeadOutput> {
    check_features(head, features)?;
    if embedding.len() != head.embed_dim() {
        return Err(Error::Shape(format!(
            "embedding has {} components, head expects {}",
            embedding.len(),
            head.embed_dim()
        )));
    }

    let mut pre = head.b_h.row(0).to_vec();
    for &f in features {
        axpy(1.0, head.w_bh.row(f as usize), &mut pre);
    }
    head.w_eh.tmul_vec_add(embedding, &mut pre);
    let hidden: Vec<f64> = pre.into_iter().map(|x| x.max(0.0)).collect();

    let e_out = masked(embedding, dropout.map(|d| d.embed.as_slice()));
    let h_out = masked(&hidden, dropout.map(|d| d.hidden.as_slice()));
    let logits: Vec<f64> = (0..head.classes())
        .map(|c| dot(head.w_es.row(c), &e_out) + dot(head.w_hs.row(c), &h_out) + head.b_s.get(0, c))
        .collect();

    Ok(HeadOutput {
        hidden,
        probs: softmax(&logits),
    })
}

/// Gradients of the head, laid out like [`DenseHead`].
#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads {
    pub w_bh: RowGrads,
    pub w_eh: Mat,
    pub b_h: Mat,
    pub w_es: Mat,
    pub w_hs: Mat,
    pub b_s: Mat,
}

impl HeadGrads {
    pub fn apply(&self, head: &mut DenseHead, scale: f64) {
        self.w_bh.apply(&mut head.w_bh, scale);
        head.w_eh.add_scaled(scale, &self.w_eh);
        head.b_h.add_scaled(scale, &self.b_h);
        head.w_es.add_scaled(scale, &self.w_es);
        head.w_hs.add_scaled(scale, &self.w_hs);
        head.b_s.add_scaled(scale, &self.b_s);
    }

    pub fn dense_arrays(&self, head: &DenseHead) -> Vec<(&'static str, Mat)> {
        vec![
            (
                "head.w_bh",
                self.w_bh.to_dense(head.binary_dim(), head.hidden_dim()),
            ),
            ("head.w_eh", self.w_eh.clone()),
            ("head.b_h", self.b_h.clone()),
            ("head.w_es", self.w_es.clone()),
            ("head.w_hs", self.w_hs.clone()),
            ("head.b_s", self.b_s.clone()),
        ]
    }
}

/// Gradients of `-log s_gold` with respect to the head parameters and the
/// embedding.
pub fn head_backward(
    head: &DenseHead,
    embedding: &[f64],
    features: &[u32],
    output: &HeadOutput,
    dropout: Option<&DropoutMask>,
    gold: usize,
) -> Result<(HeadGrads, Vec<f64>)> {
    if gold >= head.classes() {
        return Err(Error::Shape(format!(
            "gold class {} out of range for {} classes",
            gold,
            head.classes()
        )));
    }
    let (e, h, c) = (head.embed_dim(), head.hidden_dim(), head.classes());
    let mut dz = output.probs.clone();
    dz[gold] -= 1.0;

    let e_mask = dropout.map(|d| d.embed.as_slice());
    let h_mask = dropout.map(|d| d.hidden.as_slice());
    let e_out = masked(embedding, e_mask);
    let h_out = masked(&output.hidden, h_mask);

    let mut w_es = Mat::zeros(c, e);
    w_es.add_outer(&dz, &e_out);
    let mut w_hs = Mat::zeros(c, h);
    w_hs.add_outer(&dz, &h_out);
    let b_s = Mat::from_vec(1, c, dz.clone());

    // back through the output layer
    let mut d_hidden = vec![0.0; h];
    head.w_hs.tmul_vec_add(&dz, &mut d_hidden);
    let mut d_embed = vec![0.0; e];
    head.w_es.tmul_vec_add(&dz, &mut d_embed);
    if let Some(m) = h_mask {
        d_hidden.iter_mut().zip(m).for_each(|(g, k)| *g *= k);
    }
    if let Some(m) = e_mask {
        d_embed.iter_mut().zip(m).for_each(|(g, k)| *g *= k);
    }

    // ReLU
    let d_pre: Vec<f64> = d_hidden
        .iter()
        .zip(&output.hidden)
        .map(|(g, &a)| if a > 0.0 { *g } else { 0.0 })
        .collect();

    let mut w_bh = RowGrads::default();
    for &f in features {
        w_bh.push(f as usize, d_pre.clone());
    }
    let mut w_eh = Mat::zeros(e, h);
    w_eh.add_outer(embedding, &d_pre);
    head.w_eh.mul_vec_add(&d_pre, &mut d_embed);

    Ok((
        HeadGrads {
            w_bh,
            w_eh,
            b_h: Mat::from_vec(1, h, d_pre),
            w_es,
            w_hs,
            b_s,
        },
        d_embed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_head_is_uniform() {
        let head = DenseHead::zeros(5, 3, 4, 4);
        let out = head_forward(&head, &[0.3, -0.2, 0.9], &[0, 4], None).unwrap();
        assert!(out.hidden.iter().all(|&x| x == 0.0));
        for p in out.probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_logits_are_uniform() {
        let mut head = DenseHead::zeros(2, 2, 2, 3);
        head.b_s.fill(1.7);
        let out = head_forward(&head, &[0.0, 0.0], &[], None).unwrap();
        for p in out.probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let head = DenseHead::uniform(6, 3, 5, 4, 0.9, &mut rng);
        let e = [0.4, -0.7, 0.2];
        let feats = [1u32, 3, 5];
        let out = head_forward(&head, &e, &feats, None).unwrap();

        let mut hidden = [0.0; 5];
        for (j, slot) in hidden.iter_mut().enumerate() {
            let mut a = head.b_h.get(0, j);
            for &f in &feats {
                a += head.w_bh.get(f as usize, j);
            }
            for (k, ek) in e.iter().enumerate() {
                a += head.w_eh.get(k, j) * ek;
            }
            *slot = if a > 0.0 { a } else { 0.0 };
        }
        let mut z = [0.0; 4];
        for (c, zc) in z.iter_mut().enumerate() {
            *zc = head.b_s.get(0, c);
            for (k, ek) in e.iter().enumerate() {
                *zc += head.w_es.get(c, k) * ek;
            }
            for (j, hj) in hidden.iter().enumerate() {
                *zc += head.w_hs.get(c, j) * hj;
            }
        }
        let norm: f64 = z.iter().map(|v| v.exp()).sum();
        for c in 0..4 {
            assert!((out.probs[c] - z[c].exp() / norm).abs() < 1e-12);
        }
        assert!((out.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range_feature() {
        let head = DenseHead::zeros(3, 2, 2, 2);
        assert!(head_forward(&head, &[0.0, 0.0], &[3], None).is_err());
    }

    #[test]
    fn dropout_mask_scales_kept_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mask = DropoutMask::sample(50, 50, 0.5, &mut rng);
        assert!(mask.hidden.iter().all(|&k| k == 0.0 || k == 2.0));
        assert!(mask.hidden.iter().any(|&k| k == 0.0));
    }
}
