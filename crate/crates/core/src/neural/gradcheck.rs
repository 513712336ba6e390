//! Central finite-difference verification of analytic gradients.

use super::head::DropoutMask;
use super::network::{Example, Network};
use crate::error::Result;

/// Gradients smaller than this are compared on an absolute scale.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Outcome of a gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_relative_error: f64,
    /// Parameter array and flat index at which the maximum occurred.
    pub worst: (String, usize),
    /// Number of scalar parameters compared.
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error <= tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Compare every analytic gradient entry against
/// `(L(θ+ε) - L(θ-ε)) / 2ε`. The dropout mask, if any, is held fixed.
pub fn grad_check(
    network: &Network,
    example: &Example,
    dropout: Option<&DropoutMask>,
    epsilon: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = network.loss_and_grads(example, dropout)?;
    let analytic = network.dense_grads(&grads);

    let mut probe = network.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: (String::new(), 0),
        checked: 0,
    };

    for (array, (name, grad)) in analytic.iter().enumerate() {
        for idx in 0..grad.data().len() {
            let original = probe.arrays_mut()[array].1.data()[idx];
            probe.arrays_mut()[array].1.data_mut()[idx] = original + epsilon;
            let plus = probe.loss(example, dropout)?;
            probe.arrays_mut()[array].1.data_mut()[idx] = original - epsilon;
            let minus = probe.loss(example, dropout)?;
            probe.arrays_mut()[array].1.data_mut()[idx] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = relative_error(grad.data()[idx], numeric);
            if err > report.max_relative_error || report.checked == 0 {
                report.max_relative_error = err;
                report.worst = (name.to_string(), idx);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Ablation, LstmSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_gate_configurations_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (forget, m2g) in [(true, true), (true, false), (false, true), (false, false)] {
            let spec = LstmSpec {
                input_dim: 7,
                embed_dim: 4,
                use_forget_gate: forget,
                memory_to_gates: m2g,
            };
            let mut net = Network::new(spec, 9, 6, 3, Ablation::default(), &mut rng).unwrap();
            // larger weights than the training init so that gradients are not tiny
            for (_, m) in net.arrays_mut() {
                m.data_mut().iter_mut().for_each(|x| *x *= 5.0);
            }
            let example = Example {
                path: (0..5).map(|_| rng.gen_range(0..7)).collect(),
                features: vec![1, 4, 8],
                gold: rng.gen_range(0..3),
            };
            let report = grad_check(&net, &example, None, 1e-5).unwrap();
            assert!(report.passes(1e-4), "{forget} {m2g}: {report:?}");
        }
    }

    #[test]
    fn fixed_dropout_mask_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = LstmSpec {
            input_dim: 5,
            embed_dim: 3,
            use_forget_gate: true,
            memory_to_gates: true,
        };
        let net = Network::new(spec, 4, 5, 2, Ablation::default(), &mut rng).unwrap();
        let mask = DropoutMask::sample(3, 5, 0.4, &mut rng);
        let example = Example {
            path: vec![0, 1, 2, 3],
            features: vec![0, 2],
            gold: 1,
        };
        let report = grad_check(&net, &example, Some(&mask), 1e-5).unwrap();
        assert!(report.passes(1e-4), "{report:?}");
    }
}
