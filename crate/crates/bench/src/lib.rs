//! Shared inputs for the benchmarks in `benches/`.

use pathsrl::neural::{LstmParams, LstmSpec};
use pathsrl::synth::generate;
use pathsrl::{Sentence, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Toy corpus of `n` sentences.
pub fn corpus(n: usize) -> Vec<Sentence> {
    generate(5, n)
}

/// Default hyperparameters with a short training budget.
pub fn quick_config(epochs: usize) -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.apply_str(&format!(
        "epochs = {epochs}\nrerank_n = 4\nreranker_epochs = 2"
    ))
    .expect("valid config");
    cfg
}

/// Random LSTM with a random input sequence of `len` items.
pub fn lstm_case(spec: LstmSpec, len: usize) -> (LstmParams, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = LstmParams::uniform(&spec, 0.1, &mut rng);
    let seq = (0..len).map(|_| rng.gen_range(0..spec.input_dim)).collect();
    (params, seq)
}
