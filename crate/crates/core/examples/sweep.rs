//! Accuracy against quantization bits at a fixed sampling ratio, written to
//! a comparison CSV like `sqsgd sweep`.

use sqsgd::config::RunConfig;
use sqsgd::runner::{self, SweepAxis};

fn main() -> sqsgd::Result<()> {
    let mut base = RunConfig { seed: 1, ..RunConfig::default() };
    base.training.epochs = 3;
    base.training.learning_rate = 0.1;
    base.training.eval_every = 32;
    base.mechanism.sampling_ratio = 0.03;
    base.output_dir = std::env::temp_dir().join("sqsgd-sweep-example");
    let points = runner::sweep(&base, SweepAxis::QuantizationBits, &[1.0, 2.0, 4.0, 8.0], 1)?;
    println!("{:>5} {:>6} {:>10} {:>14}", "bits", "K", "test acc", "bits/round");
    for p in &points {
        println!("{:>5} {:>6} {:>10.4} {:>14}", p.value, p.levels, p.final_test_acc, p.payload_bits_per_round);
    }
    println!("comparison CSV in {}", base.output_dir.display());
    Ok(())
}
