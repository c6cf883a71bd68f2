//! Train on MNIST IDX files.
//!
//! ```bash
//! cargo run --release --example idx_training -- /path/to/mnist
//! ```
//!
//! The directory must hold the four uncompressed files with their usual names.
//! Without an argument a small IDX pair is written to a temporary directory
//! and read back, to show the reader on its own.

use std::path::PathBuf;

use sqsgd::config::{DataConfig, IdxData, RunConfig};
use sqsgd::flsim::idx::{encode_images, encode_labels, load_idx, mnist_paths};
use sqsgd::runner;

fn main() -> sqsgd::Result<()> {
    let Some(dir) = std::env::args().nth(1).map(PathBuf::from) else {
        let dir = std::env::temp_dir().join("sqsgd-idx-demo");
        std::fs::create_dir_all(&dir)?;
        let pixels: Vec<u8> = (0..2 * 28 * 28).map(|i| (i % 251) as u8).collect();
        std::fs::write(dir.join("images"), encode_images(2, 28, 28, &pixels))?;
        std::fs::write(dir.join("labels"), encode_labels(&[7, 2]))?;
        let data = load_idx(dir.join("images"), dir.join("labels"), 10)?;
        println!("read {} images of {} pixels, labels {:?}", data.len(), data.features(), data.labels());
        return Ok(());
    };
    let [train_images, train_labels, test_images, test_labels] = mnist_paths(&dir);
    let mut config = RunConfig { seed: 1, ..RunConfig::default() };
    config.data = DataConfig::Idx(IdxData {
        train_images,
        train_labels,
        test_images,
        test_labels,
        classes: 10,
        train_limit: Some(10_000),
        test_limit: None,
    });
    config.training.epochs = 15;
    config.training.learning_rate = 0.1;
    config.training.eval_every = 188;
    config.mechanism.sampling_ratio = 0.03;
    let runner::Prepared { mut simulation, resolved } = runner::prepare(&config)?;
    println!("{} training images, {} rounds", resolved.train_samples, resolved.rounds);
    for r in simulation.train(resolved.rounds, config.training.eval_every)? {
        if let Some(acc) = r.test_acc {
            println!("round {:>4}: loss {:.3}, test acc {acc:.4}, U {:.3}", r.round, r.train_loss, r.bound);
        }
    }
    Ok(())
}
