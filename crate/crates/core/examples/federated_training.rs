//! Ten clients train logistic regression on synthetic data under three
//! pipelines: plain FedSgd, quantization only, and the private pipeline.

use sqsgd::config::RunConfig;
use sqsgd::flsim::Mode;
use sqsgd::runner;

fn main() -> sqsgd::Result<()> {
    for mode in [Mode::Baseline, Mode::QuantizeOnly, Mode::Sqsgd] {
        let mut config = RunConfig { seed: 1, ..RunConfig::default() };
        config.training.epochs = 8;
        config.training.learning_rate = 0.1;
        config.training.eval_every = 32;
        config.mechanism.mode = mode;
        config.mechanism.sampling_ratio = 0.03;
        let runner::Prepared { mut simulation, resolved } = runner::prepare(&config)?;
        if let Some(p) = &resolved.privacy {
            println!("mechanism: d~ = {}, kappa = {}, log m = {:.3}", p.dim(), p.kappa(), p.log_m());
        }
        let records = simulation.train(resolved.rounds, config.training.eval_every)?;
        for r in records.iter().filter(|r| r.test_acc.is_some()) {
            println!(
                "{mode:?} epoch {:>4.1}: loss {:.3}, test acc {:.3}, U {:.3}",
                r.epoch,
                r.train_loss,
                r.test_acc.unwrap(),
                r.bound
            );
        }
        let last = records.last().unwrap();
        println!("{mode:?}: {} uplink bits per client in total\n", last.uplink_bits_per_client);
    }
    Ok(())
}
