//! Solve (kappa, p) for a range of dimensions and budgets.

use sqsgd::privquant::{reconstruction_protection, PrivacyParams};

fn main() -> sqsgd::Result<()> {
    println!(
        "{:>8} {:>4} {:>7} {:>9} {:>10} {:>9} {:>11} {:>10}",
        "d", "K", "eps", "kappa", "log-odds", "slack", "log m", "regime"
    );
    for (d, k) in [(16, 2), (256, 16), (1024, 16), (119_850, 16)] {
        for eps in [20.0, 100.0, 400.0] {
            match PrivacyParams::solve(d, k, eps, 10.0) {
                Ok(p) => println!(
                    "{d:>8} {k:>4} {eps:>7} {:>9} {:>10.3} {:>9.2e} {:>11.3} {:>10}",
                    p.kappa(),
                    p.log_odds(),
                    p.slack(),
                    p.log_m(),
                    format!("{:?}", p.regime())
                ),
                Err(e) => println!("{d:>8} {k:>4} {eps:>7} {e}"),
            }
        }
    }

    println!();
    println!("reconstruction protection at eps = 400, rho0 = 0, rank 10^5:");
    for a in [0.0, 0.05, 0.1, 0.2] {
        let b = reconstruction_protection(400.0, 0.0, 100_000, a)?;
        println!("  a = {a:<4}  radius {:.3}  log omega {:.1}", b.breach_radius, b.log_omega);
    }
    Ok(())
}
