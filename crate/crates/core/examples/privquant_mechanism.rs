//! Privatize one quantized vector and compare the sampler against the exact
//! output law.

use sqsgd::privquant::{exact_pmf, outcome_index, PrivQuant, PrivacyParams};
use sqsgd::quantizer::{quantize, QuantGrid};
use sqsgd::rng::seeded;

fn main() -> sqsgd::Result<()> {
    let params = PrivacyParams::from_parts(3, 3, 0, 0.8)?;
    println!(
        "d = {}, K = {}, kappa = {}, tau = {}, p = {}, m = {:.5}",
        params.dim(),
        params.levels(),
        params.kappa(),
        params.tau(),
        params.flip_prob(),
        params.m()
    );

    let mut rng = seeded(1);
    let grid = QuantGrid::new(3, 1.0)?;
    let xhat = quantize(&[0.9, -0.2, 0.4], &grid, &mut rng)?;
    println!("x_hat = {:?}", xhat.decode());

    let mech = PrivQuant::new(params.clone())?;
    let draws = 200_000;
    let mut counts = vec![0u64; 27];
    let mut mean = [0.0; 3];
    for _ in 0..draws {
        let out = mech.privatize(&xhat, &mut rng)?;
        counts[outcome_index(3, out.levels.indices())] += 1;
        for (m, z) in mean.iter_mut().zip(&out.estimate) {
            *m += z / draws as f64;
        }
    }
    println!("mean of Z over {draws} draws = {mean:.3?}");

    let pmf = exact_pmf(xhat.indices(), &params)?;
    println!("{:>12} {:>9} {:>9}", "V", "exact", "sampled");
    for (i, &p) in pmf.iter().enumerate().take(9) {
        let v = sqsgd::privquant::outcome_levels(3, 3, i);
        println!("{:>12} {:>9.5} {:>9.5}", format!("{v:?}"), p, counts[i] as f64 / draws as f64);
    }
    Ok(())
}
