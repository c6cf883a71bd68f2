//! Stochastic rounding onto a K-level grid: unbiasedness, variance and the
//! packed wire format.

use sqsgd::quantizer::{quantize, QuantGrid, QuantizedVector};
use sqsgd::rng::seeded;

fn main() -> sqsgd::Result<()> {
    let x = [0.31, -0.77, 0.02, 0.99, -1.0];
    let mut rng = seeded(3);
    for levels in [2, 4, 16, 256] {
        let grid = QuantGrid::new(levels, 1.0)?;
        let n = 20_000;
        let mut mean = vec![0.0; x.len()];
        let mut var = vec![0.0; x.len()];
        for _ in 0..n {
            let q = quantize(&x, &grid, &mut rng)?.decode();
            for j in 0..x.len() {
                mean[j] += q[j] / n as f64;
                var[j] += (q[j] - x[j]).powi(2) / n as f64;
            }
        }
        let worst_var = var.iter().cloned().fold(0.0, f64::max);
        println!(
            "K = {levels:>3}: {} bits/level, spacing {:.4}, mean {:.3?}, max variance {:.2e} (bound {:.2e})",
            grid.bits_per_level(),
            grid.spacing(),
            mean,
            worst_var,
            grid.spacing().powi(2) / 4.0
        );
    }

    let grid = QuantGrid::new(16, 1.0)?;
    let q = quantize(&x, &grid, &mut rng)?;
    let bytes = q.pack();
    println!("indices {:?} pack into {} bytes: {:02x?}", q.indices(), bytes.len(), bytes);
    assert_eq!(QuantizedVector::unpack(&bytes, x.len(), grid)?, q);
    Ok(())
}
