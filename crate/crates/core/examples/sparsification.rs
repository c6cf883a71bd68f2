//! Coordinate subsampling with residual accumulation: unsent mass is carried
//! forward, so over many rounds every coordinate gets through.

use sqsgd::rng::seeded;
use sqsgd::sparsifier::{encode_index_set, index_set_bits, scatter, select_dims, ClientResidual};

fn main() -> sqsgd::Result<()> {
    let (dim, sent) = (12, 3);
    let mut res = ClientResidual::new(dim, 1.0, 1.0)?;
    let mut rng = seeded(9);
    let grad: Vec<f64> = (0..dim).map(|j| 0.1 * (j as f64 + 1.0)).collect();
    let mut delivered = vec![0.0; dim];
    for round in 0..8 {
        let dims = select_dims(dim, sent, &mut rng)?;
        let payload = res.extract_and_update(&grad, &dims)?;
        for (d, p) in delivered.iter_mut().zip(scatter(&payload, &dims, dim)?) {
            *d += p;
        }
        println!("round {round}: dims {dims:?}, residual mass {:.2}", res.residual().iter().sum::<f64>());
    }
    let total: f64 = grad.iter().sum::<f64>() * 8.0;
    println!(
        "delivered {:.2} of {:.2}; the remaining {:.2} waits in the residual",
        delivered.iter().sum::<f64>(),
        total,
        res.residual().iter().sum::<f64>()
    );

    let dims = select_dims(119_850, 1024, &mut rng)?;
    println!(
        "index set for 1024 of 119850 coordinates: {} bits ({} bytes encoded)",
        index_set_bits(dims.len()),
        encode_index_set(&dims)?.len()
    );
    Ok(())
}
