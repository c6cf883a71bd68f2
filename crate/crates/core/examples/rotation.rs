//! Randomized Hadamard rotation spreads a spiky vector evenly over all
//! coordinates, shrinking its l_inf norm before quantization.

use std::time::Instant;

use sqsgd::rotation::{clip_l2, l2_norm, padded_dim, RotationPlan};

fn main() -> sqsgd::Result<()> {
    let dim = 7850;
    let dtilde = padded_dim(0.13, dim)?;
    println!("d = {dim}, r = 0.13 -> d~ = {dtilde}");

    let plan = RotationPlan::new(dtilde, 42)?;
    let mut x = vec![0.0; dtilde];
    x[5] = 8.0;
    x[6] = -3.0;
    let before = l2_norm(&x);
    let linf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    println!("spiky input: l2 {before:.3}, l_inf {:.3}", linf(&x));

    clip_l2(&mut x, 5.0);
    plan.rotate(&mut x)?;
    println!("clipped to 5 and rotated: l2 {:.3}, l_inf {:.4}", l2_norm(&x), linf(&x));
    plan.inverse_rotate(&mut x)?;
    println!("inverse rotation recovers the clipped vector: x[5] = {:.6}, x[6] = {:.6}", x[5], x[6]);

    let big = RotationPlan::new(1 << 20, 1)?;
    let mut v: Vec<f64> = (0..1 << 20).map(|i| (i as f64).sin()).collect();
    let t = Instant::now();
    big.rotate(&mut v)?;
    println!("rotation of 2^20 coordinates took {:.1} ms", t.elapsed().as_secs_f64() * 1e3);
    Ok(())
}
