//! Private norm reports and the shrinking clipping bound.

use sqsgd::rng::seeded;
use sqsgd::scalardp::{update_bound, NormBoundState, ScalarDp};

fn main() -> sqsgd::Result<()> {
    let dp = ScalarDp::new(10.0)?;
    println!("eps2 = 10: {} report levels, stay probability {:.4}", dp.levels(), dp.stay_prob());

    let mut rng = seeded(5);
    let mut state = NormBoundState::new(10.0, 1e-5)?;
    // true gradient norms decay as training converges
    for round in 0..12 {
        let bound = state.current();
        let norms: Vec<f64> = (0..10).map(|c| (3.0 / (1.0 + 0.3 * round as f64)) * (0.8 + 0.04 * c as f64)).collect();
        let estimates: Vec<f64> =
            norms.iter().map(|&n| dp.estimate(n.min(bound), bound, &mut rng)).collect::<Result<_, _>>()?;
        let next = update_bound(&mut state, &estimates)?;
        println!(
            "round {round:>2}: U = {bound:>7.4}, true max norm {:.4}, reported max {:.4} -> U = {next:.4}",
            norms.iter().cloned().fold(0.0, f64::max),
            estimates.iter().cloned().fold(0.0, f64::max)
        );
    }
    Ok(())
}
