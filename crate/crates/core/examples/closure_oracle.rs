//! Exact state-set enumeration for a quantized designer: find where the
//! reachable sets close and check that nothing new appears afterwards.

use ssc_lab::seed::rng_from_seed;
use ssc_lab::ssc_analysis::{enumerate_state_sets, first_closure, verify_property1};
use ssc_lab::{Designer, DesignerState, LatentVector, PolicyNetwork};

fn main() -> ssc_lab::Result<()> {
    let (n, d, levels) = (2, 2, 4);
    let mut rng = rng_from_seed(3);
    let mut net = PolicyNetwork::init_random(n * d, 8, d, 0.0, &mut rng);
    for p in net.params_mut() {
        *p *= 2.5;
    }
    let designer = Designer::Neural(net);
    let initial: Vec<DesignerState> = (0..5)
        .map(|_| {
            DesignerState::new((0..n).map(|_| LatentVector::sample_uniform(d, &mut rng)).collect())
        })
        .collect::<ssc_lab::Result<_>>()?;

    let seq = enumerate_state_sets(&designer, levels, &initial, 40, 10_000)?;
    println!("set sizes: {:?}", seq.sizes());
    let Some(report) = first_closure(&seq, n) else {
        println!("no closure within 40 steps");
        return Ok(());
    };
    print!("{}", report.to_text());
    let verdict = verify_property1(&designer, levels, &initial, report.g, report.h, 5, 10_000)?;
    println!(
        "contained up to step {}: {}; closure fully revisited: {}",
        verdict.horizon, verdict.contained, verdict.reverse_contained
    );
    Ok(())
}
