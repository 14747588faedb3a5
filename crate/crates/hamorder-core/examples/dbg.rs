use hamorder_core::indices::*;
use hamorder_core::sequences::SequenceSpec;
fn main() {
    let rep = growth_exponents(&SequenceSpec::power(2.0, 0.0, 1.0), 0.5, 100_000).unwrap();
    println!("star {:?} avg {:?} liminf {} raw {}", rep.delta_star_hat, rep.delta_avg_hat, rep.delta_liminf_hat, rep.delta_liminf_raw);
}
