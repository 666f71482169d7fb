//! Encode one sparse binary observation into exactly k bits and decode it.
//!
//! cargo run --example encode_observation

use rtopk::codec::{decode, deserialize, encode, make_config, serialize};
use rtopk::model::Observation;
use rtopk::rng::stream;

fn main() -> rtopk::Result<()> {
    let cfg = make_config(8, 10)?;
    println!(
        "d={} k={}: {} header bits, {} payload bits, up to k'={} ones survive",
        cfg.d(),
        cfg.k(),
        cfg.header_bits(),
        cfg.payload_bits(),
        cfg.kprime()
    );

    let mut rng = stream(42, 0);
    for support in [vec![6, 7], vec![0, 3, 5, 6, 7]] {
        let obs = Observation::binary(8, support.clone())?;
        let msg = encode(&obs, &cfg, &mut rng)?;
        let bits = serialize(&msg, &cfg)?;
        let back = decode(&deserialize(&bits, &cfg)?, &cfg)?;
        println!("{support:?} -> {bits} -> kept {:?} of {} ones", back.support, back.original_count);
    }
    Ok(())
}
