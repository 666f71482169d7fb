use rand::Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::Table;
use super::{point_label, HarnessError};
use crate::codec::{decode, deserialize, encode, make_config, serialize, CodecConfig};
use crate::error::Result;
use crate::model::Observation;
use crate::rng::{derive_seed, stream};

/// Largest dimension enumerated exhaustively; above it random supports are
/// drawn instead.
const EXHAUSTIVE_MAX_D: usize = 16;

/// Encodes, serializes, parses and decodes one support, checking the
/// decoder's guarantees.
fn check_one(support: Vec<usize>, cfg: &CodecConfig, rng: &mut crate::rng::Stream) -> Result<bool> {
    let count = support.len();
    let obs = Observation::binary(cfg.d(), support)?;
    let msg = encode(&obs, cfg, rng)?;
    let bits = serialize(&msg, cfg)?;
    if bits.len() != cfg.k() {
        return Ok(false);
    }
    let back = decode(&deserialize(&bits, cfg)?, cfg)?;
    let subset = back.support.iter().all(|i| obs.support().binary_search(i).is_ok());
    Ok(subset && back.original_count == count && back.kept() == count.min(cfg.kprime()))
}

fn mask_support(mask: u64, d: usize) -> Vec<usize> {
    (0..d).filter(|&j| mask >> j & 1 == 1).collect()
}

pub(super) fn codec_roundtrip(cfg: &ExperimentConfig) -> Result<(Table, Vec<String>), HarnessError> {
    let ds = ExperimentConfig::nonempty(&cfg.d, "d")?;
    let ks = ExperimentConfig::nonempty(&cfg.k, "k")?;
    let mut points = Vec::new();
    for &d in ds {
        for &k in ks {
            let label = point_label(&[("d", d.to_string()), ("k", k.to_string())]);
            let codec = make_config(d, k).map_err(|e| HarnessError::Precondition { point: label.clone(), source: e })?;
            if d > EXHAUSTIVE_MAX_D && cfg.trials.is_none() {
                return Err(HarnessError::invalid("trials", format!("d={d} is too large to enumerate; set `trials`")));
            }
            points.push((label, codec));
        }
    }
    let results = points
        .par_iter()
        .enumerate()
        .map(|(i, (_, codec))| -> Result<(u64, u64)> {
            let seed = derive_seed(cfg.seed, i as u64);
            let d = codec.d();
            let mut ok = 0;
            let cases = if d <= EXHAUSTIVE_MAX_D {
                for mask in 0..1u64 << d {
                    ok += u64::from(check_one(mask_support(mask, d), codec, &mut stream(seed, mask))?);
                }
                1u64 << d
            } else {
                let trials = cfg.trials.unwrap_or(0) as u64;
                for t in 0..trials {
                    let mut rng = stream(seed, t);
                    let density = rng.gen::<f64>();
                    let support = (0..d).filter(|_| rng.gen::<f64>() < density).collect();
                    ok += u64::from(check_one(support, codec, &mut rng)?);
                }
                trials
            };
            Ok((cases, ok))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(HarnessError::Runtime)?;

    let mut table = Table::new(&["d", "k", "header_bits", "payload_bits", "sign_bits", "kprime", "cases", "ok"]);
    let mut lines = Vec::new();
    let mut failed = None;
    for ((label, codec), (cases, ok)) in points.iter().zip(&results) {
        table.push(vec![
            codec.d().to_string(),
            codec.k().to_string(),
            codec.header_bits().to_string(),
            codec.payload_bits().to_string(),
            codec.sign_bits().to_string(),
            codec.kprime().to_string(),
            cases.to_string(),
            ok.to_string(),
        ]);
        let verdict = if ok == cases { "ok" } else { "FAILED" };
        lines.push(format!("roundtrips: {ok}/{cases} {verdict} ({label}, kprime={})", codec.kprime()));
        if ok != cases && failed.is_none() {
            failed = Some(format!("{label}: {} of {cases} roundtrips failed", cases - ok));
        }
    }
    match failed {
        Some(msg) => Err(HarnessError::Runtime(crate::error::Error::MalformedMessage(msg))),
        None => Ok((table, lines)),
    }
}
