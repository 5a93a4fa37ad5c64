//! Seeded corpus generators: structured maintenance commands (low
//! perplexity) and uniformly random word strings (high perplexity).

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

struct Device {
    name: &'static str,
    parts: &'static [&'static str],
    measures: &'static [usize],
}

// (measurement, unit)
const MEASURES: [(&str, &str); 6] = [
    ("pressure", "bar"),
    ("temperature", "celsius"),
    ("vibration", "millimeters"),
    ("current", "amperes"),
    ("flow rate", "liters"),
    ("voltage", "volts"),
];

const DEVICES: [Device; 10] = [
    Device {
        name: "hydraulic pump",
        parts: &["inlet", "outlet", "bearing", "seal"],
        measures: &[0, 1, 2],
    },
    Device {
        name: "cooling fan",
        parts: &["motor", "bearing", "blade"],
        measures: &[1, 2, 3],
    },
    Device {
        name: "main compressor",
        parts: &["inlet", "outlet", "bearing", "cylinder"],
        measures: &[0, 1, 2],
    },
    Device {
        name: "feed water valve",
        parts: &["actuator", "body"],
        measures: &[0, 4],
    },
    Device {
        name: "conveyor motor",
        parts: &["bearing", "winding", "shaft"],
        measures: &[1, 2, 3],
    },
    Device {
        name: "steam turbine",
        parts: &["bearing", "casing", "shaft"],
        measures: &[1, 2],
    },
    Device {
        name: "heat exchanger",
        parts: &["inlet", "outlet"],
        measures: &[0, 1, 4],
    },
    Device {
        name: "transformer",
        parts: &["primary winding", "secondary winding", "oil tank"],
        measures: &[1, 3, 5],
    },
    Device {
        name: "oil separator",
        parts: &["inlet", "drain"],
        measures: &[0, 4],
    },
    Device {
        name: "emergency generator",
        parts: &["alternator", "engine block", "exhaust"],
        measures: &[1, 3, 5],
    },
];

fn zipf_weights(n: usize) -> Vec<f64> {
    (1..=n).map(|r| 1.0 / r as f64).collect()
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    let w = WeightedIndex::new(zipf_weights(items.len())).expect("non-empty");
    &items[w.sample(rng)]
}

fn value(rng: &mut ChaCha8Rng) -> String {
    let whole = rng.gen_range(0..100u32);
    let frac = rng.gen_range(0..10u32);
    let digits: Vec<String> = whole.to_string().chars().map(String::from).collect();
    format!("{} point {}", digits.join(" "), frac)
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let device = pick(rng, &DEVICES);
    let part = pick(rng, device.parts);
    let (measure, unit) = MEASURES[*pick(rng, device.measures)];
    let number = rng.gen_range(1..=4u32);
    let name = device.name;
    let template = WeightedIndex::new([6.0, 4.0, 3.0, 1.5, 1.0])
        .expect("static weights")
        .sample(rng);
    match template {
        0 => format!(
            "check the {name} number {number} {part} {measure} reading is {} {unit}",
            value(rng)
        ),
        1 => format!(
            "{name} number {number} {part} {measure} {} {unit}",
            value(rng)
        ),
        2 => format!("record {measure} of {name} {part} {} {unit}", value(rng)),
        3 => format!("replace the {part} of {name} number {number}"),
        _ => format!("{name} {part} inspection completed no abnormality found"),
    }
}

/// Maintenance-log style commands: a device and part followed by a
/// measurement value, drawn from a handful of templates with Zipf-weighted
/// choices.
pub fn maintenance_corpus(sentences: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences).map(|_| sentence(&mut rng)).collect()
}

/// Sentences of uniformly random words `w0..w{vocab-1}`.
pub fn random_corpus(
    sentences: usize,
    vocab: usize,
    len: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences)
        .map(|_| {
            let n = rng.gen_range(len.clone());
            (0..n)
                .map(|_| format!("w{}", rng.gen_range(0..vocab.max(1))))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// The bundled train/test split used by the benchmarks and the CLI demo:
/// both halves come from one seeded draw.
pub fn maintenance_split(train: usize, test: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut all = maintenance_corpus(train + test, seed);
    let test_part = all.split_off(train);
    (all, test_part)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_reproducible() {
        assert_eq!(maintenance_corpus(50, 9), maintenance_corpus(50, 9));
        assert_ne!(maintenance_corpus(50, 9), maintenance_corpus(50, 10));
        assert_eq!(
            random_corpus(5, 10, 3..=6, 1),
            random_corpus(5, 10, 3..=6, 1)
        );
    }

    #[test]
    fn split_sizes() {
        let (train, test) = maintenance_split(30, 7, 1);
        assert_eq!((train.len(), test.len()), (30, 7));
    }

    #[test]
    fn random_sentences_respect_length() {
        for s in random_corpus(100, 50, 4..=9, 3) {
            let n = s.split_whitespace().count();
            assert!((4..=9).contains(&n));
        }
    }
}
