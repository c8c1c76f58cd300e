//! Named experiment suites at desk scale (lengths up to about 2^10,
//! at most 10^5 trials).

use super::config::{
    ExperimentConfig, FitnessTemplate, LengthPolicy, MaskPolicy, PositionPolicy, SchemeTemplate,
};
use crate::bitgenome::Family;
use crate::distributions::LengthDistribution;
use crate::error::{Error, Result};
use crate::sequences::{SequenceFamily, SequenceKind};

pub const PRESET_NAMES: &[&str] = &[
    "lo-exact-uniform",
    "om-sandwich",
    "table2-q-half-LO",
    "table2-q-half-OM",
    "table2-q-LO",
    "table2-q-OM",
    "table2-pkl-uniform-LO",
    "table2-pkl-uniform-OM",
    "table2-pkl-shift-LO",
    "table2-pkl-shift-OM",
    "crossover-pkl",
    "adversarial-uniform-LO",
    "adversarial-uniform-OM",
    "summable-LO",
    "summable-OM",
    "random-rate-OM",
    "random-rate-LO",
    "scattered-OM",
    "scattered-LO",
];

const Q_GRID: [f64; 5] = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];

fn family(tag: &str) -> Family {
    if tag == "LO" {
        Family::LeadingOnes
    } else {
        Family::OneMax
    }
}

fn plain(family: Family) -> FitnessTemplate {
    FitnessTemplate {
        family,
        mask: MaskPolicy::None,
        positions: PositionPolicy::All,
    }
}

fn config(id: &str, fitness: FitnessTemplate, scheme: SchemeTemplate, length: LengthPolicy, trials: u64, budget: u64) -> ExperimentConfig {
    ExperimentConfig {
        id: id.to_string(),
        fitness,
        scheme,
        length,
        trials,
        budget,
        master_seed: 20_240_101,
        threads: None,
    }
}

/// `TruncGeo(10/q, q)` for every `q` of the grid.
fn trunc_geo_grid() -> LengthPolicy {
    LengthPolicy::Distributions(
        Q_GRID
            .iter()
            .map(|&q| LengthDistribution::TruncGeo {
                n_max: (10.0 / q).round() as usize,
                q,
            })
            .collect(),
    )
}

fn log_power() -> SequenceFamily {
    SequenceFamily {
        kind: SequenceKind::LogPower { s: 1, eps: 0.5 },
        scale: 1.0,
    }
}

fn shifted_harmonic() -> SchemeTemplate {
    SchemeTemplate::Sequence {
        sequence: SequenceFamily {
            kind: SequenceKind::ShiftedHarmonic,
            scale: 1.0,
        },
        target_sum: None,
    }
}

fn random_rate() -> SchemeTemplate {
    SchemeTemplate::RandomRate {
        sequence: log_power(),
        cap: None,
    }
}

fn sweep(ks: std::ops::RangeInclusive<u32>) -> LengthPolicy {
    LengthPolicy::Sweep(ks.map(|k| 1usize << k).collect())
}

/// The configs making up preset `name`.
pub fn preset_suite(name: &str) -> Result<Vec<ExperimentConfig>> {
    let (stem, tag) = match name.rsplit_once('-') {
        Some((s, t @ ("LO" | "OM"))) => (s, t),
        _ => (name, ""),
    };
    let fam = family(tag);
    let suite = match (stem, tag) {
        ("lo-exact-uniform", "") => vec![config(
            name,
            plain(Family::LeadingOnes),
            SchemeTemplate::InverseLength,
            LengthPolicy::Sweep(vec![10, 32, 64]),
            100_000,
            1_000_000_000,
        )],
        ("om-sandwich", "") => vec![config(
            name,
            plain(Family::OneMax),
            SchemeTemplate::InverseLength,
            LengthPolicy::Sweep(vec![100]),
            10_000,
            1_000_000_000,
        )],
        ("table2-q-half", _) | ("table2-q", _) => {
            let factor = if stem == "table2-q-half" { 0.5 } else { 1.0 };
            vec![config(
                name,
                plain(fam),
                SchemeTemplate::UniformOfQ { factor },
                trunc_geo_grid(),
                10_000,
                1_000_000_000,
            )]
        }
        ("table2-pkl-uniform", _) => vec![config(
            name,
            plain(fam),
            SchemeTemplate::InverseLength,
            trunc_geo_grid(),
            10_000,
            1_000_000_000,
        )],
        ("table2-pkl-shift", _) => vec![config(
            name,
            plain(fam),
            shifted_harmonic(),
            trunc_geo_grid(),
            1_000,
            1_000_000_000,
        )],
        ("crossover-pkl", "") => {
            let length = LengthPolicy::Distributions(vec![
                LengthDistribution::TruncGeo { n_max: 64, q: 1.0 / 64.0 },
                LengthDistribution::TruncGeo { n_max: 64, q: 1.0 / 8.0 },
                LengthDistribution::TruncGeo { n_max: 64, q: 1.0 / 4.0 },
            ]);
            vec![
                config(
                    "crossover-pkl-uniform",
                    plain(Family::LeadingOnes),
                    SchemeTemplate::InverseLength,
                    length.clone(),
                    10_000,
                    1_000_000_000,
                ),
                config(
                    "crossover-pkl-shift",
                    plain(Family::LeadingOnes),
                    shifted_harmonic(),
                    length,
                    10_000,
                    1_000_000_000,
                ),
            ]
        }
        ("adversarial-uniform", "LO") => vec![config(
            name,
            plain(fam),
            SchemeTemplate::Uniform { p: 0.25 },
            LengthPolicy::Sweep(vec![16, 24, 32, 48, 64]),
            1_000,
            1_000_000,
        )],
        ("adversarial-uniform", "OM") => vec![config(
            name,
            plain(fam),
            SchemeTemplate::Uniform { p: 0.25 },
            LengthPolicy::Sweep(vec![8, 16, 24, 32, 48]),
            1_000,
            1_000_000,
        )],
        ("summable", _) => vec![config(
            name,
            plain(fam),
            SchemeTemplate::Sequence {
                sequence: log_power(),
                target_sum: Some(0.5),
            },
            if tag == "LO" { sweep(5..=8) } else { sweep(5..=10) },
            1_000,
            100_000_000,
        )],
        ("random-rate", _) => vec![config(
            name,
            plain(fam),
            random_rate(),
            if tag == "LO" { sweep(5..=7) } else { sweep(6..=10) },
            1_000,
            1_000_000_000,
        )],
        ("scattered", _) => {
            let (n, genome_len) = if tag == "LO" { (32, 256) } else { (128, 1024) };
            let fitness = |positions| FitnessTemplate {
                family: fam,
                mask: MaskPolicy::None,
                positions,
            };
            vec![
                config(
                    &format!("{name}-random"),
                    fitness(PositionPolicy::Random { genome_len }),
                    random_rate(),
                    LengthPolicy::Sweep(vec![n]),
                    1_000,
                    1_000_000_000,
                ),
                config(
                    &format!("{name}-contiguous"),
                    fitness(PositionPolicy::Contiguous { genome_len }),
                    random_rate(),
                    LengthPolicy::Sweep(vec![n]),
                    1_000,
                    1_000_000_000,
                ),
            ]
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_is_valid() {
        for name in PRESET_NAMES {
            let suite = preset_suite(name).unwrap();
            assert!(!suite.is_empty());
            for cfg in suite {
                assert!(cfg.diagnostics().is_empty(), "{name}: {:?}", cfg.diagnostics());
                assert!(cfg.trials <= 100_000);
            }
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(preset_suite("unknown"), Err(Error::UnknownPreset(_))));
        assert!(preset_suite("summable-XX").is_err());
    }

    #[test]
    fn q_half_grid() {
        let cfg = preset_suite("table2-q-half-LO").unwrap().remove(0);
        assert_eq!(cfg.scheme, SchemeTemplate::UniformOfQ { factor: 0.5 });
        let cells = cfg.cells();
        assert_eq!(cells.len(), 5);
        assert_eq!(cells[0].dist, LengthDistribution::TruncGeo { n_max: 80, q: 0.125 });
        assert_eq!(cells[4].dist, LengthDistribution::TruncGeo { n_max: 1280, q: 1.0 / 128.0 });
    }
}
