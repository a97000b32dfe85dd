use rayon::prelude::*;

use super::report::RunReport;
use super::{parse_scenario, run, ScenarioError};

/// A scenario shipped with the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! corpus_files {
    ($($name:literal),* $(,)?) => {
        &[$(CorpusEntry {
            name: $name,
            text: include_str!(concat!("../../scenarios/", $name, ".toml")),
        }),*]
    };
}

static CORPUS: &[CorpusEntry] = corpus_files![
    "berry_cone_30",
    "berry_cone_60",
    "berry_cone_90",
    "berry_cone_120",
    "aharonov_anandan_60",
    "bargmann_gauge",
    "connection_chern",
    "sphere_octant",
    "sphere_half_equator",
    "mobius_once",
    "mobius_twice",
    "foucault_paris",
    "foucault_pole",
    "thomas_06c",
    "ab_solenoid",
    "classify_mobius",
    "classify_sphere",
    "classify_solenoid",
    "classify_cone",
];

pub fn corpus() -> &'static [CorpusEntry] {
    CORPUS
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusOutcome {
    pub name: &'static str,
    pub result: Result<RunReport, ScenarioError>,
}

impl CorpusOutcome {
    pub fn passed(&self) -> bool {
        self.result.as_ref().is_ok_and(RunReport::passed)
    }
}

/// Runs every shipped scenario on up to `jobs` threads, in corpus order.
/// `seed` overrides each scenario's own seed.
pub fn run_corpus(seed: Option<u64>, jobs: usize) -> Result<Vec<CorpusOutcome>, ScenarioError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ScenarioError::InternalInvariantBroken(e.to_string()))?;
    Ok(pool.install(|| {
        CORPUS
            .par_iter()
            .map(|entry| {
                let result = parse_scenario(entry.text).and_then(|s| {
                    let s = match seed {
                        Some(seed) => s.with_seed(seed),
                        None => s,
                    };
                    run(&s)
                });
                CorpusOutcome {
                    name: entry.name,
                    result,
                }
            })
            .collect()
    }))
}
