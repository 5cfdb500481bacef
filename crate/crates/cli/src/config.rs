//! Experiment configuration files and their execution.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use entrance_core::error::{LabError, Result};
use entrance_core::finite_chain::{run_suite, torus_tail_form_check, verify_bijection, verify_duality, verify_kac};
use entrance_core::finite_chain::{ChainSpec, FiniteChain};
use entrance_core::increments::{IncrementLaw, LawSpec};
use entrance_core::stats::{
    clt_levelcrossings, hopf_ratio_test, invariance_test, lln_overshoots, occupation_identity, perkins_sum,
    upcrossing_expectation, ChainKind, Outcome, StartLaw, TestVerdict,
};
use entrance_core::walk::SetSpec;

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputSpec,
    pub experiment: Experiment,
}

/// Where the report and plot tables go. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub csv: bool,
}

/// A chain given inline or as a path to a JSON chain file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ChainSource {
    Path(PathBuf),
    Inline(ChainSpec),
}

impl ChainSource {
    fn load(&self, base: &Path) -> Result<FiniteChain> {
        match self {
            ChainSource::Path(p) => FiniteChain::load(&base.join(p)),
            ChainSource::Inline(spec) => FiniteChain::from_spec(spec.clone()),
        }
    }
}

fn default_starts() -> Vec<f64> {
    vec![0.0]
}
fn clt_threshold() -> f64 {
    0.05
}
fn perkins_threshold() -> f64 {
    0.06
}
fn mc_tol() -> f64 {
    0.02
}
fn suite_chains() -> u64 {
    50
}
fn min_states() -> usize {
    3
}
fn max_states() -> usize {
    30
}
fn product_states() -> usize {
    12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Invariance {
        law: LawSpec,
        chain: ChainKind,
        k: u64,
        samples: u64,
    },
    Lln {
        law: LawSpec,
        crossings: u64,
        #[serde(default = "default_starts")]
        starts: Vec<f64>,
    },
    Clt {
        law: LawSpec,
        n: u64,
        walks: u64,
        #[serde(default)]
        start: f64,
        #[serde(default = "clt_threshold")]
        threshold: f64,
    },
    Perkins {
        law: LawSpec,
        n: u64,
        walks: u64,
        #[serde(default = "perkins_threshold")]
        threshold: f64,
    },
    Occupation {
        law: LawSpec,
        set: SetSpec,
        cycles: u64,
        #[serde(default = "mc_tol")]
        tol: f64,
    },
    Upcrossings {
        law: LawSpec,
        levels: Vec<f64>,
        start: StartLaw,
        cycles: u64,
        #[serde(default = "mc_tol")]
        tol: f64,
    },
    HopfRatio {
        law: LawSpec,
        set: SetSpec,
        b1: SetSpec,
        b2: SetSpec,
        events: u64,
    },
    FiniteSuite {
        #[serde(default = "suite_chains")]
        chains: u64,
        #[serde(default = "min_states")]
        min_states: usize,
        #[serde(default = "max_states")]
        max_states: usize,
        #[serde(default = "product_states")]
        product_max_states: usize,
    },
    FiniteChain {
        chain: ChainSource,
        #[serde(default = "product_states")]
        product_max_states: usize,
    },
    Kac {
        chain: ChainSource,
    },
    Duality {
        chain: ChainSource,
    },
    Lift {
        chain: ChainSource,
    },
    Torus {
        law: LawSpec,
        d: usize,
        m: usize,
        lower: Vec<usize>,
        upper: Vec<usize>,
    },
}

/// Catalog of experiment kinds and the statements they check.
pub const CATALOG: &[(&str, &str, &str)] = &[
    ("invariance", "Theorem 1, Theorem 4 Corollary", "k-step law of the O, O_down, script_O or entrance chain started at its invariant law"),
    ("lln", "Proposition 2", "average absolute overshoot along one path from any start"),
    ("clt", "Theorem 5", "law of L_n/sqrt(n) against 2Φ(σy/(2E|X1|))−1, with a KS trend over n"),
    ("perkins", "Eq. \"Perkins 0\"", "law of the scaled overshoot sum against the half-normal σ|N|"),
    ("occupation", "Proposition 3", "mean occupation of B per cycle under π+, π− and π"),
    ("upcrossings", "Proposition 4", "mean up-crossings of level a per cycle"),
    ("hopf_ratio", "Theorem 3", "ratio of entrance counts in two sets along one path"),
    ("finite_suite", "Theorem 1, Eq. (3), Remark 2, Theorem 2, Proposition 1", "all exact identities on seeded random chains"),
    ("finite_chain", "Theorem 1, Eq. (3), Remark 2, Eq. \"reduction 2d\", Theorem 2, Proposition 1", "all exact identities on one chain"),
    ("kac", "Proposition 1", "Kac lifts of the induced and entrance invariant laws"),
    ("duality", "Remark 2", "exit chain against the time-reversed dual entrance chain"),
    ("lift", "Theorem 2", "lifts proportional to the induced and entrance invariant laws"),
    ("torus", "Theorem 3", "entrance measure of a torus walk against its tail form"),
];

fn positive(field: &str, v: u64) -> Result<()> {
    if v == 0 {
        return Err(LabError::config(field, "must be positive"));
    }
    Ok(())
}

fn positive_real(field: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(LabError::config(field, "must be a positive number"));
    }
    Ok(())
}

fn law(spec: &LawSpec) -> Result<IncrementLaw> {
    IncrementLaw::from_spec(spec).map_err(|e| match e {
        LabError::Config { field, reason } => LabError::config(format!("experiment.{field}"), reason),
        other => other,
    })
}

fn identities(checks: &[entrance_core::finite_chain::IdentityCheck], seed: u64) -> Outcome {
    Outcome { verdicts: checks.iter().map(|c| TestVerdict::from_identity(c, seed)).collect(), cdf_tables: vec![] }
}

fn concat(outcomes: Vec<Outcome>) -> Outcome {
    let mut all = Outcome { verdicts: vec![], cdf_tables: vec![] };
    for o in outcomes {
        all.verdicts.extend(o.verdicts);
        all.cdf_tables.extend(o.cdf_tables);
    }
    all
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Invariance { .. } => "invariance",
            Experiment::Lln { .. } => "lln",
            Experiment::Clt { .. } => "clt",
            Experiment::Perkins { .. } => "perkins",
            Experiment::Occupation { .. } => "occupation",
            Experiment::Upcrossings { .. } => "upcrossings",
            Experiment::HopfRatio { .. } => "hopf_ratio",
            Experiment::FiniteSuite { .. } => "finite_suite",
            Experiment::FiniteChain { .. } => "finite_chain",
            Experiment::Kac { .. } => "kac",
            Experiment::Duality { .. } => "duality",
            Experiment::Lift { .. } => "lift",
            Experiment::Torus { .. } => "torus",
        }
    }

    /// Runs the experiment. Relative chain paths resolve against `base`.
    pub fn run(&self, seed: u64, base: &Path) -> Result<Outcome> {
        match self {
            Experiment::Invariance { law: l, chain, k, samples } => {
                positive("experiment.k", *k)?;
                positive("experiment.samples", *samples)?;
                invariance_test(&law(l)?, chain, *k, *samples, seed)
            }
            Experiment::Lln { law: l, crossings, starts } => {
                positive("experiment.crossings", *crossings)?;
                if starts.is_empty() {
                    return Err(LabError::config("experiment.starts", "must not be empty"));
                }
                let l = law(l)?;
                Ok(concat(starts.iter().map(|s| lln_overshoots(&l, *crossings, seed, *s)).collect::<Result<_>>()?))
            }
            Experiment::Clt { law: l, n, walks, start, threshold } => {
                positive("experiment.n", *n)?;
                positive("experiment.walks", *walks)?;
                positive_real("experiment.threshold", *threshold)?;
                clt_levelcrossings(&law(l)?, *n, *walks, seed, *start, *threshold)
            }
            Experiment::Perkins { law: l, n, walks, threshold } => {
                positive("experiment.n", *n)?;
                positive("experiment.walks", *walks)?;
                positive_real("experiment.threshold", *threshold)?;
                perkins_sum(&law(l)?, *n, *walks, seed, *threshold)
            }
            Experiment::Occupation { law: l, set, cycles, tol } => {
                positive("experiment.cycles", *cycles)?;
                positive_real("experiment.tol", *tol)?;
                occupation_identity(&law(l)?, set, *cycles, seed, *tol)
            }
            Experiment::Upcrossings { law: l, levels, start, cycles, tol } => {
                positive("experiment.cycles", *cycles)?;
                positive_real("experiment.tol", *tol)?;
                if levels.is_empty() {
                    return Err(LabError::config("experiment.levels", "must not be empty"));
                }
                let l = law(l)?;
                let runs = levels.iter().map(|a| upcrossing_expectation(&l, *a, *start, *cycles, seed, *tol));
                Ok(concat(runs.collect::<Result<_>>()?))
            }
            Experiment::HopfRatio { law: l, set, b1, b2, events } => {
                positive("experiment.events", *events)?;
                hopf_ratio_test(&law(l)?, set, b1, b2, *events, seed)
            }
            Experiment::FiniteSuite { chains, min_states, max_states, product_max_states } => {
                positive("experiment.chains", *chains)?;
                let report = run_suite(seed, *chains as usize, *min_states, *max_states, *product_max_states)?;
                let checks: Vec<_> = report
                    .maxima
                    .iter()
                    .map(|(name, max)| {
                        let threshold = report.thresholds.get(name).copied();
                        entrance_core::finite_chain::IdentityCheck {
                            identity: name.clone(),
                            residual: *max,
                            threshold,
                            pass: threshold.is_none_or(|t| *max <= t),
                            skipped: None,
                        }
                    })
                    .collect();
                Ok(identities(&checks, seed))
            }
            Experiment::FiniteChain { chain, product_max_states } => {
                Ok(identities(&chain.load(base)?.verify(*product_max_states)?, seed))
            }
            Experiment::Kac { chain } => {
                let c = chain.load(base)?;
                Ok(identities(&verify_kac(c.p(), c.mu()?, c.partition())?, seed))
            }
            Experiment::Duality { chain } => {
                let c = chain.load(base)?;
                Ok(identities(&verify_duality(c.p(), c.mu()?, c.partition())?, seed))
            }
            Experiment::Lift { chain } => {
                let c = chain.load(base)?;
                Ok(identities(&verify_bijection(c.p(), c.partition())?, seed))
            }
            Experiment::Torus { law: l, d, m, lower, upper } => {
                Ok(identities(&[torus_tail_form_check(*d, *m, &law(l)?, lower, upper)?], seed))
            }
        }
    }
}

impl ExperimentConfig {
    /// Parses a config. The experiment is written `{"kind": K, ...fields}`;
    /// it is rewritten to `{K: {...fields}}` first so that errors keep the
    /// path of the offending field.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LabError::config("config", e.to_string()))?;
        let mut kind = None;
        if let Some(exp) = value.get_mut("experiment") {
            if let Some(fields) = exp.as_object_mut() {
                match fields.remove("kind") {
                    Some(serde_json::Value::String(k)) => {
                        *exp = serde_json::json!({ k.as_str(): std::mem::take(fields) });
                        kind = Some(k);
                    }
                    _ => return Err(LabError::config("experiment.kind", "missing or not a string")),
                }
            }
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let mut path = e.path().to_string();
            if let Some(k) = &kind {
                path = path.replacen(&format!("experiment.{k}"), "experiment", 1);
            }
            let inner = e.into_inner().to_string();
            let field = match path.as_str() {
                "." => "config".to_string(),
                "experiment" if inner.starts_with("unknown variant") => "experiment.kind".to_string(),
                _ => path,
            };
            LabError::config(field, inner)
        })
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config("--config", format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }
}

/// Configuration of `dump-density`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub law: LawSpec,
    pub density: DensityKind,
    #[serde(default)]
    pub set: Option<SetSpec>,
    pub grid: Grid,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Pi,
    PiPlus,
    PiMinus,
    LambdaEntr,
    LambdaExit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl DensityConfig {
    pub fn parse(text: &str) -> Result<DensityConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| LabError::config(e.path().to_string(), e.into_inner().to_string()))
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let Grid { lo, hi, points } = self.grid;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 2 {
            return Err(LabError::config("grid", "need finite lo < hi and at least 2 points"));
        }
        Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
    }

    pub fn name(&self) -> &'static str {
        match self.density {
            DensityKind::Pi => "pi",
            DensityKind::PiPlus => "pi_plus",
            DensityKind::PiMinus => "pi_minus",
            DensityKind::LambdaEntr => "lambda_entr",
            DensityKind::LambdaExit => "lambda_exit",
        }
    }
}
