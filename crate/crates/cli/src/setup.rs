//! Turns config sections into library objects.

use coopmac::channel::{db_to_linear, CsitMap};
use coopmac::fading::ConferencingSpec;
use coopmac::{CsitQuantizer, DiscreteChannelSpec, Engine, FadingChannelSpec, FadingDistribution, InputLaw, StateSample, TransmitPolicy};

use crate::config::{ChannelConfig, CsitConfig, DiscreteChannelConfig, EngineConfig, FadingConfig, LawConfig, PolicyConfig, RunConfig};
use crate::error::CliError;

fn require<'a, T>(section: &'a Option<T>, pointer: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| CliError::schema(pointer, "section is required for this command"))
}

pub fn channel(cfg: &RunConfig) -> Result<FadingChannelSpec<f64>, CliError> {
    fading_spec(require(&cfg.channel, "/channel")?)
}

pub fn fading_spec(ch: &ChannelConfig) -> Result<FadingChannelSpec<f64>, CliError> {
    let power = match (&ch.power, &ch.power_db) {
        (Some(p), _) => p.clone(),
        (None, Some(db)) => db.iter().map(|d| db_to_linear(*d)).collect(),
        (None, None) => return Err(CliError::schema("/channel/power", "one of power or power_db is required")),
    };
    let noise = match (&ch.noise, &ch.noise_db) {
        (Some(n), _) => n.clone(),
        (None, Some(db)) => db.iter().map(|d| db_to_linear(*d)).collect(),
        (None, None) => vec![1.0; ch.num_rx],
    };
    let fading = match &ch.fading {
        FadingConfig::Rayleigh => FadingDistribution::IidRayleigh,
        FadingConfig::Unit => FadingDistribution::Deterministic(StateSample::filled(ch.num_rx, ch.num_tx, 1.0)?),
        FadingConfig::Deterministic { gains } => {
            if gains.iter().flatten().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(CliError::schema("/channel/fading/gains", "gains must be finite and >= 0"));
            }
            FadingDistribution::Deterministic(StateSample::from_rows(gains).map_err(|e| CliError::schema("/channel/fading/gains", e.to_string()))?)
        }
    };
    Ok(FadingChannelSpec::new(ch.num_tx, ch.num_rx, noise, power, fading)?)
}

pub fn quantizer(cfg: &RunConfig, num_tx: usize) -> Result<CsitQuantizer<f64>, CliError> {
    let Some(maps) = &cfg.csit else {
        return Ok(CsitQuantizer::no_csit(num_tx));
    };
    if maps.len() != num_tx {
        return Err(CliError::schema("/csit", format!("expected {num_tx} maps, got {}", maps.len())));
    }
    let maps = maps
        .iter()
        .enumerate()
        .map(|(i, m)| match m {
            CsitConfig::None => Ok(CsitMap::NoCsit),
            CsitConfig::Threshold { row, col, cuts } => CsitMap::threshold(*row, *col, cuts.clone()).map_err(|e| CliError::schema(&format!("/csit/{i}/cuts"), e.to_string())),
        })
        .collect::<Result<_, _>>()?;
    Ok(CsitQuantizer::new(maps))
}

/// Configured policy, or full power with no correlation.
pub fn policy(cfg: &RunConfig, spec: &FadingChannelSpec<f64>) -> Result<TransmitPolicy<f64>, CliError> {
    let p = spec.num_tx();
    match &cfg.policy {
        None => Ok(TransmitPolicy::constant(spec.power_budget(), &vec![0.0; p])),
        Some(PolicyConfig::Constant { phi, rho }) => {
            let phi = phi.clone().unwrap_or_else(|| spec.power_budget().to_vec());
            if rho.len() != p {
                return Err(CliError::schema("/policy/constant/rho", format!("expected {p} entries, got {}", rho.len())));
            }
            if phi.len() != p {
                return Err(CliError::schema("/policy/constant/phi", format!("expected {p} entries, got {}", phi.len())));
            }
            Ok(TransmitPolicy::constant(&phi, rho))
        }
        Some(PolicyConfig::Tables(t)) => {
            if t.len() != p {
                return Err(CliError::schema("/policy/tables", format!("expected {p} tables, got {}", t.len())));
            }
            Ok(TransmitPolicy::tables(t.iter().map(|t| (t.phi.clone(), t.rho.clone())).collect()))
        }
    }
}

/// Configured engine; otherwise 64-node quadrature where it applies and
/// 10^5 Monte Carlo samples elsewhere.
pub fn engine(cfg: &RunConfig) -> Engine {
    match cfg.engine {
        Some(EngineConfig::Mc { samples, seed }) => Engine::mc(samples, seed),
        Some(EngineConfig::Quad { nodes }) => Engine::quad(nodes),
        None => match &cfg.channel {
            Some(ch) if ch.fading == FadingConfig::Rayleigh && ch.num_tx * ch.num_rx <= 3 => Engine::quad(64),
            _ => Engine::mc(100_000, 0),
        },
    }
}

pub fn engine_label(e: Engine) -> String {
    match e {
        Engine::MonteCarlo { samples, seed } => format!("mc(samples={samples}, seed={seed})"),
        Engine::Quadrature { nodes } => format!("quad(nodes={nodes})"),
    }
}

pub fn engine_seed(e: Engine) -> Option<u64> {
    match e {
        Engine::MonteCarlo { seed, .. } => Some(seed),
        Engine::Quadrature { .. } => None,
    }
}

pub fn conferencing(cfg: &RunConfig) -> Result<ConferencingSpec<f64>, CliError> {
    let c = require(&cfg.conferencing, "/conferencing")?;
    Ok(ConferencingSpec::new(c.c12, c.c21)?)
}

pub fn discrete_channel(ch: &DiscreteChannelConfig) -> Result<DiscreteChannelSpec<f64>, CliError> {
    let pointer = "/discrete/channel";
    let wrap = |e: coopmac::Error| match e.class() {
        coopmac::ErrorClass::Input => CliError::schema(pointer, e.to_string()),
        _ => CliError::Core(e),
    };
    match ch {
        DiscreteChannelConfig::BinaryAdder => Ok(DiscreteChannelSpec::binary_adder()),
        DiscreteChannelConfig::Identity { size } => DiscreteChannelSpec::identity(*size).map_err(wrap),
        DiscreteChannelConfig::BinarySymmetric { crossover } => DiscreteChannelSpec::binary_symmetric(*crossover).map_err(wrap),
        DiscreteChannelConfig::Explicit {
            inputs,
            outputs,
            transition,
        } => DiscreteChannelSpec::new(inputs.clone(), outputs.clone(), transition.clone()).map_err(wrap),
    }
}

pub fn law(law: &Option<LawConfig>, channel: &DiscreteChannelSpec<f64>) -> Result<InputLaw<f64>, CliError> {
    let law = match law {
        None => InputLaw::uniform(channel),
        Some(l) => InputLaw::new(l.pu.clone(), l.cond.clone()).map_err(|e| CliError::schema("/discrete/law", e.to_string()))?,
    };
    law.check_for(channel).map_err(|e| match e.class() {
        coopmac::ErrorClass::Input => CliError::schema("/discrete/law", e.to_string()),
        _ => CliError::Core(e),
    })?;
    Ok(law)
}
