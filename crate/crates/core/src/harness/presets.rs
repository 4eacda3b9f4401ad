use crate::error::{Error, Result};
use crate::harness::{parse_range, SweepPlan};
use crate::impairment::ImpairmentKind;
use crate::system::{NoiseMode, DEFAULT_SEED};

pub const PRESET_NAMES: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];

/// Group sizes used by the SNR presets for N = 32.
pub const DEFAULT_NBARS: [usize; 5] = [1, 2, 4, 8, 32];

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub plan: SweepPlan,
}

fn base(kinds: Vec<ImpairmentKind>, nbars: Vec<usize>, snrs_db: Vec<f64>, fractions: Vec<f64>) -> SweepPlan {
    SweepPlan {
        m_t: 2,
        m_r: 4,
        n: 32,
        nbars,
        kinds,
        snrs_db,
        fractions,
        trials: 100,
        master_seed: DEFAULT_SEED,
        noise_mode: NoiseMode::SnrNormalized,
        amp_min: 0.0,
    }
}

/// Looks up a named experiment. All presets use N = 32, M_T = 2, M_R = 4,
/// K = 100, seed 42 and snr-normalized noise.
pub fn preset(name: &str) -> Result<Preset> {
    use ImpairmentKind::*;
    let snr_axis = parse_range("-10:2:30")?;
    let nbars = DEFAULT_NBARS.to_vec();
    let (description, plan) = match name {
        "fig3" => (
            "Type 1 at 20%, SNR -10:2:30 dB, nbar {1,2,4,8,32}",
            base(vec![Type1], nbars, snr_axis, vec![0.2]),
        ),
        "fig4" => (
            "ideal vs Type 2 at 20%, SNR -10:2:30 dB, nbar {1,2,4,8,32}",
            base(vec![Ideal, Type2], nbars, snr_axis, vec![0.2]),
        ),
        "fig5" => (
            "ideal vs Type 3 at 20%, SNR -10:2:30 dB, nbar {1,2,4,8,32}",
            base(vec![Ideal, Type3], nbars, snr_axis, vec![0.2]),
        ),
        "fig6" => (
            "Types 1, 2, 3 at 20%, SNR -10:2:30 dB, nbar {1,2,4,8,32}",
            base(vec![Type1, Type2, Type3], nbars, snr_axis, vec![0.2]),
        ),
        "fig7" => (
            "Types 1, 2, 3 at SNR 10 dB, fraction 0:0.05:0.5, nbar 4",
            base(
                vec![Type1, Type2, Type3],
                vec![4],
                vec![10.0],
                parse_range("0:0.05:0.5")?,
            ),
        ),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset {other:?} (expected one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let name = PRESET_NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .expect("matched above");
    Ok(Preset {
        name,
        description,
        plan,
    })
}
