//! Problem bundle (system model, utility surface, channel trace) and the
//! bundled VGG19-shaped benchmark.

use serde::{Deserialize, Serialize};

use crate::channel::{synth_trace, ChannelMode, ChannelTrace, SynthParams};
use crate::error::{Error, Result};
use crate::system::{Budget, DeviceSpec, LayerProfile, RadioSpec, ServerSpec, SystemModel};
use crate::utility::{Oracle, UtilitySurface};

pub const BUNDLED_PROFILE_CSV: &str = include_str!("../profiles/vgg19_synthetic.csv");
pub const BUNDLED_SURFACE_CSV: &str = include_str!("../surfaces/vgg19_synthetic.csv");
pub const BUNDLED_TRACE_CSV: &str = include_str!("../traces/outdoor_synthetic.csv");

/// Split layer carrying the bundled surface's peak accuracy.
pub const BUNDLED_OPTIMUM_LAYER: usize = 7;
pub const BUNDLED_OPTIMUM_UTILITY: f64 = 0.875;

/// Everything needed to evaluate configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub system: SystemModel,
    pub surface: UtilitySurface,
    pub trace: ChannelTrace,
}

/// Hardware, radio and budget settings that are not part of the data files.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareConfig {
    pub device: DeviceSpec,
    pub server: ServerSpec,
    pub radio: RadioSpec,
    pub budget: Budget,
}

impl Problem {
    pub fn new(system: SystemModel, surface: UtilitySurface, trace: ChannelTrace) -> Result<Self> {
        system.validate()?;
        if surface.num_layers() != system.num_layers() {
            return Err(Error::InvalidConfig(format!(
                "utility surface covers {} layers but the profile has {}",
                surface.num_layers(),
                system.num_layers()
            )));
        }
        if trace.is_empty() {
            return Err(Error::EmptyTrace);
        }
        Ok(Self { system, surface, trace })
    }

    pub fn from_parts(
        profile: LayerProfile,
        hardware: HardwareConfig,
        surface: UtilitySurface,
        trace: ChannelTrace,
    ) -> Result<Self> {
        let system = SystemModel {
            profile,
            device: hardware.device,
            server: hardware.server,
            radio: hardware.radio,
            budget: hardware.budget,
        };
        Self::new(system, surface, trace)
    }

    /// The bundled benchmark: VGG19-shaped profile at 224x224 FP32, default
    /// hardware, 5 J / 5 s budgets, peak accuracy 0.875 at layer 7.
    pub fn bundled() -> Self {
        let profile = LayerProfile::from_csv_str(BUNDLED_PROFILE_CSV, "bundled profile").expect("bundled profile");
        let surface = UtilitySurface::from_csv_str(BUNDLED_SURFACE_CSV, "bundled surface").expect("bundled surface");
        let trace = ChannelTrace::from_csv_str(BUNDLED_TRACE_CSV, "bundled trace").expect("bundled trace");
        Self::from_parts(profile, HardwareConfig::default(), surface, trace).expect("bundled problem")
    }

    pub fn num_layers(&self) -> usize {
        self.system.num_layers()
    }

    /// Trace frame a run with `seed` starts from.
    pub fn frame_for_seed(&self, seed: u64) -> usize {
        (seed % self.trace.len() as u64) as usize
    }

    pub fn oracle(&self, mode: ChannelMode, seed: u64, cap: usize) -> Oracle<'_> {
        Oracle::new(
            &self.system,
            &self.surface,
            &self.trace,
            mode,
            self.frame_for_seed(seed),
            cap,
        )
    }
}

/// Parameters the bundled data files are generated from.
pub mod bundled {
    use super::*;

    pub fn profile() -> LayerProfile {
        LayerProfile::vgg19_shaped(224, 32)
    }

    /// Plateau of 0.84375 with a bump peaking at 0.875 on layer 7 that falls
    /// by 1/128 per layer on either side.
    pub fn surface() -> UtilitySurface {
        let base = (1..=37)
            .map(|l: usize| {
                let steps = l.abs_diff(BUNDLED_OPTIMUM_LAYER) as f64;
                (BUNDLED_OPTIMUM_UTILITY - steps / 128.0).max(PLATEAU)
            })
            .collect();
        UtilitySurface::new(base, TRUNCATION_PENALTY, 0.0).expect("static surface")
    }

    pub const PLATEAU: f64 = 0.84375;

    pub const TRUNCATION_PENALTY: f64 = 0.02;

    pub fn trace_params() -> SynthParams {
        SynthParams::default()
    }

    pub fn trace() -> ChannelTrace {
        synth_trace(&trace_params()).expect("static trace parameters")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_match_generators() {
        let p = Problem::bundled();
        assert_eq!(p.system.profile, bundled::profile());
        assert_eq!(p.surface, bundled::surface());
        assert_eq!(p.trace.gains_db, bundled::trace().gains_db);
        assert_eq!(p.num_layers(), 37);
    }

    #[test]
    fn mismatched_surface_rejected() {
        let p = Problem::bundled();
        let s = UtilitySurface::new(vec![0.5; 3], 0.0, 0.0).unwrap();
        assert!(Problem::new(p.system, s, p.trace).is_err());
    }
}
