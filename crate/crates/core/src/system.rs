//! Analytic cost model for split inference over a wireless uplink.
//!
//! Everything here is a pure function of the decision vector, the channel
//! gain of the current task and the static device/server/radio description.
//! Energies are in joules, delays in seconds, payloads in bits.

use std::f64::consts::LN_2;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision vector: the last layer executed on the device and the uplink
/// transmit power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// 1-based split layer index.
    pub layer: usize,
    pub power_w: f64,
}

impl SplitConfig {
    pub fn new(layer: usize, power_w: f64) -> Self {
        Self { layer, power_w }
    }
}

impl fmt::Display for SplitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(layer {}, {:.4} W)", self.layer, self.power_w)
    }
}

/// Per-layer compute load and output payload of the partitioned network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    /// Multiply-accumulate count of each layer, index 0 is layer 1.
    pub macs: Vec<f64>,
    /// Size in bits of each layer's output activation.
    pub activation_bits: Vec<f64>,
    /// Size in bits of the raw network input.
    pub input_bits: f64,
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    layer_index: usize,
    macs: f64,
    activation_bits: f64,
}

const INPUT_BITS_KEY: &str = "input_bits";

impl LayerProfile {
    pub fn new(macs: Vec<f64>, activation_bits: Vec<f64>, input_bits: f64) -> Result<Self> {
        if macs.is_empty() {
            return Err(Error::InvalidConfig("layer profile has no layers".into()));
        }
        if macs.len() != activation_bits.len() {
            return Err(Error::InvalidConfig(format!(
                "layer profile length mismatch: {} MAC entries vs {} activation entries",
                macs.len(),
                activation_bits.len()
            )));
        }
        let positive = |v: &f64| v.is_finite() && *v > 0.0;
        if !macs.iter().all(positive) || !activation_bits.iter().all(positive) || !positive(&input_bits) {
            return Err(Error::InvalidConfig(
                "layer profile entries must be finite and strictly positive".into(),
            ));
        }
        Ok(Self {
            macs,
            activation_bits,
            input_bits,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.macs.len()
    }

    /// Payload emitted after `layer` (1-based).
    pub fn payload_bits(&self, layer: usize) -> f64 {
        self.activation_bits[layer - 1]
    }

    pub fn total_macs(&self) -> f64 {
        self.macs.iter().sum()
    }

    /// VGG19 feature extractor (16 conv, 16 ReLU, 5 max-pool = 37 layers) at a
    /// square input `resolution` with `bits` per activation element.
    ///
    /// Convolutions count `H·W·C_in·C_out·9` MACs, ReLUs one op per output
    /// element, 2x2 pools four ops per output element.
    pub fn vgg19_shaped(resolution: usize, bits: usize) -> Self {
        const CFG: [usize; 21] = [
            64, 64, 0, 128, 128, 0, 256, 256, 256, 256, 0, 512, 512, 512, 512, 0, 512, 512, 512, 512, 0,
        ];
        let mut macs = Vec::with_capacity(37);
        let mut acts = Vec::with_capacity(37);
        let mut channels = 3usize;
        let mut side = resolution;
        let bits = bits as f64;
        for &out in &CFG {
            if out == 0 {
                side /= 2;
                let elems = (side * side * channels) as f64;
                macs.push(4.0 * elems);
                acts.push(elems * bits);
            } else {
                let elems = (side * side * out) as f64;
                macs.push((side * side * channels * out * 9) as f64);
                acts.push(elems * bits);
                macs.push(elems);
                acts.push(elems * bits);
                channels = out;
            }
        }
        let input_bits = (resolution * resolution * 3) as f64 * bits;
        Self::new(macs, acts, input_bits).expect("VGG19 profile is well formed")
    }

    /// Parses the profile CSV: an `# input_bits=<n>` metadata line followed by
    /// a `layer_index,macs,activation_bits` table with rows `1..=L`.
    pub fn from_csv_str(text: &str, source_name: &str) -> Result<Self> {
        let mut input_bits = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.trim().split_once('=') {
                    if key.trim() == INPUT_BITS_KEY {
                        let v = value
                            .trim()
                            .parse::<f64>()
                            .map_err(|e| Error::parse(source_name, i + 1, format!("bad input_bits: {e}")))?;
                        input_bits = Some(v);
                    }
                }
            }
        }
        let input_bits =
            input_bits.ok_or_else(|| Error::parse(source_name, 1, "missing `# input_bits=<bits>` metadata line"))?;

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut macs = Vec::new();
        let mut acts = Vec::new();
        for (i, row) in reader.deserialize::<ProfileRow>().enumerate() {
            let row = row.map_err(|e| csv_error(source_name, &e))?;
            if row.layer_index != i + 1 {
                return Err(Error::parse(
                    source_name,
                    i + 2,
                    format!("expected layer_index {}, found {}", i + 1, row.layer_index),
                ));
            }
            macs.push(row.macs);
            acts.push(row.activation_bits);
        }
        Self::new(macs, acts, input_bits)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# {INPUT_BITS_KEY}={}\nlayer_index,macs,activation_bits\n",
            self.input_bits
        );
        for (i, (m, a)) in self.macs.iter().zip(&self.activation_bits).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, m, a));
        }
        out
    }
}

pub(crate) fn csv_error(source_name: &str, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::parse(source_name, line, e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceSpec {
    pub freq_hz: f64,
    /// Effective switched capacitance, J·s²/op.
    pub kappa: f64,
    /// Operations retired per cycle.
    pub eta: f64,
    pub p_min_w: f64,
    pub p_max_w: f64,
}

impl Default for DeviceSpec {
    /// Raspberry Pi 4 class device.
    fn default() -> Self {
        Self {
            freq_hz: 1.8e9,
            kappa: 1e-29,
            eta: 1.0,
            p_min_w: 0.1,
            p_max_w: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerSpec {
    pub freq_hz: f64,
    pub eta: f64,
}

impl Default for ServerSpec {
    /// Ten cores at 4.5 GHz, aggregated into one effective clock.
    fn default() -> Self {
        Self {
            freq_hz: 45e9,
            eta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioSpec {
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
}

impl RadioSpec {
    /// Noise power spectral density in W/Hz.
    pub fn noise_psd_w_hz(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_hz - 30.0) / 10.0)
    }
}

impl Default for RadioSpec {
    /// 256 OFDM subcarriers of 240 kHz at 80 % utilisation, -147 dBm/Hz noise.
    fn default() -> Self {
        Self {
            bandwidth_hz: 240_000.0 * 256.0 * 0.8,
            noise_psd_dbm_hz: -147.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub e_max_j: f64,
    pub tau_max_s: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            e_max_j: 5.0,
            tau_max_s: 5.0,
        }
    }
}

/// Energies and delays of one configuration under one channel realisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub e_compute_j: f64,
    pub e_transmit_j: f64,
    pub tau_device_s: f64,
    pub tau_transmit_s: f64,
    pub tau_server_s: f64,
    pub feasible: bool,
}

impl CostBreakdown {
    pub fn total_energy(&self) -> f64 {
        self.e_compute_j + self.e_transmit_j
    }

    pub fn total_delay(&self) -> f64 {
        self.tau_device_s + self.tau_transmit_s + self.tau_server_s
    }

    pub fn meets(&self, budget: &Budget) -> bool {
        self.total_energy() <= budget.e_max_j && self.total_delay() <= budget.tau_max_s
    }
}

/// Shannon rate of the uplink in bits/s.
pub fn achievable_rate(power_w: f64, gain_linear: f64, radio: &RadioSpec) -> f64 {
    let received = power_w * gain_linear;
    if received <= 0.0 {
        return 0.0;
    }
    let snr = received / (radio.noise_psd_w_hz() * radio.bandwidth_hz);
    radio.bandwidth_hz * snr.ln_1p() / LN_2
}

pub fn transmission_delay(
    config: &SplitConfig,
    gain_linear: f64,
    profile: &LayerProfile,
    radio: &RadioSpec,
) -> Result<f64> {
    let rate = achievable_rate(config.power_w, gain_linear, radio);
    if rate <= 0.0 {
        return Err(Error::ZeroRate);
    }
    Ok(profile.payload_bits(config.layer) / rate)
}

/// Radiated energy over the airtime. Zero power costs nothing even on a dead link.
pub fn transmission_energy(config: &SplitConfig, tau_transmit_s: f64) -> f64 {
    if config.power_w == 0.0 {
        0.0
    } else {
        config.power_w * tau_transmit_s
    }
}

pub fn local_compute_energy(config: &SplitConfig, profile: &LayerProfile, device: &DeviceSpec) -> f64 {
    let f2 = device.freq_hz * device.freq_hz;
    profile.macs[..config.layer]
        .iter()
        .map(|alpha| device.kappa * alpha * f2)
        .sum()
}

/// `(device delay, server delay)` for the two halves of the network.
pub fn compute_delays(
    config: &SplitConfig,
    profile: &LayerProfile,
    device: &DeviceSpec,
    server: &ServerSpec,
) -> (f64, f64) {
    let (head, tail) = profile.macs.split_at(config.layer);
    let device_rate = device.freq_hz * device.eta;
    let server_rate = server.freq_hz * server.eta;
    let tau_device = head.iter().map(|a| a / device_rate).sum();
    let tau_server = tail.iter().map(|a| a / server_rate).sum();
    (tau_device, tau_server)
}

/// Full cost of `config`. A dead link is reported as infeasible with an
/// infinite transmission delay rather than as an error.
pub fn evaluate_cost(
    config: &SplitConfig,
    gain_linear: f64,
    profile: &LayerProfile,
    device: &DeviceSpec,
    server: &ServerSpec,
    radio: &RadioSpec,
    budget: &Budget,
) -> CostBreakdown {
    let tau_transmit_s = transmission_delay(config, gain_linear, profile, radio).unwrap_or(f64::INFINITY);
    let (tau_device_s, tau_server_s) = compute_delays(config, profile, device, server);
    let mut cost = CostBreakdown {
        e_compute_j: local_compute_energy(config, profile, device),
        e_transmit_j: transmission_energy(config, tau_transmit_s),
        tau_device_s,
        tau_transmit_s,
        tau_server_s,
        feasible: false,
    };
    cost.feasible = cost.meets(budget);
    cost
}

/// Static description of the split-inference system: network profile,
/// hardware, radio and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub profile: LayerProfile,
    pub device: DeviceSpec,
    pub server: ServerSpec,
    pub radio: RadioSpec,
    pub budget: Budget,
}

impl SystemModel {
    pub fn validate(&self) -> Result<()> {
        let d = &self.device;
        let all_pos = [
            d.freq_hz,
            d.kappa,
            d.eta,
            d.p_min_w,
            d.p_max_w,
            self.server.freq_hz,
            self.server.eta,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !all_pos {
            return Err(Error::InvalidConfig(
                "device/server parameters must be strictly positive".into(),
            ));
        }
        if d.p_min_w >= d.p_max_w {
            return Err(Error::InvalidConfig(format!(
                "p_min_w ({}) must be below p_max_w ({})",
                d.p_min_w, d.p_max_w
            )));
        }
        if self.radio.bandwidth_hz.is_nan()
            || self.radio.bandwidth_hz <= 0.0
            || !self.radio.noise_psd_dbm_hz.is_finite()
        {
            return Err(Error::InvalidConfig("radio bandwidth must be positive".into()));
        }
        if !(self.budget.e_max_j > 0.0 && self.budget.tau_max_s > 0.0) {
            return Err(Error::InvalidConfig("budgets must be strictly positive".into()));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.profile.num_layers()
    }

    pub fn power_range(&self) -> (f64, f64) {
        (self.device.p_min_w, self.device.p_max_w)
    }

    pub fn check(&self, config: &SplitConfig) -> Result<()> {
        let (lo, hi) = self.power_range();
        if config.layer < 1 || config.layer > self.num_layers() {
            return Err(Error::InvalidConfig(format!(
                "split layer {} outside 1..={}",
                config.layer,
                self.num_layers()
            )));
        }
        if !(lo..=hi).contains(&config.power_w) {
            return Err(Error::InvalidConfig(format!(
                "transmit power {} W outside [{lo}, {hi}]",
                config.power_w
            )));
        }
        Ok(())
    }

    pub fn cost(&self, config: &SplitConfig, gain_linear: f64) -> CostBreakdown {
        evaluate_cost(
            config,
            gain_linear,
            &self.profile,
            &self.device,
            &self.server,
            &self.radio,
            &self.budget,
        )
    }

    /// Maps a point of the unit square `[power, layer]` to a configuration.
    /// Power is linear in `[P_min, P_max]`; the layer is rounded half-up and clamped.
    pub fn denormalize(&self, power: f64, layer: f64) -> SplitConfig {
        let (lo, hi) = self.power_range();
        let p = power.clamp(0.0, 1.0);
        let l_max = self.num_layers();
        let raw = 1.0 + layer.clamp(0.0, 1.0) * (l_max as f64 - 1.0);
        let layer = ((raw + 0.5).floor() as usize).clamp(1, l_max);
        SplitConfig::new(layer, lo + p * (hi - lo))
    }

    /// Inverse of [`denormalize`](Self::denormalize) on valid configurations.
    pub fn normalize(&self, config: &SplitConfig) -> (f64, f64) {
        let (lo, hi) = self.power_range();
        let p = ((config.power_w - lo) / (hi - lo)).clamp(0.0, 1.0);
        let l = if self.num_layers() == 1 {
            0.0
        } else {
            (config.layer as f64 - 1.0) / (self.num_layers() as f64 - 1.0)
        };
        (p, l)
    }

    /// Evenly spaced power levels over `[P_min, P_max]`.
    pub fn power_levels(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.power_range();
        match count {
            0 => Vec::new(),
            1 => vec![hi],
            n => (0..n).map(|i| lo + (i as f64 / (n - 1) as f64) * (hi - lo)).collect(),
        }
    }
}
