use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named vehicle-to-vehicle tapped-delay-line profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    /// VTV Expressway, low frequency selectivity.
    VtvEx,
    /// VTV Expressway Same Direction With Wall, high frequency selectivity.
    VtvSdww,
}

impl ProfileName {
    pub fn label(self) -> &'static str {
        match self {
            ProfileName::VtvEx => "VTV-EX",
            ProfileName::VtvSdww => "VTV-SDWW",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub name: String,
    /// Path gains in dB, renormalised so linear powers sum to one.
    pub path_gains_db: Vec<f64>,
    pub path_delays_ns: Vec<f64>,
    pub doppler_hz: f64,
}

impl ChannelProfile {
    pub fn new(name: impl Into<String>, gains_db: Vec<f64>, delays_ns: Vec<f64>, doppler_hz: f64) -> Result<Self> {
        if gains_db.len() != delays_ns.len() || gains_db.is_empty() {
            return Err(Error::Config(
                "channel profile needs equal-length, non-empty gain and delay lists".into(),
            ));
        }
        if delays_ns.iter().any(|d| *d < 0.0 || !d.is_finite()) || delays_ns.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("path delays must be non-negative and non-decreasing".into()));
        }
        if doppler_hz < 0.0 || !doppler_hz.is_finite() {
            return Err(Error::Config(format!("invalid Doppler frequency {doppler_hz}")));
        }
        let total: f64 = gains_db.iter().map(|g| 10f64.powf(g / 10.0)).sum();
        let offset = 10.0 * total.log10();
        Ok(ChannelProfile {
            name: name.into(),
            path_gains_db: gains_db.iter().map(|g| g - offset).collect(),
            path_delays_ns: delays_ns,
            doppler_hz,
        })
    }

    pub fn num_taps(&self) -> usize {
        self.path_gains_db.len()
    }

    pub fn linear_powers(&self) -> Vec<f64> {
        self.path_gains_db.iter().map(|g| 10f64.powf(g / 10.0)).collect()
    }
}

pub fn make_profile(name: ProfileName, doppler_hz: f64) -> Result<ChannelProfile> {
    let (gains, delays): (&[f64], &[f64]) = match name {
        ProfileName::VtvEx => (
            &[0.0, 0.0, 0.0, -6.3, -6.3, -25.1, -25.1, -25.1, -22.7, -22.7, -22.7],
            &[0.0, 1.0, 2.0, 100.0, 101.0, 200.0, 201.0, 202.0, 300.0, 301.0, 302.0],
        ),
        ProfileName::VtvSdww => (
            &[0.0, 0.0, -11.2, -11.2, -19.0, -21.9, -25.3, -25.3, -24.4, -28.0, -26.1, -26.1],
            &[0.0, 1.0, 100.0, 101.0, 200.0, 300.0, 400.0, 401.0, 500.0, 600.0, 700.0, 701.0],
        ),
    };
    ChannelProfile::new(name.label(), gains.to_vec(), delays.to_vec(), doppler_hz)
}
