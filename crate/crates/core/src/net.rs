//! Digital-twin network model: topology, association, fading and uplink rates.
//!
//! One macro cell (station index 0, unbounded coverage, interference-free
//! band) plus M small cells sharing a co-channel band. Devices associate with
//! the nearest small cell whose coverage circle contains them and fall back
//! to the macro cell otherwise. Channels are Rayleigh-faded: per-slot power
//! gains are unit-mean exponential draws on top of r^-alpha path loss.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::{Mobility, NetConfig};
use crate::error::{Error, Result};

/// Digital twin of one device: position, compute capacity, power budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTwin {
    pub id: usize,
    pub position_m: [f64; 2],
    /// CPU capacity, cycles per second.
    pub cpu_hz: f64,
    /// Transmit power budget, watts.
    pub p_max_w: f64,
}

/// Digital twin of one base station and its co-located edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationTwin {
    /// 0 is the macro cell; 1..=M are small cells.
    pub id: usize,
    pub position_m: [f64; 2],
    /// Uplink bandwidth, hertz.
    pub bandwidth_hz: f64,
    /// Edge server CPU capacity, cycles per second.
    pub cpu_hz: f64,
    /// Coverage radius, meters (infinite for the macro cell).
    pub coverage_radius_m: f64,
}

impl StationTwin {
    pub fn is_macro(&self) -> bool {
        self.id == 0
    }
}

/// Placed network: devices, stations and the device-to-station map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub devices: Vec<DeviceTwin>,
    pub stations: Vec<StationTwin>,
    /// `association[i]` is the station index device i transmits to.
    pub association: Vec<usize>,
    /// Distance floor applied to every device-station pair, meters.
    pub min_distance_m: f64,
}

impl Topology {
    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    /// Station count including the macro cell (M + 1).
    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    /// Floored Euclidean distance between device i and station j, meters.
    pub fn distance_m(&self, device: usize, station: usize) -> f64 {
        let d = self.devices[device].position_m;
        let s = self.stations[station].position_m;
        let raw = ((d[0] - s[0]).powi(2) + (d[1] - s[1]).powi(2)).sqrt();
        raw.max(self.min_distance_m)
    }

    /// Devices associated to station `j`, in device order.
    pub fn associated_devices(&self, station: usize) -> Vec<usize> {
        (0..self.n_devices())
            .filter(|&i| self.association[i] == station)
            .collect()
    }
}

/// Map each device to the nearest in-coverage small cell, macro otherwise.
/// Exact distance ties break toward the lower station index.
pub fn associate(devices: &[DeviceTwin], stations: &[StationTwin]) -> Vec<usize> {
    devices
        .iter()
        .map(|dev| {
            let mut best: Option<(usize, f64)> = None;
            for st in stations.iter().filter(|s| !s.is_macro()) {
                let dist = ((dev.position_m[0] - st.position_m[0]).powi(2)
                    + (dev.position_m[1] - st.position_m[1]).powi(2))
                .sqrt();
                if dist <= st.coverage_radius_m {
                    let better = match best {
                        None => true,
                        Some((_, d)) => dist < d,
                    };
                    if better {
                        best = Some((st.id, dist));
                    }
                }
            }
            best.map_or(0, |(id, _)| id)
        })
        .collect()
}

/// Place stations and devices and associate them.
///
/// The macro cell sits at the region center. Small cells use the configured
/// layout when given, otherwise uniform random positions. Devices are always
/// placed uniformly at random.
pub fn build_topology(cfg: &NetConfig, rng: &mut impl Rng) -> Result<Topology> {
    if cfg.n_devices == 0 {
        return Err(Error::config("net.n_devices", "at least one device"));
    }
    if !(cfg.region_m[0] > 0.0 && cfg.region_m[1] > 0.0) {
        return Err(Error::config("net.region_m", "region must be positive"));
    }
    if let Some(ref ps) = cfg.sbs_positions_m {
        if ps.len() != cfg.n_small_cells {
            return Err(Error::config(
                "net.sbs_positions_m",
                format!("expected {} positions, got {}", cfg.n_small_cells, ps.len()),
            ));
        }
    }

    let mut stations = Vec::with_capacity(cfg.n_small_cells + 1);
    stations.push(StationTwin {
        id: 0,
        position_m: [cfg.region_m[0] / 2.0, cfg.region_m[1] / 2.0],
        bandwidth_hz: cfg.bandwidth_mbs_hz,
        cpu_hz: cfg.cpu_mbs_hz,
        coverage_radius_m: f64::INFINITY,
    });
    for j in 0..cfg.n_small_cells {
        let position_m = match &cfg.sbs_positions_m {
            Some(ps) => ps[j],
            None => [
                rng.random_range(0.0..cfg.region_m[0]),
                rng.random_range(0.0..cfg.region_m[1]),
            ],
        };
        stations.push(StationTwin {
            id: j + 1,
            position_m,
            bandwidth_hz: cfg.bandwidth_sbs_hz,
            cpu_hz: cfg.cpu_sbs_hz,
            coverage_radius_m: cfg.coverage_radius_m,
        });
    }

    let devices = (0..cfg.n_devices)
        .map(|i| DeviceTwin {
            id: i,
            position_m: [
                rng.random_range(0.0..cfg.region_m[0]),
                rng.random_range(0.0..cfg.region_m[1]),
            ],
            cpu_hz: cfg.cpu_device_hz,
            p_max_w: cfg.p_max_w,
        })
        .collect::<Vec<_>>();

    let association = associate(&devices, &stations);
    Ok(Topology {
        devices,
        stations,
        association,
        min_distance_m: cfg.min_distance_m,
    })
}

/// Advance device positions by one slot and refresh the association.
pub fn step_mobility(topo: &mut Topology, mobility: &Mobility, region_m: [f64; 2], rng: &mut impl Rng) {
    let Mobility::RandomWalk { step_m } = *mobility else {
        return;
    };
    if step_m == 0.0 {
        return;
    }
    for dev in &mut topo.devices {
        for (axis, &limit) in region_m.iter().enumerate() {
            let delta = rng.random_range(-step_m..=step_m);
            let mut p = dev.position_m[axis] + delta;
            // Reflect off the region boundary.
            if p < 0.0 {
                p = -p;
            }
            if p > limit {
                p = 2.0 * limit - p;
            }
            dev.position_m[axis] = p.clamp(0.0, limit);
        }
    }
    topo.association = associate(&topo.devices, &topo.stations);
}

/// One slot's fading state for every device-station pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Unit-mean exponential power gains, devices x stations.
    pub gain: Array2<f64>,
    /// Floored distances, meters, devices x stations.
    pub distance_m: Array2<f64>,
    /// Path-loss exponent alpha.
    pub path_loss_exp: f64,
    /// Receiver noise power, watts.
    pub noise_w: f64,
}

impl ChannelRealization {
    /// Received power at station `j` from device `i` transmitting at `power_w`.
    pub fn received_power_w(&self, device: usize, station: usize, power_w: f64) -> f64 {
        power_w
            * self.gain[(device, station)]
            * self.distance_m[(device, station)].powf(-self.path_loss_exp)
    }
}

/// Draw a fresh fading realization for every pair.
pub fn sample_channel(topo: &Topology, cfg: &NetConfig, rng: &mut impl Rng) -> ChannelRealization {
    let n = topo.n_devices();
    let b = topo.n_stations();
    let mut gain = Array2::zeros((n, b));
    let mut distance_m = Array2::zeros((n, b));
    for i in 0..n {
        for j in 0..b {
            // Squared Rayleigh magnitude with unit mean power.
            let g: f64 = Exp1.sample(rng);
            gain[(i, j)] = g;
            distance_m[(i, j)] = topo.distance_m(i, j);
        }
    }
    ChannelRealization {
        gain,
        distance_m,
        path_loss_exp: cfg.path_loss_exp,
        noise_w: cfg.noise_w,
    }
}

/// Co-channel interference seen on the device `i` -> small cell `j` link.
///
/// Sums received interfering power over every other device that is actively
/// associated to a *different* small cell: the macro cell runs on its own
/// band and intra-cell users are orthogonal, so neither contributes.
/// `powers_w[i']` is the transmit power of device i' this slot.
pub fn interference(
    device: usize,
    station: usize,
    powers_w: &[f64],
    channel: &ChannelRealization,
    topo: &Topology,
) -> f64 {
    if station == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (other, &p) in powers_w.iter().enumerate().take(topo.n_devices()) {
        if other == device {
            continue;
        }
        let their_station = topo.association[other];
        if their_station == 0 || their_station == station {
            continue;
        }
        total += channel.received_power_w(other, their_station, p);
    }
    total
}

/// Shannon uplink rate in bits per second over `bandwidth_hz`.
///
/// rate = w * log2(1 + p * h * r^-alpha / (sigma^2 + I)). Zero bandwidth or
/// zero power yields zero rate.
pub fn uplink_rate(
    bandwidth_hz: f64,
    power_w: f64,
    gain: f64,
    distance_m: f64,
    path_loss_exp: f64,
    noise_w: f64,
    interference_w: f64,
) -> Result<f64> {
    if bandwidth_hz < 0.0 || power_w < 0.0 || gain < 0.0 || interference_w < 0.0 {
        return Err(Error::InvalidInput(format!(
            "uplink rate needs nonnegative inputs (w={bandwidth_hz}, p={power_w}, h={gain}, I={interference_w})"
        )));
    }
    if distance_m <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "uplink rate needs positive distance, got {distance_m}"
        )));
    }
    if noise_w <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "uplink rate needs positive noise power, got {noise_w}"
        )));
    }
    let sinr = power_w * gain * distance_m.powf(-path_loss_exp) / (noise_w + interference_w);
    Ok(bandwidth_hz * (1.0 + sinr).log2())
}

// ============================================================================
// Tests
// ============================================================================
