//! The two reference systems: a 1 kg mass stage and the identified precision
//! positioning stage. Lengths are in metres.

use serde::{Deserialize, Serialize};

use crate::linear::{make_transfer_function, StateSpace};
use crate::reset::CgLpPidParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantTf {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl PlantTf {
    pub fn model(&self) -> StateSpace<f64> {
        make_transfer_function(&self.num, &self.den).expect("preset plant is proper")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemPreset {
    pub name: String,
    pub plant: PlantTf,
    pub controller: CgLpPidParams<f64>,
    /// Sample rate, Hz.
    pub fs: f64,
    /// Bandwidth (open-loop crossover), Hz.
    pub fc_hz: f64,
    /// Sensor range in metres, when the preset specifies one.
    pub sensor_range: Option<f64>,
}

impl SystemPreset {
    pub fn plant_model(&self) -> StateSpace<f64> {
        self.plant.model()
    }
}

/// 1 kg mass `1/s^2` with the CgLp-PID tuned for 942 rad/s.
pub fn mass_table1() -> SystemPreset {
    SystemPreset {
        name: "mass-table1".into(),
        plant: PlantTf {
            num: vec![1.0],
            den: vec![1.0, 0.0, 0.0],
        },
        controller: CgLpPidParams {
            k: 6.0954e5,
            wc: 942.0,
            wi: 94.0,
            wd: 530.0,
            wt: 1.68e3,
            wra: 160.0,
            wr: 172.0,
            wf: 9.42e3,
            gamma: 0.5,
        },
        fs: 10_000.0,
        fc_hz: 150.0,
        sensor_range: Some(5000e-6),
    }
}

/// Identified stage `3.038e4 / (s^2 + 0.7413 s + 243.3)` with its full-reset
/// CgLp-PID.
pub fn stage_table2() -> SystemPreset {
    SystemPreset {
        name: "stage-table2".into(),
        plant: PlantTf {
            num: vec![3.038e4],
            den: vec![1.0, 0.7413, 243.3],
        },
        controller: CgLpPidParams {
            k: 16.41,
            wc: 942.5,
            wi: 94.25,
            wd: 529.2,
            wt: 1679.0,
            wra: 697.6,
            wr: 812.1,
            wf: 9420.0,
            gamma: 0.0,
        },
        fs: 10_000.0,
        fc_hz: 150.0,
        sensor_range: None,
    }
}

pub fn by_name(name: &str) -> Option<SystemPreset> {
    match name {
        "mass-table1" => Some(mass_table1()),
        "stage-table2" => Some(stage_table2()),
        _ => None,
    }
}

pub const NAMES: &[&str] = &["mass-table1", "stage-table2"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_table1_values() {
        let p = mass_table1();
        let c = p.controller;
        assert_eq!(c.k, 6.0954e5);
        assert_eq!(c.wc, 942.0);
        assert_eq!(c.wi, 94.0);
        assert_eq!(c.wd, 530.0);
        assert_eq!(c.wt, 1680.0);
        assert_eq!(c.wra, 160.0);
        assert_eq!(c.wf, 9420.0);
        assert_eq!(c.wr, 172.0);
        assert_eq!(c.gamma, 0.5);
        assert_eq!(p.sensor_range, Some(5.0e-3));
        assert_eq!(p.fs, 10_000.0);
        assert_eq!(p.plant.den, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn stage_table2_values() {
        let p = stage_table2();
        let c = p.controller;
        assert_eq!(c.k, 16.41);
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.wc, 942.5);
        assert_eq!(c.wi, 94.25);
        assert_eq!(c.wd, 529.2);
        assert_eq!(c.wt, 1679.0);
        assert_eq!(c.wra, 697.6);
        assert_eq!(c.wr, 812.1);
        assert_eq!(c.wf, 9420.0);
        assert_eq!(p.plant.num, vec![3.038e4]);
        assert_eq!(p.plant.den, vec![1.0, 0.7413, 243.3]);
        assert_eq!(p.fs, 10_000.0);
    }

    #[test]
    fn lookup() {
        assert!(by_name("mass-table1").is_some());
        assert!(by_name("nope").is_none());
        assert!(NAMES.iter().all(|n| by_name(n).is_some()));
    }
}
