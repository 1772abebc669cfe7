//! Cart-pole model linearized around the upper equilibrium, with a scheduled
//! friction increase driving the time variation.

use crate::{LqrError, Result};
use nalgebra::{DMatrix, DVector};

/// Physical constants of the pole and the velocity-controlled cart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleParams {
    /// Pole mass [kg].
    pub m_p: f64,
    /// Pole length [m].
    pub l: f64,
    /// Pole moment of inertia [kg m^2].
    pub j_d: f64,
    /// Cart velocity-loop time constant [s].
    pub t1: f64,
    /// Cart velocity-loop gain.
    pub k_u: f64,
    /// Gravity [m/s^2].
    pub g: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self { m_p: 0.0804, l: 0.147, j_d: 0.5813e-3, t1: 1.0, k_u: 1.0, g: 9.81 }
    }
}

impl CartPoleParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m_p, self.l, self.j_d, self.t1, self.k_u, self.g];
        if all.iter().any(|&v| v <= 0.0) {
            return Err(LqrError::Config("physical constants must be positive".into()));
        }
        Ok(())
    }
}

/// Friction schedule: constant until `t1`, raised-cosine increase to triple
/// the initial value until `t2`, then a slow sinusoidal wobble around 3x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionSchedule {
    pub t1: u32,
    pub t2: u32,
    /// Initial bearing friction [N m s].
    pub tau_p0: f64,
}

impl Default for FrictionSchedule {
    fn default() -> Self {
        Self { t1: 50, t2: 100, tau_p0: 2.2e-3 }
    }
}

impl FrictionSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.t1 == 0 || self.t2 <= self.t1 {
            return Err(LqrError::Config("need 0 < t1 < t2".into()));
        }
        if self.tau_p0 <= 0.0 {
            return Err(LqrError::Config("tau_p0 must be positive".into()));
        }
        Ok(())
    }
}

/// Pole friction at TVBO time step `t`. The two change branches do not agree
/// at `t2` (the formula jumps from 4 tau0 to approximately 3 tau0); this is
/// intentional and kept verbatim.
pub fn friction(t: u32, s: &FrictionSchedule) -> f64 {
    use std::f64::consts::PI;
    let tf = t as f64;
    if t < s.t1 {
        s.tau_p0
    } else if t <= s.t2 {
        s.tau_p0 + 1.5 * s.tau_p0 * (1.0 - (PI / s.t1 as f64 * (tf - s.t1 as f64)).cos())
    } else {
        3.0 * s.tau_p0 + 0.5 * s.tau_p0 * (-PI * tf / s.t2 as f64).sin()
    }
}

/// Continuous-time system matrices at TVBO step `t`. Only `A[3][3]` depends
/// on time (through the friction). State is `[x, dx, phi, dphi]`; input is
/// the desired cart velocity.
pub fn system_matrices(
    t: u32,
    p: &CartPoleParams,
    s: &FrictionSchedule,
) -> (DMatrix<f64>, DVector<f64>) {
    let tau = friction(t, s);
    let half_ml_jd = 0.5 * p.m_p * p.l / p.j_d;
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 1.0, 0.0, 0.0, //
            0.0, -1.0 / p.t1, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, half_ml_jd / p.t1, half_ml_jd * p.g, -tau / p.j_d,
        ],
    );
    let b = DVector::from_vec(vec![
        0.0,
        p.k_u / p.t1,
        0.0,
        -half_ml_jd * p.k_u / p.t1,
    ]);
    (a, b)
}
