//! Constant-velocity Kalman filter over box observations.
//!
//! State is the 8-vector (u, v, g, h, du, dv, dg, dh): box center, aspect
//! ratio w/h, height, and their velocities. Process and measurement noise
//! scale with the box height, so one set of weights serves both near and
//! far targets; the weights themselves live in [`KalmanConfig`].

use nalgebra::{SMatrix, SVector};
use thiserror::Error;

use crate::types::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateMatrix = SMatrix<f64, 8, 8>;
pub type Measurement = SVector<f64, 4>;
pub type MeasurementMatrix = SMatrix<f64, 4, 4>;

#[derive(Debug, Error, PartialEq)]
pub enum KalmanError {
    #[error("innovation covariance is not positive definite")]
    SingularInnovation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    /// Position noise as a fraction of box height.
    pub std_weight_position: f64,
    /// Velocity noise as a fraction of box height.
    pub std_weight_velocity: f64,
    /// Process noise on the aspect ratio and its velocity.
    pub gamma_position_std: f64,
    pub gamma_velocity_std: f64,
    /// Measurement noise on the aspect ratio.
    pub gamma_measurement_std: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        KalmanConfig {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            gamma_position_std: 1e-2,
            gamma_velocity_std: 1e-5,
            gamma_measurement_std: 1e-1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

/// Converts a box to the (u, v, g, h) measurement space.
pub fn bbox_to_measurement(b: &BBox) -> Measurement {
    let h = b.h.max(1e-9);
    Measurement::new(b.x + b.w / 2.0, b.y + b.h / 2.0, b.w / h, b.h)
}

/// Inverse of [`bbox_to_measurement`], used to read boxes back out of the
/// filtered state.
pub fn measurement_to_bbox(z: &Measurement) -> BBox {
    let h = z[3];
    let w = z[2] * h;
    BBox {
        x: z[0] - w / 2.0,
        y: z[1] - h / 2.0,
        w,
        h,
    }
}

#[derive(Debug, Clone)]
pub struct KalmanFilter {
    cfg: KalmanConfig,
    motion: StateMatrix,
    observation: SMatrix<f64, 4, 8>,
}

impl KalmanFilter {
    pub fn new(cfg: KalmanConfig) -> Self {
        let mut motion = StateMatrix::identity();
        for i in 0..4 {
            motion[(i, i + 4)] = 1.0;
        }
        let observation = SMatrix::<f64, 4, 8>::from_fn(|r, c| if r == c { 1.0 } else { 0.0 });
        KalmanFilter {
            cfg,
            motion,
            observation,
        }
    }

    /// Starts a track from an unassociated measurement: velocities zero,
    /// uncertainty proportional to the observed height (doubled for
    /// position, ten-fold for the unobserved velocities).
    pub fn initiate(&self, z: &Measurement) -> KalmanState {
        let mut mean = StateVector::zeros();
        for i in 0..4 {
            mean[i] = z[i];
        }
        let h = z[3];
        let wp = self.cfg.std_weight_position;
        let wv = self.cfg.std_weight_velocity;
        let std = [
            2.0 * wp * h,
            2.0 * wp * h,
            self.cfg.gamma_position_std,
            2.0 * wp * h,
            10.0 * wv * h,
            10.0 * wv * h,
            self.cfg.gamma_velocity_std,
            10.0 * wv * h,
        ];
        let covariance = StateMatrix::from_diagonal(&StateVector::from_iterator(
            std.iter().map(|s| s * s),
        ));
        KalmanState { mean, covariance }
    }

    fn process_noise(&self, h: f64) -> StateMatrix {
        let wp = self.cfg.std_weight_position;
        let wv = self.cfg.std_weight_velocity;
        let std = [
            wp * h,
            wp * h,
            self.cfg.gamma_position_std,
            wp * h,
            wv * h,
            wv * h,
            self.cfg.gamma_velocity_std,
            wv * h,
        ];
        StateMatrix::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)))
    }

    fn measurement_noise(&self, h: f64) -> MeasurementMatrix {
        let wp = self.cfg.std_weight_position;
        let std = [wp * h, wp * h, self.cfg.gamma_measurement_std, wp * h];
        MeasurementMatrix::from_diagonal(&SVector::<f64, 4>::from_iterator(
            std.iter().map(|s| s * s),
        ))
    }

    /// One constant-velocity step of `dt` frames.
    pub fn predict(&self, state: &KalmanState, dt: f64) -> KalmanState {
        let mut f = self.motion;
        for i in 0..4 {
            f[(i, i + 4)] = dt;
        }
        let q = self.process_noise(state.mean[3]);
        let mean = f * state.mean;
        let covariance = f * state.covariance * f.transpose() + q;
        KalmanState {
            mean,
            covariance: symmetrize(covariance),
        }
    }

    /// Projects the state into measurement space: (H x, H P H' + R).
    pub fn project(&self, state: &KalmanState) -> (Measurement, MeasurementMatrix) {
        let r = self.measurement_noise(state.mean[3]);
        let z = self.observation * state.mean;
        let s = self.observation * state.covariance * self.observation.transpose() + r;
        (z, s)
    }

    /// Measurement update in Joseph form, which keeps the covariance
    /// symmetric positive semi-definite over long runs.
    pub fn update(&self, state: &KalmanState, z: &Measurement) -> Result<KalmanState, KalmanError> {
        let (projected, s) = self.project(state);
        let chol = s.cholesky().ok_or(KalmanError::SingularInnovation)?;
        // K = P H' S^-1, computed as (S^-1 (H P))' since P is symmetric.
        let hp = self.observation * state.covariance;
        let gain = chol.solve(&hp).transpose();

        let innovation = z - projected;
        let mean = state.mean + gain * innovation;

        let r = self.measurement_noise(state.mean[3]);
        let ikh = StateMatrix::identity() - gain * self.observation;
        let covariance =
            ikh * state.covariance * ikh.transpose() + gain * r * gain.transpose();
        Ok(KalmanState {
            mean,
            covariance: symmetrize(covariance),
        })
    }

    /// Squared Mahalanobis distance of a measurement from the predicted
    /// state, using the innovation covariance (including measurement noise).
    pub fn gating_distance(&self, state: &KalmanState, z: &Measurement) -> Result<f64, KalmanError> {
        let (projected, s) = self.project(state);
        let chol = s.cholesky().ok_or(KalmanError::SingularInnovation)?;
        let y = z - projected;
        Ok(y.dot(&chol.solve(&y)))
    }
}

fn symmetrize(m: StateMatrix) -> StateMatrix {
    (m + m.transpose()) * 0.5
}
