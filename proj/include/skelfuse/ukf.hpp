#pragma once

#include "skelfuse/core_model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <array>
#include <cmath>
#include <string>

namespace skelfuse {

inline constexpr int kStateDim = 6;
inline constexpr int kMeasDim = 3;
inline constexpr int kSigmaCount = 2 * kStateDim + 1;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateCovariance = Eigen::Matrix<double, kStateDim, kStateDim>;
using MeasCovariance = Eigen::Matrix<double, kMeasDim, kMeasDim>;

/// Noise model and unscented-transform parameters. The process noise is
/// continuous white acceleration with intensity process_accel_sigma^2.
struct NoiseConfig {
    double process_accel_sigma = 2.0;  // m/s^2
    double meas_sigma = 0.05;          // m
    double init_velocity_sigma = 1.0;  // m/s
    double alpha = 1e-1;
    double beta = 2.0;
    double kappa = 0.0;

    void validate() const {
        if (!(process_accel_sigma > 0.0) || !(meas_sigma > 0.0) || !(init_velocity_sigma > 0.0))
            throw ConfigError("noise sigmas must be positive");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ukf alpha must lie in (0, 1]");
        if (!(alpha * alpha * (kStateDim + kappa) > 0.0))
            throw ConfigError("ukf parameters give a non-positive sigma-point spread");
        if (!std::isfinite(beta) || !std::isfinite(kappa))
            throw ConfigError("ukf beta/kappa must be finite");
    }
};

/// Constant-velocity state of one tracked point: position then velocity.
struct FilterState {
    StateVector mean = StateVector::Zero();
    StateCovariance cov = StateCovariance::Identity();
    double last_update = 0.0;

    Vec3 position() const { return mean.head<3>(); }
    Vec3 velocity() const { return mean.tail<3>(); }
    Eigen::Matrix3d position_cov() const { return cov.topLeftCorner<3, 3>(); }
};

namespace detail {

struct UnscentedWeights {
    double lambda;
    std::array<double, kSigmaCount> mean;
    std::array<double, kSigmaCount> cov;
};

inline UnscentedWeights unscented_weights(const NoiseConfig& cfg) {
    constexpr double n = kStateDim;
    UnscentedWeights w{};
    w.lambda = cfg.alpha * cfg.alpha * (n + cfg.kappa) - n;
    const double spread = n + w.lambda;
    w.mean[0] = w.lambda / spread;
    w.cov[0] = w.mean[0] + (1.0 - cfg.alpha * cfg.alpha + cfg.beta);
    for (int i = 1; i < kSigmaCount; ++i) {
        w.mean[i] = 1.0 / (2.0 * spread);
        w.cov[i] = w.mean[i];
    }
    return w;
}

using SigmaPoints = Eigen::Matrix<double, kStateDim, kSigmaCount>;

inline SigmaPoints sigma_points(const StateVector& mean, const StateCovariance& cov,
                                const UnscentedWeights& w) {
    const StateCovariance scaled = (kStateDim + w.lambda) * cov;
    Eigen::LLT<StateCovariance> llt(scaled);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ukf: covariance is not positive definite");
    const StateCovariance root = llt.matrixL();
    SigmaPoints pts;
    pts.col(0) = mean;
    for (int i = 0; i < kStateDim; ++i) {
        pts.col(1 + i) = mean + root.col(i);
        pts.col(1 + kStateDim + i) = mean - root.col(i);
    }
    return pts;
}

template <typename Matrix>
Matrix symmetrized(const Matrix& m) {
    return 0.5 * (m + m.transpose());
}

inline void require_positive_definite(const StateCovariance& cov, const char* where) {
    Eigen::LLT<StateCovariance> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(where) + ": covariance lost positive definiteness");
}

inline StateVector constant_velocity(const StateVector& x, double dt) {
    StateVector out = x;
    out.head<3>() += dt * x.tail<3>();
    return out;
}

struct PredictedMeasurement {
    Vec3 mean;
    MeasCovariance innovation_cov;  // includes measurement noise
    Eigen::Matrix<double, kStateDim, kMeasDim> cross_cov;
};

/// Unscented transform of the position measurement h(x) = x[0:3].
inline PredictedMeasurement predict_measurement(const FilterState& s, const NoiseConfig& cfg) {
    const UnscentedWeights w = unscented_weights(cfg);
    const SigmaPoints pts = sigma_points(s.mean, s.cov, w);
    Eigen::Matrix<double, kMeasDim, kSigmaCount> zs = pts.topRows<kMeasDim>();

    PredictedMeasurement pm;
    pm.mean.setZero();
    for (int i = 0; i < kSigmaCount; ++i) pm.mean += w.mean[i] * zs.col(i);

    pm.innovation_cov = cfg.meas_sigma * cfg.meas_sigma * MeasCovariance::Identity();
    pm.cross_cov.setZero();
    for (int i = 0; i < kSigmaCount; ++i) {
        const Vec3 dz = zs.col(i) - pm.mean;
        const StateVector dx = pts.col(i) - s.mean;
        pm.innovation_cov += w.cov[i] * dz * dz.transpose();
        pm.cross_cov += w.cov[i] * dx * dz.transpose();
    }
    pm.innovation_cov = symmetrized(pm.innovation_cov);
    return pm;
}

}  // namespace detail

/// Process noise over an interval dt for the constant-velocity model driven
/// by continuous white acceleration. Composes additively:
/// F(b) Q(a) F(b)^T + Q(b) == Q(a + b).
inline StateCovariance process_noise(double dt, double accel_sigma) {
    const double q = accel_sigma * accel_sigma;
    StateCovariance out = StateCovariance::Zero();
    const double dt2 = dt * dt;
    const double dt3 = dt2 * dt;
    for (int a = 0; a < 3; ++a) {
        out(a, a) = q * dt3 / 3.0;
        out(a, a + 3) = q * dt2 / 2.0;
        out(a + 3, a) = q * dt2 / 2.0;
        out(a + 3, a + 3) = q * dt;
    }
    return out;
}

inline FilterState init_filter(const Vec3& z0, double t0, const NoiseConfig& cfg) {
    if (!z0.allFinite() || !std::isfinite(t0))
        throw NumericalError("init_filter: non-finite measurement or time");
    FilterState s;
    s.mean << z0, Vec3::Zero();
    s.cov.setZero();
    s.cov.topLeftCorner<3, 3>() = cfg.meas_sigma * cfg.meas_sigma * Eigen::Matrix3d::Identity();
    s.cov.bottomRightCorner<3, 3>() =
        cfg.init_velocity_sigma * cfg.init_velocity_sigma * Eigen::Matrix3d::Identity();
    s.last_update = t0;
    return s;
}

inline FilterState predict(const FilterState& s, double t, const NoiseConfig& cfg) {
    if (!std::isfinite(t)) throw TimeRegressionError("predict: non-finite time");
    if (t < s.last_update)
        throw TimeRegressionError("predict: time " + std::to_string(t) + " precedes last update " +
                                  std::to_string(s.last_update));
    const double dt = t - s.last_update;
    if (dt == 0.0) return s;

    const detail::UnscentedWeights w = detail::unscented_weights(cfg);
    const detail::SigmaPoints pts = detail::sigma_points(s.mean, s.cov, w);
    detail::SigmaPoints moved;
    for (int i = 0; i < kSigmaCount; ++i) moved.col(i) = detail::constant_velocity(pts.col(i), dt);

    FilterState out;
    out.mean.setZero();
    for (int i = 0; i < kSigmaCount; ++i) out.mean += w.mean[i] * moved.col(i);
    out.cov = process_noise(dt, cfg.process_accel_sigma);
    for (int i = 0; i < kSigmaCount; ++i) {
        const StateVector d = moved.col(i) - out.mean;
        out.cov += w.cov[i] * d * d.transpose();
    }
    out.cov = detail::symmetrized(out.cov);
    detail::require_positive_definite(out.cov, "predict");
    out.last_update = t;
    return out;
}

/// Measurement update with a position observation. The state must already
/// be predicted to the measurement time.
inline FilterState update(const FilterState& s, const Vec3& z, const NoiseConfig& cfg) {
    if (!z.allFinite()) throw NumericalError("update: non-finite measurement");
    const detail::PredictedMeasurement pm = detail::predict_measurement(s, cfg);
    Eigen::LLT<MeasCovariance> llt(pm.innovation_cov);
    if (llt.info() != Eigen::Success) throw NumericalError("update: singular innovation covariance");

    // K = Pxz S^-1, computed as (S^-1 Pxz^T)^T since S is symmetric.
    const Eigen::Matrix<double, kStateDim, kMeasDim> gain =
        llt.solve(pm.cross_cov.transpose()).transpose();

    FilterState out = s;
    out.mean = s.mean + gain * (z - pm.mean);
    out.cov = detail::symmetrized(
        StateCovariance(s.cov - gain * pm.innovation_cov * gain.transpose()));
    detail::require_positive_definite(out.cov, "update");
    return out;
}

/// Squared Mahalanobis distance of a candidate position from the filter's
/// predicted measurement at time t. Does not modify the filter.
inline double innovation_cost(const FilterState& s, const Vec3& z_candidate, double t,
                              const NoiseConfig& cfg) {
    if (!z_candidate.allFinite()) throw NumericalError("innovation_cost: non-finite candidate");
    const FilterState predicted = predict(s, t, cfg);
    const detail::PredictedMeasurement pm = detail::predict_measurement(predicted, cfg);
    Eigen::LLT<MeasCovariance> llt(pm.innovation_cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError("innovation_cost: singular innovation covariance");
    const Vec3 innovation = z_candidate - pm.mean;
    return innovation.dot(llt.solve(innovation));
}

}  // namespace skelfuse
