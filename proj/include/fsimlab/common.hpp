#ifndef FSIMLAB_COMMON_HPP
#define FSIMLAB_COMMON_HPP

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace fsimlab {

using complexd = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector4cd;
using Eigen::VectorXd;
using Matrix3cd = Eigen::Matrix3cd;
using Matrix5cd = Eigen::Matrix<complexd, 5, 5>;
using Matrix9cd = Eigen::Matrix<complexd, 9, 9>;
using Vector5cd = Eigen::Matrix<complexd, 5, 1>;
using Vector9cd = Eigen::Matrix<complexd, 9, 1>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr complexd kI{0.0, 1.0};

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi], resolving the tie at -pi to +pi.
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

/// Signed angular distance a - b wrapped to (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline bool approx_unitary(const MatrixXcd& u, double tol) {
    MatrixXcd d = u.adjoint() * u - MatrixXcd::Identity(u.rows(), u.cols());
    return d.cwiseAbs().maxCoeff() < tol;
}

/// Deterministic per-cell seed derivation for parallel sweeps.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t h = base ^ (0x9e3779b97f4a7c15ull + index);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
}

/// Runs fn(i) for i in [0, n) over a worker pool. Results must be written to
/// preallocated slots so output order is deterministic regardless of schedule.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace fsimlab

#endif
