#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ivdtr {

// Row-major so that each sample's history is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Features = std::span<const double>;

using Rng = std::mt19937_64;

enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    explicit Error(const std::string& what) : Error(ErrorKind::validation, what) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(ErrorKind::validation, msg);
}

inline Features row_of(const Matrix& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline double expit(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// Closed interval [lower, upper].
struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(double x, double tol = 0.0) const {
        return x >= lower - tol && x <= upper + tol;
    }
    bool operator==(const Interval&) const = default;
};

/// Sign with the tie rule sign(0) = +1.
inline int sign_of(double x) { return x < 0 ? -1 : 1; }

/// splitmix64 finalizer; used to derive independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace ivdtr
