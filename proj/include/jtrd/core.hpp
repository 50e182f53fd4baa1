#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace jtrd {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Error hierarchy. Every failure mode thrown by the library derives from
// Error, so callers can catch coarsely or per condition.
class Error : public std::runtime_error {
   public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class NonFinite : public Error {
   public:
    explicit NonFinite(const std::string& msg) : Error(msg) {}
};
class NonHermitian : public Error {
   public:
    explicit NonHermitian(const std::string& msg) : Error(msg) {}
};
class Singular : public Error {
   public:
    explicit Singular(const std::string& msg) : Error(msg) {}
};
class NotPsd : public Error {
   public:
    explicit NotPsd(const std::string& msg) : Error(msg) {}
};
class DimensionMismatch : public Error {
   public:
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};
class DegenerateCodeword : public Error {
   public:
    explicit DegenerateCodeword(const std::string& msg) : Error(msg) {}
};
class MissingCache : public Error {
   public:
    explicit MissingCache(const std::string& msg) : Error(msg) {}
};
class AlphabetTooLarge : public Error {
   public:
    explicit AlphabetTooLarge(const std::string& msg) : Error(msg) {}
};
class SearchTooLarge : public Error {
   public:
    explicit SearchTooLarge(const std::string& msg) : Error(msg) {}
};
class SingularNoiseCovariance : public Error {
   public:
    explicit SingularNoiseCovariance(const std::string& msg) : Error(msg) {}
};
class SingularPilot : public Error {
   public:
    explicit SingularPilot(const std::string& msg) : Error(msg) {}
};
class NonFiniteLoss : public Error {
   public:
    explicit NonFiniteLoss(const std::string& msg) : Error(msg) {}
};
class VersionMismatch : public Error {
   public:
    explicit VersionMismatch(const std::string& msg) : Error(msg) {}
};
class CorruptFile : public Error {
   public:
    explicit CorruptFile(const std::string& msg) : Error(msg) {}
};
class ConfigError : public Error {
   public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

inline bool all_finite(const RealMatrix& a) { return a.allFinite(); }

inline bool all_finite(const ComplexMatrix& a) {
    return a.real().allFinite() && a.imag().allFinite();
}

template <typename Mat>
void require_finite(const Mat& a, const char* what) {
    if (!all_finite(a)) throw NonFinite(std::string(what) + ": non-finite entry");
}

}  // namespace jtrd
