#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

namespace superocc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr int kMaxDim = 3;

// Error taxonomy. Every failure surfaced by the library is one of these.

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure did not reach its requested accuracy.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// A configured resource limit (population cap, memory) was exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation requires a property the test function does not have.
class UnsupportedFunctionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too little (or degenerate) data for a statistical estimate.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discretization too coarse for the requested resolution.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Spatial dimension. Only d in {1,2,3} is representable: for d >= 4 the
/// occupation measure is singular and has no density to estimate.
class Dim {
public:
    constexpr explicit Dim(int d) : d_(d) {
        if (d >= 4) {
            throw DomainError("dimension " + std::to_string(d) +
                              " rejected: the occupation measure is singular with respect to "
                              "Lebesgue measure for d >= 4, so no density exists");
        }
        if (d < 1) throw DomainError("dimension must be 1, 2 or 3");
    }
    constexpr int value() const noexcept { return d_; }
    constexpr operator int() const noexcept { return d_; }
    friend constexpr bool operator==(Dim, Dim) = default;

private:
    int d_;
};

/// A point of R^d with d <= 3, stored inline.
class Point {
public:
    Point() : d_(1) {}
    Point(std::initializer_list<double> coords) : d_(static_cast<int>(coords.size())) {
        Dim{d_};
        std::size_t i = 0;
        for (double v : coords) c_[i++] = v;
    }
    explicit Point(std::span<const double> coords) : d_(static_cast<int>(coords.size())) {
        Dim{d_};
        for (std::size_t i = 0; i < coords.size(); ++i) c_[i] = coords[i];
    }
    static Point origin(Dim d) {
        Point p;
        p.d_ = d.value();
        return p;
    }

    int dim() const noexcept { return d_; }
    double& operator[](std::size_t i) noexcept { return c_[i]; }
    double operator[](std::size_t i) const noexcept { return c_[i]; }
    std::span<const double> coords() const noexcept { return {c_.data(), static_cast<std::size_t>(d_)}; }
    operator std::span<const double>() const noexcept { return coords(); }
    double norm() const noexcept {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += c_[i] * c_[i];
        return std::sqrt(s);
    }

    friend bool operator==(const Point& a, const Point& b) noexcept {
        if (a.d_ != b.d_) return false;
        for (int i = 0; i < a.d_; ++i)
            if (a.c_[i] != b.c_[i]) return false;
        return true;
    }

private:
    std::array<double, kMaxDim> c_{};
    int d_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

inline void require_same_dim(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) throw DomainError(std::string(what) + ": dimension mismatch");
}

}  // namespace superocc
