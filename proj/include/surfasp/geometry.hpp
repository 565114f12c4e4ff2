#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "surfasp/vec.hpp"

namespace surfasp {

/// Signed distance to the unit sphere S^2 in R^3, d(x) = |x| - 1.
inline double sdf_sphere_s2(const Vec<3>& x) {
    const double n = x.norm();
    if (n == 0.0) throw std::domain_error("sdf_sphere_s2: undefined at the origin");
    return n - 1.0;
}

/// Signed distance to the torus of major radius R and minor radius r,
/// d(x) = sqrt((sqrt(x1^2 + x2^2) - R)^2 + x3^2) - r. Undefined on the x3-axis.
inline double sdf_torus(const Vec<3>& x, double major_radius, double minor_radius) {
    const double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
    if (rho == 0.0) throw std::domain_error("sdf_torus: undefined on the torus axis");
    const double a = rho - major_radius;
    return std::sqrt(a * a + x[2] * x[2]) - minor_radius;
}

/// Signed distance to the unit sphere S^3 in R^4.
inline double sdf_sphere_s3(const Vec<4>& x) {
    const double n = x.norm();
    if (n == 0.0) throw std::domain_error("sdf_sphere_s3: undefined at the origin");
    return n - 1.0;
}

/// A closed hypersurface of dimension D embedded in R^{D+1}, described by a
/// signed distance function with an analytic gradient. The unit normal field
/// is gradient/|gradient|; no finite-difference fallback is provided.
template <int D>
class ImplicitSurface {
public:
    using Point = Vec<D + 1>;

    virtual ~ImplicitSurface() = default;

    virtual double signed_distance(const Point& x) const = 0;
    virtual Point gradient(const Point& x) const = 0;

    /// How far inside (towards the medial set) the closest-point projection
    /// accepts inputs. Points with signed_distance < -inner_reach() are
    /// rejected rather than extrapolated.
    virtual double inner_reach() const = 0;

    virtual double diameter() const = 0;
    virtual std::string name() const = 0;
};

/// Unit sphere S^D in R^{D+1}.
template <int D>
class UnitSphere final : public ImplicitSurface<D> {
public:
    using Point = typename ImplicitSurface<D>::Point;

    double signed_distance(const Point& x) const override {
        const double n = x.norm();
        if (n == 0.0) throw std::domain_error(name() + ": signed distance undefined at the origin");
        return n - 1.0;
    }

    Point gradient(const Point& x) const override {
        const double n = x.norm();
        if (n == 0.0) throw std::domain_error(name() + ": normal undefined at the origin");
        return x * (1.0 / n);
    }

    double inner_reach() const override { return 0.5; }
    double diameter() const override { return 2.0; }
    std::string name() const override { return D == 2 ? "sphere-s2" : (D == 3 ? "sphere-s3" : "sphere"); }
};

/// Torus of revolution about the x3-axis.
class Torus final : public ImplicitSurface<2> {
public:
    explicit Torus(double major_radius = 2.0, double minor_radius = 0.5)
        : major_(major_radius), minor_(minor_radius) {
        if (major_ <= minor_ || minor_ <= 0.0)
            throw std::invalid_argument("Torus: requires R > r > 0");
    }

    double signed_distance(const Point& x) const override { return sdf_torus(x, major_, minor_); }

    Point gradient(const Point& x) const override {
        const double rho = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        if (rho == 0.0) throw std::domain_error("torus: normal undefined on the axis");
        const double a = rho - major_;
        const double q = std::sqrt(a * a + x[2] * x[2]);
        if (q == 0.0) throw std::domain_error("torus: normal undefined on the tube center circle");
        // |grad| = 1 analytically away from the axis and the center circle.
        return Point{{a / q * x[0] / rho, a / q * x[1] / rho, x[2] / q}};
    }

    double inner_reach() const override { return 0.5 * minor_; }
    double diameter() const override { return 2.0 * (major_ + minor_); }
    std::string name() const override { return "torus"; }

    double major_radius() const { return major_; }
    double minor_radius() const { return minor_; }

private:
    double major_;
    double minor_;
};

/// Closest-point projection p = x - d(x) nu(x). Exact for the built-in
/// surfaces since their signed distance functions are exact. Inputs deeper
/// inside than inner_reach() (close to the medial set, where the projection
/// degenerates) are an error.
template <int D>
Vec<D + 1> closest_point(const ImplicitSurface<D>& surface, const Vec<D + 1>& x) {
    const double d = surface.signed_distance(x);
    if (-d > surface.inner_reach())
        throw std::domain_error(surface.name() + ": point outside the tubular neighborhood (d = " +
                                std::to_string(d) + ")");
    Vec<D + 1> g = surface.gradient(x);
    const double gn = g.norm();
    return x - (d / gn) * g;
}

}  // namespace surfasp
