#pragma once

#include <array>
#include <cmath>

namespace surfasp {

/// Fixed-size point/vector in R^N. N is the ambient dimension (3 or 4 here).
template <int N>
struct Vec {
    std::array<double, N> c{};

    double& operator[](int i) { return c[i]; }
    const double& operator[](int i) const { return c[i]; }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < N; ++i) c[i] += o.c[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < N; ++i) c[i] -= o.c[i];
        return *this;
    }
    Vec& operator*=(double s) {
        for (int i = 0; i < N; ++i) c[i] *= s;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double s, Vec a) { return a *= s; }
    friend Vec operator*(Vec a, double s) { return a *= s; }

    friend double dot(const Vec& a, const Vec& b) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += a.c[i] * b.c[i];
        return s;
    }

    double norm() const { return std::sqrt(dot(*this, *this)); }
};

template <int N>
double distance(const Vec<N>& a, const Vec<N>& b) {
    return (a - b).norm();
}

}  // namespace surfasp
