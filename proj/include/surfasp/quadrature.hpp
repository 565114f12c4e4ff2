#pragma once

#include <array>
#include <vector>

namespace surfasp {

/// Quadrature node on a d-simplex in barycentric coordinates; weights are
/// normalized to sum to one (multiply by the simplex measure).
template <int D>
struct QuadNode {
    std::array<double, D + 1> bary;
    double weight;
};

/// Degree-2 rule on the triangle: the three edge midpoints.
inline const std::vector<QuadNode<2>>& triangle_rule_degree2() {
    static const std::vector<QuadNode<2>> rule = {
        {{0.5, 0.5, 0.0}, 1.0 / 3.0},
        {{0.0, 0.5, 0.5}, 1.0 / 3.0},
        {{0.5, 0.0, 0.5}, 1.0 / 3.0},
    };
    return rule;
}

/// Degree-4 rule on the triangle (two symmetric orbits, 6 points).
inline const std::vector<QuadNode<2>>& triangle_rule_degree4() {
    static const std::vector<QuadNode<2>> rule = [] {
        const double a1 = 0.445948490915965, w1 = 0.223381589678011;
        const double a2 = 0.091576213509771, w2 = 0.109951743655322;
        std::vector<QuadNode<2>> r;
        for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
            const double c = 1.0 - 2.0 * a;
            r.push_back({{c, a, a}, w});
            r.push_back({{a, c, a}, w});
            r.push_back({{a, a, c}, w});
        }
        return r;
    }();
    return rule;
}

/// Degree-2 rule on the tetrahedron (4 symmetric points).
inline const std::vector<QuadNode<3>>& tet_rule_degree2() {
    static const std::vector<QuadNode<3>> rule = [] {
        const double b = 0.13819660112501051;  // (5 - sqrt 5)/20
        const double a = 1.0 - 3.0 * b;
        std::vector<QuadNode<3>> r;
        for (int i = 0; i < 4; ++i) {
            QuadNode<3> n{{b, b, b, b}, 0.25};
            n.bary[i] = a;
            r.push_back(n);
        }
        return r;
    }();
    return rule;
}

/// Degree-5 rule on the tetrahedron (14 points, all weights positive):
/// two 4-point vertex orbits plus one 6-point edge orbit.
inline const std::vector<QuadNode<3>>& tet_rule_degree5() {
    static const std::vector<QuadNode<3>> rule = [] {
        const double a1 = 0.72179424906732814, w1 = 0.073493043116360790;
        const double a2 = 0.067342242210098976, w2 = 0.11268792571801249;
        const double c = 0.045503704125652994, w3 = 0.042546020777084435;
        std::vector<QuadNode<3>> r;
        for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
            const double b = (1.0 - a) / 3.0;
            for (int i = 0; i < 4; ++i) {
                QuadNode<3> n{{b, b, b, b}, w};
                n.bary[i] = a;
                r.push_back(n);
            }
        }
        const double d = 0.5 - c;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                QuadNode<3> n{{d, d, d, d}, w3};
                n.bary[i] = c;
                n.bary[j] = c;
                r.push_back(n);
            }
        return r;
    }();
    return rule;
}

/// Rule of at least the requested degree (2 or 4) on the d-simplex.
template <int D>
const std::vector<QuadNode<D>>& simplex_rule(int min_degree) {
    if constexpr (D == 2)
        return min_degree <= 2 ? triangle_rule_degree2() : triangle_rule_degree4();
    else
        return min_degree <= 2 ? tet_rule_degree2() : tet_rule_degree5();
}

}  // namespace surfasp
