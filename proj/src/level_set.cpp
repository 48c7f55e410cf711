#include "eki/level_set.hpp"

#include <algorithm>
#include <cmath>

namespace eki {

void P2Fixed::validate() const {
    require(lambda_f > 0.0, "level-set lambda_f must be positive");
    require(sigma_f > 0.0, "level-set sigma_f must be positive");
    require(zeta1 < zeta2, "level-set thresholds must satisfy zeta1 < zeta2");
}

WMHyper p2_hyper(const Vector& u, const P2Fixed& fx) {
    require(u.size() > static_cast<Eigen::Index>(kP2Scalars), "P2 particle too short");
    WMHyper h;
    h.lambda = fx.lambda_f;
    h.nu = fx.nu_f;
    h.sigma = fx.sigma_f;
    h.l1 = u[3];
    h.l2 = u[4];
    h.zeta_r = fx.zeta_r;
    return h;
}

GridField level_set_function(const Vector& u, const P2Fixed& fx, const GridField& geom,
                             const WMOptions& opt) {
    fx.validate();
    require(static_cast<std::size_t>(u.size()) == kP2Scalars + geom.size(),
            "P2 particle length does not match the grid");
    GridField f = geom;
    f.values.resize(static_cast<Eigen::Index>(geom.size()));
    WMTransform(p2_hyper(u, fx), f, opt).apply(u.data() + kP2Scalars, f.values.data());
    f.values.array() += std::log(fx.lambda_f);
    return f;
}

GridField threshold_phases(const GridField& f, double kappa_l, double kappa_b, double kappa_h,
                           double zeta1, double zeta2) {
    require(zeta1 < zeta2, "level-set thresholds must satisfy zeta1 < zeta2");
    GridField k = f;
    for (Eigen::Index i = 0; i < k.values.size(); ++i) {
        const double v = f.values[i];
        k.values[i] = v <= zeta1 ? kappa_l : (v <= zeta2 ? kappa_b : kappa_h);
    }
    return k;
}

GridField p2(const Vector& u, const P2Fixed& fx, const GridField& geom, const WMOptions& opt) {
    const GridField f = level_set_function(u, fx, geom, opt);
    require(u[0] > 0.0 && u[1] > 0.0 && u[2] > 0.0, "phase conductivities must be positive");
    return threshold_phases(f, u[0], u[1], u[2], fx.zeta1, fx.zeta2);
}

void p2_clamp(Eigen::Ref<Vector> u, const P2Bounds& b) {
    u[0] = std::clamp(u[0], b.kappa_l.lo, b.kappa_l.hi);
    u[1] = std::clamp(u[1], b.kappa_b.lo, b.kappa_b.hi);
    u[2] = std::clamp(u[2], b.kappa_h.lo, b.kappa_h.hi);
    u[3] = std::clamp(u[3], b.l.lo, b.l.hi);
    u[4] = std::clamp(u[4], b.l.lo, b.l.hi);
}

Ensemble sample_p2_prior(std::size_t J, Rng& rng, const P2Bounds& b, std::size_t grid_cells) {
    require(J >= 2, "ensemble needs at least two particles");
    for (const Interval* iv : {&b.kappa_l, &b.kappa_b, &b.kappa_h, &b.l})
        require(iv->lo < iv->hi && iv->lo > 0.0, "empty or nonpositive prior interval");
    const auto d = static_cast<Eigen::Index>(kP2Scalars + grid_cells);
    Matrix P(d, static_cast<Eigen::Index>(J));
    std::uniform_real_distribution<double> kl(b.kappa_l.lo, b.kappa_l.hi),
        kb(b.kappa_b.lo, b.kappa_b.hi), kh(b.kappa_h.lo, b.kappa_h.hi), ul(b.l.lo, b.l.hi);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(J); ++j) {
        P(0, j) = kl(rng);
        P(1, j) = kb(rng);
        P(2, j) = kh(rng);
        P(3, j) = ul(rng);
        P(4, j) = ul(rng);
        for (Eigen::Index i = kP2Scalars; i < d; ++i) P(i, j) = normal(rng);
    }
    return Ensemble(std::move(P));
}

} // namespace eki
