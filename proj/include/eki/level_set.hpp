#pragma once

// Three-phase conductivity from a thresholded Whittle-Matern level-set
// function. Particle layout: (kappa_l, kappa_b, kappa_h, L1f, L2f, omega_f).

#include "eki/gaussian_fields.hpp"

namespace eki {

struct P2Fixed {
    double lambda_f = 1.0;
    double nu_f = 2.0;
    double sigma_f = 0.5;
    double zeta_r = 11.5;
    double zeta1 = -0.5;
    double zeta2 = 0.5;

    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

struct P2Bounds {
    Interval kappa_l{0.015, 0.075};
    Interval kappa_b{0.1, 0.4};
    Interval kappa_h{0.65, 1.1};
    Interval l{0.15, 0.6};
};

inline constexpr std::size_t kP2Scalars = 5;

WMHyper p2_hyper(const Vector& u, const P2Fixed& fx);

// f = log(lambda_f) + W omega_f
GridField level_set_function(const Vector& u, const P2Fixed& fx, const GridField& geom,
                             const WMOptions& opt = {});

// kappa_l where f <= zeta1, kappa_b where zeta1 < f <= zeta2, kappa_h above.
GridField threshold_phases(const GridField& f, double kappa_l, double kappa_b, double kappa_h,
                           double zeta1, double zeta2);

GridField p2(const Vector& u, const P2Fixed& fx, const GridField& geom, const WMOptions& opt = {});
void p2_clamp(Eigen::Ref<Vector> u, const P2Bounds& b);
Ensemble sample_p2_prior(std::size_t J, Rng& rng, const P2Bounds& b, std::size_t grid_cells);

} // namespace eki
