#pragma once

#include "eki/ensemble.hpp"

#include <vector>

namespace eki {

// Least-squares misfits Phi_j = 0.5 * |Gamma^{-1/2}(y - G(u_j))|^2 with their
// mean and unbiased variance.
struct MisfitStats {
    Vector phis;
    double mean = 0.0;
    double variance = 0.0;
};

MisfitStats compute_misfits(const EvaluationBatch& ev, const Observation& obs);

// Weighted norm |Gamma^{-1/2}(y - g)|.
double weighted_misfit_norm(const Vector& g, const Observation& obs);

struct TemperingState {
    double t = 0.0;
    std::vector<double> alpha_inv_history;
    bool finished = false;
};

struct DmcStep {
    double alpha_inv = 0.0;
    bool is_final = false;
};

// Data misfit controller. Advances `state` in place.
DmcStep dmc_step(const MisfitStats& stats, std::size_t M, TemperingState& state);

struct LMConfig {
    double rho = 0.8;
    double tau = 0.0;  // <= 0 selects 1/rho + 1e-6
    double alpha0 = 1.0;
    double growth = 2.0;
    int max_doublings = 60;
    bool sum_stop = false;  // stop once the inverse alphas sum to one

    LMConfig() = default;
    LMConfig(double rho_, double tau_ = 0.0, double alpha0_ = 1.0, double growth_ = 2.0,
             int max_doublings_ = 60, bool sum_stop_ = false);
    void validate() const;
};

// First alpha0 * growth^i with rho*|Gamma^{-1/2} r| <= alpha*|Gamma^{1/2}(Cgg + alpha Gamma)^{-1} r|,
// r = y - mean(G). Throws NumericalError once max_doublings is exhausted.
double lm_alpha(const Vector& ev_mean, const Observation& obs, const Matrix& cgg,
                const LMConfig& cfg);

bool lm_stop(double dm1, const LMConfig& cfg, double delta);

double esmda_alpha(int n_total);

} // namespace eki
