#include "eki/schedules.hpp"

#include "eki/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eki {

MisfitStats compute_misfits(const EvaluationBatch& ev, const Observation& obs) {
    require(ev.values.cols() == obs.size(), "evaluation batch width differs from data length");
    const Eigen::Index J = ev.values.rows();
    const Vector w = obs.inv_gamma();
    // Row-major copy so each particle's prediction is contiguous.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> G = ev.values;
    MisfitStats s;
    s.phis.resize(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        const std::span<const double> g(G.row(j).data(), static_cast<std::size_t>(obs.size()));
        s.phis[j] = 0.5 * simd::weighted_residual_sq({obs.y.data(), g.size()}, g,
                                                     {w.data(), g.size()});
    }
    s.mean = s.phis.mean();
    s.variance = J > 1 ? (s.phis.array() - s.mean).square().sum() / static_cast<double>(J - 1) : 0.0;
    return s;
}

double weighted_misfit_norm(const Vector& g, const Observation& obs) {
    require(g.size() == obs.size(), "prediction length differs from data length");
    const Vector w = obs.inv_gamma();
    const std::size_t n = static_cast<std::size_t>(g.size());
    return std::sqrt(simd::weighted_residual_sq({obs.y.data(), n}, {g.data(), n}, {w.data(), n}));
}

DmcStep dmc_step(const MisfitStats& stats, std::size_t M, TemperingState& state) {
    require(!state.finished, "tempering schedule already finished");
    require(M >= 1, "data dimension must be positive");
    require(stats.mean >= 0.0 && stats.variance >= 0.0, "misfit statistics must be nonnegative");
    const double m = static_cast<double>(M);
    const double remaining = 1.0 - state.t;

    double candidate = std::numeric_limits<double>::infinity();
    if (stats.mean > 0.0 || stats.variance > 0.0) {
        const double mean_term =
            stats.mean > 0.0 ? m / (2.0 * stats.mean) : std::numeric_limits<double>::infinity();
        const double var_term = stats.variance > 0.0 ? std::sqrt(m / (2.0 * stats.variance))
                                                     : std::numeric_limits<double>::infinity();
        candidate = std::max(mean_term, var_term);
    }

    DmcStep step;
    if (candidate >= remaining) {
        step.alpha_inv = remaining;
        step.is_final = true;
    } else {
        step.alpha_inv = candidate;
    }
    state.alpha_inv_history.push_back(step.alpha_inv);
    state.t += step.alpha_inv;  // t + (1 - t) rounds to exactly 1 for t in [0, 1]
    if (step.is_final) {
        if (state.t != 1.0) throw NumericalError("tempering clock failed to close at t = 1");
        state.finished = true;
    }
    return step;
}

LMConfig::LMConfig(double rho_, double tau_, double alpha0_, double growth_, int max_doublings_,
                   bool sum_stop_)
    : rho(rho_), tau(tau_ > 0.0 ? tau_ : 1.0 / rho_ + 1e-6), alpha0(alpha0_), growth(growth_),
      max_doublings(max_doublings_), sum_stop(sum_stop_) {
    validate();
}

void LMConfig::validate() const {
    require(rho > 0.0 && rho < 1.0, "LM rho must lie in (0,1)");
    require(tau > 1.0 / rho, "LM tau must exceed 1/rho");
    require(alpha0 > 0.0, "LM alpha0 must be positive");
    require(growth > 1.0, "LM growth must exceed 1");
    require(max_doublings >= 0, "LM max_doublings must be nonnegative");
}

double lm_alpha(const Vector& ev_mean, const Observation& obs, const Matrix& cgg,
                const LMConfig& cfg) {
    cfg.validate();
    require(cgg.rows() == obs.size() && cgg.cols() == obs.size(), "Cgg has wrong shape");
    const Vector r = obs.y - ev_mean;
    const double lhs = cfg.rho * (r.array() / obs.gamma.array().sqrt()).matrix().norm();
    double alpha = cfg.alpha0;
    for (int i = 0; i <= cfg.max_doublings; ++i, alpha *= cfg.growth) {
        Matrix K = cgg;
        K.diagonal() += alpha * obs.gamma;
        Eigen::LLT<Matrix> llt(K);
        if (llt.info() != Eigen::Success) continue;
        const Vector x = llt.solve(r);
        const double rhs = alpha * (x.array() * obs.gamma.array().sqrt()).matrix().norm();
        if (lhs <= rhs) return alpha;
    }
    throw NumericalError("LM alpha search exhausted " + std::to_string(cfg.max_doublings) +
                         " growth steps without satisfying the rho condition");
}

bool lm_stop(double dm1, const LMConfig& cfg, double delta) {
    require(delta > 0.0, "noise level must be positive");
    return dm1 <= cfg.tau * delta;
}

double esmda_alpha(int n_total) {
    require(n_total >= 1, "ES-MDA needs at least one step");
    return static_cast<double>(n_total);
}

} // namespace eki
