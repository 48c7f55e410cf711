#pragma once

// Closed-form and quadrature calculators for tempered measures
// mu_t ∝ exp(-t Phi) mu_0, used to validate the misfit controller.

#include "eki/ensemble.hpp"

#include <string>
#include <vector>

namespace eki {

struct GaussianMeasure {
    Vector mean;
    Matrix cov;

    void validate() const;
};

// Linear forward model G (M x d) with a Gaussian prior.
struct TemperedFamily {
    GaussianMeasure prior;
    Matrix G;
    Observation obs;

    void validate() const;
    std::size_t data_dim() const { return static_cast<std::size_t>(obs.size()); }
};

GaussianMeasure tempered_gaussian(const TemperedFamily& fam, double t);

// Kalman form of one tempered step with weight 1/alpha starting from `from`.
GaussianMeasure kalman_step(const GaussianMeasure& from, const Matrix& G, const Observation& obs,
                            double alpha);

double kl_divergence(const GaussianMeasure& a, const GaussianMeasure& b);
double jeffreys_divergence(const GaussianMeasure& a, const GaussianMeasure& b);

struct PhiMoments {
    double mean = 0.0;      // <Phi>_t
    double variance = 0.0;  // <Phi,Phi>_t
};

PhiMoments phi_moments(const GaussianMeasure& mu, const TemperedFamily& fam);
PhiMoments phi_moments(const TemperedFamily& fam, double t);
double log_normaliser(const TemperedFamily& fam, double t);

// Scalar toy with G(u) = u^power, prior N(m0, s0^2), one datum y with variance gamma.
struct NonlinearToy {
    double m0 = 0.5;
    double s0 = 1.0;
    double y = 1.0;
    double gamma = 0.25;
    int power = 3;

    double phi(double u) const;
};

struct ToyMoments {
    double log_normaliser = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

// Adaptive Gauss-Kronrod over m0 +- 10 s0.
ToyMoments toy_moments(const NonlinearToy& toy, double t, double tol = 1e-10);
// Jeffreys divergence from the two tempered densities directly.
double toy_jeffreys(const NonlinearToy& toy, double ta, double tb, double tol = 1e-10);

struct CheckReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
    bool pass = false;
};

CheckReport make_check(std::string name, double lhs, double rhs, double rel_tol,
                       double abs_tol = 0.0);

// Jeffreys divergence between consecutive tempered measures against
// alpha^{-1}(<Phi>_{t_n} - <Phi>_{t_{n+1}}).
CheckReport verify_divergence_identity(const TemperedFamily& fam, double tn, double tn1,
                                       double rel_tol = 1e-8);
CheckReport verify_divergence_identity(const NonlinearToy& toy, double tn, double tn1,
                                       double rel_tol = 1e-6);

// Fourth-order central difference of <Phi>_t against -<Phi,Phi>_t.
CheckReport verify_corollary_derivative(const TemperedFamily& fam, double t, double dt,
                                        double tol = 1e-6);
CheckReport verify_corollary_derivative(const NonlinearToy& toy, double t, double dt,
                                        double tol = 1e-5);
// The same for log N_t against -<Phi>_t.
CheckReport verify_normaliser_derivative(const TemperedFamily& fam, double t, double dt,
                                         double tol = 1e-6);
CheckReport verify_normaliser_derivative(const NonlinearToy& toy, double t, double dt,
                                         double tol = 1e-5);

struct DmcBoundStep {
    double t = 0.0;
    double alpha_inv = 0.0;
    double exact = 0.0;        // Jeffreys divergence between mu_t and mu_{t+alpha_inv}
    double approx = 0.0;       // min{alpha^-1 <Phi>, alpha^-2 <Phi,Phi>}
    bool mean_branch = false;  // the min above picked the mean term
    double slack = 0.0;        // exact / theta - 1
};

struct DmcBoundReport {
    double theta = 0.0;
    double max_slack = 0.0;
    std::vector<DmcBoundStep> steps;
};

// Schedule from the controller fed with exact tempered moments.
std::vector<double> exact_dmc_schedule(const TemperedFamily& fam);
// Per-step divergences for any increasing t-sequence starting at 0.
DmcBoundReport verify_dmc_bound(const TemperedFamily& fam, const std::vector<double>& ts);

} // namespace eki
