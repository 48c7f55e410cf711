#pragma once

// Whittle-Matern random fields on the square [-1,1]^2.
//
// Psi solves (I - div diag(L1^2, L2^2) grad)^{(nu+1)/2} Psi = c * omega / sqrt(h1 h2)
// with Robin data Psi + zeta * L^2 dPsi/dn = 0 on each face. Cell-centred
// finite differences make the operator a Kronecker sum of two 1D tridiagonal
// matrices, which the spectral solver exploits. The sparse solver factorises
// the assembled 2D matrix instead and applies half powers by Lanczos; it is
// slower and kept as an independent reference.

#include "eki/ensemble.hpp"
#include "eki/grid_field.hpp"

#include <Eigen/SparseCore>

#include <functional>

namespace eki {

struct WMHyper {
    double lambda = 1.0;
    double nu = 3.0;
    double sigma = 1.5;
    double l1 = 0.3;
    double l2 = 0.3;
    double zeta_r = 1.0;

    void validate() const;
    // Integer k with (nu+1)/2 = k/2.
    int exponent_k() const;
};

// "printed" uses c = 4 pi sigma^2 Gamma(nu+1)/Gamma(nu) sqrt(L1 L2), whose
// pointwise variance is 4 pi nu sigma^4; "sqrt" uses the square root of that
// expression, which gives marginal variance sigma^2 in the continuum.
enum class WMConstant { printed, sqrt };
enum class WMSolver { spectral, sparse };

WMConstant parse_wm_constant(const std::string& s);
WMSolver parse_wm_solver(const std::string& s);

struct WMOptions {
    WMConstant constant = WMConstant::sqrt;
    WMSolver solver = WMSolver::spectral;
    double lanczos_tol = 1e-8;
    int lanczos_max_iter = 5000;
};

double wm_constant(const WMHyper& h, WMConstant convention);

// 1D operator -d/dx (L^2 d/dx) with Robin ends on n cells of width h.
struct Tridiag {
    Vector diag;
    Vector off;  // length n-1
};
Tridiag wm_tridiag_1d(double l, double h, std::size_t n, double zeta);

Eigen::SparseMatrix<double> assemble_wm_operator(const WMHyper& h, const GridField& geom);

// Arrays of the same operator for the five-point SIMD kernel.
struct WMStencil {
    std::size_t n1 = 0, n2 = 0;
    std::vector<double> diag, east, north;
};
WMStencil wm_stencil(const WMHyper& h, const GridField& geom);

// Psi = W omega for fixed hyperparameters and geometry. Immutable after
// construction, so one instance may be shared across threads.
class WMTransform {
public:
    WMTransform(const WMHyper& h, const GridField& geom, const WMOptions& opt = {});
    ~WMTransform();
    WMTransform(WMTransform&&) noexcept;
    WMTransform& operator=(WMTransform&&) noexcept;

    GridField apply(const GridField& omega) const;
    void apply(const double* omega, double* psi) const;
    // Exact pointwise variance of Psi under unit white noise (spectral only).
    GridField variance() const;

    const WMHyper& hyper() const { return hyper_; }
    double scale() const { return scale_; }

private:
    struct Impl;
    WMHyper hyper_;
    GridField geom_;
    WMOptions opt_;
    double scale_ = 0.0;
    std::unique_ptr<Impl> impl_;
};

GridField wm_transform(const GridField& omega, const WMHyper& h, const WMOptions& opt = {});

// x <- f(A) b by Lanczos for a symmetric positive definite operator given
// through its action; here f(s) = s^{-1/2}. Throws NumericalError when the
// iteration cap is hit before the relative change drops below tol.
struct LanczosReport {
    int iterations = 0;
    double last_change = 0.0;
};
LanczosReport lanczos_inverse_sqrt(const std::function<void(const double*, double*)>& apply,
                                   std::size_t n, const double* b, double* x, double tol,
                                   int max_iter);

// P1: u = (lambda, L1, L2, omega), kappa = lambda * exp(W omega).
struct P1Fixed {
    double nu = 3.0;
    double sigma = 1.5;
    double zeta_r = 16.0;  // boundary-to-centre variance near one for L in [0.15, 0.6]
};

struct P1Bounds {
    double lambda_lo = 0.005, lambda_hi = 1.0;
    double l_lo = 0.15, l_hi = 0.6;
};

inline constexpr std::size_t kP1Scalars = 3;

WMHyper p1_hyper(const Vector& u, const P1Fixed& fx);
GridField p1_log_field(const Vector& u, const P1Fixed& fx, const GridField& geom,
                       const WMOptions& opt = {});
GridField p1(const Vector& u, const P1Fixed& fx, const GridField& geom, const WMOptions& opt = {});
void p1_clamp(Eigen::Ref<Vector> u, const P1Bounds& b);

// Uniform hyperparameters and standard normal cell noise, particle by particle.
Ensemble sample_p1_prior(std::size_t J, Rng& rng, const P1Bounds& b, std::size_t grid_cells);

// Matern correlation sigma^2 2^{1-nu}/Gamma(nu) r^nu K_nu(r), r = |diag(1/L) x|.
double matern_acf(double x1, double x2, const WMHyper& h);

// Boundary-to-centre variance ratio: mean variance over the outermost ring of
// cells divided by the variance at the centre cell.
double boundary_variance_ratio(const WMHyper& h, const GridField& geom);

// Robin parameter whose boundary ratio is closest to one (log-scale search).
double calibrate_zeta(WMHyper h, const GridField& geom);

} // namespace eki
