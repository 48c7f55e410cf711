#include "eki/gaussian_fields.hpp"

#include "eki/simd/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace eki {

void WMHyper::validate() const {
    require(lambda > 0.0, "WM lambda must be positive");
    require(sigma > 0.0, "WM sigma must be positive");
    require(l1 > 0.0 && l2 > 0.0, "WM lengthscales must be positive");
    require(zeta_r >= 0.0, "Robin parameter must be nonnegative");
    exponent_k();
}

int WMHyper::exponent_k() const {
    const double k = nu + 1.0;
    require(nu > 0.0 && std::abs(k - std::round(k)) < 1e-12,
            "WM smoothness nu must make (nu+1)/2 a multiple of 1/2");
    return static_cast<int>(std::lround(k));
}

WMConstant parse_wm_constant(const std::string& s) {
    if (s == "printed") return WMConstant::printed;
    if (s == "sqrt") return WMConstant::sqrt;
    throw ConfigError("unknown WM constant convention: " + s);
}

WMSolver parse_wm_solver(const std::string& s) {
    if (s == "spectral") return WMSolver::spectral;
    if (s == "sparse") return WMSolver::sparse;
    throw ConfigError("unknown WM solver: " + s);
}

double wm_constant(const WMHyper& h, WMConstant convention) {
    const double base = 4.0 * std::numbers::pi * h.sigma * h.sigma * std::tgamma(h.nu + 1.0) /
                        std::tgamma(h.nu) * std::sqrt(h.l1 * h.l2);
    if (convention == WMConstant::printed) return base;
    // sqrt(4 pi sigma^2 nu L1 L2)
    return std::sqrt(4.0 * std::numbers::pi * h.sigma * h.sigma * std::tgamma(h.nu + 1.0) /
                     std::tgamma(h.nu) * h.l1 * h.l2);
}

Tridiag wm_tridiag_1d(double l, double h, std::size_t n, double zeta) {
    require(n >= 2 && h > 0.0 && l > 0.0, "invalid 1D WM operator geometry");
    const double c = l * l / (h * h);
    // Face value from the Robin condition with a half-cell one-sided gradient.
    const double robin = 2.0 * l * l / (h * (h + 2.0 * zeta * l * l));
    Tridiag t;
    t.diag = Vector::Constant(static_cast<Eigen::Index>(n), 2.0 * c);
    t.off = Vector::Constant(static_cast<Eigen::Index>(n - 1), -c);
    t.diag[0] = c + robin;
    t.diag[static_cast<Eigen::Index>(n - 1)] = c + robin;
    return t;
}

Eigen::SparseMatrix<double> assemble_wm_operator(const WMHyper& h, const GridField& geom) {
    h.validate();
    geom.validate();
    const Tridiag tx = wm_tridiag_1d(h.l1, geom.h1, geom.n1, h.zeta_r);
    const Tridiag ty = wm_tridiag_1d(h.l2, geom.h2, geom.n2, h.zeta_r);
    const std::size_t n1 = geom.n1, n2 = geom.n2;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * n1 * n2);
    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t i = 0; i < n1; ++i) {
            const auto p = static_cast<int>(i + n1 * j);
            trip.emplace_back(p, p, 1.0 + tx.diag[static_cast<Eigen::Index>(i)] +
                                        ty.diag[static_cast<Eigen::Index>(j)]);
            if (i + 1 < n1) {
                const double v = tx.off[static_cast<Eigen::Index>(i)];
                trip.emplace_back(p, p + 1, v);
                trip.emplace_back(p + 1, p, v);
            }
            if (j + 1 < n2) {
                const double v = ty.off[static_cast<Eigen::Index>(j)];
                const auto q = static_cast<int>(p + static_cast<int>(n1));
                trip.emplace_back(p, q, v);
                trip.emplace_back(q, p, v);
            }
        }
    }
    const auto N = static_cast<Eigen::Index>(n1 * n2);
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

WMStencil wm_stencil(const WMHyper& h, const GridField& geom) {
    h.validate();
    geom.validate();
    const Tridiag tx = wm_tridiag_1d(h.l1, geom.h1, geom.n1, h.zeta_r);
    const Tridiag ty = wm_tridiag_1d(h.l2, geom.h2, geom.n2, h.zeta_r);
    WMStencil s;
    s.n1 = geom.n1;
    s.n2 = geom.n2;
    const std::size_t n = s.n1 * s.n2;
    s.diag.assign(n, 0.0);
    s.east.assign(n, 0.0);
    s.north.assign(n, 0.0);
    for (std::size_t j = 0; j < s.n2; ++j) {
        for (std::size_t i = 0; i < s.n1; ++i) {
            const std::size_t p = i + s.n1 * j;
            s.diag[p] = 1.0 + tx.diag[static_cast<Eigen::Index>(i)] +
                        ty.diag[static_cast<Eigen::Index>(j)];
            if (i + 1 < s.n1) s.east[p] = tx.off[static_cast<Eigen::Index>(i)];
            if (j + 1 < s.n2) s.north[p] = ty.off[static_cast<Eigen::Index>(j)];
        }
    }
    return s;
}

LanczosReport lanczos_inverse_sqrt(const std::function<void(const double*, double*)>& apply,
                                   std::size_t n, const double* b, double* x, double tol,
                                   int max_iter) {
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::Map<Vector> out(x, N);
    const double beta0 = std::sqrt(simd::dot({b, n}, {b, n}));
    LanczosReport rep;
    if (beta0 == 0.0) {
        out.setZero();
        return rep;
    }

    std::vector<Vector> basis;
    basis.emplace_back(Eigen::Map<const Vector>(b, N) / beta0);
    std::vector<double> alpha, beta;
    Vector w(N), prev = Vector::Zero(N), cur(N);

    auto current_estimate = [&](std::size_t k) {
        const auto K = static_cast<Eigen::Index>(k);
        Vector a(K), off(std::max<Eigen::Index>(K - 1, 0));
        for (Eigen::Index i = 0; i < K; ++i) a[i] = alpha[static_cast<std::size_t>(i)];
        for (Eigen::Index i = 0; i + 1 < K; ++i) off[i] = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Matrix> es;
        es.computeFromTridiagonal(a, off, Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
            throw NumericalError("Lanczos tridiagonal lost positive definiteness");
        Vector f = es.eigenvalues();
        simd::inverse_half_power({f.data(), static_cast<std::size_t>(K)}, 1);
        const Vector y = beta0 * (es.eigenvectors() *
                                  f.cwiseProduct(es.eigenvectors().row(0).transpose()));
        cur.setZero();
        for (Eigen::Index i = 0; i < K; ++i)
            simd::axpy(y[i], {basis[static_cast<std::size_t>(i)].data(), n}, {cur.data(), n});
    };

    for (int k = 0; k < max_iter; ++k) {
        const Vector& v = basis.back();
        apply(v.data(), w.data());
        const double a = simd::dot({w.data(), n}, {v.data(), n});
        simd::axpy(-a, {v.data(), n}, {w.data(), n});
        if (k > 0)
            simd::axpy(-beta.back(), {basis[basis.size() - 2].data(), n}, {w.data(), n});
        alpha.push_back(a);
        const double bnext = std::sqrt(simd::dot({w.data(), n}, {w.data(), n}));
        const bool breakdown = bnext <= 1e-14 * std::abs(a);
        const bool check = (k + 1) % 10 == 0 || breakdown || k + 1 == max_iter;
        if (check) {
            current_estimate(alpha.size());
            const double nrm = cur.norm();
            rep.iterations = k + 1;
            rep.last_change = nrm > 0.0 ? (cur - prev).norm() / nrm : 0.0;
            if (breakdown || rep.last_change <= tol) {
                out = cur;
                return rep;
            }
            prev = cur;
        }
        beta.push_back(bnext);
        basis.emplace_back(w / bnext);
    }
    throw NumericalError("Lanczos inverse square root did not converge in " +
                         std::to_string(max_iter) + " iterations");
}

struct WMTransform::Impl {
    // spectral
    Matrix qx, qy;
    Matrix inv_power;  // n1 x n2, (1 + lx_i + ly_j)^{-k/2}
    // sparse
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
    WMStencil stencil;
    int k = 0;
};

namespace {

void tridiag_eigen(const Tridiag& t, Vector& evals, Matrix& evecs) {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(t.diag, t.off, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
}

} // namespace

WMTransform::WMTransform(const WMHyper& h, const GridField& geom, const WMOptions& opt)
    : hyper_(h), geom_(geom), opt_(opt), impl_(std::make_unique<Impl>()) {
    h.validate();
    geom_.validate();
    geom_.values.resize(0);
    scale_ = wm_constant(h, opt.constant) / std::sqrt(geom.h1 * geom.h2);
    impl_->k = h.exponent_k();

    if (opt.solver == WMSolver::spectral) {
        const Tridiag tx = wm_tridiag_1d(h.l1, geom.h1, geom.n1, h.zeta_r);
        Vector lx, ly;
        tridiag_eigen(tx, lx, impl_->qx);
        if (h.l1 == h.l2 && geom.n1 == geom.n2 && geom.h1 == geom.h2) {
            ly = lx;
            impl_->qy = impl_->qx;
        } else {
            tridiag_eigen(wm_tridiag_1d(h.l2, geom.h2, geom.n2, h.zeta_r), ly, impl_->qy);
        }
        Matrix s = (lx.replicate(1, ly.size()).rowwise() + ly.transpose()).array() + 1.0;
        simd::inverse_half_power({s.data(), static_cast<std::size_t>(s.size())}, impl_->k);
        impl_->inv_power = std::move(s);
    } else {
        impl_->llt.compute(assemble_wm_operator(h, geom));
        if (impl_->llt.info() != Eigen::Success)
            throw NumericalError("WM operator factorisation failed");
        impl_->stencil = wm_stencil(h, geom);
    }
}

WMTransform::~WMTransform() = default;
WMTransform::WMTransform(WMTransform&&) noexcept = default;
WMTransform& WMTransform::operator=(WMTransform&&) noexcept = default;

void WMTransform::apply(const double* omega, double* psi) const {
    const auto n1 = static_cast<Eigen::Index>(geom_.n1);
    const auto n2 = static_cast<Eigen::Index>(geom_.n2);
    const std::size_t n = geom_.n1 * geom_.n2;
    if (opt_.solver == WMSolver::spectral) {
        Eigen::Map<const Matrix> X(omega, n1, n2);
        Matrix Y = impl_->qx.transpose() * X * impl_->qy;
        Y.array() *= impl_->inv_power.array();
        Eigen::Map<Matrix> P(psi, n1, n2);
        P.noalias() = scale_ * (impl_->qx * Y * impl_->qy.transpose());
        return;
    }
    Vector x = scale_ * Eigen::Map<const Vector>(omega, n1 * n2);
    for (int s = 0; s < impl_->k / 2; ++s) x = impl_->llt.solve(x);
    if (impl_->k % 2 == 1) {
        const simd::Stencil5View view{impl_->stencil.n1, impl_->stencil.n2, impl_->stencil.diag,
                                      impl_->stencil.east, impl_->stencil.north};
        auto op = [&](const double* in, double* out) {
            simd::stencil5_apply(view, {in, n}, {out, n});
        };
        Vector y(n1 * n2);
        lanczos_inverse_sqrt(op, n, x.data(), y.data(), opt_.lanczos_tol, opt_.lanczos_max_iter);
        x = std::move(y);
    }
    Eigen::Map<Vector>(psi, n1 * n2) = x;
}

GridField WMTransform::apply(const GridField& omega) const {
    require(omega.same_geometry(geom_), "white noise grid does not match the transform grid");
    GridField out = omega;
    apply(omega.values.data(), out.values.data());
    return out;
}

GridField WMTransform::variance() const {
    std::optional<WMTransform> tmp;
    if (opt_.solver != WMSolver::spectral) {
        WMOptions spec = opt_;
        spec.solver = WMSolver::spectral;
        tmp.emplace(hyper_, geom_, spec);
    }
    const WMTransform& t = tmp ? *tmp : *this;
    const Matrix p2 = t.impl_->inv_power.array().square();
    const Matrix v = t.impl_->qx.array().square().matrix() * p2 *
                     t.impl_->qy.array().square().matrix().transpose();
    GridField out = geom_;
    out.values = (scale_ * scale_) * Eigen::Map<const Vector>(v.data(), v.size());
    return out;
}

GridField wm_transform(const GridField& omega, const WMHyper& h, const WMOptions& opt) {
    return WMTransform(h, omega, opt).apply(omega);
}

WMHyper p1_hyper(const Vector& u, const P1Fixed& fx) {
    require(u.size() > static_cast<Eigen::Index>(kP1Scalars), "P1 particle too short");
    WMHyper h;
    h.lambda = u[0];
    h.l1 = u[1];
    h.l2 = u[2];
    h.nu = fx.nu;
    h.sigma = fx.sigma;
    h.zeta_r = fx.zeta_r;
    return h;
}

GridField p1_log_field(const Vector& u, const P1Fixed& fx, const GridField& geom,
                       const WMOptions& opt) {
    require(static_cast<std::size_t>(u.size()) == kP1Scalars + geom.size(),
            "P1 particle length does not match the grid");
    const WMHyper h = p1_hyper(u, fx);
    GridField psi = geom;
    psi.values.resize(static_cast<Eigen::Index>(geom.size()));
    WMTransform(h, psi, opt).apply(u.data() + kP1Scalars, psi.values.data());
    return psi;
}

GridField p1(const Vector& u, const P1Fixed& fx, const GridField& geom, const WMOptions& opt) {
    GridField k = p1_log_field(u, fx, geom, opt);
    const double lambda = u[0];
    require(lambda > 0.0, "P1 lambda must be positive");
    // Cap the exponent so extreme prior draws stay finite.
    k.values = lambda * k.values.array().min(700.0).exp();
    return k;
}

void p1_clamp(Eigen::Ref<Vector> u, const P1Bounds& b) {
    u[0] = std::clamp(u[0], b.lambda_lo, b.lambda_hi);
    u[1] = std::clamp(u[1], b.l_lo, b.l_hi);
    u[2] = std::clamp(u[2], b.l_lo, b.l_hi);
}

Ensemble sample_p1_prior(std::size_t J, Rng& rng, const P1Bounds& b, std::size_t grid_cells) {
    require(J >= 2, "ensemble needs at least two particles");
    require(b.lambda_lo < b.lambda_hi && b.l_lo < b.l_hi, "empty prior interval");
    require(b.lambda_lo > 0.0 && b.l_lo > 0.0, "prior intervals must be positive");
    const auto d = static_cast<Eigen::Index>(kP1Scalars + grid_cells);
    Matrix P(d, static_cast<Eigen::Index>(J));
    std::uniform_real_distribution<double> ulam(b.lambda_lo, b.lambda_hi), ul(b.l_lo, b.l_hi);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(J); ++j) {
        P(0, j) = ulam(rng);
        P(1, j) = ul(rng);
        P(2, j) = ul(rng);
        for (Eigen::Index i = kP1Scalars; i < d; ++i) P(i, j) = normal(rng);
    }
    return Ensemble(std::move(P));
}

double matern_acf(double x1, double x2, const WMHyper& h) {
    const double r = std::hypot(x1 / h.l1, x2 / h.l2);
    const double s2 = h.sigma * h.sigma;
    if (r == 0.0) return s2;
    return s2 * std::pow(2.0, 1.0 - h.nu) / std::tgamma(h.nu) * std::pow(r, h.nu) *
           std::cyl_bessel_k(h.nu, r);
}

double boundary_variance_ratio(const WMHyper& h, const GridField& geom) {
    const GridField v = WMTransform(h, geom).variance();
    double ring = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < v.n2; ++j)
        for (std::size_t i = 0; i < v.n1; ++i)
            if (i == 0 || j == 0 || i + 1 == v.n1 || j + 1 == v.n2) {
                ring += v.at(i, j);
                ++count;
            }
    return ring / static_cast<double>(count) / v.at(v.n1 / 2, v.n2 / 2);
}

double calibrate_zeta(WMHyper h, const GridField& geom) {
    auto f = [&](double log_zeta) {
        h.zeta_r = std::pow(10.0, log_zeta);
        return std::log(boundary_variance_ratio(h, geom));
    };
    double lo = -4.0, hi = 4.0;
    double flo = f(lo), fhi = f(hi);
    if (flo >= 0.0) return std::pow(10.0, lo);
    if (fhi <= 0.0) return std::pow(10.0, hi);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    return std::pow(10.0, std::abs(flo) < std::abs(fhi) ? lo : hi);
}

} // namespace eki
