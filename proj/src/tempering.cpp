#include "eki/tempering.hpp"

#include "eki/schedules.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace eki {

void GaussianMeasure::validate() const {
    require(mean.size() >= 1 && cov.rows() == mean.size() && cov.cols() == mean.size(),
            "Gaussian measure dimensions inconsistent");
    require((cov - cov.transpose()).norm() <= 1e-12 * std::max(1.0, cov.norm()),
            "covariance must be symmetric");
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
}

void TemperedFamily::validate() const {
    prior.validate();
    obs.validate();
    require(G.rows() == obs.size() && G.cols() == prior.mean.size(),
            "forward matrix shape inconsistent with prior and data");
}

namespace {

Matrix spd_inverse(const Matrix& A) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite");
    return llt.solve(Matrix::Identity(A.rows(), A.cols()));
}

double spd_logdet(const Matrix& A) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) throw NumericalError("matrix is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace

GaussianMeasure tempered_gaussian(const TemperedFamily& fam, double t) {
    fam.validate();
    require(t >= 0.0, "tempering parameter must be nonnegative");
    const Matrix c0inv = spd_inverse(fam.prior.cov);
    const Vector ig = fam.obs.inv_gamma();
    const Matrix precision = c0inv + t * fam.G.transpose() * ig.asDiagonal() * fam.G;
    GaussianMeasure out;
    out.cov = spd_inverse(precision);
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    out.mean = out.cov * (c0inv * fam.prior.mean + t * fam.G.transpose() * ig.cwiseProduct(fam.obs.y));
    return out;
}

GaussianMeasure kalman_step(const GaussianMeasure& from, const Matrix& G, const Observation& obs,
                            double alpha) {
    require(alpha > 0.0, "alpha must be positive");
    const Matrix CGt = from.cov * G.transpose();
    Matrix S = G * CGt;
    S.diagonal() += alpha * obs.gamma;
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance not SPD");
    const Matrix K = llt.solve(CGt.transpose()).transpose();
    GaussianMeasure out;
    out.mean = from.mean + K * (obs.y - G * from.mean);
    out.cov = from.cov - K * G * from.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

double kl_divergence(const GaussianMeasure& a, const GaussianMeasure& b) {
    require(a.mean.size() == b.mean.size(), "dimension mismatch");
    const Matrix binv = spd_inverse(b.cov);
    const Vector dm = b.mean - a.mean;
    const auto d = static_cast<double>(a.mean.size());
    return 0.5 * ((binv * a.cov).trace() - d + dm.dot(binv * dm) + spd_logdet(b.cov) -
                  spd_logdet(a.cov));
}

double jeffreys_divergence(const GaussianMeasure& a, const GaussianMeasure& b) {
    require(a.mean.size() == b.mean.size(), "dimension mismatch");
    const Matrix ainv = spd_inverse(a.cov);
    const Matrix binv = spd_inverse(b.cov);
    const Vector dm = b.mean - a.mean;
    const auto d = static_cast<double>(a.mean.size());
    const double v = 0.5 * ((binv * a.cov).trace() + (ainv * b.cov).trace() - 2.0 * d +
                            dm.dot((ainv + binv) * dm));
    return std::max(v, 0.0);
}

PhiMoments phi_moments(const GaussianMeasure& mu, const TemperedFamily& fam) {
    const Vector isg = fam.obs.gamma.cwiseSqrt().cwiseInverse();
    const Vector m = isg.cwiseProduct(fam.obs.y - fam.G * mu.mean);
    const Matrix WG = isg.asDiagonal() * fam.G;
    const Matrix S = WG * mu.cov * WG.transpose();
    PhiMoments pm;
    pm.mean = 0.5 * (m.squaredNorm() + S.trace());
    pm.variance = 0.5 * (S * S).trace() + m.dot(S * m);
    return pm;
}

PhiMoments phi_moments(const TemperedFamily& fam, double t) {
    return phi_moments(tempered_gaussian(fam, t), fam);
}

double log_normaliser(const TemperedFamily& fam, double t) {
    const GaussianMeasure mt = tempered_gaussian(fam, t);
    const Matrix c0inv = spd_inverse(fam.prior.cov);
    const Vector ig = fam.obs.inv_gamma();
    const Vector h = c0inv * fam.prior.mean + t * fam.G.transpose() * ig.cwiseProduct(fam.obs.y);
    const double quad = t * fam.obs.y.dot(ig.cwiseProduct(fam.obs.y)) +
                        fam.prior.mean.dot(c0inv * fam.prior.mean) - mt.mean.dot(h);
    return 0.5 * (spd_logdet(mt.cov) - spd_logdet(fam.prior.cov)) - 0.5 * quad;
}

double NonlinearToy::phi(double u) const {
    const double r = y - std::pow(u, power);
    return 0.5 * r * r / gamma;
}

namespace {

template <class F>
double integrate(const NonlinearToy& toy, F&& f, double tol) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double a = toy.m0 - 10.0 * toy.s0, b = toy.m0 + 10.0 * toy.s0;
    const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 30, tol, &err);
    if (!std::isfinite(v)) throw NumericalError("quadrature produced a non-finite value");
    return v;
}

double log_prior_density(const NonlinearToy& toy, double u) {
    const double z = (u - toy.m0) / toy.s0;
    return -0.5 * z * z - std::log(std::sqrt(2.0 * std::numbers::pi) * toy.s0);
}

} // namespace

ToyMoments toy_moments(const NonlinearToy& toy, double t, double tol) {
    require(toy.s0 > 0.0 && toy.gamma > 0.0, "toy prior and noise must be positive");
    auto weight = [&](double u) { return std::exp(-t * toy.phi(u) + log_prior_density(toy, u)); };
    const double Z = integrate(toy, weight, tol);
    if (!(Z > 0.0)) throw NumericalError("tempered normaliser underflowed");
    const double mean =
        integrate(toy, [&](double u) { return toy.phi(u) * weight(u); }, tol) / Z;
    const double var = integrate(
                           toy,
                           [&](double u) {
                               const double d = toy.phi(u) - mean;
                               return d * d * weight(u);
                           },
                           tol) /
                       Z;
    return {std::log(Z), mean, var};
}

double toy_jeffreys(const NonlinearToy& toy, double ta, double tb, double tol) {
    const double la = toy_moments(toy, ta, tol).log_normaliser;
    const double lb = toy_moments(toy, tb, tol).log_normaliser;
    auto integrand = [&](double u) {
        const double lp = log_prior_density(toy, u);
        const double log_pa = -ta * toy.phi(u) + lp - la;
        const double log_pb = -tb * toy.phi(u) + lp - lb;
        return (std::exp(log_pa) - std::exp(log_pb)) * (log_pa - log_pb);
    };
    return integrate(toy, integrand, tol);
}

namespace {

// Fourth-order central difference.
template <class F>
double five_point(F f, double t, double dt) {
    return (f(t - 2.0 * dt) - 8.0 * f(t - dt) + 8.0 * f(t + dt) - f(t + 2.0 * dt)) / (12.0 * dt);
}

} // namespace

CheckReport make_check(std::string name, double lhs, double rhs, double rel_tol, double abs_tol) {
    CheckReport c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.abs_err = std::abs(lhs - rhs);
    const double denom = std::max(std::abs(rhs), std::abs(lhs));
    c.rel_err = denom > 0.0 ? c.abs_err / denom : 0.0;
    c.pass = std::isfinite(c.abs_err) && (c.rel_err <= rel_tol || c.abs_err <= abs_tol);
    return c;
}

CheckReport verify_divergence_identity(const TemperedFamily& fam, double tn, double tn1,
                                       double rel_tol) {
    require(tn1 >= tn, "tempering steps must be nondecreasing");
    const double lhs = jeffreys_divergence(tempered_gaussian(fam, tn1), tempered_gaussian(fam, tn));
    const double rhs = (tn1 - tn) * (phi_moments(fam, tn).mean - phi_moments(fam, tn1).mean);
    return make_check("divergence_identity_linear", lhs, rhs, rel_tol, 1e-14);
}

CheckReport verify_divergence_identity(const NonlinearToy& toy, double tn, double tn1,
                                       double rel_tol) {
    require(tn1 >= tn, "tempering steps must be nondecreasing");
    const double lhs = toy_jeffreys(toy, tn1, tn);
    const double rhs = (tn1 - tn) * (toy_moments(toy, tn).mean - toy_moments(toy, tn1).mean);
    return make_check("divergence_identity_nonlinear", lhs, rhs, rel_tol, 1e-12);
}

CheckReport verify_corollary_derivative(const TemperedFamily& fam, double t, double dt,
                                        double tol) {
    const double fd = five_point([&](double s) { return phi_moments(fam, s).mean; }, t, dt);
    return make_check("corollary_derivative_linear", fd, -phi_moments(fam, t).variance, tol, tol);
}

CheckReport verify_corollary_derivative(const NonlinearToy& toy, double t, double dt, double tol) {
    const double fd = five_point([&](double s) { return toy_moments(toy, s).mean; }, t, dt);
    return make_check("corollary_derivative_nonlinear", fd, -toy_moments(toy, t).variance, tol, tol);
}

CheckReport verify_normaliser_derivative(const TemperedFamily& fam, double t, double dt,
                                         double tol) {
    const double fd = five_point([&](double s) { return log_normaliser(fam, s); }, t, dt);
    return make_check("normaliser_derivative_linear", fd, -phi_moments(fam, t).mean, tol, tol);
}

CheckReport verify_normaliser_derivative(const NonlinearToy& toy, double t, double dt,
                                         double tol) {
    const double fd =
        five_point([&](double s) { return toy_moments(toy, s).log_normaliser; }, t, dt);
    return make_check("normaliser_derivative_nonlinear", fd, -toy_moments(toy, t).mean, tol, tol);
}

std::vector<double> exact_dmc_schedule(const TemperedFamily& fam) {
    TemperingState st;
    std::vector<double> ts{0.0};
    for (int n = 0; n < 100000 && !st.finished; ++n) {
        const PhiMoments pm = phi_moments(fam, st.t);
        MisfitStats ms;
        ms.mean = pm.mean;
        ms.variance = pm.variance;
        dmc_step(ms, fam.data_dim(), st);
        ts.push_back(st.t);
    }
    if (!st.finished) throw NumericalError("exact DMC schedule did not terminate");
    return ts;
}

DmcBoundReport verify_dmc_bound(const TemperedFamily& fam, const std::vector<double>& ts) {
    require(ts.size() >= 2 && ts.front() == 0.0, "t-sequence must start at 0 with one step");
    DmcBoundReport rep;
    rep.theta = 0.5 * static_cast<double>(fam.data_dim());
    rep.max_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n + 1 < ts.size(); ++n) {
        DmcBoundStep s;
        s.t = ts[n];
        s.alpha_inv = ts[n + 1] - ts[n];
        require(s.alpha_inv >= 0.0, "t-sequence must be nondecreasing");
        s.exact = jeffreys_divergence(tempered_gaussian(fam, ts[n]), tempered_gaussian(fam, ts[n + 1]));
        const PhiMoments pm = phi_moments(fam, ts[n]);
        const double mean_term = s.alpha_inv * pm.mean;
        const double var_term = s.alpha_inv * s.alpha_inv * pm.variance;
        s.mean_branch = mean_term <= var_term;
        s.approx = std::min(mean_term, var_term);
        s.slack = s.exact / rep.theta - 1.0;
        rep.max_slack = std::max(rep.max_slack, s.slack);
        rep.steps.push_back(s);
    }
    return rep;
}

} // namespace eki
