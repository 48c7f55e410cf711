#include "eki/validation.hpp"

#include "eki/cem.hpp"
#include "eki/gaussian_fields.hpp"
#include "eki/level_set.hpp"
#include "eki/mesh.hpp"
#include "eki/tempering.hpp"

#include <cmath>
#include <random>

namespace eki {

namespace {

Json check_json(const CheckReport& c) {
    return Json{{"name", c.name},       {"lhs", c.lhs},         {"rhs", c.rhs},
                {"abs_err", c.abs_err}, {"rel_err", c.rel_err}, {"pass", c.pass}};
}

Json finish(Json checks) {
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.at("pass").get<bool>();
    return Json{{"pass", ok}, {"checks", std::move(checks)}};
}

// Column c of the exact covariance B B^T = B^2 of the (symmetric) transform.
GridField covariance_column(const WMTransform& w, const GridField& geom, std::size_t i,
                            std::size_t j) {
    GridField e = geom;
    e.values.setZero();
    e.values[static_cast<Eigen::Index>(j * geom.n1 + i)] = 1.0;
    return w.apply(w.apply(e));
}

} // namespace

Json field_suite(const FieldSuiteOptions& opt) {
    Json checks = Json::array();
    const GridField geom = GridField::square(opt.grid);

    // omega = 0 leaves the mean level untouched.
    {
        const P1Fixed fx;
        Vector u = Vector::Zero(static_cast<Eigen::Index>(kP1Scalars + geom.size()));
        u[0] = 0.37;
        u[1] = 0.3;
        u[2] = 0.2;
        const GridField k = p1(u, fx, geom);
        const double dev = (k.values.array() - u[0]).abs().maxCoeff();
        checks.push_back({{"name", "p1_zero_noise_constant"}, {"max_abs_dev", dev},
                          {"pass", dev == 0.0}});

        const P2Fixed f2;
        Vector v = Vector::Zero(static_cast<Eigen::Index>(kP2Scalars + geom.size()));
        v << 0.03, 0.2, 0.9, 0.3, 0.3, Vector::Zero(static_cast<Eigen::Index>(geom.size()));
        const GridField k2 = p2(v, f2, geom);
        const double dev2 = (k2.values.array() - 0.2).abs().maxCoeff();
        checks.push_back({{"name", "p2_zero_noise_background"}, {"max_abs_dev", dev2},
                          {"pass", dev2 == 0.0}});
    }

    // Monte Carlo ACF at the centre against the continuum Matern correlation.
    {
        WMHyper h;
        h.nu = opt.nu;
        h.sigma = 1.5;
        h.l1 = h.l2 = opt.length;
        h.zeta_r = calibrate_zeta(h, geom);
        const WMTransform w(h, geom);
        const std::size_t c = opt.grid / 2;
        const int lags = 5;
        Rng rng(opt.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        GridField omega = geom;
        std::vector<double> b(static_cast<std::size_t>(opt.samples));
        std::vector<std::vector<double>> a(lags, std::vector<double>(b.size()));
        for (int s = 0; s < opt.samples; ++s) {
            for (Eigen::Index q = 0; q < omega.values.size(); ++q) omega.values[q] = normal(rng);
            const GridField psi = w.apply(omega);
            const double p0 = psi.at(c, c);
            b[static_cast<std::size_t>(s)] = p0 * p0;
            for (int k = 1; k <= lags; ++k)
                a[k - 1][static_cast<std::size_t>(s)] =
                    0.5 * p0 * (psi.at(c + k, c) + psi.at(c, c + k));
        }
        double bbar = 0.0;
        for (double x : b) bbar += x;
        bbar /= static_cast<double>(b.size());
        const GridField exact = covariance_column(w, geom, c, c);
        Json rows = Json::array();
        bool all = true;
        for (int k = 1; k <= lags; ++k) {
            const auto& ak = a[k - 1];
            double abar = 0.0;
            for (double x : ak) abar += x;
            abar /= static_cast<double>(ak.size());
            const double rho = abar / bbar;
            // Delta-method standard error of a ratio of means.
            double ss = 0.0;
            for (std::size_t s = 0; s < ak.size(); ++s) {
                const double r = ak[s] - rho * b[s];
                ss += r * r;
            }
            const double n = static_cast<double>(ak.size());
            const double se = std::sqrt(ss / (n - 1.0) / n) / bbar;
            const double target = matern_acf(k * geom.h1, 0.0, h) / (h.sigma * h.sigma);
            const double discrete =
                0.5 * (exact.at(c + k, c) + exact.at(c, c + k)) / exact.at(c, c);
            const double z = std::abs(rho - target) / se;
            all = all && z <= 3.0;
            rows.push_back({{"lag", k * geom.h1}, {"mc", rho}, {"se", se}, {"matern", target},
                            {"discrete_exact", discrete}, {"z", z}});
        }
        checks.push_back({{"name", "acf_matches_matern"}, {"samples", opt.samples},
                          {"grid", opt.grid}, {"length", opt.length}, {"nu", opt.nu},
                          {"zeta_r", h.zeta_r}, {"lags", rows}, {"pass", all}});
    }

    // Exact correlations: longer L1 stretches correlation along x only.
    {
        const std::size_t c = opt.grid / 2;
        std::vector<double> ls{0.15, 0.25, 0.35, 0.45};
        std::vector<std::vector<double>> cx, cy;
        for (double l1 : ls) {
            WMHyper h;
            h.nu = opt.nu;
            h.sigma = 1.0;
            h.l1 = l1;
            h.l2 = 0.15;
            const GridField col = covariance_column(WMTransform(h, geom), geom, c, c);
            std::vector<double> x, y;
            for (int k = 1; k <= 5; ++k) {
                x.push_back(col.at(c + k, c) / col.at(c, c));
                y.push_back(col.at(c, c + k) / col.at(c, c));
            }
            cx.push_back(x);
            cy.push_back(y);
        }
        bool ok = true;
        for (std::size_t m = 1; m < ls.size(); ++m)
            for (std::size_t k = 0; k < 5; ++k) {
                ok = ok && cx[m][k] > cx[m - 1][k];  // grows with L1
                ok = ok && cx[m][k] > cy[m][k];      // x beats y once L1 > L2
            }
        checks.push_back({{"name", "anisotropy_monotone"}, {"l1", ls}, {"corr_x", cx},
                          {"corr_y", cy}, {"pass", ok}});
    }
    return finish(std::move(checks));
}

Json cem_suite(const CemSuiteOptions& opt) {
    Json checks = Json::array();
    const ElectrodeLayout layout =
        ElectrodeLayout::uniform(opt.electrodes, opt.coverage, opt.contact_impedance);
    const CEMModel coarse(build_disc_mesh_rings(opt.rings), layout);
    const Matrix patterns = adjacent_patterns(opt.electrodes, opt.current);

    // A smooth inhomogeneous conductivity for the symmetry and balance checks.
    Vector kappa(static_cast<Eigen::Index>(coarse.mesh().num_triangles()));
    for (Eigen::Index t = 0; t < kappa.size(); ++t) {
        const auto p = coarse.mesh().centroid(static_cast<std::size_t>(t));
        kappa[t] = 0.2 + 0.8 * std::exp(-8.0 * ((p[0] - 0.3) * (p[0] - 0.3) + p[1] * p[1]));
    }
    const CEMSolution sol = coarse.solve(kappa, patterns, *coarse.make_workspace(), true);

    {
        // Transfer matrix R_ab = I_a . U_b is symmetric for a self-adjoint model.
        const Matrix R = patterns.transpose() * sol.electrode_voltages;
        const double asym = (R - R.transpose()).norm() / R.norm();
        checks.push_back({{"name", "reciprocity"}, {"rel_asymmetry", asym},
                          {"pass", asym <= 1e-8}});
    }
    {
        const Matrix I = coarse.electrode_currents(sol);
        const double total = I.colwise().sum().cwiseAbs().maxCoeff() / opt.current;
        const double match = (I - patterns).cwiseAbs().maxCoeff() / opt.current;
        const double sumv = sol.electrode_voltages.colwise().sum().cwiseAbs().maxCoeff();
        checks.push_back({{"name", "kirchhoff_balance"}, {"rel_net_current", total},
                          {"rel_injected_mismatch", match}, {"max_voltage_sum", sumv},
                          {"pass", total <= 1e-10 && match <= 1e-10 && sumv <= 1e-10}});
    }
    {
        const CEMModel fine(build_disc_mesh_rings(2 * opt.rings), layout);
        const Vector one_c = Vector::Ones(static_cast<Eigen::Index>(coarse.mesh().num_triangles()));
        const Vector one_f = Vector::Ones(static_cast<Eigen::Index>(fine.mesh().num_triangles()));
        const Vector vc = measurement_vector(coarse.solve(one_c, patterns));
        const Vector vf = measurement_vector(fine.solve(one_f, patterns));
        const double rel = (vc - vf).norm() / vf.norm();
        checks.push_back({{"name", "self_convergence_unit_conductivity"},
                          {"rings", {opt.rings, 2 * opt.rings}},
                          {"rel_change", rel},
                          {"pass", rel <= 0.02}});
    }
    return finish(std::move(checks));
}

Json tempering_suite() {
    Json checks = Json::array();

    TemperedFamily scalar;
    scalar.prior = {Vector::Zero(1), Matrix::Identity(1, 1)};
    scalar.G = Matrix::Identity(1, 1);
    scalar.obs = Observation(Vector::Constant(1, 2.0), Vector::Ones(1));

    // A small coupled linear family.
    TemperedFamily multi;
    multi.prior.mean = Vector(3);
    multi.prior.mean << 0.5, -0.2, 1.0;
    multi.prior.cov = Matrix(3, 3);
    multi.prior.cov << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
    multi.G = Matrix(2, 3);
    multi.G << 1.0, 0.5, -1.0, 0.0, 2.0, 1.0;
    Vector y(2);
    y << 3.0, -1.0;
    Vector g(2);
    g << 0.1, 0.4;
    multi.obs = Observation(y, g);

    const NonlinearToy toy;
    const double dt = 1e-4;

    for (const TemperedFamily* fam : {&scalar, &multi}) {
        const std::vector<double> ts = exact_dmc_schedule(*fam);
        for (std::size_t n = 0; n + 1 < ts.size(); ++n)
            checks.push_back(check_json(verify_divergence_identity(*fam, ts[n], ts[n + 1])));
        for (double t : {0.1, 0.5, 0.9}) {
            checks.push_back(check_json(verify_corollary_derivative(*fam, t, dt)));
            checks.push_back(check_json(verify_normaliser_derivative(*fam, t, dt)));
        }
    }
    for (auto [a, b] : {std::pair{0.0, 0.3}, std::pair{0.3, 1.0}})
        checks.push_back(check_json(verify_divergence_identity(toy, a, b)));
    for (double t : {0.1, 0.5, 0.9}) {
        checks.push_back(check_json(verify_corollary_derivative(toy, t, dt)));
        checks.push_back(check_json(verify_normaliser_derivative(toy, t, dt)));
    }

    auto bound_json = [](const std::string& name, const TemperedFamily& fam, double max_eps) {
        const std::vector<double> ts = exact_dmc_schedule(fam);
        const DmcBoundReport rep = verify_dmc_bound(fam, ts);
        Json steps = Json::array();
        for (const auto& s : rep.steps)
            steps.push_back({{"t", s.t}, {"alpha_inv", s.alpha_inv}, {"exact", s.exact},
                             {"approx", s.approx}, {"mean_branch", s.mean_branch},
                             {"slack", s.slack}});
        Json j{{"name", name}, {"theta", rep.theta}, {"epsilon", rep.max_slack},
               {"steps", steps}};
        j["pass"] = max_eps < 0.0 || rep.max_slack <= max_eps;
        return j;
    };
    checks.push_back(bound_json("dmc_bound_scalar", scalar, 0.5));

    // Diffuse prior in one direction: the mean branch of the step rule binds.
    TemperedFamily diffuse;
    diffuse.prior.mean = Vector::Zero(2);
    diffuse.prior.cov = Eigen::Vector2d(1e4, 1.0).asDiagonal();
    diffuse.G = Matrix::Identity(2, 2);
    diffuse.obs = Observation(Vector::Zero(2), Vector::Ones(2));
    checks.push_back(bound_json("dmc_bound_mean_branch_example", diffuse, -1.0));

    return finish(std::move(checks));
}

} // namespace eki
