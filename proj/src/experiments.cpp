#include "eki/experiments.hpp"

#include "eki/detail/binary_io.hpp"
#include "eki/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace eki {

double relative_l2_error(const Vector& estimate, const MeshField& truth) {
    require(estimate.size() == truth.values.size(), "estimate and truth sizes differ");
    const double num = (truth.areas.array() * (estimate - truth.values).array().square()).sum();
    const double den = (truth.areas.array() * truth.values.array().square()).sum();
    return std::sqrt(num / den);
}

Vector noise_variances(const Vector& clean, double rel, double floor) {
    const double range = clean.maxCoeff() - clean.minCoeff();
    return (rel * clean.array().abs()).square() + std::pow(floor * range, 2);
}

Observation generate_data(const Vector& clean, double rel, double floor, Rng& rng) {
    const Vector gamma = noise_variances(clean, rel, floor);
    Vector y = clean;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index m = 0; m < y.size(); ++m) {
        const double z = normal(rng);
        if (gamma[m] > 0.0) y[m] += std::sqrt(gamma[m]) * z;
    }
    // A fully noise-free setup still needs positive variances for the solver.
    Vector g = gamma;
    for (Eigen::Index m = 0; m < g.size(); ++m)
        if (!(g[m] > 0.0)) g[m] = std::numeric_limits<double>::min();
    return Observation(std::move(y), std::move(g));
}

std::function<double(double, double)> truth_function(const ExperimentConfig& cfg) {
    if (cfg.experiment == "exp2") return cfg.truth2;
    return cfg.truth1;
}

MeshField sample_on_mesh(const std::function<double(double, double)>& f, const DiscMesh& m) {
    MeshField mf;
    const auto T = static_cast<Eigen::Index>(m.num_triangles());
    mf.values.resize(T);
    mf.areas.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto c = m.centroid(static_cast<std::size_t>(t));
        mf.values[t] = f(c[0], c[1]);
        mf.areas[t] = m.signed_area(static_cast<std::size_t>(t));
    }
    return mf;
}

EitSetup build_eit_setup(const ExperimentConfig& cfg) {
    cfg.validate();
    require(cfg.experiment != "toy", "the toy experiment has no EIT setup");
    EitSetup s;
    s.cfg = cfg;
    const ElectrodeLayout layout =
        ElectrodeLayout::uniform(cfg.electrodes, cfg.coverage, cfg.contact_impedance);
    s.data_cem = std::make_shared<CEMModel>(build_disc_mesh(cfg.data_elements), layout);
    s.inv_cem = std::make_shared<CEMModel>(build_disc_mesh(cfg.inversion_elements), layout);
    const auto f = truth_function(cfg);
    const MeshField truth_data = sample_on_mesh(f, s.data_cem->mesh());
    const Matrix patterns = adjacent_patterns(cfg.electrodes, cfg.current);
    s.clean = measurement_vector(s.data_cem->solve(truth_data.values, patterns));
    Rng rng(cfg.data_seed);
    s.obs = generate_data(s.clean, cfg.noise_relative, cfg.noise_floor, rng);
    s.truth_inv = sample_on_mesh(f, s.inv_cem->mesh());
    return s;
}

EitProblem::EitProblem(const EitSetup& setup, unsigned jobs)
    : fwd_(setup.cfg.param, setup.inv_cem, adjacent_patterns(setup.cfg.electrodes, setup.cfg.current)),
      obs_(setup.obs), truth_(setup.truth_inv), jobs_(std::max(1u, jobs)) {
    for (unsigned w = 0; w < jobs_; ++w) ws_.push_back(fwd_.cem().make_workspace());
}

Matrix EitProblem::evaluate(const Matrix& U) {
    require(static_cast<std::size_t>(U.rows()) == dim(), "particle dimension mismatch");
    Matrix G(U.cols(), static_cast<Eigen::Index>(fwd_.data_dim()));
    parallel_for(static_cast<std::size_t>(U.cols()), jobs_, [&](std::size_t j, unsigned w) {
        const auto jj = static_cast<Eigen::Index>(j);
        G.row(jj) = fwd_.evaluate(U.col(jj), *ws_[w]).transpose();
    });
    return G;
}

Vector EitProblem::evaluate_one(const Vector& u) { return fwd_.evaluate(u, *ws_[0]); }

void EitProblem::project(Eigen::Ref<Vector> u) const { clamp_particle(u, fwd_.spec()); }

Vector EitProblem::estimate_on_mesh(const Vector& ubar) const {
    return fwd_.element_conductivity(conductivity(ubar, fwd_.spec()));
}

double EitProblem::relative_error(const Vector& ubar) const {
    return relative_l2_error(estimate_on_mesh(ubar), truth_);
}

LinearProblem::LinearProblem(Matrix H, Observation obs, std::optional<Vector> reference)
    : H_(std::move(H)), obs_(std::move(obs)), ref_(std::move(reference)) {
    require(H_.rows() == obs_.size(), "forward matrix rows must equal data length");
}

double LinearProblem::relative_error(const Vector& ubar) const {
    if (!ref_) return std::numeric_limits<double>::quiet_NaN();
    return (ubar - *ref_).norm() / ref_->norm();
}

RunResult run_eki(InverseProblem& problem, const Ensemble& initial, const ControllerConfig& ctl,
                  PerturbMode mode, Rng& rng, bool keep_means) {
    require(static_cast<std::size_t>(initial.dim()) == problem.dim(),
            "initial ensemble dimension mismatch");
    const Observation& obs = problem.observation();
    const std::size_t M = static_cast<std::size_t>(obs.size());
    const double delta = std::sqrt(static_cast<double>(M));
    const auto ns = static_cast<Eigen::Index>(problem.num_scalars());

    RunResult r;
    r.controller = to_string(ctl.kind);
    std::vector<Vector> scalar_rows;
    TemperingState state;
    double lm_sum = 0.0;
    Ensemble ens = initial;

    try {
        for (int n = 0;; ++n) {
            const EvaluationBatch ev(problem.evaluate(ens.particles));
            const MisfitStats stats = compute_misfits(ev, obs);
            const Vector ubar = ensemble_mean(ens);
            const double dm1 = weighted_misfit_norm(ev.mean, obs);
            const double dm2 = weighted_misfit_norm(problem.evaluate_one(ubar), obs);
            const double dm3 = std::sqrt(2.0 * stats.mean);

            r.t.push_back(ctl.kind == ControllerKind::dmc ? state.t : lm_sum);
            r.phi_mean.push_back(stats.mean);
            r.phi_var.push_back(stats.variance);
            r.dm1.push_back(dm1);
            r.dm2.push_back(dm2);
            r.dm3.push_back(dm3);
            r.error.push_back(problem.relative_error(ubar));
            scalar_rows.push_back(ubar.head(ns));
            if (keep_means) r.means.push_back(ubar);
            r.n_star = n;

            double alpha = 0.0;
            bool done = false;
            switch (ctl.kind) {
            case ControllerKind::dmc:
                if (state.finished) {
                    done = true;
                } else {
                    alpha = 1.0 / dmc_step(stats, M, state).alpha_inv;
                }
                break;
            case ControllerKind::lm:
                if (lm_stop(dm1, ctl.lm, delta) || (ctl.lm.sum_stop && lm_sum >= 1.0)) {
                    done = true;
                } else {
                    const Covariances c = empirical_covariances(ens, ev);
                    alpha = lm_alpha(ev.mean, obs, c.cgg, ctl.lm);
                }
                break;
            case ControllerKind::esmda:
                if (n >= ctl.esmda_steps)
                    done = true;
                else
                    alpha = esmda_alpha(ctl.esmda_steps);
                break;
            }
            if (done) {
                r.alpha_inv.push_back(0.0);
                r.converged = true;
                break;
            }
            if (n >= ctl.max_iterations) {
                r.alpha_inv.push_back(0.0);
                r.converged = false;
                break;
            }
            // For DMC the step is read back from the state so the log sums
            // exactly as the clock did.
            const double ainv = ctl.kind == ControllerKind::dmc ? state.alpha_inv_history.back()
                                                                : 1.0 / alpha;
            r.alpha_inv.push_back(ainv);
            if (ctl.kind != ControllerKind::dmc) lm_sum += ainv;

            ens = eki_update(ens, ev, obs, alpha, rng, mode);
            for (Eigen::Index j = 0; j < ens.size(); ++j) problem.project(ens.particles.col(j));
        }
    } catch (const NumericalError& e) {
        r.failure = e.what();
        r.converged = false;
        // Keep traces rectangular: pad a missing step entry.
        while (r.alpha_inv.size() < r.t.size()) r.alpha_inv.push_back(0.0);
    }

    r.scalar_means.resize(static_cast<Eigen::Index>(scalar_rows.size()), ns);
    for (std::size_t i = 0; i < scalar_rows.size(); ++i)
        r.scalar_means.row(static_cast<Eigen::Index>(i)) = scalar_rows[i].transpose();
    r.final_ensemble = ens;
    return r;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_schedule_csv(const RunResult& r, const std::filesystem::path& p) {
    auto os = detail::open_out(p);
    os << "n,alpha_inv,t,phi_mean,phi_var,dm1,dm2,dm3\n";
    for (std::size_t n = 0; n < r.t.size(); ++n)
        os << n << ',' << fmt(r.alpha_inv[n]) << ',' << fmt(r.t[n]) << ',' << fmt(r.phi_mean[n])
           << ',' << fmt(r.phi_var[n]) << ',' << fmt(r.dm1[n]) << ',' << fmt(r.dm2[n]) << ','
           << fmt(r.dm3[n]) << '\n';
}

void write_metrics_csv(const RunResult& r, const std::vector<std::string>& scalar_names,
                       const std::filesystem::path& p) {
    auto os = detail::open_out(p);
    os << "n,error,dm1,dm2,dm3";
    for (const auto& s : scalar_names) os << ",mean_" << s;
    os << '\n';
    for (std::size_t n = 0; n < r.t.size(); ++n) {
        os << n << ',' << fmt(r.error[n]) << ',' << fmt(r.dm1[n]) << ',' << fmt(r.dm2[n]) << ','
           << fmt(r.dm3[n]);
        for (Eigen::Index k = 0; k < r.scalar_means.cols() &&
                                 k < static_cast<Eigen::Index>(scalar_names.size());
             ++k)
            os << ',' << fmt(r.scalar_means(static_cast<Eigen::Index>(n), k));
        os << '\n';
    }
}

Json run_summary(const RunResult& r) {
    Json j;
    j["controller"] = r.controller;
    j["n_star"] = r.n_star;
    j["converged"] = r.converged;
    j["failure"] = r.failure;
    j["prior_error"] = r.prior_error();
    j["final_error"] = r.final_error();
    j["final_dm1"] = r.dm1.empty() ? 0.0 : r.dm1.back();
    j["final_dm2"] = r.dm2.empty() ? 0.0 : r.dm2.back();
    j["final_dm3"] = r.dm3.empty() ? 0.0 : r.dm3.back();
    double s = 0.0;
    for (double a : r.alpha_inv) s += a;
    j["sum_alpha_inv"] = s;
    if (r.scalar_means.rows() > 0) {
        std::vector<double> last(static_cast<std::size_t>(r.scalar_means.cols()));
        for (Eigen::Index k = 0; k < r.scalar_means.cols(); ++k)
            last[static_cast<std::size_t>(k)] = r.scalar_means(r.scalar_means.rows() - 1, k);
        j["final_scalar_means"] = last;
    }
    return j;
}

MeanSd mean_sd(const std::vector<double>& v) {
    MeanSd m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

namespace {

// Problem plus prior sampler, built once and shared by repeats.
struct Prepared {
    std::unique_ptr<InverseProblem> problem;
    std::optional<EitSetup> eit;
    std::function<Ensemble(Rng&)> prior;
    std::vector<std::string> scalar_names;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared p;
    const unsigned jobs = resolve_jobs(cfg.jobs);
    if (cfg.experiment == "toy") {
        const ToyConfig& t = cfg.toy;
        Observation obs(Vector::Constant(1, t.y), Vector::Constant(1, t.gamma));
        // Posterior mean of the scalar conjugate problem.
        const double post_var = 1.0 / (1.0 / t.prior_var + t.g * t.g / t.gamma);
        const double post_mean = post_var * (t.prior_mean / t.prior_var + t.g * t.y / t.gamma);
        p.problem = std::make_unique<LinearProblem>(Matrix::Constant(1, 1, t.g), obs,
                                                    Vector::Constant(1, post_mean));
        const std::size_t J = cfg.ensemble_size;
        p.prior = [t, J](Rng& rng) {
            std::normal_distribution<double> normal(t.prior_mean, std::sqrt(t.prior_var));
            Matrix P(1, static_cast<Eigen::Index>(J));
            for (Eigen::Index j = 0; j < P.cols(); ++j) P(0, j) = normal(rng);
            return Ensemble(std::move(P));
        };
        p.scalar_names = {"u"};
        return p;
    }
    p.eit = build_eit_setup(cfg);
    p.problem = std::make_unique<EitProblem>(*p.eit, jobs);
    const ParamSpec spec = cfg.param;
    const std::size_t J = cfg.ensemble_size;
    p.prior = [spec, J](Rng& rng) { return sample_prior(J, rng, spec); };
    p.scalar_names = spec.scalar_names();
    return p;
}

void write_experiment_files(const Prepared& p, const std::filesystem::path& dir) {
    if (!p.eit) return;
    std::filesystem::create_directories(dir);
    write_mesh_json(p.eit->data_cem->mesh(), dir / "mesh_data.json");
    write_mesh_json(p.eit->inv_cem->mesh(), dir / "mesh_inversion.json");
    auto os = detail::open_out(dir / "measurements.csv");
    os << "pattern,electrode,value,clean,gamma\n";
    const int E = p.eit->cfg.electrodes;
    for (Eigen::Index m = 0; m < p.eit->obs.size(); ++m)
        os << m / E << ',' << m % E << ',' << fmt(p.eit->obs.y[m]) << ',' << fmt(p.eit->clean[m])
           << ',' << fmt(p.eit->obs.gamma[m]) << '\n';
}

void write_run_files(const Prepared& p, const ExperimentConfig& cfg, const Json& resolved,
                     std::uint64_t seed, const RunResult& r, const std::filesystem::path& dir,
                     double seconds) {
    std::filesystem::create_directories(dir);
    Json frozen = resolved;
    frozen["seeds"]["ensemble"] = seed;
    frozen["controller"]["type"] = r.controller;
    {
        auto os = detail::open_out(dir / "config.json");
        os << frozen.dump(2) << '\n';
    }
    write_schedule_csv(r, dir / "schedule.csv");
    write_metrics_csv(r, p.scalar_names, dir / "metrics.csv");
    Json s = run_summary(r);
    s["ensemble_seed"] = seed;
    s["seconds"] = seconds;
    {
        auto os = detail::open_out(dir / "summary.json");
        os << s.dump(2) << '\n';
    }
    if (!cfg.snapshots || !p.eit || r.means.empty()) return;
    const int ns = r.n_star;
    for (int n : {0, (ns + 1) / 2, ns}) {
        const Vector& u = r.means[static_cast<std::size_t>(n)];
        const std::string tag = "n" + std::to_string(n);
        const GridField k = conductivity(u, cfg.param);
        const GridField aux = auxiliary_field(u, cfg.param);
        write_grid_binary(k, dir / ("kappa_" + tag + ".grd"));
        write_grid_csv(k, dir / ("kappa_" + tag + ".csv"));
        const std::string aux_name = cfg.param.kind == ParamKind::p1 ? "logkappa_" : "levelset_";
        write_grid_binary(aux, dir / (aux_name + tag + ".grd"));
        write_grid_csv(aux, dir / (aux_name + tag + ".csv"));
    }
}

RunResult run_prepared(Prepared& p, const ExperimentConfig& cfg, const Json& resolved,
                       std::uint64_t seed, const std::filesystem::path& dir, bool keep_means) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(seed);
    const Ensemble init = p.prior(rng);
    const bool want_means = keep_means || (!dir.empty() && cfg.snapshots);
    RunResult r = run_eki(*p.problem, init, cfg.controller, cfg.perturb, rng, want_means);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!dir.empty()) write_run_files(p, cfg, resolved, seed, r, dir, secs);
    if (!r.failure.empty()) throw NumericalError("run aborted: " + r.failure);
    return r;
}

Json stats_json(const std::vector<RunResult>& runs) {
    std::vector<double> n, e, e0, d1, d2, d3;
    for (const auto& r : runs) {
        n.push_back(r.n_star);
        e.push_back(r.final_error());
        e0.push_back(r.prior_error());
        d1.push_back(r.dm1.back());
        d2.push_back(r.dm2.back());
        d3.push_back(r.dm3.back());
    }
    auto ms = [](const std::vector<double>& v) {
        const MeanSd m = mean_sd(v);
        return Json{{"mean", m.mean}, {"sd", m.sd}};
    };
    return Json{{"runs", runs.size()},   {"n_star", ms(n)}, {"final_error", ms(e)},
                {"prior_error", ms(e0)}, {"dm1", ms(d1)},   {"dm2", ms(d2)},
                {"dm3", ms(d3)}};
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const Json& resolved, std::uint64_t seed,
                         const std::filesystem::path& out_dir) {
    Prepared p = prepare(cfg);
    if (!out_dir.empty()) write_experiment_files(p, out_dir);
    return run_prepared(p, cfg, resolved, seed, out_dir, false);
}

RepeatSummary repeat_experiment(const ExperimentConfig& cfg, const Json& resolved,
                                const std::filesystem::path& out_dir, bool keep_means) {
    Prepared p = prepare(cfg);
    if (!out_dir.empty()) write_experiment_files(p, out_dir);
    RepeatSummary s;
    Json per_run = Json::array();
    for (int r = 0; r < cfg.repeats; ++r) {
        const std::uint64_t seed = cfg.ensemble_seed + static_cast<std::uint64_t>(r);
        char name[32];
        std::snprintf(name, sizeof name, "run_%03d", r);
        const auto dir = out_dir.empty() ? std::filesystem::path{} : out_dir / name;
        s.runs.push_back(run_prepared(p, cfg, resolved, seed, dir, keep_means));
        Json j = run_summary(s.runs.back());
        j["ensemble_seed"] = seed;
        per_run.push_back(j);
    }
    s.json = stats_json(s.runs);
    s.json["experiment"] = cfg.experiment;
    s.json["controller"] = to_string(cfg.controller.kind);
    s.json["ensemble_size"] = cfg.ensemble_size;
    s.json["per_run"] = per_run;
    if (!out_dir.empty()) {
        auto os = detail::open_out(out_dir / "repeat_summary.json");
        os << s.json.dump(2) << '\n';
    }
    return s;
}

Json compare_controllers(const ExperimentConfig& cfg, const Json& resolved, double lm_rho,
                         const std::filesystem::path& out_dir) {
    Prepared p = prepare(cfg);
    if (!out_dir.empty()) write_experiment_files(p, out_dir);
    ExperimentConfig dmc = cfg, lm = cfg;
    dmc.controller.kind = ControllerKind::dmc;
    lm.controller.kind = ControllerKind::lm;
    lm.controller.lm = LMConfig(lm_rho, 0.0, cfg.controller.lm.alpha0, cfg.controller.lm.growth,
                                cfg.controller.lm.max_doublings, cfg.controller.lm.sum_stop);
    Json resolved_lm = resolved;
    resolved_lm["controller"]["lm"]["rho"] = lm_rho;
    resolved_lm["controller"]["lm"]["tau"] = lm.controller.lm.tau;

    std::vector<RunResult> a, b;
    Json pairs = Json::array();
    for (int r = 0; r < cfg.repeats; ++r) {
        const std::uint64_t seed = cfg.ensemble_seed + static_cast<std::uint64_t>(r);
        char name[32];
        std::snprintf(name, sizeof name, "run_%03d", r);
        const auto da = out_dir.empty() ? std::filesystem::path{} : out_dir / "dmc" / name;
        const auto db = out_dir.empty() ? std::filesystem::path{} : out_dir / "lm" / name;
        a.push_back(run_prepared(p, dmc, resolved, seed, da, false));
        b.push_back(run_prepared(p, lm, resolved_lm, seed, db, false));
        pairs.push_back({{"ensemble_seed", seed},
                         {"dmc_n_star", a.back().n_star},
                         {"lm_n_star", b.back().n_star},
                         {"dmc_final_error", a.back().final_error()},
                         {"lm_final_error", b.back().final_error()},
                         {"dmc_final_dm1", a.back().dm1.back()},
                         {"lm_final_dm1", b.back().dm1.back()}});
    }
    Json out{{"experiment", cfg.experiment},
             {"ensemble_size", cfg.ensemble_size},
             {"lm_rho", lm_rho},
             {"lm_tau", lm.controller.lm.tau},
             {"dmc", stats_json(a)},
             {"lm", stats_json(b)},
             {"pairs", pairs}};
    if (!out_dir.empty()) {
        auto os = detail::open_out(out_dir / "compare_summary.json");
        os << out.dump(2) << '\n';
    }
    return out;
}

} // namespace eki
