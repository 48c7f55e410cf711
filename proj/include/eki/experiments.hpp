#pragma once

#include "eki/config.hpp"
#include "eki/forward_map.hpp"
#include "eki/schedules.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace eki {

// What the EKI loop needs from a forward model.
class InverseProblem {
public:
    virtual ~InverseProblem() = default;
    virtual std::size_t dim() const = 0;
    virtual std::size_t num_scalars() const = 0;
    virtual const Observation& observation() const = 0;
    // Row j = G(column j of U).
    virtual Matrix evaluate(const Matrix& U) = 0;
    virtual Vector evaluate_one(const Vector& u) = 0;
    virtual void project(Eigen::Ref<Vector> u) const = 0;
    // Relative L2 error of the estimate P(ubar); NaN when no truth exists.
    virtual double relative_error(const Vector& ubar) const = 0;
};

// Conductivity sampled at element centroids and element areas.
struct MeshField {
    Vector values;
    Vector areas;
};

double relative_l2_error(const Vector& estimate, const MeshField& truth);

// Noise variances gamma_m = (rel |v_m|)^2 + (floor (max v - min v))^2.
Vector noise_variances(const Vector& clean, double rel, double floor);
Observation generate_data(const Vector& clean, double rel, double floor, Rng& rng);

struct EitSetup {
    ExperimentConfig cfg;
    std::shared_ptr<const CEMModel> data_cem;
    std::shared_ptr<const CEMModel> inv_cem;
    Vector clean;  // noise-free data on the data mesh
    Observation obs;
    MeshField truth_inv;  // truth on the inversion mesh
};

std::function<double(double, double)> truth_function(const ExperimentConfig& cfg);
MeshField sample_on_mesh(const std::function<double(double, double)>& f, const DiscMesh& m);
EitSetup build_eit_setup(const ExperimentConfig& cfg);

class EitProblem : public InverseProblem {
public:
    EitProblem(const EitSetup& setup, unsigned jobs);
    std::size_t dim() const override { return fwd_.spec().dim(); }
    std::size_t num_scalars() const override { return fwd_.spec().num_scalars(); }
    const Observation& observation() const override { return obs_; }
    Matrix evaluate(const Matrix& U) override;
    Vector evaluate_one(const Vector& u) override;
    void project(Eigen::Ref<Vector> u) const override;
    double relative_error(const Vector& ubar) const override;

    const EitForward& forward() const { return fwd_; }
    Vector estimate_on_mesh(const Vector& ubar) const;

private:
    EitForward fwd_;
    Observation obs_;
    MeshField truth_;
    unsigned jobs_;
    std::vector<std::unique_ptr<CEMModel::Workspace>> ws_;
};

// G(u) = H u. The optional reference is what relative_error compares against.
class LinearProblem : public InverseProblem {
public:
    LinearProblem(Matrix H, Observation obs, std::optional<Vector> reference = std::nullopt);
    std::size_t dim() const override { return static_cast<std::size_t>(H_.cols()); }
    std::size_t num_scalars() const override { return dim(); }
    const Observation& observation() const override { return obs_; }
    Matrix evaluate(const Matrix& U) override { return (H_ * U).transpose(); }
    Vector evaluate_one(const Vector& u) override { return H_ * u; }
    void project(Eigen::Ref<Vector>) const override {}
    double relative_error(const Vector& ubar) const override;

private:
    Matrix H_;
    Observation obs_;
    std::optional<Vector> ref_;
};

struct RunResult {
    std::string controller;
    int n_star = 0;
    bool converged = false;
    std::string failure;  // non-empty when the run aborted
    // One entry per ensemble n = 0..n_star; alpha_inv[n] is the step taken
    // from n (0 on the last row).
    std::vector<double> alpha_inv, t, phi_mean, phi_var, dm1, dm2, dm3, error;
    Matrix scalar_means;  // (n_star+1) x num_scalars
    std::vector<Vector> means;
    Ensemble final_ensemble;

    double final_error() const { return error.empty() ? 0.0 : error.back(); }
    double prior_error() const { return error.empty() ? 0.0 : error.front(); }
};

RunResult run_eki(InverseProblem& problem, const Ensemble& initial, const ControllerConfig& ctl,
                  PerturbMode mode, Rng& rng, bool keep_means = true);

// Schedule CSV: n, alpha_inv, t, phi_mean, phi_var, dm1, dm2, dm3.
void write_schedule_csv(const RunResult& r, const std::filesystem::path& p);
void write_metrics_csv(const RunResult& r, const std::vector<std::string>& scalar_names,
                       const std::filesystem::path& p);
Json run_summary(const RunResult& r);

// One EKI run of an experiment with the given ensemble seed.
RunResult run_experiment(const ExperimentConfig& cfg, const Json& resolved, std::uint64_t seed,
                         const std::filesystem::path& out_dir);

struct RepeatSummary {
    std::vector<RunResult> runs;
    Json json;
};

// Seeds ensemble_seed + r for r = 0..repeats-1, shared data.
RepeatSummary repeat_experiment(const ExperimentConfig& cfg, const Json& resolved,
                                const std::filesystem::path& out_dir, bool keep_means = false);

// DMC and LM on identical initial ensembles.
Json compare_controllers(const ExperimentConfig& cfg, const Json& resolved, double lm_rho,
                         const std::filesystem::path& out_dir);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};
MeanSd mean_sd(const std::vector<double>& v);

} // namespace eki
