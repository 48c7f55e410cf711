#pragma once

// Experiment configuration. Files are JSON objects layered over a complete
// default object; every key in a file or override must already exist there.

#include "eki/ensemble.hpp"
#include "eki/forward_map.hpp"
#include "eki/schedules.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace eki {

using Json = nlohmann::json;

Json default_config();

// Recursively copies `layer` onto `base`; unknown keys and type changes throw.
void merge_strict(Json& base, const Json& layer, const std::string& path = "");

Json load_config(const std::filesystem::path& p);

// "a.b.c=value"; value is parsed as JSON when possible, otherwise as a string.
void apply_override(Json& cfg, const std::string& assignment);

struct Bump {
    double amp, cx, cy, sx, sy;
};

struct Ellipse {
    double cx, cy, rx, ry;
    bool contains(double x, double y) const;
};

struct Exp1Truth {
    double background = 0.25;
    std::vector<Bump> bumps;
    double operator()(double x, double y) const;
};

struct Exp2Truth {
    double kappa_b = 0.125, kappa_l = 0.025, kappa_h = 1.0;
    std::vector<Ellipse> low, high;
    double operator()(double x, double y) const;
};

// One-dimensional linear-Gaussian problem: prior N(m0, c0), G(u) = g u.
struct ToyConfig {
    double prior_mean = 0.0;
    double prior_var = 1.0;
    double g = 1.0;
    double gamma = 1.0;
    double y = 2.0;
};

enum class ControllerKind { dmc, lm, esmda };
ControllerKind parse_controller(const std::string& s);
std::string to_string(ControllerKind k);

struct ControllerConfig {
    ControllerKind kind = ControllerKind::dmc;
    LMConfig lm;
    int esmda_steps = 10;
    int max_iterations = 200;
};

struct ExperimentConfig {
    std::string experiment = "exp1";
    ParamSpec param;
    std::size_t ensemble_size = 200;
    PerturbMode perturb = PerturbMode::per_particle;
    ControllerConfig controller;
    int data_elements = 9216;
    int inversion_elements = 7744;
    int electrodes = 16;
    double coverage = 0.5;
    double contact_impedance = 0.01;
    double current = 0.1;
    double noise_relative = 0.01;
    double noise_floor = 0.001;
    Exp1Truth truth1;
    Exp2Truth truth2;
    ToyConfig toy;
    std::uint64_t data_seed = 0;
    std::uint64_t ensemble_seed = 0;
    int repeats = 1;
    std::string output_dir;
    bool snapshots = true;
    int jobs = 0;

    void validate() const;
};

ExperimentConfig parse_experiment(const Json& cfg);

} // namespace eki
