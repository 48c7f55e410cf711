// eki: command-line front end for the EKI experiments and validation suites.

#include "eki/experiments.hpp"
#include "eki/validation.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> jobs;
};

void add_common(CLI::App* sub, Common& c, bool with_seed) {
    sub->add_option("-c,--config", c.config, "JSON config layered over the defaults");
    sub->add_option("-s,--set", c.overrides, "Override a key, e.g. ensemble.size=100")
        ->take_all();
    sub->add_option("-o,--out", c.out, "Output directory");
    sub->add_option("-j,--jobs", c.jobs, "Concurrent forward evaluations (0 = all cores)");
    if (with_seed) sub->add_option("--seed", c.seed, "Ensemble seed");
}

eki::Json resolve(const Common& c) {
    eki::Json cfg = eki::default_config();
    if (!c.config.empty()) eki::merge_strict(cfg, eki::load_config(c.config));
    for (const auto& o : c.overrides) eki::apply_override(cfg, o);
    if (c.seed) cfg["seeds"]["ensemble"] = *c.seed;
    if (c.jobs) cfg["jobs"] = *c.jobs;
    return cfg;
}

// --out, then output.dir, then $EKI_OUTPUT_ROOT/<experiment>, then ./results.
std::filesystem::path output_dir(const Common& c, const eki::Json& cfg, const std::string& leaf) {
    if (!c.out.empty()) return c.out;
    const std::string dir = cfg["output"]["dir"].get<std::string>();
    if (!dir.empty()) return dir;
    const char* root = std::getenv("EKI_OUTPUT_ROOT");
    std::filesystem::path base = root && *root ? root : "results";
    return base / (cfg["experiment"].get<std::string>() + "_" + leaf);
}

void emit(const eki::Json& report, const std::string& out) {
    std::cout << report.dump(2) << '\n';
    if (!out.empty()) {
        std::filesystem::create_directories(std::filesystem::path(out).parent_path().empty()
                                                ? std::filesystem::path(".")
                                                : std::filesystem::path(out).parent_path());
        std::ofstream(out) << report.dump(2) << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble Kalman inversion with adaptive regularisation"};
    app.require_subcommand(1);

    Common run_o, rep_o, cmp_o;
    auto* run = app.add_subcommand("run", "One EKI run");
    add_common(run, run_o, true);
    auto* rep = app.add_subcommand("repeat", "Repeated runs with consecutive ensemble seeds");
    add_common(rep, rep_o, true);
    auto* cmp = app.add_subcommand("compare", "DMC and LM on identical initial ensembles");
    add_common(cmp, cmp_o, true);
    double lm_rho = 0.8;
    cmp->add_option("--lm-rho", lm_rho, "LM rho in (0,1)");

    std::string field_out, cem_out, temp_out;
    eki::FieldSuiteOptions fopt;
    auto* vf = app.add_subcommand("validate-field", "Whittle-Matern field checks");
    vf->add_option("--samples", fopt.samples, "Monte Carlo samples");
    vf->add_option("--grid", fopt.grid, "Cells per side");
    vf->add_option("--seed", fopt.seed, "Sampling seed");
    vf->add_option("-o,--out", field_out, "Report path (JSON)");
    eki::CemSuiteOptions copt;
    auto* vc = app.add_subcommand("validate-cem", "Forward solver physics checks");
    vc->add_option("--rings", copt.rings, "Rings of the coarse mesh");
    vc->add_option("-o,--out", cem_out, "Report path (JSON)");
    auto* vt = app.add_subcommand("validate-tempering", "Tempering identities and step bound");
    vt->add_option("-o,--out", temp_out, "Report path (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (run->parsed()) {
            const eki::Json cfg = resolve(run_o);
            const auto ec = eki::parse_experiment(cfg);
            const auto dir = output_dir(run_o, cfg, "run");
            const auto r = eki::run_experiment(ec, cfg, ec.ensemble_seed, dir);
            std::cout << eki::run_summary(r).dump(2) << '\n' << "output: " << dir.string() << '\n';
        } else if (rep->parsed()) {
            const eki::Json cfg = resolve(rep_o);
            const auto ec = eki::parse_experiment(cfg);
            const auto dir = output_dir(rep_o, cfg, "repeat");
            auto s = eki::repeat_experiment(ec, cfg, dir);
            s.json.erase("per_run");
            std::cout << s.json.dump(2) << '\n' << "output: " << dir.string() << '\n';
        } else if (cmp->parsed()) {
            const eki::Json cfg = resolve(cmp_o);
            const auto ec = eki::parse_experiment(cfg);
            const auto dir = output_dir(cmp_o, cfg, "compare");
            eki::Json s = eki::compare_controllers(ec, cfg, lm_rho, dir);
            s.erase("pairs");
            std::cout << s.dump(2) << '\n' << "output: " << dir.string() << '\n';
        } else if (vf->parsed()) {
            const auto j = eki::field_suite(fopt);
            emit(j, field_out);
            return j["pass"].get<bool>() ? 0 : 2;
        } else if (vc->parsed()) {
            const auto j = eki::cem_suite(copt);
            emit(j, cem_out);
            return j["pass"].get<bool>() ? 0 : 2;
        } else if (vt->parsed()) {
            const auto j = eki::tempering_suite();
            emit(j, temp_out);
            return j["pass"].get<bool>() ? 0 : 2;
        }
    } catch (const eki::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const eki::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
