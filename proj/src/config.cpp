#include "eki/config.hpp"

#include "eki/detail/binary_io.hpp"

#include <cmath>
#include <fstream>

namespace eki {

Json default_config() {
    return Json::parse(R"({
  "experiment": "exp1",
  "parameterisation": "p1",
  "ensemble": {"size": 200, "perturb_mode": "per_particle"},
  "controller": {
    "type": "dmc",
    "max_iterations": 200,
    "lm": {"rho": 0.8, "tau": 0.0, "alpha0": 1.0, "growth": 2.0, "max_doublings": 60,
           "sum_stop": false},
    "esmda": {"steps": 10}
  },
  "grid": {"n": 100},
  "mesh": {"data_elements": 9216, "inversion_elements": 7744},
  "cem": {"electrodes": 16, "coverage": 0.5, "contact_impedance": 0.01, "current": 0.1},
  "wm": {"constant": "sqrt", "solver": "spectral", "lanczos_tol": 1e-8,
         "lanczos_max_iter": 5000},
  "p1": {"nu": 3.0, "sigma": 1.5, "zeta_r": 16.0, "lambda": [0.005, 1.0],
         "lengthscale": [0.15, 0.6]},
  "p2": {"nu_f": 2.0, "sigma_f": 0.5, "lambda_f": 1.0, "zeta_r": 11.5, "zeta1": -0.5,
         "zeta2": 0.5, "kappa_l": [0.015, 0.075], "kappa_b": [0.1, 0.4],
         "kappa_h": [0.65, 1.1], "lengthscale": [0.15, 0.6]},
  "noise": {"relative": 0.01, "floor": 0.001},
  "truth": {
    "exp1": {
      "background": 0.25,
      "bumps": [
        {"amp": -1.2, "cx": -0.4, "cy": 0.0, "sx": 0.15, "sy": 0.4},
        {"amp": -1.2, "cx": 0.2, "cy": -0.1, "sx": 0.12, "sy": 0.35},
        {"amp": 1.0, "cx": 0.35, "cy": 0.5, "sx": 0.2, "sy": 0.2}
      ]
    },
    "exp2": {
      "kappa_b": 0.125, "kappa_l": 0.025, "kappa_h": 1.0,
      "low": [
        {"cx": -0.45, "cy": 0.0, "rx": 0.15, "ry": 0.45},
        {"cx": 0.15, "cy": -0.1, "rx": 0.12, "ry": 0.4}
      ],
      "high": [
        {"cx": 0.5, "cy": 0.5, "rx": 0.22, "ry": 0.18}
      ]
    }
  },
  "toy": {"prior_mean": 0.0, "prior_var": 1.0, "g": 1.0, "gamma": 1.0, "y": 2.0},
  "seeds": {"data": 20240611, "ensemble": 1000},
  "repeat": {"count": 10},
  "output": {"dir": "", "snapshots": true},
  "jobs": 0
})");
}

namespace {

bool compatible(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

} // namespace

void merge_strict(Json& base, const Json& layer, const std::string& path) {
    require(layer.is_object(), "configuration layer at '" + path + "' must be an object");
    for (auto it = layer.begin(); it != layer.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        require(base.contains(it.key()), "unknown configuration key: " + key);
        Json& slot = base[it.key()];
        if (slot.is_object()) {
            merge_strict(slot, it.value(), key);
        } else {
            require(compatible(slot, it.value()), "type mismatch for configuration key: " + key);
            slot = it.value();
        }
    }
}

Json load_config(const std::filesystem::path& p) {
    auto is = detail::open_in(p);
    Json layer;
    try {
        layer = Json::parse(is, nullptr, true, true);
    } catch (const Json::exception& e) {
        throw ConfigError("cannot parse " + p.string() + ": " + e.what());
    }
    Json cfg = default_config();
    merge_strict(cfg, layer);
    return cfg;
}

void apply_override(Json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, "override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::exception&) {
        value = text;
    }
    Json layer = value;
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t pos; (pos = rest.find('.')) != std::string::npos;) {
        parts.push_back(rest.substr(0, pos));
        rest = rest.substr(pos + 1);
    }
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        require(!it->empty(), "empty path component in override: " + key);
        layer = Json{{*it, layer}};
    }
    merge_strict(cfg, layer);
}

bool Ellipse::contains(double x, double y) const {
    const double a = (x - cx) / rx, b = (y - cy) / ry;
    return a * a + b * b <= 1.0;
}

double Exp1Truth::operator()(double x, double y) const {
    double s = std::log(background);
    for (const Bump& b : bumps) {
        const double dx = (x - b.cx) / b.sx, dy = (y - b.cy) / b.sy;
        s += b.amp * std::exp(-0.5 * (dx * dx + dy * dy));
    }
    return std::exp(s);
}

double Exp2Truth::operator()(double x, double y) const {
    for (const Ellipse& e : high)
        if (e.contains(x, y)) return kappa_h;
    for (const Ellipse& e : low)
        if (e.contains(x, y)) return kappa_l;
    return kappa_b;
}

ControllerKind parse_controller(const std::string& s) {
    if (s == "dmc") return ControllerKind::dmc;
    if (s == "lm") return ControllerKind::lm;
    if (s == "esmda") return ControllerKind::esmda;
    throw ConfigError("unknown controller: " + s);
}

std::string to_string(ControllerKind k) {
    switch (k) {
    case ControllerKind::dmc: return "dmc";
    case ControllerKind::lm: return "lm";
    case ControllerKind::esmda: return "esmda";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    require(experiment == "exp1" || experiment == "exp2" || experiment == "toy",
            "experiment must be exp1, exp2 or toy");
    require(ensemble_size >= 2, "ensemble size must be at least 2");
    require(repeats >= 1, "repeat count must be at least 1");
    require(controller.max_iterations >= 1, "max_iterations must be positive");
    require(controller.esmda_steps >= 1, "ES-MDA needs at least one step");
    controller.lm.validate();
    if (experiment != "toy") {
        const int rd = static_cast<int>(std::lround(std::sqrt(data_elements / 6.0)));
        const int ri = static_cast<int>(std::lround(std::sqrt(inversion_elements / 6.0)));
        require(rd != ri, "data and inversion meshes must differ (inverse crime guard)");
        require(noise_relative >= 0.0 && noise_floor >= 0.0, "noise factors must be nonnegative");
    }
}

namespace {

Interval interval(const Json& j, const std::string& name) {
    require(j.is_array() && j.size() == 2, name + " must be a two-element interval");
    Interval iv{j[0].get<double>(), j[1].get<double>()};
    require(iv.lo < iv.hi, name + " must be a nonempty interval");
    return iv;
}

} // namespace

ExperimentConfig parse_experiment(const Json& c) {
    try {
        ExperimentConfig e;
        e.experiment = c.at("experiment").get<std::string>();
        e.param.kind = parse_param_kind(c.at("parameterisation").get<std::string>());
        e.param.geom = GridField::square(c.at("grid").at("n").get<std::size_t>());

        const Json& w = c.at("wm");
        e.param.wm.constant = parse_wm_constant(w.at("constant").get<std::string>());
        e.param.wm.solver = parse_wm_solver(w.at("solver").get<std::string>());
        e.param.wm.lanczos_tol = w.at("lanczos_tol").get<double>();
        e.param.wm.lanczos_max_iter = w.at("lanczos_max_iter").get<int>();

        const Json& p1 = c.at("p1");
        e.param.p1.nu = p1.at("nu").get<double>();
        e.param.p1.sigma = p1.at("sigma").get<double>();
        e.param.p1.zeta_r = p1.at("zeta_r").get<double>();
        const Interval lam = interval(p1.at("lambda"), "p1.lambda");
        const Interval len = interval(p1.at("lengthscale"), "p1.lengthscale");
        e.param.p1_bounds = {lam.lo, lam.hi, len.lo, len.hi};

        const Json& p2 = c.at("p2");
        e.param.p2.nu_f = p2.at("nu_f").get<double>();
        e.param.p2.sigma_f = p2.at("sigma_f").get<double>();
        e.param.p2.lambda_f = p2.at("lambda_f").get<double>();
        e.param.p2.zeta_r = p2.at("zeta_r").get<double>();
        e.param.p2.zeta1 = p2.at("zeta1").get<double>();
        e.param.p2.zeta2 = p2.at("zeta2").get<double>();
        e.param.p2.validate();
        e.param.p2_bounds.kappa_l = interval(p2.at("kappa_l"), "p2.kappa_l");
        e.param.p2_bounds.kappa_b = interval(p2.at("kappa_b"), "p2.kappa_b");
        e.param.p2_bounds.kappa_h = interval(p2.at("kappa_h"), "p2.kappa_h");
        e.param.p2_bounds.l = interval(p2.at("lengthscale"), "p2.lengthscale");

        e.ensemble_size = c.at("ensemble").at("size").get<std::size_t>();
        e.perturb = parse_perturb_mode(c.at("ensemble").at("perturb_mode").get<std::string>());

        const Json& ctl = c.at("controller");
        e.controller.kind = parse_controller(ctl.at("type").get<std::string>());
        e.controller.max_iterations = ctl.at("max_iterations").get<int>();
        const Json& lm = ctl.at("lm");
        e.controller.lm = LMConfig(lm.at("rho").get<double>(), lm.at("tau").get<double>(),
                                   lm.at("alpha0").get<double>(), lm.at("growth").get<double>(),
                                   lm.at("max_doublings").get<int>(), lm.at("sum_stop").get<bool>());
        e.controller.esmda_steps = ctl.at("esmda").at("steps").get<int>();

        e.data_elements = c.at("mesh").at("data_elements").get<int>();
        e.inversion_elements = c.at("mesh").at("inversion_elements").get<int>();
        const Json& cem = c.at("cem");
        e.electrodes = cem.at("electrodes").get<int>();
        e.coverage = cem.at("coverage").get<double>();
        e.contact_impedance = cem.at("contact_impedance").get<double>();
        e.current = cem.at("current").get<double>();
        e.noise_relative = c.at("noise").at("relative").get<double>();
        e.noise_floor = c.at("noise").at("floor").get<double>();

        const Json& t1 = c.at("truth").at("exp1");
        e.truth1.background = t1.at("background").get<double>();
        require(e.truth1.background > 0.0, "exp1 background must be positive");
        for (const Json& b : t1.at("bumps"))
            e.truth1.bumps.push_back({b.at("amp").get<double>(), b.at("cx").get<double>(),
                                      b.at("cy").get<double>(), b.at("sx").get<double>(),
                                      b.at("sy").get<double>()});
        const Json& t2 = c.at("truth").at("exp2");
        e.truth2.kappa_b = t2.at("kappa_b").get<double>();
        e.truth2.kappa_l = t2.at("kappa_l").get<double>();
        e.truth2.kappa_h = t2.at("kappa_h").get<double>();
        auto ellipses = [](const Json& arr) {
            std::vector<Ellipse> v;
            for (const Json& x : arr)
                v.push_back({x.at("cx").get<double>(), x.at("cy").get<double>(),
                             x.at("rx").get<double>(), x.at("ry").get<double>()});
            return v;
        };
        e.truth2.low = ellipses(t2.at("low"));
        e.truth2.high = ellipses(t2.at("high"));

        const Json& toy = c.at("toy");
        e.toy = {toy.at("prior_mean").get<double>(), toy.at("prior_var").get<double>(),
                 toy.at("g").get<double>(), toy.at("gamma").get<double>(),
                 toy.at("y").get<double>()};

        e.data_seed = c.at("seeds").at("data").get<std::uint64_t>();
        e.ensemble_seed = c.at("seeds").at("ensemble").get<std::uint64_t>();
        e.repeats = c.at("repeat").at("count").get<int>();
        e.output_dir = c.at("output").at("dir").get<std::string>();
        e.snapshots = c.at("output").at("snapshots").get<bool>();
        e.jobs = c.at("jobs").get<int>();
        e.validate();
        return e;
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("invalid configuration: ") + ex.what());
    }
}

} // namespace eki
