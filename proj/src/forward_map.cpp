#include "eki/forward_map.hpp"

#include <algorithm>
#include <cmath>

namespace eki {

ParamKind parse_param_kind(const std::string& s) {
    if (s == "p1") return ParamKind::p1;
    if (s == "p2") return ParamKind::p2;
    throw ConfigError("unknown parameterisation: " + s);
}

std::vector<std::string> ParamSpec::scalar_names() const {
    if (kind == ParamKind::p1) return {"lambda", "l1", "l2"};
    return {"kappa_l", "kappa_b", "kappa_h", "l1f", "l2f"};
}

GridField conductivity(const Vector& u, const ParamSpec& s) {
    return s.kind == ParamKind::p1 ? p1(u, s.p1, s.geom, s.wm) : p2(u, s.p2, s.geom, s.wm);
}

GridField auxiliary_field(const Vector& u, const ParamSpec& s) {
    if (s.kind == ParamKind::p2) return level_set_function(u, s.p2, s.geom, s.wm);
    GridField f = p1_log_field(u, s.p1, s.geom, s.wm);
    f.values.array() += std::log(u[0]);
    return f;
}

void clamp_particle(Eigen::Ref<Vector> u, const ParamSpec& s) {
    if (s.kind == ParamKind::p1)
        p1_clamp(u, s.p1_bounds);
    else
        p2_clamp(u, s.p2_bounds);
}

Ensemble sample_prior(std::size_t J, Rng& rng, const ParamSpec& s) {
    return s.kind == ParamKind::p1 ? sample_p1_prior(J, rng, s.p1_bounds, s.geom.size())
                                   : sample_p2_prior(J, rng, s.p2_bounds, s.geom.size());
}

GridToMesh::GridToMesh(const GridField& geom, const DiscMesh& mesh) : cells_(geom.size()) {
    const std::size_t T = mesh.num_triangles();
    idx_.resize(T);
    w_.resize(T);
    auto bracket = [](double p, double origin, double h, std::size_t n) {
        const double s = (p - origin) / h - 0.5;
        if (s <= 0.0) return std::pair<std::size_t, double>{0, 0.0};
        if (s >= static_cast<double>(n - 1)) return std::pair<std::size_t, double>{n - 2, 1.0};
        const std::size_t lo = std::min(static_cast<std::size_t>(s), n - 2);
        return std::pair<std::size_t, double>{lo, s - static_cast<double>(lo)};
    };
    for (std::size_t t = 0; t < T; ++t) {
        const auto c = mesh.centroid(t);
        const auto [i, wx] = bracket(c[0], geom.x0, geom.h1, geom.n1);
        const auto [j, wy] = bracket(c[1], geom.y0, geom.h2, geom.n2);
        const auto base = static_cast<int>(i + geom.n1 * j);
        const auto n1 = static_cast<int>(geom.n1);
        idx_[t] = {base, base + 1, base + n1, base + n1 + 1};
        w_[t] = {(1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy};
    }
}

Vector GridToMesh::apply(const GridField& g, double floor) const {
    require(g.size() == cells_, "grid does not match the interpolation table");
    Vector out(static_cast<Eigen::Index>(idx_.size()));
    for (std::size_t t = 0; t < idx_.size(); ++t) {
        double v = 0.0;
        for (int q = 0; q < 4; ++q)
            v += w_[t][static_cast<std::size_t>(q)] * g.values[idx_[t][static_cast<std::size_t>(q)]];
        out[static_cast<Eigen::Index>(t)] = std::max(v, floor);
    }
    return out;
}

EitForward::EitForward(ParamSpec spec, std::shared_ptr<const CEMModel> cem, Matrix patterns)
    : spec_(std::move(spec)), cem_(std::move(cem)), patterns_(std::move(patterns)),
      interp_(spec_.geom, cem_->mesh()) {
    require(patterns_.rows() == cem_->layout().count, "pattern length must equal electrode count");
}

Vector EitForward::element_conductivity(const GridField& kappa) const {
    return interp_.apply(kappa, kKappaFloor);
}

Vector EitForward::evaluate_elements(const Vector& kappa_elem, CEMModel::Workspace& ws) const {
    return measurement_vector(cem_->solve(kappa_elem, patterns_, ws));
}

Vector EitForward::evaluate(const Vector& u, CEMModel::Workspace& ws) const {
    require(static_cast<std::size_t>(u.size()) == spec_.dim(), "particle dimension mismatch");
    return evaluate_elements(element_conductivity(conductivity(u, spec_)), ws);
}

} // namespace eki
