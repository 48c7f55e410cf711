#pragma once

#include "eki/cem.hpp"
#include "eki/level_set.hpp"

#include <memory>
#include <string>
#include <vector>

namespace eki {

enum class ParamKind { p1, p2 };
ParamKind parse_param_kind(const std::string& s);

// Everything needed to turn a particle into a conductivity grid.
struct ParamSpec {
    ParamKind kind = ParamKind::p1;
    GridField geom = GridField::square(100);
    WMOptions wm;
    P1Fixed p1;
    P1Bounds p1_bounds;
    P2Fixed p2;
    P2Bounds p2_bounds;

    std::size_t num_scalars() const { return kind == ParamKind::p1 ? kP1Scalars : kP2Scalars; }
    std::size_t dim() const { return num_scalars() + geom.size(); }
    std::vector<std::string> scalar_names() const;
};

GridField conductivity(const Vector& u, const ParamSpec& s);
// log kappa for P1, the level-set function f for P2.
GridField auxiliary_field(const Vector& u, const ParamSpec& s);
void clamp_particle(Eigen::Ref<Vector> u, const ParamSpec& s);
Ensemble sample_prior(std::size_t J, Rng& rng, const ParamSpec& s);

// Bilinear sampling of a grid at mesh element centroids, weights precomputed.
class GridToMesh {
public:
    GridToMesh(const GridField& geom, const DiscMesh& mesh);
    Vector apply(const GridField& g, double floor = 0.0) const;

private:
    std::size_t cells_ = 0;
    std::vector<std::array<int, 4>> idx_;
    std::vector<std::array<double, 4>> w_;
};

inline constexpr double kKappaFloor = 1e-6;

// G = F o P: particle -> all electrode voltages for every current pattern.
class EitForward {
public:
    EitForward(ParamSpec spec, std::shared_ptr<const CEMModel> cem, Matrix patterns);

    const ParamSpec& spec() const { return spec_; }
    const CEMModel& cem() const { return *cem_; }
    const Matrix& patterns() const { return patterns_; }
    std::size_t data_dim() const {
        return static_cast<std::size_t>(patterns_.rows() * patterns_.cols());
    }

    Vector element_conductivity(const GridField& kappa) const;
    Vector evaluate(const Vector& u, CEMModel::Workspace& ws) const;
    Vector evaluate_elements(const Vector& kappa_elem, CEMModel::Workspace& ws) const;

private:
    ParamSpec spec_;
    std::shared_ptr<const CEMModel> cem_;
    Matrix patterns_;
    GridToMesh interp_;
};

} // namespace eki
