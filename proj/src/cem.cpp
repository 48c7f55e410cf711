#include "eki/cem.hpp"


#include <cmath>
#include <numbers>

namespace eki {

ElectrodeLayout ElectrodeLayout::uniform(int count, double coverage, double z) {
    ElectrodeLayout l;
    l.count = count;
    l.coverage = coverage;
    l.z = Vector::Constant(count, z);
    l.validate();
    return l;
}

void ElectrodeLayout::validate() const {
    require(count >= 2, "need at least two electrodes");
    require(coverage > 0.0 && coverage < 1.0, "electrode coverage must lie in (0,1)");
    require(z.size() == count, "one contact impedance per electrode required");
    require((z.array() > 0.0).all(), "contact impedances must be positive");
}

double ElectrodeLayout::centre(int k) const { return 2.0 * std::numbers::pi * k / count; }

double ElectrodeLayout::half_width() const { return coverage * std::numbers::pi / count; }

Matrix adjacent_patterns(int electrodes, double current) {
    require(electrodes >= 2, "need at least two electrodes");
    Matrix I = Matrix::Zero(electrodes, electrodes);
    for (int p = 0; p < electrodes; ++p) {
        I(p, p) += current;
        I((p + 1) % electrodes, p) -= current;
    }
    return I;
}

CEMModel::CEMModel(DiscMesh mesh, ElectrodeLayout layout)
    : mesh_(std::move(mesh)), layout_(std::move(layout)) {
    mesh_.validate();
    layout_.validate();
    const std::size_t T = mesh_.num_triangles();
    grads_.resize(T);
    areas_.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto& tri = mesh_.triangles[t];
        const auto& p1 = mesh_.nodes[static_cast<std::size_t>(tri[0])];
        const auto& p2 = mesh_.nodes[static_cast<std::size_t>(tri[1])];
        const auto& p3 = mesh_.nodes[static_cast<std::size_t>(tri[2])];
        const double two_a = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
        areas_[t] = 0.5 * two_a;
        grads_[t] = {(p2[1] - p3[1]) / two_a, (p3[0] - p2[0]) / two_a,
                     (p3[1] - p1[1]) / two_a, (p1[0] - p3[0]) / two_a,
                     (p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a};
    }
    build_electrodes();
    build_pattern();
}

CEMModel::~CEMModel() = default;

std::size_t CEMModel::num_unknowns() const {
    return mesh_.num_nodes() + static_cast<std::size_t>(layout_.count) - 1;
}

void CEMModel::build_electrodes() {
    const double two_pi = 2.0 * std::numbers::pi;
    const std::size_t nb = mesh_.boundary.size();
    edges_.assign(static_cast<std::size_t>(layout_.count), {});
    elen_ = Vector::Zero(layout_.count);
    const double w = layout_.half_width();
    for (std::size_t e = 0; e < nb; ++e) {
        const int a = mesh_.boundary[e];
        const int b = mesh_.boundary[(e + 1) % nb];
        const double ta = mesh_.boundary_angle(e);
        double dt = mesh_.boundary_angle((e + 1) % nb) - ta;
        if (dt <= 0.0) dt += two_pi;
        const auto& pa = mesh_.nodes[static_cast<std::size_t>(a)];
        const auto& pb = mesh_.nodes[static_cast<std::size_t>(b)];
        const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
        for (int k = 0; k < layout_.count; ++k) {
            double phi = std::remainder(ta - layout_.centre(k), two_pi);
            const double lo = std::max(phi, -w), hi = std::min(phi + dt, w);
            if (lo >= hi) continue;
            // Linear edge parameter s in [0,1] along a -> b.
            const double s0 = (lo - phi) / dt, s1 = (hi - phi) / dt;
            auto cube = [](double x) { return x * x * x; };
            EdgeTerm term;
            term.a = a;
            term.b = b;
            term.maa = len * (cube(1 - s0) - cube(1 - s1)) / 3.0;
            term.mab = len * ((s1 * s1 - s0 * s0) / 2.0 - (cube(s1) - cube(s0)) / 3.0);
            term.mbb = len * (cube(s1) - cube(s0)) / 3.0;
            term.ia = len * ((s1 - s1 * s1 / 2.0) - (s0 - s0 * s0 / 2.0));
            term.ib = len * (s1 * s1 - s0 * s0) / 2.0;
            edges_[static_cast<std::size_t>(k)].push_back(term);
            elen_[k] += len * (s1 - s0);
        }
    }
    for (int k = 0; k < layout_.count; ++k)
        require(elen_[k] > 0.0, "electrode does not touch the mesh boundary");
}

void CEMModel::build_pattern() {
    const auto n = static_cast<int>(mesh_.num_nodes());
    const auto N = static_cast<Eigen::Index>(num_unknowns());
    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& tri : mesh_.triangles)
        for (int r : tri)
            for (int c : tri) trip.emplace_back(r, c, 0.0);

    // Electrode couplings with their constant values, accumulated separately.
    std::vector<Eigen::Triplet<double>> elec;
    for (int k = 0; k < layout_.count; ++k) {
        const double iz = 1.0 / layout_.z[k];
        const int ek = n + k - 1;  // grounded electrode 0 has no row
        for (const EdgeTerm& t : edges_[static_cast<std::size_t>(k)]) {
            elec.emplace_back(t.a, t.a, iz * t.maa);
            elec.emplace_back(t.b, t.b, iz * t.mbb);
            elec.emplace_back(t.a, t.b, iz * t.mab);
            elec.emplace_back(t.b, t.a, iz * t.mab);
            if (k > 0) {
                elec.emplace_back(t.a, ek, -iz * t.ia);
                elec.emplace_back(ek, t.a, -iz * t.ia);
                elec.emplace_back(t.b, ek, -iz * t.ib);
                elec.emplace_back(ek, t.b, -iz * t.ib);
            }
        }
        if (k > 0) elec.emplace_back(ek, ek, iz * elen_[k]);
    }
    for (const auto& e : elec) trip.emplace_back(e.row(), e.col(), 0.0);

    pattern_.resize(N, N);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();

    Eigen::SparseMatrix<double> tmp = pattern_;
    auto slot = [&](int r, int c) {
        return static_cast<int>(&tmp.coeffRef(r, c) - tmp.valuePtr());
    };
    elem_pos_.resize(mesh_.num_triangles());
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
        const auto& tri = mesh_.triangles[t];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) elem_pos_[t][static_cast<std::size_t>(3 * r + c)] = slot(tri[static_cast<std::size_t>(r)], tri[static_cast<std::size_t>(c)]);
    }
    constant_values_.assign(static_cast<std::size_t>(tmp.nonZeros()), 0.0);
    for (const auto& e : elec)
        constant_values_[static_cast<std::size_t>(slot(e.row(), e.col()))] += e.value();
}

std::unique_ptr<CEMModel::Workspace> CEMModel::make_workspace() const {
    auto ws = std::make_unique<Workspace>();
    ws->A = pattern_;
    return ws;
}

Eigen::SparseMatrix<double> CEMModel::assemble_full(const Vector& kappa_elem) const {
    require(static_cast<std::size_t>(kappa_elem.size()) == mesh_.num_triangles(),
            "one conductivity value per element required");
    const auto n = static_cast<int>(mesh_.num_nodes());
    const Eigen::Index N = n + layout_.count;
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
        const auto& g = grads_[t];
        const double s = kappa_elem[static_cast<Eigen::Index>(t)] * areas_[t];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                trip.emplace_back(mesh_.triangles[t][static_cast<std::size_t>(r)],
                                  mesh_.triangles[t][static_cast<std::size_t>(c)],
                                  s * (g[2 * r] * g[2 * c] + g[2 * r + 1] * g[2 * c + 1]));
    }
    for (int k = 0; k < layout_.count; ++k) {
        const double iz = 1.0 / layout_.z[k];
        const int ek = n + k;
        for (const EdgeTerm& t : edges_[static_cast<std::size_t>(k)]) {
            trip.emplace_back(t.a, t.a, iz * t.maa);
            trip.emplace_back(t.b, t.b, iz * t.mbb);
            trip.emplace_back(t.a, t.b, iz * t.mab);
            trip.emplace_back(t.b, t.a, iz * t.mab);
            trip.emplace_back(t.a, ek, -iz * t.ia);
            trip.emplace_back(ek, t.a, -iz * t.ia);
            trip.emplace_back(t.b, ek, -iz * t.ib);
            trip.emplace_back(ek, t.b, -iz * t.ib);
        }
        trip.emplace_back(ek, ek, iz * elen_[k]);
    }
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

CEMSolution CEMModel::solve(const Vector& kappa_elem, const Matrix& patterns, Workspace& ws,
                            bool keep_nodal) const {
    require(static_cast<std::size_t>(kappa_elem.size()) == mesh_.num_triangles(),
            "one conductivity value per element required");
    require(patterns.rows() == layout_.count, "current pattern length must equal electrode count");
    double* val = ws.A.valuePtr();
    std::copy(constant_values_.begin(), constant_values_.end(), val);
    for (std::size_t t = 0; t < mesh_.num_triangles(); ++t) {
        const auto& g = grads_[t];
        const double s = kappa_elem[static_cast<Eigen::Index>(t)] * areas_[t];
        const auto& pos = elem_pos_[t];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                val[pos[static_cast<std::size_t>(3 * r + c)]] +=
                    s * (g[2 * r] * g[2 * c] + g[2 * r + 1] * g[2 * c + 1]);
    }
    if (!ws.analysed) {
        ws.llt.analyzePattern(ws.A);
        ws.analysed = true;
    }
    ws.llt.factorize(ws.A);
    if (ws.llt.info() != Eigen::Success) throw NumericalError("CEM system factorisation failed");

    const auto n = static_cast<Eigen::Index>(mesh_.num_nodes());
    const Eigen::Index np = patterns.cols();
    Matrix rhs = Matrix::Zero(static_cast<Eigen::Index>(num_unknowns()), np);
    rhs.bottomRows(layout_.count - 1) = patterns.bottomRows(layout_.count - 1);
    const Matrix x = ws.llt.solve(rhs);

    CEMSolution sol;
    sol.electrode_voltages = Matrix::Zero(layout_.count, np);
    sol.electrode_voltages.bottomRows(layout_.count - 1) = x.bottomRows(layout_.count - 1);
    const Eigen::RowVectorXd shift = sol.electrode_voltages.colwise().mean();
    sol.electrode_voltages.rowwise() -= shift;
    if (keep_nodal) {
        sol.nodal = x.topRows(n);
        sol.nodal.rowwise() -= shift;
    }
    return sol;
}

CEMSolution CEMModel::solve(const Vector& kappa_elem, const Matrix& patterns) const {
    auto ws = make_workspace();
    return solve(kappa_elem, patterns, *ws, true);
}

Matrix CEMModel::electrode_currents(const CEMSolution& sol) const {
    require(sol.nodal.rows() == static_cast<Eigen::Index>(mesh_.num_nodes()),
            "currents need the nodal solution");
    const Eigen::Index np = sol.electrode_voltages.cols();
    Matrix I(layout_.count, np);
    for (int k = 0; k < layout_.count; ++k) {
        for (Eigen::Index p = 0; p < np; ++p) {
            double bv = 0.0;
            for (const EdgeTerm& t : edges_[static_cast<std::size_t>(k)])
                bv += t.ia * sol.nodal(t.a, p) + t.ib * sol.nodal(t.b, p);
            I(k, p) = (elen_[k] * sol.electrode_voltages(k, p) - bv) / layout_.z[k];
        }
    }
    return I;
}

Vector measurement_vector(const CEMSolution& sol) {
    const Matrix& V = sol.electrode_voltages;
    // Column-major storage of (electrode x pattern) is already pattern-major.
    return Eigen::Map<const Vector>(V.data(), V.size());
}

} // namespace eki
