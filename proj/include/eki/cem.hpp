#pragma once

// Complete electrode model on a disc mesh with P1 elements and
// piecewise-constant conductivity.
//
// Unknowns are nodal potentials v and electrode voltages V. The first
// electrode is held at zero while solving, which leaves a symmetric positive
// definite system; the solution is then shifted by a constant so the
// electrode voltages sum to zero.

#include "eki/mesh.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>

namespace eki {

struct ElectrodeLayout {
    int count = 16;
    double coverage = 0.5;  // fraction of the boundary covered by electrodes
    Vector z;               // contact impedances

    static ElectrodeLayout uniform(int count, double coverage, double z);
    void validate() const;
    double centre(int k) const;
    double half_width() const;
};

// Column p is the current vector of pattern p.
Matrix adjacent_patterns(int electrodes, double current);

struct CEMSolution {
    Matrix electrode_voltages;  // electrodes x patterns
    Matrix nodal;               // nodes x patterns
};

class CEMModel {
public:
    CEMModel(DiscMesh mesh, ElectrodeLayout layout);
    ~CEMModel();

    const DiscMesh& mesh() const { return mesh_; }
    const ElectrodeLayout& layout() const { return layout_; }
    std::size_t num_unknowns() const;

    // Per-thread factorisation cache; the symbolic analysis is done once.
    struct Workspace {
        Eigen::SparseMatrix<double> A;
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
        bool analysed = false;
    };
    std::unique_ptr<Workspace> make_workspace() const;

    // Full symmetric system before grounding: nodes first, then electrodes.
    Eigen::SparseMatrix<double> assemble_full(const Vector& kappa_elem) const;

    CEMSolution solve(const Vector& kappa_elem, const Matrix& patterns, Workspace& ws,
                      bool keep_nodal = false) const;
    CEMSolution solve(const Vector& kappa_elem, const Matrix& patterns) const;

    // Currents (1/z_k) * integral over e_k of (V_k - v), one column per pattern.
    Matrix electrode_currents(const CEMSolution& sol) const;

    // Electrode lengths along the boundary polygon.
    const Vector& electrode_lengths() const { return elen_; }

private:
    struct EdgeTerm {
        int a, b;
        double maa, mab, mbb, ia, ib;  // boundary integrals of basis products
    };
    DiscMesh mesh_;
    ElectrodeLayout layout_;
    std::vector<std::array<double, 6>> grads_;  // per element: grad phi for the three nodes
    std::vector<double> areas_;
    std::vector<std::vector<EdgeTerm>> edges_;  // per electrode
    Vector elen_;
    Eigen::SparseMatrix<double> pattern_;       // grounded system template
    std::vector<std::array<int, 9>> elem_pos_;  // value slots per element entry
    std::vector<double> constant_values_;       // electrode contributions

    void build_electrodes();
    void build_pattern();
};

// Measurement vector: all electrode voltages for each pattern, pattern-major.
Vector measurement_vector(const CEMSolution& sol);

} // namespace eki
