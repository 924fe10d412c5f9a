#include "vibtomo/fem/assembly.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "vibtomo/error.hpp"
#include "vibtomo/fem/elements.hpp"

namespace vibtomo::fem {

MaterialField MaterialField::homogeneous(int voxels, double youngs, double density, double nu) {
    return {Eigen::VectorXd::Constant(voxels, youngs), Eigen::VectorXd::Constant(voxels, density),
            nu};
}

void MaterialField::validate(int voxels) const {
    if (w.size() != voxels || v.size() != voxels) {
        std::ostringstream msg;
        msg << "material field length (w " << w.size() << ", v " << v.size()
            << ") does not match voxel count " << voxels;
        throw ShapeError(msg.str());
    }
    if (!(w.array() > 0.0).all()) throw ValidationError("Young's modulus must be positive");
    if (!(v.array() > 0.0).all()) throw ValidationError("density must be positive");
    if (!(nu >= 0.0 && nu < 0.5)) throw ValidationError("Poisson's ratio must lie in [0, 0.5)");
}

UnitMatrixSet::UnitMatrixSet(int free_dofs, std::vector<Block> blocks, SparseMatrix pattern,
                             double nu)
    : n_(free_dofs), blocks_(std::move(blocks)), pattern_(std::move(pattern)), nu_(nu) {}

SparseMatrix UnitMatrixSet::combine(const Eigen::Ref<const Eigen::VectorXd>& weights,
                                    bool stiffness) const {
    if (weights.size() != voxel_count()) {
        std::ostringstream msg;
        msg << "weight vector length " << weights.size() << " does not match voxel count "
            << voxel_count();
        throw ShapeError(msg.str());
    }
    SparseMatrix out = pattern_;
    double* values = out.valuePtr();
    std::fill(values, values + out.nonZeros(), 0.0);
    for (int e = 0; e < voxel_count(); ++e) {
        const Block& blk = blocks_[e];
        const Eigen::MatrixXd& local = stiffness ? blk.K : blk.M;
        const double we = weights[e];
        const double* src = local.data();
        const std::size_t count = blk.slots.size();
        for (std::size_t s = 0; s < count; ++s) values[blk.slots[s]] += we * src[s];
    }
    return out;
}

SparseMatrix UnitMatrixSet::combine_stiffness(const Eigen::Ref<const Eigen::VectorXd>& w) const {
    return combine(w, true);
}

SparseMatrix UnitMatrixSet::combine_mass(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    return combine(v, false);
}

SparseMatrix UnitMatrixSet::expand(int voxel, bool stiffness) const {
    const Block& blk = blocks_.at(voxel);
    const Eigen::MatrixXd& local = stiffness ? blk.K : blk.M;
    std::vector<Eigen::Triplet<double>> trips;
    const int d = static_cast<int>(blk.dofs.size());
    trips.reserve(static_cast<std::size_t>(d) * d);
    for (int b = 0; b < d; ++b)
        for (int a = 0; a < d; ++a) trips.emplace_back(blk.dofs[a], blk.dofs[b], local(a, b));
    SparseMatrix out(n_, n_);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SparseMatrix UnitMatrixSet::stiffness(int voxel) const { return expand(voxel, true); }
SparseMatrix UnitMatrixSet::mass(int voxel) const { return expand(voxel, false); }

UnitMatrixSet assemble_unit_matrices(const Mesh& mesh, double nu) {
    if (!(nu >= 0.0 && nu < 0.5)) throw ValidationError("Poisson's ratio must lie in [0, 0.5)");
    const int n = mesh.free_dof_count();
    const int m = mesh.grid().size();
    const int dpv = mesh.dof_per_vertex();
    const int npe = mesh.nodes_per_element();

    std::vector<std::vector<int>> elements_of_voxel(m);
    for (int e = 0; e < mesh.element_count(); ++e)
        elements_of_voxel[mesh.voxel_of_element()[e]].push_back(e);

    std::vector<UnitMatrixSet::Block> blocks(m);
    std::vector<int> element_dofs(static_cast<std::size_t>(npe) * dpv);

    for (int vox = 0; vox < m; ++vox) {
        auto& blk = blocks[vox];
        for (int e : elements_of_voxel[vox]) {
            for (int node : mesh.element(e))
                for (int c = 0; c < dpv; ++c) {
                    int g = mesh.dof(node, c);
                    if (g >= 0) blk.dofs.push_back(g);
                }
        }
        std::sort(blk.dofs.begin(), blk.dofs.end());
        blk.dofs.erase(std::unique(blk.dofs.begin(), blk.dofs.end()), blk.dofs.end());
        const int d = static_cast<int>(blk.dofs.size());
        blk.K = Eigen::MatrixXd::Zero(d, d);
        blk.M = Eigen::MatrixXd::Zero(d, d);
        auto local_index = [&](int g) {
            return static_cast<int>(std::lower_bound(blk.dofs.begin(), blk.dofs.end(), g) -
                                    blk.dofs.begin());
        };

        for (int e : elements_of_voxel[vox]) {
            auto nodes = mesh.element(e);
            Eigen::MatrixXd Ke, Me;
            if (mesh.kind() == ElementKind::SolidHex8) {
                std::array<Eigen::Vector3d, 8> x;
                for (int a = 0; a < 8; ++a) x[a] = mesh.vertex(nodes[a]);
                Ke = hex8_stiffness(std::span<const Eigen::Vector3d, 8>(x), 1.0, nu);
                Me = hex8_mass(std::span<const Eigen::Vector3d, 8>(x), 1.0);
            } else {
                std::array<Eigen::Vector3d, 3> x;
                for (int a = 0; a < 3; ++a) x[a] = mesh.vertex(nodes[a]);
                Ke = tri3_membrane_stiffness(std::span<const Eigen::Vector3d, 3>(x), 1.0);
                Me = tri3_membrane_mass(std::span<const Eigen::Vector3d, 3>(x), 1.0);
            }
            for (int a = 0; a < npe; ++a)
                for (int c = 0; c < dpv; ++c)
                    element_dofs[a * dpv + c] = mesh.dof(nodes[a], c);
            const int ed = npe * dpv;
            for (int j = 0; j < ed; ++j) {
                if (element_dofs[j] < 0) continue;
                const int lj = local_index(element_dofs[j]);
                for (int i = 0; i < ed; ++i) {
                    if (element_dofs[i] < 0) continue;
                    const int li = local_index(element_dofs[i]);
                    blk.K(li, lj) += Ke(i, j);
                    blk.M(li, lj) += Me(i, j);
                }
            }
        }
    }

    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& blk : blocks)
        for (int b : blk.dofs)
            for (int a : blk.dofs) trips.emplace_back(a, b, 0.0);
    SparseMatrix pattern(n, n);
    pattern.setFromTriplets(trips.begin(), trips.end());
    pattern.makeCompressed();

    const int* outer = pattern.outerIndexPtr();
    const int* inner = pattern.innerIndexPtr();
    for (auto& blk : blocks) {
        const int d = static_cast<int>(blk.dofs.size());
        blk.slots.resize(static_cast<std::size_t>(d) * d);
        for (int b = 0; b < d; ++b) {
            const int col = blk.dofs[b];
            const int* begin = inner + outer[col];
            const int* end = inner + outer[col + 1];
            for (int a = 0; a < d; ++a) {
                const int* hit = std::lower_bound(begin, end, blk.dofs[a]);
                blk.slots[static_cast<std::size_t>(b) * d + a] = static_cast<int>(hit - inner);
            }
        }
    }

    return UnitMatrixSet(n, std::move(blocks), std::move(pattern), nu);
}

GlobalSystem assemble_global(const UnitMatrixSet& units, const MaterialField& field) {
    if (field.w.size() != units.voxel_count() || field.v.size() != units.voxel_count()) {
        std::ostringstream msg;
        msg << "material field length (w " << field.w.size() << ", v " << field.v.size()
            << ") does not match voxel count " << units.voxel_count();
        throw ShapeError(msg.str());
    }
    return {units.combine_stiffness(field.w), units.combine_mass(field.v)};
}

}  // namespace vibtomo::fem
