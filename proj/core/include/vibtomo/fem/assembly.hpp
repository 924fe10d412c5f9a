#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vibtomo/fem/mesh.hpp"

namespace vibtomo::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Per-voxel Young's modulus w [Pa], density v [kg/m^3] and a homogeneous
/// Poisson's ratio.
struct MaterialField {
    Eigen::VectorXd w;
    Eigen::VectorXd v;
    double nu = 0.3;

    static MaterialField homogeneous(int voxels, double youngs, double density, double nu = 0.3);

    int size() const { return static_cast<int>(w.size()); }

    /// Throws ValidationError unless w > 0, v > 0, 0 <= nu < 0.5 and |w| == |v| == voxels.
    void validate(int voxels) const;
};

struct GlobalSystem {
    SparseMatrix K;
    SparseMatrix M;

    int size() const { return static_cast<int>(K.rows()); }
};

/// The "unit" local matrices K_e, M_e of every voxel, assembled at unit
/// modulus and unit density with Dirichlet rows/columns removed, so that
/// K = sum_e w_e K_e and M = sum_e v_e M_e.
///
/// Each voxel stores a dense block over the free DOFs it touches. The global
/// sparsity pattern is shared by all voxels; assembly scatters each block
/// into precomputed value slots in voxel order, which keeps the result
/// deterministic.
class UnitMatrixSet {
public:
    struct Block {
        std::vector<int> dofs;  // sorted global free-DOF indices
        Eigen::MatrixXd K;
        Eigen::MatrixXd M;
        std::vector<int> slots;  // column-major (a, b) -> index into pattern values
    };

    UnitMatrixSet(int free_dofs, std::vector<Block> blocks, SparseMatrix pattern, double nu);

    int dof_count() const { return n_; }
    int voxel_count() const { return static_cast<int>(blocks_.size()); }
    double nu() const { return nu_; }

    const Block& block(int voxel) const { return blocks_[voxel]; }
    const std::vector<Block>& blocks() const { return blocks_; }

    /// Zero-valued matrix with the union sparsity pattern of all blocks.
    const SparseMatrix& pattern() const { return pattern_; }

    /// K_e and M_e as full n x n sparse matrices (testing and diagnostics).
    SparseMatrix stiffness(int voxel) const;
    SparseMatrix mass(int voxel) const;

    /// sum_e weights_e * (K_e or M_e).
    SparseMatrix combine_stiffness(const Eigen::Ref<const Eigen::VectorXd>& weights) const;
    SparseMatrix combine_mass(const Eigen::Ref<const Eigen::VectorXd>& weights) const;

private:
    SparseMatrix combine(const Eigen::Ref<const Eigen::VectorXd>& weights, bool stiffness) const;
    SparseMatrix expand(int voxel, bool stiffness) const;

    int n_;
    std::vector<Block> blocks_;
    SparseMatrix pattern_;
    double nu_;
};

/// Builds unit matrices for every voxel of the mesh. Throws MeshQualityError for
/// inverted elements and ValidationError for nu outside [0, 0.5).
UnitMatrixSet assemble_unit_matrices(const Mesh& mesh, double nu);

/// K = sum w_e K_e, M = sum v_e M_e. Throws ShapeError on a length mismatch.
GlobalSystem assemble_global(const UnitMatrixSet& units, const MaterialField& field);

}  // namespace vibtomo::fem
