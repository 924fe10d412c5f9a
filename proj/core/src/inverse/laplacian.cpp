#include "vibtomo/inverse/laplacian.hpp"

#include <vector>

namespace vibtomo::inv {

fem::SparseMatrix build_laplacian(const fem::VoxelGrid& grid) {
    const int m = grid.size();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(m) * 7);
    for (int e = 0; e < m; ++e) {
        const auto c = grid.coords(e);
        double diag = 0.0;
        for (int a = 0; a < 3; ++a) {
            const int n = grid.dims()[a];
            if (n == 1) continue;
            for (int step : {-1, 1}) {
                const int j = c[a] + step;
                if (j < 0 || j >= n) continue;  // mirrored ghost equals the voxel itself
                auto nb = c;
                nb[a] = j;
                trips.emplace_back(e, grid.index(nb[0], nb[1], nb[2]), 1.0);
                diag -= 1.0;
            }
        }
        trips.emplace_back(e, e, diag);
    }
    fem::SparseMatrix L(m, m);
    L.setFromTriplets(trips.begin(), trips.end());
    L.makeCompressed();
    return L;
}

}  // namespace vibtomo::inv
