#include "rscdma/random.hpp"

namespace rscdma
{

CMat complex_gaussian_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double variance)
{
    CMat h(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            h(i, j) = rng.complex_normal(variance);
    return h;
}

} // namespace rscdma
