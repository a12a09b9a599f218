#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace g4rl {

struct PcaResult {
    bool projected = false;
    std::string warning;
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // unit vectors, largest-|coordinate| entry positive
    std::vector<double> variances;                // eigenvalues of the sample covariance
    std::vector<std::array<double, 2>> coordinates;  // per input row
};

/// Two-component PCA through power iteration with deflation on the sample
/// covariance. Rows are canonically ordered before accumulation, so the
/// result for a given row does not depend on row order. Fewer than two rows
/// or zero total variance skip the projection and set `warning`.
PcaResult pca_2d(const std::vector<std::vector<double>>& rows);

}  // namespace g4rl
