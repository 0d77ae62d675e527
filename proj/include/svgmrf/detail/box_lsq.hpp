#pragma once

#include <Eigen/Dense>

#include <span>

namespace svgmrf::detail {

/// Column scale * (e_a - e_b), or scale * e_a when b < 0.
struct SignedColumn {
    Eigen::Index a = 0;
    Eigen::Index b = -1;
    double scale = 0.0;
};

/// Minimizes ||r + H v||_2 over v in [-1, 1]^p by cyclic coordinate descent,
/// where the columns of H are given by `columns`. Returns r + H v at the
/// final iterate; v is written to `selection` when it is non-null.
Eigen::VectorXd minimize_box_residual(const Eigen::VectorXd& r, std::span<const SignedColumn> columns,
                                      Eigen::VectorXd* selection = nullptr, int max_sweeps = 20000);

}  // namespace svgmrf::detail
