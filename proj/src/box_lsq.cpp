#include "svgmrf/detail/box_lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svgmrf::detail {

Eigen::VectorXd minimize_box_residual(const Eigen::VectorXd& r, std::span<const SignedColumn> columns,
                                      Eigen::VectorXd* selection, int max_sweeps) {
    Eigen::VectorXd res = r;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns.size()));
    if (!columns.empty()) {
        const double floor = 1e-17 * std::max(1.0, r.cwiseAbs().maxCoeff());
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double biggest_move = 0.0;
            for (std::size_t c = 0; c < columns.size(); ++c) {
                const SignedColumn& col = columns[c];
                if (col.scale == 0.0) {
                    continue;
                }
                const bool pair = col.b >= 0;
                const double dot = col.scale * (pair ? res(col.a) - res(col.b) : res(col.a));
                const double norm2 = col.scale * col.scale * (pair ? 2.0 : 1.0);
                const auto idx = static_cast<Eigen::Index>(c);
                const double next = std::clamp(v(idx) - dot / norm2, -1.0, 1.0);
                const double step = next - v(idx);
                if (step == 0.0) {
                    continue;
                }
                v(idx) = next;
                res(col.a) += col.scale * step;
                if (pair) {
                    res(col.b) -= col.scale * step;
                }
                biggest_move = std::max(biggest_move, std::abs(col.scale * step));
            }
            const double worst = res.cwiseAbs().maxCoeff();
            if (biggest_move <= floor || worst <= floor || biggest_move <= 1e-10 * worst) {
                break;
            }
        }
    }
    if (selection != nullptr) {
        *selection = v;
    }
    return res;
}

}  // namespace svgmrf::detail
