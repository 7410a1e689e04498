#include "charattr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace charattr::nn {

GradCheckReport grad_check(const std::vector<GradCheckItem>& items,
                           const std::function<double()>& loss,
                           const std::function<void()>& backward, double eps) {
    backward();  // fills analytic gradients

    GradCheckReport report;
    for (const auto& item : items) {
        Tensor& t = *item.tensor;
        for (size_t i = 0; i < t.values.size(); ++i) {
            const double saved = t.values[i];
            t.values[i] = saved + eps;
            const double up = loss();
            t.values[i] = saved - eps;
            const double down = loss();
            t.values[i] = saved;

            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = t.grad[i];
            const double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            const double rel = std::abs(analytic - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = item.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return report;
}

}  // namespace charattr::nn
