#include "lightdxml/adam.hpp"

#include <cmath>

namespace lightdxml {

void adam_update(double* param, const double* grad, double* m, double* v, std::size_t count, const AdamConfig& config,
                 std::int64_t step) {
    const double t = static_cast<double>(step);
    const double step_size = config.learning_rate / (1.0 - std::pow(config.beta1, t));
    const double root_correction = std::sqrt(1.0 - std::pow(config.beta2, t));
    for (std::size_t k = 0; k < count; ++k) {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        param[k] -= step_size * m[k] / (std::sqrt(v[k]) / root_correction + config.epsilon);
    }
}

}  // namespace lightdxml
