#include "graphstar/grad_check.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "graphstar/rng.hpp"

namespace graphstar {

namespace {

double relative_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  const double diff = std::abs(analytic - numeric);
  if (denom < 1e-6) return diff;
  return diff / denom;
}

}  // namespace

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << "grad check: " << coords_checked << " coordinates, max relative error " << max_rel_error;
  if (!worst.param.empty()) {
    os << " at " << worst.param << "[" << worst.row << "," << worst.col << "]"
       << " (analytic " << worst.analytic << ", numeric " << worst.numeric << ")";
  }
  return os.str();
}

GradCheckReport finite_difference_check(const LossEval& eval,
                                        std::vector<std::pair<std::string, Tensor*>> params,
                                        const GradCheckOptions& options) {
  if (params.empty()) throw std::invalid_argument("finite_difference_check: no parameters");
  std::vector<Tensor> analytic;
  eval(&analytic);
  if (analytic.size() != params.size()) {
    throw std::invalid_argument("finite_difference_check: eval returned " +
                                std::to_string(analytic.size()) + " gradients for " +
                                std::to_string(params.size()) + " parameters");
  }
  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor* theta = params[p].second;
    const Tensor& grad = analytic[p];
    if (!theta->same_shape(grad)) {
      throw std::invalid_argument("finite_difference_check: gradient shape mismatch for " +
                                  params[p].first);
    }
    std::vector<std::size_t> coords(theta->size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      shuffle(coords, rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t flat : coords) {
      const double original = theta->data()[flat];
      theta->data()[flat] = original + options.epsilon;
      const double up = eval(nullptr);
      theta->data()[flat] = original - options.epsilon;
      const double down = eval(nullptr);
      theta->data()[flat] = original;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double err = relative_error(grad.data()[flat], numeric);
      ++report.coords_checked;
      if (err >= report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = {params[p].first, flat / theta->cols(), flat % theta->cols(),
                        grad.data()[flat], numeric, err};
      }
    }
  }
  return report;
}

}  // namespace graphstar
