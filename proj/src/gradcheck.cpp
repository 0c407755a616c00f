#include "avgcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avgcn/rng.hpp"

namespace avgcn::num {

bool GradCheckReport::passed() const {
  return std::all_of(groups.begin(), groups.end(),
                     [](const GradCheckGroup& g) { return g.passed; });
}

double GradCheckReport::worst_relative_error() const {
  double worst = 0.0;
  for (const auto& g : groups) worst = std::max(worst, g.relative_error);
  return worst;
}

GradCheckReport finite_difference_check(const ParamSet& params,
                                        const LossFn& loss,
                                        const ParamSet& analytic,
                                        const GradCheckOptions& options) {
  params.require_same_layout(analytic, "finite_difference_check");
  ParamSet probe = params;
  Rng rng(options.seed);
  GradCheckReport report;

  for (std::size_t gi = 0; gi < params.size(); ++gi) {
    const std::size_t n = params[gi].value.size();
    std::vector<std::size_t> entries(n);
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries_per_tensor && n > options.max_entries_per_tensor) {
      // Partial Fisher-Yates.
      for (std::size_t k = 0; k < options.max_entries_per_tensor; ++k)
        std::swap(entries[k], entries[k + rng.index(n - k)]);
      entries.resize(options.max_entries_per_tensor);
    }

    double diff2 = 0.0, an2 = 0.0, nu2 = 0.0, max_abs = 0.0;
    for (std::size_t k : entries) {
      double& slot = probe[gi].value[k];
      const double original = slot;
      slot = original + options.step;
      const double up = loss(probe);
      slot = original - options.step;
      const double down = loss(probe);
      slot = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[gi].value[k];
      diff2 += (a - numeric) * (a - numeric);
      an2 += a * a;
      nu2 += numeric * numeric;
      max_abs = std::max(max_abs, std::abs(a - numeric));
    }

    GradCheckGroup group;
    group.name = params[gi].name;
    group.entries_checked = entries.size();
    group.max_abs_error = max_abs;
    const double denom = std::max(std::sqrt(std::max(an2, nu2)),
                                  options.denominator_floor);
    group.relative_error = std::sqrt(diff2) / denom;
    group.passed = group.relative_error < options.tolerance;
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace avgcn::num
