#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avgcn/params.hpp"

namespace avgcn::num {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Entries probed per tensor; 0 probes every entry. Probed entries are
  /// drawn without replacement using `seed`.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
  /// Lower bound on the relative-error denominator so gradients that are
  /// zero up to rounding do not read as large relative errors.
  double denominator_floor = 1e-6;
};

struct GradCheckGroup {
  std::string name;
  std::size_t entries_checked = 0;
  double max_abs_error = 0.0;
  /// ||analytic - numeric|| / max(||analytic||, ||numeric||, floor) over the
  /// probed entries.
  double relative_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  bool passed() const;
  double worst_relative_error() const;
};

using LossFn = std::function<double(const ParamSet&)>;

/// Compares `analytic` against central differences of `loss` around `params`.
GradCheckReport finite_difference_check(const ParamSet& params,
                                        const LossFn& loss,
                                        const ParamSet& analytic,
                                        const GradCheckOptions& options = {});

}  // namespace avgcn::num
