#include "jointdr/core/coefficient_path.hpp"

#include <string>

#include "jointdr/core/error.hpp"

namespace jointdr {

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::DegenerateAllZero: return "degenerate_all_zero";
    case FitStatus::DegenerateAllOne: return "degenerate_all_one";
    case FitStatus::MaxIterations: return "max_iterations";
    case FitStatus::RankDeficient: return "rank_deficient";
  }
  return "unknown";
}

FitStatus fit_status_from_string(std::string_view name) {
  for (auto s : {FitStatus::Converged, FitStatus::DegenerateAllZero, FitStatus::DegenerateAllOne,
                 FitStatus::MaxIterations, FitStatus::RankDeficient}) {
    if (to_string(s) == name) return s;
  }
  throw InputError("unknown fit status '" + std::string(name) + "'");
}

}  // namespace jointdr
