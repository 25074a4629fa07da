#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ladder/expr.hpp"
#include "ladder/forward.hpp"
#include "ladder/reverse.hpp"

namespace ladder {

/// The four whole-gradient algorithms, from slowest to fastest.
enum class GradientMode { forward, reverse_scalar, reverse_threaded, reverse_dense };

inline constexpr std::array<GradientMode, 4> kAllGradientModes = {
    GradientMode::forward, GradientMode::reverse_scalar, GradientMode::reverse_threaded,
    GradientMode::reverse_dense};

/// Short name used on the command line: fwd, rev1, rev2, rev.
inline std::string_view mode_name(GradientMode mode) {
  switch (mode) {
    case GradientMode::forward: return "fwd";
    case GradientMode::reverse_scalar: return "rev1";
    case GradientMode::reverse_threaded: return "rev2";
    case GradientMode::reverse_dense: return "rev";
  }
  return "?";
}

inline std::optional<GradientMode> parse_mode(std::string_view name) {
  for (GradientMode mode : kAllGradientModes) {
    if (mode_name(mode) == name) return mode;
  }
  return std::nullopt;
}

struct GradientResult {
  double primal;
  std::vector<double> gradient;  // dense, length env.size()
};

/// Primal and dense gradient of `e` at `env` computed with `mode`.
inline GradientResult gradient(GradientMode mode, const Expr& e, const Env& env) {
  switch (mode) {
    case GradientMode::forward: {
      auto r = fwd_gradient(e, env);
      return {r.primal, r.gradient.to_dense(env.size())};
    }
    case GradientMode::reverse_scalar: {
      auto r = rev_scalar(e, env);
      return {r.primal, r.gradient.to_dense(env.size())};
    }
    case GradientMode::reverse_threaded: {
      auto r = rev_threaded(e, env);
      return {r.primal, r.gradient.to_dense(env.size())};
    }
    case GradientMode::reverse_dense: {
      auto r = rev_dense(e, env);
      return {r.primal, std::move(r.gradient.values())};
    }
  }
  throw InternalError("unknown gradient mode");
}

}  // namespace ladder
