#pragma once

#include <Eigen/Core>
#include <string>

#include "crlab/envs/gridworld.hpp"
#include "crlab/rng.hpp"

namespace crlab::envs {

// Observation model of a task: observation of cell c is projection.col(c).
// Columns have unit Euclidean norm.
struct Theme {
  Eigen::MatrixXd projection;  // feature_dim x cell_count
  std::string variant_id;
};

// Root-mean-square column distance: ||A - B||_F / sqrt(columns).
double theme_distance(const Theme& a, const Theme& b);

// Fresh random theme: Gaussian entries, columns normalized.
Theme make_base_theme(int feature_dim, int cell_count, std::uint64_t seed);

// Cumulative shared-structure perturbations applied to the previous
// variant. Each keeps the result within max_distance of both the previous
// variant and the base theme (RMS column distance), while remaining a
// distinct projection.
enum class ThemeVariant {
  NoBackground,      // zero a block of feature rows
  RestrictedBasis,   // project features onto a random subspace
  RegeneratedRows,   // redraw a block of feature rows
  RankCollapsed,     // pull columns toward a single direction
  Recentered,        // mix in features of cells shifted so the goal is centered
};

Theme apply_variant(const Theme& prev, const Theme& base, ThemeVariant variant,
                    const GridWorld& grid, double max_distance, std::uint64_t seed);

const char* variant_name(ThemeVariant variant);

}  // namespace crlab::envs
