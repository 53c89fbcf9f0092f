#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rulforge/search_space.hpp"

namespace rulforge {

struct Observation {
  Point point;
  double score = 0.0;  // lower is better; non-finite means failed
};

struct SuggestOptions {
  std::size_t candidates = 1000;
  std::size_t refine_top = 5;
  std::size_t refine_steps = 40;
  double refine_sigma = 0.05;
};

/// Next point to evaluate: GP surrogate on standardized scores, expected
/// improvement maximized over random candidates plus local refinement.
/// Falls back to a random draw when fewer than two finite scores exist or
/// all finite scores are identical. Never returns a point already in history
/// unless the space is exhausted.
Point suggest_next(const SearchSpace& space, std::span<const Observation> history, std::mt19937_64& rng,
                   const SuggestOptions& opts = {});

enum class TrialOrigin : std::uint8_t { seed, random, model };

std::string_view to_string(TrialOrigin o);
TrialOrigin trial_origin_from_string(std::string_view s);

struct BayesOptConfig {
  std::size_t budget = 100;
  std::size_t n_random = 10;
  std::uint64_t seed = 0;
  std::vector<Point> seed_points;
  SuggestOptions suggest;
};

struct BoTrial {
  std::size_t index = 0;
  Point point;
  double score = 0.0;
  TrialOrigin origin = TrialOrigin::random;
  bool failed = false;
  std::string error;
};

struct Proposal {
  Point point;
  TrialOrigin origin;
};

/// Generator for trial `index`, independent of earlier draws so a resumed run
/// proposes the same points as an uninterrupted one.
std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t index);

/// The point trial history.size() should evaluate.
Proposal propose(const SearchSpace& space, const BayesOptConfig& cfg, std::span<const BoTrial> history);

using BoObjective = std::function<double(const Point&, std::size_t index)>;

struct BayesOptResult {
  std::vector<BoTrial> history;
  std::size_t best = 0;
};

/// Runs until the history holds cfg.budget trials. Objective exceptions mark
/// the trial failed with an infinite score. `resume` holds trials already
/// evaluated, in index order.
BayesOptResult run_bayes_opt(const SearchSpace& space, const BoObjective& objective, const BayesOptConfig& cfg,
                             std::vector<BoTrial> resume = {},
                             const std::function<void(const BoTrial&)>& on_trial = {});

/// Index of the lowest finite score; history.size() when none is finite.
std::size_t best_trial(std::span<const BoTrial> history);

}  // namespace rulforge
