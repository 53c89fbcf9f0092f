#include "rulforge/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rulforge/error.hpp"
#include "rulforge/gaussian_process.hpp"

namespace rulforge {

namespace {

bool seen(std::span<const Observation> history, const Point& p) {
  return std::any_of(history.begin(), history.end(), [&](const Observation& o) { return o.point == p; });
}

Point random_unseen(const SearchSpace& space, std::span<const Observation> history, std::mt19937_64& rng) {
  Point p = space.sample(rng);
  for (int attempt = 0; attempt < 100 && seen(history, p); ++attempt) p = space.sample(rng);
  return p;
}

void perturb(const SearchSpace& space, std::vector<double>& u, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, sigma);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t k = 0;
  for (const auto& d : space.dims()) {
    if (d.kind == DimKind::categorical) {
      const std::size_t w = d.choices.size();
      if (unit(rng) < 0.2) {
        const auto pick = std::uniform_int_distribution<std::size_t>(0, w - 1)(rng);
        for (std::size_t c = 0; c < w; ++c) u[k + c] = c == pick ? 1.0 : 0.0;
      }
      k += w;
    } else {
      u[k] = std::clamp(u[k] + gauss(rng), 0.0, 1.0);
      ++k;
    }
  }
}

}  // namespace

Point suggest_next(const SearchSpace& space, std::span<const Observation> history, std::mt19937_64& rng,
                   const SuggestOptions& opts) {
  if (history.empty()) throw ArgumentError("suggest_next needs a non-empty history");

  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& o : history) {
    if (!std::isfinite(o.score)) continue;
    x.push_back(space.encode(o.point));
    y.push_back(o.score);
  }
  if (y.size() < 2) return random_unseen(space, history, rng);
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  if (*hi_it - *lo_it <= 1e-12 * std::max(1.0, std::abs(*hi_it))) return random_unseen(space, history, rng);

  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(y.size()));
  for (double& v : y) v = (v - mean) / sd;
  const double best = *std::min_element(y.begin(), y.end());

  GaussianProcess gp;
  gp.fit_ml(std::move(x), std::move(y), rng());

  auto acquisition = [&](const std::vector<double>& u) {
    const auto p = gp.predict(u);
    return expected_improvement(p.mean, p.var, best);
  };

  struct Candidate {
    std::vector<double> u;
    double ei;
  };
  std::vector<Candidate> pool;
  pool.reserve(opts.candidates);
  for (std::size_t i = 0; i < opts.candidates; ++i) {
    auto u = space.encode(space.sample(rng));
    const double ei = acquisition(u);
    pool.push_back({std::move(u), ei});
  }
  const std::size_t top = std::min(opts.refine_top, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(top), pool.end(),
                    [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });

  for (std::size_t t = 0; t < top; ++t) {
    auto& c = pool[t];
    double sigma = opts.refine_sigma;
    for (std::size_t s = 0; s < opts.refine_steps; ++s) {
      auto u = c.u;
      perturb(space, u, sigma, rng);
      u = space.encode(space.decode(u));
      const double ei = acquisition(u);
      if (ei > c.ei) {
        c = {std::move(u), ei};
      } else if (s % 10 == 9) {
        sigma *= 0.5;
      }
    }
  }

  std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });
  for (const auto& c : pool) {
    Point p = space.decode(c.u);
    if (!seen(history, p)) return p;
  }
  return random_unseen(space, history, rng);
}

std::string_view to_string(TrialOrigin o) {
  switch (o) {
    case TrialOrigin::seed: return "seed";
    case TrialOrigin::random: return "random";
    case TrialOrigin::model: return "model";
  }
  return "?";
}

TrialOrigin trial_origin_from_string(std::string_view s) {
  if (s == "seed") return TrialOrigin::seed;
  if (s == "random") return TrialOrigin::random;
  if (s == "model") return TrialOrigin::model;
  throw DataError("unknown trial origin '" + std::string(s) + "'");
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Proposal propose(const SearchSpace& space, const BayesOptConfig& cfg, std::span<const BoTrial> history) {
  const std::size_t i = history.size();
  if (i < cfg.seed_points.size()) return {cfg.seed_points[i], TrialOrigin::seed};
  auto rng = trial_rng(cfg.seed, i);
  if (i < cfg.n_random) return {space.sample(rng), TrialOrigin::random};
  std::vector<Observation> obs;
  obs.reserve(history.size());
  for (const auto& t : history) obs.push_back({t.point, t.failed ? std::numeric_limits<double>::infinity() : t.score});
  return {suggest_next(space, obs, rng, cfg.suggest), TrialOrigin::model};
}

std::size_t best_trial(std::span<const BoTrial> history) {
  std::size_t best = history.size();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& t = history[i];
    if (t.failed || !std::isfinite(t.score)) continue;
    if (best == history.size() || t.score < history[best].score) best = i;
  }
  return best;
}

BayesOptResult run_bayes_opt(const SearchSpace& space, const BoObjective& objective, const BayesOptConfig& cfg,
                             std::vector<BoTrial> resume, const std::function<void(const BoTrial&)>& on_trial) {
  if (cfg.budget < cfg.n_random) throw ConfigError("budget must be at least n_random");
  if (cfg.seed_points.size() > cfg.budget) throw ConfigError("more seed points than budget");
  for (const auto& p : cfg.seed_points) {
    if (!space.contains(p)) throw ConfigError("seed point outside the search space");
  }
  for (std::size_t i = 0; i < resume.size(); ++i) {
    if (resume[i].index != i) throw DataError("resumed history is not in trial order");
    if (!space.contains(resume[i].point)) throw DataError("resumed trial " + std::to_string(i) + " is outside the search space");
  }
  if (resume.size() > cfg.budget) resume.resize(cfg.budget);

  BayesOptResult result;
  result.history = std::move(resume);
  while (result.history.size() < cfg.budget) {
    auto proposal = propose(space, cfg, result.history);
    BoTrial t;
    t.index = result.history.size();
    t.origin = proposal.origin;
    t.point = std::move(proposal.point);
    try {
      t.score = objective(t.point, t.index);
      if (!std::isfinite(t.score)) {
        t.failed = true;
        t.error = "objective returned a non-finite score";
      }
    } catch (const std::exception& e) {
      t.failed = true;
      t.error = e.what();
    }
    if (t.failed) t.score = std::numeric_limits<double>::infinity();
    result.history.push_back(std::move(t));
    if (on_trial) on_trial(result.history.back());
  }
  result.best = best_trial(result.history);
  return result;
}

}  // namespace rulforge
