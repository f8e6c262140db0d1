#pragma once

// Seeded random generation of closed, contractive session types for the
// property suites.

#include <random>
#include <string>
#include <vector>

#include "sesst/type.hpp"

namespace sesst {

struct GenConfig {
  int max_depth = 4;
  int max_labels = 3;
  int payload_depth = 2;
  bool with_sorts = false;      // extension payloads
  double mu_probability = 0.25;
  double var_probability = 0.4;  // chance a guarded position closes a loop
};

namespace detail {

inline TypeRef gen_type(std::mt19937_64& rng, const GenConfig& cfg, int depth,
                        std::vector<std::string>& binders, bool guarded, int& mu_count);

inline Payload gen_payload(std::mt19937_64& rng, const GenConfig& cfg, int depth) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (cfg.with_sorts && coin(rng) < 0.5) {
    std::uniform_int_distribution<int> pick(0, 3);
    switch (pick(rng)) {
      case 0: return Payload(Sort{BaseSort::Bool, nullptr});
      case 1: return Payload(Sort{BaseSort::Nat, nullptr});
      case 2: return Payload(Sort{BaseSort::Int, nullptr});
      default: {
        std::vector<std::string> none;
        int mus = 0;
        GenConfig inner = cfg;
        inner.with_sorts = false;
        return Payload(Sort{BaseSort::Shared,
                            gen_type(rng, inner, std::min(depth, 1), none, false, mus)});
      }
    }
  }
  std::vector<std::string> none;
  int mus = 0;
  GenConfig inner = cfg;
  return Payload(gen_type(rng, inner, depth, none, false, mus));
}

inline TypeRef gen_type(std::mt19937_64& rng, const GenConfig& cfg, int depth,
                        std::vector<std::string>& binders, bool guarded, int& mu_count) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (guarded && !binders.empty() && coin(rng) < cfg.var_probability)
    return t_var(binders[std::uniform_int_distribution<std::size_t>(0, binders.size() - 1)(rng)]);
  if (depth <= 0) return t_end();

  if (coin(rng) < cfg.mu_probability && depth >= 2) {
    std::string name = "t" + std::to_string(++mu_count);
    binders.push_back(name);
    // bodies start with a communication so the binder stays contractive
    std::uniform_int_distribution<int> pick(0, 1);
    TypeRef body;
    std::uniform_int_distribution<int> nlab(1, cfg.max_labels);
    int n = nlab(rng);
    std::vector<TypeEntry> entries;
    for (int i = 0; i < n; ++i)
      entries.push_back({"l" + std::to_string(i + 1),
                         gen_payload(rng, cfg, std::min(depth - 1, cfg.payload_depth)),
                         gen_type(rng, cfg, depth - 1, binders, true, mu_count)});
    body = pick(rng) == 0 ? t_branch(std::move(entries)) : t_select(std::move(entries));
    binders.pop_back();
    return t_mu(name, body);
  }

  std::uniform_int_distribution<int> pick(0, 4);
  int k = pick(rng);
  if (k == 0) return t_end();
  bool branch = k <= 2;
  std::uniform_int_distribution<int> nlab(1, cfg.max_labels);
  int n = nlab(rng);
  std::vector<TypeEntry> entries;
  for (int i = 0; i < n; ++i)
    entries.push_back({"l" + std::to_string(i + 1),
                       gen_payload(rng, cfg, std::min(depth - 1, cfg.payload_depth)),
                       gen_type(rng, cfg, depth - 1, binders, true, mu_count)});
  return branch ? t_branch(std::move(entries)) : t_select(std::move(entries));
}

}  // namespace detail

inline TypeRef random_type(std::mt19937_64& rng, const GenConfig& cfg = {}) {
  std::vector<std::string> binders;
  int mus = 0;
  TypeRef t = detail::gen_type(rng, cfg, cfg.max_depth, binders, false, mus);
  return t;
}

}  // namespace sesst
