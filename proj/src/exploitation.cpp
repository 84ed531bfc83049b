#include "autolf/exploitation.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "autolf/errors.hpp"
#include "autolf/rng.hpp"

namespace autolf {

using nlohmann::json;

IntraFilterResult intra_filter(std::vector<LabelFunction> pool, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw PreconditionError("alpha must be in [0, 1]");
  IntraFilterResult r;
  if (pool.empty()) return r;
  double best = 0.0;
  for (const auto& lf : pool) best = std::max(best, lf.est_accuracy);
  r.theta = alpha * best;
  for (auto& lf : pool) {
    (lf.est_accuracy >= r.theta ? r.kept : r.removed).push_back(std::move(lf));
  }
  return r;
}

InterFilterResult inter_filter(CategoryPools pools, const std::map<Category, double>& thetas) {
  InterFilterResult r;
  double mx = 0.0;
  for (const auto& [cat, t] : thetas) mx = std::max(mx, t);
  r.theta_inter = 0.5 * mx;
  for (auto& [cat, lfs] : pools) {
    auto& dst = r.kept[cat];
    for (auto& lf : lfs) {
      (lf.est_accuracy < r.theta_inter ? r.removed : dst).push_back(std::move(lf));
    }
  }
  return r;
}

double agreement_rate(std::span<const WeakLabel> a, std::span<const WeakLabel> b) {
  if (a.size() != b.size()) throw LengthMismatch("vote vectors differ in length");
  std::size_t either = 0, agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_abstain() && b[i].is_abstain()) continue;
    ++either;
    if (a[i] == b[i]) ++agree;
  }
  return either == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(either);
}

namespace {

using VotesFn = std::function<const std::vector<WeakLabel>&(const LabelFunction&)>;

double similarity(const LabelFunction& a, const LabelFunction& b, const VotesFn& votes) {
  if (a.is_surface() && b.is_surface()) return surface_similarity(a.surface(), b.surface());
  return agreement_rate(votes(a), votes(b));
}

DedupResult dedup_impl(std::vector<LabelFunction> candidates,
                       std::span<const LabelFunction> existing, double tau,
                       const VotesFn& votes) {
  if (!(tau > 0.0 && tau <= 1.0)) throw PreconditionError("tau must be in (0, 1]");
  DedupResult r;
  for (auto& cand : candidates) {
    std::optional<DuplicateRecord> dup;
    auto check = [&](const LabelFunction& other) {
      if (dup || other.category() != cand.category()) return;
      const double s = similarity(cand, other, votes);
      if (s >= tau) dup = DuplicateRecord{cand.id(), other.id(), s};
    };
    for (const auto& e : existing) check(e);
    for (const auto& n : r.novel) check(n);
    if (dup) {
      r.dropped.push_back(*dup);
    } else {
      r.novel.push_back(std::move(cand));
    }
  }
  return r;
}

}  // namespace

DedupResult deduplicate(std::vector<LabelFunction> candidates,
                        std::span<const LabelFunction> existing, double tau,
                        FeatureCache& sample) {
  std::unordered_map<std::string, std::vector<WeakLabel>> memo;
  VotesFn votes = [&](const LabelFunction& lf) -> const std::vector<WeakLabel>& {
    auto it = memo.find(lf.id());
    if (it == memo.end()) it = memo.emplace(lf.id(), apply_lf_all(lf, sample)).first;
    return it->second;
  };
  return dedup_impl(std::move(candidates), existing, tau, votes);
}

json FilterReport::to_json() const {
  auto removals = [](const std::vector<Removal>& rs) {
    json a = json::array();
    for (const auto& r : rs) a.push_back({{"lf_id", r.lf_id}, {"accuracy", r.accuracy}});
    return a;
  };
  auto by_cat = [](const auto& m) {
    json o = json::object();
    for (const auto& [c, v] : m) o[std::string(autolf::to_string(c))] = v;
    return o;
  };
  json dups = json::array();
  for (const auto& d : removed_duplicate) {
    dups.push_back({{"lf_id", d.lf_id}, {"similar_to", d.similar_to}, {"similarity", d.similarity}});
  }
  return {{"round", round},
          {"generated", by_cat(generated)},
          {"theta_intra", by_cat(theta_intra)},
          {"theta_inter", theta_inter},
          {"removed_intra", removals(removed_intra)},
          {"removed_inter", removals(removed_inter)},
          {"removed_duplicate", dups},
          {"removed_truncation", removals(removed_truncation)},
          {"pool_size", by_cat(pool_size)}};
}

std::vector<LabelFunction> LfPool::flatten() const {
  std::vector<LabelFunction> out;
  for (const auto& [cat, lfs] : by_category) out.insert(out.end(), lfs.begin(), lfs.end());
  return out;
}

CoverageHint coverage_hint(std::span<const std::vector<WeakLabel>> votes_by_lf,
                           std::size_t num_docs, std::span<const double> class_prior) {
  const std::size_t C = class_prior.size();
  CoverageHint hint;
  hint.class_gap.assign(C, 0.0);
  if (num_docs == 0) return hint;
  std::vector<double> share(C, 0.0);
  std::size_t uncovered = 0, covered = 0;
  std::vector<int> counts(C);
  for (std::size_t i = 0; i < num_docs; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    bool any = false;
    for (const auto& v : votes_by_lf) {
      if (!v[i].is_abstain()) {
        ++counts[static_cast<std::size_t>(v[i].value)];
        any = true;
      }
    }
    if (!any) {
      ++uncovered;
      continue;
    }
    ++covered;
    share[static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) -
                                   counts.begin())] += 1.0;
  }
  hint.uncovered_fraction = static_cast<double>(uncovered) / static_cast<double>(num_docs);
  for (std::size_t c = 0; c < C; ++c) {
    const double s = covered ? share[c] / static_cast<double>(covered) : 0.0;
    hint.class_gap[c] = std::max(0.0, class_prior[c] - s);
    if (hint.class_gap[c] > 0.01) hint.gap_classes.push_back(static_cast<ClassIndex>(c));
  }
  std::stable_sort(hint.gap_classes.begin(), hint.gap_classes.end(),
                   [&](ClassIndex a, ClassIndex b) {
                     return hint.class_gap[static_cast<std::size_t>(a)] >
                            hint.class_gap[static_cast<std::size_t>(b)];
                   });
  return hint;
}

namespace {

bool by_accuracy_then_id(const LabelFunction& a, const LabelFunction& b) {
  if (a.est_accuracy != b.est_accuracy) return a.est_accuracy > b.est_accuracy;
  return a.id() < b.id();
}

}  // namespace

ExploitationResult run_exploitation_loop(const Dataset& dataset,
                                         const ExploitationConfig& config,
                                         const std::map<Category, CandidateGenerator>& generators,
                                         FeatureCache* seed_cache,
                                         FeatureCache* unlabeled_cache) {
  if (config.max_rounds < 1) throw PreconditionError("max_rounds must be >= 1");
  for (const auto& [cat, k] : config.k_per_category) {
    if (k < 1) throw PreconditionError("K_c must be >= 1");
  }
  const std::vector<Document> seed_docs = documents_of(dataset.seed);
  const std::vector<ClassIndex> seed_gold = golds_of(dataset.seed);
  FeatureCache own_seed(seed_docs), own_unl(dataset.unlabeled);
  FeatureCache& seed_fc = seed_cache ? *seed_cache : own_seed;
  FeatureCache& unl_fc = unlabeled_cache ? *unlabeled_cache : own_unl;

  const std::size_t N = dataset.unlabeled.size();
  const std::size_t C = dataset.labels.size();
  std::vector<double> prior(C, 0.0);
  for (auto g : seed_gold) prior[static_cast<std::size_t>(g)] += 1.0;
  for (double& p : prior) p /= static_cast<double>(seed_gold.size());

  // Dedup sample: min(N, agreement_sample) positions of D, fixed seed.
  std::vector<std::size_t> sample(N);
  std::iota(sample.begin(), sample.end(), std::size_t{0});
  {
    Rng rng = make_rng(config.sample_seed);
    shuffle(sample, rng);
    sample.resize(std::min(N, config.agreement_sample));
    std::sort(sample.begin(), sample.end());
  }

  std::unordered_map<std::string, std::vector<WeakLabel>> unl_votes;
  std::unordered_map<std::string, std::vector<WeakLabel>> sample_votes;
  auto votes_on_d = [&](const LabelFunction& lf) -> const std::vector<WeakLabel>& {
    auto it = unl_votes.find(lf.id());
    if (it == unl_votes.end()) it = unl_votes.emplace(lf.id(), apply_lf_all(lf, unl_fc)).first;
    return it->second;
  };
  VotesFn votes_on_sample = [&](const LabelFunction& lf) -> const std::vector<WeakLabel>& {
    auto it = sample_votes.find(lf.id());
    if (it == sample_votes.end()) {
      const auto& all = votes_on_d(lf);
      std::vector<WeakLabel> v;
      v.reserve(sample.size());
      for (auto i : sample) v.push_back(all[i]);
      it = sample_votes.emplace(lf.id(), std::move(v)).first;
    }
    return it->second;
  };
  auto target = [&](Category c) {
    auto it = config.k_per_category.find(c);
    return it == config.k_per_category.end() ? 20 : it->second;
  };

  ExploitationResult result;
  LfPool& pool = result.pool;
  for (const auto& [cat, gen] : generators) pool.by_category[cat];
  CoverageHint hint;
  hint.class_gap.assign(C, 0.0);

  auto all_full = [&] {
    for (const auto& [cat, gen] : generators) {
      if (static_cast<int>(pool.by_category[cat].size()) < target(cat)) return false;
    }
    return true;
  };

  for (int round = 1; round <= config.max_rounds; ++round) {
    pool.round = round;
    FilterReport report;
    report.round = round;
    CategoryPools working = pool.by_category;
    for (const auto& [cat, gen] : generators) {
      auto& kept = working[cat];
      if (static_cast<int>(kept.size()) >= target(cat)) continue;
      CandidateBatch batch = gen(round, config.candidates_per_round, hint);
      report.generated[cat] = static_cast<int>(batch.lfs.size());
      pool.skip_reports.insert(pool.skip_reports.end(), batch.skipped.begin(),
                               batch.skipped.end());
      std::vector<LabelFunction> fresh;
      for (auto& lf : batch.lfs) {
        if (unl_votes.count(lf.id())) {
          throw PreconditionError("generator reused LF id " + lf.id());
        }
        lf.est_accuracy = accuracy_of_votes(apply_lf_all(lf, seed_fc), seed_gold);
        lf.est_coverage = coverage_of_votes(votes_on_d(lf));
        fresh.push_back(std::move(lf));
      }
      const auto tau_it = config.tau.find(cat);
      const double tau = tau_it == config.tau.end() ? 0.98 : tau_it->second;
      auto dedup = dedup_impl(std::move(fresh), kept, tau, votes_on_sample);
      report.removed_duplicate.insert(report.removed_duplicate.end(), dedup.dropped.begin(),
                                      dedup.dropped.end());
      for (auto& lf : dedup.novel) kept.push_back(std::move(lf));
    }

    std::map<Category, double> thetas;
    for (auto& [cat, lfs] : working) {
      auto intra = intra_filter(std::move(lfs), config.alpha);
      thetas[cat] = intra.theta;
      for (const auto& lf : intra.removed) {
        report.removed_intra.push_back({lf.id(), lf.est_accuracy});
      }
      lfs = std::move(intra.kept);
    }
    report.theta_intra = thetas;
    auto inter = inter_filter(std::move(working), thetas);
    report.theta_inter = inter.theta_inter;
    for (const auto& lf : inter.removed) {
      report.removed_inter.push_back({lf.id(), lf.est_accuracy});
    }
    for (auto& [cat, lfs] : inter.kept) {
      std::sort(lfs.begin(), lfs.end(), by_accuracy_then_id);
      const auto k = static_cast<std::size_t>(target(cat));
      for (std::size_t i = k; i < lfs.size(); ++i) {
        report.removed_truncation.push_back({lfs[i].id(), lfs[i].est_accuracy});
      }
      if (lfs.size() > k) lfs.erase(lfs.begin() + static_cast<std::ptrdiff_t>(k), lfs.end());
      report.pool_size[cat] = static_cast<int>(lfs.size());
    }
    pool.by_category = std::move(inter.kept);
    result.reports.push_back(std::move(report));

    if (all_full()) break;
    std::vector<std::vector<WeakLabel>> current;
    for (const auto& [cat, lfs] : pool.by_category) {
      for (const auto& lf : lfs) current.push_back(votes_on_d(lf));
    }
    hint = coverage_hint(current, N, prior);
  }

  for (const auto& [cat, gen] : generators) {
    const int have = static_cast<int>(pool.by_category[cat].size());
    if (have < target(cat)) pool.shortfall[cat] = have;
  }
  pool.hit_round_limit = !pool.shortfall.empty();
  return result;
}

}  // namespace autolf
