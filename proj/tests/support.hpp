#pragma once

// Fixtures and brute-force reference implementations shared by the test
// binaries. The reference code is written without calling the library's
// numeric routines so that agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "autolf/candidates.hpp"
#include "autolf/corpus.hpp"
#include "autolf/exploitation.hpp"
#include "autolf/features.hpp"
#include "autolf/label_function.hpp"
#include "autolf/label_model.hpp"
#include "autolf/linear.hpp"
#include "autolf/rng.hpp"
#include "autolf/types.hpp"

namespace testing {

using namespace autolf;

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("autolf_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// One-hot feature per known document id. Lets a linear classifier emit an
// arbitrary, per-document vote table.
class IndexFeaturizer final : public Featurizer {
 public:
  explicit IndexFeaturizer(const std::vector<std::string>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) index_[ids[i]] = i;
  }
  SparseVec featurize(const Document& doc) const override {
    SparseVec v;
    v.dim = index_.size();
    auto it = index_.find(doc.id);
    if (it != index_.end()) {
      v.index.push_back(static_cast<std::uint32_t>(it->second));
      v.value.push_back(1.0);
    }
    return v;
  }
  std::size_t dim() const override { return index_.size(); }
  std::string describe() const override { return "index"; }

 private:
  std::map<std::string, std::size_t> index_;
};

// A classifier LF that votes votes[id] on listed documents and abstains
// elsewhere (uniform probabilities never exceed omega = 0.9).
inline LabelFunction table_lf(const std::string& id, Category cat,
                              const std::map<std::string, ClassIndex>& votes,
                              const std::shared_ptr<const IndexFeaturizer>& feat,
                              std::size_t num_classes, double accuracy = 0.0) {
  LinearClassifier clf(num_classes, feat->dim());
  for (const auto& [doc_id, cls] : votes) {
    if (cls == kAbstain) continue;
    const auto x = feat->featurize(Document{doc_id, ""});
    clf.w(static_cast<std::size_t>(cls), x.index.at(0)) = 30.0;
  }
  LabelFunction lf(id, cat, CalibratedClassifierLF{clf, feat, 0.9});
  lf.est_accuracy = accuracy;
  return lf;
}

// LF carrying only an accuracy, for filter tests.
inline LabelFunction acc_lf(const std::string& id, Category cat, double acc) {
  SurfaceRule r;
  r.patterns[0].insert("tok_" + id);
  LabelFunction lf(id, cat, r);
  lf.est_accuracy = acc;
  return lf;
}

inline std::vector<std::string> ids_of(const std::vector<LabelFunction>& lfs) {
  std::vector<std::string> out;
  for (const auto& lf : lfs) out.push_back(lf.id());
  return out;
}

inline LabelMatrix matrix_from(const std::vector<std::vector<int>>& rows) {
  std::vector<std::string> rid, cid;
  for (std::size_t i = 0; i < rows.size(); ++i) rid.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < rows.at(0).size(); ++j) cid.push_back("lf" + std::to_string(j));
  LabelMatrix m(rid, cid);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.set(i, j, WeakLabel{rows[i][j]});
  }
  return m;
}

inline LabelMatrix random_matrix(Rng& rng, std::size_t n, std::size_t m, std::size_t C,
                                 double p_abstain) {
  std::vector<std::vector<int>> rows(n, std::vector<int>(m));
  for (auto& r : rows) {
    for (auto& v : r) {
      v = bernoulli(rng, p_abstain) ? kAbstain : static_cast<int>(uniform_index(rng, C));
    }
  }
  return matrix_from(rows);
}

// LFs of given accuracies that always vote: correct with probability acc,
// otherwise a uniformly chosen wrong class.
inline LabelMatrix accuracy_design(Rng& rng, const std::vector<int>& gold,
                                   const std::vector<double>& accs, std::size_t C) {
  std::vector<std::vector<int>> rows(gold.size(), std::vector<int>(accs.size()));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < accs.size(); ++j) {
      if (bernoulli(rng, accs[j])) {
        rows[i][j] = gold[i];
      } else {
        int w = static_cast<int>(uniform_index(rng, C - 1));
        if (w >= gold[i]) ++w;
        rows[i][j] = w;
      }
    }
  }
  return matrix_from(rows);
}

// ---------------------------------------------------------------------------
// Reference formulas.

// Weighted harmonic mean written as (1 + b^2) / (b^2 / c + 1 / p).
inline double oracle_whm(double p, double c, double beta) {
  if (p <= 0.0 || c <= 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) / (b2 / c + 1.0 / p);
}

struct OracleFilter {
  double theta = 0.0;
  std::set<std::string> kept;
};

inline OracleFilter oracle_intra(const std::vector<std::pair<std::string, double>>& accs,
                                 double alpha) {
  OracleFilter r;
  if (accs.empty()) return r;
  double best = accs[0].second;
  for (const auto& a : accs) best = a.second > best ? a.second : best;
  r.theta = alpha * best;
  for (const auto& a : accs) {
    if (!(a.second < r.theta)) r.kept.insert(a.first);
  }
  return r;
}

inline double oracle_inter_theta(const std::vector<double>& thetas) {
  double best = 0.0;
  for (double t : thetas) best = t > best ? t : best;
  return best / 2.0;
}

inline double oracle_coverage(const std::vector<std::vector<int>>& rows) {
  std::size_t hit = 0;
  for (const auto& r : rows) {
    bool any = false;
    for (int v : r) any = any || v != kAbstain;
    hit += any ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

struct OracleF1 {
  std::vector<double> per_class;
  double weighted = 0.0;
};

// Counts TP, FP and FN for each class by walking the item list once per class.
inline OracleF1 oracle_f1(const std::vector<int>& pred, const std::vector<int>& gold,
                          std::size_t C) {
  OracleF1 r;
  const double n = static_cast<double>(gold.size());
  for (std::size_t c = 0; c < C; ++c) {
    const int k = static_cast<int>(c);
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == k) support += 1;
      if (pred[i] == k && gold[i] == k) tp += 1;
      if (pred[i] == k && gold[i] != k) fp += 1;
      if (pred[i] != k && gold[i] == k) fn += 1;
    }
    // F1 = 2TP / (2TP + FP + FN), which is 0 exactly when P + R = 0.
    const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    r.per_class.push_back(f1);
    r.weighted += support / n * f1;
  }
  return r;
}

struct OracleCurve {
  double best_omega = 0.0;
  std::vector<double> whm;
};

// Exhaustive grid search, grid points 0, 1/n, ..., 1 with n = round(1/step).
inline OracleCurve oracle_calibrate(const std::vector<std::vector<double>>& seed_probs,
                                    const std::vector<int>& gold,
                                    const std::vector<std::vector<double>>& cov_probs,
                                    double beta, int n) {
  auto top = [](const std::vector<double>& p) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < p.size(); ++c) {
      if (p[c] > p[arg]) arg = c;
    }
    return std::pair<double, int>{p[arg], static_cast<int>(arg)};
  };
  OracleCurve r;
  double best = -1.0;
  for (int k = 0; k <= n; ++k) {
    const double omega = static_cast<double>(k) / n;
    double votes = 0, correct = 0, cov = 0;
    for (std::size_t i = 0; i < seed_probs.size(); ++i) {
      auto [p, c] = top(seed_probs[i]);
      if (p > omega) {
        votes += 1;
        correct += c == gold[i] ? 1 : 0;
      }
    }
    for (const auto& q : cov_probs) cov += top(q).first > omega ? 1 : 0;
    const double prec = correct / (votes + 1e-9);
    const double w = oracle_whm(prec, cov / static_cast<double>(cov_probs.size()), beta);
    r.whm.push_back(w);
    if (w > best) {
      best = w;
      r.best_omega = omega;
    }
  }
  return r;
}

// Dawid-Skene EM in probability space (no logs), straight from the textbook
// update equations with add-delta smoothing and majority-vote initialization.
struct OracleDs {
  std::vector<double> prior;
  std::vector<std::vector<std::vector<double>>> conf;  // [lf][true][obs]
  std::vector<std::vector<double>> post;
  int iterations = 0;
};

inline OracleDs oracle_dawid_skene(const std::vector<std::vector<int>>& L, std::size_t C,
                                   int max_iter, double tol) {
  const std::size_t n = L.size(), m = L[0].size();
  const double delta = 1e-6;
  OracleDs r;
  r.post.assign(n, std::vector<double>(C, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double tot = 0;
    for (int v : L[i]) {
      if (v != kAbstain) {
        r.post[i][static_cast<std::size_t>(v)] += 1;
        tot += 1;
      }
    }
    for (auto& p : r.post[i]) p = tot > 0 ? p / tot : 1.0 / static_cast<double>(C);
  }
  for (int it = 0; it < max_iter; ++it) {
    r.prior.assign(C, delta);
    double z = 0;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t i = 0; i < n; ++i) r.prior[c] += r.post[i][c];
      z += r.prior[c];
    }
    for (auto& p : r.prior) p /= z;
    r.conf.assign(m, std::vector<std::vector<double>>(C, std::vector<double>(C, delta)));
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t t = 0; t < C; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          if (L[i][j] != kAbstain) r.conf[j][t][static_cast<std::size_t>(L[i][j])] += r.post[i][t];
        }
        double rz = 0;
        for (double v : r.conf[j][t]) rz += v;
        for (double& v : r.conf[j][t]) v /= rz;
      }
    }
    double change = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> q(C);
      double qz = 0;
      for (std::size_t t = 0; t < C; ++t) {
        q[t] = r.prior[t];
        for (std::size_t j = 0; j < m; ++j) {
          if (L[i][j] != kAbstain) q[t] *= r.conf[j][t][static_cast<std::size_t>(L[i][j])];
        }
        qz += q[t];
      }
      for (std::size_t t = 0; t < C; ++t) {
        q[t] /= qz;
        change = std::max(change, std::abs(q[t] - r.post[i][t]));
      }
      r.post[i] = q;
    }
    r.iterations = it + 1;
    if (change < tol) break;
  }
  return r;
}

inline std::vector<std::vector<int>> rows_of(const LabelMatrix& m) {
  std::vector<std::vector<int>> out(m.rows(), std::vector<int>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m.at(i, j).value;
  }
  return out;
}

inline double hard_accuracy(const std::vector<ProbabilisticLabel>& probs,
                            const std::vector<int>& gold) {
  double ok = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& d = probs[i].dist;
    ok += static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin()) == gold[i] ? 1 : 0;
  }
  return ok / static_cast<double>(gold.size());
}

// Add-1 smoothed log-odds of a token for `cls`, over document frequencies.
inline double oracle_log_odds(const std::vector<std::pair<std::string, std::string>>& ex,
                              const std::string& token, const std::string& cls) {
  double in = 0, out = 0, din = 0, dout = 0;
  for (const auto& [text, label] : ex) {
    std::istringstream s(text);
    std::string w;
    bool has = false;
    while (s >> w) has = has || w == token;
    if (label == cls) {
      in += 1;
      din += has;
    } else {
      out += 1;
      dout += has;
    }
  }
  const double pi = (din + 1) / (in + 2), po = (dout + 1) / (out + 2);
  return std::log(pi / (1 - pi)) - std::log(po / (1 - po));
}

// Signed hashing embedding recomputed from the FNV-1a definition.
inline std::uint64_t oracle_fnv(const std::string& s, std::uint64_t h) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::vector<double> oracle_hash_embed(const std::vector<std::string>& tokens,
                                             std::size_t dim) {
  std::vector<std::string> grams = tokens;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) grams.push_back(tokens[i] + " " + tokens[i + 1]);
  std::vector<double> v(dim, 0.0);
  for (const auto& g : grams) {
    const auto idx = oracle_fnv(g, 0x9e3779b97f4a7c15ULL) % dim;
    const double sign = (oracle_fnv(g, 0xc2b2ae3d27d4eb4fULL) >> 63) ? 1.0 : -1.0;
    v[idx] += sign;
  }
  double nrm = 0;
  for (double x : v) nrm += x * x;
  nrm = std::sqrt(nrm);
  if (nrm > 0) {
    for (double& x : v) x /= nrm;
  }
  return v;
}

inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Random dataset with short alphabetic texts; used by round-trip properties.
inline Dataset random_dataset(Rng& rng, std::size_t C = 2) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < C; ++c) names.push_back("class" + std::to_string(c));
  Dataset ds;
  ds.labels = LabelSpace(names);
  auto text = [&] {
    std::string t;
    const auto n = uniform_index(rng, 6);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!t.empty()) t += ' ';
      t += "w" + std::to_string(uniform_index(rng, 20));
      if (bernoulli(rng, 0.1)) t += ", \"quoted\"\tand\\slash";
    }
    return t;
  };
  const auto nu = 1 + uniform_index(rng, 8), ns = 1 + uniform_index(rng, 6),
             nt = uniform_index(rng, 5);
  for (std::uint64_t i = 0; i < nu; ++i) {
    ds.unlabeled.push_back({"u" + std::to_string(i), text()});
    ds.unlabeled_gold.emplace_back(std::nullopt);
  }
  for (std::uint64_t i = 0; i < ns; ++i) {
    ds.seed.push_back({{"s" + std::to_string(i), text()},
                       static_cast<ClassIndex>(uniform_index(rng, C))});
  }
  for (std::uint64_t i = 0; i < nt; ++i) {
    ds.test.push_back({{"t" + std::to_string(i), text()},
                       static_cast<ClassIndex>(uniform_index(rng, C))});
  }
  return ds;
}

}  // namespace testing
