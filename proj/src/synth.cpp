#include "autolf/synth.hpp"

#include <cstdio>

#include "autolf/errors.hpp"
#include "autolf/rng.hpp"

namespace autolf {

namespace {

constexpr std::size_t kClassVocab = 8;
constexpr std::size_t kCoreCues = 2;
constexpr std::size_t kNeutralVocab = 150;
constexpr std::size_t kAmbiguousVocab = 20;

std::string word(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%zu", prefix, i);
  return buf;
}

std::string class_word(ClassIndex c, std::size_t i) {
  return word(c == 0 ? "lumo" : "vexa", i);
}

struct DocRecipe {
  ClassIndex gold = 0;
  bool ambiguous = false;
};

std::string make_text(const DocRecipe& r, SynthKind kind, Rng& rng) {
  const std::size_t length = 8 + uniform_index(rng, 7);  // 8..14 tokens
  std::vector<std::string> tokens;
  if (!r.ambiguous) {
    const std::size_t n_class = 2 + uniform_index(rng, 3);
    for (std::size_t i = 0; i < n_class; ++i) {
      tokens.push_back(class_word(r.gold, uniform_index(rng, kClassVocab)));
    }
    if (kind == SynthKind::Separable) {
      tokens.push_back(word("key", static_cast<std::size_t>(r.gold)));
    } else if (bernoulli(rng, 0.5)) {
      // Peripheral cues leak into the other class's clean documents.
      tokens.push_back(
          class_word(1 - r.gold, kCoreCues + uniform_index(rng, kClassVocab - kCoreCues)));
    }
  } else {
    for (std::size_t i = 0; i < 3; ++i) {
      tokens.push_back(word("amb", uniform_index(rng, kAmbiguousVocab)));
    }
    // One core cue of the gold class plus two peripheral cues, each of a
    // random class. Core cues stay exact; peripheral ones are a coin flip here.
    tokens.push_back(class_word(r.gold, uniform_index(rng, kCoreCues)));
    for (std::size_t i = 0; i < 2; ++i) {
      const auto c = static_cast<ClassIndex>(uniform_index(rng, 2));
      tokens.push_back(class_word(c, kCoreCues + uniform_index(rng, kClassVocab - kCoreCues)));
    }
  }
  while (tokens.size() < length) tokens.push_back(word("nw", uniform_index(rng, kNeutralVocab)));
  shuffle(tokens, rng);
  std::string text;
  for (const auto& t : tokens) {
    if (!text.empty()) text += ' ';
    text += t;
  }
  return text;
}

}  // namespace

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "separable") return SynthKind::Separable;
  if (s == "noisy") return SynthKind::Noisy;
  throw PreconditionError("unknown synthetic corpus kind: " + s);
}

Dataset make_synthetic(const SynthSpec& spec) {
  if (spec.n_unlabeled < 1 || spec.n_seed < 2) {
    throw PreconditionError("synthetic corpus needs >= 1 unlabeled and >= 2 seed documents");
  }
  Rng rng = make_rng(spec.seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  Dataset ds;
  ds.labels = LabelSpace({"neg", "pos"});
  auto recipe = [&](std::size_t i, std::size_t n) {
    DocRecipe r;
    // Balanced classes, alternating keeps seed splits two-class.
    r.gold = static_cast<ClassIndex>(i % 2);
    r.ambiguous = spec.kind == SynthKind::Noisy &&
                  static_cast<double>(i / 2) < spec.noise_fraction * static_cast<double>(n / 2);
    return r;
  };
  auto build = [&](const char* prefix, std::size_t n) {
    std::vector<LabeledExample> out;
    std::vector<DocRecipe> recipes;
    for (std::size_t i = 0; i < n; ++i) recipes.push_back(recipe(i, n));
    shuffle(recipes, rng);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({{word(prefix, i), make_text(recipes[i], spec.kind, rng)}, recipes[i].gold});
    }
    return out;
  };
  for (auto& e : build("u", spec.n_unlabeled)) {
    ds.unlabeled.push_back(std::move(e.doc));
    ds.unlabeled_gold.emplace_back(e.gold);
  }
  ds.seed = build("s", spec.n_seed);
  ds.test = build("t", spec.n_test);
  validate(ds);
  return ds;
}

}  // namespace autolf
