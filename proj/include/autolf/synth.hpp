#pragma once

#include <cstdint>
#include <string>

#include "autolf/corpus.hpp"

namespace autolf {

enum class SynthKind { Separable, Noisy };

// Two-class corpora with class-discriminative token distributions. Each class
// owns an 8-word cue vocabulary; words 0-1 are its core cues, 2-7 peripheral.
//
// Separable: every class-c document contains the marker token "keyc" plus
// 2-4 cues of class c, so the rule {keyc -> c} alone labels the corpus with
// F1 = 1.
//
// Noisy: a `noise_fraction` share of each split comes from an ambiguous
// distribution: three shared ambiguous tokens, one core cue of the gold class
// and two peripheral cues of random classes. Clean documents carry 2-4 cues of
// their class and, half the time, one peripheral cue of the other class.
struct SynthSpec {
  SynthKind kind = SynthKind::Separable;
  std::size_t n_unlabeled = 2000;
  std::size_t n_seed = 40;
  std::size_t n_test = 400;
  double noise_fraction = 0.2;
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SynthSpec& spec);

SynthKind synth_kind_from_string(const std::string& s);

}  // namespace autolf
