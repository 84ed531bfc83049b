#pragma once

#include <string>
#include <string_view>

#include "autolf/corpus.hpp"

namespace autolf {

inline constexpr ClassIndex kAbstain = -1;

// A class index in [0, C) or kAbstain.
struct WeakLabel {
  ClassIndex value = kAbstain;

  static constexpr WeakLabel abstain() { return {}; }
  static constexpr WeakLabel of(ClassIndex k) { return {k}; }
  constexpr bool is_abstain() const { return value == kAbstain; }

  friend constexpr bool operator==(WeakLabel, WeakLabel) = default;
};

enum class Category { Surface = 0, Structural = 1, Semantic = 2 };
inline constexpr Category kCategories[] = {Category::Surface, Category::Structural,
                                           Category::Semantic};

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);

}  // namespace autolf
