#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "riskpipe/error.hpp"

namespace riskpipe {

// Closed skill taxonomy with fixed ordinal encoding.
enum class SkillLabel : int {
  Idle = 0,
  Move = 1,
  Pick = 2,
  Carry = 3,
  Place = 4,
};

inline constexpr std::size_t kNumSkills = 5;

inline constexpr std::array<SkillLabel, kNumSkills> all_skills() {
  return {SkillLabel::Idle, SkillLabel::Move, SkillLabel::Pick,
          SkillLabel::Carry, SkillLabel::Place};
}

inline const char* to_string(SkillLabel s) {
  switch (s) {
    case SkillLabel::Idle:
      return "idle";
    case SkillLabel::Move:
      return "move";
    case SkillLabel::Pick:
      return "pick";
    case SkillLabel::Carry:
      return "carry";
    case SkillLabel::Place:
      return "place";
  }
  throw ValidationError("unknown skill ordinal");
}

inline SkillLabel skill_from_string(const std::string& s) {
  for (SkillLabel l : all_skills()) {
    if (s == to_string(l)) return l;
  }
  throw FormatError("unknown skill label: " + s);
}

}  // namespace riskpipe
