#pragma once

#include <map>
#include <optional>
#include <string>

#include "seaforge/sea_state.hpp"

namespace seaforge {

/// Text prompts for background editing: one generic prompt and one per sea state.
class PromptBank {
 public:
  /// The stock bank used by both adapter profiles.
  static PromptBank defaults();

  const std::string& generic() const { return generic_; }
  const std::string& for_state(SeaState s) const { return per_state_.at(s); }

  void set_generic(std::string prompt) { generic_ = std::move(prompt); }
  void set_for_state(SeaState s, std::string prompt) { per_state_[s] = std::move(prompt); }

 private:
  std::string generic_;
  std::map<SeaState, std::string> per_state_;
};

}  // namespace seaforge
