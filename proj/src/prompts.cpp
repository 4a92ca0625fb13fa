#include "seaforge/prompts.hpp"

namespace seaforge {

PromptBank PromptBank::defaults() {
  static constexpr const char* kCamera =
      " Canon EOS R3, Nikon d850 400mm, Canon DSLR, lens 300mm, 4K, HD.";
  PromptBank bank;
  bank.generic_ =
      "Aerial image of sea's surface. Canon EOS R3, Nikon d850 400mm, Canon DSLR, lens 300mm, "
      "4K, HD";
  const std::string lead = "Aerial image of the sea's surface.";
  bank.per_state_[SeaState::ss1] = lead + " The water is gently rippled with no waves breaking." + kCamera;
  bank.per_state_[SeaState::ss2] =
      lead + " There are slight waves breaking with smooth wave on surface." + kCamera;
  bank.per_state_[SeaState::ss3] =
      lead + " Mild Waves are slight causing rock buoys and small craft." + kCamera;
  bank.per_state_[SeaState::ss4] =
      lead + " The water has furrowed appearance with moderate waves." + kCamera;
  return bank;
}

}  // namespace seaforge
