#include "seaforge/sea_state.hpp"

#include "seaforge/error.hpp"

namespace seaforge {

SeaState sea_state_from_level(int level) {
  if (level < 1 || level > 4) {
    throw Error(Errc::validation_error, "sea state level out of range: " + std::to_string(level));
  }
  return static_cast<SeaState>(level);
}

std::string_view sea_state_name(SeaState s) {
  switch (s) {
    case SeaState::ss1: return "SS1";
    case SeaState::ss2: return "SS2";
    case SeaState::ss3: return "SS3";
    case SeaState::ss4: return "SS4";
  }
  return "SS?";
}

std::optional<SeaState> parse_sea_state(std::string_view text) {
  if (text.size() == 3 && (text[0] == 'S' || text[0] == 's') && (text[1] == 'S' || text[1] == 's')) {
    text.remove_prefix(2);
  }
  if (text.size() == 1 && text[0] >= '1' && text[0] <= '4') {
    return static_cast<SeaState>(text[0] - '0');
  }
  return std::nullopt;
}

std::string_view sea_state_description(SeaState s) {
  switch (s) {
    case SeaState::ss1:
      return "The water exhibits a gentle ripple, devoid of breaking waves, featuring a low "
             "swell of short to average length occasionally.";
    case SeaState::ss2:
      return "Slight waves breaking, with smooth waves on the water surface";
    case SeaState::ss3:
      return "Mildly increased waves, leading to some rock buoys and causing minor disturbances "
             "for small craft";
    case SeaState::ss4:
      return "The sea takes on a furrowed appearance, characterized by moderate waves";
  }
  return "";
}

}  // namespace seaforge
