#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace seaforge {

enum class SeaState : std::uint8_t { ss1 = 1, ss2 = 2, ss3 = 3, ss4 = 4 };

inline constexpr std::array<SeaState, 4> kAllSeaStates = {SeaState::ss1, SeaState::ss2,
                                                          SeaState::ss3, SeaState::ss4};

inline constexpr int level(SeaState s) { return static_cast<int>(s); }
inline constexpr std::size_t index_of(SeaState s) { return static_cast<std::size_t>(s) - 1; }

/// Throws Errc::validation_error outside 1..4.
SeaState sea_state_from_level(int level);

/// "SS1".."SS4"; also the output directory names.
std::string_view sea_state_name(SeaState s);
std::optional<SeaState> parse_sea_state(std::string_view text);

/// ABS surface description for the level.
std::string_view sea_state_description(SeaState s);

}  // namespace seaforge
