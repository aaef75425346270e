#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace jigsaw {

// Where the second piece sits relative to the first.
enum class Direction { Right = 0, Down = 1, Left = 2, Up = 3 };

inline constexpr std::array<Direction, 4> kAllDirections = {Direction::Right, Direction::Down,
                                                            Direction::Left, Direction::Up};

constexpr int index(Direction d) { return static_cast<int>(d); }

constexpr Direction opposite(Direction d) {
  switch (d) {
    case Direction::Right: return Direction::Left;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Up: return Direction::Down;
  }
  return d;
}

// Grid offset (row, col) of the neighbor in direction d.
constexpr int row_step(Direction d) { return d == Direction::Down ? 1 : d == Direction::Up ? -1 : 0; }
constexpr int col_step(Direction d) { return d == Direction::Right ? 1 : d == Direction::Left ? -1 : 0; }

constexpr std::string_view name(Direction d) {
  switch (d) {
    case Direction::Right: return "right";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Up: return "up";
  }
  return "?";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  for (Direction d : kAllDirections) {
    if (name(d) == s) return d;
  }
  return std::nullopt;
}

}  // namespace jigsaw
