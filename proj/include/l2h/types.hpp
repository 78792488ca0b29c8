#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace l2h {

using ClusterId = std::uint32_t;
using NodeId = std::uint32_t;
using ClassId = std::uint32_t;
using RowIndex = std::size_t;

inline constexpr NodeId no_node = std::numeric_limits<NodeId>::max();

} // namespace l2h
