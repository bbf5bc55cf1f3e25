#pragma once

#include <cstdint>

namespace asmf {

// Byte range in the source text plus the 1-based line/column of its start.
// Synthesized nodes carry a zero span.
struct SourceSpan {
  uint32_t begin = 0;
  uint32_t end = 0;
  uint32_t line = 0;
  uint32_t column = 0;
};

} // namespace asmf
