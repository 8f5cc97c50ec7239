#pragma once

#include <array>
#include <string>
#include <vector>

#include "amrgen/corpus.hpp"
#include "amrgen/oracle.hpp"

namespace amrgen {

enum class NameStyle { Initial, Label };

// Columns: stack, cache, buffer, edges, word span, preceding action.
using RunRow = std::array<std::string, 6>;

// One row for the initial configuration and one per action. Vertices and
// edges are named by label (or its first character); buffer and remaining
// edges are listed in breadth-first order from the root.
std::vector<RunRow> render_run(const AlignedExample& example, const OracleTrace& trace, int k,
                               NameStyle style = NameStyle::Initial);

// Fixed-width text table with a header line.
std::string format_table(const std::vector<RunRow>& rows);

}  // namespace amrgen
