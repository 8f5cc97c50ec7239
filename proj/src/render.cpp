#include "amrgen/render.hpp"

#include <algorithm>

namespace amrgen {

namespace {

std::string name(const std::string& label, NameStyle style) {
  if (style == NameStyle::Label || label.empty()) return label;
  return label.substr(0, 1);
}

std::string join(const std::vector<std::string>& items, const char* open, const char* close) {
  std::string out = open;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out + close;
}

}  // namespace

std::vector<RunRow> render_run(const AlignedExample& ex, const OracleTrace& trace, int k, NameStyle style) {
  const AmrGraph& g = ex.graph;
  const auto bfs = g.breadth_first_order();
  std::vector<int> rank(g.size());
  for (std::size_t i = 0; i < bfs.size(); ++i) rank[bfs[i]] = static_cast<int>(i);
  std::vector<std::size_t> edge_order(g.edges.size());
  for (std::size_t e = 0; e < edge_order.size(); ++e) edge_order[e] = e;
  std::stable_sort(edge_order.begin(), edge_order.end(),
                   [&](std::size_t a, std::size_t b) { return rank[g.edges[a].src] < rank[g.edges[b].src]; });

  auto vertex = [&](ConceptId v) { return name(g.concepts[v], style); };
  auto slot = [&](CacheSlot s) { return s.is_sentinel() ? std::string("$") : vertex(s.concept_id()); };

  auto describe = [&](const ParserConfiguration& c, std::string span, std::string action) {
    std::vector<std::string> stack, cache, buffer, edges;
    for (const auto& e : c.stack) {
      stack.push_back(std::to_string(e.index));
      stack.push_back(slot(e.slot));
    }
    for (CacheSlot s : c.cache) cache.push_back(slot(s));
    for (ConceptId v : bfs)
      if (std::find(c.buffer.begin(), c.buffer.end(), v) != c.buffer.end()) buffer.push_back(vertex(v));
    for (std::size_t e : edge_order)
      if (!c.covered[e]) edges.push_back(name(g.edges[e].label, style));
    return RunRow{join(stack, "[", "]"), join(cache, "[", "]"), join(buffer, "{", "}"), join(edges, "{", "}"),
                  std::move(span), std::move(action)};
  };

  std::vector<RunRow> rows;
  ParserConfiguration c = init_config(g, trace.buffer_order, k);
  rows.push_back(describe(c, "---", "---"));
  std::size_t pushes = 0;
  for (const auto& a : trace.actions) {
    if (a.kind == ActionKind::Push) {
      const ConceptId v = trace.buffer_order.at(pushes++);
      c = apply(c, a);
      std::string span;
      for (const auto& w : trace.spans.at(v)) span += (span.empty() ? "" : " ") + w;
      rows.push_back(describe(c, span.empty() ? "---" : span,
                              "Push(" + vertex(v) + ", " + std::to_string(a.index) + ")"));
    } else {
      c = apply(c, a);
      rows.push_back(describe(c, "---", to_string(a)));
    }
  }
  return rows;
}

std::string format_table(const std::vector<RunRow>& rows) {
  const RunRow header{"stack", "cache", "buffer", "edges", "word span", "preceding action"};
  std::array<std::size_t, 6> width{};
  for (std::size_t i = 0; i < 6; ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < 6; ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const RunRow& r) {
    std::string out;
    for (std::size_t i = 0; i < 6; ++i) {
      out += r[i];
      if (i + 1 < 6) out += std::string(width[i] - r[i].size() + 2, ' ');
    }
    return out + "\n";
  };
  std::string out = line(header);
  for (const auto& r : rows) out += line(r);
  return out;
}

}  // namespace amrgen
