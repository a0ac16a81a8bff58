#pragma once

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdp/lattice.hpp"

namespace cdp {

// Small undirected simple graph given by an edge list. Edge ids are the
// positions in the list.
class SimpleGraph {
 public:
  SimpleGraph() = default;

  SimpleGraph(std::size_t vertex_count, std::vector<std::pair<VertexId, VertexId>> edges)
      : vertex_count_(vertex_count), edges_(std::move(edges)), incident_(vertex_count) {
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      auto [a, b] = edges_[e];
      if (a >= vertex_count_ || b >= vertex_count_)
        throw std::invalid_argument("graph: endpoint out of range");
      if (a == b) throw std::invalid_argument("graph: self-loop");
      for (EdgeId f = 0; f < e; ++f) {
        auto [c, d] = edges_[f];
        if ((a == c && b == d) || (a == d && b == c))
          throw std::invalid_argument("graph: multi-edge");
      }
      incident_[a].push_back(e);
      incident_[b].push_back(e);
    }
  }

  /// Parses "0-1,1-2,2-0". Vertex count is one more than the largest id.
  static SimpleGraph parse(const std::string& spec) {
    std::vector<std::pair<VertexId, VertexId>> edges;
    std::stringstream ss(spec);
    std::string item;
    VertexId top = 0;
    while (std::getline(ss, item, ',')) {
      auto dash = item.find('-');
      if (dash == std::string::npos) throw std::invalid_argument("graph: bad edge '" + item + "'");
      VertexId a = static_cast<VertexId>(std::stoul(item.substr(0, dash)));
      VertexId b = static_cast<VertexId>(std::stoul(item.substr(dash + 1)));
      top = std::max({top, a, b});
      edges.emplace_back(a, b);
    }
    if (edges.empty()) throw std::invalid_argument("graph: no edges");
    return SimpleGraph(top + 1, std::move(edges));
  }

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::pair<VertexId, VertexId> endpoints(EdgeId e) const { return edges_[e]; }
  const std::vector<EdgeId>& incident_edges(VertexId v) const { return incident_[v]; }
  int max_constraint() const { return 255; }
  bool is_boundary_vertex(VertexId) const { return false; }

  int max_degree() const {
    std::size_t m = 0;
    for (const auto& inc : incident_) m = std::max(m, inc.size());
    return static_cast<int>(m);
  }

  std::string to_string() const {
    std::string s;
    for (const auto& [a, b] : edges_) {
      if (!s.empty()) s += ',';
      s += std::to_string(a) + "-" + std::to_string(b);
    }
    return s;
  }

 private:
  std::size_t vertex_count_ = 0;
  std::vector<std::pair<VertexId, VertexId>> edges_;
  std::vector<std::vector<EdgeId>> incident_;
};

}  // namespace cdp
