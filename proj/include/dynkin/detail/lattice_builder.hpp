#pragma once

// Internal: incremental, level-ordered construction of Lattice objects.
// Used by the plain builders and by the Markov state builders.

#include "dynkin/model.hpp"

namespace dynkin {

class LatticeBuilder {
  public:
    LatticeBuilder(TimeGrid grid, MarkSpace marks, LatticeKind kind) {
        lat_.grid = grid;
        lat_.marks = std::move(marks);
        lat_.kind = kind;
        lat_.level_begin_.assign(1, 0);
    }

    int add_node(int level, double state, int parent) {
        while (static_cast<int>(lat_.level_begin_.size()) <= level)
            lat_.level_begin_.push_back(static_cast<int>(lat_.nodes_.size()));
        lat_.nodes_.push_back({level, state, parent});
        pending_edges_.emplace_back();
        return static_cast<int>(lat_.nodes_.size()) - 1;
    }

    void add_edge(int from, int to, double p, double dW, int mark) {
        pending_edges_[from].push_back({to, p, dW, mark});
    }

    Lattice finish() {
        lat_.level_begin_.push_back(static_cast<int>(lat_.nodes_.size()));
        // Levels with no nodes are a construction error.
        lat_.edge_begin_.assign(1, 0);
        for (auto& es : pending_edges_) {
            for (const auto& e : es) lat_.edges_.push_back(e);
            lat_.edge_begin_.push_back(static_cast<int>(lat_.edges_.size()));
        }
        lat_.finalize();
        return std::move(lat_);
    }

  private:
    Lattice lat_;
    std::vector<std::vector<Lattice::Edge>> pending_edges_;
};

} // namespace dynkin
