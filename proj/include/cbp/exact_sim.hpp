#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cbp/model.hpp"
#include "cbp/rng.hpp"
#include "cbp/run.hpp"

namespace cbp {

class CapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

inline constexpr std::int64_t kDefaultExactCap = 20000;

/// Undirected simple graph in compressed adjacency form; neighbor lists sorted.
class ExplicitGraph {
public:
    ExplicitGraph() = default;

    /// Test hook: builds a graph from an explicit edge list. Rejects self-loops,
    /// out-of-range endpoints and duplicate edges.
    static ExplicitGraph from_edges(std::int64_t n, std::span<const std::pair<NodeId, NodeId>> edges);

    std::int64_t node_count() const noexcept { return static_cast<std::int64_t>(offsets_.size()) - 1; }
    std::int64_t edge_count() const noexcept { return static_cast<std::int64_t>(targets_.size()) / 2; }
    std::span<const NodeId> neighbors(NodeId v) const noexcept {
        return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
    }

private:
    friend ExplicitGraph generate_graph(std::int64_t, double, RngStream&, std::int64_t);
    static ExplicitGraph from_sorted_pairs(std::int64_t n, const std::vector<std::pair<NodeId, NodeId>>& edges);

    std::vector<std::uint64_t> offsets_{0};
    std::vector<NodeId> targets_;
};

/// G(n, p) by geometric skipping over vertex pairs, O(n + edges).
/// Throws CapExceeded when n > cap.
ExplicitGraph generate_graph(std::int64_t n, double p, RngStream& rng, std::int64_t cap = kDefaultExactCap);

struct ExactOptions {
    bool record_trajectory = false;
    /// Recompute thresholds from the adjacency at every activation and scan all
    /// white nodes at termination; throws std::logic_error on a mismatch.
    bool audit = false;
    StepObserver observer;
    /// Steps whose activation times are reported in FinalResult::step_times.
    std::vector<std::int64_t> step_times;
};

/// Randomness that drives one run besides the graph and the seeds: the per-node
/// clock sequences and the color lottery of the prolonged phase. Two runs with the
/// same keys see the same clock points at every node, which is the shared-randomness
/// coupling used for the ordering properties.
struct ExactKeys {
    std::uint64_t clock_key = 0;
    std::uint64_t color_key = 0;
};

/// Continuous-time run on a fixed graph. Seeds never get clocks; a white node
/// only consumes clock points while it is enabled (suprathreshold, or any white
/// node in the prolonged phase), which is equivalent in law and pathwise to
/// checking the threshold at every point of its unit-rate Poisson clock.
FinalResult run_exact(const ExplicitGraph& graph, const SeedSets& seeds, int r, const ExactKeys& keys,
                      const RunMode& mode, const ExactOptions& options = {});

/// Draws the graph, the seeds and the keys from `rng`, in that order.
FinalResult run_exact(const ModelParams& params, RngStream& rng, const RunMode& mode,
                      const ExactOptions& options = {}, std::int64_t cap = kDefaultExactCap);

}  // namespace cbp
