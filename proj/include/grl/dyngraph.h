#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace grl {

using NodeId = std::uint32_t;

struct EdgeEvent {
  NodeId src = 0;
  NodeId dst = 0;
  double time = 0.0;
  double weight = 1.0;

  friend bool operator==(const EdgeEvent&, const EdgeEvent&) = default;
};

// Bijection between external integer labels and dense ids [0, N), in order
// of first appearance.
class IdMap {
 public:
  NodeId intern(std::uint64_t label);
  NodeId id(std::uint64_t label) const;
  bool contains(std::uint64_t label) const { return index_.count(label) != 0; }
  std::uint64_t label(NodeId id) const { return labels_.at(id); }
  std::size_t size() const { return labels_.size(); }

  static IdMap identity(std::size_t n);

  friend bool operator==(const IdMap& a, const IdMap& b) {
    return a.labels_ == b.labels_;
  }

 private:
  std::vector<std::uint64_t> labels_;
  std::unordered_map<std::uint64_t, NodeId> index_;
};

struct ParsedEvents {
  std::vector<EdgeEvent> events;
  IdMap id_map;
};

// Reads whitespace-separated `src dst time [weight]` lines. Lines starting
// with '#' or '%' and blank lines are skipped; CRLF is accepted. Throws
// ParseError carrying the 1-based line number on malformed input.
ParsedEvents parse_edge_events(std::istream& in, bool directed = false);

struct Neighbor {
  NodeId node;
  double weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Weighted adjacency of one time window. Neighbor lists are sorted by id and
// carry no duplicates; undirected snapshots are symmetric.
class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(std::size_t index, std::size_t node_count, bool directed = false);

  // Builds a snapshot from (u, v, w) triples: self pairs are dropped,
  // repeated pairs sum their weights, undirected input is symmetrised.
  struct WeightedEdge {
    NodeId u;
    NodeId v;
    double w;
  };
  static Snapshot from_edges(std::size_t index, std::size_t node_count,
                             const std::vector<WeightedEdge>& edges,
                             bool directed = false);

  std::size_t index() const { return index_; }
  std::size_t node_count() const { return adjacency_.size(); }
  bool directed() const { return directed_; }

  const std::vector<Neighbor>& neighbors(NodeId v) const { return adjacency_[v]; }
  double weight(NodeId u, NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const { return weight(u, v) > 0.0; }

  // Number of stored adjacency entries (both directions when undirected).
  std::size_t num_entries() const;
  // Unordered edges u < v for undirected snapshots, all arcs otherwise.
  std::vector<WeightedEdge> edges() const;
  double total_weight() const;
  bool empty() const { return num_entries() == 0; }

  void binarize();

  friend bool operator==(const Snapshot&, const Snapshot&) = default;

 private:
  std::size_t index_ = 1;
  bool directed_ = false;
  std::vector<std::vector<Neighbor>> adjacency_;
};

struct SnapshotSequence {
  std::vector<Snapshot> snapshots;  // index 1..T in order
  std::size_t node_count = 0;
  IdMap id_map;
  bool directed = false;
  std::vector<std::string> warnings;

  std::size_t num_steps() const { return snapshots.size(); }
  // First k snapshots.
  SnapshotSequence prefix(std::size_t k) const;

  friend bool operator==(const SnapshotSequence& a, const SnapshotSequence& b) {
    return a.snapshots == b.snapshots && a.node_count == b.node_count &&
           a.id_map == b.id_map && a.directed == b.directed;
  }
};

struct PartitionOptions {
  bool directed = false;
  bool binarize = false;
};

// Splits [t_min, t_max] into `num_steps` equal-width windows, half-open
// except the last which is closed. Empty windows produce empty snapshots and
// a warning.
SnapshotSequence partition_snapshots(const ParsedEvents& parsed,
                                     std::size_t num_steps,
                                     PartitionOptions options = {});

std::vector<double> node_degrees(const Snapshot& snapshot);

// Binary snapshot cache: "GRLS", u16 version, u32 N, u32 T, then per snapshot
// a u64 entry count followed by (u32 u, u32 v, f64 w) entries, all little
// endian.
void save_snapshot_cache(const SnapshotSequence& seq, const std::string& path);
SnapshotSequence load_snapshot_cache(const std::string& path);

// Writes events back out in the edge-list text format.
void write_edge_list(std::ostream& out, const std::vector<EdgeEvent>& events,
                     const IdMap* id_map = nullptr);

}  // namespace grl
