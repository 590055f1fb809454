#include "grl/dyngraph.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "grl/binary_io.h"
#include "grl/errors.h"

namespace grl {

NodeId IdMap::intern(std::uint64_t label) {
  auto [it, inserted] = index_.try_emplace(label, static_cast<NodeId>(labels_.size()));
  if (inserted) labels_.push_back(label);
  return it->second;
}

NodeId IdMap::id(std::uint64_t label) const {
  auto it = index_.find(label);
  if (it == index_.end()) {
    throw std::out_of_range("unknown node label " + std::to_string(label));
  }
  return it->second;
}

IdMap IdMap::identity(std::size_t n) {
  IdMap m;
  for (std::size_t i = 0; i < n; ++i) m.intern(i);
  return m;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::uint64_t parse_label(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "non-numeric node id '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, std::string("non-numeric ") + what + " '" +
                               std::string(s) + "'");
  }
  return v;
}

}  // namespace

ParsedEvents parse_edge_events(std::istream& in, bool /*directed*/) {
  ParsedEvents out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields[0].front() == '#' || fields[0].front() == '%') continue;
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(line_no, "expected 3 or 4 fields, got " +
                                    std::to_string(fields.size()));
    }
    const std::uint64_t src = parse_label(fields[0], line_no);
    const std::uint64_t dst = parse_label(fields[1], line_no);
    EdgeEvent e;
    e.time = parse_real(fields[2], line_no, "time");
    if (e.time < 0) throw ParseError(line_no, "negative time");
    if (fields.size() == 4) {
      e.weight = parse_real(fields[3], line_no, "weight");
      if (e.weight < 0) throw ParseError(line_no, "negative weight");
      if (e.weight == 0) throw ParseError(line_no, "zero weight");
    }
    e.src = out.id_map.intern(src);
    e.dst = out.id_map.intern(dst);
    out.events.push_back(e);
  }
  return out;
}

Snapshot::Snapshot(std::size_t index, std::size_t node_count, bool directed)
    : index_(index), directed_(directed), adjacency_(node_count) {}

Snapshot Snapshot::from_edges(std::size_t index, std::size_t node_count,
                              const std::vector<WeightedEdge>& edges,
                              bool directed) {
  Snapshot s(index, node_count, directed);
  for (const auto& e : edges) {
    if (e.u >= node_count || e.v >= node_count) {
      throw std::out_of_range("edge endpoint outside node universe");
    }
    if (e.u == e.v) continue;
    s.adjacency_[e.u].push_back({e.v, e.w});
    if (!directed) s.adjacency_[e.v].push_back({e.u, e.w});
  }
  for (auto& list : s.adjacency_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    std::vector<Neighbor> merged;
    merged.reserve(list.size());
    for (const auto& n : list) {
      if (!merged.empty() && merged.back().node == n.node) {
        merged.back().weight += n.weight;
      } else {
        merged.push_back(n);
      }
    }
    list = std::move(merged);
  }
  return s;
}

double Snapshot::weight(NodeId u, NodeId v) const {
  const auto& list = adjacency_.at(u);
  auto it = std::lower_bound(list.begin(), list.end(), v,
                             [](const Neighbor& n, NodeId id) { return n.node < id; });
  return (it != list.end() && it->node == v) ? it->weight : 0.0;
}

std::size_t Snapshot::num_entries() const {
  std::size_t n = 0;
  for (const auto& list : adjacency_) n += list.size();
  return n;
}

std::vector<Snapshot::WeightedEdge> Snapshot::edges() const {
  std::vector<WeightedEdge> out;
  for (NodeId u = 0; u < adjacency_.size(); ++u) {
    for (const auto& n : adjacency_[u]) {
      if (directed_ || u < n.node) out.push_back({u, n.node, n.weight});
    }
  }
  return out;
}

double Snapshot::total_weight() const {
  double w = 0.0;
  for (const auto& list : adjacency_) {
    for (const auto& n : list) w += n.weight;
  }
  return directed_ ? w : w / 2.0;
}

void Snapshot::binarize() {
  for (auto& list : adjacency_) {
    for (auto& n : list) n.weight = 1.0;
  }
}

SnapshotSequence SnapshotSequence::prefix(std::size_t k) const {
  if (k == 0 || k > snapshots.size()) {
    throw std::out_of_range("prefix length " + std::to_string(k) +
                            " outside [1, " + std::to_string(snapshots.size()) + "]");
  }
  SnapshotSequence out = *this;
  out.snapshots.resize(k);
  return out;
}

SnapshotSequence partition_snapshots(const ParsedEvents& parsed,
                                     std::size_t num_steps,
                                     PartitionOptions options) {
  if (num_steps == 0) throw InputError("snapshot count must be >= 1");
  if (parsed.events.empty()) throw InputError("no edge events to partition");
  double t_min = parsed.events.front().time;
  double t_max = t_min;
  for (const auto& e : parsed.events) {
    t_min = std::min(t_min, e.time);
    t_max = std::max(t_max, e.time);
  }
  const std::size_t n = parsed.id_map.size();
  const double range = t_max - t_min;
  std::vector<std::vector<Snapshot::WeightedEdge>> windows(num_steps);
  for (const auto& e : parsed.events) {
    std::size_t k = 0;
    if (range > 0) {
      const double pos = (e.time - t_min) * static_cast<double>(num_steps) / range;
      k = std::min(num_steps - 1, static_cast<std::size_t>(std::floor(pos)));
    }
    windows[k].push_back({e.src, e.dst, e.weight});
  }

  SnapshotSequence seq;
  seq.node_count = n;
  seq.id_map = parsed.id_map;
  seq.directed = options.directed;
  for (std::size_t k = 0; k < num_steps; ++k) {
    Snapshot s = Snapshot::from_edges(k + 1, n, windows[k], options.directed);
    if (options.binarize) s.binarize();
    if (s.empty()) {
      seq.warnings.push_back("snapshot " + std::to_string(k + 1) + " has no edges");
    }
    seq.snapshots.push_back(std::move(s));
  }
  return seq;
}

std::vector<double> node_degrees(const Snapshot& snapshot) {
  std::vector<double> deg(snapshot.node_count(), 0.0);
  for (NodeId v = 0; v < deg.size(); ++v) {
    for (const auto& n : snapshot.neighbors(v)) deg[v] += n.weight;
  }
  return deg;
}

namespace {
constexpr std::uint16_t kCacheVersion = 1;
}

void save_snapshot_cache(const SnapshotSequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write snapshot cache '" + path + "'");
  out.write("GRLS", 4);
  binary::write_uint<std::uint16_t>(out, kCacheVersion);
  binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(seq.node_count));
  binary::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(seq.num_steps()));
  for (const auto& s : seq.snapshots) {
    binary::write_uint<std::uint64_t>(out, s.num_entries());
    for (NodeId u = 0; u < s.node_count(); ++u) {
      for (const auto& n : s.neighbors(u)) {
        binary::write_uint<std::uint32_t>(out, u);
        binary::write_uint<std::uint32_t>(out, n.node);
        binary::write_f64(out, n.weight);
      }
    }
  }
  if (!out) throw InputError("failed writing snapshot cache '" + path + "'");
}

SnapshotSequence load_snapshot_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open snapshot cache '" + path + "'");
  binary::expect_magic(in, "GRLS", "snapshot cache");
  const auto version = binary::read_uint<std::uint16_t>(in, "version");
  if (version != kCacheVersion) {
    throw InputError("unsupported snapshot cache version " + std::to_string(version));
  }
  const auto n = binary::read_uint<std::uint32_t>(in, "node count");
  const auto t = binary::read_uint<std::uint32_t>(in, "snapshot count");
  SnapshotSequence seq;
  seq.node_count = n;
  seq.id_map = IdMap::identity(n);
  bool all_symmetric = true;
  std::vector<std::vector<Snapshot::WeightedEdge>> arcs(t);
  for (std::uint32_t k = 0; k < t; ++k) {
    const auto count = binary::read_uint<std::uint64_t>(in, "entry count");
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto u = binary::read_uint<std::uint32_t>(in, "entry");
      const auto v = binary::read_uint<std::uint32_t>(in, "entry");
      const double w = binary::read_f64(in, "entry");
      if (u >= n || v >= n || !(w > 0)) {
        throw InputError("corrupt snapshot cache entry in snapshot " +
                         std::to_string(k + 1));
      }
      arcs[k].push_back({u, v, w});
    }
  }
  // Arcs are stored in both directions for undirected graphs; rebuild as
  // directed lists and detect symmetry.
  for (std::uint32_t k = 0; k < t; ++k) {
    Snapshot s = Snapshot::from_edges(k + 1, n, arcs[k], /*directed=*/true);
    for (NodeId u = 0; u < n && all_symmetric; ++u) {
      for (const auto& nb : s.neighbors(u)) {
        if (s.weight(nb.node, u) != nb.weight) {
          all_symmetric = false;
          break;
        }
      }
    }
    seq.snapshots.push_back(std::move(s));
  }
  seq.directed = !all_symmetric;
  if (!seq.directed) {
    for (auto& s : seq.snapshots) {
      std::vector<Snapshot::WeightedEdge> undirected;
      for (const auto& e : s.edges()) {
        if (e.u < e.v) undirected.push_back(e);
      }
      s = Snapshot::from_edges(s.index(), n, undirected, false);
    }
  }
  return seq;
}

void write_edge_list(std::ostream& out, const std::vector<EdgeEvent>& events,
                     const IdMap* id_map) {
  std::ostringstream line;
  line.precision(17);
  for (const auto& e : events) {
    line.str("");
    const std::uint64_t s = id_map ? id_map->label(e.src) : e.src;
    const std::uint64_t d = id_map ? id_map->label(e.dst) : e.dst;
    line << s << ' ' << d << ' ' << e.time;
    if (e.weight != 1.0) line << ' ' << e.weight;
    out << line.str() << '\n';
  }
}

}  // namespace grl
