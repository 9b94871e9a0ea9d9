#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "ownet/checksum.hpp"
#include "ownet/graph_store.hpp"

namespace ownet {

namespace {

static_assert(std::endian::native == std::endian::little, "graph cache assumes little-endian hosts");

constexpr char kMagic[8] = {'O', 'W', 'N', 'E', 'T', 'G', 'R', '\0'};

class Writer {
 public:
  template <class T>
  void put(const T& value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  template <class T>
  void put_array(std::span<const T> values) {
    const auto* p = reinterpret_cast<const char*>(values.data());
    bytes_.insert(bytes_.end(), p, p + values.size_bytes());
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    T value{};
    need(sizeof(T));
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <class T>
  std::vector<T> get_array(std::size_t count) {
    if (count > bytes_.size() / sizeof(T) + 1) throw Error("graph cache: array length corrupt");
    need(count * sizeof(T));
    std::vector<T> out(count);
    std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
    return out;
  }
  std::string get_string(std::size_t len) {
    need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("graph cache: truncated payload");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_graph_cache(const FirmGraph& graph, std::ostream& out) {
  Writer w;
  const std::uint64_t n = graph.node_count();
  const std::uint64_t m = graph.edge_count();
  w.put(n);
  w.put(m);
  w.put(static_cast<std::uint8_t>(graph.has_ids() ? 1 : 0));
  if (graph.has_ids()) {
    for (std::uint64_t v = 0; v < n; ++v) {
      const auto id = graph.external_id(static_cast<NodeId>(v));
      w.put(static_cast<std::uint32_t>(id.size()));
      w.put_array(std::span<const char>(id.data(), id.size()));
    }
  }
  w.put_array(graph.out_offsets());
  w.put_array(graph.out_targets());
  w.put_array(graph.labels());

  Sha256 h;
  h.update(w.bytes());
  const auto digest = h.finish();

  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kGraphCacheVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t payload_size = w.bytes().size();
  out.write(reinterpret_cast<const char*>(&payload_size), sizeof payload_size);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  out.write(reinterpret_cast<const char*>(digest.data()), static_cast<std::streamsize>(digest.size()));
  if (!out) throw Error("graph cache: write failed");
}

FirmGraph load_graph_cache(std::istream& in) {
  char magic[sizeof kMagic];
  std::uint32_t version = 0;
  std::uint64_t payload_size = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error("graph cache: bad magic");
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kGraphCacheVersion) {
    throw Error("graph cache: unsupported version " + std::to_string(version));
  }
  in.read(reinterpret_cast<char*>(&payload_size), sizeof payload_size);
  if (!in || payload_size > (std::uint64_t{1} << 40)) throw Error("graph cache: bad payload size");
  std::string payload(payload_size, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload_size));
  Sha256Digest stored{};
  in.read(reinterpret_cast<char*>(stored.data()), static_cast<std::streamsize>(stored.size()));
  if (!in) throw Error("graph cache: truncated file");
  Sha256 h;
  h.update(payload);
  if (h.finish() != stored) throw Error("graph cache: checksum mismatch");

  Reader r(payload);
  const auto n = r.get<std::uint64_t>();
  const auto m = r.get<std::uint64_t>();
  const auto has_ids = r.get<std::uint8_t>();
  std::vector<std::string> ids;
  if (has_ids) {
    ids.reserve(n);
    for (std::uint64_t v = 0; v < n; ++v) ids.push_back(r.get_string(r.get<std::uint32_t>()));
  }
  const auto offsets = r.get_array<std::uint64_t>(n + 1);
  const auto targets = r.get_array<NodeId>(m);
  auto labels = r.get_array<std::uint8_t>(n);
  if (!r.done() || offsets.front() != 0 || offsets.back() != m) {
    throw Error("graph cache: inconsistent payload");
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::uint64_t v = 0; v < n; ++v) {
    if (offsets[v] > offsets[v + 1]) throw Error("graph cache: offsets not monotone");
    for (auto k = offsets[v]; k < offsets[v + 1]; ++k) {
      edges.push_back({static_cast<NodeId>(v), targets[k]});
    }
  }
  return FirmGraph::from_edges(n, std::move(edges), std::move(labels), std::move(ids));
}

void save_graph_cache(const FirmGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  save_graph_cache(graph, out);
}

FirmGraph load_graph_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_graph_cache(in);
}

}  // namespace ownet
