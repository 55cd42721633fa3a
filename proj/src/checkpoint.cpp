#include "graphstar/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

namespace graphstar {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'T', 'A', 'R', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_i32(std::ostream& os, std::int32_t v) { write_u32(os, static_cast<std::uint32_t>(v)); }

void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::int32_t read_i32(std::istream& is) { return static_cast<std::int32_t>(read_u32(is)); }

float read_f32(std::istream& is) {
  const std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::string read_string(std::istream& is) {
  const std::uint32_t len = read_u32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

using GroupKey = std::tuple<std::string, std::int32_t, std::int32_t, std::int32_t>;

struct Group {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> payload;
};

void write_group(std::ostream& os, const std::string& role, std::int32_t layer,
                 std::int32_t head, std::int32_t relation, const Tensor& t, std::size_t col_begin,
                 std::size_t col_count) {
  write_string(os, role);
  write_i32(os, layer);
  write_i32(os, head);
  write_i32(os, relation);
  write_u32(os, 2);
  write_u32(os, static_cast<std::uint32_t>(t.rows()));
  write_u32(os, static_cast<std::uint32_t>(col_count));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < col_count; ++c) {
      write_f32(os, static_cast<float>(t.at(r, col_begin + c)));
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);
  std::uint32_t groups = 0;
  for (std::size_t i = 0; i < store.count(); ++i) {
    groups += static_cast<std::uint32_t>(store.meta(i).heads > 1 ? store.meta(i).heads : 1);
  }
  write_u32(os, groups);
  for (std::size_t i = 0; i < store.count(); ++i) {
    const ParamMeta& meta = store.meta(i);
    const Tensor& value = store.value(i);
    if (meta.heads > 1) {
      for (std::size_t m = 0; m < meta.heads; ++m) {
        write_group(os, meta.role, meta.layer, static_cast<std::int32_t>(m), meta.relation,
                    value, m * meta.head_dim, meta.head_dim);
      }
    } else {
      write_group(os, meta.role, meta.layer, -1, meta.relation, value, 0, value.cols());
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t group_count = read_u32(is);
  std::map<GroupKey, Group> groups;
  for (std::uint32_t g = 0; g < group_count; ++g) {
    const std::string role = read_string(is);
    const std::int32_t layer = read_i32(is);
    const std::int32_t head = read_i32(is);
    const std::int32_t relation = read_i32(is);
    const std::uint32_t ndim = read_u32(is);
    if (ndim != 2) throw std::runtime_error("checkpoint: unexpected rank " + std::to_string(ndim));
    Group grp;
    grp.rows = read_u32(is);
    grp.cols = read_u32(is);
    grp.payload.resize(grp.rows * grp.cols);
    for (float& v : grp.payload) v = read_f32(is);
    if (!groups.emplace(GroupKey{role, layer, head, relation}, std::move(grp)).second) {
      throw std::runtime_error("checkpoint: duplicate group " + role);
    }
  }

  std::size_t consumed = 0;
  for (std::size_t i = 0; i < store.count(); ++i) {
    const ParamMeta& meta = store.meta(i);
    Tensor& value = store.value(i);
    const std::size_t heads = meta.heads > 1 ? meta.heads : 1;
    for (std::size_t m = 0; m < heads; ++m) {
      const std::int32_t head = meta.heads > 1 ? static_cast<std::int32_t>(m) : -1;
      const GroupKey key{meta.role, meta.layer, head, meta.relation};
      auto it = groups.find(key);
      if (it == groups.end()) {
        throw std::runtime_error("checkpoint: missing group for " + store.name(i));
      }
      const Group& grp = it->second;
      const std::size_t col_begin = meta.heads > 1 ? m * meta.head_dim : 0;
      const std::size_t col_count = meta.heads > 1 ? meta.head_dim : value.cols();
      if (grp.rows != value.rows() || grp.cols != col_count) {
        throw std::runtime_error("checkpoint: shape mismatch for " + store.name(i));
      }
      for (std::size_t r = 0; r < grp.rows; ++r) {
        for (std::size_t c = 0; c < col_count; ++c) {
          value.at(r, col_begin + c) = static_cast<double>(grp.payload[r * col_count + c]);
        }
      }
      ++consumed;
    }
  }
  if (consumed != groups.size()) {
    throw std::runtime_error("checkpoint: file holds " + std::to_string(groups.size()) +
                             " groups but the store expects " + std::to_string(consumed));
  }
}

}  // namespace graphstar
