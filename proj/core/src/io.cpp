#include "gibbsfwi/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gibbsfwi/error.hpp"
#include "json.hpp"

namespace gfwi::io {
namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "raw files assume a little-endian host");

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

std::string file_checksum(const fs::path& path) { return hex64(fnv1a(read_file(path))); }

void atomic_write(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

fs::path with_ext(const fs::path& base, const char* ext) {
  fs::path p = base;
  p += ext;
  return p;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

void write_raw(const fs::path& base, std::span<const double> data, const json& sidecar) {
  std::string bytes(data.size() * sizeof(double), '\0');
  if (!data.empty()) std::memcpy(bytes.data(), data.data(), bytes.size());
  atomic_write(with_ext(base, ".f64"), bytes);
  atomic_write(with_ext(base, ".json"), sidecar.dump(2) + "\n");
}

json read_sidecar(const fs::path& base) {
  try {
    return json::parse(read_file(with_ext(base, ".json")));
  } catch (const json::exception& e) {
    throw IoError("bad sidecar " + with_ext(base, ".json").string() + ": " + e.what());
  }
}

std::vector<double> read_raw(const fs::path& base, std::size_t expected) {
  const std::string bytes = read_file(with_ext(base, ".f64"));
  if (bytes.size() != expected * sizeof(double))
    throw IoError("raw file " + with_ext(base, ".f64").string() + " has unexpected size");
  std::vector<double> out(expected);
  if (expected) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

json grid_json(const Grid2D& g) {
  return {{"nx", g.nx}, {"nz", g.nz}, {"dx", g.dx}, {"dz", g.dz},
          {"x0", g.x0}, {"z0", g.z0}, {"water_depth", g.water_depth}};
}

Grid2D grid_from(const json& j) {
  Grid2D g;
  g.nx = j.at("nx");
  g.nz = j.at("nz");
  g.dx = j.at("dx");
  g.dz = j.at("dz");
  g.x0 = j.value("x0", 0.0);
  g.z0 = j.value("z0", 0.0);
  g.water_depth = j.value("water_depth", 0.0);
  return g;
}

}  // namespace

void write_array(const fs::path& base, std::span<const double> data, const std::vector<std::size_t>& shape,
                 std::string_view extra_json) {
  if (product(shape) != data.size()) throw ShapeError("array shape does not match data length");
  json side = json::object();
  if (!extra_json.empty()) {
    try {
      side = json::parse(extra_json);
    } catch (const json::exception& e) {
      throw IoError(std::string("bad sidecar metadata: ") + e.what());
    }
    if (!side.is_object()) throw IoError("sidecar metadata must be a JSON object");
  }
  side["shape"] = shape;
  side["dtype"] = "float64-le";
  write_raw(base, data, side);
}

std::vector<double> read_array(const fs::path& base, std::vector<std::size_t>* shape) {
  const json side = read_sidecar(base);
  std::vector<std::size_t> s;
  try {
    s = side.at("shape").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw IoError(std::string("sidecar lacks shape: ") + e.what());
  }
  if (shape) *shape = s;
  return read_raw(base, product(s));
}

void write_field(const fs::path& base, const Field2D& field) {
  json side{{"kind", "field"},
            {"shape", {field.grid.nz, field.grid.nx}},
            {"dtype", "float64-le"},
            {"grid", grid_json(field.grid)}};
  write_raw(base, field.values, side);
}

Field2D read_field(const fs::path& base) {
  const json side = read_sidecar(base);
  try {
    const Grid2D g = grid_from(side.at("grid"));
    return Field2D(g, read_raw(base, g.size()));
  } catch (const json::exception& e) {
    throw IoError(std::string("bad field sidecar: ") + e.what());
  }
}

void write_seismogram(const fs::path& base, const Seismogram& s, const AcquisitionGeometry* geometry) {
  json side{{"kind", "seismogram"},
            {"shape", {s.n_sources, s.n_receivers, s.nt}},
            {"dtype", "float64-le"},
            {"dt", s.dt},
            {"zero_mean", s.zero_mean}};
  if (geometry) {
    json src = json::array(), rcv = json::array();
    for (const auto& p : geometry->sources) src.push_back({p.position.x, p.position.z});
    for (const auto& p : geometry->receivers) rcv.push_back({p.x, p.z});
    side["sources"] = src;
    side["receivers"] = rcv;
    side["n_sources"] = geometry->sources.size();
  }
  write_raw(base, s.data, side);
}

Seismogram read_seismogram(const fs::path& base) {
  const json side = read_sidecar(base);
  try {
    const auto shape = side.at("shape").get<std::vector<int>>();
    if (shape.size() != 3) throw IoError("seismogram sidecar needs a 3D shape");
    Seismogram s(shape[0], shape[1], shape[2], side.at("dt").get<double>());
    s.zero_mean = side.value("zero_mean", false);
    s.data = read_raw(base, s.data.size());
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("bad seismogram sidecar: ") + e.what());
  }
}

void write_traces_csv(const fs::path& path, const Seismogram& s) {
  std::ostringstream os;
  os << std::setprecision(17) << "t";
  for (int a = 0; a < s.n_sources; ++a)
    for (int r = 0; r < s.n_receivers; ++r) os << ",s" << a << "_r" << r;
  os << '\n';
  for (int k = 0; k < s.nt; ++k) {
    os << (k + 1) * s.dt;
    for (std::size_t i = 0; i < s.trace_count(); ++i) os << ',' << s.trace(i)[k];
    os << '\n';
  }
  atomic_write(path, os.str());
}

void write_field_csv(const fs::path& path, const Field2D& field) {
  std::ostringstream os;
  os << std::setprecision(17) << "x,z,value\n";
  const Grid2D& g = field.grid;
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) os << g.x(ix) << ',' << g.z(iz) << ',' << field(ix, iz) << '\n';
  atomic_write(path, os.str());
}

}  // namespace gfwi::io
