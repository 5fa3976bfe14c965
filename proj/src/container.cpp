#include "asqe/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace asqe {

using nlohmann::json;

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ContainerError("container: truncated file");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return v;
}

std::uint32_t crc32_of(const std::string& bytes, std::size_t length) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t done = 0;
  while (done < length) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(length - done, 1u << 30));
    crc = crc32(crc, p + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto s : shape) {
    if (s < 0) throw ContainerError("container: negative dimension");
    n *= s;
  }
  return n;
}

}  // namespace

NamedArray NamedArray::vector(std::string name, const Eigen::VectorXd& v) {
  return {std::move(name), {v.size()}, std::vector<double>(v.data(), v.data() + v.size())};
}

NamedArray NamedArray::matrix(std::string name, const Eigen::MatrixXd& m) {
  NamedArray a{std::move(name), {m.rows(), m.cols()}, std::vector<double>(static_cast<std::size_t>(m.size()))};
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data.data(), m.rows(),
                                                                                      m.cols()) = m;
  return a;
}

Eigen::VectorXd NamedArray::as_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

Eigen::MatrixXd NamedArray::as_matrix() const {
  if (shape.size() != 2) throw ContainerError("container: array " + name + " is not two-dimensional");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), shape[0],
                                                                                                  shape[1]);
}

const NamedArray& Container::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw ContainerError("container: no array named " + name);
}

std::string encode_container(const Container& c) {
  json header;
  header["arrays"] = json::array();
  for (const auto& a : c.arrays) {
    if (element_count(a.shape) != static_cast<std::int64_t>(a.data.size())) {
      throw ContainerError("container: array " + a.name + " does not match its shape");
    }
    header["arrays"].push_back({{"name", a.name}, {"dtype", "f64le"}, {"shape", a.shape}});
  }
  header["meta"] = c.meta;
  const std::string text = header.dump();

  std::string out = "ASQE";
  put_le<std::uint32_t>(out, kContainerVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& a : c.arrays)
    for (double v : a.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  put_le<std::uint32_t>(out, crc32_of(out, out.size()));
  return out;
}

Container decode_container(const std::string& bytes) {
  if (bytes.size() < 20 || bytes.compare(0, 4, "ASQE") != 0) throw ContainerError("container: bad magic");
  std::size_t tail = bytes.size() - 4;
  std::size_t crc_pos = tail;
  if (get_le<std::uint32_t>(bytes, crc_pos) != crc32_of(bytes, tail)) {
    throw ContainerError("container: checksum mismatch");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kContainerVersion) throw ContainerError("container: unsupported version " + std::to_string(version));
  const auto hlen = get_le<std::uint64_t>(bytes, pos);
  if (hlen > tail - pos) throw ContainerError("container: truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(pos, hlen));
  } catch (const json::exception& e) {
    throw ContainerError(std::string("container: bad header: ") + e.what());
  }
  pos += hlen;
  Container c;
  c.meta = header.value("meta", json::object());
  for (const auto& ja : header.at("arrays")) {
    NamedArray a;
    a.name = ja.at("name").get<std::string>();
    if (ja.at("dtype").get<std::string>() != "f64le") throw ContainerError("container: unsupported dtype");
    a.shape = ja.at("shape").get<std::vector<std::int64_t>>();
    const auto count = element_count(a.shape);
    if (static_cast<std::uint64_t>(count) * 8 > tail - pos) throw ContainerError("container: truncated array data");
    a.data.resize(static_cast<std::size_t>(count));
    for (auto& v : a.data) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
    c.arrays.push_back(std::move(a));
  }
  if (pos != tail) throw ContainerError("container: trailing bytes before checksum");
  return c;
}

void write_container(const std::string& path, const Container& c) {
  const std::string bytes = encode_container(c);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ContainerError("container: cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ContainerError("container: write failed for " + path);
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError("container: cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

// ---------------------------------------------------------------------------

std::string OperatorKey::descriptor() const {
  std::ostringstream os;
  os << "seed=" << master_seed << ";stream=" << stream_id << ";K=" << cutoff_K << ";n=" << n_per_dim
     << ";counterterm=" << counterterm.descriptor() << ";noise=" << noise;
  return os.str();
}

std::string cache_directory() {
  if (const char* d = std::getenv("ASQE_CACHE_DIR"); d && *d) return d;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return std::string(x) + "/asqe";
  if (const char* h = std::getenv("HOME"); h && *h) return std::string(h) + "/.cache/asqe";
  return ".asqe_cache";
}

std::string cache_path(const OperatorKey& key, const std::string& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key.descriptor()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << dir << "/eig_" << std::hex << h << ".asqe";
  return os.str();
}

Field operator_noise(const OperatorKey& key) {
  const TorusGrid grid(key.n_per_dim);
  if (key.noise == "zero") return Field(grid);
  if (key.noise != "white") throw std::invalid_argument("operator noise must be \"white\" or \"zero\"");
  return sample_spatial_white_noise(grid, {key.master_seed, key.stream_id});
}

AndersonOperator cached_operator(const OperatorKey& key, const std::string& dir, CacheResult* result) {
  CacheResult local;
  CacheResult& res = result ? *result : local;
  res = {};
  const Field xi = operator_noise(key);
  const std::optional<RngSpec> ref =
      key.noise == "white" ? std::optional<RngSpec>(RngSpec{key.master_seed, key.stream_id}) : std::nullopt;
  const std::string path = cache_path(key, dir);
  if (std::filesystem::exists(path)) {
    try {
      const Container c = read_container(path);
      if (c.meta.value("key", std::string()) != key.descriptor()) {
        res.warnings.push_back("cache file " + path + " belongs to a different key; recomputing");
      } else {
        const double cval = c.meta.at("counterterm_value").get<double>();
        AndersonOperator op(xi.grid(), xi, key.cutoff_K, key.counterterm, cval, c.array("raw_eigenvalues").as_vector(),
                            c.array("eigenvectors").as_matrix(), ref);
        res.hit = true;
        return op;
      }
    } catch (const std::exception& e) {
      res.warnings.push_back(std::string("ignoring cache file ") + path + " (" + e.what() + "); recomputing");
    }
  }
  AndersonOperator op = build_operator(xi, key.cutoff_K, key.counterterm, ref);
  try {
    std::filesystem::create_directories(dir);
    Container c;
    c.arrays.push_back(NamedArray::vector("raw_eigenvalues", op.raw_eigenvalues()));
    c.arrays.push_back(NamedArray::matrix("eigenvectors", op.eigenvectors()));
    c.meta = {{"key", key.descriptor()},
              {"counterterm_value", op.counterterm()},
              {"seeds", {{{"master_seed", key.master_seed}, {"stream_id", key.stream_id}}}}};
    write_container(path, c);
  } catch (const std::exception& e) {
    res.warnings.push_back(std::string("could not store cache file: ") + e.what());
  }
  return op;
}

}  // namespace asqe
