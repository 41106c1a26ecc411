#include "freeunmix/io_formats.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace freeunmix {

namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t load_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void store_u64le(std::uint64_t v, unsigned char* p) {
  for (int i = 0; i < 8; ++i) {
    p[i] = static_cast<unsigned char>(v & 0xff);
    v >>= 8;
  }
}

double load_f64le(const unsigned char* p) {
  std::uint64_t bits = load_u64le(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void store_f64le(double d, unsigned char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  store_u64le(bits, p);
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    size_t pos = 0;
    while (pos <= line.size()) {
      size_t comma = line.find(',', pos);
      std::string tok = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const char* begin = tok.c_str();
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
      if (end == begin || (end && *end != '\0'))
        throw ParseError(path.string() + ": non-numeric token at line " +
                         std::to_string(lineno));
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ": ragged row at line " +
                       std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

Eigen::MatrixXd read_matrix_f64le(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 16)
    throw ParseError(path.string() + ": truncated header (offset " +
                     std::to_string(bytes.size()) + ")");
  std::uint64_t rows = load_u64le(p);
  std::uint64_t cols = load_u64le(p + 8);
  std::uint64_t need = 16 + rows * cols * 8;
  if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24))
    throw ParseError(path.string() + ": implausible dimensions in header");
  if (bytes.size() < need)
    throw ParseError(path.string() + ": truncated payload (offset " +
                     std::to_string(bytes.size()) + ", need " +
                     std::to_string(need) + ")");
  Eigen::MatrixXd m(rows, cols);
  size_t off = 16;
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j, off += 8)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          load_f64le(p + off);
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
}

void write_matrix_f64le(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  unsigned char hdr[16];
  store_u64le(static_cast<std::uint64_t>(m.rows()), hdr);
  store_u64le(static_cast<std::uint64_t>(m.cols()), hdr + 8);
  out.write(reinterpret_cast<const char*>(hdr), 16);
  unsigned char cell[8];
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      store_f64le(m(i, j), cell);
      out.write(reinterpret_cast<const char*>(cell), 8);
    }
}

// PGM tokenizer skipping whitespace and '#' comments.
struct PgmTokenizer {
  const std::string& bytes;
  size_t pos = 0;

  std::string next() {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])))
      ++pos;
    if (start == pos) throw ParseError("pgm: unexpected end of header");
    return bytes.substr(start, pos - start);
  }

  long next_int() {
    std::string tok = next();
    try {
      size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("pgm: expected integer, got '" + tok + "'");
    }
  }
};

}  // namespace

Eigen::MatrixXd read_matrix(const std::filesystem::path& path,
                            MatrixFileFormat format) {
  return format == MatrixFileFormat::Csv ? read_matrix_csv(path)
                                         : read_matrix_f64le(path);
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  MatrixFileFormat format) {
  if (format == MatrixFileFormat::Csv)
    write_matrix_csv(path, m);
  else
    write_matrix_f64le(path, m);
}

Eigen::MatrixXd read_image_pgm(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  PgmTokenizer tok{bytes};
  std::string magic = tok.next();
  if (magic != "P2" && magic != "P5")
    throw ParseError(path.string() + ": not a P2/P5 graymap");
  long width = tok.next_int();
  long height = tok.next_int();
  long maxval = tok.next_int();
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535)
    throw ParseError(path.string() + ": malformed PGM header");
  Eigen::MatrixXd m(height, width);
  const long count = width * height;
  if (magic == "P2") {
    for (long k = 0; k < count; ++k) {
      long v;
      try {
        v = tok.next_int();
      } catch (const ParseError&) {
        throw ParseError(path.string() + ": pixel count mismatch");
      }
      if (v < 0 || v > maxval)
        throw ParseError(path.string() + ": pixel out of range");
      m(k / width, k % width) = static_cast<double>(v) / maxval;
    }
  } else {
    size_t data = tok.pos + 1;  // single whitespace byte after maxval
    int bytes_per = maxval > 255 ? 2 : 1;
    if (data + static_cast<size_t>(count) * bytes_per > bytes.size())
      throw ParseError(path.string() + ": truncated pixel data");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + data;
    for (long k = 0; k < count; ++k) {
      long v = bytes_per == 1
                   ? p[k]
                   : (static_cast<long>(p[2 * k]) << 8) | p[2 * k + 1];
      m(k / width, k % width) = static_cast<double>(v) / maxval;
    }
  }
  return m;
}

void write_image_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = std::clamp(m(i, j), 0.0, 1.0);
      unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

std::pair<Eigen::VectorXd, int> read_audio_wav(const std::filesystem::path& path) {
  std::string bytes = read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  auto u16 = [&](size_t off) -> unsigned {
    return p[off] | (static_cast<unsigned>(p[off + 1]) << 8);
  };
  auto u32 = [&](size_t off) -> std::uint32_t {
    return p[off] | (static_cast<std::uint32_t>(p[off + 1]) << 8) |
           (static_cast<std::uint32_t>(p[off + 2]) << 16) |
           (static_cast<std::uint32_t>(p[off + 3]) << 24);
  };
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw ParseError(path.string() + ": not a RIFF/WAVE file");

  unsigned channels = 0, bits = 0, format = 0;
  int sample_rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t off = 12;
  while (off + 8 <= bytes.size()) {
    std::uint32_t chunk_len = u32(off + 4);
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (off + 8 + 16 > bytes.size())
        throw ParseError(path.string() + ": truncated fmt chunk");
      format = u16(off + 8);
      channels = u16(off + 10);
      sample_rate = static_cast<int>(u32(off + 12));
      bits = u16(off + 22);
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data_off = off + 8;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }
  if (format == 0 || data_off == 0)
    throw ParseError(path.string() + ": missing fmt or data chunk");
  if (format == 3) throw CodecError(path.string() + ": float-PCM is unsupported");
  if (format != 1)
    throw CodecError(path.string() + ": unsupported codec (format tag " +
                     std::to_string(format) + ")");
  if (bits != 16)
    throw CodecError(path.string() + ": only 16-bit PCM is supported");
  if (channels < 1) throw ParseError(path.string() + ": zero channels");
  if (data_off + data_len > bytes.size())
    throw ParseError(path.string() + ": truncated data chunk");

  size_t frame = 2 * channels;
  size_t frames = data_len / frame;
  Eigen::VectorXd x(frames);
  for (size_t k = 0; k < frames; ++k) {
    size_t s_off = data_off + k * frame;  // first channel
    std::int16_t v = static_cast<std::int16_t>(
        p[s_off] | (static_cast<unsigned>(p[s_off + 1]) << 8));
    x(static_cast<Eigen::Index>(k)) = static_cast<double>(v) / 32768.0;
  }
  return {std::move(x), sample_rate};
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what());
  }
  DatasetManifest man;
  try {
    man.kind = j.at("kind").get<std::string>();
    if (man.kind != "self-adjoint" && man.kind != "rectangular" &&
        man.kind != "signal")
      throw ParseError(path.string() + ": unknown kind '" + man.kind + "'");
    for (const auto& c : j.at("components")) {
      ManifestComponent mc;
      if (c.is_string()) {
        mc.path = c.get<std::string>();
      } else {
        mc.path = c.at("path").get<std::string>();
        if (c.contains("format")) mc.format = c.at("format").get<std::string>();
      }
      if (mc.path.is_relative()) mc.path = path.parent_path() / mc.path;
      man.components.push_back(std::move(mc));
    }
    if (j.contains("mixing_matrix")) {
      const auto& rows = j.at("mixing_matrix");
      Eigen::MatrixXd a(rows.size(), rows.at(0).size());
      for (size_t i = 0; i < rows.size(); ++i) {
        if (rows.at(i).size() != static_cast<size_t>(a.cols()))
          throw ParseError(path.string() + ": ragged mixing_matrix");
        for (size_t k = 0; k < rows.at(i).size(); ++k)
          a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
              rows.at(i).at(k).get<double>();
      }
      man.mixing_matrix = std::move(a);
    }
    if (j.contains("seed")) man.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": manifest schema error: " + e.what());
  }
  if (man.components.size() < 1)
    throw ParseError(path.string() + ": manifest lists no components");
  return man;
}

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void write_result(const FactorizationResult& result,
                  const std::filesystem::path& dir,
                  std::optional<double> error, std::uint64_t seed,
                  bool as_images) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_matrix_csv(dir / "A_hat.csv", result.mixing_estimate);
  write_matrix_f64le(dir / "A_hat.f64le", result.mixing_estimate);
  for (int i = 0; i < result.components.count(); ++i) {
    std::string stem = "X_hat_" + std::to_string(i);
    if (result.components.is_complex()) {
      write_matrix_csv(dir / (stem + "_re.csv"), result.components.cplx(i).real());
      write_matrix_csv(dir / (stem + "_im.csv"), result.components.cplx(i).imag());
      write_matrix_f64le(dir / (stem + "_re.f64le"),
                         result.components.cplx(i).real());
      write_matrix_f64le(dir / (stem + "_im.f64le"),
                         result.components.cplx(i).imag());
    } else {
      write_matrix_csv(dir / (stem + ".csv"), result.components.real(i));
      write_matrix_f64le(dir / (stem + ".f64le"), result.components.real(i));
      if (as_images) write_image_pgm(dir / (stem + ".pgm"), result.components.real(i));
    }
  }
  nlohmann::json j;
  j["objective_kind"] = to_string(result.objective_kind);
  j["statistic_per_component"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < result.statistic_per_component.size(); ++i)
    j["statistic_per_component"].push_back(
        finite_or_null(result.statistic_per_component(i)));
  j["error"] = error ? nlohmann::json(*error) : nlohmann::json(nullptr);
  j["iterations"] = result.trace.iterations;
  j["converged"] = result.trace.converged;
  j["seed"] = seed;
  j["identifiability_warning"] = result.identifiability_warning;
  std::ofstream out(dir / "summary.json");
  out << j.dump(2) << '\n';
}

void write_result(const ErrorReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  nlohmann::json j;
  j["error"] = report.error;
  j["best_permutation"] = report.best_permutation;
  j["best_scaling"] = std::vector<double>(
      report.best_scaling.data(),
      report.best_scaling.data() + report.best_scaling.size());
  std::ofstream out(dir / "error_report.json");
  out << j.dump(2) << '\n';
}

}  // namespace freeunmix
