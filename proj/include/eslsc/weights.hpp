#pragma once

// Weight file layout (self-describing):
//
//   WEIGHTS v1\n
//   CONFIG <ModelConfig::serialize()>\n
//   TENSORS <count>\n
//   then per parameter, in model order:
//     <name> <f32|f64> <rows> <cols>\n <rows*cols little-endian values> \n

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "eslsc/error.hpp"
#include "eslsc/seq2seq.hpp"

namespace eslsc {

static_assert(std::endian::native == std::endian::little, "weight files assume a little-endian host");

enum class Precision { kF32, kF64 };

inline std::string_view to_string(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

inline Precision precision_from_string(std::string_view s) {
  if (s == "f32") return Precision::kF32;
  if (s == "f64") return Precision::kF64;
  throw ParseError("unknown precision '" + std::string(s) + "' (expected f32 or f64)");
}

template <typename Scalar>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  return std::is_same_v<Scalar, float> ? Precision::kF32 : Precision::kF64;
}

struct WeightsHeader {
  ModelConfig config;
  Precision precision = Precision::kF32;
};

namespace detail {

inline ModelConfig read_config_lines(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  std::getline(in, line);
  if (line != "WEIGHTS v1") throw ArtifactError("'" + path.string() + "' is not a v1 weight file");
  std::getline(in, line);
  if (line.rfind("CONFIG ", 0) != 0) throw ArtifactError("'" + path.string() + "': missing CONFIG line");
  return ModelConfig::deserialize(line.substr(7));
}

}  // namespace detail

template <typename Scalar>
void save_weights(const std::filesystem::path& path, const Seq2Seq<Scalar>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write weights '" + path.string() + "'");
  out << "WEIGHTS v1\n";
  out << "CONFIG " << model.config().serialize() << '\n';
  out << "TENSORS " << model.parameters().size() << '\n';
  for (const auto& p : model.parameters()) {
    out << p.name << ' ' << to_string(precision_of<Scalar>()) << ' ' << p.value.rows() << ' ' << p.value.cols()
        << '\n';
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * static_cast<Eigen::Index>(sizeof(Scalar))));
    out << '\n';
  }
  if (!out) throw ArtifactError("error writing weights '" + path.string() + "'");
}

/// Config and storage precision of a weight file (reads the header and the
/// first tensor line only).
inline WeightsHeader read_weights_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open weights '" + path.string() + "'");
  WeightsHeader h;
  h.config = detail::read_config_lines(in, path);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::istringstream ts(line);
  std::string name, dtype;
  ts >> name >> dtype;
  h.precision = precision_from_string(dtype);
  return h;
}

/// Loads into a model of the requested precision, converting if the file was
/// written at the other one.
template <typename Scalar>
Seq2Seq<Scalar> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open weights '" + path.string() + "'");
  Seq2Seq<Scalar> model(detail::read_config_lines(in, path));
  std::string line;
  std::getline(in, line);
  std::size_t count = 0;
  if (std::sscanf(line.c_str(), "TENSORS %zu", &count) != 1 || count != model.parameters().size()) {
    throw ArtifactError("'" + path.string() + "': tensor count does not match its config");
  }
  for (auto& p : model.parameters()) {
    std::getline(in, line);
    std::istringstream ts(line);
    std::string name, dtype;
    Eigen::Index rows = 0, cols = 0;
    ts >> name >> dtype >> rows >> cols;
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      throw ArtifactError("'" + path.string() + "': expected tensor " + p.name + " " +
                          shape_str(p.value.rows(), p.value.cols()) + ", found '" + line + "'");
    }
    const Precision prec = precision_from_string(dtype);
    if (prec == Precision::kF32) {
      Matrix<float> m(rows, cols);
      in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 4));
      p.value = m.template cast<Scalar>();
    } else {
      Matrix<double> m(rows, cols);
      in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
      p.value = m.template cast<Scalar>();
    }
    std::getline(in, line);
    if (!in) throw ArtifactError("'" + path.string() + "': truncated at tensor " + p.name);
    if (!p.value.allFinite()) throw NumericError("'" + path.string() + "': non-finite values in " + p.name);
    p.zero_grad();
  }
  return model;
}

}  // namespace eslsc
