#include "dualframe/io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <utility>

namespace dualframe::io {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

JsonWriter& JsonWriter::begin_object() {
  pre_value();
  out_ += '{';
  first_in_container_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += '}';
  first_in_container_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  pre_value();
  out_ += '[';
  first_in_container_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += ']';
  first_in_container_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view k) {
  if (!first_in_container_.back()) out_ += ',';
  first_in_container_.back() = false;
  out_ += '"';
  append_escaped(k);
  out_ += "\":";
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  pre_value();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  pre_value();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  pre_value();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRId64, v);
  out_ += buf;
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
  pre_value();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%" PRIu64, v);
  out_ += buf;
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view v) {
  pre_value();
  out_ += '"';
  append_escaped(v);
  out_ += '"';
  return *this;
}

JsonWriter& JsonWriter::value(const char* v) {
  return value(std::string_view(v));
}

void JsonWriter::pre_value() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (!first_in_container_.empty()) {
    if (!first_in_container_.back()) out_ += ',';
    first_in_container_.back() = false;
  }
}

void JsonWriter::append_escaped(std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      case '\r': out_ += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out_ += buf;
        } else {
          out_ += c;
        }
    }
  }
}

void write_complex(JsonWriter& w, Complex z) {
  w.begin_array().value(z.real()).value(z.imag()).end_array();
}

void write_matrix(JsonWriter& w, const CMatrix& m) {
  w.begin_array();
  for (Index r = 0; r < m.rows(); ++r) {
    w.begin_array();
    for (Index c = 0; c < m.cols(); ++c) write_complex(w, m(r, c));
    w.end_array();
  }
  w.end_array();
}

void write_tolerances(JsonWriter& w, const Tolerances& tol) {
  w.begin_object();
  w.key("herm").value(tol.herm);
  w.key("psd").value(tol.psd);
  w.key("trace").value(tol.trace);
  w.key("complete").value(tol.complete);
  w.key("ortho").value(tol.ortho);
  w.key("span").value(tol.span);
  w.key("rank_cutoff").value(tol.rank_cutoff);
  w.key("dual").value(tol.dual);
  w.key("consistency").value(tol.consistency);
  w.key("weight").value(tol.weight);
  w.end_object();
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IoError", "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("IoError", "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

double number_from(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ParseError(where + ": non-finite number");
  return x;
}

CMatrix matrix_from(const json& j, Index dim, const std::string& where) {
  if (!j.is_array() || static_cast<Index>(j.size()) != dim) {
    throw ParseError(where + ": expected " + std::to_string(dim) + " rows");
  }
  CMatrix m(dim, dim);
  for (Index r = 0; r < dim; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != dim) {
      throw ParseError(where + ": expected " + std::to_string(dim) +
                       " entries per row");
    }
    for (Index c = 0; c < dim; ++c) {
      const json& entry = row[static_cast<std::size_t>(c)];
      if (!entry.is_array() || entry.size() != 2) {
        throw ParseError(where + ": each entry must be [re, im]");
      }
      m(r, c) = Complex(number_from(entry[0], where),
                        number_from(entry[1], where));
    }
  }
  return m;
}

Index dim_from(const json& j, const std::string& where) {
  if (!j.contains("dim") || !j["dim"].is_number_integer()) {
    throw ParseError(where + ": missing integer field 'dim'");
  }
  const auto dim = j["dim"].get<std::int64_t>();
  if (dim < 1) throw ParseError(where + ": 'dim' must be positive");
  return static_cast<Index>(dim);
}

}  // namespace

CMatrix load_operator(const std::filesystem::path& path) {
  const json j = parse_file(path);
  const Index dim = dim_from(j, path.string());
  if (!j.contains("matrix")) {
    throw ParseError(path.string() + ": missing field 'matrix'");
  }
  return matrix_from(j["matrix"], dim, path.string());
}

std::pair<Index, std::vector<CMatrix>> load_povm_raw(
    const std::filesystem::path& path) {
  const json j = parse_file(path);
  const Index dim = dim_from(j, path.string());
  if (!j.contains("elements") || !j["elements"].is_array() ||
      j["elements"].empty()) {
    throw ParseError(path.string() +
                     ": missing nonempty array field 'elements'");
  }
  std::vector<CMatrix> elements;
  elements.reserve(j["elements"].size());
  for (const json& e : j["elements"]) {
    elements.push_back(matrix_from(e, dim, path.string()));
  }
  return {dim, std::move(elements)};
}

Povm load_povm(const std::filesystem::path& path, const Tolerances& tol) {
  auto [dim, elements] = load_povm_raw(path);
  (void)dim;
  return validate_povm(elements, tol);
}

Ensemble load_ensemble(const std::filesystem::path& path,
                       const Tolerances& tol) {
  const json j = parse_file(path);
  const Index dim = dim_from(j, path.string());
  if (!j.contains("states") || !j["states"].is_array() ||
      j["states"].empty()) {
    throw ParseError(path.string() +
                     ": missing nonempty array field 'states'");
  }
  std::vector<DensityMatrix> states;
  RVector weights(static_cast<Index>(j["states"].size()));
  Index k = 0;
  for (const json& entry : j["states"]) {
    if (!entry.contains("weight") || !entry.contains("rho")) {
      throw ParseError(path.string() +
                       ": each state needs 'weight' and 'rho'");
    }
    weights(k) = number_from(entry["weight"], path.string());
    states.push_back(make_density_matrix(
        matrix_from(entry["rho"], dim, path.string()), tol));
    ++k;
  }
  return make_ensemble(std::move(states), std::move(weights), tol);
}

DualFrame load_dual(const std::filesystem::path& path) {
  const json j = parse_file(path);
  const Index dim = dim_from(j, path.string());
  if (!j.contains("elements") || !j["elements"].is_array() ||
      j["elements"].empty()) {
    throw ParseError(path.string() +
                     ": missing nonempty array field 'elements'");
  }
  DualFrame dual{dim, DualKind::alternate, {}};
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) {
      throw ParseError(path.string() + ": 'kind' must be a string");
    }
    dual.kind = dual_kind_from_string(j["kind"].get<std::string>());
  }
  dual.elements.reserve(j["elements"].size());
  for (const json& e : j["elements"]) {
    dual.elements.push_back(matrix_from(e, dim, path.string()));
  }
  return dual;
}

void save_operator(const std::filesystem::path& path, const CMatrix& m) {
  JsonWriter w;
  w.begin_object();
  w.key("dim").value(static_cast<std::int64_t>(m.rows()));
  w.key("matrix");
  write_matrix(w, m);
  w.end_object();
  write_text_atomic(path, w.str() + "\n");
}

void save_povm(const std::filesystem::path& path, const Povm& povm) {
  JsonWriter w;
  w.begin_object();
  w.key("dim").value(static_cast<std::int64_t>(povm.dim));
  w.key("elements");
  w.begin_array();
  for (const auto& p : povm.elements) write_matrix(w, p);
  w.end_array();
  w.end_object();
  write_text_atomic(path, w.str() + "\n");
}

void save_ensemble(const std::filesystem::path& path,
                   const Ensemble& ensemble) {
  JsonWriter w;
  w.begin_object();
  w.key("dim").value(static_cast<std::int64_t>(ensemble.dim()));
  w.key("states");
  w.begin_array();
  for (Index k = 0; k < ensemble.n_states(); ++k) {
    w.begin_object();
    w.key("weight").value(ensemble.weights(k));
    w.key("rho");
    write_matrix(w, ensemble.states[k].op);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  write_text_atomic(path, w.str() + "\n");
}

void save_dual(const std::filesystem::path& path, const DualFrame& dual) {
  JsonWriter w;
  w.begin_object();
  w.key("dim").value(static_cast<std::int64_t>(dual.dim));
  w.key("kind").value(to_string(dual.kind));
  w.key("elements");
  w.begin_array();
  for (const auto& d : dual.elements) write_matrix(w, d);
  w.end_array();
  w.end_object();
  write_text_atomic(path, w.str() + "\n");
}

}  // namespace dualframe::io
