#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dualframe/estimation.hpp"
#include "dualframe/simulator.hpp"

namespace dualframe::io {

// Shortest decimal with 17 significant digits; round-trips any finite
// double exactly.
std::string format_double(double x);

// Minimal JSON emitter. Exists because reports must print numbers with
// 17 significant digits and byte-identical output for identical inputs.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view k);
  JsonWriter& value(double v);
  JsonWriter& value(bool v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v);
  const std::string& str() const { return out_; }

 private:
  void pre_value();
  void append_escaped(std::string_view s);
  std::string out_;
  std::vector<bool> first_in_container_;
  bool after_key_ = false;
};

void write_complex(JsonWriter& w, Complex z);            // [re, im]
void write_matrix(JsonWriter& w, const CMatrix& m);      // [[[re,im],...],...]
void write_tolerances(JsonWriter& w, const Tolerances& tol);  // object

// Writes via a temporary file in the same directory plus rename.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

// Readers. Malformed files (missing, bad syntax, wrong schema,
// non-finite numbers) throw ParseError; domain validation failures
// throw the corresponding domain error.
CMatrix load_operator(const std::filesystem::path& path);
// Parsed but unvalidated measurement: {dim, candidate elements}.
std::pair<Index, std::vector<CMatrix>> load_povm_raw(
    const std::filesystem::path& path);
Povm load_povm(const std::filesystem::path& path, const Tolerances& tol = {});
Ensemble load_ensemble(const std::filesystem::path& path,
                       const Tolerances& tol = {});
DualFrame load_dual(const std::filesystem::path& path);

void save_operator(const std::filesystem::path& path, const CMatrix& m);
void save_povm(const std::filesystem::path& path, const Povm& povm);
void save_ensemble(const std::filesystem::path& path,
                   const Ensemble& ensemble);
void save_dual(const std::filesystem::path& path, const DualFrame& dual);

}  // namespace dualframe::io
