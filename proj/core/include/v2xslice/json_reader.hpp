#ifndef V2XSLICE_JSON_READER_HPP_
#define V2XSLICE_JSON_READER_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "v2xslice/scenario.hpp"

namespace v2xslice {

/// Strict reader over one JSON object: optional keys overlay defaults, every
/// error names the JSON pointer, and finish() rejects unknown keys.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string pointer);

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string child(const std::string& key) const;

  void number(const std::string& key, double& out, double lo = -std::numeric_limits<double>::infinity(),
              double hi = std::numeric_limits<double>::infinity());
  void integer(const std::string& key, std::int64_t& out, std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
               std::int64_t hi = std::numeric_limits<std::int64_t>::max());
  void integer(const std::string& key, int& out, int lo = std::numeric_limits<int>::min(),
               int hi = std::numeric_limits<int>::max());
  void size(const std::string& key, std::size_t& out, std::size_t lo = 0,
            std::size_t hi = std::numeric_limits<std::size_t>::max());
  void seed(const std::string& key, std::uint64_t& out);
  void boolean(const std::string& key, bool& out);
  void string(const std::string& key, std::string& out);
  void string_choice(const std::string& key, std::string& out, const std::vector<std::string>& allowed);
  void int_list(const std::string& key, std::vector<std::int64_t>& out, std::int64_t lo, bool non_empty = true);
  void number_list(const std::string& key, std::vector<double>& out, bool non_empty = true);

  /// Visits a nested object if present.
  void object(const std::string& key, const std::function<void(ObjectReader&)>& visit);
  /// Visits every element of a required-if-present array of objects.
  void object_array(const std::string& key, const std::function<void(ObjectReader&, std::size_t)>& visit);
  const nlohmann::json* raw(const std::string& key);

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  void finish() const;

  const std::string& pointer() const { return pointer_; }

 private:
  const nlohmann::json& obj_;
  std::string pointer_;
  std::set<std::string> seen_;
};

}  // namespace v2xslice

#endif  // V2XSLICE_JSON_READER_HPP_
