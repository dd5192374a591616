#include "v2xslice/json_reader.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace v2xslice {

namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

}  // namespace

ObjectReader::ObjectReader(const nlohmann::json& j, std::string pointer) : obj_(j), pointer_(std::move(pointer)) {
  if (!obj_.is_object()) throw SchemaError(pointer_.empty() ? "/" : pointer_, "expected an object");
}

std::string ObjectReader::child(const std::string& key) const { return pointer_ + "/" + escape_token(key); }

void ObjectReader::fail(const std::string& key, const std::string& what) const { throw SchemaError(child(key), what); }

const nlohmann::json* ObjectReader::raw(const std::string& key) {
  seen_.insert(key);
  auto it = obj_.find(key);
  return it == obj_.end() ? nullptr : &*it;
}

void ObjectReader::number(const std::string& key, double& out, double lo, double hi) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_number()) fail(key, "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x) || x < lo || x > hi) fail(key, fmt::format("value {} outside [{}, {}]", x, lo, hi));
  out = x;
}

void ObjectReader::integer(const std::string& key, std::int64_t& out, std::int64_t lo, std::int64_t hi) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_number_integer()) fail(key, "expected an integer");
  const auto x = v->get<std::int64_t>();
  if (x < lo || x > hi) fail(key, fmt::format("value {} outside [{}, {}]", x, lo, hi));
  out = x;
}

void ObjectReader::integer(const std::string& key, int& out, int lo, int hi) {
  std::int64_t tmp = out;
  integer(key, tmp, lo, hi);
  out = static_cast<int>(tmp);
}

void ObjectReader::size(const std::string& key, std::size_t& out, std::size_t lo, std::size_t hi) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_number_unsigned()) fail(key, "expected a nonnegative integer");
  const auto x = v->get<std::uint64_t>();
  if (x < lo || x > hi) fail(key, fmt::format("value {} outside [{}, {}]", x, lo, hi));
  out = static_cast<std::size_t>(x);
}

void ObjectReader::seed(const std::string& key, std::uint64_t& out) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_number_unsigned()) fail(key, "expected a nonnegative integer seed");
  out = v->get<std::uint64_t>();
}

void ObjectReader::boolean(const std::string& key, bool& out) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_boolean()) fail(key, "expected true or false");
  out = v->get<bool>();
}

void ObjectReader::string(const std::string& key, std::string& out) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_string()) fail(key, "expected a string");
  out = v->get<std::string>();
}

void ObjectReader::string_choice(const std::string& key, std::string& out, const std::vector<std::string>& allowed) {
  std::string tmp = out;
  string(key, tmp);
  if (std::find(allowed.begin(), allowed.end(), tmp) == allowed.end())
    fail(key, fmt::format("'{}' is not one of: {}", tmp, fmt::join(allowed, ", ")));
  out = tmp;
}

void ObjectReader::int_list(const std::string& key, std::vector<std::int64_t>& out, std::int64_t lo, bool non_empty) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_array()) fail(key, "expected an array of integers");
  if (non_empty && v->empty()) fail(key, "array must not be empty");
  std::vector<std::int64_t> tmp;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& e = (*v)[i];
    if (!e.is_number_integer() || e.get<std::int64_t>() < lo)
      throw SchemaError(child(key) + "/" + std::to_string(i), fmt::format("expected an integer >= {}", lo));
    tmp.push_back(e.get<std::int64_t>());
  }
  out = std::move(tmp);
}

void ObjectReader::number_list(const std::string& key, std::vector<double>& out, bool non_empty) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_array()) fail(key, "expected an array of numbers");
  if (non_empty && v->empty()) fail(key, "array must not be empty");
  std::vector<double> tmp;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto& e = (*v)[i];
    if (!e.is_number()) throw SchemaError(child(key) + "/" + std::to_string(i), "expected a number");
    tmp.push_back(e.get<double>());
  }
  out = std::move(tmp);
}

void ObjectReader::object(const std::string& key, const std::function<void(ObjectReader&)>& visit) {
  const auto* v = raw(key);
  if (!v) return;
  ObjectReader sub(*v, child(key));
  visit(sub);
  sub.finish();
}

void ObjectReader::object_array(const std::string& key, const std::function<void(ObjectReader&, std::size_t)>& visit) {
  const auto* v = raw(key);
  if (!v) return;
  if (!v->is_array()) fail(key, "expected an array of objects");
  for (std::size_t i = 0; i < v->size(); ++i) {
    ObjectReader sub((*v)[i], child(key) + "/" + std::to_string(i));
    visit(sub, i);
    sub.finish();
  }
}

void ObjectReader::finish() const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it)
    if (!seen_.count(it.key())) throw SchemaError(child(it.key()), "unknown key");
}

}  // namespace v2xslice
