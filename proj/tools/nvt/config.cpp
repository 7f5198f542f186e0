#include "config.hpp"

#include <cmath>

#include "nvcharge/errors.hpp"
#include "nvcharge/io.hpp"

namespace nvt {

using nvcharge::InvalidParameter;

Section::Section(const json& root, std::string source)
    : node_(&root), path_(""), shared_(std::make_shared<Shared>()) {
  shared_->source = std::move(source);
  if (!root.is_object()) throw InvalidParameter(shared_->source + ": configuration must be a JSON object");
}

Section::Section(const json* node, std::string path, std::shared_ptr<Shared> shared)
    : node_(node), path_(std::move(path)), shared_(std::move(shared)) {}

const json& Section::empty_object() {
  static const json empty = json::object();
  return empty;
}

std::string Section::where(const std::string& key) const {
  return shared_->source + ": '" + path_ + "/" + key + "'";
}

bool Section::has(const std::string& key) const { return node_->contains(key); }

const json* Section::lookup(const std::string& key) const {
  shared_->used.insert(path_ + "/" + key);
  const auto it = node_->find(key);
  return it == node_->end() ? nullptr : &*it;
}

std::optional<double> Section::maybe_number(const std::string& key) const {
  const json* v = lookup(key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_number()) throw InvalidParameter(where(key) + " must be a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw InvalidParameter(where(key) + " must be finite");
  return x;
}

double Section::number(const std::string& key) const {
  const auto v = maybe_number(key);
  if (!v) throw InvalidParameter(where(key) + " is required");
  return *v;
}

double Section::number(const std::string& key, double fallback) const {
  return maybe_number(key).value_or(fallback);
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) const {
  const json* v = lookup(key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw InvalidParameter(where(key) + " must be an integer");
  return v->get<std::int64_t>();
}

std::string Section::text(const std::string& key, const std::string& fallback) const {
  const json* v = lookup(key);
  if (!v) return fallback;
  if (!v->is_string()) throw InvalidParameter(where(key) + " must be a string");
  return v->get<std::string>();
}

std::vector<double> Section::numbers(const std::string& key) const {
  const json* v = lookup(key);
  if (!v) throw InvalidParameter(where(key) + " is required");
  if (!v->is_array()) throw InvalidParameter(where(key) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw InvalidParameter(where(key) + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> Section::numbers(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) {
    lookup(key);
    return fallback;
  }
  return numbers(key);
}

std::vector<std::string> Section::texts(const std::string& key) const {
  const json* v = lookup(key);
  std::vector<std::string> out;
  if (!v) return out;
  if (!v->is_array()) throw InvalidParameter(where(key) + " must be an array of strings");
  for (const auto& e : *v) {
    if (!e.is_string()) throw InvalidParameter(where(key) + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Section Section::child(const std::string& key) const {
  const json* v = lookup(key);
  if (!v) return Section(&empty_object(), path_ + "/" + key, shared_);
  if (!v->is_object()) throw InvalidParameter(where(key) + " must be an object");
  return Section(v, path_ + "/" + key, shared_);
}

std::vector<Section> Section::children(const std::string& key) const {
  const json* v = lookup(key);
  std::vector<Section> out;
  if (!v) return out;
  if (!v->is_array()) throw InvalidParameter(where(key) + " must be an array of objects");
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& e = (*v)[i];
    if (!e.is_object()) throw InvalidParameter(where(key) + " must be an array of objects");
    out.push_back(Section(&e, path_ + "/" + key + "/" + std::to_string(i), shared_));
  }
  return out;
}

void Section::check_unknown(const json& node, const std::string& path) const {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string p = path + "/" + it.key();
    if (!shared_->used.count(p))
      throw InvalidParameter(shared_->source + ": unknown key '" + p + "'");
    if (it->is_object()) {
      check_unknown(*it, p);
    } else if (it->is_array()) {
      for (std::size_t i = 0; i < it->size(); ++i)
        if ((*it)[i].is_object()) check_unknown((*it)[i], p + "/" + std::to_string(i));
    }
  }
}

void Section::reject_unknown_keys() const { check_unknown(*node_, path_); }

json load_config(const fs::path& path) {
  const std::string text = nvcharge::io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidParameter(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw InvalidParameter(path.string() + ": configuration must be a JSON object");
  return j;
}

}  // namespace nvt
