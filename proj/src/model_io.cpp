#include "hwgn2/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hwgn2/error.hpp"

namespace hwgn2::nn {

namespace {

using nlohmann::json;
using PathStep = std::variant<std::string, std::size_t>;
using Path = std::vector<PathStep>;

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Structural walk over already-validated JSON text to find where the value
// at `path` starts. Returns the deepest position reached.
class Locator {
 public:
  explicit Locator(std::string_view t) : t_(t) {}

  std::size_t find(const Path& path) {
    pos_ = 0;
    ws();
    for (const auto& step : path) {
      const std::size_t here = pos_;
      if (!enter(step)) return here;
    }
    return pos_;
  }

 private:
  void ws() {
    while (pos_ < t_.size() && (t_[pos_] == ' ' || t_[pos_] == '\n' || t_[pos_] == '\r' || t_[pos_] == '\t')) ++pos_;
  }
  std::string string() {
    std::string out;
    ++pos_;
    while (pos_ < t_.size() && t_[pos_] != '"') {
      if (t_[pos_] == '\\') ++pos_;
      if (pos_ < t_.size()) out += t_[pos_++];
    }
    ++pos_;
    return out;
  }
  void skip_value() {
    ws();
    if (pos_ >= t_.size()) return;
    const char c = t_[pos_];
    if (c == '"') {
      string();
    } else if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      ++pos_;
      ws();
      while (pos_ < t_.size() && t_[pos_] != close) {
        if (c == '{') {
          string();
          ws();
          ++pos_;  // ':'
        }
        skip_value();
        ws();
        if (pos_ < t_.size() && t_[pos_] == ',') ++pos_;
        ws();
      }
      ++pos_;
    } else {
      while (pos_ < t_.size() && std::string_view(",]}").find(t_[pos_]) == std::string_view::npos &&
             t_[pos_] != ' ' && t_[pos_] != '\n' && t_[pos_] != '\r' && t_[pos_] != '\t')
        ++pos_;
    }
  }
  bool enter(const PathStep& step) {
    ws();
    if (pos_ >= t_.size()) return false;
    if (const auto* key = std::get_if<std::string>(&step)) {
      if (t_[pos_] != '{') return false;
      ++pos_;
      ws();
      while (pos_ < t_.size() && t_[pos_] != '}') {
        const std::string k = string();
        ws();
        ++pos_;
        ws();
        if (k == *key) return true;
        skip_value();
        ws();
        if (pos_ < t_.size() && t_[pos_] == ',') ++pos_;
        ws();
      }
      return false;
    }
    const std::size_t index = std::get<std::size_t>(step);
    if (t_[pos_] != '[') return false;
    ++pos_;
    ws();
    for (std::size_t i = 0; i < index; ++i) {
      if (pos_ >= t_.size() || t_[pos_] == ']') return false;
      skip_value();
      ws();
      if (pos_ < t_.size() && t_[pos_] == ',') ++pos_;
      ws();
    }
    return pos_ < t_.size() && t_[pos_] != ']';
  }

  std::string_view t_;
  std::size_t pos_ = 0;
};

class Reader {
 public:
  Reader(std::string_view text, const json& root) : text_(text), root_(root) {}

  [[noreturn]] void fail(const Path& path, const std::string& what) const {
    const auto [line, col] = line_col(text_, Locator(text_).find(path));
    throw ParseError(what, line, col);
  }

  const json& at(const Path& path) const {
    const json* cur = &root_;
    Path walked;
    for (const auto& step : path) {
      walked.push_back(step);
      if (const auto* key = std::get_if<std::string>(&step)) {
        if (!cur->is_object() || !cur->contains(*key)) {
          walked.pop_back();
          fail(walked, "missing key '" + *key + "'");
        }
        cur = &(*cur)[*key];
      } else {
        const std::size_t i = std::get<std::size_t>(step);
        if (!cur->is_array() || i >= cur->size()) {
          walked.pop_back();
          fail(walked, "missing element " + std::to_string(i));
        }
        cur = &(*cur)[i];
      }
    }
    return *cur;
  }

  const json& array(const Path& path, std::size_t expected_size = SIZE_MAX) const {
    const json& v = at(path);
    if (!v.is_array()) fail(path, "expected an array");
    if (expected_size != SIZE_MAX && v.size() != expected_size)
      fail(path, "expected " + std::to_string(expected_size) + " elements, got " + std::to_string(v.size()));
    return v;
  }

  std::string string(const Path& path) const {
    const json& v = at(path);
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  std::int64_t integer(const Path& path, std::int64_t lo, std::int64_t hi) const {
    const json& v = at(path);
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) fail(path, "value " + std::to_string(x) + " out of range");
    return x;
  }

  Fixed fixed(const Path& path) const {
    const json& v = at(path);
    std::string s;
    if (v.is_string())
      s = v.get<std::string>();
    else if (v.is_number())
      s = v.dump();
    else
      fail(path, "expected a decimal fixed-point string");
    try {
      return parse_fixed(s);
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }

 private:
  std::string_view text_;
  const json& root_;
};

Path operator+(Path p, PathStep s) {
  p.push_back(std::move(s));
  return p;
}

std::vector<std::uint32_t> read_sizes(const Reader& r) {
  const json& a = r.array({"layer_sizes"});
  if (a.size() < 2) r.fail({"layer_sizes"}, "layer_sizes needs at least two entries");
  std::vector<std::uint32_t> sizes;
  for (std::size_t i = 0; i < a.size(); ++i)
    sizes.push_back(static_cast<std::uint32_t>(r.integer({"layer_sizes", i}, 1, 1 << 20)));
  return sizes;
}

MlpModel read_mlp(const Reader& r) {
  MlpModel m;
  m.layer_sizes = read_sizes(r);
  r.array({"layers"}, m.layer_sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const Path lp{"layers", l};
    DenseLayer L;
    L.n_in = m.layer_sizes[l];
    L.n_out = m.layer_sizes[l + 1];
    try {
      L.activation = activation_from_string(r.string(lp + "activation"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      r.fail(lp + "activation", e.what());
    }
    r.array(lp + "weights", L.n_out);
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      r.array(lp + "weights" + j, L.n_in);
      for (std::uint32_t i = 0; i < L.n_in; ++i) L.weights.push_back(r.fixed(lp + "weights" + j + i));
    }
    r.array(lp + "bias", L.n_out);
    for (std::uint32_t j = 0; j < L.n_out; ++j) L.bias.push_back(r.fixed(lp + "bias" + j));
    m.layers.push_back(std::move(L));
  }
  try {
    m.validate();
  } catch (const ValidationError& e) {
    r.fail({"layers"}, e.what());
  }
  return m;
}

BnnModel read_bnn(const Reader& r) {
  BnnModel m;
  m.layer_sizes = read_sizes(r);
  r.array({"layers"}, m.layer_sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const Path lp{"layers", l};
    BnnLayer L;
    L.n_in = m.layer_sizes[l];
    L.n_out = m.layer_sizes[l + 1];
    L.weight_bits.assign(std::size_t{L.n_out} * L.words_per_row(), 0);
    r.array(lp + "weights", L.n_out);
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      const std::string row = r.string(lp + "weights" + j);
      if (row.size() != L.n_in)
        r.fail(lp + "weights" + j, "expected " + std::to_string(L.n_in) + " signs, got " + std::to_string(row.size()));
      for (std::uint32_t i = 0; i < L.n_in; ++i) {
        if (row[i] == '+')
          L.weight_bits[std::size_t{j} * L.words_per_row() + i / 32] |= 1u << (i % 32);
        else if (row[i] != '-')
          r.fail(lp + "weights" + j, std::string("weight signs must be '+' or '-', got '") + row[i] + "'");
      }
    }
    r.array(lp + "thresholds", L.n_out);
    for (std::uint32_t j = 0; j < L.n_out; ++j)
      L.thresholds.push_back(static_cast<std::int32_t>(r.integer(lp + "thresholds" + j, -32768, 32767)));
    m.layers.push_back(std::move(L));
  }
  try {
    m.validate();
  } catch (const ValidationError& e) {
    r.fail({"layers"}, e.what());
  }
  return m;
}

}  // namespace

AnyModel model_from_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (const auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw ParseError(what, line, col);
  }
  const Reader r(text, root);
  if (!root.is_object()) r.fail({}, "model file must be a JSON object");
  const std::string kind = r.string({"kind"});
  if (kind == "mlp") return read_mlp(r);
  if (kind == "bnn") return read_bnn(r);
  r.fail({"kind"}, "unknown model kind '" + kind + "' (expected mlp or bnn)");
}

namespace {

std::string render(const json& sizes, const std::string& kind, const std::vector<std::string>& layers) {
  std::ostringstream out;
  out << "{\n  \"kind\": \"" << kind << "\",\n  \"layer_sizes\": " << sizes.dump() << ",\n  \"layers\": [\n";
  for (std::size_t i = 0; i < layers.size(); ++i) out << layers[i] << (i + 1 < layers.size() ? ",\n" : "\n");
  out << "  ]\n}\n";
  return out.str();
}

}  // namespace

std::string to_json(const MlpModel& model) {
  std::vector<std::string> layers;
  for (const auto& L : model.layers) {
    std::ostringstream o;
    o << "    {\n      \"activation\": \"" << to_string(L.activation) << "\",\n      \"weights\": [\n";
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      json row = json::array();
      for (std::uint32_t i = 0; i < L.n_in; ++i) row.push_back(format_fixed(L.w(j, i)));
      o << "        " << row.dump() << (j + 1 < L.n_out ? ",\n" : "\n");
    }
    json bias = json::array();
    for (auto b : L.bias) bias.push_back(format_fixed(b));
    o << "      ],\n      \"bias\": " << bias.dump() << "\n    }";
    layers.push_back(o.str());
  }
  return render(json(model.layer_sizes), "mlp", layers);
}

std::string to_json(const BnnModel& model) {
  std::vector<std::string> layers;
  for (const auto& L : model.layers) {
    std::ostringstream o;
    o << "    {\n      \"weights\": [\n";
    for (std::uint32_t j = 0; j < L.n_out; ++j) {
      std::string row;
      for (std::uint32_t i = 0; i < L.n_in; ++i) row += L.weight(j, i) ? '+' : '-';
      o << "        \"" << row << "\"" << (j + 1 < L.n_out ? ",\n" : "\n");
    }
    o << "      ],\n      \"thresholds\": " << json(L.thresholds).dump() << "\n    }";
    layers.push_back(o.str());
  }
  return render(json(model.layer_sizes), "bnn", layers);
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + e.what(), 0);
  }
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out << std::visit([](const auto& m) { return to_json(m); }, model);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace hwgn2::nn
