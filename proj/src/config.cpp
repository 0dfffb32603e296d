#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ccvx/domains.hpp"
#include "ccvx/lab.hpp"

namespace ccvx {

namespace {

using json = nlohmann::json;

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    for (;;) {
      skip_blank_lines();
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '[') {
        ++pos_;
        const auto path = key_path(']');
        expect(']');
        table = &root;
        for (const auto& k : path) {
          json& next = (*table)[k];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("table header collides with a value");
          table = &next;
        }
      } else {
        const auto path = key_path('=');
        expect('=');
        json value = parse_value();
        json* t = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
          json& next = (*t)[path[i]];
          if (next.is_null()) next = json::object();
          t = &next;
        }
        if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*t)[path.back()] = std::move(value);
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& why) const {
    const auto line = 1 + std::count(s_.begin(), s_.begin() + static_cast<long>(pos_), '\n');
    throw ConfigError("config line " + std::to_string(line) + ": " + why);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  // Whitespace, newlines and comments (inside arrays and between statements).
  void skip_all() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
        continue;
      }
      return;
    }
  }

  void skip_blank_lines() { skip_all(); }

  void end_of_line() {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == '#')
      while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '\r') ++pos_;
    if (pos_ < s_.size() && s_[pos_] != '\n') fail("unexpected text after value");
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::vector<std::string> key_path(char terminator) {
    std::vector<std::string> out;
    for (;;) {
      skip_space();
      if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
        out.push_back(parse_string());
      } else {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '_' || s_[pos_] == '-'))
          ++pos_;
        if (pos_ == start) fail("expected a key");
        out.push_back(s_.substr(start, pos_ - start));
      }
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        continue;
      }
      if (pos_ >= s_.size() || s_[pos_] != terminator) fail("malformed key");
      return out;
    }
  }

  std::string parse_string() {
    const char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      char c = s_[pos_++];
      if (c == '\n') fail("unterminated string");
      if (c == '\\' && quote == '"') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail("unsupported escape");
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json parse_value() {
    skip_space();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      for (;;) {
        skip_all();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(parse_value());
        skip_all();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == '}') {
        ++pos_;
        return obj;
      }
      for (;;) {
        const auto path = key_path('=');
        expect('=');
        if (path.size() != 1) fail("dotted keys are not supported in inline tables");
        obj[path[0]] = parse_value();
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        expect('}');
        return obj;
      }
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '}' && s_[pos_] != '#')
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) fail("missing value");
    try {
      std::size_t used = 0;
      if (tok.find_first_of(".eEn") == std::string::npos) {
        const long long v = std::stoll(tok, &used);
        if (used == tok.size()) return v;
      }
      const double v = std::stod(tok, &used);
      if (used == tok.size()) return v;
    } catch (const std::logic_error&) {
    }
    fail("cannot parse value '" + tok + "'");
  }
};

double number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.get<double>();
}

long integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return j.get<long>();
}

std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
  return j.get<std::string>();
}

Profile parse_profile(const json& j) {
  Profile p;
  p.c0 = j.contains("c0") ? number(j["c0"], "c0") : 1.0;
  p.c1 = j.contains("c1") ? number(j["c1"], "c1") : 0.0;
  p.phi = j.contains("phi") ? text(j["phi"], "phi") : "re_z1";
  eval_phi(p.phi, CVec::Zero(2));  // rejects unknown names
  return p;
}

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + what);
}

}  // namespace

json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

DensitySpec parse_density(const json& j) {
  if (!j.is_object()) throw ConfigError("density must be an inline table");
  only_keys(j, {"kind", "c0", "c1", "phi"}, "density");
  const std::string kind = j.contains("kind") ? text(j["kind"], "kind") : "uniform";
  if (kind == "uniform") return DensitySpec::uniform();
  if (kind == "profile") return DensitySpec::from_profile(parse_profile(j));
  throw ConfigError("unknown density kind: " + kind);
}

SizeFunction parse_size_function(const json& j) {
  if (!j.is_object()) throw ConfigError("size function must be an inline table");
  only_keys(j, {"kind", "c", "c0", "c1", "phi", "alpha"}, "size function");
  SizeFunction s;
  const std::string kind = j.contains("kind") ? text(j["kind"], "kind") : "const";
  if (kind == "const") {
    s.g = Profile::constant(j.contains("c") ? number(j["c"], "c") : 1.0);
  } else if (kind == "profile") {
    s.g = parse_profile(j);
  } else {
    throw ConfigError("unknown size function kind: " + kind);
  }
  if (j.contains("alpha")) s.holder_alpha = number(j["alpha"], "alpha");
  if (!(s.holder_alpha > 0.0 && s.holder_alpha <= 1.0))
    throw ConfigError("size function alpha must lie in (0, 1]");
  return s;
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 100) throw ConfigError("n_grid values must be >= 100");
    if (i && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
  }
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (mc_budget < 1) throw ConfigError("mc_budget must be >= 1");
  if (!(net_factor > 0.0 && net_factor < 1.0)) throw ConfigError("net_factor must lie in (0, 1)");
  if (law == Law::Explicit) throw ConfigError("experiments need a binomial or poisson law");
  for (double c : g_constants)
    if (!(c > 0.0)) throw ConfigError("g_constants must be positive");
}

ExperimentConfig ExperimentConfig::from_json(const json& root) {
  const json& j = root.contains("experiment") ? root["experiment"] : root;
  only_keys(j,
            {"domain", "d", "law", "f", "g", "n_grid", "replications", "seed", "estimator",
             "mc_budget", "net_factor", "output_dir", "g_constants", "timing"},
            "experiment config");
  ExperimentConfig c;
  if (j.contains("domain")) c.domain = text(j["domain"], "domain");
  DomainPtr dom = make_domain(c.domain);
  c.d = dom->dim();
  if (j.contains("d") && integer(j["d"], "d") != c.d)
    throw ConfigError("'d' does not match the domain dimension");
  if (j.contains("law")) c.law = parse_law(text(j["law"], "law"));
  if (j.contains("f")) c.density = parse_density(j["f"]);
  if (j.contains("g")) c.size = parse_size_function(j["g"]);
  if (j.contains("n_grid")) {
    if (!j["n_grid"].is_array()) throw ConfigError("'n_grid' must be a list");
    c.n_grid.clear();
    for (const auto& v : j["n_grid"]) c.n_grid.push_back(integer(v, "n_grid"));
  }
  if (j.contains("replications"))
    c.replications = static_cast<int>(integer(j["replications"], "replications"));
  if (j.contains("seed")) c.seed = Seed128::from_hex(text(j["seed"], "seed"));
  if (j.contains("estimator")) c.estimator = parse_estimator(text(j["estimator"], "estimator"));
  if (j.contains("mc_budget")) c.mc_budget = integer(j["mc_budget"], "mc_budget");
  if (j.contains("net_factor")) c.net_factor = number(j["net_factor"], "net_factor");
  if (j.contains("output_dir")) c.output_dir = text(j["output_dir"], "output_dir");
  if (j.contains("g_constants")) {
    if (!j["g_constants"].is_array()) throw ConfigError("'g_constants' must be a list");
    for (const auto& v : j["g_constants"]) c.g_constants.push_back(number(v, "g_constants"));
  }
  if (j.contains("timing")) {
    if (!j["timing"].is_boolean()) throw ConfigError("'timing' must be true or false");
    c.timing = j["timing"].get<bool>();
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(parse_toml(ss.str()));
}

}  // namespace ccvx
