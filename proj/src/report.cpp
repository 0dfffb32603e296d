#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "ccvx/lab.hpp"

namespace ccvx {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string num(double v) { return fmt("%.17g", v); }

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kW = 640, kH = 480, kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;

struct Axes {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

Axes padded(double x0, double x1, double y0, double y1) {
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  const double dx = 0.05 * (x1 - x0), dy = 0.05 * (y1 - y0);
  return {x0 - dx, x1 + dx, y0 - dy, y1 + dy};
}

std::string svg_open(const std::string& title, const std::string& xlabel,
                     const std::string& ylabel) {
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
       "viewBox=\"0 0 640 480\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + xml_escape(title) +
       "</text>\n";
  s += "<text x=\"350\" y=\"468\" text-anchor=\"middle\" font-size=\"13\">" +
       xml_escape(xlabel) + "</text>\n";
  s += "<text x=\"18\" y=\"240\" text-anchor=\"middle\" font-size=\"13\" "
       "transform=\"rotate(-90 18 240)\">" +
       xml_escape(ylabel) + "</text>\n";
  s += "<rect x=\"80\" y=\"40\" width=\"540\" height=\"380\" fill=\"none\" stroke=\"black\"/>\n";
  return s;
}

std::string ticks(const Axes& a, bool log_axes) {
  std::string s;
  auto label = [&](double v) {
    return log_axes ? fmt("%.3g", std::pow(10.0, v)) : fmt("%.2g", v);
  };
  for (int i = 0; i <= 4; ++i) {
    const double x = a.x0 + (a.x1 - a.x0) * i / 4.0;
    const double y = a.y0 + (a.y1 - a.y0) * i / 4.0;
    s += "<text x=\"" + fmt("%.2f", a.px(x)) + "\" y=\"438\" text-anchor=\"middle\" "
         "font-size=\"11\">" + label(x) + "</text>\n";
    s += "<text x=\"74\" y=\"" + fmt("%.2f", a.py(y) + 4) +
         "\" text-anchor=\"end\" font-size=\"11\">" + label(y) + "</text>\n";
  }
  return s;
}

std::string circle(double x, double y) {
  return "<circle cx=\"" + fmt("%.2f", x) + "\" cy=\"" + fmt("%.2f", y) +
         "\" r=\"3\" fill=\"steelblue\"/>\n";
}

std::string line(double x0, double y0, double x1, double y1, const char* color) {
  return "<line x1=\"" + fmt("%.2f", x0) + "\" y1=\"" + fmt("%.2f", y0) + "\" x2=\"" +
         fmt("%.2f", x1) + "\" y2=\"" + fmt("%.2f", y1) + "\" stroke=\"" + color + "\"/>\n";
}

}  // namespace

std::string replication_csv_header() { return "n,rep,verdict,delta_v,scaled,points,ms"; }

std::string replication_csv_row(const ReplicationRecord& r) {
  return std::to_string(r.n) + "," + std::to_string(r.rep) + "," + r.verdict + "," +
         num(r.delta_v) + "," + num(r.scaled) + "," + std::to_string(r.points) + "," +
         fmt("%.3f", r.ms);
}

std::string summary_csv(const std::vector<SummaryRecord>& s) {
  std::string out = "n,mean,var,scaled_mean,cover_freq,ks,w1\n";
  for (const auto& r : s)
    out += std::to_string(r.n) + "," + num(r.mean) + "," + opt_num(r.var) + "," +
           num(r.scaled_mean) + "," + num(r.cover_freq) + "," + opt_num(r.ks) + "," +
           opt_num(r.w1) + "\n";
  return out;
}

std::vector<ReplicationRecord> read_replication_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != replication_csv_header())
    throw ConfigError(file.string() + ": unexpected header");
  std::vector<ReplicationRecord> out;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
    try {
      ReplicationRecord r;
      r.n = std::stol(f[0]);
      r.rep = std::stoi(f[1]);
      r.verdict = f[2];
      r.delta_v = std::stod(f[3]);
      r.scaled = std::stod(f[4]);
      r.points = std::stol(f[5]);
      r.ms = std::stod(f[6]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return out;
}

std::string mc_se_csv(const std::vector<ReplicationRecord>& records) {
  std::string out = "n,rep,se\n";
  for (const auto& r : records)
    out += std::to_string(r.n) + "," + std::to_string(r.rep) + "," + num(r.se) + "\n";
  return out;
}

void read_mc_se_csv(const std::filesystem::path& file, std::vector<ReplicationRecord>& records) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != "n,rep,se")
    throw ConfigError(file.string() + ": unexpected header");
  std::map<std::pair<long, int>, double> se;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw ConfigError(file.string() + ": expected 3 fields");
    try {
      se[{std::stol(f[0]), std::stoi(f[1])}] = std::stod(f[2]);
    } catch (const std::logic_error&) {
      throw ConfigError(file.string() + ": malformed number");
    }
  }
  for (auto& r : records)
    if (auto it = se.find({r.n, r.rep}); it != se.end()) r.se = it->second;
}

std::string svg_loglog(const std::string& title, const std::string& ylabel,
                       const std::vector<std::pair<double, double>>& pts,
                       std::optional<RateFit> fit) {
  std::vector<std::pair<double, double>> lp;
  for (const auto& [x, y] : pts)
    if (x > 0 && y > 0) lp.emplace_back(std::log10(x), std::log10(y));
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!lp.empty()) {
    x0 = x1 = lp[0].first;
    y0 = y1 = lp[0].second;
    for (const auto& [x, y] : lp) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  const Axes a = padded(x0, x1, y0, y1);
  std::string s = svg_open(title, "n", ylabel) + ticks(a, true);
  for (const auto& [x, y] : lp) s += circle(a.px(x), a.py(y));
  if (fit && !lp.empty()) {
    // y = e^b x^a in natural logs; convert to log10 coordinates
    auto fy = [&](double lx) {
      return (fit->intercept + fit->exponent * lx * std::log(10.0)) / std::log(10.0);
    };
    s += line(a.px(x0), a.py(fy(x0)), a.px(x1), a.py(fy(x1)), "firebrick");
    s += "<text x=\"600\" y=\"60\" text-anchor=\"end\" font-size=\"12\">slope " +
         fmt("%.3f", fit->exponent) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string svg_qq(const std::string& title, std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const boost::math::normal_distribution<double> nd;
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < z.size(); ++i)
    p.emplace_back(boost::math::quantile(nd, (i + 0.5) / static_cast<double>(z.size())), z[i]);
  double lo = -3, hi = 3;
  for (const auto& [q, v] : p) {
    lo = std::min({lo, q, v});
    hi = std::max({hi, q, v});
  }
  const Axes a = padded(lo, hi, lo, hi);
  std::string s = svg_open(title, "normal quantile", "standardized value") + ticks(a, false);
  s += line(a.px(lo), a.py(lo), a.px(hi), a.py(hi), "firebrick");
  for (const auto& [q, v] : p) s += circle(a.px(q), a.py(v));
  return s + "</svg>\n";
}

void emit_outputs(const std::vector<ReplicationRecord>& records,
                  const std::vector<SummaryRecord>& summaries, int d,
                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::string csv = replication_csv_header() + "\n";
  for (const auto& r : records) csv += replication_csv_row(r) + "\n";
  write_file(out_dir / "replications.csv", csv);
  write_file(out_dir / "mc_se.csv", mc_se_csv(records));
  write_file(out_dir / "summary.csv", summary_csv(summaries));

  nlohmann::ordered_json j;
  j["d"] = d;
  j["target_mean_exponent"] = -1.0 / d;
  j["target_variance_exponent"] = -(1.0 + 2.0 / d);
  auto& rows = j["per_n"] = nlohmann::ordered_json::array();
  std::vector<double> ns, means, vars, vns, cvars, cvns;
  std::vector<std::pair<double, double>> mean_pts, var_pts;
  for (const auto& s : summaries) {
    nlohmann::ordered_json r;
    r["n"] = s.n;
    r["count"] = s.count;
    r["mean"] = s.mean;
    r["var"] = s.var ? nlohmann::ordered_json(*s.var) : nlohmann::ordered_json();
    r["mc_var"] = s.mc_var ? nlohmann::ordered_json(*s.mc_var) : nlohmann::ordered_json();
    r["var_corrected"] =
        s.var_corrected ? nlohmann::ordered_json(*s.var_corrected) : nlohmann::ordered_json();
    r["scaled_mean"] = s.scaled_mean;
    r["cover_freq"] = s.cover_freq;
    r["ks"] = s.ks ? nlohmann::ordered_json(*s.ks) : nlohmann::ordered_json();
    r["w1"] = s.w1 ? nlohmann::ordered_json(*s.w1) : nlohmann::ordered_json();
    rows.push_back(r);
    if (s.count > 0 && s.mean > 0) {
      ns.push_back(static_cast<double>(s.n));
      means.push_back(s.mean);
      mean_pts.emplace_back(s.n, s.mean);
    }
    if (s.var && *s.var > 0) {
      vns.push_back(static_cast<double>(s.n));
      vars.push_back(*s.var);
      var_pts.emplace_back(s.n, *s.var);
    }
    if (s.var_corrected && *s.var_corrected > 0) {
      cvns.push_back(static_cast<double>(s.n));
      cvars.push_back(*s.var_corrected);
    }
  }
  std::optional<RateFit> mean_fit, var_fit;
  auto fit_json = [](const RateFit& f) {
    nlohmann::ordered_json o;
    o["exponent"] = f.exponent;
    o["intercept"] = f.intercept;
    o["r2"] = f.r2;
    return o;
  };
  if (ns.size() >= 3) {
    mean_fit = fit_rate(ns, means, 0.0);
    j["mean_fit"] = fit_json(*mean_fit);
    j["mean_fit_log_corrected"] = fit_json(fit_rate(ns, means, 1.0 / d));
  }
  if (vns.size() >= 3) {
    var_fit = fit_rate(vns, vars, 0.0);
    j["variance_fit"] = fit_json(*var_fit);
  }
  if (cvns.size() >= 3) j["variance_fit_corrected"] = fit_json(fit_rate(cvns, cvars, 0.0));
  write_file(out_dir / "summary.json", j.dump(2) + "\n");

  write_file(out_dir / "mean.svg", svg_loglog("mean of delta_V", "mean delta_V", mean_pts, mean_fit));
  write_file(out_dir / "variance.svg",
             svg_loglog("variance of delta_V", "variance", var_pts, var_fit));
  if (!summaries.empty()) {
    const long nmax = summaries.back().n;
    const auto& top = summaries.back();
    std::vector<double> z;
    if (top.var && *top.var > 0) {
      const double sd = std::sqrt(*top.var);
      for (const auto& r : records)
        if (r.n == nmax && r.ok()) z.push_back((r.delta_v - top.mean) / sd);
    }
    write_file(out_dir / "qq.svg", svg_qq("normal Q-Q at n = " + std::to_string(nmax), z));
  }
}

}  // namespace ccvx
