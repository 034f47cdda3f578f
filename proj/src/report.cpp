#include "hwalk/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hwalk/rng.hpp"

namespace hwalk {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_num(const std::string& token, const std::string& key) {
  const std::string t = trim(token);
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: " + t);
  }
  if (used != t.size())
    throw std::invalid_argument("config: key '" + key + "' is not a number: " + t);
  return v;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '&': r += "&amp;"; break;
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      default: r += c;
    }
  }
  return r;
}

}  // namespace

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " has no '=': " + line);
    std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " has an empty key");
    c.kv[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::ostringstream all;
  all << in.rdbuf();
  return from_string(all.str());
}

void Config::set(const std::string& key, const std::string& value) { kv[key] = value; }

bool Config::has(const std::string& key) const { return kv.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double Config::get_num(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : parse_num(it->second, key);
}

int Config::get_int(const std::string& key, int fallback) const {
  double v = get_num(key, fallback);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("config: key '" + key + "' is not an integer");
  return i;
}

std::vector<double> Config::get_grid(const std::string& key,
                                     const std::vector<double>& fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<double> grid;
  std::istringstream in(it->second);
  std::string token;
  while (std::getline(in, token, ',')) grid.push_back(parse_num(token, key));
  if (grid.empty())
    throw std::invalid_argument("config: key '" + key + "' holds an empty grid");
  return grid;
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& comments,
                     const std::vector<std::string>& columns)
    : out_(path), n_cols_(columns.size()) {
  if (!out_) throw std::runtime_error("csv: cannot write " + path);
  if (columns.empty()) throw std::invalid_argument("csv: no columns");
  for (const std::string& c : comments) out_ << "# " << c << "\n";
  for (size_t i = 0; i < columns.size(); ++i)
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  out_.flush();
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) throw std::invalid_argument("csv: wrong cell count");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("csv: cell contains a separator");
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
  }
  out_.flush();
}

RunDir::RunDir(const std::string& root, const std::string& command, const Config& config,
               uint64_t seed, const std::vector<std::string>& planned_outputs)
    : command_(command), config_(config), seed_(seed), outputs_(planned_outputs),
      t0_(now_seconds()) {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &tm_utc);
  char hash[16];
  std::snprintf(hash, sizeof hash, "%08x",
                static_cast<unsigned>(mix64(seed, 0x243F6A8885A308D3ull) & 0xffffffffu));
  std::string base = std::string(stamp) + "-" + hash;
  std::filesystem::create_directories(root);
  id_ = base;
  for (int k = 2; std::filesystem::exists(root + "/" + id_); ++k)
    id_ = base + "-" + std::to_string(k);
  path_ = root + "/" + id_;
  std::filesystem::create_directories(path_);
  write_manifest(0.0);
}

void RunDir::write_manifest(double duration_seconds) const {
  nlohmann::json m;
  m["run_id"] = id_;
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char iso[40];
  std::strftime(iso, sizeof iso, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  m["timestamp_utc"] = iso;
  m["command"] = command_;
  m["config"] = nlohmann::json::object();
  for (const auto& [k, v] : config_.kv) m["config"][k] = v;
  m["master_seed"] = seed_;
  m["artifact_version"] = kArtifactVersion;
  m["outputs"] = outputs_;
  m["duration_seconds"] = duration_seconds;
  std::ofstream out(path_ + "/manifest.json");
  if (!out) throw std::runtime_error("manifest: cannot write " + path_);
  out << m.dump(2) << "\n";
}

void RunDir::finish() { write_manifest(now_seconds() - t0_); }

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
  if (series.empty()) throw std::invalid_argument("svg: no series");
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const PlotSeries& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("svg: bad series " + s.label);
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw std::invalid_argument("svg: non-finite point in " + s.label);
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  auto pad = [](double& lo, double& hi) {
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1e-12, std::fabs(hi) * 0.1 + 1e-12);
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);

  const double W = 720, H = 480, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* palette[] = {"#1f6feb", "#d1242f", "#1a7f37",
                                  "#9a6700", "#8250df", "#bf3989"};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("svg: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";

  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    double xv = xmin + k * (xmax - xmin) / 4.0;
    double yv = ymin + k * (ymax - ymin) / 4.0;
    out << "<line x1=\"" << px(xv) << "\" y1=\"" << T << "\" x2=\"" << px(xv)
        << "\" y2=\"" << H - B << "\" stroke=\"#dddddd\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - R
        << "\" y2=\"" << py(yv) << "\" stroke=\"#dddddd\"/>\n";
    std::snprintf(buf, sizeof buf, "%.4g", xv);
    out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", yv);
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
        << "</text>\n";
  }
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
      << "\" height=\"" << H - T - B << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << xml_escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << (T + H - B) / 2 << ")\">"
      << xml_escape(y_label) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = palette[si % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    double ly = T + 16 + 16 * static_cast<double>(si);
    out << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 126
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R - 120 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace hwalk
