#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

// Run plumbing: flat key = value configuration, CSV series with documented
// headers, a run registry of runs/<id>/ directories with JSON manifests, and
// a small SVG line plotter.  All floating-point output uses 17 significant
// digits so rows round-trip bit-exactly.

namespace hwalk {

inline constexpr const char* kArtifactVersion = "0.1.0";

std::string format_g17(double x);

// Flat key = value text: one assignment per line, '#' starts a comment,
// blank lines ignored, later assignments win.  Flags overlay on top of the
// file through set().
struct Config {
  std::map<std::string, std::string> kv;

  static Config from_string(const std::string& text);
  static Config from_file(const std::string& path);  // throws when unreadable

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  // Comma-separated numbers; the full list replaces the fallback.
  std::vector<double> get_grid(const std::string& key,
                               const std::vector<double>& fallback) const;

  // Canonical echo: sorted "key = value" lines, parseable by from_string.
  std::string echo() const;
};

// CSV with '#' comment lines documenting the columns, then the header row,
// then data rows.  Numeric cells go through format_g17.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& comments,
            const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);  // one cell per column
  static std::string num(double x) { return format_g17(x); }

 private:
  std::ofstream out_;
  size_t n_cols_;
};

// One directory under the registry root: runs/<utc-timestamp>-<seed-hash>/.
// The manifest is written at construction, before any result file, with the
// planned output list and a zero duration; finish() rewrites it with the
// measured wall-clock time.  Identical command, config, and seed make the
// result rows byte-identical, so re-running a manifest reproduces the run.
class RunDir {
 public:
  RunDir(const std::string& root, const std::string& command, const Config& config,
         uint64_t seed, const std::vector<std::string>& planned_outputs);
  const std::string& id() const { return id_; }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }
  void finish();

 private:
  void write_manifest(double duration_seconds) const;

  std::string id_;
  std::string path_;
  std::string command_;
  Config config_;
  uint64_t seed_;
  std::vector<std::string> outputs_;
  double t0_;
};

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line plot: axes with tick labels, one polyline plus point markers
// per series, a small legend.  Skips nothing silently; throws on empty or
// non-finite input.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

}  // namespace hwalk
