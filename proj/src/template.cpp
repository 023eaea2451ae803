#include "bspring/template.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bspring/error.hpp"
#include "bspring/signal.hpp"

namespace bspring {

std::string_view to_string(FiducialClass c) noexcept {
  switch (c) {
    case FiducialClass::Sys: return "Sys";
    case FiducialClass::MS: return "MS";
    case FiducialClass::Onset: return "Onset";
    case FiducialClass::NF: return "NF";
  }
  return "NF";
}

std::optional<FiducialClass> parse_fiducial_class(std::string_view s) noexcept {
  if (s == "Sys" || s == "SYS") return FiducialClass::Sys;
  if (s == "MS") return FiducialClass::MS;
  if (s == "Onset" || s == "EP") return FiducialClass::Onset;
  if (s == "NF") return FiducialClass::NF;
  return std::nullopt;
}

std::vector<double> Template::features() const { return comparison_features(samples); }

void validate_template(const Template& t) {
  const std::size_t m = t.feature_length();
  if (m < 2) throw ConfigError("template needs at least 3 samples");
  for (auto cls : {FiducialClass::Sys, FiducialClass::MS, FiducialClass::Onset}) {
    const auto it = t.ann.find(cls);
    if (it == t.ann.end()) {
      throw ConfigError("template " + std::to_string(t.id) + " lacks a " + std::string(to_string(cls)) +
                        " annotation");
    }
    if (it->second >= m) {
      throw ConfigError("template " + std::to_string(t.id) + " annotation " +
                        std::string(to_string(cls)) + " outside [0, " + std::to_string(m) + ")");
    }
  }
  if (!(t.ann.at(FiducialClass::Onset) < t.ann.at(FiducialClass::MS) &&
        t.ann.at(FiducialClass::MS) < t.ann.at(FiducialClass::Sys))) {
    throw ConfigError("template " + std::to_string(t.id) + " annotations must satisfy Onset < MS < Sys");
  }
}

Template make_template_from_cycle(std::vector<double> cycle, double fs, int id) {
  if (cycle.size() < 4) throw InputError("template cycle too short");
  Template t;
  t.id = id;
  t.fs = fs;
  const std::size_t m = cycle.size() - 1;
  const auto sys = static_cast<std::size_t>(
      std::max_element(cycle.begin() + 1, cycle.begin() + static_cast<std::ptrdiff_t>(m)) - cycle.begin());
  std::size_t ms = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sys; ++i) {
    const double d = cycle[i + 1] - cycle[i];
    if (d > best) {
      best = d;
      ms = i;
    }
  }
  t.ann[FiducialClass::Onset] = 0;
  t.ann[FiducialClass::MS] = ms;
  t.ann[FiducialClass::Sys] = sys;
  t.samples = std::move(cycle);
  validate_template(t);
  return t;
}

std::filesystem::path annotation_path(const std::filesystem::path& samples_path) {
  auto p = samples_path;
  p += ".ann.csv";
  return p;
}

void save_template(const std::filesystem::path& path, const Template& t) {
  {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "fs=" << std::setprecision(17) << t.fs << '\n';
    for (double v : t.samples) out << v << '\n';
  }
  std::ofstream ann(annotation_path(path));
  if (!ann) throw InputError("cannot write " + annotation_path(path).string());
  ann << "class,index\n";
  for (const auto& [cls, idx] : t.ann) ann << to_string(cls) << ',' << idx << '\n';
}

Template load_template(const std::filesystem::path& path, int id) {
  const auto batch = load_csv(path);
  Template t;
  t.id = id;
  t.fs = batch.fs;
  t.samples = batch.samples;

  const auto ann_file = annotation_path(path);
  std::ifstream in(ann_file);
  if (!in) throw InputError("cannot open template annotations " + ann_file.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.starts_with("class"))) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(ann_file.string(), line_no, "expected class,index");
    const auto cls = parse_fiducial_class(line.substr(0, comma));
    if (!cls) throw ParseError(ann_file.string(), line_no, "unknown class '" + line.substr(0, comma) + "'");
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      const auto rest = line.substr(comma + 1);
      idx = std::stoul(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(ann_file.string(), line_no, "invalid index");
    }
    t.ann[*cls] = idx;
  }
  validate_template(t);
  return t;
}

}  // namespace bspring
