#include "cvqkd/scenario.hpp"

#include "cvqkd/errors.hpp"
#include "cvqkd/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace cvqkd::scenario {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join_path(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError((path_.empty() ? "scenario" : path_) + " must be an object");
  }

  const json* get(const std::string& key) {
    used_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::optional<double> number(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) throw ValidationError(join_path(path_, key) + " must be a number");
    return v->get<double>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ValidationError(join_path(path_, key) + " must be a string");
    return v->get<std::string>();
  }

  std::string path(const std::string& key) const { return join_path(path_, key); }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!used_.contains(key)) throw ValidationError(join_path(path_, key) + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ValidationError(path + " must be a number");
  return value.get<double>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ValidationError(path + " must be a string");
  return value.get<std::string>();
}

// Runs fn and re-raises argument errors as validation errors prefixed by path.
// Messages that start with a field name are joined with '.', others with ": ".
template <typename Fn>
auto with_path(const std::string& path, Fn&& fn, std::string_view sep = ": ") {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw ValidationError(path.empty() ? std::string(e.what()) : path + std::string(sep) + e.what());
  }
}

link::WeatherCondition parse_weather(const json& node, const std::string& path) {
  if (node.is_string()) {
    return with_path(path, [&] { return link::weather_from_string(node.get<std::string>()); });
  }
  if (!node.is_object() || node.size() != 1) {
    throw ValidationError(path + " must hold exactly one of clear, rain, haze");
  }
  const auto& [kind, body] = *node.items().begin();
  ObjectReader r(body, join_path(path, kind));
  link::WeatherCondition weather;
  if (kind == "clear") {
    weather = link::Clear{};
  } else if (kind == "rain") {
    const auto rate = r.number("rate_mm_h");
    if (!rate) throw ValidationError(r.path("rate_mm_h") + " is required");
    if (!(*rate > 0.0)) throw ValidationError(r.path("rate_mm_h") + " must be > 0");
    weather = link::Rain{*rate};
  } else if (kind == "haze") {
    const auto vis = r.number("visibility_km");
    if (!vis) throw ValidationError(r.path("visibility_km") + " is required");
    if (!(*vis > 0.0)) throw ValidationError(r.path("visibility_km") + " must be > 0");
    weather = link::Haze{*vis};
  } else {
    throw ValidationError(path + ": unknown key '" + kind + "'");
  }
  r.finish();
  return weather;
}

protocol::DetectorModel parse_detector(const json* node, link::Band band, const std::string& path) {
  const auto mode_default = protocol::default_noise_mode(band);
  if (!node) return protocol::DetectorModel::ideal().with_noise_mode(mode_default);
  ObjectReader r(*node, path);
  const double bandwidth = r.number("bandwidth_hz").value_or(0.0);
  const auto efficiency = r.number("efficiency");
  const auto n_amp = r.number("amplifier_noise");
  const auto mode_name = r.string("noise_mode");
  r.finish();
  if (efficiency && n_amp) throw ValidationError(path + ": give efficiency or amplifier_noise, not both");
  const auto mode = mode_name ? with_path(path, [&] { return protocol::noise_mode_from_string(*mode_name); })
                              : mode_default;
  return with_path(path, [&] {
    if (n_amp) return protocol::DetectorModel::from_amplifier_noise(*n_amp, bandwidth, mode);
    return protocol::DetectorModel::from_efficiency(efficiency.value_or(1.0), bandwidth, mode);
  });
}

LinkConfig parse_link(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  const auto band_name = r.string("band");
  if (!band_name) throw ValidationError(r.path("band") + " is required");
  LinkConfig cfg;
  const auto band = with_path(path, [&] { return link::band_from_string(*band_name); });
  cfg.link = band == link::Band::microwave ? link::LinkScenario::microwave(0.0) : link::LinkScenario::telecom(0.0);

  const auto frequency = r.number("frequency_hz");
  const auto wavelength = r.number("wavelength_nm");
  if (frequency && wavelength) throw ValidationError(path + ": give frequency_hz or wavelength_nm, not both");
  if (frequency) cfg.link.frequency = *frequency;
  if (wavelength) {
    if (!(*wavelength > 0.0)) throw ValidationError(r.path("wavelength_nm") + " must be > 0");
    cfg.link.frequency = link::kSpeedOfLight / (*wavelength * 1e-9);
  }
  if (auto v = r.number("distance_m")) cfg.link.distance = *v;
  if (auto v = r.number("temperature_k")) cfg.link.temperature = *v;
  if (auto v = r.number("gain_tx")) cfg.link.gain_tx = *v;
  if (auto v = r.number("gain_rx")) cfg.link.gain_rx = *v;
  if (const json* w = r.get("weather")) cfg.link.weather = parse_weather(*w, r.path("weather"));
  cfg.detector = parse_detector(r.get("detector"), band, r.path("detector"));
  r.finish();
  with_path(path, [&] { link::validate(cfg.link); }, ".");
  return cfg;
}

protocol::ProtocolParams parse_protocol(const json* node) {
  protocol::ProtocolParams p;
  if (!node) return p;
  ObjectReader r(*node, "protocol");
  if (auto v = r.number("squeezing_db")) p.squeezing_db = *v;
  if (auto v = r.number("beta")) p.beta = *v;
  if (auto v = r.string("basis")) {
    if (*v == "q") {
      p.basis = gaussian::Quadrature::q;
    } else if (*v == "p") {
      p.basis = gaussian::Quadrature::p;
    } else {
      throw ValidationError("protocol.basis must be q or p");
    }
  }
  if (auto v = r.string("reconciliation")) {
    p.reconciliation = with_path("protocol", [&] { return protocol::reconciliation_from_string(*v); });
  }
  r.finish();
  with_path("", [&] { protocol::validate(p); });
  return p;
}

link::ChannelParams parse_channel(const json& node) {
  ObjectReader r(node, "channel");
  const auto tau = r.number("tau");
  const auto nbar = r.number("nbar");
  r.finish();
  if (!tau) throw ValidationError("channel.tau is required");
  auto ch = with_path("", [&] { return link::ChannelParams::from_tau(*tau, nbar.value_or(0.0)); });
  if (ch.loss <= 0.0 && ch.nbar > 0.0) throw ValidationError("channel.nbar must be 0 when channel.tau = 1");
  return ch;
}

security::ScanOptions parse_scan(const json* node) {
  security::ScanOptions scan;
  if (!node) return scan;
  ObjectReader r(*node, "scan");
  if (auto v = r.number("min_distance_m")) scan.min_distance = *v;
  if (auto v = r.number("max_distance_m")) scan.max_distance = *v;
  if (auto v = r.number("points")) scan.points = static_cast<int>(*v);
  if (auto v = r.number("tolerance_m")) scan.tolerance = *v;
  r.finish();
  if (!(scan.min_distance > 0.0)) throw ValidationError("scan.min_distance_m must be > 0");
  if (!(scan.max_distance > scan.min_distance)) throw ValidationError("scan.max_distance_m must exceed min_distance_m");
  if (scan.points < 2) throw ValidationError("scan.points must be >= 2");
  if (!(scan.tolerance > 0.0)) throw ValidationError("scan.tolerance_m must be > 0");
  return scan;
}

SweepAxis parse_axis(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  SweepAxis axis;
  const auto variable = r.string("variable");
  if (!variable) throw ValidationError(r.path("variable") + " is required");
  axis.variable = *variable;
  if (const json* values = r.get("values")) {
    if (!values->is_array() || values->empty()) throw ValidationError(r.path("values") + " must be a non-empty array");
    for (const auto& v : *values) {
      if (!v.is_number() && !v.is_string()) throw ValidationError(r.path("values") + " entries must be numbers or strings");
      axis.values.push_back(v);
    }
    for (const char* key : {"min", "max", "points", "scale"}) {
      if (r.get(key)) throw ValidationError(path + ": values cannot be combined with " + key);
    }
    r.finish();
    return axis;
  }
  const auto lo = r.number("min");
  const auto hi = r.number("max");
  const auto points = r.number("points");
  const auto scale = r.string("scale").value_or("linear");
  r.finish();
  if (!lo || !hi || !points) throw ValidationError(path + ": needs min, max and points, or values");
  if (!(*lo < *hi)) throw ValidationError(path + ": min must be < max");
  if (!(*points >= 2.0) || *points != std::floor(*points)) throw ValidationError(r.path("points") + " must be an integer >= 2");
  if (scale != "linear" && scale != "log") throw ValidationError(r.path("scale") + " must be linear or log");
  if (scale == "log" && !(*lo > 0.0)) throw ValidationError(path + ": log scale needs min > 0");
  const int n = static_cast<int>(*points);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    double v = scale == "log" ? std::exp(std::log(*lo) + t * (std::log(*hi) - std::log(*lo))) : *lo + t * (*hi - *lo);
    if (i == 0) v = *lo;
    if (i == n - 1) v = *hi;
    axis.values.emplace_back(v);
  }
  return axis;
}

void set_link_field(LinkConfig& cfg, const std::string& field, const json& value, const std::string& path) {
  auto& l = cfg.link;
  const auto& d = cfg.detector;
  if (field == "distance_m") {
    l.distance = as_number(value, path);
  } else if (field == "frequency_hz") {
    l.frequency = as_number(value, path);
  } else if (field == "wavelength_nm") {
    const double nm = as_number(value, path);
    if (!(nm > 0.0)) throw ValidationError(path + " must be > 0");
    l.frequency = link::kSpeedOfLight / (nm * 1e-9);
  } else if (field == "temperature_k") {
    l.temperature = as_number(value, path);
  } else if (field == "gain_tx") {
    l.gain_tx = as_number(value, path);
  } else if (field == "gain_rx") {
    l.gain_rx = as_number(value, path);
  } else if (field == "weather") {
    l.weather = parse_weather(value, path);
  } else if (field == "weather.rain.rate_mm_h") {
    l.weather = link::Rain{as_number(value, path)};
  } else if (field == "weather.haze.visibility_km") {
    l.weather = link::Haze{as_number(value, path)};
  } else if (field == "detector.efficiency") {
    cfg.detector = protocol::DetectorModel::from_efficiency(as_number(value, path), d.bandwidth(), d.noise_mode());
  } else if (field == "detector.amplifier_noise") {
    cfg.detector = protocol::DetectorModel::from_amplifier_noise(as_number(value, path), d.bandwidth(), d.noise_mode());
  } else if (field == "detector.bandwidth_hz") {
    cfg.detector = protocol::DetectorModel::from_amplifier_noise(d.amplifier_noise(), as_number(value, path), d.noise_mode());
  } else if (field == "detector.noise_mode") {
    cfg.detector = d.with_noise_mode(protocol::noise_mode_from_string(as_string(value, path)));
  } else {
    throw ValidationError(path + ": unknown parameter");
  }
}

}  // namespace

void set_parameter(Scenario& s, const std::string& path, const json& value) {
  auto starts = [&](std::string_view prefix) { return path.rfind(prefix, 0) == 0; };
  with_path("", [&] {
    if (starts("protocol.")) {
      const auto field = path.substr(9);
      if (field == "squeezing_db") {
        s.protocol.squeezing_db = as_number(value, path);
      } else if (field == "beta") {
        s.protocol.beta = as_number(value, path);
      } else if (field == "reconciliation") {
        s.protocol.reconciliation = protocol::reconciliation_from_string(as_string(value, path));
      } else if (field == "basis") {
        const auto b = as_string(value, path);
        if (b != "q" && b != "p") throw ValidationError(path + " must be q or p");
        s.protocol.basis = b == "q" ? gaussian::Quadrature::q : gaussian::Quadrature::p;
      } else {
        throw ValidationError(path + ": unknown parameter");
      }
      protocol::validate(s.protocol);
    } else if (starts("channel.")) {
      if (!s.channel) throw ValidationError(path + ": scenario has no channel block");
      const auto field = path.substr(8);
      double tau = s.channel->tau;
      double nbar = s.channel->nbar;
      if (field == "tau") {
        tau = as_number(value, path);
      } else if (field == "nbar") {
        nbar = as_number(value, path);
      } else {
        throw ValidationError(path + ": unknown parameter");
      }
      s.channel = link::ChannelParams::from_tau(tau, nbar);
    } else if (starts("link.")) {
      for (auto& cfg : s.links) set_link_field(cfg, path.substr(5), value, path);
    } else if (starts("links[")) {
      const auto close = path.find("].");
      std::size_t index = 0;
      const auto digits = std::string_view(path).substr(6, close == std::string::npos ? 0 : close - 6);
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
      if (close == std::string::npos || ec != std::errc{} || ptr != digits.data() + digits.size()) {
        throw ValidationError(path + ": malformed link index");
      }
      if (index >= s.links.size()) throw ValidationError(path + ": link index out of range");
      set_link_field(s.links[index], path.substr(close + 2), value, path);
    } else {
      throw ValidationError(path + ": unknown parameter");
    }
  });
}

Scenario parse_scenario(const json& doc) {
  ObjectReader r(doc, "");
  Scenario s;
  s.name = r.string("name").value_or("scenario");
  if (s.name.empty() || s.name.find_first_of(",\"\n\r;") != std::string::npos) {
    throw ValidationError("name must be non-empty and free of commas, quotes, semicolons and newlines");
  }
  r.string("description");
  s.protocol = parse_protocol(r.get("protocol"));
  if (const json* ch = r.get("channel")) s.channel = parse_channel(*ch);
  if (const json* links = r.get("links")) {
    if (!links->is_array() || links->empty()) throw ValidationError("links must be a non-empty array");
    for (std::size_t i = 0; i < links->size(); ++i) {
      s.links.push_back(parse_link((*links)[i], "links[" + std::to_string(i) + "]"));
    }
  } else if (s.channel) {
    s.links.push_back(LinkConfig{link::LinkScenario::microwave(0.0), protocol::DetectorModel::ideal()});
  } else {
    throw ValidationError("links is required unless a channel block is given");
  }
  s.scan = parse_scan(r.get("scan"));
  if (const json* sweep = r.get("sweep")) {
    if (!sweep->is_array()) throw ValidationError("sweep must be an array");
    for (std::size_t i = 0; i < sweep->size(); ++i) {
      const std::string path = "sweep[" + std::to_string(i) + "]";
      auto axis = parse_axis((*sweep)[i], path);
      if (axis.variable == "link") throw ValidationError(path + ".variable: 'link' is reserved");
      for (std::size_t j = 0; j < axis.values.size(); ++j) {
        Scenario probe = s;
        try {
          set_parameter(probe, axis.variable, axis.values[j]);
        } catch (const ValidationError& e) {
          throw ValidationError(path + ".values[" + std::to_string(j) + "]: " + e.what());
        }
      }
      s.sweep.push_back(std::move(axis));
    }
  }
  r.finish();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  if (doc.is_object() && !doc.contains("name")) doc["name"] = path.stem().stem().string();
  return parse_scenario(doc);
}

std::vector<std::vector<json>> expand_grid(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<json>> grid{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<json>> next;
    next.reserve(grid.size() * axis.values.size());
    for (const auto& prefix : grid) {
      for (const auto& v : axis.values) {
        next.push_back(prefix);
        next.back().push_back(v);
      }
    }
    grid = std::move(next);
  }
  return grid;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "";
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

std::string format_flags(const std::vector<security::Flag>& flags) {
  std::string out;
  for (const auto f : flags) {
    if (!out.empty()) out += ';';
    out += security::to_string(f);
  }
  return out;
}

bool SweepResult::has_solver_flag() const {
  return std::any_of(rows.begin(), rows.end(), [](const Row& r) {
    return std::any_of(r.flags.begin(), r.flags.end(),
                       [](security::Flag f) { return f == security::Flag::multi_root || f == security::Flag::unbounded; });
  });
}

namespace {

std::string format_axis_value(const json& v) { return v.is_string() ? v.get<std::string>() : format_number(v.get<double>()); }

const link::CoefficientTables& tables_of(const RunOptions& options) {
  return options.tables ? *options.tables : link::CoefficientTables::embedded();
}

struct GridPoint {
  Scenario scenario;
  std::vector<std::string> labels;
};

std::vector<GridPoint> grid_points(const Scenario& s) {
  std::vector<GridPoint> points;
  for (const auto& values : expand_grid(s.sweep)) {
    GridPoint p{s, {}};
    for (std::size_t a = 0; a < values.size(); ++a) {
      set_parameter(p.scenario, s.sweep[a].variable, values[a]);
      p.labels.push_back(format_axis_value(values[a]));
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<std::string> axis_names(const Scenario& s, bool link_axis) {
  std::vector<std::string> names;
  if (link_axis) names.emplace_back("link");
  for (const auto& a : s.sweep) names.push_back(a.variable);
  return names;
}

std::vector<std::string> link_labels(const Scenario& s) {
  std::set<link::Band> bands;
  for (const auto& l : s.links) bands.insert(l.link.band);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < s.links.size(); ++i) {
    labels.push_back(bands.size() == s.links.size() ? std::string(link::to_string(s.links[i].link.band)) : std::to_string(i));
  }
  return labels;
}

// Solvers find the distance themselves, so distance axes are dropped from the grid.
Scenario solver_scenario(const Scenario& s, std::string_view command) {
  if (s.channel) throw ValidationError(std::string(command) + " derives the channel from the links; remove the channel block");
  Scenario out = s;
  std::erase_if(out.sweep, [](const SweepAxis& a) { return a.variable.ends_with("distance_m"); });
  return out;
}

Row key_row(const Scenario& s, std::size_t li, const link::CoefficientTables& tables) {
  const auto& cfg = s.links[li];
  Row row;
  link::ChannelParams ch;
  if (s.channel) {
    ch = *s.channel;
    row.d_m = kNaN;
  } else {
    ch = link::channel_params(cfg.link, tables);
    row.d_m = cfg.link.distance;
  }
  const auto rep = security::secret_key(s.protocol, ch, cfg.detector);
  row.tau = ch.tau;
  row.nbar = ch.nbar;
  row.mutual_info = rep.mutual_info;
  row.holevo = rep.holevo;
  row.secret_key = rep.secret_key;
  row.rate = rep.rate_upper;
  if (!(rep.secret_key > security::kKeyResolution)) row.flags.push_back(security::Flag::insecure);
  return row;
}

void fill_key(Row& row, const security::KeyReport& rep) {
  row.tau = rep.channel.tau;
  row.nbar = rep.channel.nbar;
  row.mutual_info = rep.mutual_info;
  row.holevo = rep.holevo;
  row.secret_key = rep.secret_key;
  row.rate = rep.rate_upper;
}

// Evaluates fn(point, link) for every grid point and link; link index is the
// outer axis so each link's rows are contiguous.
template <typename Fn>
SweepResult per_link(const Scenario& s, const RunOptions& options, Fn&& fn) {
  const auto points = grid_points(s);
  const bool link_axis = s.links.size() > 1;
  const auto labels = link_labels(s);
  const std::size_t n = points.size() * s.links.size();
  const int inner_threads = n == 1 ? options.threads : 1;
  auto rows = parallel_map(n, options.threads, [&](std::size_t k) {
    const std::size_t li = k / points.size();
    const auto& p = points[k % points.size()];
    Row row = fn(p.scenario, li, inner_threads);
    if (link_axis) row.axes.push_back(labels[li]);
    row.axes.insert(row.axes.end(), p.labels.begin(), p.labels.end());
    return row;
  });
  return SweepResult{s.name, axis_names(s, link_axis), std::move(rows)};
}

}  // namespace

SweepResult run_key(const Scenario& scenario, const RunOptions& options) {
  Scenario point = scenario;
  point.sweep.clear();
  return run_sweep(point, options);
}

SweepResult run_sweep(const Scenario& scenario, const RunOptions& options) {
  const auto& tables = tables_of(options);
  return per_link(scenario, options, [&](const Scenario& s, std::size_t li, int) { return key_row(s, li, tables); });
}

SweepResult run_secure_distance(const Scenario& input, const RunOptions& options) {
  const auto scenario = solver_scenario(input, "secure-distance");
  const auto& tables = tables_of(options);
  return per_link(scenario, options, [&](const Scenario& s, std::size_t li, int threads) {
    const security::BandSetup band{s.links[li].link, s.links[li].detector};
    auto scan = s.scan;
    scan.threads = threads;
    const auto result = security::secure_distance(band, s.protocol, scan, tables);
    Row row;
    row.d_m = result.distance;
    fill_key(row, security::key_at_distance(band, s.protocol, result.distance, tables));
    row.flags = result.flags;
    return row;
  });
}

SweepResult run_noise_threshold(const Scenario& input, const RunOptions& options) {
  // The solver finds nbar itself.
  Scenario scenario = input;
  std::erase_if(scenario.sweep, [](const SweepAxis& a) { return a.variable == "channel.nbar"; });
  const auto& tables = tables_of(options);
  return per_link(scenario, options, [&](const Scenario& s, std::size_t li, int) {
    const auto& cfg = s.links[li];
    Row row;
    double tau = 0.0;
    if (s.channel) {
      tau = s.channel->tau;
      row.d_m = kNaN;
    } else {
      tau = link::channel_params(cfg.link, tables).tau;
      row.d_m = cfg.link.distance;
    }
    if (!(tau < 1.0)) throw ValidationError("noise-threshold needs tau < 1 (set channel.tau or a nonzero distance)");
    const auto threshold = security::noise_threshold(tau, s.protocol, cfg.detector);
    fill_key(row, security::secret_key(s.protocol, link::ChannelParams::from_tau(tau, threshold.nbar), cfg.detector));
    if (threshold.insecure_at_zero) row.flags.push_back(security::Flag::insecure);
    return row;
  });
}

SweepResult run_crossover(const Scenario& input, const RunOptions& options) {
  const auto scenario = solver_scenario(input, "crossover");
  if (scenario.links.size() != 2) throw ValidationError("crossover needs exactly two links (microwave first)");
  const auto& tables = tables_of(options);
  const auto points = grid_points(scenario);
  const int inner_threads = points.size() == 1 ? options.threads : 1;
  auto rows = parallel_map(points.size(), options.threads, [&](std::size_t k) {
    const auto& s = points[k].scenario;
    const security::BandSetup mw{s.links[0].link, s.links[0].detector};
    const security::BandSetup tel{s.links[1].link, s.links[1].detector};
    auto scan = s.scan;
    scan.threads = inner_threads;
    const auto result = security::crossover_distance(mw, tel, s.protocol, scan, tables);
    Row row;
    row.axes = points[k].labels;
    row.d_m = result.distance;
    fill_key(row, security::key_at_distance(mw, s.protocol, result.distance, tables));
    row.flags = result.flags;
    return row;
  });
  return SweepResult{scenario.name, axis_names(scenario, false), std::move(rows)};
}

AttenuationTable run_attenuation(const Scenario& input, const RunOptions& options) {
  // Only band, frequency and weather enter the budget; other axes would repeat rows.
  Scenario scenario = input;
  std::erase_if(scenario.sweep, [](const SweepAxis& a) {
    const auto& v = a.variable;
    return !(v.ends_with("frequency_hz") || v.ends_with("wavelength_nm") || v.find("weather") != std::string::npos);
  });
  const auto& tables = tables_of(options);
  const auto points = grid_points(scenario);
  const bool link_axis = scenario.links.size() > 1;
  const auto labels = link_labels(scenario);
  const std::size_t n = points.size() * scenario.links.size();
  auto rows = parallel_map(n, options.threads, [&](std::size_t k) {
    const std::size_t li = k / points.size();
    const auto& p = points[k % points.size()];
    const auto& l = p.scenario.links[li].link;
    AttenuationRow row;
    if (link_axis) row.axes.push_back(labels[li]);
    row.axes.insert(row.axes.end(), p.labels.begin(), p.labels.end());
    row.band = l.band;
    row.frequency = l.frequency;
    row.weather = link::to_string(l.weather);
    row.budget = link::specific_attenuation(l.band, l.frequency, l.weather, tables);
    return row;
  });
  return AttenuationTable{scenario.name, axis_names(scenario, link_axis), std::move(rows)};
}

namespace {

constexpr std::string_view kKeyColumns[] = {"d_m", "tau", "nbar", "I_bits", "chi_bits", "K_bits", "R_bits_s", "flags"};
constexpr std::string_view kAttenuationColumns[] = {"band", "frequency_hz", "weather", "clear_air_db_km",
                                                    "weather_excess_db_km", "total_db_km"};

template <typename Columns>
void write_header(std::ostream& out, const std::vector<std::string>& axes, const Columns& columns) {
  out << "scenario";
  for (const auto& a : axes) out << ',' << a;
  for (const auto c : columns) out << ',' << c;
  out << '\n';
}

// JSON number carrying exactly the emitted 9-digit value.
json rounded(double v) {
  if (std::isnan(v)) return nullptr;
  const auto text = format_number(v);
  double parsed = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), parsed);
  return parsed;
}

void check(std::ostream& out) {
  if (!out) throw IoError("write failed");
}

}  // namespace

void write_csv(std::ostream& out, const SweepResult& result) {
  write_header(out, result.axis_names, kKeyColumns);
  for (const auto& r : result.rows) {
    out << result.scenario;
    for (const auto& a : r.axes) out << ',' << a;
    for (const double v : {r.d_m, r.tau, r.nbar, r.mutual_info, r.holevo, r.secret_key, r.rate}) {
      out << ',' << format_number(v);
    }
    out << ',' << format_flags(r.flags) << '\n';
  }
  check(out);
}

void write_json(std::ostream& out, const SweepResult& result) {
  nlohmann::ordered_json doc;
  doc["scenario"] = result.scenario;
  doc["axes"] = result.axis_names;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    nlohmann::ordered_json row;
    for (std::size_t a = 0; a < r.axes.size(); ++a) row[result.axis_names[a]] = r.axes[a];
    row["d_m"] = rounded(r.d_m);
    row["tau"] = rounded(r.tau);
    row["nbar"] = rounded(r.nbar);
    row["I_bits"] = rounded(r.mutual_info);
    row["chi_bits"] = rounded(r.holevo);
    row["K_bits"] = rounded(r.secret_key);
    row["R_bits_s"] = rounded(r.rate);
    auto flags = nlohmann::ordered_json::array();
    for (const auto f : r.flags) flags.push_back(security::to_string(f));
    row["flags"] = flags;
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << '\n';
  check(out);
}

void write_csv(std::ostream& out, const AttenuationTable& table) {
  write_header(out, table.axis_names, kAttenuationColumns);
  for (const auto& r : table.rows) {
    out << table.scenario;
    for (const auto& a : r.axes) out << ',' << a;
    out << ',' << link::to_string(r.band) << ',' << format_number(r.frequency) << ',' << r.weather;
    for (const double v : {r.budget.clear_air, r.budget.weather_excess, r.budget.total}) out << ',' << format_number(v);
    out << '\n';
  }
  check(out);
}

void write_json(std::ostream& out, const AttenuationTable& table) {
  nlohmann::ordered_json doc;
  doc["scenario"] = table.scenario;
  doc["axes"] = table.axis_names;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    for (std::size_t a = 0; a < r.axes.size(); ++a) row[table.axis_names[a]] = r.axes[a];
    row["band"] = link::to_string(r.band);
    row["frequency_hz"] = rounded(r.frequency);
    row["weather"] = r.weather;
    row["clear_air_db_km"] = rounded(r.budget.clear_air);
    row["weather_excess_db_km"] = rounded(r.budget.weather_excess);
    row["total_db_km"] = rounded(r.budget.total);
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << '\n';
  check(out);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

double parse_field(const std::string& text) {
  if (text.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) throw ValidationError("csv: bad number '" + text + "'");
  return v;
}

security::Flag flag_from_string(const std::string& text) {
  for (const auto f : {security::Flag::insecure, security::Flag::multi_root, security::Flag::unbounded}) {
    if (security::to_string(f) == text) return f;
  }
  throw ValidationError("csv: unknown flag '" + text + "'");
}

}  // namespace

SweepResult read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: missing header");
  const auto header = split(line, ',');
  constexpr std::size_t fixed = std::size(kKeyColumns);
  if (header.size() < fixed + 1 || header.front() != "scenario" ||
      !std::equal(header.end() - static_cast<std::ptrdiff_t>(fixed), header.end(), std::begin(kKeyColumns))) {
    throw ValidationError("csv: header does not match the key-rate schema");
  }
  SweepResult result;
  result.axis_names.assign(header.begin() + 1, header.end() - static_cast<std::ptrdiff_t>(fixed));
  const std::size_t n_axes = result.axis_names.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != header.size()) throw ValidationError("csv: row has " + std::to_string(f.size()) + " fields");
    result.scenario = f[0];
    Row row;
    row.axes.assign(f.begin() + 1, f.begin() + 1 + static_cast<std::ptrdiff_t>(n_axes));
    const std::size_t b = 1 + n_axes;
    row.d_m = parse_field(f[b]);
    row.tau = parse_field(f[b + 1]);
    row.nbar = parse_field(f[b + 2]);
    row.mutual_info = parse_field(f[b + 3]);
    row.holevo = parse_field(f[b + 4]);
    row.secret_key = parse_field(f[b + 5]);
    row.rate = parse_field(f[b + 6]);
    if (!f[b + 7].empty()) {
      for (const auto& token : split(f[b + 7], ';')) row.flags.push_back(flag_from_string(token));
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace cvqkd::scenario
