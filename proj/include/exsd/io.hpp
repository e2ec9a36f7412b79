#pragma once

// File formats: event-stream CSV, model/impact/taxonomy JSON, and the CSV/JSON
// exports of diagnostics, signature plots and simulation runs.
// All output uses '.' decimals, LF line endings and shortest round-trip floats.

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "exsd/core.hpp"
#include "exsd/diagnostics.hpp"
#include "exsd/estimate.hpp"
#include "exsd/signature.hpp"
#include "exsd/simulate.hpp"

namespace exsd {

using json = nlohmann::json;

inline constexpr std::string_view kFormatVersion = "v1";
inline constexpr double kRowSumTolerance = 1e-12;

// ---------------------------------------------------------------- numbers

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

/// Shortest round-trip representation in plain decimal notation (no exponent).
inline std::string format_fixed(double v) {
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += sep;
    s += parts[i];
  }
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(what + ": malformed JSON: " + ex.what());
  }
}

inline void check_header(const json& j, std::string_view format, const std::string& what) {
  if (!j.is_object()) throw Error(what + ": expected a JSON object");
  if (!j.contains("format") || j["format"] != format)
    throw Error(what + ": not a " + std::string(format) + " document");
  if (!j.contains("version") || !j["version"].is_string())
    throw Error(what + ": missing version");
  const auto v = j["version"].get<std::string>();
  if (v != kFormatVersion) throw Error(what + ": unsupported version '" + v + "'");
}

template <class T>
T get_field(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw Error(what + ": missing field '" + key + "'");
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw Error(what + ": field '" + std::string(key) + "' has the wrong type or shape");
  }
}

using Nested2 = std::vector<std::vector<double>>;
using Nested3 = std::vector<std::vector<std::vector<double>>>;

inline json nest(const Matrix& m) {
  json out = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline json nest(const Tensor3& t) {
  json out = json::array();
  for (std::size_t i = 0; i < t.dim0(); ++i) {
    json a = json::array();
    for (std::size_t j = 0; j < t.dim1(); ++j) {
      json b = json::array();
      for (std::size_t k = 0; k < t.dim2(); ++k) b.push_back(t(i, j, k));
      a.push_back(std::move(b));
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline Matrix unnest(const Nested2& v, std::size_t r, std::size_t c, const std::string& what) {
  if (v.size() != r) throw Error(what + ": shape mismatch with taxonomy");
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (v[i].size() != c) throw Error(what + ": shape mismatch with taxonomy");
    for (std::size_t j = 0; j < c; ++j) m(i, j) = v[i][j];
  }
  return m;
}

inline Tensor3 unnest(const Nested3& v, std::size_t d0, std::size_t d1, std::size_t d2,
                      const std::string& what) {
  if (v.size() != d0) throw Error(what + ": shape mismatch with taxonomy");
  Tensor3 t(d0, d1, d2);
  for (std::size_t i = 0; i < d0; ++i) {
    if (v[i].size() != d1) throw Error(what + ": shape mismatch with taxonomy");
    for (std::size_t j = 0; j < d1; ++j) {
      if (v[i][j].size() != d2) throw Error(what + ": shape mismatch with taxonomy");
      for (std::size_t k = 0; k < d2; ++k) t(i, j, k) = v[i][j][k];
    }
  }
  return t;
}

}  // namespace io_detail

// ---------------------------------------------------------------- taxonomy

inline json taxonomy_to_json(const Taxonomy& t) {
  json j;
  j["events"] = json::array();
  for (const auto& e : t.events()) j["events"].push_back(e.code);
  j["states"] = json::array();
  for (const auto& s : t.states()) j["states"].push_back(s.label);
  return j;
}

inline Taxonomy taxonomy_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw Error(what + ": taxonomy must be an object");
  return Taxonomy(io_detail::get_field<std::vector<std::string>>(j, "events", what),
                  io_detail::get_field<std::vector<std::string>>(j, "states", what));
}

/// Reads a bare {"events": [...], "states": [...]} document.
inline Taxonomy read_taxonomy(const std::string& path) {
  const auto j = io_detail::parse_json(io_detail::read_file(path), path);
  return taxonomy_from_json(j.contains("taxonomy") ? j["taxonomy"] : j, path);
}

inline void write_taxonomy(const Taxonomy& t, const std::string& path) {
  io_detail::write_file(path, io_detail::dump(taxonomy_to_json(t)));
}

// ---------------------------------------------------------------- streams

/// CSV with `# key=value` comment lines, a `time_s,event,state_before,state_after`
/// header and one record per line using taxonomy codes.
inline std::string serialize_stream(const EventStream& s, const Taxonomy& t) {
  std::vector<std::string> codes, labels;
  for (const auto& e : t.events()) codes.push_back(e.code);
  for (const auto& x : t.states()) labels.push_back(x.label);
  std::string out;
  out.reserve(64 + 40 * s.records.size());
  out += "# horizon=" + format_fixed(s.horizon) + "\n";
  out += "# initial_state=" + labels.at(s.initial_state) + "\n";
  out += "# events=" + io_detail::join(codes, ',') + "\n";
  out += "# states=" + io_detail::join(labels, ',') + "\n";
  out += "time_s,event,state_before,state_after\n";
  for (const auto& r : s.records) {
    out += format_fixed(r.time);
    out += ',';
    out += codes.at(r.event);
    out += ',';
    out += labels.at(r.state_before);
    out += ',';
    out += labels.at(r.state_after);
    out += '\n';
  }
  return out;
}

struct StreamFile {
  EventStream stream;
  Taxonomy taxonomy;
};

struct StreamReadOptions {
  std::optional<Taxonomy> taxonomy;   // otherwise the file's header, then the default
  std::optional<double> horizon;      // overrides `# horizon=`
};

inline StreamFile parse_stream(const std::string& text, const StreamReadOptions& opts = {},
                               const std::string& name = "stream") {
  using io_detail::split;
  using io_detail::trim;
  StreamFile f;
  std::optional<double> horizon;
  std::optional<std::string> initial_label;
  std::optional<std::vector<std::string>> file_codes, file_labels;
  bool have_header = false;
  std::optional<StateIndex> prev_after;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> Error {
    return Error(name + ": line " + std::to_string(line_no) + ": " + msg);
  };
  auto to_strings = [](const std::vector<std::string_view>& v) {
    return std::vector<std::string>(v.begin(), v.end());
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view line =
        trim(std::string_view(text).substr(pos, nl == std::string::npos ? nl : nl - pos));
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (have_header) throw fail("comment lines must precede the header");
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = trim(body.substr(0, eq));
      const auto val = trim(body.substr(eq + 1));
      if (key == "horizon") {
        horizon = parse_double(val);
        if (!horizon) throw fail("malformed horizon '" + std::string(val) + "'");
      } else if (key == "initial_state") {
        initial_label = std::string(val);
      } else if (key == "events") {
        file_codes = to_strings(split(val, ','));
      } else if (key == "states") {
        file_labels = to_strings(split(val, ','));
      }
      continue;
    }
    if (!have_header) {
      if (line != "time_s,event,state_before,state_after")
        throw fail("expected header 'time_s,event,state_before,state_after'");
      have_header = true;
      if (opts.taxonomy) {
        f.taxonomy = *opts.taxonomy;
      } else if (file_codes && file_labels) {
        try {
          f.taxonomy = Taxonomy(*file_codes, *file_labels);
        } catch (const Error& ex) {
          throw fail(std::string("invalid taxonomy header: ") + ex.what());
        }
      } else {
        f.taxonomy = default_taxonomy();
      }
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw fail("expected 4 fields, found " + std::to_string(cols.size()));
    const auto t = parse_double(cols[0]);
    if (!t || !std::isfinite(*t)) throw fail("malformed time '" + std::string(cols[0]) + "'");
    EventRecord r;
    r.time = *t;
    try {
      r.event = static_cast<EventIndex>(f.taxonomy.event_index(cols[1]));
      r.state_before = static_cast<StateIndex>(f.taxonomy.state_index(cols[2]));
      r.state_after = static_cast<StateIndex>(f.taxonomy.state_index(cols[3]));
    } catch (const Error& ex) {
      throw fail(ex.what());
    }
    if (r.time < 0.0) throw fail("negative time");
    if (!f.stream.records.empty() && !(r.time > f.stream.records.back().time))
      throw fail("times must be strictly increasing");
    if (prev_after && r.state_before != *prev_after)
      throw fail("state_before does not match the previous record's state_after");
    prev_after = r.state_after;
    f.stream.records.push_back(r);
  }
  if (!have_header) throw Error(name + ": missing header line");

  if (opts.horizon) horizon = opts.horizon;
  if (!horizon) throw Error(name + ": horizon unknown; add a '# horizon=' line or pass it explicitly");
  f.stream.horizon = *horizon;

  if (initial_label) {
    try {
      f.stream.initial_state = static_cast<StateIndex>(f.taxonomy.state_index(*initial_label));
    } catch (const Error& ex) {
      throw Error(name + ": " + ex.what());
    }
  } else if (!f.stream.records.empty()) {
    f.stream.initial_state = f.stream.records.front().state_before;
  }

  const auto violations = validate_stream(f.stream, f.taxonomy);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw Error(name + ": " + v.kind + ": " + v.message);
  }
  return f;
}

inline StreamFile read_stream_file(const std::string& path, const StreamReadOptions& opts = {}) {
  return parse_stream(io_detail::read_file(path), opts, path);
}

inline EventStream read_stream(const std::string& path, const StreamReadOptions& opts = {}) {
  return read_stream_file(path, opts).stream;
}

inline void write_stream(const EventStream& s, const Taxonomy& t, const std::string& path) {
  require_valid(s, t);
  io_detail::write_file(path, serialize_stream(s, t));
}

// ---------------------------------------------------------------- models

inline json model_to_json(const ModelSpec& m) {
  json j;
  j["format"] = "exsd-model";
  j["version"] = kFormatVersion;
  j["taxonomy"] = taxonomy_to_json(m.taxonomy);
  j["variant"] = to_string(m.variant);
  j["phi"] = io_detail::nest(m.transition.phi);
  j["gate"] = io_detail::nest(m.transition.gate);
  j["nu"] = m.hawkes.nu;
  j["alpha"] = io_detail::nest(m.hawkes.alpha);
  j["beta"] = io_detail::nest(m.hawkes.beta);
  return j;
}

inline std::string serialize_model(const ModelSpec& m) { return io_detail::dump(model_to_json(m)); }

inline ModelSpec model_from_json(const json& j, const std::string& what = "model") {
  using namespace io_detail;
  check_header(j, "exsd-model", what);
  ModelSpec m;
  m.taxonomy = taxonomy_from_json(get_field<json>(j, "taxonomy", what), what);
  m.variant = parse_variant(get_field<std::string>(j, "variant", what));
  const std::size_t E = m.taxonomy.num_events(), X = m.taxonomy.num_states();
  m.transition.phi = unnest(get_field<Nested3>(j, "phi", what), E, X, X, what + ": phi");
  m.transition.gate = unnest(get_field<Nested2>(j, "gate", what), E, X, what + ": gate");
  m.hawkes.nu = get_field<std::vector<double>>(j, "nu", what);
  if (m.hawkes.nu.size() != E) throw Error(what + ": nu: shape mismatch with taxonomy");
  m.hawkes.alpha = unnest(get_field<Nested3>(j, "alpha", what), E, X, E, what + ": alpha");
  m.hawkes.beta = unnest(get_field<Nested3>(j, "beta", what), E, X, E, what + ": beta");

  // Decimal text cannot carry exact row sums; accept 1e-12 and renormalize.
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t x = 0; x < X; ++x) {
      const double s = m.transition.row_sum(e, x);
      const double g = m.transition.gate(e, x);
      const std::string where = " (event " + m.taxonomy.events()[e].code + ", state " +
                                m.taxonomy.states()[x].label + ")";
      if (g != 0.0 && g != 1.0) throw Error(what + ": gate must be 0 or 1" + where);
      if (std::abs(s - g) > kRowSumTolerance)
        throw Error(what + ": phi row sum " + format_double(s) + " does not match gate " +
                    format_double(g) + where);
      m.transition.normalize_row(e, x);
    }
  const auto violations = validate_model(m);
  if (!violations.empty()) throw Error(what + ": " + violations.front().kind + ": " + violations.front().message);
  return m;
}

inline ModelSpec parse_model(const std::string& text, const std::string& what = "model") {
  return model_from_json(io_detail::parse_json(text, what), what);
}

inline ModelSpec read_model(const std::string& path) {
  return parse_model(io_detail::read_file(path), path);
}

inline void write_model(const ModelSpec& m, const std::string& path) {
  require_valid(m);
  io_detail::write_file(path, serialize_model(m));
}

// ---------------------------------------------------------------- impact tables

inline std::string serialize_impact(const ImpactTable& t, const Taxonomy& tax) {
  json j;
  j["format"] = "exsd-impact";
  j["version"] = kFormatVersion;
  j["taxonomy"] = taxonomy_to_json(tax);
  j["delta_m"] = io_detail::nest(t.delta_m);
  return io_detail::dump(j);
}

struct ImpactFile {
  ImpactTable impact;
  Taxonomy taxonomy;
};

inline ImpactFile parse_impact(const std::string& text, const std::string& what = "impact") {
  using namespace io_detail;
  const auto j = parse_json(text, what);
  check_header(j, "exsd-impact", what);
  ImpactFile f;
  f.taxonomy = taxonomy_from_json(get_field<json>(j, "taxonomy", what), what);
  f.impact.delta_m = unnest(get_field<Nested2>(j, "delta_m", what), f.taxonomy.num_events(),
                            f.taxonomy.num_states(), what + ": delta_m");
  for (double v : f.impact.delta_m.data())
    if (!std::isfinite(v)) throw Error(what + ": delta_m must be finite");
  return f;
}

/// Reads an impact table and checks it against the model's taxonomy.
inline ImpactTable read_impact(const std::string& path, const Taxonomy& expected) {
  auto f = parse_impact(io_detail::read_file(path), path);
  if (!(f.taxonomy == expected)) throw Error(path + ": impact taxonomy does not match the model");
  return f.impact;
}

inline void write_impact(const ImpactTable& t, const Taxonomy& tax, const std::string& path) {
  if (t.delta_m.rows() != tax.num_events() || t.delta_m.cols() != tax.num_states())
    throw Error("impact table shape does not match taxonomy");
  io_detail::write_file(path, serialize_impact(t, tax));
}

// ---------------------------------------------------------------- mid-price paths

inline std::string serialize_midprice(const MidPricePath& p, double horizon) {
  std::string out;
  out.reserve(64 + 32 * p.times.size());
  out += "# horizon=" + format_fixed(horizon) + "\n";
  out += "# initial_price=" + format_double(p.initial_price) + "\n";
  out += "time_s,price\n";
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    out += format_fixed(p.times[i]);
    out += ',';
    out += format_double(p.prices[i]);
    out += '\n';
  }
  return out;
}

struct MidPriceFile {
  MidPricePath path;
  double horizon = 0.0;
};

inline MidPriceFile parse_midprice(const std::string& text, const std::string& name = "midprice") {
  using io_detail::split;
  using io_detail::trim;
  MidPriceFile f;
  std::optional<double> horizon;
  bool have_header = false;
  std::size_t line_no = 0, pos = 0;
  auto fail = [&](const std::string& msg) {
    return Error(name + ": line " + std::to_string(line_no) + ": " + msg);
  };
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(std::string_view(text).substr(pos, nl == std::string::npos ? nl : nl - pos));
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = trim(body.substr(0, eq));
      const auto val = parse_double(trim(body.substr(eq + 1)));
      if (key == "horizon" || key == "initial_price") {
        if (!val) throw fail("malformed " + std::string(key));
        if (key == "horizon") horizon = val;
        else f.path.initial_price = *val;
      }
      continue;
    }
    if (!have_header) {
      if (line != "time_s,price") throw fail("expected header 'time_s,price'");
      have_header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 2) throw fail("expected 2 fields");
    const auto t = parse_double(cols[0]);
    const auto p = parse_double(cols[1]);
    if (!t || !p) throw fail("malformed number");
    if (!f.path.times.empty() && !(*t > f.path.times.back())) throw fail("times must be strictly increasing");
    f.path.times.push_back(*t);
    f.path.prices.push_back(*p);
  }
  if (!have_header) throw Error(name + ": missing header line");
  if (!horizon) throw Error(name + ": missing '# horizon=' line");
  f.horizon = *horizon;
  if (!f.path.times.empty() && f.path.times.back() > f.horizon)
    throw Error(name + ": events after the horizon");
  return f;
}

inline MidPriceFile read_midprice(const std::string& path) {
  return parse_midprice(io_detail::read_file(path), path);
}

inline void write_midprice(const MidPricePath& p, double horizon, const std::string& path) {
  io_detail::write_file(path, serialize_midprice(p, horizon));
}

// ---------------------------------------------------------------- simulation manifest

struct ManifestEntry {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string stream;    // relative file names; empty when not written
  std::string midprice;
  std::size_t events = 0;
  bool truncated = false;
  double horizon = 0.0;  // the recorded stream's horizon
};

struct SimManifest {
  std::string model;
  std::string impact;
  std::uint64_t master_seed = 0;
  double horizon = 0.0;
  std::uint64_t max_events = 0;
  std::vector<ManifestEntry> runs;

  std::size_t truncated_count() const {
    std::size_t n = 0;
    for (const auto& r : runs) n += r.truncated;
    return n;
  }
};

inline std::string serialize_manifest(const SimManifest& m) {
  json j;
  j["format"] = "exsd-sim-manifest";
  j["version"] = kFormatVersion;
  j["model"] = m.model;
  j["impact"] = m.impact;
  j["master_seed"] = m.master_seed;
  j["horizon"] = m.horizon;
  j["max_events"] = m.max_events;
  j["truncated_runs"] = m.truncated_count();
  j["runs"] = json::array();
  for (const auto& r : m.runs) {
    json e;
    e["index"] = r.index;
    e["seed"] = r.seed;
    e["stream"] = r.stream;
    e["midprice"] = r.midprice;
    e["events"] = r.events;
    e["truncated"] = r.truncated;
    e["horizon"] = r.horizon;
    j["runs"].push_back(std::move(e));
  }
  return io_detail::dump(j);
}

inline SimManifest parse_manifest(const std::string& text, const std::string& what = "manifest") {
  using io_detail::get_field;
  const auto j = io_detail::parse_json(text, what);
  io_detail::check_header(j, "exsd-sim-manifest", what);
  SimManifest m;
  m.model = get_field<std::string>(j, "model", what);
  m.impact = get_field<std::string>(j, "impact", what);
  m.master_seed = get_field<std::uint64_t>(j, "master_seed", what);
  m.horizon = get_field<double>(j, "horizon", what);
  m.max_events = get_field<std::uint64_t>(j, "max_events", what);
  for (const auto& e : get_field<json>(j, "runs", what)) {
    ManifestEntry r;
    r.index = get_field<std::size_t>(e, "index", what);
    r.seed = get_field<std::uint64_t>(e, "seed", what);
    r.stream = get_field<std::string>(e, "stream", what);
    r.midprice = get_field<std::string>(e, "midprice", what);
    r.events = get_field<std::size_t>(e, "events", what);
    r.truncated = get_field<bool>(e, "truncated", what);
    r.horizon = get_field<double>(e, "horizon", what);
    m.runs.push_back(std::move(r));
  }
  return m;
}

inline SimManifest read_manifest(const std::string& path) {
  return parse_manifest(io_detail::read_file(path), path);
}

inline void write_manifest(const SimManifest& m, const std::string& path) {
  io_detail::write_file(path, serialize_manifest(m));
}

// ---------------------------------------------------------------- fit reports

inline std::string serialize_fit_report(const FitReport& r) {
  json j;
  j["format"] = "exsd-fit-report";
  j["version"] = kFormatVersion;
  j["variant"] = to_string(r.model.variant);
  j["log_lik_tp"] = r.log_lik_tp;
  j["log_lik_hawkes"] = r.log_lik_hawkes;
  j["log_lik_total"] = r.log_lik_tp + r.log_lik_hawkes;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["gradient_norm"] = r.gradient_norm;
  j["num_events"] = r.num_events;
  j["accepted_values"] = r.accepted_values;
  return io_detail::dump(j);
}

inline void write_fit_report(const FitReport& r, const std::string& path) {
  io_detail::write_file(path, serialize_fit_report(r));
}

// ---------------------------------------------------------------- diagnostics exports

inline std::string residuals_csv(const std::vector<ResidualSeries>& series) {
  std::string out = "key,index,value\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.values.size(); ++i)
      out += s.key + ',' + std::to_string(i) + ',' + format_double(s.values[i]) + '\n';
  return out;
}

inline std::string qq_csv(const std::vector<ResidualSeries>& series) {
  std::string out = "key,theoretical,empirical\n";
  for (const auto& s : series) {
    if (s.values.empty()) continue;
    const auto qq = qq_exp1(s);
    for (std::size_t i = 0; i < qq.empirical_quantiles.size(); ++i)
      out += s.key + ',' + format_double(qq.theoretical_quantiles[i]) + ',' +
             format_double(qq.empirical_quantiles[i]) + '\n';
  }
  return out;
}

/// Series shorter than max_lag + 1 are skipped.
inline std::string acf_csv(const std::vector<ResidualSeries>& series, std::size_t max_lag) {
  std::string out = "key,lag,acf,band\n";
  for (const auto& s : series) {
    if (s.values.size() <= max_lag) continue;
    const auto a = acf(s, max_lag);
    for (std::size_t k = 0; k < a.acf.size(); ++k)
      out += s.key + ',' + std::to_string(k) + ',' + format_double(a.acf[k]) + ',' +
             format_double(a.band) + '\n';
  }
  return out;
}

inline std::string ks_csv(const std::vector<ResidualSeries>& series) {
  std::string out = "key,n,mean,statistic,p_value\n";
  for (const auto& s : series) {
    const auto ks = ks_exp1(s);
    double mean = 0.0;
    for (double v : s.values) mean += v;
    if (!s.values.empty()) mean /= static_cast<double>(s.values.size());
    out += s.key + ',' + std::to_string(s.values.size()) + ',' + format_double(mean) + ',' +
           format_double(ks.statistic) + ',' + format_double(ks.p_value) + '\n';
  }
  return out;
}

/// Pairwise cross-correlations of residual series, paired by occurrence index.
inline std::string cross_correlation_csv(const std::vector<ResidualSeries>& series,
                                         std::size_t max_lag) {
  std::string out = "key_a,key_b,lag,value\n";
  for (const auto& a : series)
    for (const auto& b : series) {
      if (&a == &b) continue;
      if (std::min(a.values.size(), b.values.size()) <= max_lag + 1) continue;
      const auto cc = cross_correlation(a.values, b.values, max_lag);
      for (std::size_t k = 0; k < cc.size(); ++k)
        out += a.key + ',' + b.key + ',' + std::to_string(k) + ',' + format_double(cc[k]) + '\n';
    }
  return out;
}

inline std::string stability_json(const StabilityReport& r, const Taxonomy& t) {
  json j;
  j["format"] = "exsd-stability";
  j["version"] = kFormatVersion;
  json branching = json::object(), spectral = json::object(), regime = json::object();
  for (const auto& e : t.events())
    for (const auto& x : t.states()) branching[e.code][x.label] = r.branching(e.index, x.index);
  for (const auto& x : t.states()) {
    spectral[x.label] = r.spectral.at(x.index);
    regime[x.label] = to_string(r.regime.at(x.index));
  }
  j["branching_ratio"] = std::move(branching);
  j["spectral_radius"] = std::move(spectral);
  j["regime"] = std::move(regime);
  return io_detail::dump(j);
}

inline std::string transition_csv(const TransitionCounts& counts, const TransitionKernel& tk,
                                  const Taxonomy& t) {
  std::string out = "event,state_from,state_to,count,phi_hat\n";
  for (const auto& e : t.events())
    for (const auto& x : t.states())
      for (const auto& y : t.states())
        out += e.code + ',' + x.label + ',' + y.label + ',' +
               std::to_string(counts.at(e.index, x.index, y.index)) + ',' +
               format_double(tk.phi(e.index, x.index, y.index)) + '\n';
  return out;
}

inline std::string signature_csv(const SignatureCurve& c) {
  std::string out = "delta,rv_mean,rv_stderr,n_paths\n";
  for (std::size_t i = 0; i < c.deltas.size(); ++i)
    out += format_double(c.deltas[i]) + ',' + format_double(c.rv[i]) + ',' +
           format_double(c.std_error[i]) + ',' + std::to_string(c.n_paths) + '\n';
  return out;
}

inline void write_text(const std::string& path, const std::string& content) {
  io_detail::write_file(path, content);
}

}  // namespace exsd
