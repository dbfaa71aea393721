#include "kinon/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include "kinon/errors.hpp"
#include "kinon/image.hpp"
#include "kinon/isolines.hpp"
#include "kinon/persist.hpp"
#include "kinon/version.hpp"

namespace kinon {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string cycle_tag(std::int64_t cycle) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(cycle));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path.string(), std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

class ArtifactWriter {
public:
  ArtifactWriter(const RunConfig& config, fs::path out) : config_(config), out_(std::move(out)) {
    fs::create_directories(out_ / "frames");
    fs::create_directories(out_ / "contours");
  }

  void frame(const FieldSnapshot& snap) {
    if (!framed_.insert(snap.cycle).second) return;
    const GreyImage img = render_frame(snap, config_.render.scale);
    const std::string stem = config_.render.prefix + "_" + cycle_tag(snap.cycle);
    write_file((out_ / "frames" / (stem + ".pgm")).string(), encode_pgm(img));
    if (config_.render.png) write_file((out_ / "frames" / (stem + ".png")).string(), encode_png(img));
  }

  void contours(const FieldSnapshot& snap, double level) {
    ContourSet set = extract_isolines(snap, level);
    write_text(out_ / "contours" / ("contours_" + cycle_tag(snap.cycle) + ".json"), to_json(set).dump() + "\n");
    sets_.push_back(std::move(set));
  }

  void overlay(const FieldSnapshot& final_snap) {
    const GreyImage base = render_frame(final_snap, config_.render.scale);
    write_file((out_ / "overlay.png").string(), encode_png(overlay_contours(base, sets_, config_.render.zoom)));
  }

private:
  const RunConfig& config_;
  fs::path out_;
  std::set<std::int64_t> framed_;
  std::vector<ContourSet> sets_;
};

void write_manifest(const fs::path& out, const std::string& config_hash) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      files.push_back(fs::relative(entry.path(), out).generic_string());
  std::sort(files.begin(), files.end());

  ordered_json manifest;
  manifest["engine"] = "kinon";
  manifest["engine_version"] = kEngineVersion;
  manifest["config_sha256"] = config_hash;
  ordered_json listing = ordered_json::object();
  for (const auto& f : files) {
    const auto bytes = read_file((out / f).string());
    listing[f] = sha256_hex(std::string(bytes.begin(), bytes.end()));
  }
  manifest["files"] = listing;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

ordered_json RunSummary::to_json() const {
  ordered_json j;
  j["cycles"] = cycles;
  j["stasis_cycle"] = optional_json(stasis_cycle);
  j["coherent_cycle"] = optional_json(coherent_cycle);
  j["max_drift"] = max_drift;
  j["final_Ke"] = final_exchange;
  j["final_Kt"] = final_turnover;
  j["contour_level"] = contour_level;
  j["support_area"] = support_area;
  j["components"] = components;
  j["config_sha256"] = config_sha256;
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

Simulation make_simulation(const RunConfig& config, bool parallel) {
  config.validate();
  Network network = build_grid(config.topology);
  NetworkState initial = init_singularity(network, config.omega, config.seed_index());
  Simulation sim(std::move(network), std::move(initial), config.params, config.omega, parallel);
  ModelParams running = config.params;
  for (const auto& change : config.schedule.changes) {
    running = change.params.apply(running);
    sim.schedule(change.cycle, running);
  }
  return sim;
}

RunSummary run_config(const RunConfig& config, const fs::path& out, const RunFlags& flags) {
  Simulation sim = make_simulation(config, flags.parallel);
  const std::string canonical = serialize_config(config);
  fs::create_directories(out);
  write_text(out / "config.json", canonical);

  const std::int64_t frame_stride = flags.frame_stride.value_or(config.schedule.frame_stride);
  const std::int64_t contour_stride = flags.contour_stride.value_or(config.schedule.contour_stride);
  if (frame_stride < 0 || contour_stride < 0) throw ValidationError("schedule", "strides must be >= 0");
  const bool until_stasis = flags.until_stasis || config.schedule.stop_on_stasis;
  const double level = config.render.contour_level.value_or(config.omega / static_cast<double>(sim.network().node_count()));
  const auto& an = config.analysis;

  ArtifactWriter writer(config, out);
  writer.frame(sim.snapshot(config.render.storage_only));

  std::int64_t quiet_run = 0;
  std::optional<std::string> audit_error;
  while (sim.cycle() < config.schedule.max_cycles) {
    const MacroRecord& rec = sim.step();
    const std::int64_t c = sim.cycle();
    if (!(rec.drift <= an.audit_tolerance)) {
      audit_error = "conservation audit failed at cycle " + std::to_string(c) + ": drift " + real(rec.drift) +
                    " > " + real(an.audit_tolerance);
      break;
    }
    if (frame_stride > 0 && c % frame_stride == 0) writer.frame(sim.snapshot(config.render.storage_only));
    if (contour_stride > 0 && c % contour_stride == 0) writer.contours(sim.snapshot(), level);
    quiet_run = (rec.exchange <= an.stasis_tolerance && rec.turnover <= an.stasis_tolerance) ? quiet_run + 1 : 0;
    if (until_stasis && quiet_run >= an.stasis_window) break;
  }

  const FieldSnapshot final_snap = sim.snapshot();
  writer.frame(sim.snapshot(config.render.storage_only));
  writer.overlay(config.render.storage_only ? sim.snapshot(true) : final_snap);
  write_series((out / "series.csv").string(), sim.series().records);
  write_file((out / "final.state").string(), encode_state(config.topology, sim.state(), sim.cycle(), sim.omega()));

  RunSummary summary;
  summary.cycles = sim.cycle();
  const RegimeReport regime = detect_stasis(sim.series().records, an.stasis_tolerance, an.stasis_window);
  summary.stasis_cycle = regime.stasis_cycle;
  summary.coherent_cycle = regime.coherent_cycle;
  summary.max_drift = sim.series().max_drift();
  if (!sim.series().records.empty()) {
    summary.final_exchange = sim.series().records.back().exchange;
    summary.final_turnover = sim.series().records.back().turnover;
  }
  const Eigen::ArrayXd mass = Eigen::Map<const Eigen::ArrayXd>(final_snap.mass.data(), final_snap.mass.size());
  summary.contour_level = level;
  summary.support_area = static_cast<std::size_t>((mass >= level).count());
  summary.components = count_components(sim.network(), mass, level);
  summary.config_sha256 = sha256_hex(canonical);

  ordered_json sj = summary.to_json();
  sj["audit_error"] = audit_error ? json(*audit_error) : json(nullptr);
  write_text(out / "summary.json", sj.dump(2) + "\n");
  write_manifest(out, summary.config_sha256);

  if (audit_error) throw AuditFailure(*audit_error);
  return summary;
}

std::size_t SweepPlan::run_count() const noexcept {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) {
    if (a.values.empty()) return 0;
    if (n > kMaxSweepRuns / a.values.size() + 1) return kMaxSweepRuns + 1;
    n *= a.values.size();
  }
  return n;
}

namespace {

json::json_pointer pointer_for(const std::string& dotted) {
  std::string p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError("axes", "malformed parameter path '" + dotted + "'");
    p += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(p);
}

}  // namespace

SweepPlan parse_sweep_plan(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("", "expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "base" && it.key() != "axes") throw ValidationError(it.key(), "unknown field");

  SweepPlan plan;
  try {
    plan.base = config_from_json(doc.contains("base") ? doc["base"] : json::object());
  } catch (const ValidationError& e) {
    throw e.nested("base");
  }
  if (!doc.contains("axes") || !doc["axes"].is_array() || doc["axes"].empty())
    throw ValidationError("axes", "need a non-empty array of axes");
  const json base_json = json::parse(serialize_config(plan.base));
  for (std::size_t i = 0; i < doc["axes"].size(); ++i) {
    const json& a = doc["axes"][i];
    const std::string path = "axes[" + std::to_string(i) + "]";
    if (!a.is_object() || !a.contains("path") || !a["path"].is_string())
      throw ValidationError(path + ".path", "required string");
    if (!a.contains("values") || !a["values"].is_array() || a["values"].empty())
      throw ValidationError(path + ".values", "need a non-empty array");
    for (auto it = a.begin(); it != a.end(); ++it)
      if (it.key() != "path" && it.key() != "values") throw ValidationError(path + "." + it.key(), "unknown field");
    SweepAxis axis{a["path"].get<std::string>(), a["values"].get<std::vector<json>>()};
    const auto ptr = pointer_for(axis.path);
    if (!base_json.contains(ptr)) throw ValidationError(path + ".path", "no such config field '" + axis.path + "'");
    plan.axes.push_back(std::move(axis));
  }
  if (plan.run_count() > kMaxSweepRuns) throw ValidationError("axes", "more than 100000 combinations");
  return plan;
}

RunConfig sweep_config(const SweepPlan& plan, std::size_t index) {
  json doc = json::parse(serialize_config(plan.base));
  std::size_t rest = index;
  for (std::size_t a = plan.axes.size(); a-- > 0;) {
    const auto& axis = plan.axes[a];
    doc[pointer_for(axis.path)] = axis.values[rest % axis.values.size()];
    rest /= axis.values.size();
  }
  return config_from_json(doc);
}

SweepResult run_sweep(const SweepPlan& plan, const fs::path& out, int parallel, const RunFlags& flags) {
  const std::size_t n = plan.run_count();
  if (n == 0) throw ValidationError("axes", "sweep has no runs");
  fs::create_directories(out);

  struct Row {
    int status = kExitOk;
    std::string message;
    RunSummary summary;
  };
  std::vector<Row> rows(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%05zu", i);
      try {
        rows[i].summary = run_config(sweep_config(plan, i), out / name, flags);
      } catch (const ValidationError& e) {
        rows[i] = Row{kExitValidation, e.what(), {}};
      } catch (const AuditFailure& e) {
        rows[i] = Row{kExitAudit, e.what(), {}};
      } catch (const std::exception& e) {
        rows[i] = Row{kExitAudit, e.what(), {}};
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(n)));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::string index = "run";
  for (const auto& a : plan.axes) index += "," + a.path;
  index += ",status,stasis_cycle,final_Ke,support_area,components\n";
  SweepResult result;
  result.runs = n;
  for (std::size_t i = 0; i < n; ++i) {
    index += std::to_string(i);
    std::size_t rest = i;
    std::vector<std::string> cells(plan.axes.size());
    for (std::size_t a = plan.axes.size(); a-- > 0;) {
      const auto& axis = plan.axes[a];
      const json& v = axis.values[rest % axis.values.size()];
      cells[a] = v.is_number_float() ? real(v.get<double>()) : v.dump();
      rest /= axis.values.size();
    }
    for (const auto& c : cells) index += "," + (c.find(',') == std::string::npos ? c : "\"" + c + "\"");
    const Row& r = rows[i];
    if (r.status != kExitOk) {
      ++result.failures;
      result.exit_code = std::max(result.exit_code, r.status);
      index += std::string(",") + (r.status == kExitValidation ? "validation_error" : "runtime_error") + ",,,,\n";
      continue;
    }
    const auto& s = r.summary;
    index += ",ok," + (s.stasis_cycle ? std::to_string(*s.stasis_cycle) : std::string()) + "," +
             real(s.final_exchange) + "," + std::to_string(s.support_area) + "," + std::to_string(s.components) + "\n";
  }
  write_text(out / "index.csv", index);
  return result;
}

}  // namespace kinon
