#include "kinon/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kinon/errors.hpp"

namespace kinon {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Walks one JSON object, remembering which keys were read so that leftovers
/// can be reported as unknown.
class ObjectReader {
public:
  ObjectReader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ValidationError(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ValidationError(path(key), "expected a number");
    return v->get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    const json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number()) throw ValidationError(path(key), "expected a number or null");
    return v->get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    }
    throw ValidationError(path(key), "expected an integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ValidationError(path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ValidationError(path(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!seen_.contains(it.key())) throw ValidationError(join(path_, it.key()), "unknown field");
  }

private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

int to_int(std::int64_t v, const std::string& path) {
  if (v < -(1LL << 30) || v > (1LL << 30)) throw ValidationError(path, "integer out of range");
  return static_cast<int>(v);
}

PsiSpec psi_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  const std::string kind = r.string("kind", "identity");
  PsiSpec spec;
  if (kind == "identity") {
    spec = PsiSpec::identity();
  } else if (kind == "log1p") {
    spec = PsiSpec::log1p();
  } else if (kind == "power") {
    spec.kind = PsiSpec::Kind::power;
    spec.gamma = r.number("gamma", 1.0);
    if (!(std::isfinite(spec.gamma) && spec.gamma > 0.0)) throw ValidationError(r.path("gamma"), "must be finite and > 0");
  } else {
    throw ValidationError(r.path("kind"), "expected identity, log1p or power");
  }
  r.finish();
  return spec;
}

ordered_json psi_to_json(const PsiSpec& psi) {
  ordered_json j;
  switch (psi.kind) {
    case PsiSpec::Kind::identity: j["kind"] = "identity"; break;
    case PsiSpec::Kind::log1p: j["kind"] = "log1p"; break;
    case PsiSpec::Kind::power:
      j["kind"] = "power";
      j["gamma"] = psi.gamma;
      break;
  }
  return j;
}

void validate_params(const ModelParams& params, double omega, const std::string& path) {
  try {
    params.validate(omega);
  } catch (const ValidationError& e) {
    throw e.nested(path);
  }
}

bool safe_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

}  // namespace

ModelParams ParamPatch::apply(ModelParams base) const {
  if (kappa) base.kappa = *kappa;
  if (lambda) base.lambda = *lambda;
  if (eta) base.eta = *eta;
  if (theta) base.theta = *theta;
  if (psi) base.psi = *psi;
  return base;
}

std::size_t RunConfig::seed_index() const noexcept {
  const SeedPosition p = seed_position();
  return static_cast<std::size_t>(p.y) * topology.width + p.x;
}

SeedPosition RunConfig::seed_position() const noexcept {
  if (seed) return *seed;
  const int h = topology.lattice == Lattice::d2 ? 1 : topology.height;
  return SeedPosition{topology.width / 2, h / 2};
}

void RunConfig::validate() const {
  const bool one_d = topology.lattice == Lattice::d2;
  if (topology.width < 3 || topology.width > 16384) throw ValidationError("topology.width", "must lie in [3, 16384]");
  if (one_d && topology.height != 1) throw ValidationError("topology.height", "must be 1 for a d2 lattice");
  if (!one_d && (topology.height < 3 || topology.height > 16384))
    throw ValidationError("topology.height", "must lie in [3, 16384]");
  if (!(std::isfinite(omega) && omega > 0.0)) throw ValidationError("omega", "must be finite and > 0");
  if (seed && (seed->x < 0 || seed->x >= topology.width)) throw ValidationError("seed.x", "outside the grid");
  if (seed && (seed->y < 0 || seed->y >= topology.height)) throw ValidationError("seed.y", "outside the grid");

  validate_params(params, omega, "params");

  if (schedule.max_cycles < 0) throw ValidationError("schedule.max_cycles", "must be >= 0");
  if (schedule.frame_stride < 0) throw ValidationError("schedule.frame_stride", "must be >= 0");
  if (schedule.contour_stride < 0) throw ValidationError("schedule.contour_stride", "must be >= 0");
  ModelParams running = params;
  std::int64_t last = 0;
  for (std::size_t i = 0; i < schedule.changes.size(); ++i) {
    const std::string path = "schedule.changes[" + std::to_string(i) + "]";
    const auto& change = schedule.changes[i];
    if (change.cycle <= last) throw ValidationError(path + ".cycle", "must be >= 1 and strictly increasing");
    last = change.cycle;
    running = change.params.apply(running);
    validate_params(running, omega, path + ".params");
  }

  if (!(std::isfinite(render.scale) && render.scale > 0.0)) throw ValidationError("render.scale", "must be > 0");
  if (!safe_name(render.prefix)) throw ValidationError("render.prefix", "must be non-empty [A-Za-z0-9_-]");
  if (render.contour_level && !(std::isfinite(*render.contour_level) && *render.contour_level > 0.0))
    throw ValidationError("render.contour_level", "must be > 0");
  if (render.zoom < 1 || render.zoom > 64) throw ValidationError("render.zoom", "must lie in [1, 64]");

  if (!(analysis.stasis_tolerance > 0.0)) throw ValidationError("analysis.stasis_tolerance", "must be > 0");
  if (analysis.stasis_window < 1) throw ValidationError("analysis.stasis_window", "must be >= 1");
  if (!(analysis.audit_tolerance > 0.0)) throw ValidationError("analysis.audit_tolerance", "must be > 0");
}

ordered_json to_json(const ModelParams& params) {
  ordered_json j;
  j["kappa"] = params.kappa;
  j["lambda"] = params.lambda;
  j["eta"] = params.eta;
  j["theta"] = params.theta;
  j["psi"] = psi_to_json(params.psi);
  return j;
}

ordered_json to_json(const ParamPatch& patch) {
  ordered_json j = ordered_json::object();
  if (patch.kappa) j["kappa"] = *patch.kappa;
  if (patch.lambda) j["lambda"] = *patch.lambda;
  if (patch.eta) j["eta"] = *patch.eta;
  if (patch.theta) j["theta"] = *patch.theta;
  if (patch.psi) j["psi"] = psi_to_json(*patch.psi);
  return j;
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["topology"] = {{"degree", static_cast<int>(c.topology.lattice)},
                   {"width", c.topology.width},
                   {"height", c.topology.height},
                   {"boundary", std::string(to_string(c.topology.boundary))}};
  j["omega"] = c.omega;
  if (c.seed)
    j["seed"] = {{"x", c.seed->x}, {"y", c.seed->y}};
  else
    j["seed"] = nullptr;
  j["params"] = to_json(c.params);

  ordered_json changes = ordered_json::array();
  for (const auto& ch : c.schedule.changes) changes.push_back({{"cycle", ch.cycle}, {"params", to_json(ch.params)}});
  j["schedule"] = {{"max_cycles", c.schedule.max_cycles},
                   {"frame_stride", c.schedule.frame_stride},
                   {"contour_stride", c.schedule.contour_stride},
                   {"stop_on_stasis", c.schedule.stop_on_stasis},
                   {"changes", changes}};

  ordered_json render;
  render["scale"] = c.render.scale;
  render["storage_only"] = c.render.storage_only;
  render["png"] = c.render.png;
  render["prefix"] = c.render.prefix;
  if (c.render.contour_level)
    render["contour_level"] = *c.render.contour_level;
  else
    render["contour_level"] = nullptr;
  render["zoom"] = c.render.zoom;
  j["render"] = render;

  j["analysis"] = {{"stasis_tolerance", c.analysis.stasis_tolerance},
                   {"stasis_window", c.analysis.stasis_window},
                   {"audit_tolerance", c.analysis.audit_tolerance}};
  return j;
}

ParamPatch patch_from_json(const json& doc, const std::string& path) {
  ObjectReader r(doc, path);
  ParamPatch p;
  p.kappa = r.optional_number("kappa");
  p.lambda = r.optional_number("lambda");
  p.eta = r.optional_number("eta");
  p.theta = r.optional_number("theta");
  if (const json* psi = r.find("psi"); psi && !psi->is_null()) p.psi = psi_from_json(*psi, r.path("psi"));
  r.finish();
  return p;
}

RunConfig config_from_json(const json& doc) {
  RunConfig c;
  ObjectReader root(doc, "");

  if (const json* t = root.find("topology")) {
    ObjectReader r(*t, "topology");
    const auto degree = r.integer("degree", static_cast<int>(c.topology.lattice));
    try {
      c.topology.lattice = lattice_from_degree(to_int(degree, "topology.degree"));
    } catch (const ValidationError& e) {
      throw ValidationError("topology.degree", e.reason());
    }
    c.topology.width = to_int(r.integer("width", c.topology.width), "topology.width");
    const std::int64_t default_height = c.topology.lattice == Lattice::d2 ? 1 : c.topology.height;
    c.topology.height = to_int(r.integer("height", default_height), "topology.height");
    const std::string boundary = r.string("boundary", "periodic");
    if (boundary == "periodic")
      c.topology.boundary = Boundary::periodic;
    else if (boundary == "bordered")
      c.topology.boundary = Boundary::bordered;
    else
      throw ValidationError("topology.boundary", "expected periodic or bordered");
    r.finish();
  }

  c.omega = root.number("omega", c.omega);

  if (const json* s = root.find("seed"); s && !s->is_null()) {
    ObjectReader r(*s, "seed");
    SeedPosition p;
    p.x = to_int(r.integer("x", c.topology.width / 2), "seed.x");
    p.y = to_int(r.integer("y", c.topology.height / 2), "seed.y");
    r.finish();
    c.seed = p;
  }

  if (const json* p = root.find("params")) c.params = patch_from_json(*p, "params").apply(c.params);

  if (const json* s = root.find("schedule")) {
    ObjectReader r(*s, "schedule");
    c.schedule.max_cycles = r.integer("max_cycles", c.schedule.max_cycles);
    c.schedule.frame_stride = r.integer("frame_stride", c.schedule.frame_stride);
    c.schedule.contour_stride = r.integer("contour_stride", c.schedule.contour_stride);
    c.schedule.stop_on_stasis = r.boolean("stop_on_stasis", c.schedule.stop_on_stasis);
    if (const json* changes = r.find("changes")) {
      if (!changes->is_array()) throw ValidationError("schedule.changes", "expected an array");
      for (std::size_t i = 0; i < changes->size(); ++i) {
        const std::string path = "schedule.changes[" + std::to_string(i) + "]";
        ObjectReader cr((*changes)[i], path);
        ScheduledChange ch;
        ch.cycle = cr.integer("cycle", 0);
        const json* pp = cr.find("params");
        if (!pp) throw ValidationError(path + ".params", "required");
        ch.params = patch_from_json(*pp, path + ".params");
        cr.finish();
        c.schedule.changes.push_back(ch);
      }
    }
    r.finish();
  }

  if (const json* s = root.find("render")) {
    ObjectReader r(*s, "render");
    c.render.scale = r.number("scale", c.render.scale);
    c.render.storage_only = r.boolean("storage_only", c.render.storage_only);
    c.render.png = r.boolean("png", c.render.png);
    c.render.prefix = r.string("prefix", c.render.prefix);
    c.render.contour_level = r.optional_number("contour_level");
    c.render.zoom = to_int(r.integer("zoom", c.render.zoom), "render.zoom");
    r.finish();
  }

  if (const json* s = root.find("analysis")) {
    ObjectReader r(*s, "analysis");
    c.analysis.stasis_tolerance = r.number("stasis_tolerance", c.analysis.stasis_tolerance);
    c.analysis.stasis_window = to_int(r.integer("stasis_window", c.analysis.stasis_window), "analysis.stasis_window");
    c.analysis.audit_tolerance = r.number("audit_tolerance", c.analysis.audit_tolerance);
    r.finish();
  }

  root.finish();
  c.validate();
  return c;
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(doc);
}

std::string serialize_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace kinon
