#include "zippy/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace zippy {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& line) {
  // '#' introduces a comment at line start or after whitespace, so units in
  // values like "0.025  # 25 mm" are stripped while '#' inside words is kept.
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::vector<double> parse_numbers(const std::string& text, size_t expect, const char* what) {
  std::vector<double> out;
  std::string cleaned = text;
  for (auto& c : cleaned) {
    if (c == ',') c = ' ';
  }
  std::istringstream is(cleaned);
  std::string tok;
  while (is >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') {
      throw ConfigError(std::string(what) + ": not a number: '" + tok + "'");
    }
    out.push_back(v);
  }
  if (expect != 0 && out.size() != expect) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(expect) +
                      " numbers, got " + std::to_string(out.size()));
  }
  if (out.empty()) {
    throw ConfigError(std::string(what) + ": empty value");
  }
  return out;
}

}  // namespace

ConfigDoc ConfigDoc::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

ConfigDoc ConfigDoc::parse_string(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  doc.raw_ = text;
  doc.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(body.substr(1, body.size() - 2));
      doc.sections_[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    doc.sections_[section][key] = value;
  }
  return doc;
}

const std::string* ConfigDoc::find(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  return &kit->second;
}

void ConfigDoc::fail(const std::string& section, const std::string& key,
                     const std::string& why) const {
  throw ConfigError(origin_ + ": [" + section + "] " + key + ": " + why);
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) fail(section, key, "missing required key");
  char* end = nullptr;
  const double out = std::strtod(v->c_str(), &end);
  if (end == v->c_str() || *trim(end ? end : "").c_str() != '\0') {
    fail(section, key, "not a number: '" + *v + "'");
  }
  return out;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

std::uint64_t ConfigDoc::get_u64(const std::string& section, const std::string& key,
                                 std::uint64_t fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  char* end = nullptr;
  const std::uint64_t out = std::strtoull(v->c_str(), &end, 10);
  if (end == v->c_str() || *trim(end ? end : "").c_str() != '\0') {
    fail(section, key, "not an unsigned integer: '" + *v + "'");
  }
  return out;
}

std::string ConfigDoc::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

std::vector<double> ConfigDoc::get_list(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) fail(section, key, "missing required key");
  try {
    return parse_numbers(*v, 0, key.c_str());
  } catch (const ConfigError& e) {
    fail(section, key, e.what());
  }
}

Vec3 ConfigDoc::get_vec3(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) fail(section, key, "missing required key");
  try {
    const auto n = parse_numbers(*v, 3, key.c_str());
    return Vec3(n[0], n[1], n[2]);
  } catch (const ConfigError& e) {
    fail(section, key, e.what());
  }
}

Mat3 ConfigDoc::get_sym3(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) fail(section, key, "missing required key");
  try {
    const auto n = parse_numbers(*v, 6, key.c_str());
    Mat3 m;
    m << n[0], n[3], n[4], n[3], n[1], n[5], n[4], n[5], n[2];
    return m;
  } catch (const ConfigError& e) {
    fail(section, key, e.what());
  }
}

WalkerParams walker_from_config(const ConfigDoc& doc) {
  WalkerParams p;
  p.mass_total = doc.get_double("walker", "mass_total", p.mass_total);
  p.mass_left = doc.get_double("walker", "mass_left", 0.5 * p.mass_total);
  p.mass_right = doc.get_double("walker", "mass_right", p.mass_total - p.mass_left);
  p.height_total = doc.get_double("walker", "height_total", p.height_total);
  p.width_total = doc.get_double("walker", "width_total", p.width_total);

  p.foot_semi_axis_sagittal = doc.get_double("feet", "semi_axis_sagittal", p.foot_semi_axis_sagittal);
  p.foot_semi_axis_frontal = doc.get_double("feet", "semi_axis_frontal", p.foot_semi_axis_frontal);
  p.foot_semi_axis_vertical =
      doc.get_double("feet", "semi_axis_vertical", p.foot_semi_axis_frontal);
  p.foot_center_height = doc.get_double("feet", "center_height", p.foot_center_height);
  p.foot_gap = doc.get_double("feet", "gap", p.foot_gap);

  p.hip_height = doc.get_double("hip", "height", p.hip_height);
  p.hard_stop_angle = doc.get_double("hip", "hard_stop_angle", p.hard_stop_angle);
  p.hard_stop_restitution = doc.get_double("hip", "hard_stop_restitution", p.hard_stop_restitution);

  p.cg_offset_x = doc.get_double("cg", "offset_x", p.cg_offset_x);
  p.cg_offset_z = doc.get_double("cg", "offset_z", p.cg_offset_z);

  if (doc.has("bodies", "com_left")) p.body_com_left = doc.get_vec3("bodies", "com_left");
  if (doc.has("bodies", "com_right")) p.body_com_right = doc.get_vec3("bodies", "com_right");
  if (doc.has("bodies", "inertia_left")) p.body_inertia_left = doc.get_sym3("bodies", "inertia_left");
  if (doc.has("bodies", "inertia_right"))
    p.body_inertia_right = doc.get_sym3("bodies", "inertia_right");

  p.motor.torque_constant = doc.get_double("motor", "torque_constant", p.motor.torque_constant);
  p.motor.back_emf_constant =
      doc.get_double("motor", "back_emf_constant", p.motor.back_emf_constant);
  p.motor.winding_resistance =
      doc.get_double("motor", "winding_resistance", p.motor.winding_resistance);
  p.motor.gear_ratio = doc.get_double("motor", "gear_ratio", p.motor.gear_ratio);
  p.motor.gearbox_efficiency =
      doc.get_double("motor", "gearbox_efficiency", p.motor.gearbox_efficiency);
  p.motor.viscous_friction = doc.get_double("motor", "viscous_friction", p.motor.viscous_friction);
  p.motor.max_voltage = doc.get_double("motor", "max_voltage", p.motor.max_voltage);

  p.friction_coefficient = doc.get_double("contact", "friction_coefficient", p.friction_coefficient);

  p.validate();
  return p;
}

Terrain terrain_from_config(const ConfigDoc& doc) {
  const std::string kind = doc.get_string("terrain", "kind", "flat");
  if (kind == "flat") {
    return Terrain::flat();
  }
  if (kind == "staircase") {
    return Terrain::staircase(doc.get_double("terrain", "rise"),
                              doc.get_double("terrain", "depth", 0.06),
                              static_cast<int>(doc.get_u64("terrain", "count", 5)));
  }
  if (kind == "prism_field") {
    PrismFieldDefaults d;
    return Terrain::prism_field(doc.get_double("terrain", "cell_side", d.cell_side),
                                doc.get_double("terrain", "mean_height", d.mean_height),
                                doc.get_double("terrain", "std_height", d.std_height),
                                doc.get_double("terrain", "max_height", d.max_height),
                                doc.get_u64("terrain", "seed", 1),
                                doc.get_double("terrain", "extent_x", d.extent_x),
                                doc.get_double("terrain", "extent_y", d.extent_y));
  }
  throw ConfigError("unknown terrain kind: '" + kind + "'");
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace zippy
