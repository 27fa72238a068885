#include "wattcast/hw.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

void require(bool ok, const std::string &msg) {
  if (!ok) throw ConfigError(msg);
}

double interp_table(const std::vector<std::pair<double, double>> &table, double x,
                    const char *what) {
  if (table.size() == 1) return table.front().second;
  const double lo = table.front().first;
  const double hi = table.back().first;
  if (x < lo || x > hi) {
    std::ostringstream os;
    os << what << ": frequency " << x << " Hz outside table range [" << lo << ", " << hi << "] Hz";
    throw InputError(os.str());
  }
  auto it = std::lower_bound(table.begin(), table.end(), x,
                             [](const auto &p, double v) { return p.first < v; });
  if (it->first == x) return it->second;
  auto prev = std::prev(it);
  const double t = (x - prev->first) / (it->first - prev->first);
  return prev->second + t * (it->second - prev->second);
}

} // namespace

void GpuConfig::validate() const {
  require(num_sms > 0, name + ": num_sms must be positive");
  require(smsps_per_sm >= 1, name + ": smsps_per_sm must be >= 1");
  require(max_concurrent_tbs_per_sm_default >= 1,
          name + ": max_concurrent_tbs_per_sm_default must be >= 1");
  require(dram_bandwidth > 0, name + ": dram_bandwidth must be positive");
  require(l2_bandwidth > 0, name + ": l2_bandwidth must be positive");
  require(shared_bandwidth_per_sm > 0, name + ": shared_bandwidth_per_sm must be positive");
  require(sfu_ops > 0, name + ": sfu_ops must be positive");
  require(reference_core_freq > 0, name + ": reference_core_freq must be positive");
  require(dram_freq > 0, name + ": dram_freq must be positive");
  require(dram_voltage > 0, name + ": dram_voltage must be positive");
  require(!tensor_core_flops.empty(), name + ": tensor_core_flops must not be empty");
  require(!cuda_core_flops.empty(), name + ": cuda_core_flops must not be empty");
  for (const auto &[p, v] : tensor_core_flops)
    require(v > 0, name + ": tensor_core_flops entries must be positive");
  for (const auto &[p, v] : cuda_core_flops)
    require(v > 0, name + ": cuda_core_flops entries must be positive");
}

void PowerConfig::validate() const {
  require(core_freq > 0, "power config: core_freq must be positive");
  require(core_voltage > 0, "power config: core_voltage must be positive");
  require(!idle_power_table.empty(), "power config: idle_power_table needs at least one entry");
  double prev = -1.0;
  for (const auto &[f, w] : idle_power_table) {
    require(f > prev, "power config: idle_power_table frequencies must be strictly increasing");
    require(w >= 0, "power config: idle power must be non-negative");
    prev = f;
  }
  prev = -1.0;
  for (const auto &[f, v] : vf_curve) {
    require(f > prev, "power config: vf_curve frequencies must be strictly increasing");
    require(v > 0, "power config: vf_curve voltages must be positive");
    prev = f;
  }
  require(dram_energy_scale > 0, "power config: dram_energy_scale must be positive");
}

EffectiveThroughputs scaled_throughputs(const GpuConfig &gpu, const PowerConfig &power) {
  gpu.validate();
  require(power.core_freq > 0, "scaled_throughputs: core_freq must be positive");
  const double s = power.core_freq / gpu.reference_core_freq;
  EffectiveThroughputs eff;
  eff.dram_bandwidth = gpu.dram_bandwidth; // DRAM keeps its own clock domain
  eff.l2_bandwidth = gpu.l2_bandwidth * s;
  eff.shared_bandwidth_per_sm = gpu.shared_bandwidth_per_sm * s;
  for (const auto &[p, v] : gpu.tensor_core_flops) eff.tensor_core_flops[p] = v * s;
  for (const auto &[p, v] : gpu.cuda_core_flops) eff.cuda_core_flops[p] = v * s;
  eff.sfu_ops = gpu.sfu_ops * s;
  eff.num_sms = gpu.num_sms;
  return eff;
}

double idle_power_at(const PowerConfig &power, double freq) {
  power.validate();
  return interp_table(power.idle_power_table, freq, "idle_power_at");
}

double voltage_at(const PowerConfig &power, double freq) {
  if (power.vf_curve.empty()) return power.core_voltage;
  // Clamp at the curve ends: exploring slightly outside the measured
  // envelope should not hard-fail.
  const double lo = power.vf_curve.front().first;
  const double hi = power.vf_curve.back().first;
  const double x = std::clamp(freq, lo, hi);
  return interp_table(power.vf_curve, x, "voltage_at");
}

namespace {

using nlohmann::json;

constexpr double kMega = 1e6;
constexpr double kGiga = 1e9;
constexpr double kTera = 1e12;

std::map<Precision, double> flops_map_from_json(const json &j, double unit) {
  std::map<Precision, double> out;
  for (auto it = j.begin(); it != j.end(); ++it)
    out[precision_from_string(it.key())] = it.value().get<double>() * unit;
  return out;
}

json flops_map_to_json(const std::map<Precision, double> &m, double unit) {
  json j = json::object();
  for (const auto &[p, v] : m) j[to_string(p)] = v / unit;
  return j;
}

std::vector<std::pair<double, double>> table_from_json(const json &j, double x_unit) {
  std::vector<std::pair<double, double>> out;
  for (const auto &row : j) {
    if (!row.is_array() || row.size() != 2)
      throw InputError("gpu document: table rows must be [x, y] pairs");
    out.emplace_back(row[0].get<double>() * x_unit, row[1].get<double>());
  }
  return out;
}

json table_to_json(const std::vector<std::pair<double, double>> &t, double x_unit) {
  json j = json::array();
  for (const auto &[x, y] : t) j.push_back(json::array({x / x_unit, y}));
  return j;
}

} // namespace

GpuDocument gpu_document_from_json(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    throw InputError(std::string("gpu document: invalid JSON: ") + e.what());
  }
  try {
    GpuDocument doc;
    doc.gpu.name = j.at("name").get<std::string>();
    const json &a = j.at("arch");
    doc.gpu.num_sms = a.at("num_sms").get<int>();
    doc.gpu.smsps_per_sm = a.value("smsps_per_sm", 4);
    doc.gpu.max_concurrent_tbs_per_sm_default = a.value("max_concurrent_tbs_per_sm", 1);
    doc.gpu.dram_bandwidth = a.at("dram_bandwidth_gb_s").get<double>() * kGiga;
    doc.gpu.l2_bandwidth = a.at("l2_bandwidth_gb_s").get<double>() * kGiga;
    doc.gpu.shared_bandwidth_per_sm = a.at("shared_bandwidth_per_sm_gb_s").get<double>() * kGiga;
    doc.gpu.tensor_core_flops = flops_map_from_json(a.at("tensor_core_tflops"), kTera);
    doc.gpu.cuda_core_flops = flops_map_from_json(a.at("cuda_core_tflops"), kTera);
    doc.gpu.sfu_ops = a.at("sfu_gops").get<double>() * kGiga;
    doc.gpu.reference_core_freq = a.at("reference_core_freq_mhz").get<double>() * kMega;
    doc.gpu.dram_freq = a.at("dram_freq_mhz").get<double>() * kMega;
    doc.gpu.dram_voltage = a.at("dram_voltage_v").get<double>();
    if (j.contains("notes"))
      for (const auto &n : j["notes"]) doc.gpu.notes.push_back(n.get<std::string>());

    const json &p = j.at("power");
    doc.power.core_freq = p.at("core_freq_mhz").get<double>() * kMega;
    doc.power.core_voltage = p.at("core_voltage_v").get<double>();
    doc.power.idle_power_table = table_from_json(p.at("idle_power_w"), kMega);
    if (p.contains("vf_curve_v")) doc.power.vf_curve = table_from_json(p["vf_curve_v"], kMega);
    doc.power.dram_energy_scale = p.value("dram_energy_scale", 1.0);

    doc.gpu.validate();
    doc.power.validate();
    return doc;
  } catch (const json::exception &e) {
    throw InputError(std::string("gpu document: ") + e.what());
  }
}

std::string gpu_document_to_json(const GpuDocument &doc) {
  json a;
  a["num_sms"] = doc.gpu.num_sms;
  a["smsps_per_sm"] = doc.gpu.smsps_per_sm;
  a["max_concurrent_tbs_per_sm"] = doc.gpu.max_concurrent_tbs_per_sm_default;
  a["dram_bandwidth_gb_s"] = doc.gpu.dram_bandwidth / kGiga;
  a["l2_bandwidth_gb_s"] = doc.gpu.l2_bandwidth / kGiga;
  a["shared_bandwidth_per_sm_gb_s"] = doc.gpu.shared_bandwidth_per_sm / kGiga;
  a["tensor_core_tflops"] = flops_map_to_json(doc.gpu.tensor_core_flops, kTera);
  a["cuda_core_tflops"] = flops_map_to_json(doc.gpu.cuda_core_flops, kTera);
  a["sfu_gops"] = doc.gpu.sfu_ops / kGiga;
  a["reference_core_freq_mhz"] = doc.gpu.reference_core_freq / kMega;
  a["dram_freq_mhz"] = doc.gpu.dram_freq / kMega;
  a["dram_voltage_v"] = doc.gpu.dram_voltage;

  json p;
  p["core_freq_mhz"] = doc.power.core_freq / kMega;
  p["core_voltage_v"] = doc.power.core_voltage;
  p["idle_power_w"] = table_to_json(doc.power.idle_power_table, kMega);
  if (!doc.power.vf_curve.empty()) p["vf_curve_v"] = table_to_json(doc.power.vf_curve, kMega);
  p["dram_energy_scale"] = doc.power.dram_energy_scale;

  json j;
  j["name"] = doc.gpu.name;
  j["arch"] = a;
  j["power"] = p;
  if (!doc.gpu.notes.empty()) j["notes"] = doc.gpu.notes;
  return j.dump(2) + "\n";
}

GpuDocument load_gpu_document(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open gpu config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return gpu_document_from_json(buf.str());
}

void save_gpu_document(const std::string &path, const GpuDocument &doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write gpu config file: " + path);
  out << gpu_document_to_json(doc);
}

} // namespace wattcast
