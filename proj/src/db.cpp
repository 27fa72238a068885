#include "wattcast/db.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

constexpr const char *kMagic = "# wattcast database v1";
constexpr const char *kHeader =
    "id,gpu,kind,precision,shape,kernel_name,grid,block,concurrency,core_freq_hz,latency_s,"
    "power_w,idle_power_w";

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::vector<std::string> split_on(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(std::move(part));
      part.clear();
    } else {
      part.push_back(c);
    }
  }
  parts.push_back(std::move(part));
  return parts;
}

std::int64_t to_i64(const std::string &s, const char *what) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw InputError(std::string("bad integer for ") + what + ": '" + s + "'");
  return v;
}

double to_f64(const std::string &s, const char *what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw InputError(std::string("bad number for ") + what + ": '" + s + "'");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

void MeasurementRecord::validate() const {
  op.validate();
  if (!(latency > 0)) throw InputError("record: latency must be positive");
  if (!(core_freq > 0)) throw InputError("record: core frequency must be positive");
  if (power && idle_power && *power < *idle_power)
    throw InputError("record: measured power below idle power");
  if (power && *power < 0) throw InputError("record: power must be non-negative");
  if (concurrency && *concurrency < 1) throw InputError("record: concurrency must be >= 1");
}

std::string encode_shape(const OperatorSpec &op) {
  std::ostringstream os;
  switch (op.kind) {
  case OpKind::Gemm: {
    const auto &g = op.gemm();
    os << "gemm:" << g.b << '.' << g.m << '.' << g.n << '.' << g.k;
    break;
  }
  case OpKind::Softmax:
  case OpKind::LayerNorm: {
    const auto &r = op.reduction();
    os << to_string(op.kind) << ':' << r.rows << '.' << r.cols;
    break;
  }
  case OpKind::Elementwise: {
    const auto &e = op.elementwise();
    os << "elementwise:" << e.n << '.' << e.inputs << '.' << e.outputs << '.'
       << static_cast<std::int64_t>(e.flops_per_element) << '.' << (e.uses_sfu ? 1 : 0);
    break;
  }
  case OpKind::FlashAttention: {
    const auto &f = op.flash_attention();
    os << "flashattention:" << f.b << '.' << f.heads << '.' << f.q_len << '.' << f.kv_len << '.'
       << f.head_dim;
    break;
  }
  }
  return os.str();
}

OperatorSpec decode_shape(const std::string &kind, const std::string &precision,
                          const std::string &shape) {
  const OpKind k = op_kind_from_string(kind);
  const Precision p = precision_from_string(precision);
  const size_t colon = shape.find(':');
  if (colon == std::string::npos) throw InputError("shape token missing ':': '" + shape + "'");
  if (shape.substr(0, colon) != kind)
    throw InputError("shape token kind mismatch: '" + shape + "' vs '" + kind + "'");
  const std::vector<std::string> dims = split_on(shape.substr(colon + 1), '.');
  auto need = [&](size_t n) {
    if (dims.size() != n)
      throw InputError("shape token '" + shape + "' needs " + std::to_string(n) + " fields");
  };
  switch (k) {
  case OpKind::Gemm:
    need(4);
    return OperatorSpec::make_gemm(p, to_i64(dims[0], "B"), to_i64(dims[1], "M"),
                                   to_i64(dims[2], "N"), to_i64(dims[3], "K"));
  case OpKind::Softmax:
    need(2);
    return OperatorSpec::make_softmax(p, to_i64(dims[0], "R"), to_i64(dims[1], "C"));
  case OpKind::LayerNorm:
    need(2);
    return OperatorSpec::make_layernorm(p, to_i64(dims[0], "R"), to_i64(dims[1], "C"));
  case OpKind::Elementwise:
    need(5);
    return OperatorSpec::make_elementwise(
        p, to_i64(dims[0], "N"), static_cast<int>(to_i64(dims[1], "inputs")),
        static_cast<int>(to_i64(dims[2], "outputs")),
        static_cast<double>(to_i64(dims[3], "flops")), to_i64(dims[4], "sfu") != 0);
  case OpKind::FlashAttention:
    need(5);
    return OperatorSpec::make_flash_attention(p, to_i64(dims[0], "B"), to_i64(dims[1], "H"),
                                              to_i64(dims[2], "Sq"), to_i64(dims[3], "Sk"),
                                              to_i64(dims[4], "d"));
  }
  throw InputError("unknown kind in shape token");
}

LoadReport load_database(const std::string &path, bool strict) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open database file: " + path);

  LoadReport report;
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw InputError(path + ": malformed header: expected '" + std::string(kMagic) + "'");
  if (!std::getline(in, line) || line != kHeader)
    throw InputError(path + ": malformed column header");

  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const std::vector<std::string> f = split_csv(line);
      if (f.size() != 13)
        throw InputError("expected 13 fields, found " + std::to_string(f.size()));
      MeasurementRecord r;
      r.id = to_i64(f[0], "id");
      r.gpu_name = f[1];
      r.op = decode_shape(f[2], f[3], f[4]);
      r.kernel_name = f[5];
      if (!f[6].empty()) {
        const auto g = split_on(f[6], '.');
        if (g.size() != 3) throw InputError("grid must be gx.gy.gz");
        r.grid = {to_i64(g[0], "gx"), to_i64(g[1], "gy"), to_i64(g[2], "gz")};
      }
      if (!f[7].empty()) r.block_threads = static_cast<int>(to_i64(f[7], "block"));
      if (!f[8].empty()) r.concurrency = static_cast<int>(to_i64(f[8], "concurrency"));
      r.core_freq = to_f64(f[9], "core_freq_hz");
      r.latency = to_f64(f[10], "latency_s");
      if (!f[11].empty()) r.power = to_f64(f[11], "power_w");
      if (!f[12].empty()) r.idle_power = to_f64(f[12], "idle_power_w");
      r.validate();
      report.records.push_back(std::move(r));
      ++report.accepted;
    } catch (const std::exception &e) {
      ++report.rejected;
      std::ostringstream os;
      os << path << ':' << line_no << ": " << e.what();
      if (strict) throw InputError(os.str());
      report.diagnostics.push_back(os.str());
    }
  }
  return report;
}

void save_database(const std::string &path, const std::vector<MeasurementRecord> &records) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write database file: " + path);
  out << kMagic << '\n' << kHeader << '\n';
  for (const MeasurementRecord &r : records) {
    r.validate();
    out << r.id << ',' << csv_escape(r.gpu_name) << ',' << to_string(r.op.kind) << ','
        << to_string(r.op.precision) << ',' << encode_shape(r.op) << ','
        << csv_escape(r.kernel_name) << ',';
    if (r.grid) out << (*r.grid)[0] << '.' << (*r.grid)[1] << '.' << (*r.grid)[2];
    out << ',';
    if (r.block_threads) out << *r.block_threads;
    out << ',';
    if (r.concurrency) out << *r.concurrency;
    out << ',' << format_double(r.core_freq) << ',' << format_double(r.latency) << ',';
    if (r.power) out << format_double(*r.power);
    out << ',';
    if (r.idle_power) out << format_double(*r.idle_power);
    out << '\n';
  }
}

GroupReport group_records(const std::vector<MeasurementRecord> &records,
                          const ConfigPredictor &predictor, const GpuConfig &gpu) {
  GroupReport report;
  for (const MeasurementRecord &r : records) {
    const ResolvedTile resolved =
        resolve_tile_config(r.op, r.kernel_name, r.block_threads, r.concurrency, predictor, gpu);
    if (!resolved.from_name &&
        (r.op.kind == OpKind::Gemm || r.op.kind == OpKind::FlashAttention))
      ++report.defaulted;
    const KernelGroupKey key = group_key(r.op, resolved.tile);
    RecordGroup &group = report.groups[key];
    if (group.records.empty()) group.representative_tile = resolved.tile;
    group.records.push_back(&r);
    group.tiles.push_back(resolved.tile);
    if (resolved.from_name) ++group.resolved_from_name;
  }
  return report;
}

std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>>
split_database(const std::vector<MeasurementRecord> &records, double held_out_fraction,
               std::uint64_t seed) {
  if (held_out_fraction < 0.0 || held_out_fraction >= 1.0)
    throw InputError("split_database: held-out fraction must be in [0, 1)");
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const size_t held = static_cast<size_t>(held_out_fraction * static_cast<double>(records.size()));
  std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>> out;
  for (size_t i = 0; i < order.size(); ++i)
    (i < held ? out.second : out.first).push_back(records[order[i]]);
  return out;
}

} // namespace wattcast
