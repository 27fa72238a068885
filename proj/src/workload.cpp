#include "wattcast/workload.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

using nlohmann::json;

json tile_to_json(const TileConfig &t) {
  json j;
  j["tb_tile"] = t.tb_tile;
  j["warp_grid"] = t.warp_grid;
  j["instr_tile"] = t.instr_tile;
  j["stages"] = t.pipeline_stages;
  j["epilogue_via_shared"] = t.epilogue_via_shared;
  j["concurrent_tbs_per_sm"] = t.concurrent_tbs_per_sm;
  return j;
}

TileConfig tile_from_json(const json &j) {
  TileConfig t;
  if (j.contains("tb_tile"))
    for (int i = 0; i < 3; ++i)
      t.tb_tile[static_cast<size_t>(i)] = j["tb_tile"].at(static_cast<size_t>(i)).get<std::int64_t>();
  if (j.contains("warp_grid"))
    for (int i = 0; i < 2; ++i)
      t.warp_grid[static_cast<size_t>(i)] = j["warp_grid"].at(static_cast<size_t>(i)).get<int>();
  if (j.contains("instr_tile"))
    for (int i = 0; i < 3; ++i)
      t.instr_tile[static_cast<size_t>(i)] = j["instr_tile"].at(static_cast<size_t>(i)).get<int>();
  t.pipeline_stages = j.value("stages", 1);
  t.epilogue_via_shared = j.value("epilogue_via_shared", false);
  t.concurrent_tbs_per_sm = j.value("concurrent_tbs_per_sm", 1);
  t.validate();
  return t;
}

json op_to_json(const OperatorSpec &op) {
  json j;
  j["kind"] = to_string(op.kind);
  j["precision"] = to_string(op.precision);
  switch (op.kind) {
  case OpKind::Gemm: {
    const auto &g = op.gemm();
    j["b"] = g.b;
    j["m"] = g.m;
    j["n"] = g.n;
    j["k"] = g.k;
    break;
  }
  case OpKind::Softmax:
  case OpKind::LayerNorm: {
    const auto &r = op.reduction();
    j["rows"] = r.rows;
    j["cols"] = r.cols;
    break;
  }
  case OpKind::Elementwise: {
    const auto &e = op.elementwise();
    j["n"] = e.n;
    j["inputs"] = e.inputs;
    j["outputs"] = e.outputs;
    j["flops_per_element"] = e.flops_per_element;
    if (e.uses_sfu) j["sfu"] = true;
    break;
  }
  case OpKind::FlashAttention: {
    const auto &f = op.flash_attention();
    j["b"] = f.b;
    j["heads"] = f.heads;
    j["q_len"] = f.q_len;
    j["kv_len"] = f.kv_len;
    j["head_dim"] = f.head_dim;
    break;
  }
  }
  return j;
}

OperatorSpec op_from_json(const json &j) {
  const OpKind kind = op_kind_from_string(j.at("kind").get<std::string>());
  const Precision p = precision_from_string(j.at("precision").get<std::string>());
  switch (kind) {
  case OpKind::Gemm:
    return OperatorSpec::make_gemm(p, j.value("b", 1), j.at("m").get<std::int64_t>(),
                                   j.at("n").get<std::int64_t>(), j.at("k").get<std::int64_t>());
  case OpKind::Softmax:
    return OperatorSpec::make_softmax(p, j.at("rows").get<std::int64_t>(),
                                      j.at("cols").get<std::int64_t>());
  case OpKind::LayerNorm:
    return OperatorSpec::make_layernorm(p, j.at("rows").get<std::int64_t>(),
                                        j.at("cols").get<std::int64_t>());
  case OpKind::Elementwise:
    return OperatorSpec::make_elementwise(p, j.at("n").get<std::int64_t>(),
                                          j.value("inputs", 1), j.value("outputs", 1),
                                          j.value("flops_per_element", 0.0), j.value("sfu", false));
  case OpKind::FlashAttention:
    return OperatorSpec::make_flash_attention(p, j.value("b", 1), j.at("heads").get<std::int64_t>(),
                                              j.at("q_len").get<std::int64_t>(),
                                              j.at("kv_len").get<std::int64_t>(),
                                              j.at("head_dim").get<std::int64_t>());
  }
  throw InputError("workload: unknown operator kind");
}

} // namespace

void Workload::validate() const {
  if (ops.empty()) throw InputError("workload '" + name + "' has no operators");
  for (size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].repeat < 1)
      throw InputError("workload '" + name + "': operator " + std::to_string(i) +
                       " has repeat < 1");
    ops[i].op.validate();
    if (ops[i].tile_override) ops[i].tile_override->validate();
  }
}

std::int64_t Workload::total_operators() const {
  std::int64_t total = 0;
  for (const auto &entry : ops) total += entry.repeat;
  return total;
}

Workload workload_from_json(const std::string &text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception &e) {
    throw InputError(std::string("workload: invalid JSON: ") + e.what());
  }
  Workload w;
  try {
    w.name = root.value("name", "workload");
    size_t index = 0;
    for (const auto &j : root.at("operators")) {
      WorkloadEntry entry;
      try {
        entry.op = op_from_json(j);
      } catch (const std::exception &e) {
        throw InputError("workload operator " + std::to_string(index) + ": " + e.what());
      }
      entry.repeat = j.value("repeat", std::int64_t{1});
      if (j.contains("tile")) entry.tile_override = tile_from_json(j["tile"]);
      w.ops.push_back(std::move(entry));
      ++index;
    }
  } catch (const json::exception &e) {
    throw InputError(std::string("workload: ") + e.what());
  }
  w.validate();
  return w;
}

std::string workload_to_json(const Workload &w) {
  json root;
  root["name"] = w.name;
  json ops = json::array();
  for (const auto &entry : w.ops) {
    json j = op_to_json(entry.op);
    if (entry.repeat != 1) j["repeat"] = entry.repeat;
    if (entry.tile_override) j["tile"] = tile_to_json(*entry.tile_override);
    ops.push_back(std::move(j));
  }
  root["operators"] = std::move(ops);
  return root.dump(2) + "\n";
}

Workload load_workload(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open workload file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return workload_from_json(buf.str());
}

void save_workload(const std::string &path, const Workload &w) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write workload file: " + path);
  out << workload_to_json(w);
}

Workload workload_from_trace(std::istream &in, const std::string &name) {
  Workload w;
  w.name = name;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind_tok, prec_tok;
    ls >> kind_tok >> prec_tok;
    if (kind_tok.empty()) continue;

    std::vector<std::int64_t> dims;
    std::int64_t repeat = 1;
    bool sfu = false;
    std::string tok;
    while (ls >> tok) {
      if (tok.rfind("repeat=", 0) == 0) {
        repeat = std::stoll(tok.substr(7));
      } else if (tok == "sfu=1") {
        sfu = true;
      } else if (tok == "sfu=0") {
        sfu = false;
      } else {
        try {
          dims.push_back(std::stoll(tok));
        } catch (const std::exception &) {
          throw InputError("trace line " + std::to_string(line_no) + ": bad token '" + tok + "'");
        }
      }
    }

    auto need = [&](size_t n) {
      if (dims.size() != n)
        throw InputError("trace line " + std::to_string(line_no) + ": " + kind_tok + " needs " +
                         std::to_string(n) + " dims");
    };
    const OpKind kind = op_kind_from_string(kind_tok);
    const Precision p = precision_from_string(prec_tok);
    WorkloadEntry entry;
    entry.repeat = repeat;
    switch (kind) {
    case OpKind::Gemm:
      need(4);
      entry.op = OperatorSpec::make_gemm(p, dims[0], dims[1], dims[2], dims[3]);
      break;
    case OpKind::Softmax:
      need(2);
      entry.op = OperatorSpec::make_softmax(p, dims[0], dims[1]);
      break;
    case OpKind::LayerNorm:
      need(2);
      entry.op = OperatorSpec::make_layernorm(p, dims[0], dims[1]);
      break;
    case OpKind::Elementwise:
      need(4);
      entry.op = OperatorSpec::make_elementwise(p, dims[0], static_cast<int>(dims[1]),
                                                static_cast<int>(dims[2]),
                                                static_cast<double>(dims[3]), sfu);
      break;
    case OpKind::FlashAttention:
      need(5);
      entry.op = OperatorSpec::make_flash_attention(p, dims[0], dims[1], dims[2], dims[3], dims[4]);
      break;
    }
    w.ops.push_back(std::move(entry));
  }
  w.validate();
  return w;
}

} // namespace wattcast
