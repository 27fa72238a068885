#include "wattcast/kernel_name.hpp"

#include <cctype>
#include <vector>

namespace wattcast {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

/// "<A>x<B>" with both sides numeric.
bool parse_pair(std::string_view token, std::int64_t &a, std::int64_t &b) {
  const size_t x = token.find('x');
  if (x == std::string_view::npos) return false;
  const std::string_view lhs = token.substr(0, x);
  const std::string_view rhs = token.substr(x + 1);
  if (!all_digits(lhs) || !all_digits(rhs)) return false;
  a = std::stoll(std::string(lhs));
  b = std::stoll(std::string(rhs));
  return true;
}

/// Known Tensor Core MMA shapes, keyed by their concatenated digits.
const std::pair<std::string_view, std::array<int, 3>> kMmaShapes[] = {
    {"884", {8, 8, 4}},     {"8816", {8, 8, 16}},   {"8832", {8, 8, 32}},
    {"1684", {16, 8, 4}},   {"1688", {16, 8, 8}},   {"16816", {16, 8, 16}},
    {"16832", {16, 8, 32}}, {"16864", {16, 8, 64}},
};

std::vector<std::string> tokenize(std::string_view name) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void set_precision(ParsedKernelName &out, Precision p, const std::string &token) {
  if (out.precision) return; // first recognized token wins
  out.precision = p;
  out.provenance["precision"] = token;
}

} // namespace

ParsedKernelName parse_kernel_name(std::string_view name) {
  ParsedKernelName out;
  const std::vector<std::string> tokens = tokenize(name);
  std::string deferred_fp32_token; // "s<mma>gemm" means TF32 unless a
                                   // precision token says otherwise

  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string &tok = tokens[i];

    std::int64_t a = 0, b = 0;
    if (parse_pair(tok, a, b)) {
      const bool after_stages = i > 0 && tokens[i - 1] == "stages";
      if (after_stages) {
        // cuBLAS "stages_<chunk>x<S>": only the stage count matters here.
        if (!out.stages) {
          out.stages = static_cast<int>(b);
          out.provenance["stages"] = tokens[i - 1] + "_" + tok;
        }
      } else if (!out.bm) {
        out.bm = a;
        out.bn = b;
        out.provenance["tb_tile"] = tok;
      } else if (!out.bk && !out.stages) {
        // CUTLASS "<BM>x<BN>_<BK>x<S>".
        out.bk = a;
        out.stages = static_cast<int>(b);
        out.provenance["bk_stages"] = tok;
      }
      continue;
    }

    if (tok.rfind("stages", 0) == 0 && all_digits(std::string_view(tok).substr(6))) {
      if (!out.stages) {
        out.stages = std::stoi(tok.substr(6));
        out.provenance["stages"] = tok;
      }
      continue;
    }

    if (const size_t g = tok.find("gemm"); g != std::string::npos) {
      // "<s|h><digits>gemm" carries an MMA shape; plain "sgemm"/"hgemm" are
      // SIMT kernels and only hint the precision.
      std::string_view head(tok.data(), g);
      // "s1688tf32gemm": the dtype infix sits between the shape and "gemm"
      if (head.size() > 4 && head.substr(head.size() - 4) == "tf32") {
        set_precision(out, Precision::fp32, tok);
        head.remove_suffix(4);
      }
      if (head.size() >= 2 && (head[0] == 's' || head[0] == 'h')) {
        std::string_view digits = head.substr(1);
        if (all_digits(digits)) {
          for (const auto &[key, shape] : kMmaShapes) {
            if (digits == key && !out.instr) {
              out.instr = shape;
              out.provenance["instr"] = tok;
            }
          }
          // "h..." is a half-precision op; "s..." accumulates in fp32 and is
          // TF32 only when no explicit input-precision token follows.
          if (head[0] == 'h') set_precision(out, Precision::bf16, tok);
          if (head[0] == 's' && deferred_fp32_token.empty()) deferred_fp32_token = tok;
        }
      }
      if (head == "s") set_precision(out, Precision::fp32, tok);
      if (head == "h") set_precision(out, Precision::bf16, tok);
      if (tok.find("tf32") != std::string::npos) set_precision(out, Precision::fp32, tok);
      continue;
    }

    if (tok == "bf16") {
      set_precision(out, Precision::bf16, tok);
    } else if (tok == "f16" || tok == "fp16" || tok == "half") {
      // Two bytes per element, same as bf16; the model keys off element width.
      set_precision(out, Precision::bf16, tok);
    } else if (tok == "f32" || tok == "fp32" || tok == "tf32") {
      set_precision(out, Precision::fp32, tok);
    } else if (tok == "nn" || tok == "nt" || tok == "tn" || tok == "tt") {
      if (!out.layout) {
        out.layout = tok;
        out.provenance["layout"] = tok;
      }
    }
  }
  if (!out.precision && !deferred_fp32_token.empty())
    set_precision(out, Precision::fp32, deferred_fp32_token);
  return out;
}

} // namespace wattcast
