#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/test_gpu.hpp"
#include "wattcast/errors.hpp"
#include "wattcast/explore.hpp"
#include "wattcast/fit.hpp"
#include "wattcast/synth.hpp"
#include "wattcast/traffic.hpp"

using namespace wattcast;
using wattcast::testing::test_gpu;
using wattcast::testing::test_power;

namespace {

GpuDocument test_doc(double freq = 900e6) {
  GpuDocument doc;
  doc.gpu = test_gpu();
  doc.power = test_power(freq);
  doc.power.core_voltage = voltage_at(doc.power, freq);
  return doc;
}

/// Fitted store shared by the cases below (fit once, reuse).
const CoeffStore &fitted_store() {
  static const CoeffStore store = [] {
    const GpuDocument doc = test_doc();
    const SynthParams params{.seed = 404, .rows_per_group = 400, .noise_sigma = 0.02};
    const auto records = generate_synthetic_database(params, doc, default_synth_groups());
    return fit_from_records(records, doc).store;
  }();
  return store;
}

Workload attention_block(Precision p, bool fused) {
  Workload w;
  w.name = fused ? "attn-fused" : "attn-eager";
  const std::int64_t b = 8, h = 16, seq = 2048, d = 64;
  if (fused) {
    w.ops.push_back({OperatorSpec::make_flash_attention(p, b, h, seq, seq, d), 1, {}});
  } else {
    w.ops.push_back({OperatorSpec::make_gemm(p, b * h, seq, seq, d), 1, {}});
    w.ops.push_back({OperatorSpec::make_softmax(p, b * h * seq, seq), 1, {}});
    w.ops.push_back({OperatorSpec::make_gemm(p, b * h, seq, d, seq), 1, {}});
  }
  return w;
}

} // namespace

TEST_CASE("fit pipeline recovers the hidden coefficients from the synthetic database") {
  const CoeffStore &store = fitted_store();
  const GpuDocument doc = test_doc();
  CHECK(store.latency.size() == default_synth_groups().size());
  CHECK(store.power.size() == default_synth_groups().size());

  for (const SynthGroupSpec &spec : default_synth_groups()) {
    CAPTURE(spec.label);
    const TileConfig tile = synth_group_tile(spec, doc.gpu);
    OperatorSpec probe;
    probe.kind = spec.kind;
    probe.precision = spec.precision;
    const KernelGroupKey key = [&] {
      KernelGroupKey k;
      k.kind = spec.kind;
      k.precision = spec.precision;
      k.tb_tile = tile.tb_tile;
      if (spec.kind == OpKind::FlashAttention) k.tb_tile[2] = 0;
      if (is_reduction(spec.kind) || spec.kind == OpKind::Elementwise)
        k.tb_tile = {tile.tb_tile[0], 0, 0};
      k.pipeline_stages = tile.pipeline_stages;
      k.epilogue_via_shared = tile.epilogue_via_shared;
      return k;
    }();

    REQUIRE(store.latency.count(key) == 1);
    const CorrectionCoeffs &fit = store.latency.at(key).coeffs;
    const CorrectionCoeffs &truth = spec.latency_truth;
    const bool monolithic = is_reduction(spec.kind) || spec.kind == OpKind::Elementwise;
    if (!monolithic) {
      CHECK(std::abs(fit.lambda_p - truth.lambda_p) / truth.lambda_p < 0.05);
      CHECK(std::abs(fit.lambda_e - truth.lambda_e) / truth.lambda_e < 0.05);
    }
    CHECK(std::abs(fit.lambda_m - truth.lambda_m) / truth.lambda_m < 0.05);
    CHECK(std::abs(fit.epsilon - truth.epsilon) / truth.epsilon < 0.05);

    REQUIRE(store.power.count(key) == 1);
    const PowerCoeffs &pfit = store.power.at(key).coeffs;
    const double largest_truth =
        *std::max_element(spec.power_truth.c.begin(), spec.power_truth.c.end());
    for (int m = 0; m < kModuleCount; ++m) {
      const double truth_c = spec.power_truth.c[static_cast<size_t>(m)];
      CAPTURE(m);
      if (truth_c == 0.0) {
        // under noise a zero-truth coefficient may pick up crumbs; it must
        // stay immaterial next to the real ones
        CHECK(pfit.c[static_cast<size_t>(m)] < 0.05 * largest_truth);
      } else {
        CHECK(std::abs(pfit.c[static_cast<size_t>(m)] - truth_c) / truth_c < 0.05);
      }
    }
  }
}

TEST_CASE("noiseless fits recover the hidden coefficients exactly") {
  const GpuDocument doc = test_doc();
  const SynthParams params{.seed = 11, .rows_per_group = 150, .noise_sigma = 0.0};
  const auto records = generate_synthetic_database(params, doc, default_synth_groups());
  const CoeffStore store = fit_from_records(records, doc).store;
  const GroupReport grouped = group_records(records, ConfigPredictor{}, doc.gpu);
  REQUIRE(grouped.groups.size() == default_synth_groups().size());

  for (const SynthGroupSpec &spec : default_synth_groups()) {
    CAPTURE(spec.label);
    const TileConfig tile = synth_group_tile(spec, doc.gpu);
    OperatorSpec probe;
    probe.kind = spec.kind;
    probe.precision = spec.precision;
    KernelGroupKey key;
    key.kind = spec.kind;
    key.precision = spec.precision;
    key.tb_tile = tile.tb_tile;
    if (spec.kind == OpKind::FlashAttention) key.tb_tile[2] = 0;
    if (is_reduction(spec.kind) || spec.kind == OpKind::Elementwise)
      key.tb_tile = {tile.tb_tile[0], 0, 0};
    key.pipeline_stages = tile.pipeline_stages;
    key.epilogue_via_shared = tile.epilogue_via_shared;

    const CorrectionCoeffs &fit = store.latency.at(key).coeffs;
    const CorrectionCoeffs &truth = spec.latency_truth;
    const bool monolithic = is_reduction(spec.kind) || spec.kind == OpKind::Elementwise;
    if (!monolithic) {
      CHECK(fit.lambda_p == doctest::Approx(truth.lambda_p).epsilon(1e-9));
      CHECK(fit.lambda_e == doctest::Approx(truth.lambda_e).epsilon(1e-9));
    }
    CHECK(fit.lambda_m == doctest::Approx(truth.lambda_m).epsilon(1e-9));
    CHECK(fit.epsilon == doctest::Approx(truth.epsilon).epsilon(1e-9));

    const PowerCoeffs &pfit = store.power.at(key).coeffs;
    for (int m = 0; m < kModuleCount; ++m) {
      CAPTURE(m);
      const double truth_c = spec.power_truth.c[static_cast<size_t>(m)];
      if (truth_c == 0.0) {
        CHECK(pfit.c[static_cast<size_t>(m)] <= 1e-15);
      } else {
        CHECK(pfit.c[static_cast<size_t>(m)] == doctest::Approx(truth_c).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("coefficient store serialization round-trip") {
  const CoeffStore &store = fitted_store();
  const std::string text = store.to_json();
  const CoeffStore back = CoeffStore::from_json(text);
  CHECK(back.to_json() == text);

  // trained trees and details survive
  CHECK(back.predictor.has_tree(OpKind::Gemm, Precision::bf16));
  CHECK(back.predictor.tile_details().size() == store.predictor.tile_details().size());

  CHECK_THROWS_AS(CoeffStore::from_json("{}"), InputError);
  CHECK_THROWS_AS(CoeffStore::from_json("{\"format\":\"wattcast-store\",\"version\":99}"),
                  InputError);
}

TEST_CASE("store lookups: exact, nearest-tile fallback, and defaults") {
  const CoeffStore &store = fitted_store();

  KernelGroupKey exact;
  exact.kind = OpKind::Gemm;
  exact.precision = Precision::bf16;
  exact.tb_tile = {128, 128, 32};
  exact.pipeline_stages = 3;
  exact.epilogue_via_shared = true;
  CHECK(store.lookup_latency(exact).exact);

  KernelGroupKey near = exact;
  near.tb_tile = {128, 128, 64}; // unseen BK: nearest bf16 gemm group answers
  const auto fallback = store.lookup_latency(near);
  CHECK(!fallback.exact);
  CHECK(!fallback.defaulted);
  CHECK(!fallback.source_group.empty());

  KernelGroupKey alien = exact;
  alien.precision = Precision::fp32;
  alien.tb_tile = {999, 1, 1};
  const auto crossed = store.lookup_latency(alien); // fp32 gemm group exists
  CHECK(!crossed.defaulted);

  CoeffStore empty;
  const auto defaulted = empty.lookup_latency(exact);
  CHECK(defaulted.defaulted);
  CHECK(defaulted.coeffs.lambda_m == 1.0); // identity correction
  CHECK(empty.lookup_power(exact).defaulted);
}

TEST_CASE("workload accumulation identities") {
  const CoeffStore &store = fitted_store();
  const GpuDocument doc = test_doc();

  SUBCASE("repeat 2 doubles latency and energy, keeps average power") {
    Workload once;
    once.name = "one";
    once.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 1, 1024, 1024, 1024), 1, {}});
    Workload twice = once;
    twice.ops[0].repeat = 2;
    const WorkloadResult a = predict_workload(once, doc.gpu, doc.power, store);
    const WorkloadResult b = predict_workload(twice, doc.gpu, doc.power, store);
    CHECK(b.total_latency == doctest::Approx(2 * a.total_latency).epsilon(1e-12));
    CHECK(b.total_energy == doctest::Approx(2 * a.total_energy).epsilon(1e-12));
    CHECK(b.average_power == doctest::Approx(a.average_power).epsilon(1e-12));
  }
  SUBCASE("mixed workload lands strictly between the per-op powers") {
    Workload w;
    w.name = "mixed";
    w.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 4, 4096, 4096, 4096), 1, {}});
    w.ops.push_back({OperatorSpec::make_elementwise(Precision::bf16, 1 << 20, 1, 1, 2.0), 1, {}});
    const WorkloadResult r = predict_workload(w, doc.gpu, doc.power, store);
    const double p0 = r.per_op[0].result.total_power;
    const double p1 = r.per_op[1].result.total_power;
    REQUIRE(p0 != p1);
    CHECK(r.average_power > std::min(p0, p1));
    CHECK(r.average_power < std::max(p0, p1));
    // totals match the per-op sums exactly
    double lat = 0.0, energy = 0.0;
    for (const auto &op : r.per_op) {
      lat += op.result.latency;
      energy += op.result.energy;
    }
    CHECK(r.total_latency == doctest::Approx(lat).epsilon(1e-15));
    CHECK(r.total_energy == doctest::Approx(energy).epsilon(1e-15));
  }
  SUBCASE("per-op invariants: total = dynamic + idle, energy = power * latency") {
    Workload w = attention_block(Precision::bf16, false);
    const WorkloadResult r = predict_workload(w, doc.gpu, doc.power, store);
    for (const auto &op : r.per_op) {
      CHECK(op.result.total_power ==
            doctest::Approx(op.result.dynamic_power + op.result.idle_power));
      CHECK(op.result.energy == doctest::Approx(op.result.total_power * op.result.latency));
      for (double a : op.result.utilization.alpha) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
      }
    }
  }
}

TEST_CASE("prediction is deterministic and identical across execution policies") {
  const CoeffStore &store = fitted_store();
  const GpuDocument doc = test_doc();
  Workload w;
  w.name = "det";
  for (int i = 1; i <= 40; ++i) {
    w.ops.push_back(
        {OperatorSpec::make_gemm(Precision::bf16, 1, 128 * i, 2048, 1024), (i % 3) + 1, {}});
    w.ops.push_back({OperatorSpec::make_softmax(Precision::fp32, 512 * i, 2048), 1, {}});
  }
  EngineOptions serial;
  serial.parallel = false;
  EngineOptions parallel;
  parallel.parallel = true;

  const WorkloadResult a = predict_workload(w, doc.gpu, doc.power, store, serial);
  const WorkloadResult b = predict_workload(w, doc.gpu, doc.power, store, parallel);
  const WorkloadResult c = predict_workload(w, doc.gpu, doc.power, store, parallel);
  CHECK(a.total_latency == b.total_latency); // bit-identical
  CHECK(a.total_energy == b.total_energy);
  CHECK(b.total_latency == c.total_latency);
  CHECK(b.total_energy == c.total_energy);
  for (size_t i = 0; i < a.per_op.size(); ++i) {
    CHECK(a.per_op[i].result.latency == b.per_op[i].result.latency);
    CHECK(a.per_op[i].result.total_power == b.per_op[i].result.total_power);
  }
}

TEST_CASE("engine error paths") {
  const GpuDocument doc = test_doc();

  SUBCASE("missing coefficients fail unless defaults are allowed") {
    CoeffStore empty;
    Workload w;
    w.name = "needs-coeffs";
    w.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 1, 512, 512, 512), 1, {}});
    CHECK_THROWS_WITH_AS(predict_workload(w, doc.gpu, doc.power, empty),
                         doctest::Contains("operator 0"), InputError);
    EngineOptions lax;
    lax.allow_default_coeffs = true;
    const WorkloadResult r = predict_workload(w, doc.gpu, doc.power, empty, lax);
    CHECK(r.coverage.latency_default == 1);
    CHECK(r.per_op[0].result.dynamic_power == 0.0); // zero C: idle only
    CHECK(r.per_op[0].result.total_power == doctest::Approx(r.per_op[0].result.idle_power));
  }
  SUBCASE("empty workloads are rejected") {
    Workload w;
    w.name = "empty";
    CHECK_THROWS_AS(predict_workload(w, doc.gpu, doc.power, fitted_store()), InputError);
  }
}

TEST_CASE("launch overhead adds per-operator latency") {
  const CoeffStore &store = fitted_store();
  const GpuDocument doc = test_doc();
  Workload w;
  w.name = "overhead";
  w.ops.push_back({OperatorSpec::make_elementwise(Precision::fp32, 4096, 1, 1, 1.0), 10, {}});
  EngineOptions with;
  with.launch_overhead_s = 5e-6;
  const WorkloadResult base = predict_workload(w, doc.gpu, doc.power, store);
  const WorkloadResult padded = predict_workload(w, doc.gpu, doc.power, store, with);
  CHECK(padded.total_latency ==
        doctest::Approx(base.total_latency + 10 * 5e-6).epsilon(1e-12));
}

TEST_CASE("dvfs exploration") {
  const CoeffStore &store = fitted_store();
  const GpuDocument doc = test_doc();
  Workload w;
  w.name = "dvfs";
  w.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 4, 4096, 4096, 4096), 1, {}});

  SUBCASE("the training point reproduces the base prediction") {
    const WorkloadResult base = predict_workload(w, doc.gpu, doc.power, store);
    const auto points = explore_dvfs(w, doc, store, {doc.power.core_freq});
    REQUIRE(points.size() == 1);
    CHECK(points[0].result.total_latency == doctest::Approx(base.total_latency).epsilon(1e-12));
    CHECK(points[0].result.average_power == doctest::Approx(base.average_power).epsilon(1e-12));
  }
  SUBCASE("dynamic power rises with frequency at fixed voltage") {
    const auto points =
        explore_dvfs(w, doc, store, {510e6, 810e6, 1110e6, 1410e6}, /*voltage=*/1.0);
    for (size_t i = 1; i < points.size(); ++i) {
      const double prev = points[i - 1].result.per_op[0].result.dynamic_power;
      const double cur = points[i].result.per_op[0].result.dynamic_power;
      CHECK(cur >= prev);
    }
  }
  SUBCASE("compute-bound kernels keep roughly flat dynamic energy at fixed voltage") {
    // huge K makes the tensor pipe dominate end to end
    Workload cb;
    cb.name = "compute-bound";
    cb.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 1, 2048, 2048, 65536), 1, {}});
    const auto points =
        explore_dvfs(cb, doc, store, {510e6, 810e6, 1110e6, 1410e6}, /*voltage=*/1.0);
    std::vector<double> dyn_energy;
    for (const auto &p : points)
      dyn_energy.push_back(p.result.per_op[0].result.dynamic_power *
                           p.result.per_op[0].result.latency);
    const auto [lo, hi] = std::minmax_element(dyn_energy.begin(), dyn_energy.end());
    CHECK(*hi / *lo < 1.10);
  }
  SUBCASE("voltage follows the V(f) curve when not overridden") {
    const auto points = explore_dvfs(w, doc, store, {510e6, 1410e6});
    CHECK(points[0].core_voltage == doctest::Approx(0.70));
    CHECK(points[1].core_voltage == doctest::Approx(1.00));
  }
}

TEST_CASE("architecture exploration") {
  const CoeffStore &store = fitted_store();
  const GpuDocument base = test_doc();
  Workload w;
  w.name = "arch";
  w.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 8, 8192, 8192, 8192), 1, {}});

  SUBCASE("doubling SM count roughly halves a compute-bound workload") {
    GpuDocument wide = base;
    wide.gpu.name = "test-a100-2x";
    wide.gpu.num_sms *= 2;
    wide.gpu.tensor_core_flops[Precision::bf16] *= 2; // per-SM throughput held fixed
    wide.gpu.cuda_core_flops[Precision::bf16] *= 2;
    wide.gpu.cuda_core_flops[Precision::fp32] *= 2;
    wide.gpu.tensor_core_flops[Precision::fp32] *= 2;
    wide.gpu.sfu_ops *= 2;
    wide.gpu.l2_bandwidth *= 2;
    wide.gpu.dram_bandwidth *= 2;
    wide.gpu.shared_bandwidth_per_sm = base.gpu.shared_bandwidth_per_sm;
    const WorkloadResult a = explore_arch(w, base, store);
    const WorkloadResult b = explore_arch(w, wide, store);
    // wave quantization keeps this from being exact
    CHECK(b.total_latency < 0.55 * a.total_latency);
    CHECK(b.total_latency > 0.45 * a.total_latency);
  }
  SUBCASE("more bandwidth never hurts") {
    GpuDocument sxm = base;
    sxm.gpu.name = "test-a100-sxm";
    sxm.gpu.dram_bandwidth = 2038e9;
    for (const auto &probe :
         {OperatorSpec::make_gemm(Precision::bf16, 1, 512, 8192, 512),
          OperatorSpec::make_softmax(Precision::fp32, 8192, 4096),
          OperatorSpec::make_elementwise(Precision::bf16, 1 << 22, 2, 1, 1.0)}) {
      Workload probe_w;
      probe_w.name = "probe";
      probe_w.ops.push_back({probe, 1, {}});
      const double before = explore_arch(probe_w, base, store).total_latency;
      const double after = explore_arch(probe_w, sxm, store).total_latency;
      CHECK(after <= before);
    }
  }
  SUBCASE("dram energy scale multiplies only the DRAM term") {
    GpuDocument gddr = base;
    gddr.power.dram_energy_scale = 1.4;
    Workload mem;
    mem.name = "mem";
    mem.ops.push_back({OperatorSpec::make_elementwise(Precision::bf16, 1 << 24, 2, 1, 1.0), 1, {}});
    const WorkloadResult a = explore_arch(mem, base, store);
    const WorkloadResult b = explore_arch(mem, gddr, store);
    CHECK(b.per_op[0].result.dynamic_power > a.per_op[0].result.dynamic_power);
    CHECK(b.total_latency == doctest::Approx(a.total_latency).epsilon(1e-12));
  }
}

TEST_CASE("variant comparison") {
  const CoeffStore &store = fitted_store();
  const GpuDocument doc = test_doc();

  SUBCASE("identical workloads compare at exactly 1.0") {
    const Workload w = attention_block(Precision::bf16, false);
    const ComparisonReport r = compare_variants(w, w, doc, store);
    CHECK(r.speedup == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.energy_ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("bf16 beats fp32 on a GEMM-dominated workload") {
    Workload fp32;
    fp32.name = "fp32";
    fp32.ops.push_back({OperatorSpec::make_gemm(Precision::fp32, 8, 4096, 4096, 4096), 4, {}});
    Workload bf16;
    bf16.name = "bf16";
    bf16.ops.push_back({OperatorSpec::make_gemm(Precision::bf16, 8, 4096, 4096, 4096), 4, {}});
    const ComparisonReport r = compare_variants(fp32, bf16, doc, store);
    CHECK(r.speedup > 1.0);
  }
  SUBCASE("fused attention moves less DRAM traffic than the eager chain") {
    const GpuConfig gpu = test_gpu();
    const CoeffStore &s = fitted_store();
    auto total_dram = [&](const Workload &w) {
      std::uint64_t bytes = 0;
      for (const auto &entry : w.ops) {
        const TilePrediction p = s.predictor.predict(entry.op, gpu);
        const TrafficBreakdown t = traffic(entry.op, p.tile);
        bytes += (t.dram_load + t.dram_store) * static_cast<std::uint64_t>(entry.repeat);
      }
      return bytes;
    };
    const std::uint64_t eager = total_dram(attention_block(Precision::bf16, false));
    const std::uint64_t fused = total_dram(attention_block(Precision::bf16, true));
    CHECK(fused < eager);
    // and the model predicts the fusion speedup
    const ComparisonReport r = compare_variants(attention_block(Precision::bf16, false),
                                                attention_block(Precision::bf16, true), doc, store);
    CHECK(r.speedup > 1.0);
  }
}
