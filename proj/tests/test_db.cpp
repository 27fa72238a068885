#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "support/test_gpu.hpp"
#include "wattcast/db.hpp"
#include "wattcast/errors.hpp"
#include "wattcast/synth.hpp"

using namespace wattcast;
using wattcast::testing::test_gpu;
using wattcast::testing::test_power;

#ifndef WATTCAST_FIXTURE_DIR
#define WATTCAST_FIXTURE_DIR "tests/fixtures"
#endif

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const char *stem) {
    path = (std::filesystem::temp_directory_path() / stem).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

GpuDocument test_doc() {
  GpuDocument doc;
  doc.gpu = test_gpu();
  doc.power = test_power(900e6);
  return doc;
}

OperatorSpec random_op(std::mt19937_64 &rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  const Precision p = pick(0, 1) ? Precision::bf16 : Precision::fp32;
  switch (pick(0, 4)) {
  case 0: return OperatorSpec::make_gemm(p, pick(1, 8), pick(1, 4096), pick(1, 4096), pick(1, 4096));
  case 1: return OperatorSpec::make_softmax(p, pick(1, 8192), pick(1, 8192));
  case 2: return OperatorSpec::make_layernorm(p, pick(1, 8192), pick(1, 8192));
  case 3:
    return OperatorSpec::make_elementwise(p, pick(1, 1 << 24), static_cast<int>(pick(0, 3)),
                                          static_cast<int>(pick(1, 2)),
                                          static_cast<double>(pick(0, 16)), pick(0, 1) == 1);
  default:
    return OperatorSpec::make_flash_attention(p, pick(1, 8), pick(1, 16), pick(1, 4096),
                                              pick(1, 4096), pick(16, 256));
  }
}

MeasurementRecord random_record(std::mt19937_64 &rng, std::int64_t id) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  MeasurementRecord r;
  r.id = id;
  r.gpu_name = pick(0, 1) ? "test-a100" : "gpu,with \"odd\" name";
  r.op = random_op(rng);
  switch (pick(0, 2)) {
  case 0: r.kernel_name = "ampere_bf16_s16816gemm_bf16_128x128_ldg8_f2f_stages_32x3_nn"; break;
  case 1: r.kernel_name = "void at::native::gelu_kernel<float>(float*, float const*)"; break;
  default: r.kernel_name = ""; break;
  }
  if (pick(0, 1)) r.grid = {pick(1, 1 << 20), 1, 1};
  if (pick(0, 1)) r.block_threads = static_cast<int>(32 * pick(1, 32));
  if (pick(0, 1)) r.concurrency = static_cast<int>(pick(1, 8));
  r.core_freq = 1e6 * static_cast<double>(pick(200, 2000));
  r.latency = std::pow(10.0, -6.0 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng));
  if (pick(0, 1)) {
    r.idle_power = 30.0 + static_cast<double>(pick(0, 40));
    r.power = *r.idle_power + static_cast<double>(pick(0, 300));
  }
  return r;
}

} // namespace

TEST_CASE("database header validation") {
  TempFile tmp("wattcast_db_header.csv");
  {
    std::ofstream out(tmp.path);
    out << "id,gpu,something\n1,2,3\n";
  }
  CHECK_THROWS_WITH_AS(load_database(tmp.path), doctest::Contains("malformed header"), InputError);
  {
    std::ofstream out(tmp.path);
    out << "# wattcast database v1\nnot,the,right,columns\n";
  }
  CHECK_THROWS_WITH_AS(load_database(tmp.path), doctest::Contains("column header"), InputError);
}

TEST_CASE("empty database and row-level rejection") {
  TempFile tmp("wattcast_db_rows.csv");
  {
    std::ofstream out(tmp.path);
    out << "# wattcast database v1\n"
        << "id,gpu,kind,precision,shape,kernel_name,grid,block,concurrency,core_freq_hz,"
           "latency_s,power_w,idle_power_w\n";
  }
  CHECK(load_database(tmp.path).records.empty());

  {
    std::ofstream out(tmp.path, std::ios::app);
    out << "1,a100,gemm,bf16,gemm:1.64.64.64,,,,,900000000,-2e-6,,\n";  // latency <= 0
    out << "2,a100,gemm,bf16,gemm:1.64.64.64,,,,,900000000,2e-6,,\n";   // fine
    out << "3,a100,gemm,bf16,gemm:1.64.64.64,,,,,900000000,2e-6,30,40\n"; // power < idle
  }
  const LoadReport report = load_database(tmp.path);
  CHECK(report.accepted == 1);
  CHECK(report.rejected == 2);
  REQUIRE(report.diagnostics.size() == 2);
  CHECK(report.diagnostics[0].find(":3:") != std::string::npos); // line numbers
  CHECK_THROWS_AS(load_database(tmp.path, /*strict=*/true), InputError);
}

TEST_CASE("round-trip identity over 1000 random records") {
  std::mt19937_64 rng(123);
  std::vector<MeasurementRecord> records;
  for (int i = 0; i < 1000; ++i) records.push_back(random_record(rng, i + 1));

  TempFile tmp("wattcast_db_roundtrip.csv");
  save_database(tmp.path, records);
  const LoadReport report = load_database(tmp.path, /*strict=*/true);
  REQUIRE(report.records.size() == records.size());
  CHECK(report.rejected == 0);
  for (size_t i = 0; i < records.size(); ++i) {
    const MeasurementRecord &a = records[i];
    const MeasurementRecord &b = report.records[i];
    CHECK(a.id == b.id);
    CHECK(a.gpu_name == b.gpu_name);
    CHECK(a.kernel_name == b.kernel_name);
    CHECK(a.op.kind == b.op.kind);
    CHECK(a.op.precision == b.op.precision);
    CHECK(encode_shape(a.op) == encode_shape(b.op));
    CHECK(a.grid == b.grid);
    CHECK(a.block_threads == b.block_threads);
    CHECK(a.concurrency == b.concurrency);
    CHECK(a.core_freq == b.core_freq);
    CHECK(a.latency == b.latency);
    CHECK(a.power == b.power);
    CHECK(a.idle_power == b.idle_power);
  }
}

TEST_CASE("grouping is a partition") {
  const GpuDocument doc = test_doc();
  const SynthParams params{.seed = 7, .rows_per_group = 30, .noise_sigma = 0.02};
  const std::vector<MeasurementRecord> records =
      generate_synthetic_database(params, doc, default_synth_groups());
  const ConfigPredictor empty;
  const GroupReport report = group_records(records, empty, doc.gpu);

  // total: every record is in exactly one group
  size_t counted = 0;
  std::set<const MeasurementRecord *> seen;
  for (const auto &[key, group] : report.groups) {
    counted += group.records.size();
    for (const MeasurementRecord *r : group.records) CHECK(seen.insert(r).second);
    // every member re-keys to its group
    for (size_t i = 0; i < group.records.size(); ++i)
      CHECK(group_key(group.records[i]->op, group.tiles[i]) == key);
  }
  CHECK(counted == records.size());
  // the nine synthetic groups stay distinct
  CHECK(report.groups.size() == default_synth_groups().size());
}

TEST_CASE("grouping the shipped fixture database is stable") {
  const LoadReport report =
      load_database(std::string(WATTCAST_FIXTURE_DIR) + "/sample_db.csv", /*strict=*/true);
  CHECK(report.accepted == 40);
  const ConfigPredictor empty;
  const GroupReport groups = group_records(report.records, empty, test_gpu());
  CHECK(groups.groups.size() == 10);
}

TEST_CASE("synthetic database generation") {
  const GpuDocument doc = test_doc();

  SUBCASE("deterministic for a fixed seed") {
    const SynthParams params{.seed = 42, .rows_per_group = 10};
    const auto a = generate_synthetic_database(params, doc, default_synth_groups());
    const auto b = generate_synthetic_database(params, doc, default_synth_groups());
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].latency == b[i].latency);
      CHECK(a[i].power == b[i].power);
      CHECK(encode_shape(a[i].op) == encode_shape(b[i].op));
    }
  }
  SUBCASE("different seeds give different shapes") {
    const auto a = generate_synthetic_database({.seed = 1, .rows_per_group = 10}, doc,
                                               default_synth_groups());
    const auto b = generate_synthetic_database({.seed = 2, .rows_per_group = 10}, doc,
                                               default_synth_groups());
    int different = 0;
    for (size_t i = 0; i < a.size(); ++i)
      different += encode_shape(a[i].op) != encode_shape(b[i].op);
    CHECK(different > static_cast<int>(a.size()) / 2);
  }
  SUBCASE("noise level matches the configured sigma") {
    // same seed with and without noise pairs each row with its clean value
    SynthParams noisy{.seed = 99, .rows_per_group = 1200, .noise_sigma = 0.02};
    SynthParams clean = noisy;
    clean.noise_sigma = 0.0;
    const std::vector<SynthGroupSpec> groups = {default_synth_groups()[0]};
    const auto with_noise = generate_synthetic_database(noisy, doc, groups);
    const auto without = generate_synthetic_database(clean, doc, groups);
    REQUIRE(with_noise.size() == without.size());
    double mean_dev = 0.0;
    for (size_t i = 0; i < with_noise.size(); ++i)
      mean_dev += std::abs(with_noise[i].latency / without[i].latency - 1.0);
    mean_dev /= static_cast<double>(with_noise.size());
    // E|z| * sigma = sqrt(2/pi) * 0.02 ~ 0.01596
    CHECK(mean_dev == doctest::Approx(0.01596).epsilon(0.15));
  }
  SUBCASE("records de-noise back to the analytic model at sigma 0") {
    const SynthParams params{.seed = 5, .rows_per_group = 8, .noise_sigma = 0.0};
    const auto records = generate_synthetic_database(params, doc, default_synth_groups());
    for (const auto &r : records) {
      CHECK(r.latency > 0);
      REQUIRE(r.power.has_value());
      REQUIRE(r.idle_power.has_value());
      CHECK(*r.power >= *r.idle_power);
    }
  }
}

TEST_CASE("split utility is deterministic and exhaustive") {
  std::mt19937_64 rng(11);
  std::vector<MeasurementRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back(random_record(rng, i + 1));
  const auto [train_a, held_a] = split_database(records, 0.25, 77);
  const auto [train_b, held_b] = split_database(records, 0.25, 77);
  CHECK(train_a.size() == 75);
  CHECK(held_a.size() == 25);
  REQUIRE(train_b.size() == train_a.size());
  for (size_t i = 0; i < train_a.size(); ++i) CHECK(train_a[i].id == train_b[i].id);
  CHECK_THROWS_AS(split_database(records, 1.5, 1), InputError);
}
