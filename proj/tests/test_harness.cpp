#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "uadc/harness.hpp"
#include "uadc/report_io.hpp"
#include "uadc/validation.hpp"

using namespace uadc;

namespace {

ExperimentSpec psd_spec(ExperimentKind kind, std::vector<PsdKind> kinds) {
  ExperimentSpec spec;
  spec.kind = kind;
  spec.psds.clear();
  for (PsdKind k : kinds) {
    PsdSection s;
    s.kind = k;
    spec.psds.push_back(s);
  }
  return spec;
}

double cell(const std::vector<Cell>& row, std::size_t i) { return std::get<double>(row[i]); }
const std::string& text(const std::vector<Cell>& row, std::size_t i) {
  return std::get<std::string>(row[i]);
}

}  // namespace

TEST_CASE("bit sweep on the rectangular PSD") {
  const Table t = sweep_bits(psd_spec(ExperimentKind::sweep_bits, {PsdKind::rectangular}));
  REQUIRE(t.rows.size() == 24);
  std::map<double, std::vector<double>> curves;
  for (const auto& row : t.rows) {
    CHECK(text(row, 4) == "theory");
    CHECK(text(row, 9) == "ok");
    curves[cell(row, 1)].push_back(cell(row, 5));
    if (cell(row, 1) == 1.0 && cell(row, 2) == 3.0) {
      CHECK(cell(row, 5) == doctest::Approx(0.094577).scale(0.0).epsilon(1e-5));
    }
  }
  for (const auto& [f_s, curve] : curves) {
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] < curve[i - 1]);
  }
  for (std::size_t i = 0; i < 8; ++i) CHECK(curves[2.0][i] < curves[1.0][i]);
}

TEST_CASE("infeasible quantizer settings become flagged rows") {
  ExperimentSpec spec = psd_spec(ExperimentKind::sweep_bits, {PsdKind::rectangular});
  spec.bits = {1, 2};
  spec.fs_ratios = {1.0};
  spec.eta = 3.0;  // 2 * 9 / (3 * 4) > 1 at b = 1
  const Table t = sweep_bits(spec);
  REQUIRE(t.rows.size() == 2);
  CHECK(text(t.rows[0], 9).rfind("invalid", 0) == 0);
  CHECK(std::holds_alternative<std::string>(t.rows[0][5]));
  CHECK(text(t.rows[1], 9) == "ok");
}

TEST_CASE("bit sweep with simulation adds dithered and non-dithered rows") {
  ExperimentSpec spec = psd_spec(ExperimentKind::sweep_bits, {PsdKind::rectangular});
  spec.bits = {3};
  spec.fs_ratios = {1.0};
  spec.simulation.enabled = true;
  spec.simulation.trials = 4;
  spec.simulation.block_samples = 512;
  const Table t = sweep_bits(spec);
  REQUIRE(t.rows.size() == 3);
  CHECK(text(t.rows[1], 4) == "dithered");
  CHECK(text(t.rows[2], 4) == "non_dithered");
  CHECK(cell(t.rows[1], 6) > 0.0);
  spec.bits = {2.5};
  CHECK_THROWS_AS(sweep_bits(spec), std::invalid_argument);
}

TEST_CASE("rate-budget sweep: rectangular curves coincide") {
  const Table t =
      sweep_fs_at_rate(psd_spec(ExperimentKind::sweep_fs_at_rate, {PsdKind::rectangular}));
  REQUIRE(t.rows.size() == 2 * 61);
  for (std::size_t i = 0; i < t.rows.size(); i += 2) {
    const auto& prop = t.rows[i];
    const auto& pcm = t.rows[i + 1];
    CHECK(text(prop, 4) == "proposed");
    CHECK(text(pcm, 4) == "pcm");
    CHECK(std::abs(cell(prop, 6) - cell(pcm, 6)) <= 1e-9 * cell(prop, 6));
  }
  // Grid endpoints and the integer-b markers at b = 5, 4, 3.
  CHECK(cell(t.rows.front(), 1) == doctest::Approx(0.75));
  CHECK(cell(t.rows.back(), 1) == doctest::Approx(1.5));
  int markers = 0;
  for (const auto& row : t.rows) markers += std::get<long long>(row[5]) == 1 ? 1 : 0;
  CHECK(markers == 2 * 3);
}

TEST_CASE("rate-budget sweep: water filling wins below Nyquist on non-flat PSDs") {
  for (PsdKind kind : {PsdKind::triangular, PsdKind::gaussian3db}) {
    const Table t = sweep_fs_at_rate(psd_spec(ExperimentKind::sweep_fs_at_rate, {kind}));
    double best_prop = 1e9;
    double best_pcm = 1e9;
    double arg = 0.0;
    for (const auto& row : t.rows) {
      const double v = cell(row, 6);
      if (text(row, 4) == "proposed") {
        if (v < best_prop) {
          best_prop = v;
          arg = cell(row, 1);
        }
      } else {
        best_pcm = std::min(best_pcm, v);
      }
    }
    CHECK(best_prop <= best_pcm);
    CHECK(arg < 1.0);
  }
}

TEST_CASE("optimal sampling rate search") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const PsdModel tri = make_unit_psd(PsdKind::triangular, 1.0);
  for (double rate : {2.0, 3.0, 5.0}) {
    const FrSearch s = search_fr(rect, rate, 1024);
    CHECK(s.f_r == doctest::Approx(1.0).scale(0.0).epsilon(1e-3));
  }
  for (const PsdModel* psd : {&rect, &tri}) {
    for (double rate : {0.5, 1.0, 3.0}) {
      const FrSearch s = search_fr(*psd, rate, 1024);
      REQUIRE(s.coarse_grid.size() == 300);
      CHECK(s.coarse_grid.back() == doctest::Approx(1.5));
      for (double v : s.coarse_values) CHECK(s.objective <= v);
      CHECK(s.objective == rate_objective(*psd, rate, s.f_r, 1024));
    }
  }
  CHECK(search_fr(tri, 0.5, 1024).f_r < 1.0);
  CHECK(std::isinf(rate_objective(rect, 0.5, 1.0, 256)));
  CHECK_THROWS_AS(search_fr(rect, 0.0), std::invalid_argument);
}

TEST_CASE("plateaus resolve to the smallest sampling rate") {
  // A rate so large that quantization noise underflows: above Nyquist every
  // rate gives zero error, so the smallest minimizer is f_nyq itself.
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const FrSearch s = search_fr(rect, 5000.0, 256);
  CHECK(s.objective == 0.0);
  CHECK(s.f_r == doctest::Approx(1.0).scale(0.0).epsilon(1e-3));
}

TEST_CASE("sweeps are pure functions of the spec") {
  ExperimentSpec spec = psd_spec(ExperimentKind::find_fr_vs_rate, {PsdKind::gaussian3db});
  spec.rates = {0.5, 2.0};
  spec.grid_size = 512;
  CHECK(to_csv(find_fr_vs_rate(spec)) == to_csv(find_fr_vs_rate(spec)));
}

TEST_CASE("CSV tables round-trip through text") {
  ExperimentSpec spec = psd_spec(ExperimentKind::sweep_bits, {PsdKind::triangular});
  spec.eta = 3.0;
  const Table t = sweep_bits(spec);
  const std::string csv = to_csv(t);
  const Table back = parse_csv(csv);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  CHECK(to_csv(back) == csv);
  CHECK(format_number(0.1 + 0.2) == "0.3");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");

  const auto dir = std::filesystem::temp_directory_path() / "uadc_csv_test";
  write_csv(t, dir / "t.csv");
  CHECK(to_csv(read_csv(dir / "t.csv")) == csv);
  std::filesystem::remove_all(dir);

  Table quoted{{"a", "b"}, {{std::string("x,y"), 1.5}}};
  const Table q = parse_csv(to_csv(quoted));
  CHECK(std::get<std::string>(q.rows[0][0]) == "x,y");
}

TEST_CASE("experiment manifests") {
  const Json doc = Json::parse(R"({
    "experiment": "sweep_fs_at_rate",
    "psds": ["triangular", {"kind": "tabulated", "f_nyq": 2.0, "table": [[0.0, 1.0], [1.0, 0.0]], "name": "ramp"}, "bimodal"],
    "adc": {"f_s": 0.8, "bits": 4, "eta": 3.0},
    "ranges": {"rate": 2.5, "fs_min": 0.8, "fs_max": 1.2, "fs_step": 0.1},
    "simulation": {"enabled": false, "trials": 7, "block_samples": 256},
    "grid_size": 1024, "seed": 99, "output": "results"
  })");
  const ExperimentSpec spec = experiment_from_json(doc);
  CHECK(spec.kind == ExperimentKind::sweep_fs_at_rate);
  REQUIRE(spec.psds.size() == 3);
  CHECK(spec.psds[1].label() == "ramp");
  CHECK(spec.psds[1].build().power() == doctest::Approx(1.0));
  CHECK(spec.psds[1].build().f_nyq() == 2.0);
  CHECK(spec.psds[2].label() == "bimodal");
  CHECK(spec.f_s == 0.8);
  CHECK(spec.eta == 3.0);
  CHECK(spec.rate == 2.5);
  CHECK(spec.simulation.trials == 7);
  CHECK(spec.seed == 99);
  CHECK(spec.output == "results");
  CHECK(spec.adc_for(1.0, 3.0).eta == 3.0);
  CHECK(ExperimentSpec{}.adc_for(1.0, 3.0).eta == 2.5);

  CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"sede": 1})")), std::invalid_argument);
  CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"adc": {"bitz": 1}})")), std::invalid_argument);
  CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"experiment": "plot"})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"psd": {"kind": "tabulated"}})")),
                  std::invalid_argument);
}

TEST_CASE("spec validation rejects empty ranges and non-positive rates") {
  ExperimentSpec spec;
  spec.bits.clear();
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = ExperimentSpec{};
  spec.kind = ExperimentKind::sweep_fs_at_rate;
  spec.rate = 0.0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec = ExperimentSpec{};
  spec.kind = ExperimentKind::find_fr_vs_rate;
  spec.rates = {1.0, -1.0};
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
  spec.rates.clear();
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("default output directory honours the environment") {
  ::unsetenv("UADC_OUTPUT_DIR");
  CHECK(default_output_dir() == std::filesystem::path("out"));
  ::setenv("UADC_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(default_output_dir() == std::filesystem::path("/tmp/elsewhere"));
  ::unsetenv("UADC_OUTPUT_DIR");
}

TEST_CASE("design document shape") {
  ExperimentSpec spec = psd_spec(ExperimentKind::single_design, {PsdKind::triangular});
  spec.grid_size = 64;
  const SingleDesign d = single_design(spec);
  const Json j = design_to_json(d.design, spec.psds.front().build(), d.theory);
  for (const char* key : {"config", "zeta", "grid", "h2", "g_re", "g_im", "tmse", "ntmse"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["grid"].size() == 64);
  CHECK(j["h2"].size() == 64);
  CHECK(j["g_im"][10].get<double>() == 0.0);
  CHECK(j["ntmse"].get<double>() == doctest::Approx(d.theory.ntmse));
  CHECK_FALSE(d.simulation.has_value());
}

TEST_CASE("corrupted water level fails the optimality spot check") {
  ValidationOptions o;
  o.grid_size = 512;
  std::map<std::string, Table> tables;
  CHECK(check_structure(o, tables).passed);
  o.zeta_scale = 1.1;
  CHECK_FALSE(check_structure(o, tables).passed);
}

TEST_CASE("fast criteria pass and are stable across seeds") {
  for (std::uint64_t seed : {1u, 2u}) {
    ValidationOptions o;
    o.seed = seed;
    std::map<std::string, Table> tables;
    CHECK(check_closed_form(o, tables).passed);
    CHECK(check_eq_consistency(o, tables).passed);
    CHECK(check_water_level(o, tables).passed);
    CHECK(check_pcm_comparison(o, tables).passed);
    CHECK(check_quantizer_stats(o, tables).passed);
  }
}
