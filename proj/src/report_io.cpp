#include "uadc/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uadc {

namespace {

void reject_unknown(const Json& obj, std::string_view section,
                    std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) {
    throw std::invalid_argument("config section '" + std::string(section) + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) {
      throw std::invalid_argument("unknown key '" + key + "' in config section '" +
                                  std::string(section) + "'");
    }
  }
}

template <typename T>
void read_if(const Json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

bool looks_numeric(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s == "nan") {
    out = std::nan("");
    return true;
  }
  if (s == "inf" || s == "-inf") {
    out = s[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  write_text(path, to_csv(table));
}

Table parse_csv(std::string_view text) {
  Table t;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool first_line = true;
  auto end_row = [&] {
    fields.push_back(std::move(field));
    field.clear();
    if (first_line) {
      t.header = std::move(fields);
      first_line = false;
    } else {
      std::vector<Cell> row;
      row.reserve(fields.size());
      for (auto& f : fields) {
        double v = 0.0;
        if (looks_numeric(f, v)) {
          row.emplace_back(v);
        } else {
          row.emplace_back(std::move(f));
        }
      }
      t.rows.push_back(std::move(row));
    }
    fields.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!field.empty() || !fields.empty()) end_row();
  return t;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

Json tmse_to_json(const TmseReport& report) {
  return Json{{"method", to_string(report.method)},
              {"f_s", report.adc.f_s},
              {"b", report.adc.bits},
              {"eta", report.adc.eta},
              {"f_nyq", report.f_nyq},
              {"sigma2", report.sigma2},
              {"tmse", report.tmse},
              {"ntmse", report.ntmse},
              {"extrapolated", report.extrapolated}};
}

Json design_to_json(const FilterDesign& design, const PsdModel& psd, const TmseReport& report) {
  const FoldedSpectrum& folded = design.folded;
  const std::vector<double> h2 = design.dominant_h2();
  Json grid = Json::array();
  Json source = Json::array();
  Json alias = Json::array();
  Json h2_json = Json::array();
  Json g_re = Json::array();
  Json g_im = Json::array();
  for (std::size_t i = 0; i < folded.size(); ++i) {
    grid.push_back(folded.frequency(i));
    source.push_back(folded.source_frequency(i));
    alias.push_back(folded.fold_index[i]);
    h2_json.push_back(h2[i]);
    const std::complex<double> g =
        design.g ? (*design.g)(folded.source_frequency(i)) : std::complex<double>{};
    g_re.push_back(g.real());
    g_im.push_back(g.imag());
  }
  const DistortionConstants c = distortion_constants(design.adc);
  Json config{{"psd", to_string(psd.kind())},
              {"f_nyq", psd.f_nyq()},
              {"f_s", design.adc.f_s},
              {"b", design.adc.bits},
              {"eta", design.adc.eta},
              {"kappa", c.kappa},
              {"kappa_bar", c.kappa_bar},
              {"grid_size", folded.size()}};
  // A non-finite level (no quantization noise) serializes as null.
  Json zeta = std::isfinite(design.zeta) ? Json(design.zeta) : Json(nullptr);
  return Json{{"config", std::move(config)},
              {"zeta", std::move(zeta)},
              {"grid", std::move(grid)},
              {"h2", std::move(h2_json)},
              {"g_re", std::move(g_re)},
              {"g_im", std::move(g_im)},
              {"tmse", report.tmse},
              {"ntmse", report.ntmse},
              {"alias", std::move(alias)},
              {"source_frequency", std::move(source)},
              {"signal_power", design.signal_power},
              {"prefilter", design.prefilter.name()}};
}

Json summary_to_json(const SimSummary& summary, const SimConfig& sim, double ntmse_theory,
                     bool include_trials) {
  Json out{{"f_s", sim.adc().f_s},
           {"b", sim.adc().bits},
           {"eta", sim.adc().eta},
           {"dithered", sim.dithered},
           {"seed", sim.seed},
           {"trials", summary.trials},
           {"block_samples", sim.block_samples},
           {"oversample", sim.dense_factor()},
           {"ntmse_theory", ntmse_theory},
           {"ntmse_sim", summary.ntmse},
           {"stderr", summary.stderr_ntmse},
           {"ci_low", summary.ci_low},
           {"ci_high", summary.ci_high},
           {"overload_frac", summary.overload_fraction},
           {"delta", summary.delta},
           {"error_autocorr", summary.error_autocorr},
           {"input_error_corr", summary.input_error_corr}};
  if (include_trials) {
    Json trials = Json::array();
    for (std::size_t t = 0; t < summary.per_trial.size(); ++t) {
      const TrialResult& r = summary.per_trial[t];
      trials.push_back(Json{{"trial", t},
                            {"empirical_tmse", r.empirical_tmse},
                            {"overload_frac", r.overload_fraction},
                            {"error_autocorr", r.error_autocorr},
                            {"input_error_corr", r.input_error_corr},
                            {"sample_signal_power", r.sample_signal_power}});
    }
    out["per_trial"] = std::move(trials);
  }
  return out;
}

Table simulation_table() {
  return Table{{"f_s", "b", "eta", "dithered", "ntmse_theory", "ntmse_sim", "stderr",
                "overload_frac"},
               {}};
}

void append_simulation_row(Table& table, const SimConfig& sim, const SimSummary& summary,
                           double ntmse_theory) {
  table.rows.push_back({sim.adc().f_s, sim.adc().bits, sim.adc().eta,
                        static_cast<long long>(sim.dithered ? 1 : 0), ntmse_theory, summary.ntmse,
                        summary.stderr_ntmse, summary.overload_fraction});
}

PsdSection psd_from_json(const Json& doc) {
  PsdSection p;
  if (doc.is_string()) {
    const auto kind = doc.get<std::string>();
    if (kind == "bimodal") {
      p.bimodal = true;
      p.kind = PsdKind::tabulated;
    } else {
      p.kind = parse_psd_kind(kind);
    }
    return p;
  }
  reject_unknown(doc, "psd", {"kind", "f_nyq", "table", "name"});
  const std::string kind = doc.value("kind", std::string("rectangular"));
  if (kind == "bimodal") {
    p.bimodal = true;
    p.kind = PsdKind::tabulated;
  } else {
    p.kind = parse_psd_kind(kind);
  }
  read_if(doc, "f_nyq", p.f_nyq);
  read_if(doc, "name", p.name);
  if (doc.contains("table")) {
    if (p.kind != PsdKind::tabulated || p.bimodal) {
      throw std::invalid_argument("psd table given for a non-tabulated kind");
    }
    for (const auto& knot : doc.at("table")) {
      if (!knot.is_array() || knot.size() != 2) {
        throw std::invalid_argument("psd table entries must be [frequency, density] pairs");
      }
      p.table.push_back({knot[0].get<double>(), knot[1].get<double>()});
    }
  } else if (p.kind == PsdKind::tabulated && !p.bimodal) {
    throw std::invalid_argument("tabulated psd needs a table");
  }
  return p;
}

ExperimentSpec experiment_from_json(const Json& doc) {
  reject_unknown(doc, "root",
                 {"experiment", "psd", "psds", "adc", "ranges", "simulation", "grid_size", "seed",
                  "output"});
  ExperimentSpec spec;
  if (doc.contains("experiment")) {
    spec.kind = parse_experiment_kind(doc.at("experiment").get<std::string>());
  }
  if (doc.contains("psd") && doc.contains("psds")) {
    throw std::invalid_argument("give either 'psd' or 'psds', not both");
  }
  if (doc.contains("psd")) spec.psds = {psd_from_json(doc.at("psd"))};
  if (doc.contains("psds")) {
    spec.psds.clear();
    for (const auto& p : doc.at("psds")) spec.psds.push_back(psd_from_json(p));
  }
  if (doc.contains("adc")) {
    const Json& adc = doc.at("adc");
    reject_unknown(adc, "adc", {"f_s", "bits", "eta"});
    read_if(adc, "f_s", spec.f_s);
    read_if(adc, "bits", spec.design_bits);
    read_if(adc, "eta", spec.eta);
  }
  if (doc.contains("ranges")) {
    const Json& r = doc.at("ranges");
    reject_unknown(r, "ranges", {"bits", "fs_ratios", "rate", "fs_min", "fs_max", "fs_step", "rates"});
    read_if(r, "bits", spec.bits);
    read_if(r, "fs_ratios", spec.fs_ratios);
    read_if(r, "rate", spec.rate);
    read_if(r, "fs_min", spec.fs_min);
    read_if(r, "fs_max", spec.fs_max);
    read_if(r, "fs_step", spec.fs_step);
    read_if(r, "rates", spec.rates);
  }
  if (doc.contains("simulation")) {
    const Json& s = doc.at("simulation");
    reject_unknown(s, "simulation", {"enabled", "trials", "block_samples", "oversample", "dithered"});
    read_if(s, "enabled", spec.simulation.enabled);
    read_if(s, "trials", spec.simulation.trials);
    read_if(s, "block_samples", spec.simulation.block_samples);
    read_if(s, "oversample", spec.simulation.oversample);
    read_if(s, "dithered", spec.dithered);
  }
  read_if(doc, "grid_size", spec.grid_size);
  read_if(doc, "seed", spec.seed);
  read_if(doc, "output", spec.output);
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return experiment_from_json(doc);
}

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("UADC_OUTPUT_DIR");
  if (env != nullptr && *env != '\0') return env;
  return "out";
}

}  // namespace uadc
