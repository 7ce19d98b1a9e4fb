#include "cegmix/simlab.hpp"

#include "cegmix/ahc.hpp"
#include "cegmix/metrics.hpp"
#include "cegmix/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

namespace cegmix {
namespace {

constexpr const char* kVersion = "0.1.0";

constexpr double kProbLo = 0.1, kProbHi = 0.9;
constexpr double kShapeLo = 0.5, kShapeHi = 4.0;

std::string family_name(Family f) {
  return f == Family::Binomial ? "binomial" : "weibull";
}

Family family_from_name(const std::string& s) {
  if (s == "binomial") return Family::Binomial;
  if (s == "weibull" || s == "weibull-known-shape") return Family::Weibull;
  throw std::runtime_error("unknown family '" + s + "'");
}

// Uniform weak composition of n into k nonnegative parts via a uniformly
// chosen bar set (Floyd's distinct-sampling loop keeps it draw-count bounded).
std::vector<int> uniform_composition(int n, int k, Rng& rng) {
  if (k == 1) return {n};
  const int total = n + k - 1;
  std::vector<int> bars;
  bars.reserve(static_cast<std::size_t>(k - 1));
  for (int j = total - (k - 1); j < total; ++j) {
    const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
    if (std::find(bars.begin(), bars.end(), t) != bars.end())
      bars.push_back(j);
    else
      bars.push_back(t);
  }
  std::sort(bars.begin(), bars.end());
  std::vector<int> parts(static_cast<std::size_t>(k));
  int prev = -1;
  for (int i = 0; i + 1 < k; ++i) {
    parts[static_cast<std::size_t>(i)] = bars[static_cast<std::size_t>(i)] - prev - 1;
    prev = bars[static_cast<std::size_t>(i)];
  }
  parts[static_cast<std::size_t>(k - 1)] = total - 1 - prev;
  return parts;
}

// Stage labels with uniformly drawn sizes (each at least min) in shuffled
// unit order.
std::vector<int> stage_assignment(const ScenarioConfig& cfg, Rng& rng) {
  const int min = effective_min_units(cfg);
  const auto extra = uniform_composition(cfg.units - cfg.stages * min, cfg.stages, rng);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(cfg.units));
  for (int s = 0; s < cfg.stages; ++s)
    for (int i = 0; i < min + extra[static_cast<std::size_t>(s)]; ++i)
      labels.push_back(s);
  for (std::size_t i = labels.size() - 1; i > 0; --i)
    std::swap(labels[i], labels[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  return labels;
}

}  // namespace

int effective_min_units(const ScenarioConfig& cfg) {
  if (cfg.min_units_per_stage > 0) return cfg.min_units_per_stage;
  return cfg.family == Family::Binomial ? 2 : 5;
}

std::string scenario_label(const ScenarioConfig& cfg) {
  if (!cfg.id.empty()) return cfg.id;
  return family_name(cfg.family) + "-u" + std::to_string(cfg.units) + "-m" +
         std::to_string(cfg.stages);
}

void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.units < 1) throw InfeasibleConfig("scenario: units must be >= 1");
  if (cfg.stages < 1) throw InfeasibleConfig("scenario: stages must be >= 1");
  if (cfg.replicates < 1) throw InfeasibleConfig("scenario: replicates must be >= 1");
  if (!(cfg.separation > 0.0)) throw InfeasibleConfig("scenario: separation must be > 0");
  if (cfg.min_units_per_stage < 0)
    throw InfeasibleConfig("scenario: min_units_per_stage must be >= 0");
  const int min = effective_min_units(cfg);
  if (static_cast<long>(cfg.stages) * min > cfg.units)
    throw InfeasibleConfig("scenario: stages * min_units_per_stage exceeds units");
  if (cfg.family == Family::Binomial) {
    if (cfg.trials_per_situation < 1)
      throw InfeasibleConfig("scenario: trials_per_situation must be >= 1");
    if (cfg.stages > 1 &&
        (kProbHi - kProbLo) / (cfg.stages - 1.0) < cfg.separation)
      throw InfeasibleConfig("scenario: stage probabilities closer than separation");
  } else {
    if (cfg.obs_per_edge < 1) throw InfeasibleConfig("scenario: obs_per_edge must be >= 1");
    if (!(cfg.scale > 0.0)) throw InfeasibleConfig("scenario: scale must be > 0");
    if (cfg.stages > 1) {
      const double ratio =
          std::exp((std::log(kShapeHi) - std::log(kShapeLo)) / (cfg.stages - 1.0));
      if (kShapeLo * (ratio - 1.0) < cfg.separation)
        throw InfeasibleConfig("scenario: stage shapes closer than separation");
    }
  }
}

Eigen::VectorXd stage_probabilities(int stages) {
  if (stages == 1) return Eigen::VectorXd::Constant(1, 0.5 * (kProbLo + kProbHi));
  return Eigen::VectorXd::LinSpaced(stages, kProbLo, kProbHi);
}

Eigen::VectorXd stage_shapes(int stages) {
  if (stages == 1)
    return Eigen::VectorXd::Constant(1, std::sqrt(kShapeLo * kShapeHi));
  return Eigen::VectorXd::LinSpaced(stages, std::log(kShapeLo), std::log(kShapeHi))
      .array()
      .exp();
}

std::pair<TransitionData, Partition> generate_situation_dataset(const ScenarioConfig& cfg) {
  if (cfg.family != Family::Binomial)
    throw InfeasibleConfig("generate_situation_dataset: Binomial config required");
  validate_scenario(cfg);

  Rng rng(cfg.seed, 0x67656e);
  const auto labels = stage_assignment(cfg, rng);
  const Eigen::VectorXd theta = stage_probabilities(cfg.stages);

  TransitionData data;
  data.successes.resize(cfg.units);
  data.totals.resize(cfg.units);
  for (int i = 0; i < cfg.units; ++i) {
    data.ids.push_back("s" + std::to_string(i));
    data.totals[i] = cfg.trials_per_situation;
    data.successes[i] = static_cast<int>(
        rng.binomial(cfg.trials_per_situation, theta[labels[static_cast<std::size_t>(i)]]));
  }
  // Labels keep their stage indices (all stages are populated), so block s of
  // the truth matches stage_probabilities(stages)[s].
  return {std::move(data), Partition{labels, cfg.stages}};
}

std::pair<HoldingData, Partition> generate_edge_dataset(const ScenarioConfig& cfg) {
  if (cfg.family != Family::Weibull)
    throw InfeasibleConfig("generate_edge_dataset: Weibull config required");
  validate_scenario(cfg);

  Rng rng(cfg.seed, 0x67656e);
  const auto labels = stage_assignment(cfg, rng);
  const Eigen::VectorXd shapes = stage_shapes(cfg.stages);

  HoldingData data;
  for (int i = 0; i < cfg.units; ++i) {
    data.ids.push_back("e" + std::to_string(i));
    Eigen::VectorXd t(cfg.obs_per_edge);
    for (int j = 0; j < cfg.obs_per_edge; ++j)
      t[j] = rng.weibull(shapes[labels[static_cast<std::size_t>(i)]], cfg.scale);
    data.times.push_back(std::move(t));
  }
  return {std::move(data), Partition{labels, cfg.stages}};
}

namespace {

// Convergence proportions of the selected fit (last accepted trace entry).
std::pair<double, double> selected_convergence(const SearchResult& res) {
  std::size_t sel = 0;
  for (std::size_t i = 0; i < res.score_trace.size(); ++i)
    if (res.score_trace[i].accepted) sel = i;
  if (sel >= res.convergence.size()) return {-1.0, -1.0};
  return {res.convergence[sel].prop_below_101, res.convergence[sel].prop_below_110};
}

std::vector<TrialRecord> run_trial(const ExperimentConfig& config, std::size_t si,
                                   int rep) {
  ScenarioConfig cfg = config.scenarios[si];
  cfg.seed = substream(config.master_seed, static_cast<std::uint64_t>(si),
                       static_cast<std::uint64_t>(rep));
  const std::string label = scenario_label(config.scenarios[si]);

  SearchConfig sc;
  sc.k_max = config.k_max;
  sc.sampler = config.sampler;
  sc.sampler.seed = substream(cfg.seed, 0x666974);

  std::vector<TrialRecord> out;
  const auto push_error = [&](const std::string& method, const std::string& what) {
    TrialRecord rec;
    rec.scenario = label;
    rec.replicate = rep;
    rec.method = method;
    rec.error = what;
    out.push_back(std::move(rec));
  };

  if (cfg.family == Family::Binomial) {
    TransitionData data;
    Partition truth;
    try {
      std::tie(data, truth) = generate_situation_dataset(cfg);
    } catch (const std::exception& e) {
      if (config.run_ahc) push_error("ahc", e.what());
      if (config.run_mixture) push_error("mixture", e.what());
      return out;
    }
    if (config.run_ahc) {
      try {
        const AhcResult res = ahc_cluster(data, BetaPrior{});
        TrialRecord rec{label, rep, "ahc", res.seconds, res.partition.k,
                        nmi(res.partition, truth), rand_index(res.partition, truth)};
        out.push_back(std::move(rec));
      } catch (const std::exception& e) {
        push_error("ahc", e.what());
      }
    }
    if (config.run_mixture) {
      try {
        const SearchResult res = select_situation_clusters(data, {}, sc);
        TrialRecord rec{label, rep, "mixture", res.seconds, res.k_selected};
        const Partition pred = Partition::from_labels(res.allocation.labels);
        rec.nmi = nmi(pred, truth);
        rec.rand = rand_index(pred, truth);
        std::tie(rec.conv_prop_1_01, rec.conv_prop_1_10) = selected_convergence(res);
        out.push_back(std::move(rec));
      } catch (const std::exception& e) {
        push_error("mixture", e.what());
      }
    }
  } else {
    HoldingData data;
    Partition truth;
    try {
      std::tie(data, truth) = generate_edge_dataset(cfg);
    } catch (const std::exception& e) {
      if (config.run_mixture) push_error("mixture", e.what());
      return out;
    }
    if (config.run_mixture) {
      try {
        const SearchResult res = select_edge_clusters(data, cfg.scale, {}, sc);
        TrialRecord rec{label, rep, "mixture", res.seconds, res.k_selected};
        const Partition pred = Partition::from_labels(res.allocation.labels);
        rec.nmi = nmi(pred, truth);
        rec.rand = rand_index(pred, truth);
        std::tie(rec.conv_prop_1_01, rec.conv_prop_1_10) = selected_convergence(res);
        out.push_back(std::move(rec));
      } catch (const std::exception& e) {
        push_error("mixture", e.what());
      }
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.jobs < 1) throw std::invalid_argument("run_experiment: jobs must be >= 1");
  for (const auto& s : config.scenarios) validate_scenario(s);

  std::vector<std::pair<std::size_t, int>> units;  // (scenario index, replicate)
  for (std::size_t si = 0; si < config.scenarios.size(); ++si)
    for (int r = 0; r < config.scenarios[si].replicates; ++r) units.emplace_back(si, r);

  std::vector<std::vector<TrialRecord>> slots(units.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= units.size()) break;
      slots[i] = run_trial(config, units[i].first, units[i].second);
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(config.jobs), units.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  ExperimentResult result;
  for (auto& slot : slots)
    for (auto& rec : slot) result.trials.push_back(std::move(rec));
  return result;
}

namespace {

std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

void write_double(std::ostream& os, double v) {
  std::ostringstream tmp;
  tmp.precision(17);
  tmp << v;
  os << tmp.str();
}

struct SummaryRow {
  std::string scenario;
  int units = 0, stages = 0;
  long n = 0;
  double seconds = 0.0, k = 0.0, nmi = 0.0, rand = 0.0;
  double c101 = 0.0, c110 = 0.0;
};

SummaryRow summarize(const ScenarioConfig& cfg, const std::vector<TrialRecord>& trials,
                     const std::string& method) {
  SummaryRow row;
  row.scenario = scenario_label(cfg);
  row.units = cfg.units;
  row.stages = cfg.stages;
  for (const auto& t : trials) {
    if (t.scenario != row.scenario || t.method != method || !t.error.empty()) continue;
    ++row.n;
    row.seconds += t.seconds;
    row.k += t.k;
    row.nmi += t.nmi;
    row.rand += t.rand;
    row.c101 += std::max(0.0, t.conv_prop_1_01);
    row.c110 += std::max(0.0, t.conv_prop_1_10);
  }
  if (row.n > 0) {
    const double n = static_cast<double>(row.n);
    row.seconds /= n;
    row.k /= n;
    row.nmi /= n;
    row.rand /= n;
    row.c101 /= n;
    row.c110 /= n;
  }
  return row;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "scenario,units,stages,replicates,mean_seconds,mean_k,mean_nmi,mean_rand\n";
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.units << ',' << r.stages << ',' << r.n << ',';
    write_double(os, r.seconds);
    os << ',';
    write_double(os, r.k);
    os << ',';
    write_double(os, r.nmi);
    os << ',';
    write_double(os, r.rand);
    os << '\n';
  }
}

nlohmann::json scenario_json(const ScenarioConfig& s) {
  return {{"id", scenario_label(s)},
          {"family", family_name(s.family)},
          {"units", s.units},
          {"stages", s.stages},
          {"replicates", s.replicates},
          {"trials_per_situation", s.trials_per_situation},
          {"obs_per_edge", s.obs_per_edge},
          {"scale", s.scale},
          {"min_units_per_stage", s.min_units_per_stage},
          {"separation", s.separation},
          {"seed", s.seed}};
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig s;
  s.id = j.value("id", std::string{});
  s.family = family_from_name(j.value("family", std::string{"binomial"}));
  s.units = j.value("units", s.units);
  s.stages = j.value("stages", s.stages);
  s.replicates = j.value("replicates", s.replicates);
  s.trials_per_situation = j.value("trials_per_situation", s.trials_per_situation);
  s.obs_per_edge = j.value("obs_per_edge", s.obs_per_edge);
  s.scale = j.value("scale", s.scale);
  s.min_units_per_stage = j.value("min_units_per_stage", s.min_units_per_stage);
  s.separation = j.value("separation", s.separation);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace

void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "scenario,replicate,method,seconds,k,nmi,rand,conv_prop_1_01,conv_prop_1_10,error\n";
  for (const auto& t : trials) {
    os << csv_safe(t.scenario) << ',' << t.replicate << ',' << t.method << ',';
    write_double(os, t.seconds);
    os << ',' << t.k << ',';
    write_double(os, t.nmi);
    os << ',';
    write_double(os, t.rand);
    os << ',';
    if (t.conv_prop_1_01 >= 0.0) write_double(os, t.conv_prop_1_01);
    os << ',';
    if (t.conv_prop_1_10 >= 0.0) write_double(os, t.conv_prop_1_10);
    os << ',' << csv_safe(t.error) << '\n';
  }
}

std::vector<TrialRecord> read_trials_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty trials file " + path);
  std::vector<TrialRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (f.size() != 10) throw std::runtime_error("malformed trials row: " + line);
    TrialRecord t;
    t.scenario = f[0];
    t.replicate = std::stoi(f[1]);
    t.method = f[2];
    t.seconds = std::stod(f[3]);
    t.k = std::stoi(f[4]);
    t.nmi = std::stod(f[5]);
    t.rand = std::stod(f[6]);
    t.conv_prop_1_01 = f[7].empty() ? -1.0 : std::stod(f[7]);
    t.conv_prop_1_10 = f[8].empty() ? -1.0 : std::stod(f[8]);
    t.error = f[9];
    out.push_back(std::move(t));
  }
  return out;
}

void write_experiment_outputs(const std::string& dir, const ExperimentConfig& config,
                              const std::vector<TrialRecord>& trials) {
  std::filesystem::create_directories(dir);
  const auto in_dir = [&](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  write_trials_csv(in_dir("trials.csv"), trials);

  std::vector<SummaryRow> ahc_situations, mix_situations, mix_edges, conv;
  for (const auto& s : config.scenarios) {
    if (s.family == Family::Binomial) {
      ahc_situations.push_back(summarize(s, trials, "ahc"));
      mix_situations.push_back(summarize(s, trials, "mixture"));
    } else {
      mix_edges.push_back(summarize(s, trials, "mixture"));
    }
    conv.push_back(summarize(s, trials, "mixture"));
  }
  write_summary_csv(in_dir("summary_table1.csv"), ahc_situations);
  write_summary_csv(in_dir("summary_table2.csv"), mix_situations);
  write_summary_csv(in_dir("summary_table3.csv"), mix_edges);

  std::ofstream cs(in_dir("convergence.csv"));
  if (!cs) throw std::runtime_error("cannot write convergence.csv");
  cs << "scenario,units,stages,replicates,prop_below_1_01,prop_below_1_10\n";
  for (const auto& r : conv) {
    cs << r.scenario << ',' << r.units << ',' << r.stages << ',' << r.n << ',';
    write_double(cs, r.c101);
    cs << ',';
    write_double(cs, r.c110);
    cs << '\n';
  }

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["master_seed"] = config.master_seed;
  manifest["jobs"] = config.jobs;
  manifest["run_ahc"] = config.run_ahc;
  manifest["run_mixture"] = config.run_mixture;
  manifest["k_max"] = config.k_max;
  manifest["sampler"] = {{"chains", config.sampler.chains},
                         {"warmup", config.sampler.warmup},
                         {"samples", config.sampler.samples},
                         {"target_accept", config.sampler.target_accept},
                         {"traj_length", config.sampler.traj_length},
                         {"max_leapfrog", config.sampler.max_leapfrog}};
  manifest["scenarios"] = nlohmann::json::array();
  for (const auto& s : config.scenarios) manifest["scenarios"].push_back(scenario_json(s));
  std::ofstream ms(in_dir("manifest.json"));
  if (!ms) throw std::runtime_error("cannot write manifest.json");
  ms << manifest.dump(2) << '\n';
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  ExperimentConfig cfg;
  cfg.run_ahc = j.value("run_ahc", cfg.run_ahc);
  cfg.run_mixture = j.value("run_mixture", cfg.run_mixture);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.k_max = j.value("k_max", cfg.k_max);
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    cfg.sampler.chains = s.value("chains", cfg.sampler.chains);
    cfg.sampler.warmup = s.value("warmup", cfg.sampler.warmup);
    cfg.sampler.samples = s.value("samples", cfg.sampler.samples);
    cfg.sampler.target_accept = s.value("target_accept", cfg.sampler.target_accept);
    cfg.sampler.traj_length = s.value("traj_length", cfg.sampler.traj_length);
    cfg.sampler.max_leapfrog = s.value("max_leapfrog", cfg.sampler.max_leapfrog);
  }
  if (j.contains("scenarios"))
    for (const auto& s : j.at("scenarios")) cfg.scenarios.push_back(scenario_from_json(s));
  return cfg;
}

ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_experiment_config(buf.str());
}

}  // namespace cegmix
