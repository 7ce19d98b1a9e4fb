#include "cegmix/ahc.hpp"
#include "cegmix/data.hpp"
#include "cegmix/event_tree.hpp"
#include "cegmix/metrics.hpp"
#include "cegmix/rng.hpp"
#include "cegmix/search.hpp"
#include "cegmix/simlab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Path "-" (or empty) means stdout.
void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

void emit(const json& doc, const std::string& path) { emit(doc.dump(2), path); }

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Accepts {"labels": [...]} or a bare array; labels are re-canonicalized, to
// which both metrics are invariant.
cegmix::Partition read_partition(const std::string& path) {
  const json doc = json::parse(slurp(path));
  const json& arr = doc.is_array() ? doc : doc.at("labels");
  return cegmix::Partition::from_labels(arr.get<std::vector<int>>());
}

cegmix::Family parse_family(const std::string& name) {
  if (name == "binomial") return cegmix::Family::Binomial;
  if (name == "weibull" || name == "weibull-known-shape") return cegmix::Family::Weibull;
  throw std::runtime_error("unknown family: " + name);
}

json search_result_json(const cegmix::SearchResult& res) {
  json trace = json::array();
  for (const auto& entry : res.score_trace) {
    trace.push_back({{"k", entry.k},
                     {"log_ml", entry.log_ml},
                     {"converged", entry.converged},
                     {"accepted", entry.accepted}});
  }
  json convergence = json::array();
  for (const auto& rep : res.convergence) {
    convergence.push_back({{"rhat", to_vector(rep.rhat)},
                           {"prop_below_1_01", rep.prop_below_101},
                           {"prop_below_1_10", rep.prop_below_110}});
  }
  json prob = json::array();
  for (Eigen::Index i = 0; i < res.allocation.prob.rows(); ++i) {
    prob.push_back(to_vector(res.allocation.prob.row(i).transpose()));
  }
  return json{{"k_selected", res.k_selected},
              {"labels", res.allocation.labels},
              {"prob", prob},
              {"weights", to_vector(res.params.weights)},
              {"components", to_vector(res.params.components)},
              {"score_trace", trace},
              {"convergence", convergence},
              {"seconds", res.seconds}};
}

// One CSV per chain on the constrained scale: k weights then k components.
void save_draws(const cegmix::PosteriorDraws& draws, const cegmix::MixtureSpec& spec,
                const std::string& prefix) {
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const std::string path = prefix + "_chain" + std::to_string(c + 1) + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iter";
    for (int j = 1; j <= 2 * spec.k; ++j) out << ",param_" << j;
    out << '\n';
    out.precision(17);
    const Eigen::MatrixXd& chain = draws.chains[c];
    for (Eigen::Index i = 0; i < chain.rows(); ++i) {
      const cegmix::MixtureParams params =
          cegmix::constrain(chain.row(i).transpose(), spec);
      out << (i + 1);
      for (Eigen::Index j = 0; j < params.weights.size(); ++j)
        out << ',' << params.weights[j];
      for (Eigen::Index j = 0; j < params.components.size(); ++j)
        out << ',' << params.components[j];
      out << '\n';
    }
  }
}

void add_simulate(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "simulate", "Draw one synthetic dataset and write it with its true staging");
  auto cfg = std::make_shared<cegmix::ScenarioConfig>();
  auto family = std::make_shared<std::string>("binomial");
  auto data_path = std::make_shared<std::string>();
  auto truth_path = std::make_shared<std::string>();
  cmd->add_option("--family", *family, "binomial or weibull")
      ->check(CLI::IsMember({"binomial", "weibull"}));
  cmd->add_option("--units", cfg->units, "situations or edges to simulate");
  cmd->add_option("--stages", cfg->stages, "number of true clusters");
  cmd->add_option("--trials", cfg->trials_per_situation, "Binomial trials per situation");
  cmd->add_option("--obs", cfg->obs_per_edge, "holding times per edge");
  cmd->add_option("--scale", cfg->scale, "known Weibull scale");
  cmd->add_option("--min-per-stage", cfg->min_units_per_stage,
                  "smallest stage size (0 = family default)");
  cmd->add_option("--seed", cfg->seed, "generator seed");
  cmd->add_option("--data", *data_path, "output dataset CSV")->required();
  cmd->add_option("--truth", *truth_path, "output truth JSON (\"-\" for stdout)")
      ->required();
  cmd->callback([cfg, family, data_path, truth_path] {
    cfg->family = parse_family(*family);
    cegmix::Partition truth;
    if (cfg->family == cegmix::Family::Binomial) {
      auto [data, part] = cegmix::generate_situation_dataset(*cfg);
      cegmix::write_transition_csv(data, *data_path);
      truth = std::move(part);
    } else {
      auto [data, part] = cegmix::generate_edge_dataset(*cfg);
      cegmix::write_holding_csv(data, *data_path);
      truth = std::move(part);
    }
    emit(json{{"labels", truth.labels}, {"k", truth.k}}, *truth_path);
  });
}

void add_fit_ahc(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "fit-ahc", "Greedy conjugate clustering of a dataset");
  auto data_path = std::make_shared<std::string>();
  auto family = std::make_shared<std::string>("binomial");
  auto prior_path = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  cmd->add_option("--data", *data_path, "dataset CSV")->required();
  cmd->add_option("--family", *family, "binomial or weibull-known-shape")
      ->check(CLI::IsMember({"binomial", "weibull-known-shape"}));
  cmd->add_option("--prior", *prior_path, "prior JSON (defaults when omitted)");
  cmd->add_option("--out", *out_path, "result JSON path (default stdout)");
  cmd->callback([data_path, family, prior_path, out_path] {
    const json prior =
        prior_path->empty() ? json::object() : json::parse(slurp(*prior_path));
    cegmix::AhcResult res;
    if (*family == "binomial") {
      cegmix::BetaPrior beta;
      beta.alpha = prior.value("alpha", beta.alpha);
      beta.beta = prior.value("beta", beta.beta);
      res = cegmix::ahc_cluster(cegmix::read_transition_csv(*data_path), beta);
    } else {
      cegmix::WeibullGammaPrior gamma;
      gamma.rate = prior.value("rate", gamma.rate);
      gamma.shape_hyper = prior.value("shape_hyper", gamma.shape_hyper);
      gamma.known_shape = prior.value("known_shape", gamma.known_shape);
      res = cegmix::ahc_cluster(cegmix::read_holding_csv(*data_path), gamma);
    }
    emit(json{{"labels", res.partition.labels},
              {"k", res.partition.k},
              {"log_score", res.log_score},
              {"seconds", res.seconds}},
         *out_path);
  });
}

void add_fit_mixture(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "fit-mixture", "Mixture component-count search with bridge-sampled scores");
  auto data_path = std::make_shared<std::string>();
  auto family = std::make_shared<std::string>("binomial");
  auto scale = std::make_shared<double>(1.0);
  auto config = std::make_shared<cegmix::SearchConfig>();
  auto draws_prefix = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  cmd->add_option("--data", *data_path, "dataset CSV")->required();
  cmd->add_option("--family", *family, "binomial or weibull")
      ->check(CLI::IsMember({"binomial", "weibull"}));
  cmd->add_option("--scale", *scale, "known Weibull scale");
  cmd->add_option("--k-max", config->k_max, "largest component count tried");
  cmd->add_option("--seed", config->sampler.seed, "sampler seed");
  cmd->add_option("--chains", config->sampler.chains, "MCMC chains per fit");
  cmd->add_option("--warmup", config->sampler.warmup, "warmup iterations per chain");
  cmd->add_option("--samples", config->sampler.samples, "kept iterations per chain");
  cmd->add_option("--save-draws", *draws_prefix,
                  "write per-chain draw CSVs for the selected model under this prefix");
  cmd->add_option("--out", *out_path, "result JSON path (default stdout)");
  cmd->callback([data_path, family, scale, config, draws_prefix, out_path] {
    const cegmix::MixturePriors priors;
    cegmix::SearchResult res;
    cegmix::MixtureSpec selected;
    selected.family = parse_family(*family);
    selected.weibull_scale = *scale;
    selected.dirichlet_conc = priors.dirichlet_conc;
    selected.component_beta = priors.component_beta;
    selected.component_gamma = priors.component_gamma;
    if (selected.family == cegmix::Family::Binomial) {
      const auto data = cegmix::read_transition_csv(*data_path);
      res = cegmix::select_situation_clusters(data, priors, *config);
      if (!draws_prefix->empty()) {
        // Re-running the accepted fit's seed reproduces its draws exactly.
        selected.k = res.k_selected;
        cegmix::SamplerConfig sampler = config->sampler;
        sampler.seed = cegmix::substream(sampler.seed,
                                         static_cast<std::uint64_t>(res.k_selected));
        save_draws(cegmix::run_chains(selected, data, sampler), selected, *draws_prefix);
      }
    } else {
      const auto data = cegmix::read_holding_csv(*data_path);
      res = cegmix::select_edge_clusters(data, *scale, priors, *config);
      if (!draws_prefix->empty()) {
        selected.k = res.k_selected;
        cegmix::SamplerConfig sampler = config->sampler;
        sampler.seed = cegmix::substream(sampler.seed,
                                         static_cast<std::uint64_t>(res.k_selected));
        save_draws(cegmix::run_chains(selected, data, sampler), selected, *draws_prefix);
      }
    }
    emit(search_result_json(res), *out_path);
  });
}

void add_score(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "score", "Compare a predicted partition against the truth");
  auto pred_path = std::make_shared<std::string>();
  auto truth_path = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>();
  cmd->add_option("--pred", *pred_path, "predicted partition JSON")->required();
  cmd->add_option("--truth", *truth_path, "true partition JSON")->required();
  cmd->add_option("--out", *out_path, "result JSON path (default stdout)");
  cmd->callback([pred_path, truth_path, out_path] {
    const cegmix::Partition pred = read_partition(*pred_path);
    const cegmix::Partition truth = read_partition(*truth_path);
    emit(json{{"nmi", cegmix::nmi(pred, truth)},
              {"rand", cegmix::rand_index(pred, truth)}},
         *out_path);
  });
}

void add_experiment(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "experiment", "Run a simulation study from a config file");
  auto config_path = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>();
  auto jobs = std::make_shared<int>(0);
  auto seed = std::make_shared<std::uint64_t>(0);
  cmd->add_option("--config", *config_path, "experiment config JSON")->required();
  cmd->add_option("--out", *out_dir, "output directory")->required();
  auto* jobs_opt = cmd->add_option("--jobs", *jobs, "worker threads (overrides config)");
  auto* seed_opt = cmd->add_option("--seed", *seed, "master seed (overrides config)");
  cmd->callback([config_path, out_dir, jobs, seed, jobs_opt, seed_opt] {
    cegmix::ExperimentConfig config = cegmix::read_experiment_config(*config_path);
    if (jobs_opt->count() > 0) config.jobs = *jobs;
    if (seed_opt->count() > 0) config.master_seed = *seed;
    const cegmix::ExperimentResult result = cegmix::run_experiment(config);
    cegmix::write_experiment_outputs(*out_dir, config, result.trials);
    std::size_t failed = 0;
    for (const auto& trial : result.trials) failed += !trial.error.empty();
    std::cout << "wrote " << result.trials.size() << " trial records ("
              << failed << " failed) to " << *out_dir << '\n';
  });
}

void add_ceg(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "ceg", "Render an event tree or its chain event graph as DOT");
  auto tree_path = std::make_shared<std::string>();
  auto tree_dot = std::make_shared<std::string>();
  auto ceg_dot = std::make_shared<std::string>();
  cmd->add_option("--tree", *tree_path, "tree + staging JSON")->required();
  auto* tree_opt =
      cmd->add_option("--tree-dot", *tree_dot, "write the staged tree DOT here");
  auto* ceg_opt = cmd->add_option("--ceg-dot", *ceg_dot,
                                  "write the chain event graph DOT here");
  cmd->callback([tree_path, tree_dot, ceg_dot, tree_opt, ceg_opt] {
    const cegmix::TreeDocument doc = cegmix::read_tree_json(*tree_path);
    if (tree_opt->count() > 0)
      emit(cegmix::tree_to_dot(doc.tree, doc.staging), *tree_dot);
    if (ceg_opt->count() > 0 || tree_opt->count() == 0)
      emit(cegmix::ceg_to_dot(cegmix::build_ceg(doc.tree, doc.staging)), *ceg_dot);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model selection toolkit for chain event graphs"};
  app.require_subcommand(1);
  add_simulate(app);
  add_fit_ahc(app);
  add_fit_mixture(app);
  add_score(app);
  add_experiment(app);
  add_ceg(app);
  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
