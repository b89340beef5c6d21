#include "inembed/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "inembed/autoencoder.hpp"
#include "inembed/rng.hpp"

namespace fs = std::filesystem;

namespace inembed {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* wanted) {
  throw std::runtime_error("config key '" + key + "': expected " + wanted +
                           ", got '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
  if (used != value.size()) bad_value(key, value, "an integer");
  return v;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a non-negative integer");
  }
  if (used != value.size()) bad_value(key, value, "a non-negative integer");
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a real");
  }
  if (used != value.size()) bad_value(key, value, "a real");
  return v;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true/false");
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  for (const auto& item : split_list(value))
    out.push_back(static_cast<int>(parse_int(key, item)));
  return out;
}

std::vector<double> parse_real_list(const std::string& key,
                                    const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
  return out;
}

std::string fmt_real(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

template <typename F>
void with_stage(const char* stage, F&& body) {
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

struct Workspace {
  std::optional<Graph> dataset;
  std::optional<MaskedGraph> masked;
  std::optional<RecoveredGraph> recovered;
};

std::string artifact_path(const PipelineConfig& config, const char* name) {
  return (fs::path(config.out) / name).string();
}

const Graph& ensure_dataset(const PipelineConfig& config, Workspace& ws) {
  if (!ws.dataset) {
    with_stage("ingest", [&] {
      if (config.edges.empty())
        throw std::runtime_error("no dataset edge list configured (key: edges)");
      std::optional<int> hint;
      if (config.n_hint >= 0) hint = config.n_hint;
      Graph g = load_edge_list(config.edges, hint);
      if (!config.attributes.empty()) g = load_attributes(config.attributes, g);
      if (!config.labels.empty()) g = load_labels(config.labels, g);
      g.check();
      ws.dataset = std::move(g);
    });
  }
  return *ws.dataset;
}

/// Scans the leading comment block for the config fingerprint; refuses
/// artifacts stamped by a different configuration.
void verify_artifact_header(const std::string& path,
                            const PipelineConfig& config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open artifact " + path);
  const std::string want = "config=" + hex16(config.config_hash());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    std::istringstream ss(line.substr(1));
    std::string token;
    while (ss >> token) {
      if (token.rfind("config=", 0) != 0) continue;
      if (token == want) return;
      throw std::runtime_error(path + " carries " + token +
                               " but the current configuration is " + want +
                               "; refusing to resume from it");
    }
  }
  throw std::runtime_error(path +
                           " has no config fingerprint; refusing to resume");
}

struct MaskedMeta {
  int original_n = 0;
  std::vector<int> removed;
};

MaskedMeta load_masked_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  MaskedMeta meta;
  bool have_n = false, have_removed = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("original_n=", 0) == 0) {
      meta.original_n =
          static_cast<int>(parse_int("original_n", line.substr(11)));
      have_n = true;
    } else if (line.rfind("removed=", 0) == 0) {
      std::istringstream ss(line.substr(8));
      int id = 0;
      while (ss >> id) meta.removed.push_back(id);
      have_removed = true;
    } else {
      throw std::runtime_error(path + ": unexpected line '" + line + "'");
    }
  }
  if (!have_n || !have_removed)
    throw std::runtime_error(path + ": missing original_n= or removed= line");
  return meta;
}

/// Rebuilds the corrupt-stage output from its persisted artifact so a
/// resumed run sees bit-identical inputs.
void ensure_masked_from_artifacts(const PipelineConfig& config, Workspace& ws) {
  if (ws.masked) return;
  const std::string meta_path = artifact_path(config, "masked_meta.txt");
  if (!fs::exists(meta_path)) return;
  verify_artifact_header(meta_path, config);
  const MaskedMeta meta = load_masked_meta(meta_path);
  const Graph& dataset = ensure_dataset(config, ws);
  if (dataset.n != meta.original_n)
    throw std::runtime_error(meta_path + ": original_n=" +
                             std::to_string(meta.original_n) +
                             " does not match the dataset (n=" +
                             std::to_string(dataset.n) + ")");
  ws.masked = mask_out_nodes(dataset, meta.removed);
}

ViewSpec make_spec(const char* key, int input_dim,
                   const std::vector<int>& widths) {
  if (widths.empty())
    throw std::runtime_error(std::string(key) +
                             " must name at least the representation width");
  ViewSpec spec;
  spec.layer_sizes.push_back(input_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), widths.begin(), widths.end());
  spec.check();
  return spec;
}

void stage_corrupt(const PipelineConfig& config, Workspace& ws) {
  const Graph& dataset = ensure_dataset(config, ws);
  with_stage("corrupt", [&] {
    const bool have_ratio = config.missing_ratio >= 0.0;
    const bool have_count = config.n_missing >= 0;
    if (have_ratio == have_count)
      throw std::runtime_error(
          "set exactly one of missing_ratio / n_missing");
    const std::uint64_t seed = derive_seed(config.seed, {kSeedCorrupt});
    ws.masked = have_ratio
                    ? remove_nodes(dataset, config.missing_ratio, seed)
                    : remove_node_count(dataset, config.n_missing, seed);

    save_edge_list(ws.masked->observed, artifact_path(config, "masked_edges.txt"),
                   config.artifact_header());
    const std::string meta_path = artifact_path(config, "masked_meta.txt");
    std::ofstream out(meta_path);
    if (!out) throw std::runtime_error("cannot open " + meta_path);
    out << "# " << config.artifact_header() << "\n";
    out << "original_n=" << ws.masked->original_n << "\n";
    out << "removed=";
    for (std::size_t i = 0; i < ws.masked->removed_nodes.size(); ++i)
      out << (i ? " " : "") << ws.masked->removed_nodes[i];
    out << "\n";
    if (!out) throw std::runtime_error("write failed on " + meta_path);
  });
}

void stage_complete(const PipelineConfig& config, Workspace& ws) {
  with_stage("complete", [&] {
    ensure_masked_from_artifacts(config, ws);
    const Graph* input = nullptr;
    int n_missing = 0;
    if (ws.masked) {
      input = &ws.masked->observed;
      n_missing = ws.masked->original_n - ws.masked->observed.n;
    } else {
      // No corruption artifacts: the configured dataset IS the pre-masked
      // input and the caller must say how many nodes to restore.
      input = &ensure_dataset(config, ws);
      if (config.n_missing < 0)
        throw std::runtime_error(
            "completing a pre-masked input needs n_missing");
      n_missing = config.n_missing;
    }

    KronEMConfig cc = config.completion;
    cc.seed = derive_seed(config.seed, {kSeedComplete});
    ws.recovered = run_kronem(*input, n_missing, cc);

    save_edge_list(ws.recovered->graph,
                   artifact_path(config, "recovered_edges.txt"),
                   config.artifact_header() + " observed_count=" +
                       std::to_string(ws.recovered->observed_count));

    const std::string theta_path = artifact_path(config, "theta.txt");
    std::ofstream theta(theta_path);
    if (!theta) throw std::runtime_error("cannot open " + theta_path);
    theta << "# " << config.artifact_header() << "\n"
          << ws.recovered->fitted_theta.to_line() << "\n";

    const std::string map_path = artifact_path(config, "mapping.txt");
    std::ofstream map(map_path);
    if (!map) throw std::runtime_error("cannot open " + map_path);
    map << "# " << config.artifact_header() << "\n"
        << ws.recovered->final_mapping.n_observed << " "
        << ws.recovered->final_mapping.n_missing << "\n"
        << ws.recovered->final_mapping.to_line() << "\n";
    if (!theta || !map)
      throw std::runtime_error("write failed on the completion artifacts");
  });
}

RecoveredGraph load_recovered(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  int n = -1, observed = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    std::istringstream ss(line.substr(1));
    std::string token;
    while (ss >> token) {
      if (token.rfind("n=", 0) == 0)
        n = static_cast<int>(parse_int("n", token.substr(2)));
      else if (token.rfind("observed_count=", 0) == 0)
        observed = static_cast<int>(parse_int("observed_count", token.substr(15)));
    }
  }
  if (n < 0 || observed < 0)
    throw std::runtime_error(path + ": missing n= / observed_count= headers");
  RecoveredGraph recovered;
  recovered.graph = load_edge_list(path, n);
  recovered.observed_count = observed;
  return recovered;
}

void stage_embed(const PipelineConfig& config, Workspace& ws) {
  with_stage("embed", [&] {
    if (!ws.recovered) {
      const std::string rec_path = artifact_path(config, "recovered_edges.txt");
      if (fs::exists(rec_path)) {
        verify_artifact_header(rec_path, config);
        ws.recovered = load_recovered(rec_path);
      } else {
        // Nothing to resume from: embed the dataset as a fully observed
        // graph.
        const Graph& dataset = ensure_dataset(config, ws);
        RecoveredGraph as_is;
        as_is.graph = dataset;
        as_is.observed_count = dataset.n;
        ws.recovered = std::move(as_is);
      }
    }

    ensure_masked_from_artifacts(config, ws);
    Eigen::MatrixXd observed_attrs;
    if (ws.masked) {
      if (!ws.masked->observed.attributes)
        throw std::runtime_error("embedding needs a dataset attribute matrix");
      observed_attrs = *ws.masked->observed.attributes;
    } else {
      const Graph& dataset = ensure_dataset(config, ws);
      if (!dataset.attributes)
        throw std::runtime_error("embedding needs a dataset attribute matrix");
      if (dataset.attributes->rows() != ws.recovered->observed_count)
        throw std::runtime_error(
            "the attribute matrix has " +
            std::to_string(dataset.attributes->rows()) + " rows but " +
            std::to_string(ws.recovered->observed_count) +
            " nodes are observed");
      observed_attrs = *dataset.attributes;
    }

    const Eigen::MatrixXd attrs =
        impute_attributes(*ws.recovered, observed_attrs);
    const ViewSpec spec_t =
        make_spec("embed.hidden_t", ws.recovered->graph.n, config.hidden_t);
    const ViewSpec spec_p = make_spec(
        "embed.hidden_p", static_cast<int>(attrs.cols()), config.hidden_p);
    TrainConfig tc = config.embed;
    tc.seed = derive_seed(config.seed, {kSeedEmbed});
    const TrainResult result =
        train(*ws.recovered, attrs, spec_t, spec_p, tc);

    save_embeddings(result.embeddings, artifact_path(config, "embeddings.txt"),
                    config.artifact_header());
    save_loss_log(result.epoch_loss, artifact_path(config, "loss_log.csv"),
                  config.artifact_header());
  });
}

void stage_evaluate(const PipelineConfig& config, Workspace& ws) {
  with_stage("evaluate", [&] {
    const Graph& dataset = ensure_dataset(config, ws);
    std::vector<double> ratios = config.eval_missing_ratios;
    if (ratios.empty()) {
      if (config.missing_ratio >= 0.0)
        ratios = {config.missing_ratio};
      else
        throw std::runtime_error(
            "set eval.missing_ratios (or missing_ratio) for the grids");
    }
    if (!dataset.attributes)
      throw std::runtime_error("evaluation needs a dataset attribute matrix");

    DownstreamConfig dc;
    dc.completion = config.completion;
    dc.spec_t = make_spec("embed.hidden_t", dataset.n, config.hidden_t);
    dc.spec_p = make_spec("embed.hidden_p",
                          static_cast<int>(dataset.attributes->cols()),
                          config.hidden_p);
    dc.embed = config.embed;
    dc.edge_holdout = config.edge_holdout;
    dc.scorer = config.scorer;

    std::vector<ExperimentResult> results;
    if (config.eval_classification) {
      if (!dataset.labels)
        throw std::runtime_error("classification evaluation needs labels");
      auto part =
          run_classification_grid(dataset, config.name, ratios,
                                  config.eval_train_ratios, config.eval_runs,
                                  dc, config.seed);
      results.insert(results.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
    if (config.eval_link_prediction) {
      auto part = run_link_prediction_grid(dataset, config.name, ratios,
                                           config.eval_runs, dc, config.seed);
      results.insert(results.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
    if (results.empty())
      throw std::runtime_error("no evaluation task enabled");
    write_results_csv(results, artifact_path(config, "results.csv"),
                      config.artifact_header());
  });
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file " + path);
  PipelineConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return config;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "edges") {
    edges = value;
  } else if (key == "attributes") {
    attributes = value;
  } else if (key == "labels") {
    labels = value;
  } else if (key == "name") {
    name = value;
  } else if (key == "out") {
    out = value;
  } else if (key == "n_hint") {
    n_hint = static_cast<int>(parse_int(key, value));
  } else if (key == "missing_ratio") {
    missing_ratio = parse_real(key, value);
  } else if (key == "n_missing") {
    n_missing = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    seed = parse_seed(key, value);
  } else if (key == "stages") {
    stages = split_list(value);
  } else if (key == "em.iterations") {
    completion.em_iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "em.gibbs_sweeps") {
    completion.gibbs_sweeps = static_cast<int>(parse_int(key, value));
  } else if (key == "em.permutation_moves") {
    completion.permutation_moves = static_cast<int>(parse_int(key, value));
  } else if (key == "em.sgd_steps") {
    completion.sgd_steps = static_cast<int>(parse_int(key, value));
  } else if (key == "em.learning_rate") {
    completion.learning_rate = parse_real(key, value);
  } else if (key == "em.sample_average_count") {
    completion.sample_average_count = static_cast<int>(parse_int(key, value));
  } else if (key == "em.final_sample") {
    if (value == "majority")
      completion.final_sample = KronEMConfig::FinalSample::majority;
    else if (value == "last")
      completion.final_sample = KronEMConfig::FinalSample::last;
    else
      bad_value(key, value, "majority/last");
  } else if (key == "em.max_model_nodes") {
    completion.max_model_nodes = static_cast<int>(parse_int(key, value));
  } else if (key == "embed.hidden_t") {
    hidden_t = parse_int_list(key, value);
  } else if (key == "embed.hidden_p") {
    hidden_p = parse_int_list(key, value);
  } else if (key == "embed.dim") {
    const int dim = static_cast<int>(parse_int(key, value));
    if (hidden_t.empty())
      hidden_t = {dim};
    else
      hidden_t.back() = dim;
  } else if (key == "embed.alpha") {
    embed.alpha = parse_real(key, value);
  } else if (key == "embed.beta") {
    embed.beta = parse_real(key, value);
  } else if (key == "embed.learning_rate") {
    embed.learning_rate = parse_real(key, value);
  } else if (key == "embed.batch_size") {
    embed.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "embed.epochs") {
    embed.epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "eval.classification") {
    eval_classification = parse_flag(key, value);
  } else if (key == "eval.link_prediction") {
    eval_link_prediction = parse_flag(key, value);
  } else if (key == "eval.missing_ratios") {
    eval_missing_ratios = parse_real_list(key, value);
  } else if (key == "eval.train_ratios") {
    eval_train_ratios = parse_real_list(key, value);
  } else if (key == "eval.runs") {
    eval_runs = static_cast<int>(parse_int(key, value));
  } else if (key == "eval.edge_holdout") {
    edge_holdout = parse_real(key, value);
  } else if (key == "eval.scorer") {
    if (value == "cosine")
      scorer = EdgeScorer::kCosine;
    else if (value == "inner")
      scorer = EdgeScorer::kInnerProduct;
    else
      bad_value(key, value, "cosine/inner");
  } else {
    throw std::runtime_error("unknown config key '" + key + "'");
  }
}

std::string PipelineConfig::canonical() const {
  // Stage list and output directory are deliberately left out: resuming with
  // a different stage selection or a relocated output tree must still accept
  // the artifacts it finds.
  std::ostringstream out;
  out << "attributes=" << attributes << "\n";
  out << "edges=" << edges << "\n";
  out << "em.final_sample="
      << (completion.final_sample == KronEMConfig::FinalSample::majority
              ? "majority"
              : "last")
      << "\n";
  out << "em.gibbs_sweeps=" << completion.gibbs_sweeps << "\n";
  out << "em.iterations=" << completion.em_iterations << "\n";
  out << "em.learning_rate=" << fmt_real(completion.learning_rate) << "\n";
  out << "em.max_model_nodes=" << completion.max_model_nodes << "\n";
  out << "em.permutation_moves=" << completion.permutation_moves << "\n";
  out << "em.sample_average_count=" << completion.sample_average_count << "\n";
  out << "em.sgd_steps=" << completion.sgd_steps << "\n";
  out << "embed.alpha=" << fmt_real(embed.alpha) << "\n";
  out << "embed.batch_size=" << embed.batch_size << "\n";
  out << "embed.beta=" << fmt_real(embed.beta) << "\n";
  out << "embed.epochs=" << embed.epochs << "\n";
  out << "embed.hidden_p="
      << join(hidden_p, [](int v) { return std::to_string(v); }) << "\n";
  out << "embed.hidden_t="
      << join(hidden_t, [](int v) { return std::to_string(v); }) << "\n";
  out << "embed.learning_rate=" << fmt_real(embed.learning_rate) << "\n";
  out << "eval.classification=" << (eval_classification ? "true" : "false")
      << "\n";
  out << "eval.edge_holdout=" << fmt_real(edge_holdout) << "\n";
  out << "eval.link_prediction=" << (eval_link_prediction ? "true" : "false")
      << "\n";
  out << "eval.missing_ratios="
      << join(eval_missing_ratios, [](double v) { return fmt_real(v); })
      << "\n";
  out << "eval.runs=" << eval_runs << "\n";
  out << "eval.scorer="
      << (scorer == EdgeScorer::kCosine ? "cosine" : "inner") << "\n";
  out << "eval.train_ratios="
      << join(eval_train_ratios, [](double v) { return fmt_real(v); }) << "\n";
  out << "labels=" << labels << "\n";
  out << "missing_ratio=" << fmt_real(missing_ratio) << "\n";
  out << "n_hint=" << n_hint << "\n";
  out << "n_missing=" << n_missing << "\n";
  out << "name=" << name << "\n";
  out << "seed=" << seed << "\n";
  return out.str();
}

std::uint64_t PipelineConfig::config_hash() const {
  return fnv1a64(canonical());
}

std::string PipelineConfig::artifact_header() const {
  return "config=" + hex16(config_hash()) + " seed=" + std::to_string(seed);
}

void run_pipeline(const PipelineConfig& config) {
  static const std::vector<std::string> kOrder{"ingest", "corrupt", "complete",
                                               "embed", "evaluate"};
  for (const auto& stage : config.stages)
    if (std::find(kOrder.begin(), kOrder.end(), stage) == kOrder.end())
      throw StageError("config", "unknown stage '" + stage + "'");
  if (config.stages.empty())
    throw StageError("config", "empty stage list");

  try {
    fs::create_directories(config.out);
  } catch (const std::exception& e) {
    throw StageError("config", std::string("cannot create output directory: ") +
                                   e.what());
  }

  const auto wants = [&config](const char* stage) {
    return std::find(config.stages.begin(), config.stages.end(), stage) !=
           config.stages.end();
  };

  Workspace ws;
  if (wants("ingest")) ensure_dataset(config, ws);
  if (wants("corrupt")) stage_corrupt(config, ws);
  if (wants("complete")) stage_complete(config, ws);
  if (wants("embed")) stage_embed(config, ws);
  if (wants("evaluate")) stage_evaluate(config, ws);
}

void write_synthetic_graph(const std::vector<double>& theta_entries, int k,
                           std::uint64_t seed, const std::string& path) {
  if (theta_entries.size() != 4)
    throw std::runtime_error("synth: theta needs exactly 4 entries, got " +
                             std::to_string(theta_entries.size()));
  for (double v : theta_entries)
    if (!(v > 0.0 && v < 1.0))
      throw std::runtime_error("synth: theta entries must lie strictly in "
                               "(0,1), got " +
                               fmt_real(v));
  if (k < 1 || k > 15)
    throw std::runtime_error("synth: k must lie in [1,15], got " +
                             std::to_string(k));
  const InitiatorMatrix theta(theta_entries[0], theta_entries[1],
                              theta_entries[2], theta_entries[3]);
  const Graph g = sample_graph(theta, k, seed);
  save_edge_list(g, path, "seed=" + std::to_string(seed));
}

}  // namespace inembed
