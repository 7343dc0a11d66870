#include "rso/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "rso/csv.hpp"
#include "rso/hash.hpp"
#include "rso/random.hpp"
#include "rso/shap.hpp"
#include "rso/svg.hpp"

namespace rso {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Walks a config object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError("config: " + path_ + " must be an object");
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  template <typename T>
  void read(const std::string& key, T& into) {
    const json* v = get(key);
    if (v == nullptr) return;
    try {
      if constexpr (std::is_unsigned_v<T>) {
        if (!v->is_number_unsigned()) throw ValidationError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v->is_number()) throw ValidationError("");
      } else {
        if (!v->is_string()) throw ValidationError("");
      }
      into = v->get<T>();
    } catch (const std::exception&) {
      throw ValidationError("config: " + path_ + "." + key + " has the wrong type");
    }
  }

  void read_path(const std::string& key, const fs::path& base, std::optional<fs::path>& into) {
    std::string text;
    const json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_string()) throw ValidationError("config: " + path_ + "." + key + " must be a path");
    text = v->get<std::string>();
    into = text.empty() ? fs::path{} : base / fs::path(text);
  }

  std::optional<Section> child(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) return std::nullopt;
    return Section(*v, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, _] : node_.items()) {
      if (!seen_.contains(key)) throw ValidationError("config: unknown key " + path_ + "." + key);
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_artifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("missing artifact " + path.string());
  return in;
}

void require_file(const fs::path& path, const std::string& what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw ValidationError(what + " not found: " + path.string());
  }
}

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

double parse_cell(const std::string& text, const fs::path& path, std::size_t line) {
  if (trim(text).empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto v = parse_double(text);
  if (!v) throw ParseError(path.string() + ":" + std::to_string(line) + ": bad number '" + text + "'");
  return *v;
}

// Seconds since `start`, for progress lines only (never persisted).
double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::size_t class_count(std::span<const std::size_t> labels) {
  std::size_t n = 0;
  for (const auto l : labels) n = std::max(n, l + 1);
  return n;
}

}  // namespace

// ---------------------------------------------------------------- config

PipelineConfig PipelineConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  Section root(doc, "config");

  std::string format;
  root.read("format", format);
  if (!format.empty() && format != "rso-taxa.config") {
    throw ValidationError("config: unexpected format '" + format + "'");
  }
  int version = 1;
  root.read("version", version);
  if (version != 1) throw ValidationError("config: unsupported version " + std::to_string(version));

  if (auto data = root.child("data")) {
    data->read_path("fixture_dir", base_dir, cfg.fixture_dir);
    data->read_path("satcat_csv", base_dir, cfg.satcat_csv);
    std::optional<fs::path> discos_fixture;
    data->read_path("discos_fixture", base_dir, discos_fixture);
    if (discos_fixture) cfg.discos = DiscosFixture{*discos_fixture};
    if (auto live = data->child("discos_live")) {
      if (discos_fixture) {
        throw ValidationError("config: data.discos_fixture and data.discos_live are exclusive");
      }
      DiscosEndpoint ep;
      live->read("base_url", ep.base_url);
      live->read("path", ep.path);
      live->read("token_env", ep.token_env);
      live->read("page_size", ep.page_size);
      std::size_t retries = static_cast<std::size_t>(ep.max_retries);
      live->read("max_retries", retries);
      ep.max_retries = static_cast<int>(retries);
      std::size_t backoff_ms = static_cast<std::size_t>(ep.initial_backoff.count());
      live->read("initial_backoff_ms", backoff_ms);
      ep.initial_backoff = std::chrono::milliseconds(backoff_ms);
      std::size_t timeout_s = static_cast<std::size_t>(ep.timeout.count());
      live->read("timeout_s", timeout_s);
      ep.timeout = std::chrono::seconds(timeout_s);
      live->finish();
      cfg.discos = ep;
    }
    data->finish();
  }
  root.read_path("schema", base_dir, cfg.schema);

  std::string arch;
  root.read("architecture", arch);
  if (!arch.empty()) {
    try {
      cfg.architecture = ArchitectureSpec::parse(arch);
    } catch (const Error& e) {
      throw ValidationError(std::string("config: architecture: ") + e.what());
    }
  }

  if (auto t = root.child("train")) {
    t->read("epochs", cfg.train.epochs);
    t->read("batch_size", cfg.train.batch_size);
    t->read("patience", cfg.train.patience);
    t->read("validation_fraction", cfg.train.validation_fraction);
    t->read("learning_rate", cfg.train.adam.learning_rate);
    if (auto w = t->child("loss_weights")) {
      w->read("real", cfg.train.weights.real);
      w->read("categorical", cfg.train.weights.categorical);
      w->finish();
    }
    t->finish();
  }
  root.read("compare_trials", cfg.compare_trials);

  if (auto c = root.child("clustering")) {
    c->read("k", cfg.clustering.k);
    c->read("k_min", cfg.clustering.k_min);
    c->read("k_max", cfg.clustering.k_max);
    c->read("n_init", cfg.clustering.kmeans.n_init);
    c->read("max_iterations", cfg.clustering.kmeans.max_iterations);
    c->read("tolerance", cfg.clustering.kmeans.tolerance);
    c->finish();
  }
  if (auto u = root.child("umap")) {
    u->read("n_neighbors", cfg.umap.n_neighbors);
    u->read("min_dist", cfg.umap.min_dist);
    u->read("spread", cfg.umap.spread);
    u->read("epochs", cfg.umap.epochs);
    u->read("learning_rate", cfg.umap.learning_rate);
    u->read("negative_sample_rate", cfg.umap.negative_sample_rate);
    u->read("trustworthiness_k", cfg.trustworthiness_k);
    u->finish();
  }
  if (auto g = root.child("gbdt")) {
    g->read("rounds", cfg.gbdt.rounds);
    g->read("learning_rate", cfg.gbdt.learning_rate);
    g->read("max_depth", cfg.gbdt.max_depth);
    g->read("lambda", cfg.gbdt.lambda);
    g->read("min_child_weight", cfg.gbdt.min_child_weight);
    g->read("min_gain", cfg.gbdt.min_gain);
    g->finish();
  }

  std::optional<fs::path> rules;
  root.read_path("taxonomy_rules", base_dir, rules);
  if (!rules || rules->empty()) throw ValidationError("config: taxonomy_rules is required");
  cfg.taxonomy_rules = *rules;
  root.read_path("annotations", base_dir, cfg.annotations);
  std::optional<fs::path> out;
  root.read_path("output_dir", base_dir, out);
  if (out) cfg.output_dir = *out;
  root.read("seed", cfg.seed);
  root.finish();

  cfg.apply_seed(cfg.seed);
  return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  require_file(path, "config file");
  return parse(read_file(path), path.parent_path());
}

void PipelineConfig::apply_seed(std::uint64_t master) {
  seed = master;
  train.seed = derive_seed(master, "autoencoder");
  umap.seed = derive_seed(master, "umap");
  gbdt.seed = derive_seed(master, "gbdt");
}

fs::path PipelineConfig::satcat_path() const {
  if (satcat_csv) return *satcat_csv;
  if (fixture_dir) return *fixture_dir / "satcat.csv";
  throw ValidationError("config: no SATCAT source (data.fixture_dir or data.satcat_csv)");
}

DiscosSource PipelineConfig::discos_source() const {
  if (discos) return *discos;
  if (fixture_dir) return DiscosFixture{*fixture_dir / "discos" / "page-1.json"};
  throw ValidationError("config: no DISCOS source (data.fixture_dir, data.discos_fixture or "
                        "data.discos_live)");
}

void PipelineConfig::validate() const {
  if (fixture_dir) {
    std::error_code ec;
    if (!fs::is_directory(*fixture_dir, ec)) {
      throw ValidationError("fixture directory not found: " + fixture_dir->string());
    }
  }
  require_file(satcat_path(), "SATCAT file");
  const DiscosSource source = discos_source();
  if (const auto* f = std::get_if<DiscosFixture>(&source)) {
    require_file(f->first_page, "DISCOS fixture");
  }
  if (schema) require_file(*schema, "feature schema");
  require_file(taxonomy_rules, "taxonomy rules file");
  try {
    (void)load_rules(taxonomy_rules);
  } catch (const SchemaError& e) {
    throw ValidationError(std::string("taxonomy rules: ") + e.what());
  }
  if (annotations) require_file(*annotations, "annotations file");

  architecture.validate();
  train.validate();
  umap.validate();
  gbdt.validate();
  if (compare_trials == 0) throw ValidationError("config: compare_trials must be >= 1");
  const auto& c = clustering;
  if (c.k == 0 || c.k_min == 0 || c.k_min > c.k_max) {
    throw ValidationError("config: clustering needs k >= 1 and 1 <= k_min <= k_max");
  }
  if (c.kmeans.n_init == 0 || c.kmeans.max_iterations == 0 || !(c.kmeans.tolerance >= 0.0)) {
    throw ValidationError("config: clustering needs n_init, max_iterations >= 1, tolerance >= 0");
  }
  if (trustworthiness_k == 0) throw ValidationError("config: umap.trustworthiness_k must be >= 1");
  if (output_dir.empty()) throw ValidationError("config: output_dir is empty");
}

// ---------------------------------------------------------------- manifest

std::string Manifest::to_json() const {
  json arts = json::array();
  for (const auto& a : artifacts) {
    arts.push_back({{"name", a.name}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  const json doc = {{"format", "rso-taxa.manifest"},
                    {"version", 1},
                    {"seed", seed},
                    {"artifacts", std::move(arts)}};
  return doc.dump(2) + "\n";
}

Manifest Manifest::parse(std::string_view json_text) {
  try {
    const auto doc = json::parse(json_text);
    if (doc.at("format").get<std::string>() != "rso-taxa.manifest") {
      throw SchemaError("format: not an rso-taxa manifest");
    }
    Manifest m;
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& a : doc.at("artifacts")) {
      m.artifacts.push_back({a.at("name").get<std::string>(), a.at("sha256").get<std::string>(),
                             a.at("bytes").get<std::uintmax_t>()});
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------- tables

void write_labeled_matrix(const fs::path& path, const LabeledMatrix& table) {
  if (table.designators.size() != table.values.rows() ||
      table.columns.size() != table.values.cols()) {
    throw ArgumentError("labeled matrix: shape does not match labels");
  }
  auto out = open_out(path);
  std::vector<std::string> row{"intl_designator"};
  row.insert(row.end(), table.columns.begin(), table.columns.end());
  write_csv_row(out, row);
  for (std::size_t i = 0; i < table.values.rows(); ++i) {
    row.assign(1, table.designators[i]);
    for (const double v : table.values.row(i)) row.push_back(cell(v));
    write_csv_row(out, row);
  }
}

LabeledMatrix read_labeled_matrix(const fs::path& path) {
  auto in = open_artifact(path);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.empty() || row[0] != "intl_designator") {
    throw ParseError(path.string() + ": expected an intl_designator header");
  }
  LabeledMatrix t;
  t.columns.assign(row.begin() + 1, row.end());
  std::vector<double> values;
  while (reader.next(row)) {
    if (row.size() != t.columns.size() + 1) {
      throw ParseError(path.string() + ":" + std::to_string(reader.line()) + ": wrong field count");
    }
    t.designators.push_back(row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      values.push_back(parse_cell(row[c], path, reader.line()));
    }
  }
  t.values = Matrix(t.designators.size(), t.columns.size());
  std::copy(values.begin(), values.end(), t.values.values().begin());
  return t;
}

// ---------------------------------------------------------------- loaders

Dataset load_dataset(const fs::path& out) {
  Dataset d;
  {
    auto in = open_artifact(out / artifact::kDataset);
    d.objects = read_objects_csv(in);
  }
  require_file(out / artifact::kSchema, "artifact");
  d.schema = read_schema(out / artifact::kSchema);
  d.matrix = build_feature_matrix(d.objects, d.schema);
  return d;
}

Matrix load_latent(const fs::path& out, const Dataset& data) {
  auto t = read_labeled_matrix(out / artifact::kLatent);
  if (t.designators != data.matrix.designators) {
    throw ValidationError("latent.csv rows do not match dataset.csv");
  }
  return std::move(t.values);
}

std::vector<std::size_t> load_cluster_labels(const fs::path& out, const Dataset& data) {
  const fs::path path = out / artifact::kClusters;
  auto in = open_artifact(path);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.size() != 2 || row[0] != "intl_designator" || row[1] != "cluster") {
    throw ParseError(path.string() + ": expected header intl_designator,cluster");
  }
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  while (reader.next(row)) {
    const auto v = row.size() == 2 ? parse_int(row[1]) : std::nullopt;
    if (!v || *v < 0) {
      throw ParseError(path.string() + ":" + std::to_string(reader.line()) + ": bad cluster label");
    }
    ids.push_back(row[0]);
    labels.push_back(static_cast<std::size_t>(*v));
  }
  if (ids != data.matrix.designators) {
    throw ValidationError("clusters.csv rows do not match dataset.csv");
  }
  return labels;
}

// ---------------------------------------------------------------- stages

namespace stages {

Dataset ingest(const PipelineConfig& cfg, const fs::path& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  SatcatParseReport parse_report;
  std::vector<SatcatRecord> satcat;
  {
    std::ifstream in(cfg.satcat_path(), std::ios::binary);
    if (!in) throw ValidationError("cannot read " + cfg.satcat_path().string());
    satcat = parse_satcat(in, &parse_report);
  }
  DiscosFetchReport fetch_report;
  const auto discos = fetch_discos(cfg.discos_source(), &fetch_report);
  const auto merged = merge_catalogs(satcat, discos);
  LeoFilterReport leo;
  Dataset d;
  d.objects = filter_leo(merged, &leo);
  if (d.objects.empty()) throw ValidationError("no LEO objects after filtering");
  d.schema = cfg.schema ? read_schema(*cfg.schema) : infer_schema(d.objects);
  FeatureMatrixReport fm;
  d.matrix = build_feature_matrix(d.objects, d.schema, &fm);
  d.schema = d.matrix.schema;

  {
    auto os = open_out(out / artifact::kDataset);
    write_objects_csv(os, d.objects);
  }
  write_schema(out / artifact::kSchema, d.schema);

  log << "ingest: " << satcat.size() << " SATCAT rows (" << parse_report.invalid_cells
      << " invalid cells), " << discos.size() << " DISCOS records over " << fetch_report.pages
      << " pages\n"
      << "ingest: kept " << leo.kept << " LEO objects, dropped " << leo.dropped_missing_orbit
      << " without orbit and " << leo.dropped_above_leo << " above LEO\n"
      << "ingest: " << d.matrix.missing_count() << " missing reals, "
      << fm.unknown_categories << " unknown categories";
  for (const auto& c : fm.zero_variance_columns) log << ", zero variance: " << c;
  log << " (" << seconds_since(start) << " s)\n";
  return d;
}

TrainResult train(const PipelineConfig& cfg, const Dataset& data, const fs::path& out,
                  std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  auto result = rso::train(data.matrix, cfg.architecture, cfg.train);
  save_model(out / artifact::kModel, result.model, data.schema.fingerprint(), result.history);
  const auto& first = result.history.front();
  const auto& best = result.history.at(result.best_epoch);
  log << "train: " << cfg.architecture.to_string() << ", " << result.history.size() - 1
      << " epochs, best epoch " << result.best_epoch << ", loss " << first.train_loss << " -> "
      << best.train_loss << " (validation " << first.val_loss << " -> " << best.val_loss
      << ", " << seconds_since(start) << " s)\n";
  return result;
}

std::vector<ArchitectureResult> compare_arch(const PipelineConfig& cfg, const Dataset& data,
                                             const fs::path& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const auto specs = reference_architectures();
  auto results = compare_architectures(data.matrix, specs, cfg.compare_trials, cfg.train);
  auto os = open_out(out / artifact::kArchitectures);
  std::vector<std::string> row{"rank", "architecture", "mean", "std"};
  for (std::size_t t = 0; t < cfg.compare_trials; ++t) row.push_back("trial_" + std::to_string(t + 1));
  row.push_back("failure");
  write_csv_row(os, row);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    row = {std::to_string(i + 1), r.spec.to_string(), r.failure ? "" : cell(r.mean),
           r.failure ? "" : cell(r.stddev)};
    for (std::size_t t = 0; t < cfg.compare_trials; ++t) {
      row.push_back(t < r.trial_errors.size() ? cell(r.trial_errors[t]) : "");
    }
    row.push_back(r.failure.value_or(""));
    write_csv_row(os, row);
    log << "compare-arch: " << r.spec.to_string() << "  ";
    if (r.failure) {
      log << "failed: " << *r.failure << '\n';
    } else {
      log << r.mean << " +- " << r.stddev << '\n';
    }
  }
  log << "compare-arch: " << specs.size() << " architectures x " << cfg.compare_trials
      << " trials (" << seconds_since(start) << " s)\n";
  return results;
}

Matrix embed(const AutoencoderModel& model, const Dataset& data, const fs::path& out,
             std::ostream& log) {
  Matrix latent = encode_all(model, data.matrix);
  LabeledMatrix t{data.matrix.designators, {}, latent};
  for (std::size_t j = 0; j < latent.cols(); ++j) t.columns.push_back("z" + std::to_string(j));
  write_labeled_matrix(out / artifact::kLatent, t);
  log << "embed: " << latent.rows() << " rows -> " << latent.cols() << "-d latent space\n";
  return latent;
}

SseCurve elbow(const PipelineConfig& cfg, const Matrix& latent, const Dataset& data,
               const fs::path& out, std::ostream& log) {
  (void)data;
  const std::size_t k_max = std::min(cfg.clustering.k_max, latent.rows());
  const std::size_t k_min = std::min(cfg.clustering.k_min, k_max);
  auto curve = sse_curve(latent, k_min, k_max, derive_seed(cfg.seed, "kmeans"),
                         cfg.clustering.kmeans);
  curve.default_k = cfg.clustering.k;
  auto os = open_out(out / artifact::kSseCurve);
  write_csv_row(os, std::vector<std::string>{"k", "sse"});
  for (const auto& p : curve.points) {
    write_csv_row(os, std::vector<std::string>{std::to_string(p.k), cell(p.sse)});
  }
  log << "elbow: SSE for k = " << k_min << ".." << k_max << " (from "
      << curve.points.front().sse << " to " << curve.points.back().sse << ")\n";
  return curve;
}

ClusterModel cluster(const PipelineConfig& cfg, const Matrix& latent, const Dataset& data,
                     const fs::path& out, std::ostream& log) {
  auto model = kmeans_fit(latent, cfg.clustering.k, derive_seed(cfg.seed, "kmeans"),
                          cfg.clustering.kmeans);
  auto os = open_out(out / artifact::kClusters);
  write_csv_row(os, std::vector<std::string>{"intl_designator", "cluster"});
  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    write_csv_row(os, std::vector<std::string>{data.matrix.designators[i],
                                               std::to_string(model.labels[i])});
  }
  log << "cluster: k = " << model.k() << ", SSE " << model.sse << ", sizes";
  for (const auto s : model.sizes) log << ' ' << s;
  log << '\n';
  return model;
}

Matrix project(const PipelineConfig& cfg, const Matrix& latent, const Dataset& data,
               const fs::path& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  auto result = umap_fit(latent, cfg.umap);
  write_labeled_matrix(out / artifact::kEmbedding,
                       LabeledMatrix{data.matrix.designators, {"x", "y"}, result.embedding});
  log << "project: UMAP a = " << result.curve.a << ", b = " << result.curve.b;
  const std::size_t n = latent.rows();
  const std::size_t k = cfg.trustworthiness_k;
  if (k < n && 2 * n > 3 * k + 1) {
    log << ", trustworthiness@" << k << " = " << trustworthiness(latent, result.embedding, k);
  }
  log << " (" << seconds_since(start) << " s)\n";
  return std::move(result.embedding);
}

BoostedForest train_gbdt(const PipelineConfig& cfg, const Dataset& data,
                         std::span<const std::size_t> labels, const fs::path& out,
                         std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const GbdtData table = gbdt_data_from(data.matrix);
  auto forest = fit_gbdt(table, labels, class_count(labels), cfg.gbdt);
  forest.schema_hash = data.schema.fingerprint();
  save_forest(out / artifact::kForest, forest);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < table.n_rows; ++r) {
    correct += predict_class(forest, table.row(r)) == labels[r] ? 1 : 0;
  }
  log << "train-gbdt: " << forest.rounds() << " rounds x " << forest.n_classes
      << " classes, log-loss " << forest.train_logloss.front() << " -> "
      << forest.train_logloss.back() << ", training accuracy "
      << static_cast<double>(correct) / static_cast<double>(table.n_rows) << " ("
      << seconds_since(start) << " s)\n";
  return forest;
}

void explain(const BoostedForest& forest, const Dataset& data,
             std::span<const std::size_t> labels, std::optional<std::size_t> cluster_id,
             const fs::path& out, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const GbdtData table = gbdt_data_from(data.matrix);
  if (table.names != forest.feature_names) {
    throw ValidationError("forest features do not match the dataset schema");
  }

  const auto by_count = feature_importance(forest, ImportanceKind::kSplitCount);
  const auto by_gain = feature_importance(forest, ImportanceKind::kTotalGain);
  std::vector<double> gain(forest.n_features(), 0.0);
  for (const auto& e : by_gain) gain[e.feature] = e.score;
  {
    auto os = open_out(out / artifact::kImportance);
    write_csv_row(os, std::vector<std::string>{"feature", "split_count", "total_gain"});
    for (const auto& e : by_count) {
      write_csv_row(os, std::vector<std::string>{e.name, cell(e.score), cell(gain[e.feature])});
    }
  }

  const auto summary = shap_summary(forest, table);
  {
    auto os = open_out(out / artifact::kShapSummary);
    std::vector<std::string> row{"feature"};
    for (std::size_t c = 0; c < forest.n_classes; ++c) row.push_back("cluster_" + std::to_string(c));
    row.push_back("total");
    write_csv_row(os, row);
    for (const auto f : summary.ranking) {
      row.assign(1, summary.features[f]);
      for (std::size_t c = 0; c < forest.n_classes; ++c) row.push_back(cell(summary.mean_abs(f, c)));
      row.push_back(cell(summary.stacked[f]));
      write_csv_row(os, row);
    }
  }
  log << "explain: top features by split count:";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, by_count.size()); ++i) {
    log << ' ' << by_count[i].name;
  }
  log << "; by mean |SHAP|:";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, summary.ranking.size()); ++i) {
    log << ' ' << summary.features[summary.ranking[i]];
  }
  log << '\n';

  if (cluster_id) {
    if (*cluster_id >= forest.n_classes) {
      throw ArgumentError("explain: unknown cluster " + std::to_string(*cluster_id) + " (have " +
                          std::to_string(forest.n_classes) + ")");
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      if (labels[r] == *cluster_id) rows.push_back(r);
    }
    const auto detail = cluster_detail(forest, table, rows, *cluster_id);
    const fs::path path = out / ("shap_cluster_" + std::to_string(*cluster_id) + ".csv");
    auto os = open_out(path);
    write_csv_row(os, std::vector<std::string>{"feature", "mean_abs", "mean", "mean_when_missing",
                                               "mean_when_present", "missing_rows"});
    for (const auto& d : detail) {
      write_csv_row(os, std::vector<std::string>{d.name, cell(d.mean_abs), cell(d.mean),
                                                 cell(d.mean_when_missing),
                                                 cell(d.mean_when_present),
                                                 std::to_string(d.missing_rows)});
    }
    log << "explain: cluster " << *cluster_id << " (" << rows.size() << " rows) led by";
    for (std::size_t i = 0; i < std::min<std::size_t>(5, detail.size()); ++i) {
      log << ' ' << detail[i].name;
    }
    log << '\n';
  }
  log << "explain: done (" << seconds_since(start) << " s)\n";
}

std::vector<TaxonomyAssignment> classify(const PipelineConfig& cfg, const Dataset& data,
                                         const fs::path& out, std::ostream& log) {
  const auto rules = load_rules(cfg.taxonomy_rules);
  std::map<std::string, Annotations> notes;
  if (cfg.annotations) {
    std::ifstream in(*cfg.annotations, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + cfg.annotations->string());
    for (auto& [id, a] : read_annotations(in)) notes[id] = a;
  }
  std::vector<TaxonomyAssignment> rows;
  rows.reserve(data.objects.size());
  std::size_t annotated = 0;
  for (const auto& o : data.objects) {
    const auto it = notes.find(normalize_designator(o.intl_designator));
    annotated += it != notes.end() ? 1 : 0;
    rows.push_back(rso::classify(o, it != notes.end() ? it->second : Annotations{}, rules));
  }
  auto os = open_out(out / artifact::kTaxonomy);
  write_assignments_csv(os, rows);
  log << "classify: " << rows.size() << " objects (" << annotated << " annotated)\n";
  return rows;
}

namespace {

std::vector<std::vector<std::string>> read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::vector<std::string>> rows;
  CsvReader reader(in);
  std::vector<std::string> row;
  while (reader.next(row)) rows.push_back(row);
  return rows;
}

double number(const std::string& s) { return parse_double(s).value_or(0.0); }

}  // namespace

std::vector<fs::path> report(const PipelineConfig& cfg, const fs::path& out, std::ostream& log) {
  const fs::path dir = out / artifact::kFiguresDir;
  fs::create_directories(dir);
  std::vector<fs::path> written;
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  };
  const auto exists = [&](std::string_view name) { return fs::is_regular_file(out / name); };

  if (exists(artifact::kModel)) {
    const auto history = history_from_json(read_file(out / artifact::kModel));
    if (!history.empty()) {
      std::vector<double> x;
      svg::Series tr{"training", {}}, va{"validation", {}};
      for (const auto& e : history) {
        x.push_back(static_cast<double>(e.epoch));
        tr.y.push_back(e.train_loss);
        va.y.push_back(e.val_loss);
      }
      const svg::Series series[] = {tr, va};
      emit("training.svg",
           svg::lines(x, series, {"Autoencoder training", "epoch", "mean composite loss"}));
    }
  }
  if (exists(artifact::kArchitectures)) {
    const auto rows = read_table(out / artifact::kArchitectures);
    std::vector<std::string> names;
    std::vector<double> means;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 3 || rows[i][2].empty()) continue;
      names.push_back(rows[i][1]);
      means.push_back(number(rows[i][2]));
    }
    emit("architectures.svg",
         svg::bars(names, means, {"Reconstruction error by architecture", "mean error", ""}));
  }
  if (exists(artifact::kEmbedding)) {
    const auto emb = read_labeled_matrix(out / artifact::kEmbedding);
    const std::vector<std::size_t> zeros(emb.values.rows(), 0);
    emit("umap.svg", svg::scatter(emb.values, zeros, {"UMAP projection of the latent space",
                                                      "UMAP 1", "UMAP 2"}, ""));
    if (exists(artifact::kClusters) && exists(artifact::kDataset)) {
      std::vector<std::size_t> labels;
      const auto rows = read_table(out / artifact::kClusters);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        labels.push_back(static_cast<std::size_t>(parse_int(rows[i].at(1)).value_or(0)));
      }
      if (labels.size() == emb.values.rows()) {
        emit("clusters.svg", svg::scatter(emb.values, labels,
                                          {"k-means clusters on the UMAP projection", "UMAP 1",
                                           "UMAP 2"}));
      }
    }
  }
  if (exists(artifact::kSseCurve)) {
    const auto rows = read_table(out / artifact::kSseCurve);
    std::vector<double> ks;
    svg::Series sse{"SSE", {}};
    for (std::size_t i = 1; i < rows.size(); ++i) {
      ks.push_back(number(rows[i].at(0)));
      sse.y.push_back(number(rows[i].at(1)));
    }
    const svg::Series series[] = {sse};
    emit("sse_curve.svg", svg::lines(ks, series, {"Elbow curve", "k", "sum of squared errors"},
                                     static_cast<double>(cfg.clustering.k)));
  }
  if (exists(artifact::kImportance)) {
    const auto rows = read_table(out / artifact::kImportance);
    std::vector<std::string> names;
    std::vector<double> counts, gains;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      names.push_back(rows[i].at(0));
      counts.push_back(number(rows[i].at(1)));
      gains.push_back(number(rows[i].at(2)));
    }
    emit("importance_splits.svg",
         svg::bars(names, counts, {"Feature importance (split count)", "splits", ""}));
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });
    std::vector<std::string> gn;
    std::vector<double> gv;
    for (const auto i : order) {
      gn.push_back(names[i]);
      gv.push_back(gains[i]);
    }
    emit("importance_gain.svg",
         svg::bars(gn, gv, {"Feature importance (total gain)", "gain", ""}));
  }
  if (exists(artifact::kShapSummary)) {
    const auto rows = read_table(out / artifact::kShapSummary);
    if (!rows.empty() && rows[0].size() >= 3) {
      const std::size_t classes = rows[0].size() - 2;
      std::vector<std::string> segments(rows[0].begin() + 1, rows[0].end() - 1);
      std::vector<std::string> names;
      Matrix parts(rows.size() - 1, classes);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        names.push_back(rows[i].at(0));
        for (std::size_t c = 0; c < classes; ++c) parts(i - 1, c) = number(rows[i].at(c + 1));
      }
      emit("shap_summary.svg",
           svg::stacked_bars(names, parts, segments,
                             {"Mean |SHAP value| by cluster", "mean |SHAP|", ""}));
    }
  }
  const auto rules = load_rules(cfg.taxonomy_rules);
  write_file(dir / "taxonomy.md", taxonomy_reference(rules));
  written.push_back(dir / "taxonomy.md");
  log << "report: wrote " << written.size() << " files to " << dir.string() << '\n';
  return written;
}

}  // namespace stages

// ---------------------------------------------------------------- run

Manifest run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  fs::remove_all(out / artifact::kFailedDir);

  static constexpr std::string_view kOrder[] = {
      artifact::kDataset,   artifact::kSchema,     artifact::kModel,
      artifact::kLatent,    artifact::kSseCurve,   artifact::kClusters,
      artifact::kEmbedding, artifact::kForest,     artifact::kImportance,
      artifact::kShapSummary, artifact::kTaxonomy};
  for (const auto name : kOrder) fs::remove(out / name);
  fs::remove(out / artifact::kManifest);

  std::string stage = "ingest";
  const auto fail = [&](const std::string& what) -> StageError {
    const fs::path failed = out / artifact::kFailedDir;
    fs::create_directories(failed);
    for (const auto name : kOrder) {
      if (fs::exists(out / name)) fs::rename(out / name, failed / name);
    }
    write_file(failed / "error.txt", stage + ": " + what + "\n");
    return StageError(stage, what);
  };

  const auto start = std::chrono::steady_clock::now();
  try {
    Dataset data = stages::ingest(cfg, out, log);
    stage = "train";
    const auto trained = stages::train(cfg, data, out, log);
    stage = "embed";
    const Matrix latent = stages::embed(trained.model, data, out, log);
    stage = "elbow";
    stages::elbow(cfg, latent, data, out, log);
    stage = "cluster";
    const auto clusters = stages::cluster(cfg, latent, data, out, log);
    stage = "project";
    stages::project(cfg, latent, data, out, log);
    stage = "train-gbdt";
    const auto forest = stages::train_gbdt(cfg, data, clusters.labels, out, log);
    stage = "explain";
    stages::explain(forest, data, clusters.labels, std::nullopt, out, log);
    stage = "classify";
    stages::classify(cfg, data, out, log);
  } catch (const std::exception& e) {
    throw fail(e.what());
  }

  Manifest m;
  m.seed = cfg.seed;
  for (const auto name : kOrder) {
    const fs::path p = out / name;
    m.artifacts.push_back({std::string(name), sha256_file(p), fs::file_size(p)});
  }
  write_file(out / artifact::kManifest, m.to_json());
  log << "run: " << m.artifacts.size() << " artifacts in " << out.string() << " ("
      << seconds_since(start) << " s)\n";
  return m;
}

}  // namespace rso
