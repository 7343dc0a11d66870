#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rso/autoencoder.hpp"
#include "rso/catalog.hpp"
#include "rso/discos.hpp"
#include "rso/error.hpp"
#include "rso/features.hpp"
#include "rso/gbdt.hpp"
#include "rso/kmeans.hpp"
#include "rso/matrix.hpp"
#include "rso/taxonomy.hpp"
#include "rso/umap.hpp"

namespace rso {

struct ClusteringConfig {
  std::size_t k = 8;
  std::size_t k_min = 1;
  std::size_t k_max = 15;
  KmeansOptions kmeans;
};

// Everything a run needs. Relative paths in the JSON file are resolved
// against the directory holding it.
struct PipelineConfig {
  // Either a fixture directory (satcat.csv + discos/page-1.json) or explicit
  // SATCAT and DISCOS sources.
  std::optional<std::filesystem::path> fixture_dir;
  std::optional<std::filesystem::path> satcat_csv;
  std::optional<DiscosSource> discos;
  // Feature schema to use instead of inferring one from the data.
  std::optional<std::filesystem::path> schema;
  ArchitectureSpec architecture{{16, 4, 16}};
  TrainConfig train;
  std::size_t compare_trials = 5;
  ClusteringConfig clustering;
  UmapConfig umap;
  // Neighbourhood size for the trustworthiness score of the projection.
  std::size_t trustworthiness_k = 10;
  GbdtParams gbdt;
  std::filesystem::path taxonomy_rules;
  std::optional<std::filesystem::path> annotations;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;

  // Parses and resolves paths; throws ValidationError on malformed JSON,
  // unknown keys or wrong types.
  static PipelineConfig parse(std::string_view json_text,
                              const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  // Re-derives every sub-seed from `seed`.
  void apply_seed(std::uint64_t master);

  // Checks hyper-parameters and that every referenced input path exists.
  // Throws ValidationError; does no other work.
  void validate() const;

  std::filesystem::path satcat_path() const;
  DiscosSource discos_source() const;
};

// A stage failed: `stage` names it, what() carries the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Artifact file names inside the output directory, in run order.
namespace artifact {
inline constexpr std::string_view kDataset = "dataset.csv";
inline constexpr std::string_view kSchema = "schema.json";
inline constexpr std::string_view kModel = "model.json";
inline constexpr std::string_view kLatent = "latent.csv";
inline constexpr std::string_view kSseCurve = "sse_curve.csv";
inline constexpr std::string_view kClusters = "clusters.csv";
inline constexpr std::string_view kEmbedding = "embedding.csv";
inline constexpr std::string_view kForest = "forest.json";
inline constexpr std::string_view kImportance = "importance.csv";
inline constexpr std::string_view kShapSummary = "shap_summary.csv";
inline constexpr std::string_view kTaxonomy = "taxonomy.csv";
inline constexpr std::string_view kArchitectures = "architectures.csv";
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kFailedDir = "failed";
inline constexpr std::string_view kFiguresDir = "figures";
}  // namespace artifact

struct ArtifactRecord {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::vector<ArtifactRecord> artifacts;

  std::string to_json() const;
  static Manifest parse(std::string_view json_text);
};

// Row-labelled numeric table: first column intl_designator, then `columns`.
struct LabeledMatrix {
  std::vector<std::string> designators;
  std::vector<std::string> columns;
  Matrix values;
};
void write_labeled_matrix(const std::filesystem::path& path, const LabeledMatrix& table);
LabeledMatrix read_labeled_matrix(const std::filesystem::path& path);

// Loaded LEO dataset with its schema and model-ready matrix.
struct Dataset {
  std::vector<CatalogObject> objects;
  FeatureSchema schema;
  FeatureMatrix matrix;
};

// Stage operations. Each reads the inputs it is given, writes its artifacts
// to `out` and returns what downstream stages need. Progress goes to `log`.
namespace stages {

Dataset ingest(const PipelineConfig& cfg, const std::filesystem::path& out, std::ostream& log);
TrainResult train(const PipelineConfig& cfg, const Dataset& data,
                  const std::filesystem::path& out, std::ostream& log);
std::vector<ArchitectureResult> compare_arch(const PipelineConfig& cfg, const Dataset& data,
                                             const std::filesystem::path& out,
                                             std::ostream& log);
Matrix embed(const AutoencoderModel& model, const Dataset& data,
             const std::filesystem::path& out, std::ostream& log);
SseCurve elbow(const PipelineConfig& cfg, const Matrix& latent, const Dataset& data,
               const std::filesystem::path& out, std::ostream& log);
ClusterModel cluster(const PipelineConfig& cfg, const Matrix& latent, const Dataset& data,
                     const std::filesystem::path& out, std::ostream& log);
Matrix project(const PipelineConfig& cfg, const Matrix& latent, const Dataset& data,
               const std::filesystem::path& out, std::ostream& log);
BoostedForest train_gbdt(const PipelineConfig& cfg, const Dataset& data,
                         std::span<const std::size_t> labels,
                         const std::filesystem::path& out, std::ostream& log);
// Global importance and SHAP summary; with `cluster_id`, also writes
// shap_cluster_<id>.csv for that cluster's rows.
void explain(const BoostedForest& forest, const Dataset& data,
             std::span<const std::size_t> labels, std::optional<std::size_t> cluster_id,
             const std::filesystem::path& out, std::ostream& log);
std::vector<TaxonomyAssignment> classify(const PipelineConfig& cfg, const Dataset& data,
                                         const std::filesystem::path& out, std::ostream& log);
// SVG figures and the taxonomy reference under <out>/figures from whatever
// artifacts exist in `out`. Returns the files written.
std::vector<std::filesystem::path> report(const PipelineConfig& cfg,
                                          const std::filesystem::path& out, std::ostream& log);

}  // namespace stages

// Loaders for persisted artifacts, used to replay single stages.
Dataset load_dataset(const std::filesystem::path& out);
Matrix load_latent(const std::filesystem::path& out, const Dataset& data);
std::vector<std::size_t> load_cluster_labels(const std::filesystem::path& out,
                                             const Dataset& data);

// Runs every stage into cfg.output_dir and writes manifest.json. On a stage
// failure the files written so far are moved to <out>/failed/ and a
// StageError naming the stage is thrown. Validates the config first.
Manifest run_pipeline(const PipelineConfig& cfg, std::ostream& log);

}  // namespace rso
