// rso-taxa: command-line driver for the catalogue taxonomy pipeline.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rso/error.hpp"
#include "rso/pipeline.hpp"
#include "rso/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitValidation = 2;

struct CommonArgs {
  std::string config;
  std::string fixture;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "pipeline config JSON")->required();
  sub->add_option("--fixture", args.fixture, "offline data directory (satcat.csv + discos/)");
  sub->add_option("--seed", args.seed, "master seed");
  sub->add_option("--out", args.out, "output directory");
}

rso::PipelineConfig load_config(const CommonArgs& args) {
  auto cfg = rso::PipelineConfig::load(args.config);
  if (!args.fixture.empty()) {
    cfg.fixture_dir = fs::path(args.fixture);
    cfg.satcat_csv.reset();
    cfg.discos.reset();
  }
  if (args.seed) cfg.apply_seed(*args.seed);
  if (!args.out.empty()) cfg.output_dir = args.out;
  return cfg;
}

// Work split into a validation phase (inputs, config, artifacts) and the
// compute it returns; failures map to different exit codes.
using Prepared = std::function<void()>;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Catalogue-scale taxonomy of resident space objects"};
  app.require_subcommand(1);

  CommonArgs args;
  std::size_t trials = 0;
  std::optional<std::size_t> cluster_id;
  std::function<Prepared(const rso::PipelineConfig&)> action;
  bool needs_config = true;

  const auto sub = [&](const char* name, const char* help,
                       std::function<Prepared(const rso::PipelineConfig&)> fn) {
    auto* s = app.add_subcommand(name, help);
    add_common(s, args);
    s->callback([&action, fn] { action = fn; });
    return s;
  };

  sub("ingest", "parse, merge and filter the catalogue; write dataset and schema",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        return [cfg] { rso::stages::ingest(cfg, cfg.output_dir, std::cerr); };
      });
  sub("train", "train the autoencoder on the ingested dataset",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        return [cfg, data] { rso::stages::train(cfg, *data, cfg.output_dir, std::cerr); };
      });
  auto* cmp = sub("compare-arch", "reconstruction error of the reference architectures",
                  [&trials](const rso::PipelineConfig& base) -> Prepared {
                    auto cfg = base;
                    if (trials > 0) cfg.compare_trials = trials;
                    auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
                    return [cfg, data] {
                      rso::stages::compare_arch(cfg, *data, cfg.output_dir, std::cerr);
                    };
                  });
  cmp->add_option("--trials", trials, "trials per architecture (default from config)")
      ->check(CLI::PositiveNumber);
  sub("embed", "encode every object into the latent space",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        auto model = std::make_shared<rso::AutoencoderModel>(
            rso::load_model(cfg.output_dir / rso::artifact::kModel, &data->schema));
        return [cfg, data, model] { rso::stages::embed(*model, *data, cfg.output_dir, std::cerr); };
      });
  sub("elbow", "SSE curve over the configured k range",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        auto latent = std::make_shared<rso::Matrix>(rso::load_latent(cfg.output_dir, *data));
        return [cfg, data, latent] {
          rso::stages::elbow(cfg, *latent, *data, cfg.output_dir, std::cerr);
        };
      });
  sub("cluster", "k-means on the latent space",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        auto latent = std::make_shared<rso::Matrix>(rso::load_latent(cfg.output_dir, *data));
        return [cfg, data, latent] {
          rso::stages::cluster(cfg, *latent, *data, cfg.output_dir, std::cerr);
        };
      });
  sub("project", "2-D UMAP projection of the latent space",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        auto latent = std::make_shared<rso::Matrix>(rso::load_latent(cfg.output_dir, *data));
        return [cfg, data, latent] {
          rso::stages::project(cfg, *latent, *data, cfg.output_dir, std::cerr);
        };
      });
  sub("train-gbdt", "boosted trees predicting cluster labels from raw features",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        auto labels = rso::load_cluster_labels(cfg.output_dir, *data);
        return [cfg, data, labels] {
          rso::stages::train_gbdt(cfg, *data, labels, cfg.output_dir, std::cerr);
        };
      });
  auto* explain = sub(
      "explain", "feature importance and SHAP summary",
      [&cluster_id](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        auto labels = rso::load_cluster_labels(cfg.output_dir, *data);
        auto forest = std::make_shared<rso::BoostedForest>(
            rso::load_forest(cfg.output_dir / rso::artifact::kForest));
        if (cluster_id && *cluster_id >= forest->n_classes) {
          throw rso::ArgumentError("unknown cluster " + std::to_string(*cluster_id) +
                                   "; the forest has " + std::to_string(forest->n_classes));
        }
        const auto id = cluster_id;
        return [cfg, data, labels, forest, id] {
          rso::stages::explain(*forest, *data, labels, id, cfg.output_dir, std::cerr);
        };
      });
  explain->add_option("--cluster", cluster_id, "also explain this cluster's rows");
  sub("classify", "assign both taxonomy paths to every object",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        auto data = std::make_shared<rso::Dataset>(rso::load_dataset(cfg.output_dir));
        return [cfg, data] { rso::stages::classify(cfg, *data, cfg.output_dir, std::cerr); };
      });
  sub("report", "SVG figures and taxonomy reference from existing artifacts",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        return [cfg] { rso::stages::report(cfg, cfg.output_dir, std::cerr); };
      });
  sub("run", "every stage in order, then the report",
      [](const rso::PipelineConfig& cfg) -> Prepared {
        return [cfg] {
          rso::run_pipeline(cfg, std::cerr);
          rso::stages::report(cfg, cfg.output_dir, std::cerr);
        };
      });

  std::string fixture_out;
  rso::SyntheticOptions synth;
  auto* make = app.add_subcommand("make-fixture", "write a synthetic offline catalogue");
  make->add_option("--out", fixture_out, "fixture directory")->required();
  make->add_option("--leo", synth.leo_objects, "LEO objects");
  make->add_option("--seed", synth.seed, "generator seed");
  make->callback([&] { needs_config = false; });

  CLI11_PARSE(app, argc, argv);

  if (!needs_config) {
    try {
      rso::write_fixture(fixture_out, rso::make_synthetic_catalog(synth));
      std::cerr << "make-fixture: wrote " << fixture_out << '\n';
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitStage;
    }
  }

  Prepared work;
  try {
    const auto cfg = load_config(args);
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    work = action(cfg);
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
  try {
    work();
  } catch (const rso::StageError& e) {
    std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return kExitStage;
  }
  return kExitOk;
}
