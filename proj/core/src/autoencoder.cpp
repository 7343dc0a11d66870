#include "rso/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "rso/csv.hpp"
#include "rso/error.hpp"
#include "rso/random.hpp"

namespace rso {
namespace {

using nlohmann::json;

// Activations of one forward pass, reused across rows.
struct ForwardCache {
  std::vector<double> input;
  std::vector<double> fused;
  std::vector<std::vector<double>> enc_pre, enc_out;
  std::vector<std::vector<double>> dec_pre, dec_out;
  std::vector<double> real_out;
  std::vector<std::vector<double>> logits;

  // Backward scratch.
  std::vector<double> d_hidden;
  std::vector<double> d_tmp;
  std::vector<double> d_pre;

  explicit ForwardCache(const AutoencoderModel& m) {
    input.resize(2 * m.n_real);
    fused.resize(m.architecture.model_width());
    for (const auto& l : m.encoder) {
      enc_pre.emplace_back(l.out_dim());
      enc_out.emplace_back(l.out_dim());
    }
    for (const auto& l : m.decoder) {
      dec_pre.emplace_back(l.out_dim());
      dec_out.emplace_back(l.out_dim());
    }
    real_out.resize(m.n_real);
    for (const auto v : m.vocabulary_sizes) logits.emplace_back(v);
  }
};

void check_row(const AutoencoderModel& m, const FeatureRow& row) {
  if (row.real.size() != m.n_real || row.missing.size() != m.n_real ||
      row.codes.size() != m.vocabulary_sizes.size()) {
    throw ArgumentError("feature row does not match the model's schema");
  }
  for (std::size_t f = 0; f < row.codes.size(); ++f) {
    if (row.codes[f] < 0 ||
        static_cast<std::size_t>(row.codes[f]) >= m.vocabulary_sizes[f]) {
      throw ArgumentError("categorical code out of vocabulary range");
    }
  }
}

void check_finite(std::span<const double> v, const std::string& where) {
  for (const double x : v) {
    if (!std::isfinite(x)) throw NumericError("non-finite activation in " + where);
  }
}

void relu_inplace(std::span<const double> pre, std::span<double> out) {
  for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

void fuse_into(const AutoencoderModel& m, const FeatureRow& row, ForwardCache& c) {
  for (std::size_t i = 0; i < m.n_real; ++i) {
    const bool miss = row.missing[i] != 0;
    c.input[i] = miss ? 0.0 : row.real[i];
    c.input[m.n_real + i] = miss ? 1.0 : 0.0;
  }
  m.input_map.forward(c.input, c.fused);
  for (std::size_t f = 0; f < m.embeddings.size(); ++f) {
    const auto e = m.embeddings[f].lookup(static_cast<std::size_t>(row.codes[f]));
    for (std::size_t k = 0; k < c.fused.size(); ++k) c.fused[k] += e[k];
  }
}

// Runs the encoder from c.fused; returns the bottleneck activations.
std::span<const double> encode_into(const AutoencoderModel& m, ForwardCache& c) {
  std::span<const double> h = c.fused;
  for (std::size_t i = 0; i < m.encoder.size(); ++i) {
    m.encoder[i].forward(h, c.enc_pre[i]);
    if (i + 1 < m.encoder.size()) {
      relu_inplace(c.enc_pre[i], c.enc_out[i]);
    } else {
      c.enc_out[i] = c.enc_pre[i];
    }
    check_finite(c.enc_out[i], "encoder layer " + std::to_string(i));
    h = c.enc_out[i];
  }
  return h;
}

void decode_into(const AutoencoderModel& m, std::span<const double> latent,
                 ForwardCache& c) {
  std::span<const double> h = latent;
  for (std::size_t j = 0; j < m.decoder.size(); ++j) {
    m.decoder[j].forward(h, c.dec_pre[j]);
    relu_inplace(c.dec_pre[j], c.dec_out[j]);
    check_finite(c.dec_out[j], "decoder layer " + std::to_string(j));
    h = c.dec_out[j];
  }
  m.real_head.forward(h, c.real_out);
  for (std::size_t f = 0; f < m.categorical_heads.size(); ++f) {
    m.categorical_heads[f].forward(h, c.logits[f]);
  }
}

LossBreakdown loss_into(const AutoencoderModel& m, const FeatureRow& row,
                        const LossWeights& w, ForwardCache& c,
                        AutoencoderModel* grads, double scale) {
  fuse_into(m, row, c);
  const auto latent = encode_into(m, c);
  decode_into(m, latent, c);

  std::vector<std::uint8_t> observed(m.n_real);
  for (std::size_t i = 0; i < m.n_real; ++i) observed[i] = row.missing[i] ? 0 : 1;
  const auto mse = nn::masked_mse(c.real_out, row.real, observed);
  LossBreakdown out;
  out.real = mse.loss;
  const double n_cat = static_cast<double>(m.categorical_heads.size());
  std::vector<nn::LossResult> ce;
  ce.reserve(m.categorical_heads.size());
  for (std::size_t f = 0; f < m.categorical_heads.size(); ++f) {
    ce.push_back(nn::softmax_cross_entropy(c.logits[f],
                                           static_cast<std::size_t>(row.codes[f])));
    out.categorical += ce.back().loss;
  }
  if (n_cat > 0) out.categorical /= n_cat;
  out.total = w.real * out.real + w.categorical * out.categorical;
  if (!grads) return out;

  // Backward pass.
  AutoencoderModel& g = *grads;
  const std::span<const double> hidden =
      m.decoder.empty() ? latent : std::span<const double>(c.dec_out.back());
  c.d_hidden.assign(hidden.size(), 0.0);
  c.d_tmp.assign(hidden.size(), 0.0);
  {
    std::vector<double> d_real(mse.grad);
    for (double& v : d_real) v *= scale * w.real;
    g.real_head.backward(hidden, d_real, c.d_tmp);
    for (std::size_t k = 0; k < hidden.size(); ++k) c.d_hidden[k] += c.d_tmp[k];
  }
  const double cat_scale = n_cat > 0 ? scale * w.categorical / n_cat : 0.0;
  for (std::size_t f = 0; f < m.categorical_heads.size(); ++f) {
    auto d_logits = ce[f].grad;
    for (double& v : d_logits) v *= cat_scale;
    g.categorical_heads[f].backward(hidden, d_logits, c.d_tmp);
    for (std::size_t k = 0; k < hidden.size(); ++k) c.d_hidden[k] += c.d_tmp[k];
  }

  for (std::size_t j = m.decoder.size(); j-- > 0;) {
    const auto& pre = c.dec_pre[j];
    c.d_pre.assign(pre.size(), 0.0);
    for (std::size_t k = 0; k < pre.size(); ++k) {
      c.d_pre[k] = pre[k] > 0.0 ? c.d_hidden[k] : 0.0;
    }
    const std::span<const double> in = j == 0 ? latent : std::span<const double>(c.dec_out[j - 1]);
    c.d_hidden.assign(in.size(), 0.0);
    g.decoder[j].backward(in, c.d_pre, c.d_hidden);
  }
  for (std::size_t i = m.encoder.size(); i-- > 0;) {
    const auto& pre = c.enc_pre[i];
    c.d_pre.assign(pre.size(), 0.0);
    const bool linear = i + 1 == m.encoder.size();
    for (std::size_t k = 0; k < pre.size(); ++k) {
      c.d_pre[k] = (linear || pre[k] > 0.0) ? c.d_hidden[k] : 0.0;
    }
    const std::span<const double> in = i == 0 ? std::span<const double>(c.fused)
                                              : std::span<const double>(c.enc_out[i - 1]);
    c.d_hidden.assign(in.size(), 0.0);
    g.encoder[i].backward(in, c.d_pre, c.d_hidden);
  }
  // c.d_hidden now holds d loss / d fused.
  g.input_map.backward(c.input, c.d_hidden, {});
  for (std::size_t f = 0; f < m.embeddings.size(); ++f) {
    g.embeddings[f].backward(static_cast<std::size_t>(row.codes[f]), c.d_hidden);
  }
  return out;
}

void scale_gradients(AutoencoderModel& m, double factor) {
  for (auto& p : m.parameters()) {
    for (double& g : p.grad) g *= factor;
  }
}

double mean_loss(const AutoencoderModel& m, const FeatureMatrix& x,
                 std::span<const std::size_t> rows, const LossWeights& w,
                 ForwardCache& c) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto r : rows) sum += loss_into(m, feature_row(x, r), w, c, nullptr, 1.0).total;
  return sum / static_cast<double>(rows.size());
}

std::vector<std::string> parameter_names(const AutoencoderModel& m) {
  std::vector<std::string> names = {"input_map.weight", "input_map.bias"};
  for (std::size_t f = 0; f < m.embeddings.size(); ++f) {
    names.push_back("embedding." + std::to_string(f));
  }
  for (std::size_t i = 0; i < m.encoder.size(); ++i) {
    names.push_back("encoder." + std::to_string(i) + ".weight");
    names.push_back("encoder." + std::to_string(i) + ".bias");
  }
  for (std::size_t i = 0; i < m.decoder.size(); ++i) {
    names.push_back("decoder." + std::to_string(i) + ".weight");
    names.push_back("decoder." + std::to_string(i) + ".bias");
  }
  names.push_back("real_head.weight");
  names.push_back("real_head.bias");
  for (std::size_t f = 0; f < m.categorical_heads.size(); ++f) {
    names.push_back("categorical_head." + std::to_string(f) + ".weight");
    names.push_back("categorical_head." + std::to_string(f) + ".bias");
  }
  return names;
}

}  // namespace

void ArchitectureSpec::validate() const {
  if (widths.size() < 3 || widths.size() % 2 == 0) {
    throw ValidationError("architecture " + to_string() +
                          ": need an odd number (>= 3) of widths");
  }
  if (!std::equal(widths.begin(), widths.end(), widths.rbegin())) {
    throw ValidationError("architecture " + to_string() + " is not palindromic");
  }
  if (std::find(widths.begin(), widths.end(), 0u) != widths.end()) {
    throw ValidationError("architecture " + to_string() + " has a zero width");
  }
  if (widths.front() != kModelWidth) {
    throw ValidationError("architecture " + to_string() + " must start at width " +
                          std::to_string(kModelWidth));
  }
}

std::string ArchitectureSpec::to_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(widths[i]);
  }
  return s + "]";
}

ArchitectureSpec ArchitectureSpec::parse(std::string_view text) {
  ArchitectureSpec spec;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const auto v = parse_int(token);
    if (!v || *v <= 0) throw ValidationError("bad architecture width '" + token + "'");
    spec.widths.push_back(static_cast<std::size_t>(*v));
    token.clear();
  };
  for (const char c : text) {
    if (c >= '0' && c <= '9') {
      token.push_back(c);
    } else if (c == ',' || c == '-' || c == ' ' || c == '[' || c == ']') {
      flush();
    } else {
      throw ValidationError("bad architecture '" + std::string(text) + "'");
    }
  }
  flush();
  spec.validate();
  return spec;
}

std::vector<ArchitectureSpec> reference_architectures() {
  return {{{16, 8, 4, 2, 4, 8, 16}}, {{16, 8, 4, 8, 16}}, {{16, 8, 2, 8, 16}},
          {{16, 4, 2, 4, 16}},       {{16, 4, 16}},       {{16, 2, 16}}};
}

AutoencoderModel::AutoencoderModel(const ArchitectureSpec& spec, std::size_t n_real_,
                                   std::vector<std::size_t> vocab, std::uint64_t seed,
                                   const nn::AdamConfig& adam)
    : architecture(spec), n_real(n_real_), vocabulary_sizes(std::move(vocab)) {
  spec.validate();
  const std::size_t d = spec.model_width();
  Rng rng(seed);
  input_map = nn::AffineLayer(2 * n_real, d);
  input_map.init_glorot(rng);
  for (const auto v : vocabulary_sizes) {
    if (v == 0) throw ValidationError("empty categorical vocabulary");
    embeddings.emplace_back(v, d);
    embeddings.back().init_normal(rng, 0.05);
  }
  const std::size_t mid = spec.widths.size() / 2;
  for (std::size_t i = 0; i < mid; ++i) {
    encoder.emplace_back(spec.widths[i], spec.widths[i + 1]);
    encoder.back().init_glorot(rng);
  }
  for (std::size_t i = mid; i + 1 < spec.widths.size(); ++i) {
    decoder.emplace_back(spec.widths[i], spec.widths[i + 1]);
    decoder.back().init_glorot(rng);
  }
  real_head = nn::AffineLayer(d, n_real);
  real_head.init_glorot(rng);
  for (const auto v : vocabulary_sizes) {
    categorical_heads.emplace_back(d, v);
    categorical_heads.back().init_glorot(rng);
  }
  const auto params = parameters();
  optimizer = nn::AdamState(adam, params);
}

std::vector<nn::ParamBlock> AutoencoderModel::parameters() {
  std::vector<nn::ParamBlock> p;
  auto affine = [&p](nn::AffineLayer& l) {
    p.push_back({l.weight.values(), l.weight_grad.values()});
    p.push_back({l.bias, l.bias_grad});
  };
  affine(input_map);
  for (auto& e : embeddings) p.push_back({e.table.values(), e.grad.values()});
  for (auto& l : encoder) affine(l);
  for (auto& l : decoder) affine(l);
  affine(real_head);
  for (auto& l : categorical_heads) affine(l);
  return p;
}

void AutoencoderModel::zero_grad() {
  for (auto& p : parameters()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : const_cast<AutoencoderModel*>(this)->parameters()) {
    n += p.value.size();
  }
  return n;
}

FeatureRow feature_row(const FeatureMatrix& m, std::size_t r) {
  return {m.real_row(r), m.missing_row(r), m.code_row(r), r};
}

std::vector<double> fuse_features(const AutoencoderModel& model,
                                  const FeatureRow& row) {
  check_row(model, row);
  ForwardCache c(model);
  fuse_into(model, row, c);
  return c.fused;
}

LatentPoint encode(const AutoencoderModel& model, const FeatureRow& row) {
  check_row(model, row);
  ForwardCache c(model);
  fuse_into(model, row, c);
  const auto z = encode_into(model, c);
  return {std::vector<double>(z.begin(), z.end()), row.id};
}

Reconstruction decode(const AutoencoderModel& model, std::span<const double> latent) {
  if (latent.size() != model.latent_dim()) {
    throw ArgumentError("latent width " + std::to_string(latent.size()) +
                        " does not match bottleneck " +
                        std::to_string(model.latent_dim()));
  }
  ForwardCache c(model);
  decode_into(model, latent, c);
  return {c.real_out, c.logits};
}

LossBreakdown composite_loss(const AutoencoderModel& model, const FeatureRow& row,
                             const LossWeights& weights) {
  check_row(model, row);
  ForwardCache c(model);
  return loss_into(model, row, weights, c, nullptr, 1.0);
}

LossBreakdown composite_loss_backward(AutoencoderModel& model, const FeatureRow& row,
                                      const LossWeights& weights, double scale) {
  check_row(model, row);
  ForwardCache c(model);
  return loss_into(model, row, weights, c, &model, scale);
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ValidationError("train: epochs must be positive");
  if (batch_size == 0) throw ValidationError("train: batch size must be positive");
  if (weights.real < 0 || weights.categorical < 0 ||
      (weights.real == 0 && weights.categorical == 0)) {
    throw ValidationError("train: loss weights must be >= 0 and not both 0");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ValidationError("train: validation fraction must be in [0, 1)");
  }
  if (!(adam.learning_rate > 0.0)) {
    throw ValidationError("train: learning rate must be positive");
  }
}

TrainResult train(const FeatureMatrix& matrix, const ArchitectureSpec& spec,
                  const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (matrix.n_rows == 0) throw ValidationError("train: empty feature matrix");

  std::vector<std::size_t> order(matrix.n_rows);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, "split"));
  split_rng.shuffle(std::span<std::size_t>(order));
  std::size_t n_val = 0;
  if (matrix.n_rows >= 10) {
    n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.validation_fraction *
                                                 static_cast<double>(matrix.n_rows))));
    if (cfg.validation_fraction == 0.0) n_val = 0;
  }
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<long>(n_val), order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  const std::span<const std::size_t> monitor = val_rows.empty() ? train_rows : val_rows;

  TrainResult result;
  AutoencoderModel model(spec, matrix.n_real, matrix.schema.vocabulary_sizes(),
                         derive_seed(cfg.seed, "init"), cfg.adam);
  ForwardCache cache(model);

  const double initial_train = mean_loss(model, matrix, train_rows, cfg.weights, cache);
  double best = mean_loss(model, matrix, monitor, cfg.weights, cache);
  result.history.push_back({0, initial_train, best});
  result.model = model;
  result.best_epoch = 0;

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(train_rows));
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train_rows.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < end; ++k) {
        epoch_sum += loss_into(model, feature_row(matrix, train_rows[k]), cfg.weights,
                               cache, &model, 1.0)
                         .total;
      }
      scale_gradients(model, 1.0 / static_cast<double>(end - start));
      const auto params = model.parameters();
      try {
        nn::adam_step(params, model.optimizer);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ": " + e.what());
      }
    }
    const double train_loss = epoch_sum / static_cast<double>(train_rows.size());
    double val_loss = 0.0;
    try {
      val_loss = mean_loss(model, matrix, monitor, cfg.weights, cache);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": " + e.what());
    }
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": loss is not finite");
    }
    result.history.push_back({epoch, train_loss, val_loss});
    if (val_loss < best) {
      best = val_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }
  return result;
}

ErrorSummary reconstruction_error(const AutoencoderModel& model,
                                  const FeatureMatrix& matrix,
                                  const LossWeights& weights) {
  if (matrix.n_rows == 0) return {};
  ForwardCache c(model);
  std::vector<double> losses(matrix.n_rows);
  for (std::size_t r = 0; r < matrix.n_rows; ++r) {
    const auto row = feature_row(matrix, r);
    check_row(model, row);
    losses[r] = loss_into(model, row, weights, c, nullptr, 1.0).total;
  }
  ErrorSummary s;
  for (const double l : losses) s.mean += l;
  s.mean /= static_cast<double>(losses.size());
  double ss = 0.0;
  for (const double l : losses) ss += (l - s.mean) * (l - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(losses.size()));
  return s;
}

Matrix encode_all(const AutoencoderModel& model, const FeatureMatrix& matrix) {
  Matrix out(matrix.n_rows, model.latent_dim());
  ForwardCache c(model);
  for (std::size_t r = 0; r < matrix.n_rows; ++r) {
    const auto row = feature_row(matrix, r);
    check_row(model, row);
    fuse_into(model, row, c);
    const auto z = encode_into(model, c);
    std::copy(z.begin(), z.end(), out.row(r).begin());
  }
  return out;
}

std::vector<ArchitectureResult> compare_architectures(
    const FeatureMatrix& matrix, std::span<const ArchitectureSpec> specs,
    std::size_t trials, const TrainConfig& base) {
  if (trials == 0) throw ValidationError("compare_architectures: trials must be >= 1");
  std::vector<ArchitectureResult> results;
  for (const auto& spec : specs) {
    ArchitectureResult r;
    r.spec = spec;
    try {
      for (std::size_t t = 0; t < trials; ++t) {
        TrainConfig cfg = base;
        cfg.seed = derive_seed(base.seed, spec.to_string(), t);
        const auto trained = train(matrix, spec, cfg);
        r.trial_errors.push_back(
            reconstruction_error(trained.model, matrix, cfg.weights).mean);
      }
      r.mean = std::accumulate(r.trial_errors.begin(), r.trial_errors.end(), 0.0) /
               static_cast<double>(r.trial_errors.size());
      double ss = 0.0;
      for (const double e : r.trial_errors) ss += (e - r.mean) * (e - r.mean);
      r.stddev = std::sqrt(ss / static_cast<double>(r.trial_errors.size()));
    } catch (const Error& e) {
      r.failure = e.what();
    }
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const ArchitectureResult& a, const ArchitectureResult& b) {
                     if (a.failure.has_value() != b.failure.has_value()) {
                       return !a.failure.has_value();
                     }
                     if (a.failure) return false;
                     return a.mean < b.mean;
                   });
  return results;
}

std::string model_to_json(const AutoencoderModel& model,
                          std::string_view schema_fingerprint,
                          std::span<const EpochRecord> history) {
  auto& m = const_cast<AutoencoderModel&>(model);
  const auto params = m.parameters();
  const auto names = parameter_names(model);
  json tensors = json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    tensors.push_back({{"name", names[i]},
                       {"size", params[i].value.size()},
                       {"values", std::vector<double>(params[i].value.begin(),
                                                      params[i].value.end())}});
  }
  const auto& opt = model.optimizer;
  json doc = {
      {"format", "rso-taxa.autoencoder"},
      {"version", 1},
      {"schema_fingerprint", std::string(schema_fingerprint)},
      {"architecture", model.architecture.widths},
      {"n_real", model.n_real},
      {"vocabulary_sizes", model.vocabulary_sizes},
      {"tensors", std::move(tensors)},
      {"optimizer",
       {{"learning_rate", opt.config.learning_rate},
        {"beta1", opt.config.beta1},
        {"beta2", opt.config.beta2},
        {"epsilon", opt.config.epsilon},
        {"step", opt.step},
        {"first_moment", opt.first_moment},
        {"second_moment", opt.second_moment}}}};
  json hist = json::array();
  for (const auto& e : history) hist.push_back({e.epoch, e.train_loss, e.val_loss});
  doc["history"] = std::move(hist);
  return doc.dump() + "\n";
}

AutoencoderModel model_from_json(std::string_view text, const FeatureSchema* schema) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model bundle: invalid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "rso-taxa.autoencoder") {
      throw SchemaError("format: not an autoencoder bundle");
    }
    if (doc.at("version").get<int>() != 1) {
      throw SchemaError("version: unsupported model bundle version");
    }
    ArchitectureSpec spec{doc.at("architecture").get<std::vector<std::size_t>>()};
    const auto n_real = doc.at("n_real").get<std::size_t>();
    auto vocab = doc.at("vocabulary_sizes").get<std::vector<std::size_t>>();
    if (schema) {
      if (schema->real_features().size() != n_real || schema->vocabulary_sizes() != vocab) {
        throw SchemaError("model bundle shapes do not match the feature schema");
      }
      const auto fp = doc.at("schema_fingerprint").get<std::string>();
      if (!fp.empty() && fp != schema->fingerprint()) {
        throw SchemaError("schema_fingerprint: model was trained on a different schema");
      }
    }
    const auto& o = doc.at("optimizer");
    nn::AdamConfig adam{o.at("learning_rate").get<double>(), o.at("beta1").get<double>(),
                        o.at("beta2").get<double>(), o.at("epsilon").get<double>()};
    AutoencoderModel model(spec, n_real, vocab, 0, adam);
    auto params = model.parameters();
    const auto names = parameter_names(model);
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != params.size()) {
      throw SchemaError("tensors: expected " + std::to_string(params.size()) + " entries");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& t = tensors.at(i);
      if (t.at("name").get<std::string>() != names[i]) {
        throw SchemaError("tensors[" + std::to_string(i) + "].name: expected " + names[i]);
      }
      const auto values = t.at("values").get<std::vector<double>>();
      if (values.size() != params[i].value.size()) {
        throw SchemaError("tensors[" + std::to_string(i) + "]: shape mismatch for " +
                          names[i]);
      }
      std::copy(values.begin(), values.end(), params[i].value.begin());
    }
    model.optimizer.step = o.at("step").get<std::uint64_t>();
    auto m1 = o.at("first_moment").get<std::vector<std::vector<double>>>();
    auto m2 = o.at("second_moment").get<std::vector<std::vector<double>>>();
    if (m1.size() != params.size() || m2.size() != params.size()) {
      throw SchemaError("optimizer: moment block count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (m1[i].size() != params[i].value.size() || m2[i].size() != params[i].value.size()) {
        throw SchemaError("optimizer: moment shape mismatch for " + names[i]);
      }
    }
    model.optimizer.first_moment = std::move(m1);
    model.optimizer.second_moment = std::move(m2);
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model bundle: ") + e.what());
  } catch (const ValidationError& e) {
    throw SchemaError(std::string("model bundle: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const AutoencoderModel& model,
                std::string_view schema_fingerprint, std::span<const EpochRecord> history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model, schema_fingerprint, history);
}

std::vector<EpochRecord> history_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    std::vector<EpochRecord> out;
    if (!doc.contains("history")) return out;
    for (const auto& e : doc.at("history")) {
      out.push_back({e.at(0).get<std::size_t>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model bundle history: ") + e.what());
  }
}

AutoencoderModel load_model(const std::filesystem::path& path,
                            const FeatureSchema* schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("model bundle not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str(), schema);
}

}  // namespace rso
