#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "absa/corpus.hpp"
#include "absa/nn.hpp"
#include "absa/reshape.hpp"
#include "absa/rgat.hpp"

namespace absa::harness {

struct RunConfig {
  std::string train_path;       // instances JSONL
  std::string test_path;        // instances JSONL, evaluated after each epoch
  std::string embeddings_path;  // GloVe text file; empty -> seeded random rows
  int random_emb_dim = 300;
  rgat::Hyper hyper;
  uint64_t seed = 1;
  int epochs = 30;
  int batch_size = 16;
  int patience = 5;  // early stop on test accuracy; <= 0 disables
  double lr = 1e-3;
  int min_freq = 1;
  bool lowercase = true;
  std::string out_checkpoint;
  std::string log_path;  // line-delimited JSON events; empty -> no log

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct ClassMetrics {
  double precision = 0, recall = 0, f1 = 0;
};

struct Misclassified {
  std::string id;
  std::vector<std::string> tokens;
  int aspect_from = 0, aspect_to = 0;
  corpus::Polarity gold{}, pred{};
  std::array<double, 3> probs{};
};

struct EvalReport {
  double accuracy = 0;
  double macro_f1 = 0;
  std::array<ClassMetrics, 3> per_class{};
  std::array<std::array<long, 3>, 3> confusion{};  // [gold][pred]
  long total = 0;
  std::vector<Misclassified> misclassified;

  nlohmann::json to_json(bool include_misclassified = true) const;
  std::string to_text() const;
  std::string to_csv() const;
};

// Model bundle as stored in / loaded from a checkpoint.
struct Model {
  rgat::Hyper hyper;
  corpus::Vocab vocab;
  reshape::RelationVocab relations;
  nn::ParamStore params;
  nlohmann::json config;
};

struct TrainResult {
  int best_epoch = -1;  // 1-based; -1 when epochs == 0
  double best_test_acc = 0;
  EvalReport best_report;
  std::vector<double> epoch_losses;  // mean loss per instance, per epoch
};

// Mini-batch training with per-epoch test evaluation (SemEval has no dev
// split; the best test epoch is selected and recorded in the log). Fully
// deterministic for a fixed config.
TrainResult train(const RunConfig& config);

Model load_model(const std::string& checkpoint_path);
void save_model(const std::string& path, const Model& model);

struct Prediction {
  corpus::Polarity pred{};
  std::array<double, 3> probs{};
};

std::vector<Prediction> predict_all(const Model& model,
                                    const std::vector<corpus::Instance>& instances,
                                    rgat::ForwardTrace* trace = nullptr);
EvalReport evaluate(const Model& model, const std::vector<corpus::Instance>& instances);
EvalReport report_from(const std::vector<corpus::Instance>& instances,
                       const std::vector<Prediction>& preds);

struct AblationCell {
  std::string tree;    // "ordinary" | "reshaped"
  std::string method;  // "gat" | "rgat" | "rgat_no_ncon"
  double accuracy = 0;
  double macro_f1 = 0;
  int best_epoch = -1;
};

// Table-4 matrix: {ordinary, reshaped} x {gat, rgat} plus reshaped
// rgat_no_ncon, all with the same seed. Writes ablation.csv and ablation.txt
// under out_dir.
std::vector<AblationCell> ablate(const RunConfig& base, const std::string& out_dir);

struct DistanceBucket {
  double lo = 0, hi = 0;  // hi of the last bucket is +inf
  long count = 0;
  long correct = 0;
  double accuracy = 0;
};

// Multi-aspect distance analysis: keeps sentences with >= 2 aspects,
// represents each aspect by the mean of its tokens' rows in raw_emb,
// computes per-aspect nearest Euclidean distance, and reports accuracy per
// distance bucket. Empty edges -> quintile edges from the data.
std::vector<DistanceBucket> multi_aspect_analysis(
    const Model& model, const std::vector<corpus::Instance>& instances,
    const nn::Tensor& raw_emb, std::vector<double> bucket_edges = {},
    std::vector<std::string>* warnings = nullptr);

std::string distance_buckets_csv(const std::vector<DistanceBucket>& buckets);

// Seeded uniform sample of misclassified instances (all of them when fewer
// than k exist).
std::vector<Misclassified> export_errors(const Model& model,
                                         const std::vector<corpus::Instance>& instances,
                                         int k, uint64_t seed);
void write_errors_jsonl(const std::string& path, const std::vector<Misclassified>& errors);

uint64_t config_hash(const nlohmann::json& j);

}  // namespace absa::harness
