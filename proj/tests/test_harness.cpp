#include <doctest.h>

#include <algorithm>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "absa/checkpoint.hpp"
#include "absa/error.hpp"
#include "absa/harness.hpp"
#include "support/test_util.hpp"

using namespace absa;
namespace harness = absa::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path tmp_dir() {
  fs::path p = fs::temp_directory_path() / "absa_harness_tests";
  fs::create_directories(p);
  return p;
}

// Small, fast config over the synthetic dataset.
harness::RunConfig synthetic_config(const std::string& stem, int epochs, uint64_t seed = 3) {
  fs::path dir = tmp_dir();
  auto instances = testutil::make_synthetic(24);
  corpus::write_instances_jsonl((dir / (stem + ".train.jsonl")).string(), instances);

  harness::RunConfig cfg;
  cfg.train_path = (dir / (stem + ".train.jsonl")).string();
  cfg.test_path = cfg.train_path;
  cfg.random_emb_dim = 6;
  cfg.hyper.layers = 1;
  cfg.hyper.att_heads = 2;
  cfg.hyper.rel_heads = 2;
  cfg.hyper.hidden = 8;
  cfg.hyper.lstm_hidden = 4;
  cfg.hyper.rel_dim = 6;
  cfg.hyper.gate_hidden = 3;
  cfg.hyper.dropout = 0.1;
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.patience = 0;
  cfg.lr = 0.01;
  cfg.out_checkpoint = (dir / (stem + ".ckpt")).string();
  cfg.log_path = (dir / (stem + ".log.jsonl")).string();
  return cfg;
}

std::vector<harness::Prediction> const_preds(size_t n, corpus::Polarity p) {
  std::vector<harness::Prediction> out(n);
  for (auto& pr : out) pr.pred = p;
  return out;
}

}  // namespace

TEST_CASE("metrics: perfect diagonal confusion") {
  std::vector<corpus::Instance> instances;
  std::vector<harness::Prediction> preds;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10; ++i) {
      corpus::Instance inst = testutil::make_synthetic(1)[0];
      inst.label = static_cast<corpus::Polarity>(c);
      instances.push_back(inst);
      harness::Prediction p;
      p.pred = static_cast<corpus::Polarity>(c);
      preds.push_back(p);
    }
  harness::EvalReport r = harness::report_from(instances, preds);
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.misclassified.empty());
  for (int c = 0; c < 3; ++c)
    CHECK(r.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)] == 10);
}

TEST_CASE("metrics: constant predictor on a balanced set") {
  std::vector<corpus::Instance> instances;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10; ++i) {
      corpus::Instance inst = testutil::make_synthetic(1)[0];
      inst.label = static_cast<corpus::Polarity>(c);
      instances.push_back(inst);
    }
  harness::EvalReport r = harness::report_from(
      instances, const_preds(instances.size(), corpus::Polarity::positive));
  CHECK(r.accuracy == doctest::Approx(1.0 / 3));
  // predicted class: P = 1/3, R = 1 -> F1 = 0.5; the others 0
  CHECK(r.per_class[0].f1 == doctest::Approx(0.5));
  CHECK(r.per_class[1].f1 == 0.0);
  CHECK(r.per_class[2].f1 == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(0.5 / 3));
  CHECK(r.misclassified.size() == 20);
}

TEST_CASE("metrics: report invariants hold on recomputation") {
  auto cfg = synthetic_config("metrics", 1);
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);
  auto instances = corpus::read_instances_jsonl(cfg.train_path);
  harness::EvalReport r = harness::evaluate(model, instances);
  long trace = 0, total = 0;
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p) {
      total += r.confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
      if (g == p) trace += r.confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
    }
  CHECK(total == r.total);
  CHECK(r.accuracy == doctest::Approx(static_cast<double>(trace) / total));
  double f1_sum = 0;
  for (const auto& pc : r.per_class) f1_sum += pc.f1;
  CHECK(r.macro_f1 == doctest::Approx(f1_sum / 3));
  CHECK(static_cast<long>(r.misclassified.size()) == r.total - trace);
}

TEST_CASE("evaluate is pure") {
  auto cfg = synthetic_config("pure", 1);
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);
  auto instances = corpus::read_instances_jsonl(cfg.train_path);
  harness::EvalReport a = harness::evaluate(model, instances);
  harness::EvalReport b = harness::evaluate(model, instances);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion == b.confusion);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("train with epochs=0 writes the untouched initial parameters") {
  auto cfg = synthetic_config("init", 0);
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);

  // rebuild the init independently through the public pieces
  auto instances = corpus::read_instances_jsonl(cfg.train_path);
  std::vector<corpus::Instance> all = instances;
  all.insert(all.end(), instances.begin(), instances.end());  // train + test (same file)
  corpus::Vocab vocab = corpus::Vocab::build(all, cfg.min_freq, cfg.lowercase);
  CHECK(vocab.tokens() == model.vocab.tokens());

  nn::Tensor emb = corpus::random_embeddings(vocab, cfg.random_emb_dim, cfg.seed);
  std::vector<reshape::AspectTree> trees;
  std::set<std::string> extra;
  for (const auto& inst : all) {
    trees.push_back(
        reshape::build(inst.parse, inst.aspect_from, inst.aspect_to, cfg.hyper.n_max));
    for (const auto& r : inst.parse.rels) extra.insert(r);
  }
  reshape::RelationVocab relations = reshape::RelationVocab::build(
      trees, cfg.hyper.n_max, std::vector<std::string>(extra.begin(), extra.end()));
  CHECK(relations.labels() == model.relations.labels());

  nn::ParamStore fresh;
  rgat::init_params(fresh, cfg.hyper, std::move(emb), relations.size(), cfg.seed);
  for (const auto& [name, entry] : fresh.entries())
    CHECK(model.params.value(name).data == entry.value.data);
}

TEST_CASE("training determinism: one config run twice gives identical bytes") {
  auto cfg = synthetic_config("det", 3, 17);
  harness::TrainResult r1 = harness::train(cfg);
  std::string ckpt = slurp(cfg.out_checkpoint);
  std::string log = slurp(cfg.log_path);
  REQUIRE(!ckpt.empty());
  REQUIRE(!log.empty());
  harness::TrainResult r2 = harness::train(cfg);
  CHECK(r1.epoch_losses == r2.epoch_losses);
  CHECK(r1.best_test_acc == r2.best_test_acc);
  CHECK(slurp(cfg.out_checkpoint) == ckpt);
  CHECK(slurp(cfg.log_path) == log);
}

TEST_CASE("different seeds diverge") {
  auto cfg1 = synthetic_config("seedA", 2, 5);
  auto cfg2 = synthetic_config("seedB", 2, 6);
  cfg2.train_path = cfg1.train_path;
  cfg2.test_path = cfg1.test_path;
  harness::train(cfg1);
  harness::train(cfg2);
  CHECK(slurp(cfg1.out_checkpoint) != slurp(cfg2.out_checkpoint));
}

TEST_CASE("checkpoint round trip preserves everything") {
  auto cfg = synthetic_config("roundtrip", 1);
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);
  fs::path copy = tmp_dir() / "copy.ckpt";
  harness::save_model(copy.string(), model);
  harness::Model back = harness::load_model(copy.string());
  CHECK(back.vocab.tokens() == model.vocab.tokens());
  CHECK(back.relations.labels() == model.relations.labels());
  CHECK(back.config.dump() == model.config.dump());
  for (const auto& [name, entry] : model.params.entries())
    CHECK(back.params.value(name).data == entry.value.data);

  ckpt::Checkpoint raw = ckpt::load(cfg.out_checkpoint);
  CHECK(raw.tensors.count("word_emb") == 1);
  CHECK_THROWS(ckpt::load(cfg.train_path));  // not a checkpoint file
}

TEST_CASE("export_errors: sampling honors k and the seed") {
  auto cfg = synthetic_config("errors", 0);  // untrained: plenty of mistakes
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);
  auto instances = corpus::read_instances_jsonl(cfg.train_path);
  harness::EvalReport r = harness::evaluate(model, instances);
  REQUIRE(!r.misclassified.empty());

  auto all = harness::export_errors(model, instances, 10000, 1);
  CHECK(all.size() == r.misclassified.size());

  if (r.misclassified.size() >= 4) {
    int k = static_cast<int>(r.misclassified.size()) - 2;
    auto s1 = harness::export_errors(model, instances, k, 42);
    auto s2 = harness::export_errors(model, instances, k, 42);
    REQUIRE(s1.size() == static_cast<size_t>(k));
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].id == s2[i].id);
  }

  fs::path out = tmp_dir() / "errors.jsonl";
  harness::write_errors_jsonl(out.string(), all);
  std::ifstream in(out);
  std::string line;
  size_t lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == all.size());
}

TEST_CASE("multi-aspect analysis: bucket assignment matches hand distances") {
  auto cfg = synthetic_config("distance", 0);
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);

  // two sentences with two aspects each plus a single-aspect sentence
  auto base = testutil::make_synthetic(5);
  std::vector<corpus::Instance> instances;
  corpus::Instance a1 = base[0], a2 = base[0];
  a1.id = a2.id = "multi-near";
  a2.aspect_from = a2.aspect_to = 2;  // identical aspect tokens -> distance 0
  instances.push_back(a1);
  instances.push_back(a2);
  corpus::Instance b1 = base[1], b2 = base[1];
  b1.id = b2.id = "multi-far";
  b2.aspect_from = b2.aspect_to = 4;  // different token -> distance > 0
  instances.push_back(b1);
  instances.push_back(b2);
  corpus::Instance single = base[2];
  single.id = "single";
  instances.push_back(single);

  // raw embeddings: controlled rows so distances are known
  int dim = 3;
  nn::Tensor raw = nn::Tensor::zeros({model.vocab.size(), dim});
  int thing = model.vocab.lookup("thing");
  int other = model.vocab.lookup(b2.tokens[3]);  // the aspect-4 token of sentence b
  REQUIRE(thing != model.vocab.unk_index());
  REQUIRE(other != model.vocab.unk_index());
  raw.at(other, 0) = 3.0;
  raw.at(other, 1) = 4.0;  // Euclidean distance 5 from "thing"

  std::vector<std::string> warnings;
  auto buckets =
      harness::multi_aspect_analysis(model, instances, raw, {1.0}, &warnings);
  REQUIRE(buckets.size() == 2);
  CHECK(buckets[0].count == 2);  // the distance-0 pair
  CHECK(buckets[1].count == 2);  // the distance-5 pair
  CHECK(buckets[0].lo == 0.0);
  CHECK(std::isinf(buckets[1].hi));

  // single-aspect sentences are excluded entirely
  long counted = buckets[0].count + buckets[1].count;
  CHECK(counted == 4);

  // default quintile edges also cover every kept aspect
  auto quintiles = harness::multi_aspect_analysis(model, instances, raw, {}, nullptr);
  long total = 0;
  for (const auto& b : quintiles) total += b.count;
  CHECK(total == 4);
  std::string csv = harness::distance_buckets_csv(quintiles);
  CHECK(csv.find("bucket,lo,hi,count,correct,accuracy") == 0);
}

TEST_CASE("export_errors: a perfect model exports nothing") {
  auto cfg = synthetic_config("perfect", 30);
  cfg.hyper.dropout = 0.0;
  cfg.patience = 6;
  harness::TrainResult r = harness::train(cfg);
  REQUIRE(r.best_test_acc == 1.0);
  harness::Model model = harness::load_model(cfg.out_checkpoint);
  auto instances = corpus::read_instances_jsonl(cfg.train_path);
  CHECK(harness::export_errors(model, instances, 100, 1).empty());
}

TEST_CASE("multi-aspect analysis: fully OOV aspects warn and use the unk row") {
  auto cfg = synthetic_config("oov", 0);
  harness::train(cfg);
  harness::Model model = harness::load_model(cfg.out_checkpoint);

  auto base = testutil::make_synthetic(2);
  std::vector<corpus::Instance> instances;
  corpus::Instance a1 = base[0], a2 = base[0];
  a1.id = a2.id = "oov-pair";
  a2.tokens[1] = "zzz-unseen";  // aspect token outside the model vocab
  a2.parse.tokens = a2.tokens;
  instances.push_back(a1);
  instances.push_back(a2);

  nn::Tensor raw = nn::Tensor::zeros({model.vocab.size(), 2});
  std::vector<std::string> warnings;
  auto buckets = harness::multi_aspect_analysis(model, instances, raw, {0.5}, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("OOV") != std::string::npos);
  long total = 0;
  for (const auto& b : buckets) total += b.count;
  CHECK(total == 2);
}

TEST_CASE("ablate runs the five-cell matrix and writes reports") {
  auto cfg = synthetic_config("ablate", 2);
  fs::path out_dir = tmp_dir() / "ablation";
  auto cells = harness::ablate(cfg, out_dir.string());
  REQUIRE(cells.size() == 5);
  CHECK(cells[0].tree == "ordinary");
  CHECK(cells[0].method == "gat");
  CHECK(cells[4].method == "rgat_no_ncon");
  for (const auto& c : cells) {
    CHECK(c.accuracy >= 0.0);
    CHECK(c.accuracy <= 1.0);
  }
  CHECK(fs::exists(out_dir / "ablation.csv"));
  CHECK(fs::exists(out_dir / "ablation.txt"));
  std::string csv = slurp((out_dir / "ablation.csv").string());
  CHECK(csv.find("tree,method,accuracy,macro_f1,best_epoch,config_hash") == 0);
  // one row per cell plus the header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);

  // gat-only cells must show zero gradient flow through relation embeddings
  for (const char* stem : {"ordinary_gat", "reshaped_gat"}) {
    std::string log = slurp((out_dir / (std::string(stem) + ".log.jsonl")).string());
    CHECK(log.find("\"rel_emb_grad_norm\":0.0") != std::string::npos);
    CHECK(log.find("\"rel_emb_grad_norm\":0.00") == std::string::npos);  // exactly zero
  }
  std::string rgat_log = slurp((out_dir / "reshaped_rgat.log.jsonl").string());
  CHECK(rgat_log.find("\"rel_emb_grad_norm\":0.0,") == std::string::npos);
}

TEST_CASE("divergence aborts and dumps a last-good checkpoint") {
  auto cfg = synthetic_config("diverge", 3);
  cfg.lr = 1e150;  // first update overflows the next forward pass
  CHECK_THROWS_WITH_AS(harness::train(cfg), doctest::Contains("last-good"), Error);
  CHECK(fs::exists(cfg.out_checkpoint + ".lastgood"));
  // the dump is loadable and holds finite parameters
  harness::Model m = harness::load_model(cfg.out_checkpoint + ".lastgood");
  m.params.check_finite();
}

TEST_CASE("run config JSON round trip") {
  auto cfg = synthetic_config("json", 2);
  cfg.hyper.mode = {rgat::GraphKind::ordinary, rgat::Variant::gat_only};
  cfg.embeddings_path = "somewhere.txt";
  harness::RunConfig back = harness::RunConfig::from_json(cfg.to_json());
  CHECK(back.to_json().dump() == cfg.to_json().dump());
  CHECK(harness::config_hash(cfg.to_json()) == harness::config_hash(back.to_json()));
}
