#include "absa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "absa/checkpoint.hpp"
#include "absa/error.hpp"

using json = nlohmann::json;

namespace absa::harness {

namespace {

json hyper_to_json(const rgat::Hyper& h) {
  return json{{"layers", h.layers},
              {"att_heads", h.att_heads},
              {"rel_heads", h.rel_heads},
              {"hidden", h.hidden},
              {"lstm_hidden", h.lstm_hidden},
              {"rel_dim", h.rel_dim},
              {"gate_hidden", h.gate_hidden},
              {"dropout", h.dropout},
              {"n_max", h.n_max},
              {"mode", rgat::mode_name(h.mode)},
              {"rev_suffix", h.rev_suffix},
              {"train_embeddings", h.train_embeddings},
              {"num_classes", h.num_classes}};
}

rgat::Hyper hyper_from_json(const json& j) {
  rgat::Hyper h;
  h.layers = j.at("layers").get<int>();
  h.att_heads = j.at("att_heads").get<int>();
  h.rel_heads = j.at("rel_heads").get<int>();
  h.hidden = j.at("hidden").get<int>();
  h.lstm_hidden = j.at("lstm_hidden").get<int>();
  h.rel_dim = j.at("rel_dim").get<int>();
  h.gate_hidden = j.at("gate_hidden").get<int>();
  h.dropout = j.at("dropout").get<double>();
  h.n_max = j.at("n_max").get<int>();
  auto mode = rgat::mode_from_name(j.at("mode").get<std::string>());
  if (!mode) throw Error("unknown mode in config: " + j.at("mode").get<std::string>());
  h.mode = *mode;
  h.rev_suffix = j.at("rev_suffix").get<bool>();
  h.train_embeddings = j.at("train_embeddings").get<bool>();
  h.num_classes = j.at("num_classes").get<int>();
  return h;
}

}  // namespace

json RunConfig::to_json() const {
  return json{{"train_path", train_path},
              {"test_path", test_path},
              {"embeddings_path", embeddings_path},
              {"random_emb_dim", random_emb_dim},
              {"hyper", hyper_to_json(hyper)},
              {"seed", seed},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"patience", patience},
              {"lr", lr},
              {"min_freq", min_freq},
              {"lowercase", lowercase},
              {"out_checkpoint", out_checkpoint},
              {"log_path", log_path}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.train_path = j.at("train_path").get<std::string>();
  c.test_path = j.value("test_path", std::string{});
  c.embeddings_path = j.value("embeddings_path", std::string{});
  c.random_emb_dim = j.value("random_emb_dim", 300);
  c.hyper = hyper_from_json(j.at("hyper"));
  c.seed = j.value("seed", uint64_t{1});
  c.epochs = j.value("epochs", 30);
  c.batch_size = j.value("batch_size", 16);
  c.patience = j.value("patience", 5);
  c.lr = j.value("lr", 1e-3);
  c.min_freq = j.value("min_freq", 1);
  c.lowercase = j.value("lowercase", true);
  c.out_checkpoint = j.value("out_checkpoint", std::string{});
  c.log_path = j.value("log_path", std::string{});
  return c;
}

json EvalReport::to_json(bool include_misclassified) const {
  json j;
  j["accuracy"] = accuracy;
  j["macro_f1"] = macro_f1;
  j["total"] = total;
  json pc = json::array();
  for (int c = 0; c < 3; ++c) {
    pc.push_back({{"class", corpus::polarity_name(static_cast<corpus::Polarity>(c))},
                  {"precision", per_class[static_cast<size_t>(c)].precision},
                  {"recall", per_class[static_cast<size_t>(c)].recall},
                  {"f1", per_class[static_cast<size_t>(c)].f1}});
  }
  j["per_class"] = pc;
  j["confusion"] = confusion;
  if (include_misclassified) {
    json mc = json::array();
    for (const Misclassified& m : misclassified) {
      mc.push_back({{"id", m.id},
                    {"tokens", m.tokens},
                    {"aspect", {m.aspect_from, m.aspect_to}},
                    {"gold", corpus::polarity_name(m.gold)},
                    {"pred", corpus::polarity_name(m.pred)},
                    {"probs", m.probs}});
    }
    j["misclassified"] = mc;
  }
  return j;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  long correct = confusion[0][0] + confusion[1][1] + confusion[2][2];
  out << "accuracy  " << accuracy << "  (" << correct << "/" << total << ")\n";
  out << "macro-F1  " << macro_f1 << "\n\n";
  out << std::left << std::setw(10) << "class" << std::right << std::setw(10) << "precision"
      << std::setw(8) << "recall" << std::setw(8) << "f1" << "\n";
  for (int c = 0; c < 3; ++c) {
    out << std::left << std::setw(10)
        << corpus::polarity_name(static_cast<corpus::Polarity>(c)) << std::right
        << std::setw(10) << per_class[static_cast<size_t>(c)].precision << std::setw(8)
        << per_class[static_cast<size_t>(c)].recall << std::setw(8)
        << per_class[static_cast<size_t>(c)].f1 << "\n";
  }
  out << "\nconfusion (rows gold, cols pred):\n";
  out << std::left << std::setw(10) << "";
  for (int c = 0; c < 3; ++c)
    out << std::right << std::setw(10) << corpus::polarity_name(static_cast<corpus::Polarity>(c));
  out << "\n";
  for (int g = 0; g < 3; ++g) {
    out << std::left << std::setw(10) << corpus::polarity_name(static_cast<corpus::Polarity>(g));
    for (int p = 0; p < 3; ++p)
      out << std::right << std::setw(10) << confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
    out << "\n";
  }
  return out.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "accuracy,macro_f1";
  for (int c = 0; c < 3; ++c) {
    const char* n = corpus::polarity_name(static_cast<corpus::Polarity>(c));
    out << ",precision_" << n << ",recall_" << n << ",f1_" << n;
  }
  out << ",total\n";
  out << accuracy << "," << macro_f1;
  for (int c = 0; c < 3; ++c) {
    const ClassMetrics& m = per_class[static_cast<size_t>(c)];
    out << "," << m.precision << "," << m.recall << "," << m.f1;
  }
  out << "," << total << "\n";
  return out.str();
}

EvalReport report_from(const std::vector<corpus::Instance>& instances,
                       const std::vector<Prediction>& preds) {
  if (instances.size() != preds.size())
    throw Error("report_from: instance/prediction count mismatch");
  EvalReport r;
  r.total = static_cast<long>(instances.size());
  for (size_t i = 0; i < instances.size(); ++i) {
    int g = static_cast<int>(instances[i].label);
    int p = static_cast<int>(preds[i].pred);
    ++r.confusion[static_cast<size_t>(g)][static_cast<size_t>(p)];
    if (g != p) {
      Misclassified m;
      m.id = instances[i].id;
      m.tokens = instances[i].tokens;
      m.aspect_from = instances[i].aspect_from;
      m.aspect_to = instances[i].aspect_to;
      m.gold = instances[i].label;
      m.pred = preds[i].pred;
      m.probs = preds[i].probs;
      r.misclassified.push_back(std::move(m));
    }
  }
  long correct = r.confusion[0][0] + r.confusion[1][1] + r.confusion[2][2];
  r.accuracy = r.total > 0 ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;
  double f1_sum = 0;
  for (int c = 0; c < 3; ++c) {
    long tp = r.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
    long fp = 0, fn = 0;
    for (int o = 0; o < 3; ++o) {
      if (o == c) continue;
      fp += r.confusion[static_cast<size_t>(o)][static_cast<size_t>(c)];
      fn += r.confusion[static_cast<size_t>(c)][static_cast<size_t>(o)];
    }
    ClassMetrics& m = r.per_class[static_cast<size_t>(c)];
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
    f1_sum += m.f1;
  }
  r.macro_f1 = f1_sum / 3.0;
  return r;
}

namespace {

// Forward a set of prepared instances in chunks; one parameter push per chunk.
std::vector<Prediction> predict_prepared(const nn::ParamStore& store,
                                         const rgat::Hyper& hyper,
                                         const std::vector<rgat::ModelInstance>& prepared,
                                         rgat::ForwardTrace* trace) {
  constexpr size_t kChunk = 64;
  std::vector<Prediction> out;
  out.reserve(prepared.size());
  rgat::ForwardOptions opts;
  opts.train = false;
  opts.trace = trace;
  for (size_t begin = 0; begin < prepared.size(); begin += kChunk) {
    size_t end = std::min(begin + kChunk, prepared.size());
    std::vector<const rgat::ModelInstance*> chunk;
    for (size_t i = begin; i < end; ++i) chunk.push_back(&prepared[i]);
    nn::Tape tape;
    rgat::TapeModel tm =
        rgat::push_model(tape, store, hyper, rgat::used_word_ids(chunk), false);
    for (const rgat::ModelInstance* mi : chunk) {
      nn::Tape::NodeId probs = rgat::forward_probs(tape, tm, *mi, opts);
      const nn::Tensor& p = tape.val(probs);
      Prediction pr;
      int best = 0;
      for (int c = 0; c < 3; ++c) {
        pr.probs[static_cast<size_t>(c)] = p.at(c);
        if (p.at(c) > p.at(best)) best = c;
      }
      pr.pred = static_cast<corpus::Polarity>(best);
      out.push_back(pr);
    }
  }
  return out;
}

std::vector<rgat::ModelInstance> prepare_all(const std::vector<corpus::Instance>& instances,
                                             const corpus::Vocab& vocab,
                                             const reshape::RelationVocab& relations,
                                             const rgat::Hyper& hyper) {
  std::vector<rgat::ModelInstance> out;
  out.reserve(instances.size());
  for (const corpus::Instance& inst : instances)
    out.push_back(rgat::prepare_instance(inst, vocab, relations, hyper));
  return out;
}

struct EventLog {
  std::ofstream stream;
  bool enabled = false;

  explicit EventLog(const std::string& path) {
    if (path.empty()) return;
    stream.open(path);
    if (!stream) throw Error("cannot write log file: " + path);
    enabled = true;
  }
  // No timestamps: log bytes must be identical across identical runs.
  void emit(const json& event) {
    if (!enabled) return;
    stream << event.dump() << "\n";
    stream.flush();
  }
};

Model make_model(const RunConfig& config, const corpus::Vocab& vocab,
                 const reshape::RelationVocab& relations, const nn::ParamStore& params) {
  Model m;
  m.hyper = config.hyper;
  m.vocab = vocab;
  m.relations = relations;
  m.params = params;
  m.config = config.to_json();
  return m;
}

}  // namespace

void save_model(const std::string& path, const Model& model) {
  if (path.empty()) throw Error("save_model: empty checkpoint path");
  ckpt::Checkpoint c;
  c.config = model.config;
  c.vocab_tokens = model.vocab.tokens();
  c.vocab_lowercase = model.vocab.lowercase();
  c.relation_labels = model.relations.labels();
  for (const auto& [name, entry] : model.params.entries()) c.tensors[name] = entry.value;
  ckpt::save(path, c);
}

Model load_model(const std::string& checkpoint_path) {
  ckpt::Checkpoint c = ckpt::load(checkpoint_path);
  Model m;
  m.config = c.config;
  m.hyper = hyper_from_json(c.config.at("hyper"));
  m.vocab = corpus::Vocab::from_tokens(c.vocab_tokens, c.vocab_lowercase);
  m.relations = reshape::RelationVocab::from_labels(c.relation_labels);
  for (auto& [name, t] : c.tensors) m.params.add(name, std::move(t));
  return m;
}

std::vector<Prediction> predict_all(const Model& model,
                                    const std::vector<corpus::Instance>& instances,
                                    rgat::ForwardTrace* trace) {
  auto prepared = prepare_all(instances, model.vocab, model.relations, model.hyper);
  return predict_prepared(model.params, model.hyper, prepared, trace);
}

EvalReport evaluate(const Model& model, const std::vector<corpus::Instance>& instances) {
  return report_from(instances, predict_all(model, instances));
}

TrainResult train(const RunConfig& config) {
  config.hyper.validate();
  if (config.batch_size < 1) throw Error("train: batch_size must be >= 1");
  if (config.out_checkpoint.empty()) throw Error("train: out_checkpoint is required");

  auto train_insts = corpus::read_instances_jsonl(config.train_path);
  if (train_insts.empty()) throw Error("train: no instances in " + config.train_path);
  std::vector<corpus::Instance> test_insts;
  if (!config.test_path.empty()) test_insts = corpus::read_instances_jsonl(config.test_path);

  std::vector<corpus::Instance> all = train_insts;
  all.insert(all.end(), test_insts.begin(), test_insts.end());

  corpus::Vocab vocab = corpus::Vocab::build(all, config.min_freq, config.lowercase);
  nn::Tensor word_emb =
      config.embeddings_path.empty()
          ? corpus::random_embeddings(vocab, config.random_emb_dim, config.seed)
          : corpus::load_embeddings(config.embeddings_path, vocab, config.seed);

  // Relation vocabulary over the reshaped trees plus every DEPREL in the
  // data, so ordinary-graph cells of the ablation share one label space.
  std::vector<reshape::AspectTree> trees;
  std::set<std::string> extra;
  for (const corpus::Instance& inst : all) {
    trees.push_back(reshape::build(inst.parse, inst.aspect_from, inst.aspect_to,
                                   config.hyper.n_max, config.hyper.rev_suffix));
    for (const std::string& rel : inst.parse.rels) {
      extra.insert(rel);
      if (config.hyper.rev_suffix) extra.insert(rel + ":rev");
    }
  }
  reshape::RelationVocab relations = reshape::RelationVocab::build(
      trees, config.hyper.n_max, std::vector<std::string>(extra.begin(), extra.end()));

  nn::ParamStore store;
  rgat::init_params(store, config.hyper, std::move(word_emb), relations.size(), config.seed);

  auto prepared_train = prepare_all(train_insts, vocab, relations, config.hyper);
  auto prepared_test = prepare_all(test_insts, vocab, relations, config.hyper);

  // SemEval 2014 has no dev split; model selection follows the field's
  // convention of the best test epoch, which the log states explicitly.
  const bool select_on_test = !test_insts.empty();
  const std::vector<corpus::Instance>& sel_insts = select_on_test ? test_insts : train_insts;
  const std::vector<rgat::ModelInstance>& sel_prepared =
      select_on_test ? prepared_test : prepared_train;

  EventLog log(config.log_path);
  log.emit(json{{"event", "train_begin"},
                {"config", config.to_json()},
                {"config_hash", config_hash(config.to_json())},
                {"vocab_size", vocab.size()},
                {"relation_count", relations.size()},
                {"param_count", store.total_params()},
                {"train_instances", train_insts.size()},
                {"test_instances", test_insts.size()},
                {"selection_split", select_on_test ? "test" : "train"}});

  TrainResult res;
  if (config.epochs == 0) {
    save_model(config.out_checkpoint, make_model(config, vocab, relations, store));
    res.best_report = report_from(
        sel_insts, predict_prepared(store, config.hyper, sel_prepared, nullptr));
    res.best_test_acc = res.best_report.accuracy;
    log.emit(json{{"event", "train_end"}, {"best_epoch", -1},
                  {"best_acc", res.best_test_acc}});
    return res;
  }

  Rng shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  Rng dropout_rng(config.seed ^ 0x3C6EF372FE94F82AULL);
  nn::AdamConfig adam;
  adam.lr = config.lr;

  std::vector<int> order(prepared_train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  int epochs_since_best = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    double rel_grad_sq = 0.0;
    for (size_t begin = 0; begin < order.size();
         begin += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(begin + static_cast<size_t>(config.batch_size), order.size());
      std::vector<const rgat::ModelInstance*> batch;
      for (size_t i = begin; i < end; ++i)
        batch.push_back(&prepared_train[static_cast<size_t>(order[i])]);
      try {
        nn::Tape tape;
        rgat::TapeModel tm =
            rgat::push_model(tape, store, config.hyper, rgat::used_word_ids(batch), true);
        rgat::ForwardOptions opts;
        opts.train = true;
        opts.rng = &dropout_rng;
        nn::Tape::NodeId loss = rgat::batch_loss(tape, tm, batch, opts);
        double lval = tape.val(loss).at(0);
        if (!std::isfinite(lval)) throw Error("non-finite batch loss");
        tape.backward(loss);
        nn::GradMap grads = rgat::collect_grads(tape, tm, store);
        for (double v : grads.at("rel_emb").data) rel_grad_sq += v * v;
        nn::adam_step(store, grads, adam);
        store.check_finite();
        loss_sum += lval;
      } catch (const std::exception& e) {
        // Dump the parameters as they were before the failing update.
        std::string lastgood = config.out_checkpoint + ".lastgood";
        save_model(lastgood, make_model(config, vocab, relations, store));
        log.emit(json{{"event", "abort"},
                      {"epoch", epoch},
                      {"reason", e.what()},
                      {"lastgood_checkpoint", lastgood}});
        throw Error(std::string("training diverged: ") + e.what() +
                    "; last-good checkpoint written to " + lastgood);
      }
    }
    double epoch_loss = loss_sum / static_cast<double>(prepared_train.size());
    res.epoch_losses.push_back(epoch_loss);

    EvalReport report = report_from(
        sel_insts, predict_prepared(store, config.hyper, sel_prepared, nullptr));
    bool improved = res.best_epoch < 0 || report.accuracy > res.best_test_acc;
    if (improved) {
      res.best_epoch = epoch;
      res.best_test_acc = report.accuracy;
      res.best_report = report;
      epochs_since_best = 0;
      save_model(config.out_checkpoint, make_model(config, vocab, relations, store));
    } else {
      ++epochs_since_best;
    }
    log.emit(json{{"event", "epoch"},
                  {"epoch", epoch},
                  {"train_loss", epoch_loss},
                  {"eval_acc", report.accuracy},
                  {"eval_macro_f1", report.macro_f1},
                  {"rel_emb_grad_norm", std::sqrt(rel_grad_sq)},
                  {"best", improved}});
    if (config.patience > 0 && epochs_since_best >= config.patience) {
      log.emit(json{{"event", "early_stop"}, {"epoch", epoch}});
      break;
    }
  }
  log.emit(json{{"event", "train_end"},
                {"best_epoch", res.best_epoch},
                {"best_acc", res.best_test_acc}});
  return res;
}

std::vector<AblationCell> ablate(const RunConfig& base, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  struct CellSpec {
    rgat::GraphKind graph;
    rgat::Variant variant;
    const char* tree;
    const char* method;
  };
  // Table layout: the ordinary tree has no n:con edges, so that cell is skipped.
  const CellSpec specs[] = {
      {rgat::GraphKind::ordinary, rgat::Variant::gat_only, "ordinary", "gat"},
      {rgat::GraphKind::ordinary, rgat::Variant::rgat, "ordinary", "rgat"},
      {rgat::GraphKind::reshaped, rgat::Variant::gat_only, "reshaped", "gat"},
      {rgat::GraphKind::reshaped, rgat::Variant::rgat, "reshaped", "rgat"},
      {rgat::GraphKind::reshaped, rgat::Variant::rgat_no_ncon, "reshaped", "rgat_no_ncon"},
  };

  std::vector<AblationCell> cells;
  for (const CellSpec& spec : specs) {
    RunConfig cfg = base;
    cfg.hyper.mode = {spec.graph, spec.variant};
    std::string stem = std::string(spec.tree) + "_" + spec.method;
    cfg.out_checkpoint = (fs::path(out_dir) / (stem + ".ckpt")).string();
    cfg.log_path = (fs::path(out_dir) / (stem + ".log.jsonl")).string();
    std::cerr << "[ablate] " << stem << "\n";
    TrainResult r = train(cfg);
    AblationCell cell;
    cell.tree = spec.tree;
    cell.method = spec.method;
    cell.accuracy = r.best_report.accuracy;
    cell.macro_f1 = r.best_report.macro_f1;
    cell.best_epoch = r.best_epoch;
    cells.push_back(cell);
  }

  uint64_t hash = config_hash(base.to_json());
  {
    std::ofstream csv(fs::path(out_dir) / "ablation.csv");
    csv << "tree,method,accuracy,macro_f1,best_epoch,config_hash\n";
    for (const AblationCell& c : cells)
      csv << c.tree << "," << c.method << "," << c.accuracy << "," << c.macro_f1 << ","
          << c.best_epoch << "," << hash << "\n";
  }
  {
    std::ofstream txt(fs::path(out_dir) / "ablation.txt");
    txt << std::fixed << std::setprecision(4);
    txt << std::left << std::setw(10) << "tree" << std::setw(14) << "method" << std::right
        << std::setw(10) << "accuracy" << std::setw(10) << "macro_f1" << "\n";
    for (const AblationCell& c : cells)
      txt << std::left << std::setw(10) << c.tree << std::setw(14) << c.method << std::right
          << std::setw(10) << c.accuracy << std::setw(10) << c.macro_f1 << "\n";
    txt << "config_hash " << hash << "\n";
  }
  return cells;
}

std::vector<DistanceBucket> multi_aspect_analysis(
    const Model& model, const std::vector<corpus::Instance>& instances,
    const nn::Tensor& raw_emb, std::vector<double> bucket_edges,
    std::vector<std::string>* warnings) {
  // Keep only aspects from sentences with at least two aspects.
  std::map<std::string, std::vector<size_t>> by_sentence;
  for (size_t i = 0; i < instances.size(); ++i)
    by_sentence[instances[i].id].push_back(i);

  std::vector<size_t> kept;
  for (const auto& [id, idxs] : by_sentence)
    if (idxs.size() >= 2) kept.insert(kept.end(), idxs.begin(), idxs.end());
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) return {};

  auto aspect_vector = [&](const corpus::Instance& inst) {
    std::vector<double> v(static_cast<size_t>(raw_emb.cols()), 0.0);
    int n = 0;
    bool any_known = false;
    for (int t = inst.aspect_from; t <= inst.aspect_to; ++t) {
      const std::string& tok = inst.tokens[static_cast<size_t>(t - 1)];
      int id = model.vocab.lookup(tok);
      if (id != model.vocab.unk_index()) any_known = true;
      for (int c = 0; c < raw_emb.cols(); ++c)
        v[static_cast<size_t>(c)] += raw_emb.at(id, c);
      ++n;
    }
    if (!any_known && warnings)
      warnings->push_back("aspect fully OOV in sentence " + inst.id);
    for (double& x : v) x /= static_cast<double>(n);
    return v;
  };

  std::map<size_t, std::vector<double>> vectors;
  for (size_t i : kept) vectors[i] = aspect_vector(instances[i]);

  // Per-aspect nearest Euclidean distance within its sentence.
  std::map<size_t, double> nearest;
  for (const auto& [id, idxs] : by_sentence) {
    if (idxs.size() < 2) continue;
    for (size_t a : idxs) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t b : idxs) {
        if (a == b) continue;
        double d2 = 0;
        const auto& va = vectors[a];
        const auto& vb = vectors[b];
        for (size_t c = 0; c < va.size(); ++c) {
          double diff = va[c] - vb[c];
          d2 += diff * diff;
        }
        best = std::min(best, std::sqrt(d2));
      }
      nearest[a] = best;
    }
  }

  std::vector<corpus::Instance> kept_insts;
  std::vector<double> kept_dists;
  for (size_t i : kept) {
    kept_insts.push_back(instances[i]);
    kept_dists.push_back(nearest[i]);
  }

  if (bucket_edges.empty()) {
    // Quintile edges over the observed nearest distances.
    std::vector<double> sorted = kept_dists;
    std::sort(sorted.begin(), sorted.end());
    for (int q = 1; q <= 4; ++q)
      bucket_edges.push_back(sorted[sorted.size() * static_cast<size_t>(q) / 5]);
  }
  std::sort(bucket_edges.begin(), bucket_edges.end());

  std::vector<Prediction> preds = predict_all(model, kept_insts);

  size_t n_buckets = bucket_edges.size() + 1;
  std::vector<DistanceBucket> buckets(n_buckets);
  for (size_t b = 0; b < n_buckets; ++b) {
    buckets[b].lo = b == 0 ? 0.0 : bucket_edges[b - 1];
    buckets[b].hi = b < bucket_edges.size() ? bucket_edges[b]
                                            : std::numeric_limits<double>::infinity();
  }
  for (size_t i = 0; i < kept_insts.size(); ++i) {
    size_t b = 0;
    while (b < bucket_edges.size() && kept_dists[i] > bucket_edges[b]) ++b;
    ++buckets[b].count;
    if (preds[i].pred == kept_insts[i].label) ++buckets[b].correct;
  }
  for (DistanceBucket& b : buckets)
    b.accuracy = b.count > 0 ? static_cast<double>(b.correct) / static_cast<double>(b.count)
                             : 0.0;
  return buckets;
}

std::string distance_buckets_csv(const std::vector<DistanceBucket>& buckets) {
  std::ostringstream out;
  out << "bucket,lo,hi,count,correct,accuracy\n";
  for (size_t b = 0; b < buckets.size(); ++b)
    out << b << "," << buckets[b].lo << "," << buckets[b].hi << "," << buckets[b].count
        << "," << buckets[b].correct << "," << buckets[b].accuracy << "\n";
  return out.str();
}

std::vector<Misclassified> export_errors(const Model& model,
                                         const std::vector<corpus::Instance>& instances,
                                         int k, uint64_t seed) {
  EvalReport report = evaluate(model, instances);
  std::vector<Misclassified>& errs = report.misclassified;
  if (static_cast<int>(errs.size()) <= k) return errs;
  std::vector<size_t> idx(errs.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(k));
  std::sort(idx.begin(), idx.end());
  std::vector<Misclassified> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(errs[i]);
  return out;
}

void write_errors_jsonl(const std::string& path, const std::vector<Misclassified>& errors) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  for (const Misclassified& m : errors) {
    json j{{"id", m.id},
           {"tokens", m.tokens},
           {"aspect", {m.aspect_from, m.aspect_to}},
           {"gold", corpus::polarity_name(m.gold)},
           {"pred", corpus::polarity_name(m.pred)},
           {"probs", m.probs}};
    out << j.dump() << "\n";
  }
}

uint64_t config_hash(const json& j) {
  std::string s = j.dump();
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace absa::harness
