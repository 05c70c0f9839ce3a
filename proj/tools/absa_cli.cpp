#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "absa/corpus.hpp"
#include "absa/error.hpp"
#include "absa/harness.hpp"
#include "absa/reshape.hpp"
#include "absa/rgat.hpp"

using json = nlohmann::json;
namespace corpus = absa::corpus;
namespace harness = absa::harness;
namespace reshape = absa::reshape;
namespace rgat = absa::rgat;

namespace {

struct TrainFlags {
  harness::RunConfig cfg;
  std::string mode = "rgat";
  bool freeze_embeddings = false;
  std::string config_path;

  void resolve() {
    auto m = rgat::mode_from_name(mode);
    if (!m) throw absa::Error("unknown --mode '" + mode + "'");
    cfg.hyper.mode = *m;
    cfg.hyper.train_embeddings = !freeze_embeddings;
    cfg.hyper.validate();
  }
};

// key=value config file; command-line flags win over file values.
void apply_config_file(CLI::App* cmd, TrainFlags& f) {
  if (f.config_path.empty()) return;
  std::ifstream in(f.config_path);
  if (!in) throw absa::Error("cannot open config file: " + f.config_path);

  auto as_bool = [](const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw absa::Error("config: expected a boolean, got '" + v + "'");
  };
  std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"train", [&](const std::string& v) { f.cfg.train_path = v; }},
      {"test", [&](const std::string& v) { f.cfg.test_path = v; }},
      {"embeddings", [&](const std::string& v) { f.cfg.embeddings_path = v; }},
      {"out", [&](const std::string& v) { f.cfg.out_checkpoint = v; }},
      {"log", [&](const std::string& v) { f.cfg.log_path = v; }},
      {"mode", [&](const std::string& v) { f.mode = v; }},
      {"seed", [&](const std::string& v) { f.cfg.seed = std::stoull(v); }},
      {"epochs", [&](const std::string& v) { f.cfg.epochs = std::stoi(v); }},
      {"batch", [&](const std::string& v) { f.cfg.batch_size = std::stoi(v); }},
      {"lr", [&](const std::string& v) { f.cfg.lr = std::stod(v); }},
      {"patience", [&](const std::string& v) { f.cfg.patience = std::stoi(v); }},
      {"dropout", [&](const std::string& v) { f.cfg.hyper.dropout = std::stod(v); }},
      {"layers", [&](const std::string& v) { f.cfg.hyper.layers = std::stoi(v); }},
      {"att-heads", [&](const std::string& v) { f.cfg.hyper.att_heads = std::stoi(v); }},
      {"rel-heads", [&](const std::string& v) { f.cfg.hyper.rel_heads = std::stoi(v); }},
      {"hidden", [&](const std::string& v) { f.cfg.hyper.hidden = std::stoi(v); }},
      {"lstm-hidden", [&](const std::string& v) { f.cfg.hyper.lstm_hidden = std::stoi(v); }},
      {"rel-dim", [&](const std::string& v) { f.cfg.hyper.rel_dim = std::stoi(v); }},
      {"gate-hidden", [&](const std::string& v) { f.cfg.hyper.gate_hidden = std::stoi(v); }},
      {"n-max", [&](const std::string& v) { f.cfg.hyper.n_max = std::stoi(v); }},
      {"min-freq", [&](const std::string& v) { f.cfg.min_freq = std::stoi(v); }},
      {"random-emb-dim",
       [&](const std::string& v) { f.cfg.random_emb_dim = std::stoi(v); }},
      {"rev-suffix", [&](const std::string& v) { f.cfg.hyper.rev_suffix = as_bool(v); }},
      {"freeze-embeddings",
       [&](const std::string& v) { f.freeze_embeddings = as_bool(v); }},
      {"lowercase", [&](const std::string& v) { f.cfg.lowercase = as_bool(v); }},
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw absa::Error("config line " + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      size_t x = s.find_first_not_of(" \t");
      size_t y = s.find_last_not_of(" \t");
      return x == std::string::npos ? std::string{} : s.substr(x, y - x + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw absa::Error("config line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    // flags given on the command line take precedence
    if (cmd->count("--" + key) > 0) continue;
    it->second(value);
  }
}

void add_hyper_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--mode", f.mode,
                  "rgat | gat_only | rgat_no_ncon | ordinary_rgat | ordinary_gat_only");
  cmd->add_option("--seed", f.cfg.seed, "run seed");
  cmd->add_option("--epochs", f.cfg.epochs, "training epochs");
  cmd->add_option("--batch", f.cfg.batch_size, "mini-batch size");
  cmd->add_option("--lr", f.cfg.lr, "Adam learning rate");
  cmd->add_option("--patience", f.cfg.patience, "early-stop patience (<=0 disables)");
  cmd->add_option("--dropout", f.cfg.hyper.dropout, "dropout rate");
  cmd->add_option("--layers", f.cfg.hyper.layers, "R-GAT layers");
  cmd->add_option("--att-heads", f.cfg.hyper.att_heads, "attentional heads K");
  cmd->add_option("--rel-heads", f.cfg.hyper.rel_heads, "relational heads M");
  cmd->add_option("--hidden", f.cfg.hyper.hidden, "hidden dimension");
  cmd->add_option("--lstm-hidden", f.cfg.hyper.lstm_hidden, "BiLSTM hidden per direction");
  cmd->add_option("--rel-dim", f.cfg.hyper.rel_dim, "relation embedding dimension");
  cmd->add_option("--gate-hidden", f.cfg.hyper.gate_hidden, "gate MLP hidden dimension");
  cmd->add_option("--n-max", f.cfg.hyper.n_max, "n:con distance cutoff");
  cmd->add_option("--min-freq", f.cfg.min_freq, "vocab frequency cutoff");
  cmd->add_option("--random-emb-dim", f.cfg.random_emb_dim,
                  "embedding dim when no --embeddings file is given");
  cmd->add_flag("--rev-suffix", f.cfg.hyper.rev_suffix,
                "mark reversed relations with a :rev label suffix");
  cmd->add_flag("--freeze-embeddings", f.freeze_embeddings,
                "do not update word embeddings during training");
  cmd->add_flag("--lowercase,!--no-lowercase", f.cfg.lowercase,
                "lowercase tokens in the vocab (default on)");
  cmd->add_option("--config", f.config_path,
                  "key=value config file; command-line flags win");
}

std::vector<corpus::Instance> load_instances_or_die(const std::string& path) {
  auto insts = corpus::read_instances_jsonl(path);
  if (insts.empty()) throw absa::Error("no instances in " + path);
  return insts;
}

// Rebuild the raw (pre-training) embedding matrix for a loaded model, using
// the same loader + seed that training used.
absa::nn::Tensor raw_embeddings_for(const harness::Model& model,
                                    const std::string& embeddings_path) {
  uint64_t seed = model.config.value("seed", uint64_t{1});
  if (!embeddings_path.empty())
    return corpus::load_embeddings(embeddings_path, model.vocab, seed);
  int dim = model.params.value("word_emb").cols();
  return corpus::random_embeddings(model.vocab, dim, seed);
}

int cmd_preprocess(const std::string& format, const std::string& dataset,
                   const std::string& parses, const std::string& out,
                   const std::string& export_text) {
  std::vector<corpus::RawSentence> raw;
  if (format == "semeval")
    raw = corpus::load_semeval_xml(dataset);
  else if (format == "twitter")
    raw = corpus::load_twitter(dataset);
  else
    throw absa::Error("unknown --format '" + format + "' (semeval | twitter)");
  std::cerr << raw.size() << " sentences with aspects\n";

  if (!export_text.empty()) {
    corpus::export_sentences_tsv(export_text, raw);
    std::cerr << "wrote sentence export to " << export_text << "\n";
  }
  if (parses.empty()) {
    if (export_text.empty())
      throw absa::Error("either --parses or --export-text is required");
    return 0;
  }

  auto parse_map = corpus::load_conllu(parses);
  auto instances = corpus::build_instances(raw, parse_map);
  if (out.empty()) throw absa::Error("--out is required when --parses is given");
  corpus::write_instances_jsonl(out, instances);

  long counts[3] = {0, 0, 0};
  for (const auto& inst : instances) ++counts[static_cast<int>(inst.label)];
  std::cerr << instances.size() << " instances (positive " << counts[0] << " / neutral "
            << counts[1] << " / negative " << counts[2] << ") -> " << out << "\n";
  return 0;
}

int cmd_reshape(const std::string& instances_path, const std::string& out, int n_max,
                const std::string& dot_path) {
  auto instances = load_instances_or_die(instances_path);
  std::ofstream os(out);
  if (!os) throw absa::Error("cannot write " + out);
  std::ofstream dot;
  if (!dot_path.empty()) {
    dot.open(dot_path);
    if (!dot) throw absa::Error("cannot write " + dot_path);
  }
  for (const auto& inst : instances) {
    reshape::AspectTree tree =
        reshape::build(inst.parse, inst.aspect_from, inst.aspect_to, n_max);
    json children = json::array();
    for (const auto& c : tree.children)
      children.push_back({c.token, c.relation, reshape::dir_name(c.direction)});
    json j{{"id", inst.id},
           {"aspect", {tree.aspect_from, tree.aspect_to}},
           {"children", children}};
    os << j.dump() << "\n";
    if (dot.is_open()) {
      dot << "digraph \"" << inst.id << "\" {\n  root [label=\"";
      for (int t = tree.aspect_from; t <= tree.aspect_to; ++t) {
        if (t > tree.aspect_from) dot << " ";
        dot << inst.tokens[static_cast<size_t>(t - 1)];
      }
      dot << "\",shape=doublecircle];\n";
      for (const auto& c : tree.children) {
        std::string node = "t" + std::to_string(c.token);
        dot << "  " << node << " [label=\"" << inst.tokens[static_cast<size_t>(c.token - 1)]
            << "\"];\n";
        if (c.direction == reshape::EdgeDir::from_root)
          dot << "  " << node << " -> root";
        else
          dot << "  root -> " << node;
        dot << " [label=\"" << c.relation << "\""
            << (c.direction == reshape::EdgeDir::virt ? ",style=dashed" : "") << "];\n";
      }
      dot << "}\n";
    }
  }
  std::cerr << instances.size() << " trees -> " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& instances_path,
             const std::string& out_prefix) {
  harness::Model model = harness::load_model(checkpoint);
  auto instances = load_instances_or_die(instances_path);
  harness::EvalReport report = harness::evaluate(model, instances);
  std::cout << report.to_text();
  if (!out_prefix.empty()) {
    std::ofstream(out_prefix + ".json") << report.to_json().dump(2) << "\n";
    std::ofstream(out_prefix + ".txt") << report.to_text();
    std::ofstream(out_prefix + ".csv") << report.to_csv();
    std::cerr << "wrote " << out_prefix << ".{json,txt,csv}\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-oriented dependency trees + relational graph attention "
               "for aspect-based sentiment classification"};
  app.require_subcommand(1);

  // preprocess
  std::string pp_format = "semeval", pp_dataset, pp_parses, pp_out, pp_export;
  auto* pp = app.add_subcommand("preprocess",
                                "SemEval XML / Twitter + CoNLL-U parses -> instance JSONL");
  pp->add_option("--format", pp_format, "semeval | twitter")->required();
  pp->add_option("--dataset", pp_dataset, "dataset file")->required()
      ->check(CLI::ExistingFile);
  pp->add_option("--parses", pp_parses, "CoNLL-U parses keyed by sent_id")
      ->check(CLI::ExistingFile);
  pp->add_option("--out", pp_out, "output instance JSONL");
  pp->add_option("--export-text", pp_export,
                 "write id<TAB>text lines for the external parser and exit");

  // reshape
  std::string rs_instances, rs_out, rs_dot;
  int rs_nmax = 4;
  auto* rs = app.add_subcommand("reshape", "emit aspect-oriented trees as JSONL");
  rs->add_option("--instances", rs_instances)->required()->check(CLI::ExistingFile);
  rs->add_option("--out", rs_out)->required();
  rs->add_option("--n-max", rs_nmax, "n:con distance cutoff");
  rs->add_option("--dot", rs_dot, "also write Graphviz DOT");

  // train
  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--train", tf.cfg.train_path, "training instances JSONL")->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--test", tf.cfg.test_path, "test instances JSONL (evaluated per epoch)")
      ->check(CLI::ExistingFile);
  tr->add_option("--embeddings", tf.cfg.embeddings_path, "GloVe text file")
      ->check(CLI::ExistingFile);
  tr->add_option("--out", tf.cfg.out_checkpoint, "output checkpoint")->required();
  tr->add_option("--log", tf.cfg.log_path, "JSONL event log");
  add_hyper_flags(tr, tf);

  // ablate
  TrainFlags af;
  std::string ab_out_dir;
  auto* ab = app.add_subcommand("ablate",
                                "run the ordinary/reshaped x gat/rgat/no-ncon matrix");
  ab->add_option("--train", af.cfg.train_path)->required()->check(CLI::ExistingFile);
  ab->add_option("--test", af.cfg.test_path)->check(CLI::ExistingFile);
  ab->add_option("--embeddings", af.cfg.embeddings_path)->check(CLI::ExistingFile);
  ab->add_option("--out-dir", ab_out_dir, "output directory")->required();
  add_hyper_flags(ab, af);

  // eval
  std::string ev_ckpt, ev_instances, ev_out;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--checkpoint", ev_ckpt)->required()->check(CLI::ExistingFile);
  ev->add_option("--instances", ev_instances)->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "report path prefix");

  // analyze-distance
  std::string ad_ckpt, ad_instances, ad_embeddings, ad_out, ad_buckets;
  auto* ad = app.add_subcommand("analyze-distance",
                                "accuracy by nearest aspect-embedding distance "
                                "(multi-aspect sentences only)");
  ad->add_option("--checkpoint", ad_ckpt)->required()->check(CLI::ExistingFile);
  ad->add_option("--instances", ad_instances)->required()->check(CLI::ExistingFile);
  ad->add_option("--embeddings", ad_embeddings, "GloVe file for raw aspect vectors")
      ->check(CLI::ExistingFile);
  ad->add_option("--buckets", ad_buckets, "comma-separated bucket edges (default quintiles)");
  ad->add_option("--out", ad_out, "output CSV");

  // export-errors
  std::string ee_ckpt, ee_instances, ee_out;
  int ee_k = 100;
  uint64_t ee_seed = 1;
  auto* ee = app.add_subcommand("export-errors", "sample misclassified instances as JSONL");
  ee->add_option("--checkpoint", ee_ckpt)->required()->check(CLI::ExistingFile);
  ee->add_option("--instances", ee_instances)->required()->check(CLI::ExistingFile);
  ee->add_option("--out", ee_out)->required();
  ee->add_option("--k", ee_k, "sample size");
  ee->add_option("--seed", ee_seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pp->parsed()) return cmd_preprocess(pp_format, pp_dataset, pp_parses, pp_out, pp_export);
    if (rs->parsed()) return cmd_reshape(rs_instances, rs_out, rs_nmax, rs_dot);
    if (tr->parsed()) {
      apply_config_file(tr, tf);
      tf.resolve();
      harness::TrainResult r = harness::train(tf.cfg);
      std::cout << "best epoch " << r.best_epoch << ", accuracy " << r.best_test_acc
                << ", macro-F1 " << r.best_report.macro_f1 << "\n";
      std::cout << "checkpoint: " << tf.cfg.out_checkpoint << "\n";
      return 0;
    }
    if (ab->parsed()) {
      apply_config_file(ab, af);
      af.resolve();
      auto cells = harness::ablate(af.cfg, ab_out_dir);
      for (const auto& c : cells)
        std::cout << c.tree << " " << c.method << ": acc " << c.accuracy << ", macro-F1 "
                  << c.macro_f1 << "\n";
      return 0;
    }
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_instances, ev_out);
    if (ad->parsed()) {
      harness::Model model = harness::load_model(ad_ckpt);
      auto instances = load_instances_or_die(ad_instances);
      absa::nn::Tensor raw = raw_embeddings_for(model, ad_embeddings);
      std::vector<double> edges;
      if (!ad_buckets.empty()) {
        std::stringstream ss(ad_buckets);
        std::string tok;
        while (std::getline(ss, tok, ',')) edges.push_back(std::stod(tok));
      }
      std::vector<std::string> warnings;
      auto buckets = harness::multi_aspect_analysis(model, instances, raw, edges, &warnings);
      for (const auto& w : warnings) std::cerr << "[warn] " << w << "\n";
      std::string csv = harness::distance_buckets_csv(buckets);
      std::cout << csv;
      if (!ad_out.empty()) std::ofstream(ad_out) << csv;
      return 0;
    }
    if (ee->parsed()) {
      harness::Model model = harness::load_model(ee_ckpt);
      auto instances = load_instances_or_die(ee_instances);
      auto errors = harness::export_errors(model, instances, ee_k, ee_seed);
      harness::write_errors_jsonl(ee_out, errors);
      std::cerr << "wrote " << errors.size() << " misclassified instances to " << ee_out
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
