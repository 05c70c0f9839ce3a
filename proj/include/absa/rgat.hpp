#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "absa/corpus.hpp"
#include "absa/nn.hpp"
#include "absa/reshape.hpp"
#include "absa/rng.hpp"
#include "absa/tape.hpp"

namespace absa::rgat {

using nn::Tape;
using nn::Tensor;

enum class GraphKind { reshaped, ordinary };
enum class Variant { rgat, gat_only, rgat_no_ncon };

struct Mode {
  GraphKind graph = GraphKind::reshaped;
  Variant variant = Variant::rgat;
};

// "rgat", "gat_only", "rgat_no_ncon", "ordinary_rgat", "ordinary_gat_only"
std::string mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& s);

struct Hyper {
  int layers = 2;
  int att_heads = 6;  // K
  int rel_heads = 6;  // M
  int hidden = 300;
  int lstm_hidden = 150;  // node states are 2 * lstm_hidden wide
  int rel_dim = 300;
  int gate_hidden = 50;
  double dropout = 0.7;
  int n_max = 4;
  Mode mode;
  bool rev_suffix = false;
  bool train_embeddings = true;
  int num_classes = 3;

  int d_head() const { return hidden / att_heads; }
  int node_dim(int layer) const { return layer == 0 ? 2 * lstm_hidden : hidden; }
  int comb_in() const {
    int heads = mode.variant == Variant::gat_only ? att_heads : att_heads + rel_heads;
    return heads * d_head();
  }
  void validate() const;
};

struct Edge {
  int nbr = 0;  // node index
  int rel = 0;  // relation vocab index
};

// One instance's wired graph: neighbor lists with self-loops, and the node
// set whose mean final state feeds the classifier.
struct GraphBatch {
  int n_nodes = 0;
  std::vector<std::vector<Edge>> nbrs;
  std::vector<int> token_of;  // 1-based sentence token per node, -1 for the aspect root
  std::vector<int> readout;
};

// Model-ready instance: vocab ids plus the wired graph for the given mode.
struct ModelInstance {
  corpus::Instance src;
  std::vector<int> token_ids;
  GraphBatch graph;
};

GraphBatch wire_reshaped(const reshape::AspectTree& tree, int n_tokens,
                         const reshape::RelationVocab& relations, Variant variant);
GraphBatch wire_ordinary(const DepParse& parse, int aspect_from, int aspect_to,
                         const reshape::RelationVocab& relations, bool rev_suffix);
ModelInstance prepare_instance(const corpus::Instance& inst, const corpus::Vocab& vocab,
                               const reshape::RelationVocab& relations, const Hyper& hyper);

// Registers every trainable tensor. word_emb comes from the corpus loader;
// everything else is Xavier-uniform with zero biases, drawn in a fixed order
// from the seed.
void init_params(nn::ParamStore& store, const Hyper& hyper, nn::Tensor word_emb,
                 int rel_vocab_size, uint64_t seed);

// Running stats of the normalization invariants, filled when a trace is
// passed to forward.
struct ForwardTrace {
  double max_alpha_row_err = 0.0;
  double max_beta_row_err = 0.0;
  double max_prob_sum_err = 0.0;
  long rows_checked = 0;
};

struct ForwardOptions {
  bool train = false;
  Rng* rng = nullptr;  // needed when train and dropout > 0
  ForwardTrace* trace = nullptr;
};

// All parameters of one forward/batch pushed onto a tape. The word embedding
// matrix enters as a gather of just the rows used, so its gradient can be
// scattered back sparsely.
struct TapeModel {
  const Hyper* hyper = nullptr;
  std::map<std::string, Tape::NodeId> param_node;  // every tensor except word_emb
  Tape::NodeId word_rows = -1;
  std::unordered_map<int, int> word_local;  // vocab row -> gather row
  int word_dim = 0;

  Tape::NodeId word_vec(Tape& tape, int vocab_id) const;
};

TapeModel push_model(Tape& tape, const nn::ParamStore& store, const Hyper& hyper,
                     const std::vector<int>& used_word_ids, bool requires_grad);

// Scaled dot-product attention over N_i for one head. `h_stack` may pass a
// pre-stacked [n, d] matrix of the same states to share across heads.
std::vector<Tape::NodeId> attentional_head(Tape& tape, const TapeModel& model,
                                           const std::vector<Tape::NodeId>& h,
                                           const GraphBatch& g, int layer, int head,
                                           ForwardTrace* trace = nullptr,
                                           Tape::NodeId h_stack = -1);
// Relation-gated head: per-edge sigmoid gates from the relation embedding,
// softmax-normalized over N_i. The gate depends only on the edge label.
std::vector<Tape::NodeId> relational_head(Tape& tape, const TapeModel& model,
                                          const std::vector<Tape::NodeId>& h,
                                          const GraphBatch& g, int layer, int head,
                                          ForwardTrace* trace = nullptr,
                                          Tape::NodeId h_stack = -1);
// Head concatenation, affine, relu (plus layer dropout in training).
std::vector<Tape::NodeId> rgat_layer(Tape& tape, const TapeModel& model,
                                     const std::vector<Tape::NodeId>& h,
                                     const GraphBatch& g, int layer,
                                     const ForwardOptions& opts);

// Full forward pass: BiLSTM initial states, the stacked graph layers, and
// the softmax readout from the aspect root. Returns the probability node.
Tape::NodeId forward_probs(Tape& tape, const TapeModel& model, const ModelInstance& mi,
                           const ForwardOptions& opts);

// Summed cross entropy over a batch: sum of -log p_gold(a).
Tape::NodeId batch_loss(Tape& tape, const TapeModel& model,
                        const std::vector<const ModelInstance*>& batch,
                        const ForwardOptions& opts);

// Gradients per parameter name after tape.backward(); unreached parameters
// get zeros, the word gather is scattered into a full-size matrix.
nn::GradMap collect_grads(Tape& tape, const TapeModel& model, const nn::ParamStore& store);

std::vector<int> used_word_ids(const std::vector<const ModelInstance*>& batch);

}  // namespace absa::rgat
