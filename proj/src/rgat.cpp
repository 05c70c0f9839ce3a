#include "absa/rgat.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "absa/error.hpp"

namespace absa::rgat {

std::string mode_name(Mode m) {
  std::string base;
  switch (m.variant) {
    case Variant::rgat: base = "rgat"; break;
    case Variant::gat_only: base = "gat_only"; break;
    case Variant::rgat_no_ncon: base = "rgat_no_ncon"; break;
  }
  return m.graph == GraphKind::ordinary ? "ordinary_" + base : base;
}

std::optional<Mode> mode_from_name(const std::string& s) {
  if (s == "rgat") return Mode{GraphKind::reshaped, Variant::rgat};
  if (s == "gat_only") return Mode{GraphKind::reshaped, Variant::gat_only};
  if (s == "rgat_no_ncon") return Mode{GraphKind::reshaped, Variant::rgat_no_ncon};
  if (s == "ordinary_rgat") return Mode{GraphKind::ordinary, Variant::rgat};
  if (s == "ordinary_gat_only") return Mode{GraphKind::ordinary, Variant::gat_only};
  return std::nullopt;
}

void Hyper::validate() const {
  if (layers < 1) throw Error("hyper: layers must be >= 1");
  if (att_heads < 1 || rel_heads < 1) throw Error("hyper: head counts must be >= 1");
  if (hidden % att_heads != 0)
    throw Error("hyper: hidden must be divisible by att_heads");
  if (lstm_hidden < 1 || rel_dim < 1 || gate_hidden < 1)
    throw Error("hyper: dimensions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw Error("hyper: dropout must be in [0, 1)");
  if (n_max < 1) throw Error("hyper: n_max must be >= 1");
  if (mode.graph == GraphKind::ordinary && mode.variant == Variant::rgat_no_ncon)
    throw Error("hyper: ordinary trees have no n:con edges to remove");
}

GraphBatch wire_reshaped(const reshape::AspectTree& tree, int n_tokens,
                         const reshape::RelationVocab& relations, Variant variant) {
  GraphBatch g;
  g.n_nodes = static_cast<int>(tree.children.size()) + 1;
  g.nbrs.assign(static_cast<size_t>(g.n_nodes), {});
  g.token_of.assign(static_cast<size_t>(g.n_nodes), -1);
  (void)n_tokens;

  int self_rel = relations.self_index();
  for (size_t c = 0; c < tree.children.size(); ++c) {
    const reshape::AspectChild& child = tree.children[c];
    int node = static_cast<int>(c) + 1;
    g.token_of[static_cast<size_t>(node)] = child.token;
    int rel = relations.index(child.relation);
    bool drop_from_root =
        variant == Variant::rgat_no_ncon && reshape::is_ncon_label(child.relation);
    if (!drop_from_root) g.nbrs[0].push_back({node, rel});
    g.nbrs[static_cast<size_t>(node)].push_back({0, rel});
  }
  for (int i = 0; i < g.n_nodes; ++i) g.nbrs[static_cast<size_t>(i)].push_back({i, self_rel});
  g.readout = {0};
  return g;
}

GraphBatch wire_ordinary(const DepParse& parse, int aspect_from, int aspect_to,
                         const reshape::RelationVocab& relations, bool rev_suffix) {
  GraphBatch g;
  g.n_nodes = parse.size();
  g.nbrs.assign(static_cast<size_t>(g.n_nodes), {});
  g.token_of.assign(static_cast<size_t>(g.n_nodes), -1);
  for (int t = 1; t <= g.n_nodes; ++t) g.token_of[static_cast<size_t>(t - 1)] = t;

  int self_rel = relations.self_index();
  for (int j = 1; j <= g.n_nodes; ++j) {
    int h = parse.heads[static_cast<size_t>(j - 1)];
    if (h == 0) continue;
    const std::string& label = parse.rels[static_cast<size_t>(j - 1)];
    int rel = relations.index(label);
    int rel_rev = rev_suffix ? relations.index(label + ":rev") : rel;
    g.nbrs[static_cast<size_t>(h - 1)].push_back({j - 1, rel});
    g.nbrs[static_cast<size_t>(j - 1)].push_back({h - 1, rel_rev});
  }
  for (int i = 0; i < g.n_nodes; ++i) g.nbrs[static_cast<size_t>(i)].push_back({i, self_rel});
  for (int t = aspect_from; t <= aspect_to; ++t) g.readout.push_back(t - 1);
  return g;
}

ModelInstance prepare_instance(const corpus::Instance& inst, const corpus::Vocab& vocab,
                               const reshape::RelationVocab& relations,
                               const Hyper& hyper) {
  if (inst.aspect_from < 1 || inst.aspect_to > static_cast<int>(inst.tokens.size()) ||
      inst.aspect_from > inst.aspect_to)
    throw Error("instance '" + inst.id + "': empty or out-of-range aspect span");
  ModelInstance mi;
  mi.src = inst;
  mi.token_ids.reserve(inst.tokens.size());
  for (const std::string& tok : inst.tokens) mi.token_ids.push_back(vocab.lookup(tok));
  if (hyper.mode.graph == GraphKind::reshaped) {
    reshape::AspectTree tree = reshape::build(inst.parse, inst.aspect_from, inst.aspect_to,
                                              hyper.n_max, hyper.rev_suffix);
    mi.graph = wire_reshaped(tree, inst.parse.size(), relations, hyper.mode.variant);
  } else {
    mi.graph = wire_ordinary(inst.parse, inst.aspect_from, inst.aspect_to, relations,
                             hyper.rev_suffix);
  }
  return mi;
}

void init_params(nn::ParamStore& store, const Hyper& hyper, nn::Tensor word_emb,
                 int rel_vocab_size, uint64_t seed) {
  hyper.validate();
  if (word_emb.rank() != 2) throw Error("init_params: word_emb must be a matrix");
  Rng rng(seed);
  int d_w = word_emb.cols();

  store.add("word_emb", std::move(word_emb));
  store.add("rel_emb", nn::xavier_uniform(rel_vocab_size, hyper.rel_dim, rng));
  nn::init_bilstm(store, "sent_lstm", d_w, hyper.lstm_hidden, rng);
  nn::init_bilstm(store, "asp_lstm", d_w, hyper.lstm_hidden, rng);

  int dh = hyper.d_head();
  for (int l = 0; l < hyper.layers; ++l) {
    std::string lp = "l" + std::to_string(l) + ".";
    int d_in = hyper.node_dim(l);
    for (int k = 0; k < hyper.att_heads; ++k) {
      std::string hp = lp + "att" + std::to_string(k) + ".";
      store.add(hp + "q", nn::xavier_uniform(dh, d_in, rng));
      store.add(hp + "k", nn::xavier_uniform(dh, d_in, rng));
      store.add(hp + "v", nn::xavier_uniform(dh, d_in, rng));
    }
    for (int m = 0; m < hyper.rel_heads; ++m) {
      std::string hp = lp + "rel" + std::to_string(m) + ".";
      store.add(hp + "w1", nn::xavier_uniform(hyper.gate_hidden, hyper.rel_dim, rng));
      store.add(hp + "b1", nn::Tensor::zeros({hyper.gate_hidden}));
      store.add(hp + "w2", nn::xavier_uniform(1, hyper.gate_hidden, rng));
      store.add(hp + "b2", nn::Tensor::zeros({1}));
      store.add(hp + "v", nn::xavier_uniform(dh, d_in, rng));
    }
    store.add(lp + "comb.w", nn::xavier_uniform(hyper.hidden, hyper.comb_in(), rng));
    store.add(lp + "comb.b", nn::Tensor::zeros({hyper.hidden}));
  }
  store.add("cls.w", nn::xavier_uniform(hyper.num_classes, hyper.hidden, rng));
  store.add("cls.b", nn::Tensor::zeros({hyper.num_classes}));
}

Tape::NodeId TapeModel::word_vec(Tape& tape, int vocab_id) const {
  auto it = word_local.find(vocab_id);
  if (it == word_local.end())
    throw Error("word id " + std::to_string(vocab_id) + " was not gathered for this tape");
  return tape.row(word_rows, it->second);
}

TapeModel push_model(Tape& tape, const nn::ParamStore& store, const Hyper& hyper,
                     const std::vector<int>& used_word_ids, bool requires_grad) {
  TapeModel m;
  m.hyper = &hyper;
  for (const auto& [name, entry] : store.entries()) {
    if (name == "word_emb") continue;
    m.param_node[name] = tape.leaf(entry.value, requires_grad);
  }
  const nn::Tensor& emb = store.value("word_emb");
  m.word_dim = emb.cols();
  nn::Tensor rows = nn::Tensor::zeros({static_cast<int>(used_word_ids.size()), m.word_dim});
  for (size_t r = 0; r < used_word_ids.size(); ++r) {
    int id = used_word_ids[r];
    if (id < 0 || id >= emb.rows())
      throw Error("word id " + std::to_string(id) + " outside embedding matrix");
    for (int c = 0; c < m.word_dim; ++c) rows.at(static_cast<int>(r), c) = emb.at(id, c);
    m.word_local[id] = static_cast<int>(r);
  }
  m.word_rows = tape.leaf(std::move(rows), requires_grad && hyper.train_embeddings);
  return m;
}

namespace {

Tape::NodeId pnode(const TapeModel& m, const std::string& name) {
  auto it = m.param_node.find(name);
  if (it == m.param_node.end()) throw Error("parameter '" + name + "' not on tape");
  return it->second;
}

void record_row_sum(Tape& tape, Tape::NodeId weights, double* max_err, ForwardTrace* trace) {
  if (!trace) return;
  const nn::Tensor& w = tape.val(weights);
  double s = 0.0;
  for (double v : w.data) s += v;
  *max_err = std::max(*max_err, std::fabs(s - 1.0));
  ++trace->rows_checked;
}

}  // namespace

std::vector<Tape::NodeId> attentional_head(Tape& tape, const TapeModel& model,
                                           const std::vector<Tape::NodeId>& h,
                                           const GraphBatch& g, int layer, int head,
                                           ForwardTrace* trace, Tape::NodeId h_stack) {
  std::string hp = "l" + std::to_string(layer) + ".att" + std::to_string(head) + ".";
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(model.hyper->d_head()));

  if (h_stack < 0) h_stack = tape.stack_rows(h);
  Tape::NodeId q_mat = tape.matmul_nt(h_stack, pnode(model, hp + "q"));
  Tape::NodeId k_mat = tape.matmul_nt(h_stack, pnode(model, hp + "k"));
  Tape::NodeId v_mat = tape.matmul_nt(h_stack, pnode(model, hp + "v"));

  std::vector<Tape::NodeId> keys(h.size(), -1), vals(h.size(), -1);
  auto key_of = [&](int j) {
    if (keys[static_cast<size_t>(j)] < 0) keys[static_cast<size_t>(j)] = tape.row(k_mat, j);
    return keys[static_cast<size_t>(j)];
  };
  auto val_of = [&](int j) {
    if (vals[static_cast<size_t>(j)] < 0) vals[static_cast<size_t>(j)] = tape.row(v_mat, j);
    return vals[static_cast<size_t>(j)];
  };

  std::vector<Tape::NodeId> out(h.size());
  for (int i = 0; i < g.n_nodes; ++i) {
    const auto& nbrs = g.nbrs[static_cast<size_t>(i)];
    Tape::NodeId q = tape.row(q_mat, i);
    std::vector<Tape::NodeId> logits;
    std::vector<Tape::NodeId> messages;
    logits.reserve(nbrs.size());
    messages.reserve(nbrs.size());
    for (const Edge& e : nbrs) {
      logits.push_back(tape.scale(tape.dot(q, key_of(e.nbr)), inv_sqrt_d));
      messages.push_back(val_of(e.nbr));
    }
    Tape::NodeId alpha = tape.softmax(tape.stack_scalars(logits));
    if (trace) record_row_sum(tape, alpha, &trace->max_alpha_row_err, trace);
    out[static_cast<size_t>(i)] = tape.weighted_sum(alpha, messages);
  }
  return out;
}

std::vector<Tape::NodeId> relational_head(Tape& tape, const TapeModel& model,
                                          const std::vector<Tape::NodeId>& h,
                                          const GraphBatch& g, int layer, int head,
                                          ForwardTrace* trace, Tape::NodeId h_stack) {
  std::string hp = "l" + std::to_string(layer) + ".rel" + std::to_string(head) + ".";
  Tape::NodeId w1 = pnode(model, hp + "w1");
  Tape::NodeId b1 = pnode(model, hp + "b1");
  Tape::NodeId w2 = pnode(model, hp + "w2");
  Tape::NodeId b2 = pnode(model, hp + "b2");
  Tape::NodeId rel_emb = pnode(model, "rel_emb");

  if (h_stack < 0) h_stack = tape.stack_rows(h);
  Tape::NodeId v_mat = tape.matmul_nt(h_stack, pnode(model, hp + "v"));
  std::vector<Tape::NodeId> vals(h.size(), -1);
  auto val_of = [&](int j) {
    if (vals[static_cast<size_t>(j)] < 0) vals[static_cast<size_t>(j)] = tape.row(v_mat, j);
    return vals[static_cast<size_t>(j)];
  };

  // The gate depends only on the relation label; one node per label.
  std::map<int, Tape::NodeId> gate_of_rel;
  auto gate = [&](int rel) {
    auto it = gate_of_rel.find(rel);
    if (it != gate_of_rel.end()) return it->second;
    Tape::NodeId r = tape.row(rel_emb, rel);
    Tape::NodeId hidden = tape.relu(tape.add(tape.matvec(w1, r), b1));
    Tape::NodeId gnode = tape.sigmoid(tape.add(tape.matvec(w2, hidden), b2));
    Tape::NodeId scalar = tape.pick(gnode, 0);
    gate_of_rel.emplace(rel, scalar);
    return scalar;
  };

  std::vector<Tape::NodeId> out(h.size());
  for (int i = 0; i < g.n_nodes; ++i) {
    const auto& nbrs = g.nbrs[static_cast<size_t>(i)];
    std::vector<Tape::NodeId> logits;
    std::vector<Tape::NodeId> messages;
    logits.reserve(nbrs.size());
    messages.reserve(nbrs.size());
    for (const Edge& e : nbrs) {
      logits.push_back(gate(e.rel));
      messages.push_back(val_of(e.nbr));
    }
    Tape::NodeId beta = tape.softmax(tape.stack_scalars(logits));
    if (trace) record_row_sum(tape, beta, &trace->max_beta_row_err, trace);
    out[static_cast<size_t>(i)] = tape.weighted_sum(beta, messages);
  }
  return out;
}

std::vector<Tape::NodeId> rgat_layer(Tape& tape, const TapeModel& model,
                                     const std::vector<Tape::NodeId>& h,
                                     const GraphBatch& g, int layer,
                                     const ForwardOptions& opts) {
  const Hyper& hy = *model.hyper;
  Tape::NodeId h_stack = tape.stack_rows(h);
  std::vector<std::vector<Tape::NodeId>> heads;
  for (int k = 0; k < hy.att_heads; ++k)
    heads.push_back(attentional_head(tape, model, h, g, layer, k, opts.trace, h_stack));
  if (hy.mode.variant != Variant::gat_only)
    for (int m = 0; m < hy.rel_heads; ++m)
      heads.push_back(relational_head(tape, model, h, g, layer, m, opts.trace, h_stack));

  Tape::NodeId cw = pnode(model, "l" + std::to_string(layer) + ".comb.w");
  Tape::NodeId cb = pnode(model, "l" + std::to_string(layer) + ".comb.b");

  std::vector<Tape::NodeId> xs(h.size());
  for (int i = 0; i < g.n_nodes; ++i) {
    std::vector<Tape::NodeId> parts;
    parts.reserve(heads.size());
    for (const auto& head_out : heads) parts.push_back(head_out[static_cast<size_t>(i)]);
    xs[static_cast<size_t>(i)] = tape.concat(parts);
  }
  Tape::NodeId next =
      tape.relu(tape.add_rowwise(tape.matmul_nt(tape.stack_rows(xs), cw), cb));
  if (opts.train && hy.dropout > 0.0) {
    if (!opts.rng) throw Error("forward: training with dropout requires an rng");
    next = tape.hadamard_const(
        next, nn::dropout_mask(tape.val(next).shape, hy.dropout, *opts.rng, true));
  }
  std::vector<Tape::NodeId> out(h.size());
  for (int i = 0; i < g.n_nodes; ++i) out[static_cast<size_t>(i)] = tape.row(next, i);
  return out;
}

Tape::NodeId forward_probs(Tape& tape, const TapeModel& model, const ModelInstance& mi,
                           const ForwardOptions& opts) {
  const Hyper& hy = *model.hyper;
  int n = static_cast<int>(mi.token_ids.size());
  if (n == 0) throw Error("forward: empty sentence");
  bool drop = opts.train && hy.dropout > 0.0;
  if (drop && !opts.rng) throw Error("forward: training with dropout requires an rng");

  auto embed = [&](int t) {
    Tape::NodeId e = model.word_vec(tape, mi.token_ids[static_cast<size_t>(t)]);
    if (drop)
      e = tape.hadamard_const(
          e, nn::dropout_mask(tape.val(e).shape, hy.dropout, *opts.rng, true));
    return e;
  };

  std::vector<Tape::NodeId> inputs;
  inputs.reserve(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) inputs.push_back(embed(t));
  nn::BiLstmParams sent;
  sent.hidden = hy.lstm_hidden;
  sent.fw = {pnode(model, "sent_lstm.fw.w_x"), pnode(model, "sent_lstm.fw.w_h"),
             pnode(model, "sent_lstm.fw.b")};
  sent.bw = {pnode(model, "sent_lstm.bw.w_x"), pnode(model, "sent_lstm.bw.w_h"),
             pnode(model, "sent_lstm.bw.b")};
  std::vector<Tape::NodeId> states = nn::bilstm_forward(tape, sent, inputs);

  // Initial node states: sentence BiLSTM for token nodes, mean aspect-BiLSTM
  // state for the root.
  std::vector<Tape::NodeId> h(static_cast<size_t>(mi.graph.n_nodes));
  bool has_root = false;
  for (int i = 0; i < mi.graph.n_nodes; ++i) {
    int tok = mi.graph.token_of[static_cast<size_t>(i)];
    if (tok < 0)
      has_root = true;
    else
      h[static_cast<size_t>(i)] = states[static_cast<size_t>(tok - 1)];
  }
  if (has_root) {
    std::vector<Tape::NodeId> asp_inputs;
    for (int t = mi.src.aspect_from; t <= mi.src.aspect_to; ++t)
      asp_inputs.push_back(embed(t - 1));
    nn::BiLstmParams asp;
    asp.hidden = hy.lstm_hidden;
    asp.fw = {pnode(model, "asp_lstm.fw.w_x"), pnode(model, "asp_lstm.fw.w_h"),
              pnode(model, "asp_lstm.fw.b")};
    asp.bw = {pnode(model, "asp_lstm.bw.w_x"), pnode(model, "asp_lstm.bw.w_h"),
              pnode(model, "asp_lstm.bw.b")};
    std::vector<Tape::NodeId> asp_states = nn::bilstm_forward(tape, asp, asp_inputs);
    Tape::NodeId root0 = tape.mean_of(asp_states);
    for (int i = 0; i < mi.graph.n_nodes; ++i)
      if (mi.graph.token_of[static_cast<size_t>(i)] < 0) h[static_cast<size_t>(i)] = root0;
  }

  for (int l = 0; l < hy.layers; ++l) h = rgat_layer(tape, model, h, mi.graph, l, opts);

  std::vector<Tape::NodeId> readout;
  for (int node : mi.graph.readout) readout.push_back(h[static_cast<size_t>(node)]);
  Tape::NodeId pooled = readout.size() == 1 ? readout[0] : tape.mean_of(readout);

  Tape::NodeId logits =
      tape.add(tape.matvec(pnode(model, "cls.w"), pooled), pnode(model, "cls.b"));
  Tape::NodeId probs = tape.softmax(logits);
  if (opts.trace) {
    const nn::Tensor& p = tape.val(probs);
    double s = 0.0;
    for (double v : p.data) s += v;
    opts.trace->max_prob_sum_err =
        std::max(opts.trace->max_prob_sum_err, std::fabs(s - 1.0));
  }
  return probs;
}

Tape::NodeId batch_loss(Tape& tape, const TapeModel& model,
                        const std::vector<const ModelInstance*>& batch,
                        const ForwardOptions& opts) {
  if (batch.empty()) throw Error("batch_loss: empty batch");
  std::vector<Tape::NodeId> terms;
  terms.reserve(batch.size());
  for (const ModelInstance* mi : batch) {
    Tape::NodeId probs = forward_probs(tape, model, *mi, opts);
    Tape::NodeId log_p =
        tape.log_clamped(tape.pick(probs, static_cast<int>(mi->src.label)), 1e-12);
    terms.push_back(log_p);
  }
  return tape.scale(tape.add_n(terms), -1.0);
}

nn::GradMap collect_grads(Tape& tape, const TapeModel& model, const nn::ParamStore& store) {
  nn::GradMap grads;
  for (const auto& [name, node] : model.param_node) grads[name] = tape.grad(node);
  const nn::Tensor& emb = store.value("word_emb");
  nn::Tensor gemb = nn::Tensor::zeros(emb.shape);
  const nn::Tensor& grows = tape.grad(model.word_rows);
  for (const auto& [vocab_id, local] : model.word_local)
    for (int c = 0; c < model.word_dim; ++c) gemb.at(vocab_id, c) = grows.at(local, c);
  grads["word_emb"] = std::move(gemb);
  return grads;
}

std::vector<int> used_word_ids(const std::vector<const ModelInstance*>& batch) {
  std::set<int> ids;
  for (const ModelInstance* mi : batch)
    for (int id : mi->token_ids) ids.insert(id);
  return std::vector<int>(ids.begin(), ids.end());
}

}  // namespace absa::rgat
