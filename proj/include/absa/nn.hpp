#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "absa/rng.hpp"
#include "absa/tape.hpp"
#include "absa/tensor.hpp"

namespace absa::nn {

// Named trainable tensors plus their Adam state. Iteration order is the
// sorted name order, which keeps updates and checkpoints deterministic.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor m;  // first moment
    Tensor v;  // second moment
    long step = 0;
  };

  Tensor& add(const std::string& name, Tensor init);
  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }
  std::vector<std::string> names() const;
  long total_params() const;
  void check_finite() const;

 private:
  std::map<std::string, Entry> entries_;
};

using GradMap = std::map<std::string, Tensor>;

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update. Parameters without a gradient entry are
// treated as having zero gradient. NaN/Inf in any gradient aborts.
void adam_step(ParamStore& store, const GradMap& grads, const AdamConfig& cfg = {});

// Xavier-uniform matrix, limit sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(int rows, int cols, Rng& rng);

// Inverted dropout on a plain tensor: kept units scaled by 1/(1-rate).
// Identity when train is false or rate is 0. rate must be < 1.
Tensor dropout(const Tensor& x, double rate, Rng& rng, bool train);
// The same mask as a tensor, for applying on a tape via hadamard_const.
Tensor dropout_mask(const std::vector<int>& shape, double rate, Rng& rng, bool train);

// One LSTM direction with fused gate matrices; gate order i, f, g, o.
struct LstmDirParams {
  Tape::NodeId w_x;  // [4H, d_in]
  Tape::NodeId w_h;  // [4H, H]
  Tape::NodeId b;    // [4H]
};

struct BiLstmParams {
  LstmDirParams fw;
  LstmDirParams bw;
  int hidden = 0;
};

// Registers the six tensors "<prefix>.{fw,bw}.{w_x,w_h,b}" in the store.
void init_bilstm(ParamStore& store, const std::string& prefix, int d_in, int hidden,
                 Rng& rng);
// Pushes the stored tensors onto a tape.
BiLstmParams bilstm_on_tape(Tape& tape, const ParamStore& store,
                            const std::string& prefix, int hidden,
                            bool requires_grad = true);

// Left-to-right and right-to-left LSTM passes over `inputs` (node ids of
// equal-length vectors); per-position concatenation, zero initial states.
std::vector<Tape::NodeId> bilstm_forward(Tape& tape, const BiLstmParams& p,
                                         const std::vector<Tape::NodeId>& inputs);

// Central-difference gradient check. `f` must rebuild the loss from the
// current parameter values and also report analytic gradients; it must be
// deterministic (no dropout). Returns the max relative error over sampled
// coordinates: |ga - gn| / max(1e-8, |ga| + |gn|).
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
};
GradCheckResult grad_check(const std::function<double(const ParamStore&, GradMap*)>& f,
                           ParamStore& params, double eps = 1e-5,
                           int samples_per_tensor = 6, uint64_t seed = 17);

}  // namespace absa::nn
