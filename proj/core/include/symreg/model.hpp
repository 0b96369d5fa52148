#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "symreg/expr.hpp"

namespace symreg {

struct ModelConfig {
  int vocab = 0;       // sampleable token count
  int embed_dim = 10;  // r, must be even
  int layers = 1;      // decoder blocks
  int heads = 1;       // must divide embed_dim
  int ff_dim = 2048;   // hidden width of the feed-forward
  int dct_clip = 8;    // M, frequency rows kept for attention

  void validate() const;
};

// One row of the generation context: a generated node, or the query slot
// (token_id = -1) whose token is being predicted.
struct NodeContext {
  int token_id = -1;
  double depth = 1.0;
  double horizontal = 0.5;
};

// Named segments of the flat parameter vector. flatten/unflatten is the
// identity by construction: parameters only ever live in the flat vector and
// are viewed through Eigen::Map.
struct ParamLayout {
  struct Segment {
    std::string name;
    int offset = 0;
    int rows = 0;
    int cols = 0;
  };
  std::vector<Segment> segments;
  int total = 0;

  int index_of(const std::string& name) const;  // -1 if absent
};

struct StepTrace;

// Decoder-only expression generator. Attention runs in DCT frequency space:
// the context embedding is cosine-transformed, the top (N - M) frequency rows
// are dropped, QKV attention runs over the remaining rows, and the inverse
// transform (with zero padding) restores the sequence before the residual
// add. A block is: attention + residual + layer norm + feed-forward +
// residual + layer norm.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  int param_count() const { return layout_.total; }

  // Deterministic random initialization (layer-norm gains 1, biases 0).
  Eigen::VectorXd init_params(std::uint64_t seed) const;

  // Next-token logits for the context. ctx.back() must be the query slot.
  // Pass a trace to enable backward().
  Eigen::VectorXd forward(std::span<const NodeContext> ctx,
                          const Eigen::VectorXd& theta,
                          StepTrace* trace = nullptr) const;

  // Accumulates d(scalar)/d(theta) into grad, given d(scalar)/d(logits) for a
  // step previously traced by forward().
  void backward(const StepTrace& trace, const Eigen::VectorXd& dlogits,
                Eigen::VectorXd& grad) const;

  // Segment views into a flat vector (const and mutable).
  Eigen::Map<const Eigen::MatrixXd> seg(const Eigen::VectorXd& theta, int idx) const;
  Eigen::Map<Eigen::MatrixXd> seg(Eigen::VectorXd& theta, int idx) const;

 private:
  ModelConfig cfg_;
  ParamLayout layout_;
  // Lazily built DCT matrices per sequence length (immutable once created;
  // the backing vector never reallocates, so returned references are stable).
  const Eigen::MatrixXd& dct(int N) const;
  mutable std::vector<Eigen::MatrixXd> dct_cache_;
  mutable std::mutex dct_mutex_;
  std::vector<double> init_scale_;  // per segment: 0 zeros, -1 ones, >0 gaussian

  // segment indices, resolved at construction
  struct Ids {
    int embed = -1, head_w = -1, head_b = -1;
    struct Layer {
      int q, k, v, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
    };
    std::vector<Layer> layers;
  } ids_;

  friend struct StepTrace;
};

// Intermediate activations of one forward pass, kept for backward().
struct StepTrace {
  struct Layer {
    Eigen::MatrixXd X;            // block input
    Eigen::MatrixXd Hc;           // clipped frequency rows
    Eigen::MatrixXd Qp, Kp, Vp;   // projections
    std::vector<Eigen::MatrixXd> P;  // per-head attention weights
    Eigen::MatrixXd S1, X1;       // residual sum and LN1 output
    Eigen::VectorXd mu1, inv1;    // LN1 row stats
    Eigen::MatrixXd Z1, G;        // feed-forward pre-activation / activation
    Eigen::MatrixXd S2;           // residual sum before LN2
    Eigen::VectorXd mu2, inv2;    // LN2 row stats
    Eigen::MatrixXd X2;           // block output
  };
  std::vector<int> row_tokens;    // -1 marks the query row
  Eigen::MatrixXd X0;
  std::vector<Layer> layers;
  const Eigen::VectorXd* theta = nullptr;  // parameters used for the pass
};

// Log-softmax over the legal tokens of a masked logit vector; masked entries
// get -inf (probability exactly zero). Bit `i` of mask = token i legal.
Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd& logits, std::uint64_t mask);

// Context rows for generation step `step` (0-based) of a BFS token sequence:
// rows for tokens[0..step-1] plus the query slot. step == tokens.size() asks
// for the context of the next yet-unsampled slot.
std::vector<NodeContext> step_context(const TokenLibrary& lib,
                                      std::span<const int> tokens, int step);

// Logits for the next BFS slot of a partial tree. Throws UsageError if the
// prefix is already complete or would exceed `max_nodes` (0 = unchecked).
Eigen::VectorXd predict_next(const Model& model, const TokenLibrary& lib,
                             const BfsBuilder& prefix, const Eigen::VectorXd& theta,
                             int max_nodes = 0);

// Parameter checkpoint: versioned header with the layout map, then the flat
// vector as raw little-endian doubles. Byte-for-byte deterministic.
void save_params(std::ostream& out, const Model& model, const Eigen::VectorXd& theta);
std::pair<ModelConfig, Eigen::VectorXd> load_params(std::istream& in);

}  // namespace symreg
