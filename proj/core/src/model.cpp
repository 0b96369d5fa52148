#include "symreg/model.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <utility>

#include "symreg/dct.hpp"
#include "symreg/dpe.hpp"
#include "symreg/rng.hpp"

namespace symreg {

namespace {

constexpr int kMaxCachedLen = 4096;
constexpr double kLnEps = 1e-5;
constexpr double kGeluK = 0.79788456080286535588;  // sqrt(2/pi)

double gelu(double z) {
  return 0.5 * z * (1.0 + std::tanh(kGeluK * (z + 0.044715 * z * z * z)));
}

double gelu_grad(double z) {
  double u = kGeluK * (z + 0.044715 * z * z * z);
  double t = std::tanh(u);
  double du = kGeluK * (1.0 + 3.0 * 0.044715 * z * z);
  return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du;
}

void layer_norm_forward(const Eigen::MatrixXd& S, const Eigen::VectorXd& gain,
                        const Eigen::VectorXd& bias, Eigen::MatrixXd& out,
                        Eigen::VectorXd& mu, Eigen::VectorXd& inv) {
  const int N = static_cast<int>(S.rows());
  const int r = static_cast<int>(S.cols());
  out.resize(N, r);
  mu.resize(N);
  inv.resize(N);
  for (int i = 0; i < N; ++i) {
    double m = S.row(i).mean();
    Eigen::VectorXd d = S.row(i).transpose().array() - m;
    double var = d.squaredNorm() / r;
    double iv = 1.0 / std::sqrt(var + kLnEps);
    mu[i] = m;
    inv[i] = iv;
    out.row(i) = (gain.array() * (d.array() * iv) + bias.array()).transpose();
  }
}

void layer_norm_backward(const Eigen::MatrixXd& S, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& inv, const Eigen::VectorXd& gain,
                         const Eigen::MatrixXd& dY, Eigen::MatrixXd& dS,
                         Eigen::Map<Eigen::MatrixXd> dgain,
                         Eigen::Map<Eigen::MatrixXd> dbias) {
  const int N = static_cast<int>(S.rows());
  const int r = static_cast<int>(S.cols());
  dS.resize(N, r);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd xhat = (S.row(i).transpose().array() - mu[i]) * inv[i];
    Eigen::VectorXd dy = dY.row(i).transpose();
    dgain.col(0) += dy.cwiseProduct(xhat);
    dbias.col(0) += dy;
    Eigen::VectorXd dxhat = dy.cwiseProduct(gain);
    double m1 = dxhat.mean();
    double m2 = dxhat.cwiseProduct(xhat).mean();
    dS.row(i) = (inv[i] * (dxhat.array() - m1 - xhat.array() * m2)).transpose();
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab < 1) throw UsageError("model: vocab must be positive");
  if (vocab > 64) throw UsageError("model: vocab above 64 is unsupported (mask bitmaps)");
  if (embed_dim < 2 || embed_dim % 2 != 0)
    throw UsageError("model: embed_dim must be even and >= 2");
  if (layers < 1) throw UsageError("model: need at least one decoder layer");
  if (heads < 1 || embed_dim % heads != 0)
    throw UsageError("model: heads must divide embed_dim");
  if (ff_dim < 1) throw UsageError("model: ff_dim must be positive");
  if (dct_clip < 1) throw UsageError("model: dct_clip must be positive");
}

int ParamLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (segments[i].name == name) return static_cast<int>(i);
  return -1;
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int r = cfg_.embed_dim;
  const int F = cfg_.ff_dim;
  auto add = [&](const std::string& name, int rows, int cols, double scale) {
    layout_.segments.push_back({name, layout_.total, rows, cols});
    layout_.total += rows * cols;
    init_scale_.push_back(scale);
    return static_cast<int>(layout_.segments.size()) - 1;
  };
  // Row cfg_.vocab of the embedding is the query-slot row.
  ids_.embed = add("embed", cfg_.vocab + 1, r, 0.1);
  const double qkv_scale = 1.0 / std::sqrt(static_cast<double>(r));
  for (int l = 0; l < cfg_.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    Ids::Layer L;
    L.q = add(p + "q", r, r, qkv_scale);
    L.k = add(p + "k", r, r, qkv_scale);
    L.v = add(p + "v", r, r, qkv_scale);
    L.ln1_g = add(p + "ln1.gain", r, 1, -1.0);
    L.ln1_b = add(p + "ln1.bias", r, 1, 0.0);
    L.w1 = add(p + "ff.w1", r, F, std::sqrt(2.0 / (r + F)));
    L.b1 = add(p + "ff.b1", F, 1, 0.0);
    L.w2 = add(p + "ff.w2", F, r, std::sqrt(2.0 / (F + r)));
    L.b2 = add(p + "ff.b2", r, 1, 0.0);
    L.ln2_g = add(p + "ln2.gain", r, 1, -1.0);
    L.ln2_b = add(p + "ln2.bias", r, 1, 0.0);
    ids_.layers.push_back(L);
  }
  // Near-zero head keeps the initial token distribution close to uniform, so
  // early batches stay diverse.
  ids_.head_w = add("head.w", r, cfg_.vocab, 0.01);
  ids_.head_b = add("head.b", cfg_.vocab, 1, 0.0);
  dct_cache_.resize(kMaxCachedLen + 1);
}

Eigen::Map<const Eigen::MatrixXd> Model::seg(const Eigen::VectorXd& theta, int idx) const {
  const auto& s = layout_.segments[idx];
  return {theta.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::MatrixXd> Model::seg(Eigen::VectorXd& theta, int idx) const {
  const auto& s = layout_.segments[idx];
  return {theta.data() + s.offset, s.rows, s.cols};
}

Eigen::VectorXd Model::init_params(std::uint64_t seed) const {
  Rng rng(Rng::derive(seed, 0x9a7a));
  Eigen::VectorXd theta(layout_.total);
  for (std::size_t i = 0; i < layout_.segments.size(); ++i) {
    const auto& s = layout_.segments[i];
    auto block = theta.segment(s.offset, s.rows * s.cols);
    double scale = init_scale_[i];
    if (scale == 0.0) {
      block.setZero();
    } else if (scale < 0.0) {
      block.setOnes();
    } else {
      for (int j = 0; j < block.size(); ++j) block[j] = rng.next_normal(scale);
    }
  }
  return theta;
}

const Eigen::MatrixXd& Model::dct(int N) const {
  if (N > kMaxCachedLen) {
    thread_local Eigen::MatrixXd big;
    big = dct_matrix(N);
    return big;
  }
  std::lock_guard<std::mutex> lock(dct_mutex_);
  if (dct_cache_[N].rows() == 0) dct_cache_[N] = dct_matrix(N);
  return dct_cache_[N];
}

Eigen::VectorXd Model::forward(std::span<const NodeContext> ctx,
                               const Eigen::VectorXd& theta,
                               StepTrace* trace) const {
  const int N = static_cast<int>(ctx.size());
  if (N < 1) throw UsageError("forward: empty context");
  if (theta.size() != layout_.total) throw UsageError("forward: parameter size mismatch");
  if (ctx.back().token_id != -1)
    throw UsageError("forward: last context row must be the query slot");
  const int r = cfg_.embed_dim;

  auto embed = seg(theta, ids_.embed);
  Eigen::MatrixXd X(N, r);
  for (int i = 0; i < N; ++i) {
    int tok = ctx[i].token_id;
    if (tok < -1 || tok >= cfg_.vocab) throw UsageError("forward: token id out of range");
    int row = tok < 0 ? cfg_.vocab : tok;
    X.row(i) = embed.row(row) +
               position_embedding(ctx[i].depth, ctx[i].horizontal, r).transpose();
  }

  if (trace) {
    trace->theta = &theta;
    trace->row_tokens.resize(N);
    for (int i = 0; i < N; ++i) trace->row_tokens[i] = ctx[i].token_id;
    trace->X0 = X;
    trace->layers.assign(cfg_.layers, {});
  }

  const Eigen::MatrixXd& C = dct(N);
  const int M = std::min(cfg_.dct_clip, N);
  const int H = cfg_.heads;
  const int w = r / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));

  for (int l = 0; l < cfg_.layers; ++l) {
    const auto& L = ids_.layers[l];
    Eigen::MatrixXd Hf = C * X;
    Eigen::MatrixXd Hc = Hf.topRows(M);
    Eigen::MatrixXd Qp = Hc * seg(theta, L.q);
    Eigen::MatrixXd Kp = Hc * seg(theta, L.k);
    Eigen::MatrixXd Vp = Hc * seg(theta, L.v);

    Eigen::MatrixXd A(M, r);
    std::vector<Eigen::MatrixXd> Ps(H);
    for (int h = 0; h < H; ++h) {
      auto Qh = Qp.middleCols(h * w, w);
      auto Kh = Kp.middleCols(h * w, w);
      auto Vh = Vp.middleCols(h * w, w);
      Eigen::MatrixXd S = (Qh * Kh.transpose()) * scale;
      Eigen::MatrixXd P(M, M);
      for (int i = 0; i < M; ++i) {
        double mx = S.row(i).maxCoeff();
        Eigen::ArrayXd e = (S.row(i).transpose().array() - mx).exp();
        P.row(i) = (e / e.sum()).matrix().transpose();
      }
      A.middleCols(h * w, w) = P * Vh;
      Ps[h] = std::move(P);
    }

    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(N, r);
    padded.topRows(M) = A;
    Eigen::MatrixXd U = C.transpose() * padded;

    Eigen::MatrixXd S1 = X + U;
    Eigen::MatrixXd X1;
    Eigen::VectorXd mu1, inv1;
    layer_norm_forward(S1, seg(theta, L.ln1_g).col(0), seg(theta, L.ln1_b).col(0),
                       X1, mu1, inv1);

    Eigen::MatrixXd Z1 = X1 * seg(theta, L.w1);
    Z1.rowwise() += seg(theta, L.b1).col(0).transpose();
    Eigen::MatrixXd G = Z1.unaryExpr([](double z) { return gelu(z); });
    Eigen::MatrixXd Fo = G * seg(theta, L.w2);
    Fo.rowwise() += seg(theta, L.b2).col(0).transpose();

    Eigen::MatrixXd S2 = X1 + Fo;
    Eigen::MatrixXd X2;
    Eigen::VectorXd mu2, inv2;
    layer_norm_forward(S2, seg(theta, L.ln2_g).col(0), seg(theta, L.ln2_b).col(0),
                       X2, mu2, inv2);

    if (trace) {
      auto& T = trace->layers[l];
      T.X = std::move(X);
      T.Hc = std::move(Hc);
      T.Qp = std::move(Qp);
      T.Kp = std::move(Kp);
      T.Vp = std::move(Vp);
      T.P = std::move(Ps);
      T.S1 = std::move(S1);
      T.X1 = std::move(X1);
      T.mu1 = std::move(mu1);
      T.inv1 = std::move(inv1);
      T.Z1 = std::move(Z1);
      T.G = std::move(G);
      T.S2 = std::move(S2);
      T.mu2 = std::move(mu2);
      T.inv2 = std::move(inv2);
      T.X2 = X2;
    }
    X = std::move(X2);
  }

  return seg(theta, ids_.head_w).transpose() * X.row(N - 1).transpose() +
         seg(theta, ids_.head_b).col(0);
}

void Model::backward(const StepTrace& trace, const Eigen::VectorXd& dlogits,
                     Eigen::VectorXd& grad) const {
  if (!trace.theta) throw UsageError("backward: trace was not filled by forward()");
  const Eigen::VectorXd& theta = *trace.theta;
  if (grad.size() != layout_.total) throw UsageError("backward: gradient size mismatch");
  const int N = static_cast<int>(trace.X0.rows());
  const int r = cfg_.embed_dim;
  const Eigen::MatrixXd& C = dct(N);
  const int M = std::min(cfg_.dct_clip, N);
  const int H = cfg_.heads;
  const int w = r / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));

  const Eigen::MatrixXd& lastX2 = trace.layers.back().X2;
  {
    auto dWh = seg(grad, ids_.head_w);
    dWh += lastX2.row(N - 1).transpose() * dlogits.transpose();
    auto dbh = seg(grad, ids_.head_b);
    dbh.col(0) += dlogits;
  }
  Eigen::MatrixXd dX = Eigen::MatrixXd::Zero(N, r);
  dX.row(N - 1) = (seg(theta, ids_.head_w) * dlogits).transpose();

  for (int l = cfg_.layers - 1; l >= 0; --l) {
    const auto& L = ids_.layers[l];
    const auto& T = trace.layers[l];

    Eigen::MatrixXd dS2;
    layer_norm_backward(T.S2, T.mu2, T.inv2, seg(theta, L.ln2_g).col(0), dX, dS2,
                        seg(grad, L.ln2_g), seg(grad, L.ln2_b));

    // S2 = X1 + FF(X1)
    Eigen::MatrixXd dX1 = dS2;
    {
      Eigen::MatrixXd dG = dS2 * seg(theta, L.w2).transpose();
      seg(grad, L.w2) += T.G.transpose() * dS2;
      seg(grad, L.b2).col(0) += dS2.colwise().sum().transpose();
      Eigen::MatrixXd dZ1 =
          dG.cwiseProduct(T.Z1.unaryExpr([](double z) { return gelu_grad(z); }));
      seg(grad, L.w1) += T.X1.transpose() * dZ1;
      seg(grad, L.b1).col(0) += dZ1.colwise().sum().transpose();
      dX1 += dZ1 * seg(theta, L.w1).transpose();
    }

    Eigen::MatrixXd dS1;
    layer_norm_backward(T.S1, T.mu1, T.inv1, seg(theta, L.ln1_g).col(0), dX1, dS1,
                        seg(grad, L.ln1_g), seg(grad, L.ln1_b));

    // S1 = X + idct([A; 0])
    Eigen::MatrixXd dXl = dS1;
    Eigen::MatrixXd dA = (C * dS1).topRows(M);

    Eigen::MatrixXd dQp = Eigen::MatrixXd::Zero(M, r);
    Eigen::MatrixXd dKp = Eigen::MatrixXd::Zero(M, r);
    Eigen::MatrixXd dVp = Eigen::MatrixXd::Zero(M, r);
    for (int h = 0; h < H; ++h) {
      auto Qh = T.Qp.middleCols(h * w, w);
      auto Kh = T.Kp.middleCols(h * w, w);
      auto Vh = T.Vp.middleCols(h * w, w);
      const Eigen::MatrixXd& P = T.P[h];
      Eigen::MatrixXd dAh = dA.middleCols(h * w, w);
      dVp.middleCols(h * w, w) = P.transpose() * dAh;
      Eigen::MatrixXd dP = dAh * Vh.transpose();
      Eigen::MatrixXd dS(M, M);
      for (int i = 0; i < M; ++i) {
        double dot = dP.row(i).dot(P.row(i));
        dS.row(i) = P.row(i).cwiseProduct((dP.row(i).array() - dot).matrix());
      }
      dQp.middleCols(h * w, w) = (dS * Kh) * scale;
      dKp.middleCols(h * w, w) = (dS.transpose() * Qh) * scale;
    }

    seg(grad, L.q) += T.Hc.transpose() * dQp;
    seg(grad, L.k) += T.Hc.transpose() * dKp;
    seg(grad, L.v) += T.Hc.transpose() * dVp;

    Eigen::MatrixXd dHc = dQp * seg(theta, L.q).transpose() +
                          dKp * seg(theta, L.k).transpose() +
                          dVp * seg(theta, L.v).transpose();
    Eigen::MatrixXd dHf = Eigen::MatrixXd::Zero(N, r);
    dHf.topRows(M) = dHc;
    dXl += C.transpose() * dHf;

    dX = std::move(dXl);
  }

  auto dEmb = seg(grad, ids_.embed);
  for (int i = 0; i < N; ++i) {
    int row = trace.row_tokens[i] < 0 ? cfg_.vocab : trace.row_tokens[i];
    dEmb.row(row) += dX.row(i);
  }
}

Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd& logits, std::uint64_t mask) {
  const int n = static_cast<int>(logits.size());
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  double mx = neg_inf;
  for (int i = 0; i < n; ++i)
    if ((mask >> i) & 1u) mx = std::max(mx, logits[i]);
  if (mx == neg_inf) throw UsageError("masked_log_softmax: no legal tokens");
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    if ((mask >> i) & 1u) sum += std::exp(logits[i] - mx);
  double lse = mx + std::log(sum);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i)
    out[i] = ((mask >> i) & 1u) ? logits[i] - lse : neg_inf;
  return out;
}

std::vector<NodeContext> step_context(const TokenLibrary& lib,
                                      std::span<const int> tokens, int step) {
  if (step < 0 || step > static_cast<int>(tokens.size()))
    throw UsageError("step_context: step out of range");
  BfsBuilder builder(lib);
  for (int i = 0; i < step; ++i) builder.push(tokens[i]);
  if (builder.complete()) throw UsageError("step_context: tree is already complete");
  std::vector<NodeContext> ctx;
  ctx.reserve(step + 1);
  for (const ExprNode& n : builder.tree().nodes)
    ctx.push_back({n.token_id, static_cast<double>(n.depth), n.horizontal});
  ctx.push_back({-1, static_cast<double>(builder.next_depth()), builder.next_horizontal()});
  return ctx;
}

Eigen::VectorXd predict_next(const Model& model, const TokenLibrary& lib,
                             const BfsBuilder& prefix, const Eigen::VectorXd& theta,
                             int max_nodes) {
  (void)lib;
  if (prefix.started() && prefix.complete())
    throw UsageError("predict_next: prefix is already a complete tree");
  if (max_nodes > 0 && prefix.node_count() >= max_nodes)
    throw UsageError("predict_next: prefix exceeds the node budget");
  std::vector<NodeContext> ctx;
  ctx.reserve(prefix.node_count() + 1);
  for (const ExprNode& n : prefix.tree().nodes)
    ctx.push_back({n.token_id, static_cast<double>(n.depth), n.horizontal});
  ctx.push_back({-1, static_cast<double>(prefix.next_depth()), prefix.next_horizontal()});
  return model.forward(ctx, theta);
}

void save_params(std::ostream& out, const Model& model, const Eigen::VectorXd& theta) {
  const ModelConfig& c = model.config();
  if (theta.size() != model.param_count())
    throw UsageError("save_params: parameter size mismatch");
  out << "symreg-params v1\n";
  out << "vocab " << c.vocab << " embed " << c.embed_dim << " layers " << c.layers
      << " heads " << c.heads << " ff " << c.ff_dim << " clip " << c.dct_clip << "\n";
  out << "segments " << model.layout().segments.size() << "\n";
  for (const auto& s : model.layout().segments)
    out << s.name << ' ' << s.offset << ' ' << s.rows << ' ' << s.cols << "\n";
  out << "data " << theta.size() << "\n";
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(theta.size() * sizeof(double)));
}

std::pair<ModelConfig, Eigen::VectorXd> load_params(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "symreg-params" || version != "v1")
    throw UsageError("load_params: not a v1 parameter file");
  ModelConfig cfg;
  std::string label;
  auto expect = [&](const char* want, int& value) {
    in >> label >> value;
    if (label != want) throw UsageError("load_params: malformed header near '" + label + "'");
  };
  expect("vocab", cfg.vocab);
  expect("embed", cfg.embed_dim);
  expect("layers", cfg.layers);
  expect("heads", cfg.heads);
  expect("ff", cfg.ff_dim);
  expect("clip", cfg.dct_clip);
  int n_segments = 0;
  expect("segments", n_segments);
  for (int i = 0; i < n_segments; ++i) {
    std::string name;
    int offset, rows, cols;
    in >> name >> offset >> rows >> cols;
  }
  long long n_params = 0;
  in >> label >> n_params;
  if (label != "data" || !in) throw UsageError("load_params: malformed data header");
  in.get();  // newline before the raw block
  Eigen::VectorXd theta(n_params);
  in.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  if (!in) throw UsageError("load_params: truncated parameter data");
  Model check(cfg);
  if (check.param_count() != n_params)
    throw UsageError("load_params: parameter count does not match the configuration");
  return {cfg, std::move(theta)};
}

}  // namespace symreg
