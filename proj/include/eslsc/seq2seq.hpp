#pragma once

// Miniature encoder-decoder with a binary right/wrong head.
//
// Encoder: L pre-norm blocks of bidirectional self-attention + ReLU FFN.
// Decoder: L' pre-norm blocks of causal self-attention, cross-attention over
// the encoder output and FFN. The decoder reads the same embedded sequence
// as the encoder (no shift). A stack with zero layers is the identity.
//
// The classification head reads the decoder state at the final non-pad
// position (EOS):  x = W1 tanh(W0 t + b0) + b1,  p = softmax(x), where
// p[0] is the wrong-option and p[1] the right-option probability. The LM
// head projects decoder states onto the tied token embedding table.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eslsc/error.hpp"
#include "eslsc/model_config.hpp"
#include "eslsc/tensor.hpp"
#include "eslsc/tokenizer.hpp"

namespace eslsc {

/// true marks a real (non-PAD) position.
inline std::vector<bool> valid_positions(std::span<const int> ids) {
  std::vector<bool> v(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) v[i] = ids[i] != SpecialIds::kPad;
  return v;
}

/// Index of the last non-PAD position; throws if every position is PAD.
inline int last_valid(const std::vector<bool>& valid) {
  for (int i = static_cast<int>(valid.size()) - 1; i >= 0; --i) {
    if (valid[static_cast<std::size_t>(i)]) return i;
  }
  throw RangeError("sequence has no non-pad position");
}

template <typename Scalar>
struct ClassifyOutput {
  Scalar logit_wrong = 0;
  Scalar logit_right = 0;
  Scalar p_wrong = 0;
  Scalar p_right = 0;

  Scalar margin() const { return logit_right - logit_wrong; }
};

template <typename Scalar>
class Seq2Seq {
 public:
  using Mat = Matrix<Scalar>;
  using V = Var<Scalar>;
  using Rng = std::mt19937_64;

  explicit Seq2Seq(const ModelConfig& config) : cfg_(config.resolved()) {
    cfg_.validate();
    build();
    initialize();
  }

  const ModelConfig& config() const { return cfg_; }

  std::vector<Parameter<Scalar>>& parameters() { return params_; }
  const std::vector<Parameter<Scalar>>& parameters() const { return params_; }

  std::vector<Parameter<Scalar>*> parameter_ptrs() {
    std::vector<Parameter<Scalar>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  Parameter<Scalar>& parameter(std::string_view name) {
    return const_cast<Parameter<Scalar>&>(std::as_const(*this).parameter(name));
  }
  const Parameter<Scalar>& parameter(std::string_view name) const {
    for (const auto& p : params_) {
      if (p.name == name) return p;
    }
    throw RangeError("no parameter named '" + std::string(name) + "'");
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// E[i] = token_emb[ids[i]] + pos_emb[i].
  V embed(Tape<Scalar>& tape, std::span<const int> ids) {
    if (ids.empty()) throw RangeError("embed: empty sequence");
    if (static_cast<int>(ids.size()) > cfg_.max_len) {
      throw RangeError("embed: sequence length " + std::to_string(ids.size()) + " exceeds max_len " +
                       std::to_string(cfg_.max_len));
    }
    for (int id : ids) {
      if (id < 0 || id >= cfg_.vocab_size) {
        throw RangeError("embed: token id " + std::to_string(id) + " outside [0, " +
                         std::to_string(cfg_.vocab_size) + ")");
      }
    }
    std::vector<int> pos(ids.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int>(i);
    V tok = embedding_lookup(p(tape, tok_emb_), ids);
    V at = embedding_lookup(p(tape, pos_emb_), std::span<const int>(pos));
    return add(tok, at);
  }

  /// Bidirectional encoder; PAD keys are masked out of attention.
  V encode(Tape<Scalar>& tape, V embedded, const std::vector<bool>& valid, Rng* rng = nullptr) {
    check_rows(embedded, valid, "encode");
    if (encoder_.empty()) return embedded;
    const Mask allowed = key_mask(valid, valid.size(), false);
    V x = embedded;
    for (const auto& layer : encoder_) {
      V h = norm(tape, x, layer.ln1);
      x = add(x, drop(attention(tape, h, h, layer.self_attn, allowed), rng));
      h = norm(tape, x, layer.ln2);
      x = add(x, drop(feed_forward(tape, h, layer.ffn), rng));
    }
    return norm(tape, x, enc_ln_);
  }

  /// Causal decoder over `embedded` with cross-attention to `memory`.
  /// Returns all decoder states t_1..t_n as rows.
  V decode(Tape<Scalar>& tape, V embedded, V memory, const std::vector<bool>& valid,
           const std::vector<bool>& memory_valid, Rng* rng = nullptr) {
    check_rows(embedded, valid, "decode");
    check_rows(memory, memory_valid, "decode memory");
    if (memory.cols() != cfg_.d_model) throw ShapeError("decode: memory width differs from d_model");
    if (decoder_.empty()) return embedded;
    const Mask self_allowed = key_mask(valid, valid.size(), true);
    const Mask cross_allowed = key_mask(memory_valid, valid.size(), false);
    V x = embedded;
    for (const auto& layer : decoder_) {
      V h = norm(tape, x, layer.ln1);
      x = add(x, drop(attention(tape, h, h, layer.self_attn, self_allowed), rng));
      h = norm(tape, x, layer.ln2);
      x = add(x, drop(attention(tape, h, memory, layer.cross_attn, cross_allowed), rng));
      h = norm(tape, x, layer.ln3);
      x = add(x, drop(feed_forward(tape, h, layer.ffn), rng));
    }
    return norm(tape, x, dec_ln_);
  }

  /// Head logits (1 x 2) from one decoder state row.
  V classify_logits(Tape<Scalar>& tape, V state) {
    if (state.rows() != 1 || state.cols() != cfg_.d_model) {
      throw ShapeError("classify: expected a 1x" + std::to_string(cfg_.d_model) + " state, got " +
                       shape_str(state.rows(), state.cols()));
    }
    V hidden = tanh(add_bias(matmul_nt(state, p(tape, head_w0_)), p(tape, head_b0_)));
    return add_bias(matmul_nt(hidden, p(tape, head_w1_)), p(tape, head_b1_));
  }

  /// Per-position vocabulary logits (n x V) via the tied embedding table.
  V lm_logits(Tape<Scalar>& tape, V states) { return matmul_nt(states, p(tape, tok_emb_)); }

  struct Forward {
    V embedded;
    V memory;
    V states;
    int last = 0;
  };

  /// Embeds, encodes and decodes one sequence (decoder input == encoder input).
  Forward forward(Tape<Scalar>& tape, std::span<const int> ids, Rng* rng = nullptr) {
    const auto valid = valid_positions(ids);
    Forward f;
    f.last = last_valid(valid);
    f.embedded = embed(tape, ids);
    f.memory = encode(tape, f.embedded, valid, rng);
    f.states = decode(tape, f.embedded, f.memory, valid, valid, rng);
    return f;
  }

  /// Logits of the head for a full sequence, on `tape`.
  V sequence_logits(Tape<Scalar>& tape, std::span<const int> ids, Rng* rng = nullptr) {
    Forward f = forward(tape, ids, rng);
    return classify_logits(tape, slice_rows(f.states, f.last, 1));
  }

  /// Inference-only right/wrong probabilities. Reads parameters without
  /// modifying them; safe to call concurrently.
  ClassifyOutput<Scalar> classify(std::span<const int> ids) const {
    Tape<Scalar> tape(false);
    V x = const_cast<Seq2Seq*>(this)->sequence_logits(tape, ids);
    ClassifyOutput<Scalar> out;
    out.logit_wrong = x.value()(0, 0);
    out.logit_right = x.value()(0, 1);
    Mat probs = softmax_rows(x.value());
    out.p_wrong = probs(0, 0);
    out.p_right = probs(0, 1);
    return out;
  }

  /// Inference-only LM logits (n x V) for a sequence.
  Mat lm_logits(std::span<const int> ids) const {
    Tape<Scalar> tape(false);
    auto* self = const_cast<Seq2Seq*>(this);
    Forward f = self->forward(tape, ids);
    return self->lm_logits(tape, f.states).value();
  }

 private:
  struct Norm {
    int gamma = -1;
    int beta = -1;
  };
  struct Attention {
    int wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct FeedForward {
    int w1, b1, w2, b2;
  };
  struct EncoderLayer {
    Norm ln1, ln2;
    Attention self_attn;
    FeedForward ffn;
  };
  struct DecoderLayer {
    Norm ln1, ln2, ln3;
    Attention self_attn, cross_attn;
    FeedForward ffn;
  };

  enum class Init { kNormal, kZero, kOne };

  int add_param(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init = Init::kNormal) {
    params_.emplace_back(name, Mat::Zero(rows, cols));
    init_.push_back(init);
    return static_cast<int>(params_.size()) - 1;
  }

  Norm add_norm(const std::string& prefix) {
    Norm n;
    n.gamma = add_param(prefix + ".gamma", 1, cfg_.d_model, Init::kOne);
    n.beta = add_param(prefix + ".beta", 1, cfg_.d_model, Init::kZero);
    return n;
  }

  Attention add_attention(const std::string& prefix) {
    const int d = cfg_.d_model;
    Attention a{};
    a.wq = add_param(prefix + ".wq", d, d);
    a.bq = add_param(prefix + ".bq", 1, d, Init::kZero);
    a.wk = add_param(prefix + ".wk", d, d);
    a.bk = add_param(prefix + ".bk", 1, d, Init::kZero);
    a.wv = add_param(prefix + ".wv", d, d);
    a.bv = add_param(prefix + ".bv", 1, d, Init::kZero);
    a.wo = add_param(prefix + ".wo", d, d);
    a.bo = add_param(prefix + ".bo", 1, d, Init::kZero);
    return a;
  }

  FeedForward add_ffn(const std::string& prefix) {
    FeedForward f{};
    f.w1 = add_param(prefix + ".w1", cfg_.ffn_width, cfg_.d_model);
    f.b1 = add_param(prefix + ".b1", 1, cfg_.ffn_width, Init::kZero);
    f.w2 = add_param(prefix + ".w2", cfg_.d_model, cfg_.ffn_width);
    f.b2 = add_param(prefix + ".b2", 1, cfg_.d_model, Init::kZero);
    return f;
  }

  void build() {
    tok_emb_ = add_param("tok_emb", cfg_.vocab_size, cfg_.d_model);
    pos_emb_ = add_param("pos_emb", cfg_.max_len, cfg_.d_model);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      const std::string pre = "enc." + std::to_string(l);
      EncoderLayer layer;
      layer.ln1 = add_norm(pre + ".ln1");
      layer.self_attn = add_attention(pre + ".self");
      layer.ln2 = add_norm(pre + ".ln2");
      layer.ffn = add_ffn(pre + ".ffn");
      encoder_.push_back(layer);
    }
    enc_ln_ = add_norm("enc.ln");
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      const std::string pre = "dec." + std::to_string(l);
      DecoderLayer layer;
      layer.ln1 = add_norm(pre + ".ln1");
      layer.self_attn = add_attention(pre + ".self");
      layer.ln2 = add_norm(pre + ".ln2");
      layer.cross_attn = add_attention(pre + ".cross");
      layer.ln3 = add_norm(pre + ".ln3");
      layer.ffn = add_ffn(pre + ".ffn");
      decoder_.push_back(layer);
    }
    dec_ln_ = add_norm("dec.ln");
    head_w0_ = add_param("head.w0", cfg_.head_hidden, cfg_.d_model);
    head_b0_ = add_param("head.b0", 1, cfg_.head_hidden, Init::kZero);
    head_w1_ = add_param("head.w1", 2, cfg_.head_hidden);
    head_b1_ = add_param("head.b1", 1, 2, Init::kZero);
  }

  // Weights ~ N(0, 0.02) in parameter order, biases 0, norm gains 1.
  void initialize() {
    Rng rng(cfg_.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& prm = params_[i];
      switch (init_[i]) {
        case Init::kOne: prm.value.setOnes(); break;
        case Init::kZero: prm.value.setZero(); break;
        case Init::kNormal:
          for (Eigen::Index j = 0; j < prm.value.size(); ++j) prm.value.data()[j] = Scalar(normal(rng));
          break;
      }
      prm.zero_grad();
    }
  }

  V p(Tape<Scalar>& tape, int index) { return tape.parameter(params_[static_cast<std::size_t>(index)]); }

  V norm(Tape<Scalar>& tape, V x, const Norm& n) {
    return layer_norm(x, p(tape, n.gamma), p(tape, n.beta), Scalar(1e-5));
  }

  V linear(Tape<Scalar>& tape, V x, int w, int b) { return add_bias(matmul_nt(x, p(tape, w)), p(tape, b)); }

  V feed_forward(Tape<Scalar>& tape, V x, const FeedForward& f) {
    return linear(tape, relu(linear(tape, x, f.w1, f.b1)), f.w2, f.b2);
  }

  V attention(Tape<Scalar>& tape, V queries_in, V keys_in, const Attention& a, const Mask& allowed) {
    V q = linear(tape, queries_in, a.wq, a.bq);
    V k = linear(tape, keys_in, a.wk, a.bk);
    V v = linear(tape, keys_in, a.wv, a.bv);
    const int dk = cfg_.d_model / cfg_.heads;
    const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dk));
    std::vector<V> heads;
    heads.reserve(static_cast<std::size_t>(cfg_.heads));
    for (int h = 0; h < cfg_.heads; ++h) {
      V qh = cfg_.heads == 1 ? q : slice_cols(q, h * dk, dk);
      V kh = cfg_.heads == 1 ? k : slice_cols(k, h * dk, dk);
      V vh = cfg_.heads == 1 ? v : slice_cols(v, h * dk, dk);
      V weights = softmax(scale(matmul_nt(qh, kh), inv_sqrt), &allowed);
      heads.push_back(matmul(weights, vh));
    }
    V joined = cfg_.heads == 1 ? heads.front() : concat_cols(heads);
    return linear(tape, joined, a.wo, a.bo);
  }

  V drop(V x, Rng* rng) {
    if (!rng || cfg_.dropout <= 0.0) return x;
    return dropout(x, cfg_.dropout, *rng);
  }

  static Mask key_mask(const std::vector<bool>& key_valid, std::size_t query_rows, bool causal) {
    Mask m(static_cast<Eigen::Index>(query_rows), static_cast<Eigen::Index>(key_valid.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = key_valid[static_cast<std::size_t>(j)] && (!causal || j <= i);
      }
    }
    return m;
  }

  void check_rows(const V& x, const std::vector<bool>& valid, const char* op) const {
    if (x.rows() != static_cast<Eigen::Index>(valid.size()) || x.cols() != cfg_.d_model) {
      throw ShapeError(std::string(op) + ": input " + shape_str(x.rows(), x.cols()) + " does not match " +
                       std::to_string(valid.size()) + " positions of width " + std::to_string(cfg_.d_model));
    }
  }

  ModelConfig cfg_;
  std::vector<Parameter<Scalar>> params_;
  std::vector<Init> init_;
  int tok_emb_ = -1;
  int pos_emb_ = -1;
  std::vector<EncoderLayer> encoder_;
  Norm enc_ln_;
  std::vector<DecoderLayer> decoder_;
  Norm dec_ln_;
  int head_w0_ = -1, head_b0_ = -1, head_w1_ = -1, head_b1_ = -1;
};

}  // namespace eslsc
