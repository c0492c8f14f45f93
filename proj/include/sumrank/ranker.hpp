#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sumrank/corpus.hpp"
#include "sumrank/embedding.hpp"
#include "sumrank/errors.hpp"
#include "sumrank/generate.hpp"
#include "sumrank/io.hpp"
#include "sumrank/rouge.hpp"

namespace sumrank {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Input to the rank model for one (document, candidate summary) pair:
/// both embeddings plus three lexical statistics.
struct RankerFeatures {
  EmbeddingVector doc_embedding;
  EmbeddingVector summary_embedding;
  double unigram_overlap = 0.0;  // summary tokens whose type occurs in doc
  double length_ratio = 0.0;     // |summary tokens| / |doc tokens|
  double novel_bigram = 0.0;     // summary bigrams absent from doc
};

inline RankerFeatures featurize(const Document& doc, const std::string& summary,
                                const EmbeddingProvider& provider,
                                const Tokenizer& tok = tokenize) {
  if (summary.empty()) throw Error("featurize: summary must be non-empty");
  RankerFeatures f;
  f.doc_embedding = provider.embed_document(doc);
  f.summary_embedding = provider.embed(summary);
  TokenList doc_tokens = tok(doc.text);
  TokenList sum_tokens = tok(summary);
  std::unordered_set<std::string> doc_set(doc_tokens.begin(), doc_tokens.end());
  if (!sum_tokens.empty()) {
    std::size_t hit = 0;
    for (const auto& t : sum_tokens) hit += doc_set.count(t);
    f.unigram_overlap =
        static_cast<double>(hit) / static_cast<double>(sum_tokens.size());
  }
  if (!doc_tokens.empty())
    f.length_ratio = static_cast<double>(sum_tokens.size()) /
                     static_cast<double>(doc_tokens.size());
  if (sum_tokens.size() >= 2) {
    std::unordered_set<std::string> doc_bigrams;
    for (std::size_t i = 0; i + 1 < doc_tokens.size(); ++i)
      doc_bigrams.insert(doc_tokens[i] + '\x1f' + doc_tokens[i + 1]);
    std::size_t novel = 0;
    std::size_t total = sum_tokens.size() - 1;
    for (std::size_t i = 0; i + 1 < sum_tokens.size(); ++i)
      if (!doc_bigrams.count(sum_tokens[i] + '\x1f' + sum_tokens[i + 1]))
        ++novel;
    f.novel_bigram = static_cast<double>(novel) / static_cast<double>(total);
  }
  return f;
}

/// Concatenation [doc_embedding ; summary_embedding ; lexical triple],
/// dimension 2 * embedding dim + 3.
inline Vec feature_vector(const RankerFeatures& f) {
  Vec x(f.doc_embedding.dim() + f.summary_embedding.dim() + 3);
  Eigen::Index at = 0;
  for (double v : f.doc_embedding.values) x[at++] = v;
  for (double v : f.summary_embedding.values) x[at++] = v;
  x[at++] = f.unigram_overlap;
  x[at++] = f.length_ratio;
  x[at++] = f.novel_bigram;
  return x;
}

/// Two-layer backbone: normalize(W2 * tanh(W1 * x + b1) + b2). Every output
/// is a unit vector, so downstream dot products are cosine similarities.
struct ProjectionNet {
  Mat W1;
  Vec b1;
  Mat W2;
  Vec b2;

  Eigen::Index input_dim() const { return W1.cols(); }
  Eigen::Index hidden_dim() const { return W1.rows(); }
  Eigen::Index proj_dim() const { return W2.rows(); }

  void validate() const {
    if (b1.size() != W1.rows() || W2.cols() != W1.rows() ||
        b2.size() != W2.rows())
      throw Error("projection net dimensions are inconsistent");
    if (!W1.allFinite() || !b1.allFinite() || !W2.allFinite() ||
        !b2.allFinite())
      throw Error("projection net weights are not finite");
  }
};

namespace detail {

/// Uniform in [-bound, bound], drawn from the engine's raw 64-bit output so
/// the stream is identical on every platform.
inline double uniform_signed(std::mt19937_64& rng, double bound) {
  return (unit_double(rng()) * 2.0 - 1.0) * bound;
}

inline void init_uniform(Mat& m, std::mt19937_64& rng, double bound) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = uniform_signed(rng, bound);
}

inline void init_uniform(Vec& v, std::mt19937_64& rng, double bound) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = uniform_signed(rng, bound);
}

}  // namespace detail

/// Layer-wise uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; the draw
/// order (W1 rows, b1, W2 rows, b2) is part of the determinism contract.
inline ProjectionNet init_projection_net(Eigen::Index input_dim,
                                         Eigen::Index hidden_dim,
                                         Eigen::Index proj_dim,
                                         std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || proj_dim < 1)
    throw Error("projection net dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  ProjectionNet net;
  net.W1 = Mat(hidden_dim, input_dim);
  net.b1 = Vec(hidden_dim);
  net.W2 = Mat(proj_dim, hidden_dim);
  net.b2 = Vec(proj_dim);
  double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  detail::init_uniform(net.W1, rng, bound1);
  detail::init_uniform(net.b1, rng, bound1);
  detail::init_uniform(net.W2, rng, bound2);
  detail::init_uniform(net.b2, rng, bound2);
  return net;
}

/// Forward intermediates kept for backpropagation.
struct ProjectionTrace {
  Vec x;
  Vec h;     // tanh(W1 x + b1)
  Vec y;     // normalized output
  double norm = 0.0;  // pre-normalization length
};

inline ProjectionTrace project_trace(const ProjectionNet& net, const Vec& x) {
  if (x.size() != net.input_dim())
    throw Error("project: input dim " + std::to_string(x.size()) +
                ", net expects " + std::to_string(net.input_dim()));
  ProjectionTrace t;
  t.x = x;
  t.h = (net.W1 * x + net.b1).array().tanh().matrix();
  Vec u = net.W2 * t.h + net.b2;
  t.norm = u.norm();
  if (t.norm < 1e-12)
    throw Error("project: zero-norm output before normalization");
  t.y = u / t.norm;
  return t;
}

inline Vec project(const ProjectionNet& net, const Vec& x) {
  return project_trace(net, x).y;
}

inline EmbeddingVector project(const ProjectionNet& net,
                               const RankerFeatures& f) {
  Vec y = project(net, feature_vector(f));
  EmbeddingVector out;
  out.values.assign(y.data(), y.data() + y.size());
  return out;
}

namespace detail {

inline double log_sum_exp(const Vec& v) {
  double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace detail

/// Contrastive loss over one anchor and k candidate projections:
/// -log( exp(a.y_pos / tau) / sum_i exp(a.y_i / tau) ).
inline double info_nce_loss(const Vec& anchor, const std::vector<Vec>& projections,
                            std::size_t positive_index, double tau) {
  if (tau <= 0.0) throw Error("info_nce_loss: tau must be > 0");
  if (projections.empty()) throw Error("info_nce_loss: no projections");
  if (positive_index >= projections.size())
    throw Error("info_nce_loss: positive index out of range");
  Vec sims(projections.size());
  for (std::size_t i = 0; i < projections.size(); ++i) {
    if (projections[i].size() != anchor.size())
      throw Error("info_nce_loss: projection dim mismatch");
    sims[static_cast<Eigen::Index>(i)] = anchor.dot(projections[i]) / tau;
  }
  return detail::log_sum_exp(sims) -
         sims[static_cast<Eigen::Index>(positive_index)];
}

struct NetGradients {
  Mat W1;
  Vec b1;
  Mat W2;
  Vec b2;

  static NetGradients zeros_like(const ProjectionNet& net) {
    NetGradients g;
    g.W1 = Mat::Zero(net.W1.rows(), net.W1.cols());
    g.b1 = Vec::Zero(net.b1.size());
    g.W2 = Mat::Zero(net.W2.rows(), net.W2.cols());
    g.b2 = Vec::Zero(net.b2.size());
    return g;
  }

  void add(const NetGradients& o) {
    W1 += o.W1;
    b1 += o.b1;
    W2 += o.W2;
    b2 += o.b2;
  }

  void scale(double s) {
    W1 *= s;
    b1 *= s;
    W2 *= s;
    b2 *= s;
  }
};

/// One training example already featurized: anchor = gold-summary features,
/// one feature vector per candidate.
struct InstanceFeatures {
  Vec anchor;
  std::vector<Vec> candidates;
};

namespace detail {

/// Backpropagates dL/dy through normalization, the second layer, tanh, and
/// the first layer, accumulating into g.
inline void accumulate_projection_gradient(const ProjectionNet& net,
                                           const ProjectionTrace& t,
                                           const Vec& dy, NetGradients& g) {
  Vec du = (dy - t.y * t.y.dot(dy)) / t.norm;
  g.W2 += du * t.h.transpose();
  g.b2 += du;
  Vec dh = net.W2.transpose() * du;
  Vec dz = ((1.0 - t.h.array().square()) * dh.array()).matrix();
  g.W1 += dz * t.x.transpose();
  g.b1 += dz;
}

}  // namespace detail

struct InfoNceResult {
  double loss = 0.0;
  NetGradients grads;
};

/// Loss and exact analytic gradient of info_nce_loss with both the anchor and
/// every candidate projected by the same net.
inline InfoNceResult info_nce_gradient(const ProjectionNet& net,
                                       const InstanceFeatures& features,
                                       std::size_t positive_index, double tau) {
  if (tau <= 0.0) throw Error("info_nce_gradient: tau must be > 0");
  std::size_t k = features.candidates.size();
  if (k == 0) throw Error("info_nce_gradient: no candidates");
  if (positive_index >= k)
    throw Error("info_nce_gradient: positive index out of range");

  ProjectionTrace anchor = project_trace(net, features.anchor);
  std::vector<ProjectionTrace> cands;
  cands.reserve(k);
  Vec sims(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    cands.push_back(project_trace(net, features.candidates[i]));
    sims[static_cast<Eigen::Index>(i)] = anchor.y.dot(cands[i].y) / tau;
  }
  double lse = detail::log_sum_exp(sims);

  InfoNceResult result;
  result.loss = lse - sims[static_cast<Eigen::Index>(positive_index)];
  result.grads = NetGradients::zeros_like(net);

  Vec p = (sims.array() - lse).exp().matrix();
  Vec danchor = Vec::Zero(anchor.y.size());
  for (std::size_t i = 0; i < k; ++i) {
    double gi = (p[static_cast<Eigen::Index>(i)] -
                 (i == positive_index ? 1.0 : 0.0)) /
                tau;
    danchor += gi * cands[i].y;
    detail::accumulate_projection_gradient(net, cands[i], gi * anchor.y,
                                           result.grads);
  }
  detail::accumulate_projection_gradient(net, anchor, danchor, result.grads);
  return result;
}

/// One document with its gold summary, the k generated candidates, and each
/// candidate's ROUGE-L F1 against the gold.
struct TrainingInstance {
  Document doc;
  std::vector<std::string> candidates;
  std::vector<double> rouge_l;

  void validate() const {
    if (!doc.has_summary())
      throw Error("training instance \"" + doc.id + "\" has no gold summary");
    if (candidates.size() != rouge_l.size())
      throw Error("training instance \"" + doc.id +
                  "\": candidates and rouge_l lengths differ");
    if (candidates.size() < 2)
      throw Error("training instance \"" + doc.id +
                  "\" needs at least 2 candidates");
    for (double r : rouge_l)
      if (!(r >= 0.0 && r <= 1.0))
        throw Error("training instance \"" + doc.id +
                    "\": rouge_l outside [0, 1]");
  }
};

inline TrainingInstance make_training_instance(
    const Document& doc, std::vector<std::string> candidates,
    const Tokenizer& tok = tokenize) {
  if (!doc.has_summary())
    throw Error("training instance \"" + doc.id + "\" has no gold summary");
  TrainingInstance inst;
  inst.doc = doc;
  TokenList gold = tok(*doc.summary);
  for (const auto& cand : candidates)
    inst.rouge_l.push_back(rouge_l(tok(cand), gold).f1);
  inst.candidates = std::move(candidates);
  inst.validate();
  return inst;
}

/// Joins generation outcomes with their corpus documents; skipped outcomes
/// contribute nothing.
inline std::vector<TrainingInstance> build_training_instances(
    const Corpus& corpus, const std::vector<GenerationOutcome>& outcomes,
    const Tokenizer& tok = tokenize) {
  std::vector<TrainingInstance> instances;
  for (const auto& outcome : outcomes) {
    if (!outcome.ok()) continue;
    const CandidateSet& set = *outcome.candidates;
    const Document* doc = corpus.find(set.doc_id);
    if (doc == nullptr)
      throw Error("candidate doc \"" + set.doc_id + "\" not found in corpus");
    instances.push_back(make_training_instance(*doc, set.candidates, tok));
  }
  return instances;
}

inline void write_training_instances(
    const std::string& path, const std::vector<TrainingInstance>& instances) {
  JsonlWriter writer(path);
  for (const auto& inst : instances) {
    json record;
    record["doc_id"] = inst.doc.id;
    record["summary"] = *inst.doc.summary;
    record["candidates"] = inst.candidates;
    record["rouge_l"] = inst.rouge_l;
    writer.write(record);
  }
}

inline std::vector<TrainingInstance> read_training_instances(
    const std::string& path, const Corpus& corpus) {
  std::vector<TrainingInstance> instances;
  for (const auto& record : read_jsonl(path)) {
    const json& value = record.value;
    auto context = [&](const std::string& msg) {
      return IoError(path + ":" + std::to_string(record.line) + ": " + msg);
    };
    for (const char* field : {"doc_id", "summary", "candidates", "rouge_l"})
      if (!value.contains(field))
        throw context(std::string("training record missing field ") + field);
    std::string doc_id = value["doc_id"].get<std::string>();
    const Document* doc = corpus.find(doc_id);
    if (doc == nullptr) throw context("doc \"" + doc_id + "\" not in corpus");
    if (!doc->has_summary() ||
        *doc->summary != value["summary"].get<std::string>())
      throw context("stored summary disagrees with corpus doc \"" + doc_id +
                    "\"");
    TrainingInstance inst;
    inst.doc = *doc;
    for (const auto& c : value["candidates"])
      inst.candidates.push_back(c.get<std::string>());
    for (const auto& r : value["rouge_l"])
      inst.rouge_l.push_back(r.get<double>());
    inst.validate();
    instances.push_back(std::move(inst));
  }
  return instances;
}

/// Highest-ROUGE-L candidate; ties go to the lowest index.
inline std::size_t select_positive(const TrainingInstance& instance) {
  instance.validate();
  std::size_t best = 0;
  for (std::size_t i = 1; i < instance.rouge_l.size(); ++i)
    if (instance.rouge_l[i] > instance.rouge_l[best]) best = i;
  return best;
}

/// Sum-normalization of ROUGE-L scores into a probability vector; an all-zero
/// input falls back to uniform.
inline std::vector<double> normalize_labels(const std::vector<double>& rouge_l) {
  if (rouge_l.size() < 2) throw Error("normalize_labels: need k >= 2 scores");
  for (double r : rouge_l)
    if (!(r >= 0.0 && r <= 1.0))
      throw Error("normalize_labels: scores must lie in [0, 1]");
  double sum = std::accumulate(rouge_l.begin(), rouge_l.end(), 0.0);
  std::vector<double> labels(rouge_l.size());
  if (sum > 0.0) {
    for (std::size_t i = 0; i < rouge_l.size(); ++i)
      labels[i] = rouge_l[i] / sum;
  } else {
    std::fill(labels.begin(), labels.end(),
              1.0 / static_cast<double>(rouge_l.size()));
  }
  return labels;
}

// Backbone learning rate reported for the original 400M-parameter backbone.
// Orders of magnitude too small for the projection net trained here, so the
// desk-scale default below replaces it.
inline constexpr double kReferenceBackboneLr = 1e-6;

struct TrainConfig {
  double tau = 0.8;
  double lr_backbone = 0.05;
  double lr_head = 3e-4;
  int epochs_phase1 = 10;
  int epochs_phase2 = 1000;
  int batch_size = 16;
  std::uint64_t seed = 1;

  void validate() const {
    if (tau <= 0.0) throw ConfigError("tau must be > 0");
    if (lr_backbone <= 0.0) throw ConfigError("lr_backbone must be > 0");
    if (lr_head <= 0.0) throw ConfigError("lr_head must be > 0");
    if (epochs_phase1 < 0 || epochs_phase2 < 0)
      throw ConfigError("epoch counts must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }
};

namespace detail {

inline std::vector<InstanceFeatures> featurize_instances(
    const std::vector<TrainingInstance>& instances,
    const EmbeddingProvider& provider) {
  std::vector<InstanceFeatures> features;
  features.reserve(instances.size());
  for (const auto& inst : instances) {
    inst.validate();
    InstanceFeatures f;
    f.anchor = feature_vector(featurize(inst.doc, *inst.doc.summary, provider));
    for (const auto& cand : inst.candidates)
      f.candidates.push_back(feature_vector(featurize(inst.doc, cand, provider)));
    features.push_back(std::move(f));
  }
  return features;
}

/// Fisher-Yates over raw engine output; std::shuffle is not used because its
/// draw sequence varies across standard libraries.
inline void shuffle_indices(std::vector<std::size_t>& order,
                            std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng() % i]);
}

}  // namespace detail

struct Phase1Result {
  ProjectionNet net;
  std::vector<double> epoch_loss;  // mean InfoNCE per epoch
};

/// Mini-batch gradient descent on mean InfoNCE. Anchor is the gold summary,
/// positive the highest-ROUGE-L candidate, negatives the rest. Deterministic
/// for a fixed seed and provider.
inline Phase1Result train_phase1(const std::vector<TrainingInstance>& instances,
                                 const TrainConfig& cfg,
                                 const EmbeddingProvider& provider,
                                 Eigen::Index hidden_dim,
                                 Eigen::Index proj_dim) {
  cfg.validate();
  if (instances.empty()) throw Error("train_phase1: no training instances");
  auto features = detail::featurize_instances(instances, provider);
  std::vector<std::size_t> positives;
  positives.reserve(instances.size());
  for (const auto& inst : instances) positives.push_back(select_positive(inst));

  Eigen::Index input_dim = features.front().anchor.size();
  Phase1Result result;
  result.net = init_projection_net(input_dim, hidden_dim, proj_dim, cfg.seed);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs_phase1; ++epoch) {
    detail::shuffle_indices(order, rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(
          order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      NetGradients batch = NetGradients::zeros_like(result.net);
      for (std::size_t at = begin; at < end; ++at) {
        std::size_t i = order[at];
        InfoNceResult r =
            info_nce_gradient(result.net, features[i], positives[i], cfg.tau);
        loss_sum += r.loss;
        batch.add(r.grads);
      }
      batch.scale(cfg.lr_backbone / static_cast<double>(end - begin));
      result.net.W1 -= batch.W1;
      result.net.b1 -= batch.b1;
      result.net.W2 -= batch.W2;
      result.net.b2 -= batch.b2;
    }
    result.epoch_loss.push_back(loss_sum /
                                static_cast<double>(instances.size()));
  }
  return result;
}

/// Linear scorer over projections: logit = w . y + b.
struct ScoringHead {
  Vec w;
  double b = 0.0;
};

struct Phase2Result {
  ScoringHead head;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

/// Full-batch gradient descent on cross-entropy between softmax(head logits)
/// and sum-normalized ROUGE-L labels. The net is read-only here; candidate
/// projections are computed once up front.
inline Phase2Result train_phase2(const ProjectionNet& net,
                                 const std::vector<TrainingInstance>& instances,
                                 const TrainConfig& cfg,
                                 const EmbeddingProvider& provider) {
  cfg.validate();
  if (instances.empty()) throw Error("train_phase2: no training instances");
  net.validate();

  std::vector<std::vector<Vec>> projections;
  std::vector<std::vector<double>> labels;
  for (const auto& inst : instances) {
    inst.validate();
    std::vector<Vec> proj;
    for (const auto& cand : inst.candidates)
      proj.push_back(
          project(net, feature_vector(featurize(inst.doc, cand, provider))));
    projections.push_back(std::move(proj));
    labels.push_back(normalize_labels(inst.rouge_l));
  }

  Phase2Result result;
  result.head.w = Vec::Zero(net.proj_dim());
  result.head.b = 0.0;

  double n = static_cast<double>(instances.size());
  for (int epoch = 0; epoch < cfg.epochs_phase2; ++epoch) {
    Vec gw = Vec::Zero(net.proj_dim());
    double gb = 0.0;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < projections.size(); ++i) {
      const auto& proj = projections[i];
      Vec logits(static_cast<Eigen::Index>(proj.size()));
      for (std::size_t c = 0; c < proj.size(); ++c)
        logits[static_cast<Eigen::Index>(c)] =
            result.head.w.dot(proj[c]) + result.head.b;
      double lse = detail::log_sum_exp(logits);
      for (std::size_t c = 0; c < proj.size(); ++c) {
        double logq = logits[static_cast<Eigen::Index>(c)] - lse;
        double q = std::exp(logq);
        double diff = q - labels[i][c];
        loss_sum -= labels[i][c] * logq;
        gw += diff * proj[c];
        gb += diff;
      }
    }
    result.epoch_loss.push_back(loss_sum / n);
    result.head.w -= (cfg.lr_head / n) * gw;
    result.head.b -= (cfg.lr_head / n) * gb;
  }
  return result;
}

inline constexpr int kModelVersion = 1;
inline constexpr const char* kModelFormat = "sumrank-ranker";

/// Trained reranker: frozen backbone, scoring head, and the fingerprint of
/// the provider whose embeddings it was trained on.
struct RankerModel {
  ProjectionNet net;
  ScoringHead head;
  std::string provider_fingerprint;
  int version = kModelVersion;
};

struct TrainResult {
  RankerModel model;
  std::vector<double> phase1_loss;
  std::vector<double> phase2_loss;
};

inline TrainResult train_ranker(const std::vector<TrainingInstance>& instances,
                                const TrainConfig& cfg,
                                const EmbeddingProvider& provider,
                                Eigen::Index hidden_dim = 32,
                                Eigen::Index proj_dim = 16) {
  Phase1Result phase1 =
      train_phase1(instances, cfg, provider, hidden_dim, proj_dim);
  Phase2Result phase2 = train_phase2(phase1.net, instances, cfg, provider);
  TrainResult result;
  result.model.net = std::move(phase1.net);
  result.model.head = std::move(phase2.head);
  result.model.provider_fingerprint = provider.fingerprint();
  result.phase1_loss = std::move(phase1.epoch_loss);
  result.phase2_loss = std::move(phase2.epoch_loss);
  return result;
}

/// Softmax over head logits for the candidate set; aligned with input order,
/// sums to 1.
inline std::vector<double> score_candidates(
    const RankerModel& model, const Document& doc,
    const std::vector<std::string>& candidates,
    const EmbeddingProvider& provider) {
  if (candidates.empty()) throw Error("score_candidates: no candidates");
  if (model.provider_fingerprint != provider.fingerprint())
    throw Error("score_candidates: provider fingerprint \"" +
                provider.fingerprint() + "\" does not match model \"" +
                model.provider_fingerprint + "\"");
  Vec logits(static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].empty())
      throw Error("score_candidates: empty candidate at index " +
                  std::to_string(i));
    Vec y = project(model.net,
                    feature_vector(featurize(doc, candidates[i], provider)));
    logits[static_cast<Eigen::Index>(i)] = model.head.w.dot(y) + model.head.b;
  }
  double lse = detail::log_sum_exp(logits);
  std::vector<double> probs(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    probs[i] = std::exp(logits[static_cast<Eigen::Index>(i)] - lse);
  return probs;
}

/// Argmax of score_candidates; ties go to the lowest index.
inline std::size_t select_best(const RankerModel& model, const Document& doc,
                               const std::vector<std::string>& candidates,
                               const EmbeddingProvider& provider) {
  std::vector<double> probs = score_candidates(model, doc, candidates, provider);
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

namespace detail {

inline json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Mat json_to_mat(const json& value, Eigen::Index rows, Eigen::Index cols,
                       const std::string& name) {
  if (!value.is_array() || static_cast<Eigen::Index>(value.size()) != rows)
    throw ModelIoError("field " + name + " has wrong row count");
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = value[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ModelIoError("field " + name + " has wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Vec json_to_vec(const json& value, Eigen::Index size,
                       const std::string& name) {
  if (!value.is_array() || static_cast<Eigen::Index>(value.size()) != size)
    throw ModelIoError("field " + name + " has wrong length");
  Vec v(size);
  for (Eigen::Index i = 0; i < size; ++i)
    v[i] = value[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace detail

inline void save_model(const RankerModel& model, const std::string& path) {
  model.net.validate();
  json out;
  out["format"] = kModelFormat;
  out["version"] = model.version;
  out["provider_fingerprint"] = model.provider_fingerprint;
  out["input_dim"] = model.net.input_dim();
  out["hidden_dim"] = model.net.hidden_dim();
  out["proj_dim"] = model.net.proj_dim();
  out["W1"] = detail::mat_to_json(model.net.W1);
  out["b1"] = detail::vec_to_json(model.net.b1);
  out["W2"] = detail::mat_to_json(model.net.W2);
  out["b2"] = detail::vec_to_json(model.net.b2);
  out["head_w"] = detail::vec_to_json(model.head.w);
  out["head_b"] = model.head.b;
  write_file(path, out.dump(2) + "\n");
}

inline RankerModel load_model(const std::string& path) {
  json in;
  try {
    in = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ModelIoError("cannot parse model file " + path + ": " + e.what());
  }
  if (!in.is_object() || in.value("format", "") != kModelFormat)
    throw ModelIoError(path + " is not a ranker model file");
  int version = in.value("version", -1);
  if (version != kModelVersion)
    throw ModelIoError(path + ": unsupported model version " +
                       std::to_string(version));
  for (const char* field :
       {"provider_fingerprint", "input_dim", "hidden_dim", "proj_dim", "W1",
        "b1", "W2", "b2", "head_w", "head_b"})
    if (!in.contains(field))
      throw ModelIoError(path + ": missing field " + field);
  Eigen::Index input = in["input_dim"].get<Eigen::Index>();
  Eigen::Index hidden = in["hidden_dim"].get<Eigen::Index>();
  Eigen::Index proj = in["proj_dim"].get<Eigen::Index>();
  if (input < 1 || hidden < 1 || proj < 1)
    throw ModelIoError(path + ": dimensions must be >= 1");
  RankerModel model;
  model.version = version;
  model.provider_fingerprint = in["provider_fingerprint"].get<std::string>();
  model.net.W1 = detail::json_to_mat(in["W1"], hidden, input, "W1");
  model.net.b1 = detail::json_to_vec(in["b1"], hidden, "b1");
  model.net.W2 = detail::json_to_mat(in["W2"], proj, hidden, "W2");
  model.net.b2 = detail::json_to_vec(in["b2"], proj, "b2");
  model.head.w = detail::json_to_vec(in["head_w"], proj, "head_w");
  model.head.b = in["head_b"].get<double>();
  model.net.validate();
  return model;
}

}  // namespace sumrank
