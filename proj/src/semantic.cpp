#include "vidgraph/semantic.hpp"

#include <cctype>
#include <fstream>

#include <json.hpp>

#include "vidgraph/rng.hpp"

namespace vidgraph {

PromptTemplate prompt_template_from_string(const std::string& name) {
  if (name == "prefix") return PromptTemplate::Prefix;
  if (name == "cloze") return PromptTemplate::Cloze;
  if (name == "suffix") return PromptTemplate::Suffix;
  if (name == "ensemble") return PromptTemplate::Ensemble;
  if (name == "raw") return PromptTemplate::Raw;
  fail("unknown prompt template \"" + name + "\"");
}

std::string prompt_template_to_string(PromptTemplate t) {
  switch (t) {
    case PromptTemplate::Prefix: return "prefix";
    case PromptTemplate::Cloze: return "cloze";
    case PromptTemplate::Suffix: return "suffix";
    case PromptTemplate::Ensemble: return "ensemble";
    case PromptTemplate::Raw: return "raw";
  }
  fail("invalid prompt template");
}

std::string prompt_fill(const std::string& token, PromptTemplate t) {
  if (token.empty()) fail("prompt fill: empty label token");
  switch (t) {
    case PromptTemplate::Prefix: return token + ", a video of action";
    case PromptTemplate::Cloze: return "this is " + token + ", a video of action";
    case PromptTemplate::Suffix: return "human action of " + token;
    case PromptTemplate::Raw: return token;
    case PromptTemplate::Ensemble:
      fail("prompt fill: Ensemble expands to three sentences, use prompt_sentences");
  }
  fail("invalid prompt template");
}

std::vector<std::string> prompt_sentences(const std::string& token,
                                          PromptTemplate t) {
  if (t == PromptTemplate::Ensemble)
    return {prompt_fill(token, PromptTemplate::Prefix),
            prompt_fill(token, PromptTemplate::Cloze),
            prompt_fill(token, PromptTemplate::Suffix)};
  return {prompt_fill(token, t)};
}

Vector StubEncoder::encode_sentence(const std::string& sentence) const {
  if (dimension < 1) fail("stub encoder: dimension must be >= 1");
  Vector v = Vector::Zero(dimension);

  // FNV-1a with the seed folded into the offset basis
  auto hash_token = [this](const std::string& tok) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
    for (unsigned char c : tok) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return mix64(h);
  };

  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    const std::uint64_t h = hash_token(current);
    const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension));
    const double sign = (h >> 63) != 0u ? 1.0 : -1.0;
    v(bucket) += sign;
    current.clear();
  };
  for (unsigned char c : sentence) {
    if (std::isalnum(c))
      current.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();

  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

EmbeddingTable EmbeddingTable::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open embedding table: " + path);
  nlohmann::json j;
  in >> j;
  EmbeddingTable table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto values = it.value().get<std::vector<double>>();
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v(i) = values[static_cast<std::size_t>(i)];
    table.vectors.emplace(it.key(), std::move(v));
  }
  return table;
}

const Vector& EmbeddingTable::lookup(const std::string& token) const {
  auto it = vectors.find(token);
  if (it == vectors.end())
    fail("embedding table has no entry for label \"" + token + "\"");
  return it->second;
}

EncoderBackend EncoderBackend::make_stub(int dimension, std::uint64_t seed) {
  EncoderBackend b;
  b.kind = Kind::Stub;
  b.stub = {dimension, seed};
  return b;
}

EncoderBackend EncoderBackend::make_table(EmbeddingTable table) {
  EncoderBackend b;
  b.kind = Kind::Table;
  b.table = std::move(table);
  return b;
}

int EncoderBackend::dimension() const {
  if (kind == Kind::Stub) return stub.dimension;
  if (table.vectors.empty()) fail("embedding table is empty");
  return static_cast<int>(table.vectors.begin()->second.size());
}

Vector encode_label(const std::string& token, PromptTemplate t,
                    const EncoderBackend& backend) {
  if (token.empty()) fail("encode: empty label token");
  if (backend.kind == EncoderBackend::Kind::Table)
    return backend.table.lookup(token);

  const auto sentences = prompt_sentences(token, t);
  Vector sum = Vector::Zero(backend.stub.dimension);
  for (const auto& s : sentences) sum += backend.stub.encode_sentence(s);
  sum /= static_cast<double>(sentences.size());
  const double norm = sum.norm();
  if (norm > 0.0) sum /= norm;
  return sum;
}

Matrix embed_semantic(const FrameSequence& seq, const LabelMap& map,
                      PromptTemplate t, const EncoderBackend& backend) {
  const int dim = backend.dimension();
  Matrix rows(seq.frames(), dim);
  std::map<int, Vector> cache;
  for (int i = 0; i < seq.frames(); ++i) {
    const int label = seq.labels[static_cast<std::size_t>(i)];
    auto it = cache.find(label);
    if (it == cache.end()) {
      Vector v = encode_label(map.token(label), t, backend);
      if (v.size() != dim) fail("embedding dimension mismatch for label \"" + map.token(label) + "\"");
      it = cache.emplace(label, std::move(v)).first;
    }
    rows.row(i) = it->second.transpose();
  }
  return rows;
}

Matrix concat_columns(const std::vector<const Matrix*>& blocks) {
  if (blocks.empty()) fail("fuse: no feature blocks");
  const Eigen::Index rows = blocks.front()->rows();
  Eigen::Index cols = 0;
  for (const Matrix* b : blocks) {
    if (b->rows() != rows)
      fail("fuse: feature blocks disagree on row count (" +
           std::to_string(b->rows()) + " vs " + std::to_string(rows) + ")");
    cols += b->cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Matrix* b : blocks) {
    out.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return out;
}

FeatureBundle fuse_features(Matrix visual, Matrix structural, Matrix semantic) {
  FeatureBundle bundle;
  bundle.fused = concat_columns({&visual, &structural, &semantic});
  bundle.visual = std::move(visual);
  bundle.structural = std::move(structural);
  bundle.semantic = std::move(semantic);
  return bundle;
}

}  // namespace vidgraph
