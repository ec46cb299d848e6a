#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vidgraph/graph.hpp"

namespace vidgraph {

enum class PromptTemplate {
  Prefix,    // "«label», a video of action"
  Cloze,     // "this is «label», a video of action"
  Suffix,    // "human action of «label»"
  Ensemble,  // all three, mean-pooled
  Raw,       // bare token, no template
};

PromptTemplate prompt_template_from_string(const std::string& name);
std::string prompt_template_to_string(PromptTemplate t);

// one sentence for a single template, or the fixed prefix/cloze/suffix
// triple for Ensemble
std::string prompt_fill(const std::string& token, PromptTemplate t);
std::vector<std::string> prompt_sentences(const std::string& token,
                                          PromptTemplate t);

/// Deterministic hashing encoder standing in for a real text encoder:
/// tokens are sign-hashed into `dimension` buckets, summed, L2-normalized.
struct StubEncoder {
  int dimension = 512;
  std::uint64_t seed = 0;

  Vector encode_sentence(const std::string& sentence) const;
};

/// Precomputed per-label-token embeddings, JSON {token: [floats]}.
struct EmbeddingTable {
  std::map<std::string, Vector> vectors;

  static EmbeddingTable from_file(const std::string& path);
  const Vector& lookup(const std::string& token) const;  // throws, names token
};

struct EncoderBackend {
  enum class Kind { Stub, Table } kind = Kind::Stub;
  StubEncoder stub;
  EmbeddingTable table;

  static EncoderBackend make_stub(int dimension, std::uint64_t seed);
  static EncoderBackend make_table(EmbeddingTable table);

  int dimension() const;
};

// per-label semantic vector: fill template(s), encode, pool for Ensemble.
// Table backends look the bare token up directly.
Vector encode_label(const std::string& token, PromptTemplate t,
                    const EncoderBackend& backend);

// node t's row is the vector of its label's token; equal labels share rows
Matrix embed_semantic(const FrameSequence& seq, const LabelMap& map,
                      PromptTemplate t, const EncoderBackend& backend);

/// Visual / structural / semantic blocks and their concatenation.
struct FeatureBundle {
  Matrix visual;
  Matrix structural;
  Matrix semantic;
  Matrix fused;
};

Matrix concat_columns(const std::vector<const Matrix*>& blocks);
FeatureBundle fuse_features(Matrix visual, Matrix structural, Matrix semantic);

}  // namespace vidgraph
