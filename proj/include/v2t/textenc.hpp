#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "v2t/vecmath.hpp"

namespace v2t {

struct EmbeddingVector {
    std::vector<double> values;
    bool normalized = false;
};

// Shared embedder handle: text in, unit-norm vector out.
using EmbedFn = std::function<EmbeddingVector(const std::string&)>;

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

namespace textenc {

inline constexpr std::size_t kVocabSize = 4096;
inline constexpr double kLayerNormEps = 1e-5;

struct TokenSequence {
    std::vector<std::uint32_t> tokens;
};

struct LayerWeights {
    Mat wq, wk, wv, wo;
    Mat w1, w2;
    std::vector<double> b1, b2;
};

struct EncoderWeights {
    std::size_t model_dim = 0;
    std::size_t head_count = 0;
    std::size_t head_dim = 0;
    std::size_t ffn_dim = 0;
    std::uint64_t seed = 0;
    Mat embedding;
    std::vector<LayerWeights> layers;
};

// Lowercases and splits on any non-alphanumeric byte.
std::vector<std::string> split_words(const std::string& text);

// split_words, then each token hashed into the fixed vocabulary.
TokenSequence tokenize(const std::string& text);

EncoderWeights build_encoder(std::uint64_t seed,
                             std::size_t model_dim = 64,
                             std::size_t head_count = 4,
                             std::size_t layer_count = 2,
                             std::size_t ffn_dim = 128);

double positional_encoding(std::size_t pos, std::size_t dim, std::size_t d);

Mat attention(const Mat& q, const Mat& k, const Mat& v, std::size_t d_k);

std::vector<double> layer_norm(const std::vector<double>& z, double epsilon);

EmbeddingVector encode_text(const std::string& text, const EncoderWeights& weights);

// Builds seed-keyed weights once and shares them across calls.
EmbedFn make_embedder(std::uint64_t seed);

} // namespace textenc
} // namespace v2t
