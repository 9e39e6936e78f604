#include "v2t/textenc.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include "v2t/errors.hpp"
#include "v2t/rng.hpp"

namespace v2t {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.size() != b.values.size()) {
        throw DomainError("cosine: dimension mismatch");
    }
    const double na = l2_norm(a.values);
    const double nb = l2_norm(b.values);
    if (na == 0.0 || nb == 0.0) {
        throw DomainError("cosine: zero-norm vector");
    }
    return dot(a.values, b.values) / (na * nb);
}

namespace textenc {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            words.push_back(current);
            current.clear();
        }
    };
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c + 32);
        const bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (alnum) {
            current.push_back(static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return words;
}

TokenSequence tokenize(const std::string& text) {
    TokenSequence seq;
    for (const std::string& w : split_words(text)) {
        seq.tokens.push_back(static_cast<std::uint32_t>(fnv1a64(w) % kVocabSize));
    }
    return seq;
}

namespace {

Mat random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double bound) {
    Mat m(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
        m.data[i] = uniform_range(rng, -bound, bound);
    }
    return m;
}

} // namespace

EncoderWeights build_encoder(std::uint64_t seed,
                             std::size_t model_dim,
                             std::size_t head_count,
                             std::size_t layer_count,
                             std::size_t ffn_dim) {
    if (model_dim == 0 || head_count == 0 || model_dim % head_count != 0) {
        throw DomainError("build_encoder: model_dim must be a positive multiple of head_count");
    }
    EncoderWeights w;
    w.model_dim = model_dim;
    w.head_count = head_count;
    w.head_dim = model_dim / head_count;
    w.ffn_dim = ffn_dim;
    w.seed = seed;

    const double bound = 1.0 / std::sqrt(static_cast<double>(model_dim));
    std::mt19937_64 rng(seed);
    w.embedding = random_matrix(rng, kVocabSize, model_dim, bound);
    for (std::size_t l = 0; l < layer_count; ++l) {
        LayerWeights lw;
        lw.wq = random_matrix(rng, model_dim, model_dim, bound);
        lw.wk = random_matrix(rng, model_dim, model_dim, bound);
        lw.wv = random_matrix(rng, model_dim, model_dim, bound);
        lw.wo = random_matrix(rng, model_dim, model_dim, bound);
        lw.w1 = random_matrix(rng, model_dim, ffn_dim, bound);
        lw.w2 = random_matrix(rng, ffn_dim, model_dim, bound);
        lw.b1.assign(ffn_dim, 0.0);
        lw.b2.assign(model_dim, 0.0);
        w.layers.push_back(std::move(lw));
    }
    return w;
}

double positional_encoding(std::size_t pos, std::size_t dim, std::size_t d) {
    if (dim >= d) {
        throw DomainError("positional_encoding: dim must be < d");
    }
    const std::size_t i = dim / 2;
    const double exponent = (2.0 * static_cast<double>(i)) / static_cast<double>(d);
    const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
    return dim % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

Mat attention(const Mat& q, const Mat& k, const Mat& v, std::size_t d_k) {
    if (q.rows != k.rows || q.rows != v.rows) {
        throw DomainError("attention: row count mismatch");
    }
    if (q.cols != d_k || k.cols != d_k) {
        throw DomainError("attention: Q and K must have d_k columns");
    }
    const std::size_t n = q.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));

    Mat out(n, v.cols);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d_k; ++c) s += q.at(i, c) * k.at(j, c);
            scores[j] = s * scale;
            if (scores[j] > max_score) max_score = scores[j];
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            scores[j] = std::exp(scores[j] - max_score);
            denom += scores[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double weight = scores[j] / denom;
            for (std::size_t c = 0; c < v.cols; ++c) {
                out.at(i, c) += weight * v.at(j, c);
            }
        }
    }
    return out;
}

std::vector<double> layer_norm(const std::vector<double>& z, double epsilon) {
    if (z.empty()) {
        throw DomainError("layer_norm: empty input");
    }
    const std::size_t n = z.size();
    double mean = 0.0;
    for (double x : z) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : z) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    const double denom = std::sqrt(var) + epsilon;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (z[i] - mean) / denom;
    return out;
}

namespace {

void normalize_rows_with_residual(Mat& z, const Mat& delta) {
    std::vector<double> row(z.cols);
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t j = 0; j < z.cols; ++j) row[j] = z.at(i, j) + delta.at(i, j);
        const std::vector<double> normed = layer_norm(row, kLayerNormEps);
        for (std::size_t j = 0; j < z.cols; ++j) z.at(i, j) = normed[j];
    }
}

} // namespace

EmbeddingVector encode_text(const std::string& text, const EncoderWeights& weights) {
    const TokenSequence seq = tokenize(text);
    if (seq.tokens.empty()) {
        throw DomainError("encode_text: text produced no tokens");
    }
    const std::size_t n = seq.tokens.size();
    const std::size_t d = weights.model_dim;

    Mat z(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            z.at(i, j) = weights.embedding.at(seq.tokens[i], j) + positional_encoding(i, j, d);
        }
    }

    for (const LayerWeights& lw : weights.layers) {
        const Mat q = matmul(z, lw.wq);
        const Mat k = matmul(z, lw.wk);
        const Mat v = matmul(z, lw.wv);

        Mat concat(n, d);
        for (std::size_t h = 0; h < weights.head_count; ++h) {
            const std::size_t col0 = h * weights.head_dim;
            const Mat head = attention(col_slice(q, col0, weights.head_dim),
                                       col_slice(k, col0, weights.head_dim),
                                       col_slice(v, col0, weights.head_dim),
                                       weights.head_dim);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < weights.head_dim; ++j) {
                    concat.at(i, col0 + j) = head.at(i, j);
                }
            }
        }
        normalize_rows_with_residual(z, matmul(concat, lw.wo));

        Mat hidden = matmul(z, lw.w1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < weights.ffn_dim; ++j) {
                const double pre = hidden.at(i, j) + lw.b1[j];
                hidden.at(i, j) = pre > 0.0 ? pre : 0.0;
            }
        }
        Mat ffn = matmul(hidden, lw.w2);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) ffn.at(i, j) += lw.b2[j];
        }
        normalize_rows_with_residual(z, ffn);
    }

    std::vector<double> pooled(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) pooled[j] += z.at(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) pooled[j] /= static_cast<double>(n);

    l2_normalize(pooled);
    EmbeddingVector out;
    out.values = std::move(pooled);
    out.normalized = true;
    return out;
}

EmbedFn make_embedder(std::uint64_t seed) {
    auto weights = std::make_shared<const EncoderWeights>(build_encoder(seed));
    return [weights](const std::string& text) { return encode_text(text, *weights); };
}

} // namespace textenc
} // namespace v2t
