#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2t/textenc.hpp"

namespace v2t::gateway {

enum class BackendKind { mock, remote };

struct ModelEndpoint {
    BackendKind kind = BackendKind::mock;
    std::string base_url;
    int timeout_ms = 5000;
    // Additional attempts after the first; 0 means try exactly once.
    int retries = 2;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 64;
    std::string bearer_token;
};

void validate(const ModelEndpoint& endpoint);

struct CaptionRecord {
    std::string image_digest;
    std::string prompt;
    std::string caption;
    std::string backend;
    long long latency_ms = 0;
};

// Hex digest of the raw image bytes; keys all mock determinism.
std::string image_digest(const std::vector<std::uint8_t>& image);

// Remote: POST /caption {image_b64, prompt} -> {caption}.
// Mock: deterministic template fill from (digest, prompt, seed).
CaptionRecord caption(const std::vector<std::uint8_t>& image,
                      const std::string& prompt,
                      const ModelEndpoint& endpoint);

// Remote: POST /embed {text} -> {vector}. Mock: seeded toy encoder.
// Always returns a unit-norm vector.
EmbeddingVector embed(const std::string& text, const ModelEndpoint& endpoint);

// Embedder handle bound to an endpoint, for modules that take EmbedFn.
EmbedFn make_gateway_embedder(const ModelEndpoint& endpoint);

} // namespace v2t::gateway
