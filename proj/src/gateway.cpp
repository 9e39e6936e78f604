#include "v2t/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>

#include <httplib.h>
#include <json.hpp>

#include "v2t/errors.hpp"
#include "v2t/jsonio.hpp"
#include "v2t/rng.hpp"
#include "v2t/vecmath.hpp"

namespace v2t::gateway {

void validate(const ModelEndpoint& endpoint) {
    if (endpoint.timeout_ms <= 0) {
        throw DomainError("endpoint: timeout must be positive");
    }
    if (endpoint.retries < 0) {
        throw DomainError("endpoint: retries must be >= 0");
    }
    if (endpoint.kind == BackendKind::remote && endpoint.base_url.empty()) {
        throw DomainError("endpoint: remote backend requires a base URL");
    }
}

std::string image_digest(const std::vector<std::uint8_t>& image) {
    const std::uint64_t h = fnv1a64(
        std::string_view(reinterpret_cast<const char*>(image.data()), image.size()));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

const std::vector<std::string> kColors = {"red", "blue", "white", "black", "silver", "green"};
const std::vector<std::string> kVehicles = {"car", "truck", "bus", "van", "taxi", "motorcycle"};
const std::vector<std::string> kActions = {"waiting at", "passing through", "approaching",
                                           "stopped near", "turning at", "moving past"};
const std::vector<std::string> kLocations = {"junction", "intersection", "crosswalk",
                                             "roundabout", "street", "bridge"};
const std::vector<std::string> kConditions = {"light rain", "heavy traffic", "morning fog",
                                              "clear skies", "evening light", "wet roads"};

const std::string& pick(const std::vector<std::string>& pool, std::mt19937_64& rng) {
    return pool[rng() % pool.size()];
}

// Prompt words that say something beyond boilerplate, used to condition the
// mock caption the way a prompt would steer a real model.
std::vector<std::string> prompt_content_words(const std::string& prompt) {
    static const std::set<std::string> kStop = {
        "a", "an", "the", "in", "at", "of", "and", "on", "with", "to", "is", "are",
        "describe", "scene", "image", "picture", "photo", "please", "this"};
    std::vector<std::string> out;
    for (const std::string& w : textenc::split_words(prompt)) {
        if (!kStop.count(w)) out.push_back(w);
    }
    return out;
}

std::string mock_caption(const std::string& digest, const std::string& prompt,
                         std::uint64_t seed) {
    std::mt19937_64 rng(fnv1a64(digest + "|" + prompt + "|" + std::to_string(seed)));
    std::string caption = "a " + pick(kColors, rng) + " " + pick(kVehicles, rng) + " " +
                          pick(kActions, rng) + " the " + pick(kLocations, rng) + " under " +
                          pick(kConditions, rng);
    const std::vector<std::string> content = prompt_content_words(prompt);
    if (!content.empty()) {
        caption += ", focusing on " + content[rng() % content.size()];
        if (content.size() > 1) {
            const std::string& second = content[rng() % content.size()];
            caption += " and " + second;
        }
    }
    return caption;
}

// One shared encoder per seed; weights are immutable once built.
EmbeddingVector mock_embed(const std::string& text, std::uint64_t seed) {
    static std::mutex mu;
    static std::map<std::uint64_t, std::shared_ptr<const textenc::EncoderWeights>> cache;
    std::shared_ptr<const textenc::EncoderWeights> weights;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(seed);
        if (it == cache.end()) {
            it = cache.emplace(seed,
                               std::make_shared<const textenc::EncoderWeights>(
                                   textenc::build_encoder(seed)))
                     .first;
        }
        weights = it->second;
    }
    return textenc::encode_text(text, *weights);
}

httplib::Result post_with_retries(const ModelEndpoint& endpoint, const char* stage,
                                  const std::string& path, const std::string& body) {
    httplib::Client client(endpoint.base_url);
    const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!endpoint.bearer_token.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.bearer_token);
    }
    const int attempts = endpoint.retries + 1;
    for (int i = 0; i < attempts; ++i) {
        auto res = client.Post(path, headers, body, "application/json");
        if (res) return res;
    }
    throw TransportError(std::string(stage) + ": cannot reach " + endpoint.base_url + " after " +
                         std::to_string(attempts) + " attempt(s)");
}

nlohmann::json parse_response(const httplib::Result& res, const char* stage) {
    if (res->status < 200 || res->status >= 300) {
        std::string detail = res->body;
        const nlohmann::json err = nlohmann::json::parse(res->body, nullptr, false);
        if (err.is_object() && err.contains("error") && err["error"].is_string()) {
            detail = err["error"].get<std::string>();
        }
        throw BackendError(std::string(stage) + ": backend returned status " +
                           std::to_string(res->status) + ": " + detail);
    }
    const nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ProtocolError(std::string(stage) + ": response is not a JSON object");
    }
    return j;
}

} // namespace

CaptionRecord caption(const std::vector<std::uint8_t>& image,
                      const std::string& prompt,
                      const ModelEndpoint& endpoint) {
    validate(endpoint);
    if (image.empty()) {
        throw DomainError("caption: empty image");
    }
    const auto start = std::chrono::steady_clock::now();
    CaptionRecord rec;
    rec.image_digest = image_digest(image);
    rec.prompt = prompt;

    if (endpoint.kind == BackendKind::mock) {
        rec.backend = "mock";
        rec.caption = mock_caption(rec.image_digest, prompt, endpoint.seed);
    } else {
        rec.backend = "remote";
        nlohmann::json req;
        req["image_b64"] = base64_encode(image.data(), image.size());
        req["prompt"] = prompt;
        const auto res = post_with_retries(endpoint, "caption", "/caption", canonical_dump(req));
        const nlohmann::json j = parse_response(res, "caption");
        if (!j.contains("caption") || !j["caption"].is_string()) {
            throw ProtocolError("caption: response missing \"caption\" field");
        }
        rec.caption = j["caption"].get<std::string>();
    }
    if (rec.caption.empty()) {
        throw BackendError("caption: backend produced an empty caption");
    }
    rec.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return rec;
}

EmbeddingVector embed(const std::string& text, const ModelEndpoint& endpoint) {
    validate(endpoint);
    if (text.empty()) {
        throw DomainError("embed: empty text");
    }
    EmbeddingVector out;
    if (endpoint.kind == BackendKind::mock) {
        out = mock_embed(text, endpoint.seed);
    } else {
        nlohmann::json req;
        req["text"] = text;
        const auto res = post_with_retries(endpoint, "embed", "/embed", canonical_dump(req));
        const nlohmann::json j = parse_response(res, "embed");
        if (!j.contains("vector") || !j["vector"].is_array()) {
            throw ProtocolError("embed: response missing \"vector\" field");
        }
        for (const auto& x : j["vector"]) {
            if (!x.is_number()) {
                throw ProtocolError("embed: vector holds a non-number");
            }
            out.values.push_back(x.get<double>());
        }
        for (double x : out.values) {
            if (!std::isfinite(x)) {
                throw ProtocolError("embed: vector holds a non-finite value");
            }
        }
    }
    if (out.values.size() != endpoint.embed_dim) {
        throw ProtocolError("embed: vector length " + std::to_string(out.values.size()) +
                            " does not match configured dimension " +
                            std::to_string(endpoint.embed_dim));
    }
    const double norm = l2_norm(out.values);
    if (norm == 0.0 || !std::isfinite(norm)) {
        throw BackendError("embed: backend produced a zero or non-finite vector");
    }
    for (double& x : out.values) x /= norm;
    out.normalized = true;
    return out;
}

EmbedFn make_gateway_embedder(const ModelEndpoint& endpoint) {
    validate(endpoint);
    return [endpoint](const std::string& text) { return embed(text, endpoint); };
}

} // namespace v2t::gateway
